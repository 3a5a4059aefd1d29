//! Python bindings. Images cross the boundary as packed RGB8 `bytes` with
//! explicit width and height, so no array library is required on either
//! side; `numpy.frombuffer(img.to_bytes(), "u8").reshape(h, w, 3)` recovers
//! an array.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use uwnet_core::data::{self, synthetic, RgbImage};
use uwnet_core::loss::FeatureExtractorSpec;
use uwnet_core::metrics::{self, DEFAULT_PEAK};
use uwnet_core::model::{self, Mode};
use uwnet_core::tensor::AdamConfig;

fn err(e: uwnet_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "NetworkConfig", from_py_object)]
#[derive(Clone)]
struct PyNetworkConfig {
    inner: uwnet_core::NetworkConfig,
}

#[pymethods]
impl PyNetworkConfig {
    #[new]
    #[pyo3(signature = (feature_maps=64, num_blocks=3, kernel_size=3, dropout_rate=0.2, input_channels=3))]
    fn new(feature_maps: usize, num_blocks: usize, kernel_size: usize, dropout_rate: f64, input_channels: usize) -> PyResult<Self> {
        let inner = uwnet_core::NetworkConfig {
            input_channels,
            feature_maps,
            num_blocks,
            kernel_size,
            dropout_rate,
        };
        inner.validate().map_err(err)?;
        Ok(PyNetworkConfig { inner })
    }

    #[getter]
    fn feature_maps(&self) -> usize {
        self.inner.feature_maps
    }

    #[getter]
    fn num_blocks(&self) -> usize {
        self.inner.num_blocks
    }

    #[getter]
    fn kernel_size(&self) -> usize {
        self.inner.kernel_size
    }

    #[getter]
    fn dropout_rate(&self) -> f64 {
        self.inner.dropout_rate
    }

    #[getter]
    fn input_channels(&self) -> usize {
        self.inner.input_channels
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "NetworkConfig(feature_maps={}, num_blocks={}, kernel_size={}, dropout_rate={}, input_channels={})",
            c.feature_maps, c.num_blocks, c.kernel_size, c.dropout_rate, c.input_channels
        )
    }
}

#[pyclass(name = "Image", from_py_object)]
#[derive(Clone)]
struct PyImage {
    inner: RgbImage,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, data: &[u8]) -> PyResult<Self> {
        Ok(PyImage {
            inner: RgbImage::new(width, height, data.to_vec()).map_err(err)?,
        })
    }

    /// PPM, PNG or JPEG, chosen by content.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyImage {
            inner: data::read_image(&path).map_err(err)?,
        })
    }

    /// Format chosen by extension.
    fn write(&self, path: PathBuf) -> PyResult<()> {
        data::write_image(&path, &self.inner).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.pixels())
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

/// A `(degraded, clean)` pair from the built-in synthetic generator.
#[pyfunction]
#[pyo3(signature = (width, height, seed=0))]
fn synthetic_pair(width: usize, height: usize, seed: u64) -> (PyImage, PyImage) {
    let (raw, reference) = synthetic::underwater_pair(width, height, seed);
    (PyImage { inner: raw }, PyImage { inner: reference })
}

#[pyclass(name = "Network")]
struct PyNetwork {
    config: uwnet_core::NetworkConfig,
    params: uwnet_core::ParameterStore,
}

impl PyNetwork {
    fn from_store(params: uwnet_core::ParameterStore, dropout_rate: f64) -> PyResult<Self> {
        let config = params.infer_config(dropout_rate).map_err(err)?;
        Ok(PyNetwork { config, params })
    }
}

#[pymethods]
impl PyNetwork {
    /// Fresh Kaiming-uniform initialisation.
    #[new]
    #[pyo3(signature = (config=None, seed=0))]
    fn new(config: Option<PyNetworkConfig>, seed: u64) -> PyResult<Self> {
        let config = config.map(|c| c.inner).unwrap_or_default();
        let params = model::build_canonical(&config, seed).map_err(err)?;
        Ok(PyNetwork { config, params })
    }

    #[staticmethod]
    #[pyo3(signature = (path, dropout_rate=0.2))]
    fn load(path: PathBuf, dropout_rate: f64) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
        Self::from_store(uwnet_core::ParameterStore::load_weights(&bytes).map_err(err)?, dropout_rate)
    }

    #[staticmethod]
    #[pyo3(signature = (data, dropout_rate=0.2))]
    fn from_bytes(data: &[u8], dropout_rate: f64) -> PyResult<Self> {
        Self::from_store(uwnet_core::ParameterStore::load_weights(data).map_err(err)?, dropout_rate)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &self.params.save_weights().map_err(err)?))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let bytes = self.params.save_weights().map_err(err)?;
        std::fs::write(&path, bytes).map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))
    }

    #[getter]
    fn config(&self) -> PyNetworkConfig {
        PyNetworkConfig {
            inner: self.config.clone(),
        }
    }

    fn count_parameters(&self) -> usize {
        self.params.count_parameters().total
    }

    /// `[(layer, c_in, c_out, kernel, total)]` in forward order.
    fn parameter_breakdown(&self) -> Vec<(String, usize, usize, usize, usize)> {
        self.params
            .count_parameters()
            .per_layer
            .into_iter()
            .map(|l| (l.name, l.c_in, l.c_out, l.kernel, l.total))
            .collect()
    }

    /// Inference-mode forward pass, clamped and quantised to 8 bits.
    fn enhance(&self, py: Python<'_>, image: &PyImage) -> PyResult<PyImage> {
        let x = image.inner.to_tensor::<f32>();
        let y = py.detach(|| model::forward(&self.config, &self.params, &x, Mode::Infer, 0)).map_err(err)?;
        Ok(PyImage {
            inner: RgbImage::from_tensor(&y, 0).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Network({} parameters)", self.params.count_parameters().total)
    }
}

#[pyclass(name = "FeatureExtractor", from_py_object)]
#[derive(Clone)]
struct PyFeatureExtractor {
    inner: uwnet_core::FeatureExtractor,
}

#[pymethods]
impl PyFeatureExtractor {
    /// Features are the image itself, so the perceptual term equals the MSE.
    #[staticmethod]
    fn identity() -> Self {
        PyFeatureExtractor {
            inner: uwnet_core::FeatureExtractor::identity(),
        }
    }

    /// Manifest text file plus its sibling weight file.
    #[staticmethod]
    fn load(manifest: PathBuf) -> PyResult<Self> {
        Ok(PyFeatureExtractor {
            inner: uwnet_core::FeatureExtractor::load(&manifest).map_err(err)?,
        })
    }

    /// Seeded random weights for a manifest given as text.
    #[staticmethod]
    #[pyo3(signature = (manifest, seed=0))]
    fn random(manifest: &str, seed: u64) -> PyResult<Self> {
        let spec = FeatureExtractorSpec::parse(manifest).map_err(err)?;
        Ok(PyFeatureExtractor {
            inner: uwnet_core::FeatureExtractor::random(spec, seed).map_err(err)?,
        })
    }
}

/// Adam training on one pair at a time; owns its own copy of the network.
#[pyclass(name = "Trainer")]
struct PyTrainer {
    state: uwnet_core::TrainState,
    extractor: uwnet_core::FeatureExtractor,
}

#[pymethods]
impl PyTrainer {
    #[new]
    #[pyo3(signature = (network, lr=2e-4, seed=0, extractor=None))]
    fn new(network: &PyNetwork, lr: f64, seed: u64, extractor: Option<PyFeatureExtractor>) -> PyResult<Self> {
        let adam = AdamConfig {
            lr,
            ..AdamConfig::default()
        };
        let state = uwnet_core::TrainState::new(network.config.clone(), network.params.clone(), adam, seed).map_err(err)?;
        Ok(PyTrainer {
            state,
            extractor: extractor.map(|e| e.inner).unwrap_or_else(uwnet_core::FeatureExtractor::identity),
        })
    }

    /// One update; returns the loss terms before the update.
    fn step<'py>(&mut self, py: Python<'py>, raw: &PyImage, reference: &PyImage) -> PyResult<Bound<'py, PyDict>> {
        let (x, y) = (raw.inner.to_tensor::<f32>(), reference.inner.to_tensor::<f32>());
        let (state, extractor) = (&mut self.state, &self.extractor);
        let r = py.detach(|| model::train_step(state, &x, &y, extractor)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("l_mse", r.l_mse)?;
        d.set_item("l_vgg", r.l_vgg)?;
        d.set_item("l_total", r.l_total)?;
        Ok(d)
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.state.step
    }

    /// Snapshot of the current weights.
    fn network(&self) -> PyNetwork {
        PyNetwork {
            config: self.state.config.clone(),
            params: self.state.params.clone(),
        }
    }
}

/// PSNR in dB at peak 255; `inf` for identical images.
#[pyfunction]
#[pyo3(signature = (estimate, reference, peak=DEFAULT_PEAK))]
fn psnr(estimate: &PyImage, reference: &PyImage, peak: f64) -> PyResult<f64> {
    Ok(metrics::psnr(&estimate.inner, &reference.inner, peak).map_err(err)?.db())
}

#[pyfunction]
fn ssim(estimate: &PyImage, reference: &PyImage) -> PyResult<f64> {
    metrics::ssim(&estimate.inner, &reference.inner).map_err(err)
}

/// `{"uicm", "uism", "uiconm", "uiqm"}`.
#[pyfunction]
fn uiqm<'py>(py: Python<'py>, image: &PyImage) -> PyResult<Bound<'py, PyDict>> {
    let s = metrics::uiqm(&image.inner, &metrics::UiqmConfig::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("uicm", s.uicm)?;
    d.set_item("uism", s.uism)?;
    d.set_item("uiconm", s.uiconm)?;
    d.set_item("uiqm", s.uiqm)?;
    Ok(d)
}

/// `(ratio, ratio - 1)` for parameter counts.
#[pyfunction]
fn compression_rate(alpha_original: u64, alpha_compressed: u64) -> PyResult<(f64, f64)> {
    let r = metrics::compression_rate(alpha_original, alpha_compressed).map_err(err)?;
    Ok((r.ratio, r.relative_gain))
}

/// `(ratio, ratio - 1)` for per-image latencies.
#[pyfunction]
fn speed_up(beta_original: f64, beta_compressed: f64) -> PyResult<(f64, f64)> {
    let r = metrics::speed_up(beta_original, beta_compressed).map_err(err)?;
    Ok((r.ratio, r.relative_gain))
}

#[pymodule]
fn uwnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetworkConfig>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyFeatureExtractor>()?;
    m.add_class::<PyTrainer>()?;
    m.add_function(wrap_pyfunction!(synthetic_pair, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(uiqm, m)?)?;
    m.add_function(wrap_pyfunction!(compression_rate, m)?)?;
    m.add_function(wrap_pyfunction!(speed_up, m)?)?;
    m.add("REFERENCE_PARAMETER_COUNT", model::REFERENCE_PARAMETER_COUNT)?;
    Ok(())
}
