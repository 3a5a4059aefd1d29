//! Training objective: pixel MSE plus a feature-space (perceptual) distance
//! computed through a frozen convolutional extractor.
//!
//! The extractor is described by a plain-text manifest, one layer per line:
//!
//! ```text
//! conv 3 64 3
//! relu
//! maxpool
//! ```
//!
//! Its weights use the `SUWN` container with conv layers named `f0`, `f1`, …
//! in order (biases as `f0.bias`, …). Features are tapped at the output of
//! the last conv layer, after its ReLU when one follows it; later layers are
//! ignored. An empty manifest is the identity extractor.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::weights;
use crate::model::ParameterStore;
use crate::tensor::{
    conv2d_backward, conv2d_forward, maxpool2x2, maxpool2x2_backward, relu, relu_backward,
    ConvParams, Real, Shape, Tensor,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractorLayer {
    Conv { c_in: usize, c_out: usize, kernel: usize },
    Relu,
    MaxPool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureExtractorSpec {
    pub layers: Vec<ExtractorLayer>,
}

impl FeatureExtractorSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut layers = Vec::new();
        let mut channels: Option<usize> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Manifest { line: i + 1, reason };
            let parts: Vec<&str> = line.split_whitespace().collect();
            let layer = match parts.as_slice() {
                ["relu"] => ExtractorLayer::Relu,
                ["maxpool"] => ExtractorLayer::MaxPool,
                ["conv", c_in, c_out, k] => {
                    let num = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|e| err(format!("bad number {s:?}: {e}")))
                    };
                    let (c_in, c_out, kernel) = (num(c_in)?, num(c_out)?, num(k)?);
                    if kernel != 3 {
                        return Err(err(format!("only 3x3 convs are supported, got {kernel}")));
                    }
                    if c_in == 0 || c_out == 0 {
                        return Err(err("channel counts must be positive".into()));
                    }
                    if let Some(prev) = channels {
                        if prev != c_in {
                            return Err(err(format!(
                                "conv expects {c_in} input channels but the previous conv produces {prev}"
                            )));
                        }
                    }
                    channels = Some(c_out);
                    ExtractorLayer::Conv { c_in, c_out, kernel }
                }
                _ => return Err(err(format!("unrecognised layer {line:?}"))),
            };
            layers.push(layer);
        }
        Ok(FeatureExtractorSpec { layers })
    }

    pub fn to_manifest(&self) -> String {
        let mut s = String::new();
        for l in &self.layers {
            match l {
                ExtractorLayer::Conv { c_in, c_out, kernel } => {
                    let _ = writeln!(s, "conv {c_in} {c_out} {kernel}");
                }
                ExtractorLayer::Relu => s.push_str("relu\n"),
                ExtractorLayer::MaxPool => s.push_str("maxpool\n"),
            }
        }
        s
    }

    /// The 16-conv / 5-pool trunk of VGG-19.
    pub fn vgg19_trunk() -> Self {
        let stages: [(usize, usize); 5] = [(64, 2), (128, 2), (256, 4), (512, 4), (512, 4)];
        let mut layers = Vec::new();
        let mut c_in = 3;
        for (c_out, n) in stages {
            for _ in 0..n {
                layers.push(ExtractorLayer::Conv { c_in, c_out, kernel: 3 });
                layers.push(ExtractorLayer::Relu);
                c_in = c_out;
            }
            layers.push(ExtractorLayer::MaxPool);
        }
        FeatureExtractorSpec { layers }
    }

    pub fn conv_layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.layers.iter().filter_map(|l| match *l {
            ExtractorLayer::Conv { c_in, c_out, kernel } => Some((c_in, c_out, kernel)),
            _ => None,
        })
    }

    /// Number of leading layers evaluated to reach the tap point.
    pub fn tap_len(&self) -> usize {
        let Some(last_conv) = self
            .layers
            .iter()
            .rposition(|l| matches!(l, ExtractorLayer::Conv { .. }))
        else {
            return 0;
        };
        match self.layers.get(last_conv + 1) {
            Some(ExtractorLayer::Relu) => last_conv + 2,
            _ => last_conv + 1,
        }
    }
}

/// A frozen feature extractor: a layer manifest plus (optionally loaded)
/// conv weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureExtractor<T = f32> {
    spec: FeatureExtractorSpec,
    weights: Option<Vec<ConvParams<T>>>,
}

struct ExtractorTape<T> {
    /// Input to each evaluated layer.
    inputs: Vec<Tensor<T>>,
}

impl<T: Real> FeatureExtractor<T> {
    /// Passes its input through unchanged; the perceptual term then equals
    /// the pixel MSE.
    pub fn identity() -> Self {
        FeatureExtractor {
            spec: FeatureExtractorSpec::default(),
            weights: Some(Vec::new()),
        }
    }

    /// A manifest whose weights have not been loaded yet.
    pub fn unloaded(spec: FeatureExtractorSpec) -> Self {
        let weights = if spec.conv_layers().next().is_none() {
            Some(Vec::new())
        } else {
            None
        };
        FeatureExtractor { spec, weights }
    }

    pub fn with_weights(spec: FeatureExtractorSpec, weights: Vec<ConvParams<T>>) -> Result<Self> {
        let convs: Vec<_> = spec.conv_layers().collect();
        if convs.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "manifest has {} conv layers, {} weight sets supplied",
                convs.len(),
                weights.len()
            )));
        }
        for (i, ((c_in, c_out, k), p)) in convs.iter().zip(&weights).enumerate() {
            if (p.c_in(), p.c_out(), p.kernel()) != (*c_in, *c_out, *k) {
                return Err(Error::InvalidArgument(format!(
                    "extractor layer f{i}: manifest says conv {c_in}->{c_out} k{k}, weights are {}->{} k{}",
                    p.c_in(),
                    p.c_out(),
                    p.kernel()
                )));
            }
        }
        Ok(FeatureExtractor {
            spec,
            weights: Some(weights),
        })
    }

    /// Kaiming-uniform random weights from `seed`; useful as a stand-in
    /// when pretrained weights are unavailable and in tests.
    pub fn random(spec: FeatureExtractorSpec, seed: u64) -> Result<Self> {
        let weights = spec
            .conv_layers()
            .enumerate()
            .map(|(i, (c_in, c_out, k))| {
                let bound = (6.0 / (c_in * k * k) as f64).sqrt();
                let weight = Tensor::random_uniform(
                    Shape::new(c_out, c_in, k, k),
                    -bound,
                    bound,
                    crate::model::mix_seed(seed, i as u64),
                );
                ConvParams::new(weight, vec![T::zero(); c_out])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_weights(spec, weights)
    }

    pub fn spec(&self) -> &FeatureExtractorSpec {
        &self.spec
    }

    pub fn weights(&self) -> Option<&[ConvParams<T>]> {
        self.weights.as_deref()
    }

    pub fn is_identity(&self) -> bool {
        self.spec.tap_len() == 0
    }

    pub fn cast<U: Real>(&self) -> FeatureExtractor<U> {
        FeatureExtractor {
            spec: self.spec.clone(),
            weights: self
                .weights
                .as_ref()
                .map(|ws| ws.iter().map(|w| w.cast()).collect()),
        }
    }

    fn loaded(&self) -> Result<&[ConvParams<T>]> {
        self.weights.as_deref().ok_or_else(|| {
            Error::ExtractorWeightsMissing(format!(
                "{} conv layers declared",
                self.spec.conv_layers().count()
            ))
        })
    }

    fn run(&self, input: &Tensor<T>, keep_tape: bool) -> Result<(Tensor<T>, ExtractorTape<T>)> {
        let weights = self.loaded()?;
        let mut tape = ExtractorTape { inputs: Vec::new() };
        let mut x = input.clone();
        let mut conv_i = 0;
        for layer in &self.spec.layers[..self.spec.tap_len()] {
            let next = match layer {
                ExtractorLayer::Conv { .. } => {
                    conv_i += 1;
                    conv2d_forward(&x, &weights[conv_i - 1])?
                }
                ExtractorLayer::Relu => relu(&x),
                ExtractorLayer::MaxPool => maxpool2x2(&x),
            };
            if keep_tape {
                tape.inputs.push(std::mem::replace(&mut x, next));
            } else {
                x = next;
            }
        }
        Ok((x, tape))
    }

    pub fn features(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        self.run(input, false).map(|(f, _)| f)
    }

    fn backward(&self, tape: &ExtractorTape<T>, grad_features: Tensor<T>) -> Result<Tensor<T>> {
        let weights = self.loaded()?;
        let mut g = grad_features;
        let mut conv_i = weights.len();
        let n = self.spec.tap_len();
        conv_i -= self.spec.layers[n..]
            .iter()
            .filter(|l| matches!(l, ExtractorLayer::Conv { .. }))
            .count();
        for (layer, input) in self.spec.layers[..n].iter().zip(&tape.inputs).rev() {
            g = match layer {
                ExtractorLayer::Conv { .. } => {
                    conv_i -= 1;
                    conv2d_backward(input, &weights[conv_i], &g)?.input
                }
                ExtractorLayer::Relu => relu_backward(input, &g)?,
                ExtractorLayer::MaxPool => maxpool2x2_backward(input, &g)?,
            };
        }
        Ok(g)
    }
}

impl FeatureExtractor<f32> {
    pub fn to_weights_bytes(&self) -> Result<Vec<u8>> {
        let layers = self
            .loaded()?
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("f{i}"), p.clone()))
            .collect();
        weights::write_tensors(&ParameterStore::from_layers(layers)?.to_records())
    }

    pub fn from_weights_bytes(spec: FeatureExtractorSpec, bytes: &[u8]) -> Result<Self> {
        let store = ParameterStore::<f32>::from_records(weights::read_tensors(bytes)?)?;
        let n = spec.conv_layers().count();
        let weights = (0..n)
            .map(|i| {
                let name = format!("f{i}");
                store
                    .get(&name)
                    .cloned()
                    .ok_or(Error::MissingTensor(name))
            })
            .collect::<Result<Vec<_>>>()?;
        if store.len() != n {
            return Err(Error::InvalidArgument(format!(
                "extractor weights hold {} layers, manifest declares {n}",
                store.len()
            )));
        }
        Self::with_weights(spec, weights)
    }

    /// Path of the weights file that accompanies a manifest: same stem,
    /// `.suwn` extension.
    pub fn weights_path_for(manifest: &Path) -> PathBuf {
        manifest.with_extension("suwn")
    }

    /// Reads a manifest and its companion weights file.
    pub fn load(manifest: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let spec = FeatureExtractorSpec::parse(&text)?;
        if spec.conv_layers().next().is_none() {
            return Ok(Self::unloaded(spec));
        }
        let wpath = Self::weights_path_for(manifest);
        match std::fs::read(&wpath) {
            Ok(bytes) => Self::from_weights_bytes(spec, &bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(Error::ExtractorWeightsMissing(wpath.display().to_string()))
            }
            Err(e) => Err(Error::io(wpath, e)),
        }
    }
}

/// The three loss scalars for one batch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_mse: f64,
    pub l_vgg: f64,
    pub l_total: f64,
}

impl LossReport {
    pub fn new(l_mse: f64, l_vgg: f64) -> Self {
        LossReport {
            l_mse,
            l_vgg,
            l_total: l_mse + l_vgg,
        }
    }
}

fn expect_same<T: Real>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            expected: b.shape(),
            actual: a.shape(),
        });
    }
    Ok(())
}

fn mean_sq_diff<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let s: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum();
    s / a.len() as f64
}

/// `∂/∂a mean((a - b)²) = 2(a - b)/N`.
fn mean_sq_diff_grad<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let scale = T::of(2.0 / a.len().max(1) as f64);
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| scale * (x - y))
        .collect();
    Tensor::from_vec(a.shape(), data).expect("same shape")
}

/// `(1/N)·Σ(estimate - reference)²` over every element.
pub fn mse_loss<T: Real>(estimate: &Tensor<T>, reference: &Tensor<T>) -> Result<f64> {
    expect_same("mse_loss", estimate, reference)?;
    Ok(mean_sq_diff(estimate, reference))
}

pub fn mse_loss_with_grad<T: Real>(
    estimate: &Tensor<T>,
    reference: &Tensor<T>,
) -> Result<(f64, Tensor<T>)> {
    expect_same("mse_loss", estimate, reference)?;
    Ok((
        mean_sq_diff(estimate, reference),
        mean_sq_diff_grad(estimate, reference),
    ))
}

/// Mean squared distance between extractor features of the two images.
pub fn perceptual_loss<T: Real>(
    estimate: &Tensor<T>,
    reference: &Tensor<T>,
    extractor: &FeatureExtractor<T>,
) -> Result<f64> {
    expect_same("perceptual_loss", estimate, reference)?;
    let fe = extractor.features(estimate)?;
    let fr = extractor.features(reference)?;
    Ok(mean_sq_diff(&fe, &fr))
}

pub fn perceptual_loss_with_grad<T: Real>(
    estimate: &Tensor<T>,
    reference: &Tensor<T>,
    extractor: &FeatureExtractor<T>,
) -> Result<(f64, Tensor<T>)> {
    expect_same("perceptual_loss", estimate, reference)?;
    let (fe, tape) = extractor.run(estimate, true)?;
    let fr = extractor.features(reference)?;
    let loss = mean_sq_diff(&fe, &fr);
    let grad = extractor.backward(&tape, mean_sq_diff_grad(&fe, &fr))?;
    Ok((loss, grad))
}

/// `l_total = l_mse + l_vgg`, unweighted.
pub fn total_loss<T: Real>(
    estimate: &Tensor<T>,
    reference: &Tensor<T>,
    extractor: &FeatureExtractor<T>,
) -> Result<LossReport> {
    Ok(LossReport::new(
        mse_loss(estimate, reference)?,
        perceptual_loss(estimate, reference, extractor)?,
    ))
}

/// Loss report and its gradient with respect to `estimate`.
pub fn total_loss_with_grad<T: Real>(
    estimate: &Tensor<T>,
    reference: &Tensor<T>,
    extractor: &FeatureExtractor<T>,
) -> Result<(LossReport, Tensor<T>)> {
    let (l_mse, mut grad) = mse_loss_with_grad(estimate, reference)?;
    let (l_vgg, g_vgg) = perceptual_loss_with_grad(estimate, reference, extractor)?;
    grad.add_assign(&g_vgg)?;
    Ok((LossReport::new(l_mse, l_vgg), grad))
}
