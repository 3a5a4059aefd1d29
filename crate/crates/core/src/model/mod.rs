//! The three-block enhancement network.
//!
//! Canonical wiring, for a `feature_maps = F` configuration:
//!
//! ```text
//! head.conv      conv(3 → F) + ReLU
//! blockK.conv1   conv(F → F) + dropout + ReLU
//! blockK.conv2   conv(F → F) + dropout + ReLU
//!                concat(·, raw image)            → F + 3 channels
//! blockK.conv3   conv(F+3 → F) + ReLU
//! final.conv     conv(F → 3)
//! ```
//!
//! All convolutions are stride 1 with zero "same" padding, so the network is
//! fully convolutional and preserves spatial size.

mod network;
mod train;
pub mod weights;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ConvParams, Real, Shape, Tensor};
use weights::TensorRecord;

pub use network::{backward, forward, forward_with_tape, loss_and_gradients, ForwardTape, Gradients, Mode};
pub use train::{train_step, TrainState};

/// Parameter count reported for the reference implementation.
pub const REFERENCE_PARAMETER_COUNT: usize = 219_840;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_channels: usize,
    pub feature_maps: usize,
    pub num_blocks: usize,
    pub kernel_size: usize,
    pub dropout_rate: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            input_channels: 3,
            feature_maps: 64,
            num_blocks: 3,
            kernel_size: 3,
            dropout_rate: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_blocks == 0 || self.feature_maps == 0 || self.input_channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "num_blocks, feature_maps and input_channels must be ≥ 1: {self:?}"
            )));
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "kernel_size must be odd, got {}",
                self.kernel_size
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// The canonical layer list in forward order.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let (c, f, k) = (self.input_channels, self.feature_maps, self.kernel_size);
        let spec = |name: String, c_in, c_out| LayerSpec {
            name,
            c_in,
            c_out,
            kernel: k,
        };
        let mut layers = vec![spec("head.conv".into(), c, f)];
        for b in 1..=self.num_blocks {
            layers.push(spec(format!("block{b}.conv1"), f, f));
            layers.push(spec(format!("block{b}.conv2"), f, f));
            layers.push(spec(format!("block{b}.conv3"), f + c, f));
        }
        layers.push(spec("final.conv".into(), f, c));
        layers
    }
}

/// Named convolution layers in deterministic (forward) order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterStore<T = f32> {
    layers: Vec<(String, ConvParams<T>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCount {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub weights: usize,
    pub biases: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCount {
    pub total: usize,
    pub per_layer: Vec<LayerCount>,
}

impl ParameterCount {
    /// Signed difference from [`REFERENCE_PARAMETER_COUNT`].
    pub fn delta_vs_reference(&self) -> i64 {
        self.total as i64 - REFERENCE_PARAMETER_COUNT as i64
    }
}

/// Kaiming-uniform (fan-in, ReLU gain) weights and zero biases, drawn in
/// layer order from one seeded stream.
pub fn build_canonical(config: &NetworkConfig, init_seed: u64) -> Result<ParameterStore<f32>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
    let layers = config
        .layer_specs()
        .into_iter()
        .map(|l| {
            let fan_in = (l.c_in * l.kernel * l.kernel) as f64;
            let bound = (6.0 / fan_in).sqrt();
            let shape = Shape::new(l.c_out, l.c_in, l.kernel, l.kernel);
            let data = (0..shape.len())
                .map(|_| rng.random_range(-bound..bound) as f32)
                .collect();
            let weight = Tensor::from_vec(shape, data).expect("shape/data agree");
            (l.name, ConvParams::new(weight, vec![0.0; l.c_out]).expect("odd kernel"))
        })
        .collect();
    Ok(ParameterStore { layers })
}

impl<T: Real> ParameterStore<T> {
    pub fn from_layers(layers: Vec<(String, ConvParams<T>)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (name, _) in &layers {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        Ok(ParameterStore { layers })
    }

    pub fn layers(&self) -> &[(String, ConvParams<T>)] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [(String, ConvParams<T>)] {
        &mut self.layers
    }

    pub fn get(&self, name: &str) -> Option<&ConvParams<T>> {
        self.layers.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut ConvParams<T>> {
        self.layers.iter_mut().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn cast<U: Real>(&self) -> ParameterStore<U> {
        ParameterStore {
            layers: self
                .layers
                .iter()
                .map(|(n, p)| (n.clone(), p.cast()))
                .collect(),
        }
    }

    /// Checks that every canonical layer is present, in order, with the
    /// expected shape.
    pub fn check_config(&self, config: &NetworkConfig) -> Result<()> {
        let specs = config.layer_specs();
        if specs.len() != self.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "configuration has {} layers, parameter store has {}",
                specs.len(),
                self.layers.len()
            )));
        }
        for (spec, (name, p)) in specs.iter().zip(&self.layers) {
            if &spec.name != name {
                return Err(Error::MissingTensor(spec.name.clone()));
            }
            let expected = Shape::new(spec.c_out, spec.c_in, spec.kernel, spec.kernel);
            p.weight.expect_shape("check_config", expected)?;
        }
        Ok(())
    }

    /// Recovers the configuration a canonical store was built from, using
    /// `dropout_rate` for the one setting weights cannot carry.
    pub fn infer_config(&self, dropout_rate: f64) -> Result<NetworkConfig> {
        let head = self
            .get("head.conv")
            .ok_or_else(|| Error::MissingTensor("head.conv".into()))?;
        let config = NetworkConfig {
            input_channels: head.c_in(),
            feature_maps: head.c_out(),
            num_blocks: (self.layers.len().saturating_sub(2)) / 3,
            kernel_size: head.kernel(),
            dropout_rate,
        };
        config.validate()?;
        self.check_config(&config)?;
        Ok(config)
    }

    pub fn count_parameters(&self) -> ParameterCount {
        let per_layer: Vec<LayerCount> = self
            .layers
            .iter()
            .map(|(name, p)| {
                let (c_in, c_out, k) = (p.c_in(), p.c_out(), p.kernel());
                let weights = c_in * c_out * k * k;
                LayerCount {
                    name: name.clone(),
                    c_in,
                    c_out,
                    kernel: k,
                    weights,
                    biases: c_out,
                    total: weights + c_out,
                }
            })
            .collect();
        ParameterCount {
            total: per_layer.iter().map(|l| l.total).sum(),
            per_layer,
        }
    }

    /// Weight tensors are stored under the layer name, biases as
    /// `<layer>.bias`.
    pub fn to_records(&self) -> Vec<TensorRecord> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (name, p) in &self.layers {
            out.push(TensorRecord {
                name: name.clone(),
                dims: p.weight.shape().dims().to_vec(),
                data: p.weight.data().iter().map(|x| x.as_f64() as f32).collect(),
            });
            out.push(TensorRecord {
                name: format!("{name}.bias"),
                dims: vec![p.bias.len()],
                data: p.bias.iter().map(|x| x.as_f64() as f32).collect(),
            });
        }
        out
    }

    pub fn from_records(records: Vec<TensorRecord>) -> Result<Self> {
        let mut biases = std::collections::HashMap::new();
        let mut weights = Vec::new();
        for r in records {
            match r.name.strip_suffix(".bias") {
                Some(layer) if r.dims.len() == 1 => {
                    biases.insert(layer.to_owned(), r);
                }
                _ => weights.push(r),
            }
        }
        let mut layers = Vec::with_capacity(weights.len());
        for w in weights {
            let [n, c, h, ww] = <[usize; 4]>::try_from(w.dims.as_slice()).map_err(|_| {
                Error::InvalidArgument(format!(
                    "tensor {:?} has dims {:?}, expected a 4-D conv weight",
                    w.name, w.dims
                ))
            })?;
            let bias = biases
                .remove(&w.name)
                .ok_or_else(|| Error::MissingTensor(format!("{}.bias", w.name)))?;
            let weight = Tensor::from_vec(
                Shape::new(n, c, h, ww),
                w.data.into_iter().map(|x| T::of(x as f64)).collect(),
            )?;
            let bias = bias.data.into_iter().map(|x| T::of(x as f64)).collect();
            layers.push((w.name, ConvParams::new(weight, bias)?));
        }
        if let Some(orphan) = biases.into_keys().min() {
            return Err(Error::MissingTensor(orphan));
        }
        ParameterStore::from_layers(layers)
    }
}

impl ParameterStore<f32> {
    pub fn save_weights(&self) -> Result<Vec<u8>> {
        weights::write_tensors(&self.to_records())
    }

    pub fn load_weights(bytes: &[u8]) -> Result<Self> {
        Self::from_records(weights::read_tensors(bytes)?)
    }
}

/// Deterministic 64-bit mixing of a base seed with a stream index.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
