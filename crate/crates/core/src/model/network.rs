use super::{mix_seed, NetworkConfig, ParameterStore};
use crate::error::{Error, Result};
use crate::loss::{self, FeatureExtractor, LossReport};
use crate::tensor::{
    concat_channels, conv2d_backward, conv2d_backward_params, conv2d_forward, dropout,
    dropout_backward, relu, relu_backward, split_channels, ConvParams, DropoutMask, Real, Tensor,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

struct BlockTape<T> {
    a1: Tensor<T>,
    m1: DropoutMask,
    a2: Tensor<T>,
    m2: DropoutMask,
    cat: Tensor<T>,
    a3: Tensor<T>,
}

/// Activations and dropout masks recorded by [`forward_with_tape`].
pub struct ForwardTape<T> {
    image: Tensor<T>,
    head: Tensor<T>,
    blocks: Vec<BlockTape<T>>,
}

impl<T: Real> ForwardTape<T> {
    fn block_input(&self, b: usize) -> &Tensor<T> {
        if b == 0 {
            &self.head
        } else {
            &self.blocks[b - 1].a3
        }
    }
}

/// Per-layer gradients, aligned with the parameter store's layer order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<ConvParams<T>>,
}

fn layer_index(b: usize, j: usize) -> usize {
    1 + 3 * b + j
}

fn checked<'a, T: Real>(
    config: &NetworkConfig,
    params: &'a ParameterStore<T>,
    image: &Tensor<T>,
) -> Result<&'a [(String, ConvParams<T>)]> {
    params.check_config(config)?;
    let s = image.shape();
    if s.c != config.input_channels {
        return Err(Error::ChannelMismatch {
            op: "forward",
            expected: config.input_channels,
            actual: s.c,
        });
    }
    if s.h < config.kernel_size || s.w < config.kernel_size {
        return Err(Error::InvalidArgument(format!(
            "image {}x{} is smaller than the {}x{} kernel",
            s.h, s.w, config.kernel_size, config.kernel_size
        )));
    }
    Ok(params.layers())
}

pub fn forward_with_tape<T: Real>(
    config: &NetworkConfig,
    params: &ParameterStore<T>,
    image: &Tensor<T>,
    mode: Mode,
    seed: u64,
) -> Result<(Tensor<T>, ForwardTape<T>)> {
    let layers = checked(config, params, image)?;
    let training = mode == Mode::Train;
    let rate = config.dropout_rate;

    let head = relu(&conv2d_forward(image, &layers[0].1)?);
    let mut blocks: Vec<BlockTape<T>> = Vec::with_capacity(config.num_blocks);
    for b in 0..config.num_blocks {
        let x = blocks.last().map_or(&head, |t| &t.a3);
        let conv = |j: usize, input: &Tensor<T>| conv2d_forward(input, &layers[layer_index(b, j)].1);

        let (d1, m1) = dropout(&conv(0, x)?, rate, training, mix_seed(seed, 2 * b as u64))?;
        let a1 = relu(&d1);
        let (d2, m2) = dropout(&conv(1, &a1)?, rate, training, mix_seed(seed, 2 * b as u64 + 1))?;
        let a2 = relu(&d2);
        let cat = concat_channels(&a2, image)?;
        let a3 = relu(&conv(2, &cat)?);
        blocks.push(BlockTape { a1, m1, a2, m2, cat, a3 });
    }
    let last = blocks.last().map_or(&head, |t| &t.a3);
    let out = conv2d_forward(last, &layers[layers.len() - 1].1)?;
    Ok((
        out,
        ForwardTape {
            image: image.clone(),
            head,
            blocks,
        },
    ))
}

/// Enhanced image, same shape as the input. No clamping is applied here.
pub fn forward<T: Real>(
    config: &NetworkConfig,
    params: &ParameterStore<T>,
    image: &Tensor<T>,
    mode: Mode,
    seed: u64,
) -> Result<Tensor<T>> {
    forward_with_tape(config, params, image, mode, seed).map(|(out, _)| out)
}

pub fn backward<T: Real>(
    config: &NetworkConfig,
    params: &ParameterStore<T>,
    tape: &ForwardTape<T>,
    grad_out: &Tensor<T>,
) -> Result<Gradients<T>> {
    let layers = checked(config, params, &tape.image)?;
    let mut grads: Vec<Option<ConvParams<T>>> = vec![None; layers.len()];
    let mut store = |i: usize, w: Tensor<T>, b: Vec<T>| grads[i] = Some(ConvParams { weight: w, bias: b });
    let f = config.feature_maps;

    let last_idx = layers.len() - 1;
    let last_in = tape.block_input(config.num_blocks);
    let g = conv2d_backward(last_in, &layers[last_idx].1, grad_out)?;
    store(last_idx, g.weight, g.bias);
    let mut grad = g.input;

    for b in (0..config.num_blocks).rev() {
        let t = &tape.blocks[b];
        let p = |j: usize| &layers[layer_index(b, j)].1;

        let g3 = conv2d_backward(&t.cat, p(2), &relu_backward(&t.a3, &grad)?)?;
        store(layer_index(b, 2), g3.weight, g3.bias);
        let (g_a2, _) = split_channels(&g3.input, f)?;

        let g_c2 = dropout_backward(&t.m2, &relu_backward(&t.a2, &g_a2)?)?;
        let g2 = conv2d_backward(&t.a1, p(1), &g_c2)?;
        store(layer_index(b, 1), g2.weight, g2.bias);

        let g_c1 = dropout_backward(&t.m1, &relu_backward(&t.a1, &g2.input)?)?;
        let g1 = conv2d_backward(tape.block_input(b), p(0), &g_c1)?;
        store(layer_index(b, 0), g1.weight, g1.bias);
        grad = g1.input;
    }

    let g_head = relu_backward(&tape.head, &grad)?;
    let (w, bias) = conv2d_backward_params(&tape.image, &layers[0].1, &g_head)?;
    store(0, w, bias);

    Ok(Gradients {
        layers: grads.into_iter().map(|g| g.expect("every layer visited")).collect(),
    })
}

/// Forward, total loss and backward for one batch.
pub fn loss_and_gradients<T: Real>(
    config: &NetworkConfig,
    params: &ParameterStore<T>,
    raw: &Tensor<T>,
    reference: &Tensor<T>,
    extractor: &FeatureExtractor<T>,
    mode: Mode,
    seed: u64,
) -> Result<(LossReport, Gradients<T>)> {
    if raw.shape() != reference.shape() {
        return Err(Error::ShapeMismatch {
            op: "loss_and_gradients",
            expected: raw.shape(),
            actual: reference.shape(),
        });
    }
    let (out, tape) = forward_with_tape(config, params, raw, mode, seed)?;
    let (report, grad) = loss::total_loss_with_grad(&out, reference, extractor)?;
    let grads = backward(config, params, &tape, &grad)?;
    Ok((report, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_canonical;
    use crate::tensor::Shape;

    fn small() -> NetworkConfig {
        NetworkConfig {
            feature_maps: 4,
            num_blocks: 2,
            ..Default::default()
        }
    }

    #[test]
    fn full_size_shape_preserved() {
        let cfg = NetworkConfig::default();
        let params = build_canonical(&cfg, 0).unwrap();
        let img = Tensor::<f32>::random_uniform(Shape::new(1, 3, 256, 256), 0.0, 1.0, 1);
        let out = forward(&cfg, &params, &img, Mode::Infer, 0).unwrap();
        assert_eq!(out.shape(), img.shape());
        assert!(out.is_finite());
    }

    #[test]
    fn fully_convolutional() {
        let cfg = NetworkConfig::default();
        let params = build_canonical(&cfg, 0).unwrap();
        for (h, w) in [(32, 32), (17, 40), (3, 3)] {
            let img = Tensor::<f32>::random_uniform(Shape::new(2, 3, h, w), 0.0, 1.0, 1);
            let out = forward(&cfg, &params, &img, Mode::Train, 9).unwrap();
            assert_eq!(out.shape(), img.shape());
        }
    }

    #[test]
    fn inference_is_deterministic() {
        let cfg = small();
        let params = build_canonical(&cfg, 4).unwrap();
        let img = Tensor::<f32>::random_uniform(Shape::new(1, 3, 12, 12), 0.0, 1.0, 1);
        let a = forward(&cfg, &params, &img, Mode::Infer, 1).unwrap();
        let b = forward(&cfg, &params, &img, Mode::Infer, 2).unwrap();
        assert_eq!(a, b);
        let t1 = forward(&cfg, &params, &img, Mode::Train, 1).unwrap();
        let t2 = forward(&cfg, &params, &img, Mode::Train, 2).unwrap();
        assert_ne!(t1, t2);
    }

    #[test]
    fn wrong_channels_rejected() {
        let cfg = small();
        let params = build_canonical(&cfg, 4).unwrap();
        let img = Tensor::<f32>::zeros(Shape::new(1, 4, 8, 8));
        assert!(matches!(
            forward(&cfg, &params, &img, Mode::Infer, 0),
            Err(Error::ChannelMismatch { expected: 3, actual: 4, .. })
        ));
        let tiny = Tensor::<f32>::zeros(Shape::new(1, 3, 2, 8));
        assert!(forward(&cfg, &params, &tiny, Mode::Infer, 0).is_err());
    }

    #[test]
    fn store_config_mismatch_rejected() {
        let params = build_canonical(&small(), 4).unwrap();
        let img = Tensor::<f32>::zeros(Shape::new(1, 3, 8, 8));
        assert!(forward(&NetworkConfig::default(), &params, &img, Mode::Infer, 0).is_err());
    }
}
