use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Real, Shape, Tensor};
use crate::error::{Error, Result};

pub fn relu<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|x| if x > T::zero() { x } else { T::zero() })
}

/// Passes `grad_out` where `input > 0`. The subgradient at exactly 0 is 0.
///
/// The ReLU output can be passed in place of its input: both are positive
/// at the same positions.
pub fn relu_backward<T: Real>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    grad_out.expect_shape("relu_backward", input.shape())?;
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(input.shape(), data)
}

/// Kept positions of an inverted-dropout draw and the survivor scale.
#[derive(Clone, Debug, PartialEq)]
pub enum DropoutMask {
    Identity,
    Drop { keep: Vec<bool>, scale: f64 },
}

impl DropoutMask {
    pub fn dropped_fraction(&self) -> f64 {
        match self {
            DropoutMask::Identity => 0.0,
            DropoutMask::Drop { keep, .. } if keep.is_empty() => 0.0,
            DropoutMask::Drop { keep, .. } => {
                keep.iter().filter(|k| !**k).count() as f64 / keep.len() as f64
            }
        }
    }
}

/// Inverted dropout: in training mode each element is zeroed with
/// probability `rate` and survivors are scaled by `1/(1-rate)`; in
/// inference mode (or with `rate == 0`) this is the identity.
pub fn dropout<T: Real>(
    input: &Tensor<T>,
    rate: f64,
    training: bool,
    seed: u64,
) -> Result<(Tensor<T>, DropoutMask)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((input.clone(), DropoutMask::Identity));
    }
    let scale = 1.0 / (1.0 - rate);
    let t_scale = T::of(scale);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep: Vec<bool> = (0..input.len()).map(|_| rng.random::<f64>() >= rate).collect();
    let data = input
        .data()
        .iter()
        .zip(&keep)
        .map(|(&x, &k)| if k { x * t_scale } else { T::zero() })
        .collect();
    Ok((
        Tensor::from_vec(input.shape(), data)?,
        DropoutMask::Drop { keep, scale },
    ))
}

pub fn dropout_backward<T: Real>(mask: &DropoutMask, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    match mask {
        DropoutMask::Identity => Ok(grad_out.clone()),
        DropoutMask::Drop { keep, scale } => {
            if keep.len() != grad_out.len() {
                return Err(Error::InvalidArgument(format!(
                    "dropout mask covers {} elements, gradient has {}",
                    keep.len(),
                    grad_out.len()
                )));
            }
            let s = T::of(*scale);
            let data = grad_out
                .data()
                .iter()
                .zip(keep)
                .map(|(&g, &k)| if k { g * s } else { T::zero() })
                .collect();
            Tensor::from_vec(grad_out.shape(), data)
        }
    }
}

/// Stacks `b`'s channels after `a`'s.
pub fn concat_channels<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa.n != sb.n || sa.h != sb.h || sa.w != sb.w {
        return Err(Error::ShapeMismatch {
            op: "concat_channels",
            expected: Shape::new(sa.n, sb.c, sa.h, sa.w),
            actual: sb,
        });
    }
    let out_shape = Shape::new(sa.n, sa.c + sb.c, sa.h, sa.w);
    let (per_a, per_b) = (sa.c * sa.plane(), sb.c * sb.plane());
    let mut data = Vec::with_capacity(out_shape.len());
    for n in 0..sa.n {
        data.extend_from_slice(&a.data()[n * per_a..(n + 1) * per_a]);
        data.extend_from_slice(&b.data()[n * per_b..(n + 1) * per_b]);
    }
    Tensor::from_vec(out_shape, data)
}

/// Splits at channel `at`; the backward of [`concat_channels`].
pub fn split_channels<T: Real>(t: &Tensor<T>, at: usize) -> Result<(Tensor<T>, Tensor<T>)> {
    let s = t.shape();
    if at > s.c {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} channels at {at}",
            s.c
        )));
    }
    let (sa, sb) = (
        Shape::new(s.n, at, s.h, s.w),
        Shape::new(s.n, s.c - at, s.h, s.w),
    );
    let (per, per_a) = (s.c * s.plane(), at * s.plane());
    let mut a = Vec::with_capacity(sa.len());
    let mut b = Vec::with_capacity(sb.len());
    for n in 0..s.n {
        let item = &t.data()[n * per..(n + 1) * per];
        a.extend_from_slice(&item[..per_a]);
        b.extend_from_slice(&item[per_a..]);
    }
    Ok((Tensor::from_vec(sa, a)?, Tensor::from_vec(sb, b)?))
}

/// 2×2 max pooling with stride 2; odd trailing rows and columns are dropped.
pub fn maxpool2x2<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    let s = input.shape();
    let out_shape = Shape::new(s.n, s.c, s.h / 2, s.w / 2);
    let mut out = Tensor::zeros(out_shape);
    let mut i = 0;
    for n in 0..s.n {
        for c in 0..s.c {
            for y in 0..out_shape.h {
                for x in 0..out_shape.w {
                    let (_, v) = window_argmax(input, n, c, y, x);
                    out.data_mut()[i] = v;
                    i += 1;
                }
            }
        }
    }
    out
}

fn window_argmax<T: Real>(t: &Tensor<T>, n: usize, c: usize, y: usize, x: usize) -> (usize, T) {
    let mut best = t.index(n, c, 2 * y, 2 * x);
    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
        let j = t.index(n, c, 2 * y + dy, 2 * x + dx);
        if t.data()[j] > t.data()[best] {
            best = j;
        }
    }
    (best, t.data()[best])
}

/// Routes each pooled cotangent to the first maximal element of its window.
pub fn maxpool2x2_backward<T: Real>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let s = input.shape();
    let out_shape = Shape::new(s.n, s.c, s.h / 2, s.w / 2);
    grad_out.expect_shape("maxpool2x2_backward", out_shape)?;
    let mut grad = Tensor::zeros(s);
    let mut i = 0;
    for n in 0..s.n {
        for c in 0..s.c {
            for y in 0..out_shape.h {
                for x in 0..out_shape.w {
                    let (j, _) = window_argmax(input, n, c, y, x);
                    grad.data_mut()[j] += grad_out.data()[i];
                    i += 1;
                }
            }
        }
    }
    Ok(grad)
}
