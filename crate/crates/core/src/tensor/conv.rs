use super::{Real, Shape, Tensor};
use crate::error::{Error, Result};

/// Stride-1, zero-padded "same" convolution parameters.
///
/// Weights are laid out `(C_out, C_in, k, k)` and applied as a
/// cross-correlation (no kernel flip).
#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams<T = f32> {
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

impl<T: Real> ConvParams<T> {
    pub fn new(weight: Tensor<T>, bias: Vec<T>) -> Result<Self> {
        let s = weight.shape();
        if s.h != s.w || s.h % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "conv kernel must be square with odd size, got {}x{}",
                s.h, s.w
            )));
        }
        if bias.len() != s.n {
            return Err(Error::InvalidArgument(format!(
                "conv bias has {} entries for {} output channels",
                bias.len(),
                s.n
            )));
        }
        Ok(ConvParams { weight, bias })
    }

    pub fn zeros(c_in: usize, c_out: usize, kernel: usize) -> Self {
        ConvParams {
            weight: Tensor::zeros(Shape::new(c_out, c_in, kernel, kernel)),
            bias: vec![T::zero(); c_out],
        }
    }

    pub fn c_out(&self) -> usize {
        self.weight.shape().n
    }

    pub fn c_in(&self) -> usize {
        self.weight.shape().c
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape().h
    }

    pub fn padding(&self) -> usize {
        (self.kernel() - 1) / 2
    }

    /// `C_in·C_out·k² + C_out`.
    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn cast<U: Real>(&self) -> ConvParams<U> {
        ConvParams {
            weight: self.weight.cast(),
            bias: self.bias.iter().map(|b| U::of(b.as_f64())).collect(),
        }
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.c != self.c_in() {
            return Err(Error::ChannelMismatch {
                op: "conv2d",
                expected: self.c_in(),
                actual: input.c,
            });
        }
        Ok(Shape::new(input.n, self.c_out(), input.h, input.w))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads<T = f32> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

/// Unfolds one batch item into a `(C_in·k·k) × (H·W)` column matrix.
fn im2col<T: Real>(src: &[T], c_in: usize, h: usize, w: usize, k: usize, cols: &mut [T]) {
    let pad = (k - 1) / 2;
    let hw = h * w;
    for c in 0..c_in {
        let plane = &src[c * hw..(c + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((c * k + ky) * k + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - pad as isize;
                    let dst = &mut row[y * w..(y + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src_row = &plane[sy as usize * w..(sy as usize + 1) * w];
                    let shift = kx as isize - pad as isize;
                    for (x, d) in dst.iter_mut().enumerate() {
                        let sx = x as isize + shift;
                        *d = if sx < 0 || sx >= w as isize {
                            T::zero()
                        } else {
                            src_row[sx as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Inverse of [`im2col`]: scatters columns back, accumulating overlaps.
fn col2im<T: Real>(cols: &[T], c_in: usize, h: usize, w: usize, k: usize, dst: &mut [T]) {
    let pad = (k - 1) / 2;
    let hw = h * w;
    for c in 0..c_in {
        let plane = &mut dst[c * hw..(c + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((c * k + ky) * k + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - pad as isize;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst_row = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    let shift = kx as isize - pad as isize;
                    for (x, &g) in row[y * w..(y + 1) * w].iter().enumerate() {
                        let sx = x as isize + shift;
                        if sx >= 0 && sx < w as isize {
                            dst_row[sx as usize] += g;
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d_forward<T: Real>(input: &Tensor<T>, params: &ConvParams<T>) -> Result<Tensor<T>> {
    let in_shape = input.shape();
    let out_shape = params.output_shape(in_shape)?;
    let mut out = Tensor::zeros(out_shape);
    let (c_in, c_out, k) = (params.c_in(), params.c_out(), params.kernel());
    let hw = in_shape.plane();
    let ckk = c_in * k * k;
    if hw == 0 {
        return Ok(out);
    }
    let mut cols = vec![T::zero(); ckk * hw];
    let w = params.weight.data();
    for n in 0..in_shape.n {
        let src = &input.data()[n * c_in * hw..(n + 1) * c_in * hw];
        im2col(src, c_in, in_shape.h, in_shape.w, k, &mut cols);
        let dst = &mut out.data_mut()[n * c_out * hw..(n + 1) * c_out * hw];
        for (co, plane) in dst.chunks_exact_mut(hw).enumerate() {
            plane.fill(params.bias[co]);
        }
        T::gemm(
            c_out,
            ckk,
            hw,
            T::one(),
            w,
            (ckk as isize, 1),
            &cols,
            (hw as isize, 1),
            T::one(),
            dst,
            (hw as isize, 1),
        );
    }
    Ok(out)
}

fn backward_impl<T: Real>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    grad_out: &Tensor<T>,
    want_input: bool,
) -> Result<(Option<Tensor<T>>, Tensor<T>, Vec<T>)> {
    let in_shape = input.shape();
    let out_shape = params.output_shape(in_shape)?;
    grad_out.expect_shape("conv2d_backward", out_shape)?;
    let (c_in, c_out, k) = (params.c_in(), params.c_out(), params.kernel());
    let hw = in_shape.plane();
    let ckk = c_in * k * k;

    let mut grad_w = Tensor::zeros(params.weight.shape());
    let mut grad_b = vec![T::zero(); c_out];
    let mut grad_in = want_input.then(|| Tensor::zeros(in_shape));
    if hw == 0 {
        return Ok((grad_in, grad_w, grad_b));
    }
    let mut cols = vec![T::zero(); ckk * hw];
    let mut grad_cols = if want_input {
        vec![T::zero(); ckk * hw]
    } else {
        Vec::new()
    };
    for n in 0..in_shape.n {
        let go = &grad_out.data()[n * c_out * hw..(n + 1) * c_out * hw];
        for (co, plane) in go.chunks_exact(hw).enumerate() {
            let mut s = T::zero();
            for &g in plane {
                s += g;
            }
            grad_b[co] += s;
        }

        let src = &input.data()[n * c_in * hw..(n + 1) * c_in * hw];
        im2col(src, c_in, in_shape.h, in_shape.w, k, &mut cols);
        // dW (C_out × CKK) += dY (C_out × HW) · colsᵀ (HW × CKK)
        T::gemm(
            c_out,
            hw,
            ckk,
            T::one(),
            go,
            (hw as isize, 1),
            &cols,
            (1, hw as isize),
            T::one(),
            grad_w.data_mut(),
            (ckk as isize, 1),
        );

        if let Some(gi) = grad_in.as_mut() {
            // dcols (CKK × HW) = Wᵀ (CKK × C_out) · dY (C_out × HW)
            T::gemm(
                ckk,
                c_out,
                hw,
                T::one(),
                params.weight.data(),
                (1, ckk as isize),
                go,
                (hw as isize, 1),
                T::zero(),
                &mut grad_cols,
                (hw as isize, 1),
            );
            let dst = &mut gi.data_mut()[n * c_in * hw..(n + 1) * c_in * hw];
            col2im(&grad_cols, c_in, in_shape.h, in_shape.w, k, dst);
        }
    }
    Ok((grad_in, grad_w, grad_b))
}

pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let (gi, weight, bias) = backward_impl(input, params, grad_out, true)?;
    Ok(ConvGrads {
        input: gi.expect("input gradient requested"),
        weight,
        bias,
    })
}

/// Weight and bias gradients only; skips the input cotangent.
pub fn conv2d_backward_params<T: Real>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<T>)> {
    let (_, w, b) = backward_impl(input, params, grad_out, false)?;
    Ok((w, b))
}
