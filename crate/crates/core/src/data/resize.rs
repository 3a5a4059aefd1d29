use crate::error::{Error, Result};
use crate::tensor::{Real, Shape, Tensor};

/// Source coordinate and blend weight for each target index, with
/// half-pixel centres and edge clamping.
fn taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear resize of every plane. Same-size resizes return an exact copy.
pub fn resize_bilinear<T: Real>(t: &Tensor<T>, target_h: usize, target_w: usize) -> Result<Tensor<T>> {
    let s = t.shape();
    if target_h == 0 || target_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "resize target must be non-zero, got {target_h}x{target_w}"
        )));
    }
    if s.h == 0 || s.w == 0 {
        return Err(Error::InvalidArgument("cannot resize an empty image".into()));
    }
    if (s.h, s.w) == (target_h, target_w) {
        return Ok(t.clone());
    }
    let (ys, xs) = (taps(s.h, target_h), taps(s.w, target_w));
    let out_shape = Shape::new(s.n, s.c, target_h, target_w);
    let mut out = Vec::with_capacity(out_shape.len());
    for plane in t.data().chunks_exact(s.plane()) {
        let px = |y: usize, x: usize| plane[y * s.w + x].as_f64();
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                let top = px(y0, x0) * (1.0 - fx) + px(y0, x1) * fx;
                let bottom = px(y1, x0) * (1.0 - fx) + px(y1, x1) * fx;
                out.push(T::of(top * (1.0 - fy) + bottom * fy));
            }
        }
    }
    Tensor::from_vec(out_shape, out)
}
