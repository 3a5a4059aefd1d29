//! Central finite-difference checks of every hand-written backward pass,
//! run in f64 with h = 1e-4.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uwnet_core::loss::{
    mse_loss, mse_loss_with_grad, perceptual_loss, perceptual_loss_with_grad, total_loss,
    FeatureExtractorSpec,
};
use uwnet_core::model::{build_canonical, forward, loss_and_gradients, Mode};
use uwnet_core::tensor::{
    concat_channels, conv2d_backward, conv2d_forward, dropout, dropout_backward, maxpool2x2,
    maxpool2x2_backward, relu, relu_backward, split_channels, ConvParams,
};
use uwnet_core::{FeatureExtractor, NetworkConfig, Shape, Tensor};

const H: f64 = 1e-4;
const PROBES: usize = 24;
const OP_TOL: f64 = 1e-4;
const END_TO_END_TOL: f64 = 1e-3;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

fn rand_tensor(shape: Shape, seed: u64) -> Tensor<f64> {
    Tensor::random_uniform(shape, -1.0, 1.0, seed)
}

/// `Σ w·y`, the scalar whose gradient w.r.t. `y` is the cotangent `w`.
fn dot(w: &Tensor<f64>, y: &Tensor<f64>) -> f64 {
    w.data().iter().zip(y.data()).map(|(a, b)| a * b).sum()
}

/// Compares `analytic[i]` with the central difference of `f` at probe
/// indices of `x`; `skip` rejects probes sitting on a kink.
fn check(
    name: &str,
    x: &[f64],
    analytic: &[f64],
    tol: f64,
    seed: u64,
    skip: impl Fn(usize) -> bool,
    mut f: impl FnMut(&[f64]) -> f64,
) {
    assert_eq!(x.len(), analytic.len(), "{name}: gradient length");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probed = 0;
    let mut attempts = 0;
    let mut worst = 0.0f64;
    while probed < PROBES.min(x.len()) && attempts < 50 * PROBES {
        attempts += 1;
        let i = rng.random_range(0..x.len());
        if skip(i) {
            continue;
        }
        let mut xp = x.to_vec();
        xp[i] += H;
        let up = f(&xp);
        xp[i] -= 2.0 * H;
        let down = f(&xp);
        let numeric = (up - down) / (2.0 * H);
        let e = rel_err(analytic[i], numeric);
        assert!(
            e < tol,
            "{name}[{i}]: analytic {} vs numeric {numeric} (rel err {e:.3e})",
            analytic[i]
        );
        worst = worst.max(e);
        probed += 1;
    }
    assert!(probed >= 20.min(x.len()), "{name}: only {probed} usable probes");
    eprintln!("{name}: {probed} probes, worst rel err {worst:.2e}");
}

fn with_data(shape: Shape, data: &[f64]) -> Tensor<f64> {
    Tensor::from_vec(shape, data.to_vec()).unwrap()
}

#[test]
fn conv2d_input_weight_and_bias() {
    let x = rand_tensor(Shape::new(2, 3, 6, 5), 1);
    let p = ConvParams::new(
        rand_tensor(Shape::new(4, 3, 3, 3), 2),
        rand_tensor(Shape::new(1, 1, 1, 4), 3).into_data(),
    )
    .unwrap();
    let w = rand_tensor(Shape::new(2, 4, 6, 5), 4);
    let g = conv2d_backward(&x, &p, &w).unwrap();

    check("conv.input", x.data(), g.input.data(), OP_TOL, 10, |_| false, |d| {
        dot(&w, &conv2d_forward(&with_data(x.shape(), d), &p).unwrap())
    });
    check("conv.weight", p.weight.data(), g.weight.data(), OP_TOL, 11, |_| false, |d| {
        let q = ConvParams::new(with_data(p.weight.shape(), d), p.bias.clone()).unwrap();
        dot(&w, &conv2d_forward(&x, &q).unwrap())
    });
    check("conv.bias", &p.bias, &g.bias, OP_TOL, 12, |_| false, |d| {
        let q = ConvParams::new(p.weight.clone(), d.to_vec()).unwrap();
        dot(&w, &conv2d_forward(&x, &q).unwrap())
    });
}

#[test]
fn relu_away_from_kink() {
    let x = rand_tensor(Shape::new(1, 2, 5, 5), 20);
    let w = rand_tensor(x.shape(), 21);
    let g = relu_backward(&x, &w).unwrap();
    check("relu", x.data(), g.data(), OP_TOL, 22, |i| x.data()[i].abs() < 1e-3, |d| {
        dot(&w, &relu(&with_data(x.shape(), d)))
    });
}

#[test]
fn dropout_with_fixed_mask() {
    let x = rand_tensor(Shape::new(1, 3, 6, 6), 30);
    let w = rand_tensor(x.shape(), 31);
    let (_, mask) = dropout(&x, 0.3, true, 99).unwrap();
    let g = dropout_backward(&mask, &w).unwrap();
    check("dropout", x.data(), g.data(), OP_TOL, 32, |_| false, |d| {
        dot(&w, &dropout(&with_data(x.shape(), d), 0.3, true, 99).unwrap().0)
    });
}

#[test]
fn concat_routes_gradient_to_both_inputs() {
    let a = rand_tensor(Shape::new(1, 4, 3, 3), 40);
    let b = rand_tensor(Shape::new(1, 3, 3, 3), 41);
    let w = rand_tensor(Shape::new(1, 7, 3, 3), 42);
    let (ga, gb) = split_channels(&w, 4).unwrap();
    check("concat.a", a.data(), ga.data(), OP_TOL, 43, |_| false, |d| {
        dot(&w, &concat_channels(&with_data(a.shape(), d), &b).unwrap())
    });
    check("concat.b", b.data(), gb.data(), OP_TOL, 44, |_| false, |d| {
        dot(&w, &concat_channels(&a, &with_data(b.shape(), d)).unwrap())
    });
}

#[test]
fn maxpool_routes_to_argmax() {
    let x = rand_tensor(Shape::new(1, 2, 6, 8), 50);
    let w = rand_tensor(Shape::new(1, 2, 3, 4), 51);
    let g = maxpool2x2_backward(&x, &w).unwrap();
    check("maxpool", x.data(), g.data(), OP_TOL, 52, |_| false, |d| {
        dot(&w, &maxpool2x2(&with_data(x.shape(), d)))
    });
}

#[test]
fn mse_gradient() {
    let est = rand_tensor(Shape::new(1, 3, 4, 4), 60);
    let reference = rand_tensor(est.shape(), 61);
    let (_, g) = mse_loss_with_grad(&est, &reference).unwrap();
    check("mse", est.data(), g.data(), OP_TOL, 62, |_| false, |d| {
        mse_loss(&with_data(est.shape(), d), &reference).unwrap()
    });
}

fn small_extractor() -> FeatureExtractor<f64> {
    let spec = FeatureExtractorSpec::parse("conv 3 4 3\nrelu\nmaxpool\nconv 4 5 3\nrelu\n").unwrap();
    FeatureExtractor::<f32>::random(spec, 5).unwrap().cast()
}

#[test]
fn perceptual_gradient() {
    let ex = small_extractor();
    let est = Tensor::<f64>::random_uniform(Shape::new(1, 3, 8, 8), 0.0, 1.0, 70);
    let reference = Tensor::<f64>::random_uniform(est.shape(), 0.0, 1.0, 71);
    let (_, g) = perceptual_loss_with_grad(&est, &reference, &ex).unwrap();
    check("perceptual", est.data(), g.data(), OP_TOL, 72, |_| false, |d| {
        perceptual_loss(&with_data(est.shape(), d), &reference, &ex).unwrap()
    });
}

#[test]
fn end_to_end_total_loss() {
    let cfg = NetworkConfig {
        feature_maps: 4,
        num_blocks: 2,
        ..Default::default()
    };
    let params = build_canonical(&cfg, 3).unwrap().cast::<f64>();
    let ex = small_extractor();
    let raw = Tensor::<f64>::random_uniform(Shape::new(1, 3, 8, 8), 0.0, 1.0, 80);
    let reference = Tensor::<f64>::random_uniform(raw.shape(), 0.0, 1.0, 81);
    let seed = 17;
    let (_, grads) =
        loss_and_gradients(&cfg, &params, &raw, &reference, &ex, Mode::Train, seed).unwrap();

    for (k, (name, layer)) in params.layers().iter().enumerate() {
        let loss_with = |p: &uwnet_core::ParameterStore<f64>| {
            let out = forward(&cfg, p, &raw, Mode::Train, seed).unwrap();
            total_loss(&out, &reference, &ex).unwrap().l_total
        };
        check(
            &format!("l_total/{name}.weight"),
            layer.weight.data(),
            grads.layers[k].weight.data(),
            END_TO_END_TOL,
            100 + k as u64,
            |_| false,
            |d| {
                let mut p = params.clone();
                p.get_mut(name).unwrap().weight.data_mut().copy_from_slice(d);
                loss_with(&p)
            },
        );
        check(
            &format!("l_total/{name}.bias"),
            &layer.bias,
            &grads.layers[k].bias,
            END_TO_END_TOL,
            200 + k as u64,
            |_| false,
            |d| {
                let mut p = params.clone();
                p.get_mut(name).unwrap().bias.copy_from_slice(d);
                loss_with(&p)
            },
        );
    }
}
