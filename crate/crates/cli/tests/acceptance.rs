//! One PASS/FAIL line per acceptance criterion. Each check is a compact
//! independent oracle; the detailed suites live in the core crate's tests.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use uwnet_cli::report::ParameterSummary;
use uwnet_core::bench::{compare, default_baselines, BenchRecord, PUBLISHED_SELF};
use uwnet_core::data::synthetic::underwater_pair;
use uwnet_core::data::write_image;
use uwnet_core::loss::{mse_loss, mse_loss_with_grad, perceptual_loss, perceptual_loss_with_grad, total_loss, FeatureExtractorSpec};
use uwnet_core::metrics::{psnr, ssim, uicm, uism, RgbImage, UiqmCoefficients, UiqmConfig, DEFAULT_PEAK};
use uwnet_core::model::weights::element_census;
use uwnet_core::model::{build_canonical, forward, loss_and_gradients, mix_seed, train_step, Mode};
use uwnet_core::tensor::{
    concat_channels, conv2d_backward, conv2d_forward, dropout, dropout_backward, maxpool2x2, maxpool2x2_backward,
    relu, relu_backward, split_channels, AdamConfig, ConvParams,
};
use uwnet_core::{FeatureExtractor, NetworkConfig, ParameterStore, Shape, Tensor, TrainState};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Uniform index in `0..n` from a seeded stream.
fn pick(seed: u64, i: u64, n: usize) -> usize {
    (mix_seed(seed, i) % n as u64) as usize
}

// ---- gradients -------------------------------------------------------------

const H: f64 = 1e-4;
const PROBES: u64 = 24;

fn rt(shape: Shape, seed: u64) -> Tensor<f64> {
    Tensor::random_uniform(shape, -1.0, 1.0, seed)
}

fn dot(w: &Tensor<f64>, y: &Tensor<f64>) -> f64 {
    w.data().iter().zip(y.data()).map(|(a, b)| a * b).sum()
}

fn at(shape: Shape, d: &[f64]) -> Tensor<f64> {
    Tensor::from_vec(shape, d.to_vec()).unwrap()
}

/// Worst relative error of `analytic` against central differences of `f`
/// over `PROBES` probe indices (kinks rejected by `skip`).
fn probe(
    name: &str,
    x: &[f64],
    analytic: &[f64],
    tol: f64,
    seed: u64,
    skip: impl Fn(usize) -> bool,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Result<f64, String> {
    let mut worst = 0.0f64;
    let (mut probed, mut draws) = (0, 0);
    while probed < PROBES && draws < 50 * PROBES {
        let i = pick(seed, draws, x.len());
        draws += 1;
        if skip(i) {
            continue;
        }
        let mut xp = x.to_vec();
        xp[i] += H;
        let up = f(&xp);
        xp[i] -= 2.0 * H;
        let numeric = (up - f(&xp)) / (2.0 * H);
        let e = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
        ensure(e < tol, || format!("{name}[{i}] rel err {e:.2e}"))?;
        worst = worst.max(e);
        probed += 1;
    }
    ensure(probed >= 20, || format!("{name}: only {probed} probes"))?;
    Ok(worst)
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut worst_op = 0.0f64;
    let mut op = |r: Result<f64, String>| -> Result<(), String> {
        worst_op = worst_op.max(r?);
        Ok(())
    };

    let x = rt(Shape::new(2, 3, 6, 5), 1);
    let p = ConvParams::new(rt(Shape::new(4, 3, 3, 3), 2), rt(Shape::new(1, 1, 1, 4), 3).into_data()).unwrap();
    let w = rt(Shape::new(2, 4, 6, 5), 4);
    let g = conv2d_backward(&x, &p, &w).unwrap();
    op(probe("conv.input", x.data(), g.input.data(), 1e-4, 10, |_| false, |d| {
        dot(&w, &conv2d_forward(&at(x.shape(), d), &p).unwrap())
    }))?;
    op(probe("conv.weight", p.weight.data(), g.weight.data(), 1e-4, 11, |_| false, |d| {
        dot(&w, &conv2d_forward(&x, &ConvParams::new(at(p.weight.shape(), d), p.bias.clone()).unwrap()).unwrap())
    }))?;
    let bias_probe = |d: &[f64]| dot(&w, &conv2d_forward(&x, &ConvParams::new(p.weight.clone(), d.to_vec()).unwrap()).unwrap());
    op(probe("conv.bias", &p.bias, &g.bias, 1e-4, 12, |_| false, bias_probe))?;

    let x = rt(Shape::new(1, 2, 5, 5), 20);
    let w = rt(x.shape(), 21);
    let g = relu_backward(&x, &w).unwrap();
    op(probe("relu", x.data(), g.data(), 1e-4, 22, |i| x.data()[i].abs() < 1e-3, |d| dot(&w, &relu(&at(x.shape(), d)))))?;

    let x = rt(Shape::new(1, 3, 6, 6), 30);
    let w = rt(x.shape(), 31);
    let (_, mask) = dropout(&x, 0.3, true, 99).unwrap();
    let g = dropout_backward(&mask, &w).unwrap();
    op(probe("dropout", x.data(), g.data(), 1e-4, 32, |_| false, |d| {
        dot(&w, &dropout(&at(x.shape(), d), 0.3, true, 99).unwrap().0)
    }))?;

    let (a, b) = (rt(Shape::new(1, 4, 3, 3), 40), rt(Shape::new(1, 3, 3, 3), 41));
    let w = rt(Shape::new(1, 7, 3, 3), 42);
    let (ga, gb) = split_channels(&w, 4).unwrap();
    op(probe("concat.a", a.data(), ga.data(), 1e-4, 43, |_| false, |d| dot(&w, &concat_channels(&at(a.shape(), d), &b).unwrap())))?;
    op(probe("concat.b", b.data(), gb.data(), 1e-4, 44, |_| false, |d| dot(&w, &concat_channels(&a, &at(b.shape(), d)).unwrap())))?;

    let x = rt(Shape::new(1, 2, 6, 8), 50);
    let w = rt(Shape::new(1, 2, 3, 4), 51);
    let g = maxpool2x2_backward(&x, &w).unwrap();
    op(probe("maxpool", x.data(), g.data(), 1e-4, 52, |_| false, |d| dot(&w, &maxpool2x2(&at(x.shape(), d)))))?;

    let (est, reference) = (rt(Shape::new(1, 3, 4, 4), 60), rt(Shape::new(1, 3, 4, 4), 61));
    let (_, g) = mse_loss_with_grad(&est, &reference).unwrap();
    op(probe("mse", est.data(), g.data(), 1e-4, 62, |_| false, |d| mse_loss(&at(est.shape(), d), &reference).unwrap()))?;

    let spec = FeatureExtractorSpec::parse("conv 3 4 3\nrelu\nmaxpool\nconv 4 5 3\nrelu\n").unwrap();
    let ex: FeatureExtractor<f64> = FeatureExtractor::<f32>::random(spec, 5).unwrap().cast();
    let est = Tensor::<f64>::random_uniform(Shape::new(1, 3, 8, 8), 0.0, 1.0, 70);
    let reference = Tensor::<f64>::random_uniform(est.shape(), 0.0, 1.0, 71);
    let (_, g) = perceptual_loss_with_grad(&est, &reference, &ex).unwrap();
    op(probe("perceptual", est.data(), g.data(), 1e-4, 72, |_| false, |d| {
        perceptual_loss(&at(est.shape(), d), &reference, &ex).unwrap()
    }))?;

    let cfg = NetworkConfig {
        feature_maps: 4,
        num_blocks: 2,
        ..Default::default()
    };
    let params = build_canonical(&cfg, 3).unwrap().cast::<f64>();
    let raw = Tensor::<f64>::random_uniform(Shape::new(1, 3, 8, 8), 0.0, 1.0, 80);
    let reference = Tensor::<f64>::random_uniform(raw.shape(), 0.0, 1.0, 81);
    let (_, grads) = loss_and_gradients(&cfg, &params, &raw, &reference, &ex, Mode::Train, 17).unwrap();
    let loss_with = |p: &ParameterStore<f64>| {
        total_loss(&forward(&cfg, p, &raw, Mode::Train, 17).unwrap(), &reference, &ex).unwrap().l_total
    };
    let mut worst_e2e = 0.0f64;
    for (k, (name, layer)) in params.layers().iter().enumerate() {
        let e = probe(&format!("{name}.weight"), layer.weight.data(), grads.layers[k].weight.data(), 1e-3, 100 + k as u64, |_| false, |d| {
            let mut p = params.clone();
            p.get_mut(name).unwrap().weight.data_mut().copy_from_slice(d);
            loss_with(&p)
        })?;
        worst_e2e = worst_e2e.max(e);
        let e = probe(&format!("{name}.bias"), &layer.bias, &grads.layers[k].bias, 1e-3, 200 + k as u64, |_| false, |d| {
            let mut p = params.clone();
            p.get_mut(name).unwrap().bias.copy_from_slice(d);
            loss_with(&p)
        })?;
        worst_e2e = worst_e2e.max(e);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.0} s"))?;
    Ok(format!("worst rel err {worst_op:.1e} per-op, {worst_e2e:.1e} end-to-end, {secs:.1} s"))
}

// ---- conv oracle -----------------------------------------------------------

fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64]) -> Vec<f64> {
    let (xs, ws) = (x.shape(), w.shape());
    let pad = (ws.h / 2) as isize;
    let mut out = Vec::with_capacity(xs.n * ws.n * xs.h * xs.w);
    for n in 0..xs.n {
        for co in 0..ws.n {
            for y in 0..xs.h as isize {
                for xx in 0..xs.w as isize {
                    let mut acc = b[co];
                    for ci in 0..xs.c {
                        for ky in 0..ws.h {
                            for kx in 0..ws.w {
                                let (iy, ix) = (y + ky as isize - pad, xx + kx as isize - pad);
                                if iy >= 0 && ix >= 0 && iy < xs.h as isize && ix < xs.w as isize {
                                    acc += x.at(n, ci, iy as usize, ix as usize) * w.at(co, ci, ky, kx);
                                }
                            }
                        }
                    }
                    out.push(acc);
                }
            }
        }
    }
    out
}

fn conv_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let r = |j: u64, n: usize| pick(7_000 + case, j, n);
        let (n, c_in, c_out) = (1 + r(0, 2), 1 + r(1, 8), 1 + r(2, 8));
        let (h, w, k) = (1 + r(3, 16), 1 + r(4, 16), [1, 3, 5][r(5, 3)]);
        let x = Tensor::<f32>::random_uniform(Shape::new(n, c_in, h, w), -1.0, 1.0, 3 * case);
        let wt = Tensor::<f32>::random_uniform(Shape::new(c_out, c_in, k, k), -1.0, 1.0, 3 * case + 1);
        let bias = Tensor::<f32>::random_uniform(Shape::new(1, 1, 1, c_out), -1.0, 1.0, 3 * case + 2).into_data();
        let got = conv2d_forward(&x, &ConvParams::new(wt.clone(), bias.clone()).unwrap()).unwrap();
        let b64: Vec<f64> = bias.iter().map(|&v| v as f64).collect();
        let want = naive_conv(&x.cast(), &wt.cast(), &b64);
        ensure(got.data().len() == want.len(), || format!("case {case}: output size"))?;
        for (g, e) in got.data().iter().zip(&want) {
            let d = (*g as f64 - e).abs();
            ensure(d < 1e-5, || format!("case {case} ({n},{c_in},{h},{w})->{c_out} k{k}: diff {d:.2e}"))?;
            worst = worst.max(d);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.0} s"))?;
    Ok(format!("100 shapes, worst abs diff {worst:.1e}, {secs:.2} s"))
}

// ---- parameter accounting ---------------------------------------------------

fn parameter_accounting() -> Outcome {
    let params = build_canonical(&NetworkConfig::default(), 0).map_err(|e| e.to_string())?;
    let count = params.count_parameters();
    for l in &count.per_layer {
        let formula = l.c_in * l.c_out * l.kernel * l.kernel + l.c_out;
        ensure(l.total == formula, || format!("{}: {} vs formula {formula}", l.name, l.total))?;
    }
    let summary = ParameterSummary::of(&params);
    ensure(summary.reference_total == 219_840, || format!("reference {}", summary.reference_total))?;
    ensure(summary.delta_vs_reference == summary.total as i64 - 219_840, || "delta arithmetic".into())?;
    ensure(!summary.delta_explanation.trim().is_empty(), || "delta is not explained".into())?;
    let census = element_census(&params.save_weights().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(census == count.total, || format!("census {census} vs count {}", count.total))?;
    Ok(format!(
        "{} layers match the formula; total {} vs 219,840 (delta {:+}), census {census}",
        count.per_layer.len(),
        summary.total,
        summary.delta_vs_reference
    ))
}

// ---- compression / speed-up arithmetic ---------------------------------------

fn rate_arithmetic() -> Outcome {
    let ours = BenchRecord {
        name: "ours".into(),
        alpha: PUBLISHED_SELF.alpha,
        beta_seconds: PUBLISHED_SELF.beta_seconds,
    };
    let expected = [("WaterNet", 3.96, 24.0), ("Deep SESR", 10.17, 7.0), ("FUnIE-GAN", 18.17, 8.0)];
    let rows = compare(&ours, &default_baselines()).map_err(|e| e.to_string())?;
    ensure(rows.len() == 3, || format!("{} baselines", rows.len()))?;
    let mut shown = Vec::new();
    for (row, (name, comp, speed)) in rows.iter().zip(expected) {
        ensure(row.baseline.name == name, || format!("unexpected baseline {}", row.baseline.name))?;
        let (c, s) = (row.compression.relative_gain, row.speed_up.relative_gain);
        ensure((c - comp).abs() <= 0.01, || format!("{name} compression {c:.4} vs {comp}"))?;
        ensure((s - speed).abs() <= 0.5, || format!("{name} speed-up {s:.3} vs {speed}"))?;
        shown.push(format!("{name} {c:.2}/{s:.1}"));
    }
    Ok(shown.join(", "))
}

// ---- metric oracles ------------------------------------------------------------

fn oracle_psnr(a: &RgbImage, b: &RgbImage) -> f64 {
    let sse: f64 = a.pixels().iter().zip(b.pixels()).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum();
    10.0 * (255.0f64.powi(2) / (sse / a.pixels().len() as f64)).log10()
}

fn oracle_ssim(a: &RgbImage, b: &RgbImage) -> f64 {
    let (w, h) = (a.width(), a.height());
    let mut g = [[0.0f64; 11]; 11];
    for (y, row) in g.iter_mut().enumerate() {
        for (x, v) in row.iter_mut().enumerate() {
            *v = (-((x as f64 - 5.0).powi(2) + (y as f64 - 5.0).powi(2)) / 4.5).exp();
        }
    }
    let total: f64 = g.iter().flatten().sum();
    let (c1, c2) = ((0.01 * 255.0f64).powi(2), (0.03 * 255.0f64).powi(2));
    let mut sum = 0.0;
    for c in 0..3 {
        let px = |img: &RgbImage, x: usize, y: usize| img.pixels()[(y * w + x) * 3 + c] as f64;
        let (mut acc, mut count) = (0.0, 0.0);
        for y0 in 0..=h - 11 {
            for x0 in 0..=w - 11 {
                let mut m = [0.0; 5];
                for (dy, row) in g.iter().enumerate() {
                    for (dx, gv) in row.iter().enumerate() {
                        let k = gv / total;
                        let (va, vb) = (px(a, x0 + dx, y0 + dy), px(b, x0 + dx, y0 + dy));
                        for (slot, v) in m.iter_mut().zip([va, vb, va * va, vb * vb, va * vb]) {
                            *slot += k * v;
                        }
                    }
                }
                let [ma, mb, saa, sbb, sab] = m;
                acc += ((2.0 * ma * mb + c1) * (2.0 * (sab - ma * mb) + c2))
                    / ((ma * ma + mb * mb + c1) * (saa - ma * ma + sbb - mb * mb + c2));
                count += 1.0;
            }
        }
        sum += acc / count;
    }
    sum / 3.0
}

fn blur(img: &RgbImage, radius: usize) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let (mut s, mut n) = (0.0, 0.0);
                for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                    for xx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                        s += img.pixels()[(yy * w + xx) * 3 + c] as f64;
                        n += 1.0;
                    }
                }
                out.pixels_mut()[(y * w + x) * 3 + c] = (s / n).round() as u8;
            }
        }
    }
    out
}

fn metric_oracles() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let a = RgbImage::random(32, 32, 500 + k);
        let mut b = RgbImage::random(32, 32, 600 + k);
        if k % 4 == 0 {
            b = a.clone();
            for (i, p) in b.pixels_mut().iter_mut().enumerate() {
                *p = p.saturating_add((i % 11) as u8);
            }
        }
        let p = psnr(&a, &b, DEFAULT_PEAK).map_err(|e| e.to_string())?.db();
        let s = ssim(&a, &b).map_err(|e| e.to_string())?;
        let (dp, ds) = ((p - oracle_psnr(&a, &b)).abs(), (s - oracle_ssim(&a, &b)).abs());
        ensure(dp < 1e-6 && ds < 1e-6, || format!("pair {k}: psnr diff {dp:.1e}, ssim diff {ds:.1e}"))?;
        worst = worst.max(dp).max(ds);
    }
    let base = RgbImage::filled(8, 8, [50; 3]);
    for (delta, want) in [(1u8, 48.1308), (16, 24.0486)] {
        let got = psnr(&RgbImage::filled(8, 8, [50 + delta; 3]), &base, DEFAULT_PEAK).map_err(|e| e.to_string())?.db();
        ensure((got - want).abs() < 1e-3, || format!("uniform error {delta}: {got:.4} dB"))?;
    }
    let combined = UiqmCoefficients::default().combine(1.0, 1.0, 1.0);
    ensure((combined - 3.8988).abs() < 1e-12, || format!("combiner {combined}"))?;
    let cfg = UiqmConfig::default();
    let mut gray = RgbImage::random(20, 20, 8);
    for p in gray.pixels_mut().chunks_exact_mut(3) {
        p[1] = p[0];
        p[2] = p[0];
    }
    let g = uicm(&gray, &cfg).map_err(|e| e.to_string())?;
    ensure(g == 0.0, || format!("UICM on gray {g}"))?;
    let flat = uism(&RgbImage::filled(20, 20, [10, 200, 90]), &cfg).map_err(|e| e.to_string())?;
    ensure(flat == 0.0, || format!("UISM on constant {flat}"))?;
    let mut board = RgbImage::filled(64, 64, [32; 3]);
    for y in 0..64 {
        for x in 0..64 {
            if (x / 8 + y / 8) % 2 == 0 {
                board.pixels_mut()[(y * 64 + x) * 3..][..3].copy_from_slice(&[224; 3]);
            }
        }
    }
    let mut scores = vec![uism(&board, &cfg).map_err(|e| e.to_string())?];
    for radius in 1..=3 {
        scores.push(uism(&blur(&board, radius), &cfg).map_err(|e| e.to_string())?);
    }
    ensure(scores.windows(2).all(|w| w[1] < w[0]), || format!("UISM under blur {scores:?}"))?;
    Ok(format!(
        "50 pairs within {worst:.1e}; closed forms ok; combiner {combined:.4}; UISM blur {:.2} > {:.2} > {:.2} > {:.2}",
        scores[0], scores[1], scores[2], scores[3]
    ))
}

// ---- toy overfit + PSNR gain -------------------------------------------------------

struct Overfit {
    first: f64,
    last: f64,
    steps: usize,
    secs: f64,
    psnr_raw: f64,
    psnr_enhanced: f64,
}

const OVERFIT_STEPS: usize = 500;

fn overfit() -> Result<Overfit, String> {
    let start = Instant::now();
    let config = NetworkConfig::default();
    let params = build_canonical(&config, 0).map_err(|e| e.to_string())?;
    let adam = AdamConfig {
        lr: 2e-4,
        ..AdamConfig::default()
    };
    let mut state = TrainState::new(config.clone(), params, adam, 0).map_err(|e| e.to_string())?;
    let extractor = FeatureExtractor::identity();
    let pairs: Vec<_> = (0..4u64)
        .map(|i| {
            let (raw, reference) = underwater_pair(64, 64, 100 + i);
            (raw.to_tensor::<f32>(), reference.to_tensor::<f32>())
        })
        .collect();
    let mut losses = Vec::with_capacity(OVERFIT_STEPS);
    for step in 0..OVERFIT_STEPS {
        let (raw, reference) = &pairs[step % pairs.len()];
        losses.push(train_step(&mut state, raw, reference, &extractor).map_err(|e| e.to_string())?.l_mse);
    }
    // One pass over the four pairs at the end of training.
    let last = losses[OVERFIT_STEPS - pairs.len()..].iter().sum::<f64>() / pairs.len() as f64;
    let (mut psnr_raw, mut psnr_enhanced) = (0.0, 0.0);
    for (raw, reference) in &pairs {
        let out = forward(&config, &state.params, raw, Mode::Infer, 0).map_err(|e| e.to_string())?;
        let reference = RgbImage::from_tensor(reference, 0).map_err(|e| e.to_string())?;
        let to_img = |t: &Tensor<f32>| RgbImage::from_tensor(t, 0).map_err(|e| e.to_string());
        psnr_raw += psnr(&to_img(raw)?, &reference, DEFAULT_PEAK).map_err(|e| e.to_string())?.db() / 4.0;
        psnr_enhanced += psnr(&to_img(&out)?, &reference, DEFAULT_PEAK).map_err(|e| e.to_string())?.db() / 4.0;
    }
    Ok(Overfit {
        first: losses[0],
        last,
        steps: OVERFIT_STEPS,
        secs: start.elapsed().as_secs_f64(),
        psnr_raw,
        psnr_enhanced,
    })
}

fn training_loop(run: &Result<Overfit, String>) -> Outcome {
    let r = run.as_ref().map_err(Clone::clone)?;
    let drop = r.first / r.last;
    ensure(r.last < 0.01, || format!("final L_MSE {:.4} after {} steps", r.last, r.steps))?;
    ensure(drop >= 10.0, || format!("loss fell only {drop:.1}x ({:.4} -> {:.4})", r.first, r.last))?;
    ensure(r.secs < 600.0, || format!("took {:.0} s", r.secs))?;
    Ok(format!(
        "L_MSE {:.4} -> {:.5} ({drop:.0}x) in {} steps, {:.0} s",
        r.first, r.last, r.steps, r.secs
    ))
}

fn psnr_gain(run: &Result<Overfit, String>) -> Outcome {
    let r = run.as_ref().map_err(Clone::clone)?;
    let gain = r.psnr_enhanced - r.psnr_raw;
    ensure(gain >= 3.0, || format!("gain {gain:.2} dB ({:.2} -> {:.2})", r.psnr_raw, r.psnr_enhanced))?;
    Ok(format!("mean PSNR raw {:.2} dB, enhanced {:.2} dB (+{gain:.2} dB)", r.psnr_raw, r.psnr_enhanced))
}

// ---- determinism ---------------------------------------------------------------

fn uwnet(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_uwnet")).args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for name in ["weights.suwn", "train_report.json", "loss_log.csv", "eval/eval_report.json", "eval/eval_table.txt"] {
        files.push((name.to_owned(), std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?));
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    for sub in ["raw", "ref"] {
        std::fs::create_dir_all(data.join(sub)).map_err(|e| e.to_string())?;
    }
    for i in 0..4u64 {
        let (raw, reference) = underwater_pair(20, 20, 40 + i);
        write_image(&data.join("raw").join(format!("p{i}.png")), &raw).map_err(|e| e.to_string())?;
        write_image(&data.join("ref").join(format!("p{i}.png")), &reference).map_err(|e| e.to_string())?;
    }
    let (out, data) = (tmp.path().join("run"), data.to_str().unwrap().to_owned());
    let out_s = out.to_str().unwrap().to_owned();
    let weights = out.join("weights.suwn").to_str().unwrap().to_owned();
    let eval_out = out.join("eval").to_str().unwrap().to_owned();
    let mut runs = Vec::new();
    for _ in 0..2 {
        uwnet(&["train", "--data", &data, "--out", &out_s, "--epochs", "2", "--size", "16", "--val-pairs", "1", "--seed", "5", "--format", "json"])?;
        uwnet(&["eval", "--data", &data, "--weights", &weights, "--out", &eval_out, "--format", "json"])?;
        runs.push(snapshot(&out)?);
        std::fs::remove_dir_all(&out).map_err(|e| e.to_string())?;
    }
    for ((name, a), (_, b)) in runs[0].iter().zip(&runs[1]) {
        ensure(a == b, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} artifacts byte-identical across two seeded runs", runs[0].len()))
}

fn main() {
    let overfit_run = overfit();
    let results: Vec<(&str, Outcome)> = vec![
        ("gradient suite", gradient_suite()),
        ("conv oracle", conv_oracle()),
        ("parameter accounting", parameter_accounting()),
        ("compression / speed-up arithmetic", rate_arithmetic()),
        ("metric oracles", metric_oracles()),
        ("training-loop overfit", training_loop(&overfit_run)),
        ("determinism", determinism()),
        ("PSNR gain after overfit", psnr_gain(&overfit_run)),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
