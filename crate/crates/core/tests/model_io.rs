use uwnet_core::loss::{perceptual_loss, FeatureExtractorSpec};
use uwnet_core::model::weights::element_census;
use uwnet_core::model::{build_canonical, forward, train_step, Mode};
use uwnet_core::tensor::{AdamConfig, ConvParams};
use uwnet_core::{FeatureExtractor, NetworkConfig, ParameterStore, Shape, Tensor, TrainState};

#[test]
fn count_matches_formula_and_census() {
    let cfg = NetworkConfig::default();
    let params = build_canonical(&cfg, 0).unwrap();
    let count = params.count_parameters();
    for layer in &count.per_layer {
        let formula = layer.c_in * layer.c_out * layer.kernel * layer.kernel + layer.c_out;
        assert_eq!(layer.total, formula, "{}", layer.name);
    }
    assert_eq!(count.per_layer.len(), 11);
    assert_eq!(count.total, 341_059);
    assert_eq!(count.delta_vs_reference(), 121_219);
    let bytes = params.save_weights().unwrap();
    assert_eq!(element_census(&bytes).unwrap(), count.total);
}

#[test]
fn weights_round_trip_bytes() {
    let cfg = NetworkConfig {
        feature_maps: 6,
        ..Default::default()
    };
    let params = build_canonical(&cfg, 9).unwrap();
    let bytes = params.save_weights().unwrap();
    let back = ParameterStore::load_weights(&bytes).unwrap();
    assert_eq!(back, params);
    assert_eq!(back.save_weights().unwrap(), bytes);
    back.check_config(&cfg).unwrap();
    assert!(back.check_config(&NetworkConfig::default()).is_err());
}

/// Conv 3→2, ReLU, conv 2→2, ReLU written out with explicit loops.
fn straight_line_features(x: &Tensor<f64>, ws: &[ConvParams<f64>]) -> Vec<f64> {
    let s = x.shape();
    let mut cur: Vec<f64> = x.data().to_vec();
    let mut c_in = s.c;
    for p in ws {
        let c_out = p.c_out();
        let mut next = vec![0.0; c_out * s.h * s.w];
        for co in 0..c_out {
            for y in 0..s.h as isize {
                for xx in 0..s.w as isize {
                    let mut acc = p.bias[co];
                    for ci in 0..c_in {
                        for ky in -1..=1isize {
                            for kx in -1..=1isize {
                                let (iy, ix) = (y + ky, xx + kx);
                                if iy < 0 || ix < 0 || iy >= s.h as isize || ix >= s.w as isize {
                                    continue;
                                }
                                let v = cur[(ci * s.h + iy as usize) * s.w + ix as usize];
                                acc += v * p.weight.at(co, ci, (ky + 1) as usize, (kx + 1) as usize);
                            }
                        }
                    }
                    next[(co * s.h + y as usize) * s.w + xx as usize] = acc.max(0.0);
                }
            }
        }
        cur = next;
        c_in = c_out;
    }
    cur
}

#[test]
fn perceptual_matches_dual_implementation() {
    let spec = FeatureExtractorSpec::parse("conv 3 2 3\nrelu\nconv 2 2 3\nrelu").unwrap();
    let ex = FeatureExtractor::<f32>::random(spec, 4).unwrap().cast::<f64>();
    let a = Tensor::<f64>::random_uniform(Shape::new(1, 3, 7, 6), 0.0, 1.0, 1);
    let b = Tensor::<f64>::random_uniform(a.shape(), 0.0, 1.0, 2);
    let (fa, fb) = (
        straight_line_features(&a, ex.weights().unwrap()),
        straight_line_features(&b, ex.weights().unwrap()),
    );
    let want = fa.iter().zip(&fb).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / fa.len() as f64;
    let got = perceptual_loss(&a, &b, &ex).unwrap();
    assert!((got - want).abs() < 1e-5, "{got} vs {want}");
}

#[test]
fn extractor_weights_stay_frozen() {
    let spec = FeatureExtractorSpec::parse("conv 3 4 3\nrelu").unwrap();
    let ex = FeatureExtractor::random(spec, 2).unwrap();
    let before = ex.to_weights_bytes().unwrap();
    let cfg = NetworkConfig {
        feature_maps: 4,
        num_blocks: 1,
        ..Default::default()
    };
    let mut state =
        TrainState::new(cfg.clone(), build_canonical(&cfg, 0).unwrap(), AdamConfig::default(), 0).unwrap();
    let raw = Tensor::random_uniform(Shape::new(1, 3, 8, 8), 0.0, 1.0, 1);
    let reference = Tensor::random_uniform(raw.shape(), 0.0, 1.0, 2);
    for _ in 0..3 {
        train_step(&mut state, &raw, &reference, &ex).unwrap();
    }
    assert_eq!(ex.to_weights_bytes().unwrap(), before);
}

fn short_run(seed: u64) -> Vec<u8> {
    let cfg = NetworkConfig {
        feature_maps: 8,
        num_blocks: 2,
        ..Default::default()
    };
    let mut state =
        TrainState::new(cfg.clone(), build_canonical(&cfg, seed).unwrap(), AdamConfig::default(), seed)
            .unwrap();
    let raw = Tensor::random_uniform(Shape::new(1, 3, 12, 12), 0.0, 1.0, 5);
    let reference = Tensor::random_uniform(raw.shape(), 0.0, 1.0, 6);
    for _ in 0..5 {
        train_step(&mut state, &raw, &reference, &FeatureExtractor::identity()).unwrap();
    }
    state.params.save_weights().unwrap()
}

#[test]
fn training_is_deterministic() {
    assert_eq!(short_run(3), short_run(3));
    assert_ne!(short_run(3), short_run(4));
}

#[test]
fn inference_ignores_dropout_seed() {
    let cfg = NetworkConfig {
        feature_maps: 4,
        ..Default::default()
    };
    let params = build_canonical(&cfg, 1).unwrap();
    let x = Tensor::random_uniform(Shape::new(1, 3, 10, 10), 0.0, 1.0, 1);
    let a = forward(&cfg, &params, &x, Mode::Infer, 1).unwrap();
    assert_eq!(a, forward(&cfg, &params, &x, Mode::Infer, 2).unwrap());
    assert_ne!(
        forward(&cfg, &params, &x, Mode::Train, 1).unwrap(),
        forward(&cfg, &params, &x, Mode::Train, 2).unwrap()
    );
}
