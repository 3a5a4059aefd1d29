//! Overfits the network on a few synthetic pairs and prints the loss curve.
//!
//! `cargo run -p uwnet-core --example overfit -- [steps] [size]`

use std::time::Instant;

use uwnet_core::data::synthetic::underwater_pair;
use uwnet_core::model::{build_canonical, forward, train_step, Mode};
use uwnet_core::metrics::{psnr, RgbImage, DEFAULT_PEAK};
use uwnet_core::tensor::AdamConfig;
use uwnet_core::{FeatureExtractor, NetworkConfig, TrainState};

fn main() -> uwnet_core::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let steps = args.next().unwrap_or(500);
    let size = args.next().unwrap_or(64);

    let config = NetworkConfig::default();
    let params = build_canonical(&config, 0)?;
    let mut state = TrainState::new(config.clone(), params, AdamConfig::default(), 0)?;
    let extractor = FeatureExtractor::identity();
    let pairs: Vec<_> = (0..4)
        .map(|i| {
            let (raw, reference) = underwater_pair(size, size, 100 + i);
            (raw.to_tensor::<f32>(), reference.to_tensor::<f32>())
        })
        .collect();

    let start = Instant::now();
    for step in 0..steps {
        let (raw, reference) = &pairs[step % pairs.len()];
        let r = train_step(&mut state, raw, reference, &extractor)?;
        if step % 50 == 0 || step + 1 == steps {
            println!(
                "step {step:4}  l_mse {:.5}  l_total {:.5}  {:.1}s",
                r.l_mse,
                r.l_total,
                start.elapsed().as_secs_f64()
            );
        }
    }
    for (i, (raw, reference)) in pairs.iter().enumerate() {
        let out = forward(&config, &state.params, raw, Mode::Infer, 0)?;
        let reference = RgbImage::from_tensor(reference, 0)?;
        let before = psnr(&RgbImage::from_tensor(raw, 0)?, &reference, DEFAULT_PEAK)?.db();
        let after = psnr(&RgbImage::from_tensor(&out, 0)?, &reference, DEFAULT_PEAK)?.db();
        println!("pair {i}: psnr raw {before:.2} dB, enhanced {after:.2} dB");
    }
    Ok(())
}
