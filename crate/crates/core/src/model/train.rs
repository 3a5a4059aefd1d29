use super::network::{loss_and_gradients, Mode};
use super::{mix_seed, NetworkConfig, ParameterStore};
use crate::error::{Error, Result};
use crate::loss::{FeatureExtractor, LossReport};
use crate::tensor::{adam_update, AdamConfig, AdamState, Tensor};

/// Parameters, optimizer moments and counters for single-writer training.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub config: NetworkConfig,
    pub params: ParameterStore<f32>,
    pub adam: AdamConfig,
    /// (weight, bias) moments per layer, in store order.
    moments: Vec<(AdamState<f32>, AdamState<f32>)>,
    pub step: u64,
    pub epoch: u32,
    pub seed: u64,
}

impl TrainState {
    pub fn new(
        config: NetworkConfig,
        params: ParameterStore<f32>,
        adam: AdamConfig,
        seed: u64,
    ) -> Result<Self> {
        params.check_config(&config)?;
        let moments = params
            .layers()
            .iter()
            .map(|(_, p)| (AdamState::new(p.weight.len()), AdamState::new(p.bias.len())))
            .collect();
        Ok(TrainState {
            config,
            params,
            adam,
            moments,
            step: 0,
            epoch: 0,
            seed,
        })
    }

    pub fn moments(&self) -> &[(AdamState<f32>, AdamState<f32>)] {
        &self.moments
    }
}

/// One forward pass with dropout, one loss evaluation, one backward pass
/// and one Adam update of every layer. The extractor is never modified.
pub fn train_step(
    state: &mut TrainState,
    raw: &Tensor<f32>,
    reference: &Tensor<f32>,
    extractor: &FeatureExtractor<f32>,
) -> Result<LossReport> {
    let seed = mix_seed(state.seed, state.step);
    let (report, grads) = loss_and_gradients(
        &state.config,
        &state.params,
        raw,
        reference,
        extractor,
        Mode::Train,
        seed,
    )?;
    for (term, value) in [
        ("l_mse", report.l_mse),
        ("l_vgg", report.l_vgg),
        ("l_total", report.l_total),
    ] {
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { term, value });
        }
    }
    for (((_, p), g), (mw, mb)) in state
        .params
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.moments.iter_mut())
    {
        adam_update(p.weight.data_mut(), g.weight.data(), mw, &state.adam);
        adam_update(&mut p.bias, &g.bias, mb, &state.adam);
    }
    state.step += 1;
    Ok(report)
}
