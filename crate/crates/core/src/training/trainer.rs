use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{sgd_step, Adam};
use super::triplet::{batch_gradients, retrieval_top1, similarity_matrix, TripletBatch};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::grounding::GroundingParams;

pub const DEFAULT_MARGIN: f64 = 0.1;
pub const DEFAULT_LEARNING_RATE: f64 = 0.003;
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub clip_norm: f64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            learning_rate: DEFAULT_LEARNING_RATE,
            steps: 2000,
            batch_size: 8,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            clip_norm: DEFAULT_CLIP_NORM,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "margin must be > 0, got {}",
                self.margin
            )));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidBatch(format!(
                "batch size {} < 2",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    /// Batch loss divided by the batch size.
    pub loss: f64,
    pub retrieval_top1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GroundingParams,
    pub trace: Vec<TraceRow>,
}

/// Training stopped on a numerical failure; `last_good` holds the parameters
/// from before the failing step.
#[derive(Debug, thiserror::Error)]
#[error("training aborted at step {step}: {source}")]
pub struct TrainFailure {
    pub step: usize,
    #[source]
    pub source: Error,
    pub last_good: Box<GroundingParams>,
    pub trace: Vec<TraceRow>,
}

/// Triplet training loop. `on_step` sees every trace row together with the
/// parameters after that step's update, e.g. for periodic checkpoints.
pub fn train(
    dataset: &[Sample],
    initial: GroundingParams,
    config: &TrainConfig,
    mut on_step: impl FnMut(&TraceRow, &GroundingParams),
) -> std::result::Result<TrainOutcome, TrainFailure> {
    let fail = |step, source, params: &GroundingParams, trace: &Vec<TraceRow>| TrainFailure {
        step,
        source,
        last_good: Box::new(params.clone()),
        trace: trace.clone(),
    };
    let mut params = initial;
    let mut trace = Vec::with_capacity(config.steps);
    if let Err(e) = config.validate() {
        return Err(fail(0, e, &params, &trace));
    }
    if dataset.len() < config.batch_size {
        let e = Error::InvalidBatch(format!(
            "dataset of {} samples cannot fill a batch of {}",
            dataset.len(),
            config.batch_size
        ));
        return Err(fail(0, e, &params, &trace));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(&params, config.beta1, config.beta2, config.adam_eps);
    for step in 0..config.steps {
        let picks = index::sample(&mut rng, dataset.len(), config.batch_size);
        let samples: Vec<&Sample> = picks.iter().map(|i| &dataset[i]).collect();
        let outcome = TripletBatch::new(samples)
            .and_then(|batch| batch_gradients(&batch, &params, config.margin));
        let mut outcome = match outcome {
            Ok(o) => o,
            Err(e) => return Err(fail(step, e, &params, &trace)),
        };
        outcome.grads.clip_norm(config.clip_norm);

        let mut next = params.clone();
        match config.optimizer {
            OptimizerKind::Adam => adam.step(&mut next, &outcome.grads, config.learning_rate),
            OptimizerKind::Sgd => sgd_step(&mut next, &outcome.grads, config.learning_rate),
        }
        if !next.is_finite() {
            let e = Error::Numerical("parameters became non-finite".into());
            return Err(fail(step, e, &params, &trace));
        }
        params = next;

        let row = TraceRow {
            step,
            loss: outcome.loss / config.batch_size as f64,
            retrieval_top1: outcome.retrieval_top1,
        };
        on_step(&row, &params);
        trace.push(row);
    }
    Ok(TrainOutcome { params, trace })
}

/// Mean in-batch caption retrieval top-1 over `batches` random batches drawn
/// with `seed`.
pub fn evaluate_retrieval(
    dataset: &[Sample],
    params: &GroundingParams,
    batch_size: usize,
    batches: usize,
    seed: u64,
) -> Result<f64> {
    if batch_size < 2 || dataset.len() < batch_size {
        return Err(Error::InvalidBatch(format!(
            "cannot draw batches of {batch_size} from {} samples",
            dataset.len()
        )));
    }
    if batches == 0 {
        return Err(Error::InvalidArgument("need at least one batch".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..batches {
        let picks = index::sample(&mut rng, dataset.len(), batch_size);
        let batch = TripletBatch::new(picks.iter().map(|i| &dataset[i]).collect())?;
        total += retrieval_top1(&similarity_matrix(&batch, params)?);
    }
    Ok(total / batches as f64)
}
