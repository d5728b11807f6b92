use crate::config::TrainConfig;
use crate::forward::Example;
use crate::grad::{loss_and_grads, mean_loss};
use crate::metrics::{attention_entropy, MetricsRow, MetricsSeries};
use crate::model::ModelParams;
use crate::optim::OptState;
use crate::{Result, TransformerError};
use joma_num::{stable_rank, Exec, Matrix, RngSeed};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub metrics: MetricsSeries,
    pub initial: ModelParams,
    pub params: ModelParams,
    /// Lower-layer matrices at every metrics snapshot, `[snapshot][layer]`.
    pub snapshots: Vec<Vec<Matrix>>,
}

fn snapshot(params: &ModelParams, step: usize, loss: f64, val: &[Example], cfg: &TrainConfig, exec: Exec) -> Result<(MetricsRow, Vec<Matrix>)> {
    let val_loss = if val.is_empty() { f64::NAN } else { mean_loss(params, val, cfg, exec)? };
    let entropy = if val.is_empty() {
        vec![f64::NAN; params.dims.layers]
    } else {
        attention_entropy(params, val, cfg.attention, cfg.window, exec)?
    };
    let lowers: Vec<Matrix> = params.train.layers.iter().map(|l| l.lower.clone()).collect();
    let srank = lowers.iter().map(|w| Ok(stable_rank(w)?)).collect::<Result<Vec<f64>>>()?;
    Ok((MetricsRow { step, loss, val_loss, entropy, srank }, lowers))
}

/// Trains from a seeded initialization. Batches are drawn with
/// replacement from `train_set`; metrics are evaluated on `val` every
/// `stride` steps, at step 0 and at the end.
pub fn train(cfg: &TrainConfig, train_set: &[Example], val: &[Example], exec: Exec) -> Result<TrainOutput> {
    train_observed(cfg, train_set, val, exec, &mut |_, _| {})
}

/// [`train`], also handing the parameters to `observe` at every snapshot.
pub fn train_observed(
    cfg: &TrainConfig,
    train_set: &[Example],
    val: &[Example],
    exec: Exec,
    observe: &mut dyn FnMut(usize, &ModelParams),
) -> Result<TrainOutput> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(TransformerError::Config("empty training set".into()));
    }
    let seed = RngSeed(cfg.seed);
    let mut params = ModelParams::init(cfg.dims, cfg.attention, cfg.init_scale, seed.derive(0))?;
    let initial = params.clone();
    let mut rng = seed.substream(1);
    let mut opt = OptState::new(cfg.optimizer, &params.train);
    let mut metrics = MetricsSeries::default();
    let mut snapshots = Vec::new();

    let mut last_loss = f64::NAN;
    for step in 0..cfg.steps {
        let batch: Vec<Example> = (0..cfg.batch)
            .map(|_| train_set[rng.random_range(0..train_set.len())].clone())
            .collect();
        let (loss, grads) = loss_and_grads(&params, &batch, cfg, exec).map_err(|e| match e {
            TransformerError::NonFinite => TransformerError::Divergence { step, loss: f64::NAN },
            e => e,
        })?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(TransformerError::Divergence { step, loss });
        }
        if step % cfg.stride == 0 {
            let (row, lw) = snapshot(&params, step, loss, val, cfg, exec)?;
            metrics.rows.push(row);
            snapshots.push(lw);
            observe(step, &params);
        }
        opt.update(&mut params.train, &grads, cfg.lr);
        if !params.train.is_finite() {
            return Err(TransformerError::Divergence { step, loss });
        }
        last_loss = loss;
    }
    // The final row's `loss` is that of the last batch, before its update.
    let (row, lw) = snapshot(&params, cfg.steps, last_loss, val, cfg, exec)?;
    metrics.rows.push(row);
    snapshots.push(lw);
    observe(cfg.steps, &params);
    Ok(TrainOutput {
        metrics,
        initial,
        params,
        snapshots,
    })
}
