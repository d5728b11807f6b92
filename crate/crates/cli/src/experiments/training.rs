//! Transformer runs on HBLT corpora: NCorr tables, learning-rate sweeps
//! and stable-rank series.

use super::{num, CsvFile};
use crate::config::{LrSweepConfig, RankConfig, Table1Config, TrainSetup};
use crate::error::CliError;
use joma_hblt::{sample, LatentTree, SequenceSample};
use joma_num::{Exec, RngSeed};
use joma_transformer::{
    neuron_max_activations, ncorr, permutation_null, train, Example, MetricsSeries, NcorrLayer, TrainOutput,
};

pub const NCORR_HEADER: &[&str] = &["seed", "layer", "latent_id", "best_neuron", "ncorr"];
pub const TABLE1_SUMMARY: &[&str] = &["seed", "layer", "ncorr_mean", "ncorr_std", "null_mean"];
pub const LR_SUMMARY: &[&str] = &["lr", "terminal_entropy", "final_val_loss"];

pub fn metrics_header(layers: usize) -> Vec<String> {
    MetricsSeries::header(layers).split(',').map(String::from).collect()
}

fn metrics_csv(name: String, m: &MetricsSeries, layers: usize) -> CsvFile {
    let mut f = CsvFile::new(name, metrics_header(layers));
    for r in &m.rows {
        let mut row = vec![r.step.to_string(), num(r.loss), num(r.val_loss)];
        row.extend(r.entropy.iter().map(|v| num(*v)));
        row.extend(r.srank.iter().map(|v| num(*v)));
        f.push(row);
    }
    f
}

/// Train, validation and evaluation splits drawn from one seeded tree.
pub struct Corpus {
    pub tree: LatentTree,
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub eval: Vec<SequenceSample>,
}

pub fn corpus(setup: &TrainSetup, eval_samples: usize, seed: u64, exec: Exec) -> Result<Corpus, CliError> {
    let tree = LatentTree::new(&setup.corpus)?;
    let s = RngSeed(seed);
    let train_s = sample(&tree, setup.train_samples, s.derive(10), exec)?;
    let val_s = sample(&tree, setup.val_samples, s.derive(11), exec)?;
    let eval = sample(&tree, eval_samples, s.derive(12), exec)?;
    Ok(Corpus {
        train: train_s.iter().map(Example::from).collect(),
        val: val_s.iter().map(Example::from).collect(),
        eval,
        tree,
    })
}

fn fit(setup: &TrainSetup, c: &Corpus, seed: u64, exec: Exec) -> Result<TrainOutput, CliError> {
    Ok(train(&setup.train_config(seed), &c.train, &c.val, exec)?)
}

/// Latent layer compared against transformer layer `s`: the lowest latents
/// go with the first layer, and so on upward.
pub fn latent_layer(s: usize, latent_layers: usize) -> Option<usize> {
    (s < latent_layers).then(|| latent_layers - 1 - s)
}

pub struct SeedResult {
    pub seed: u64,
    pub metrics: MetricsSeries,
    /// Per compared layer: NCorr and its permutation null.
    pub layers: Vec<(NcorrLayer, NcorrLayer)>,
}

pub struct Table1Report {
    pub layers: usize,
    pub seeds: Vec<SeedResult>,
}

impl Table1Report {
    /// Mean over seeds of the per-seed mean NCorr at `layer`.
    pub fn mean_ncorr(&self, layer: usize) -> f64 {
        self.seeds.iter().map(|s| s.layers[layer].0.mean()).sum::<f64>() / self.seeds.len() as f64
    }

    pub fn mean_null(&self, layer: usize) -> f64 {
        self.seeds.iter().map(|s| s.layers[layer].1.mean()).sum::<f64>() / self.seeds.len() as f64
    }

    pub fn files(&self) -> Vec<CsvFile> {
        let mut out: Vec<CsvFile> = self
            .seeds
            .iter()
            .map(|s| metrics_csv(format!("metrics_seed{}.csv", s.seed), &s.metrics, self.layers))
            .collect();
        let mut nc = CsvFile::with_header("ncorr.csv", NCORR_HEADER);
        let mut sum = CsvFile::with_header("summary.csv", TABLE1_SUMMARY);
        for layer in 0..self.seeds.first().map_or(0, |s| s.layers.len()) {
            for s in &self.seeds {
                let (r, null) = &s.layers[layer];
                for (j, (b, v)) in r.best_neuron.iter().zip(&r.ncorr).enumerate() {
                    nc.push(vec![s.seed.to_string(), layer.to_string(), j.to_string(), b.to_string(), num(*v)]);
                }
                sum.push(vec![s.seed.to_string(), layer.to_string(), num(r.mean()), num(r.std()), num(null.mean())]);
            }
        }
        out.push(nc);
        out.push(sum);
        out
    }
}

fn table1_seed(c: &Table1Config, seed: u64, exec: Exec) -> Result<SeedResult, CliError> {
    let data = corpus(&c.setup, c.eval_samples, seed, exec)?;
    let out = fit(&c.setup, &data, seed, exec)?;
    let eval: Vec<Example> = data.eval.iter().map(Example::from).collect();
    let acts = neuron_max_activations(&out.params, &eval, c.setup.train_config(seed).arch(), exec)?;
    let latent_layers = data.tree.leaf_layer();
    let mut layers = Vec::new();
    for (s, a) in acts.iter().enumerate() {
        let Some(li) = latent_layer(s, latent_layers) else { break };
        let lat: Vec<Vec<bool>> = data.eval.iter().map(|x| x.latents[li].clone()).collect();
        layers.push((ncorr(a, &lat)?, permutation_null(a, &lat, RngSeed(seed).derive(13))?));
    }
    Ok(SeedResult {
        seed,
        metrics: out.metrics,
        layers,
    })
}

/// Trains `seeds` models on independently drawn corpora and scores each
/// latent against its best-matching hidden node.
pub fn table1(c: &Table1Config, exec: Exec) -> Result<Table1Report, CliError> {
    c.setup.validate()?;
    let seeds = exec.map(c.seeds, |i| table1_seed(c, c.seed + i as u64, exec));
    Ok(Table1Report {
        layers: c.setup.layers,
        seeds: seeds.into_iter().collect::<Result<_, _>>()?,
    })
}

pub struct LrSweepReport {
    pub layers: usize,
    pub lrs: Vec<f64>,
    pub runs: Vec<MetricsSeries>,
}

impl LrSweepReport {
    /// Mean attention entropy over layers at the last snapshot.
    pub fn terminal_entropy(&self, i: usize) -> f64 {
        let last = self.runs[i].rows.last().expect("at least one snapshot");
        last.entropy.iter().sum::<f64>() / last.entropy.len() as f64
    }

    pub fn final_val_loss(&self, i: usize) -> f64 {
        self.runs[i].rows.last().map_or(f64::NAN, |r| r.val_loss)
    }

    pub fn files(&self) -> Vec<CsvFile> {
        let mut out: Vec<CsvFile> = self
            .runs
            .iter()
            .enumerate()
            .map(|(i, m)| metrics_csv(format!("metrics_lr{i}.csv"), m, self.layers))
            .collect();
        let mut sum = CsvFile::with_header("summary.csv", LR_SUMMARY);
        for (i, lr) in self.lrs.iter().enumerate() {
            sum.push_nums(&[*lr, self.terminal_entropy(i), self.final_val_loss(i)]);
        }
        out.push(sum);
        out
    }
}

/// Same corpus and initialization, one run per learning rate.
pub fn lr_sweep(c: &LrSweepConfig, exec: Exec) -> Result<LrSweepReport, CliError> {
    c.setup.validate()?;
    if c.lrs.is_empty() {
        return Err(CliError::Config("lrs must not be empty".into()));
    }
    let data = corpus(&c.setup, 0, c.seed, exec)?;
    let runs = exec.map(c.lrs.len(), |i| {
        let mut s = c.setup.clone();
        s.lr = c.lrs[i];
        fit(&s, &data, c.seed, exec).map(|o| o.metrics)
    });
    Ok(LrSweepReport {
        layers: c.setup.layers,
        lrs: c.lrs.clone(),
        runs: runs.into_iter().collect::<Result<_, _>>()?,
    })
}

pub struct RankReport {
    pub layers: usize,
    pub metrics: MetricsSeries,
}

impl RankReport {
    pub fn files(&self) -> Vec<CsvFile> {
        vec![metrics_csv("metrics.csv".into(), &self.metrics, self.layers)]
    }
}

pub fn rank_series(c: &RankConfig, exec: Exec) -> Result<RankReport, CliError> {
    c.setup.validate()?;
    let data = corpus(&c.setup, 0, c.seed, exec)?;
    Ok(RankReport {
        layers: c.setup.layers,
        metrics: fit(&c.setup, &data, c.seed, exec)?.metrics,
    })
}
