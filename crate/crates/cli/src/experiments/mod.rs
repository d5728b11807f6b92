//! One runner per experiment id. Runners return typed reports; each
//! report renders to CSV files with a declared header.

pub mod dynamics;
pub mod hblt;
pub mod nonlinear;
pub mod training;

use crate::config::Config;
use crate::error::CliError;
use joma_num::fmt::{csv_line, sig17};
use joma_num::Exec;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Thm1Invariants,
    Fig2SoftmaxEstimate,
    Fig3LinearGrowth,
    Fig4NonlinearEntropy,
    Thm4Ratio,
    ThetaTables,
    CriticalPoints,
    HbltCooccur,
    Table1Ncorr,
    EntropyLrSweep,
    RankSeries,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 11] = [
        ExperimentId::Thm1Invariants,
        ExperimentId::Fig2SoftmaxEstimate,
        ExperimentId::Fig3LinearGrowth,
        ExperimentId::Fig4NonlinearEntropy,
        ExperimentId::Thm4Ratio,
        ExperimentId::ThetaTables,
        ExperimentId::CriticalPoints,
        ExperimentId::HbltCooccur,
        ExperimentId::Table1Ncorr,
        ExperimentId::EntropyLrSweep,
        ExperimentId::RankSeries,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Thm1Invariants => "thm1-invariants",
            ExperimentId::Fig2SoftmaxEstimate => "fig2-softmax-estimate",
            ExperimentId::Fig3LinearGrowth => "fig3-linear-growth",
            ExperimentId::Fig4NonlinearEntropy => "fig4-nonlinear-entropy",
            ExperimentId::Thm4Ratio => "thm4-ratio",
            ExperimentId::ThetaTables => "theta-tables",
            ExperimentId::CriticalPoints => "critical-points",
            ExperimentId::HbltCooccur => "hblt-cooccur",
            ExperimentId::Table1Ncorr => "table1-ncorr",
            ExperimentId::EntropyLrSweep => "entropy-lr-sweep",
            ExperimentId::RankSeries => "rank-series",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            ExperimentId::Thm1Invariants => "coupled logit/weight flow and its first integral",
            ExperimentId::Fig2SoftmaxEstimate => "softmax logits against the weight-based estimate",
            ExperimentId::Fig3LinearGrowth => "linear-activation growth and erf ratio invariants",
            ExperimentId::Fig4NonlinearEntropy => "nonlinear flow toward random targets and attention entropy",
            ExperimentId::Thm4Ratio => "log-convergence ratio of a salient and a weak component",
            ExperimentId::ThetaTables => "theta1, theta2 and F over the affinity axis",
            ExperimentId::CriticalPoints => "stationary points of two-component mixture fields",
            ExperimentId::HbltCooccur => "token co-occurrence: analytic, enumerated and sampled",
            ExperimentId::Table1Ncorr => "latent/neuron normalized correlation after training",
            ExperimentId::EntropyLrSweep => "attention entropy across learning rates",
            ExperimentId::RankSeries => "stable rank of MLP lower weights over training",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment {s}")))
    }
}

/// A CSV file held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvFile {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvFile {
    pub fn new(name: impl Into<String>, header: Vec<String>) -> Self {
        Self {
            name: name.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn with_header(name: impl Into<String>, header: &[&str]) -> Self {
        Self::new(name, header.iter().map(|s| s.to_string()).collect())
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}: row width", self.name);
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| num(*v)).collect());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = csv_line(&self.header);
        for r in &self.rows {
            out.push_str(&csv_line(r));
        }
        out.into_bytes()
    }
}

/// A number cell: 17 significant digits, `nan` and `inf` spelled out.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        sig17(v)
    }
}

/// Runs `config` and renders its files.
pub fn run(config: &Config, exec: Exec) -> Result<Vec<CsvFile>, CliError> {
    Ok(match config {
        Config::Thm1Invariants(c) => dynamics::thm1(c)?.files(),
        Config::Fig2SoftmaxEstimate(c) => dynamics::fig2(c)?.files(),
        Config::Fig3LinearGrowth(c) => dynamics::fig3(c)?.files(),
        Config::Fig4NonlinearEntropy(c) => dynamics::fig4(c, exec)?.files(),
        Config::Thm4Ratio(c) => dynamics::thm4(c)?.files(),
        Config::ThetaTables(c) => nonlinear::theta_tables(c, exec)?.files(),
        Config::CriticalPoints(c) => nonlinear::critical_points(c)?.files(),
        Config::HbltCooccur(c) => hblt::cooccur(c, exec)?.files(),
        Config::Table1Ncorr(c) => training::table1(c, exec)?.files(),
        Config::EntropyLrSweep(c) => training::lr_sweep(c, exec)?.files(),
        Config::RankSeries(c) => training::rank_series(c, exec)?.files(),
    })
}

/// Declared file names and headers for `config`, without running it.
pub fn schema(config: &Config) -> Vec<(String, Vec<String>)> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<String>>();
    match config {
        Config::Thm1Invariants(c) => vec![
            ("trajectory.csv".into(), dynamics::coupled_header(c.tokens, c.nodes)),
            ("summary.csv".into(), s(dynamics::THM1_SUMMARY)),
        ],
        Config::Fig2SoftmaxEstimate(c) => vec![
            ("trajectory.csv".into(), dynamics::coupled_header(c.tokens, c.classes)),
            ("summary.csv".into(), s(dynamics::FIG2_SUMMARY)),
        ],
        Config::Fig3LinearGrowth(c) => vec![
            ("trajectory.csv".into(), dynamics::fig3_header(c.delta.len())),
            ("summary.csv".into(), s(dynamics::FIG3_SUMMARY)),
        ],
        Config::Fig4NonlinearEntropy(c) => {
            let mut v: Vec<(String, Vec<String>)> = (0..c.trials)
                .map(|i| (format!("trial_{i}.csv"), dynamics::fig4_header(c.dim)))
                .collect();
            v.push(("summary.csv".into(), dynamics::fig4_summary_header(c.dim)));
            v
        }
        Config::Thm4Ratio(c) => {
            let mut v: Vec<(String, Vec<String>)> = (0..c.targets.len())
                .map(|i| (format!("ratio_{i}.csv"), s(dynamics::THM4_SERIES)))
                .collect();
            v.push(("summary.csv".into(), s(dynamics::THM4_SUMMARY)));
            v
        }
        Config::ThetaTables(_) => vec![("theta.csv".into(), s(nonlinear::THETA_HEADER))],
        Config::CriticalPoints(c) => vec![("critical.csv".into(), nonlinear::critical_header(c.centers[0].len()))],
        Config::HbltCooccur(_) => vec![("cooccur.csv".into(), s(hblt::COOCCUR_HEADER))],
        Config::Table1Ncorr(c) => {
            let layers = c.setup.layers;
            let mut v: Vec<(String, Vec<String>)> = (0..c.seeds)
                .map(|i| (format!("metrics_seed{}.csv", c.seed + i as u64), training::metrics_header(layers)))
                .collect();
            v.push(("ncorr.csv".into(), s(training::NCORR_HEADER)));
            v.push(("summary.csv".into(), s(training::TABLE1_SUMMARY)));
            v
        }
        Config::EntropyLrSweep(c) => {
            let mut v: Vec<(String, Vec<String>)> = (0..c.lrs.len())
                .map(|i| (format!("metrics_lr{i}.csv"), training::metrics_header(c.setup.layers)))
                .collect();
            v.push(("summary.csv".into(), s(training::LR_SUMMARY)));
            v
        }
        Config::RankSeries(c) => vec![("metrics.csv".into(), training::metrics_header(c.setup.layers))],
    }
}
