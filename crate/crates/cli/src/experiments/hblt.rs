//! Token co-occurrence in sampled HBLT corpora.

use super::{num, CsvFile};
use crate::config::CooccurConfig;
use crate::error::CliError;
use joma_hblt::{
    analytic_cooccur_pair, approx_cooccur, empirical_cooccur, exact_cooccur, sample, LatentTree, ENUMERATION_LIMIT,
};
use joma_num::{Exec, RngSeed};

pub const COOCCUR_HEADER: &[&str] = &["l", "m", "height", "analytic", "approx", "exact", "empirical", "std_err"];

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub l: usize,
    pub m: usize,
    pub height: usize,
    pub analytic: f64,
    pub approx: f64,
    /// `None` when the tree is too large to enumerate.
    pub exact: Option<f64>,
    pub empirical: f64,
    pub std_err: f64,
}

pub struct CooccurReport {
    pub rows: Vec<PairRow>,
}

impl CooccurReport {
    pub fn files(&self) -> Vec<CsvFile> {
        let mut f = CsvFile::with_header("cooccur.csv", COOCCUR_HEADER);
        for r in &self.rows {
            f.push(vec![
                r.l.to_string(),
                r.m.to_string(),
                r.height.to_string(),
                num(r.analytic),
                num(r.approx),
                r.exact.map(num).unwrap_or_default(),
                num(r.empirical),
                num(r.std_err),
            ]);
        }
        vec![f]
    }

    /// Largest `|analytic − empirical| / std_err` over pairs.
    pub fn max_z(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.analytic - r.empirical).abs() / r.std_err.max(1e-12))
            .fold(0.0, f64::max)
    }

    /// Largest `|analytic − exact|` over pairs.
    pub fn max_exact_gap(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.exact.map(|e| (r.analytic - e).abs()))
            .try_fold(0.0, |acc, g| g.map(|g| f64::max(acc, g)))
    }
}

/// Every leaf pair `l < m` that shares a latent ancestor, scored three ways.
pub fn cooccur(c: &CooccurConfig, exec: Exec) -> Result<CooccurReport, CliError> {
    let tree = LatentTree::new(&c.spec)?;
    let samples = sample(&tree, c.samples, RngSeed(c.seed), exec)?;
    let leaves = tree.sizes[tree.leaf_layer()];
    let enumerable = c.spec.latent_count() <= ENUMERATION_LIMIT;
    let mut pairs = Vec::new();
    for l in 0..leaves {
        for m in l + 1..leaves {
            if let Some((h, _)) = tree.cla(l, m)? {
                pairs.push((l, m, h));
            }
        }
    }
    let rows = exec.map(pairs.len(), |i| -> Result<PairRow, CliError> {
        let (l, m, height) = pairs[i];
        let emp = empirical_cooccur(&samples, l, m)?;
        Ok(PairRow {
            l,
            m,
            height,
            analytic: analytic_cooccur_pair(&tree, l, m)?,
            approx: approx_cooccur(height, c.spec.depth()),
            exact: if enumerable { Some(exact_cooccur(&tree, l, m)?) } else { None },
            empirical: emp.estimate(),
            std_err: emp.std_err(),
        })
    });
    Ok(CooccurReport {
        rows: rows.into_iter().collect::<Result<_, _>>()?,
    })
}
