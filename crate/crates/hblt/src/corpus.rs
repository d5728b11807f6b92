//! Corpus files.
//!
//! The corpus holds one sample per line as `class<TAB>tok,tok,...`. The
//! latent sidecar has matching line numbers; each line lists the latent
//! layers top-down as space-separated strings of `0`/`1`.

use crate::sample::SequenceSample;
use crate::tree::{HbltSpec, LatentTree};
use crate::{HbltError, Result};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub spec: HbltSpec,
    pub wiring: String,
    /// Parent index of every node, per layer below the top.
    pub parents: Vec<Vec<usize>>,
    pub rho0: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl CorpusMeta {
    pub fn new(tree: &LatentTree, samples: usize, seed: u64) -> Self {
        Self {
            spec: tree.spec.clone(),
            wiring: "round-robin: node i has parent i mod (size of layer above); class k designates top latent k mod N_0".into(),
            parents: tree.parents[1..].to_vec(),
            rho0: (0..tree.sizes[0]).map(|j| tree.rho0(j)).collect(),
            samples,
            seed,
        }
    }
}

/// A parsed corpus line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLine {
    pub class: usize,
    pub tokens: Vec<usize>,
}

pub fn write_corpus<W: Write>(out: W, samples: &[SequenceSample]) -> Result<()> {
    let mut w = BufWriter::new(out);
    for s in samples {
        let toks: Vec<String> = s.tokens.iter().map(|t| t.to_string()).collect();
        writeln!(w, "{}\t{}", s.class, toks.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_latents<W: Write>(out: W, samples: &[SequenceSample]) -> Result<()> {
    let mut w = BufWriter::new(out);
    for s in samples {
        let n = s.latents.len() - 1;
        let layers: Vec<String> = s.latents[..n]
            .iter()
            .map(|l| l.iter().map(|b| if *b { '1' } else { '0' }).collect())
            .collect();
        writeln!(w, "{}", layers.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_meta(path: &Path, meta: &CorpusMeta) -> Result<()> {
    let f = File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(f), meta)?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<CorpusMeta> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn parse_err(line: usize, msg: impl Into<String>) -> HbltError {
    HbltError::Parse { line: line + 1, msg: msg.into() }
}

pub fn read_corpus<R: std::io::Read>(input: R) -> Result<Vec<CorpusLine>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (class, toks) = line.split_once('\t').ok_or_else(|| parse_err(i, "missing tab"))?;
        let class = class.parse().map_err(|_| parse_err(i, "bad class label"))?;
        let tokens = toks
            .split(',')
            .map(|t| t.parse().map_err(|_| parse_err(i, format!("bad token {t:?}"))))
            .collect::<Result<Vec<usize>>>()?;
        if tokens.is_empty() {
            return Err(parse_err(i, "empty sequence"));
        }
        out.push(CorpusLine { class, tokens });
    }
    Ok(out)
}

/// Latent layers per sample, top layer first.
pub fn read_latents<R: std::io::Read>(input: R) -> Result<Vec<Vec<Vec<bool>>>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let layers = line
            .split(' ')
            .map(|l| {
                l.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(parse_err(i, format!("bad latent bit {c:?}"))),
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<bool>>>>()?;
        out.push(layers);
    }
    Ok(out)
}
