//! Command-line front end.

use crate::config::Config;
use crate::error::CliError;
use crate::experiments::{self, ExperimentId};
use crate::output::{self, RunManifest};
use crate::{presets, verify};
use clap::{Args, CommandFactory, Parser, Subcommand};
use joma_hblt::{sample, write_corpus, write_latents, CorpusMeta, LatentTree};
use joma_num::par::configure_threads;
use joma_num::{Exec, RngSeed};
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "joma", version, about = "Run and verify JoMA experiments")]
struct Cli {
    /// Worker threads for data-parallel work.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run an experiment and write its CSVs and manifest.
    Run(RunArgs),
    /// Run a self-check suite and print a JSON report.
    Verify {
        /// invariants, oracles, gradcheck, bounds or all.
        #[arg(default_value = "all")]
        suite: String,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sample an HBLT corpus with its latent sidecar and metadata.
    GenCorpus(CommonArgs),
    /// List experiment ids and presets.
    List,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON config; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, in place of `$JOMA_OUT/<id>/<seed>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    id: String,
    /// Named config from `joma list`.
    #[arg(long)]
    preset: Option<String>,
    /// Number of seeds, for experiments that train several models.
    #[arg(long)]
    seeds: Option<usize>,
    /// Snapshot stride.
    #[arg(long)]
    stride: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

/// Splits `--key value` and `--key=value` pairs whose key is not a flag
/// of the chosen subcommand out of `args`, returning the remaining
/// arguments and the overrides in order.
pub fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>), CliError> {
    let cmd = Cli::command();
    let known = |sub: &str, name: &str| {
        let global = cmd.get_arguments().any(|a| a.get_long() == Some(name));
        global
            || name == "help"
            || cmd
                .find_subcommand(sub)
                .is_some_and(|s| s.get_arguments().any(|a| a.get_long() == Some(name)))
    };
    let Some(pos) = args.iter().skip(1).position(|a| a == "run" || a == "gen-corpus").map(|p| p + 1) else {
        return Ok((args, Vec::new()));
    };
    let sub = args[pos].clone();
    let mut kept: Vec<String> = args[..=pos].to_vec();
    let mut overrides = Vec::new();
    let mut it = args.into_iter().skip(pos + 1);
    while let Some(a) = it.next() {
        let Some(key) = a.strip_prefix("--") else {
            kept.push(a);
            continue;
        };
        let (name, inline) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (key.to_string(), None),
        };
        if known(&sub, &name) {
            kept.push(a);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| CliError::Config(format!("--{name} needs a value")))?,
        };
        overrides.push((name, value));
    }
    Ok((kept, overrides))
}

/// Starting config for `id` with `preset` applied.
pub fn preset_config(id: ExperimentId, preset: &str) -> Result<Config, CliError> {
    let c = match (id, preset) {
        (ExperimentId::Table1Ncorr, name) => Config::Table1Ncorr(presets::table1(name)?),
        (ExperimentId::EntropyLrSweep, "lr-sweep") => Config::EntropyLrSweep(presets::lr_sweep()),
        (ExperimentId::RankSeries, "rank-series") => Config::RankSeries(presets::rank_series()),
        _ => return Err(CliError::Config(format!("preset {preset} does not apply to {id}"))),
    };
    Ok(c)
}

fn resolve(
    base: Config,
    common: &CommonArgs,
    overrides: &[(String, String)],
    extra: &[(&str, String)],
) -> Result<Config, CliError> {
    let mut c = match &common.config {
        Some(path) => Config::parse_onto(&base, &std::fs::read_to_string(path)?)?,
        None => base,
    };
    for (k, v) in overrides {
        c.set(k, v)?;
    }
    for (k, v) in extra {
        c.set(k, v)?;
    }
    if let Some(s) = common.seed {
        c.set("seed", &s.to_string())?;
    }
    Ok(c)
}

pub fn main_with<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let (args, overrides) = split_overrides(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        configure_threads(t);
    }
    let exec = if cli.serial { Exec::Serial } else { Exec::Parallel };
    match cli.cmd {
        Cmd::Run(a) => run(a, &overrides, exec),
        Cmd::Verify { suite, report } => {
            let r = verify::run(suite.parse()?, exec)?;
            let json = serde_json::to_string_pretty(&r)?;
            println!("{json}");
            if let Some(p) = report {
                output::write_atomic(&p, format!("{json}\n").as_bytes())?;
            }
            match r.checks.iter().filter(|c| !c.pass).count() {
                0 => Ok(()),
                n => Err(CliError::Failed(n)),
            }
        }
        Cmd::GenCorpus(a) => gen_corpus(a, &overrides, exec),
        Cmd::List => {
            println!("experiments:");
            for id in ExperimentId::ALL {
                println!("  {:<24} {}", id.name(), id.describe());
            }
            println!("presets:");
            for p in presets::names() {
                println!("  {p}");
            }
            Ok(())
        }
    }
}

fn run(a: RunArgs, overrides: &[(String, String)], exec: Exec) -> Result<(), CliError> {
    let id: ExperimentId = a.id.parse()?;
    let base = match &a.preset {
        Some(p) => preset_config(id, p)?,
        None => Config::default_for(id),
    };
    let mut extra = Vec::new();
    if let Some(n) = a.seeds {
        extra.push(("seeds", n.to_string()));
    }
    if let Some(s) = a.stride {
        extra.push(("stride", s.to_string()));
    }
    let config = resolve(base, &a.common, overrides, &extra)?;
    if a.common.dump_config {
        println!("{}", config.to_json());
        return Ok(());
    }
    let dir = a.common.out.unwrap_or_else(|| output::run_dir(&output::out_root(), &config));
    let start = Instant::now();
    let files = experiments::run(&config, exec)?;
    let manifest = RunManifest::new(&config, &files, start.elapsed().as_secs_f64());
    output::write_run(&dir, &files, &manifest)?;
    println!("{}", dir.display());
    Ok(())
}

fn gen_corpus(a: CommonArgs, overrides: &[(String, String)], exec: Exec) -> Result<(), CliError> {
    let config = resolve(Config::default_for(ExperimentId::HbltCooccur), &a, overrides, &[])?;
    let Config::HbltCooccur(c) = &config else {
        unreachable!("resolved from the cooccur defaults")
    };
    if a.dump_config {
        println!("{}", config.to_json());
        return Ok(());
    }
    let dir = a
        .out
        .unwrap_or_else(|| output::out_root().join("corpus").join(c.seed.to_string()));
    let tree = LatentTree::new(&c.spec)?;
    let samples = sample(&tree, c.samples, RngSeed(c.seed), exec)?;
    let mut corpus = Vec::new();
    write_corpus(&mut corpus, &samples)?;
    let mut latents = Vec::new();
    write_latents(&mut latents, &samples)?;
    let meta = serde_json::to_vec_pretty(&CorpusMeta::new(&tree, c.samples, c.seed))?;
    output::write_atomic(&dir.join("corpus.txt"), &corpus)?;
    output::write_atomic(&dir.join("latents.txt"), &latents)?;
    output::write_atomic(&dir.join("meta.json"), &meta)?;
    println!("{}", dir.display());
    Ok(())
}
