//! End-to-end runs: dataset generation, training with wall-clock timing,
//! and the multi-seed benchmark loop.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use navar_core::data::{generate_lag_scm, generate_linear_var, generate_toy3, TimeSeriesDataset};
use navar_core::model::{train, NavarConfig, NavarModel, TrainReport};
use navar_core::scoring::{auroc, extract_contributions, score_links};

use crate::error::{NavarError, Result};
use crate::io::load_csv;

/// Which synthetic system to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScmKind {
    /// Three variables, nonlinear links, all at lag 1.
    Toy3,
    /// Two variables with links at lags {3,4,5} and {2,4}.
    Lag2,
    /// Random sparse stationary linear VAR.
    LinearVar,
}

impl FromStr for ScmKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "toy3" => Ok(ScmKind::Toy3),
            "lag2" => Ok(ScmKind::Lag2),
            "linear-var" => Ok(ScmKind::LinearVar),
            other => Err(format!(
                "unknown scm `{other}` (expected toy3, lag2, or linear-var)"
            )),
        }
    }
}

impl ScmKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScmKind::Toy3 => "toy3",
            ScmKind::Lag2 => "lag2",
            ScmKind::LinearVar => "linear-var",
        }
    }
}

/// Generator arguments; unset fields fall back to per-system defaults.
#[derive(Debug, Clone, Copy, Default)]
pub struct GenerateParams {
    pub t: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub density: Option<f64>,
    pub coeff_scale: Option<f64>,
}

pub fn generate(scm: ScmKind, params: GenerateParams, seed: u64) -> Result<TimeSeriesDataset> {
    let ds = match scm {
        ScmKind::Toy3 => generate_toy3(params.t.unwrap_or(4000), seed)?,
        ScmKind::Lag2 => generate_lag_scm(params.t.unwrap_or(4000), seed)?,
        ScmKind::LinearVar => generate_linear_var(
            params.n.unwrap_or(5),
            params.t.unwrap_or(1000),
            params.k.unwrap_or(2),
            params.density.unwrap_or(0.3),
            params.coeff_scale.unwrap_or(0.8),
            seed,
        )?,
    };
    Ok(ds)
}

/// Load one or more data CSVs; extra files append their replicates.
pub fn load_data_files(paths: &[impl AsRef<Path>], has_header: bool, delimiter: char) -> Result<TimeSeriesDataset> {
    let mut merged: Option<TimeSeriesDataset> = None;
    for p in paths {
        let ds = load_csv(p.as_ref(), has_header, delimiter)?;
        match &mut merged {
            None => merged = Some(ds),
            Some(m) => {
                if ds.n() != m.n() {
                    return Err(NavarError::Usage(format!(
                        "{} has {} variables, earlier files have {}",
                        p.as_ref().display(),
                        ds.n(),
                        m.n()
                    )));
                }
                m.replicates.extend(ds.replicates);
            }
        }
    }
    merged.ok_or_else(|| NavarError::Usage("no data files given".into()))
}

/// Train with wall-clock timing filled into the report.
pub fn train_timed(dataset: &TimeSeriesDataset, config: &NavarConfig) -> Result<(NavarModel, TrainReport)> {
    let started = Instant::now();
    let (model, mut report) = train(dataset, config)?;
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok((model, report))
}

/// Known-good small config for benchmarking a generated system end to end.
pub fn default_bench_config(scm: ScmKind) -> NavarConfig {
    match scm {
        ScmKind::Toy3 => NavarConfig {
            k: 2,
            hidden_units: 16,
            batch_size: 64,
            learning_rate: 1e-3,
            lambda: 0.1,
            mu: 1e-4,
            epochs: 2000,
            ..NavarConfig::default()
        },
        ScmKind::Lag2 => NavarConfig {
            k: 8,
            hidden_units: 32,
            batch_size: 128,
            learning_rate: 1e-3,
            lambda: 0.05,
            mu: 1e-4,
            epochs: 3000,
            ..NavarConfig::default()
        },
        ScmKind::LinearVar => NavarConfig {
            k: 2,
            hidden_units: 16,
            batch_size: 64,
            learning_rate: 1e-3,
            lambda: 0.1,
            mu: 1e-4,
            epochs: 1500,
            ..NavarConfig::default()
        },
    }
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub aurocs: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub failures: usize,
}

/// One full pipeline per seed: generate → train → score → evaluate.
/// Failed trials are skipped and counted.
pub fn bench(
    scm: ScmKind,
    params: GenerateParams,
    trials: usize,
    seed_base: u64,
    config: &NavarConfig,
) -> BenchOutcome {
    let mut aurocs = Vec::with_capacity(trials);
    let mut failures = 0usize;
    for trial in 0..trials {
        let seed = seed_base + trial as u64;
        match bench_trial(scm, params, seed, config) {
            Ok(a) => aurocs.push(a),
            Err(err) => {
                eprintln!("trial {trial} (seed {seed}) failed: {err}");
                failures += 1;
            }
        }
    }
    let mean = if aurocs.is_empty() {
        f64::NAN
    } else {
        aurocs.iter().sum::<f64>() / aurocs.len() as f64
    };
    let std = if aurocs.len() < 2 {
        0.0
    } else {
        let var = aurocs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / aurocs.len() as f64;
        var.sqrt()
    };
    BenchOutcome {
        aurocs,
        mean,
        std,
        failures,
    }
}

fn bench_trial(scm: ScmKind, params: GenerateParams, seed: u64, config: &NavarConfig) -> Result<f64> {
    let dataset = generate(scm, params, seed)?;
    let truth = dataset.truth.clone().ok_or_else(|| {
        NavarError::Usage("generated dataset is missing its ground truth".into())
    })?;
    let mut config = config.clone();
    config.seed = seed;
    let (model, _) = train_timed(&dataset, &config)?;
    let contribs = extract_contributions(&model, &dataset)?;
    let scores = score_links(&contribs)?;
    let roc = auroc(&scores, &truth, true)?;
    Ok(roc.auroc)
}
