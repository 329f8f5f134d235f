//! Command-line pipeline: generate synthetic benchmark data, train models,
//! extract causal scores, evaluate against ground truth, and inspect lag
//! structure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use navar::checkpoint::{load_checkpoint, save_checkpoint};
use navar::config::{config_echo, load_config};
use navar::error::NavarError;
use navar::io::{
    load_scores_csv, load_truth_csv, save_csv, save_lag_records_csv, save_report_csv,
    save_roc_csv, save_scores_csv, save_truth_csv,
};
use navar::pipeline::{
    bench, default_bench_config, generate, load_data_files, train_timed, GenerateParams, ScmKind,
};
use navar::presets;
use navar_core::model::NavarConfig;
use navar_core::scoring::{auroc, extract_contributions, lag_mask_analysis, score_links};

#[derive(Parser)]
#[command(
    name = "navar",
    version,
    about = "Granger-causal structure discovery with neural additive vector autoregression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known causal structure.
    Generate {
        /// System to simulate: toy3, lag2, or linear-var.
        #[arg(long, value_parser = parse_scm)]
        scm: ScmKind,
        /// Time steps (default: 4000 for toy3/lag2, 1000 for linear-var).
        #[arg(long = "T")]
        t: Option<usize>,
        /// Variables (linear-var only; default 5).
        #[arg(long = "N")]
        n: Option<usize>,
        /// Lags (linear-var only; default 2).
        #[arg(long = "K")]
        k: Option<usize>,
        /// Link density in (0,1] (linear-var only; default 0.3).
        #[arg(long)]
        density: Option<f64>,
        /// Coefficient magnitude before stabilization (linear-var; default 0.8).
        #[arg(long)]
        coeff_scale: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Data CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Truth CSV path (default: `<out stem>.truth.csv`).
        #[arg(long)]
        out_truth: Option<PathBuf>,
    },
    /// Train a model on a data CSV and write a checkpoint.
    Train {
        /// Data CSV; repeat the flag to append replicate files.
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        /// Key=value config file (mutually exclusive with --preset).
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Named preset (see `navar preset --list`).
        #[arg(long)]
        preset: Option<String>,
        /// Override the config's epoch count.
        #[arg(long)]
        epochs: Option<usize>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_model: PathBuf,
        /// Per-epoch loss curve CSV with the config echoed in its header.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Treat the first data row as values, not column names.
        #[arg(long, action = ArgAction::SetTrue)]
        no_header: bool,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
    },
    /// Score causal links with a trained model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out_scores: PathBuf,
        #[arg(long, action = ArgAction::SetTrue)]
        no_header: bool,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
    },
    /// Evaluate a score matrix against a ground-truth adjacency.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Drop i→i entries before computing AUROC.
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        ignore_self_links: bool,
        /// ROC operating points CSV.
        #[arg(long)]
        out_roc: Option<PathBuf>,
    },
    /// Per-lag score build-up for one pair, by masking a fitted MLP model.
    Lags {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        /// Ordered pair `from,to`, 1-indexed (e.g. `2,1` for x2 → x1).
        #[arg(long)]
        pair: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, action = ArgAction::SetTrue)]
        no_header: bool,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
    },
    /// Run generate → train → score → eval over several seeds.
    Bench {
        #[arg(long, value_parser = parse_scm)]
        scm: ScmKind,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long = "T")]
        t: Option<usize>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long)]
        density: Option<f64>,
        #[arg(long)]
        coeff_scale: Option<f64>,
    },
    /// List or show the built-in hyperparameter presets.
    Preset {
        #[arg(long, action = ArgAction::SetTrue)]
        list: bool,
        /// Print one preset as a loadable key=value config.
        #[arg(long)]
        show: Option<String>,
    },
}

fn parse_scm(s: &str) -> Result<ScmKind, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn resolve_config(
    config_path: &Option<PathBuf>,
    preset: &Option<String>,
    epochs: Option<usize>,
    seed: Option<u64>,
    fallback: NavarConfig,
) -> navar::Result<NavarConfig> {
    let mut config = if let Some(path) = config_path {
        load_config(path)?
    } else if let Some(name) = preset {
        presets::find(name)?.to_config()
    } else {
        fallback
    };
    if let Some(e) = epochs {
        config.epochs = e;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn default_truth_path(out: &Path) -> PathBuf {
    match out.extension() {
        Some(ext) => out.with_extension(format!("truth.{}", ext.to_string_lossy())),
        None => out.with_extension("truth.csv"),
    }
}

fn parse_pair(pair: &str, n: usize) -> navar::Result<(usize, usize)> {
    let err = || {
        NavarError::Usage(format!(
            "--pair expects `from,to` with 1-indexed variables, got `{pair}`"
        ))
    };
    let (a, b) = pair.split_once(',').ok_or_else(err)?;
    let from: usize = a.trim().parse().map_err(|_| err())?;
    let to: usize = b.trim().parse().map_err(|_| err())?;
    if from == 0 || to == 0 || from > n || to > n {
        return Err(NavarError::Usage(format!(
            "--pair {pair} out of range for {n} variables (1..={n})"
        )));
    }
    Ok((from - 1, to - 1))
}

fn run(command: Command) -> navar::Result<()> {
    match command {
        Command::Generate {
            scm,
            t,
            n,
            k,
            density,
            coeff_scale,
            seed,
            out,
            out_truth,
        } => {
            let params = GenerateParams {
                t,
                n,
                k,
                density,
                coeff_scale,
            };
            let dataset = generate(scm, params, seed)?;
            save_csv(&out, &dataset, ',')?;
            let truth_path = out_truth.unwrap_or_else(|| default_truth_path(&out));
            let truth = dataset
                .truth
                .as_ref()
                .expect("generators always provide truth");
            save_truth_csv(&truth_path, truth, &dataset.variable_names)?;
            println!(
                "wrote {} ({} steps × {} variables) and {}",
                out.display(),
                dataset.total_steps(),
                dataset.n(),
                truth_path.display()
            );
            Ok(())
        }
        Command::Train {
            data,
            config,
            preset,
            epochs,
            seed,
            out_model,
            report,
            no_header,
            delimiter,
        } => {
            let cfg = resolve_config(&config, &preset, epochs, seed, NavarConfig::default())?;
            let dataset = load_data_files(&data, !no_header, delimiter)?;
            let (model, train_report) = train_timed(&dataset, &cfg)?;
            save_checkpoint(&out_model, &model)?;
            if let Some(report_path) = report {
                let mut echo = config_echo(&cfg);
                echo.push((
                    "wall_clock_seconds".into(),
                    format!("{:.3}", train_report.wall_clock_seconds),
                ));
                save_report_csv(
                    &report_path,
                    &echo,
                    &train_report.train_loss,
                    &train_report.val_mse,
                )?;
            }
            println!(
                "trained {} epochs in {:.1}s; final loss {:.6}; wrote {}",
                train_report.epochs_run,
                train_report.wall_clock_seconds,
                train_report.train_loss.last().copied().unwrap_or(f64::NAN),
                out_model.display()
            );
            Ok(())
        }
        Command::Score {
            model,
            data,
            out_scores,
            no_header,
            delimiter,
        } => {
            let model = load_checkpoint(&model)?;
            let dataset = load_data_files(&data, !no_header, delimiter)?;
            let contribs = extract_contributions(&model, &dataset)?;
            let scores = score_links(&contribs)?;
            save_scores_csv(&out_scores, &scores, &dataset.variable_names)?;
            println!("wrote {} ({}×{} scores)", out_scores.display(), scores.n, scores.n);
            Ok(())
        }
        Command::Eval {
            scores,
            truth,
            ignore_self_links,
            out_roc,
        } => {
            let scores = load_scores_csv(&scores)?;
            let truth = load_truth_csv(&truth)?;
            let roc = auroc(&scores, &truth, ignore_self_links)?;
            println!("{:.6}", roc.auroc);
            if let Some(path) = out_roc {
                save_roc_csv(&path, &roc)?;
            }
            Ok(())
        }
        Command::Lags {
            model,
            data,
            pair,
            out,
            no_header,
            delimiter,
        } => {
            let model = load_checkpoint(&model)?;
            let dataset = load_data_files(&data, !no_header, delimiter)?;
            let (from, to) = parse_pair(&pair, model.n())?;
            let records = lag_mask_analysis(&model, &dataset, from, to)?;
            save_lag_records_csv(&out, &records)?;
            println!("wrote {} ({} lags)", out.display(), records.len());
            Ok(())
        }
        Command::Bench {
            scm,
            trials,
            seed_base,
            config,
            preset,
            t,
            n,
            k,
            density,
            coeff_scale,
        } => {
            let cfg = resolve_config(&config, &preset, None, None, default_bench_config(scm))?;
            let params = GenerateParams {
                t,
                n,
                k,
                density,
                coeff_scale,
            };
            let outcome = bench(scm, params, trials, seed_base, &cfg);
            println!(
                "AUROC mean={:.6} std={:.6} trials={}",
                outcome.mean,
                outcome.std,
                outcome.aurocs.len()
            );
            if outcome.failures > 0 {
                println!("failed trials: {}", outcome.failures);
            }
            Ok(())
        }
        Command::Preset { list, show } => {
            if let Some(name) = show {
                let preset = presets::find(&name)?;
                for (key, value) in config_echo(&preset.to_config()) {
                    println!("{key}={value}");
                }
            } else if list {
                for p in presets::PRESETS {
                    println!(
                        "{:24} {:4} K={:<2} H={:<3} layers={} batch={:<3} lr={:<7} lambda={:<6} mu={}",
                        p.name,
                        p.backbone.as_str(),
                        p.k,
                        p.hidden_units,
                        p.hidden_layers,
                        p.batch_size,
                        p.learning_rate,
                        p.lambda,
                        p.mu
                    );
                }
            } else {
                return Err(NavarError::Usage(
                    "preset needs --list or --show <name>".into(),
                ));
            }
            Ok(())
        }
    }
}
