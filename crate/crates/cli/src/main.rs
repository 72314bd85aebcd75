use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlr_core::harness::config::{DeltaRule, ExperimentConfig, ExperimentKind, LemmaSuite};
use mlr_core::harness::output::{json_f64, normalize_floats, write_csv_file, write_json_file, write_samples_csv};
use mlr_core::harness::trial::{run_trial_detailed, trial_model, TrialCell};
use mlr_core::harness::{
    convergence_trace, hardness_demo, phase_transition, run_lemma_suites, sample_complexity_sweep,
};
use mlr_core::initializer::InitMethod;
use mlr_core::model::generate;
use mlr_core::{Error, Result};
use serde_json::{json, Value};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "mlr", version, about = "Mixed linear regression recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sample set (CSV with columns x1..xk, y, z).
    Gen(Common),
    /// Run one trial: model, initialization, EM.
    Solve(Common),
    /// Sample-complexity sweep: smallest N reaching the target success rate.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Target success rate.
        #[arg(long)]
        target: Option<f64>,
    },
    /// Success rate on a grid of N/k ratios.
    Phase(Common),
    /// Mean error per iteration for each init method.
    Trace(Common),
    /// Monte-Carlo checks of the supporting lemmas.
    Lemmas {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Monte-Carlo draws for the cone suite.
        #[arg(long)]
        nmc: Option<usize>,
    },
    /// Build the SubsetSum gadget and search it for an exact mixed fit.
    Hardness {
        #[command(flatten)]
        common: Common,
        /// Comma-separated SubsetSum values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Cone,
    Matbound,
    Sim,
    Moment,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Grid,
    Proportion,
    Random,
}

impl From<InitArg> for InitMethod {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::Grid => InitMethod::Grid,
            InitArg::Proportion => InitMethod::Proportion,
            InitArg::Random => InitMethod::Random,
        }
    }
}

/// Flags shared by every subcommand. Flags override values from `--config`.
#[derive(Args)]
struct Common {
    /// Dimension (repeat or comma-separate for sweeps).
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Sample count.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    p1: Option<f64>,
    /// Grid resolution.
    #[arg(long)]
    delta: Option<f64>,
    /// EM iteration budget.
    #[arg(long)]
    t0: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Seed (base seed for multi-trial experiments).
    #[arg(long)]
    seed: Option<u64>,
    /// Initialization (repeat or comma-separate for traces).
    #[arg(long, value_enum, value_delimiter = ',')]
    init: Vec<InitArg>,
    #[arg(long, value_enum)]
    resample: Option<OnOff>,
    /// Output file (gen, solve, hardness) or directory (other subcommands).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.experiment = kind;
        if !self.k.is_empty() {
            cfg.k = self.k.clone();
        }
        if !self.n.is_empty() {
            cfg.n = self.n.clone();
        }
        if let Some(p) = self.p1 {
            cfg.p1 = p;
        }
        if let Some(d) = self.delta {
            cfg.delta = DeltaRule::Fixed(d);
        }
        if let Some(t) = self.t0 {
            cfg.t0 = t;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed_base = s;
        }
        if !self.init.is_empty() {
            cfg.init = self.init.iter().map(|&a| a.into()).collect();
        }
        if let Some(r) = self.resample {
            cfg.resample = matches!(r, OnOff::On);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn single_cell(&self, cfg: &ExperimentConfig) -> Result<TrialCell> {
        let (Some(&k), Some(&n)) = (cfg.k.first(), cfg.n.first()) else {
            return Err(Error::Config("k and n are required".into()));
        };
        Ok(TrialCell::from_config(cfg, k, n, cfg.init[0]))
    }
}

/// Creates `dir` and returns `dir/name`.
fn out_file(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn emit(summary: Value, out: Option<&Path>, file: &str) -> Result<()> {
    let summary = normalize_floats(summary);
    if let Some(dir) = out {
        write_json_file(&out_file(dir, file)?, &summary)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?
    );
    Ok(())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Returns whether every assertion of the command held.
fn run(cli: Cli) -> Result<bool> {
    let start = Instant::now();
    match cli.command {
        Command::Gen(common) => {
            let cfg = common.config(ExperimentKind::Convergence)?;
            let cell = common.single_cell(&cfg)?;
            let model = trial_model(&cell, cfg.seed_base)?;
            let samples = generate(&model, cell.n, cell.noise_sigma, cfg.seed_base)?;
            match &common.out {
                Some(path) => {
                    let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    write_samples_csv(std::io::BufWriter::new(f), &samples)?;
                }
                None => write_samples_csv(std::io::stdout().lock(), &samples)?,
            }
            if common.out.is_some() {
                let summary = json!({
                    "seed": cfg.seed_base,
                    "generator": mlr_core::rng::GENERATOR,
                    "k": cell.k,
                    "n": cell.n,
                    "p1": model.p1(),
                    "beta1": model.beta1(),
                    "beta2": model.beta2(),
                });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&normalize_floats(summary)).unwrap_or_default()
                );
            }
            Ok(true)
        }
        Command::Solve(common) => {
            let cfg = common.config(ExperimentKind::Convergence)?;
            let cell = common.single_cell(&cfg)?;
            let run = run_trial_detailed(&cell, cfg.seed_base)?;
            let summary = json!({
                "seed": cfg.seed_base,
                "k": cell.k,
                "n": cell.n,
                "p1": cell.p1,
                "delta": run.delta,
                "init_method": cell.init.as_str(),
                "resample": cell.resample,
                "t0": cell.t0,
                "iterations_used": run.trace.iterations_used(),
                "final_err": run.trace.final_err(),
                "exact": run.exact,
                "degenerate_fallback": run.init.degenerate_fallback,
                "estimate": to_value(&run.trace.estimate),
                "truth": { "beta1": run.model.beta1(), "beta2": run.model.beta2() },
                "trace": to_value(&run.trace.records),
                "wall_time": json_f64(start.elapsed().as_secs_f64()),
            });
            let summary = normalize_floats(summary);
            let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
            if let Some(path) = &common.out {
                std::fs::write(path, text.clone() + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            println!("{text}");
            Ok(true)
        }
        Command::Sweep { common, target } => {
            let cfg = common.config(ExperimentKind::SampleComplexity)?;
            let target = target.unwrap_or(cfg.target);
            let result = sample_complexity_sweep(&cfg, target)?;
            if let Some(dir) = &common.out {
                write_csv_file(&out_file(dir, "sweep.csv")?, &result.rows)?;
                write_csv_file(&out_file(dir, "cells.csv")?, &result.cells.summaries)?;
                write_csv_file(&out_file(dir, "trials.csv")?, &result.cells.records)?;
            }
            let summary = json!({
                "experiment": "sample_complexity",
                "target": target,
                "config": to_value(&cfg),
                "rows": to_value(&result.rows),
                "wall_time": start.elapsed().as_secs_f64(),
            });
            emit(summary, common.out.as_deref(), "summary.json")?;
            Ok(true)
        }
        Command::Phase(common) => {
            let cfg = common.config(ExperimentKind::PhaseTransition)?;
            let runs = phase_transition(&cfg)?;
            if let Some(dir) = &common.out {
                write_csv_file(&out_file(dir, "phase.csv")?, &runs.summaries)?;
                write_csv_file(&out_file(dir, "trials.csv")?, &runs.records)?;
            }
            let summary = json!({
                "experiment": "phase_transition",
                "config": to_value(&cfg),
                "cells": to_value(&runs.summaries),
                "wall_time": start.elapsed().as_secs_f64(),
            });
            emit(summary, common.out.as_deref(), "summary.json")?;
            Ok(true)
        }
        Command::Trace(common) => {
            let cfg = common.config(ExperimentKind::Convergence)?;
            let trace = convergence_trace(&cfg)?;
            if let Some(dir) = &common.out {
                write_csv_file(&out_file(dir, "trace_mean.csv")?, &trace.means)?;
                write_csv_file(&out_file(dir, "trace_points.csv")?, &trace.points)?;
            }
            let summary = json!({
                "experiment": "convergence",
                "config": to_value(&cfg),
                "k": trace.k,
                "n": trace.n,
                "failed": trace.failed,
                "means": to_value(&trace.means),
                "wall_time": start.elapsed().as_secs_f64(),
            });
            emit(summary, common.out.as_deref(), "summary.json")?;
            Ok(true)
        }
        Command::Lemmas { common, suite, nmc } => {
            let mut cfg = common.config(ExperimentKind::LemmaSuite)?;
            cfg.lemma.suites = match suite {
                SuiteArg::Cone => vec![LemmaSuite::Cone],
                SuiteArg::Matbound => vec![LemmaSuite::Matbound],
                SuiteArg::Sim => vec![LemmaSuite::Sim],
                SuiteArg::Moment => vec![LemmaSuite::Moment],
                SuiteArg::All => LemmaSuite::ALL.to_vec(),
            };
            if let Some(n) = nmc {
                cfg.lemma.n_mc = n;
            }
            let report = run_lemma_suites(&cfg.lemma, cfg.seed_base, cfg.execution)?;
            if let Some(dir) = &common.out {
                write_csv_file(&out_file(dir, "lemmas.csv")?, &report.checks)?;
            }
            let summary = json!({
                "experiment": "lemma_suite",
                "seed": cfg.seed_base,
                "all_passed": report.all_passed(),
                "verdicts": to_value(&report.verdicts),
                "wall_time": start.elapsed().as_secs_f64(),
            });
            emit(summary, common.out.as_deref(), "summary.json")?;
            Ok(report.all_passed())
        }
        Command::Hardness { common, values } => {
            let outcome = hardness_demo(&values)?;
            println!("{}", outcome.message());
            if let Some(path) = &common.out {
                let mut v = to_value(&outcome);
                if let Value::Object(o) = &mut v {
                    o.insert("message".into(), Value::String(outcome.message()));
                }
                write_json_file(path, &v)?;
            }
            Ok(true)
        }
    }
}

fn report_error(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(u8::try_from(code).unwrap_or(EXIT_USAGE));
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            report_error("assertion", "one or more checks failed; see the summary");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            match e {
                Error::Config(_) | Error::InvalidInput(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(EXIT_RUNTIME),
            }
        }
    }
}
