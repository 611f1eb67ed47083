use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use hbac::gradcheck;
use hbac::harness::config::{parse_seeds, ExperimentConfig, Profile};
use hbac::harness::export::export_batch;
use hbac::harness::{run_batch, RunSummary};
use hbac::hierarchy::{run_phases, tracking_evaluation, LlMode, PhaseId};
use hbac::rng::{self, Stream};
use hbac::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;

#[derive(Parser)]
#[command(name = "hbac", version, about = "Backpropagated adaptive critics on the cart-pole")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config in `key = value` form.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    profile: Option<Profile>,
    /// Comma-separated seeds or ranges, e.g. `1,2,5..=9`.
    #[arg(long, value_parser = parse_seed_list)]
    seeds: Option<SeedList>,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn parse_seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a config and write CSV results.
    Run {
        #[command(flatten)]
        args: RunArgs,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Compare analytic gradients with central differences.
    Gradcheck {
        #[arg(long, default_value_t = 64)]
        configs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Train a two-level controller up to one phase and report it.
    Phase {
        #[arg(long, value_parser = parse_phase)]
        only: PhaseId,
        #[command(flatten)]
        args: RunArgs,
    },
}

fn parse_phase(s: &str) -> Result<PhaseId, String> {
    PhaseId::parse(s).ok_or_else(|| format!("unknown phase `{s}` (expected I, II, III or IV)"))
}

fn load(args: &RunArgs) -> hbac::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(p) = args.profile {
        cfg.apply_profile(p);
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = s.0.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_avg(v: Option<f64>, sd: Option<f64>) -> String {
    match (v, sd) {
        (None, _) => "n/a".into(),
        (Some(v), None) => format!("{v:.1}"),
        (Some(v), Some(sd)) => format!("{v:.1} (sd {sd:.1})"),
    }
}

fn print_summary(s: &RunSummary) {
    let mode = s.ll_mode.map_or(String::new(), |m| format!(" [{}]", m.name()));
    println!(
        "{}{} @ {} Hz: SR {}/{}  N_ave {}  M_ave {}",
        s.architecture.name(),
        mode,
        s.servo_rate_hz,
        s.successes,
        s.experiments,
        fmt_avg(s.n_ave, s.n_std),
        fmt_avg(s.m_ave, s.m_std),
    );
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_numeric_fault() { EXIT_NUMERIC } else { EXIT_CONFIG })
}

fn run(args: &RunArgs, out: &PathBuf) -> ExitCode {
    let cfg = match load(args) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let batch = match run_batch(&cfg) {
        Ok(b) => b,
        Err(e) => return fail(&e),
    };
    for o in &batch.outcomes {
        let status = match (&o.fault, o.success_trial()) {
            (Some(f), _) => format!("fault: {f}"),
            (None, Some(t)) => format!("success at trial {t}"),
            (None, None) => format!("no success in {} trials", o.trials.len()),
        };
        println!("seed {:>4}: {status}", o.seed);
    }
    print_summary(&batch.summary);
    if let Err(e) = export_batch(out, &cfg, &batch) {
        return fail(&e);
    }
    println!("wrote {}", out.display());
    if batch.faults().next().is_some() {
        ExitCode::from(EXIT_NUMERIC)
    } else {
        ExitCode::SUCCESS
    }
}

fn gradcheck_cmd(configs: usize, seed: u64) -> ExitCode {
    let t = std::time::Instant::now();
    let reports = match gradcheck::run_all(configs, seed) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for r in &reports {
        println!(
            "{:<26} {} configs  max rel err {:.2e}  (tol {:.0e})  {}",
            r.name,
            r.configs,
            r.max_rel_err,
            r.tolerance,
            if r.passed() { "ok" } else { "FAIL" }
        );
    }
    println!("{:.2}s", t.elapsed().as_secs_f64());
    if reports.iter().all(|r| r.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERIC)
    }
}

fn phase_cmd(only: PhaseId, args: &RunArgs) -> ExitCode {
    let cfg = match load(args) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if !cfg.architecture.is_two_level() {
        return fail(&Error::Config("phase runs need a two-level architecture".into()));
    }
    let lines: hbac::Result<Vec<(String, bool)>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let run = run_phases(&cfg, seed, Some(only))?;
            let mut line = format!("seed {seed:>4}:");
            for p in &run.phases {
                let r = &p.report;
                line += &format!(
                    "  {} trials {} steps {} {} metric {:.4}",
                    r.phase.name(),
                    r.trials,
                    r.steps,
                    if r.converged { "converged" } else { "not converged" },
                    r.metric
                );
            }
            let ll_trained = run.phases.len() >= 2 || cfg.architecture.variant() == hbac::agent::BacVariant::Direct;
            if cfg.ll_mode == LlMode::ExplicitRole && ll_trained && run.fault.is_none() && !run.phases.is_empty() {
                let errs = tracking_evaluation(&run.system, &cfg, 20, 200, &mut rng::stream(seed, Stream::Explore))?;
                let mean = errs.iter().sum::<f64>() / errs.len() as f64;
                line += &format!("  tracking {:.2} deg", mean.to_degrees());
            }
            if let Some(f) = &run.fault {
                line += &format!("  fault: {f}");
            }
            Ok((line, run.fault.is_some()))
        })
        .collect();
    match lines {
        Ok(lines) => {
            for (l, _) in &lines {
                println!("{l}");
            }
            if lines.iter().any(|(_, f)| *f) {
                ExitCode::from(EXIT_NUMERIC)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match &cli.command {
        Command::Run { args, out } => run(args, out),
        Command::Gradcheck { configs, seed } => gradcheck_cmd(*configs, *seed),
        Command::Phase { only, args } => phase_cmd(*only, args),
    }
}
