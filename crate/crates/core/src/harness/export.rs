//! CSV files written by a batch run.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a file
//! back gives bit-identical values. Missing values are empty fields, except
//! the summary averages, which read `NA` when no experiment succeeded.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{render, Architecture, ExperimentConfig};
use crate::harness::records::{ExperimentOutcome, PhaseReport, TerminalReason, TrialRecord};
use crate::harness::summary::{smooth_series, summarize, BatchResult, RunSummary, BIN_SIZE};
use crate::hierarchy::{LlMode, PhaseId};

pub const TRIALS_HEADER: [&str; 5] = ["seed", "trial", "steps", "terminal_reason", "mean_delta_plan"];
pub const SERIES_HEADER: [&str; 5] = ["seed", "bin_index", "mean_steps", "mean_delta", "partial"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "architecture",
    "servo_rate_hz",
    "ll_mode",
    "experiments",
    "successes",
    "n_ave",
    "m_ave",
];
pub const PHASES_HEADER: [&str; 6] = ["seed", "phase", "trials", "steps", "converged", "metric"];

const NA: &str = "NA";
const NO_MODE: &str = "none";

#[derive(Debug, Serialize, Deserialize)]
struct TrialRow {
    seed: u64,
    trial: usize,
    steps: usize,
    terminal_reason: String,
    mean_delta_plan: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    seed: u64,
    bin_index: usize,
    mean_steps: f64,
    mean_delta: Option<f64>,
    partial: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRow {
    architecture: String,
    servo_rate_hz: f64,
    ll_mode: String,
    experiments: usize,
    successes: usize,
    n_ave: String,
    m_ave: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PhaseRow {
    seed: u64,
    phase: String,
    trials: usize,
    steps: usize,
    converged: bool,
    metric: f64,
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(header)?;
    Ok(wr)
}

fn reader<R: Read>(r: R, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut rd = csv::Reader::from_reader(r);
    let got = rd.headers()?;
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Io(format!("unexpected csv header `{}`", got.iter().collect::<Vec<_>>().join(","))));
    }
    Ok(rd)
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn parse_opt_num(s: &str) -> Result<Option<f64>> {
    if s == NA {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Io(format!("bad number `{s}`")))
}

/// Trials of every experiment, seeds in the given order.
pub fn write_trials<W: Write>(w: W, outcomes: &[ExperimentOutcome]) -> Result<()> {
    let mut wr = writer(w, &TRIALS_HEADER)?;
    for o in outcomes {
        for t in &o.trials {
            wr.serialize(TrialRow {
                seed: o.seed,
                trial: t.trial,
                steps: t.steps,
                terminal_reason: t.terminal_reason.name().into(),
                mean_delta_plan: t.mean_delta_plan,
            })?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// `(seed, record)` rows in file order.
pub fn read_trials<R: Read>(r: R) -> Result<Vec<(u64, TrialRecord)>> {
    let mut rd = reader(r, &TRIALS_HEADER)?;
    rd.deserialize::<TrialRow>()
        .map(|row| {
            let row = row?;
            let terminal_reason = TerminalReason::parse(&row.terminal_reason)
                .ok_or_else(|| Error::Io(format!("bad terminal reason `{}`", row.terminal_reason)))?;
            Ok((
                row.seed,
                TrialRecord {
                    trial: row.trial,
                    steps: row.steps,
                    terminal_reason,
                    mean_delta_plan: row.mean_delta_plan,
                },
            ))
        })
        .collect()
}

/// Summary recomputed from trial rows. Every seed of `cfg` counts as an
/// experiment, including seeds without rows.
pub fn summary_from_trials(cfg: &ExperimentConfig, rows: &[(u64, TrialRecord)]) -> RunSummary {
    let mut by_seed: BTreeMap<u64, Vec<TrialRecord>> = BTreeMap::new();
    for (seed, t) in rows {
        by_seed.entry(*seed).or_default().push(t.clone());
    }
    let empty = Vec::new();
    summarize(
        cfg,
        cfg.seeds.iter().map(|s| by_seed.get(s).unwrap_or(&empty).as_slice()),
    )
}

pub fn write_series<W: Write>(w: W, outcomes: &[ExperimentOutcome], bin_size: usize) -> Result<()> {
    let mut wr = writer(w, &SERIES_HEADER)?;
    for o in outcomes {
        for b in smooth_series(&o.trials, bin_size).bins {
            wr.serialize(SeriesRow {
                seed: o.seed,
                bin_index: b.bin_index,
                mean_steps: b.mean_steps,
                mean_delta: b.mean_delta,
                partial: b.partial,
            })?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(w: W, summaries: &[RunSummary]) -> Result<()> {
    let mut wr = writer(w, &SUMMARY_HEADER)?;
    for s in summaries {
        wr.serialize(SummaryRow {
            architecture: s.architecture.name().into(),
            servo_rate_hz: s.servo_rate_hz,
            ll_mode: s.ll_mode.map_or(NO_MODE, LlMode::name).into(),
            experiments: s.experiments,
            successes: s.successes,
            n_ave: opt_num(s.n_ave),
            m_ave: opt_num(s.m_ave),
        })?;
    }
    wr.flush()?;
    Ok(())
}

/// Summary rows as written. Standard deviations are not part of the file
/// and come back as `None`.
pub fn read_summary<R: Read>(r: R) -> Result<Vec<RunSummary>> {
    let mut rd = reader(r, &SUMMARY_HEADER)?;
    rd.deserialize::<SummaryRow>()
        .map(|row| {
            let row = row?;
            let architecture = Architecture::parse(&row.architecture)
                .ok_or_else(|| Error::Io(format!("bad architecture `{}`", row.architecture)))?;
            let ll_mode = match row.ll_mode.as_str() {
                NO_MODE => None,
                m => Some(LlMode::parse(m).ok_or_else(|| Error::Io(format!("bad ll_mode `{m}`")))?),
            };
            Ok(RunSummary {
                architecture,
                servo_rate_hz: row.servo_rate_hz,
                ll_mode,
                experiments: row.experiments,
                successes: row.successes,
                n_ave: parse_opt_num(&row.n_ave)?,
                m_ave: parse_opt_num(&row.m_ave)?,
                n_std: None,
                m_std: None,
            })
        })
        .collect()
}

pub fn write_phases<W: Write>(w: W, outcomes: &[ExperimentOutcome]) -> Result<()> {
    let mut wr = writer(w, &PHASES_HEADER)?;
    for o in outcomes {
        for p in &o.phases {
            wr.serialize(PhaseRow {
                seed: o.seed,
                phase: p.phase.name().into(),
                trials: p.trials,
                steps: p.steps,
                converged: p.converged,
                metric: p.metric,
            })?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn read_phases<R: Read>(r: R) -> Result<Vec<(u64, PhaseReport)>> {
    let mut rd = reader(r, &PHASES_HEADER)?;
    rd.deserialize::<PhaseRow>()
        .map(|row| {
            let row = row?;
            let phase = PhaseId::parse(&row.phase).ok_or_else(|| Error::Io(format!("bad phase `{}`", row.phase)))?;
            Ok((
                row.seed,
                PhaseReport {
                    phase,
                    trials: row.trials,
                    steps: row.steps,
                    converged: row.converged,
                    metric: row.metric,
                },
            ))
        })
        .collect()
}

/// Write `trials.csv`, `series.csv`, `summary.csv`, `phases.csv` and the
/// effective `config.txt` into `dir`.
pub fn export_batch(dir: &Path, cfg: &ExperimentConfig, batch: &BatchResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_trials(File::create(dir.join("trials.csv"))?, &batch.outcomes)?;
    write_series(File::create(dir.join("series.csv"))?, &batch.outcomes, BIN_SIZE)?;
    write_summary(File::create(dir.join("summary.csv"))?, std::slice::from_ref(&batch.summary))?;
    write_phases(File::create(dir.join("phases.csv"))?, &batch.outcomes)?;
    std::fs::write(dir.join("config.txt"), render(cfg))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(seed: u64, trials: Vec<TrialRecord>) -> ExperimentOutcome {
        ExperimentOutcome {
            seed,
            trials,
            phases: Vec::new(),
            fault: None,
        }
    }

    fn rec(trial: usize, steps: usize, reason: TerminalReason, d: Option<f64>) -> TrialRecord {
        TrialRecord {
            trial,
            steps,
            terminal_reason: reason,
            mean_delta_plan: d,
        }
    }

    #[test]
    fn empty_trials_is_header_only() {
        let mut buf = Vec::new();
        write_trials(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "seed,trial,steps,terminal_reason,mean_delta_plan\n");
        let mut buf = Vec::new();
        write_summary(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "architecture,servo_rate_hz,ll_mode,experiments,successes,n_ave,m_ave\n"
        );
    }

    #[test]
    fn trials_round_trip() {
        let outs = vec![
            outcome(
                4,
                vec![
                    rec(1, 12, TerminalReason::FailureX, Some(0.1 + 0.2)),
                    rec(2, 7, TerminalReason::Budget, None),
                ],
            ),
            outcome(9, vec![rec(1, 5000, TerminalReason::Success, Some(1e-17))]),
        ];
        let mut buf = Vec::new();
        write_trials(&mut buf, &outs).unwrap();
        let back = read_trials(buf.as_slice()).unwrap();
        let flat: Vec<_> = outs
            .iter()
            .flat_map(|o| o.trials.iter().map(move |t| (o.seed, t.clone())))
            .collect();
        assert_eq!(back, flat);
    }

    #[test]
    fn summary_round_trip() {
        let s = RunSummary {
            architecture: Architecture::TwoLevelIndirect,
            servo_rate_hz: 50.0,
            ll_mode: Some(LlMode::ResponseInduction),
            experiments: 10,
            successes: 3,
            n_ave: Some(1.0 / 3.0),
            m_ave: None,
            n_std: None,
            m_std: None,
        };
        let mut buf = Vec::new();
        write_summary(&mut buf, std::slice::from_ref(&s)).unwrap();
        assert_eq!(read_summary(buf.as_slice()).unwrap(), vec![s]);
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(read_trials("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn recomputed_summary_counts_seeds_without_rows() {
        let mut cfg = ExperimentConfig::default();
        cfg.seeds = vec![1, 2, 3];
        let rows = vec![
            (1, rec(1, 3, TerminalReason::FailureTheta, None)),
            (1, rec(2, 9, TerminalReason::Success, None)),
        ];
        let s = summary_from_trials(&cfg, &rows);
        assert_eq!((s.experiments, s.successes), (3, 1));
        assert_eq!((s.n_ave, s.m_ave), (Some(2.0), Some(3.0)));
    }
}
