//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so every line is printed
//! whether it passes or not. Exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use hbac::agent::{train_critic_step, td_error, BacVariant, Learner};
use hbac::cartpole::{accelerations, CartPoleState, PhysicsParams};
use hbac::ffnet::NetworkConfig;
use hbac::gradcheck;
use hbac::harness::config::{Architecture, ExperimentConfig, Profile};
use hbac::harness::experiment::{agent_spec, identify_model, model_error, random_transitions, run_experiment, single_shape};
use hbac::harness::export::{export_batch, read_summary, read_trials, summary_from_trials, write_trials};
use hbac::harness::records::TrialRecord;
use hbac::harness::run_batch;
use hbac::hierarchy::{run_phases, tracking_evaluation, LlMode, PhaseId};
use hbac::induction::{induction_term, influence_error, InductionRule, RiParams};
use hbac::rng::{stream, Stream};
use hbac::Agent;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Run one criterion, add the runtime bound to its verdict and print it.
fn check(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let t = Instant::now();
    let v = f();
    let took = t.elapsed();
    let in_time = took < limit;
    let pass = v.pass && in_time;
    let time_note = if in_time {
        String::new()
    } else {
        format!(" [over time limit {:.0}s]", limit.as_secs_f64())
    };
    println!(
        "criterion {id:>2} {} {name}: {} ({:.2}s){time_note}",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        took.as_secs_f64()
    );
    pass
}

fn info(msg: impl AsRef<str>) {
    println!("   info: {}", msg.as_ref());
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn desk(arch: Architecture) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_architecture(arch);
    cfg.apply_profile(Profile::Desk);
    cfg
}

fn gradients() -> Verdict {
    let reports = gradcheck::run_all(64, 2024).expect("gradcheck");
    let worst: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {:.1e}", r.name, r.max_rel_err))
        .collect();
    verdict(reports.iter().all(|r| r.passed() && r.configs >= 50), worst.join(", "))
}

fn physics() -> Verdict {
    let p = PhysicsParams::<f64>::default();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let deg = -12.0 + 24.0 * (k as f64 + 0.5) / 50.0;
        let th = deg.to_radians();
        // force that cancels the angular acceleration at rest
        let f = (p.mass_cart + p.mass_pole) * p.gravity * th.tan();
        let (xdd, _) = accelerations(&CartPoleState::new(0.0, 0.0, th, 0.0), f, &p);
        worst = worst.max((xdd - p.gravity * th.tan()).abs());
    }
    let (xdd, thdd) = accelerations(&CartPoleState::zero(), 1.0, &p);
    let point_ok = (xdd - 0.975610).abs() < 1e-6 && (thdd + 0.731707).abs() < 1e-6;
    verdict(
        worst < 1e-9 && point_ok,
        format!("balanced-angle max err {worst:.1e}; unit force -> ({xdd:.6}, {thdd:.6})"),
    )
}

fn td_chain() -> Verdict {
    // s0 -> s1 -> s2 -> s0 with fixed rewards for leaving each state
    let gamma = 0.9f64;
    let r = [1.0, -0.5, 0.25];
    let cycle = (1.0 - gamma.powi(3)).recip();
    let v: Vec<f64> = (0..3)
        .map(|i| (r[i] + gamma * r[(i + 1) % 3] + gamma * gamma * r[(i + 2) % 3]) * cycle)
        .collect();
    let onehot = |i: usize| {
        let mut x = [0.0; 3];
        x[i] = 1.0;
        x
    };
    let cfg = NetworkConfig::new(3, 7, 1).expect("config");
    let mut critic = Learner::new(cfg, 0.05, 0.5, 0.3, &mut stream(3, Stream::Init)).expect("critic");
    let err = |c: &Learner<f64>| {
        (0..3)
            .map(|i| (c.net.eval(&onehot(i)).expect("eval")[0] - v[i]).abs())
            .fold(0.0f64, f64::max)
    };
    let mut s = 0;
    let mut reached = None;
    for n in 1..=50_000 {
        let next = (s + 1) % 3;
        let cache = critic.net.forward(&onehot(s)).expect("forward");
        let p_next = critic.net.eval(&onehot(next)).expect("eval")[0];
        let td = td_error(r[s], p_next, cache.output[0], gamma);
        train_critic_step(&mut critic, &cache, td).expect("step");
        s = next;
        if reached.is_none() && n % 100 == 0 && err(&critic) < 1e-2 {
            reached = Some(n);
        }
    }
    let e = err(&critic);
    verdict(
        e < 1e-2,
        format!("max |p - V| {e:.1e} after 50000 updates (first below 1e-2 at {reached:?})"),
    )
}

fn model_identification() -> Verdict {
    let cfg = ExperimentConfig::default();
    let mut ok = 0;
    let mut ratios = Vec::new();
    for seed in 1..=10u64 {
        let spec = agent_spec(&cfg, BacVariant::Indirect, single_shape(&cfg), cfg.td.gamma);
        let mut agent = Agent::new(&spec, &mut stream(seed, Stream::Init)).expect("agent");
        let model = agent.model.as_mut().expect("indirect agent has a model");
        let held_out = random_transitions(&cfg, 2000, &mut stream(seed, Stream::State));
        let before = model_error(model, &held_out).expect("error");
        identify_model(model, &cfg, 10_000, usize::MAX, false, &mut stream(seed, Stream::Explore)).expect("fit");
        let after = model_error(model, &held_out).expect("error");
        let ratio = before / after;
        if ratio >= 5.0 {
            ok += 1;
        }
        ratios.push(format!("{ratio:.1}"));
    }
    verdict(ok >= 8, format!("{ok}/10 seeds with >= 5x reduction (ratios {})", ratios.join(" ")))
}

fn successes(cfg: &ExperimentConfig) -> usize {
    run_batch(cfg).expect("batch").summary.successes
}

fn single_level() -> Verdict {
    let mut cfg = desk(Architecture::SingleIndirect);
    cfg.set_servo_rate(17.0);
    let b = run_batch(&cfg).expect("batch");
    let s = &b.summary;
    verdict(
        s.successes >= 2,
        format!(
            "17 Hz desk: {}/{} succeeded, N_ave {:?}, M_ave {:?}",
            s.successes, s.experiments, s.n_ave, s.m_ave
        ),
    )
}

fn servo_trend() -> Verdict {
    let count = |hz: f64| {
        let mut cfg = desk(Architecture::SingleIndirect);
        cfg.set_servo_rate(hz);
        successes(&cfg)
    };
    let (c17, c25, c50) = (count(17.0), count(25.0), count(50.0));
    verdict(
        c17 >= c50 && c25 >= c50,
        format!("successes 17 Hz {c17}, 25 Hz {c25}, 50 Hz {c50}"),
    )
}

fn gamma_sweep() {
    for gamma in [0.85, 0.9, 0.95] {
        let counts: Vec<String> = [17.0, 25.0, 50.0]
            .iter()
            .map(|&hz| {
                let mut cfg = desk(Architecture::SingleIndirect);
                cfg.set_servo_rate(hz);
                cfg.td.gamma = gamma;
                format!("{hz} Hz {}", successes(&cfg))
            })
            .collect();
        info(format!("gamma {gamma}: desk successes {}", counts.join(", ")));
    }
}

fn explicit_tracking() -> Verdict {
    let cfg = desk(Architecture::TwoLevelIndirect);
    let per_seed: Vec<f64> = (1..=10u64)
        .map(|seed| {
            let run = run_phases(&cfg, seed, Some(PhaseId::II)).expect("phases");
            if run.phases.len() < 2 || run.fault.is_some() {
                return f64::INFINITY;
            }
            let errs = tracking_evaluation(&run.system, &cfg, 20, 200, &mut stream(seed, Stream::Explore)).expect("eval");
            (errs.iter().sum::<f64>() / errs.len() as f64).to_degrees()
        })
        .collect();
    let ok = per_seed.iter().filter(|&&e| e < 2.0).count();
    let shown: Vec<String> = per_seed.iter().map(|e| format!("{e:.1}")).collect();
    verdict(ok >= 6, format!("{ok}/10 seeds under 2 deg (mean deg per seed: {})", shown.join(" ")))
}

/// Initial trial-averaged `|δ|`, and whether some window of 50 consecutive
/// trials reaches the target `|δ|` and length together.
fn induction_profile(trials: &[TrialRecord], min_delta: f64, min_steps: f64) -> (f64, bool, f64) {
    const W: usize = 50;
    let delta = |t: &TrialRecord| t.mean_delta_plan.unwrap_or(0.0);
    let head = &trials[..trials.len().min(W)];
    let initial = head.iter().map(delta).sum::<f64>() / head.len().max(1) as f64;
    let mut best = 0.0f64;
    let mut reached = false;
    for w in trials.windows(W) {
        let d = w.iter().map(delta).sum::<f64>() / W as f64;
        let s = w.iter().map(|t| t.steps as f64).sum::<f64>() / W as f64;
        best = best.max(d);
        reached |= d >= min_delta && s >= min_steps;
    }
    (initial, reached, best)
}

fn ri_seeds(cfg: &ExperimentConfig) -> (usize, Vec<String>) {
    let mut ok = 0;
    let mut notes = Vec::new();
    for seed in 1..=10u64 {
        let run = run_phases(cfg, seed, Some(PhaseId::II)).expect("phases");
        let Some(p2) = run.phases.get(1) else {
            notes.push("-".into());
            continue;
        };
        let (initial, reached, best) = induction_profile(&p2.trials, 0.175, 500.0);
        if initial < 0.05 && reached {
            ok += 1;
        }
        notes.push(format!("{initial:.3}->{best:.3}{}", if reached { "*" } else { "" }));
    }
    (ok, notes)
}

fn ri_config() -> ExperimentConfig {
    let mut cfg = desk(Architecture::TwoLevelIndirect);
    cfg.ll_mode = LlMode::ResponseInduction;
    cfg.ri.k1 = 0.35;
    cfg.ri.k2 = 0.14;
    cfg.hierarchy.plan_range_ll = 0.3;
    cfg
}

fn response_induction() -> Verdict {
    let (ok, notes) = ri_seeds(&ri_config());
    verdict(
        ok >= 3,
        format!("{ok}/10 seeds induced (|delta| first 50 trials -> best 50-trial window; * = >= 0.175 with >= 500 steps): {}", notes.join(" ")),
    )
}

fn ri_analytic_variant() {
    let mut cfg = ri_config();
    cfg.ri.rule = InductionRule::Analytic;
    let (ok, notes) = ri_seeds(&cfg);
    info(format!("analytic-gradient induction rule: {ok}/10 seeds induced: {}", notes.join(" ")));
}

fn induction_units() -> Verdict {
    let ri = RiParams::new(0.35, 0.14, vec![4]).expect("params");
    let e0: f64 = influence_error(&[0.0], 0.35, 0.14);
    let point = induction_term(0.14, 1.0, &ri);
    let expect = 0.35 * 0.14 * 0.14 * (-1.0f64).exp();
    let (mut arg, mut peak) = (0.0, 0.0f64);
    let n = 200_000;
    for k in 0..=n {
        let d = k as f64 / n as f64;
        let m = induction_term(d, 1.0, &ri).abs();
        if m > peak {
            peak = m;
            arg = d;
        }
    }
    let target = 0.14 / 2f64.sqrt();
    let zero_at_origin = induction_term(0.0, 1.0, &ri) == 0.0;
    let decays = induction_term(2.0, 1.0, &ri).abs() < 1e-6 * peak;
    let pass = (e0 + 0.35).abs() < 1e-12
        && (point - expect).abs() < 1e-9
        && (arg - target).abs() < 1e-4
        && zero_at_origin
        && decays;
    verdict(
        pass,
        format!("E(0) = {e0}, term(k2) = {point:.9}, peak at {arg:.5} (k2/sqrt2 = {target:.5})"),
    )
}

fn trials_csv(trials: &[TrialRecord], seed: u64) -> Vec<u8> {
    let outcome = hbac::harness::ExperimentOutcome {
        seed,
        trials: trials.to_vec(),
        phases: Vec::new(),
        fault: None,
    };
    let mut buf = Vec::new();
    write_trials(&mut buf, std::slice::from_ref(&outcome)).expect("csv");
    buf
}

fn determinism() -> Verdict {
    let mut single = desk(Architecture::SingleIndirect);
    single.set_servo_rate(17.0);
    single.seeds = (1..=5).collect();
    let mut ri = ri_config();
    ri.seeds = vec![3];
    let mut identical = true;
    for cfg in [&single, &ri] {
        for &seed in &cfg.seeds {
            let a = run_experiment(cfg, seed).expect("run");
            let b = run_experiment(cfg, seed).expect("run");
            identical &= trials_csv(&a.trials, seed) == trials_csv(&b.trials, seed);
        }
    }
    let dir = tempfile::tempdir().expect("tempdir");
    let batch = run_batch(&single).expect("batch");
    export_batch(dir.path(), &single, &batch).expect("export");
    let rows = read_trials(std::fs::File::open(dir.path().join("trials.csv")).expect("open")).expect("read");
    let recomputed = summary_from_trials(&single, &rows);
    let file = read_summary(std::fs::File::open(dir.path().join("summary.csv")).expect("open")).expect("read");
    let s = &batch.summary;
    let file_ok = file.len() == 1
        && file[0].experiments == s.experiments
        && file[0].successes == s.successes
        && file[0].n_ave == s.n_ave
        && file[0].m_ave == s.m_ave;
    verdict(
        identical && recomputed == *s && file_ok,
        format!(
            "trials.csv identical: {identical}; recomputed summary equal: {}; summary.csv equal: {file_ok} ({} successes)",
            recomputed == *s,
            s.successes
        ),
    )
}

fn main() {
    let mut all = true;
    all &= check(1, "gradient correctness", secs(10), gradients);
    all &= check(2, "physics oracle", secs(1), physics);
    all &= check(3, "critic TD convergence", secs(10), td_chain);
    all &= check(4, "model identification", secs(60), model_identification);
    all &= check(5, "single-level learning (desk)", secs(15 * 60), single_level);
    all &= check(6, "servo-rate trend", secs(15 * 60), servo_trend);
    gamma_sweep();
    all &= check(7, "explicit-role tracking", secs(10 * 60), explicit_tracking);
    all &= check(8, "response induction", secs(15 * 60), response_induction);
    ri_analytic_variant();
    all &= check(9, "induction unit checks", secs(1), induction_units);
    all &= check(10, "determinism and bookkeeping", secs(5 * 60), determinism);
    if !all {
        println!("acceptance: some criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
