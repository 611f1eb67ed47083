use hbac::agent::{td_error, Decision, Transition};
use hbac::cartpole::{self, CartPoleState};
use hbac::ffnet::{NetworkConfig, NetworkWeights};
use hbac::gradcheck;
use hbac::harness::config::{Architecture, ExperimentConfig};
use hbac::harness::experiment::{agent_spec, run_experiment, single_shape};
use hbac::harness::records::TerminalReason;
use hbac::harness::run_batch;
use hbac::hierarchy::{hl_transition_collect, run_phases, PhaseId, PlanSignal};
use hbac::induction::influence_error;
use hbac::rng::{stream, Stream};
use hbac::Agent;
use proptest::prelude::*;

#[test]
fn backprop_matches_differences_on_100_configs() {
    for r in gradcheck::run_all(100, 77).unwrap() {
        assert!(r.passed(), "{} max rel err {}", r.name, r.max_rel_err);
    }
}

#[test]
fn td_error_vanishes_at_the_discounted_sum() {
    // constant reward on a 3-state chain: p = r / (1 - gamma) everywhere
    let (r, gamma) = (-0.7, 0.9);
    let p = r / (1.0 - gamma);
    let mut critic = NetworkWeights::<f64>::zeros(NetworkConfig::new(3, 4, 1).unwrap());
    critic.output_bias[0] = p;
    for s in 0..3 {
        let mut x = [0.0; 3];
        x[s] = 1.0;
        let mut nx = [0.0; 3];
        nx[(s + 1) % 3] = 1.0;
        let td = td_error(r, critic.eval(&nx).unwrap()[0], critic.eval(&x).unwrap()[0], gamma);
        assert!(td.abs() < 1e-12, "state {s}: td {td}");
    }
}

fn small_run(arch: Architecture) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_architecture(arch);
    cfg.success_steps = 300;
    cfg.trial_limit = 30;
    cfg.model_steps = 300;
    cfg
}

#[test]
fn learning_ignores_exploration_noise() {
    let cfg = ExperimentConfig::default();
    let spec = agent_spec(&cfg, cfg.architecture.variant(), single_shape(&cfg), cfg.td.gamma);
    let agent = Agent::new(&spec, &mut stream(5, Stream::Init)).unwrap();
    let s = [0.2, -0.1, 0.3, 0.05];
    let clean = agent.action.net.forward(&s).unwrap();
    let quiet = Decision {
        action: clean.output.clone(),
        clean: clean.clone(),
    };
    let noisy = Decision {
        action: vec![clean.output[0] + 0.3],
        clean,
    };
    let next = [0.21, -0.12, 0.33, 0.04];
    let learn = |d: &Decision<f64>| {
        let mut a = agent.clone();
        a.learn(&Transition {
            state: &s,
            context: &[],
            decision: d,
            reward: 0.4,
            next_state: &next,
            next_context: &[],
            terminal: false,
        })
        .unwrap();
        a
    };
    assert_eq!(learn(&quiet), learn(&noisy));
}

#[test]
fn frozen_networks_keep_their_weights() {
    let mut cfg = small_run(Architecture::TwoLevelIndirect);
    // loose tolerances so every phase is reached
    cfg.convergence.tracking_tolerance_deg = 90.0;
    cfg.convergence.hl_model_tolerance = 10.0;
    cfg.convergence.model_window = 20;
    cfg.budgets.phase2.steps = 3000;
    cfg.budgets.phase3.steps = 3000;
    let after_i = run_phases(&cfg, 2, Some(PhaseId::I)).unwrap();
    let after_ii = run_phases(&cfg, 2, Some(PhaseId::II)).unwrap();
    let after_iv = run_phases(&cfg, 2, Some(PhaseId::IV)).unwrap();
    assert_eq!(after_iv.phases.len(), 4, "{:?}", after_iv.failed_phase);
    let ll_model = |r: &hbac::hierarchy::TwoLevelRun| r.system.ll.model.as_ref().unwrap().learner.net.clone();
    assert_eq!(ll_model(&after_i), ll_model(&after_iv));
    assert_eq!(after_ii.system.ll.action.net, after_iv.system.ll.action.net);
    assert_eq!(after_ii.system.ll.critic.net, after_iv.system.ll.critic.net);
    assert!(after_iv.system.ll.frozen.action && after_iv.system.hl.frozen.action);
}

#[test]
fn direct_hierarchy_has_two_phases() {
    let mut cfg = small_run(Architecture::TwoLevelDirect);
    cfg.convergence.tracking_tolerance_deg = 90.0;
    cfg.budgets.phase1.steps = 3000;
    let run = run_phases(&cfg, 1, None).unwrap();
    assert_eq!(run.phases.len(), 2);
    assert!(run_phases(&cfg, 1, Some(PhaseId::III)).is_err());
}

#[test]
fn zero_budget_phase_fails_immediately() {
    let mut cfg = small_run(Architecture::TwoLevelIndirect);
    cfg.budgets.phase1.trials = 0;
    let run = run_phases(&cfg, 1, None).unwrap();
    assert_eq!(run.phases.len(), 1);
    let r = &run.phases[0].report;
    assert!(!r.converged);
    assert_eq!((r.trials, r.steps), (0, 0));
    assert_eq!(run.failed_phase, Some(PhaseId::I));
    let out = run_experiment(&cfg, 1).unwrap();
    assert!(!out.succeeded());
}

#[test]
fn window_change_is_sum_of_single_steps() {
    let cfg = small_run(Architecture::TwoLevelIndirect);
    let run = run_phases(&cfg, 4, Some(PhaseId::I)).unwrap();
    let start = CartPoleState::new(0.1, 0.0, 0.02, 0.0);
    let plan = PlanSignal::new(vec![0.05], 0);
    let tr = hl_transition_collect(&run.system, &cfg, start, plan.clone(), usize::MAX).unwrap();
    let again = hl_transition_collect(&run.system, &cfg, start, plan.clone(), usize::MAX).unwrap();
    assert_eq!(tr, again);

    let mut s = start;
    let mut sum = [0.0; 4];
    for _ in 0..tr.steps {
        let a = run.system.ll_act(&s.normalized(&cfg.bounds), &plan).unwrap();
        let next = cartpole::step(&s, a, &cfg.physics);
        for (acc, (n, o)) in sum.iter_mut().zip(next.to_array().iter().zip(s.to_array())) {
            *acc += n - o;
        }
        s = next;
    }
    let total: Vec<f64> = tr.end.to_array().iter().zip(start.to_array()).map(|(e, s)| e - s).collect();
    for (a, b) in sum.iter().zip(&total) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn budgets_are_respected() {
    let cfg = small_run(Architecture::SingleIndirect);
    let out = run_experiment(&cfg, 3).unwrap();
    assert!(out.trials.len() <= cfg.trial_limit);
    assert!(out.trials.iter().all(|t| t.steps >= 1 && t.steps <= cfg.success_steps));

    let mut cfg = small_run(Architecture::TwoLevelIndirect);
    cfg.budgets.phase1.steps = 500;
    cfg.budgets.phase2.trials = 7;
    cfg.convergence.model_tolerance = 1.0;
    let run = run_phases(&cfg, 3, Some(PhaseId::II)).unwrap();
    assert!(run.phases[0].report.steps <= 500);
    assert!(run.phases[1].report.trials <= 7);
}

#[test]
fn unit_success_criterion_succeeds_on_first_trial() {
    let mut cfg = small_run(Architecture::SingleDirect);
    cfg.success_steps = 1;
    let out = run_experiment(&cfg, 9).unwrap();
    assert_eq!(out.trials.len(), 1);
    assert_eq!(out.trials[0].terminal_reason, TerminalReason::Success);
    assert_eq!(out.success_trial(), Some(1));
}

#[test]
fn batch_is_identical_across_thread_counts() {
    let mut cfg = small_run(Architecture::SingleIndirect);
    cfg.seeds = (1..=6).collect();
    let run_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_batch(&cfg).unwrap())
    };
    assert_eq!(run_with(1), run_with(4));
}

proptest! {
    #[test]
    fn forward_is_deterministic(seed in any::<u64>(), x in prop::collection::vec(-3.0f64..3.0, 4)) {
        let cfg = NetworkConfig::new(4, 6, 2).unwrap();
        let net = NetworkWeights::<f64>::random(cfg, 1.0, &mut stream(seed, Stream::Init));
        let a = net.forward(&x).unwrap();
        let b = net.clone().forward(&x).unwrap();
        prop_assert_eq!(a.output.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        b.output.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert!(a.hidden_act.iter().all(|&h| h > 0.0 && h <= 1.0));
    }

    #[test]
    fn influence_error_bounded_and_monotone(d in -2.0f64..2.0, bump in 0.0f64..1.0) {
        let (k1, k2) = (0.35, 0.14);
        let e = influence_error(&[d], k1, k2);
        prop_assert!(e >= -k1 && e < 0.0 || (e == 0.0 && d.abs() > 1.0));
        let further = d.abs() + bump;
        prop_assert!(influence_error(&[further], k1, k2) >= e);
    }
}
