//! Closed-loop simulation properties on the bundled grids.

use sampleguard::control::{Controller, ControllerSpec, NoopController, Observation, RandomController};
use sampleguard::fixtures::{grid5, grid5_stress};
use sampleguard::grid::{
    node_balance_residual, run_episode, run_episode_observed, step_dense, Action, EpisodeConfig, EpisodeEvent,
    GridSpec, GridState, Line, Node, NodeKind, Profile, SimError,
};
use sampleguard::logic::{Duration, MtlFormula};
use sampleguard::monitor::{compile_monitor, monitor_run};
use sampleguard::semantics::{eval_mtl_dense, sample_dense, Verdict};
use sampleguard::strengthen::strengthen;

fn d(n: i64) -> Duration {
    Duration::minutes(n)
}

fn cfg(horizon: i64) -> EpisodeConfig {
    EpisodeConfig {
        horizon: d(horizon),
        delta: d(5),
        delta_small: d(1),
    }
}

fn requirements(g: &GridSpec) -> (MtlFormula, sampleguard::monitor::Monitor) {
    let phi = g.safety_requirements(d(10)).unwrap();
    let r = strengthen(&phi, d(5)).unwrap();
    (phi, compile_monitor(&r.ltl).unwrap())
}

/// Opens every line at the second sampling instant.
struct OpenAll {
    step: usize,
    pending: Vec<u32>,
}

impl Controller for OpenAll {
    fn act(&mut self, grid: &GridSpec, _obs: &Observation) -> Action {
        self.step += 1;
        if self.step == 2 {
            self.pending = grid.lines.iter().map(|l| l.id).collect();
        }
        match self.pending.pop() {
            Some(line) if self.step >= 2 => Action::SetLine {
                line,
                in_service: false,
            },
            _ => Action::Noop,
        }
    }
}

#[test]
fn noop_keeps_the_feasible_grid_safe() {
    let g = grid5();
    let (phi, monitor) = requirements(&g);
    for seed in 0..30 {
        let rec = run_episode(&g, &mut NoopController, cfg(120), seed).unwrap();
        assert_eq!(monitor_run(&monitor, &rec.sampled).unwrap(), Verdict::Sat);
        assert_eq!(eval_mtl_dense(&phi, &rec.dense).unwrap(), Verdict::Sat);
        assert!(rec.events.is_empty());
    }
}

#[test]
fn opening_every_line_blacks_out() {
    let g = grid5();
    let (phi, monitor) = requirements(&g);
    let mut c = OpenAll {
        step: 0,
        pending: vec![],
    };
    let rec = run_episode(&g, &mut c, cfg(120), 1).unwrap();
    assert!(monitor_run(&monitor, &rec.sampled).unwrap().is_violated());
    assert!(eval_mtl_dense(&phi, &rec.dense).unwrap().is_violated());
    assert!(rec.events.iter().any(|e| matches!(e, EpisodeEvent::BlackoutStart { .. })));
}

#[test]
fn episodes_are_deterministic() {
    let g = grid5_stress();
    for spec in ["noop", "random", "greedy", "shielded:random"] {
        let spec: ControllerSpec = spec.parse().unwrap();
        let (_, monitor) = requirements(&g);
        let run = || {
            let ctx = sampleguard::control::BuildContext {
                grid: &g,
                params: Default::default(),
                episode_seed: 9,
                monitor: Some(&monitor),
                episode: cfg(120),
            };
            let mut c = spec.build(&ctx).unwrap();
            run_episode(&g, c.as_mut(), cfg(120), 9).unwrap()
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn sampled_trace_matches_dense_and_power_balances() {
    let g = grid5_stress();
    for seed in 0..200 {
        let mut worst: f64 = 0.0;
        let mut c = RandomController::new(5, seed);
        let rec = run_episode_observed(&g, &mut c, cfg(60), seed, &mut |s: &GridState| {
            worst = worst.max(node_balance_residual(&g, &s.injections_mw, &s.flows_mw));
        })
        .unwrap();
        assert!(worst <= 1e-9, "seed {seed}: residual {worst}");
        assert_eq!(rec.sampled, sample_dense(&rec.dense, d(5)).unwrap());
        assert_eq!(rec.sampled.len(), 13);
    }
}

#[test]
fn blackouts_dwell_and_relays_bound_overload() {
    let g = grid5_stress();
    for seed in 0..100 {
        let mut c = RandomController::new(1, seed);
        let mut over_ok = true;
        let rec = run_episode_observed(&g, &mut c, cfg(180), seed, &mut |s: &GridState| {
            for (i, e) in s.overload_elapsed.iter().enumerate() {
                over_ok &= !s.line_in_service[i] || *e <= g.tau_trip + d(1);
            }
        })
        .unwrap();
        assert!(over_ok);
        let dense = rec.dense.coalesced();
        let horizon = dense.horizon();
        for (name, _) in dense.segments()[0].atoms.iter().filter(|(n, _)| n.starts_with("blackout_")) {
            let mut start = None;
            for seg in dense.segments() {
                match (seg.atoms[name], start) {
                    (true, None) => start = Some(seg.start),
                    (false, Some(s)) => {
                        assert!(seg.start - s >= g.gamma_recovery.min(horizon - s), "{name} seed {seed}");
                        start = None;
                    }
                    _ => {}
                }
            }
        }
    }
}

#[test]
fn disconnecting_a_radial_consumer_blacks_it_out_for_gamma() {
    let g = GridSpec {
        nodes: vec![
            Node {
                id: 1,
                kind: NodeKind::Generator,
                profile: Profile::constant(10.0),
            },
            Node {
                id: 2,
                kind: NodeKind::Consumer,
                profile: Profile::constant(5.0),
            },
        ],
        lines: vec![Line {
            id: 1,
            from: 1,
            to: 2,
            susceptance: 1.0,
            capacity_mw: 10.0,
        }],
        gamma_recovery: d(30),
        tau_trip: d(15),
        slack_node: 1,
    };
    let mut rng = sampleguard::grid::episode_rng(0);
    let s0 = GridState::initial(&g).unwrap();
    let off = Action::SetLine {
        line: 1,
        in_service: false,
    };
    let (out, s1) = step_dense(&g, &s0, off, d(5), d(1), &mut rng).unwrap();
    assert!(out.segments[0].atoms["blackout_2"]);
    assert_eq!(out.events[0], EpisodeEvent::BlackoutStart { node: 2, t_min: d(0) });
    // Reconnect immediately: still dark until the outage clock reaches γ.
    let on = Action::SetLine {
        line: 1,
        in_service: true,
    };
    let (out, s2) = step_dense(&g, &s1, on, d(25), d(1), &mut rng).unwrap();
    assert!(out.segments.iter().all(|s| s.atoms["blackout_2"]));
    let (out, _) = step_dense(&g, &s2, Action::Noop, d(5), d(1), &mut rng).unwrap();
    assert!(!out.segments[0].atoms["blackout_2"]);
    assert_eq!(out.events[0], EpisodeEvent::Restored { node: 2, t_min: d(30) });
    assert!(matches!(
        step_dense(&g, &s0, Action::SetLine { line: 9, in_service: true }, d(5), d(1), &mut rng),
        Err(SimError::InvalidAction(9))
    ));
}

#[derive(serde::Deserialize)]
struct TripRegression {
    seed: u64,
    horizon_min: Duration,
    events: Vec<EpisodeEvent>,
}

#[test]
fn stress_cascade_regression() {
    let text = include_str!("../fixtures/trip_regression.json");
    let expected: TripRegression = serde_json::from_str(text).unwrap();
    let rec = run_episode(
        &grid5_stress(),
        &mut NoopController,
        EpisodeConfig {
            horizon: expected.horizon_min,
            delta: d(5),
            delta_small: d(1),
        },
        expected.seed,
    )
    .unwrap();
    assert_eq!(rec.events, expected.events);
    assert_eq!(rec.events[0], EpisodeEvent::Trip { line: 6, t_min: d(179) });
}
