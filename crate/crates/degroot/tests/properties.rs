//! Property tests for the model, estimator, generator and file-format
//! invariants. Systems are drawn through the seeded generators so every
//! failing case replays from its seed.

use proptest::prelude::*;

use degroot::io;
use degroot::{
    check_structure, compose_weights, consensus_value, decompose_weights, derive_seed,
    estimate_ego, estimate_single, estimate_static, gen_network, gen_opinions, gen_resistance,
    hull_check, rescale, simulate, social_term, step, step_factored, EstimateStatus,
    GeneratorSpec, InfluenceMatrix, NetworkKind, OpinionDist, OpinionState, ReportBody,
    ResistanceProfile, StopRule, WeightScheme,
};

fn network_kind(seed: u64, density: f64) -> NetworkKind {
    match seed % 4 {
        0 => NetworkKind::Complete,
        1 => NetworkKind::Ring,
        2 => NetworkKind::Star,
        _ => NetworkKind::RandomSparse { density },
    }
}

fn make_system(n: usize, seed: u64, density: f64) -> (InfluenceMatrix, ResistanceProfile) {
    let c = gen_network(&GeneratorSpec {
        kind: network_kind(seed, density),
        n,
        seed: derive_seed(seed, 0),
        weights: if seed.is_multiple_of(2) {
            WeightScheme::Random
        } else {
            WeightScheme::Uniform
        },
    })
    .expect("valid spec");
    let d = gen_resistance(n, 0.05, 0.95, derive_seed(seed, 1)).expect("valid bounds");
    (c, d)
}

fn make_opinions(n: usize, m: usize, seed: u64) -> OpinionState {
    gen_opinions(
        n,
        m,
        OpinionDist::Uniform {
            low: -5.0,
            high: 5.0,
        },
        derive_seed(seed, 2),
    )
    .expect("valid distribution")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compose_is_row_stochastic(n in 2usize..60, seed in any::<u64>(), density in 0.05f64..1.0) {
        let (c, d) = make_system(n, seed, density);
        let w = compose_weights(&c, &d).unwrap();
        for i in 0..n {
            let sum: f64 = (0..n).map(|j| w.get(i, j)).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12, "row {i} sums to {sum}");
            prop_assert!(w.diagonal(i) > 0.0 && w.diagonal(i) < 1.0);
            for j in 0..n {
                prop_assert!(w.get(i, j) >= 0.0);
            }
        }
    }

    #[test]
    fn factored_equals_coupled(
        n in 2usize..=100,
        m in 1usize..=5,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
    ) {
        let (c, d) = make_system(n, seed, density);
        let x = make_opinions(n, m, seed);
        let w = compose_weights(&c, &d).unwrap();
        let a = step_factored(&c, &d, &x).unwrap();
        let b = step(&w, &x).unwrap();
        for (u, v) in a.values().iter().zip(b.values()) {
            prop_assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
    }

    #[test]
    fn decompose_round_trips(n in 2usize..60, seed in any::<u64>(), density in 0.05f64..1.0) {
        let (c, d) = make_system(n, seed, density);
        let w = compose_weights(&c, &d).unwrap();
        let (c2, d2) = decompose_weights(&w).unwrap();
        for i in 0..n {
            prop_assert!((d2.get(i) - d.get(i)).abs() < 1e-12);
            for j in 0..n {
                prop_assert!((c2.get(i, j) - c.get(i, j)).abs() < 1e-12);
            }
        }
        let w2 = compose_weights(&c2, &d2).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((w2.get(i, j) - w.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simulated_trajectories_stay_in_hull(
        n in 2usize..40,
        m in 1usize..=3,
        steps in 1usize..60,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
    ) {
        let (c, d) = make_system(n, seed, density);
        let x0 = make_opinions(n, m, seed);
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(steps)).unwrap();
        let report = hull_check(&sim.trajectory, 1e-10);
        prop_assert!(report.ok(), "violations: {:?}", report.violations);
    }

    #[test]
    fn consensus_start_is_a_fixed_point(
        n in 2usize..40,
        value in -10.0f64..10.0,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
    ) {
        let (c, d) = make_system(n, seed, density);
        let x0 = OpinionState::constant(n, 1, value).unwrap();
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(50)).unwrap();
        for s in sim.trajectory.states() {
            for &v in s.values() {
                prop_assert!((v - value).abs() < 1e-12, "{v} vs {value}");
            }
        }
    }

    #[test]
    fn dynamics_are_affine_equivariant(
        n in 2usize..30,
        steps in 1usize..30,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
        alpha in 0.1f64..10.0,
        beta in -10.0f64..10.0,
    ) {
        let (c, d) = make_system(n, seed, density);
        let x0 = make_opinions(n, 1, seed);
        let plain = simulate(&c, &d, &x0, StopRule::Horizon(steps)).unwrap();
        let shifted_x0 = OpinionState::new(
            n,
            1,
            x0.values().iter().map(|&v| alpha * v + beta).collect(),
        )
        .unwrap();
        let shifted = simulate(&c, &d, &shifted_x0, StopRule::Horizon(steps)).unwrap();
        for (s_plain, s_shifted) in plain
            .trajectory
            .states()
            .iter()
            .zip(shifted.trajectory.states())
        {
            for (&u, &v) in s_plain.values().iter().zip(s_shifted.values()) {
                prop_assert!((alpha * u + beta - v).abs() < 1e-10, "{u} -> {v}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convergence_matches_perron_value(
        n in 2usize..30,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
    ) {
        let (c, d) = make_system(n, seed, density);
        let x0 = make_opinions(n, 1, seed);
        let w = compose_weights(&c, &d).unwrap();
        let target = consensus_value(&w, &x0).unwrap()[0];
        let sim = simulate(&c, &d, &x0, StopRule::tolerance(1e-12)).unwrap();

        // Distance to the consensus target falls below 1e-8 in finite time,
        // and the opinion spread never expands along the way.
        let dist = |s: &OpinionState| {
            s.values()
                .iter()
                .map(|v| (v - target).abs())
                .fold(0.0, f64::max)
        };
        prop_assert!(dist(sim.trajectory.last()) < 1e-8, "ended at {}", dist(sim.trajectory.last()));
        let mut prev_spread = f64::INFINITY;
        for s in sim.trajectory.states() {
            let (lo, hi) = s.column_range(0);
            let spread = hi - lo;
            prop_assert!(spread <= prev_spread * (1.0 + 1e-12) + 1e-15);
            prev_spread = spread;
        }
    }

    #[test]
    fn estimates_are_scale_free(
        n in 2usize..30,
        steps in 1usize..12,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
        alpha in 0.01f64..1000.0,
        beta in -100.0f64..100.0,
        consensus_start in proptest::bool::weighted(0.2),
    ) {
        let (c, d) = make_system(n, seed, density);
        let x0 = if consensus_start {
            OpinionState::constant(n, 1, 2.5).unwrap()
        } else {
            make_opinions(n, 1, seed)
        };
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(steps)).unwrap();
        let base = estimate_static(&c, &sim.trajectory, 1e-9).unwrap();
        let scaled_tr = rescale(&sim.trajectory, alpha, beta).unwrap();
        let scaled = estimate_static(&c, &scaled_tr, 1e-9).unwrap();
        let base_nodes = base.nodes().unwrap();
        let scaled_nodes = scaled.nodes().unwrap();
        for (a, b) in base_nodes.iter().zip(scaled_nodes) {
            prop_assert_eq!(a.status, b.status, "node {}", a.node);
            prop_assert_eq!(a.samples_used, b.samples_used, "node {}", a.node);
            match (a.value, b.value) {
                (Some(u), Some(v)) => prop_assert!((u - v).abs() < 1e-10, "{u} vs {v}"),
                (None, None) => {}
                other => prop_assert!(false, "value mismatch {other:?}"),
            }
        }
    }

    #[test]
    fn exact_trajectories_identify_resistances(
        n in 2usize..=100,
        steps in 1usize..15,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
    ) {
        let (c, d) = make_system(n, seed, density);
        let x0 = make_opinions(n, 1, seed);
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(steps)).unwrap();
        let report = estimate_static(&c, &sim.trajectory, 1e-9).unwrap();
        let (lo, hi) = sim.trajectory.column_range(0);
        let threshold = 1e-9 * (hi - lo);
        for e in report.nodes().unwrap() {
            match e.status {
                EstimateStatus::Ok => {
                    let err = (e.value.unwrap() - d.get(e.node)).abs();
                    prop_assert!(err < 1e-9, "node {} off by {err}", e.node);
                }
                EstimateStatus::Degenerate => {
                    // Sound only if every transition really was degenerate.
                    for t in 0..sim.trajectory.len() - 1 {
                        let now = sim.trajectory.state(t);
                        let s = social_term(&c.row_weights(e.node), now, e.node).unwrap()[0];
                        let den = s - now.get(e.node, 0);
                        prop_assert!(den.abs() <= threshold, "dropped usable sample {den}");
                    }
                }
                other => prop_assert!(false, "unexpected status {other:?} on exact data"),
            }
        }
    }

    #[test]
    fn ok_estimates_never_come_from_small_denominators(
        n in 2usize..30,
        steps in 1usize..10,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
        epsilon in 1e-9f64..0.5,
    ) {
        let (c, d) = make_system(n, seed, density);
        let x0 = make_opinions(n, 1, seed);
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(steps)).unwrap();
        let report = estimate_static(&c, &sim.trajectory, epsilon).unwrap();
        let (lo, hi) = sim.trajectory.column_range(0);
        let threshold = epsilon * (hi - lo);
        for e in report.nodes().unwrap() {
            if e.status != EstimateStatus::Ok {
                continue;
            }
            let mut usable = 0;
            for t in 0..sim.trajectory.len() - 1 {
                let now = sim.trajectory.state(t);
                let s = social_term(&c.row_weights(e.node), now, e.node).unwrap()[0];
                if (s - now.get(e.node, 0)).abs() > threshold {
                    usable += 1;
                }
            }
            prop_assert!(usable > 0, "node {} is ok without usable samples", e.node);
            prop_assert_eq!(usable, e.samples_used);
        }
    }

    #[test]
    fn ego_view_equals_full_view(
        n in 2usize..40,
        steps in 1usize..8,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
        node_pick in any::<u64>(),
        t_pick in any::<u64>(),
    ) {
        let (c, d) = make_system(n, seed, density);
        let x0 = make_opinions(n, 1, seed);
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(steps)).unwrap();
        let tr = &sim.trajectory;
        let node = (node_pick % n as u64) as usize;
        let t = (t_pick % (tr.len() as u64 - 1)) as usize;

        let now = tr.state(t);
        let single = estimate_single(
            &c.row_weights(node),
            now,
            tr.state(t + 1).row(node),
            node,
            1e-9,
        )
        .unwrap();

        let weights: Vec<(usize, f64)> = c.out_neighbors(node).collect();
        let neighbor_rows: Vec<(usize, &[f64])> = weights
            .iter()
            .map(|&(j, _)| (j, now.row(j)))
            .collect();
        let ego = estimate_ego(
            node,
            &weights,
            (now.row(node), tr.state(t + 1).row(node)),
            &neighbor_rows,
            1e-9,
        )
        .unwrap();

        prop_assert_eq!(single.status, ego.status);
        prop_assert_eq!(single.samples_used, ego.samples_used);
        match (single.value, ego.value) {
            (Some(u), Some(v)) => prop_assert!((u - v).abs() < 1e-12, "{u} vs {v}"),
            (None, None) => {}
            other => prop_assert!(false, "value mismatch {other:?}"),
        }
    }

    #[test]
    fn generators_are_deterministic_and_valid(
        n in 2usize..50,
        seed in any::<u64>(),
        density in 0.01f64..1.0,
    ) {
        let spec = GeneratorSpec {
            kind: NetworkKind::RandomSparse { density },
            n,
            seed,
            weights: WeightScheme::Random,
        };
        let a = gen_network(&spec).unwrap();
        let b = gen_network(&spec).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(check_structure(&a).irreducible);
    }

    #[test]
    fn network_files_round_trip(n in 2usize..40, seed in any::<u64>(), density in 0.05f64..1.0) {
        let (c, _) = make_system(n, seed, density);
        let dir = std::env::temp_dir().join(format!("degroot-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("net-{seed}.tsv"));
        io::write_network(&c, &path).unwrap();
        let back = io::read_network(&path).unwrap();
        std::fs::remove_file(&path).ok();
        prop_assert_eq!(c, back);
    }

    #[test]
    fn trajectory_files_round_trip(
        n in 2usize..20,
        m in 1usize..=3,
        steps in 1usize..10,
        seed in any::<u64>(),
    ) {
        let (c, d) = make_system(n, seed, 0.4);
        let x0 = make_opinions(n, m, seed);
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(steps)).unwrap();
        let dir = std::env::temp_dir().join(format!("degroot-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("traj-{seed}.tsv"));
        io::write_trajectory(&sim.trajectory, &path).unwrap();
        let back = io::read_trajectory(&path).unwrap();
        std::fs::remove_file(&path).ok();
        prop_assert_eq!(sim.trajectory, back);
    }

    #[test]
    fn time_varying_spread_is_tight_on_exact_data(
        n in 2usize..25,
        steps in 2usize..10,
        seed in any::<u64>(),
        density in 0.05f64..1.0,
    ) {
        let (c, d) = make_system(n, seed, density);
        let x0 = make_opinions(n, 1, seed);
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(steps)).unwrap();
        let report = degroot::estimate_time_varying(&c, &sim.trajectory, 1e-9).unwrap();
        let ReportBody::TimeVarying { samples, dispersion } = &report.body else {
            prop_assert!(false, "wrong mode");
            unreachable!();
        };
        for s in samples {
            if let Some(v) = s.estimate.value {
                prop_assert!((v - d.get(s.estimate.node)).abs() < 1e-9);
            }
        }
        for disp in dispersion {
            prop_assert!(disp.spread < 1e-9, "{disp:?}");
        }
    }
}
