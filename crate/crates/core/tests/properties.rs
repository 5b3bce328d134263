mod common;

use chan_em_core::observation::times_from_gaps;
use chan_em_core::{
    count_statistics, e_step, gaps, n_step_matrix, observe, run_em, simulate_chain,
    transition_matrix, utilization, ChannelParams, EmConfig, ObservationSchedule,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ChannelParams> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, b)| ChannelParams::new(a, b).unwrap())
}

fn interior() -> impl Strategy<Value = ChannelParams> {
    (0.02..0.98f64, 0.02..0.98f64).prop_map(|(a, b)| ChannelParams::new(a, b).unwrap())
}

fn schedule() -> impl Strategy<Value = ObservationSchedule> {
    prop_oneof![
        (0u64..6).prop_map(|skip| ObservationSchedule::Fixed { skip }),
        (prop::collection::btree_set(1u64..8, 1..4), any::<u64>()).prop_map(|(s, seed)| {
            ObservationSchedule::RandomUniform { support: s.into_iter().collect(), seed }
        }),
    ]
}

proptest! {
    #[test]
    fn rows_are_stochastic(params in params(), n in 1u64..200) {
        for row in transition_matrix(params).rows().iter().chain(n_step_matrix(params, n).rows().iter()) {
            prop_assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn utilization_is_stationary(params in params()) {
        prop_assume!(params.alpha() + params.beta() > 0.0);
        let u = utilization(params).unwrap();
        let m = transition_matrix(params).rows();
        let v = [u, 1.0 - u];
        for j in 0..2 {
            prop_assert!((v[0] * m[0][j] + v[1] * m[1][j] - v[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn counts_cover_every_transition(params in params(), len in 2usize..300, seed in any::<u64>()) {
        let x = simulate_chain(params, len, seed, Some(chan_em_core::SlotState::Idle)).unwrap();
        let s = count_statistics(&x).unwrap();
        prop_assert_eq!(s.n0 + s.n1, (len - 1) as f64);
        prop_assert!(s.t01 <= s.n0 && s.t10 <= s.n1);
    }

    #[test]
    fn observing_everything_keeps_counts(params in interior(), len in 2usize..300, seed in any::<u64>()) {
        let x = simulate_chain(params, len, seed, None).unwrap();
        let ds = observe(&x, &ObservationSchedule::Fixed { skip: 0 }).unwrap();
        let full = count_statistics(&x).unwrap();
        prop_assert!(e_step(&ds, params).unwrap().max_abs_diff(&full) < 1e-9);
        prop_assert_eq!(ds.len(), len);
    }

    #[test]
    fn gaps_rebuild_times(schedule in schedule(), len in 20usize..400, seed in any::<u64>()) {
        let x = simulate_chain(ChannelParams::new(0.4, 0.6).unwrap(), len, seed, None).unwrap();
        let ds = observe(&x, &schedule).unwrap();
        let g = gaps(&ds).unwrap();
        prop_assert_eq!(g.len(), ds.len() - 1);
        prop_assert_eq!(times_from_gaps(&g), ds.times().to_vec());
        let covered: u64 = g.iter().map(|gap| gap.transitions()).sum();
        prop_assert_eq!(covered, ds.last_slot() - 1);
        if let ObservationSchedule::Fixed { skip } = schedule {
            prop_assert!(g.iter().all(|gap| gap.hidden_len == skip));
            prop_assert_eq!((skip + 1) * (ds.len() as u64 - 1) + 1, ds.last_slot());
        }
    }

    #[test]
    fn em_ascends_and_stays_clamped(
        truth in interior(),
        start in params(),
        schedule in schedule(),
        seed in any::<u64>(),
    ) {
        let len = schedule.slots_for_observations(60).unwrap();
        let x = simulate_chain(truth, len as usize, seed, None).unwrap();
        let ds = observe(&x, &schedule).unwrap();
        let eps = 1e-6;
        let config = EmConfig {
            max_iterations: 40,
            clamp_epsilon: eps,
            record_trajectory: true,
            ..EmConfig::default()
        };
        let report = run_em(&ds, start, &config).unwrap();
        let traj = report.trajectory.unwrap();
        prop_assert!(traj.max_likelihood_drop() <= 1e-9);
        for step in &traj.steps {
            prop_assert!(step.alpha >= eps && step.alpha <= 1.0 - eps);
            prop_assert!(step.beta >= eps && step.beta <= 1.0 - eps);
            let expected = e_step(&ds, ChannelParams::new(step.alpha, step.beta).unwrap()).unwrap();
            prop_assert!((expected.transitions() - ds.transitions() as f64).abs() < 1e-9);
        }
    }
}
