#[path = "support/oracle.rs"]
mod oracle;

use migsim_core::migrror::{migrror_events, migrror_outcome};
use migsim_core::model::{megabits_to_megabytes, megabytes_to_megabits};
use migsim_core::precopy::{
    precopy_closed_form, precopy_outcome, precopy_overhead_no_delay_closed_form, precopy_round_time_closed_form,
    precopy_rounds, TauCoefficient,
};
use migsim_core::{validate_profile, AveragedParams, ContainerProfile, HandoffPolicy, MigrationOutcome, RateTrace};
use oracle::relative_error;
use proptest::prelude::*;

fn averaged(memory_mb: f64, rate: f64, dirty: f64, tau: f64) -> ContainerProfile {
    ContainerProfile::averaged(
        "c",
        memory_mb,
        rate,
        AveragedParams { avg_rate_mbps: rate, avg_dirty_mbps: dirty, inter_round_delay_s: tau },
    )
}

fn constant_trace(memory_mb: f64, rate: f64, dirty: f64, gap: f64, n: usize) -> ContainerProfile {
    ContainerProfile::traced(
        "c",
        memory_mb,
        rate,
        RateTrace::from_columns(&vec![rate; n], &vec![dirty; n], &vec![gap; n]),
    )
}

fn fixed(n: usize) -> HandoffPolicy {
    HandoffPolicy::FixedSteps { count: n as u32 }
}

fn sums_hold(o: &MigrationOutcome) -> bool {
    let time: f64 = o.steps.iter().map(|s| s.duration_s).sum();
    let volume: f64 = o.steps.iter().map(|s| s.volume_mb).sum();
    o.migration_time_s == time + o.downtime_s && o.overhead_mb == volume + o.stop_volume_mb
}

/// Averaged profile inputs with λ in (0, 0.99].
fn profile_inputs() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (1.0f64..4000.0, 10.0f64..1000.0, 0.001f64..=0.99, 0.0f64..=1.0)
        .prop_map(|(memory, rate, lambda, tau)| (memory, rate, lambda * rate, tau))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn megabyte_round_trip(mb in 0.0f64..1e12) {
        prop_assert_eq!(megabits_to_megabytes(megabytes_to_megabits(mb)), mb);
    }

    #[test]
    fn validation_is_idempotent((memory, rate, dirty, tau) in profile_inputs()) {
        let once = validate_profile(averaged(memory, rate, dirty, tau)).unwrap();
        prop_assert_eq!(validate_profile(once.clone()).unwrap(), once);
    }

    #[test]
    fn closed_forms_match_recursion((memory, rate, dirty, tau) in profile_inputs(), rounds in 1u32..=30) {
        let profile = averaged(memory, rate, dirty, tau);
        let steps = precopy_rounds(&profile, rounds).unwrap();
        for (i, step) in steps.iter().enumerate() {
            let closed = precopy_round_time_closed_form(&profile, i as u32 + 1).unwrap();
            prop_assert!(relative_error(step.duration_s, closed) <= 1e-9);
        }
        let outcome = precopy_outcome(&profile, rounds).unwrap();
        let closed = precopy_closed_form(&profile, rounds, TauCoefficient::Corrected).unwrap();
        prop_assert!(relative_error(outcome.downtime_s, closed.downtime_s) <= 1e-9);
        prop_assert!(relative_error(outcome.migration_time_s, closed.migration_time_s) <= 1e-9);
        prop_assert!(relative_error(outcome.overhead_mb, closed.overhead_mb) <= 1e-9);
        let no_delay = averaged(memory, rate, dirty, 0.0);
        prop_assert!(relative_error(
            precopy_outcome(&no_delay, rounds).unwrap().overhead_mb,
            precopy_overhead_no_delay_closed_form(&no_delay, rounds).unwrap(),
        ) <= 1e-9);
    }

    #[test]
    fn volumes_decay_without_delay((memory, rate, dirty, _) in profile_inputs(), rounds in 2u32..=30) {
        let steps = precopy_rounds(&averaged(memory, rate, dirty, 0.0), rounds).unwrap();
        prop_assert!(steps.windows(2).all(|w| w[1].volume_mb < w[0].volume_mb));
    }

    #[test]
    fn precopy_monotonicity((memory, rate, dirty, tau) in profile_inputs(), rounds in 1u32..=30, bump in 1.0f64..1.5) {
        let base = precopy_outcome(&averaged(memory, rate, dirty, tau), rounds).unwrap();
        let bigger = precopy_outcome(&averaged(memory * bump, rate, dirty, tau), rounds).unwrap();
        prop_assert!(bigger.downtime_s >= base.downtime_s && bigger.migration_time_s >= base.migration_time_s);
        if dirty * bump < rate {
            let dirtier = precopy_outcome(&averaged(memory, rate, dirty * bump, tau), rounds).unwrap();
            prop_assert!(dirtier.downtime_s >= base.downtime_s && dirtier.migration_time_s >= base.migration_time_s);
        }
        let faster = precopy_outcome(&averaged(memory, rate * bump, dirty, tau), rounds).unwrap();
        prop_assert!(faster.downtime_s <= base.downtime_s && faster.migration_time_s <= base.migration_time_s);
        let no_delay = averaged(memory, rate, dirty, 0.0);
        let more_rounds = precopy_outcome(&no_delay, rounds + 1).unwrap();
        prop_assert!(more_rounds.downtime_s <= precopy_outcome(&no_delay, rounds).unwrap().downtime_s);
    }

    #[test]
    fn outcomes_satisfy_sum_identities((memory, rate, dirty, tau) in profile_inputs(), rounds in 1u32..=30) {
        let profile = averaged(memory, rate, dirty, tau);
        prop_assert!(sums_hold(&precopy_outcome(&profile, rounds).unwrap()));
        prop_assert!(sums_hold(&migrror_outcome(&profile, &fixed(rounds as usize)).unwrap()));
    }

    #[test]
    fn constant_trace_degenerates_to_precopy((memory, rate, dirty, tau) in profile_inputs(), rounds in 1usize..=30) {
        let pre = precopy_outcome(&averaged(memory, rate, dirty, tau), rounds as u32).unwrap();
        let mir = migrror_outcome(&constant_trace(memory, rate, dirty, tau, rounds), &fixed(rounds)).unwrap();
        prop_assert_eq!(&pre.steps, &mir.steps);
        prop_assert_eq!(pre.downtime_s, mir.downtime_s);
        prop_assert_eq!(pre.migration_time_s, mir.migration_time_s);
        prop_assert_eq!(pre.overhead_mb, mir.overhead_mb);
    }

    #[test]
    fn zero_gap_downtime_ignores_dirty_order(
        memory in 1.0f64..1000.0,
        rate in 50.0f64..500.0,
        stop in 50.0f64..500.0,
        (lambdas, shuffled_lambdas) in prop::collection::vec(0.01f64..0.95, 2..12)
            .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle())),
    ) {
        let dirty: Vec<f64> = lambdas.iter().map(|l| l * rate).collect();
        let n = dirty.len();
        let run = |d: &[f64]| {
            let trace = RateTrace::from_columns(&vec![rate; n], d, &vec![0.0; n]);
            migrror_outcome(&ContainerProfile::traced("c", memory, stop, trace), &fixed(n)).unwrap()
        };
        let mut product = memory * 8.0;
        for d in &dirty {
            product *= d / rate;
        }
        let expected = product / stop;
        let base = run(&dirty);
        prop_assert!(relative_error(base.downtime_s, expected) <= 1e-9);

        let shuffled: Vec<f64> = shuffled_lambdas.iter().map(|l| l * rate).collect();
        let mut ascending = dirty.clone();
        ascending.sort_by(f64::total_cmp);
        let descending: Vec<f64> = ascending.iter().rev().copied().collect();
        for order in [&shuffled, &ascending, &descending] {
            prop_assert!(relative_error(run(order).downtime_s, base.downtime_s) <= 1e-9);
        }
        if ascending.first() != ascending.last() {
            prop_assert!(run(&ascending).migration_time_s < run(&descending).migration_time_s);
        }
    }

    #[test]
    fn deadline_prefix_matches_fixed_steps(
        memory in 1.0f64..1000.0,
        rates in prop::collection::vec(50.0f64..300.0, 2..30),
        lambda in 0.0f64..0.9,
        gap in 0.0f64..0.5,
        k in 1usize..30,
        extra in 0.0f64..5.0,
    ) {
        let n = rates.len();
        let k = k.min(n);
        let dirty: Vec<f64> = (0..n).map(|i| lambda * rates[(i + 1).min(n - 1)]).collect();
        let profile = ContainerProfile::traced("c", memory, 100.0, RateTrace::from_columns(&rates, &dirty, &vec![gap; n]));
        let fixed_steps = migrror_events(&profile, &fixed(k)).unwrap();
        let budget = fixed_steps[k - 1].end_s + extra;
        if let Ok(deadline_steps) = migrror_events(&profile, &HandoffPolicy::Deadline { budget_s: budget }) {
            prop_assert!(deadline_steps.len() >= k);
            prop_assert_eq!(&deadline_steps[..k], &fixed_steps[..]);
        }
    }
}

#[test]
fn same_mean_traces_diverge() {
    let run = |d: [f64; 2]| {
        let trace = RateTrace::from_columns(&[200.0, 200.0], &d, &[1.0, 1.0]);
        migrror_outcome(&ContainerProfile::traced("c", 200.0, 200.0, trace), &fixed(2)).unwrap().downtime_s
    };
    let (flat, skewed) = (run([100.0, 100.0]), run([150.0, 50.0]));
    assert!((flat - skewed) / flat >= 0.2, "{flat} vs {skewed}");
    assert!((flat - run([50.0, 150.0])) / flat > 0.1);
}
