#[path = "support/oracle.rs"]
mod oracle;

use migsim_core::fleet::{aggregate, allocate_equal, validate_bandwidth_timeline, BandwidthViolation};
use migsim_core::{run_fleet, AveragedParams, ContainerProfile, FleetSpec, HandoffPolicy, Method};
use proptest::prelude::*;

/// (memory MB, rate, λ, τ) for one averaged container.
type Params = (f64, f64, f64, f64);

fn params() -> impl Strategy<Value = Params> {
    (5.0f64..300.0, 20.0f64..300.0, 0.0f64..0.9, 0.0f64..0.3)
}

fn profile(i: usize, (memory, rate, lambda, tau): Params) -> ContainerProfile {
    ContainerProfile::averaged(
        format!("c{i}"),
        memory,
        rate,
        AveragedParams { avg_rate_mbps: rate, avg_dirty_mbps: lambda * rate, inter_round_delay_s: tau },
    )
}

fn fleet(ps: &[Params], bandwidth: f64, method: Method) -> FleetSpec {
    FleetSpec {
        containers: ps.iter().enumerate().map(|(i, &p)| profile(i, p)).collect(),
        total_bandwidth_mbps: bandwidth,
        method,
    }
}

fn methods() -> impl Strategy<Value = Method> {
    prop_oneof![
        (1u32..15).prop_map(|rounds| Method::Precopy { rounds }),
        (1u32..15).prop_map(|count| Method::Migrror { policy: HandoffPolicy::FixedSteps { count } }),
    ]
}

fn in_violation(report: &[BandwidthViolation], t: f64) -> bool {
    report.iter().any(|v| v.start_s <= t && t < v.end_s)
}

proptest! {
    #[test]
    fn aggregation_is_max_max_sum(ps in prop::collection::vec(params(), 1..8), method in methods(), rotate in 0usize..8) {
        let spec = fleet(&ps, 1e6, method);
        let out = run_fleet(&spec).unwrap();
        let runs: Vec<oracle::Run> = ps
            .iter()
            .map(|&(m, r, l, t)| match method {
                Method::Precopy { rounds } => oracle::precopy(m, r, l * r, t, rounds as usize),
                Method::Migrror { policy: HandoffPolicy::FixedSteps { count } } => {
                    oracle::mirror_steps(m, &vec![(r, l * r, t); count as usize], count as usize, r).unwrap()
                }
                Method::Migrror { .. } => unreachable!(),
            })
            .collect();
        let (down, time, overhead) = oracle::fleet(&runs);
        prop_assert_eq!(out.fleet_downtime_s, down);
        prop_assert_eq!(out.fleet_migration_time_s, time);
        prop_assert!(oracle::relative_error(out.fleet_overhead_mb, overhead) <= 1e-12);

        let mut rotated = out.per_container.clone();
        rotated.rotate_left(rotate % ps.len());
        let again = aggregate(rotated, spec.total_bandwidth_mbps);
        prop_assert_eq!(again.fleet_downtime_s, out.fleet_downtime_s);
        prop_assert_eq!(again.fleet_migration_time_s, out.fleet_migration_time_s);
        prop_assert_eq!(again.fleet_overhead_mb, out.fleet_overhead_mb);
    }

    #[test]
    fn adding_a_container_never_lowers_metrics(ps in prop::collection::vec(params(), 1..8), extra in params(), method in methods()) {
        let before = run_fleet(&fleet(&ps, 1e6, method)).unwrap();
        let mut more = ps.clone();
        more.push(extra);
        let after = run_fleet(&fleet(&more, 1e6, method)).unwrap();
        prop_assert!(after.fleet_downtime_s >= before.fleet_downtime_s);
        prop_assert!(after.fleet_migration_time_s >= before.fleet_migration_time_s);
        prop_assert!(after.fleet_overhead_mb >= before.fleet_overhead_mb);
    }

    #[test]
    fn equal_split_of_identical_containers_is_feasible(p in 1usize..30, bandwidth in 10.0f64..5000.0, memory in 1.0f64..500.0, lambda in 0.0f64..0.9, tau in 0.0f64..0.5, method in methods()) {
        let share = allocate_equal(bandwidth, p).unwrap();
        let mut spec = fleet(&vec![(memory, share, lambda, tau); p], bandwidth, method);
        spec.apply_equal_split().unwrap();
        let out = run_fleet(&spec).unwrap();
        prop_assert!(out.is_feasible(), "{:?}", out.bandwidth_report);
    }

    #[test]
    fn migration_time_grows_with_fleet_size(p in 1usize..25, bandwidth in 100.0f64..5000.0, memory in 1.0f64..500.0, dirty in 0.0f64..3.0, tau in 0.0f64..0.5, method in methods()) {
        prop_assume!(dirty < bandwidth / (p + 1) as f64);
        let run = |p: usize| {
            let mut spec = fleet(&vec![(memory, 1.0, 0.0, tau); p], bandwidth, method);
            for c in &mut spec.containers {
                if let migsim_core::ParamMode::Averaged(a) = &mut c.params {
                    a.avg_dirty_mbps = dirty;
                }
            }
            spec.apply_equal_split().unwrap();
            run_fleet(&spec).unwrap()
        };
        let (small, large) = (run(p), run(p + 1));
        for (a, b) in small.per_container.iter().zip(&large.per_container) {
            prop_assert!(b.migration_time_s >= a.migration_time_s);
        }
        prop_assert!(large.fleet_migration_time_s >= small.fleet_migration_time_s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// The sweep-line report agrees with a 1 ms grid scan of the reference
    /// transfer intervals at every grid point away from interval edges.
    #[test]
    fn sweep_line_matches_grid_scan(ps in prop::collection::vec(params(), 2..6), rounds in 1usize..6, load in 0.3f64..1.2) {
        let ps: Vec<Params> = ps.into_iter().map(|(m, r, l, t)| (m.min(60.0), r, l, t)).collect();
        let bandwidth = load * ps.iter().map(|p| p.1).sum::<f64>();
        let spec = fleet(&ps, bandwidth, Method::Precopy { rounds: rounds as u32 });
        let out = run_fleet(&spec).unwrap();
        prop_assert_eq!(&out.bandwidth_report, &validate_bandwidth_timeline(&out.per_container, bandwidth));

        let transfers: Vec<(f64, f64, f64)> = ps
            .iter()
            .flat_map(|&(m, r, l, t)| oracle::precopy(m, r, l * r, t, rounds).transfers())
            .collect();
        let edges: Vec<f64> = transfers.iter().flat_map(|t| [t.0, t.1]).collect();
        let mut disagreements = 0;
        for t in oracle::grid(&transfers) {
            if edges.iter().any(|e| (e - t).abs() < 1e-7) {
                continue;
            }
            let over = oracle::load_at(&transfers, t) > bandwidth * (1.0 + 1e-9);
            if over != in_violation(&out.bandwidth_report, t) {
                disagreements += 1;
            }
        }
        prop_assert_eq!(disagreements, 0);
    }
}
