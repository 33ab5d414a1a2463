use migsim_core::experiment::{compare_avg_vs_nonavg, Metric};
use migsim_core::trace::{
    generate_trace, parse_fleet_manifest, read_trace_csv, trace_stats, write_fleet_manifest, write_trace_csv,
    Distribution, Ordering, SynthBlock, SynthSpec,
};
use migsim_core::{AveragedParams, ContainerProfile, FleetSpec, HandoffPolicy, Method, RateTrace};
use proptest::prelude::*;
use rayon::prelude::*;

fn events(len: std::ops::Range<usize>) -> impl Strategy<Value = RateTrace> {
    prop::collection::vec((1.0f64..500.0, 0.0f64..0.95, 0.0f64..2.0), len).prop_map(|raw| {
        let rates: Vec<f64> = raw.iter().map(|e| e.0).collect();
        let dirty: Vec<f64> = (0..raw.len()).map(|i| raw[i].1 * rates[(i + 1).min(raw.len() - 1)]).collect();
        let gaps: Vec<f64> = raw.iter().map(|e| e.2).collect();
        RateTrace::from_columns(&rates, &dirty, &gaps)
    })
}

fn container() -> impl Strategy<Value = ContainerProfile> {
    let averaged = (0.1f64..1e4, 1.0f64..1e4, 0.0f64..0.99, 0.0f64..1.0, 1.0f64..1e4).prop_map(|(m, r, l, t, s)| {
        ContainerProfile::averaged(
            "a",
            m,
            s,
            AveragedParams { avg_rate_mbps: r, avg_dirty_mbps: l * r, inter_round_delay_s: t },
        )
    });
    let traced = (0.1f64..1e4, 1.0f64..1e4, events(1..20)).prop_map(|(m, s, t)| ContainerProfile::traced("t", m, s, t));
    prop_oneof![averaged, traced]
}

fn method() -> impl Strategy<Value = Method> {
    prop_oneof![
        (1u32..40).prop_map(|rounds| Method::Precopy { rounds }),
        (1u32..40).prop_map(|count| Method::Migrror { policy: HandoffPolicy::FixedSteps { count } }),
        (0.01f64..100.0).prop_map(|budget_s| Method::Migrror { policy: HandoffPolicy::Deadline { budget_s } }),
        (1u32..20, 0.0f64..1.0).prop_map(|(rounds, inter_round_delay_s)| Method::Migrror {
            policy: HandoffPolicy::AlignToPrecopy { rounds, inter_round_delay_s }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn manifest_round_trip(containers in prop::collection::vec(container(), 1..6), bandwidth in 1.0f64..1e5, method in method()) {
        let mut spec = FleetSpec { containers, total_bandwidth_mbps: bandwidth, method };
        for (i, c) in spec.containers.iter_mut().enumerate() {
            c.id = format!("{}{i}", c.id);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        write_fleet_manifest(&spec, &path, None).unwrap();
        prop_assert_eq!(parse_fleet_manifest(&path).unwrap(), spec);
    }

    #[test]
    fn trace_csv_round_trip(trace in events(1..50)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace_csv(&path, &trace).unwrap();
        prop_assert_eq!(read_trace_csv(&path).unwrap(), trace);
    }

    #[test]
    fn compare_is_zero_exactly_for_constant_traces(trace in events(1..12), memory in 1.0f64..500.0) {
        let constant = trace.rates().windows(2).all(|w| w[0] == w[1])
            && trace.dirty_rates().windows(2).all(|w| w[0] == w[1]);
        let n = trace.len() as u32;
        let spec = FleetSpec {
            containers: vec![ContainerProfile::traced("t", memory, 100.0, trace)],
            total_bandwidth_mbps: 100.0,
            method: Method::Migrror { policy: HandoffPolicy::FixedSteps { count: n } },
        };
        let report = compare_avg_vs_nonavg(&spec, None).unwrap();
        let all_zero = report.rows.iter().all(|r| r.deviation == 0.0);
        prop_assert_eq!(all_zero, constant);
    }
}

#[test]
fn constant_trace_compares_to_zero() {
    let trace = RateTrace::from_columns(&[120.0; 5], &[30.0; 5], &[0.2, 0.1, 0.3, 0.0, 0.5]);
    let spec = FleetSpec {
        containers: vec![ContainerProfile::traced("t", 200.0, 100.0, trace)],
        total_bandwidth_mbps: 100.0,
        method: Method::Migrror { policy: HandoffPolicy::FixedSteps { count: 5 } },
    };
    let report = compare_avg_vs_nonavg(&spec, None).unwrap();
    for metric in Metric::ALL {
        assert_eq!(report.row("t", metric).unwrap().deviation_pct, Some(0.0));
    }
}

#[test]
fn generation_ignores_thread_count() {
    let spec = SynthSpec {
        length: 5000,
        distribution: Distribution::TruncatedNormal { mean: 105.385, std: 29.79, min: 50.0, max: 150.0 },
        ordering: Ordering::BackLoaded { fraction: 0.1 },
        seed: 11,
    };
    let reference = generate_trace(&spec).unwrap();
    for threads in [1, 2, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let (one, many) = pool.install(|| {
            let one = generate_trace(&spec).unwrap();
            let many: Vec<Vec<f64>> = (0..4).into_par_iter().map(|_| generate_trace(&spec).unwrap()).collect();
            (one, many)
        });
        assert_eq!(one, reference);
        assert!(many.iter().all(|m| *m == reference));
    }
}

#[test]
fn synth_block_is_reproducible() {
    let block = SynthBlock {
        seed: 3,
        length: 50,
        rate: Distribution::Uniform { min: 50.0, max: 150.0 },
        dirty: Distribution::TruncatedNormal { mean: 28.979, std: 31.89, min: 0.02323, max: 145.076 },
        gap: Distribution::Constant { value: 0.01 },
        dirty_ordering: Ordering::Shuffled,
        memory: Distribution::Uniform { min: 100.0, max: 400.0 },
    };
    let a = block.generate(20, 0).unwrap();
    assert_eq!(a, block.generate(20, 0).unwrap());
    assert_ne!(a, block.generate(20, 1).unwrap());
    for (memory, trace) in &a {
        assert!((100.0..=400.0).contains(memory));
        for i in 1..trace.len() {
            assert!(trace.lambda_at(i + 1) < 1.0);
        }
        let rates = trace_stats(&trace.rates()).unwrap();
        assert!(rates.min >= 50.0 && rates.max <= 150.0);
    }
}
