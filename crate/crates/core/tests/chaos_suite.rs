use wclt_core::chaos::suite::{check_supplied_kernel, random_int0_kernel, random_kernel, run_suite, SuiteConfig};
use wclt_core::chaos::{graph_kernels, GridSpec, Kernel, KernelDump, PathRealization};
use wclt_core::graph_stats::exact_moments;
use wclt_core::pattern::PatternGraph;
use wclt_core::weights::WeightModel;

#[test]
fn default_suite_passes() {
    let report = run_suite(&SuiteConfig::default()).unwrap();
    for c in &report.checks {
        assert!(c.passed, "{} deviates by {}", c.name, c.max_deviation);
    }
    assert!(report.all_passed);
    assert_eq!(report.seed, 1);
}

#[test]
fn suite_is_seed_stable() {
    let cfg = SuiteConfig {
        paths: 50,
        seed: 9,
        ..SuiteConfig::default()
    };
    assert_eq!(run_suite(&cfg).unwrap(), run_suite(&cfg).unwrap());
}

#[test]
fn kernel_dump_round_trips_through_json() {
    let g = GridSpec::new(3, 2).unwrap();
    let f = random_int0_kernel(g, 2, 5, 0);
    let json = serde_json::to_string(&f.to_dump()).unwrap();
    let back = Kernel::from_dump(&serde_json::from_str::<KernelDump>(&json).unwrap()).unwrap();
    assert_eq!(back, f);
    assert!(back.flags().satisfies_int0);
}

#[test]
fn valid_supplied_kernels_pass() {
    let cfg = SuiteConfig {
        paths: 100,
        ..SuiteConfig::default()
    };
    let g = GridSpec::new(3, 3).unwrap();
    for f in [random_kernel(g, 2, 3, 0), random_int0_kernel(g, 3, 3, 1)] {
        let checks = check_supplied_kernel(&f.to_dump(), &cfg).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }
}

#[test]
fn corrupted_kernel_is_reported() {
    let cfg = SuiteConfig {
        paths: 100,
        ..SuiteConfig::default()
    };
    let g = GridSpec::new(3, 2).unwrap();
    let mut dump = random_int0_kernel(g, 2, 4, 0).to_dump();
    // Break symmetry in one off-diagonal entry.
    let idx = dump.values.iter().position(|v| *v != 0.0).unwrap();
    dump.values[idx] += 1.0;
    let checks = check_supplied_kernel(&dump, &cfg).unwrap();
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().any(|c| c.max_deviation > 0.1));
}

#[test]
fn triangle_family_moments_match_exact() {
    let tri = PatternGraph::named("triangle").unwrap();
    let model = WeightModel::two_point(1.0, 3.0, 0.5).unwrap();
    let fam = graph_kernels(&tri, 4, 0.5, &model, 4).unwrap();
    let exact = exact_moments(&tri, 4, 0.5, &model).unwrap();
    assert!((fam.constant - exact.mean).abs() < 1e-12);
    assert!((fam.chaos_second_moment() - exact.variance).abs() < 1e-9 * exact.variance);

    let reps = 40_000u64;
    let xs: Vec<f64> = (0..reps)
        .map(|i| fam.eval(&PathRealization::random(6, 17, i)).unwrap())
        .collect();
    let mean = xs.iter().sum::<f64>() / reps as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    assert!((mean - exact.mean).abs() < 5.0 * (exact.variance / reps as f64).sqrt());
    assert!((var / exact.variance - 1.0).abs() < 0.05);
}
