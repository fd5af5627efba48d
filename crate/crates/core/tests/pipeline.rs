use wclt_core::artifacts::{samples_csv, Envelope, RunConfig, SAMPLES_HEADER};
use wclt_core::bounds::{regime_bound, wasserstein_bound, Regime};
use wclt_core::distance::wasserstein1_to_normal;
use wclt_core::graph_stats::{exact_moments, normalized_samples, sample_host, subgraph_count};
use wclt_core::pattern::PatternGraph;
use wclt_core::weights::WeightModel;
use wclt_core::Error;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn samples_do_not_depend_on_thread_count() {
    let g = PatternGraph::named("cycle:4").unwrap();
    let model = WeightModel::exponential(2.0).unwrap();
    let run = || samples_csv(&normalized_samples(&g, 7, 0.4, &model, 3000, 5).unwrap());
    let one = in_pool(1, run);
    assert_eq!(one, in_pool(4, run));
    assert_eq!(one.lines().count(), 3001);
    assert_eq!(one.lines().next().unwrap(), SAMPLES_HEADER);
}

#[test]
fn normalised_triangle_is_close_to_normal() {
    let g = PatternGraph::named("triangle").unwrap();
    let model = WeightModel::uniform(1.0).unwrap();
    let xs: Vec<f64> = normalized_samples(&g, 20, 0.5, &model, 10_000, 3)
        .unwrap()
        .into_iter()
        .map(|s| s.normalized)
        .collect();
    let d = wasserstein1_to_normal(&xs).unwrap();
    assert!(d.w1 < 0.15, "{}", d.w1);
    let bound = wasserstein_bound(&g, 20, 0.5, &model).unwrap();
    assert!(d.w1 < bound.bound_value);
}

#[test]
fn constant_weights_scale_the_count() {
    let g = PatternGraph::named("path:3").unwrap();
    let model = WeightModel::constant(2.0).unwrap();
    let exact = exact_moments(&g, 6, 0.5, &model).unwrap();
    let samples = normalized_samples(&g, 6, 0.5, &model, 200, 8).unwrap();
    for s in samples {
        let host = sample_host(6, 0.5, model, 8, s.replicate).unwrap();
        let count = subgraph_count(&g, &host).unwrap() as f64;
        assert!((s.raw_w - 2.0 * 2.0 * count).abs() < 1e-12);
        assert!((s.normalized - (s.raw_w - exact.mean) / exact.variance.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn degenerate_weights_are_rejected() {
    let g = PatternGraph::named("triangle").unwrap();
    let model = WeightModel::constant(1.0).unwrap();
    assert!(normalized_samples(&g, 5, 1.0, &model, 10, 1).is_err());
    assert!(matches!(wasserstein_bound(&g, 5, 1.0, &model), Err(Error::Domain(_))));
}

#[test]
fn bound_report_serialises_in_envelope() {
    let g = PatternGraph::named("triangle").unwrap();
    let model = WeightModel::uniform(1.0).unwrap();
    let report = wasserstein_bound(&g, 10, 0.1, &model).unwrap();
    assert!((report.rate_term - 1.0541).abs() < 1e-4);
    let dense = regime_bound(&g, 50, 0.7, &model, 0.5).unwrap();
    assert_eq!(dense.regime.unwrap().regime, Regime::Dense);
    let config = RunConfig {
        subcommand: "bound".into(),
        pattern: Some("triangle".into()),
        ..Default::default()
    };
    let json = Envelope::new(config, report).to_json();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["format_version"], 1);
    assert_eq!(value["config"]["pattern"], "triangle");
    assert!(value["result"]["rate_term"].as_f64().unwrap() > 1.0);
}
