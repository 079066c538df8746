use std::fmt::Write as _;

use fvvsim::alloc::{allocate, qoe_total, uniform_allocate, QoeParams, RateBounds};
use fvvsim::harness::{
    cdf, emit_report, gen_traces, load_summary, load_traces, run_experiment, run_with_traces, save_traces,
    BehaviorModel, ExperimentConfig, HarnessError, Scheme, Summary, ViewTrace,
};
use fvvsim::popularity::ViewGraph;
use fvvsim::stream::StreamConfig;
use proptest::prelude::*;

fn small(users: usize, chunks: u64, n: usize) -> ExperimentConfig {
    ExperimentConfig {
        users,
        chunks,
        seed: 3,
        train_after: Some(10),
        stream: StreamConfig::with_views(n),
        ..Default::default()
    }
}

#[test]
fn allocations_ignore_the_future() {
    let cfg = small(30, 16, 8);
    let f = cfg.stream.frames_per_chunk();
    let graph = ViewGraph::path(8);
    let traces = gen_traces(&BehaviorModel::high(), 30, 16, 8, f, 3).unwrap();
    let f = f as u64;
    let cut = 12;
    let mutated: Vec<ViewTrace> = traces
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.events.retain(|(pts, _)| *pts < cut * f);
            let from = t.events.last().map_or(t.join_pts, |e| e.0).max(cut * f);
            t.events.push((from + 1, 1 + (t.user_id as usize * 5) % 8));
            t
        })
        .collect();
    let a = run_with_traces(&cfg, &traces, &graph).unwrap();
    let b = run_with_traces(&cfg, &mutated, &graph).unwrap();
    for scheme in Scheme::ALL {
        let (xa, xb) = (&a.allocations[scheme.name()], &b.allocations[scheme.name()]);
        assert_eq!(xa[..=cut as usize], xb[..=cut as usize], "{}", scheme.name());
    }
    for j in 0..=cut as usize {
        assert_eq!(a.popularity[j].p, b.popularity[j].p);
        assert_eq!(a.popularity[j].p_hat, b.popularity[j].p_hat);
    }
    assert_ne!(a.popularity[cut as usize].x_hat, b.popularity[cut as usize].x_hat);
    let later = cut as usize + 2;
    assert_ne!(a.allocations["ppc-only"][later], b.allocations["ppc-only"][later]);
}

#[test]
fn same_seed_same_report() {
    let cfg = small(25, 14, 6);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let other = run_experiment(&ExperimentConfig { seed: 4, ..cfg }).unwrap();
    assert_ne!(a.popularity, other.popularity);
}

#[test]
fn series_cover_every_chunk() {
    let r = run_experiment(&small(10, 12, 4)).unwrap();
    for v in r.qoe.values().chain(r.precision.values()) {
        assert_eq!(v.len(), 12);
    }
    for v in r.allocations.values() {
        assert_eq!(v.len(), 12);
    }
    assert_eq!(r.popularity.len(), 12);
    assert_eq!(r.sessions, r.decodable_sessions);
    assert_eq!(r.work.frames_reencoded, 0);
}

#[test]
fn equal_popularity_gets_equal_rates() {
    // with the quality terms alone and matching scales, both representations
    // of every view are interchangeable
    let params = QoeParams {
        eta_hat: 1.0,
        mu1: 0.0,
        mu2: 0.0,
        ..QoeParams::default()
    };
    for n in [2, 5, 23] {
        let budget = 10.0 * n as f64;
        let bounds = RateBounds::proportional(budget, n);
        let p = vec![1.0 / (2 * n) as f64; n];
        let uniform = uniform_allocate(1, budget, n, &bounds).unwrap();
        let adaptive = allocate(1, &p, &p, &uniform.constant, budget, &params, &bounds).unwrap();
        let rates: Vec<f64> = adaptive.constant.iter().chain(&adaptive.switching).copied().collect();
        let spread = rates.iter().cloned().fold(f64::MIN, f64::max) - rates.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-6 * budget, "spread {spread}");
        assert!(adaptive.within_budget_tolerance(params.epsilon));
        let q = qoe_total(&adaptive.constant, &adaptive.switching, &adaptive.constant, &p, &p, &params).unwrap();
        assert_eq!((q.inter_view, q.temporal), (0.0, 0.0));
    }
}

#[test]
fn skewed_traffic_favors_adaptive_allocation() {
    let cfg = ExperimentConfig {
        users: 500,
        chunks: 30,
        seed: 1,
        schemes: vec![Scheme::Adaptive, Scheme::Uniform],
        stream: StreamConfig::with_views(23),
        ..Default::default()
    };
    let s = Summary::from_report(&run_experiment(&cfg).unwrap());
    let (a, u) = (s.qoe["adaptive"].mean.unwrap(), s.qoe["uniform"].mean.unwrap());
    println!("mean QoE adaptive {a:.4} uniform {u:.4}");
    assert!(a > u);
}

#[test]
fn trace_round_trip() {
    let traces = gen_traces(&BehaviorModel::default(), 40, 10, 23, 25, 9).unwrap();
    let mut buf = Vec::new();
    save_traces(&mut buf, &traces).unwrap();
    assert_eq!(load_traces(&buf[..], 23).unwrap(), traces);
}

proptest! {
    #[test]
    fn generated_traces_round_trip(seed in any::<u64>(), users in 1usize..20, n in 2usize..30) {
        let traces = gen_traces(&BehaviorModel::high(), users, 4, n, 25, seed).unwrap();
        let mut buf = Vec::new();
        save_traces(&mut buf, &traces).unwrap();
        prop_assert_eq!(load_traces(&buf[..], n).unwrap(), traces);
    }
}

#[test]
fn eighty_two_user_file_loads() {
    // hand-assembled in the documented schema, as a recorded study would be
    let mut text = String::from("user_id,join_pts,request_pts,target_view\n");
    for u in 0..82u32 {
        let join = (u as u64 * 7) % 25;
        let start = 1 + (u as usize * 3) % 23;
        writeln!(text, "{u},{join},,").unwrap();
        writeln!(text, "{u},{join},{join},{start}").unwrap();
        let mut pts = join;
        for k in 0..(u % 6) {
            pts += 10 + k as u64 * 13;
            writeln!(text, "{u},{join},{pts},{}", 1 + (start + k as usize) % 23).unwrap();
        }
    }
    let traces = load_traces(text.as_bytes(), 23).unwrap();
    assert_eq!(traces.len(), 82);
    let cfg = ExperimentConfig {
        chunks: 8,
        schemes: vec![Scheme::PpcOnly, Scheme::Uniform],
        stream: StreamConfig::with_views(23),
        ..Default::default()
    };
    let r = run_with_traces(&cfg, &traces, &ViewGraph::path(23)).unwrap();
    assert_eq!(r.decodable_sessions, 82);
}

#[test]
fn malformed_trace_rows_are_reported() {
    let bad_view = "user_id,join_pts,request_pts,target_view\n0,3,,\n0,3,3,0\n";
    assert!(matches!(load_traces(bad_view.as_bytes(), 5), Err(HarnessError::Validation(_))));
    let bad_number = "user_id,join_pts,request_pts,target_view\n0,3,,\n0,3,abc,2\n";
    assert!(matches!(load_traces(bad_number.as_bytes(), 5), Err(HarnessError::Parse { line: 3, .. })));
    let backwards = "user_id,join_pts,request_pts,target_view\n0,3,,\n0,3,3,2\n0,3,9,1\n0,3,8,2\n";
    assert!(matches!(load_traces(backwards.as_bytes(), 5), Err(HarnessError::Validation(_))));
}

#[test]
fn empty_run_writes_header_only_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&small(5, 0, 4)).unwrap();
    let written = emit_report(&report, dir.path()).unwrap();
    for path in written.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 1, "{}", path.display());
    }
    let summary = load_summary(std::fs::File::open(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.n_chunks, 0);
}

#[test]
fn report_files_and_summary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&small(12, 12, 5)).unwrap();
    emit_report(&report, dir.path()).unwrap();
    for name in ["precision.csv", "qoe_adaptive.csv", "qoe_uniform.csv", "delay.csv", "bandwidth.csv", "summary.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let mut rdr = csv::Reader::from_path(dir.path().join("qoe_uniform.csv")).unwrap();
    let cum: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(cum.len(), 12);
    assert!(cum.windows(2).all(|w| w[0] <= w[1]));
    let back = load_summary(std::fs::File::open(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(back, Summary::from_report(&report));
    assert_eq!(back.config, report.config);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let report = run_experiment(&small(3, 2, 3)).unwrap();
    assert!(matches!(emit_report(&report, &file.join("sub")), Err(HarnessError::Io(_))));
}

proptest! {
    #[test]
    fn cdf_is_non_decreasing(values in prop::collection::vec(-1e6f64..1e6, 0..50)) {
        let c = cdf(&values);
        prop_assert_eq!(c.len(), values.len());
        prop_assert!(c.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
    }
}
