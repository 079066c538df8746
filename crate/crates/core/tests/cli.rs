use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use fvvsim::cli::RunLine;
use fvvsim::popularity::load_checkpoint;
use fvvsim::popularity::{GnnParams, TrainConfig};

fn fvvsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fvvsim"))
        .current_dir(dir)
        .env_remove("FVV_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {line}"))
        .parse()
        .unwrap()
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> Output {
    let mut args = vec!["gen-traces", "--model", "high", "--users", "40", "--chunks", "20", "--n-views", "8", "-o", name];
    args.extend_from_slice(extra);
    fvvsim(dir, &args)
}

#[test]
fn gen_traces_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let a = fvvsim(
        d.path(),
        &["gen-traces", "--model", "high", "--users", "500", "--chunks", "60", "--n-views", "23", "--seed", "7", "-o", "a.csv"],
    );
    assert!(a.status.success(), "{a:?}");
    assert!(stdout(&a).contains("users=500"));
    let b = fvvsim(
        d.path(),
        &["gen-traces", "--model", "high", "--users", "500", "--chunks", "60", "--n-views", "23", "--seed", "7", "-o", "b.csv"],
    );
    assert!(b.status.success());
    let (fa, fb) = (std::fs::read(d.path().join("a.csv")).unwrap(), std::fs::read(d.path().join("b.csv")).unwrap());
    assert!(!fa.is_empty());
    assert_eq!(fa, fb);
}

#[test]
fn missing_n_views_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = fvvsim(d.path(), &["gen-traces", "--model", "high", "--users", "5", "--chunks", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--n-views"));
    assert!(o.stdout.is_empty());
}

#[test]
fn seed_falls_back_to_environment() {
    let d = tempfile::tempdir().unwrap();
    let run = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_fvvsim"));
        c.current_dir(d.path()).env_remove("FVV_SEED");
        if let Some(s) = env {
            c.env("FVV_SEED", s);
        }
        c.args(["gen-traces", "--model", "mixed", "--users", "20", "--chunks", "5", "--n-views", "6", "-o", name]);
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        assert!(c.output().unwrap().status.success());
        std::fs::read(d.path().join(name)).unwrap()
    };
    let env = run("env.csv", Some("11"), None);
    assert_eq!(env, run("flag.csv", None, Some("11")));
    assert_ne!(env, run("default.csv", None, None));
}

#[test]
fn config_and_io_errors_have_stable_codes() {
    let d = tempfile::tempdir().unwrap();
    let bad_key = fvvsim(d.path(), &["run", "--set", "budget.bogus=1"]);
    assert_eq!(bad_key.status.code(), Some(2));
    std::fs::write(d.path().join("bad.toml"), "users = \"many\"").unwrap();
    assert_eq!(fvvsim(d.path(), &["run", "--config", "bad.toml"]).status.code(), Some(2));
    let missing = fvvsim(d.path(), &["run", "--traces", "missing.csv"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(!missing.stderr.is_empty() && missing.stdout.is_empty());
    std::fs::write(d.path().join("broken.csv"), "user_id,join_pts,request_pts,target_view\n0,x,,\n").unwrap();
    let broken = fvvsim(d.path(), &["run", "--n-views", "4", "--traces", "broken.csv"]);
    assert_eq!(broken.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&broken.stderr).contains("line 2"));
}

#[test]
fn train_echoes_hyperparameters_and_needs_history() {
    let d = tempfile::tempdir().unwrap();
    assert!(gen(d.path(), "t.csv", &["--seed", "1"]).status.success());
    let o = fvvsim(d.path(), &["train", "--traces", "t.csv", "--n-views", "8", "--chunks", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    for kv in ["lr=0.005", "batch=32", "epochs=50", "M=2"] {
        assert!(line.contains(kv), "{line}");
    }
    assert!(d.path().join("model.json").exists());

    let short = fvvsim(d.path(), &["train", "--traces", "t.csv", "--n-views", "8", "--chunks", "5"]);
    assert_eq!(short.status.code(), Some(4));
}

#[test]
fn zero_epochs_keeps_initialization() {
    let d = tempfile::tempdir().unwrap();
    assert!(gen(d.path(), "t.csv", &[]).status.success());
    let o = fvvsim(
        d.path(),
        &["train", "--traces", "t.csv", "--n-views", "8", "--chunks", "20", "--epochs", "0", "--seed", "5", "-o", "m.json"],
    );
    assert!(o.status.success());
    let (params, _) = load_checkpoint(std::fs::File::open(d.path().join("m.json")).unwrap()).unwrap();
    let cfg = TrainConfig {
        seed: 5,
        epochs: 0,
        ..TrainConfig::default()
    };
    assert_eq!(params, GnnParams::init(8, &cfg, 5));
}

/// Initial training on ten chunks, then the checkpoint is refined online over
/// the following chunks and scored on the last one against carryover.
#[test]
fn online_refinement_does_not_lose_to_carryover() {
    let d = tempfile::tempdir().unwrap();
    let (mut gnn, mut ppc) = (0.0, 0.0);
    for seed in 0..20 {
        let s = seed.to_string();
        let traces = format!("t{seed}.csv");
        let o = fvvsim(
            d.path(),
            &["gen-traces", "--model", "high", "--users", "100", "--chunks", "30", "--n-views", "8", "--seed", &s, "-o", &traces],
        );
        assert!(o.status.success());
        let base = ["train", "--traces", &traces, "--n-views", "8", "--chunks", "30", "--seed", &s];
        let first = fvvsim(d.path(), &[&base[..], &["--history", "10", "-o", "m.json"]].concat());
        assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
        let online = fvvsim(
            d.path(),
            &[&base[..], &["--checkpoint", "m.json", "--history", "10", "--online", "-o", "m2.json"]].concat(),
        );
        assert!(online.status.success(), "{}", String::from_utf8_lossy(&online.stderr));
        let line = stdout(&online);
        gnn += field(&line, "heldout_mae");
        ppc += field(&line, "ppc_heldout_mae");
    }
    println!("held-out MAE over 20 seeds: network {:.6}, carryover {:.6}", gnn / 20.0, ppc / 20.0);
    assert!(gnn <= ppc, "network {gnn} vs carryover {ppc}");
}

#[test]
fn smoke_run_and_report() {
    let d = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = fvvsim(
        d.path(),
        &["run", "--n-views", "4", "--chunks", "10", "--users", "10", "--seed", "1", "--fps", "25", "--chunk-seconds", "1", "-o", "out"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(start.elapsed().as_secs_f64() < 10.0);
    let line: RunLine = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!((line.users, line.chunks, line.n_views), (10, 10, 4));
    assert_eq!(line.sessions, line.decodable_sessions);
    assert_eq!(line.frames_reencoded, 0);

    let again = fvvsim(
        d.path(),
        &["run", "--n-views", "4", "--chunks", "10", "--users", "10", "--seed", "1", "-o", "out2"],
    );
    assert_eq!(stdout(&again).replace("out2", "out"), stdout(&o));

    let report = fvvsim(d.path(), &["report", "out"]);
    assert!(report.status.success());
    assert!(stdout(&report).contains("qoe scheme=adaptive"));
    let json = fvvsim(d.path(), &["report", "out", "--json"]);
    let back: RunLine = serde_json::from_str(stdout(&json).trim()).unwrap();
    assert_eq!(back.qoe_median, line.qoe_median);
}

#[test]
fn scheme_selection_writes_each_qoe_csv() {
    let d = tempfile::tempdir().unwrap();
    let o = fvvsim(
        d.path(),
        &["run", "--n-views", "4", "--chunks", "5", "--users", "5", "--scheme", "uniform", "--scheme", "adaptive", "-o", "out"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("out/qoe_uniform.csv").exists());
    assert!(d.path().join("out/qoe_adaptive.csv").exists());
    assert!(!d.path().join("out/qoe_ppc-only.csv").exists());
    assert_eq!(fvvsim(d.path(), &["run", "--scheme", "best"]).status.code(), Some(2));
}

#[test]
fn allocate_reads_a_popularity_report() {
    let d = tempfile::tempdir().unwrap();
    let run = fvvsim(d.path(), &["run", "--n-views", "4", "--chunks", "6", "--users", "8", "--scheme", "ppc-only", "-o", "out"]);
    assert!(run.status.success());
    std::fs::write(d.path().join("p.toml"), "eta = 1.0\nmu2 = 0.0625\nsw = 2\nr_tar = 40.0\nt_d = 1.0\n").unwrap();
    let o = fvvsim(
        d.path(),
        &["allocate", "--popularity", "out/popularity.csv", "--params", "p.toml", "-o", "alloc.csv"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert_eq!(field(&line, "chunks"), 6.0);
    assert!(field(&line, "flagged") <= 6.0);
    let mut rdr = csv::Reader::from_path(d.path().join("alloc.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 24);
    for chunk in 0..6 {
        let total: f64 = rows
            .iter()
            .filter(|r| r[0] == *chunk.to_string())
            .map(|r| r[3].parse::<f64>().unwrap() + r[4].parse::<f64>().unwrap())
            .sum();
        assert!(total > 0.0 && total <= 40.0 * 1.5);
    }
    std::fs::write(d.path().join("bad.toml"), "eta = -1.0\n").unwrap();
    let bad = fvvsim(d.path(), &["allocate", "--popularity", "out/popularity.csv", "--params", "bad.toml"]);
    assert_eq!(bad.status.code(), Some(2));
}
