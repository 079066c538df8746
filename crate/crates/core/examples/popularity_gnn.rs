//! Trains the switching-popularity network on measured traffic and compares
//! its next-chunk error with carryover.
//!
//! `cargo run --release --example popularity_gnn`

use fvvsim::harness::{run_experiment, ExperimentConfig, Scheme};
use fvvsim::popularity::{PopularityGnn, TrainConfig, ViewGraph};
use fvvsim::stream::StreamConfig;

fn mae(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 23;
    let cfg = ExperimentConfig {
        users: 200,
        chunks: 40,
        seed: 3,
        schemes: vec![Scheme::Uniform],
        stream: StreamConfig::with_views(n),
        ..Default::default()
    };
    let history: Vec<Vec<f64>> = run_experiment(&cfg)?.popularity.into_iter().map(|r| r.x_hat).collect();

    let mut net = PopularityGnn::new(&ViewGraph::path(n), TrainConfig::default())?;
    let start = std::time::Instant::now();
    let report = net.train(&history[..10])?;
    println!(
        "initial training: MAE {:.5} -> {:.5} in {:.2?}",
        report.epoch_mae[0],
        report.epoch_mae.last().unwrap(),
        start.elapsed()
    );

    let (mut gnn, mut ppc) = (0.0, 0.0);
    for t in 10..history.len() {
        gnn += mae(&net.predict(&history[..t])?, &history[t]);
        ppc += mae(&history[t - 1], &history[t]);
        net.online_update(&history[..=t])?;
    }
    let k = (history.len() - 10) as f64;
    println!("next-chunk MAE over {k} chunks: network {:.5}, carryover {:.5}", gnn / k, ppc / k);
    Ok(())
}
