//! Per-user traffic of the reassembled stream against sending ten or all
//! constant views.
//!
//! `cargo run --release --example bandwidth_comparison`

use fvvsim::harness::{run_experiment, BehaviorModel, ExperimentConfig, Scheme, Summary};
use fvvsim::stream::StreamConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, behavior) in [("low", BehaviorModel::low()), ("high", BehaviorModel::high())] {
        let cfg = ExperimentConfig {
            users: 50,
            chunks: 20,
            seed: 1,
            schemes: vec![Scheme::Uniform],
            behavior,
            stream: StreamConfig::with_views(23),
            ..Default::default()
        };
        let summary = Summary::from_report(&run_experiment(&cfg)?);
        let [r, h, c] = summary.mean_bandwidth_bits["uniform"];
        println!(
            "{name:<5} Mbit per user-chunk: reassembled {:.2}  HAS-10 {:.2}  conventional {:.2}  (1 : {:.1} : {:.1})",
            r / 1e6,
            h / 1e6,
            c / 1e6,
            h / r,
            c / r
        );
    }
    Ok(())
}
