//! Closed-loop run comparing allocation schemes and predictors.
//!
//! `cargo run --release --example closed_loop -- [users] [chunks] [seed]`

use fvvsim::harness::{run_experiment, ExperimentConfig, Summary};
use fvvsim::stream::StreamConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let cfg = ExperimentConfig {
        users: args.first().copied().unwrap_or(50) as usize,
        chunks: args.get(1).copied().unwrap_or(60),
        seed: args.get(2).copied().unwrap_or(1),
        stream: StreamConfig::with_views(23),
        ..Default::default()
    };
    let report = run_experiment(&cfg)?;
    let summary = Summary::from_report(&report);
    println!("scheme      median QoE   mean QoE    min QoE");
    for (name, s) in &summary.qoe {
        println!(
            "{name:<10} {:>10.4} {:>10.4} {:>10.4}",
            s.median.unwrap_or(f64::NAN),
            s.mean.unwrap_or(f64::NAN),
            s.min.unwrap_or(f64::NAN)
        );
    }
    println!("predictor   median precision");
    for (name, s) in &summary.precision {
        println!("{name:<10} {:>10.4}", s.median.unwrap_or(f64::NAN));
    }
    println!(
        "switches {}  mean delay {:.1} ms  max {:.1} ms",
        summary.switch_events,
        summary.switch_delay_ms.mean.unwrap_or(0.0),
        summary.switch_delay_ms.max.unwrap_or(0.0)
    );
    for (name, b) in &summary.mean_bandwidth_bits {
        println!(
            "{name:<10} bits/user-chunk reassembled {:.0} has10 {:.0} conventional {:.0}  order violations {}",
            b[0], b[1], b[2], summary.bandwidth_order_violations[name]
        );
    }
    println!("frames re-encoded {}", summary.work.frames_reencoded);
    Ok(())
}
