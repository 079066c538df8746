//! Synthetic user behavior: switch rates of the interactivity models and
//! the CSV encoding of a trace.
//!
//! `cargo run --example trace_generation`

use fvvsim::harness::{gen_traces, save_traces, switch_rate, BehaviorModel, Burst, DwellParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, chunks, f) = (23, 60, 25);
    let burst = BehaviorModel {
        burst: Some(Burst {
            start_chunk: 30,
            chunks: 10,
            dwell: DwellParams { mean_dwell_chunks: 0.5, max_sweep: 8 },
            hotspot: 4,
        }),
        ..BehaviorModel::default()
    };
    for (name, model) in [
        ("low", BehaviorModel::low()),
        ("high", BehaviorModel::high()),
        ("mixed", BehaviorModel::default()),
        ("mixed+burst", burst),
    ] {
        let traces = gen_traces(&model, 500, chunks, n, f, 1)?;
        println!("{name:<12} {:.3} switches per user-chunk", switch_rate(&traces, chunks, f));
    }

    let traces = gen_traces(&BehaviorModel::high(), 2, 3, n, f, 1)?;
    let mut csv = Vec::new();
    save_traces(&mut csv, &traces)?;
    print!("{}", String::from_utf8(csv)?);
    Ok(())
}
