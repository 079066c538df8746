//! Popularity-adaptive allocation against the equal split for one chunk.
//!
//! `cargo run --example bit_allocation`

use fvvsim::alloc::{allocate, qoe_total, uniform_allocate, QoeParams, RateBounds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 6;
    let budget = 10.0 * n as f64;
    let bounds = RateBounds::proportional(budget, n);
    let params = QoeParams::default();
    let p = [0.05, 0.10, 0.40, 0.20, 0.05, 0.02];
    let p_hat = [0.01, 0.03, 0.06, 0.05, 0.02, 0.01];

    let uniform = uniform_allocate(1, budget, n, &bounds)?;
    let adaptive = allocate(1, &p, &p_hat, &uniform.constant, budget, &params, &bounds)?;
    println!("view  p      p_hat  R       R_hat");
    for i in 0..n {
        println!(
            "{:<5} {:<6} {:<6} {:<7.3} {:.3}",
            i + 1,
            p[i],
            p_hat[i],
            adaptive.constant[i],
            adaptive.switching[i]
        );
    }
    println!(
        "lambda {:.4} after {} iterations, {:.3} of {budget} Mbit spent",
        adaptive.lambda,
        adaptive.iterations,
        adaptive.total()
    );
    for (name, a) in [("uniform", &uniform), ("adaptive", &adaptive)] {
        let q = qoe_total(&a.constant, &a.switching, &uniform.constant, &p, &p_hat, &params)?;
        println!("{name:<9} QoE {:.4}", q.total);
    }
    Ok(())
}
