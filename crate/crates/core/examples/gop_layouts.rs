//! Frame-kind patterns of both representations and the resulting frame sizes.
//!
//! `cargo run --example gop_layouts`

use fvvsim::stream::{build_gop_layout, encode_chunk, FrameKind, Representation, StreamConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = StreamConfig::with_views(4);
    for rep in [Representation::Constant, Representation::Switching] {
        for view in 1..=cfg.n_views {
            let layout = build_gop_layout(&cfg, view, rep, 0)?;
            let pattern: String = layout
                .kinds
                .iter()
                .map(|k| if *k == FrameKind::I { 'I' } else { '.' })
                .collect();
            println!("{rep}{view}  {pattern}  ({} I)", layout.i_count());
        }
    }

    let budget = 2_000_000;
    for rep in [Representation::Constant, Representation::Switching] {
        let layout = build_gop_layout(&cfg, 1, rep, 0)?;
        let chunk = encode_chunk(&cfg, &layout, budget)?;
        let sizes: Vec<u64> = chunk.frames.iter().take(4).map(|f| f.size_bits).collect();
        let total: u64 = chunk.frames.iter().map(|f| f.size_bits).sum();
        println!("{rep}1 with {budget} bits: first frames {sizes:?}, total {total}");
    }
    Ok(())
}
