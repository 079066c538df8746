//! One user joins, sweeps across views and sweeps back; the edge emits a
//! single decodable stream built from frames already in the buffer.
//!
//! `cargo run --example edge_reassembly`

use fvvsim::edge::{measure_delays, validate_stream, SessionState, SwitchEvent, SyncBuffer};
use fvvsim::stream::{generate_chunk_streams, ChunkBudgets, Representation, StreamConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = StreamConfig::with_views(6);
    let f = cfg.frames_per_chunk() as u64;
    let mut buffer = SyncBuffer::for_config(&cfg);
    for chunk in 0..4 {
        let budgets = ChunkBudgets {
            chunk,
            constant: vec![1_000_000; cfg.n_views],
            switching: vec![1_000_000; cfg.n_views],
        };
        buffer.push_all(generate_chunk_streams(&cfg, &budgets)?.frames())?;
    }

    let events = vec![
        SwitchEvent { user_id: 7, request_pts: 33, target_view: 5 },
        SwitchEvent { user_id: 7, request_pts: 61, target_view: 1 },
    ];
    let mut session = SessionState::join(7, 2, 3, f as usize, cfg.n_views)?;
    session.schedule(events.clone());
    session.advance_to(&buffer, 4 * f - 1)?;
    let frames = session.frames();

    let mut line = String::new();
    for fr in &frames {
        let code = match fr.representation {
            Representation::Constant => 'C',
            Representation::Switching => 'S',
        };
        line.push_str(&format!("{code}{}{} ", fr.view, fr.kind));
        if fr.pts % f == f - 1 {
            println!("{line}");
            line.clear();
        }
    }
    validate_stream(&frames).map_err(|v| v.to_string())?;
    println!("{} frames, decodable", frames.len());

    let delays = measure_delays(7, 3, &frames, &events, cfg.fps)?;
    println!("startup {:?} ms", delays.startup_ms);
    for d in &delays.switches {
        println!("switch requested at pts {}: {} frames ({} ms)", d.event_pts, d.frames, d.ms);
    }
    println!("edge work {:?}", session.work());
    Ok(())
}
