//! Desk-scale network experiment in memory: simulate, locate reflectors by
//! range-line intersection, and score the estimates.
//!
//! ```text
//! cargo run --release -p netsar --example headline -- [key=value ...]
//! ```

use std::time::Instant;

use netsar::run::{locate_in_memory, RunConfig};

fn main() -> netsar::Result<()> {
    let text: String = std::env::args().skip(1).map(|kv| kv + "\n").collect();
    let cfg = RunConfig::parse(&text)?;
    let t0 = Instant::now();
    let run = locate_in_memory(&cfg)?;
    let m = run.matching;
    println!(
        "patches {}, with peaks {}, intersections {}, estimates {}",
        run.patches,
        run.profiles,
        run.output.intersections,
        run.output.estimates.len()
    );
    println!(
        "matched {}/{} ({:.2}) within {} m, false detections {}, {:.1?}",
        m.matched,
        m.reflectors,
        m.matched_fraction(),
        m.radius,
        m.false_detections,
        t0.elapsed()
    );
    Ok(())
}
