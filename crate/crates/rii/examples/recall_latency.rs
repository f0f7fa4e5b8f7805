//! The accuracy/speed trade-off of the candidate budget L.
//!
//! The inverted path scores at most L candidates; raising L walks more
//! posting lists, improving recall at the cost of latency. L defaults to
//! the average posting-list length (one list per query on average) and can
//! be raised at query time without rebuilding anything.
//!
//! Run with: `cargo run --release --example recall_latency`

use rii::bench::{bench_recall, generate_synthetic, ground_truth};
use rii::{BuildOptions, CalibrationMode, Codebook, RiiIndex};

fn main() -> rii::Result<()> {
    let n = 20_000;
    let all = generate_synthetic(n + 200, 32, 64, 13);
    let queries = all[n..].to_vec();
    let base = &all[..n];

    let codebook = Codebook::train(&base[..5000], 8, 256, 15, 13)?;
    let index = RiiIndex::build_with(
        codebook,
        base,
        141,
        13,
        BuildOptions {
            rotation: None,
            calibration: CalibrationMode::Analytic,
        },
    )?;

    let truth = ground_truth(base, &queries, 1);
    let l0 = index.default_l();
    let grid = [l0, 2 * l0, 4 * l0, 16 * l0, n];
    let report = bench_recall(&index, &queries, &truth, &grid, 1, 13, "synthetic-20k")?;
    print!("{report}");
    Ok(())
}
