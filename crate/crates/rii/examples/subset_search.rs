//! Searching over arbitrary id subsets with automatic path selection.
//!
//! Builds an index over synthetic vectors, then runs the same query against
//! target sets of very different sizes. Small targets are answered by a
//! linear scan over the stored codes, large ones through the inverted
//! index; the switch happens at the calibrated threshold without any caller
//! involvement.
//!
//! Run with: `cargo run --release --example subset_search`

use rii::bench::generate_synthetic;
use rii::{Codebook, RiiIndex, SubsetIds, Target};

fn main() -> rii::Result<()> {
    let n = 20_000;
    let dim = 32;
    let all = generate_synthetic(n + 1, dim, 64, 7);
    let query = all[n].clone();
    let base = &all[..n];

    let codebook = Codebook::train(&base[..5000], 8, 256, 15, 7)?;
    let index = RiiIndex::build(codebook, base, 141, 7)?;
    println!(
        "built index: N={} K={} theta={} default L={}",
        index.num_vectors(),
        index.num_centers(),
        index.theta(),
        index.default_l()
    );

    for size in [10usize, 100, 1_000, 10_000, n] {
        let subset = SubsetIds::sample(n, size, 42)?;
        let (hits, path) = index.query_with_path(&query, 5, Target::Subset(&subset), None)?;
        let ids: Vec<u32> = hits.iter().map(|h| h.id).collect();
        assert!(ids.iter().all(|&id| subset.contains(id)));
        println!("|S|={size:>6} -> {path:?}: top-5 ids {ids:?}");
    }

    // The whole database is just the largest possible target set.
    let (hits, path) = index.query_with_path(&query, 5, Target::All, None)?;
    println!(
        "whole set -> {path:?}: nearest id {} at distance {:.4}",
        hits[0].id, hits[0].distance
    );
    Ok(())
}
