//! Keeping search fast after the database grows.
//!
//! The index starts small with K = sqrt(N) posting lists. After growing
//! 10x through appends the old partitioning leaves each posting list ten
//! times too long; re-clustering the stored codes for the new size restores
//! the latency without touching the original vectors.
//!
//! Run with: `cargo run --release --example reconfigure`

use std::time::Instant;

use rii::bench::{generate_synthetic, time_per_query};
use rii::{default_num_centers, Codebook, RiiIndex, Target};

fn main() -> rii::Result<()> {
    let initial_n = 5_000;
    let final_n = 50_000;
    let dim = 32;
    let all = generate_synthetic(final_n + 16, dim, 64, 3);
    let queries = all[final_n..].to_vec();
    let base = &all[..final_n];

    let k0 = default_num_centers(initial_n);
    let codebook = Codebook::train(&base[..initial_n], 8, 256, 15, 3)?;
    let mut index = RiiIndex::build(codebook, &base[..initial_n], k0, 3)?;
    println!("built at N={initial_n} with K={k0}");

    for v in &base[initial_n..] {
        index.add(v)?;
    }
    println!("appended up to N={}", index.num_vectors());

    let l_before = final_n.div_ceil(k0);
    let before = time_per_query(&queries, |q| {
        index.query(q, 1, Target::All, Some(l_before)).unwrap();
    });
    println!("before reconfigure (K={k0}, L={l_before}): {before:.4} ms/query");

    let k_new = default_num_centers(final_n);
    let start = Instant::now();
    index.reconfigure(k_new, 3)?;
    println!(
        "reconfigure to K={k_new} took {:.2} s",
        start.elapsed().as_secs_f64()
    );

    let l_after = final_n.div_ceil(k_new);
    let after = time_per_query(&queries, |q| {
        index.query(q, 1, Target::All, Some(l_after)).unwrap();
    });
    println!("after reconfigure (K={k_new}, L={l_after}): {after:.4} ms/query");
    println!("speedup: {:.2}x", before / after);
    Ok(())
}
