//! The post-checking baseline: subset search bolted onto an engine that
//! only supports whole-database queries.
//!
//! The baseline asks the engine for a growing top-r prefix (r multiplied by
//! 5 per round) and keeps the subset members. For small subsets it ends up
//! pulling a large slice of the whole ranking, which is exactly the cost a
//! native subset search avoids.
//!
//! Run with: `cargo run --release --example post_checking`

use rii::bench::{
    exact_top_r, generate_synthetic, post_check_search, time_per_query, DEFAULT_POST_CHECK_GROWTH,
};
use rii::{Codebook, RiiIndex, SubsetIds, Target};

fn main() -> rii::Result<()> {
    let n = 20_000;
    let all = generate_synthetic(n + 10, 32, 64, 17);
    let queries = all[n..].to_vec();
    let base = all[..n].to_vec();

    let codebook = Codebook::train(&base[..5000], 8, 256, 15, 17)?;
    let index = RiiIndex::build(codebook, &base, 141, 17)?;

    println!("|S|      native ms   post-check ms");
    for size in [50usize, 500, 5_000] {
        let subset = SubsetIds::sample(n, size, 23)?;
        let native = time_per_query(&queries, |q| {
            index.query(q, 10, Target::Subset(&subset), None).unwrap();
        });
        let post_check = time_per_query(&queries, |q| {
            post_check_search(
                |q, r| exact_top_r(&base, q, r),
                q,
                &subset,
                10,
                DEFAULT_POST_CHECK_GROWTH,
            );
        });
        println!("{size:>6} {native:>11.4} {post_check:>14.4}");
    }
    println!("(post-checking hurts most when the subset is small)");
    Ok(())
}
