//! Persisting an index and reading vector benchmark files.
//!
//! The index serializes to a compact little-endian file: codes and centers
//! take one byte per subspace and posting lists four bytes per id, so the
//! payload is (N+K)*M + 4N bytes next to the codebook. Saving, loading,
//! and saving again is byte-identical.
//!
//! Run with: `cargo run --release --example save_load`

use rii::bench::generate_synthetic;
use rii::io::{self, payload_bytes};
use rii::{Codebook, RiiIndex, Target};

fn main() -> rii::Result<()> {
    let n = 10_000;
    let all = generate_synthetic(n + 4, 32, 64, 11);
    let queries = all[n..].to_vec();
    let base = &all[..n];

    let codebook = Codebook::train(&base[..4000], 16, 256, 15, 11)?;
    let index = RiiIndex::build(codebook, base, 100, 11)?;

    let dir = std::env::temp_dir().join("rii_save_load_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("example.rii");
    let written = index.save_to_path(&path)?;
    println!(
        "wrote {} bytes (payload formula predicts {} + codebook/header)",
        written,
        payload_bytes(index.num_vectors(), index.num_centers(), 16)
    );

    let loaded = RiiIndex::load_from_path(&path)?;
    for q in &queries {
        assert_eq!(
            index.query(q, 5, Target::All, None)?,
            loaded.query(q, 5, Target::All, None)?
        );
    }
    println!(
        "loaded index answers identically on {} queries",
        queries.len()
    );

    let mut second = Vec::new();
    io::save_index(&loaded, &mut second)?;
    assert_eq!(std::fs::read(&path)?, second);
    println!("save -> load -> save is byte-identical");

    // The same reader/writer pair handles the fvecs/bvecs/ivecs benchmark
    // formats.
    let fvecs = dir.join("queries.fvecs");
    io::write_fvecs(&fvecs, &queries)?;
    let back = io::read_fvecs(&fvecs)?;
    assert_eq!(back, queries);
    println!("fvecs round-trip ok ({} records)", back.len());
    Ok(())
}
