//! Cross-module search behavior: the rotation pipeline, threshold-driven
//! path selection, and containment across target shapes.

use rii::bench;
use rii::{opq, BuildOptions, CalibrationMode, Codebook, RiiIndex, SubsetIds, Target};

fn analytic_options(rotation: Option<opq::Rotation>) -> BuildOptions {
    BuildOptions {
        rotation,
        calibration: CalibrationMode::Analytic,
    }
}

/// An index with a rotation answers exactly like a plain index built over
/// pre-rotated vectors, identifier for identifier.
#[test]
fn rotation_pipeline_matches_prerotated_plain_index() {
    let n = 800;
    let all = bench::generate_synthetic(n + 20, 16, 8, 99);
    let queries = all[n..].to_vec();
    let base = all[..n].to_vec();
    let (rot, cb) = opq::train_rotation_with_iters(&base, 4, 16, 10, 3, 99).unwrap();

    let rotated_base: Vec<Vec<f32>> = base.iter().map(|v| rot.rotate(v).unwrap()).collect();
    let with_rotation = RiiIndex::build_with(
        cb.clone(),
        &base,
        28,
        7,
        analytic_options(Some(rot.clone())),
    )
    .unwrap();
    let plain_prerotated =
        RiiIndex::build_with(cb, &rotated_base, 28, 7, analytic_options(None)).unwrap();

    let subset = SubsetIds::sample(n, 120, 3).unwrap();
    for q in &queries {
        let rq = rot.rotate(q).unwrap();
        for (target_a, target_b) in [
            (Target::All, Target::All),
            (Target::Subset(&subset), Target::Subset(&subset)),
        ] {
            let a = with_rotation.query(q, 10, target_a, Some(200)).unwrap();
            let b = plain_prerotated
                .query(&rq, 10, target_b, Some(200))
                .unwrap();
            let a_ids: Vec<u32> = a.iter().map(|h| h.id).collect();
            let b_ids: Vec<u32> = b.iter().map(|h| h.id).collect();
            assert_eq!(a_ids, b_ids);
        }
    }
}

/// Whole-set queries with an exhaustive budget equal the linear scan over
/// everything, and every path honors subset containment.
#[test]
fn whole_set_consistency_and_containment() {
    let n = 3000;
    let all = bench::generate_synthetic(n + 10, 16, 16, 111);
    let queries = all[n..].to_vec();
    let base = all[..n].to_vec();
    let cb = Codebook::train(&base, 4, 64, 10, 111).unwrap();
    let idx = RiiIndex::build_with(cb, &base, 55, 111, analytic_options(None)).unwrap();

    let full = SubsetIds::full_range(n);
    for q in &queries {
        let via_query = idx.query(q, 20, Target::All, Some(n)).unwrap();
        let via_scan = idx.pq_linear_scan(q, 20, &full).unwrap();
        assert_eq!(via_query, via_scan);
    }

    for (size, seed) in [(1usize, 5u64), (10, 6), (1000, 7), (n, 8)] {
        let subset = SubsetIds::sample(n, size, seed).unwrap();
        for q in &queries {
            for hits in [
                idx.pq_linear_scan(q, 15, &subset).unwrap(),
                idx.inverted_index_search(q, 15, Target::Subset(&subset), idx.default_l())
                    .unwrap(),
                idx.query(q, 15, Target::Subset(&subset), None).unwrap(),
            ] {
                for h in &hits {
                    assert!(subset.contains(h.id));
                }
            }
        }
    }
}

/// Queries are read-only: many threads can search one index and see the
/// same answers as a serial run.
#[test]
fn concurrent_readers_agree_with_serial_queries() {
    use std::sync::Arc;

    let n = 2000;
    let all = bench::generate_synthetic(n + 40, 16, 8, 333);
    let queries: Arc<Vec<Vec<f32>>> = Arc::new(all[n..].to_vec());
    let base = &all[..n];
    let cb = Codebook::train(base, 4, 16, 10, 333).unwrap();
    let idx = Arc::new(RiiIndex::build_with(cb, base, 45, 333, analytic_options(None)).unwrap());

    let serial: Vec<_> = queries
        .iter()
        .map(|q| idx.query(q, 10, Target::All, None).unwrap())
        .collect();

    let handles: Vec<_> = (0..4)
        .map(|_| {
            let idx = Arc::clone(&idx);
            let queries = Arc::clone(&queries);
            std::thread::spawn(move || {
                queries
                    .iter()
                    .map(|q| idx.query(q, 10, Target::All, None).unwrap())
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    for handle in handles {
        assert_eq!(handle.join().unwrap(), serial);
    }
}

/// The reported path flips exactly at the stored threshold.
#[test]
fn path_selection_matches_threshold() {
    let n = 2000;
    let base = bench::generate_synthetic(n, 16, 8, 222);
    let cb = Codebook::train(&base, 4, 16, 10, 222).unwrap();
    let idx = RiiIndex::build_with(cb, &base, 45, 222, analytic_options(None)).unwrap();
    let theta = idx.theta() as usize;
    assert!(theta >= 2 && theta < n);

    let q = &base[0];
    let below = SubsetIds::sample(n, theta - 1, 1).unwrap();
    let (_, path) = idx
        .query_with_path(q, 5, Target::Subset(&below), None)
        .unwrap();
    assert_eq!(path, rii::SearchPath::LinearScan);

    let at = SubsetIds::sample(n, theta, 2).unwrap();
    let (_, path) = idx
        .query_with_path(q, 5, Target::Subset(&at), None)
        .unwrap();
    assert_eq!(path, rii::SearchPath::InvertedIndex);
}
