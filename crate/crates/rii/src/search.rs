//! Query execution: the linear code scan, the inverted-index scan, and the
//! threshold-based selection between them.
//!
//! Both paths accept a target id set. The linear scan touches exactly the
//! target codes, so its cost tracks the subset size. The inverted scan ranks
//! the coarse centers, walks the nearest `ceil(K * L / |S|)` posting lists
//! (enough to expect `L` subset members, given that an id is a member with
//! probability `|S| / N`), and scores at most `L` candidates. Small subsets
//! favor the former, large ones the latter; `query` switches on the
//! calibrated threshold.

use crate::error::{Result, RiiError};
use crate::index::RiiIndex;
use crate::pq::DistanceTable;

use rand::rngs::StdRng;
use rand::SeedableRng;

/// Sorted target identifiers for a subset search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetIds {
    ids: Vec<u32>,
}

impl SubsetIds {
    /// Wraps a strictly ascending id list.
    pub fn new(ids: Vec<u32>) -> Result<Self> {
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RiiError::input(
                "subset ids must be strictly ascending".to_string(),
            ));
        }
        Ok(SubsetIds { ids })
    }

    /// Sorts and deduplicates an arbitrary id list.
    pub fn from_unsorted(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        SubsetIds { ids }
    }

    /// The full range `0..n`.
    pub fn full_range(n: usize) -> Self {
        SubsetIds {
            ids: (0..n as u32).collect(),
        }
    }

    /// Draws `size` distinct ids from `0..n_total` (seeded, sorted).
    pub fn sample(n_total: usize, size: usize, seed: u64) -> Result<Self> {
        if size > n_total {
            return Err(RiiError::input(format!(
                "cannot sample {size} distinct ids from {n_total}"
            )));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let mut ids: Vec<u32> = rand::seq::index::sample(&mut rng, n_total, size)
            .into_iter()
            .map(|i| i as u32)
            .collect();
        ids.sort_unstable();
        Ok(SubsetIds { ids })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Binary-search membership test.
    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        self.ids.binary_search(&id).is_ok()
    }
}

/// Search target: the whole database or a subset of it.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    All,
    Subset(&'a SubsetIds),
}

/// One ranked hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    pub distance: f32,
}

/// Which scan answered a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchPath {
    LinearScan,
    InvertedIndex,
}

fn by_distance_then_id(a: &Neighbor, b: &Neighbor) -> std::cmp::Ordering {
    a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id))
}

/// Keeps the `r` best candidates, ranked ascending by `(distance, id)`.
fn take_top(mut candidates: Vec<Neighbor>, r: usize) -> Vec<Neighbor> {
    let r = r.min(candidates.len());
    if r < candidates.len() {
        candidates.select_nth_unstable_by(r, by_distance_then_id);
        candidates.truncate(r);
    }
    candidates.sort_unstable_by(by_distance_then_id);
    candidates
}

impl RiiIndex {
    /// Distance table for a query, in the encoded (rotated) space.
    fn query_table(&self, q: &[f32]) -> Result<DistanceTable> {
        match self.rotation() {
            Some(rot) => self.codebook.distance_table(&rot.rotate(q)?),
            None => self.codebook.distance_table(q),
        }
    }

    fn check_subset_range(&self, subset: &SubsetIds) -> Result<()> {
        if let Some(&last) = subset.ids().last() {
            let n = self.num_vectors();
            if last as usize >= n {
                return Err(RiiError::input(format!(
                    "subset id {last} out of range for {n} stored codes"
                )));
            }
        }
        Ok(())
    }

    /// Scores exactly the subset members against the query and returns the
    /// `min(r, |subset|)` nearest.
    pub fn pq_linear_scan(&self, q: &[f32], r: usize, subset: &SubsetIds) -> Result<Vec<Neighbor>> {
        if r == 0 {
            return Err(RiiError::input("r must be at least 1".to_string()));
        }
        self.check_subset_range(subset)?;
        if subset.is_empty() {
            return Ok(Vec::new());
        }
        let table = self.query_table(q)?;
        Ok(self.scan_ids(&table, subset.ids(), r))
    }

    fn scan_ids(&self, table: &DistanceTable, ids: &[u32], r: usize) -> Vec<Neighbor> {
        let m = self.codebook.num_subspaces();
        let candidates: Vec<Neighbor> = ids
            .iter()
            .map(|&id| {
                let code = &self.codes[id as usize * m..(id as usize + 1) * m];
                Neighbor {
                    id,
                    distance: table.adc(code),
                }
            })
            .collect();
        take_top(candidates, r)
    }

    fn scan_all(&self, table: &DistanceTable, r: usize) -> Vec<Neighbor> {
        let m = self.codebook.num_subspaces();
        let candidates: Vec<Neighbor> = self
            .codes
            .chunks_exact(m)
            .enumerate()
            .map(|(id, code)| Neighbor {
                id: id as u32,
                distance: table.adc(code),
            })
            .collect();
        take_top(candidates, r)
    }

    /// Inverted-index search: ranks the coarse centers by distance to the
    /// query, walks the nearest `ceil(K * L / |S|)` posting lists in center
    /// order, collects up to `l` target members, and ranks them. When the
    /// selected lists run out early the collected candidates are ranked as
    /// is.
    pub fn inverted_index_search(
        &self,
        q: &[f32],
        r: usize,
        target: Target<'_>,
        l: usize,
    ) -> Result<Vec<Neighbor>> {
        if r == 0 {
            return Err(RiiError::input("r must be at least 1".to_string()));
        }
        if l == 0 {
            return Err(RiiError::input("l must be at least 1".to_string()));
        }
        let k = self.num_centers();
        if k == 0 {
            return Err(RiiError::input(
                "index has no coarse centers; build or reconfigure first".to_string(),
            ));
        }
        let n = self.num_vectors();

        // A subset covering every id behaves exactly like a whole-set
        // search, so the membership test is dropped for it as well.
        let subset: Option<&SubsetIds> = match target {
            Target::All => None,
            Target::Subset(s) => {
                self.check_subset_range(s)?;
                if s.is_empty() {
                    return Ok(Vec::new());
                }
                if s.len() == n {
                    None
                } else {
                    Some(s)
                }
            }
        };
        let s_len = subset.map_or(n, |s| s.len());

        let table = self.query_table(q)?;
        let num_lists = (k as u64 * l as u64).div_ceil(s_len as u64).min(k as u64) as usize;

        // With every list selected and a budget covering the whole subset,
        // the walk would collect exactly the subset members; score them
        // directly instead.
        if let Some(s) = subset {
            if num_lists == k && s.len() <= l {
                return Ok(self.scan_ids(&table, s.ids(), r));
            }
        }

        let m = self.codebook.num_subspaces();
        let mut center_order: Vec<(f32, u32)> = self
            .centers
            .chunks_exact(m)
            .enumerate()
            .map(|(c, code)| (table.adc(code), c as u32))
            .collect();
        if num_lists < k {
            center_order
                .select_nth_unstable_by(num_lists, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            center_order.truncate(num_lists);
        }
        center_order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut candidates: Vec<Neighbor> = Vec::with_capacity(l.min(s_len));
        'lists: for &(_, c) in &center_order {
            for &id in &self.postings[c as usize] {
                if let Some(s) = subset {
                    if !s.contains(id) {
                        continue;
                    }
                }
                let code = &self.codes[id as usize * m..(id as usize + 1) * m];
                candidates.push(Neighbor {
                    id,
                    distance: table.adc(code),
                });
                if candidates.len() == l {
                    break 'lists;
                }
            }
        }
        Ok(take_top(candidates, r))
    }

    /// Answers a query over the target set, picking the scan automatically:
    /// targets smaller than the calibrated threshold take the linear scan,
    /// the rest the inverted index with candidate budget `l` (defaulting to
    /// the average posting-list length).
    pub fn query(
        &self,
        q: &[f32],
        r: usize,
        target: Target<'_>,
        l: Option<usize>,
    ) -> Result<Vec<Neighbor>> {
        self.query_with_path(q, r, target, l).map(|(hits, _)| hits)
    }

    /// As [`RiiIndex::query`], also reporting which path answered.
    pub fn query_with_path(
        &self,
        q: &[f32],
        r: usize,
        target: Target<'_>,
        l: Option<usize>,
    ) -> Result<(Vec<Neighbor>, SearchPath)> {
        if r == 0 {
            return Err(RiiError::input("r must be at least 1".to_string()));
        }
        let n = self.num_vectors();
        let s_len = match target {
            Target::All => n,
            Target::Subset(s) => s.len(),
        };
        let linear = self.num_centers() == 0 || (s_len as u64) < self.theta;
        if linear {
            let hits = match target {
                Target::All => {
                    if n == 0 {
                        Vec::new()
                    } else {
                        let table = self.query_table(q)?;
                        self.scan_all(&table, r)
                    }
                }
                Target::Subset(s) => self.pq_linear_scan(q, r, s)?,
            };
            Ok((hits, SearchPath::LinearScan))
        } else {
            let l = l.unwrap_or_else(|| self.default_l().max(1));
            let hits = self.inverted_index_search(q, r, target, l)?;
            Ok((hits, SearchPath::InvertedIndex))
        }
    }
}
