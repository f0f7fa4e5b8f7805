//! Reconfigurable inverted index for approximate nearest neighbor search.
//!
//! The index stores product-quantized codes in one flat array and clusters
//! them into posting lists for inverted-file style search. Two properties
//! fall out of that layout:
//!
//! * **Subset search**: a query can be restricted to an arbitrary sorted set
//!   of identifiers. Small subsets are answered by a linear scan over the
//!   stored codes, large ones by the inverted index; the cutoff is a
//!   calibrated threshold, so the caller never has to pick a strategy.
//! * **Reconfiguration**: after bulk insertions the posting lists can be
//!   rebuilt for the new database size by re-clustering the stored codes
//!   directly (no access to the original vectors is needed), which restores
//!   search speed without re-encoding anything.
//!
//! See the `examples/` directory for runnable walkthroughs of each
//! capability, or the `rii` binary for a command-line front end.

mod calibrate;
mod error;
mod kmeans;
mod pq_kmeans;

pub mod bench;
pub mod index;
pub mod io;
pub mod opq;
pub mod pq;
pub mod search;

pub use calibrate::{CalibrationMode, CalibrationOutcome};
pub use error::{Result, RiiError};
pub use index::{default_num_centers, BuildOptions, RiiIndex};
pub use opq::Rotation;
pub use pq::{Codebook, DistanceTable, PqCode, SymmetricTables};
pub use pq_kmeans::{pq_kmeans, PqKmeansResult};
pub use search::{Neighbor, SearchPath, SubsetIds, Target};
