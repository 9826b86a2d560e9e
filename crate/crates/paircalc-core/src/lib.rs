//! A calculus of combination and partition, built in three layers and
//! exercised on path networks.
//!
//! * [`measure`]: n-tuple measures with the component-wise combination
//!   operator and affine re-grading.
//! * [`tree`]: rooted partition trees, path values as proportions, the
//!   chain (product) rule, and discrete Bayes updates.
//! * [`pair`]: two-component values under general bilinear products,
//!   with associativity and degeneracy probes, classification into the
//!   three normal forms, and per-class polar coordinates.
//! * [`born`]: the rate exponent fixed by two-source consistency, the
//!   squared-modulus rate map, Gaussian pair priors, and Poisson streams.
//! * [`hilbert`]: amplitude vectors over base-state indices, with
//!   sampling, composites, selection, rotation, and normalization.
//! * [`network`]: a split/merge network simulator that evaluates the
//!   scalar, coherent-pair, and random-phase calculi side by side.
//!
//! Everything is pure and seed-parameterized: the same seed yields the
//! same stream on a given platform.

pub mod born;
pub mod hilbert;
pub mod measure;
pub mod network;
pub mod pair;
pub mod rng;
pub mod tree;

pub use born::{born, mean_rate_closed, mean_rate_mc, poisson_stream, sample_prior, solve_alpha};
pub use hilbert::{AmplitudeVector, PairMatrix, Selection};
pub use measure::Measure;
pub use network::{Mode, NetworkSpec, SimResult};
pub use pair::{BilinearProduct, Pair, ProductClass, ProductKind};
pub use tree::{PartitionTree, TreePath};
