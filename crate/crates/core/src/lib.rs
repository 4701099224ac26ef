//! Orbit-segment metrics for topological dynamical systems and the entropy
//! estimators built on them.
//!
//! The crate is organised bottom-up:
//!
//! - [`systems`]: phase spaces, maps, metrics, orbit segments, samplers for
//!   invariant measures and partition itineraries.
//! - [`matching`]: the pairwise orbit quantities. Bowen `d_n`, mean `d̄_n`,
//!   the order-preserving match deficiency `f̄_{n,δ}` and the Feldman-Katok
//!   distance `d_FKn`, their order-free counterparts, the weak-mean
//!   assignment distance `F_n`, and the edit distance on words.
//! - [`entropy`]: spanning/separated counts, Katok and Brin-Katok style
//!   estimators, growth-rate fits and complexity comparisons.
//! - [`criterion`]: empirical checks of Katok's word criterion and the
//!   weak-mean ergodicity probe.
//!
//! With the `oracle` feature, [`oracle`] exposes brute-force reference
//! implementations used by the test suites.
//!
//! All computations are deterministic functions of their inputs and seed.

pub mod criterion;
pub mod entropy;
mod error;
pub mod matching;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod rng;
pub mod systems;

pub use error::{Error, Result};
pub use matching::MetricKind;
pub use systems::{EmpiricalMeasure, MeasureSpec, OrbitSegment, Partition, Point, System, SystemSpec, Word};
