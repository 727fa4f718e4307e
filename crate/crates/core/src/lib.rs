//! Numerical lab for sequences of induced Hausdorff metrics on Lie groups.
//!
//! Starting from a metric `d` on a group `G` and a finite set `X ∋ e`, the
//! induced Hausdorff metric `d_X(p, q) = d_H(pX, qX)` is turned into a length
//! metric and the step is repeated. The crate samples the resulting metrics
//! on grids over ℝⁿ, Tⁿ and the Heisenberg group, and provides the tools to
//! study the limit: the right-invariant envelope, Finsler norm estimates and
//! density of the semigroup generated by `X`.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apsp;
pub mod error;
pub mod finsler;
pub mod flow;
pub mod generators;
pub mod grid;
pub mod group;
pub mod metric;
pub mod semigroup;
pub mod verify;

pub use error::{Error, Result};
pub use generators::{check_isotropy_trivial, invert_generators, GeneratorSet, DEDUP_TOL};
pub use grid::{sample_window, Grid, WindowSpec};
pub use group::{bracket, exp_map, inv, mul, AlgebraVector, Coords, Group, GroupElement};
pub use metric::{
    base_metric_matrix, hausdorff_distance, induced_metric, induced_metric_matrix,
    max_translate_metric, metric_matrix, BaseMetric, BaseMetricSpec, FieldSampler, MetricField,
    PairDistance,
};
