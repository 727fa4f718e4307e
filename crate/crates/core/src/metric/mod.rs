//! Base metrics, finite-set Hausdorff distance and induced Hausdorff metrics.
//!
//! Distances are extended reals stored as `f64`: `f64::INFINITY` is the
//! "no finite distance" sentinel and propagates through min/max/sum the way
//! the extended metric algebra requires (`min(∞, a) = a`, `max(∞, a) = ∞`,
//! `a + ∞ = ∞`). NaN never appears in a valid field.

mod field;
pub mod io;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::generators::GeneratorSet;
use crate::group::{wrap_half, Coords, Group, GroupElement};

pub use field::{
    base_metric_matrix, induced_metric_matrix, metric_matrix, FieldSampler, MetricField,
};

/// Tolerance used to match points against a user table.
const TABLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseMetricSpec {
    /// Euclidean distance of chart coordinates (ℝⁿ, H³).
    Euclidean,
    /// Flat quotient metric on Tⁿ: Euclidean norm of the per-axis
    /// `min(|Δ|, 1 - |Δ|)`.
    ChartQuotient,
    /// `|arctan x - arctan y|` on ℝ.
    ArctanPullback,
    /// `|x^{1/3} - y^{1/3}|` on ℝ.
    CuberootPullback,
    /// Chord length `2 sin(π Δ)` of T¹ embedded as the unit circle.
    ChordalCircle,
    /// Right-invariant Cygan–Korányi gauge distance `N(p q⁻¹)` on H³, with
    /// `N(x, y, τ) = ((x² + y²)² + 16 τ²)^{1/4}` in exponential coordinates.
    KoranyiGauge,
    /// Explicit distance table over a finite list of points.
    UserTable {
        points: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
    },
}

impl BaseMetricSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BaseMetricSpec::Euclidean => "euclidean",
            BaseMetricSpec::ChartQuotient => "chart_quotient",
            BaseMetricSpec::ArctanPullback => "arctan_pullback",
            BaseMetricSpec::CuberootPullback => "cuberoot_pullback",
            BaseMetricSpec::ChordalCircle => "chordal_circle",
            BaseMetricSpec::KoranyiGauge => "koranyi_gauge",
            BaseMetricSpec::UserTable { .. } => "user_table",
        }
    }
}

/// Pointwise distance on chart coordinates. Implemented by analytic base
/// metrics and by interpolated metric fields.
pub trait PairDistance: Sync {
    fn group(&self) -> Group;

    fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64>;

    /// Whether `distance` can be evaluated at `a`.
    fn covers(&self, _a: &[f64]) -> bool {
        true
    }

    /// `d(a + s, b + s) = d(a, b)` for every translation `s` of an abelian model.
    fn translation_invariant(&self) -> bool {
        false
    }
}

/// A validated base metric bound to its group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseMetric {
    group: Group,
    spec: BaseMetricSpec,
}

impl BaseMetric {
    pub fn new(group: Group, spec: BaseMetricSpec) -> Result<Self> {
        let ok = match &spec {
            BaseMetricSpec::Euclidean => !group.is_periodic(),
            BaseMetricSpec::ChartQuotient => group.is_periodic(),
            BaseMetricSpec::ArctanPullback | BaseMetricSpec::CuberootPullback => {
                group == Group::Real { dim: 1 }
            }
            BaseMetricSpec::ChordalCircle => group == Group::Torus { dim: 1 },
            BaseMetricSpec::KoranyiGauge => group == Group::Heisenberg,
            BaseMetricSpec::UserTable { points, values } => {
                let n = points.len();
                if values.len() != n || values.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidArgument(
                        "user table must be a square matrix matching its point list".into(),
                    ));
                }
                if points.iter().any(|p| p.len() != group.dim()) {
                    return Err(Error::Dimension {
                        expected: group.dim(),
                        got: points
                            .iter()
                            .map(Vec::len)
                            .find(|l| *l != group.dim())
                            .unwrap_or(0),
                    });
                }
                true
            }
        };
        if !ok {
            return Err(Error::MetricGroup {
                metric: spec.name(),
                group,
            });
        }
        Ok(Self { group, spec })
    }

    pub fn spec(&self) -> &BaseMetricSpec {
        &self.spec
    }

    /// Distance between two group elements.
    pub fn eval(&self, p: &GroupElement, q: &GroupElement) -> Result<f64> {
        for g in [p.group, q.group] {
            if g != self.group {
                return Err(Error::GroupMismatch {
                    left: self.group,
                    right: g,
                });
            }
        }
        self.distance(&p.coords, &q.coords)
    }

    fn table_index(&self, points: &[Vec<f64>], x: &[f64]) -> Result<usize> {
        points
            .iter()
            .position(|p| self.group.approx_eq(p, x, TABLE_TOL))
            .ok_or_else(|| Error::TableLookup { coords: x.to_vec() })
    }
}

impl PairDistance for BaseMetric {
    fn group(&self) -> Group {
        self.group
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        Ok(match &self.spec {
            BaseMetricSpec::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            BaseMetricSpec::ChartQuotient => a
                .iter()
                .zip(b)
                .map(|(x, y)| wrap_half(y - x).powi(2))
                .sum::<f64>()
                .sqrt(),
            BaseMetricSpec::ArctanPullback => (a[0].atan() - b[0].atan()).abs(),
            BaseMetricSpec::CuberootPullback => (a[0].cbrt() - b[0].cbrt()).abs(),
            BaseMetricSpec::ChordalCircle => 2.0 * (PI * wrap_half(b[0] - a[0]).abs()).sin(),
            BaseMetricSpec::KoranyiGauge => {
                // p q^{-1} in matrix coordinates, then exponential coordinates
                let x = a[0] - b[0];
                let y = a[1] - b[1];
                let z = a[2] - b[2] - b[1] * x;
                let tau = z - 0.5 * x * y;
                let r2 = x * x + y * y;
                (r2 * r2 + 16.0 * tau * tau).sqrt().sqrt()
            }
            BaseMetricSpec::UserTable { points, values } => {
                let i = self.table_index(points, a)?;
                let j = self.table_index(points, b)?;
                values[i][j]
            }
        })
    }

    fn covers(&self, a: &[f64]) -> bool {
        match &self.spec {
            BaseMetricSpec::UserTable { points, .. } => self.table_index(points, a).is_ok(),
            _ => true,
        }
    }

    fn translation_invariant(&self) -> bool {
        matches!(
            (&self.spec, self.group),
            (BaseMetricSpec::Euclidean, Group::Real { .. })
                | (BaseMetricSpec::ChartQuotient, Group::Torus { .. })
                | (BaseMetricSpec::ChordalCircle, Group::Torus { .. })
        )
    }
}

/// Hausdorff distance between two finite index sets given a distance
/// callback, by exact double enumeration.
///
/// For each point of one set the scan over the other set starts at the same
/// index and stops as soon as the running minimum cannot raise the current
/// maximum; the result is the exact max-min value.
pub fn hausdorff_by<F>(na: usize, nb: usize, mut dist: F) -> Result<f64>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    if na == 0 || nb == 0 {
        return Err(Error::EmptySet);
    }
    let mut cmax = 0.0_f64;
    for pass in 0..2 {
        let (n_from, n_to) = if pass == 0 { (na, nb) } else { (nb, na) };
        for i in 0..n_from {
            let mut best = f64::INFINITY;
            let start = i.min(n_to - 1);
            for step in 0..n_to {
                let j = (start + step) % n_to;
                let d = if pass == 0 { dist(i, j)? } else { dist(j, i)? };
                if d < best {
                    best = d;
                }
                if best <= cmax {
                    break;
                }
            }
            if best > cmax {
                cmax = best;
            }
        }
    }
    Ok(cmax)
}

pub fn hausdorff_distance(
    a: &[GroupElement],
    b: &[GroupElement],
    metric: &dyn PairDistance,
) -> Result<f64> {
    hausdorff_by(a.len(), b.len(), |i, j| {
        metric.distance(&a[i].coords, &b[j].coords)
    })
}

/// Right translates `p · x_j` of a point by every generator.
pub(crate) fn translates(group: Group, p: &[f64], gens: &[Coords]) -> Vec<Coords> {
    gens.iter()
        .map(|x| {
            let mut out: Coords = SmallVec::from_elem(0.0, p.len());
            group.mul_into(p, x, &mut out);
            out
        })
        .collect()
}

fn check_pair(x: &GeneratorSet, p: &GroupElement, q: &GroupElement) -> Result<()> {
    if !x.is_certified() {
        return Err(Error::MissingCertificate);
    }
    for g in [p.group, q.group] {
        if g != x.group() {
            return Err(Error::GroupMismatch {
                left: x.group(),
                right: g,
            });
        }
    }
    Ok(())
}

/// Induced Hausdorff metric `d_X(p, q) = d_H(pX, qX)`.
pub fn induced_metric(
    p: &GroupElement,
    q: &GroupElement,
    x: &GeneratorSet,
    metric: &dyn PairDistance,
) -> Result<f64> {
    check_pair(x, p, q)?;
    let pa = translates(x.group(), &p.coords, x.coords());
    let qa = translates(x.group(), &q.coords, x.coords());
    hausdorff_by(pa.len(), qa.len(), |i, j| metric.distance(&pa[i], &qa[j]))
}

/// Maximum over translates `d_M(p, q) = max_j d(p x_j, q x_j)`.
pub fn max_translate_metric(
    p: &GroupElement,
    q: &GroupElement,
    x: &GeneratorSet,
    metric: &dyn PairDistance,
) -> Result<f64> {
    check_pair(x, p, q)?;
    let pa = translates(x.group(), &p.coords, x.coords());
    let qa = translates(x.group(), &q.coords, x.coords());
    pa.iter()
        .zip(&qa)
        .try_fold(0.0_f64, |m, (a, b)| Ok(m.max(metric.distance(a, b)?)))
}
