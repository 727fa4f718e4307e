//! Right-invariant envelope `sup_σ d(xσ, yσ)` and the limit norm estimator
//! `F̃(g, v) = sup_σ limsup_{t→0} d(exp(tv) g σ, g σ) / |t|`.
//!
//! Suprema over the group are maxima over finite σ samples, hence lower
//! bounds; every report carries the size and description of its sample.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::apsp::{shortest_paths, ApspMethod, Graph};
use crate::error::{Error, Result};
use crate::flow::AdjacencySpec;
use crate::generators::GeneratorSet;
use crate::grid::Grid;
use crate::group::{AlgebraVector, Coords, Group, GroupElement};
use crate::metric::{MetricField, PairDistance};
use crate::semigroup::generate_words;

/// Points `σ` over which suprema are sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSample {
    pub description: String,
    pub points: Vec<GroupElement>,
}

impl SigmaSample {
    pub fn new(description: impl Into<String>, points: Vec<GroupElement>) -> Self {
        Self {
            description: description.into(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The grid refined to half its step on every axis, padding included.
    pub fn half_step_lattice(grid: &Grid) -> Self {
        let group = grid.group;
        let mut per_axis: Vec<Vec<f64>> = Vec::new();
        for a in &grid.axes {
            let mut xs = Vec::with_capacity(2 * a.count);
            for k in 0..a.count {
                xs.push(a.coord(k));
                if a.periodic || k + 1 < a.count {
                    xs.push(a.coord(k) + 0.5 * a.step());
                }
            }
            per_axis.push(xs);
        }
        let mut points = vec![Coords::new()];
        for xs in &per_axis {
            points = points
                .into_iter()
                .flat_map(|p| {
                    xs.iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(*x);
                        q
                    })
                })
                .collect();
        }
        let points = points
            .into_iter()
            .map(|mut c| {
                group.normalize(&mut c);
                GroupElement { group, coords: c }
            })
            .collect();
        Self::new("half-step lattice of the padded grid", points)
    }

    /// The grid points plus the word cloud of `S_X` up to `maxlen`.
    pub fn grid_and_words(grid: &Grid, x: &GeneratorSet, maxlen: usize) -> Result<Self> {
        let cloud = generate_words(x, maxlen, &grid.window)?;
        let mut points = grid.points();
        points.extend(cloud.all_points().cloned());
        Ok(Self::new(
            format!("grid points and S_X words up to length {maxlen}"),
            points,
        ))
    }
}

/// Decreasing `t` values `scale · 2^{-k}`, `k = 1..=steps`.
pub fn dyadic_schedule(scale: f64, steps: usize) -> Vec<f64> {
    (1..=steps).map(|k| scale * 0.5f64.powi(k as i32)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinslerOptions {
    /// Also evaluate `exp(-tv)`.
    pub both_signs: bool,
    /// Tail maxima above this multiple of the Lipschitz scale may diverge.
    pub divergence_factor: f64,
    /// Relative growth per refinement required of the last three steps.
    pub growth: f64,
    /// Reference quotient; defaults to the quotient at the largest `t`.
    pub lipschitz_scale: Option<f64>,
}

impl Default for FinslerOptions {
    fn default() -> Self {
        Self {
            both_signs: false,
            divergence_factor: 100.0,
            growth: 0.1,
            lipschitz_scale: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinslerEstimate {
    pub base_point: GroupElement,
    pub direction: AlgebraVector,
    pub t_schedule: Vec<f64>,
    pub sigma_description: String,
    pub sigma_count: usize,
    /// Max over σ of the difference quotient, per `t`.
    pub trend: Vec<f64>,
    /// Max of the trend over the last third of the schedule.
    pub tail_max: f64,
    pub lipschitz_scale: f64,
    pub diverged: bool,
    /// `tail_max`, or +∞ when diverged.
    pub value: f64,
}

fn quotient_at(
    group: Group,
    metric: &dyn PairDistance,
    g: &[f64],
    v: &[f64],
    t: f64,
    sigma: &[GroupElement],
    both_signs: bool,
) -> Result<f64> {
    let signs: &[f64] = if both_signs { &[1.0, -1.0] } else { &[1.0] };
    let dim = group.dim();
    sigma
        .par_iter()
        .map(|s| {
            let mut gs: Coords = SmallVec::from_elem(0.0, dim);
            group.mul_into(g, &s.coords, &mut gs);
            let mut m = 0.0_f64;
            for sign in signs {
                let mut e: Coords = SmallVec::from_elem(0.0, dim);
                group.exp_into(v, sign * t, &mut e);
                let mut egs: Coords = SmallVec::from_elem(0.0, dim);
                group.mul_into(&e, &gs, &mut egs);
                if metric.covers(&egs) && metric.covers(&gs) {
                    m = m.max(metric.distance(&egs, &gs)? / t);
                }
            }
            Ok(m)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

pub fn finsler_estimate(
    g: &GroupElement,
    v: &AlgebraVector,
    metric: &dyn PairDistance,
    t_schedule: &[f64],
    sigma: &SigmaSample,
    opts: &FinslerOptions,
) -> Result<FinslerEstimate> {
    let group = metric.group();
    if g.group != group || v.group != group {
        return Err(Error::GroupMismatch {
            left: group,
            right: if g.group != group { g.group } else { v.group },
        });
    }
    if v.is_zero() {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    if t_schedule.len() < 4
        || t_schedule.windows(2).any(|w| !(w[1] < w[0]))
        || t_schedule.iter().any(|t| !(*t > 0.0))
    {
        return Err(Error::InvalidArgument(
            "t schedule must be at least four strictly decreasing positive values".into(),
        ));
    }
    if sigma.is_empty() {
        return Err(Error::EmptySet);
    }
    let trend = t_schedule
        .iter()
        .map(|t| {
            quotient_at(
                group,
                metric,
                &g.coords,
                &v.components,
                *t,
                &sigma.points,
                opts.both_signs,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let n = trend.len();
    let tail_len = n.div_ceil(3);
    let tail_max = trend[n - tail_len..].iter().copied().fold(0.0, f64::max);
    let lipschitz_scale = opts.lipschitz_scale.unwrap_or(trend[0]);
    let growing = trend[n - 4..]
        .windows(2)
        .all(|w| w[1] >= (1.0 + opts.growth) * w[0]);
    let diverged = tail_max > opts.divergence_factor * lipschitz_scale && growing;
    Ok(FinslerEstimate {
        base_point: g.clone(),
        direction: v.clone(),
        t_schedule: t_schedule.to_vec(),
        sigma_description: sigma.description.clone(),
        sigma_count: sigma.len(),
        trend,
        tail_max,
        lipschitz_scale,
        diverged,
        value: if diverged { f64::INFINITY } else { tail_max },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupLimsupReport {
    /// Max quotient over every `(t, σ)` of the schedule.
    pub global_max: f64,
    pub tail_estimate: f64,
    pub ratio: f64,
}

/// Compares the sup of the difference quotient over all sampled `t` with
/// its small-`t` tail estimate at the identity.
pub fn sup_equals_limsup_check(
    v: &AlgebraVector,
    metric: &dyn PairDistance,
    t_schedule: &[f64],
    sigma: &SigmaSample,
    opts: &FinslerOptions,
) -> Result<SupLimsupReport> {
    let e = finsler_estimate(&v.group.identity(), v, metric, t_schedule, sigma, opts)?;
    let global_max = e.trend.iter().copied().fold(0.0, f64::max);
    Ok(SupLimsupReport {
        global_max,
        tail_estimate: e.tail_max,
        ratio: global_max / e.tail_max,
    })
}

/// `sup_σ d(pσ, qσ)` over the sample.
pub fn bar_metric(
    p: &GroupElement,
    q: &GroupElement,
    metric: &dyn PairDistance,
    sigma: &SigmaSample,
) -> Result<f64> {
    bar_coords(metric, &p.coords, &q.coords, &sigma.points)
}

fn bar_coords(
    metric: &dyn PairDistance,
    p: &[f64],
    q: &[f64],
    sigma: &[GroupElement],
) -> Result<f64> {
    let group = metric.group();
    let dim = group.dim();
    sigma
        .par_iter()
        .map(|s| {
            let mut ps: Coords = SmallVec::from_elem(0.0, dim);
            let mut qs: Coords = SmallVec::from_elem(0.0, dim);
            group.mul_into(p, &s.coords, &mut ps);
            group.mul_into(q, &s.coords, &mut qs);
            metric.distance(&ps, &qs)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Intrinsic envelope: shortest paths over stencil edges weighted by the
/// sampled `sup_σ d(xσ, yσ)`.
///
/// Before building it, the limit norm is estimated along every basis
/// direction at the identity; a divergent quotient means the envelope is
/// infinite and is reported as an error.
pub fn right_invariant_envelope(
    metric: &dyn PairDistance,
    grid: &Arc<Grid>,
    adj: AdjacencySpec,
    sigma: &SigmaSample,
    t_schedule: &[f64],
    opts: &FinslerOptions,
) -> Result<MetricField> {
    adj.validate()?;
    let group = grid.group;
    for k in 0..group.dim() {
        let est = finsler_estimate(
            &group.identity(),
            &group.basis_vector(k),
            metric,
            t_schedule,
            sigma,
            opts,
        )?;
        if est.diverged {
            return Err(Error::EnvelopeInfinite { direction: k });
        }
    }
    let neighbors = grid.neighbors(adj.stencil_radius);
    let pts: Vec<Coords> = (0..grid.len()).map(|i| grid.coords(i)).collect();
    let weights: Vec<Vec<f64>> = neighbors
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.iter()
                .map(|&j| bar_coords(metric, &pts[i], &pts[j], &sigma.points))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let graph = Graph::from_edge_weights(&neighbors, &weights);
    MetricField::from_values(
        grid.clone(),
        shortest_paths(&graph, ApspMethod::Auto),
        "right-invariant envelope",
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    /// Max of `|d(xσ, yσ) - d(x, y)|` over sampled triples.
    pub max_abs: f64,
    /// Triple attaining `max_abs`, as grid indices of `x`, `y` and the σ index.
    pub worst: Option<(usize, usize, usize)>,
    /// Max of the defect minus `floor_abs + floor_rel · d(x, y)`; nonpositive
    /// when every triple is within the floor.
    pub max_excess: f64,
    pub floor_abs: f64,
    pub floor_rel: f64,
    pub triples: usize,
}

/// Right-invariance defect of a field under the σ sample, using
/// nearest-grid-point lookup. `x, y` range over core points; triples whose
/// translates leave the grid are skipped.
pub fn right_invariance_defect(
    field: &MetricField,
    sigma: &[GroupElement],
    floor_abs: f64,
    floor_rel: f64,
) -> Result<DefectReport> {
    let grid = field.grid();
    let group = grid.group;
    let core = grid.core_indices();
    let moved: Vec<Vec<Option<usize>>> = sigma
        .par_iter()
        .map(|s| {
            if s.group != group {
                return Err(Error::GroupMismatch {
                    left: group,
                    right: s.group,
                });
            }
            let mut out: Coords = SmallVec::from_elem(0.0, group.dim());
            Ok(core
                .iter()
                .map(|&i| {
                    group.mul_into(&grid.coords(i), &s.coords, &mut out);
                    grid.nearest(&out)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    type Acc = (f64, Option<(usize, usize, usize)>, f64, usize);
    let (max_abs, worst, max_excess, triples) = moved
        .par_iter()
        .enumerate()
        .map(|(s, row)| {
            let mut acc: Acc = (0.0, None, f64::NEG_INFINITY, 0);
            for (a, &i) in core.iter().enumerate() {
                let Some(ti) = row[a] else { continue };
                for (b, &j) in core.iter().enumerate().skip(a + 1) {
                    let Some(tj) = row[b] else { continue };
                    let base = field.get(i, j);
                    let d = (field.get(ti, tj) - base).abs();
                    acc.3 += 1;
                    if d > acc.0 {
                        acc.0 = d;
                        acc.1 = Some((i, j, s));
                    }
                    acc.2 = acc.2.max(d - floor_abs - floor_rel * base);
                }
            }
            acc
        })
        .reduce(
            || (0.0, None, f64::NEG_INFINITY, 0),
            |x, y| {
                let (m, w) = if y.0 > x.0 || (y.0 == x.0 && x.1.is_none()) {
                    (y.0, y.1)
                } else {
                    (x.0, x.1)
                };
                (m, w, x.2.max(y.2), x.3 + y.3)
            },
        );
    Ok(DefectReport {
        max_abs,
        worst,
        max_excess,
        floor_abs,
        floor_rel,
        triples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityCheck {
    pub i: usize,
    pub j: usize,
    /// `λ` with `v_j = λ v_i`.
    pub lambda: f64,
    /// `F̃(v_j) / (|λ| F̃(v_i))`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    pub entries: Vec<FinslerEstimate>,
    /// One check per pair of parallel directions with finite entries.
    pub homogeneity: Vec<HomogeneityCheck>,
}

fn parallel_factor(a: &[f64], b: &[f64]) -> Option<f64> {
    let k = a.iter().position(|x| x.abs() > 0.0)?;
    let lambda = b[k] / a[k];
    let scale = a.iter().chain(b).fold(0.0_f64, |m, x| m.max(x.abs()));
    a.iter()
        .zip(b)
        .all(|(x, y)| (y - lambda * x).abs() <= 1e-12 * scale)
        .then_some(lambda)
}

pub fn norm_table(
    g: &GroupElement,
    directions: &[AlgebraVector],
    metric: &dyn PairDistance,
    t_schedule: &[f64],
    sigma: &SigmaSample,
    opts: &FinslerOptions,
) -> Result<NormTable> {
    let entries = directions
        .iter()
        .map(|v| finsler_estimate(g, v, metric, t_schedule, sigma, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut homogeneity = Vec::new();
    for i in 0..entries.len() {
        for j in (i + 1)..entries.len() {
            let (a, b) = (&entries[i], &entries[j]);
            if a.diverged || b.diverged {
                continue;
            }
            if let Some(lambda) = parallel_factor(&a.direction.components, &b.direction.components)
            {
                homogeneity.push(HomogeneityCheck {
                    i,
                    j,
                    lambda,
                    ratio: b.value / (lambda.abs() * a.value),
                });
            }
        }
    }
    Ok(NormTable {
        entries,
        homogeneity,
    })
}
