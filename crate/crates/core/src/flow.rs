//! Intrinsic-ization and the flow `d^{i+1} = intrinsic((d^i)_X)`.
//!
//! Path metrics are discretized on the grid's Chebyshev stencil graph: the
//! intrinsic metric of a field is the shortest-path metric of the graph whose
//! edges carry the field values. A flow step therefore only needs `d_X` on
//! stencil edges; the full matrix is the shortest-path closure.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::apsp::{shortest_paths, ApspMethod, Graph};
use crate::error::{Error, Result};
use crate::generators::{GeneratorSet, PointIndex, DEDUP_TOL};
use crate::grid::Grid;
use crate::group::{Coords, GroupElement};
use crate::metric::{hausdorff_by, translates, BaseMetric, MetricField, PairDistance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdjacencySpec {
    pub stencil_radius: usize,
}

impl Default for AdjacencySpec {
    fn default() -> Self {
        Self { stencil_radius: 2 }
    }
}

impl AdjacencySpec {
    pub fn validate(&self) -> Result<()> {
        if self.stencil_radius == 0 {
            return Err(Error::InvalidArgument(
                "stencil_radius must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Length of the polyline through `points` under `metric`.
pub fn path_length(points: &[GroupElement], metric: &dyn PairDistance) -> Result<f64> {
    points.windows(2).try_fold(0.0, |acc, w| {
        Ok(acc + metric.distance(&w[0].coords, &w[1].coords)?)
    })
}

fn closure(
    grid: &Arc<Grid>,
    neighbors: &[Vec<usize>],
    weights: &[Vec<f64>],
    method: ApspMethod,
    label: String,
) -> Result<MetricField> {
    let graph = Graph::from_edge_weights(neighbors, weights);
    MetricField::from_values(grid.clone(), shortest_paths(&graph, method), label)
}

/// Shortest-path metric of the stencil graph weighted by `field`.
pub fn intrinsicize(
    field: &MetricField,
    adj: AdjacencySpec,
    method: ApspMethod,
) -> Result<MetricField> {
    adj.validate()?;
    let grid = field.grid();
    let neighbors = grid.neighbors(adj.stencil_radius);
    let weights: Vec<Vec<f64>> = neighbors
        .iter()
        .enumerate()
        .map(|(i, list)| list.iter().map(|&j| field.get(i, j)).collect())
        .collect();
    closure(
        grid,
        &neighbors,
        &weights,
        method,
        format!("intrinsic({})", field.label()),
    )
}

/// Signed lattice offset from node `i` to node `j`, wrapped to the short
/// representative on periodic axes.
fn lattice_offset(grid: &Grid, i: usize, j: usize) -> SmallVec<[i64; 4]> {
    let a = grid.multi_index(i);
    let b = grid.multi_index(j);
    a.iter()
        .zip(&b)
        .zip(&grid.axes)
        .map(|((x, y), ax)| {
            let mut d = *y as i64 - *x as i64;
            if ax.periodic {
                let n = ax.count as i64;
                d = d.rem_euclid(n);
                if 2 * d >= n {
                    d -= n;
                }
            }
            d
        })
        .collect()
}

/// `d_H(X, X·δ)` for a translation-invariant source on an abelian group,
/// skipping points of one set that also belong to the other.
fn shifted_hausdorff(
    src: &dyn PairDistance,
    gens: &[Coords],
    index: &PointIndex,
    delta: &[f64],
) -> Result<f64> {
    let group = src.group();
    let shifted = translates(group, delta, gens);
    let mut shifted_index = PointIndex::new(group, DEDUP_TOL);
    for c in &shifted {
        shifted_index.insert(c);
    }
    let a_in_b: Vec<bool> = gens
        .iter()
        .map(|c| shifted_index.find(c).is_some())
        .collect();
    let b_in_a: Vec<bool> = shifted.iter().map(|c| index.find(c).is_some()).collect();
    let a_out: Vec<usize> = (0..gens.len()).filter(|i| !a_in_b[*i]).collect();
    let b_out: Vec<usize> = (0..shifted.len()).filter(|i| !b_in_a[*i]).collect();
    // points shared by both sets contribute zero to either directed distance
    let one_way = |from: &[usize], from_set: &[Coords], to_set: &[Coords]| -> Result<f64> {
        let mut cmax = 0.0_f64;
        for &i in from {
            let mut best = f64::INFINITY;
            for c in to_set {
                let d = src.distance(&from_set[i], c)?;
                if d < best {
                    best = d;
                    if best <= cmax {
                        break;
                    }
                }
            }
            cmax = cmax.max(best);
        }
        Ok(cmax)
    };
    Ok(one_way(&a_out, gens, &shifted)?.max(one_way(&b_out, &shifted, gens)?))
}

/// Induced-metric edge weights `d_X(p_i, p_j)` over the stencil graph.
///
/// Translates of core points must stay covered by `src`; padding points use
/// the generators whose translates are covered for both endpoints.
fn induced_edge_weights(
    grid: &Grid,
    neighbors: &[Vec<usize>],
    src: &dyn PairDistance,
    x: &GeneratorSet,
) -> Result<Vec<Vec<f64>>> {
    let group = grid.group;
    let gens = x.coords();
    let upper: Vec<Vec<f64>> = if src.translation_invariant() && group.is_abelian() {
        let mut index = PointIndex::new(group, DEDUP_TOL);
        for c in gens {
            index.insert(c);
        }
        let mut offsets: Vec<SmallVec<[i64; 4]>> = neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().filter(move |j| **j > i).map(move |j| (i, *j)))
            .map(|(i, j)| lattice_offset(grid, i, j))
            .collect();
        offsets.sort();
        offsets.dedup();
        let steps: Vec<f64> = grid.axes.iter().map(|a| a.step()).collect();
        let values: Vec<f64> = offsets
            .par_iter()
            .map(|o| {
                let delta: Coords = o.iter().zip(&steps).map(|(k, h)| *k as f64 * h).collect();
                shifted_hausdorff(src, gens, &index, &delta)
            })
            .collect::<Result<_>>()?;
        let cache: HashMap<_, _> = offsets.into_iter().zip(values).collect();
        neighbors
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.iter()
                    .filter(|j| **j > i)
                    .map(|&j| cache[&lattice_offset(grid, i, j)])
                    .collect()
            })
            .collect()
    } else {
        let table: Vec<Vec<Coords>> = (0..grid.len())
            .into_par_iter()
            .map(|i| translates(group, &grid.coords(i), gens))
            .collect();
        let covered: Vec<Vec<bool>> = table
            .par_iter()
            .map(|row| row.iter().map(|c| src.covers(c)).collect())
            .collect();
        for (i, row) in covered.iter().enumerate() {
            if grid.is_core(i) {
                if let Some(j) = row.iter().position(|c| !c) {
                    return Err(Error::Truncation {
                        point: i,
                        coords: grid.coords(i).to_vec(),
                        generator: j,
                    });
                }
            }
        }
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                neighbors[i]
                    .iter()
                    .filter(|j| **j > i)
                    .map(|&j| {
                        let keep: SmallVec<[usize; 8]> = (0..gens.len())
                            .filter(|s| covered[i][*s] && covered[j][*s])
                            .collect();
                        let (a, b) = (&table[i], &table[j]);
                        hausdorff_by(keep.len(), keep.len(), |s, t| {
                            src.distance(&a[keep[s]], &b[keep[t]])
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?
    };
    // mirror the upper triangle onto the sorted neighbor lists
    Ok(neighbors
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut k_up = 0;
            l.iter()
                .map(|&j| {
                    if j > i {
                        k_up += 1;
                        upper[i][k_up - 1]
                    } else {
                        let pos = neighbors[j]
                            .iter()
                            .filter(|m| **m > j)
                            .position(|m| *m == i)
                            .expect("stencil is symmetric");
                        upper[j][pos]
                    }
                })
                .collect()
        })
        .collect())
}

/// One flow step with an explicit source metric for the `d_X` evaluations.
pub fn flow_step_from(
    src: &dyn PairDistance,
    grid: &Arc<Grid>,
    x: &GeneratorSet,
    adj: AdjacencySpec,
    method: ApspMethod,
    label: String,
) -> Result<MetricField> {
    adj.validate()?;
    if !x.is_certified() {
        return Err(Error::MissingCertificate);
    }
    if src.group() != grid.group || x.group() != grid.group {
        return Err(Error::GroupMismatch {
            left: grid.group,
            right: if src.group() != grid.group {
                src.group()
            } else {
                x.group()
            },
        });
    }
    let neighbors = grid.neighbors(adj.stencil_radius);
    let weights = induced_edge_weights(grid, &neighbors, src, x)?;
    closure(grid, &neighbors, &weights, method, label)
}

fn next_label(label: &str) -> String {
    match label
        .strip_prefix("d^")
        .and_then(|s| s.parse::<usize>().ok())
    {
        Some(k) => format!("d^{}", k + 1),
        None => "d^1".to_string(),
    }
}

/// `intrinsic((field)_X)`, reading `field` through its interpolating sampler.
pub fn flow_step(
    field: &MetricField,
    x: &GeneratorSet,
    adj: AdjacencySpec,
    method: ApspMethod,
) -> Result<MetricField> {
    flow_step_from(
        &field.sampler(),
        field.grid(),
        x,
        adj,
        method,
        next_label(field.label()),
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetainPolicy {
    All,
    #[default]
    Ends,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub adjacency: AdjacencySpec,
    pub tol: f64,
    pub max_iter: usize,
    /// Divergence threshold as a multiple of the initial core diameter.
    pub divergence_factor: f64,
    pub monotone_slack: f64,
    /// Abort when an iterate decreases. Monotonicity is guaranteed only for a
    /// finite `X`; turn this off for sampled compact sets.
    pub enforce_monotone: bool,
    pub retain: RetainPolicy,
    pub apsp: ApspMethod,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            adjacency: AdjacencySpec::default(),
            tol: 1e-4,
            max_iter: 60,
            divergence_factor: 10.0,
            monotone_slack: 1e-9,
            enforce_monotone: true,
            retain: RetainPolicy::Ends,
            apsp: ApspMethod::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Converged { tol: f64, iterations: usize },
    MaxIterReached { iterations: usize },
    Diverged { threshold: f64, iteration: usize },
}

#[derive(Clone, Debug)]
pub struct FlowState {
    /// Retained iterates as `(index, field)`; index 0 is the base metric.
    pub iterates: Vec<(usize, MetricField)>,
    /// Sup-norm change on core pairs, one entry per step.
    pub deltas: Vec<f64>,
    /// Core diameter of every iterate including the base.
    pub core_diameters: Vec<f64>,
    pub verdict: Verdict,
    pub threshold: f64,
    /// Core points within one reach radius of the core boundary.
    pub boundary_band: Vec<usize>,
    /// Some pair of grid points has no connecting stencil path.
    pub disconnected: bool,
}

impl FlowState {
    pub fn last(&self) -> &MetricField {
        &self.iterates.last().expect("flow keeps the base iterate").1
    }

    pub fn first(&self) -> &MetricField {
        &self.iterates[0].1
    }

    pub fn steps(&self) -> usize {
        self.deltas.len()
    }
}

fn core_pairs(grid: &Grid) -> Vec<usize> {
    grid.core_indices()
}

fn check_monotone(
    prev: &MetricField,
    next: &MetricField,
    core: &[usize],
    iteration: usize,
    slack: f64,
    enforce: bool,
) -> Result<f64> {
    let mut delta = 0.0_f64;
    for &i in core {
        for &j in core {
            let (a, b) = (prev.get(i, j), next.get(i, j));
            if enforce && b < a - slack {
                return Err(Error::Monotonicity {
                    iteration,
                    i,
                    j,
                    before: a,
                    after: b,
                    slack,
                });
            }
            let d = if a == b { 0.0 } else { (b - a).abs() };
            delta = delta.max(d);
        }
    }
    Ok(delta)
}

/// Iterates the flow from `base` until convergence, divergence or the
/// iteration budget.
pub fn run_flow(
    grid: Arc<Grid>,
    base: &BaseMetric,
    x: &GeneratorSet,
    config: &FlowConfig,
) -> Result<FlowState> {
    run_flow_with(grid, base, x, config, |_, _| {})
}

/// [`run_flow`] with a callback receiving every iterate as it is produced.
pub fn run_flow_with<F>(
    grid: Arc<Grid>,
    base: &BaseMetric,
    x: &GeneratorSet,
    config: &FlowConfig,
    mut observer: F,
) -> Result<FlowState>
where
    F: FnMut(usize, &MetricField),
{
    config.adjacency.validate()?;
    if !(config.tol > 0.0) || !(config.divergence_factor > 1.0) {
        return Err(Error::InvalidArgument(
            "tol must be positive and divergence_factor above 1".into(),
        ));
    }
    let reach = x.reach_radius();
    if !grid.group.is_periodic() && grid.window.padding + 1e-12 < reach {
        return Err(Error::InvalidWindow(format!(
            "padding {} is below the generator reach radius {reach}",
            grid.window.padding
        )));
    }
    let core = core_pairs(&grid);
    let d0 = crate::metric::base_metric_matrix(grid.clone(), base)?.with_label("d^0");
    observer(0, &d0);
    let diam0 = d0.core_diameter();
    let threshold = config.divergence_factor * diam0;
    let mut state = FlowState {
        iterates: vec![(0, d0.clone())],
        deltas: Vec::new(),
        core_diameters: vec![diam0],
        verdict: Verdict::MaxIterReached {
            iterations: config.max_iter,
        },
        threshold,
        boundary_band: grid.boundary_band(reach),
        disconnected: false,
    };
    let mut prev = d0;
    for it in 1..=config.max_iter {
        let next = if it == 1 {
            flow_step_from(
                base,
                &grid,
                x,
                config.adjacency,
                config.apsp,
                "d^1".to_string(),
            )?
        } else {
            flow_step(&prev, x, config.adjacency, config.apsp)?
        };
        observer(it, &next);
        let delta = check_monotone(
            &prev,
            &next,
            &core,
            it,
            config.monotone_slack,
            config.enforce_monotone,
        )?;
        let diam = next.core_diameter();
        state.deltas.push(delta);
        state.core_diameters.push(diam);
        state.disconnected |= next.has_infinite();
        let blew_up = core.iter().any(|&i| {
            core.iter().any(|&j| {
                let v = next.get(i, j);
                v > threshold || (v.is_infinite() && prev.get(i, j).is_finite())
            })
        });
        match config.retain {
            RetainPolicy::All => state.iterates.push((it, next.clone())),
            RetainPolicy::Ends => {
                if state.iterates.len() > 1 {
                    state.iterates.pop();
                }
                state.iterates.push((it, next.clone()));
            }
        }
        prev = next;
        if blew_up {
            state.verdict = Verdict::Diverged {
                threshold,
                iteration: it,
            };
            break;
        }
        if delta < config.tol {
            state.verdict = Verdict::Converged {
                tol: config.tol,
                iterations: it,
            };
            break;
        }
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldComparison {
    pub sup_diff: f64,
    pub mean_diff: f64,
    pub argmax: (usize, usize),
}

/// Sup and mean absolute difference over core pairs.
pub fn compare_fields(a: &MetricField, b: &MetricField) -> Result<FieldComparison> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let core = a.grid().core_indices();
    let mut out = FieldComparison {
        sup_diff: 0.0,
        mean_diff: 0.0,
        argmax: (0, 0),
    };
    let mut sum = 0.0;
    for &i in &core {
        for &j in &core {
            let (x, y) = (a.get(i, j), b.get(i, j));
            let d = if x == y { 0.0 } else { (x - y).abs() };
            sum += d;
            if d > out.sup_diff {
                out.sup_diff = d;
                out.argmax = (i, j);
            }
        }
    }
    out.mean_diff = sum / (core.len() * core.len()).max(1) as f64;
    Ok(out)
}
