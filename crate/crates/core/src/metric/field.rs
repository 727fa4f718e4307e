use std::sync::Arc;

use rayon::prelude::*;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::generators::GeneratorSet;
use crate::grid::Grid;
use crate::group::{Coords, Group};

use super::{translates, BaseMetric, PairDistance};

/// Lattice offsets closer than this to an integer count as integral.
const LATTICE_SNAP: f64 = 1e-9;

/// Symmetric distance matrix over a sampled window.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    label: String,
}

impl MetricField {
    pub fn from_values(
        grid: Arc<Grid>,
        values: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = grid.len();
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "field of {} values does not fit a grid of {} points",
                values.len(),
                n
            )));
        }
        Ok(Self {
            grid,
            values,
            label: label.into(),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.grid.len();
        self.values[i * n + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Largest finite value over core pairs.
    pub fn core_diameter(&self) -> f64 {
        let core = self.grid.core_indices();
        core.iter()
            .flat_map(|&i| core.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .fold(0.0, f64::max)
    }

    pub fn has_infinite(&self) -> bool {
        self.values.iter().any(|v| v.is_infinite())
    }

    /// Interpolating view used as the source metric of the next flow step.
    pub fn sampler(&self) -> FieldSampler<'_> {
        FieldSampler { field: self }
    }
}

/// Fills a field from a pointwise distance, in parallel over rows. Only the
/// upper triangle is evaluated; the diagonal is zero.
pub fn metric_matrix<F>(grid: Arc<Grid>, label: impl Into<String>, f: F) -> Result<MetricField>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let n = grid.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| f(i, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    MetricField::from_values(grid, values, label)
}

pub fn base_metric_matrix(grid: Arc<Grid>, metric: &BaseMetric) -> Result<MetricField> {
    if grid.group != metric.group() {
        return Err(Error::GroupMismatch {
            left: grid.group,
            right: metric.group(),
        });
    }
    let pts: Vec<Coords> = (0..grid.len()).map(|i| grid.coords(i)).collect();
    metric_matrix(grid, metric.spec().name(), |i, j| {
        metric.distance(&pts[i], &pts[j])
    })
}

/// Full induced-metric matrix `d_X(p_i, p_j)` over the grid.
///
/// Every translate `p_i · x_j` must be covered by `src`; otherwise a
/// truncation error names the first offending grid point and generator.
pub fn induced_metric_matrix(
    grid: Arc<Grid>,
    src: &dyn PairDistance,
    x: &GeneratorSet,
) -> Result<MetricField> {
    if !x.is_certified() {
        return Err(Error::MissingCertificate);
    }
    let group = grid.group;
    let table: Vec<Vec<Coords>> = (0..grid.len())
        .map(|i| translates(group, &grid.coords(i), x.coords()))
        .collect();
    for (i, row) in table.iter().enumerate() {
        if let Some(j) = row.iter().position(|c| !src.covers(c)) {
            return Err(Error::Truncation {
                point: i,
                coords: grid.coords(i).to_vec(),
                generator: j,
            });
        }
    }
    metric_matrix(grid, "induced", |i, j| {
        let (a, b) = (&table[i], &table[j]);
        super::hausdorff_by(a.len(), b.len(), |s, t| src.distance(&a[s], &b[t]))
    })
}

/// Interpolating evaluation of a [`MetricField`] at off-grid points.
///
/// When the two query points differ by a whole lattice vector the field is
/// interpolated along pairs sharing that separation (exact at grid points
/// and free of the kink on the diagonal); otherwise both endpoints are
/// interpolated multilinearly over their cells.
#[derive(Clone, Copy, Debug)]
pub struct FieldSampler<'a> {
    field: &'a MetricField,
}

type Corners = SmallVec<[(SmallVec<[i64; 4]>, f64); 8]>;

impl FieldSampler<'_> {
    /// Grid cell corners around a fractional position with their weights.
    fn corners(&self, pos: &[f64]) -> Corners {
        let mut out: Corners = SmallVec::new();
        out.push((SmallVec::new(), 1.0));
        for &u in pos {
            let base = u.floor();
            let frac = u - base;
            let mut next: Corners = SmallVec::new();
            for (idx, w) in &out {
                let mut lo = idx.clone();
                lo.push(base as i64);
                next.push((lo, w * (1.0 - frac)));
                if frac > 0.0 {
                    let mut hi = idx.clone();
                    hi.push(base as i64 + 1);
                    next.push((hi, w * frac));
                }
            }
            out = next;
        }
        out
    }

    fn index(&self, idx: &[i64]) -> Result<usize> {
        self.field
            .grid
            .wrapped_index(idx)
            .ok_or_else(|| Error::OutOfWindow {
                coords: idx.iter().map(|k| *k as f64).collect(),
            })
    }
}

impl PairDistance for FieldSampler<'_> {
    fn group(&self) -> Group {
        self.field.grid.group
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let grid = &self.field.grid;
        let pa = grid
            .position(a)
            .ok_or_else(|| Error::OutOfWindow { coords: a.to_vec() })?;
        let pb = grid
            .position(b)
            .ok_or_else(|| Error::OutOfWindow { coords: b.to_vec() })?;
        let shift: Option<SmallVec<[i64; 4]>> = pa
            .iter()
            .zip(&pb)
            .map(|(u, v)| {
                let s = v - u;
                let r = s.round();
                ((s - r).abs() < LATTICE_SNAP).then_some(r as i64)
            })
            .collect();
        let mut acc = 0.0;
        match shift {
            Some(shift) => {
                for (idx, w) in self.corners(&pa) {
                    if w == 0.0 {
                        continue;
                    }
                    let other: SmallVec<[i64; 4]> =
                        idx.iter().zip(&shift).map(|(k, s)| k + s).collect();
                    let v = self.field.get(self.index(&idx)?, self.index(&other)?);
                    acc += w * v;
                }
            }
            None => {
                let cb = self.corners(&pb);
                for (ia, wa) in self.corners(&pa) {
                    if wa == 0.0 {
                        continue;
                    }
                    let i = self.index(&ia)?;
                    for (ib, wb) in &cb {
                        if *wb == 0.0 {
                            continue;
                        }
                        acc += wa * wb * self.field.get(i, self.index(ib)?);
                    }
                }
            }
        }
        Ok(acc)
    }

    fn covers(&self, a: &[f64]) -> bool {
        self.field.grid.contains(a)
    }
}
