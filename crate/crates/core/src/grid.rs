//! Window sampling: regular grids over a chart window of a group model.
//!
//! A grid is the row-major product of per-axis samples (the first axis is
//! the slowest). Non-periodic axes are extended on both sides by whole grid
//! steps covering `padding`; the unpadded points form the *core*. Torus axes
//! cover the full period without a duplicate at the seam and wrap around.
//!
//! The index order is part of the public contract: `MetricField` rows and
//! columns, CSV files and reports all refer to it.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::group::{reduce_unit, Coords, Group, GroupElement};

/// Default cap on the number of grid points. Metric fields are dense
/// `n × n` matrices, so this bounds memory at roughly 0.5 GB.
pub const DEFAULT_POINT_CAP: usize = 8192;

/// Coordinates within this many grid steps of a lattice node are snapped to it.
const SNAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Points per axis over the unpadded bounds (endpoints included on
    /// non-periodic axes).
    pub resolution: Vec<usize>,
    /// Chart distance added on each side of non-periodic axes.
    #[serde(default)]
    pub padding: f64,
}

impl WindowSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>, padding: f64) -> Self {
        Self {
            lower,
            upper,
            resolution,
            padding,
        }
    }

    /// One-dimensional window `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64, resolution: usize, padding: f64) -> Self {
        Self::new(vec![lo], vec![hi], vec![resolution], padding)
    }

    /// Full-period torus window.
    pub fn torus(dim: usize, resolution: usize) -> Self {
        Self::new(vec![0.0; dim], vec![1.0; dim], vec![resolution; dim], 0.0)
    }

    pub fn with_padding(mut self, padding: f64) -> Self {
        self.padding = padding;
        self
    }

    pub fn validate(&self, group: Group) -> Result<()> {
        let d = group.dim();
        if self.lower.len() != d || self.upper.len() != d || self.resolution.len() != d {
            return Err(Error::InvalidWindow(format!(
                "bounds and resolution must have {d} entries for {group}"
            )));
        }
        if !(self.padding >= 0.0 && self.padding.is_finite()) {
            return Err(Error::InvalidWindow(format!(
                "padding must be finite and nonnegative, got {}",
                self.padding
            )));
        }
        for k in 0..d {
            if self.resolution[k] < 2 {
                return Err(Error::InvalidWindow(format!(
                    "resolution on axis {k} must be at least 2"
                )));
            }
            if !(self.lower[k] < self.upper[k])
                || !self.lower[k].is_finite()
                || !self.upper[k].is_finite()
            {
                return Err(Error::InvalidWindow(format!(
                    "axis {k} needs finite bounds lower < upper"
                )));
            }
            if group.is_periodic() && (self.lower[k] != 0.0 || self.upper[k] != 1.0) {
                return Err(Error::InvalidWindow(format!(
                    "torus axis {k} must span the full period [0, 1]"
                )));
            }
        }
        if group.is_periodic() && self.padding != 0.0 {
            return Err(Error::InvalidWindow(
                "torus windows wrap and take no padding".into(),
            ));
        }
        Ok(())
    }

    /// Largest axis extent of the unpadded window.
    pub fn scale(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, group: Group, coords: &[f64], margin: f64) -> bool {
        if group.is_periodic() {
            return true;
        }
        coords
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| *x >= l - margin - 1e-12 && *x <= u + margin + 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub width: f64,
    /// Number of steps across the unpadded bounds (`resolution - 1`, or the
    /// resolution itself on a periodic axis).
    pub intervals: usize,
    pub pad: usize,
    pub count: usize,
    pub periodic: bool,
}

impl Axis {
    #[inline]
    pub fn step(&self) -> f64 {
        self.width / self.intervals as f64
    }

    /// Coordinate of node `k` (padded index).
    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        let j = k as f64 - self.pad as f64;
        self.lower + self.width * j / self.intervals as f64
    }

    /// Fractional node index of `x`, or `None` outside the padded range.
    #[inline]
    pub fn position(&self, x: f64) -> Option<f64> {
        let mut u = if self.periodic {
            reduce_unit(x) * self.count as f64
        } else {
            (x - self.lower) * self.intervals as f64 / self.width + self.pad as f64
        };
        let r = u.round();
        if (u - r).abs() < SNAP {
            u = r;
        }
        if self.periodic {
            if u >= self.count as f64 {
                u -= self.count as f64;
            }
            Some(u)
        } else if u < 0.0 || u > (self.count - 1) as f64 {
            None
        } else {
            Some(u)
        }
    }

    #[inline]
    pub fn is_core(&self, k: usize) -> bool {
        k >= self.pad && k < self.count - self.pad
    }

    /// Wraps a signed node index; `None` when it leaves a non-periodic axis.
    #[inline]
    pub fn wrap(&self, k: i64) -> Option<usize> {
        let n = self.count as i64;
        if self.periodic {
            Some(k.rem_euclid(n) as usize)
        } else if k < 0 || k >= n {
            None
        } else {
            Some(k as usize)
        }
    }
}

/// A sampled window: the ordered grid points and the core mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub group: Group,
    pub window: WindowSpec,
    pub axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
}

/// Samples `window` on `group`. See the module docs for the ordering.
pub fn sample_window(group: Group, window: &WindowSpec) -> Result<Grid> {
    sample_window_capped(group, window, DEFAULT_POINT_CAP)
}

pub fn sample_window_capped(group: Group, window: &WindowSpec, cap: usize) -> Result<Grid> {
    window.validate(group)?;
    let mut axes = Vec::with_capacity(group.dim());
    let mut len: usize = 1;
    for k in 0..group.dim() {
        let res = window.resolution[k];
        let width = window.upper[k] - window.lower[k];
        let axis = if group.is_periodic() {
            Axis {
                lower: 0.0,
                width: 1.0,
                intervals: res,
                pad: 0,
                count: res,
                periodic: true,
            }
        } else {
            let step = width / (res - 1) as f64;
            let pad = (window.padding / step - 1e-9).ceil().max(0.0) as usize;
            Axis {
                lower: window.lower[k],
                width,
                intervals: res - 1,
                pad,
                count: res + 2 * pad,
                periodic: false,
            }
        };
        len = len
            .checked_mul(axis.count)
            .filter(|n| *n <= cap)
            .ok_or(Error::GridTooLarge {
                points: len.saturating_mul(axis.count),
                cap,
            })?;
        axes.push(axis);
    }
    let mut strides = vec![1usize; axes.len()];
    for k in (0..axes.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * axes[k + 1].count;
    }
    Ok(Grid {
        group,
        window: window.clone(),
        axes,
        strides,
        len,
    })
}

impl Grid {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn multi_index(&self, i: usize) -> SmallVec<[usize; 4]> {
        self.strides
            .iter()
            .zip(&self.axes)
            .map(|(s, a)| (i / s) % a.count)
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    pub fn coords(&self, i: usize) -> Coords {
        self.multi_index(i)
            .iter()
            .zip(&self.axes)
            .map(|(k, a)| a.coord(*k))
            .collect()
    }

    pub fn point(&self, i: usize) -> GroupElement {
        GroupElement {
            group: self.group,
            coords: self.coords(i),
        }
    }

    pub fn points(&self) -> Vec<GroupElement> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn is_core(&self, i: usize) -> bool {
        self.multi_index(i)
            .iter()
            .zip(&self.axes)
            .all(|(k, a)| a.is_core(*k))
    }

    pub fn core_mask(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.is_core(i)).collect()
    }

    pub fn core_indices(&self) -> Vec<usize> {
        (0..self.len).filter(|i| self.is_core(*i)).collect()
    }

    /// Smallest grid step over all axes.
    pub fn step(&self) -> f64 {
        self.axes
            .iter()
            .map(Axis::step)
            .fold(f64::INFINITY, f64::min)
    }

    /// Fractional node position of `coords` per axis; `None` outside the
    /// padded window.
    pub fn position(&self, coords: &[f64]) -> Option<SmallVec<[f64; 4]>> {
        coords
            .iter()
            .zip(&self.axes)
            .map(|(x, a)| a.position(*x))
            .collect()
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords
            .iter()
            .zip(&self.axes)
            .all(|(x, a)| a.position(*x).is_some())
    }

    /// Index of the grid point nearest to `coords`, if inside the window.
    pub fn nearest(&self, coords: &[f64]) -> Option<usize> {
        let pos = self.position(coords)?;
        let mut idx: SmallVec<[usize; 4]> = SmallVec::new();
        for (u, a) in pos.iter().zip(&self.axes) {
            idx.push(a.wrap(u.round() as i64)?);
        }
        Some(self.flat_index(&idx))
    }

    /// Index of the node at signed multi-index `idx`, wrapping periodic axes.
    pub fn wrapped_index(&self, idx: &[i64]) -> Option<usize> {
        let mut flat = 0;
        for ((k, a), s) in idx.iter().zip(&self.axes).zip(&self.strides) {
            flat += a.wrap(*k)? * s;
        }
        Some(flat)
    }

    /// Neighbor lists for the Chebyshev stencil of index radius `radius`.
    /// Each list is sorted and excludes the node itself.
    pub fn neighbors(&self, radius: usize) -> Vec<Vec<usize>> {
        let r = radius as i64;
        let d = self.dim();
        let mut offsets: Vec<SmallVec<[i64; 4]>> = vec![SmallVec::new()];
        for _ in 0..d {
            offsets = offsets
                .into_iter()
                .flat_map(|o| {
                    (-r..=r).map(move |k| {
                        let mut o = o.clone();
                        o.push(k);
                        o
                    })
                })
                .collect();
        }
        (0..self.len)
            .map(|i| {
                let base = self.multi_index(i);
                let mut out: Vec<usize> = offsets
                    .iter()
                    .filter_map(|o| {
                        let idx: SmallVec<[i64; 4]> =
                            base.iter().zip(o).map(|(b, k)| *b as i64 + k).collect();
                        self.wrapped_index(&idx)
                    })
                    .filter(|j| *j != i)
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect()
    }

    /// Core points within chart distance `width` of the core boundary along
    /// a non-periodic axis.
    pub fn boundary_band(&self, width: f64) -> Vec<usize> {
        (0..self.len)
            .filter(|i| self.is_core(*i))
            .filter(|i| {
                let c = self.coords(*i);
                self.axes
                    .iter()
                    .zip(c.iter())
                    .enumerate()
                    .any(|(k, (a, x))| {
                        !a.periodic
                            && (x - self.window.lower[k] < width
                                || self.window.upper[k] - x < width)
                    })
            })
            .collect()
    }
}
