//! Word enumeration for the semigroup `S_X`, covering radii, and the
//! generator construction from a Lie algebra basis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::generators::{GeneratorSet, PointIndex, DEDUP_TOL};
use crate::grid::WindowSpec;
use crate::group::{reduce_unit, AlgebraVector, Coords, Group, GroupElement};
use crate::metric::PairDistance;

pub const DEFAULT_CLOUD_CAP: usize = 200_000;

/// Products of generators up to a word length, near a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordCloud {
    pub group: Group,
    /// Points inside the window, in lexicographic chart order.
    pub points: Vec<GroupElement>,
    /// Points outside the window but within the pruning margin.
    pub halo: Vec<GroupElement>,
    pub maxlen: usize,
    pub tolerance: f64,
    /// Number of new points found at each depth, depth 0 first.
    pub depth_counts: Vec<usize>,
}

impl WordCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Window points followed by halo points.
    pub fn all_points(&self) -> impl Iterator<Item = &GroupElement> {
        self.points.iter().chain(&self.halo)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Breadth-first closure of `{e}` under right multiplication by `X`, pruned
/// to the window plus one reach radius and deduplicated at [`DEDUP_TOL`].
pub fn generate_words(x: &GeneratorSet, maxlen: usize, window: &WindowSpec) -> Result<WordCloud> {
    generate_words_capped(x, maxlen, window, DEFAULT_CLOUD_CAP)
}

pub fn generate_words_capped(
    x: &GeneratorSet,
    maxlen: usize,
    window: &WindowSpec,
    cap: usize,
) -> Result<WordCloud> {
    if maxlen == 0 {
        return Err(Error::InvalidArgument("maxlen must be at least 1".into()));
    }
    let group = x.group();
    window.validate(group)?;
    let margin = x.reach_radius();
    let gens = &x.coords()[1..];
    let mut index = PointIndex::new(group, DEDUP_TOL);
    let mut all: Vec<Coords> = vec![group.identity().coords];
    index.insert(&all[0]);
    let mut frontier = all.clone();
    let mut depth_counts = vec![1];
    for depth in 1..=maxlen {
        let mut candidates: Vec<Coords> = frontier
            .par_iter()
            .flat_map_iter(|p| {
                gens.iter().map(move |g| {
                    let mut out: Coords = SmallVec::from_elem(0.0, p.len());
                    group.mul_into(p, g, &mut out);
                    out
                })
            })
            .filter(|c| window.contains(group, c, margin))
            .collect();
        candidates.sort_by(|a, b| lex_cmp(a, b));
        let mut next = Vec::new();
        for c in candidates {
            if index.insert(&c).1 {
                next.push(c);
            }
        }
        if index.len() > cap {
            return Err(Error::CloudTooLarge { cap, depth });
        }
        depth_counts.push(next.len());
        all.extend(next.iter().cloned());
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    all.sort_by(|a, b| lex_cmp(a, b));
    let (inside, outside): (Vec<_>, Vec<_>) = all
        .into_iter()
        .map(|coords| GroupElement { group, coords })
        .partition(|e| window.contains(group, &e.coords, 0.0));
    Ok(WordCloud {
        group,
        points: inside,
        halo: outside,
        maxlen,
        tolerance: DEDUP_TOL,
        depth_counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub radius: f64,
    /// Probe point attaining the radius.
    pub witness: Vec<f64>,
    pub probes: usize,
}

fn nearest_distance(cloud: &[&GroupElement], metric: &dyn PairDistance, p: &[f64]) -> Result<f64> {
    cloud.iter().try_fold(f64::INFINITY, |m, q| {
        Ok(m.min(metric.distance(p, &q.coords)?))
    })
}

/// Largest distance from a probe of the window to the nearest cloud point.
///
/// Probes form a lattice of `probe_resolution` points per axis; the eight
/// worst probes are then refined by a shrinking pattern search, so the
/// result converges to the true covering radius well below the probe step.
pub fn covering_radius(
    cloud: &WordCloud,
    window: &WindowSpec,
    metric: &dyn PairDistance,
    probe_resolution: usize,
) -> Result<CoveringReport> {
    let group = cloud.group;
    window.validate(group)?;
    if probe_resolution < 2 {
        return Err(Error::InvalidArgument(
            "probe resolution must be at least 2".into(),
        ));
    }
    let targets: Vec<&GroupElement> = cloud.all_points().collect();
    if targets.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = group.dim();
    let periodic = group.is_periodic();
    let (lo, hi): (Vec<f64>, Vec<f64>) = if periodic {
        (vec![0.0; dim], vec![1.0; dim])
    } else {
        (window.lower.clone(), window.upper.clone())
    };
    let steps: Vec<f64> = (0..dim)
        .map(|k| {
            let n = if periodic {
                probe_resolution
            } else {
                probe_resolution - 1
            };
            (hi[k] - lo[k]) / n as f64
        })
        .collect();
    let total = probe_resolution.pow(dim as u32);
    let probe = |mut i: usize| -> Coords {
        let mut c: Coords = SmallVec::from_elem(0.0, dim);
        for k in (0..dim).rev() {
            c[k] = lo[k] + steps[k] * (i % probe_resolution) as f64;
            i /= probe_resolution;
        }
        c
    };
    let mut scored: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .map(|i| Ok((nearest_distance(&targets, metric, &probe(i))?, i)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let clamp = |c: &mut Coords| {
        for k in 0..dim {
            c[k] = if periodic {
                reduce_unit(c[k])
            } else {
                c[k].clamp(lo[k], hi[k])
            };
        }
    };
    let mut best = (scored[0].0, probe(scored[0].1));
    let offsets: Vec<SmallVec<[i8; 4]>> = (0..3usize.pow(dim as u32))
        .map(|mut code| {
            (0..dim)
                .map(|_| {
                    let o = (code % 3) as i8 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();
    for &(value, start) in scored.iter().take(8) {
        let mut cur = (value, probe(start));
        let mut h: Vec<f64> = steps.clone();
        while h.iter().any(|s| *s > 1e-10 * (1.0 + window.scale())) {
            let mut moved = false;
            for o in &offsets {
                let mut c = cur.1.clone();
                for k in 0..dim {
                    c[k] += o[k] as f64 * h[k];
                }
                clamp(&mut c);
                let v = nearest_distance(&targets, metric, &c)?;
                if v > cur.0 {
                    cur = (v, c);
                    moved = true;
                }
            }
            if !moved {
                h.iter_mut().for_each(|s| *s *= 0.5);
            }
        }
        if cur.0 > best.0 {
            best = cur;
        }
    }
    Ok(CoveringReport {
        radius: best.0,
        witness: best.1.to_vec(),
        probes: total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub generating: bool,
    pub dimension: usize,
    pub expected: usize,
}

/// Appends `v` to an orthonormal list if it is independent of it.
fn push_independent(basis: &mut Vec<Coords>, v: &[f64]) -> bool {
    let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return false;
    }
    let mut w: Coords = v.iter().map(|x| x / scale).collect();
    for b in basis.iter() {
        let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
        for (x, y) in w.iter_mut().zip(b) {
            *x -= dot * y;
        }
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-10 {
        return false;
    }
    w.iter_mut().for_each(|x| *x /= norm);
    basis.push(w);
    true
}

/// Dimension of the Lie algebra generated by `v`.
pub fn check_bracket_generating(v: &[AlgebraVector]) -> Result<BracketReport> {
    let group = v
        .first()
        .map(|a| a.group)
        .ok_or_else(|| Error::InvalidArgument("empty vector list".into()))?;
    let mut span: Vec<Coords> = Vec::new();
    for a in v {
        if a.group != group {
            return Err(Error::GroupMismatch {
                left: group,
                right: a.group,
            });
        }
        push_independent(&mut span, &a.components);
    }
    loop {
        let mut grown = false;
        let current = span.clone();
        let mut out: Coords = SmallVec::from_elem(0.0, group.dim());
        for (i, a) in current.iter().enumerate() {
            for b in &current[i + 1..] {
                group.bracket_into(a, b, &mut out);
                grown |= push_independent(&mut span, &out);
            }
        }
        if !grown {
            break;
        }
    }
    Ok(BracketReport {
        generating: span.len() == group.dim(),
        dimension: span.len(),
        expected: group.dim(),
    })
}

/// `X = {e} ∪ {exp(-v_i)} ∪ {exp(√2 v_i)}` with bracket, injectivity and
/// isotropy checks.
pub fn build_generator_from_basis(basis: &[AlgebraVector]) -> Result<GeneratorSet> {
    let report = check_bracket_generating(basis)?;
    if !report.generating {
        return Err(Error::NotBracketGenerating {
            dimension: report.dimension,
            expected: report.expected,
        });
    }
    let group = basis[0].group;
    if let Group::Torus { dim } = group {
        // exp is injective on the open cube (-1/2, 1/2)^n of the torus
        let fits = (0..dim).all(|k| {
            basis
                .iter()
                .map(|v| 2.0 * v.components[k].abs())
                .sum::<f64>()
                < 0.5
        });
        if !fits {
            return Err(Error::InjectivityWindow { group });
        }
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut elements = Vec::with_capacity(2 * basis.len());
    for scale in [-1.0, sqrt2] {
        for v in basis {
            let mut c: Coords = SmallVec::from_elem(0.0, group.dim());
            group.exp_into(&v.components, scale, &mut c);
            elements.push(GroupElement { group, coords: c });
        }
    }
    GeneratorSet::new(group, elements)?.certify()
}

/// Lattice points of mesh `mesh` on Tⁿ outside the open box `(lower, upper)ⁿ`.
///
/// A finite sample of the compact set used in the flat-torus example; `e`
/// is a lattice point outside the box.
pub fn torus_box_complement(dim: usize, lower: f64, upper: f64, mesh: f64) -> Result<GeneratorSet> {
    let per_axis = (1.0 / mesh).round() as usize;
    if per_axis == 0 || ((per_axis as f64) * mesh - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("mesh must divide 1".into()));
    }
    if !(0.0 < lower && lower < upper && upper < 1.0) {
        return Err(Error::InvalidArgument("box must lie inside (0, 1)".into()));
    }
    let group = Group::Torus { dim };
    let mut elements = Vec::new();
    for mut code in 0..per_axis.pow(dim as u32) {
        let mut c: Coords = SmallVec::from_elem(0.0, dim);
        for k in (0..dim).rev() {
            c[k] = (code % per_axis) as f64 / per_axis as f64;
            code /= per_axis;
        }
        let inside = c.iter().all(|x| *x > lower + 1e-12 && *x < upper - 1e-12);
        if !inside {
            elements.push(GroupElement { group, coords: c });
        }
    }
    GeneratorSet::new(group, elements)
}
