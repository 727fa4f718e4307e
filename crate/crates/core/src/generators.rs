//! Finite generator sets `X ∋ e` and the isotropy certificate.

use std::collections::HashMap;

use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::group::{reduce_unit, Coords, Group, GroupElement};

/// Chart tolerance for treating two elements as equal.
pub const DEDUP_TOL: f64 = 1e-9;

/// Hash index over chart coordinates for approximate membership tests.
///
/// Cells have side `4 * tol`; a lookup inspects the cell of the query and its
/// immediate neighbors, so every stored point within `tol` (Chebyshev) is
/// found.
#[derive(Clone, Debug)]
pub(crate) struct PointIndex {
    group: Group,
    tol: f64,
    cell: f64,
    buckets: HashMap<SmallVec<[i64; 4]>, SmallVec<[usize; 2]>>,
    points: Vec<Coords>,
}

impl PointIndex {
    pub fn new(group: Group, tol: f64) -> Self {
        Self {
            group,
            tol,
            cell: 4.0 * tol,
            buckets: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn key(&self, c: &[f64]) -> SmallVec<[i64; 4]> {
        c.iter()
            .map(|x| {
                let x = if self.group.is_periodic() {
                    reduce_unit(*x)
                } else {
                    *x
                };
                (x / self.cell).floor() as i64
            })
            .collect()
    }

    fn wrap_cells(&self) -> i64 {
        (1.0 / self.cell).ceil() as i64
    }

    pub fn find(&self, c: &[f64]) -> Option<usize> {
        let base = self.key(c);
        let d = base.len();
        let period = self.wrap_cells();
        for code in 0..3usize.pow(d as u32) {
            let mut key = base.clone();
            let mut rest = code;
            for k in key.iter_mut() {
                *k += (rest % 3) as i64 - 1;
                rest /= 3;
                if self.group.is_periodic() {
                    *k = k.rem_euclid(period);
                }
            }
            if let Some(ids) = self.buckets.get(&key) {
                for &id in ids {
                    if self.group.approx_eq(&self.points[id], c, self.tol) {
                        return Some(id);
                    }
                }
            }
        }
        None
    }

    /// Inserts `c` unless an equal point is present; returns its id and
    /// whether it was new.
    pub fn insert(&mut self, c: &[f64]) -> (usize, bool) {
        if let Some(id) = self.find(c) {
            return (id, false);
        }
        let id = self.points.len();
        let mut key = self.key(c);
        if self.group.is_periodic() {
            let period = self.wrap_cells();
            key.iter_mut().for_each(|k| *k = k.rem_euclid(period));
        }
        self.buckets.entry(key).or_default().push(id);
        self.points.push(c.iter().copied().collect());
        (id, true)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// A finite generator set with the identity at index 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorSet {
    group: Group,
    elements: Vec<GroupElement>,
    #[serde(skip)]
    coords: Vec<Coords>,
    reach_radius: f64,
    certified: bool,
}

impl GeneratorSet {
    /// Builds `X` from the given elements. The identity is added if absent
    /// and moved to index 0; duplicates at [`DEDUP_TOL`] are rejected.
    pub fn new(group: Group, elements: Vec<GroupElement>) -> Result<Self> {
        let mut out = vec![group.identity()];
        let mut index = PointIndex::new(group, DEDUP_TOL);
        index.insert(&out[0].coords);
        let mut saw_identity = false;
        for e in elements {
            if e.group != group {
                return Err(Error::GroupMismatch {
                    left: group,
                    right: e.group,
                });
            }
            group.check_dim(e.coords.len())?;
            if e.is_identity(DEDUP_TOL) {
                if saw_identity {
                    return Err(Error::InvalidGenerators("identity listed twice".into()));
                }
                saw_identity = true;
                continue;
            }
            if !index.insert(&e.coords).1 {
                return Err(Error::InvalidGenerators(format!(
                    "duplicate element {:?}",
                    e.coords.as_slice()
                )));
            }
            out.push(e);
        }
        let reach_radius = out
            .iter()
            .map(|e| group.chart_distance(&group.identity().coords, &e.coords))
            .fold(0.0, f64::max);
        Ok(Self {
            group,
            coords: out.iter().map(|e| e.coords.clone()).collect(),
            elements: out,
            reach_radius,
            certified: false,
        })
    }

    pub fn from_coords(group: Group, coords: &[Vec<f64>]) -> Result<Self> {
        let elements = coords
            .iter()
            .map(|c| group.element(c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(group, elements)
    }

    /// `X = {e}`, certified.
    pub fn trivial(group: Group) -> Self {
        Self {
            group,
            elements: vec![group.identity()],
            coords: vec![group.identity().coords],
            reach_radius: 0.0,
            certified: true,
        }
    }

    /// Runs the isotropy check and attaches the certificate.
    pub fn certify(mut self) -> Result<Self> {
        if let Some(witness) = isotropy_witness(&self) {
            return Err(Error::NontrivialIsotropy { witness });
        }
        self.certified = true;
        Ok(self)
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Chart coordinates of the elements, identity first.
    pub fn coords(&self) -> &[Coords] {
        &self.coords
    }

    /// Max Chebyshev chart displacement `|x|` over the elements.
    pub fn reach_radius(&self) -> f64 {
        self.reach_radius
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }
}

/// Index of a non-identity `x_i` with `x_i X = X`, if any.
///
/// `gX = X` with `e ∈ X` forces `g ∈ X`, so the candidates are the elements
/// themselves.
pub fn isotropy_witness(x: &GeneratorSet) -> Option<usize> {
    let group = x.group;
    let mut index = PointIndex::new(group, DEDUP_TOL);
    for c in &x.coords {
        index.insert(c);
    }
    let mut buf: Coords = SmallVec::from_elem(0.0, group.dim());
    (1..x.len()).find(|&i| {
        x.coords.iter().all(|c| {
            group.mul_into(&x.coords[i], c, &mut buf);
            index.find(&buf).is_some()
        })
    })
}

/// True iff no non-identity element permutes `X` by left multiplication.
pub fn check_isotropy_trivial(x: &GeneratorSet) -> bool {
    isotropy_witness(x).is_none()
}

/// `X⁻¹ = {x⁻¹ : x ∈ X}`, certified again when `X` was.
pub fn invert_generators(x: &GeneratorSet) -> Result<GeneratorSet> {
    let group = x.group;
    let elements = x
        .coords
        .iter()
        .skip(1)
        .map(|c| {
            let mut out: Coords = SmallVec::from_elem(0.0, group.dim());
            group.inv_into(c, &mut out);
            GroupElement { group, coords: out }
        })
        .collect();
    let inv = GeneratorSet::new(group, elements)?;
    if x.certified {
        inv.certify()
    } else {
        Ok(inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    const R1: Group = Group::Real { dim: 1 };
    const T1: Group = Group::Torus { dim: 1 };

    fn coords_1d(x: &GeneratorSet) -> Vec<f64> {
        x.coords().iter().map(|c| c[0]).collect()
    }

    #[test]
    fn identity_first_and_reach() {
        let x = GeneratorSet::from_coords(R1, &[vec![-1.0], vec![0.0], vec![SQRT_2]]).unwrap();
        assert_eq!(coords_1d(&x), vec![0.0, -1.0, SQRT_2]);
        assert_eq!(x.reach_radius(), SQRT_2);
        let x = GeneratorSet::from_coords(R1, &[vec![2.0]]).unwrap();
        assert_eq!(coords_1d(&x), vec![0.0, 2.0]);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(GeneratorSet::from_coords(R1, &[vec![1.0], vec![1.0 + 1e-12]]).is_err());
        assert!(GeneratorSet::from_coords(T1, &[vec![0.25], vec![1.25]]).is_err());
    }

    #[test]
    fn torus_reach_wraps() {
        let x = GeneratorSet::from_coords(T1, &[vec![0.9]]).unwrap();
        assert!((x.reach_radius() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn isotropy_examples() {
        assert!(check_isotropy_trivial(&GeneratorSet::trivial(R1)));
        let x = GeneratorSet::from_coords(R1, &[vec![0.0], vec![-1.0], vec![SQRT_2]]).unwrap();
        assert!(check_isotropy_trivial(&x));
        let x = GeneratorSet::from_coords(T1, &[vec![0.0], vec![0.5]]).unwrap();
        assert!(!check_isotropy_trivial(&x));
        assert!(matches!(
            x.certify(),
            Err(Error::NontrivialIsotropy { witness: 1 })
        ));
        let x = GeneratorSet::from_coords(T1, &[vec![1.0 / 3.0], vec![2.0 / 3.0]]).unwrap();
        assert!(!check_isotropy_trivial(&x));
    }

    #[test]
    fn heisenberg_isotropy_uses_group_product() {
        let h = Group::Heisenberg;
        let x = GeneratorSet::from_coords(h, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(check_isotropy_trivial(&x));
    }

    #[test]
    fn inversion_examples() {
        let x = GeneratorSet::from_coords(R1, &[vec![-1.0], vec![SQRT_2]]).unwrap();
        assert_eq!(
            coords_1d(&invert_generators(&x).unwrap()),
            vec![0.0, 1.0, -SQRT_2]
        );
        let e = invert_generators(&GeneratorSet::trivial(R1)).unwrap();
        assert_eq!(coords_1d(&e), vec![0.0]);
        let x = GeneratorSet::from_coords(T1, &[vec![0.25]]).unwrap();
        assert_eq!(coords_1d(&invert_generators(&x).unwrap()), vec![0.0, 0.75]);
    }

    #[test]
    fn point_index_finds_across_cells_and_seam() {
        let mut idx = PointIndex::new(T1, 1e-9);
        idx.insert(&[0.0]);
        assert_eq!(idx.find(&[1.0 - 1e-10]), Some(0));
        assert_eq!(idx.find(&[5e-10]), Some(0));
        assert_eq!(idx.find(&[1e-6]), None);
        let mut idx = PointIndex::new(R1, 1e-9);
        idx.insert(&[3.9999999999]);
        assert_eq!(idx.find(&[4.0]), Some(0));
        assert_eq!(idx.len(), 1);
    }
}
