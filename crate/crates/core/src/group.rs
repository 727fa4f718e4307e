//! Concrete Lie group models.
//!
//! Three models are provided, each in a fixed global chart:
//!
//! * `Real { dim }`: the additive group ℝⁿ; the chart is the vector itself.
//! * `Torus { dim }`: Tⁿ = ℝⁿ/ℤⁿ; coordinates are always reduced to `[0, 1)`.
//! * `Heisenberg`: upper-triangular unipotent 3×3 matrices
//!   `[[1, x, z], [0, 1, y], [0, 0, 1]]` stored as `(x, y, z)`.
//!
//! Lie algebra vectors use the standard basis of each model. For the
//! Heisenberg algebra the basis is `X = E12`, `Y = E23`, `Z = E13`, so that
//! `[X, Y] = Z`.
//!
//! The slice-level methods on [`Group`] (`mul_into`, `inv_into`, ...) are the
//! allocation-free kernels used by the grid code; [`mul`], [`inv`],
//! [`exp_map`] and [`bracket`] are the checked element-level API.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Coords = SmallVec<[f64; 4]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Group {
    Real { dim: usize },
    Torus { dim: usize },
    Heisenberg,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Real { dim } => write!(f, "R^{dim}"),
            Group::Torus { dim } => write!(f, "T^{dim}"),
            Group::Heisenberg => write!(f, "H^3"),
        }
    }
}

/// Reduces a real number to `[0, 1)`.
#[inline]
pub fn reduce_unit(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed representative of `x` modulo 1 in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_half(x: f64) -> f64 {
    let r = reduce_unit(x + 0.5) - 0.5;
    if r < -0.5 {
        r + 1.0
    } else {
        r
    }
}

impl Group {
    pub fn dim(&self) -> usize {
        match *self {
            Group::Real { dim } | Group::Torus { dim } => dim,
            Group::Heisenberg => 3,
        }
    }

    pub fn is_abelian(&self) -> bool {
        !matches!(self, Group::Heisenberg)
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Group::Torus { .. })
    }

    pub fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            group: *self,
            coords: SmallVec::from_elem(0.0, self.dim()),
        }
    }

    /// Builds an element from chart coordinates, reducing torus coordinates.
    pub fn element(&self, coords: &[f64]) -> Result<GroupElement> {
        self.check_dim(coords.len())?;
        let mut c: Coords = coords.iter().copied().collect();
        self.normalize(&mut c);
        Ok(GroupElement {
            group: *self,
            coords: c,
        })
    }

    pub fn vector(&self, components: &[f64]) -> Result<AlgebraVector> {
        self.check_dim(components.len())?;
        Ok(AlgebraVector {
            group: *self,
            components: components.iter().copied().collect(),
        })
    }

    /// Basis vector `k` of the Lie algebra.
    pub fn basis_vector(&self, k: usize) -> AlgebraVector {
        let mut c: Coords = SmallVec::from_elem(0.0, self.dim());
        c[k] = 1.0;
        AlgebraVector {
            group: *self,
            components: c,
        }
    }

    #[inline]
    pub fn normalize(&self, c: &mut [f64]) {
        if self.is_periodic() {
            for x in c.iter_mut() {
                *x = reduce_unit(*x);
            }
        }
    }

    #[inline]
    pub fn mul_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self {
            Group::Real { .. } => {
                for k in 0..a.len() {
                    out[k] = a[k] + b[k];
                }
            }
            Group::Torus { .. } => {
                for k in 0..a.len() {
                    out[k] = reduce_unit(a[k] + b[k]);
                }
            }
            Group::Heisenberg => {
                out[0] = a[0] + b[0];
                out[1] = a[1] + b[1];
                out[2] = a[2] + b[2] + a[0] * b[1];
            }
        }
    }

    #[inline]
    pub fn inv_into(&self, a: &[f64], out: &mut [f64]) {
        match self {
            Group::Real { .. } => {
                for k in 0..a.len() {
                    out[k] = -a[k];
                }
            }
            Group::Torus { .. } => {
                for k in 0..a.len() {
                    out[k] = reduce_unit(-a[k]);
                }
            }
            Group::Heisenberg => {
                out[0] = -a[0];
                out[1] = -a[1];
                out[2] = a[0] * a[1] - a[2];
            }
        }
    }

    /// `exp(t v)` in chart coordinates.
    #[inline]
    pub fn exp_into(&self, v: &[f64], t: f64, out: &mut [f64]) {
        match self {
            Group::Real { .. } => {
                for k in 0..v.len() {
                    out[k] = t * v[k];
                }
            }
            Group::Torus { .. } => {
                for k in 0..v.len() {
                    out[k] = reduce_unit(t * v[k]);
                }
            }
            Group::Heisenberg => {
                // the nilpotent series stops after the quadratic term
                let (a, b, c) = (t * v[0], t * v[1], t * v[2]);
                out[0] = a;
                out[1] = b;
                out[2] = c + 0.5 * a * b;
            }
        }
    }

    #[inline]
    pub fn bracket_into(&self, v: &[f64], w: &[f64], out: &mut [f64]) {
        match self {
            Group::Real { .. } | Group::Torus { .. } => out.iter_mut().for_each(|x| *x = 0.0),
            Group::Heisenberg => {
                out[0] = 0.0;
                out[1] = 0.0;
                out[2] = v[0] * w[1] - v[1] * w[0];
            }
        }
    }

    /// Per-axis chart difference `b - a`; torus axes take the representative
    /// in `[-1/2, 1/2)`.
    #[inline]
    pub fn chart_delta(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        for k in 0..a.len() {
            let d = b[k] - a[k];
            out[k] = if self.is_periodic() { wrap_half(d) } else { d };
        }
    }

    /// Chebyshev norm of [`Group::chart_delta`]. Used for tolerances and reach
    /// radii, not as a metric on the group.
    pub fn chart_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut d: Coords = SmallVec::from_elem(0.0, a.len());
        self.chart_delta(a, b, &mut d);
        d.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Whether two coordinate tuples denote the same element at tolerance `tol`.
    pub fn approx_eq(&self, a: &[f64], b: &[f64], tol: f64) -> bool {
        self.chart_distance(a, b) <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub group: Group,
    pub coords: Coords,
}

impl GroupElement {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.coords.iter().all(|x| {
            if self.group.is_periodic() {
                wrap_half(*x).abs() <= tol
            } else {
                x.abs() <= tol
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraVector {
    pub group: Group,
    pub components: Coords,
}

impl AlgebraVector {
    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn scale(&self, s: f64) -> AlgebraVector {
        AlgebraVector {
            group: self.group,
            components: self.components.iter().map(|x| x * s).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|x| *x == 0.0)
    }
}

fn same_group(a: Group, b: Group) -> Result<()> {
    if a != b {
        return Err(Error::GroupMismatch { left: a, right: b });
    }
    Ok(())
}

/// Group product `g · h`.
pub fn mul(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    same_group(g.group, h.group)?;
    let mut out: Coords = SmallVec::from_elem(0.0, g.coords.len());
    g.group.mul_into(&g.coords, &h.coords, &mut out);
    Ok(GroupElement {
        group: g.group,
        coords: out,
    })
}

pub fn inv(g: &GroupElement) -> GroupElement {
    let mut out: Coords = SmallVec::from_elem(0.0, g.coords.len());
    g.group.inv_into(&g.coords, &mut out);
    GroupElement {
        group: g.group,
        coords: out,
    }
}

/// One-parameter subgroup point `exp(t v)`.
pub fn exp_map(v: &AlgebraVector, t: f64) -> GroupElement {
    let mut out: Coords = SmallVec::from_elem(0.0, v.components.len());
    v.group.exp_into(&v.components, t, &mut out);
    GroupElement {
        group: v.group,
        coords: out,
    }
}

pub fn bracket(v: &AlgebraVector, w: &AlgebraVector) -> Result<AlgebraVector> {
    same_group(v.group, w.group)?;
    let mut out: Coords = SmallVec::from_elem(0.0, v.components.len());
    v.group.bracket_into(&v.components, &w.components, &mut out);
    Ok(AlgebraVector {
        group: v.group,
        components: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const R1: Group = Group::Real { dim: 1 };
    const T1: Group = Group::Torus { dim: 1 };
    const H: Group = Group::Heisenberg;

    fn el(g: Group, c: &[f64]) -> GroupElement {
        g.element(c).unwrap()
    }

    #[test]
    fn products() {
        assert_eq!(
            mul(&el(R1, &[0.3]), &el(R1, &[-1.0])).unwrap().coords[0],
            0.3 - 1.0
        );
        let t = mul(&el(T1, &[0.7]), &el(T1, &[0.6])).unwrap();
        assert!((t.coords[0] - 0.3).abs() < 1e-15);
        let h = mul(&el(H, &[1.0, 0.0, 0.0]), &el(H, &[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(h.coords.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn mismatched_groups_are_rejected() {
        let err = mul(&el(R1, &[0.0]), &el(T1, &[0.0])).unwrap_err();
        assert!(matches!(err, Error::GroupMismatch { .. }));
        assert!(matches!(
            R1.element(&[0.0, 1.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn inverses() {
        let s = std::f64::consts::SQRT_2;
        assert_eq!(inv(&el(R1, &[s])).coords[0], -s);
        assert_eq!(inv(&el(T1, &[0.25])).coords[0], 0.75);
        assert_eq!(
            inv(&el(H, &[1.0, 1.0, 1.0])).coords.as_slice(),
            &[-1.0, -1.0, 0.0]
        );
        // the reduced inverse of 0 on the torus is 0, never 1
        assert_eq!(inv(&el(T1, &[0.0])).coords[0], 0.0);
    }

    #[test]
    fn exponentials() {
        let v = R1.vector(&[1.5]).unwrap();
        assert_eq!(exp_map(&v, 2.0).coords[0], 3.0);
        assert_eq!(exp_map(&T1.vector(&[1.0]).unwrap(), 0.5).coords[0], 0.5);
        let w = H.vector(&[2.0, 3.0, 0.5]).unwrap();
        assert_eq!(exp_map(&w, 1.0).coords.as_slice(), &[2.0, 3.0, 0.5 + 3.0]);
        assert!(exp_map(&w, 0.0).is_identity(0.0));
    }

    #[test]
    fn brackets() {
        let x = H.basis_vector(0);
        let y = H.basis_vector(1);
        assert_eq!(
            bracket(&x, &y).unwrap().components.as_slice(),
            &[0.0, 0.0, 1.0]
        );
        assert_eq!(
            bracket(&y, &x).unwrap().components.as_slice(),
            &[0.0, 0.0, -1.0]
        );
        let r = Group::Real { dim: 2 };
        assert!(bracket(&r.basis_vector(0), &r.basis_vector(1))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn wrapping_helpers() {
        assert_eq!(reduce_unit(-1e-20), 0.0);
        assert_eq!(reduce_unit(2.25), 0.25);
        assert_eq!(wrap_half(0.75), -0.25);
        assert_eq!(wrap_half(-0.75), 0.25);
        assert_eq!(T1.chart_distance(&[0.95], &[0.05]), 0.10000000000000009);
    }

    fn group_strategy() -> impl Strategy<Value = Group> {
        prop_oneof![
            (1usize..4).prop_map(|dim| Group::Real { dim }),
            (1usize..4).prop_map(|dim| Group::Torus { dim }),
            Just(Group::Heisenberg),
        ]
    }

    fn triple() -> impl Strategy<Value = (Group, Vec<f64>, Vec<f64>, Vec<f64>)> {
        group_strategy().prop_flat_map(|g| {
            let c = prop::collection::vec(-3.0f64..3.0, g.dim());
            (Just(g), c.clone(), c.clone(), c)
        })
    }

    fn close(g: Group, a: &[f64], b: &[f64], tol: f64) -> bool {
        g.approx_eq(a, b, tol)
    }

    proptest! {
        #[test]
        fn associativity((g, a, b, c) in triple()) {
            let (a, b, c) = (el(g, &a), el(g, &b), el(g, &c));
            let left = mul(&mul(&a, &b).unwrap(), &c).unwrap();
            let right = mul(&a, &mul(&b, &c).unwrap()).unwrap();
            prop_assert!(close(g, &left.coords, &right.coords, 1e-12));
        }

        #[test]
        fn inverse_is_two_sided((g, a, _b, _c) in triple()) {
            let a = el(g, &a);
            let e = g.identity();
            prop_assert!(close(g, &mul(&a, &inv(&a)).unwrap().coords, &e.coords, 1e-12));
            prop_assert!(close(g, &mul(&inv(&a), &a).unwrap().coords, &e.coords, 1e-12));
        }

        #[test]
        fn one_parameter_subgroups((g, v, _b, _c) in triple(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
            let v = g.vector(&v).unwrap();
            let lhs = exp_map(&v, s + t);
            let rhs = mul(&exp_map(&v, s), &exp_map(&v, t)).unwrap();
            prop_assert!(close(g, &lhs.coords, &rhs.coords, 1e-12));
        }

        #[test]
        fn bracket_is_bilinear_and_antisymmetric(
            (g, u, v, w) in triple(), a in -2.0f64..2.0, b in -2.0f64..2.0
        ) {
            let (u, v, w) = (g.vector(&u).unwrap(), g.vector(&v).unwrap(), g.vector(&w).unwrap());
            let comb: Vec<f64> = u.components.iter().zip(v.components.iter())
                .map(|(x, y)| a * x + b * y).collect();
            let comb = g.vector(&comb).unwrap();
            let lhs = bracket(&comb, &w).unwrap();
            let bu = bracket(&u, &w).unwrap();
            let bv = bracket(&v, &w).unwrap();
            for k in 0..g.dim() {
                let rhs = a * bu.components[k] + b * bv.components[k];
                prop_assert!((lhs.components[k] - rhs).abs() < 1e-9);
            }
            let vw = bracket(&v, &w).unwrap();
            let wv = bracket(&w, &v).unwrap();
            for k in 0..g.dim() {
                prop_assert_eq!(vw.components[k], -wv.components[k]);
            }
            prop_assert!(bracket(&v, &v).unwrap().is_zero());
        }

        #[test]
        fn torus_coordinates_stay_reduced(d in 1usize..4, a in prop::collection::vec(-5.0f64..5.0, 3), b in prop::collection::vec(-5.0f64..5.0, 3)) {
            let g = Group::Torus { dim: d };
            let p = mul(&el(g, &a[..d]), &el(g, &b[..d])).unwrap();
            let q = inv(&p);
            for x in p.coords.iter().chain(q.coords.iter()) {
                prop_assert!((0.0..1.0).contains(x));
            }
        }
    }
}
