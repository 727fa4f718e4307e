//! Property checks over fields and flow results, each reported as a named
//! pass/fail record with a witness when it fails.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsler::{DefectReport, NormTable};
use crate::group::{AlgebraVector, Coords};
use crate::metric::MetricField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Offending grid indices (pair or triple) when the check fails.
    pub witness: Option<Vec<usize>>,
}

impl PropertyResult {
    fn pass(name: &str, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            detail,
            witness: None,
        }
    }

    fn fail(name: &str, detail: String, witness: Vec<usize>) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            detail,
            witness: Some(witness),
        }
    }
}

/// Zero diagonal, nonnegativity, symmetry and (optionally) the triangle
/// inequality, all within `tol`.
pub fn check_metric_axioms(field: &MetricField, tol: f64, triangle: bool) -> PropertyResult {
    const NAME: &str = "metric_axioms";
    let n = field.n();
    for i in 0..n {
        if field.get(i, i) != 0.0 {
            return PropertyResult::fail(
                NAME,
                format!("d({i},{i}) = {} is not zero", field.get(i, i)),
                vec![i, i],
            );
        }
        for j in 0..n {
            let (a, b) = (field.get(i, j), field.get(j, i));
            if a.is_nan() || a < 0.0 {
                return PropertyResult::fail(
                    NAME,
                    format!("d({i},{j}) = {a} is negative or NaN"),
                    vec![i, j],
                );
            }
            if a != b && !((a - b).abs() <= tol) {
                return PropertyResult::fail(
                    NAME,
                    format!("asymmetric pair ({i}, {j}): {a} vs {b}"),
                    vec![i, j],
                );
            }
        }
    }
    if triangle {
        let bad = (0..n).into_par_iter().find_map_first(|i| {
            for k in 0..n {
                let dik = field.get(i, k);
                if dik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    if field.get(i, j) > dik + field.get(k, j) + tol {
                        return Some((i, j, k));
                    }
                }
            }
            None
        });
        if let Some((i, j, k)) = bad {
            return PropertyResult::fail(
                NAME,
                format!(
                    "triangle inequality fails: d({i},{j}) = {} > d({i},{k}) + d({k},{j}) = {}",
                    field.get(i, j),
                    field.get(i, k) + field.get(k, j)
                ),
                vec![i, j, k],
            );
        }
    }
    PropertyResult::pass(NAME, format!("{n} points, tolerance {tol:e}"))
}

/// Each field is entrywise at least its predecessor on core pairs, up to
/// `slack`.
pub fn check_monotone(fields: &[&MetricField], slack: f64) -> Result<PropertyResult> {
    const NAME: &str = "monotone_iterates";
    for (step, w) in fields.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if a.grid() != b.grid() {
            return Err(Error::GridMismatch);
        }
        let core = a.grid().core_indices();
        for &i in &core {
            for &j in &core {
                if b.get(i, j) < a.get(i, j) - slack {
                    return Ok(PropertyResult::fail(
                        NAME,
                        format!(
                            "iterate {} decreases at ({i}, {j}): {} -> {}",
                            step + 1,
                            a.get(i, j),
                            b.get(i, j)
                        ),
                        vec![i, j],
                    ));
                }
            }
        }
    }
    Ok(PropertyResult::pass(
        NAME,
        format!("{} iterates, slack {slack:e}", fields.len()),
    ))
}

/// `field ≤ bound + slack` on core pairs.
pub fn check_upper_bound(
    field: &MetricField,
    bound: &MetricField,
    slack: f64,
) -> Result<PropertyResult> {
    const NAME: &str = "upper_bound";
    if field.grid() != bound.grid() {
        return Err(Error::GridMismatch);
    }
    let core = field.grid().core_indices();
    let mut worst = f64::NEG_INFINITY;
    for &i in &core {
        for &j in &core {
            let excess = field.get(i, j) - bound.get(i, j);
            worst = worst.max(excess);
            if excess > slack {
                return Ok(PropertyResult::fail(
                    NAME,
                    format!(
                        "d({i},{j}) = {} exceeds the bound {} by more than {slack:e}",
                        field.get(i, j),
                        bound.get(i, j)
                    ),
                    vec![i, j],
                ));
            }
        }
    }
    Ok(PropertyResult::pass(
        NAME,
        format!("max excess {worst:e} within slack {slack:e}"),
    ))
}

/// Whether some grid point is an `eps`-midpoint of `(x, y)`.
pub fn find_midpoint(field: &MetricField, x: usize, y: usize, eps: f64) -> Option<usize> {
    let d = field.get(x, y);
    (0..field.n()).find(|&z| {
        (2.0 * field.get(x, z) - d).abs() <= eps && (2.0 * field.get(y, z) - d).abs() <= eps
    })
}

pub fn check_midpoints(field: &MetricField, pairs: &[(usize, usize)], eps: f64) -> PropertyResult {
    const NAME: &str = "epsilon_midpoints";
    let missing = pairs
        .par_iter()
        .find_first(|(x, y)| find_midpoint(field, *x, *y, eps).is_none());
    match missing {
        Some(&(x, y)) => PropertyResult::fail(
            NAME,
            format!(
                "no {eps:e}-midpoint for pair ({x}, {y}) at distance {}",
                field.get(x, y)
            ),
            vec![x, y],
        ),
        None => PropertyResult::pass(NAME, format!("{} pairs, eps {eps:e}", pairs.len())),
    }
}

pub fn check_invariance(report: &DefectReport) -> PropertyResult {
    const NAME: &str = "right_invariance";
    let detail = format!(
        "max defect {:e} over {} triples, floor {:e} + {}·d",
        report.max_abs, report.triples, report.floor_abs, report.floor_rel
    );
    if report.max_excess <= 0.0 {
        PropertyResult::pass(NAME, detail)
    } else {
        let w = report
            .worst
            .map(|(i, j, s)| vec![i, j, s])
            .unwrap_or_default();
        PropertyResult::fail(NAME, detail, w)
    }
}

/// Symmetry `F̃(v) = F̃(-v)` (absolute tolerance `sym_tol`) and homogeneity
/// (relative tolerance `hom_tol`) on the finite entries of a norm table.
pub fn check_norm_table(table: &NormTable, sym_tol: f64, hom_tol: f64) -> Vec<PropertyResult> {
    let mut sym = PropertyResult::pass("finsler_symmetry", String::new());
    let mut hom = PropertyResult::pass("finsler_homogeneity", String::new());
    let mut sym_checked = 0;
    for h in &table.homogeneity {
        let (a, b) = (&table.entries[h.i], &table.entries[h.j]);
        if (h.lambda + 1.0).abs() < 1e-12 {
            sym_checked += 1;
            if (a.value - b.value).abs() > sym_tol && sym.passed {
                sym = PropertyResult::fail(
                    "finsler_symmetry",
                    format!("F(v) = {} but F(-v) = {}", a.value, b.value),
                    vec![h.i, h.j],
                );
            }
        }
        if (h.ratio - 1.0).abs() > hom_tol && hom.passed {
            hom = PropertyResult::fail(
                "finsler_homogeneity",
                format!("F(λv)/(|λ|F(v)) = {} for λ = {}", h.ratio, h.lambda),
                vec![h.i, h.j],
            );
        }
    }
    if sym.passed {
        sym.detail = format!("{sym_checked} opposite pairs within {sym_tol:e}");
    }
    if hom.passed {
        hom.detail = format!(
            "{} parallel pairs within {hom_tol}",
            table.homogeneity.len()
        );
    }
    vec![sym, hom]
}

/// `d(exp(tv)σ, σ) ≤ F̃(v)·t + slack` for grid points `σ` and grid-aligned
/// `t` along a coordinate direction `v`.
pub fn check_finsler_bound(
    field: &MetricField,
    v: &AlgebraVector,
    norm: f64,
    t_values: &[f64],
    slack: f64,
) -> PropertyResult {
    const NAME: &str = "finsler_upper_bound";
    let grid = field.grid();
    let group = grid.group;
    let mut worst = f64::NEG_INFINITY;
    for &t in t_values {
        for s in grid.core_indices() {
            let sc = grid.coords(s);
            let mut e: Coords = Coords::from_elem(0.0, group.dim());
            let mut moved: Coords = Coords::from_elem(0.0, group.dim());
            group.exp_into(&v.components, t, &mut e);
            group.mul_into(&e, &sc, &mut moved);
            let Some(m) = grid.nearest(&moved) else {
                continue;
            };
            if !grid.is_core(m) {
                continue;
            }
            let excess = field.get(m, s) - norm * t;
            worst = worst.max(excess);
            if excess > slack {
                return PropertyResult::fail(
                    NAME,
                    format!(
                        "d = {} exceeds F·t = {} at t = {t}",
                        field.get(m, s),
                        norm * t
                    ),
                    vec![m, s],
                );
            }
        }
    }
    PropertyResult::pass(NAME, format!("max excess {worst:e} within slack {slack:e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_window, WindowSpec};
    use crate::group::Group;
    use crate::metric::{base_metric_matrix, BaseMetric, BaseMetricSpec};
    use std::sync::Arc;

    fn field(spec: BaseMetricSpec) -> MetricField {
        let g = Group::Real { dim: 1 };
        let grid = Arc::new(sample_window(g, &WindowSpec::interval(-1.0, 1.0, 21, 0.0)).unwrap());
        base_metric_matrix(grid, &BaseMetric::new(g, spec).unwrap()).unwrap()
    }

    #[test]
    fn axioms_pass_and_report_corruption() {
        let f = field(BaseMetricSpec::ArctanPullback);
        assert!(check_metric_axioms(&f, 1e-12, true).passed);
        let mut bad = f.clone();
        bad.set(3, 7, bad.get(3, 7) + 0.5);
        let r = check_metric_axioms(&bad, 1e-12, true);
        assert!(!r.passed);
        assert_eq!(r.witness, Some(vec![3, 7]));
        let mut tri = f.clone();
        tri.set(0, 20, 10.0);
        tri.set(20, 0, 10.0);
        let r = check_metric_axioms(&tri, 1e-12, true);
        assert!(!r.passed);
        assert_eq!(r.witness.unwrap()[..2], [0, 20]);
    }

    #[test]
    fn bounds_and_monotonicity() {
        let a = field(BaseMetricSpec::ArctanPullback);
        let e = field(BaseMetricSpec::Euclidean);
        assert!(check_upper_bound(&a, &e, 0.0).unwrap().passed);
        assert!(!check_upper_bound(&e, &a, 0.0).unwrap().passed);
        assert!(check_monotone(&[&a, &e], 0.0).unwrap().passed);
        assert!(!check_monotone(&[&e, &a], 0.0).unwrap().passed);
    }

    #[test]
    fn midpoints_on_euclidean_field() {
        let e = field(BaseMetricSpec::Euclidean);
        assert_eq!(find_midpoint(&e, 0, 20, 1e-12), Some(10));
        let r = check_midpoints(&e, &[(0, 20), (3, 4)], 0.1 + 1e-12);
        assert!(r.passed, "{}", r.detail);
        assert!(!check_midpoints(&e, &[(3, 4)], 0.01).passed);
    }

    #[test]
    fn finsler_bound_on_euclidean_field() {
        let e = field(BaseMetricSpec::Euclidean);
        let v = Group::Real { dim: 1 }.vector(&[1.0]).unwrap();
        assert!(check_finsler_bound(&e, &v, 1.0, &[0.1, 0.5], 1e-12).passed);
        assert!(!check_finsler_bound(&e, &v, 0.5, &[0.1], 1e-12).passed);
    }
}
