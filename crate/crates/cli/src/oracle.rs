//! Reference values computed by brute force, independently of the library
//! algorithms: plain loops over closed-form metrics, dense scans followed by
//! golden-section refinement, and exact gap analysis for covering radii.
//! Output is deterministic so committed copies can be compared byte for byte.

use std::f64::consts::{PI, SQRT_2};
use std::fs;
use std::path::Path;

use anyhow::{bail, Result};
use serde_json::{json, Value};

pub const ORACLE_SCHEMA: &str = "hausflow.oracle/1";

pub const CASES: &[&str] = &[
    "hausdorff-pairs",
    "induced-real",
    "bar-metric",
    "arctan-finsler",
    "cuberoot-finsler",
    "chordal-arc",
    "koranyi-gauge",
    "words-unit-interval",
    "raw-arctan-defect",
];

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn arctan(a: f64, b: f64) -> f64 {
    (a.atan() - b.atan()).abs()
}

fn cuberoot(a: f64, b: f64) -> f64 {
    (a.cbrt() - b.cbrt()).abs()
}

fn real_metric(name: &str) -> fn(f64, f64) -> f64 {
    match name {
        "euclidean" => |a, b| (a - b).abs(),
        "arctan_pullback" => arctan,
        "cuberoot_pullback" => cuberoot,
        _ => unreachable!("unknown metric {name}"),
    }
}

/// Full double loop in both directions, no early exit.
fn hausdorff_naive<T>(a: &[T], b: &[T], d: impl Fn(&T, &T) -> f64) -> f64 {
    let one_sided = |u: &[T], v: &[T]| {
        u.iter()
            .map(|p| v.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Maximum of `f` on `[lo, hi]`: dense scan, then golden-section search in
/// the two cells around the best scan point.
fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, scan: usize) -> (f64, f64) {
    let h = (hi - lo) / scan as f64;
    let (mut best_x, mut best) = (lo, f(lo));
    for k in 1..=scan {
        let x = lo + k as f64 * h;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut a, mut b) = ((best_x - h).max(lo), (best_x + h).min(hi));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    let x = 0.5 * (a + b);
    if f(x) > best {
        (x, f(x))
    } else {
        (best_x, best)
    }
}

fn hausdorff_pairs() -> Value {
    let cases_1d: &[(&str, &[f64], &[f64])] = &[
        ("euclidean", &[0.0, 1.0], &[0.0, 3.0]),
        ("euclidean", &[-1.0, 0.0, 1.5], &[0.2, 2.0]),
        (
            "arctan_pullback",
            &[-1.0, 0.0, SQRT_2],
            &[0.5, -0.5, 0.5 + SQRT_2],
        ),
        (
            "cuberoot_pullback",
            &[-1.0, 0.0, SQRT_2],
            &[0.01, -0.99, 0.01 + SQRT_2],
        ),
        ("arctan_pullback", &[-5.0, 5.0], &[0.0]),
    ];
    let mut out: Vec<Value> = cases_1d
        .iter()
        .map(|(m, a, b)| {
            let d = real_metric(m);
            json!({
                "metric": m,
                "group": "real1",
                "a": a.iter().map(|x| vec![*x]).collect::<Vec<_>>(),
                "b": b.iter().map(|x| vec![*x]).collect::<Vec<_>>(),
                "value": hausdorff_naive(a, b, |x, y| d(*x, *y)),
            })
        })
        .collect();
    let a2 = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
    let b2 = vec![vec![0.5, 0.5], vec![2.0, 0.0]];
    out.push(json!({
        "metric": "euclidean",
        "group": "real2",
        "a": a2,
        "b": b2,
        "value": hausdorff_naive(&a2, &b2, |x, y| euclid(x, y)),
    }));
    json!({ "method": "exhaustive double loop", "cases": out })
}

fn induced_real() -> Value {
    let x = [0.0, -1.0, SQRT_2];
    let pairs = [
        (0.0, 0.1),
        (0.5, -0.3),
        (1.7, 1.9),
        (-2.0, 2.0),
        (0.25, 0.25),
    ];
    let mut cases = Vec::new();
    for m in ["euclidean", "arctan_pullback", "cuberoot_pullback"] {
        let d = real_metric(m);
        for (p, q) in pairs {
            let px: Vec<f64> = x.iter().map(|g| p + g).collect();
            let qx: Vec<f64> = x.iter().map(|g| q + g).collect();
            let induced = hausdorff_naive(&px, &qx, |a, b| d(*a, *b));
            let max_translate = px
                .iter()
                .zip(&qx)
                .map(|(a, b)| d(*a, *b))
                .fold(0.0, f64::max);
            cases.push(json!({
                "metric": m,
                "p": p,
                "q": q,
                "induced": induced,
                "max_translate": max_translate,
                "base": d(p, q),
            }));
        }
    }
    json!({ "method": "translates p + x, exhaustive Hausdorff", "generators": x, "cases": cases })
}

fn bar_metric() -> Value {
    let a = maximize(|s| arctan(s + 0.1, s), -10.0, 10.0, 200_000);
    let c = maximize(|s| cuberoot(s + 0.001, s), -0.01, 0.01, 200_000);
    json!({
        "method": "sup over sigma by dense scan and golden section",
        "cases": [
            {
                "metric": "arctan_pullback",
                "p": 0.1, "q": 0.0,
                "value": a.1, "argmax": a.0,
                "closed_form": 2.0 * 0.05f64.atan(),
            },
            {
                "metric": "cuberoot_pullback",
                "p": 0.001, "q": 0.0,
                "value": c.1, "argmax": c.0,
                "closed_form": 2.0 * 0.0005f64.cbrt(),
            }
        ]
    })
}

fn finsler_trend(d: fn(f64, f64) -> f64, scale: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let ts: Vec<f64> = (1..=steps).map(|k| scale * 0.5f64.powi(k as i32)).collect();
    let q = ts
        .iter()
        .map(|&t| {
            let w = 4.0 * t.max(1.0);
            maximize(|s| d(s + t, s) / t, -w, w, 20_000).1
        })
        .collect();
    (ts, q)
}

fn arctan_finsler() -> Value {
    let (ts, q) = finsler_trend(arctan, 4.0, 14);
    let closed: Vec<f64> = ts.iter().map(|t| 2.0 * (t / 2.0).atan() / t).collect();
    json!({
        "method": "sup over sigma of d(sigma + t, sigma) / t",
        "direction": [1.0],
        "t": ts,
        "quotient": q,
        "closed_form": closed,
        "limit": 1.0,
    })
}

fn cuberoot_finsler() -> Value {
    let (ts, q) = finsler_trend(cuberoot, 4.0, 14);
    let closed: Vec<f64> = ts.iter().map(|t| 2.0 * (t / 2.0).cbrt() / t).collect();
    json!({
        "method": "sup over sigma of d(sigma + t, sigma) / t",
        "direction": [1.0],
        "t": ts,
        "quotient": q,
        "closed_form": closed,
        "limit": f64::INFINITY,
    })
}

fn chordal_arc() -> Value {
    let k = 360usize;
    let chord = |a: f64, b: f64| {
        let (ua, ub) = ((2.0 * PI * a).cos(), (2.0 * PI * a).sin());
        let (va, vb) = ((2.0 * PI * b).cos(), (2.0 * PI * b).sin());
        ((ua - va).powi(2) + (ub - vb).powi(2)).sqrt()
    };
    let half: f64 = (0..k / 2)
        .map(|i| chord(i as f64 / k as f64, (i + 1) as f64 / k as f64))
        .sum();
    json!({
        "method": "polygonal length through the unit-circle embedding",
        "subdivisions": k,
        "half_circle_length": half,
        "chord_antipodal": chord(0.0, 0.5),
        "arc_antipodal": PI,
    })
}

/// Heisenberg elements as upper unitriangular 3x3 matrices.
fn heis_matrix(c: &[f64; 3]) -> [[f64; 3]; 3] {
    [[1.0, c[0], c[2]], [0.0, 1.0, c[1]], [0.0, 0.0, 1.0]]
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn unitriangular_inverse(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let (x, y, z) = (a[0][1], a[1][2], a[0][2]);
    [[1.0, -x, x * y - z], [0.0, 1.0, -y], [0.0, 0.0, 1.0]]
}

fn koranyi_gauge() -> Value {
    let pairs: [([f64; 3], [f64; 3]); 5] = [
        ([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
        ([0.0, 0.0, 0.25], [0.0, 0.0, 0.0]),
        ([0.3, -0.2, 0.5], [-0.1, 0.4, 0.2]),
        ([1.0, 1.0, 0.0], [0.0, 0.0, 0.0]),
        ([0.5, 0.5, 0.125], [0.0, 0.0, 0.0]),
    ];
    let cases: Vec<Value> = pairs
        .iter()
        .map(|(p, q)| {
            let m = mat_mul(&heis_matrix(p), &unitriangular_inverse(&heis_matrix(q)));
            let (x, y, z) = (m[0][1], m[1][2], m[0][2]);
            // matrix logarithm of a unitriangular matrix: (x, y, z - xy/2)
            let tau = z - x * y / 2.0;
            let n = ((x * x + y * y).powi(2) + 16.0 * tau * tau).powf(0.25);
            json!({ "p": p, "q": q, "value": n })
        })
        .collect();
    json!({ "method": "gauge of p q^-1 via unitriangular matrices", "cases": cases })
}

/// Exact covering radius of `[0, 1]` by a finite point set.
fn cover_unit_interval(points: &mut [f64]) -> (f64, f64) {
    points.sort_by(f64::total_cmp);
    let mut best = (0.0, 0.0);
    let nearest = |y: f64| {
        points
            .iter()
            .map(|p| (p - y).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let mut candidates = vec![0.0, 1.0];
    for w in points.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        if (0.0..=1.0).contains(&m) {
            candidates.push(m);
        }
    }
    for y in candidates {
        let r = nearest(y);
        if r > best.0 {
            best = (r, y);
        }
    }
    best
}

fn words_unit_interval() -> Value {
    let reach = SQRT_2;
    let sets: [(&str, [f64; 2]); 2] = [("generators", [-1.0, SQRT_2]), ("inverse", [1.0, -SQRT_2])];
    let mut out = Vec::new();
    for (name, [u, v]) in sets {
        for maxlen in [4usize, 8, 12] {
            let mut pts = Vec::new();
            for a in 0..=maxlen {
                for b in 0..=(maxlen - a) {
                    let s = a as f64 * u + b as f64 * v;
                    if s >= -reach - 1e-12 && s <= 1.0 + reach + 1e-12 {
                        pts.push(s);
                    }
                }
            }
            let mut dedup: Vec<f64> = Vec::new();
            pts.sort_by(f64::total_cmp);
            for p in pts {
                if dedup.last().map_or(true, |q| (p - q).abs() > 1e-9) {
                    dedup.push(p);
                }
            }
            let in_window = dedup.iter().filter(|p| (0.0..=1.0).contains(*p)).count();
            let (r, y) = cover_unit_interval(&mut dedup);
            out.push(json!({
                "set": name,
                "maxlen": maxlen,
                "window_points": in_window,
                "covering_radius": r,
                "witness": y,
            }));
        }
    }
    json!({
        "method": "all sums a u + b v with a + b <= maxlen, exact gap analysis",
        "window": [0.0, 1.0],
        "cases": out,
    })
}

fn raw_arctan_defect() -> Value {
    let (x, y, s) = (1.0, 2.0, 1.0);
    let d = arctan(x, y);
    let ds = arctan(x + s, y + s);
    json!({
        "method": "closed form",
        "x": x, "y": y, "sigma": s,
        "d": d, "d_translated": ds,
        "defect": (ds - d).abs(),
    })
}

pub fn compute(case: &str) -> Result<Value> {
    let values = match case {
        "hausdorff-pairs" => hausdorff_pairs(),
        "induced-real" => induced_real(),
        "bar-metric" => bar_metric(),
        "arctan-finsler" => arctan_finsler(),
        "cuberoot-finsler" => cuberoot_finsler(),
        "chordal-arc" => chordal_arc(),
        "koranyi-gauge" => koranyi_gauge(),
        "words-unit-interval" => words_unit_interval(),
        "raw-arctan-defect" => raw_arctan_defect(),
        other => bail!(
            "unknown oracle case {other:?}; known cases: all, {}",
            CASES.join(", ")
        ),
    };
    Ok(json!({ "schema": ORACLE_SCHEMA, "case": case, "values": values }))
}

/// Writes `<out>/oracle/<case>.json` for one case or for `all`.
pub fn write(case: &str, out: &Path) -> Result<Vec<String>> {
    let names: Vec<&str> = if case == "all" {
        CASES.to_vec()
    } else {
        vec![case]
    };
    let dir = out.join("oracle");
    let mut written = Vec::new();
    for name in names {
        let v = compute(name)?;
        fs::create_dir_all(&dir)?;
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        let path = dir.join(format!("{name}.json"));
        fs::write(&path, text)?;
        written.push(path.display().to_string());
    }
    Ok(written)
}
