//! Library results against the committed brute-force reference files.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use hausflow::apsp::ApspMethod;
use hausflow::finsler::{
    bar_metric, dyadic_schedule, finsler_estimate, FinslerOptions, SigmaSample,
};
use hausflow::flow::{intrinsicize, path_length, AdjacencySpec};
use hausflow::semigroup::{covering_radius, generate_words};
use hausflow::{
    base_metric_matrix, hausdorff_distance, induced_metric, invert_generators,
    max_translate_metric, sample_window, BaseMetric, BaseMetricSpec, GeneratorSet, Group,
    GroupElement, WindowSpec,
};
use serde_json::Value;

fn oracle(name: &str) -> Value {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "tests",
        "oracle",
        &format!("{name}.json"),
    ]
    .iter()
    .collect();
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["schema"], "hausflow.oracle/1");
    assert_eq!(v["case"], name);
    v["values"].clone()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn spec(name: &str) -> BaseMetricSpec {
    serde_json::from_value(serde_json::json!({ "kind": name })).unwrap()
}

fn elements(g: Group, v: &Value) -> Vec<GroupElement> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|p| {
            let c: Vec<f64> = p.as_array().unwrap().iter().map(f).collect();
            g.element(&c).unwrap()
        })
        .collect()
}

fn real1() -> Group {
    Group::Real { dim: 1 }
}

fn lattice(lo: f64, step: f64, count: usize) -> SigmaSample {
    let g = real1();
    let pts = (0..count)
        .map(|k| g.element(&[lo + k as f64 * step]).unwrap())
        .collect();
    SigmaSample::new("lattice", pts)
}

#[test]
fn hausdorff_pairs_match_exhaustive_loops() {
    for case in oracle("hausdorff-pairs")["cases"].as_array().unwrap() {
        let g = match case["group"].as_str().unwrap() {
            "real1" => real1(),
            _ => Group::Real { dim: 2 },
        };
        let m = BaseMetric::new(g, spec(case["metric"].as_str().unwrap())).unwrap();
        let got =
            hausdorff_distance(&elements(g, &case["a"]), &elements(g, &case["b"]), &m).unwrap();
        assert!((got - f(&case["value"])).abs() < 1e-12, "{case}: {got}");
    }
}

#[test]
fn induced_and_max_translate_metrics_on_the_line() {
    let v = oracle("induced-real");
    let x = GeneratorSet::from_coords(real1(), &[vec![-1.0], vec![2f64.sqrt()]])
        .unwrap()
        .certify()
        .unwrap();
    let gens: Vec<f64> = v["generators"].as_array().unwrap().iter().map(f).collect();
    let mut ours: Vec<f64> = x.coords().iter().map(|c| c[0]).collect();
    ours.sort_by(f64::total_cmp);
    let mut theirs = gens.clone();
    theirs.sort_by(f64::total_cmp);
    assert_eq!(ours, theirs);
    for case in v["cases"].as_array().unwrap() {
        let m = BaseMetric::new(real1(), spec(case["metric"].as_str().unwrap())).unwrap();
        let p = real1().element(&[f(&case["p"])]).unwrap();
        let q = real1().element(&[f(&case["q"])]).unwrap();
        let dx = induced_metric(&p, &q, &x, &m).unwrap();
        let dm = max_translate_metric(&p, &q, &x, &m).unwrap();
        let d = m.eval(&p, &q).unwrap();
        assert!((dx - f(&case["induced"])).abs() < 1e-12, "{case}: {dx}");
        assert!(
            (dm - f(&case["max_translate"])).abs() < 1e-12,
            "{case}: {dm}"
        );
        assert!((d - f(&case["base"])).abs() < 1e-12, "{case}: {d}");
        assert!(dx <= dm + 1e-15 && d <= dm + 1e-15);
    }
}

#[test]
fn bar_metric_on_fine_lattices() {
    let v = oracle("bar-metric");
    let cases = v["cases"].as_array().unwrap();
    let a = BaseMetric::new(real1(), BaseMetricSpec::ArctanPullback).unwrap();
    let sigma = lattice(-3.0, 1e-4, 60_001);
    let p = real1().element(&[0.1]).unwrap();
    let got = bar_metric(&p, &real1().identity(), &a, &sigma).unwrap();
    assert!((got - f(&cases[0]["value"])).abs() < 1e-9, "{got}");
    let c = BaseMetric::new(real1(), BaseMetricSpec::CuberootPullback).unwrap();
    let sigma = lattice(-0.01, 1e-6, 20_001);
    let p = real1().element(&[0.001]).unwrap();
    let got = bar_metric(&p, &real1().identity(), &c, &sigma).unwrap();
    assert!((got - f(&cases[1]["value"])).abs() < 1e-9, "{got}");
}

/// A sampled supremum never exceeds the true one, and on a lattice through
/// the maximiser it reaches it.
fn check_trend(case: &str, metric: BaseMetricSpec) -> Vec<f64> {
    let v = oracle(case);
    let t: Vec<f64> = v["t"].as_array().unwrap().iter().map(f).collect();
    let q: Vec<f64> = v["quotient"].as_array().unwrap().iter().map(f).collect();
    assert_eq!(t, dyadic_schedule(4.0, 14));
    let m = BaseMetric::new(real1(), metric).unwrap();
    let est = finsler_estimate(
        &real1().identity(),
        &real1().basis_vector(0),
        &m,
        &t,
        &lattice(-4.0, 1.0 / 8192.0, 65_537),
        &FinslerOptions::default(),
    )
    .unwrap();
    for (k, (got, want)) in est.trend.iter().zip(&q).enumerate() {
        assert!(*got <= want * (1.0 + 1e-12), "t = {}: {got} > {want}", t[k]);
    }
    // every maximiser -t/2 lies on the lattice
    for k in 0..t.len() {
        assert!((est.trend[k] - q[k]).abs() <= 1e-12 * q[k], "t = {}", t[k]);
    }
    assert_eq!(est.diverged, v["limit"].is_null());
    est.trend
}

#[test]
fn arctan_quotients_approach_one() {
    let trend = check_trend("arctan-finsler", BaseMetricSpec::ArctanPullback);
    assert!((trend.last().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn cuberoot_quotients_blow_up() {
    let trend = check_trend("cuberoot-finsler", BaseMetricSpec::CuberootPullback);
    assert!(trend.windows(2).all(|w| w[1] > 1.5 * w[0]));
}

#[test]
fn chordal_half_circle_length() {
    let v = oracle("chordal-arc");
    let k = v["subdivisions"].as_u64().unwrap() as usize;
    let t1 = Group::Torus { dim: 1 };
    let m = BaseMetric::new(t1, BaseMetricSpec::ChordalCircle).unwrap();
    let poly: Vec<_> = (0..=k / 2)
        .map(|i| t1.element(&[i as f64 / k as f64]).unwrap())
        .collect();
    let len = path_length(&poly, &m).unwrap();
    assert!((len - f(&v["half_circle_length"])).abs() < 1e-12, "{len}");
    let grid = Arc::new(sample_window(t1, &WindowSpec::torus(1, k)).unwrap());
    let field = base_metric_matrix(grid, &m).unwrap();
    assert_eq!(field.get(0, k / 2), f(&v["chord_antipodal"]));
    let arc = intrinsicize(
        &field,
        AdjacencySpec { stencil_radius: 1 },
        ApspMethod::Auto,
    )
    .unwrap();
    assert!((arc.get(0, k / 2) - f(&v["half_circle_length"])).abs() < 1e-12);
    assert!((f(&v["half_circle_length"]) - std::f64::consts::PI).abs() < 1e-4);
}

#[test]
fn koranyi_gauge_matches_matrix_computation() {
    let h = Group::Heisenberg;
    let m = BaseMetric::new(h, BaseMetricSpec::KoranyiGauge).unwrap();
    for case in oracle("koranyi-gauge")["cases"].as_array().unwrap() {
        let p = &elements(h, &serde_json::json!([case["p"]]))[0];
        let q = &elements(h, &serde_json::json!([case["q"]]))[0];
        let got = m.eval(p, q).unwrap();
        assert!((got - f(&case["value"])).abs() < 1e-12, "{case}: {got}");
    }
}

#[test]
fn word_cloud_covering_radii() {
    let v = oracle("words-unit-interval");
    let x = GeneratorSet::from_coords(real1(), &[vec![-1.0], vec![2f64.sqrt()]]).unwrap();
    let inv = invert_generators(&x).unwrap();
    let window = WindowSpec::interval(0.0, 1.0, 11, 0.0);
    let m = BaseMetric::new(real1(), BaseMetricSpec::Euclidean).unwrap();
    for case in v["cases"].as_array().unwrap() {
        let set = if case["set"] == "generators" {
            &x
        } else {
            &inv
        };
        let l = case["maxlen"].as_u64().unwrap() as usize;
        let cloud = generate_words(set, l, &window).unwrap();
        assert_eq!(
            cloud.points.len() as u64,
            case["window_points"].as_u64().unwrap(),
            "{case}"
        );
        let r = covering_radius(&cloud, &window, &m, 1000).unwrap().radius;
        assert!(
            (r - f(&case["covering_radius"])).abs() < 1e-9,
            "{case}: {r}"
        );
    }
}

#[test]
fn raw_arctan_defect() {
    let v = oracle("raw-arctan-defect");
    let m = BaseMetric::new(real1(), BaseMetricSpec::ArctanPullback).unwrap();
    let e = |a: f64| real1().element(&[a]).unwrap();
    let (x, y, s) = (f(&v["x"]), f(&v["y"]), f(&v["sigma"]));
    let d = m.eval(&e(x), &e(y)).unwrap();
    let ds = m.eval(&e(x + s), &e(y + s)).unwrap();
    assert!(((ds - d).abs() - f(&v["defect"])).abs() < 1e-15);
    assert!(f(&v["defect"]) > 0.15);
}
