use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use hausflow::finsler::{
    dyadic_schedule, norm_table, right_invariance_defect, right_invariant_envelope,
    sup_equals_limsup_check, SigmaSample,
};
use hausflow::flow::{run_flow, run_flow_with, FlowState, Verdict};
use hausflow::metric::io::{read_field_csv, write_field_csv};
use hausflow::semigroup::{check_bracket_generating, covering_radius, generate_words_capped};
use hausflow::verify::{
    check_invariance, check_metric_axioms, check_midpoints, check_norm_table, check_upper_bound,
    PropertyResult,
};
use hausflow::{
    check_isotropy_trivial, invert_generators, sample_window, Error, GeneratorSet, Grid,
    GroupElement, MetricField, PairDistance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig, FinslerSource, GeneratorSource};
use crate::exit::ExitStatus;

pub const REPORT_SCHEMA: &str = "hausflow.report/1";

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_csv(path: &Path, field: &MetricField) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_field_csv(field, BufWriter::new(f))?;
    Ok(())
}

fn certified(exp: &Experiment) -> Result<GeneratorSet> {
    exp.raw_generators.clone().certify().context("generators")
}

fn grid_of(exp: &Experiment) -> Result<Arc<Grid>> {
    Ok(Arc::new(
        sample_window(exp.config.group, &exp.window).context("window")?,
    ))
}

fn generator_summary(exp: &Experiment, x: &GeneratorSet) -> Value {
    let mut v = json!({
        "count": x.len(),
        "reach_radius": x.reach_radius(),
        "isotropy_trivial": x.is_certified(),
    });
    if exp.sampled_x() {
        v["approximation"] = json!("sampled-X approximation");
        if let GeneratorSource::TorusBoxComplement { mesh, .. } = exp.config.generators {
            v["sample_mesh"] = json!(mesh);
        }
    } else {
        v["elements"] = json!(x.coords().iter().map(|c| c.to_vec()).collect::<Vec<_>>());
    }
    v
}

fn grid_summary(grid: &Grid) -> Value {
    json!({
        "points": grid.len(),
        "core_points": grid.core_indices().len(),
        "step": grid.step(),
        "padding_nodes": grid.axes.iter().map(|a| a.pad).collect::<Vec<_>>(),
    })
}

fn verdict_status(v: &Verdict) -> ExitStatus {
    match v {
        Verdict::Converged { .. } => ExitStatus::Ok,
        Verdict::Diverged { .. } => ExitStatus::Diverged,
        Verdict::MaxIterReached { .. } => ExitStatus::MaxIter,
    }
}

pub fn cmd_run(config: ExperimentConfig, out: &Path) -> Result<ExitStatus> {
    let exp = config.resolve()?;
    let x = certified(&exp)?;
    let grid = grid_of(&exp)?;
    let state = run_flow(grid.clone(), &exp.metric, &x, &exp.config.flow_config())?;
    fs::create_dir_all(out)?;
    let mut iterates = Vec::new();
    for (k, field) in &state.iterates {
        let name = format!("d_{k}.csv");
        write_csv(&out.join(&name), field)?;
        iterates.push(json!({ "index": k, "label": field.label(), "csv": name }));
    }
    let status = verdict_status(&state.verdict);
    let report = json!({
        "schema": REPORT_SCHEMA,
        "command": "run",
        "config": exp.config,
        "grid": grid_summary(&grid),
        "generators": generator_summary(&exp, &x),
        "verdict": state.verdict,
        "exit_code": status.code(),
        "steps": state.steps(),
        "deltas": state.deltas,
        "core_diameters": state.core_diameters,
        "divergence_threshold": state.threshold,
        "boundary_band": {
            "width": x.reach_radius(),
            "core_points": state.boundary_band.len(),
        },
        "disconnected": state.disconnected,
        "iterates": iterates,
    });
    write_json(&out.join("report.json"), &report)?;
    Ok(status)
}

/// Grid-aligned translations with every coordinate in `[-extent, extent]`.
fn aligned_sigma(grid: &Grid, extent: f64) -> Vec<GroupElement> {
    let group = grid.group;
    let mut pts: Vec<Vec<f64>> = vec![vec![]];
    for a in &grid.axes {
        let h = a.step();
        let k = (extent / h + 1e-9).floor() as i64;
        let ks: Vec<i64> = if a.periodic {
            let half = (a.count as i64 - 1) / 2;
            (-k.min(half)..=k.min(half)).collect()
        } else {
            (-k..=k).collect()
        };
        pts = pts
            .into_iter()
            .flat_map(|p| {
                ks.iter().map(move |j| {
                    let mut q = p.clone();
                    q.push(*j as f64 * h);
                    q
                })
            })
            .collect();
    }
    pts.iter()
        .map(|c| group.element(c).expect("dimension"))
        .collect()
}

fn random_core_pairs(grid: &Grid, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let core = grid.core_indices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let i = core[rng.gen_range(0..core.len())];
            let j = core[rng.gen_range(0..core.len())];
            (i, j)
        })
        .collect()
}

fn not_applicable(name: &str, why: &str) -> PropertyResult {
    PropertyResult {
        name: name.to_string(),
        passed: true,
        detail: format!("not applicable: {why}"),
        witness: None,
    }
}

pub fn cmd_verify(
    config: ExperimentConfig,
    out: &Path,
    field: Option<&Path>,
) -> Result<ExitStatus> {
    let exp = config.resolve()?;
    let grid = grid_of(&exp)?;
    let v = &exp.config.verify;
    let mut props = Vec::new();
    let mut flow_verdict = Value::Null;
    if let Some(path) = field {
        let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let field = read_field_csv(grid.clone(), std::io::BufReader::new(f), "input")
            .with_context(|| format!("reading field {}", path.display()))?;
        props.push(check_metric_axioms(&field, v.axiom_tol, true));
    } else {
        let x = certified(&exp)?;
        let h = grid.step();
        let opts = exp.config.finsler_options();
        let schedule = dyadic_schedule(
            exp.config.finsler.schedule_scale.expect("resolved"),
            exp.config.finsler.schedule_steps,
        );
        let sigma = SigmaSample::half_step_lattice(&grid);
        let envelope = match right_invariant_envelope(
            &exp.metric,
            &grid,
            exp.config.adjacency,
            &sigma,
            &schedule,
            &opts,
        ) {
            Ok(e) => Some(e),
            Err(Error::EnvelopeInfinite { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let mut bound = match &envelope {
            Some(_) => None,
            None => Some(not_applicable(
                "upper_bound",
                "the right-invariant envelope is infinite",
            )),
        };
        let slack = v.bound_steps * h;
        let result = run_flow_with(
            grid.clone(),
            &exp.metric,
            &x,
            &exp.config.flow_config(),
            |_, f| {
                if let (Some(env), None) = (&envelope, &bound) {
                    let r = check_upper_bound(f, env, slack).expect("same grid");
                    if !r.passed {
                        bound = Some(r);
                    }
                }
            },
        );
        let state: Option<FlowState> = match result {
            Ok(s) if exp.config.flow.enforce_monotone == Some(false) => {
                props.push(not_applicable(
                    "monotone_iterates",
                    "monotonicity holds only for finite generator sets",
                ));
                Some(s)
            }
            Ok(s) => {
                props.push(PropertyResult {
                    name: "monotone_iterates".into(),
                    passed: true,
                    detail: format!(
                        "{} steps, slack {:e}",
                        s.steps(),
                        exp.config.flow.monotone_slack
                    ),
                    witness: None,
                });
                Some(s)
            }
            Err(Error::Monotonicity {
                iteration,
                i,
                j,
                before,
                after,
                ..
            }) => {
                props.push(PropertyResult {
                    name: "monotone_iterates".into(),
                    passed: false,
                    detail: format!(
                        "iterate {iteration} decreased at ({i}, {j}): {before} -> {after}"
                    ),
                    witness: Some(vec![i, j]),
                });
                None
            }
            Err(e) => return Err(e.into()),
        };
        props.push(bound.unwrap_or_else(|| PropertyResult {
            name: "upper_bound".into(),
            passed: true,
            detail: format!("every iterate within {slack:e} of the envelope"),
            witness: None,
        }));
        if let Some(state) = &state {
            flow_verdict = serde_json::to_value(&state.verdict)?;
            let first = state.first();
            let last = state.last();
            let mut base = check_metric_axioms(first, v.axiom_tol, true);
            base.name = "metric_axioms_base".into();
            let mut lim = check_metric_axioms(last, v.axiom_tol, true);
            lim.name = "metric_axioms_last".into();
            props.push(base);
            props.push(lim);
            let pairs = random_core_pairs(&grid, v.midpoint_pairs, exp.config.seed);
            props.push(check_midpoints(last, &pairs, v.midpoint_steps * h));
            if x.len() == 1 {
                props.push(not_applicable(
                    "right_invariance",
                    "X = {e} generates no translations",
                ));
            } else if matches!(state.verdict, Verdict::Converged { .. }) {
                let sig = aligned_sigma(&grid, v.invariance_extent);
                let d =
                    right_invariance_defect(last, &sig, v.invariance_steps * h, v.invariance_rel)?;
                props.push(check_invariance(&d));
            } else {
                props.push(not_applicable(
                    "right_invariance",
                    "the flow did not converge",
                ));
            }
        }
        let dirs: Vec<_> = exp
            .config
            .finsler
            .directions
            .as_ref()
            .expect("resolved")
            .iter()
            .map(|d| exp.config.group.vector(d).expect("validated"))
            .collect();
        let table = norm_table(
            &exp.base_point(),
            &dirs,
            &exp.metric,
            &schedule,
            &sigma,
            &opts,
        )?;
        props.extend(check_norm_table(&table, v.symmetry_tol, v.homogeneity_tol));
    }
    let all_passed = props.iter().all(|p| p.passed);
    let status = if all_passed {
        ExitStatus::Ok
    } else {
        ExitStatus::VerifyFailed
    };
    fs::create_dir_all(out)?;
    write_json(
        &out.join("verify.json"),
        &json!({
            "schema": REPORT_SCHEMA,
            "command": "verify",
            "config": exp.config,
            "field": field.map(|p| p.display().to_string()),
            "flow_verdict": flow_verdict,
            "properties": props,
            "all_passed": all_passed,
            "exit_code": status.code(),
        }),
    )?;
    Ok(status)
}

pub fn cmd_semigroup(config: ExperimentConfig, out: &Path) -> Result<ExitStatus> {
    let exp = config.resolve()?;
    let x = &exp.raw_generators;
    let group = exp.config.group;
    let isotropy = hausflow::generators::isotropy_witness(x);
    let bracket = match &exp.config.generators {
        GeneratorSource::FromBasis { basis } => {
            let v = basis
                .iter()
                .map(|b| group.vector(b))
                .collect::<hausflow::Result<Vec<_>>>()?;
            Some(check_bracket_generating(&v)?)
        }
        _ => None,
    };
    let inv = invert_generators(x)?;
    let res = exp.window.resolution.iter().copied().max().unwrap_or(2);
    let probes = (exp.config.semigroup.probe_factor * res).max(2);
    let cap = exp.config.semigroup.cloud_cap;
    let mut rows = Vec::new();
    let mut csv = String::from(
        "maxlen,cloud_size,halo_size,covering_radius,inverse_cloud_size,inverse_covering_radius\n",
    );
    for &l in &exp.config.semigroup.maxlens {
        let c = generate_words_capped(x, l, &exp.window, cap)?;
        let ci = generate_words_capped(&inv, l, &exp.window, cap)?;
        let r = covering_radius(&c, &exp.window, &exp.metric, probes)?;
        let ri = covering_radius(&ci, &exp.window, &exp.metric, probes)?;
        csv.push_str(&format!(
            "{l},{},{},{},{},{}\n",
            c.len(),
            c.halo.len(),
            r.radius,
            ci.len(),
            ri.radius
        ));
        rows.push(json!({
            "maxlen": l,
            "cloud_size": c.len(),
            "halo_size": c.halo.len(),
            "depth_counts": c.depth_counts,
            "covering_radius": r,
            "inverse_cloud_size": ci.len(),
            "inverse_covering_radius": ri,
        }));
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("semigroup.csv"), csv)?;
    let certificate = json!({
        "schema": REPORT_SCHEMA,
        "command": "semigroup",
        "config": exp.config,
        "generators": x.coords().iter().map(|c| c.to_vec()).collect::<Vec<_>>(),
        "inverse_generators": inv.coords().iter().map(|c| c.to_vec()).collect::<Vec<_>>(),
        "isotropy_trivial": check_isotropy_trivial(x),
        "isotropy_witness": isotropy,
        "bracket": bracket,
        "probe_resolution": probes,
        "clouds": rows,
    });
    write_json(&out.join("certificate.json"), &certificate)?;
    Ok(ExitStatus::Ok)
}

pub fn cmd_finsler(config: ExperimentConfig, out: &Path) -> Result<ExitStatus> {
    let exp = config.resolve()?;
    let x = certified(&exp)?;
    let grid = grid_of(&exp)?;
    let f = &exp.config.finsler;
    let opts = exp.config.finsler_options();
    let schedule = dyadic_schedule(f.schedule_scale.expect("resolved"), f.schedule_steps);
    let sigma = SigmaSample::grid_and_words(&grid, &x, f.word_maxlen)?;
    let dirs: Vec<_> = f
        .directions
        .as_ref()
        .expect("resolved")
        .iter()
        .map(|d| exp.config.group.vector(d).expect("validated"))
        .collect();
    let limit = match f.source {
        FinslerSource::Base => None,
        FinslerSource::Limit => {
            let state = run_flow(grid.clone(), &exp.metric, &x, &exp.config.flow_config())?;
            Some((state.last().clone(), serde_json::to_value(&state.verdict)?))
        }
    };
    let sampler = limit.as_ref().map(|(field, _)| field.sampler());
    let metric: &dyn PairDistance = match &sampler {
        Some(s) => s,
        None => &exp.metric,
    };
    let source = match &limit {
        Some((_, verdict)) => json!({ "limit": verdict }),
        None => json!("base"),
    };
    let table = norm_table(&exp.base_point(), &dirs, metric, &schedule, &sigma, &opts)?;
    let sup_limsup = dirs
        .iter()
        .map(|v| sup_equals_limsup_check(v, metric, &schedule, &sigma, &opts))
        .collect::<hausflow::Result<Vec<_>>>()?;
    let d = exp.config.group.dim();
    let mut csv: String = (0..d).map(|k| format!("v{k},")).collect();
    csv.push_str("value,diverged,tail_max\n");
    for e in &table.entries {
        for c in e.direction.components() {
            csv.push_str(&format!("{c},"));
        }
        let value = if e.value.is_finite() {
            e.value.to_string()
        } else {
            "inf".into()
        };
        csv.push_str(&format!("{value},{},{}\n", e.diverged, e.tail_max));
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("norm_table.csv"), csv)?;
    write_json(
        &out.join("finsler.json"),
        &json!({
            "schema": REPORT_SCHEMA,
            "command": "finsler",
            "config": exp.config,
            "source": source,
            "sigma": { "description": sigma.description, "count": sigma.len() },
            "entries": table.entries,
            "homogeneity": table.homogeneity,
            "sup_limsup": sup_limsup,
        }),
    )?;
    Ok(ExitStatus::Ok)
}
