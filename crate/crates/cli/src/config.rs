//! Experiment configuration (TOML). Every field has a default except the
//! group, the base metric, the generators and the window resolution.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hausflow::finsler::FinslerOptions;
use hausflow::flow::{AdjacencySpec, FlowConfig};
use hausflow::semigroup::{build_generator_from_basis, torus_box_complement};
use hausflow::{BaseMetric, BaseMetricSpec, GeneratorSet, Group, GroupElement, WindowSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub seed: u64,
    pub group: Group,
    pub base_metric: BaseMetricSpec,
    pub generators: GeneratorSource,
    pub window: WindowConfig,
    #[serde(default)]
    pub adjacency: AdjacencySpec,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub finsler: FinslerSection,
    #[serde(default)]
    pub semigroup: SemigroupSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSource {
    /// Listed elements; the identity is added when missing.
    Explicit { elements: Vec<Vec<f64>> },
    /// `{e} ∪ {exp(-v_i)} ∪ {exp(√2 v_i)}` from Lie algebra vectors.
    FromBasis { basis: Vec<Vec<f64>> },
    /// Lattice sample of the complement of an open box on Tⁿ.
    TorusBoxComplement { lower: f64, upper: f64, mesh: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    /// Required on ℝⁿ and H³; ignored on Tⁿ (always the full period).
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub resolution: Vec<usize>,
    /// Defaults to the generator reach radius (0 on Tⁿ).
    pub padding: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub tol: f64,
    pub max_iter: usize,
    pub divergence_factor: f64,
    pub monotone_slack: f64,
    /// Defaults to true for finite generator sets and false for sampled ones.
    pub enforce_monotone: Option<bool>,
    pub retain: hausflow::flow::RetainPolicy,
    pub apsp: hausflow::apsp::ApspMethod,
}

impl Default for FlowSection {
    fn default() -> Self {
        let f = FlowConfig::default();
        Self {
            tol: f.tol,
            max_iter: f.max_iter,
            divergence_factor: f.divergence_factor,
            monotone_slack: f.monotone_slack,
            enforce_monotone: None,
            retain: f.retain,
            apsp: f.apsp,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinslerSource {
    /// The base metric.
    #[default]
    Base,
    /// The last iterate of the flow.
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinslerSection {
    pub source: FinslerSource,
    /// Defaults to the identity.
    pub base_point: Option<Vec<f64>>,
    /// Defaults to `±e_k` and `2 e_k` for every basis vector.
    pub directions: Option<Vec<Vec<f64>>>,
    pub schedule_steps: usize,
    /// Defaults to the window scale.
    pub schedule_scale: Option<f64>,
    pub both_signs: bool,
    pub divergence_factor: f64,
    pub growth: f64,
    pub word_maxlen: usize,
}

impl Default for FinslerSection {
    fn default() -> Self {
        let o = FinslerOptions::default();
        Self {
            source: FinslerSource::Base,
            base_point: None,
            directions: None,
            schedule_steps: 14,
            schedule_scale: None,
            both_signs: o.both_signs,
            divergence_factor: o.divergence_factor,
            growth: o.growth,
            word_maxlen: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemigroupSection {
    pub maxlens: Vec<usize>,
    /// Probe points per axis as a multiple of the window resolution.
    pub probe_factor: usize,
    pub cloud_cap: usize,
}

impl Default for SemigroupSection {
    fn default() -> Self {
        Self {
            maxlens: vec![4, 8, 12],
            probe_factor: 10,
            cloud_cap: hausflow::semigroup::DEFAULT_CLOUD_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub axiom_tol: f64,
    pub midpoint_pairs: usize,
    /// ε-midpoint tolerance in grid steps.
    pub midpoint_steps: f64,
    /// Upper-bound slack in grid steps.
    pub bound_steps: f64,
    /// Grid-aligned σ range `[-extent, extent]` per axis for the invariance defect.
    pub invariance_extent: f64,
    /// Invariance floor in grid steps plus a relative part.
    pub invariance_steps: f64,
    pub invariance_rel: f64,
    pub symmetry_tol: f64,
    pub homogeneity_tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            axiom_tol: 1e-9,
            midpoint_pairs: 200,
            midpoint_steps: 3.0,
            bound_steps: 2.0,
            invariance_extent: 1.0,
            invariance_steps: 2.0,
            invariance_rel: 0.05,
            symmetry_tol: 1e-3,
            homogeneity_tol: 0.02,
        }
    }
}

/// Objects built from a validated configuration.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub metric: BaseMetric,
    /// Generator set before the isotropy certificate is attached.
    pub raw_generators: GeneratorSet,
    pub window: WindowSpec,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            adjacency: self.adjacency,
            tol: self.flow.tol,
            max_iter: self.flow.max_iter,
            divergence_factor: self.flow.divergence_factor,
            monotone_slack: self.flow.monotone_slack,
            enforce_monotone: self.flow.enforce_monotone.unwrap_or(true),
            retain: self.flow.retain,
            apsp: self.flow.apsp,
        }
    }

    pub fn finsler_options(&self) -> FinslerOptions {
        FinslerOptions {
            both_signs: self.finsler.both_signs,
            divergence_factor: self.finsler.divergence_factor,
            growth: self.finsler.growth,
            lipschitz_scale: None,
        }
    }

    fn generators(&self) -> Result<GeneratorSet> {
        let g = self.group;
        Ok(match &self.generators {
            GeneratorSource::Explicit { elements } => {
                GeneratorSet::from_coords(g, elements).context("generators.elements")?
            }
            GeneratorSource::FromBasis { basis } => {
                let v = basis
                    .iter()
                    .map(|b| g.vector(b))
                    .collect::<hausflow::Result<Vec<_>>>()
                    .context("generators.basis")?;
                build_generator_from_basis(&v).context("generators.basis")?
            }
            GeneratorSource::TorusBoxComplement { lower, upper, mesh } => {
                let Group::Torus { dim } = g else {
                    bail!("generators.source = \"torus_box_complement\" needs a torus group");
                };
                torus_box_complement(dim, *lower, *upper, *mesh).context("generators")?
            }
        })
    }

    /// Validates the configuration and fills every defaulted value.
    pub fn resolve(mut self) -> Result<Experiment> {
        let g = self.group;
        let metric = BaseMetric::new(g, self.base_metric.clone()).context("base_metric")?;
        let raw_generators = self.generators()?;
        let d = g.dim();
        let w = &mut self.window;
        if w.resolution.len() != d {
            bail!(
                "window.resolution needs {d} entries, got {}",
                w.resolution.len()
            );
        }
        if g.is_periodic() {
            w.lower = Some(vec![0.0; d]);
            w.upper = Some(vec![1.0; d]);
            if w.padding.unwrap_or(0.0) != 0.0 {
                bail!("window.padding must be 0 on a torus");
            }
            w.padding = Some(0.0);
        } else {
            if w.lower.is_none() || w.upper.is_none() {
                bail!("window.lower and window.upper are required on {g}");
            }
            w.padding.get_or_insert(raw_generators.reach_radius());
        }
        let window = WindowSpec::new(
            w.lower.clone().unwrap(),
            w.upper.clone().unwrap(),
            w.resolution.clone(),
            w.padding.unwrap(),
        );
        window.validate(g).context("window")?;
        self.adjacency.validate().context("adjacency")?;
        let sampled = matches!(self.generators, GeneratorSource::TorusBoxComplement { .. });
        self.flow.enforce_monotone.get_or_insert(!sampled);
        if self.flow.tol.is_nan() || self.flow.tol <= 0.0 || self.flow.max_iter == 0 {
            bail!("flow.tol must be positive and flow.max_iter at least 1");
        }
        if self.flow.divergence_factor.is_nan() || self.flow.divergence_factor <= 1.0 {
            bail!("flow.divergence_factor must exceed 1");
        }
        let f = &mut self.finsler;
        if f.schedule_steps < 4 {
            bail!("finsler.schedule_steps must be at least 4");
        }
        f.schedule_scale.get_or_insert(window.scale());
        let bp = f.base_point.get_or_insert(vec![0.0; d]);
        if bp.len() != d {
            bail!("finsler.base_point needs {d} coordinates");
        }
        let dirs = f.directions.get_or_insert_with(|| {
            (0..d)
                .flat_map(|k| {
                    [1.0, -1.0, 2.0].map(|s| {
                        let mut v = vec![0.0; d];
                        v[k] = s;
                        v
                    })
                })
                .collect()
        });
        if dirs
            .iter()
            .any(|v| v.len() != d || v.iter().all(|x| *x == 0.0))
        {
            bail!("finsler.directions must be nonzero vectors with {d} components");
        }
        if self.semigroup.maxlens.is_empty() || self.semigroup.maxlens.contains(&0) {
            bail!("semigroup.maxlens must be a nonempty list of positive lengths");
        }
        if self.semigroup.probe_factor == 0 {
            bail!("semigroup.probe_factor must be positive");
        }
        Ok(Experiment {
            config: self,
            metric,
            raw_generators,
            window,
        })
    }
}

impl Experiment {
    pub fn base_point(&self) -> GroupElement {
        let c = self.config.finsler.base_point.as_ref().expect("resolved");
        self.config.group.element(c).expect("validated")
    }

    /// Whether `X` is a finite sample of a compact set.
    pub fn sampled_x(&self) -> bool {
        matches!(
            self.config.generators,
            GeneratorSource::TorusBoxComplement { .. }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ARCTAN: &str = r#"
        label = "arctan"
        group = { kind = "real", dim = 1 }
        base_metric = { kind = "arctan_pullback" }
        generators = { source = "explicit", elements = [[-1.0], [1.4142135623730951]] }
        window = { lower = [-2.0], upper = [2.0], resolution = [201] }
    "#;

    #[test]
    fn defaults_are_filled() {
        let e = ExperimentConfig::parse(ARCTAN).unwrap().resolve().unwrap();
        let c = &e.config;
        assert_eq!(c.window.padding, Some(std::f64::consts::SQRT_2));
        assert_eq!(c.adjacency.stencil_radius, 2);
        assert_eq!(c.flow.max_iter, 60);
        assert_eq!(c.finsler.schedule_scale, Some(4.0));
        assert_eq!(c.finsler.directions.as_ref().unwrap().len(), 3);
        assert_eq!(e.raw_generators.len(), 3);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = format!("{ARCTAN}\n[flow]\ntolerance = 1e-3\n");
        let err = format!("{:#}", ExperimentConfig::parse(&text).unwrap_err());
        assert!(err.contains("tolerance"), "{err}");
    }

    #[test]
    fn metric_group_mismatch_names_the_field() {
        let text = ARCTAN.replace("arctan_pullback", "chart_quotient");
        let err = format!(
            "{:#}",
            ExperimentConfig::parse(&text)
                .unwrap()
                .resolve()
                .err()
                .unwrap()
        );
        assert!(err.contains("base_metric"), "{err}");
    }

    #[test]
    fn torus_window_is_full_period() {
        let text = r#"
            group = { kind = "torus", dim = 1 }
            base_metric = { kind = "chart_quotient" }
            generators = { source = "explicit", elements = [[0.5]] }
            window = { resolution = [16] }
        "#;
        let e = ExperimentConfig::parse(text).unwrap().resolve().unwrap();
        assert_eq!(e.window.lower, vec![0.0]);
        assert_eq!(e.window.padding, 0.0);
    }

    #[test]
    fn shipped_configs_resolve() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            ExperimentConfig::load(&path)
                .and_then(ExperimentConfig::resolve)
                .unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            n += 1;
        }
        assert!(n >= 8);
    }

    #[test]
    fn reference_config_spells_out_the_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
        let c = ExperimentConfig::load(&path).unwrap();
        assert_eq!(c.adjacency, AdjacencySpec::default());
        assert_eq!(c.flow, FlowSection::default());
        assert_eq!(c.finsler, FinslerSection::default());
        assert_eq!(c.semigroup, SemigroupSection::default());
        assert_eq!(c.verify, VerifySection::default());
    }
}
