//! Experiment configuration: one JSON document per run.

use std::fs;
use std::path::{Path, PathBuf};

use manifold_levy::generator::QuadratureConfig;
use manifold_levy::geometry::json::manifold_from_json;
use manifold_levy::geometry::{ChartPoint, FramePoint, ManifoldSpec};
use manifold_levy::levy::{InvarianceConfig, LevyTriplet};
use manifold_levy::lift::{LiftConfig, SectionSpec};
use manifold_levy::manifolds::{build, lie_group, HolonomySpec};
use manifold_levy::marcus::{MarcusConfig, SimulationConfig};
use manifold_levy::Matrix;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub manifold: String,
    #[serde(default)]
    pub triplet: Option<TripletSource>,
    #[serde(default = "defaults::horizon")]
    pub horizon: f64,
    #[serde(default = "defaults::grid_step")]
    pub grid_step: f64,
    #[serde(default)]
    pub marcus: MarcusConfig,
    #[serde(default = "defaults::n_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub start: Option<StartSpec>,
    #[serde(default)]
    pub override_invariance: bool,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub holonomy: HolonomyBlock,
    #[serde(default)]
    pub roundtrip: RoundtripBlock,
    #[serde(default)]
    pub generator_test: GeneratorBlock,
    #[serde(default)]
    pub invariance: InvarianceBlock,
}

mod defaults {
    pub fn horizon() -> f64 {
        1.0
    }
    pub fn grid_step() -> f64 {
        0.01
    }
    pub fn n_paths() -> usize {
        1
    }
    pub fn yes() -> bool {
        true
    }
    pub fn transport_tolerance() -> f64 {
        1e-6
    }
    pub fn roundtrip_tolerance() -> f64 {
        1e-3
    }
    pub fn section() -> String {
        "builtin".into()
    }
    pub fn t() -> Vec<f64> {
        vec![0.04, 0.02, 0.01]
    }
}

/// Inline triplet document or a path to one.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum TripletSource {
    File(String),
    Inline(LevyTriplet<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    #[serde(default)]
    pub chart: usize,
    pub x: Option<Vec<f64>>,
    pub r: Option<Matrix<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write path files (JSONL, plus CSV with `--csv`).
    #[serde(default = "defaults::yes")]
    pub paths: bool,
    /// Report file name inside the output directory.
    pub report: Option<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { paths: true, report: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    #[default]
    Generators,
    Wraps,
    OctantTriangle,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolonomyBlock {
    pub base: Option<StartSpec>,
    #[serde(default)]
    pub loops: LoopKind,
    pub n_loops: Option<usize>,
    #[serde(default = "defaults::transport_tolerance")]
    pub tolerance: f64,
}

impl Default for HolonomyBlock {
    fn default() -> Self {
        Self {
            base: None,
            loops: LoopKind::default(),
            n_loops: None,
            tolerance: defaults::transport_tolerance(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundtripBlock {
    /// "builtin" or "identity".
    #[serde(default = "defaults::section")]
    pub section: String,
    #[serde(default = "defaults::roundtrip_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub lift: LiftConfig,
}

impl Default for RoundtripBlock {
    fn default() -> Self {
        Self {
            section: defaults::section(),
            tolerance: defaults::roundtrip_tolerance(),
            lift: LiftConfig::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Times {
    One(f64),
    Many(Vec<f64>),
}

impl Default for Times {
    fn default() -> Self {
        Times::Many(defaults::t())
    }
}

impl Times {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Times::One(t) => vec![*t],
            Times::Many(ts) => ts.clone(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorBlock {
    pub test_function: Option<String>,
    #[serde(default)]
    pub t: Times,
    pub n_paths: Option<usize>,
    /// Grid step `t / grid_fraction` per `t`; the top-level step otherwise.
    pub grid_fraction: Option<usize>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvarianceBlock {
    /// Group elements to check; the declared holonomy generators by default.
    pub group: Option<Vec<Matrix<f64>>>,
    pub n_mc: usize,
    pub tol: f64,
    pub level: f64,
    pub n_permutations: usize,
    pub max_energy_samples: usize,
}

impl Default for InvarianceBlock {
    fn default() -> Self {
        let c = InvarianceConfig::default();
        Self {
            group: None,
            n_mc: c.n_mc,
            tol: c.tol,
            level: c.level,
            n_permutations: c.n_permutations,
            max_energy_samples: c.max_energy_samples,
        }
    }
}

/// Validated configuration with the manifold and triplet resolved.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub manifold: ManifoldSpec<f64>,
    pub holonomy: Option<HolonomySpec<f64>>,
    pub triplet: Option<LevyTriplet<f64>>,
}

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

impl Experiment {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, dir, seed_override)
    }

    pub fn parse(text: &str, dir: PathBuf, seed_override: Option<u64>) -> Result<Self, CliError> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(config_err)?;
        let seed = seed_override
            .or(config.seed)
            .ok_or_else(|| config_err("seed is mandatory"))?;
        if !(config.horizon > 0.0) || !(config.grid_step > 0.0) || config.n_paths == 0 {
            return Err(config_err("horizon, grid_step and n_paths must be positive"));
        }
        config.marcus.validate().map_err(config_err)?;
        let (manifold, holonomy) = match config.manifold.strip_prefix("file:") {
            Some(file) => {
                let p = dir.join(file);
                let text = fs::read_to_string(&p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
                (manifold_from_json::<f64>(&text).map_err(config_err)?, None)
            }
            None => {
                let (m, h) = build::<f64>(&config.manifold).map_err(config_err)?;
                (m, Some(h))
            }
        };
        let triplet = match &config.triplet {
            None => None,
            Some(TripletSource::Inline(t)) => Some(t.clone()),
            Some(TripletSource::File(f)) => {
                let p = dir.join(f);
                let text = fs::read_to_string(&p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
                Some(serde_json::from_str(&text).map_err(config_err)?)
            }
        };
        if let Some(t) = &triplet {
            if t.dim() != manifold.dim {
                return Err(config_err(format!(
                    "triplet has dimension {} but {} has dimension {}",
                    t.dim(),
                    manifold.name,
                    manifold.dim
                )));
            }
        }
        Ok(Self {
            config,
            seed,
            manifold,
            holonomy,
            triplet,
        })
    }

    pub fn triplet(&self) -> Result<&LevyTriplet<f64>, CliError> {
        self.triplet.as_ref().ok_or_else(|| config_err("this subcommand needs a triplet"))
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        let inv = &self.config.invariance;
        SimulationConfig {
            grid_step: self.config.grid_step,
            marcus: self.config.marcus.clone(),
            override_invariance: self.config.override_invariance,
            invariance: InvarianceConfig {
                n_mc: inv.n_mc,
                tol: inv.tol,
                level: inv.level,
                n_permutations: inv.n_permutations,
                max_energy_samples: inv.max_energy_samples,
                seed: self.seed,
            },
        }
    }

    fn point(&self, spec: Option<&StartSpec>) -> Result<ChartPoint<f64>, CliError> {
        let chart = spec.map_or(0, |s| s.chart);
        let c = self.manifold.chart(chart).map_err(config_err)?;
        let x = spec
            .and_then(|s| s.x.clone())
            .unwrap_or_else(|| c.safe_region.center.clone());
        if x.len() != self.manifold.dim || !c.safe_region.contains(&x) {
            return Err(config_err(format!("start point {x:?} is not inside chart {chart}")));
        }
        Ok(ChartPoint::new(chart, x))
    }

    /// Start frame: explicit, else the left-invariant frame on Lie groups and
    /// the built-in section elsewhere.
    pub fn start_frame(&self) -> Result<FramePoint<f64>, CliError> {
        let spec = self.config.start.as_ref();
        let p = self.point(spec)?;
        let r = match spec.and_then(|s| s.r.clone()) {
            Some(r) => r,
            None => match self.config.manifold.strip_prefix("lie:") {
                Some(g) => lie_group::<f64>(g).map_err(config_err)?.left_invariant_frame(&p).r,
                None => SectionSpec::builtin(&self.manifold).at(&self.manifold, &p).map_err(config_err)?,
            },
        };
        let u = FramePoint::new(p.chart, p.x, r);
        u.validate(&self.manifold).map_err(config_err)?;
        Ok(u)
    }

    pub fn holonomy_base(&self) -> Result<ChartPoint<f64>, CliError> {
        self.point(self.config.holonomy.base.as_ref())
    }

    pub fn section(&self) -> Result<SectionSpec<f64>, CliError> {
        match self.config.roundtrip.section.as_str() {
            "builtin" => Ok(SectionSpec::builtin(&self.manifold)),
            "identity" => Ok(SectionSpec::identity(&self.manifold)),
            other => Err(config_err(format!("unknown section '{other}'"))),
        }
    }

    pub fn report_name(&self, default: &str) -> String {
        self.config.outputs.report.clone().unwrap_or_else(|| default.to_string())
    }
}
