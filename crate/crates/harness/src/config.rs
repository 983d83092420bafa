//! Experiment and suite configuration files (TOML, unknown keys rejected).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use shc_core::asymptotics::NormalizerKind;
use shc_core::estimators::{HeatField, Indicator, McConfig, QuarticBump, ShellWidth};
use shc_core::geometry::{rotation_2d, DistortedBall, DomainSpec};
use shc_core::processes::{BrownianScale, ClockSpec, JumpLaw, ProcessFamily, ProcessSpec, SubordinatorSpec};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub process: ProcessConfig,
    pub domain: DomainConfig,
    /// When present the experiment tabulates the functional deficit `R_f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalConfig>,
    pub t_ladder: Vec<f64>,
    pub normalizer: NormalizerConfig,
    pub mc: McSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<AcceptanceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_s: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessConfig {
    Brownian {
        dim: usize,
        #[serde(default)]
        scale: ScaleConfig,
    },
    Stable {
        dim: usize,
        alpha: f64,
    },
    Fbm {
        dim: usize,
        hurst: f64,
    },
    TimeChanged {
        dim: usize,
        alpha: f64,
        clock: ClockConfig,
    },
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ScaleConfig {
    /// Per-coordinate variance `2t`.
    #[default]
    HeatKernel,
    /// Per-coordinate variance `t`.
    Standard,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClockConfig {
    InverseSubordinator { subordinator: SubordinatorConfig },
    LampertiInverse { subordinator: SubordinatorConfig, beta: f64, x0: f64 },
    Power { beta: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubordinatorConfig {
    Stable { beta: f64 },
    TemperedStable { beta: f64, theta: f64 },
    DriftCompoundPoisson { drift: f64, rate: f64, jump: JumpConfig },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpConfig {
    Exponential { mean: f64 },
    Uniform { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
        /// Row-major orthogonal matrix; identity when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<f64>>,
        /// Planar rotation angle in degrees (alternative to `rotation`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle_deg: Option<f64>,
    },
    Interval {
        lo: f64,
        hi: f64,
    },
    /// A shipped level-set field referenced by name, e.g.
    /// `clamped_ball(R=1, r=0.2)` or `distorted_ball(amplitude=0.1, kappa=0.5, x0=[1,0])`.
    LevelSet {
        field: String,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    /// `(1 - |x - c|^2 / R^2)^2` on `B(c, R)`.
    QuarticBump { center: Vec<f64>, radius: f64 },
    /// The indicator of the experiment domain.
    Indicator,
    /// The gridded mollified indicator of the experiment domain.
    Mollified { eps: f64, grid_h: f64 },
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerConfig {
    EstimatedMu,
    ReferenceMu,
    EstimatedM,
    ClockScale,
}

impl From<NormalizerConfig> for NormalizerKind {
    fn from(n: NormalizerConfig) -> Self {
        match n {
            NormalizerConfig::EstimatedMu => NormalizerKind::EstimatedMu,
            NormalizerConfig::ReferenceMu => NormalizerKind::ReferenceMu,
            NormalizerConfig::EstimatedM => NormalizerKind::EstimatedM,
            NormalizerConfig::ClockScale => NormalizerKind::ClockScale,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    #[serde(default = "yes")]
    pub stratified: bool,
    #[serde(default = "yes")]
    pub bridge_correction: bool,
    /// Fixed boundary-shell width; `8 mu` from a pilot run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_width: Option<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceMode {
    /// The extrapolated limit lies within `tolerance` of the prediction.
    Extrapolated,
    /// The smallest-`t` ratio lies within `tolerance` of the prediction.
    SmallestT,
    /// Every ratio lies in `[band[0] Per, band[1] (sup|grad phi| / inf|grad phi|) Per]`.
    Band,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum ThetaConfig {
    Named(String),
    Value(f64),
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceConfig {
    pub mode: AcceptanceMode,
    /// Relative tolerance for `extrapolated` and `smallest_t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Overrides the predicted limit from theory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<f64>,
    /// `"default"`, `"free"` or a number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaConfig>,
    /// Also require the ladder to approach the prediction monotonically.
    #[serde(default)]
    pub monotone: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
}

/// Fully built objects of a validated experiment.
pub struct Built {
    pub process: ProcessSpec<f64>,
    pub domain: DomainSpec<f64>,
    pub field: Option<Arc<dyn HeatField<f64>>>,
    pub mc: McConfig,
}

fn cfg_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(cfg_err("name must be nonempty"));
        }
        if self.t_ladder.is_empty() {
            return Err(cfg_err("t_ladder must be nonempty"));
        }
        if self.t_ladder.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(cfg_err("t_ladder entries must be positive and finite"));
        }
        if self.t_ladder.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(cfg_err("t_ladder must be strictly decreasing"));
        }
        let cauchy = matches!(self.process, ProcessConfig::Stable { alpha, .. } if alpha == 1.0);
        if cauchy && self.normalizer == NormalizerConfig::ReferenceMu && self.t_ladder[0] >= 1.0 {
            return Err(cfg_err("the Cauchy reference normalizer needs every t < 1"));
        }
        if let Some(a) = &self.acceptance {
            match a.mode {
                AcceptanceMode::Extrapolated | AcceptanceMode::SmallestT => {
                    if !a.tolerance.is_some_and(|t| t > 0.0) {
                        return Err(cfg_err("acceptance needs a positive tolerance"));
                    }
                }
                AcceptanceMode::Band => {
                    if !a.band.is_some_and(|[lo, hi]| lo > 0.0 && hi >= lo) {
                        return Err(cfg_err("band acceptance needs band = [lo, hi] with 0 < lo <= hi"));
                    }
                }
            }
            if let Some(ThetaConfig::Named(s)) = &a.theta {
                if s != "default" && s != "free" {
                    return Err(cfg_err(format!("theta must be \"default\", \"free\" or a number, got {s:?}")));
                }
            }
        }
        self.build()?;
        Ok(())
    }

    pub fn build(&self) -> Result<Built> {
        let process = self.process.build()?;
        let domain = self.domain.build()?;
        if process.dim() != domain.dim() {
            return Err(cfg_err(format!(
                "process dimension {} differs from domain dimension {}",
                process.dim(),
                domain.dim()
            )));
        }
        let field: Option<Arc<dyn HeatField<f64>>> = match &self.functional {
            None => None,
            Some(FunctionalConfig::QuarticBump { center, radius }) => {
                if center.len() != domain.dim() {
                    return Err(cfg_err("functional center dimension differs from the domain"));
                }
                Some(Arc::new(QuarticBump::new(center.clone(), *radius).map_err(config)?))
            }
            Some(FunctionalConfig::Indicator) => Some(Arc::new(Indicator(domain.clone()))),
            Some(FunctionalConfig::Mollified { eps, grid_h }) => {
                Some(Arc::new(domain.mollify(*eps, *grid_h).map_err(config)?))
            }
        };
        if self.functional.is_some() && self.normalizer == NormalizerConfig::ClockScale {
            return Err(cfg_err("functional experiments take mu-type normalizers"));
        }
        let mut mc = McConfig::new(self.mc.n_paths, self.mc.n_steps, self.mc.seed).map_err(config)?;
        mc.stratified = self.mc.stratified;
        mc.bridge_correction = self.mc.bridge_correction;
        if let Some(w) = self.mc.shell_width {
            mc.shell_width = ShellWidth::Fixed(w);
        }
        mc.validate().map_err(config)?;
        Ok(Built {
            process,
            domain,
            field,
            mc,
        })
    }
}

fn config(e: shc_core::Error) -> HarnessError {
    HarnessError::Config(e.to_string())
}

impl SubordinatorConfig {
    fn build(&self) -> SubordinatorSpec<f64> {
        match self {
            SubordinatorConfig::Stable { beta } => SubordinatorSpec::Stable { beta: *beta },
            SubordinatorConfig::TemperedStable { beta, theta } => SubordinatorSpec::TemperedStable {
                beta: *beta,
                theta: *theta,
            },
            SubordinatorConfig::DriftCompoundPoisson { drift, rate, jump } => SubordinatorSpec::DriftCompoundPoisson {
                drift: *drift,
                rate: *rate,
                jump: match jump {
                    JumpConfig::Exponential { mean } => JumpLaw::Exponential { mean: *mean },
                    JumpConfig::Uniform { lo, hi } => JumpLaw::Uniform { lo: *lo, hi: *hi },
                },
            },
        }
    }
}

impl ProcessConfig {
    pub fn build(&self) -> Result<ProcessSpec<f64>> {
        let r = match self {
            ProcessConfig::Brownian { dim, scale } => match scale {
                ScaleConfig::HeatKernel => ProcessSpec::brownian(*dim),
                ScaleConfig::Standard => ProcessSpec::new(
                    ProcessFamily::Brownian {
                        scale: BrownianScale::Standard,
                    },
                    *dim,
                ),
            },
            ProcessConfig::Stable { dim, alpha } => ProcessSpec::stable(*alpha, *dim),
            ProcessConfig::Fbm { dim, hurst } => ProcessSpec::fbm(*hurst, *dim),
            ProcessConfig::TimeChanged { dim, alpha, clock } => {
                let clock = match clock {
                    ClockConfig::InverseSubordinator { subordinator } => {
                        ClockSpec::InverseSubordinator(subordinator.build())
                    }
                    ClockConfig::LampertiInverse { subordinator, beta, x0 } => ClockSpec::LampertiInverse {
                        sub: subordinator.build(),
                        beta: *beta,
                        x0: *x0,
                    },
                    ClockConfig::Power { beta } => ClockSpec::DeterministicPower { beta: *beta },
                };
                ProcessSpec::time_changed(*alpha, clock, *dim)
            }
        };
        r.map_err(config)
    }
}

impl DomainConfig {
    pub fn build(&self) -> Result<DomainSpec<f64>> {
        let r = match self {
            DomainConfig::Ball { center, radius } => DomainSpec::ball(center.clone(), *radius),
            DomainConfig::Annulus { center, inner, outer } => DomainSpec::annulus(center.clone(), *inner, *outer),
            DomainConfig::Ellipsoid {
                center,
                semi_axes,
                rotation,
                angle_deg,
            } => {
                let rot = match (rotation, angle_deg) {
                    (Some(_), Some(_)) => return Err(cfg_err("give rotation or angle_deg, not both")),
                    (Some(r), None) => Some(r.clone()),
                    (None, Some(a)) if center.len() == 2 => Some(rotation_2d(a.to_radians())),
                    (None, Some(_)) => return Err(cfg_err("angle_deg applies to planar ellipses only")),
                    (None, None) => None,
                };
                DomainSpec::ellipsoid(center.clone(), semi_axes.clone(), rot)
            }
            DomainConfig::Interval { lo, hi } => DomainSpec::interval(*lo, *hi),
            DomainConfig::LevelSet { field } => return named_level_set(field),
        };
        r.map_err(config)
    }
}

/// Parsed `name(key=value, ...)`; values are numbers or `[a, b, ...]`.
struct Call {
    name: String,
    args: Vec<(String, Vec<f64>)>,
}

fn parse_call(text: &str) -> Result<Call> {
    let bad = || cfg_err(format!("malformed field reference {text:?}; expected name(key=value, ...)"));
    let text = text.trim();
    let open = text.find('(').ok_or_else(bad)?;
    if !text.ends_with(')') {
        return Err(bad());
    }
    let name = text[..open].trim().to_string();
    let body = &text[open + 1..text.len() - 1];
    let mut args = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    let mut pieces = Vec::new();
    for (i, c) in body.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                pieces.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    pieces.push(&body[start..]);
    for p in pieces.into_iter().map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = p.split_once('=').ok_or_else(bad)?;
        let v = v.trim();
        let nums: std::result::Result<Vec<f64>, _> = if let Some(inner) = v.strip_prefix('[') {
            inner
                .strip_suffix(']')
                .ok_or_else(bad)?
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect()
        } else {
            v.parse::<f64>().map(|x| vec![x])
        };
        args.push((k.trim().to_string(), nums.map_err(|_| bad())?));
    }
    Ok(Call { name, args })
}

impl Call {
    fn take(&mut self, key: &str) -> Option<Vec<f64>> {
        let i = self.args.iter().position(|(k, _)| k == key)?;
        Some(self.args.remove(i).1)
    }

    fn scalar(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take(key) {
            Some(v) if v.len() == 1 => Ok(v[0]),
            Some(_) => Err(cfg_err(format!("{}: {key} must be a number", self.name))),
            None => default.ok_or_else(|| cfg_err(format!("{}: missing {key}", self.name))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.args.first() {
            Some((k, _)) => Err(cfg_err(format!("{}: unknown parameter {k}", self.name))),
            None => Ok(()),
        }
    }
}

/// Names of the shipped level-set fields, with their parameters.
pub const LEVEL_SET_FIELDS: &[&str] = &[
    "clamped_ball(R=1, r=0.2, d=2): clamped signed distance of the ball of radius R",
    "distorted_ball(amplitude=0.1, kappa=0.5, x0=[1,0]): 1 - |x|^2 - amplitude |x - x0|^(1+kappa)",
];

pub fn named_level_set(text: &str) -> Result<DomainSpec<f64>> {
    let mut call = parse_call(text)?;
    let domain = match call.name.as_str() {
        "clamped_ball" => {
            let radius = call.scalar("R", Some(1.0))?;
            let r = call.scalar("r", None)?;
            let d = call.scalar("d", Some(2.0))?;
            if d.fract() != 0.0 || !(1.0..=3.0).contains(&d) {
                return Err(cfg_err("clamped_ball: d must be 1, 2 or 3"));
            }
            let ball = DomainSpec::ball(vec![0.0; d as usize], radius).map_err(config)?;
            let field = ball.clamped_level_set(r, 0.0).map_err(config)?;
            DomainSpec::level_set(field)
        }
        "distorted_ball" => {
            let a = call.scalar("amplitude", None)?;
            let k = call.scalar("kappa", None)?;
            let x0 = call.take("x0").ok_or_else(|| cfg_err("distorted_ball: missing x0"))?;
            let field = DistortedBall::new(a, k, x0).and_then(|b| b.into_level_set()).map_err(config)?;
            DomainSpec::level_set(field)
        }
        other => return Err(cfg_err(format!("unknown level-set field {other:?}"))),
    };
    call.finish()?;
    domain.map_err(config)
}

/// A suite of named entries with a total budget.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub name: String,
    pub budget_s: f64,
    /// Constants cache, relative to the suite file.
    pub constants: PathBuf,
    #[serde(default)]
    pub entry: Vec<SuiteEntry>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SuiteEntry {
    /// A t-ladder experiment from a config file (relative to the suite file).
    Ladder {
        id: String,
        config: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// Empirical `E[E_t^q]` of inverse stable subordinators against the closed form.
    InverseStableMoments {
        id: String,
        betas: Vec<f64>,
        qs: Vec<f64>,
        ts: Vec<f64>,
        n_paths: usize,
        /// Subordinator grid step.
        step: f64,
        tolerance: f64,
        seed: u64,
    },
    /// The property checks with fixed sizes, scaled by `scale`.
    PropertySuite {
        id: String,
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl SuiteEntry {
    pub fn id(&self) -> &str {
        match self {
            SuiteEntry::Ladder { id, .. }
            | SuiteEntry::InverseStableMoments { id, .. }
            | SuiteEntry::PropertySuite { id, .. } => id,
        }
    }
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let suite: Self = toml::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        if suite.entry.is_empty() {
            return Err(cfg_err(format!("{}: suite has no entries", path.display())));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &suite.entry {
            if !seen.insert(e.id().to_string()) {
                return Err(cfg_err(format!("duplicate suite entry {}", e.id())));
            }
        }
        Ok(suite)
    }
}
