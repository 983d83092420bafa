//! Monte Carlo estimators of heat content, suprema and functional heat content.
//!
//! Every estimator draws path `i` from the streams keyed by
//! `(seed, purpose, i)`, and accumulates with [`crate::stats::reduce_paths`],
//! so estimates are bit-identical for any thread count and two estimators
//! with the same seed and purpose see the same paths (common random numbers).

mod functional;
mod heat;
mod sup;

pub use functional::{
    estimate_qf, FunctionalEstimate, HeatField, Indicator, QuarticBump, StepField, WithSupport,
};
pub use heat::{estimate_deficit, estimate_deficit_ladder, estimate_q, DeficitEstimate, StartSampling};
pub use sup::{
    assumption1_diagnostic, estimate_m, estimate_mu, estimate_sup_moment, estimate_tail,
    Assumption1Table,
};

use std::sync::Mutex;

use crate::error::{Error, Result};

/// Shell width for boundary stratification.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ShellWidth {
    /// `8 mu(t)` from a pilot run of `n_paths / 100` paths.
    #[default]
    Auto,
    Fixed(f64),
}

/// Monte Carlo controls shared by all estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub shell_width: ShellWidth,
    pub stratified: bool,
    /// Brownian bridge corrections for Gaussian Markov families; ignored
    /// for the others.
    pub bridge_correction: bool,
    /// Sample start points uniformly in this box instead of the domain, so
    /// that estimates on nested domains are pathwise coupled.
    pub common_box: Option<(Vec<f64>, Vec<f64>)>,
}

pub const MIN_PATHS: usize = 100;
pub const MIN_STEPS: usize = 8;
/// Shell width in units of the pilot `mu` when [`ShellWidth::Auto`].
pub const AUTO_SHELL_FACTOR: f64 = 8.0;

impl McConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            n_paths,
            n_steps,
            seed,
            shell_width: ShellWidth::Auto,
            stratified: true,
            bridge_correction: true,
            common_box: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return Err(Error::param(format!("n_paths = {} below {MIN_PATHS}", self.n_paths)));
        }
        if self.n_steps < MIN_STEPS {
            return Err(Error::param(format!("n_steps = {} below {MIN_STEPS}", self.n_steps)));
        }
        if let ShellWidth::Fixed(w) = self.shell_width {
            if !(w > 0.0) {
                return Err(Error::param("shell width must be positive"));
            }
        }
        if let Some((lo, hi)) = &self.common_box {
            if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                return Err(Error::param("common box must have lower < upper"));
            }
        }
        Ok(())
    }

    pub fn with_paths(&self, n_paths: usize) -> Self {
        Self {
            n_paths,
            ..self.clone()
        }
    }

    pub fn with_steps(&self, n_steps: usize) -> Self {
        Self {
            n_steps,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// Discretization caveats, e.g. the one-sidedness of grid suprema.
    pub bias_note: String,
}

impl Estimate {
    pub(crate) fn new(value: f64, stderr: f64, cfg: &McConfig, bias_note: impl Into<String>) -> Self {
        Self {
            value,
            stderr: stderr.max(0.0),
            n_paths: cfg.n_paths,
            n_steps: cfg.n_steps,
            seed: cfg.seed,
            bias_note: bias_note.into(),
        }
    }

    /// Exact value with zero error.
    pub(crate) fn exact(value: f64, cfg: &McConfig, note: &str) -> Self {
        Self::new(value, 0.0, cfg, note)
    }

    /// Whether `|self - other|` is within `k` joint standard errors.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.stderr.hypot(other.stderr)
    }
}

pub(crate) const GRID_NOTE: &str = "grid skeleton: exits between grid points are missed, survival is overestimated";
pub(crate) const GRID_SUP_NOTE: &str = "grid supremum: biased low, one-sided";
pub(crate) const BRIDGE_NOTE: &str = "Brownian bridge corrected";

/// First error raised inside a parallel reduction.
#[derive(Default)]
pub(crate) struct ErrorSlot(Mutex<Option<Error>>);

impl ErrorSlot {
    pub fn record(&self, e: Error) {
        let mut slot = self.0.lock().unwrap();
        if slot.is_none() {
            *slot = Some(e);
        }
    }

    pub fn finish(self) -> Result<()> {
        match self.0.into_inner().unwrap() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}
