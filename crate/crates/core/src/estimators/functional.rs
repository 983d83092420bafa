use std::fmt;
use std::sync::Arc;

use super::{ErrorSlot, Estimate, McConfig, GRID_SUP_NOTE};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, MollifiedIndicator};
use crate::processes::{PathSampler, ProcessSpec};
use crate::rng::{purpose, PathStreams};
use crate::scalar::Real;
use crate::special::unit_sphere_area;
use crate::stats::reduce_paths;

/// A nonnegative function with bounded support, the initial datum of the
/// functional heat content `Q_f(t) = int E_x[inf_{s<=t} f(X_s)] dx`.
pub trait HeatField<T: Real>: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    /// Box containing the support.
    fn support_box(&self) -> (Vec<f64>, Vec<f64>);
    /// `int f`, when known exactly or by quadrature.
    fn integral(&self) -> Option<f64> {
        None
    }
    /// `int |grad f|` (total variation), when known.
    fn total_variation(&self) -> Option<f64> {
        None
    }
    fn describe(&self) -> String;
}

/// `1_Omega`.
#[derive(Clone, Debug)]
pub struct Indicator<T: Real>(pub DomainSpec<T>);

impl<T: Real> HeatField<T> for Indicator<T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[T]) -> T {
        if self.0.contains_unchecked(x) {
            T::one()
        } else {
            T::zero()
        }
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.0.bounds();
        (lo.iter().map(|v| v.as_f64()).collect(), hi.iter().map(|v| v.as_f64()).collect())
    }

    fn integral(&self) -> Option<f64> {
        Some(self.0.volume().value.as_f64())
    }

    fn total_variation(&self) -> Option<f64> {
        self.0.perimeter().ok().map(|p| p.value.as_f64())
    }

    fn describe(&self) -> String {
        format!("indicator({})", self.0.describe())
    }
}

/// `sum_i c_i 1_{Omega_i}` with `c_i > 0`.
#[derive(Clone, Debug)]
pub struct StepField<T: Real> {
    levels: Vec<(T, DomainSpec<T>)>,
}

impl<T: Real> StepField<T> {
    pub fn new(levels: Vec<(T, DomainSpec<T>)>) -> Result<Self> {
        let Some(first) = levels.first() else {
            return Err(Error::param("step field needs at least one level"));
        };
        let d = first.1.dim();
        if levels.iter().any(|(c, dom)| !(*c > T::zero()) || dom.dim() != d) {
            return Err(Error::param("step field weights must be positive with equal dimensions"));
        }
        Ok(Self { levels })
    }
}

impl<T: Real> HeatField<T> for StepField<T> {
    fn dim(&self) -> usize {
        self.levels[0].1.dim()
    }

    fn value(&self, x: &[T]) -> T {
        self.levels
            .iter()
            .filter(|(_, d)| d.contains_unchecked(x))
            .map(|(c, _)| *c)
            .fold(T::zero(), |a, b| a + b)
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for (_, dom) in &self.levels {
            let (a, b) = dom.bounds();
            for i in 0..d {
                lo[i] = lo[i].min(a[i].as_f64());
                hi[i] = hi[i].max(b[i].as_f64());
            }
        }
        (lo, hi)
    }

    fn integral(&self) -> Option<f64> {
        Some(self.levels.iter().map(|(c, d)| c.as_f64() * d.volume().value.as_f64()).sum())
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self.levels.iter().map(|(c, d)| format!("{c}*{}", d.describe())).collect();
        format!("step({})", parts.join(" + "))
    }
}

/// `f(x) = (1 - |x - c|^2 / R^2)^2` on the ball `B(c, R)`, zero outside.
#[derive(Clone, Debug, PartialEq)]
pub struct QuarticBump<T> {
    center: Vec<T>,
    radius: T,
}

impl<T: Real> QuarticBump<T> {
    pub fn new(center: Vec<T>, radius: T) -> Result<Self> {
        if center.is_empty() || !(radius > T::zero()) {
            return Err(Error::param("quartic bump needs d >= 1 and R > 0"));
        }
        Ok(Self { center, radius })
    }
}

impl<T: Real> HeatField<T> for QuarticBump<T> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[T]) -> T {
        let r2 = crate::scalar::dist(x, &self.center).powi(2) / (self.radius * self.radius);
        if r2 >= T::one() {
            T::zero()
        } else {
            (T::one() - r2).powi(2)
        }
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.radius.as_f64();
        (
            self.center.iter().map(|c| c.as_f64() - r).collect(),
            self.center.iter().map(|c| c.as_f64() + r).collect(),
        )
    }

    fn integral(&self) -> Option<f64> {
        let d = self.dim() as f64;
        let r = self.radius.as_f64();
        Some(unit_sphere_area(self.dim()) * r.powf(d) * (1.0 / d - 2.0 / (d + 2.0) + 1.0 / (d + 4.0)))
    }

    fn total_variation(&self) -> Option<f64> {
        let d = self.dim() as f64;
        Some(8.0 * self.radius.as_f64().powf(d - 1.0) * unit_sphere_area(self.dim()) / ((d + 1.0) * (d + 3.0)))
    }

    fn describe(&self) -> String {
        format!("quartic_bump(R={})", self.radius)
    }
}

impl<T: Real> HeatField<T> for MollifiedIndicator {
    fn dim(&self) -> usize {
        MollifiedIndicator::dim(self)
    }

    fn value(&self, x: &[T]) -> T {
        let mut y = [0.0f64; 2];
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi.as_f64();
        }
        T::lit(self.value_at(&y[..x.len()]))
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        MollifiedIndicator::support_box(self)
    }

    fn integral(&self) -> Option<f64> {
        Some(MollifiedIndicator::integral(self))
    }

    fn total_variation(&self) -> Option<f64> {
        Some(MollifiedIndicator::total_variation(self))
    }

    fn describe(&self) -> String {
        format!("mollified(eps={})", self.epsilon())
    }
}

/// A field sampled over an enlarged box, so that several fields can share
/// start points.
#[derive(Clone, Debug)]
pub struct WithSupport<T: Real> {
    pub field: Arc<dyn HeatField<T>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl<T: Real> HeatField<T> for WithSupport<T> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn value(&self, x: &[T]) -> T {
        self.field.value(x)
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower.clone(), self.upper.clone())
    }

    fn integral(&self) -> Option<f64> {
        self.field.integral()
    }

    fn total_variation(&self) -> Option<f64> {
        self.field.total_variation()
    }

    fn describe(&self) -> String {
        self.field.describe()
    }
}

/// Functional heat content and its deficit from one set of paths.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalEstimate {
    /// `Q_f(t)`.
    pub q: Estimate,
    /// `R_f(t) = int f - Q_f(t)`, estimated as the box average of
    /// `f(x) - min_k f(X_k)`.
    pub r: Estimate,
    /// Monte Carlo `int f` from the same start points.
    pub integral: Estimate,
}

/// Start points uniform in the support box; per path the grid minimum of `f`.
pub fn estimate_qf<T: Real>(
    process: &ProcessSpec<T>,
    field: &dyn HeatField<T>,
    t: T,
    cfg: &McConfig,
) -> Result<FunctionalEstimate> {
    cfg.validate()?;
    let d = field.dim();
    if process.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: process.dim(),
        });
    }
    let (lo, hi) = field.support_box();
    if lo.len() != d || lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
        return Err(Error::param("field has no valid support box"));
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let sampler = (t > T::zero())
        .then(|| PathSampler::new(process, t, cfg.n_steps, false))
        .transpose()?;
    let errors = ErrorSlot::default();
    let m = reduce_paths(0..cfg.n_paths, 3, |i, out| {
        let mut streams = PathStreams::new(cfg.seed, purpose::FUNCTIONAL, i as u64);
        let x: Vec<T> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| T::lit(a + (b - a) * streams.start.uniform()))
            .collect();
        let f0 = field.value(&x).as_f64();
        if f0 < 0.0 {
            errors.record(Error::param("field must be nonnegative"));
            return;
        }
        let mut fmin = f0;
        if let (Some(sampler), true) = (&sampler, f0 > 0.0) {
            let mut pos = x.clone();
            let walked = sampler.walk(&mut streams, |s| {
                for ((p, x0), dx) in pos.iter_mut().zip(&x).zip(s.disp) {
                    *p = *x0 + *dx;
                }
                fmin = fmin.min(field.value(&pos).as_f64());
                fmin > 0.0
            });
            if let Err(e) = walked {
                errors.record(e);
            }
        }
        out[0] = f0;
        out[1] = fmin;
        out[2] = f0 - fmin;
    });
    errors.finish()?;
    let est = |k: usize| Estimate::new(box_volume * m.mean(k), box_volume * m.stderr(k), cfg, GRID_SUP_NOTE);
    Ok(FunctionalEstimate {
        q: est(1),
        r: est(2),
        integral: est(0),
    })
}
