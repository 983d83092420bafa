use std::sync::Arc;

use super::clock::sample_clock;
use super::stable::{subordinated_increment, symmetric_stable};
use super::{ClockSpec, FbmPlan, PathGrid, ProcessFamily, ProcessSpec};
use crate::error::{Error, Result};
use crate::rng::{PathStreams, RngStream};
use crate::scalar::Real;

/// One visited grid point of a streamed path.
#[derive(Debug)]
pub struct Step<'a, T> {
    pub time: T,
    /// Displacement `X_time - X_0`.
    pub disp: &'a [T],
    /// Exact maximum of coordinate 1 (as a displacement) over the step just
    /// completed, when bridge correction is active.
    pub bridge_max: Option<T>,
}

#[derive(Clone, Debug)]
enum Engine {
    Gaussian { sd: f64 },
    Stable { alpha: f64, scale: f64 },
    Fbm(Arc<FbmPlan>),
    TimeChanged { alpha: f64, clock: ClockSpec<f64> },
}

/// Streams skeletons of one process on the uniform grid of `[0, horizon]`.
///
/// Draws are keyed by the caller's [`PathStreams`], so a path is a pure
/// function of its streams. Increments use the `increments` stream and
/// clocks the `clock` stream.
#[derive(Clone, Debug)]
pub struct PathSampler<T> {
    spec: ProcessSpec<T>,
    horizon: T,
    n_steps: usize,
    bridge: bool,
    dt: f64,
    engine: Engine,
}

impl<T: Real> PathSampler<T> {
    pub fn new(spec: &ProcessSpec<T>, horizon: T, n_steps: usize, bridge: bool) -> Result<Self> {
        spec.validate()?;
        if !(horizon > T::zero()) {
            return Err(Error::param("horizon must be positive"));
        }
        if n_steps == 0 {
            return Err(Error::param("n_steps must be at least 1"));
        }
        let dt = horizon.as_f64() / n_steps as f64;
        let gaussian = spec.gaussian_variance_rate();
        if bridge && gaussian.is_none() {
            return Err(Error::Unsupported(format!(
                "bridge correction needs a Brownian family, got {}",
                spec.name()
            )));
        }
        let engine = match (spec.family(), gaussian) {
            (_, Some(rate)) => Engine::Gaussian {
                sd: (rate * dt).sqrt(),
            },
            (ProcessFamily::IsotropicStable { alpha }, None) => Engine::Stable {
                alpha: alpha.as_f64(),
                scale: dt.powf(1.0 / alpha.as_f64()),
            },
            (ProcessFamily::FractionalBrownian { hurst }, None) => {
                Engine::Fbm(Arc::new(FbmPlan::new(hurst.as_f64(), dt, n_steps)?))
            }
            (ProcessFamily::TimeChanged { alpha, clock }, None) => Engine::TimeChanged {
                alpha: alpha.as_f64(),
                clock: clock.to_f64(),
            },
            (ProcessFamily::Brownian { .. }, None) => unreachable!("Brownian is Gaussian"),
        };
        Ok(Self {
            spec: spec.clone(),
            horizon,
            n_steps,
            bridge,
            dt,
            engine,
        })
    }

    pub fn spec(&self) -> &ProcessSpec<T> {
        &self.spec
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step_dt(&self) -> f64 {
        self.dt
    }

    pub fn bridge(&self) -> bool {
        self.bridge
    }

    /// Per-coordinate variance per unit time for Gaussian Markov families.
    pub fn gaussian_variance_rate(&self) -> Option<f64> {
        self.spec.gaussian_variance_rate()
    }

    /// Variance of one coordinate increment over one step, when Gaussian.
    pub fn step_variance(&self) -> Option<f64> {
        match self.engine {
            Engine::Gaussian { sd } => Some(sd * sd),
            _ => None,
        }
    }

    /// Generate one path, calling `visit` at every grid point after time 0.
    /// Stops early when `visit` returns false.
    pub fn walk<F>(&self, streams: &mut PathStreams, mut visit: F) -> Result<()>
    where
        F: FnMut(&Step<'_, T>) -> bool,
    {
        let d = self.spec.dim();
        let mut disp = vec![T::zero(); d];
        let n = self.n_steps;
        let time = |k: usize| T::lit(self.horizon.as_f64() * k as f64 / n as f64);
        let rng = &mut streams.increments;
        match &self.engine {
            Engine::Gaussian { sd } => {
                let var = sd * sd;
                for k in 1..=n {
                    let a = disp[0].as_f64();
                    for x in disp.iter_mut() {
                        *x += T::lit(sd * rng.normal());
                    }
                    let bridge_max = self.bridge.then(|| {
                        let b = disp[0].as_f64();
                        let u = rng.uniform();
                        T::lit(0.5 * (a + b + ((b - a).powi(2) - 2.0 * var * u.ln()).sqrt()))
                    });
                    let step = Step {
                        time: time(k),
                        disp: &disp,
                        bridge_max,
                    };
                    if !visit(&step) {
                        break;
                    }
                }
            }
            Engine::Stable { alpha, scale } => {
                let mut inc = vec![T::zero(); d];
                for k in 1..=n {
                    stable_step(*alpha, *scale, self.dt, &mut inc, rng);
                    for (x, i) in disp.iter_mut().zip(&inc) {
                        *x += *i;
                    }
                    let step = Step {
                        time: time(k),
                        disp: &disp,
                        bridge_max: None,
                    };
                    if !visit(&step) {
                        break;
                    }
                }
            }
            Engine::Fbm(plan) => {
                let mut incs = vec![0.0; d.div_ceil(2) * 2 * n];
                for pair in incs.chunks_mut(2 * n) {
                    let (a, b) = pair.split_at_mut(n);
                    plan.sample_pair(rng, a, b);
                }
                for k in 1..=n {
                    for (i, x) in disp.iter_mut().enumerate() {
                        *x += T::lit(incs[i * n + k - 1]);
                    }
                    let step = Step {
                        time: time(k),
                        disp: &disp,
                        bridge_max: None,
                    };
                    if !visit(&step) {
                        break;
                    }
                }
            }
            Engine::TimeChanged { alpha, clock } => {
                let path = sample_clock(clock, self.horizon.as_f64(), n, &mut streams.clock)?;
                let total = path.final_value();
                let h_inner = total / n as f64;
                let mut inc = vec![T::zero(); d];
                for k in 1..=n {
                    let du = path.values[k] - path.values[k - 1];
                    let (t0, t1) = (self.horizon.as_f64() * (k - 1) as f64 / n as f64, time(k).as_f64());
                    // Continuous clocks are refined so that inner steps never
                    // exceed U_t / n; flat spots reuse the current position.
                    let m = if du <= 0.0 {
                        1
                    } else if path.continuous {
                        ((du / h_inner).ceil() as usize).max(1)
                    } else {
                        1
                    };
                    let mut stop = false;
                    for j in 1..=m {
                        if du > 0.0 {
                            let tau = du / m as f64;
                            stable_step(*alpha, tau.powf(1.0 / alpha), tau, &mut inc, rng);
                            for (x, i) in disp.iter_mut().zip(&inc) {
                                *x += *i;
                            }
                        }
                        let t = if j == m { time(k) } else { T::lit(t0 + (t1 - t0) * j as f64 / m as f64) };
                        let step = Step {
                            time: t,
                            disp: &disp,
                            bridge_max: None,
                        };
                        if !visit(&step) {
                            stop = true;
                            break;
                        }
                    }
                    if stop {
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    /// Materialize one path started at `start`.
    pub fn sample_path(&self, start: &[T], streams: &mut PathStreams) -> Result<PathGrid<T>> {
        if start.len() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                got: start.len(),
            });
        }
        let mut path = PathGrid::with_capacity(start, self.n_steps + 1);
        let mut pos = start.to_vec();
        self.walk(streams, |s| {
            for ((p, x0), d) in pos.iter_mut().zip(start).zip(s.disp) {
                *p = *x0 + *d;
            }
            path.push(s.time, &pos, s.bridge_max.map(|b| start[0] + b));
            true
        })?;
        Ok(path)
    }
}

#[inline]
fn stable_step<T: Real>(alpha: f64, scale: f64, dt: f64, out: &mut [T], rng: &mut RngStream) {
    if out.len() == 1 {
        out[0] = T::lit(scale * symmetric_stable(alpha, rng));
    } else {
        subordinated_increment(alpha, dt, out, rng);
    }
}

/// Path of `X_t = Y_{U_t}` with `Y` isotropic `alpha`-stable in dimension `dim`.
pub fn time_changed_path<T: Real>(
    alpha: T,
    clock: &ClockSpec<T>,
    dim: usize,
    t: T,
    n_steps: usize,
    streams: &mut PathStreams,
) -> Result<PathGrid<T>> {
    let spec = ProcessSpec::time_changed(alpha, clock.clone(), dim)?;
    PathSampler::new(&spec, t, n_steps, false)?.sample_path(&vec![T::zero(); dim], streams)
}

