use super::sup::estimate_mu_with;
use super::{
    ErrorSlot, Estimate, McConfig, ShellWidth, AUTO_SHELL_FACTOR, BRIDGE_NOTE, GRID_NOTE,
};
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainSpec, Strata, MAX_STRATA_DIM};
use crate::processes::{PathSampler, ProcessFamily, ProcessSpec};
use crate::rng::{purpose, PathStreams, RngStream};
use crate::scalar::Real;
use crate::stats::reduce_paths;

/// How start points were drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartSampling {
    /// One-dimensional interval: the start point is integrated out exactly.
    Sweep,
    /// Exact boundary shell and interior strata.
    Stratified,
    /// Shell and interior strata of a level-set domain, with stratum volumes
    /// estimated by uniform box sampling.
    EstimatedStrata,
    Uniform,
    CommonBox,
}

impl StartSampling {
    pub fn name(self) -> &'static str {
        match self {
            StartSampling::Sweep => "sweep",
            StartSampling::Stratified => "stratified",
            StartSampling::EstimatedStrata => "estimated_strata",
            StartSampling::Uniform => "uniform",
            StartSampling::CommonBox => "common_box",
        }
    }
}

/// Heat content `Q` and deficit `Vol - Q` from one set of paths.
#[derive(Clone, Debug, PartialEq)]
pub struct DeficitEstimate {
    pub deficit: Estimate,
    pub q: Estimate,
    pub volume: f64,
    pub sampling: StartSampling,
    pub shell_width: Option<f64>,
    pub pilot_mu: Option<Estimate>,
}

/// Geometric points used to estimate level-set stratum volumes.
const LEVEL_STRATA_POINTS: usize = 2_000_000;
const MAX_REJECTIONS: usize = 1_000_000;
/// Bridge factors `1 - exp(-a)` with `a` above this are taken as 1.
const BRIDGE_CUTOFF: f64 = 40.0;

struct LossModel<'a, T: Real> {
    sampler: PathSampler<T>,
    domain: &'a DomainSpec<T>,
    /// Per-step coordinate variance when bridge-corrected.
    bridge_var: Option<f64>,
}

impl<T: Real> LossModel<'_, T> {
    /// `1 - P(survive | skeleton)` for a path from `x`: 1 on a grid exit,
    /// otherwise one minus the product of half-space bridge survival factors.
    fn loss(&self, x: &[T], streams: &mut PathStreams, pos: &mut [T]) -> Result<f64> {
        let dom = self.domain;
        let mut dead = false;
        let mut weight = 1.0;
        let mut prev = match self.bridge_var {
            Some(_) => dom.distance_like(x).as_f64(),
            None => 0.0,
        };
        self.sampler.walk(streams, |s| {
            for ((p, x0), dx) in pos.iter_mut().zip(x).zip(s.disp) {
                *p = *x0 + *dx;
            }
            if !dom.contains_unchecked(pos) {
                dead = true;
                return false;
            }
            if let Some(v) = self.bridge_var {
                let next = dom.distance_like(pos).as_f64();
                let a = 2.0 * prev * next / v;
                if a < BRIDGE_CUTOFF {
                    weight *= -(-a).exp_m1();
                }
                prev = next;
            }
            true
        })?;
        Ok(if dead { 1.0 } else { 1.0 - weight })
    }

    fn note(&self) -> &'static str {
        if self.bridge_var.is_some() {
            BRIDGE_NOTE
        } else {
            GRID_NOTE
        }
    }
}

/// `Q(t) = int_Omega P_x(tau > t) dx` (see [`estimate_deficit`]).
pub fn estimate_q<T: Real>(
    process: &ProcessSpec<T>,
    domain: &DomainSpec<T>,
    t: T,
    cfg: &McConfig,
) -> Result<Estimate> {
    Ok(estimate_deficit(process, domain, t, cfg)?.q)
}

/// Heat content deficit `Vol(Omega) - Q(t)`, estimated directly.
///
/// Start points are chosen by, in order of preference: the common box when
/// configured; an exact sweep over start points for intervals (without
/// bridge); boundary stratification when `cfg.stratified`; uniform sampling.
/// Brownian families with `bridge_correction` weight each surviving
/// skeleton by the half-space bridge survival probabilities.
pub fn estimate_deficit<T: Real>(
    process: &ProcessSpec<T>,
    domain: &DomainSpec<T>,
    t: T,
    cfg: &McConfig,
) -> Result<DeficitEstimate> {
    cfg.validate()?;
    if process.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: process.dim(),
        });
    }
    let volume = domain.volume().value.as_f64();
    if t == T::zero() {
        return Ok(DeficitEstimate {
            deficit: Estimate::exact(0.0, cfg, "t = 0"),
            q: Estimate::exact(volume, cfg, "t = 0"),
            volume,
            sampling: StartSampling::Uniform,
            shell_width: None,
            pilot_mu: None,
        });
    }
    if !(t > T::zero()) {
        return Err(Error::param("t must be nonnegative"));
    }
    let sampler = PathSampler::new(process, t, cfg.n_steps, false)?;
    let bridge_var = if cfg.bridge_correction {
        sampler.step_variance()
    } else {
        None
    };
    let model = LossModel {
        sampler,
        domain,
        bridge_var,
    };
    let finish = |d: Estimate, sampling, shell_width, pilot_mu| {
        let q = Estimate {
            value: volume - d.value,
            ..d.clone()
        };
        DeficitEstimate {
            deficit: d,
            q,
            volume,
            sampling,
            shell_width,
            pilot_mu,
        }
    };

    if let Some((lo, hi)) = &cfg.common_box {
        return common_box(&model, lo, hi, cfg, volume);
    }
    if let (DomainKind::Interval { lo, hi }, None) = (domain.kind(), bridge_var) {
        let d = sweep(&model, (*hi - *lo).as_f64(), cfg)?;
        return Ok(finish(d, StartSampling::Sweep, None, None));
    }
    if cfg.stratified && domain.dim() <= MAX_STRATA_DIM {
        let (width, pilot) = match cfg.shell_width {
            ShellWidth::Fixed(w) => (w, None),
            ShellWidth::Auto => {
                let pilot_cfg = cfg.with_paths((cfg.n_paths / 100).max(super::MIN_PATHS));
                let mu = estimate_mu_with(process, t, &pilot_cfg, purpose::PILOT)?;
                (AUTO_SHELL_FACTOR * mu.value, Some(mu))
            }
        };
        match domain.reach() {
            Some(reach) if width < reach.as_f64() && width > 0.0 => {
                let strata = Strata::new(domain, T::lit(width))?;
                let d = stratified(&model, &strata, cfg)?;
                return Ok(finish(d, StartSampling::Stratified, Some(width), pilot));
            }
            Some(reach) => {
                if cfg.shell_width != ShellWidth::Auto {
                    return Err(Error::ReachExceeded {
                        width,
                        reach: reach.as_f64(),
                    });
                }
                log::info!("auto shell width {width:.3e} reaches {reach}; sampling uniformly");
            }
            None if width > 0.0 => {
                let d = level_strata(&model, width, cfg)?;
                return Ok(finish(d, StartSampling::EstimatedStrata, Some(width), pilot));
            }
            None => {}
        }
    }
    let d = uniform(&model, volume, cfg)?;
    Ok(finish(d, StartSampling::Uniform, None, None))
}

fn sweep<T: Real>(model: &LossModel<'_, T>, length: f64, cfg: &McConfig) -> Result<Estimate> {
    // Paths from x survive iff x + min > lo and x + max < hi, so the exit set
    // of start points has measure min(L, max - min).
    let errors = ErrorSlot::default();
    let m = reduce_paths(0..cfg.n_paths, 1, |i, out| {
        let mut streams = PathStreams::new(cfg.seed, purpose::HEAT_CONTENT, i as u64);
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let walked = model.sampler.walk(&mut streams, |s| {
            let x = s.disp[0].as_f64();
            lo = lo.min(x);
            hi = hi.max(x);
            hi - lo < length
        });
        if let Err(e) = walked {
            errors.record(e);
        }
        out[0] = (hi - lo).min(length);
    });
    errors.finish()?;
    Ok(Estimate::new(m.mean(0), m.stderr(0), cfg, GRID_NOTE))
}

fn stratum_moments<T: Real, S>(
    model: &LossModel<'_, T>,
    range: std::ops::Range<usize>,
    cfg: &McConfig,
    sample: S,
) -> Result<crate::stats::Moments>
where
    S: Fn(&mut RngStream, &mut [T]) -> Result<()> + Sync,
{
    let d = model.domain.dim();
    let errors = ErrorSlot::default();
    let m = reduce_paths(range, 1, |i, out| {
        let mut streams = PathStreams::new(cfg.seed, purpose::HEAT_CONTENT, i as u64);
        let mut x = vec![T::zero(); d];
        let mut pos = vec![T::zero(); d];
        let r = sample(&mut streams.start, &mut x).and_then(|_| model.loss(&x, &mut streams, &mut pos));
        match r {
            Ok(l) => out[0] = l,
            Err(e) => errors.record(e),
        }
    });
    errors.finish()?;
    Ok(m)
}

fn stratified<T: Real>(model: &LossModel<'_, T>, strata: &Strata<T>, cfg: &McConfig) -> Result<Estimate> {
    let n_shell = strata.shell_count(cfg.n_paths);
    let shell = stratum_moments(model, 0..n_shell, cfg, |r, x| strata.sample_shell(r, x))?;
    let mut value = strata.shell_volume * shell.mean(0);
    let mut var = (strata.shell_volume * shell.stderr(0)).powi(2);
    if n_shell < cfg.n_paths {
        let inner = stratum_moments(model, n_shell..cfg.n_paths, cfg, |r, x| strata.sample_interior(r, x))?;
        value += strata.interior_volume * inner.mean(0);
        var += (strata.interior_volume * inner.stderr(0)).powi(2);
    }
    Ok(Estimate::new(value, var.sqrt(), cfg, model.note()))
}

fn uniform<T: Real>(model: &LossModel<'_, T>, volume: f64, cfg: &McConfig) -> Result<Estimate> {
    let m = stratum_moments(model, 0..cfg.n_paths, cfg, |r, x| model.domain.sample_point(r, x))?;
    Ok(Estimate::new(volume * m.mean(0), volume * m.stderr(0), cfg, model.note()))
}

fn box_point<T: Real>(lo: &[f64], hi: &[f64], rng: &mut RngStream, x: &mut [T]) {
    for ((x, a), b) in x.iter_mut().zip(lo).zip(hi) {
        *x = T::lit(a + (b - a) * rng.uniform());
    }
}

fn common_box<T: Real>(
    model: &LossModel<'_, T>,
    lo: &[f64],
    hi: &[f64],
    cfg: &McConfig,
    volume: f64,
) -> Result<DeficitEstimate> {
    let d = model.domain.dim();
    if lo.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: lo.len() });
    }
    let box_volume: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let errors = ErrorSlot::default();
    let m = reduce_paths(0..cfg.n_paths, 2, |i, out| {
        let mut streams = PathStreams::new(cfg.seed, purpose::HEAT_CONTENT, i as u64);
        let mut x = vec![T::zero(); d];
        let mut pos = vec![T::zero(); d];
        box_point(lo, hi, &mut streams.start, &mut x);
        if model.domain.contains_unchecked(&x) {
            match model.loss(&x, &mut streams, &mut pos) {
                Ok(l) => {
                    out[0] = l;
                    out[1] = 1.0 - l;
                }
                Err(e) => errors.record(e),
            }
        }
    });
    errors.finish()?;
    let est = |k: usize| Estimate::new(box_volume * m.mean(k), box_volume * m.stderr(k), cfg, model.note());
    Ok(DeficitEstimate {
        deficit: est(0),
        q: est(1),
        volume,
        sampling: StartSampling::CommonBox,
        shell_width: None,
        pilot_mu: None,
    })
}

/// Shell `{0 < phi / |grad phi| < w}` and interior strata of a level-set
/// domain inside its padded bounding box.
struct LevelStrata<'a, T: Real> {
    domain: &'a DomainSpec<T>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    width: f64,
}

impl<T: Real> LevelStrata<'_, T> {
    /// 0 outside, 1 in the shell, 2 in the interior.
    fn classify(&self, x: &[T]) -> usize {
        if !self.domain.contains_unchecked(x) {
            return 0;
        }
        let delta = self.domain.distance_like(x).as_f64();
        if delta < crate::geometry::MIN_BOUNDARY_DISTANCE {
            0
        } else if delta < self.width {
            1
        } else {
            2
        }
    }

    fn sample(&self, stratum: usize, rng: &mut RngStream, x: &mut [T]) -> Result<()> {
        for _ in 0..MAX_REJECTIONS {
            box_point(&self.lo, &self.hi, rng, x);
            if self.classify(x) == stratum {
                return Ok(());
            }
        }
        Err(Error::LowAcceptance(1.0 / MAX_REJECTIONS as f64))
    }
}

fn level_strata<T: Real>(model: &LossModel<'_, T>, width: f64, cfg: &McConfig) -> Result<Estimate> {
    let (lo, hi) = model.domain.bounds();
    let strata = LevelStrata {
        domain: model.domain,
        lo: lo.iter().map(|v| v.as_f64()).collect(),
        hi: hi.iter().map(|v| v.as_f64()).collect(),
        width,
    };
    let box_volume = model.domain.bounding_box_volume().as_f64();
    let d = model.domain.dim();
    let geo = reduce_paths(0..LEVEL_STRATA_POINTS, 2, |i, out| {
        let mut rng = RngStream::for_path(cfg.seed, purpose::GEOMETRY, crate::rng::Channel::Start, i as u64);
        let mut x = [T::zero(); 8];
        box_point(&strata.lo, &strata.hi, &mut rng, &mut x[..d]);
        match strata.classify(&x[..d]) {
            1 => out[0] = 1.0,
            2 => out[1] = 1.0,
            _ => {}
        }
    });
    let (ps, pi) = (geo.mean(0), geo.mean(1));
    if ps == 0.0 {
        return Err(Error::DegenerateDomain(ps));
    }
    let n_shell = if pi > 0.0 {
        ((cfg.n_paths as f64 * crate::geometry::SHELL_FRACTION).round() as usize).clamp(1, cfg.n_paths - 1)
    } else {
        cfg.n_paths
    };
    let shell = stratum_moments(model, 0..n_shell, cfg, |r, x| strata.sample(1, r, x))?;
    let (ms, mut mi) = (shell.mean(0), 0.0);
    let mut var = (ps * shell.stderr(0)).powi(2);
    if n_shell < cfg.n_paths {
        let inner = stratum_moments(model, n_shell..cfg.n_paths, cfg, |r, x| strata.sample(2, r, x))?;
        mi = inner.mean(0);
        var += (pi * inner.stderr(0)).powi(2);
    }
    let n_geo = LEVEL_STRATA_POINTS as f64;
    var += (ms * ms * ps * (1.0 - ps) + mi * mi * pi * (1.0 - pi) - 2.0 * ms * mi * ps * pi) / n_geo;
    Ok(Estimate::new(
        box_volume * (ps * ms + pi * mi),
        box_volume * var.max(0.0).sqrt(),
        cfg,
        model.note(),
    ))
}


/// Deficits over a ladder of times, in ladder order.
///
/// For interval sweeps of Brownian, stable and fractional Brownian motion
/// without bridge correction, the `n`-step path over `[0, t]` is exactly
/// `t^H` times the unit-time path drawn from the same streams, so a single
/// pass serves the whole ladder. Other inputs call [`estimate_deficit`] per
/// point.
pub fn estimate_deficit_ladder<T: Real>(
    process: &ProcessSpec<T>,
    domain: &DomainSpec<T>,
    ts: &[T],
    cfg: &McConfig,
) -> Result<Vec<DeficitEstimate>> {
    cfg.validate()?;
    let bridge = cfg.bridge_correction && process.gaussian_variance_rate().is_some();
    let shared = matches!(
        process.family(),
        ProcessFamily::Brownian { .. } | ProcessFamily::IsotropicStable { .. } | ProcessFamily::FractionalBrownian { .. }
    );
    let (DomainKind::Interval { lo, hi }, false, None, true) = (domain.kind(), bridge, &cfg.common_box, shared) else {
        return ts.iter().map(|t| estimate_deficit(process, domain, *t, cfg)).collect();
    };
    if process.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: process.dim() });
    }
    if ts.iter().any(|t| !(*t >= T::zero())) {
        return Err(Error::param("t must be nonnegative"));
    }
    let h = process.self_similarity_index().expect("self-similar family").as_f64();
    let length = (*hi - *lo).as_f64();
    let scales: Vec<f64> = ts.iter().map(|t| t.as_f64().powf(h)).collect();
    let min_scale = scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let model = LossModel {
        sampler: PathSampler::new(process, T::one(), cfg.n_steps, false)?,
        domain,
        bridge_var: None,
    };
    let mut out = Vec::with_capacity(ts.len());
    for chunk in scales.chunks(crate::stats::MAX_WIDTH) {
        let errors = ErrorSlot::default();
        let m = reduce_paths(0..cfg.n_paths, chunk.len(), |i, out| {
            let mut streams = PathStreams::new(cfg.seed, purpose::HEAT_CONTENT, i as u64);
            let (mut lo, mut hi) = (0.0f64, 0.0f64);
            let walked = model.sampler.walk(&mut streams, |s| {
                let x = s.disp[0].as_f64();
                lo = lo.min(x);
                hi = hi.max(x);
                (hi - lo) * min_scale < length
            });
            if let Err(e) = walked {
                errors.record(e);
            }
            for (o, c) in out.iter_mut().zip(chunk) {
                *o = ((hi - lo) * c).min(length);
            }
        });
        errors.finish()?;
        for (k, c) in chunk.iter().enumerate() {
            let deficit = if *c == 0.0 {
                Estimate::exact(0.0, cfg, "t = 0")
            } else {
                Estimate::new(m.mean(k), m.stderr(k), cfg, GRID_NOTE)
            };
            let q = Estimate {
                value: length - deficit.value,
                ..deficit.clone()
            };
            out.push(DeficitEstimate {
                deficit,
                q,
                volume: length,
                sampling: StartSampling::Sweep,
                shell_width: None,
                pilot_mu: None,
            });
        }
    }
    Ok(out)
}
