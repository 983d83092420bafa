use super::{ErrorSlot, Estimate, McConfig, BRIDGE_NOTE, GRID_SUP_NOTE};
use crate::error::{Error, Result};
use crate::processes::{PathSampler, ProcessSpec};
use crate::rng::{purpose, PathStreams};
use crate::scalar::Real;
use crate::stats::{reduce_paths, Moments};

/// Sampler of the first coordinate (the one-dimensional marginal process),
/// bridge-corrected when requested and available.
pub(crate) fn marginal_sampler<T: Real>(
    process: &ProcessSpec<T>,
    t: T,
    cfg: &McConfig,
) -> Result<PathSampler<T>> {
    let marginal = process.marginal();
    let bridge = cfg.bridge_correction && marginal.gaussian_variance_rate().is_some();
    PathSampler::new(&marginal, t, cfg.n_steps, bridge)
}

fn note(sampler: &PathSampler<impl Real>) -> &'static str {
    if sampler.bridge() {
        BRIDGE_NOTE
    } else {
        GRID_SUP_NOTE
    }
}

/// Accumulate `stat(sup)` over paths of the first coordinate, where `sup`
/// is `sup_{s <= t} X^(1)_s` (at least 0, the starting value).
pub(crate) fn sup_moments<T, F>(
    process: &ProcessSpec<T>,
    t: T,
    cfg: &McConfig,
    purpose: u64,
    width: usize,
    stat: F,
) -> Result<(Moments, &'static str)>
where
    T: Real,
    F: Fn(f64, &mut [f64]) + Sync,
{
    cfg.validate()?;
    let sampler = marginal_sampler(process, t, cfg)?;
    let errors = ErrorSlot::default();
    let m = reduce_paths(0..cfg.n_paths, width, |i, out| {
        let mut streams = PathStreams::new(cfg.seed, purpose, i as u64);
        let mut sup = 0.0f64;
        let walked = sampler.walk(&mut streams, |s| {
            sup = sup.max(s.disp[0].as_f64());
            if let Some(b) = s.bridge_max {
                sup = sup.max(b.as_f64());
            }
            true
        });
        if let Err(e) = walked {
            errors.record(e);
        }
        stat(sup, out);
    });
    errors.finish()?;
    Ok((m, note(&sampler)))
}

/// `mu(t) = E[min(sup_{s<=t} X^(1)_s, 1)]`.
pub fn estimate_mu<T: Real>(process: &ProcessSpec<T>, t: T, cfg: &McConfig) -> Result<Estimate> {
    estimate_mu_with(process, t, cfg, purpose::MU)
}

pub(crate) fn estimate_mu_with<T: Real>(
    process: &ProcessSpec<T>,
    t: T,
    cfg: &McConfig,
    purpose: u64,
) -> Result<Estimate> {
    if t == T::zero() {
        cfg.validate()?;
        return Ok(Estimate::exact(0.0, cfg, "empty supremum"));
    }
    let (m, note) = sup_moments(process, t, cfg, purpose, 1, |s, out| out[0] = s.min(1.0))?;
    Ok(Estimate::new(m.mean(0), m.stderr(0), cfg, note))
}

/// `m(t) = E[sup_{s<=t} X^(1)_s]`, without clamping.
pub fn estimate_m<T: Real>(process: &ProcessSpec<T>, t: T, cfg: &McConfig) -> Result<Estimate> {
    if t == T::zero() {
        cfg.validate()?;
        return Ok(Estimate::exact(0.0, cfg, "empty supremum"));
    }
    let mut note_extra = "";
    if let Some(alpha) = process.tail_index() {
        if alpha <= T::one() {
            return Err(Error::InfiniteMoment {
                p: 1.0,
                alpha: alpha.as_f64(),
            });
        }
        note_extra = "; infinite variance, stderr unreliable";
    }
    let (m, note) = sup_moments(process, t, cfg, purpose::MOMENT, 1, |s, out| out[0] = s)?;
    Ok(Estimate::new(m.mean(0), m.stderr(0), cfg, format!("{note}{note_extra}")))
}

/// `P(sup_{s<=t} X^(1)_s > eps)` with binomial standard error.
pub fn estimate_tail<T: Real>(process: &ProcessSpec<T>, t: T, eps: T, cfg: &McConfig) -> Result<Estimate> {
    if !(eps > T::zero()) {
        return Err(Error::param("eps must be positive"));
    }
    let eps = eps.as_f64();
    let (m, note) = sup_moments(process, t, cfg, purpose::TAIL, 1, |s, out| {
        out[0] = (s > eps) as u8 as f64;
    })?;
    Ok(Estimate::new(m.mean(0), m.stderr(0), cfg, note))
}

/// `E[(sup_{s<=t} X^(1)_s)^p]`; refuses `p >= alpha` for heavy-tailed families.
pub fn estimate_sup_moment<T: Real>(process: &ProcessSpec<T>, t: T, p: T, cfg: &McConfig) -> Result<Estimate> {
    if !(p > T::zero()) {
        return Err(Error::param("moment order must be positive"));
    }
    if let Some(alpha) = process.tail_index() {
        if p >= alpha {
            return Err(Error::InfiniteMoment {
                p: p.as_f64(),
                alpha: alpha.as_f64(),
            });
        }
    }
    let p = p.as_f64();
    let (m, note) = sup_moments(process, t, cfg, purpose::MOMENT, 1, |s, out| out[0] = s.powf(p))?;
    Ok(Estimate::new(m.mean(0), m.stderr(0), cfg, note))
}

/// Tail-to-`mu` ratios `P(sup > eps) / mu(t)` over a ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct Assumption1Table {
    /// Ladder sorted decreasing.
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
    /// `ratio[i][j]` for `t[i]`, `eps[j]`.
    pub ratio: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub mu: Vec<Estimate>,
    /// Per `eps`: ratios decrease along the ladder up to two standard errors.
    pub monotone: Vec<bool>,
    pub warnings: Vec<String>,
}

/// Tail and `mu` are computed from the same paths; the ratio error uses the
/// joint delta method.
pub fn assumption1_diagnostic<T: Real>(
    process: &ProcessSpec<T>,
    t_ladder: &[T],
    eps_list: &[T],
    cfg: &McConfig,
) -> Result<Assumption1Table> {
    if t_ladder.is_empty() || eps_list.is_empty() {
        return Err(Error::param("ladders must be nonempty"));
    }
    if eps_list.len() + 1 > crate::stats::MAX_WIDTH {
        return Err(Error::param("too many eps values"));
    }
    let mut t: Vec<f64> = t_ladder.iter().map(|v| v.as_f64()).collect();
    t.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let eps: Vec<f64> = eps_list.iter().map(|v| v.as_f64()).collect();
    let mut warnings = Vec::new();
    if t.len() == 1 {
        warnings.push("single-point ladder: monotonicity holds vacuously".to_string());
    }
    let (mut ratio, mut stderr, mut mu) = (Vec::new(), Vec::new(), Vec::new());
    for &ti in &t {
        let (m, note) = sup_moments(process, T::lit(ti), cfg, purpose::TAIL, eps.len() + 1, |s, out| {
            out[0] = s.min(1.0);
            for (o, e) in out[1..].iter_mut().zip(&eps) {
                *o = (s > *e) as u8 as f64;
            }
        })?;
        mu.push(Estimate::new(m.mean(0), m.stderr(0), cfg, note));
        let (r, s): (Vec<f64>, Vec<f64>) = (1..=eps.len()).map(|j| m.ratio(j, 0)).unzip();
        ratio.push(r);
        stderr.push(s);
    }
    let monotone = (0..eps.len())
        .map(|j| {
            (1..t.len()).all(|i| {
                ratio[i][j] <= ratio[i - 1][j] + 2.0 * stderr[i][j].hypot(stderr[i - 1][j])
            })
        })
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Assumption1Table {
        t,
        eps,
        ratio,
        stderr,
        mu,
        monotone,
        warnings,
    })
}
