//! Weighted least-squares extrapolation of a ratio ladder to `t -> 0`.

use crate::error::{Error, Result};

/// Correction exponent of the model `ratio(t) = L + a t^theta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Theta {
    Fixed(f64),
    /// Grid search over `[0.05, 1.5]` minimizing chi-square.
    Free,
}

/// Direction in which the ratio moves as `t` decreases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
}

impl Trend {
    pub fn name(self) -> &'static str {
        match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Flat => "flat",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolation {
    pub limit: f64,
    pub stderr: f64,
    /// 95% normal confidence interval.
    pub ci: (f64, f64),
    pub slope: f64,
    pub theta: f64,
    pub chi2: f64,
    pub dof: usize,
    /// True when the fit was skipped and `limit` is the smallest-`t` ratio.
    pub fallback: bool,
    pub trend: Trend,
    pub note: String,
}

const THETA_GRID: (f64, f64, usize) = (0.05, 1.5, 146);
const MIN_DECADES: f64 = 2.0;
const MIN_FIT_POINTS: usize = 4;

struct Fit {
    limit: f64,
    slope: f64,
    var_limit: f64,
    chi2: f64,
}

fn wls(x: &[f64], y: &[f64], w: &[f64]) -> Option<Fit> {
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * (x - xm) * (y - ym)).sum();
    // A design with no spread in t^theta cannot separate L from a.
    if !(sxx > 1e-12 * sw * xm.abs().max(1e-300).powi(2)) {
        return None;
    }
    let slope = sxy / sxx;
    let limit = ym - slope * xm;
    let chi2 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * (y - limit - slope * x).powi(2)).sum();
    let var_limit = 1.0 / sw + xm * xm / sxx;
    (limit.is_finite() && slope.is_finite()).then_some(Fit {
        limit,
        slope,
        var_limit,
        chi2,
    })
}

fn trend(t: &[f64], ratios: &[f64], stderrs: &[f64]) -> Trend {
    let lo = (0..t.len()).min_by(|&a, &b| t[a].partial_cmp(&t[b]).unwrap()).unwrap();
    let hi = (0..t.len()).max_by(|&a, &b| t[a].partial_cmp(&t[b]).unwrap()).unwrap();
    let diff = ratios[lo] - ratios[hi];
    let se = stderrs[lo].hypot(stderrs[hi]);
    if diff > 2.0 * se {
        Trend::Increasing
    } else if diff < -2.0 * se {
        Trend::Decreasing
    } else {
        Trend::Flat
    }
}

/// Fit `ratio(t) = L + a t^theta` by weighted least squares with weights
/// `1 / stderr^2` (unit weights when every stderr is zero).
///
/// Needs at least three points. With fewer than four, a span under two
/// decades, or a degenerate design, the smallest-`t` ratio is returned with
/// `fallback` set. The stderr of `L` is inflated by `sqrt(chi2 / dof)` when
/// that exceeds one; for a free exponent it is conditional on the best
/// `theta`.
pub fn extrapolate_ratio(t: &[f64], ratios: &[f64], stderrs: &[f64], theta: Theta) -> Result<Extrapolation> {
    let n = t.len();
    if ratios.len() != n || stderrs.len() != n {
        return Err(Error::param("ladder arrays differ in length"));
    }
    if n < 3 {
        return Err(Error::InsufficientLadder(n));
    }
    if t.iter().any(|v| !(*v > 0.0)) || ratios.iter().any(|r| !r.is_finite()) {
        return Err(Error::param("ladder needs t > 0 and finite ratios"));
    }
    let trend = trend(t, ratios, stderrs);
    let w: Vec<f64> = if stderrs.iter().all(|s| *s == 0.0) {
        vec![1.0; n]
    } else {
        let floor = stderrs.iter().cloned().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
        stderrs.iter().map(|s| 1.0 / s.max(floor).powi(2)).collect()
    };
    let (tmin, tmax) = t.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let last = (0..n).find(|&k| t[k] == tmin).unwrap();
    let fallback = |note: String| Extrapolation {
        limit: ratios[last],
        stderr: stderrs[last],
        ci: (ratios[last] - 1.96 * stderrs[last], ratios[last] + 1.96 * stderrs[last]),
        slope: f64::NAN,
        theta: f64::NAN,
        chi2: f64::NAN,
        dof: 0,
        fallback: true,
        trend,
        note,
    };
    if n < MIN_FIT_POINTS {
        return Ok(fallback(format!("{n} points: smallest-t value reported")));
    }
    if (tmax / tmin).log10() < MIN_DECADES - 1e-9 {
        return Ok(fallback(format!(
            "ladder spans {:.2} decades: smallest-t value reported",
            (tmax / tmin).log10()
        )));
    }
    let fit_at = |th: f64| {
        let x: Vec<f64> = t.iter().map(|v| v.powf(th)).collect();
        wls(&x, ratios, &w)
    };
    let (th, fit, free_params) = match theta {
        Theta::Fixed(th) => (th, fit_at(th), 2),
        Theta::Free => {
            let (a, b, k) = THETA_GRID;
            let best = (0..k)
                .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
                .filter_map(|th| fit_at(th).map(|f| (th, f)))
                .min_by(|x, y| x.1.chi2.partial_cmp(&y.1.chi2).unwrap());
            match best {
                Some((th, f)) => (th, Some(f), 3),
                None => (f64::NAN, None, 3),
            }
        }
    };
    let Some(fit) = fit else {
        return Ok(fallback("ill-conditioned fit: smallest-t value reported".into()));
    };
    let dof = n.saturating_sub(free_params);
    let inflation = if dof > 0 { (fit.chi2 / dof as f64).sqrt().max(1.0) } else { 1.0 };
    let stderr = fit.var_limit.sqrt() * inflation;
    Ok(Extrapolation {
        limit: fit.limit,
        stderr,
        ci: (fit.limit - 1.96 * stderr, fit.limit + 1.96 * stderr),
        slope: fit.slope,
        theta: th,
        chi2: fit.chi2,
        dof,
        fallback: false,
        trend,
        note: format!("wls fit, theta = {th:.3}"),
    })
}

/// Whether consecutive ratios (ordered by decreasing `t`) never move away
/// from `target` by more than `k` joint standard errors.
pub fn moves_toward(t: &[f64], ratios: &[f64], stderrs: &[f64], target: f64, k: f64) -> bool {
    let mut idx: Vec<usize> = (0..t.len()).collect();
    idx.sort_by(|&a, &b| t[b].partial_cmp(&t[a]).unwrap());
    idx.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        (ratios[b] - target).abs() <= (ratios[a] - target).abs() + k * stderrs[a].hypot(stderrs[b])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn ladder(k: usize) -> Vec<f64> {
        (0..k).map(|i| 1e-2 * 10f64.powf(-(i as f64) * 0.6)).collect()
    }

    #[test]
    fn noiseless_model_is_recovered() {
        let t = ladder(6);
        let r: Vec<f64> = t.iter().map(|t| 6.2832 + t.sqrt()).collect();
        let se = vec![0.01; 6];
        let e = extrapolate_ratio(&t, &r, &se, Theta::Fixed(0.5)).unwrap();
        assert!((e.limit - 6.2832).abs() < 1e-10, "{e:?}");
        assert!((e.slope - 1.0).abs() < 1e-8);
        assert!(!e.fallback);
        let free = extrapolate_ratio(&t, &r, &se, Theta::Free).unwrap();
        assert!((free.theta - 0.5).abs() < 1e-9 && (free.limit - 6.2832).abs() < 1e-9, "{free:?}");
    }

    #[test]
    fn noisy_model_within_three_percent() {
        let t = ladder(6);
        let mut rng = RngStream::new(42, 0);
        let r: Vec<f64> = t.iter().map(|t| (6.2832 + t.sqrt()) * (1.0 + 0.01 * rng.normal())).collect();
        let se: Vec<f64> = r.iter().map(|r| 0.01 * r).collect();
        let e = extrapolate_ratio(&t, &r, &se, Theta::Fixed(0.5)).unwrap();
        assert!((e.limit / 6.2832 - 1.0).abs() < 0.03, "{e:?}");
    }

    #[test]
    fn short_ladders() {
        assert!(matches!(
            extrapolate_ratio(&[1e-2, 1e-3], &[1.0, 1.0], &[0.1, 0.1], Theta::Free),
            Err(Error::InsufficientLadder(2))
        ));
        let e = extrapolate_ratio(&[1e-2, 1e-3, 1e-4], &[1.0, 1.5, 1.9], &[0.01; 3], Theta::Fixed(0.5)).unwrap();
        assert!(e.fallback && e.limit == 1.9 && e.trend == Trend::Increasing);
        let narrow = extrapolate_ratio(&[1e-2, 5e-3, 2e-3, 1e-3], &[1.0; 4], &[0.01; 4], Theta::Fixed(0.5)).unwrap();
        assert!(narrow.fallback && narrow.trend == Trend::Flat);
    }

    #[test]
    fn monotone_approach() {
        let t = [1e-3, 1e-4, 1e-5, 1e-6];
        assert!(moves_toward(&t, &[1.4, 1.6, 1.75, 1.85], &[0.01; 4], 2.0, 2.0));
        assert!(!moves_toward(&t, &[1.4, 1.6, 1.2, 1.85], &[0.01; 4], 2.0, 2.0));
    }
}
