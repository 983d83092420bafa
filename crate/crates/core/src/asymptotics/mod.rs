//! Reference normalisers, predicted limits and ladder extrapolation.

mod constants;
mod extrapolate;

pub use constants::{
    fbm_sup_key, fbm_sup_oracle, stable_positive_part_mean, stable_sup_key, stable_sup_oracle, Constant,
    ConstantsCache, HEADER,
};
pub use extrapolate::{extrapolate_ratio, moves_toward, Extrapolation, Theta, Trend};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::processes::{BrownianScale, ClockSpec, ProcessFamily, ProcessSpec, SubordinatorSpec};
use crate::scalar::Real;
use crate::special::gamma;

/// What the deficit is divided by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormalizerKind {
    /// Monte Carlo `mu(t) = E[min(sup X^(1), 1)]`.
    EstimatedMu,
    /// Closed-form or cached small-time equivalent of `mu(t)`.
    ReferenceMu,
    /// Monte Carlo `m(t) = E[sup X^(1)]`.
    EstimatedM,
    /// `phi(1/t)^(-1/alpha)` for a time-changed process.
    ClockScale,
}

impl NormalizerKind {
    pub fn name(self) -> &'static str {
        match self {
            NormalizerKind::EstimatedMu => "estimated_mu",
            NormalizerKind::ReferenceMu => "reference_mu",
            NormalizerKind::EstimatedM => "estimated_m",
            NormalizerKind::ClockScale => "clock_scale",
        }
    }
}

/// A deterministic normaliser value.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub value: f64,
    /// Relative standard error inherited from cached constants.
    pub rel_stderr: f64,
    /// True when `value` is only a small-time (or large-time) equivalent.
    pub asymptotic: bool,
}

/// Predicted value of `lim deficit / normaliser`.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub rel_stderr: f64,
    pub note: String,
}

fn inner_sup_mean(alpha: f64, cache: &ConstantsCache) -> Result<(f64, f64)> {
    if alpha == 2.0 {
        // Variance-2t Brownian motion: E[sup_{s<=1}] = 2 / sqrt(pi).
        return Ok((2.0 / PI.sqrt(), 0.0));
    }
    let c = cache.stable_sup_mean(alpha)?;
    Ok((c.value, c.rel_stderr()))
}

/// `E[E_t^q] = Gamma(q+1) / Gamma(q beta + 1) t^(q beta)` for the inverse of a
/// `beta`-stable subordinator.
pub fn inverse_stable_moment(beta: f64, q: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) || !(q >= 0.0) || !(t >= 0.0) {
        return Err(Error::param("need beta in (0,1), q >= 0, t >= 0"));
    }
    if q == 0.0 {
        return Ok(1.0);
    }
    Ok(gamma(q + 1.0) / gamma(q * beta + 1.0) * t.powf(q * beta))
}

/// `E[E_t^q]` for an inverse subordinator, returned with an `exact` flag.
///
/// Exact for stable subordinators; otherwise the small-`t` equivalent
/// `Gamma(q+1) / Gamma(q beta + 1) phi(1/t)^(-q)` with `beta` the index of
/// `phi` at infinity.
pub fn inverse_subordinator_moment<T: Real>(sub: &SubordinatorSpec<T>, q: f64, t: f64) -> Result<(f64, bool)> {
    sub.validate()?;
    if let SubordinatorSpec::Stable { beta } = sub {
        return Ok((inverse_stable_moment(beta.as_f64(), q, t)?, true));
    }
    if !(t > 0.0) || !(q >= 0.0) {
        return Err(Error::param("need t > 0 and q >= 0"));
    }
    let b = sub.index_at_infinity().as_f64();
    let phi = sub.laplace_exponent(T::lit(1.0 / t)).as_f64();
    Ok((gamma(q + 1.0) / gamma(q * b + 1.0) * phi.powf(-q), false))
}

/// The clock scale `phi(1/t)^(-1/alpha)`, or `t^(beta/alpha)` for a power clock.
pub fn clock_scale<T: Real>(clock: &ClockSpec<T>, alpha: f64, t: f64) -> Result<f64> {
    clock.validate()?;
    if !(t > 0.0) {
        return Err(Error::param("clock scale needs t > 0"));
    }
    match clock {
        ClockSpec::InverseSubordinator(sub) => {
            Ok(sub.laplace_exponent(T::lit(1.0 / t)).as_f64().powf(-1.0 / alpha))
        }
        ClockSpec::DeterministicPower { beta } => Ok(t.powf(beta.as_f64() / alpha)),
        ClockSpec::LampertiInverse { .. } => {
            Err(Error::Unsupported("clock scale of a Lamperti clock".into()))
        }
    }
}

// Gamma(1 + 1/alpha) / Gamma(1 + beta/alpha) = E[E_1^(1/alpha)] for the inverse
// beta-stable clock.
fn inverse_stable_factor(alpha: f64, beta: f64) -> f64 {
    gamma(1.0 + 1.0 / alpha) / gamma(1.0 + beta / alpha)
}

/// Small-time equivalent of `mu(t)`.
pub fn mu_reference<T: Real>(process: &ProcessSpec<T>, t: f64, cache: &ConstantsCache) -> Result<Reference> {
    process.validate()?;
    if !(t > 0.0) {
        return Err(Error::param("reference mu needs t > 0"));
    }
    let exact = |value| Reference {
        value,
        rel_stderr: 0.0,
        asymptotic: true,
    };
    match process.family() {
        ProcessFamily::Brownian { scale } => Ok(exact(match scale {
            BrownianScale::HeatKernel => 2.0 * (t / PI).sqrt(),
            BrownianScale::Standard => (2.0 * t / PI).sqrt(),
        })),
        ProcessFamily::IsotropicStable { alpha } => {
            let a = alpha.as_f64();
            if a == 1.0 {
                if t >= 1.0 {
                    return Err(Error::param("Cauchy reference t log(1/t) / pi needs t < 1"));
                }
                return Ok(exact(t * (1.0 / t).ln() / PI));
            }
            if a < 1.0 {
                return Err(Error::InfiniteMoment { p: 1.0, alpha: a });
            }
            let (c, rel) = inner_sup_mean(a, cache)?;
            Ok(Reference {
                value: t.powf(1.0 / a) * c,
                rel_stderr: rel,
                asymptotic: true,
            })
        }
        ProcessFamily::FractionalBrownian { hurst } => {
            let h = hurst.as_f64();
            let c = cache.get(&fbm_sup_key(h))?;
            Ok(Reference {
                value: t.powf(h) * c.value,
                rel_stderr: c.rel_stderr(),
                asymptotic: true,
            })
        }
        ProcessFamily::TimeChanged { alpha, clock } => {
            let a = alpha.as_f64();
            let (c, rel) = inner_sup_mean(a, cache)?;
            // m(t) = E[sup Y_1] E[U_t^(1/alpha)].
            let clock_moment = match clock {
                ClockSpec::InverseSubordinator(sub) => inverse_subordinator_moment(sub, 1.0 / a, t)?.0,
                ClockSpec::DeterministicPower { beta } => t.powf(beta.as_f64() / a),
                ClockSpec::LampertiInverse { .. } => {
                    return Err(Error::Unsupported("reference mu of a Lamperti clock".into()))
                }
            };
            Ok(Reference {
                value: c * clock_moment,
                rel_stderr: rel,
                asymptotic: true,
            })
        }
    }
}

/// Predicted `lim_{t->0} (Vol - Q(t)) / normaliser(t)`.
///
/// Self-normalised kinds predict the perimeter (`2` for an interval). The
/// clock scale predicts `E[sup Y_1] E[E_1^(1/alpha)] Per` for an inverse
/// stable clock and `E[sup Y_1] Per` for a power clock.
pub fn predicted_limit<T: Real>(
    process: &ProcessSpec<T>,
    domain: &DomainSpec<T>,
    normalizer: NormalizerKind,
    cache: &ConstantsCache,
) -> Result<Prediction> {
    process.validate()?;
    if process.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: process.dim(),
        });
    }
    let per = domain.perimeter()?;
    let (pv, pe) = (per.value.as_f64(), per.error.as_f64());
    let per_rel = if pv > 0.0 { pe / pv } else { 0.0 };
    match normalizer {
        NormalizerKind::EstimatedMu | NormalizerKind::ReferenceMu | NormalizerKind::EstimatedM => Ok(Prediction {
            value: pv,
            rel_stderr: per_rel,
            note: "perimeter".into(),
        }),
        NormalizerKind::ClockScale => {
            let ProcessFamily::TimeChanged { alpha, clock } = process.family() else {
                return Err(Error::Unsupported(format!("clock scale for {}", process.name())));
            };
            let a = alpha.as_f64();
            let (c, rel) = inner_sup_mean(a, cache)?;
            let (factor, note) = match clock {
                ClockSpec::InverseSubordinator(SubordinatorSpec::Stable { beta }) => (
                    inverse_stable_factor(a, beta.as_f64()),
                    "E[sup Y_1] E[E_1^(1/alpha)] perimeter",
                ),
                ClockSpec::DeterministicPower { .. } => (1.0, "E[sup Y_1] perimeter"),
                _ => {
                    return Err(Error::Unsupported(format!(
                        "clock-scale limit for clock {}",
                        clock.name()
                    )))
                }
            };
            Ok(Prediction {
                value: c * factor * pv,
                rel_stderr: rel.hypot(per_rel),
                note: note.into(),
            })
        }
    }
}

/// Default correction exponent of the ratio ladder.
pub fn default_theta<T: Real>(process: &ProcessSpec<T>) -> Theta {
    let stable = |a: f64| (1.0 / a).min(1.0 - 1.0 / a);
    match process.family() {
        ProcessFamily::Brownian { .. } => Theta::Fixed(0.5),
        ProcessFamily::IsotropicStable { alpha } if alpha.as_f64() > 1.0 => Theta::Fixed(stable(alpha.as_f64())),
        ProcessFamily::IsotropicStable { .. } => Theta::Free,
        ProcessFamily::FractionalBrownian { hurst } => Theta::Fixed(hurst.as_f64()),
        ProcessFamily::TimeChanged { alpha, clock } => match clock.self_similarity_index() {
            Some(b) => Theta::Fixed(b.as_f64() * stable(alpha.as_f64())),
            None => Theta::Free,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::stable_sup_mean_closed_form;

    fn cache() -> ConstantsCache {
        let mut c = ConstantsCache::new();
        for a in [1.2, 1.5, 1.8] {
            c.insert(
                stable_sup_key(a),
                Constant {
                    value: stable_sup_mean_closed_form(a),
                    stderr: 1e-3,
                    provenance: "closed form".into(),
                },
            );
        }
        c
    }

    #[test]
    fn brownian_references() {
        let c = ConstantsCache::new();
        let t = 1e-3;
        let heat = mu_reference(&ProcessSpec::<f64>::brownian(2).unwrap(), t, &c).unwrap();
        assert!((heat.value - 2.0 * (t / PI).sqrt()).abs() < 1e-15);
        let std = mu_reference(&ProcessSpec::<f64>::brownian_standard(2).unwrap(), t, &c).unwrap();
        assert!((std.value - (2.0 * t / PI).sqrt()).abs() < 1e-15);
        let s2 = mu_reference(&ProcessSpec::<f64>::stable(2.0, 2).unwrap(), t, &c).unwrap();
        assert!((s2.value - heat.value).abs() < 1e-15);
    }

    #[test]
    fn cauchy_reference() {
        let c = ConstantsCache::new();
        let p = ProcessSpec::<f64>::stable(1.0, 2).unwrap();
        let r = mu_reference(&p, 1e-6, &c).unwrap();
        assert!((r.value - 4.3976e-6).abs() < 1e-9, "{}", r.value);
        assert!(mu_reference(&p, 1.0, &c).is_err());
        // Dominates every power t^(1/alpha') with alpha' > 1 for small t.
        for t in [1e-4, 1e-6, 1e-8] {
            assert!(mu_reference(&p, t, &c).unwrap().value < t.powf(1.0 / 1.01) * 50.0);
            assert!(mu_reference(&p, t, &c).unwrap().value > t);
        }
    }

    #[test]
    fn stable_reference_is_homogeneous() {
        let c = cache();
        let p = ProcessSpec::<f64>::stable(1.5, 2).unwrap();
        let a = mu_reference(&p, 1e-4, &c).unwrap().value;
        let b = mu_reference(&p, 1e-2, &c).unwrap().value;
        assert!((b / a - 100f64.powf(1.0 / 1.5)).abs() < 1e-9);
        assert!(matches!(
            mu_reference(&ProcessSpec::<f64>::stable(1.7, 2).unwrap(), 1e-3, &c),
            Err(Error::MissingConstant(_))
        ));
    }

    #[test]
    fn inverse_stable_moments() {
        assert!((inverse_stable_moment(0.5, 1.0, 1.0).unwrap() - 1.0 / gamma(1.5)).abs() < 1e-12);
        assert_eq!(inverse_stable_moment(0.3, 0.0, 5.0).unwrap(), 1.0);
        assert!((inverse_stable_moment(0.5, 2.0, 4.0).unwrap() - 8.0).abs() < 1e-12);
        let (v, exact) = inverse_subordinator_moment(&SubordinatorSpec::Stable { beta: 0.5 }, 1.0, 1.0).unwrap();
        assert!(exact && (v - 1.0 / gamma(1.5)).abs() < 1e-12);
        let tempered = SubordinatorSpec::TemperedStable { beta: 0.5, theta: 1.0 };
        let (v, exact) = inverse_subordinator_moment(&tempered, 1.0, 1e-8).unwrap();
        assert!(!exact && (v / inverse_stable_moment(0.5, 1.0, 1e-8).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn clock_scales() {
        let c = ClockSpec::<f64>::InverseSubordinator(SubordinatorSpec::Stable { beta: 0.5 });
        assert!((clock_scale(&c, 1.5, 1e-3).unwrap() - 1e-3f64.powf(0.5 / 1.5)).abs() < 1e-12);
        let p = ClockSpec::<f64>::DeterministicPower { beta: 0.4 };
        assert!((clock_scale(&p, 2.0, 0.01).unwrap() - 0.01f64.powf(0.2)).abs() < 1e-12);
    }

    #[test]
    fn predicted_limits() {
        let c = cache();
        let disk = DomainSpec::<f64>::unit_ball(2).unwrap();
        let bm = ProcessSpec::<f64>::brownian(2).unwrap();
        let p = predicted_limit(&bm, &disk, NormalizerKind::EstimatedMu, &c).unwrap();
        assert!((p.value - 2.0 * PI).abs() < 1e-12);
        let big = disk.dilate(3.0).unwrap();
        let q = predicted_limit(&bm, &big, NormalizerKind::EstimatedMu, &c).unwrap();
        assert!((q.value / p.value - 3.0).abs() < 1e-12);
        let line = DomainSpec::<f64>::interval(0.0, 1.0).unwrap();
        let bm1 = ProcessSpec::<f64>::brownian(1).unwrap();
        assert_eq!(predicted_limit(&bm1, &line, NormalizerKind::ReferenceMu, &c).unwrap().value, 2.0);
        assert!(predicted_limit(&bm, &disk, NormalizerKind::ClockScale, &c).is_err());
        assert!(predicted_limit(&bm1, &disk, NormalizerKind::EstimatedMu, &c).is_err());

        let clock = ClockSpec::InverseSubordinator(SubordinatorSpec::Stable { beta: 0.5 });
        let tc = ProcessSpec::<f64>::time_changed(1.5, clock, 2).unwrap();
        let r = predicted_limit(&tc, &disk, NormalizerKind::ClockScale, &c).unwrap();
        let expect = stable_sup_mean_closed_form(1.5) * gamma(1.0 + 1.0 / 1.5) / gamma(1.0 + 0.5 / 1.5) * 2.0 * PI;
        assert!((r.value - expect).abs() < 1e-9);
        assert!(r.rel_stderr > 0.0);
    }

    #[test]
    fn time_changed_reference_factorises() {
        let c = cache();
        let clock = ClockSpec::InverseSubordinator(SubordinatorSpec::Stable { beta: 0.5 });
        let tc = ProcessSpec::<f64>::time_changed(1.5, clock.clone(), 2).unwrap();
        let t = 1e-3;
        let r = mu_reference(&tc, t, &c).unwrap().value;
        let expect = stable_sup_mean_closed_form(1.5) * inverse_stable_moment(0.5, 1.0 / 1.5, t).unwrap();
        assert!((r - expect).abs() < 1e-12);
        let scale = clock_scale(&clock, 1.5, t).unwrap();
        assert!((r / scale - stable_sup_mean_closed_form(1.5) * inverse_stable_factor(1.5, 0.5)).abs() < 1e-9);
    }

    #[test]
    fn theta_defaults() {
        assert_eq!(default_theta(&ProcessSpec::<f64>::brownian(2).unwrap()), Theta::Fixed(0.5));
        assert_eq!(default_theta(&ProcessSpec::<f64>::stable(1.0, 2).unwrap()), Theta::Free);
        let Theta::Fixed(th) = default_theta(&ProcessSpec::<f64>::stable(1.5, 2).unwrap()) else { panic!() };
        assert!((th - 1.0 / 3.0).abs() < 1e-12);
    }
}
