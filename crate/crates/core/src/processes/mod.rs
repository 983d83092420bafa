//! Exact-in-law samplers for the process families.
//!
//! Conventions: `brownian` has characteristic exponent `|xi|^2` (per-coordinate
//! variance `2t`) unless [`BrownianScale::Standard`] is chosen; isotropic
//! stable processes have exponent `|xi|^alpha`; fractional Brownian motion has
//! `E[B_t^2] = t^{2H}` per coordinate; subordinators are described by their
//! Laplace exponent `phi` with `E[exp(-lambda S_t)] = exp(-t phi(lambda))`.

mod clock;
mod fbm;
mod lamperti;
mod path;
mod sampler;
pub mod stable;
mod subordinator;

pub use clock::{sample_clock, ClockPath};
pub use fbm::FbmPlan;
pub use lamperti::{lamperti_xi, lamperti_zeta};
pub use path::{running_sup_first_coordinate, PathGrid};
pub use sampler::{time_changed_path, PathSampler, Step};
pub use stable::sample_stable_increment;
pub use subordinator::{inverse_clock, sample_inverse_subordinator, sample_subordinator_path};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Variance convention for the `brownian` family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BrownianScale {
    /// Exponent `|xi|^2`: per-coordinate variance `2t`, generator `Delta`.
    #[default]
    HeatKernel,
    /// Unit variance per unit time, generator `Delta / 2`.
    Standard,
}

impl BrownianScale {
    /// Per-coordinate variance per unit time.
    pub fn variance_rate(self) -> f64 {
        match self {
            BrownianScale::HeatKernel => 2.0,
            BrownianScale::Standard => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum JumpLaw<T> {
    Exponential { mean: T },
    Uniform { lo: T, hi: T },
}

impl<T: Real> JumpLaw<T> {
    fn laplace(&self, lambda: f64) -> f64 {
        match self {
            JumpLaw::Exponential { mean } => 1.0 / (1.0 + mean.as_f64() * lambda),
            JumpLaw::Uniform { lo, hi } => {
                let (a, b) = (lo.as_f64(), hi.as_f64());
                if lambda == 0.0 {
                    1.0
                } else {
                    ((-lambda * a).exp() - (-lambda * b).exp()) / (lambda * (b - a))
                }
            }
        }
    }

    fn mean(&self) -> f64 {
        match self {
            JumpLaw::Exponential { mean } => mean.as_f64(),
            JumpLaw::Uniform { lo, hi } => 0.5 * (lo.as_f64() + hi.as_f64()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SubordinatorSpec<T> {
    /// `phi(lambda) = lambda^beta`.
    Stable { beta: T },
    /// `phi(lambda) = (lambda + theta)^beta - theta^beta`.
    TemperedStable { beta: T, theta: T },
    /// `phi(lambda) = b lambda + rate (1 - E exp(-lambda J))`.
    DriftCompoundPoisson { drift: T, rate: T, jump: JumpLaw<T> },
}

impl<T: Real> SubordinatorSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: T| b > T::zero() && b < T::one();
        match self {
            SubordinatorSpec::Stable { beta } if unit(*beta) => Ok(()),
            SubordinatorSpec::TemperedStable { beta, theta } if unit(*beta) && *theta > T::zero() => Ok(()),
            SubordinatorSpec::DriftCompoundPoisson { drift, rate, jump } => {
                if !(*drift >= T::zero() && *rate >= T::zero()) {
                    return Err(Error::param("drift and rate must be nonnegative"));
                }
                if *drift == T::zero() && *rate == T::zero() {
                    return Err(Error::param("subordinator is identically zero"));
                }
                match jump {
                    JumpLaw::Exponential { mean } if *mean > T::zero() => Ok(()),
                    JumpLaw::Uniform { lo, hi } if *lo >= T::zero() && *hi > *lo => Ok(()),
                    _ => Err(Error::param("invalid jump law")),
                }
            }
            _ => Err(Error::param("subordinator needs beta in (0,1) and theta > 0")),
        }
    }

    /// The Laplace exponent `phi`.
    pub fn laplace_exponent(&self, lambda: T) -> T {
        let l = lambda.as_f64();
        T::lit(match self {
            SubordinatorSpec::Stable { beta } => l.powf(beta.as_f64()),
            SubordinatorSpec::TemperedStable { beta, theta } => {
                let (b, th) = (beta.as_f64(), theta.as_f64());
                (l + th).powf(b) - th.powf(b)
            }
            SubordinatorSpec::DriftCompoundPoisson { drift, rate, jump } => {
                drift.as_f64() * l + rate.as_f64() * (1.0 - jump.laplace(l))
            }
        })
    }

    /// `E[S_1] = phi'(0+)`, `None` when infinite.
    pub fn mean(&self) -> Option<T> {
        match self {
            SubordinatorSpec::Stable { .. } => None,
            SubordinatorSpec::TemperedStable { beta, theta } => {
                Some(*beta * theta.powf(*beta - T::one()))
            }
            SubordinatorSpec::DriftCompoundPoisson { drift, rate, jump } => {
                Some(*drift + *rate * T::lit(jump.mean()))
            }
        }
    }

    /// Whether `phi(infinity) = infinity`, i.e. the inverse is continuous.
    pub fn strictly_increasing(&self) -> bool {
        match self {
            SubordinatorSpec::Stable { .. } | SubordinatorSpec::TemperedStable { .. } => true,
            SubordinatorSpec::DriftCompoundPoisson { drift, .. } => *drift > T::zero(),
        }
    }

    /// Index of regular variation of `phi` at infinity.
    pub fn index_at_infinity(&self) -> T {
        match self {
            SubordinatorSpec::Stable { beta } | SubordinatorSpec::TemperedStable { beta, .. } => *beta,
            SubordinatorSpec::DriftCompoundPoisson { drift, .. } => {
                if *drift > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            SubordinatorSpec::Stable { beta } => format!("stable(beta={beta})"),
            SubordinatorSpec::TemperedStable { beta, theta } => {
                format!("tempered_stable(beta={beta},theta={theta})")
            }
            SubordinatorSpec::DriftCompoundPoisson { drift, rate, jump } => {
                let j = match jump {
                    JumpLaw::Exponential { mean } => format!("exp(mean={mean})"),
                    JumpLaw::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
                };
                format!("drift_cp(b={drift},rate={rate},jump={j})")
            }
        }
    }

    pub(crate) fn to_f64(&self) -> SubordinatorSpec<f64> {
        match self {
            SubordinatorSpec::Stable { beta } => SubordinatorSpec::Stable { beta: beta.as_f64() },
            SubordinatorSpec::TemperedStable { beta, theta } => SubordinatorSpec::TemperedStable {
                beta: beta.as_f64(),
                theta: theta.as_f64(),
            },
            SubordinatorSpec::DriftCompoundPoisson { drift, rate, jump } => {
                SubordinatorSpec::DriftCompoundPoisson {
                    drift: drift.as_f64(),
                    rate: rate.as_f64(),
                    jump: match jump {
                        JumpLaw::Exponential { mean } => JumpLaw::Exponential { mean: mean.as_f64() },
                        JumpLaw::Uniform { lo, hi } => JumpLaw::Uniform {
                            lo: lo.as_f64(),
                            hi: hi.as_f64(),
                        },
                    },
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClockSpec<T> {
    /// `E_t = inf{s : S_s > t}`.
    InverseSubordinator(SubordinatorSpec<T>),
    /// `zeta_t = inf{s : xi_s > t}` for the Lamperti process `xi` started at `x0`.
    LampertiInverse {
        sub: SubordinatorSpec<T>,
        beta: T,
        x0: T,
    },
    /// `U_t = t^beta`.
    DeterministicPower { beta: T },
}

impl<T: Real> ClockSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: T| b > T::zero() && b < T::one();
        match self {
            ClockSpec::InverseSubordinator(sub) => sub.validate(),
            ClockSpec::LampertiInverse { sub, beta, x0 } => {
                sub.validate()?;
                if !unit(*beta) {
                    return Err(Error::param("Lamperti beta must lie in (0,1)"));
                }
                if !(*x0 > T::zero()) {
                    return Err(Error::param("Lamperti x0 must be positive"));
                }
                if sub.mean().is_none() {
                    return Err(Error::param("Lamperti clock needs E[S_1] < infinity"));
                }
                Ok(())
            }
            ClockSpec::DeterministicPower { beta } if unit(*beta) => Ok(()),
            ClockSpec::DeterministicPower { .. } => Err(Error::param("clock beta must lie in (0,1)")),
        }
    }

    /// Whether clock paths are continuous.
    pub fn is_continuous(&self) -> bool {
        match self {
            ClockSpec::InverseSubordinator(sub) | ClockSpec::LampertiInverse { sub, .. } => {
                sub.strictly_increasing()
            }
            ClockSpec::DeterministicPower { .. } => true,
        }
    }

    /// Self-similarity index of the clock, when it is self-similar.
    pub fn self_similarity_index(&self) -> Option<T> {
        match self {
            ClockSpec::InverseSubordinator(SubordinatorSpec::Stable { beta }) => Some(*beta),
            ClockSpec::InverseSubordinator(_) => None,
            ClockSpec::LampertiInverse { beta, .. } | ClockSpec::DeterministicPower { beta } => Some(*beta),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ClockSpec::InverseSubordinator(sub) => format!("inverse({})", sub.name()),
            ClockSpec::LampertiInverse { sub, beta, x0 } => {
                format!("lamperti_inverse({},beta={beta},x0={x0})", sub.name())
            }
            ClockSpec::DeterministicPower { beta } => format!("power(beta={beta})"),
        }
    }

    pub(crate) fn to_f64(&self) -> ClockSpec<f64> {
        match self {
            ClockSpec::InverseSubordinator(s) => ClockSpec::InverseSubordinator(s.to_f64()),
            ClockSpec::LampertiInverse { sub, beta, x0 } => ClockSpec::LampertiInverse {
                sub: sub.to_f64(),
                beta: beta.as_f64(),
                x0: x0.as_f64(),
            },
            ClockSpec::DeterministicPower { beta } => ClockSpec::DeterministicPower { beta: beta.as_f64() },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProcessFamily<T> {
    Brownian { scale: BrownianScale },
    IsotropicStable { alpha: T },
    FractionalBrownian { hurst: T },
    /// `X_t = Y_{U_t}` with `Y` isotropic `alpha`-stable and `U` an independent clock.
    TimeChanged { alpha: T, clock: ClockSpec<T> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSpec<T> {
    family: ProcessFamily<T>,
    dim: usize,
}

impl<T: Real> ProcessSpec<T> {
    pub fn new(family: ProcessFamily<T>, dim: usize) -> Result<Self> {
        let out = Self { family, dim };
        out.validate()?;
        Ok(out)
    }

    pub fn brownian(dim: usize) -> Result<Self> {
        Self::new(
            ProcessFamily::Brownian {
                scale: BrownianScale::HeatKernel,
            },
            dim,
        )
    }

    pub fn brownian_standard(dim: usize) -> Result<Self> {
        Self::new(
            ProcessFamily::Brownian {
                scale: BrownianScale::Standard,
            },
            dim,
        )
    }

    pub fn stable(alpha: T, dim: usize) -> Result<Self> {
        Self::new(ProcessFamily::IsotropicStable { alpha }, dim)
    }

    pub fn fbm(hurst: T, dim: usize) -> Result<Self> {
        Self::new(ProcessFamily::FractionalBrownian { hurst }, dim)
    }

    pub fn time_changed(alpha: T, clock: ClockSpec<T>, dim: usize) -> Result<Self> {
        Self::new(ProcessFamily::TimeChanged { alpha, clock }, dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        match &self.family {
            ProcessFamily::Brownian { .. } => Ok(()),
            ProcessFamily::IsotropicStable { alpha } => {
                if *alpha > T::zero() && *alpha <= T::lit(2.0) {
                    Ok(())
                } else {
                    Err(Error::param(format!("alpha = {alpha} outside (0, 2]")))
                }
            }
            ProcessFamily::FractionalBrownian { hurst } => {
                if *hurst > T::zero() && *hurst < T::one() {
                    Ok(())
                } else {
                    Err(Error::param(format!("hurst = {hurst} outside (0, 1)")))
                }
            }
            ProcessFamily::TimeChanged { alpha, clock } => {
                if !(*alpha > T::one() && *alpha <= T::lit(2.0)) {
                    return Err(Error::param(format!(
                        "time-changed inner alpha = {alpha} outside (1, 2]"
                    )));
                }
                clock.validate()
            }
        }
    }

    pub fn family(&self) -> &ProcessFamily<T> {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The same family in dimension one (the law of a single coordinate).
    pub fn marginal(&self) -> Self {
        Self {
            family: self.family.clone(),
            dim: 1,
        }
    }

    /// Stability index when the family has heavy tails (`alpha < 2`).
    pub fn tail_index(&self) -> Option<T> {
        match &self.family {
            ProcessFamily::IsotropicStable { alpha } | ProcessFamily::TimeChanged { alpha, .. }
                if *alpha < T::lit(2.0) =>
            {
                Some(*alpha)
            }
            _ => None,
        }
    }

    /// Index `H` with `X_{ct} =d c^H X_t`, when it exists.
    pub fn self_similarity_index(&self) -> Option<T> {
        match &self.family {
            ProcessFamily::Brownian { .. } => Some(T::lit(0.5)),
            ProcessFamily::IsotropicStable { alpha } => Some(T::one() / *alpha),
            ProcessFamily::FractionalBrownian { hurst } => Some(*hurst),
            ProcessFamily::TimeChanged { alpha, clock } => {
                clock.self_similarity_index().map(|b| b / *alpha)
            }
        }
    }

    /// Per-coordinate variance per unit time of Brownian families.
    pub fn gaussian_variance_rate(&self) -> Option<f64> {
        match &self.family {
            ProcessFamily::Brownian { scale } => Some(scale.variance_rate()),
            ProcessFamily::IsotropicStable { alpha } if *alpha == T::lit(2.0) => Some(2.0),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.family {
            ProcessFamily::Brownian {
                scale: BrownianScale::HeatKernel,
            } => "brownian".into(),
            ProcessFamily::Brownian {
                scale: BrownianScale::Standard,
            } => "brownian(standard)".into(),
            ProcessFamily::IsotropicStable { alpha } => format!("isotropic_stable(alpha={alpha})"),
            ProcessFamily::FractionalBrownian { hurst } => format!("fbm(H={hurst})"),
            ProcessFamily::TimeChanged { alpha, clock } => {
                format!("time_changed(alpha={alpha},{})", clock.name())
            }
        }
    }
}

#[cfg(test)]
mod tests;
