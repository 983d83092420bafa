use super::lamperti::{lamperti_zeta, zeta_step};
use super::subordinator::sample_inverse_subordinator;
use super::ClockSpec;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

/// Clock values `U_{k t / n}` for `k = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockPath {
    pub values: Vec<f64>,
    /// Upper bound on the per-value discretization error.
    pub bias_bound: f64,
    /// Whether the clock law has continuous paths.
    pub continuous: bool,
}

impl ClockPath {
    pub fn final_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Index of the first decrease, if any.
    pub fn first_decrease(&self) -> Option<usize> {
        self.values.windows(2).position(|w| w[1] < w[0]).map(|k| k + 1)
    }
}

/// Sample a clock path on the uniform grid of `[0, t]` with `n_steps` steps.
///
/// Inverse subordinators are read off a subordinator path with step
/// `1 / (n phi(1/t))`, the natural time scale of `E_t`; Lamperti inverses use
/// an `r`-grid with step `1 / (n phi(1))`.
pub fn sample_clock<T: Real>(
    clock: &ClockSpec<T>,
    t: T,
    n_steps: usize,
    rng: &mut RngStream,
) -> Result<ClockPath> {
    clock.validate()?;
    if !(t > T::zero()) || n_steps == 0 {
        return Err(Error::param("need t > 0 and n_steps >= 1"));
    }
    let t = t.as_f64();
    let levels: Vec<f64> = (0..=n_steps).map(|k| t * k as f64 / n_steps as f64).collect();
    let continuous = clock.is_continuous();
    let mut out = match clock.to_f64() {
        ClockSpec::DeterministicPower { beta } => ClockPath {
            values: levels.iter().map(|s| s.powf(beta)).collect(),
            bias_bound: 0.0,
            continuous,
        },
        ClockSpec::InverseSubordinator(sub) => {
            let h = 1.0 / (n_steps as f64 * sub.laplace_exponent(1.0 / t));
            let v = sample_inverse_subordinator(&sub, &levels[1..], h, rng)?;
            let mut values = Vec::with_capacity(n_steps + 1);
            values.push(0.0);
            values.extend(v.values);
            ClockPath {
                values,
                bias_bound: h,
                continuous,
            }
        }
        ClockSpec::LampertiInverse { sub, beta, x0 } => {
            let h = zeta_step(&sub, n_steps);
            let mut values = lamperti_zeta(&sub, beta, x0, &levels, h, rng)?;
            values[0] = 0.0;
            ClockPath {
                values,
                bias_bound: h * t.powf(beta),
                continuous,
            }
        }
    };
    if let Some(k) = out.first_decrease() {
        return Err(Error::ClockNotMonotone(k));
    }
    out.values.shrink_to_fit();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::SubordinatorSpec;

    #[test]
    fn deterministic_power_clock() {
        let mut rng = RngStream::new(0, 0);
        let c = sample_clock(&ClockSpec::DeterministicPower { beta: 0.5f64 }, 4.0, 4, &mut rng).unwrap();
        assert_eq!(c.values, vec![0.0, 1.0, 2.0f64.sqrt(), 3.0f64.sqrt(), 2.0]);
    }

    #[test]
    fn inverse_stable_clock_is_continuous_and_monotone() {
        let spec = ClockSpec::InverseSubordinator(SubordinatorSpec::Stable { beta: 0.5f64 });
        let n = 256;
        let mut max_jump: f64 = 0.0;
        for i in 0..200 {
            let mut rng = RngStream::new(9, i);
            let c = sample_clock(&spec, 1.0, n, &mut rng).unwrap();
            assert_eq!(c.values[0], 0.0);
            assert!(c.first_decrease().is_none());
            for w in c.values.windows(2) {
                max_jump = max_jump.max(w[1] - w[0]);
            }
        }
        // Increments of E over 1/256 rarely exceed a few multiples of (1/256)^0.5.
        assert!(max_jump < 0.5, "{max_jump}");
    }
}
