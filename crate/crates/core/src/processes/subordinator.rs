use rand_distr::{Distribution, Poisson};

use super::stable::positive_stable;
use super::{JumpLaw, PathGrid, SubordinatorSpec};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

const TEMPERED_RETRY_CAP: usize = 10_000;
/// Longest subordinator path an inverse-clock evaluation may extend to.
pub(crate) const EXTENSION_CAP: usize = 10_000_000;

/// Exact increment of the subordinator over `dt`.
pub(crate) fn increment(spec: &SubordinatorSpec<f64>, dt: f64, rng: &mut RngStream) -> Result<f64> {
    match spec {
        SubordinatorSpec::Stable { beta } => Ok(dt.powf(1.0 / beta) * positive_stable(*beta, rng)),
        SubordinatorSpec::TemperedStable { beta, theta } => {
            // Sub-steps keep the acceptance rate exp(-h theta^beta) above 1/e.
            let m = (dt * theta.powf(*beta)).ceil().max(1.0) as usize;
            let h = dt / m as f64;
            let scale = h.powf(1.0 / beta);
            let mut total = 0.0;
            for _ in 0..m {
                let mut tries = 0;
                loop {
                    let s = scale * positive_stable(*beta, rng);
                    if rng.uniform() < (-theta * s).exp() {
                        total += s;
                        break;
                    }
                    tries += 1;
                    if tries >= TEMPERED_RETRY_CAP {
                        return Err(Error::RetryCapExceeded(tries));
                    }
                }
            }
            Ok(total)
        }
        SubordinatorSpec::DriftCompoundPoisson { drift, rate, jump } => {
            let mut s = drift * dt;
            let lambda = rate * dt;
            if lambda > 0.0 {
                let count = Poisson::new(lambda)
                    .map_err(|e| Error::param(e.to_string()))?
                    .sample(rng) as u64;
                for _ in 0..count {
                    s += match jump {
                        JumpLaw::Exponential { mean } => mean * rng.exp1(),
                        JumpLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.uniform(),
                    };
                }
            }
            Ok(s)
        }
    }
}

/// Subordinator path on the grid `k t / n`, `k = 0..=n`.
pub fn sample_subordinator_path<T: Real>(
    spec: &SubordinatorSpec<T>,
    t: T,
    n_steps: usize,
    rng: &mut RngStream,
) -> Result<PathGrid<T>> {
    spec.validate()?;
    if !(t > T::zero()) || n_steps == 0 {
        return Err(Error::param("need t > 0 and n_steps >= 1"));
    }
    let s64 = spec.to_f64();
    let dt = t.as_f64() / n_steps as f64;
    let mut path = PathGrid::with_capacity(&[T::zero()], n_steps + 1);
    let mut s = 0.0;
    for k in 1..=n_steps {
        s += increment(&s64, dt, rng)?;
        path.push(T::lit(k as f64 * dt), &[T::lit(s)], None);
    }
    Ok(path)
}

/// First grid time at which an increasing path strictly exceeds `t`.
///
/// The result overestimates the continuous first passage by at most one grid
/// step. Fails when the path never exceeds `t`.
pub fn inverse_clock<T: Real>(path: &PathGrid<T>, t: T) -> Result<T> {
    let k = (0..path.len())
        .find(|&k| path.position(k)[0] > t)
        .ok_or(Error::ExtensionCap(path.len()))?;
    Ok(path.times()[k])
}

/// Inverse subordinator evaluated at nondecreasing `levels`.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseClockValues {
    pub values: Vec<f64>,
    /// Subordinator grid step; each value overestimates by at most this.
    pub step: f64,
    pub steps_used: usize,
}

/// Simulate `S` with step `h` until it exceeds the last level and record the
/// first grid time above each level.
pub fn sample_inverse_subordinator<T: Real>(
    spec: &SubordinatorSpec<T>,
    levels: &[T],
    h: T,
    rng: &mut RngStream,
) -> Result<InverseClockValues> {
    spec.validate()?;
    if !(h > T::zero()) {
        return Err(Error::param("grid step must be positive"));
    }
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("levels must be nondecreasing"));
    }
    let s64 = spec.to_f64();
    let h = h.as_f64();
    let mut values = Vec::with_capacity(levels.len());
    let (mut s, mut k) = (0.0, 0usize);
    for level in levels {
        let level = level.as_f64();
        while !(s > level) {
            if k >= EXTENSION_CAP {
                return Err(Error::ExtensionCap(k));
            }
            s += increment(&s64, h, rng)?;
            k += 1;
        }
        values.push(k as f64 * h);
    }
    Ok(InverseClockValues {
        values,
        step: h,
        steps_used: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn laplace_mean(spec: &SubordinatorSpec<f64>, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = RngStream::new(seed, 0);
        let xs: Vec<f64> = (0..n).map(|_| (-increment(spec, 1.0, &mut rng).unwrap()).exp()).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (m, (v / n as f64).sqrt())
    }

    #[test]
    fn stable_laplace_transform() {
        let spec = SubordinatorSpec::Stable { beta: 0.5 };
        let (m, se) = laplace_mean(&spec, 1_000_000, 11);
        assert!((m - (-1.0f64).exp()).abs() < 3.0 * se, "{m} {se}");
    }

    #[test]
    fn tempered_laplace_transform() {
        let spec = SubordinatorSpec::TemperedStable { beta: 0.5, theta: 1.0 };
        let (m, se) = laplace_mean(&spec, 400_000, 12);
        let expect = (-(2.0f64.sqrt() - 1.0)).exp();
        assert!((m - expect).abs() < 3.0 * se, "{m} vs {expect}");
        assert!((spec.laplace_exponent(1.0) - (2.0f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn drift_compound_poisson_laplace_transform() {
        let spec = SubordinatorSpec::DriftCompoundPoisson {
            drift: 0.3,
            rate: 2.0,
            jump: JumpLaw::Exponential { mean: 0.5 },
        };
        let (m, se) = laplace_mean(&spec, 400_000, 13);
        let expect = (-spec.laplace_exponent(1.0)).exp();
        assert!((m - expect).abs() < 3.0 * se, "{m} vs {expect}");
    }

    #[test]
    fn drift_only_path_is_linear() {
        let spec = SubordinatorSpec::DriftCompoundPoisson {
            drift: 2.0,
            rate: 0.0,
            jump: JumpLaw::Exponential { mean: 1.0 },
        };
        let mut rng = RngStream::new(1, 0);
        let p = sample_subordinator_path(&spec, 1.0f64, 16, &mut rng).unwrap();
        for k in 0..p.len() {
            assert!((p.position(k)[0] - 2.0 * p.times()[k]).abs() < 1e-12);
        }
        let e = inverse_clock(&p, 1.0).unwrap();
        assert!((e - 0.5).abs() <= 1.0 / 16.0 + 1e-12);
    }

    #[test]
    fn inverse_clock_is_monotone() {
        let spec = SubordinatorSpec::Stable { beta: 0.6 };
        let mut rng = RngStream::new(2, 0);
        let p = sample_subordinator_path(&spec, 5.0f64, 512, &mut rng).unwrap();
        assert!(p.is_nondecreasing());
        let top = p.end()[0];
        let mut prev = 0.0;
        for i in 1..20 {
            let e = inverse_clock(&p, top * i as f64 / 21.0).unwrap();
            assert!(e >= prev);
            prev = e;
        }
        assert!(inverse_clock(&p, top + 1.0).is_err());
    }

    #[test]
    fn inverse_stable_mean_matches_gamma_ratio() {
        let spec = SubordinatorSpec::Stable { beta: 0.5 };
        let n = 20_000;
        let mut acc = 0.0;
        for i in 0..n {
            let mut rng = RngStream::new(77, i);
            let v = sample_inverse_subordinator(&spec, &[1.0f64], 1e-3, &mut rng).unwrap();
            acc += v.values[0];
        }
        let expect = 1.0 / gamma(1.5);
        assert!((acc / n as f64 / expect - 1.0).abs() < 0.02);
    }
}
