//! Stable random variates.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

/// Symmetric stable variate with characteristic function `exp(-|xi|^alpha)`
/// (Chambers–Mallows–Stuck).
pub fn symmetric_stable(alpha: f64, rng: &mut RngStream) -> f64 {
    if alpha == 2.0 {
        return std::f64::consts::SQRT_2 * rng.normal();
    }
    let v = PI * (rng.uniform() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w = rng.exp1();
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    a * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Positive stable variate with Laplace transform `exp(-lambda^beta)`,
/// `beta` in `(0, 1]` (Kanter's representation).
pub fn positive_stable(beta: f64, rng: &mut RngStream) -> f64 {
    if beta >= 1.0 {
        return 1.0;
    }
    let u = PI * rng.uniform();
    let w = rng.exp1();
    let one_m = 1.0 - beta;
    let ln_a = (beta / one_m) * (beta * u).sin().ln() + (one_m * u).sin().ln()
        - u.sin().ln() / one_m;
    ((one_m / beta) * (ln_a - w.ln())).exp()
}

/// Increment of the isotropic stable process over `dt`, written into `out`
/// (`out.len()` is the dimension). One dimension uses CMS, higher dimensions
/// subordinate a Gaussian to a positive `alpha/2`-stable variable.
pub fn sample_stable_increment<T: Real>(
    alpha: T,
    dt: T,
    out: &mut [T],
    rng: &mut RngStream,
) -> Result<()> {
    let (a, h) = (alpha.as_f64(), dt.as_f64());
    if !(a > 0.0 && a <= 2.0) {
        return Err(Error::param(format!("alpha = {a} outside (0, 2]")));
    }
    if !(h > 0.0) {
        return Err(Error::param("dt must be positive"));
    }
    if out.len() == 1 {
        out[0] = T::lit(h.powf(1.0 / a) * symmetric_stable(a, rng));
    } else {
        subordinated_increment(a, h, out, rng);
    }
    Ok(())
}

/// Isotropic increment via Gaussian subordination in any dimension.
pub fn subordinated_increment<T: Real>(alpha: f64, dt: f64, out: &mut [T], rng: &mut RngStream) {
    let s = if alpha == 2.0 {
        dt
    } else {
        dt.powf(2.0 / alpha) * positive_stable(alpha / 2.0, rng)
    };
    let sd = (2.0 * s).sqrt();
    for o in out.iter_mut() {
        *o = T::lit(sd * rng.normal());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_two_sample;

    #[test]
    fn gaussian_case_has_variance_two_dt() {
        let mut rng = RngStream::new(1, 0);
        let n = 1_000_000;
        let mut x = [0.0f64];
        let mut s2 = 0.0;
        for _ in 0..n {
            sample_stable_increment(2.0, 0.5, &mut x, &mut rng).unwrap();
            s2 += x[0] * x[0];
        }
        assert!((s2 / n as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn cauchy_half_mass_in_unit_interval() {
        let mut rng = RngStream::new(2, 0);
        let n = 200_000;
        let mut x = [0.0f64];
        let mut hits = 0usize;
        for _ in 0..n {
            sample_stable_increment(1.0, 1.0, &mut x, &mut rng).unwrap();
            hits += (x[0].abs() <= 1.0) as usize;
        }
        let p = hits as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * se, "p = {p}");
    }

    #[test]
    fn cms_and_subordination_agree_in_law() {
        let n = 100_000;
        let mut r1 = RngStream::new(3, 0);
        let mut r2 = RngStream::new(3, 1);
        let a: Vec<f64> = (0..n).map(|_| symmetric_stable(1.5, &mut r1)).collect();
        let mut buf = [0.0f64];
        let b: Vec<f64> = (0..n)
            .map(|_| {
                subordinated_increment(1.5, 1.0, &mut buf, &mut r2);
                buf[0]
            })
            .collect();
        let ks = ks_two_sample(&a, &b);
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn positive_stable_laplace_transform() {
        let mut rng = RngStream::new(4, 0);
        let n = 400_000;
        let vals: Vec<f64> = (0..n).map(|_| (-positive_stable(0.5, &mut rng)).exp()).collect();
        let m = vals.iter().sum::<f64>() / n as f64;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m - (-1.0f64).exp()).abs() < 3.0 * (v / n as f64).sqrt());
    }

    #[test]
    fn rejects_bad_alpha() {
        let mut rng = RngStream::new(5, 0);
        let mut x = [0.0f64];
        assert!(sample_stable_increment(2.5, 1.0, &mut x, &mut rng).is_err());
        assert!(sample_stable_increment(0.0, 1.0, &mut x, &mut rng).is_err());
    }
}
