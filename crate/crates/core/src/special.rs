//! Special functions and quadrature rules.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Upper tail of the standard normal law.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Surface measure of the unit sphere in `d` dimensions (`d * unit_ball_volume(d)`).
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// `E|Z|^p` for the symmetric stable law with characteristic function
/// `exp(-|xi|^alpha)`, valid for `-1 < p < alpha`.
pub fn stable_abs_moment(alpha: f64, p: f64) -> f64 {
    let tail = if alpha == 2.0 {
        1.0
    } else {
        gamma(1.0 - p / alpha) / gamma(1.0 - p / 2.0)
    };
    2f64.powf(p) * gamma((1.0 + p) / 2.0) / PI.sqrt() * tail
}

/// `E[sup_{s<=1} Y_s]` for the symmetric stable process with exponent `|xi|^alpha`,
/// `1 < alpha <= 2`, via Spitzer's identity `E[sup] = alpha E[Y_1^+]`.
pub fn stable_sup_mean_closed_form(alpha: f64) -> f64 {
    alpha * stable_abs_moment(alpha, 1.0) / 2.0
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = (p1, p0);
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_half_is_sqrt_pi() {
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(gamma(1.5), PI.sqrt() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn normal_tail_values() {
        assert_relative_eq!(normal_sf(0.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(normal_sf(1.959963984540054), 0.025, max_relative = 1e-9);
    }

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_and_cauchy_moments() {
        // N(0, 2): E|Z| = 2 / sqrt(pi), E Z^2 = 2.
        assert_relative_eq!(stable_abs_moment(2.0, 1.0), 2.0 / PI.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(stable_abs_moment(2.0, 2.0), 2.0, max_relative = 1e-12);
        // Standard Cauchy: E|Z|^{1/2} = sqrt(2).
        assert_relative_eq!(stable_abs_moment(1.0, 0.5), 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn sup_mean_brownian_case() {
        assert_relative_eq!(stable_sup_mean_closed_form(2.0), 2.0 / PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let sum: f64 = w.iter().sum();
        assert_relative_eq!(sum, 2.0, max_relative = 1e-14);
        let i14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(i14, 2.0 / 15.0, max_relative = 1e-13);
    }
}
