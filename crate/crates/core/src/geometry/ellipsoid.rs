//! Nearest-point and surface integrals for axis-aligned ellipsoids.
//!
//! Inputs are in the ellipsoid's local frame (centered, axes along the
//! coordinate directions). Everything runs in `f64`.

use std::f64::consts::PI;

use crate::special::gauss_legendre;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Signed distance (positive inside) and the nearest boundary point.
pub fn nearest_point(axes: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let d = axes.len();
    let q: f64 = axes.iter().zip(y).map(|(e, v)| (v / e).powi(2)).sum();
    let inside = q < 1.0;
    let z: Vec<f64> = y.iter().map(|v| v.abs()).collect();

    let e_min = axes.iter().cloned().fold(f64::INFINITY, f64::min);
    let positive: Vec<usize> = (0..d).filter(|&i| z[i] > 0.0).collect();

    let mut best = if positive.is_empty() {
        // Center: the nearest point lies along a smallest axis.
        let j = (0..d).find(|&i| axes[i] == e_min).unwrap();
        let mut p = vec![0.0; d];
        p[j] = e_min;
        p
    } else {
        let t = secular_root(axes, &z, &positive);
        let degenerate = inside && t < -e_min * e_min;
        match degenerate.then(|| degenerate_point(axes, &z, e_min)).flatten() {
            Some(p) => p,
            None => (0..d)
                .map(|i| {
                    if z[i] > 0.0 {
                        axes[i] * axes[i] * z[i] / (t + axes[i] * axes[i])
                    } else {
                        0.0
                    }
                })
                .collect(),
        }
    };
    for i in 0..d {
        best[i] = best[i].copysign(if y[i] == 0.0 { 1.0 } else { y[i] });
    }
    let dist = best
        .iter()
        .zip(y)
        .map(|(p, v)| (p - v).powi(2))
        .sum::<f64>()
        .sqrt();
    (if inside { dist } else { -dist }, best)
}

// Root of sum_i (e_i z_i / (t + e_i^2))^2 = 1 over t > -min_{z_i > 0} e_i^2.
fn secular_root(axes: &[f64], z: &[f64], positive: &[usize]) -> f64 {
    let k = *positive
        .iter()
        .min_by(|&&a, &&b| axes[a].total_cmp(&axes[b]))
        .unwrap();
    let pole = -axes[k] * axes[k];
    let f = |t: f64| -> (f64, f64) {
        let mut v = -1.0;
        let mut dv = 0.0;
        for &i in positive {
            let e2 = axes[i] * axes[i];
            let r = axes[i] * z[i] / (t + e2);
            v += r * r;
            dv -= 2.0 * r * r / (t + e2);
        }
        (v, dv)
    };
    // F is convex and decreasing, so Newton from the left of the root is monotone.
    let mut t = pole + axes[k] * z[k];
    let mut lo = pole;
    let mut hi = positive
        .iter()
        .map(|&i| axes[i] * z[i])
        .fold(0.0, f64::max)
        * (positive.len() as f64).sqrt();
    for _ in 0..NEWTON_MAX_ITER {
        let (v, dv) = f(t);
        if v > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        let mut next = t - v / dv;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= NEWTON_TOL * (1.0 + t.abs()) {
            return next;
        }
        t = next;
    }
    // Bisection safeguard when Newton has not settled.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= NEWTON_TOL * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

// Interior point on a symmetry hyperplane of the smallest axes whose nearest
// boundary point leaves that hyperplane.
fn degenerate_point(axes: &[f64], z: &[f64], e_min: f64) -> Option<Vec<f64>> {
    let d = axes.len();
    let mut p = vec![0.0; d];
    let mut s = 0.0;
    for i in 0..d {
        if axes[i] > e_min {
            p[i] = axes[i] * axes[i] * z[i] / (axes[i] * axes[i] - e_min * e_min);
            s += (p[i] / axes[i]).powi(2);
        } else if z[i] > 0.0 {
            return None;
        }
    }
    if s >= 1.0 {
        return None;
    }
    let j = (0..d).find(|&i| axes[i] == e_min)?;
    p[j] = e_min * (1.0 - s).sqrt();
    Some(p)
}

/// Sum of principal curvatures of the ellipsoid at boundary point `p`.
pub fn curvature_sum(axes: &[f64], p: &[f64]) -> f64 {
    // Implicit F = sum x_i^2/e_i^2 - 1: g = grad F, H = diag(2/e_i^2).
    let g: Vec<f64> = axes.iter().zip(p).map(|(e, x)| 2.0 * x / (e * e)).collect();
    let g2: f64 = g.iter().map(|v| v * v).sum();
    let trace: f64 = axes.iter().map(|e| 2.0 / (e * e)).sum();
    let ghg: f64 = g.iter().zip(axes).map(|(gi, e)| gi * gi * 2.0 / (e * e)).sum();
    (g2 * trace - ghg) / g2.powf(1.5)
}

/// Perimeter of an ellipse via the arithmetic-geometric mean.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let (mut an, mut bn) = (a.max(b), a.min(b));
    let mut sum = 0.5 * (an * an - bn * bn);
    let mut pow = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (an - bn);
        let next_a = 0.5 * (an + bn);
        bn = (an * bn).sqrt();
        an = next_a;
        pow *= 2.0;
        sum += pow * c * c;
        if c.abs() < 1e-17 * an {
            break;
        }
    }
    let major = a.max(b);
    2.0 * PI * (major * major - sum) / an
}

/// Surface area and total mean curvature `int (k1 + k2)/2 dA` of a 3-ellipsoid.
pub fn surface_integrals_3d(axes: &[f64]) -> (f64, f64) {
    let (a, b, c) = (axes[0], axes[1], axes[2]);
    let (nodes, weights) = gauss_legendre(96);
    let m = 192;
    let (mut area, mut mean) = (0.0, 0.0);
    for (x, w) in nodes.iter().zip(&weights) {
        let theta = 0.5 * PI * (x + 1.0);
        let (st, ct) = theta.sin_cos();
        for k in 0..m {
            let phi = 2.0 * PI * k as f64 / m as f64;
            let (sp, cp) = phi.sin_cos();
            let dt = [a * ct * cp, b * ct * sp, -c * st];
            let dp = [-a * st * sp, b * st * cp, 0.0];
            let cross = [
                dt[1] * dp[2] - dt[2] * dp[1],
                dt[2] * dp[0] - dt[0] * dp[2],
                dt[0] * dp[1] - dt[1] * dp[0],
            ];
            let jac = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
            let dw = w * 0.5 * PI * (2.0 * PI / m as f64) * jac;
            let p = [a * st * cp, b * st * sp, c * ct];
            area += dw;
            mean += dw * 0.5 * curvature_sum(axes, &p);
        }
    }
    (area, mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_force_2d(a: f64, b: f64, y: [f64; 2]) -> f64 {
        let n = 400_000;
        (0..n)
            .map(|k| {
                let s = 2.0 * PI * k as f64 / n as f64;
                ((a * s.cos() - y[0]).powi(2) + (b * s.sin() - y[1]).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn distance_matches_brute_force() {
        for y in [[0.5, 0.0], [0.0, 0.3], [1.2, 0.4], [3.0, -2.0], [-1.9, 0.05], [0.0, 0.0], [2.5, 0.0]] {
            let (sd, p) = nearest_point(&[2.0, 1.0], &y);
            let oracle = brute_force_2d(2.0, 1.0, y);
            assert!((sd.abs() - oracle).abs() < 1e-7, "{y:?}: {sd} vs {oracle}");
            let on = (p[0] / 2.0).powi(2) + p[1].powi(2);
            assert!((on - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_axis_point() {
        // Nearest point to (0.5, 0) leaves the major axis: x = 2/3, y = sqrt(8)/3.
        let (sd, p) = nearest_point(&[2.0, 1.0], &[0.5, 0.0]);
        assert_relative_eq!(p[0], 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(sd, ((1.0f64 / 6.0).powi(2) + 8.0 / 9.0).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn sphere_reduces_to_radius() {
        let (sd, _) = nearest_point(&[1.0, 1.0, 1.0], &[0.2, 0.3, -0.1]);
        assert_relative_eq!(sd, 1.0 - (0.14f64).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn ellipse_perimeter_values() {
        assert_relative_eq!(ellipse_perimeter(1.0, 1.0), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(ellipse_perimeter(2.0, 1.0), 9.688448220547675, max_relative = 1e-13);
        assert_relative_eq!(ellipse_perimeter(1.0, 2.0), 9.688448220547675, max_relative = 1e-13);
    }

    #[test]
    fn sphere_surface_integrals() {
        let (s, m) = surface_integrals_3d(&[2.0, 2.0, 2.0]);
        assert_relative_eq!(s, 16.0 * PI, max_relative = 1e-10);
        assert_relative_eq!(m, 8.0 * PI, max_relative = 1e-10);
    }

    #[test]
    fn spheroid_area_closed_form() {
        // Oblate spheroid a = b = 2, c = 1.
        let (a, c): (f64, f64) = (2.0, 1.0);
        let e = (1.0 - c * c / (a * a)).sqrt();
        let exact = 2.0 * PI * a * a * (1.0 + (1.0 - e * e) / e * e.atanh());
        let (s, _) = surface_integrals_3d(&[a, a, c]);
        assert_relative_eq!(s, exact, max_relative = 1e-9);
    }
}
