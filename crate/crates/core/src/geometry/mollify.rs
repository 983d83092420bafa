//! Gridded mollification `1_Omega * rho_eps` and its total variation.
//!
//! `rho_eps(y)` is proportional to `(1 - |y|^2/eps^2)^3` on the ball of radius
//! `eps`, renormalised to unit mass on the grid. The indicator itself is
//! anti-aliased as `clamp(1/2 + delta/h, 0, 1)` before convolution.

use super::DomainSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct MollifiedIndicator {
    dim: usize,
    lower: [f64; 2],
    h: f64,
    n: [usize; 2],
    eps: f64,
    values: Vec<f64>,
}

impl MollifiedIndicator {
    pub(crate) fn build<T: Real>(domain: &DomainSpec<T>, eps: f64, h: f64) -> Result<Self> {
        let d = domain.dim();
        if d > 2 {
            return Err(Error::Unsupported(format!("mollification in dimension {d}")));
        }
        if !(eps > 0.0) || !(h > 0.0) {
            return Err(Error::param("epsilon and grid step must be positive"));
        }
        if h >= eps / 4.0 {
            return Err(Error::GridTooCoarse { h, eps });
        }
        let (lo, hi) = domain.bounds();
        let pad = eps + 3.0 * h;
        let mut lower = [0.0; 2];
        let mut n = [1usize; 2];
        for i in 0..d {
            lower[i] = lo[i].as_f64() - pad;
            n[i] = ((hi[i].as_f64() + pad - lower[i]) / h).ceil() as usize + 1;
        }
        let total = n[0] * n[1];
        let node = |k: usize| -> [f64; 2] {
            [lower[0] + (k % n[0]) as f64 * h, lower[1] + (k / n[0]) as f64 * h]
        };

        let mut dist = vec![0.0; total];
        let mut indicator = vec![0.0; total];
        let mut x = vec![T::zero(); d];
        for k in 0..total {
            let p = node(k);
            for i in 0..d {
                x[i] = T::lit(p[i]);
            }
            let s = domain.distance_like(&x).as_f64();
            dist[k] = s;
            indicator[k] = (0.5 + s / h).clamp(0.0, 1.0);
        }

        let reach = (eps / h).floor() as isize;
        let mut kernel: Vec<(isize, isize, f64)> = Vec::new();
        let jy = if d == 2 { reach } else { 0 };
        for j in -jy..=jy {
            for i in -reach..=reach {
                let r2 = ((i * i + j * j) as f64) * h * h / (eps * eps);
                if r2 < 1.0 {
                    kernel.push((i, j, (1.0 - r2).powi(3)));
                }
            }
        }
        let mass: f64 = kernel.iter().map(|k| k.2).sum();
        kernel.iter_mut().for_each(|k| k.2 /= mass);

        // Exact distances are 1-Lipschitz; the level-set proxy gets a wider band.
        let band = if domain.is_level_set() { 3.0 * (eps + h) } else { eps + 2.0 * h };
        let mut values = indicator.clone();
        for k in 0..total {
            if dist[k].abs() >= band {
                continue;
            }
            let (ci, cj) = ((k % n[0]) as isize, (k / n[0]) as isize);
            let mut acc = 0.0;
            for &(di, dj, w) in &kernel {
                let (i, j) = (ci + di, cj + dj);
                if i >= 0 && j >= 0 && (i as usize) < n[0] && (j as usize) < n[1] {
                    acc += w * indicator[j as usize * n[0] + i as usize];
                }
            }
            values[k] = acc;
        }
        Ok(Self {
            dim: d,
            lower,
            h,
            n,
            eps,
            values,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn grid_step(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Box outside which the field vanishes.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.lower[..self.dim].to_vec();
        let hi = (0..self.dim)
            .map(|i| self.lower[i] + (self.n[i] - 1) as f64 * self.h)
            .collect();
        (lo, hi)
    }

    /// Multilinear interpolation; zero outside the grid.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let mut idx = [0usize; 2];
        let mut frac = [0.0; 2];
        for i in 0..self.dim {
            let s = (x[i] - self.lower[i]) / self.h;
            if !(s >= 0.0) || s >= (self.n[i] - 1) as f64 {
                return 0.0;
            }
            idx[i] = s as usize;
            frac[i] = s - idx[i] as f64;
        }
        let at = |i: usize, j: usize| self.values[j * self.n[0] + i];
        if self.dim == 1 {
            at(idx[0], 0) * (1.0 - frac[0]) + at(idx[0] + 1, 0) * frac[0]
        } else {
            let (i, j) = (idx[0], idx[1]);
            let (fx, fy) = (frac[0], frac[1]);
            (at(i, j) * (1.0 - fx) + at(i + 1, j) * fx) * (1.0 - fy)
                + (at(i, j + 1) * (1.0 - fx) + at(i + 1, j + 1) * fx) * fy
        }
    }

    /// `int |grad f_eps|` by central differences on the grid.
    pub fn total_variation(&self) -> f64 {
        let [nx, ny] = self.n;
        let h = self.h;
        let v = |i: usize, j: usize| self.values[j * nx + i];
        let mut sum = 0.0;
        if self.dim == 1 {
            for i in 1..nx - 1 {
                sum += (v(i + 1, 0) - v(i - 1, 0)).abs() / 2.0;
            }
            return sum;
        }
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let gx = v(i + 1, j) - v(i - 1, j);
                let gy = v(i, j + 1) - v(i, j - 1);
                if gx != 0.0 || gy != 0.0 {
                    sum += gx.hypot(gy) / 2.0;
                }
            }
        }
        sum * h
    }

    /// Grid integral of the field.
    pub fn integral(&self) -> f64 {
        let cell = self.h.powi(self.dim as i32);
        crate::stats::pairwise_sum(&self.values) * cell
    }
}

impl<T: Real> DomainSpec<T> {
    /// The gridded mollified indicator `1_Omega * rho_eps` (`d <= 2`).
    pub fn mollify(&self, eps: T, grid_h: T) -> Result<MollifiedIndicator> {
        MollifiedIndicator::build(self, eps.as_f64(), grid_h.as_f64())
    }

    /// `int |grad (1_Omega * rho_eps)|` by grid quadrature (`d <= 2`).
    pub fn mollified_variation(&self, eps: T, grid_h: T) -> Result<T> {
        Ok(T::lit(self.mollify(eps, grid_h)?.total_variation()))
    }
}
