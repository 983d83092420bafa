//! Fractional Gaussian noise by circulant embedding (Davies–Harte), with an
//! exact Cholesky fallback when the embedding is not nonnegative definite.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Relative tolerance below which negative embedding eigenvalues are
/// treated as round-off.
const EIGEN_TOL: f64 = 1e-10;

#[derive(Clone)]
enum Method {
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    /// Row-major lower-triangular factor of the `n x n` covariance.
    Cholesky { lower: Vec<f64> },
}

/// Precomputed sampler for `n` increments of fBm with Hurst index `H` over a
/// uniform grid of step `dt`, normalized so that `E[B_t^2] = t^{2H}`.
#[derive(Clone)]
pub struct FbmPlan {
    hurst: f64,
    n: usize,
    scale: f64,
    method: Method,
}

impl std::fmt::Debug for FbmPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmPlan")
            .field("hurst", &self.hurst)
            .field("n", &self.n)
            .field("circulant", &self.is_circulant())
            .finish()
    }
}

/// Autocovariance of unit-step fractional Gaussian noise.
fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

impl FbmPlan {
    pub fn new(hurst: f64, dt: f64, n: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::param(format!("hurst = {hurst} outside (0, 1)")));
        }
        if n == 0 || !(dt > 0.0) {
            return Err(Error::param("need n >= 1 and dt > 0"));
        }
        let m = 2 * n;
        let mut buf: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(fgn_autocovariance(hurst, if j <= n { j } else { m - j }), 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut buf);
        let max = buf.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let min = buf.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        let method = if min < -EIGEN_TOL * max {
            log::warn!(
                "circulant embedding not nonnegative definite (min eigenvalue {min:.3e}); using Cholesky for n = {n}"
            );
            Method::Cholesky {
                lower: cholesky(hurst, n)?,
            }
        } else {
            Method::Circulant {
                sqrt_eig: buf.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect(),
                fft,
            }
        };
        Ok(Self {
            hurst,
            n,
            scale: dt.powf(hurst),
            method,
        })
    }

    /// Exact Cholesky plan regardless of the embedding.
    pub fn cholesky(hurst: f64, dt: f64, n: usize) -> Result<Self> {
        let mut plan = Self::new(hurst, dt, n.min(1))?;
        plan.n = n;
        plan.method = Method::Cholesky {
            lower: cholesky(hurst, n)?,
        };
        Ok(plan)
    }

    pub fn is_circulant(&self) -> bool {
        matches!(self.method, Method::Circulant { .. })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// Two independent increment sequences of length `n`.
    pub fn sample_pair(&self, rng: &mut RngStream, a: &mut [f64], b: &mut [f64]) {
        let n = self.n;
        debug_assert!(a.len() == n && b.len() == n);
        match &self.method {
            Method::Circulant { sqrt_eig, fft } => {
                let mut buf: Vec<Complex64> = sqrt_eig
                    .iter()
                    .map(|&s| Complex64::new(s * rng.normal(), s * rng.normal()))
                    .collect();
                fft.process(&mut buf);
                for j in 0..n {
                    a[j] = self.scale * buf[j].re;
                    b[j] = self.scale * buf[j].im;
                }
            }
            Method::Cholesky { lower } => {
                self.cholesky_fill(lower, rng, a);
                self.cholesky_fill(lower, rng, b);
            }
        }
    }

    fn cholesky_fill(&self, lower: &[f64], rng: &mut RngStream, out: &mut [f64]) {
        let n = self.n;
        let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        for i in 0..n {
            let row = &lower[i * n..i * n + i + 1];
            out[i] = self.scale * row.iter().zip(&z).map(|(l, z)| l * z).sum::<f64>();
        }
    }
}

fn cholesky(hurst: f64, n: usize) -> Result<Vec<f64>> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(hurst, k)).collect();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = gamma[i - j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::param("fGn covariance not positive definite"));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}
