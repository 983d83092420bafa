//! Deterministic accumulation of per-path statistics.
//!
//! Paths are cut into fixed blocks of [`BLOCK`] consecutive indices. Each block
//! is accumulated sequentially and blocks are merged along a fixed binary tree,
//! so results are bit-identical for any number of worker threads.

use rayon::prelude::*;

pub const BLOCK: usize = 1024;

/// Widest per-path statistic supported by [`Moments`].
pub const MAX_WIDTH: usize = 16;

/// Count, means and co-moments of a `k`-vector statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    k: usize,
    n: u64,
    mean: Vec<f64>,
    // Row-major k x k sums of centered products.
    comoment: Vec<f64>,
}

impl Moments {
    pub fn new(k: usize) -> Self {
        assert!(k <= MAX_WIDTH, "statistic width {k} exceeds {MAX_WIDTH}");
        Self {
            k,
            n: 0,
            mean: vec![0.0; k],
            comoment: vec![0.0; k * k],
        }
    }

    pub fn width(&self) -> usize {
        self.k
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.k);
        self.n += 1;
        let n = self.n as f64;
        let k = self.k;
        // Welford update: comoment += (x - old_mean) (x - new_mean)^T.
        let mut delta = [0.0f64; MAX_WIDTH];
        for i in 0..k {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / n;
        }
        for i in 0..k {
            for j in 0..k {
                self.comoment[i * k + j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    /// Chan's pairwise merge.
    pub fn merge(&self, other: &Moments) -> Moments {
        assert_eq!(self.k, other.k);
        if other.n == 0 {
            return self.clone();
        }
        if self.n == 0 {
            return other.clone();
        }
        let k = self.k;
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = (0..k).map(|i| other.mean[i] - self.mean[i]).collect();
        let mean = (0..k).map(|i| self.mean[i] + delta[i] * nb / n).collect();
        let mut comoment = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                comoment[i * k + j] = self.comoment[i * k + j]
                    + other.comoment[i * k + j]
                    + delta[i] * delta[j] * na * nb / n;
            }
        }
        Moments {
            k,
            n: self.n + other.n,
            mean,
            comoment,
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.comoment[i * self.k + j] / (self.n - 1) as f64
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance(i, i).max(0.0)
    }

    /// Standard error of the mean of component `i`.
    pub fn stderr(&self, i: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance(i) / self.n as f64).sqrt()
    }

    /// Covariance of the means of components `i` and `j`.
    pub fn mean_covariance(&self, i: usize, j: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.covariance(i, j) / self.n as f64
    }

    /// Mean and delta-method standard error of `mean(i) / mean(j)`.
    pub fn ratio(&self, i: usize, j: usize) -> (f64, f64) {
        let (a, b) = (self.mean(i), self.mean(j));
        let r = a / b;
        let var = (self.mean_covariance(i, i) - 2.0 * r * self.mean_covariance(i, j)
            + r * r * self.mean_covariance(j, j))
            / (b * b);
        (r, var.max(0.0).sqrt())
    }
}

/// Accumulates `f(index, out)` over path indices `range` with a `k`-wide
/// statistic, in parallel and deterministically.
pub fn reduce_paths<F>(range: std::ops::Range<usize>, k: usize, f: F) -> Moments
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let start = range.start;
    let len = range.end.saturating_sub(start);
    let n_blocks = len.div_ceil(BLOCK);
    let blocks: Vec<Moments> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::new(k);
            let mut out = vec![0.0; k];
            let lo = start + b * BLOCK;
            let hi = (lo + BLOCK).min(start + len);
            for i in lo..hi {
                out.iter_mut().for_each(|v| *v = 0.0);
                f(i, &mut out);
                m.push(&out);
            }
            m
        })
        .collect();
    tree_merge(&blocks, k)
}

fn tree_merge(blocks: &[Moments], k: usize) -> Moments {
    match blocks.len() {
        0 => Moments::new(k),
        1 => blocks[0].clone(),
        n => {
            let mid = n.div_ceil(2);
            tree_merge(&blocks[..mid], k).merge(&tree_merge(&blocks[mid..], k))
        }
    }
}

/// Pairwise summation along a fixed tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Standard error of `a - b` for independent estimates.
pub fn joint_stderr(se_a: f64, se_b: f64) -> f64 {
    se_a.hypot(se_b)
}

/// Delta-method stderr of `a / b` for independent estimates.
pub fn independent_ratio(a: f64, se_a: f64, b: f64, se_b: f64) -> (f64, f64) {
    let r = a / b;
    let rel = ((se_a / a).powi(2) + (se_b / b).powi(2)).sqrt();
    (r, (r * rel).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d),
    }
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = sign * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moments_match_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 113) as f64 * 0.01 + 1e6).collect();
        let mut m = Moments::new(1);
        for &x in &xs {
            m.push(&[x]);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert_relative_eq!(m.mean(0), mean, max_relative = 1e-14);
        assert_relative_eq!(m.variance(0), var, max_relative = 1e-8);
    }

    #[test]
    fn merge_equals_sequential() {
        let mut all = Moments::new(2);
        let mut a = Moments::new(2);
        let mut b = Moments::new(2);
        for i in 0..500 {
            let x = [(i as f64).sin(), (i as f64 * 0.3).cos()];
            all.push(&x);
            if i < 123 {
                a.push(&x)
            } else {
                b.push(&x)
            }
        }
        let m = a.merge(&b);
        for i in 0..2 {
            assert_relative_eq!(m.mean(i), all.mean(i), max_relative = 1e-12);
            for j in 0..2 {
                assert_relative_eq!(m.covariance(i, j), all.covariance(i, j), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn reduction_is_thread_count_independent() {
        let f = |i: usize, out: &mut [f64]| {
            out[0] = ((i as f64) * 0.618).fract();
            out[1] = out[0] * out[0];
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| reduce_paths(0..10_000, 2, f))
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn ratio_delta_method_on_exact_ratio() {
        let mut m = Moments::new(2);
        for i in 0..100 {
            let x = 1.0 + i as f64;
            m.push(&[2.0 * x, x]);
        }
        let (r, se) = m.ratio(0, 1);
        assert_relative_eq!(r, 2.0, max_relative = 1e-14);
        assert!(se < 1e-12);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.7548776662).fract()).collect();
        let b: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.5698402910).fract()).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.1);
        let c: Vec<f64> = b.iter().map(|x| x + 0.1).collect();
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
    }

    #[test]
    fn pairwise_sum_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }
}
