//! Level-set fields `phi` with `Omega = {phi > 0}`.

use std::fmt;
use std::sync::Arc;

use super::contour::{self, ContourSummary};
use super::DomainSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A differentiable scalar field on `R^d`.
pub trait ScalarField<T: Real>: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> T;

    fn gradient(&self, x: &[T], out: &mut [T]);

    /// Axis-aligned box containing `{value > 0}`.
    fn bounds(&self) -> (Vec<T>, Vec<T>);

    /// Short name used in reports, e.g. `clamped_ball(R=1, r=0.2)`.
    fn describe(&self) -> String;
}

/// A field together with the regularity data the asymptotic band needs:
/// the Hölder exponent and constant of `grad phi`, and the extreme values of
/// `|grad phi|` on the boundary.
#[derive(Clone)]
pub struct LevelSetField<T: Real> {
    field: Arc<dyn ScalarField<T>>,
    holder_kappa: T,
    holder_l: T,
    grad_inf_boundary: T,
    grad_sup_boundary: T,
}

impl<T: Real> fmt::Debug for LevelSetField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSetField")
            .field("field", &self.field.describe())
            .field("holder_kappa", &self.holder_kappa)
            .field("holder_l", &self.holder_l)
            .field("grad_inf_boundary", &self.grad_inf_boundary)
            .field("grad_sup_boundary", &self.grad_sup_boundary)
            .finish()
    }
}

/// Grid resolution used to locate the boundary when gradient bounds are measured.
const BOUNDARY_RESOLUTION: [usize; 3] = [4096, 512, 64];

impl<T: Real> LevelSetField<T> {
    /// Wraps `field`, measuring `|grad phi|` on the zero contour.
    pub fn new(field: Arc<dyn ScalarField<T>>, holder_kappa: T, holder_l: T) -> Result<Self> {
        let d = field.dim();
        if !(1..=3).contains(&d) {
            return Err(Error::Unsupported(format!("level sets in dimension {d}")));
        }
        let mut out = Self {
            field,
            holder_kappa,
            holder_l,
            grad_inf_boundary: T::zero(),
            grad_sup_boundary: T::zero(),
        };
        let contour = out.boundary_contour(BOUNDARY_RESOLUTION[d - 1]);
        if contour.points.is_empty() {
            return Err(Error::DegenerateDomain(0.0));
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut g = vec![T::zero(); d];
        for p in &contour.points {
            let x: Vec<T> = p.iter().map(|&v| T::lit(v)).collect();
            out.field.gradient(&x, &mut g);
            let n = crate::scalar::norm(&g).as_f64();
            lo = lo.min(n);
            hi = hi.max(n);
        }
        if lo < 1e-8 {
            return Err(Error::VanishingGradient(lo));
        }
        out.grad_inf_boundary = T::lit(lo);
        out.grad_sup_boundary = T::lit(hi);
        out.validate()?;
        Ok(out)
    }

    /// Wraps `field` with analytically known boundary gradient bounds.
    pub fn with_boundary_gradient(
        field: Arc<dyn ScalarField<T>>,
        holder_kappa: T,
        holder_l: T,
        grad_inf_boundary: T,
        grad_sup_boundary: T,
    ) -> Result<Self> {
        let out = Self {
            field,
            holder_kappa,
            holder_l,
            grad_inf_boundary,
            grad_sup_boundary,
        };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        let k = self.holder_kappa.as_f64();
        if !(k > 0.0 && k <= 1.0) {
            return Err(Error::param(format!("holder exponent {k} outside (0, 1]")));
        }
        if !(self.holder_l.as_f64() >= 0.0) {
            return Err(Error::param("holder constant must be nonnegative"));
        }
        if !(self.grad_inf_boundary > T::zero()) || self.grad_sup_boundary < self.grad_inf_boundary {
            return Err(Error::VanishingGradient(self.grad_inf_boundary.as_f64()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    #[inline]
    pub fn value(&self, x: &[T]) -> T {
        self.field.value(x)
    }

    #[inline]
    pub fn gradient(&self, x: &[T], out: &mut [T]) {
        self.field.gradient(x, out)
    }

    pub fn bounds(&self) -> (Vec<T>, Vec<T>) {
        self.field.bounds()
    }

    pub fn describe(&self) -> String {
        self.field.describe()
    }

    pub fn holder_kappa(&self) -> T {
        self.holder_kappa
    }

    pub fn holder_l(&self) -> T {
        self.holder_l
    }

    pub fn grad_inf_boundary(&self) -> T {
        self.grad_inf_boundary
    }

    pub fn grad_sup_boundary(&self) -> T {
        self.grad_sup_boundary
    }

    /// `phi / |grad phi|`, the first-order signed distance to the zero set.
    pub(crate) fn approx_distance(&self, x: &[T]) -> T {
        let v = self.value(x);
        let mut g = [T::zero(); 3];
        let g = &mut g[..self.dim()];
        self.gradient(x, g);
        let n = crate::scalar::norm(g);
        if n > T::zero() {
            v / n
        } else if v > T::zero() {
            T::infinity()
        } else {
            T::neg_infinity()
        }
    }

    pub(crate) fn eval_f64(&self, x: &[f64]) -> f64 {
        let xt: Vec<T> = x.iter().map(|&v| T::lit(v)).collect();
        self.value(&xt).as_f64()
    }

    pub(crate) fn grad_f64(&self, x: &[f64]) -> Vec<f64> {
        let xt: Vec<T> = x.iter().map(|&v| T::lit(v)).collect();
        let mut g = vec![T::zero(); x.len()];
        self.gradient(&xt, &mut g);
        g.into_iter().map(|v| v.as_f64()).collect()
    }

    /// Padded bounding box in `f64`.
    pub(crate) fn padded_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.bounds();
        lo.iter()
            .zip(&hi)
            .map(|(&a, &b)| {
                let pad = 0.0123 * (b - a).as_f64();
                (a.as_f64() - pad, b.as_f64() + pad)
            })
            .unzip()
    }

    /// Boundary measure (`H^{d-1}` of the zero set) and boundary points at grid
    /// resolution `n` per axis.
    pub(crate) fn boundary_contour(&self, n: usize) -> ContourSummary {
        let (lo, hi) = self.padded_bounds();
        let f = |x: &[f64]| self.eval_f64(x);
        match self.dim() {
            1 => contour::roots_1d(&f, lo[0], hi[0], n),
            2 => contour::marching_squares(
                &f,
                &|x, y| vec![x, y],
                &|_| 1.0,
                [lo[0], lo[1]],
                [hi[0], hi[1]],
                n,
            ),
            _ => {
                let g = |x: &[f64]| {
                    let g = self.grad_f64(x);
                    [g[0], g[1], g[2]]
                };
                contour::coarea_slices(&f, &g, [lo[0], lo[1], lo[2]], [hi[0], hi[1], hi[2]], n)
            }
        }
    }
}

/// Odd clamp profile: identity on `[0, r/2]`, a cubic Hermite blend on
/// `[r/2, r]` with unit slope at `r/2` and zero slope at `r`, constant beyond.
/// Returns `(g(s), g'(s))`.
pub fn clamp_profile<T: Real>(s: T, r: T) -> (T, T) {
    let half = r * T::lit(0.5);
    let a = s.abs();
    let (g, dg) = if a <= half {
        (a, T::one())
    } else if a >= r {
        (r, T::zero())
    } else {
        let u = (a - half) / half;
        let g = half * (T::one() + u + u * u - u * u * u);
        let dg = T::one() + T::lit(2.0) * u - T::lit(3.0) * u * u;
        (g, dg)
    };
    (if s < T::zero() { -g } else { g }, dg)
}

/// `phi = g(delta)` for the signed distance `delta` of an analytic domain.
#[derive(Clone, Debug)]
pub struct ClampedDistance<T: Real> {
    base: DomainSpec<T>,
    r: T,
}

impl<T: Real> ClampedDistance<T> {
    pub(crate) fn new(base: DomainSpec<T>, r: T) -> Self {
        Self { base, r }
    }

    /// Lipschitz constant of `grad phi`: `sup|g''| + sup|g'| * K` where `K`
    /// bounds the Hessian of the signed distance on the shell `|delta| < r`.
    pub fn lipschitz_constant(&self) -> T {
        T::lit(8.0) / self.r + T::lit(4.0 / 3.0) * self.base.shell_curvature_bound(self.r)
    }
}

impl<T: Real> ScalarField<T> for ClampedDistance<T> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[T]) -> T {
        clamp_profile(self.base.signed_distance_unchecked(x), self.r).0
    }

    fn gradient(&self, x: &[T], out: &mut [T]) {
        let (_, dg) = clamp_profile(self.base.signed_distance_unchecked(x), self.r);
        if dg == T::zero() {
            out.iter_mut().for_each(|v| *v = T::zero());
            return;
        }
        self.base.distance_gradient(x, out);
        out.iter_mut().for_each(|v| *v *= dg);
    }

    fn bounds(&self) -> (Vec<T>, Vec<T>) {
        let (lo, hi) = self.base.bounds();
        (lo.to_vec(), hi.to_vec())
    }

    fn describe(&self) -> String {
        format!("clamped({}, r={})", self.base.describe(), self.r)
    }
}

/// `phi(x) = 1 - |x|^2 - a |x - x0|^(1 + kappa)`: a ball whose boundary
/// gradient is only `kappa`-Hölder at `x0`.
#[derive(Clone, Debug)]
pub struct DistortedBall<T: Real> {
    amplitude: T,
    kappa: T,
    x0: Vec<T>,
}

impl<T: Real> DistortedBall<T> {
    pub fn new(amplitude: T, kappa: T, x0: Vec<T>) -> Result<Self> {
        if !(amplitude >= T::zero()) {
            return Err(Error::param("amplitude must be nonnegative"));
        }
        if !(kappa > T::zero() && kappa <= T::one()) {
            return Err(Error::param("kappa must lie in (0, 1]"));
        }
        if x0.is_empty() {
            return Err(Error::param("x0 must be nonempty"));
        }
        Ok(Self { amplitude, kappa, x0 })
    }

    /// Hölder constant of `grad phi` on the unit ball (diameter 2).
    pub fn holder_constant(&self) -> T {
        let two = T::lit(2.0);
        let spread = two.powf(T::one() - self.kappa);
        two * spread + self.amplitude * (T::one() + self.kappa) * spread
    }

    /// Wraps the field as a level set with measured boundary gradient bounds.
    pub fn into_level_set(self) -> Result<LevelSetField<T>> {
        let (k, l) = (self.kappa, self.holder_constant());
        LevelSetField::new(Arc::new(self), k, l)
    }
}

impl<T: Real> ScalarField<T> for DistortedBall<T> {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn value(&self, x: &[T]) -> T {
        let r2 = crate::scalar::dot(x, x);
        let y = crate::scalar::dist(x, &self.x0);
        T::one() - r2 - self.amplitude * y.powf(T::one() + self.kappa)
    }

    fn gradient(&self, x: &[T], out: &mut [T]) {
        let y = crate::scalar::dist(x, &self.x0);
        let c = if y > T::zero() {
            self.amplitude * (T::one() + self.kappa) * y.powf(self.kappa - T::one())
        } else {
            T::zero()
        };
        for i in 0..out.len() {
            out[i] = -T::lit(2.0) * x[i] - c * (x[i] - self.x0[i]);
        }
    }

    fn bounds(&self) -> (Vec<T>, Vec<T>) {
        let d = self.dim();
        (vec![-T::one(); d], vec![T::one(); d])
    }

    fn describe(&self) -> String {
        let x0: Vec<String> = self.x0.iter().map(|v| v.to_string()).collect();
        format!(
            "distorted_ball(kappa={}, amplitude={}, x0=[{}])",
            self.kappa,
            self.amplitude,
            x0.join(",")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn profile_is_c1() {
        let r = 0.2;
        let eps = 1e-9;
        for &s in &[0.1f64, 0.2, -0.1, -0.2] {
            let (g0, d0) = clamp_profile(s - eps, r);
            let (g1, d1) = clamp_profile(s + eps, r);
            assert!((g1 - g0).abs() < 1e-8);
            assert!((d1 - d0).abs() < 1e-7);
        }
        assert_eq!(clamp_profile(0.05, r), (0.05, 1.0));
        assert_eq!(clamp_profile(0.5, r).0, 0.2);
        assert_eq!(clamp_profile(-0.5, r).0, -0.2);
    }

    #[test]
    fn profile_is_monotone_with_bounded_slope() {
        let r = 1.0;
        let mut prev = clamp_profile(0.0, r).0;
        for k in 1..=1000 {
            let (g, dg) = clamp_profile(k as f64 * 1e-3, r);
            assert!(g >= prev);
            assert!(dg >= 0.0 && dg <= 4.0 / 3.0 + 1e-12);
            prev = g;
        }
    }

    #[test]
    fn distorted_ball_gradient_matches_finite_differences() {
        let f = DistortedBall::new(0.1, 0.5, vec![1.0, 0.0]).unwrap();
        let x = [0.3, -0.4];
        let mut g = [0.0; 2];
        f.gradient(&x, &mut g);
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
            assert_relative_eq!(g[i], fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn distorted_ball_boundary_bounds() {
        let ls = DistortedBall::<f64>::new(0.1, 0.5, vec![1.0, 0.0]).unwrap().into_level_set().unwrap();
        // |grad phi| = 2 at x0, which lies on the boundary.
        assert!((ls.grad_sup_boundary() - 2.0).abs() < 2e-3);
        assert!(ls.grad_inf_boundary() > 1.8 && ls.grad_inf_boundary() < 2.0);
    }
}
