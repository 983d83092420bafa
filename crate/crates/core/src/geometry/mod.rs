//! Bounded domains, level sets, distances, volume and perimeter.
//!
//! Analytic domains (ball, annulus, ellipsoid, interval) have closed-form or
//! quadrature-exact volume and perimeter plus a signed distance. Level-set
//! domains `{phi > 0}` are measured numerically on grids.

mod contour;
pub(crate) mod ellipsoid;
mod level_set;
mod mollify;
mod sampling;

use std::f64::consts::PI;

pub use level_set::{clamp_profile, ClampedDistance, DistortedBall, LevelSetField, ScalarField};
pub use mollify::MollifiedIndicator;
pub use sampling::{ShellSample, Strata, UniformSample, MAX_STRATA_DIM, MIN_BOUNDARY_DISTANCE, SHELL_FRACTION};

use crate::error::{Error, Result};
use crate::scalar::{dist, Real};
use crate::special::{unit_ball_volume, unit_sphere_area};

/// A measured quantity with an absolute error bound (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measure<T> {
    pub value: T,
    pub error: T,
}

impl<T: Real> Measure<T> {
    pub fn exact(value: T) -> Self {
        Self {
            value,
            error: T::zero(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum DomainKind<T: Real> {
    Ball {
        center: Vec<T>,
        radius: T,
    },
    Annulus {
        center: Vec<T>,
        inner: T,
        outer: T,
    },
    /// `{ center + R y : sum (y_i / a_i)^2 < 1 }` with `R` orthogonal, row-major.
    Ellipsoid {
        center: Vec<T>,
        semi_axes: Vec<T>,
        rotation: Vec<T>,
    },
    Interval {
        lo: T,
        hi: T,
    },
    LevelSet(LevelSetField<T>),
}

#[derive(Clone, Debug)]
pub struct DomainSpec<T: Real> {
    kind: DomainKind<T>,
    dim: usize,
    lower: Vec<T>,
    upper: Vec<T>,
    volume: Measure<T>,
}

/// Grid resolution (per axis) for level-set volume and perimeter quadrature.
const LEVEL_SET_GRID: [usize; 3] = [1 << 16, 1024, 128];

fn check_center<T: Real>(center: &[T]) -> Result<()> {
    if center.is_empty() {
        return Err(Error::param("dimension must be at least 1"));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(Error::param("center must be finite"));
    }
    Ok(())
}

/// Row-major rotation by `angle` radians in the plane.
pub fn rotation_2d<T: Real>(angle: T) -> Vec<T> {
    let (s, c) = angle.sin_cos();
    vec![c, -s, s, c]
}

impl<T: Real> DomainSpec<T> {
    fn finish(kind: DomainKind<T>, dim: usize, lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        let mut out = Self {
            kind,
            dim,
            lower,
            upper,
            volume: Measure::exact(T::zero()),
        };
        out.volume = out.compute_volume();
        if out.volume.value.as_f64() < 1e-12 {
            return Err(Error::DegenerateDomain(out.volume.value.as_f64()));
        }
        Ok(out)
    }

    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        check_center(&center)?;
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::param("radius must be positive"));
        }
        let d = center.len();
        let lower = center.iter().map(|&c| c - radius).collect();
        let upper = center.iter().map(|&c| c + radius).collect();
        Self::finish(DomainKind::Ball { center, radius }, d, lower, upper)
    }

    pub fn unit_ball(d: usize) -> Result<Self> {
        Self::ball(vec![T::zero(); d], T::one())
    }

    pub fn annulus(center: Vec<T>, inner: T, outer: T) -> Result<Self> {
        check_center(&center)?;
        if !(inner > T::zero() && outer > inner) || !outer.is_finite() {
            return Err(Error::param("annulus needs 0 < inner < outer"));
        }
        let d = center.len();
        let lower = center.iter().map(|&c| c - outer).collect();
        let upper = center.iter().map(|&c| c + outer).collect();
        Self::finish(DomainKind::Annulus { center, inner, outer }, d, lower, upper)
    }

    /// Ellipsoid with the given semi-axes, optionally rotated by an orthogonal
    /// row-major matrix.
    pub fn ellipsoid(center: Vec<T>, semi_axes: Vec<T>, rotation: Option<Vec<T>>) -> Result<Self> {
        check_center(&center)?;
        let d = center.len();
        if semi_axes.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: semi_axes.len(),
            });
        }
        if semi_axes.iter().any(|&a| !(a > T::zero()) || !a.is_finite()) {
            return Err(Error::param("semi-axes must be positive"));
        }
        let rotation = match rotation {
            Some(r) => {
                if r.len() != d * d {
                    return Err(Error::DimensionMismatch {
                        expected: d * d,
                        got: r.len(),
                    });
                }
                for i in 0..d {
                    for j in 0..d {
                        let dot: f64 = (0..d).map(|k| (r[k * d + i] * r[k * d + j]).as_f64()).sum();
                        let target = if i == j { 1.0 } else { 0.0 };
                        if (dot - target).abs() > 1e-9 {
                            return Err(Error::param("rotation must be orthogonal"));
                        }
                    }
                }
                r
            }
            None => (0..d * d)
                .map(|k| if k / d == k % d { T::one() } else { T::zero() })
                .collect(),
        };
        // Half-width along axis i of the rotated ellipsoid: sqrt(sum_j (R_ij a_j)^2).
        let half: Vec<T> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (rotation[i * d + j] * semi_axes[j]).powi(2))
                    .fold(T::zero(), |a, b| a + b)
                    .sqrt()
            })
            .collect();
        let lower = center.iter().zip(&half).map(|(&c, &h)| c - h).collect();
        let upper = center.iter().zip(&half).map(|(&c, &h)| c + h).collect();
        Self::finish(
            DomainKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            },
            d,
            lower,
            upper,
        )
    }

    pub fn interval(lo: T, hi: T) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param("interval needs lo < hi"));
        }
        Self::finish(DomainKind::Interval { lo, hi }, 1, vec![lo], vec![hi])
    }

    pub fn level_set(field: LevelSetField<T>) -> Result<Self> {
        let d = field.dim();
        let (lower, upper) = field.bounds();
        if lower.len() != d || upper.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: lower.len(),
            });
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::param("level-set field is unbounded"));
        }
        Self::finish(DomainKind::LevelSet(field), d, lower, upper)
    }

    pub fn kind(&self) -> &DomainKind<T> {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> (&[T], &[T]) {
        (&self.lower, &self.upper)
    }

    pub fn bounding_box_volume(&self) -> T {
        self.lower
            .iter()
            .zip(&self.upper)
            .fold(T::one(), |acc, (&a, &b)| acc * (b - a))
    }

    pub fn is_level_set(&self) -> bool {
        matches!(self.kind, DomainKind::LevelSet(_))
    }

    pub fn describe(&self) -> String {
        let v = |xs: &[T]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            DomainKind::Ball { center, radius } => format!("ball(c=[{}],R={})", v(center), radius),
            DomainKind::Annulus { center, inner, outer } => {
                format!("annulus(c=[{}],r={},R={})", v(center), inner, outer)
            }
            DomainKind::Ellipsoid { center, semi_axes, .. } => {
                format!("ellipsoid(c=[{}],a=[{}])", v(center), v(semi_axes))
            }
            DomainKind::Interval { lo, hi } => format!("interval({},{})", lo, hi),
            DomainKind::LevelSet(f) => f.describe(),
        }
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, x: &[T]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.contains_unchecked(x))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, x: &[T]) -> bool {
        match &self.kind {
            DomainKind::Ball { center, radius } => {
                let mut s = T::zero();
                for i in 0..x.len() {
                    let v = x[i] - center[i];
                    s += v * v;
                }
                s < *radius * *radius
            }
            DomainKind::Annulus { center, inner, outer } => {
                let mut s = T::zero();
                for i in 0..x.len() {
                    let v = x[i] - center[i];
                    s += v * v;
                }
                s > *inner * *inner && s < *outer * *outer
            }
            DomainKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let d = self.dim;
                let mut q = T::zero();
                for j in 0..d {
                    let mut y = T::zero();
                    for i in 0..d {
                        y += rotation[i * d + j] * (x[i] - center[i]);
                    }
                    let r = y / semi_axes[j];
                    q += r * r;
                }
                q < T::one()
            }
            DomainKind::Interval { lo, hi } => x[0] > *lo && x[0] < *hi,
            DomainKind::LevelSet(f) => f.value(x) > T::zero(),
        }
    }

    pub fn volume(&self) -> Measure<T> {
        self.volume
    }

    fn compute_volume(&self) -> Measure<T> {
        let d = self.dim;
        let w = T::lit(unit_ball_volume(d));
        match &self.kind {
            DomainKind::Ball { radius, .. } => Measure::exact(w * radius.powi(d as i32)),
            DomainKind::Annulus { inner, outer, .. } => {
                Measure::exact(w * (outer.powi(d as i32) - inner.powi(d as i32)))
            }
            DomainKind::Ellipsoid { semi_axes, .. } => {
                Measure::exact(semi_axes.iter().fold(w, |acc, &a| acc * a))
            }
            DomainKind::Interval { lo, hi } => Measure::exact(*hi - *lo),
            DomainKind::LevelSet(f) => level_set_volume(f),
        }
    }

    /// Perimeter (`H^{d-1}` of the boundary).
    pub fn perimeter(&self) -> Result<Measure<T>> {
        let d = self.dim;
        let s = T::lit(unit_sphere_area(d));
        Ok(match &self.kind {
            DomainKind::Ball { radius, .. } => Measure::exact(s * radius.powi(d as i32 - 1)),
            DomainKind::Annulus { inner, outer, .. } => {
                Measure::exact(s * (outer.powi(d as i32 - 1) + inner.powi(d as i32 - 1)))
            }
            DomainKind::Ellipsoid { semi_axes, .. } => {
                let a: Vec<f64> = semi_axes.iter().map(|v| v.as_f64()).collect();
                match d {
                    1 => Measure::exact(T::lit(2.0)),
                    2 => Measure::exact(T::lit(ellipsoid::ellipse_perimeter(a[0], a[1]))),
                    3 => Measure::exact(T::lit(ellipsoid::surface_integrals_3d(&a).0)),
                    _ => return Err(Error::Unsupported(format!("ellipsoid perimeter in dimension {d}"))),
                }
            }
            DomainKind::Interval { .. } => Measure::exact(T::lit(2.0)),
            DomainKind::LevelSet(f) => {
                let n = LEVEL_SET_GRID[d - 1];
                let fine = f.boundary_contour(n).measure;
                if d == 1 {
                    Measure::exact(T::lit(fine))
                } else {
                    let coarse = f.boundary_contour(n / 2).measure;
                    // Chord error is second order: Richardson estimate.
                    Measure {
                        value: T::lit(fine),
                        error: T::lit((fine - coarse).abs() / 3.0),
                    }
                }
            }
        })
    }

    /// Signed distance to the boundary, positive inside.
    pub fn signed_distance(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        if self.is_level_set() {
            return Err(Error::Unsupported("signed distance of a level-set domain".into()));
        }
        Ok(self.signed_distance_unchecked(x))
    }

    pub(crate) fn signed_distance_unchecked(&self, x: &[T]) -> T {
        match &self.kind {
            DomainKind::Ball { center, radius } => *radius - dist(x, center),
            DomainKind::Annulus { center, inner, outer } => {
                let r = dist(x, center);
                (r - *inner).min(*outer - r)
            }
            DomainKind::Ellipsoid { .. } => self.ellipsoid_nearest(x).0,
            DomainKind::Interval { lo, hi } => (x[0] - *lo).min(*hi - x[0]),
            DomainKind::LevelSet(f) => f.approx_distance(x),
        }
    }

    /// Signed distance for analytic kinds, `phi / |grad phi|` for level sets.
    #[inline]
    pub(crate) fn distance_like(&self, x: &[T]) -> T {
        self.signed_distance_unchecked(x)
    }

    fn ellipsoid_nearest(&self, x: &[T]) -> (T, Vec<T>) {
        let DomainKind::Ellipsoid {
            center,
            semi_axes,
            rotation,
        } = &self.kind
        else {
            unreachable!()
        };
        let d = self.dim;
        let y: Vec<f64> = (0..d)
            .map(|j| (0..d).map(|i| (rotation[i * d + j] * (x[i] - center[i])).as_f64()).sum())
            .collect();
        let axes: Vec<f64> = semi_axes.iter().map(|a| a.as_f64()).collect();
        let (sd, p) = ellipsoid::nearest_point(&axes, &y);
        let global = (0..d)
            .map(|i| {
                center[i] + T::lit((0..d).map(|j| rotation[i * d + j].as_f64() * p[j]).sum::<f64>())
            })
            .collect();
        (T::lit(sd), global)
    }

    /// Unit gradient of the signed distance (inward normal direction on the
    /// boundary). Undefined on the medial axis; callers only use it where the
    /// clamp profile has nonzero slope, which lies inside the reach.
    pub(crate) fn distance_gradient(&self, x: &[T], out: &mut [T]) {
        let radial = |center: &[T], out: &mut [T], sign: T| {
            let r = dist(x, center);
            for i in 0..out.len() {
                out[i] = if r > T::zero() { sign * (x[i] - center[i]) / r } else { T::zero() };
            }
        };
        match &self.kind {
            DomainKind::Ball { center, .. } => radial(center, out, -T::one()),
            DomainKind::Annulus { center, inner, outer } => {
                let r = dist(x, center);
                let sign = if r - *inner < *outer - r { T::one() } else { -T::one() };
                radial(center, out, sign)
            }
            DomainKind::Interval { lo, hi } => {
                out[0] = if x[0] - *lo < *hi - x[0] { T::one() } else { -T::one() };
            }
            DomainKind::Ellipsoid { .. } => {
                let (sd, p) = self.ellipsoid_nearest(x);
                let len = dist(x, &p);
                if len > T::lit(1e-14) {
                    let sign = if sd >= T::zero() { T::one() } else { -T::one() };
                    for i in 0..out.len() {
                        out[i] = sign * (x[i] - p[i]) / len;
                    }
                } else {
                    self.ellipsoid_inward_normal(x, out);
                }
            }
            DomainKind::LevelSet(f) => {
                f.gradient(x, out);
                let n = crate::scalar::norm(out);
                if n > T::zero() {
                    out.iter_mut().for_each(|v| *v /= n);
                }
            }
        }
    }

    fn ellipsoid_inward_normal(&self, x: &[T], out: &mut [T]) {
        let DomainKind::Ellipsoid {
            center,
            semi_axes,
            rotation,
        } = &self.kind
        else {
            unreachable!()
        };
        let d = self.dim;
        // grad of sum (y_j/a_j)^2 in global coordinates is R diag(2/a^2) y.
        let y: Vec<T> = (0..d)
            .map(|j| (0..d).fold(T::zero(), |s, i| s + rotation[i * d + j] * (x[i] - center[i])))
            .collect();
        for i in 0..d {
            out[i] = -(0..d).fold(T::zero(), |s, j| {
                s + rotation[i * d + j] * y[j] / (semi_axes[j] * semi_axes[j])
            });
        }
        let n = crate::scalar::norm(out);
        out.iter_mut().for_each(|v| *v /= n);
    }

    /// Reach of the boundary (largest `r` with a unique nearest boundary point
    /// within distance `r`), for analytic kinds.
    pub fn reach(&self) -> Option<T> {
        match &self.kind {
            DomainKind::Ball { radius, .. } => Some(*radius),
            DomainKind::Annulus { inner, outer, .. } => {
                Some(inner.min((*outer - *inner) * T::lit(0.5)))
            }
            DomainKind::Ellipsoid { semi_axes, .. } => {
                let amax = semi_axes.iter().cloned().fold(T::zero(), T::max);
                let amin = semi_axes.iter().cloned().fold(T::infinity(), T::min);
                Some(amin * amin / amax)
            }
            DomainKind::Interval { lo, hi } => Some((*hi - *lo) * T::lit(0.5)),
            DomainKind::LevelSet(_) => None,
        }
    }

    /// Bound on the Hessian norm of the signed distance on `{|delta| < r}`.
    pub(crate) fn shell_curvature_bound(&self, r: T) -> T {
        match &self.kind {
            DomainKind::Ball { radius, .. } => T::one() / (*radius - r),
            DomainKind::Annulus { inner, .. } => T::one() / (*inner - r),
            DomainKind::Ellipsoid { semi_axes, .. } => {
                let amax = semi_axes.iter().cloned().fold(T::zero(), T::max);
                let amin = semi_axes.iter().cloned().fold(T::infinity(), T::min);
                let k = amax / (amin * amin);
                k / (T::one() - r * k)
            }
            DomainKind::Interval { .. } => T::zero(),
            DomainKind::LevelSet(_) => T::infinity(),
        }
    }

    /// The clamped signed-distance field `phi = g(delta)` of this domain:
    /// `phi = delta` on `{|delta| < r/2}`, `phi = +-r` on `{|delta| >= r}`,
    /// cubic Hermite blend in between. Requires `r + r0_margin < reach`.
    pub fn clamped_level_set(&self, r: T, r0_margin: T) -> Result<LevelSetField<T>> {
        let reach = self
            .reach()
            .ok_or_else(|| Error::Unsupported("clamped level set of a level-set domain".into()))?;
        if !(r > T::zero()) || r0_margin < T::zero() {
            return Err(Error::param("need r > 0 and r0_margin >= 0"));
        }
        if r + r0_margin >= reach {
            return Err(Error::ReachExceeded {
                width: (r + r0_margin).as_f64(),
                reach: reach.as_f64(),
            });
        }
        let field = ClampedDistance::new(self.clone(), r);
        let l = field.lipschitz_constant();
        LevelSetField::with_boundary_gradient(
            std::sync::Arc::new(field),
            T::one(),
            l,
            T::one(),
            T::one(),
        )
    }

    /// Uniformly scaled copy `c * Omega`.
    pub fn dilate(&self, c: T) -> Result<Self> {
        let scale = |v: &[T]| v.iter().map(|&x| x * c).collect::<Vec<T>>();
        match &self.kind {
            DomainKind::Ball { center, radius } => Self::ball(scale(center), *radius * c),
            DomainKind::Annulus { center, inner, outer } => {
                Self::annulus(scale(center), *inner * c, *outer * c)
            }
            DomainKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => Self::ellipsoid(scale(center), scale(semi_axes), Some(rotation.clone())),
            DomainKind::Interval { lo, hi } => Self::interval(*lo * c, *hi * c),
            DomainKind::LevelSet(_) => Err(Error::Unsupported("dilation of a level-set domain".into())),
        }
    }

    /// Volume of the boundary shell `{0 < delta < width}` for analytic kinds,
    /// exact for `width` below the reach (Steiner-type formulas).
    pub(crate) fn shell_volume(&self, width: f64) -> Result<f64> {
        let d = self.dim;
        let pd = |r: f64| r.powi(d as i32);
        let w = unit_ball_volume(d);
        Ok(match &self.kind {
            DomainKind::Ball { radius, .. } => {
                let r = radius.as_f64();
                w * (pd(r) - pd(r - width))
            }
            DomainKind::Annulus { inner, outer, .. } => {
                let (a, b) = (inner.as_f64(), outer.as_f64());
                w * ((pd(b) - pd(b - width)) + (pd(a + width) - pd(a)))
            }
            DomainKind::Interval { .. } => 2.0 * width,
            DomainKind::Ellipsoid { semi_axes, .. } => {
                let a: Vec<f64> = semi_axes.iter().map(|v| v.as_f64()).collect();
                match d {
                    1 => 2.0 * width,
                    2 => ellipsoid::ellipse_perimeter(a[0], a[1]) * width - PI * width * width,
                    3 => {
                        let (s, m) = ellipsoid::surface_integrals_3d(&a);
                        s * width - m * width * width + 4.0 * PI / 3.0 * width.powi(3)
                    }
                    _ => return Err(Error::Unsupported(format!("ellipsoid shell in dimension {d}"))),
                }
            }
            DomainKind::LevelSet(_) => {
                return Err(Error::Unsupported("shell volume of a level-set domain".into()))
            }
        })
    }
}

fn level_set_volume<T: Real>(f: &LevelSetField<T>) -> Measure<T> {
    let d = f.dim();
    let n = LEVEL_SET_GRID[d - 1].min(if d == 1 { 1 << 16 } else { 512 });
    let fine = soft_indicator_integral(f, n);
    let coarse = soft_indicator_integral(f, n / 2);
    Measure {
        value: T::lit(fine),
        error: T::lit((fine - coarse).abs() / 3.0),
    }
}

// Midpoint quadrature of clamp(1/2 + (phi/|grad phi|)/h, 0, 1): the linear
// ramp matches the cell fraction to second order across a smooth boundary.
fn soft_indicator_integral<T: Real>(f: &LevelSetField<T>, n: usize) -> f64 {
    let (lo, hi) = f.padded_bounds();
    let d = f.dim();
    let h: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / n as f64).collect();
    let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let cell: f64 = h.iter().product();
    let total = n.pow(d as u32);
    let mut x = vec![T::zero(); d];
    let mut sum = 0.0;
    for idx in 0..total {
        let mut rem = idx;
        for i in 0..d {
            x[i] = T::lit(lo[i] + (rem % n) as f64 * h[i] + 0.5 * h[i]);
            rem /= n;
        }
        let s = f.approx_distance(&x).as_f64();
        sum += (0.5 + s / hmin).clamp(0.0, 1.0);
    }
    sum * cell
}

#[cfg(test)]
mod tests;
