//! Uniform and boundary-stratified point sampling.

use super::{DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

/// Points closer than this to the boundary are regenerated.
pub const MIN_BOUNDARY_DISTANCE: f64 = 1e-12;

const MAX_TRIES: u64 = 1_000_000;

/// Largest dimension with exact shell/interior samplers.
pub const MAX_STRATA_DIM: usize = 8;

#[derive(Clone, Debug)]
pub struct UniformSample<T> {
    pub points: Vec<Vec<T>>,
    pub acceptance_rate: f64,
}

/// Stratified sample: `in_shell[i]` tells which stratum point `i` came from;
/// `weights[i]` is that stratum's volume over its point count.
#[derive(Clone, Debug)]
pub struct ShellSample<T> {
    pub points: Vec<Vec<T>>,
    pub weights: Vec<T>,
    pub in_shell: Vec<bool>,
    pub shell_volume: T,
    pub interior_volume: T,
}

fn unit_direction(rng: &mut RngStream, out: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for v in out.iter_mut() {
            *v = rng.normal();
            s += *v * *v;
        }
        if s > 1e-300 {
            let n = s.sqrt();
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

// Radius with density proportional to r^(d-1) on [r0, r1].
fn radial(rng: &mut RngStream, d: usize, r0: f64, r1: f64) -> f64 {
    let (a, b) = (r0.powi(d as i32), r1.powi(d as i32));
    (a + rng.uniform() * (b - a)).powf(1.0 / d as f64)
}

impl<T: Real> DomainSpec<T> {
    /// One uniform point of the domain written into `out`.
    pub(crate) fn sample_point(&self, rng: &mut RngStream, out: &mut [T]) -> Result<()> {
        for _ in 0..MAX_TRIES {
            self.propose_uniform(rng, out);
            if self.contains_unchecked(out)
                && self.distance_like(out).as_f64() >= MIN_BOUNDARY_DISTANCE
            {
                return Ok(());
            }
        }
        Err(Error::LowAcceptance(1.0 / MAX_TRIES as f64))
    }

    // Proposal: exact uniform for analytic kinds, bounding box for level sets.
    fn propose_uniform(&self, rng: &mut RngStream, out: &mut [T]) {
        let d = self.dim;
        let mut dir = [0.0f64; 8];
        match &self.kind {
            DomainKind::Ball { center, radius } if d <= MAX_STRATA_DIM => {
                unit_direction(rng, &mut dir[..d]);
                let r = radius.as_f64() * rng.uniform().powf(1.0 / d as f64);
                for i in 0..d {
                    out[i] = center[i] + T::lit(r * dir[i]);
                }
            }
            DomainKind::Annulus { center, inner, outer } if d <= MAX_STRATA_DIM => {
                unit_direction(rng, &mut dir[..d]);
                let r = radial(rng, d, inner.as_f64(), outer.as_f64());
                for i in 0..d {
                    out[i] = center[i] + T::lit(r * dir[i]);
                }
            }
            DomainKind::Ellipsoid { .. } if d <= MAX_STRATA_DIM => self.ellipsoid_point(rng, 0.0, 1.0, out),
            DomainKind::Interval { lo, hi } => {
                out[0] = *lo + (*hi - *lo) * T::lit(rng.uniform());
            }
            _ => {
                for i in 0..d {
                    out[i] = self.lower[i] + (self.upper[i] - self.lower[i]) * T::lit(rng.uniform());
                }
            }
        }
    }

    // Uniform point of the ellipsoidal shell with gauge in [g0, g1].
    fn ellipsoid_point(&self, rng: &mut RngStream, g0: f64, g1: f64, out: &mut [T]) {
        let DomainKind::Ellipsoid {
            center,
            semi_axes,
            rotation,
        } = &self.kind
        else {
            unreachable!()
        };
        let d = self.dim;
        let mut dir = [0.0f64; 8];
        unit_direction(rng, &mut dir[..d]);
        let g = radial(rng, d, g0, g1);
        for i in 0..d {
            let mut v = 0.0;
            for j in 0..d {
                v += rotation[i * d + j].as_f64() * semi_axes[j].as_f64() * g * dir[j];
            }
            out[i] = center[i] + T::lit(v);
        }
    }

    pub fn sample_uniform(&self, n: usize, rng: &mut RngStream) -> Result<UniformSample<T>> {
        let mut points = Vec::with_capacity(n);
        let mut tries: u64 = 0;
        let mut x = vec![T::zero(); self.dim];
        while points.len() < n {
            self.propose_uniform(rng, &mut x);
            tries += 1;
            if self.contains_unchecked(&x) && self.distance_like(&x).as_f64() >= MIN_BOUNDARY_DISTANCE {
                points.push(x.clone());
            } else if tries >= 10_000 && (points.len() as f64) < 1e-3 * tries as f64 {
                return Err(Error::LowAcceptance(points.len() as f64 / tries as f64));
            }
        }
        Ok(UniformSample {
            points,
            acceptance_rate: n as f64 / tries.max(1) as f64,
        })
    }

    /// Stratified sample with 90% of the points in the shell `{0 < delta < width}`.
    pub fn boundary_shell_sample(
        &self,
        width: T,
        n: usize,
        rng: &mut RngStream,
    ) -> Result<ShellSample<T>> {
        let strata = Strata::new(self, width)?;
        let n_shell = strata.shell_count(n);
        let mut points = Vec::with_capacity(n);
        let mut in_shell = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let ws = T::lit(strata.shell_volume / n_shell.max(1) as f64);
        let wi = T::lit(strata.interior_volume / (n - n_shell).max(1) as f64);
        for i in 0..n {
            let mut x = vec![T::zero(); self.dim];
            if i < n_shell {
                strata.sample_shell(rng, &mut x)?;
                weights.push(ws);
            } else {
                strata.sample_interior(rng, &mut x)?;
                weights.push(wi);
            }
            in_shell.push(i < n_shell);
            points.push(x);
        }
        Ok(ShellSample {
            points,
            weights,
            in_shell,
            shell_volume: T::lit(strata.shell_volume),
            interior_volume: T::lit(strata.interior_volume),
        })
    }
}

/// Boundary shell and interior strata of an analytic domain.
#[derive(Clone, Debug)]
pub struct Strata<T: Real> {
    domain: DomainSpec<T>,
    width: f64,
    pub shell_volume: f64,
    pub interior_volume: f64,
}

/// Fraction of paths assigned to the boundary shell.
pub const SHELL_FRACTION: f64 = 0.9;

impl<T: Real> Strata<T> {
    pub fn new(domain: &DomainSpec<T>, width: T) -> Result<Self> {
        let reach = domain
            .reach()
            .ok_or_else(|| Error::Unsupported("stratification of a level-set domain".into()))?;
        if domain.dim > MAX_STRATA_DIM {
            return Err(Error::Unsupported(format!(
                "stratification in dimension {} (at most {MAX_STRATA_DIM})",
                domain.dim
            )));
        }
        if !(width > T::zero()) {
            return Err(Error::param("shell width must be positive"));
        }
        if width >= reach {
            return Err(Error::ReachExceeded {
                width: width.as_f64(),
                reach: reach.as_f64(),
            });
        }
        let width = width.as_f64();
        let shell_volume = domain.shell_volume(width)?;
        let interior_volume = (domain.volume().value.as_f64() - shell_volume).max(0.0);
        Ok(Self {
            domain: domain.clone(),
            width,
            shell_volume,
            interior_volume,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Number of the `n` points that go to the shell.
    pub fn shell_count(&self, n: usize) -> usize {
        if self.interior_volume <= 0.0 {
            n
        } else {
            ((n as f64 * SHELL_FRACTION).round() as usize).clamp(1, n.saturating_sub(1).max(1))
        }
    }

    pub fn sample_shell(&self, rng: &mut RngStream, out: &mut [T]) -> Result<()> {
        let dom = &self.domain;
        let d = dom.dim;
        let w = self.width;
        let mut dir = [0.0f64; 8];
        for _ in 0..MAX_TRIES {
            match &dom.kind {
                DomainKind::Ball { center, radius } => {
                    let r1 = radius.as_f64();
                    unit_direction(rng, &mut dir[..d]);
                    let r = radial(rng, d, r1 - w, r1);
                    for i in 0..d {
                        out[i] = center[i] + T::lit(r * dir[i]);
                    }
                }
                DomainKind::Annulus { center, inner, outer } => {
                    let (a, b) = (inner.as_f64(), outer.as_f64());
                    let pd = |r: f64| r.powi(d as i32);
                    let outer_mass = pd(b) - pd(b - w);
                    let inner_mass = pd(a + w) - pd(a);
                    unit_direction(rng, &mut dir[..d]);
                    let r = if rng.uniform() * (outer_mass + inner_mass) < outer_mass {
                        radial(rng, d, b - w, b)
                    } else {
                        radial(rng, d, a, a + w)
                    };
                    for i in 0..d {
                        out[i] = center[i] + T::lit(r * dir[i]);
                    }
                }
                DomainKind::Interval { lo, hi } => {
                    let u = rng.uniform();
                    let (lo, hi) = (lo.as_f64(), hi.as_f64());
                    out[0] = T::lit(if u < 0.5 { lo + 2.0 * u * w } else { hi - (2.0 * u - 1.0) * w });
                }
                DomainKind::Ellipsoid { semi_axes, .. } => {
                    // The gauge |y/a| is (1/a_min)-Lipschitz, so gauge < 1 - w/a_min
                    // implies delta >= w: propose only the outer gauge layer.
                    let amin = semi_axes.iter().map(|a| a.as_f64()).fold(f64::INFINITY, f64::min);
                    let g0 = (1.0 - w / amin).max(0.0);
                    dom.ellipsoid_point(rng, g0, 1.0, out);
                }
                DomainKind::LevelSet(_) => unreachable!(),
            }
            let delta = dom.signed_distance_unchecked(out).as_f64();
            if delta >= MIN_BOUNDARY_DISTANCE && delta < w {
                return Ok(());
            }
        }
        Err(Error::LowAcceptance(1.0 / MAX_TRIES as f64))
    }

    pub fn sample_interior(&self, rng: &mut RngStream, out: &mut [T]) -> Result<()> {
        let dom = &self.domain;
        let d = dom.dim;
        let w = self.width;
        let mut dir = [0.0f64; 8];
        for _ in 0..MAX_TRIES {
            match &dom.kind {
                DomainKind::Ball { center, radius } => {
                    unit_direction(rng, &mut dir[..d]);
                    let r = radial(rng, d, 0.0, radius.as_f64() - w);
                    for i in 0..d {
                        out[i] = center[i] + T::lit(r * dir[i]);
                    }
                }
                DomainKind::Annulus { center, inner, outer } => {
                    unit_direction(rng, &mut dir[..d]);
                    let r = radial(rng, d, inner.as_f64() + w, outer.as_f64() - w);
                    for i in 0..d {
                        out[i] = center[i] + T::lit(r * dir[i]);
                    }
                }
                DomainKind::Interval { lo, hi } => {
                    let (lo, hi) = (lo.as_f64() + w, hi.as_f64() - w);
                    out[0] = T::lit(lo + rng.uniform() * (hi - lo));
                }
                DomainKind::Ellipsoid { .. } => dom.ellipsoid_point(rng, 0.0, 1.0, out),
                DomainKind::LevelSet(_) => unreachable!(),
            }
            if dom.signed_distance_unchecked(out).as_f64() >= w {
                return Ok(());
            }
        }
        Err(Error::LowAcceptance(1.0 / MAX_TRIES as f64))
    }
}
