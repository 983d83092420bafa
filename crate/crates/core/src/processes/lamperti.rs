//! Positive self-similar increasing Markov processes via the Lamperti
//! representation `xi_t = x0 exp(S_{A(t x0^-beta)})`, where
//! `A(u) = inf{r : I(r) > u}` and `I(r) = int_0^r exp(beta S_v) dv`.
//!
//! `I` is accumulated by left-endpoint sums on an `r`-grid; since `S` is
//! increasing these are lower bounds, so `A` and `xi` are biased upward by at
//! most one grid step in `r`.

use super::subordinator::{increment, EXTENSION_CAP};
use super::{PathGrid, SubordinatorSpec};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

struct Walk<'a> {
    sub: &'a SubordinatorSpec<f64>,
    beta: f64,
    h: f64,
    steps: usize,
    s: f64,
    integral: f64,
}

impl<'a> Walk<'a> {
    fn new(sub: &'a SubordinatorSpec<f64>, beta: f64, h: f64) -> Self {
        Self {
            sub,
            beta,
            h,
            steps: 0,
            s: 0.0,
            integral: 0.0,
        }
    }

    fn advance(&mut self, rng: &mut RngStream) -> Result<()> {
        if self.steps >= EXTENSION_CAP {
            return Err(Error::ExtensionCap(self.steps));
        }
        self.integral += self.h * (self.beta * self.s).exp();
        self.s += increment(self.sub, self.h, rng)?;
        self.steps += 1;
        Ok(())
    }
}

fn check<T: Real>(sub: &SubordinatorSpec<T>, beta: T, x0: T) -> Result<()> {
    super::ClockSpec::LampertiInverse {
        sub: sub.clone(),
        beta,
        x0,
    }
    .validate()
}

/// Default `r`-grid step for `n_steps` output points over `u` in `[0, u_max]`.
fn r_step(sub: &SubordinatorSpec<f64>, n_steps: usize, u_max: f64) -> f64 {
    let n = n_steps as f64;
    (1.0 / (n * sub.laplace_exponent(1.0))).min(u_max / n)
}

/// The process `xi` started at `x0`, on the grid `k t / n`.
pub fn lamperti_xi<T: Real>(
    sub: &SubordinatorSpec<T>,
    beta: T,
    x0: T,
    t: T,
    n_steps: usize,
    rng: &mut RngStream,
) -> Result<PathGrid<T>> {
    check(sub, beta, x0)?;
    if !(t > T::zero()) || n_steps == 0 {
        return Err(Error::param("need t > 0 and n_steps >= 1"));
    }
    let sub = sub.to_f64();
    let (beta, x0, t) = (beta.as_f64(), x0.as_f64(), t.as_f64());
    let scale = x0.powf(-beta);
    let h = r_step(&sub, n_steps, t * scale);
    let mut walk = Walk::new(&sub, beta, h);
    let mut path = PathGrid::with_capacity(&[T::lit(x0)], n_steps + 1);
    for k in 1..=n_steps {
        let time = t * k as f64 / n_steps as f64;
        let u = time * scale;
        while !(walk.integral > u) {
            walk.advance(rng)?;
        }
        path.push(T::lit(time), &[T::lit(x0 * walk.s.exp())], None);
    }
    Ok(path)
}

/// Right inverse `zeta_t = inf{s : xi_s > t}` at nondecreasing `levels`,
/// with `r`-grid step `h`. Returns the clock values.
///
/// `zeta_t = x0^beta I(r*)` with `r* = inf{r : S_r > ln(t / x0)}`, and
/// `zeta_t = 0` for `t < x0`.
pub fn lamperti_zeta<T: Real>(
    sub: &SubordinatorSpec<T>,
    beta: T,
    x0: T,
    levels: &[T],
    h: T,
    rng: &mut RngStream,
) -> Result<Vec<T>> {
    check(sub, beta, x0)?;
    if !(h > T::zero()) {
        return Err(Error::param("grid step must be positive"));
    }
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("levels must be nondecreasing"));
    }
    let sub = sub.to_f64();
    let (beta, x0) = (beta.as_f64(), x0.as_f64());
    let mut walk = Walk::new(&sub, beta, h.as_f64());
    let lead = x0.powf(beta);
    let mut out = Vec::with_capacity(levels.len());
    for level in levels {
        let level = level.as_f64();
        if level < x0 {
            out.push(T::zero());
            continue;
        }
        let barrier = (level / x0).ln();
        while !(walk.s > barrier) {
            walk.advance(rng)?;
        }
        out.push(T::lit(lead * walk.integral));
    }
    Ok(out)
}

/// `r`-grid step used by the clock sampler for `n_steps` grid points.
pub(crate) fn zeta_step(sub: &SubordinatorSpec<f64>, n_steps: usize) -> f64 {
    1.0 / (n_steps as f64 * sub.laplace_exponent(1.0))
}
