//! Empirical moments of inverse stable subordinators against the closed form.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use shc_core::asymptotics::inverse_stable_moment;
use shc_core::processes::{sample_inverse_subordinator, SubordinatorSpec};
use shc_core::rng::{purpose, Channel, RngStream};
use shc_core::stats::reduce_paths;

use crate::error::Result;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct MomentCheck {
    pub beta: f64,
    pub q: f64,
    pub t: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub exact: f64,
    pub rel_dev: f64,
    pub passed: bool,
}

/// `E[E_t^q]` from `n_paths` subordinator paths with grid step `step`, one
/// path set per `beta` shared by every `(q, t)`.
pub fn inverse_stable_moments(
    betas: &[f64],
    qs: &[f64],
    ts: &[f64],
    n_paths: usize,
    step: f64,
    tolerance: f64,
    seed: u64,
) -> Result<Vec<MomentCheck>> {
    let mut levels = ts.to_vec();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let width = levels.len() * qs.len();
    if width == 0 || width > shc_core::stats::MAX_WIDTH {
        return Err(crate::error::HarnessError::Config(format!(
            "need 1..={} (q, t) pairs",
            shc_core::stats::MAX_WIDTH
        )));
    }
    let mut out = Vec::new();
    for (k, &beta) in betas.iter().enumerate() {
        let spec = SubordinatorSpec::Stable { beta };
        let failure = Mutex::new(None);
        let m = reduce_paths(0..n_paths, width, |i, acc| {
            let key = seed.wrapping_add(k as u64);
            let mut rng = RngStream::for_path(key, purpose::CLOCK_MOMENTS, Channel::Clock, i as u64);
            match sample_inverse_subordinator(&spec, &levels, step, &mut rng) {
                Ok(v) => {
                    for (j, e) in v.values.iter().enumerate() {
                        for (l, q) in qs.iter().enumerate() {
                            acc[j * qs.len() + l] = e.powf(*q);
                        }
                    }
                }
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                }
            }
        });
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e.into());
        }
        for (j, &t) in levels.iter().enumerate() {
            for (l, &q) in qs.iter().enumerate() {
                let idx = j * qs.len() + l;
                let exact = inverse_stable_moment(beta, q, t)?;
                let empirical = m.mean(idx);
                let rel_dev = (empirical - exact).abs() / exact;
                out.push(MomentCheck {
                    beta,
                    q,
                    t,
                    empirical,
                    stderr: m.stderr(idx),
                    exact,
                    rel_dev,
                    passed: rel_dev <= tolerance,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_is_close() {
        let r = inverse_stable_moments(&[0.5], &[1.0], &[1.0], 4000, 2e-3, 0.05, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].passed, "{r:?}");
        assert!(r[0].rel_dev < 4.0 * r[0].stderr / r[0].exact + 2e-3);
    }
}
