//! Regeneration of the constants cache from an oracle config.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shc_core::asymptotics::{fbm_sup_key, fbm_sup_oracle, stable_sup_key, stable_sup_oracle, ConstantsCache};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub seed: u64,
    pub stable: StableOracle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbm: Option<FbmOracle>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StableOracle {
    pub alphas: Vec<f64>,
    pub n_samples: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FbmOracle {
    pub hursts: Vec<f64>,
    pub n_paths: usize,
    pub n_steps: usize,
}

/// File name of the cache inside the output directory.
pub const CACHE_FILE: &str = "sup_means.tsv";

impl OracleConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Entries are keyed by parameter; each uses `seed` plus its index.
    pub fn compute(&self) -> Result<ConstantsCache> {
        let mut cache = ConstantsCache::new();
        for (k, &alpha) in self.stable.alphas.iter().enumerate() {
            let c = stable_sup_oracle(alpha, self.stable.n_samples, self.seed.wrapping_add(k as u64))?;
            log::info!("{}: {:.6} +- {:.2e}", stable_sup_key(alpha), c.value, c.stderr);
            cache.insert(stable_sup_key(alpha), c);
        }
        if let Some(f) = &self.fbm {
            for (k, &h) in f.hursts.iter().enumerate() {
                let c = fbm_sup_oracle(h, f.n_paths, f.n_steps, self.seed.wrapping_add(1000 + k as u64))?;
                log::info!("{}: {:.6} +- {:.2e}", fbm_sup_key(h), c.value, c.stderr);
                cache.insert(fbm_sup_key(h), c);
            }
        }
        Ok(cache)
    }
}

/// Computes the cache and writes `<out_dir>/sup_means.tsv`.
pub fn regenerate_constants(cfg: &OracleConfig, out_dir: &Path) -> Result<std::path::PathBuf> {
    let cache = cfg.compute()?;
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(CACHE_FILE);
    cache.save(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> OracleConfig {
        OracleConfig {
            seed,
            stable: StableOracle {
                alphas: vec![1.5, 2.0],
                n_samples: 100_000,
            },
            fbm: None,
        }
    }

    #[test]
    fn gaussian_entry_matches_closed_form() {
        let c = cfg(3).compute().unwrap();
        let v = c.stable_sup_mean(2.0).unwrap().value;
        assert!((v / (2.0 / std::f64::consts::PI.sqrt()) - 1.0).abs() < 0.005, "{v}");
    }

    #[test]
    fn seeds_agree_and_reruns_are_identical() {
        let a = cfg(1).compute().unwrap();
        let b = cfg(2).compute().unwrap();
        let (x, y) = (a.stable_sup_mean(1.5).unwrap(), b.stable_sup_mean(1.5).unwrap());
        assert!((x.value - y.value).abs() <= 3.0 * x.stderr.hypot(y.stderr));
        let dir = tempfile::tempdir().unwrap();
        let p1 = regenerate_constants(&cfg(1), &dir.path().join("a")).unwrap();
        let p2 = regenerate_constants(&cfg(1), &dir.path().join("b")).unwrap();
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "seed = 1\nbogus = 2\n[stable]\nalphas = [1.5]\nn_samples = 10\n";
        assert!(toml::from_str::<OracleConfig>(text).is_err());
    }
}
