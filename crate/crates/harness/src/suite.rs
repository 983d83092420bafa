//! The acceptance suite: loads every entry up front, runs them in order and
//! folds the verdicts into one exit code.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use shc_core::asymptotics::ConstantsCache;

use crate::config::{ExperimentConfig, SuiteConfig, SuiteEntry};
use crate::error::{HarnessError, Result};
use crate::moments::inverse_stable_moments;
use crate::properties::run_properties;
use crate::report::{ExperimentReport, Verdict};
use crate::runner::{run_experiment, RunOptions};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct EntryOutcome {
    pub id: String,
    pub verdict: Verdict,
    /// One-line reason.
    pub summary: String,
    pub details: Vec<String>,
    pub runtime_s: f64,
    pub report: Option<ExperimentReport>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct SuiteSummary {
    pub name: String,
    pub budget_s: f64,
    pub outcomes: Vec<EntryOutcome>,
    pub runtime_s: f64,
}

impl SuiteSummary {
    /// 1 if anything failed, else 2 if anything is grid-limited, else 0.
    pub fn exit_code(&self) -> i32 {
        let v: Vec<Verdict> = self.outcomes.iter().map(|o| o.verdict).collect();
        if v.contains(&Verdict::Fail) {
            1
        } else if v.contains(&Verdict::GridLimited) {
            2
        } else {
            0
        }
    }

    pub fn outcome(&self, id: &str) -> Option<&EntryOutcome> {
        self.outcomes.iter().find(|o| o.id == id)
    }

    pub fn table(&self) -> String {
        let w = self.outcomes.iter().map(|o| o.id.len()).max().unwrap_or(2).max(5);
        let mut s = format!("suite {}\n{:<w$}  {:<12} {:>9}  summary\n", self.name, "entry", "verdict", "time_s");
        for o in &self.outcomes {
            s += &format!("{:<w$}  {:<12} {:>9.1}  {}\n", o.id, o.verdict.name(), o.runtime_s, o.summary);
        }
        s += &format!(
            "total {:.1} s of {:.0} s budget{}\n",
            self.runtime_s,
            self.budget_s,
            if self.runtime_s > self.budget_s { " (over budget)" } else { "" }
        );
        s
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOptions {
    pub run: RunOptions,
    /// Directory for per-entry CSV/JSON reports and `summary.json`.
    pub out: Option<PathBuf>,
    /// Run only these entry ids.
    pub only: Option<Vec<String>>,
}

enum Prepared {
    Ladder(Box<ExperimentConfig>),
    Moments(SuiteEntry),
    Properties { seed: u64, scale: f64 },
}

/// A suite whose configs and constants have all been loaded and validated.
pub struct LoadedSuite {
    pub config: SuiteConfig,
    pub constants: ConstantsCache,
    pub constants_path: PathBuf,
    entries: Vec<(String, Prepared)>,
}

fn entry_err(id: &str, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("suite entry {id}: {e}"))
}

/// Loads the suite, every referenced config and the constants cache.
/// Paths are resolved relative to the suite file.
pub fn load_suite(path: &Path) -> Result<LoadedSuite> {
    let config = SuiteConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    for e in &config.entry {
        let id = e.id().to_string();
        let prepared = match e {
            SuiteEntry::Ladder { config: p, tolerance, .. } => {
                let mut cfg = ExperimentConfig::load(&base.join(p)).map_err(|err| entry_err(&id, err))?;
                if let Some(tol) = tolerance {
                    let acc = cfg
                        .acceptance
                        .as_mut()
                        .ok_or_else(|| entry_err(&id, "tolerance given but the config has no acceptance block"))?;
                    acc.tolerance = Some(*tol);
                }
                cfg.validate().map_err(|err| entry_err(&id, err))?;
                Prepared::Ladder(Box::new(cfg))
            }
            SuiteEntry::InverseStableMoments {
                betas, qs, ts, n_paths, step, tolerance, ..
            } => {
                let ok = !betas.is_empty()
                    && betas.iter().all(|b| *b > 0.0 && *b < 1.0)
                    && !qs.is_empty()
                    && qs.iter().all(|q| *q > 0.0)
                    && !ts.is_empty()
                    && ts.iter().all(|t| *t > 0.0)
                    && *n_paths > 0
                    && *step > 0.0
                    && *tolerance > 0.0;
                if !ok {
                    return Err(entry_err(&id, "moment checks need beta in (0,1) and positive q, t, n_paths, step, tolerance"));
                }
                Prepared::Moments(e.clone())
            }
            SuiteEntry::PropertySuite { seed, scale, .. } => {
                if !(*scale > 0.0) {
                    return Err(entry_err(&id, "scale must be positive"));
                }
                Prepared::Properties {
                    seed: *seed,
                    scale: *scale,
                }
            }
        };
        entries.push((id, prepared));
    }
    let constants_path = base.join(&config.constants);
    let constants = ConstantsCache::load(&constants_path).map_err(|e| HarnessError::MissingConstants {
        path: constants_path.display().to_string(),
        reason: e.to_string(),
    })?;
    Ok(LoadedSuite {
        config,
        constants,
        constants_path,
        entries,
    })
}

impl LoadedSuite {
    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn run(&self, opts: &SuiteOptions) -> Result<SuiteSummary> {
        if let Some(only) = &opts.only {
            for id in only {
                if !self.entries.iter().any(|(e, _)| e == id) {
                    return Err(HarnessError::Config(format!("no suite entry named {id}")));
                }
            }
        }
        let started = Instant::now();
        let mut run_opts = opts.run.clone();
        run_opts.constants_path = self.constants_path.display().to_string();
        let mut outcomes = Vec::new();
        for (id, entry) in &self.entries {
            if opts.only.as_ref().is_some_and(|o| !o.contains(id)) {
                continue;
            }
            let t0 = Instant::now();
            let mut o = match entry {
                Prepared::Ladder(cfg) => {
                    let report = run_experiment(cfg, &self.constants, &run_opts)?;
                    if let Some(dir) = &opts.out {
                        report.save(dir)?;
                    }
                    ladder_outcome(id, report)
                }
                Prepared::Moments(SuiteEntry::InverseStableMoments {
                    betas,
                    qs,
                    ts,
                    n_paths,
                    step,
                    tolerance,
                    seed,
                    ..
                }) => {
                    let checks = inverse_stable_moments(betas, qs, ts, *n_paths, *step, *tolerance, *seed)?;
                    let worst = checks.iter().map(|c| c.rel_dev).fold(0.0, f64::max);
                    let failed = checks.iter().filter(|c| !c.passed).count();
                    EntryOutcome {
                        id: id.clone(),
                        verdict: if failed == 0 { Verdict::Pass } else { Verdict::Fail },
                        summary: format!(
                            "{} of {} moments within {:.1}%, worst deviation {:.2}%",
                            checks.len() - failed,
                            checks.len(),
                            100.0 * tolerance,
                            100.0 * worst
                        ),
                        details: checks
                            .iter()
                            .map(|c| {
                                format!(
                                    "beta {} q {} t {}: {:.5} +- {:.1e} vs {:.5} ({:.2}%)",
                                    c.beta,
                                    c.q,
                                    c.t,
                                    c.empirical,
                                    c.stderr,
                                    c.exact,
                                    100.0 * c.rel_dev
                                )
                            })
                            .collect(),
                        runtime_s: 0.0,
                        report: None,
                    }
                }
                Prepared::Moments(_) => unreachable!(),
                Prepared::Properties { seed, scale } => {
                    let checks = run_properties(*seed, *scale)?;
                    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                    EntryOutcome {
                        id: id.clone(),
                        verdict: if failed.is_empty() { Verdict::Pass } else { Verdict::Fail },
                        summary: if failed.is_empty() {
                            format!("all {} properties hold", checks.len())
                        } else {
                            format!("failed: {}", failed.join(", "))
                        },
                        details: checks
                            .iter()
                            .map(|c| format!("[{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail))
                            .collect(),
                        runtime_s: 0.0,
                        report: None,
                    }
                }
            };
            o.runtime_s = if run_opts.timing { t0.elapsed().as_secs_f64() } else { 0.0 };
            log::info!("{}: {} ({})", o.id, o.verdict.name(), o.summary);
            outcomes.push(o);
        }
        let summary = SuiteSummary {
            name: self.config.name.clone(),
            budget_s: self.config.budget_s,
            runtime_s: if run_opts.timing { started.elapsed().as_secs_f64() } else { 0.0 },
            outcomes,
        };
        if summary.runtime_s > summary.budget_s {
            log::warn!("suite took {:.0} s, over its {:.0} s budget", summary.runtime_s, summary.budget_s);
        }
        if let Some(dir) = &opts.out {
            std::fs::create_dir_all(dir)?;
            let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
            std::fs::write(dir.join("summary.json"), json + "\n")?;
        }
        Ok(summary)
    }
}

fn ladder_outcome(id: &str, report: ExperimentReport) -> EntryOutcome {
    EntryOutcome {
        id: id.to_string(),
        verdict: report.verdict,
        summary: report.verdict_detail.clone(),
        details: report.table().lines().map(String::from).collect(),
        runtime_s: 0.0,
        report: Some(report),
    }
}

/// Loads and runs a suite file.
pub fn run_acceptance_suite(path: &Path, opts: &SuiteOptions) -> Result<SuiteSummary> {
    load_suite(path)?.run(opts)
}
