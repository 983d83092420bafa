//! Runs one t-ladder experiment.

use std::time::Instant;

use sha2::{Digest, Sha256};
use shc_core::asymptotics::{
    clock_scale, default_theta, extrapolate_ratio, moves_toward, mu_reference, predicted_limit, ConstantsCache,
    NormalizerKind, Theta,
};
use shc_core::estimators::{
    estimate_deficit, estimate_deficit_ladder, estimate_m, estimate_mu, estimate_qf, McConfig,
};
use shc_core::geometry::{DomainKind, DomainSpec};
use shc_core::processes::{ProcessFamily, ProcessSpec};
use shc_core::stats::independent_ratio;

use crate::config::{AcceptanceMode, Built, ExperimentConfig, ThetaConfig};
use crate::error::{HarnessError, Result};
use crate::report::{DoublingCheck, ExperimentReport, ExtrapolationSummary, Row, Verdict};

/// Doubling moves beyond this many joint standard errors mark the run grid-limited.
pub const DOUBLING_Z: f64 = 2.0;
/// Rows may violate `Q <= mass` or `ratio >= 0` by this many standard errors.
const ROW_SLACK: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    /// Record wall-clock runtimes; off gives byte-identical CSVs across runs.
    pub timing: bool,
    pub threads_source: String,
    /// Where the constants were loaded from, for error messages.
    pub constants_path: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: None,
            n_paths: None,
            timing: true,
            threads_source: "default".into(),
            constants_path: "constants/sup_means.tsv".into(),
        }
    }
}

/// The config after command-line overrides.
pub fn effective_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentConfig> {
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.mc.seed = s;
    }
    if let Some(n) = opts.n_paths {
        cfg.mc.n_paths = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn core_err(e: shc_core::Error, opts: &RunOptions) -> HarnessError {
    match e {
        shc_core::Error::MissingConstant(name) => HarnessError::MissingConstants {
            path: opts.constants_path.clone(),
            reason: format!("no entry {name}"),
        },
        other => HarnessError::Core(other),
    }
}

struct Norm {
    value: f64,
    se: f64,
    rel_const: f64,
}

fn normalizer(
    kind: NormalizerKind,
    process: &ProcessSpec<f64>,
    t: f64,
    mc: &McConfig,
    cache: &ConstantsCache,
) -> shc_core::Result<Norm> {
    Ok(match kind {
        NormalizerKind::EstimatedMu => {
            let e = estimate_mu(process, t, mc)?;
            Norm {
                value: e.value,
                se: e.stderr,
                rel_const: 0.0,
            }
        }
        NormalizerKind::EstimatedM => {
            let e = estimate_m(process, t, mc)?;
            Norm {
                value: e.value,
                se: e.stderr,
                rel_const: 0.0,
            }
        }
        NormalizerKind::ReferenceMu => {
            let r = mu_reference(process, t, cache)?;
            Norm {
                value: r.value,
                se: 0.0,
                rel_const: r.rel_stderr,
            }
        }
        NormalizerKind::ClockScale => {
            let ProcessFamily::TimeChanged { alpha, clock } = process.family() else {
                return Err(shc_core::Error::Unsupported(format!("clock scale for {}", process.name())));
            };
            Norm {
                value: clock_scale(clock, *alpha, t)?,
                se: 0.0,
                rel_const: 0.0,
            }
        }
    })
}

/// Deficit (or functional deficit) with its stderr at one `t`.
fn deficit_at(b: &Built, t: f64, mc: &McConfig) -> shc_core::Result<(f64, f64, f64)> {
    match &b.field {
        Some(f) => {
            let e = estimate_qf(&b.process, f.as_ref(), t, mc)?;
            let mass = f.integral().unwrap_or(e.integral.value);
            Ok((e.r.value, e.r.stderr, mass))
        }
        None => {
            let e = estimate_deficit(&b.process, &b.domain, t, mc)?;
            Ok((e.deficit.value, e.deficit.stderr, e.volume))
        }
    }
}

/// `(deficit, se, mass, seconds)` per ladder point.
fn deficits(b: &Built, ts: &[f64], mc: &McConfig) -> shc_core::Result<Vec<(f64, f64, f64, f64)>> {
    if b.field.is_none() && matches!(b.domain.kind(), DomainKind::Interval { .. }) {
        let start = Instant::now();
        let all = estimate_deficit_ladder(&b.process, &b.domain, ts, mc)?;
        let each = start.elapsed().as_secs_f64() / ts.len() as f64;
        return Ok(all.into_iter().map(|e| (e.deficit.value, e.deficit.stderr, e.volume, each)).collect());
    }
    ts.iter()
        .map(|&t| {
            let start = Instant::now();
            let (d, se, mass) = deficit_at(b, t, mc)?;
            Ok((d, se, mass, start.elapsed().as_secs_f64()))
        })
        .collect()
}

fn gradient_ratio(domain: &DomainSpec<f64>) -> f64 {
    match domain.kind() {
        DomainKind::LevelSet(f) => f.grad_sup_boundary() / f.grad_inf_boundary(),
        _ => 1.0,
    }
}

/// Runs the ladder, the step-doubling check at the smallest `t`, the
/// extrapolation and the acceptance criterion.
pub fn run_experiment(cfg: &ExperimentConfig, cache: &ConstantsCache, opts: &RunOptions) -> Result<ExperimentReport> {
    let started = Instant::now();
    let cfg = effective_config(cfg, opts)?;
    let b = cfg.build()?;
    let kind: NormalizerKind = cfg.normalizer.into();
    let ts = &cfg.t_ladder;
    let err = |e| core_err(e, opts);
    let mut warnings = Vec::new();

    let family = b.process.name();
    let domain_name = match &b.field {
        Some(f) => format!("{} [f = {}]", b.domain.describe(), f.describe()),
        None => b.domain.describe(),
    };
    let dvals = deficits(&b, ts, &b.mc).map_err(err)?;
    let mut rows = Vec::with_capacity(ts.len());
    let mut rel_const: f64 = 0.0;
    let mass = dvals[0].2;
    for (&t, &(d, d_se, _, secs)) in ts.iter().zip(&dvals) {
        let start = Instant::now();
        let n = normalizer(kind, &b.process, t, &b.mc, cache).map_err(err)?;
        rel_const = rel_const.max(n.rel_const);
        let q_hat = mass - d;
        // The ratio is recomputed from the row fields so that it can be checked from the CSV.
        let ratio = (mass - q_hat) / n.value;
        let (_, ratio_se) = independent_ratio(mass - q_hat, d_se, n.value, n.se);
        let runtime = secs + start.elapsed().as_secs_f64();
        if q_hat > mass + ROW_SLACK * d_se || ratio < -ROW_SLACK * ratio_se {
            warnings.push(format!("t = {t:e}: row outside Q <= mass, ratio >= 0 beyond {ROW_SLACK} stderr"));
        }
        rows.push(Row {
            experiment: cfg.name.clone(),
            family: family.clone(),
            domain: domain_name.clone(),
            t,
            n_paths: b.mc.n_paths,
            n_steps: b.mc.n_steps,
            q_hat,
            q_se: d_se,
            norm_kind: kind.name().to_string(),
            norm_hat: n.value,
            norm_se: n.se,
            ratio,
            ratio_se: if ratio_se.is_finite() { ratio_se } else { 0.0 },
            runtime_s: if opts.timing { runtime } else { 0.0 },
        });
    }

    // Step doubling at the smallest t.
    let last = rows.last().expect("nonempty ladder").clone();
    let mc2 = b.mc.with_steps(2 * b.mc.n_steps);
    let (d2, d2_se, _) = deficit_at(&b, last.t, &mc2).map_err(err)?;
    let n2 = match kind {
        NormalizerKind::EstimatedMu | NormalizerKind::EstimatedM => {
            normalizer(kind, &b.process, last.t, &mc2, cache).map_err(err)?
        }
        _ => Norm {
            value: last.norm_hat,
            se: last.norm_se,
            rel_const: 0.0,
        },
    };
    let (r2, r2_se) = independent_ratio(d2, d2_se, n2.value, n2.se);
    let joint = last.ratio_se.hypot(r2_se);
    let z = if joint > 0.0 { (r2 - last.ratio).abs() / joint } else { 0.0 };
    let doubling = DoublingCheck {
        t: last.t,
        n_steps: b.mc.n_steps,
        ratio: last.ratio,
        ratio_se: last.ratio_se,
        doubled_n_steps: mc2.n_steps,
        doubled_ratio: r2,
        doubled_ratio_se: r2_se,
        z,
        passed: z <= DOUBLING_Z,
    };

    // Extrapolation.
    let t_vals: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let ses: Vec<f64> = rows.iter().map(|r| r.ratio_se).collect();
    let acc = cfg.acceptance.as_ref();
    let theta = match acc.and_then(|a| a.theta.clone()) {
        None => default_theta(&b.process),
        Some(ThetaConfig::Named(s)) if s == "default" => default_theta(&b.process),
        Some(ThetaConfig::Named(_)) => Theta::Free,
        Some(ThetaConfig::Value(v)) => Theta::Fixed(v),
    };
    let extrapolation = if rows.len() < 3 {
        warnings.push(format!("{}-point ladder: no extrapolation", rows.len()));
        None
    } else {
        let e = extrapolate_ratio(&t_vals, &ratios, &ses, theta).map_err(err)?;
        if e.fallback {
            warnings.push(e.note.clone());
        }
        Some(ExtrapolationSummary {
            limit: e.limit,
            stderr: e.stderr,
            ci_low: e.ci.0,
            ci_high: e.ci.1,
            theta: e.theta,
            slope: e.slope,
            chi2: e.chi2,
            dof: e.dof,
            fallback: e.fallback,
            trend: e.trend.name().to_string(),
            note: e.note,
        })
    };

    // Prediction.
    let predicted = match (acc.and_then(|a| a.predicted), &b.field) {
        (Some(p), _) => Some((p, 0.0)),
        (None, Some(f)) => f.total_variation().map(|v| (v, 0.0)),
        (None, None) => match predicted_limit(&b.process, &b.domain, kind, cache) {
            Ok(p) => Some((p.value, p.rel_stderr)),
            Err(e) => {
                if acc.is_some_and(|a| a.mode != AcceptanceMode::Band) {
                    return Err(err(e));
                }
                warnings.push(format!("no predicted limit: {e}"));
                None
            }
        },
    };
    if let Some((_, r)) = predicted {
        rel_const = rel_const.hypot(r);
    }

    let (verdict, detail) = if !doubling.passed {
        (
            Verdict::GridLimited,
            format!(
                "doubling n_steps {} -> {} moved the ratio by {z:.2} joint stderr",
                doubling.n_steps, doubling.doubled_n_steps
            ),
        )
    } else {
        match acc {
            None => (Verdict::NoVerdict, "no acceptance criterion".to_string()),
            Some(a) => judge(a, &b, predicted.map(|p| p.0), rel_const, &rows, extrapolation.as_ref()),
        }
    };

    if let Some(budget) = cfg.budget_s {
        let spent = started.elapsed().as_secs_f64();
        if opts.timing && spent > budget {
            warnings.push(format!("runtime {spent:.0}s exceeds the declared budget {budget:.0}s"));
        }
    }
    for w in &warnings {
        log::warn!("{}: {w}", cfg.name);
    }
    Ok(ExperimentReport {
        experiment: cfg.name.clone(),
        family,
        domain: domain_name,
        norm_kind: kind.name().to_string(),
        mass,
        rows,
        extrapolation,
        predicted_limit: predicted.map(|p| p.0),
        constant_rel_stderr: rel_const,
        doubling: Some(doubling),
        verdict,
        verdict_detail: detail,
        config_sha256: config_hash(&cfg),
        seed: cfg.mc.seed,
        threads: rayon::current_num_threads(),
        threads_source: opts.threads_source.clone(),
        warnings,
        runtime_s: if opts.timing { started.elapsed().as_secs_f64() } else { 0.0 },
    })
}

fn judge(
    a: &crate::config::AcceptanceConfig,
    b: &Built,
    predicted: Option<f64>,
    rel_const: f64,
    rows: &[Row],
    extrapolation: Option<&ExtrapolationSummary>,
) -> (Verdict, String) {
    let last = rows.last().expect("nonempty ladder");
    let verdict = |ok: bool| if ok { Verdict::Pass } else { Verdict::Fail };
    match a.mode {
        AcceptanceMode::Extrapolated | AcceptanceMode::SmallestT => {
            let Some(p) = predicted else {
                return (Verdict::Fail, "no predicted limit".into());
            };
            // Tolerances are widened by the relative stderr of cached constants.
            let tol = a.tolerance.unwrap_or(0.0) + rel_const;
            let (value, what) = match (a.mode, extrapolation) {
                (AcceptanceMode::Extrapolated, Some(e)) => (e.limit, "extrapolated"),
                (AcceptanceMode::Extrapolated, None) => (last.ratio, "smallest-t (no extrapolation)"),
                _ => (last.ratio, "smallest-t"),
            };
            let dev = (value - p).abs() / p.abs();
            let mut ok = dev <= tol;
            let mut detail = format!(
                "{what} ratio {value:.5} vs predicted {p:.5}: deviation {:.2}% (tolerance {:.2}%)",
                100.0 * dev,
                100.0 * tol
            );
            if a.monotone {
                let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
                let r: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
                let s: Vec<f64> = rows.iter().map(|r| r.ratio_se).collect();
                let mono = moves_toward(&t, &r, &s, p, 2.0);
                ok &= mono;
                detail += if mono {
                    "; ladder approaches the prediction monotonically"
                } else {
                    "; ladder does not approach the prediction monotonically"
                };
            }
            (verdict(ok), detail)
        }
        AcceptanceMode::Band => {
            let [lo, hi] = a.band.expect("validated");
            let per = match b.domain.perimeter() {
                Ok(p) => p.value,
                Err(e) => return (Verdict::Fail, format!("no perimeter: {e}")),
            };
            let g = gradient_ratio(&b.domain);
            let (lower, upper) = (lo * per, hi * g * per);
            let outside: Vec<String> = rows
                .iter()
                .filter(|r| r.ratio + 2.0 * r.ratio_se < lower || r.ratio - 2.0 * r.ratio_se > upper)
                .map(|r| format!("t={:e}: {:.4}", r.t, r.ratio))
                .collect();
            let detail = format!(
                "band [{lower:.4}, {upper:.4}] (Per {per:.4}, gradient ratio {g:.4}); {} of {} ratios outside{}",
                outside.len(),
                rows.len(),
                if outside.is_empty() { String::new() } else { format!(": {}", outside.join(", ")) }
            );
            (verdict(outside.is_empty()), detail)
        }
    }
}
