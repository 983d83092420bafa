//! Experiment reports: the fixed CSV contract and a JSON sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One CSV row. Column order is the contract consumed by the plotting tools.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub family: String,
    pub domain: String,
    pub t: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub q_hat: f64,
    pub q_se: f64,
    pub norm_kind: String,
    pub norm_hat: f64,
    pub norm_se: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    pub runtime_s: f64,
}

pub const CSV_COLUMNS: [&str; 14] = [
    "experiment",
    "family",
    "domain",
    "t",
    "n_paths",
    "n_steps",
    "q_hat",
    "q_se",
    "norm_kind",
    "norm_hat",
    "norm_se",
    "ratio",
    "ratio_se",
    "runtime_s",
];

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The step-doubling check moved the ratio by more than two joint
    /// standard errors; no pass/fail verdict is given.
    GridLimited,
    /// No acceptance criterion configured.
    NoVerdict,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::GridLimited => "GRID-LIMITED",
            Verdict::NoVerdict => "NO-VERDICT",
        }
    }

    /// Severity order used when combining verdicts: fail > grid-limited > pass.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::NoVerdict => 0,
            Verdict::Fail => 1,
            Verdict::GridLimited => 2,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct DoublingCheck {
    pub t: f64,
    pub n_steps: usize,
    pub ratio: f64,
    pub ratio_se: f64,
    pub doubled_n_steps: usize,
    pub doubled_ratio: f64,
    pub doubled_ratio_se: f64,
    /// `|doubled - ratio| / joint stderr`.
    pub z: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct ExtrapolationSummary {
    pub limit: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub theta: f64,
    pub slope: f64,
    pub chi2: f64,
    pub dof: usize,
    pub fallback: bool,
    pub trend: String,
    pub note: String,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub family: String,
    pub domain: String,
    pub norm_kind: String,
    /// `Vol(Omega)`, or `int f` for functional experiments.
    pub mass: f64,
    pub rows: Vec<Row>,
    pub extrapolation: Option<ExtrapolationSummary>,
    pub predicted_limit: Option<f64>,
    /// Relative stderr of cached constants entering the prediction or normaliser.
    pub constant_rel_stderr: f64,
    pub doubling: Option<DoublingCheck>,
    pub verdict: Verdict,
    /// Human-readable reason for the verdict.
    pub verdict_detail: String,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub threads_source: String,
    pub warnings: Vec<String>,
    pub runtime_s: f64,
}

impl ExperimentReport {
    /// Metadata lines written above the CSV header. Thread count and total
    /// runtime are left out so that the bytes do not depend on scheduling.
    fn metadata(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("experiment".to_string(), self.experiment.clone()),
            ("family".into(), self.family.clone()),
            ("domain".into(), self.domain.clone()),
            ("norm_kind".into(), self.norm_kind.clone()),
            ("mass".into(), format!("{:e}", self.mass)),
        ];
        if let Some(p) = self.predicted_limit {
            m.push(("predicted_limit".into(), format!("{p:e}")));
        }
        m.push(("constant_rel_stderr".into(), format!("{:e}", self.constant_rel_stderr)));
        if let Some(e) = &self.extrapolation {
            m.push(("extrapolated_limit".into(), format!("{:e}", e.limit)));
            m.push(("extrapolated_stderr".into(), format!("{:e}", e.stderr)));
            m.push(("extrapolation_theta".into(), format!("{:e}", e.theta)));
            m.push(("extrapolation_slope".into(), format!("{:e}", e.slope)));
            m.push(("extrapolation_fallback".into(), e.fallback.to_string()));
        }
        if let Some(d) = &self.doubling {
            m.push(("doubling_z".into(), format!("{:e}", d.z)));
        }
        m.push(("verdict".into(), self.verdict.name().to_string()));
        m.push(("config_sha256".into(), self.config_sha256.clone()));
        m.push(("seed".into(), self.seed.to_string()));
        m
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in self.metadata() {
            writeln!(w, "# {k}={v}")?;
        }
        let mut wr = csv::WriterBuilder::new().has_headers(true).from_writer(w);
        for r in &self.rows {
            wr.serialize(FloatRow::from(r))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8")
    }

    /// Writes `<dir>/<experiment>.csv` and `<dir>/<experiment>.json`.
    pub fn save(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let stem = sanitize(&self.experiment);
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&csv_path, self.csv_string())?;
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(&json_path, json + "\n")?;
        Ok((csv_path, json_path))
    }

    /// Fixed-width table for terminals.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{}  [{} on {}, normaliser {}]\n{:>11} {:>13} {:>11} {:>13} {:>11} {:>9} {:>9}\n",
            self.experiment, self.family, self.domain, self.norm_kind, "t", "q_hat", "q_se", "norm_hat", "ratio", "ratio_se", "time_s"
        );
        for r in &self.rows {
            s += &format!(
                "{:>11.3e} {:>13.6e} {:>11.3e} {:>13.6e} {:>11.6} {:>9.2e} {:>9.2}\n",
                r.t, r.q_hat, r.q_se, r.norm_hat, r.ratio, r.ratio_se, r.runtime_s
            );
        }
        if let Some(e) = &self.extrapolation {
            let fit = if e.fallback {
                format!("fallback: {}", e.note)
            } else {
                format!("theta {:.3}", e.theta)
            };
            s += &format!(
                "extrapolated limit {:.6} +- {:.2e} (95% CI [{:.6}, {:.6}], {fit})\n",
                e.limit, e.stderr, e.ci_low, e.ci_high
            );
        }
        if let Some(p) = self.predicted_limit {
            s += &format!("predicted limit {p:.6}\n");
        }
        if let Some(d) = &self.doubling {
            s += &format!(
                "step doubling at t={:.1e}: {} -> {} steps, ratio {:.6} -> {:.6} (z = {:.2})\n",
                d.t, d.n_steps, d.doubled_n_steps, d.ratio, d.doubled_ratio, d.z
            );
        }
        for w in &self.warnings {
            s += &format!("warning: {w}\n");
        }
        s += &format!("verdict: {} ({})\n", self.verdict.name(), self.verdict_detail);
        s
    }
}

// Floats are written in shortest round-trip exponent form.
#[derive(Serialize)]
struct FloatRow<'a> {
    experiment: &'a str,
    family: &'a str,
    domain: &'a str,
    t: String,
    n_paths: usize,
    n_steps: usize,
    q_hat: String,
    q_se: String,
    norm_kind: &'a str,
    norm_hat: String,
    norm_se: String,
    ratio: String,
    ratio_se: String,
    runtime_s: String,
}

impl<'a> From<&'a Row> for FloatRow<'a> {
    fn from(r: &'a Row) -> Self {
        let e = |x: f64| format!("{x:e}");
        Self {
            experiment: &r.experiment,
            family: &r.family,
            domain: &r.domain,
            t: e(r.t),
            n_paths: r.n_paths,
            n_steps: r.n_steps,
            q_hat: e(r.q_hat),
            q_se: e(r.q_se),
            norm_kind: &r.norm_kind,
            norm_hat: e(r.norm_hat),
            norm_se: e(r.norm_se),
            ratio: e(r.ratio),
            ratio_se: e(r.ratio_se),
            runtime_s: e(r.runtime_s),
        }
    }
}

/// Parses a report CSV back into metadata and rows.
pub fn read_csv(text: &str) -> Result<(Vec<(String, String)>, Vec<Row>)> {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(m) = line.strip_prefix("# ") {
            if let Some((k, v)) = m.split_once('=') {
                meta.push((k.to_string(), v.to_string()));
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let rows = rd.deserialize().collect::<std::result::Result<Vec<Row>, _>>()?;
    Ok((meta, rows))
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
