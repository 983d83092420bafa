//! The property suite: structural identities and inequalities checked at
//! fixed sizes, each against a stated multiple of its standard error.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use shc_core::asymptotics::{extrapolate_ratio, Theta};
use shc_core::estimators::{
    assumption1_diagnostic, estimate_deficit, estimate_mu, estimate_q, estimate_qf, Indicator, McConfig, StepField,
    WithSupport,
};
use shc_core::geometry::{rotation_2d, DomainSpec};
use shc_core::processes::ProcessSpec;
use shc_core::rng::{purpose, RngStream};

use crate::error::Result;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> PropertyCheck {
    PropertyCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn disk(r: f64) -> DomainSpec<f64> {
    DomainSpec::ball(vec![0.0, 0.0], r).expect("valid disk")
}

fn bm() -> ProcessSpec<f64> {
    ProcessSpec::brownian(2).expect("valid process")
}

struct Sizes {
    seed: u64,
    scale: f64,
}

impl Sizes {
    fn cfg(&self, n: usize, steps: usize, offset: u64) -> Result<McConfig> {
        let n = ((n as f64 * self.scale).round() as usize).max(shc_core::estimators::MIN_PATHS);
        Ok(McConfig::new(n, steps, self.seed.wrapping_add(offset))?)
    }
}

/// Runs every property check. `scale` multiplies the path counts.
pub fn run_properties(seed: u64, scale: f64) -> Result<Vec<PropertyCheck>> {
    let s = Sizes { seed, scale };
    Ok(vec![
        layer_cake(&s)?,
        mollifier_inequality(&s)?,
        monotone_in_t(&s)?,
        monotone_in_domain(&s)?,
        rotation(&s)?,
        dilation(&s)?,
        liminf_bound(&s)?,
        mollified_perimeter()?,
        clamped_gradient(seed)?,
        assumption1(&s)?,
    ])
}

fn layer_cake(s: &Sizes) -> Result<PropertyCheck> {
    // f = 1_{B(1)} + 1_{B(1/2)}: Q_f = Q_{B(1)} + Q_{B(1/2)}. Grid skeleton on both sides.
    let t = 1e-3;
    let mut c = s.cfg(40_000, 32, 1)?;
    c.bridge_correction = false;
    let f = StepField::new(vec![(1.0, disk(1.0)), (1.0, disk(0.5))])?;
    let qf = estimate_qf(&bm(), &f, t, &c)?.q;
    let q1 = estimate_q(&bm(), &disk(1.0), t, &c)?;
    let q2 = estimate_q(&bm(), &disk(0.5), t, &c.with_seed(c.seed ^ 0x55))?;
    let sum = q1.value + q2.value;
    let se = qf.stderr.hypot(q1.stderr).hypot(q2.stderr);
    let z = (qf.value - sum).abs() / se;
    Ok(check(
        "layer-cake identity",
        z <= 3.0,
        format!("Q_f {:.5} vs sum of level sets {sum:.5}: {z:.2} stderr (limit 3)", qf.value),
    ))
}

fn mollifier_inequality(s: &Sizes) -> Result<PropertyCheck> {
    let t = 1e-3;
    let c = s.cfg(20_000, 32, 2)?;
    let (lo, hi) = (vec![-1.3, -1.3], vec![1.3, 1.3]);
    let wrap = |f: Arc<dyn shc_core::estimators::HeatField<f64>>| WithSupport {
        field: f,
        lower: lo.clone(),
        upper: hi.clone(),
    };
    let base = estimate_qf(&bm(), &wrap(Arc::new(Indicator(disk(1.0)))), t, &c)?.r;
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [0.05, 0.1] {
        let m = disk(1.0).mollify(eps, eps / 10.0)?;
        let r = estimate_qf(&bm(), &wrap(Arc::new(m)), t, &c)?.r;
        let slack = 2.0 * r.stderr.hypot(base.stderr);
        ok &= r.value <= base.value + slack;
        parts.push(format!("eps {eps}: R {:.5}", r.value));
    }
    Ok(check(
        "mollifier inequality",
        ok,
        format!("R_1 {:.5}; {} (each <= R_1 + 2 stderr)", base.value, parts.join(", ")),
    ))
}

fn monotone_in_t(s: &Sizes) -> Result<PropertyCheck> {
    let c = s.cfg(20_000, 32, 3)?;
    let dom = disk(1.0);
    let mut prev: Option<(f64, f64)> = None;
    let mut ok = true;
    let mut vals = Vec::new();
    for t in [1e-4, 1e-3, 1e-2, 1e-1] {
        let q = estimate_q(&bm(), &dom, t, &c)?;
        ok &= q.value <= PI + 2.0 * q.stderr;
        if let Some((v, se)) = prev {
            ok &= q.value <= v + 2.0 * q.stderr.hypot(se);
        }
        prev = Some((q.value, q.stderr));
        vals.push(format!("{:.4}", q.value));
    }
    Ok(check(
        "Q monotone in t",
        ok,
        format!("Q(1e-4..1e-1) = [{}], all <= Vol", vals.join(", ")),
    ))
}

fn monotone_in_domain(s: &Sizes) -> Result<PropertyCheck> {
    let mut c = s.cfg(20_000, 32, 4)?;
    c.common_box = Some((vec![-1.0, -1.0], vec![1.0, 1.0]));
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [1e-3, 1e-2, 1e-1] {
        let small = estimate_q(&bm(), &disk(0.8), t, &c)?;
        let big = estimate_q(&bm(), &disk(1.0), t, &c)?;
        ok &= small.value <= big.value;
        parts.push(format!("t={t:e}: {:.4} <= {:.4}", small.value, big.value));
    }
    Ok(check(
        "Q monotone in the domain (pathwise coupled)",
        ok,
        parts.join("; "),
    ))
}

fn rotation(s: &Sizes) -> Result<PropertyCheck> {
    let c = s.cfg(40_000, 32, 5)?;
    let plain = DomainSpec::ellipsoid(vec![0.0, 0.0], vec![1.0, 0.6], None)?;
    let turned = DomainSpec::ellipsoid(vec![0.0, 0.0], vec![1.0, 0.6], Some(rotation_2d(PI / 6.0)))?;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [bm(), ProcessSpec::stable(1.5, 2)?] {
        let a = estimate_q(&p, &plain, 1e-3, &c)?;
        let b = estimate_q(&p, &turned, 1e-3, &c.with_seed(c.seed ^ 0xa5))?;
        let z = (a.value - b.value).abs() / a.stderr.hypot(b.stderr);
        ok &= z <= 3.0;
        parts.push(format!("{}: {z:.2} stderr", p.name()));
    }
    Ok(check("rotation invariance", ok, parts.join("; ") + " (limit 3)"))
}

fn dilation(s: &Sizes) -> Result<PropertyCheck> {
    // Q_{c Omega}(t) = c^d Q_Omega(t c^-alpha).
    let c_scale = 2.0f64;
    let base = disk(0.5);
    let big = base.dilate(c_scale)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [1.2, 1.5, 2.0] {
        let p = ProcessSpec::stable(alpha, 2)?;
        let t = 1e-3;
        let c = s.cfg(20_000, 32, 6)?;
        let lhs = estimate_q(&p, &big, t, &c)?;
        let rhs = estimate_q(&p, &base, t * c_scale.powf(-alpha), &c.with_seed(c.seed ^ 0x3c))?;
        let k = c_scale.powi(2);
        let z = (lhs.value - k * rhs.value).abs() / lhs.stderr.hypot(k * rhs.stderr);
        ok &= z <= 3.0;
        parts.push(format!("alpha {alpha}: {z:.2} stderr"));
    }
    Ok(check("stable dilation law", ok, parts.join("; ") + " (limit 3)"))
}

fn liminf_bound(s: &Sizes) -> Result<PropertyCheck> {
    // Extrapolated (Vol - Q)/mu for alpha = 1.5 on an ellipse must not fall below Per.
    let p = ProcessSpec::stable(1.5, 2)?;
    let dom = DomainSpec::ellipsoid(vec![0.0, 0.0], vec![1.0, 0.6], None)?;
    let per = dom.perimeter()?.value;
    let c = s.cfg(50_000, 128, 7)?;
    let ts = [1e-2, 1e-3, 1e-4, 1e-5];
    let (mut r, mut se) = (Vec::new(), Vec::new());
    for &t in &ts {
        let d = estimate_deficit(&p, &dom, t, &c)?.deficit;
        let m = estimate_mu(&p, t, &c)?;
        let (ratio, rse) = shc_core::stats::independent_ratio(d.value, d.stderr, m.value, m.stderr);
        r.push(ratio);
        se.push(rse);
    }
    let e = extrapolate_ratio(&ts, &r, &se, Theta::Fixed(1.0 / 3.0))?;
    let ok = e.limit + 2.0 * e.stderr >= per;
    Ok(check(
        "liminf bound (Vol - Q)/mu >= Per",
        ok,
        format!(
            "stable 1.5 on ellipse(1, 0.6): ratios [{}], extrapolated {:.4} +- {:.4} vs Per {per:.4}",
            r.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            e.limit,
            e.stderr
        ),
    ))
}

fn mollified_perimeter() -> Result<PropertyCheck> {
    let eps = 0.005;
    let tv = disk(1.0).mollified_variation(eps, eps / 5.0)?;
    let dev = (tv / (2.0 * PI) - 1.0).abs();
    Ok(check(
        "mollified perimeter convergence",
        dev <= 0.02,
        format!("int |grad 1_B * rho_eps| at eps {eps}: {tv:.5} vs 2 pi, deviation {:.3}% (limit 2%)", 100.0 * dev),
    ))
}

fn clamped_gradient(seed: u64) -> Result<PropertyCheck> {
    let r = 0.2;
    let field = disk(1.0).clamped_level_set(r, 0.0)?;
    let mut rng = RngStream::new(seed ^ purpose::GEOMETRY, 0);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut g = [0.0; 2];
    for _ in 0..20_000 {
        // Uniform in the shell |delta| < r/2 around the unit circle.
        let rad = (1.0 - r / 2.0) + r * rng.uniform();
        let ang = 2.0 * PI * rng.uniform();
        field.gradient(&[rad * ang.cos(), rad * ang.sin()], &mut g);
        let n = g[0].hypot(g[1]);
        lo = lo.min(n);
        hi = hi.max(n);
    }
    Ok(check(
        "clamped level-set gradient norm",
        lo >= 0.999 && hi <= 1.001,
        format!("|grad phi| in [{lo:.6}, {hi:.6}] on the shell (limit [0.999, 1.001])"),
    ))
}

fn assumption1(s: &Sizes) -> Result<PropertyCheck> {
    let c = s.cfg(40_000, 64, 8)?;
    let ts = [1e-2, 1e-3, 1e-4];
    let eps = [0.1, 0.2, 0.5];
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [ProcessSpec::brownian(1)?, ProcessSpec::stable(1.2, 1)?, ProcessSpec::stable(1.5, 1)?] {
        let table = assumption1_diagnostic(&p, &ts, &eps, &c)?;
        let all = table.monotone.iter().all(|m| *m);
        ok &= all;
        parts.push(format!(
            "{}: {} (P(sup > 0.1)/mu: {})",
            p.name(),
            if all { "decreasing" } else { "not decreasing" },
            table.ratio.iter().map(|r| format!("{:.3e}", r[0])).collect::<Vec<_>>().join(" -> ")
        ));
    }
    Ok(check("tail-to-mu monotone decay", ok, parts.join("; ")))
}
