use super::*;
use crate::rng::{purpose, PathStreams};
use crate::special::gamma;
use crate::stats::ks_two_sample;

fn streams(seed: u64, i: u64) -> PathStreams {
    PathStreams::new(seed, purpose::HEAT_CONTENT, i)
}

fn endpoints(spec: &ProcessSpec<f64>, t: f64, n_steps: usize, n: u64, seed: u64) -> Vec<Vec<f64>> {
    let s = PathSampler::new(spec, t, n_steps, false).unwrap();
    let zero = vec![0.0; spec.dim()];
    (0..n)
        .map(|i| s.sample_path(&zero, &mut streams(seed, i)).unwrap().end().to_vec())
        .collect()
}

fn families(dim: usize) -> Vec<ProcessSpec<f64>> {
    vec![
        ProcessSpec::brownian(dim).unwrap(),
        ProcessSpec::stable(1.5, dim).unwrap(),
        ProcessSpec::stable(1.0, dim).unwrap(),
        ProcessSpec::fbm(0.75, dim).unwrap(),
        ProcessSpec::time_changed(
            1.8,
            ClockSpec::InverseSubordinator(SubordinatorSpec::Stable { beta: 0.5 }),
            dim,
        )
        .unwrap(),
    ]
}

#[test]
fn spec_validation() {
    assert!(ProcessSpec::stable(2.5f64, 2).is_err());
    assert!(ProcessSpec::stable(1.0f64, 0).is_err());
    assert!(ProcessSpec::fbm(1.0f64, 2).is_err());
    let clock = ClockSpec::DeterministicPower { beta: 0.5f64 };
    assert!(ProcessSpec::time_changed(0.9, clock.clone(), 2).is_err());
    assert!(ProcessSpec::time_changed(1.5, ClockSpec::DeterministicPower { beta: 1.0 }, 2).is_err());
    let spec = ProcessSpec::time_changed(1.5, clock, 2).unwrap();
    assert!((spec.self_similarity_index().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(ProcessSpec::<f64>::brownian(2).unwrap().gaussian_variance_rate(), Some(2.0));
}

#[test]
fn bernstein_functions_are_concave_increasing() {
    let specs = [
        SubordinatorSpec::Stable { beta: 0.3 },
        SubordinatorSpec::TemperedStable { beta: 0.7, theta: 2.0 },
        SubordinatorSpec::DriftCompoundPoisson {
            drift: 0.5,
            rate: 3.0,
            jump: JumpLaw::Uniform { lo: 0.0, hi: 2.0 },
        },
    ];
    for s in &specs {
        assert_eq!(s.laplace_exponent(0.0f64), 0.0);
        let grid: Vec<f64> = (1..200).map(|k| 0.05 * k as f64).collect();
        let v: Vec<f64> = grid.iter().map(|&l| s.laplace_exponent(l)).collect();
        for w in v.windows(3) {
            assert!(w[1] > w[0]);
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-12);
        }
    }
}

#[test]
fn brownian_single_step_second_moment() {
    let ends = endpoints(&ProcessSpec::brownian(2).unwrap(), 1.0, 1, 1_000_000, 1);
    let m = ends.iter().map(|x| x[0] * x[0] + x[1] * x[1]).sum::<f64>() / ends.len() as f64;
    assert!((m / 4.0 - 1.0).abs() < 0.01, "{m}");
}

#[test]
fn half_hurst_fbm_has_unit_variance() {
    let ends = endpoints(&ProcessSpec::fbm(0.5, 1).unwrap(), 1.0, 16, 200_000, 2);
    let v = ends.iter().map(|x| x[0] * x[0]).sum::<f64>() / ends.len() as f64;
    assert!((v - 1.0).abs() < 0.01, "{v}");
}

#[test]
fn bridge_sup_is_exact_and_grid_sup_is_low() {
    let spec = ProcessSpec::brownian_standard(1).unwrap();
    let target = (2.0 / std::f64::consts::PI).sqrt();
    let run = |n_steps: usize, bridge: bool, n: u64| {
        let s = PathSampler::new(&spec, 1.0, n_steps, bridge).unwrap();
        (0..n)
            .map(|i| running_sup_first_coordinate(&s.sample_path(&[0.0], &mut streams(3, i)).unwrap()))
            .sum::<f64>()
            / n as f64
    };
    let exact = run(4, true, 1_000_000);
    assert!((exact / target - 1.0).abs() < 0.005, "{exact}");
    let grid = run(64, false, 100_000);
    assert!(grid < target - 0.03, "{grid}");
}

#[test]
fn bridge_needs_gaussian_family() {
    assert!(PathSampler::new(&ProcessSpec::stable(1.5f64, 1).unwrap(), 1.0, 8, true).is_err());
    assert!(PathSampler::new(&ProcessSpec::stable(2.0f64, 1).unwrap(), 1.0, 8, true).is_ok());
}

#[test]
fn grid_refinement_raises_the_sup() {
    for spec in [
        ProcessSpec::stable(1.5, 1).unwrap(),
        ProcessSpec::brownian(1).unwrap(),
        ProcessSpec::fbm(0.75, 1).unwrap(),
    ] {
        let s = PathSampler::new(&spec, 2.0, 4096, false).unwrap();
        for i in 0..20 {
            let fine = s.sample_path(&[0.0], &mut streams(4, i)).unwrap();
            let coarse = fine.coarsen(64).unwrap();
            assert!(running_sup_first_coordinate(&fine) >= running_sup_first_coordinate(&coarse));
        }
    }
}

#[test]
fn paths_are_deterministic_given_streams() {
    for spec in families(2) {
        let s = PathSampler::new(&spec, 0.5, 32, false).unwrap();
        let a = s.sample_path(&[0.1, 0.2], &mut streams(5, 9)).unwrap();
        let b = s.sample_path(&[0.1, 0.2], &mut streams(5, 9)).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
    }
}

#[test]
fn early_stop_is_honoured() {
    let s = PathSampler::new(&ProcessSpec::brownian(1).unwrap(), 1.0, 100, false).unwrap();
    let mut visits = 0;
    s.walk(&mut streams(6, 0), |_| {
        visits += 1;
        visits < 10
    })
    .unwrap();
    assert_eq!(visits, 10);
}

#[test]
fn isotropy_of_projections() {
    let n = 20_000u64;
    for (f, spec) in families(2).into_iter().enumerate() {
        let projections: Vec<Vec<f64>> = (0..5u64)
            .map(|j| {
                let angle = 0.4 + 1.3 * j as f64;
                let (c, s) = (angle.cos(), angle.sin());
                endpoints(&spec, 0.5, 8, n, 100 + 10 * f as u64 + j)
                    .iter()
                    .map(|x| c * x[0] + s * x[1])
                    .collect()
            })
            .collect();
        // Bonferroni over 5 families x 10 pairs at family level 0.01.
        for a in 0..5 {
            for b in a + 1..5 {
                let ks = ks_two_sample(&projections[a], &projections[b]);
                assert!(ks.p_value > 0.01 / 50.0, "{} {a} {b} {ks:?}", spec.name());
            }
        }
    }
}

#[test]
fn symmetry_of_first_coordinate() {
    // Heavy-tailed families have no finite variance, so the symmetric
    // bounded statistic clamp(X, -1, 1) is tested instead of the raw mean.
    for spec in families(2) {
        let ends = endpoints(&spec, 0.3, 8, 40_000, 7);
        let xs: Vec<f64> = ends.iter().map(|x| x[0].clamp(-1.0, 1.0)).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(m.abs() < 3.0 * (v / xs.len() as f64).sqrt(), "{}: {m}", spec.name());
    }
}

#[test]
fn stable_scaling() {
    let (alpha, t) = (1.5f64, 0.2f64);
    let spec = ProcessSpec::stable(alpha, 1).unwrap();
    let a: Vec<f64> = endpoints(&spec, t, 4, 100_000, 8).iter().map(|x| x[0] / t.powf(1.0 / alpha)).collect();
    let b: Vec<f64> = endpoints(&spec, 1.0, 4, 100_000, 9).iter().map(|x| x[0]).collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn power_clock_reproduces_inner_law() {
    let (alpha, beta, t) = (1.5f64, 0.5f64, 0.25f64);
    let clock = ClockSpec::DeterministicPower { beta };
    let a: Vec<f64> = (0..50_000)
        .map(|i| time_changed_path(alpha, &clock, 1, t, 16, &mut streams(10, i)).unwrap().end()[0])
        .collect();
    let inner = ProcessSpec::stable(alpha, 1).unwrap();
    let b: Vec<f64> = endpoints(&inner, t.powf(beta), 16, 50_000, 11).iter().map(|x| x[0]).collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn power_clock_self_similarity() {
    let (alpha, beta, t, c) = (1.8f64, 0.5f64, 0.5f64, 2.0f64);
    let clock = ClockSpec::DeterministicPower { beta };
    let spec = ProcessSpec::time_changed(alpha, clock, 1).unwrap();
    let a: Vec<f64> = endpoints(&spec, t * c.powf(-alpha / beta), 16, 50_000, 12)
        .iter()
        .map(|x| c * x[0])
        .collect();
    let b: Vec<f64> = endpoints(&spec, t, 16, 50_000, 13).iter().map(|x| x[0]).collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn inverse_stable_clock_sup_mean_factorizes() {
    // E[sup X^(1)] = E[sup W^(1)_1] E[E_t^(1/2)] for a variance-2 Brownian inner path.
    let clock = ClockSpec::InverseSubordinator(SubordinatorSpec::Stable { beta: 0.5 });
    let spec = ProcessSpec::time_changed(2.0, clock, 1).unwrap();
    let s = PathSampler::new(&spec, 1.0, 4096, false).unwrap();
    let n = 10_000u64;
    let mean = (0..n)
        .map(|i| running_sup_first_coordinate(&s.sample_path(&[0.0], &mut streams(14, i)).unwrap()))
        .sum::<f64>()
        / n as f64;
    let expect = 2.0 / std::f64::consts::PI.sqrt() * gamma(1.5) / gamma(1.25);
    assert!((mean / expect - 1.0).abs() < 0.04, "{mean} vs {expect}");
}

#[test]
fn flat_clock_reuses_position() {
    // Pure compound-Poisson subordinator: the inverse clock has flat spots.
    let sub = SubordinatorSpec::DriftCompoundPoisson {
        drift: 0.0,
        rate: 1.0,
        jump: JumpLaw::Exponential { mean: 1.0 },
    };
    let spec = ProcessSpec::time_changed(1.5, ClockSpec::InverseSubordinator(sub), 1).unwrap();
    let s = PathSampler::new(&spec, 0.5, 64, false).unwrap();
    let p = s.sample_path(&[0.0], &mut streams(15, 0)).unwrap();
    let repeats = (1..p.len()).filter(|&k| p.position(k)[0] == p.position(k - 1)[0]).count();
    assert!(repeats > 0);
}

