use std::f64::consts::PI;

use approx::assert_relative_eq;

use super::*;
use crate::rng::RngStream;

fn disk() -> DomainSpec<f64> {
    DomainSpec::unit_ball(2).unwrap()
}

#[test]
fn contains_examples() {
    let d = disk();
    assert!(d.contains(&[0.0, 0.0]).unwrap());
    assert!(!d.contains(&[1.0, 0.0]).unwrap());
    assert!(matches!(d.contains(&[0.0]), Err(Error::DimensionMismatch { .. })));
    let ls = DomainSpec::level_set(d.clamped_level_set(0.2, 0.0).unwrap()).unwrap();
    assert!(ls.contains(&[0.5, 0.0]).unwrap());
    assert!(!ls.contains(&[1.0, 0.0]).unwrap());
}

#[test]
fn volume_examples() {
    assert_relative_eq!(disk().volume().value, PI, max_relative = 1e-15);
    assert_eq!(DomainSpec::interval(0.0, 1.0).unwrap().volume().value, 1.0);
    let e = DomainSpec::ellipsoid(vec![0.0, 0.0], vec![2.0, 1.0], None).unwrap();
    assert_relative_eq!(e.volume().value, 2.0 * PI, max_relative = 1e-15);
    let a = DomainSpec::annulus(vec![0.0, 0.0], 0.5, 1.0).unwrap();
    assert_relative_eq!(a.volume().value, 0.75 * PI, max_relative = 1e-15);
}

#[test]
fn perimeter_examples() {
    assert_relative_eq!(disk().perimeter().unwrap().value, 2.0 * PI, max_relative = 1e-15);
    assert_eq!(DomainSpec::interval(0.0, 1.0).unwrap().perimeter().unwrap().value, 2.0);
    let e = DomainSpec::ellipsoid(vec![0.0, 0.0], vec![2.0, 1.0], None).unwrap();
    // Fine polygonal quadrature oracle.
    let n = 1_000_000;
    let poly: f64 = (0..n)
        .map(|k| {
            let (a, b) = (2.0 * PI * k as f64 / n as f64, 2.0 * PI * (k + 1) as f64 / n as f64);
            (2.0 * (b.cos() - a.cos())).hypot(b.sin() - a.sin())
        })
        .sum();
    assert_relative_eq!(e.perimeter().unwrap().value, poly, max_relative = 1e-9);
    assert_relative_eq!(poly, 9.6884, max_relative = 1e-5);
}

#[test]
fn degenerate_and_invalid_domains() {
    assert!(matches!(
        DomainSpec::ball(vec![0.0, 0.0], 1e-7),
        Err(Error::DegenerateDomain(_))
    ));
    assert!(DomainSpec::interval(1.0, 1.0).is_err());
    assert!(DomainSpec::<f64>::ball(vec![], 1.0).is_err());
    assert!(DomainSpec::annulus(vec![0.0], 1.0, 0.5).is_err());
    let skew = vec![1.0, 0.5, 0.0, 1.0];
    assert!(DomainSpec::ellipsoid(vec![0.0, 0.0], vec![1.0, 1.0], Some(skew)).is_err());
}

#[test]
fn signed_distance_examples() {
    let d = disk();
    assert_eq!(d.signed_distance(&[0.0, 0.0]).unwrap(), 1.0);
    assert_eq!(d.signed_distance(&[2.0, 0.0]).unwrap(), -1.0);
    let i = DomainSpec::interval(0.0, 1.0).unwrap();
    assert_eq!(i.signed_distance(&[0.3]).unwrap(), 0.3);
    let ls = DomainSpec::level_set(d.clamped_level_set(0.2, 0.0).unwrap()).unwrap();
    assert!(matches!(ls.signed_distance(&[0.0, 0.0]), Err(Error::Unsupported(_))));
}

#[test]
fn annulus_distance_and_reach() {
    let a = DomainSpec::annulus(vec![0.0, 0.0], 0.5, 1.0).unwrap();
    assert_relative_eq!(a.signed_distance(&[0.6, 0.0]).unwrap(), 0.1, max_relative = 1e-12);
    assert_relative_eq!(a.signed_distance(&[0.9, 0.0]).unwrap(), 0.1, max_relative = 1e-12);
    assert_relative_eq!(a.signed_distance(&[0.2, 0.0]).unwrap(), -0.3, max_relative = 1e-12);
    assert_eq!(a.reach(), Some(0.25));
}

#[test]
fn clamped_level_set_examples() {
    let f = disk().clamped_level_set(0.2, 0.0).unwrap();
    assert_relative_eq!(f.value(&[0.0, 0.0]), 0.2, max_relative = 1e-15);
    assert_relative_eq!(f.value(&[0.95, 0.0]), 0.05, max_relative = 1e-12);
    let mut g = [0.0; 2];
    f.gradient(&[0.95, 0.0], &mut g);
    assert_relative_eq!(g[0].hypot(g[1]), 1.0, max_relative = 1e-12);
    assert_relative_eq!(f.value(&[1.5, 0.0]), -0.2, max_relative = 1e-15);
    assert!(matches!(
        disk().clamped_level_set(1.0, 0.0),
        Err(Error::ReachExceeded { .. })
    ));
    assert!(disk().clamped_level_set(0.9, 0.2).is_err());
}

#[test]
fn clamped_gradient_unit_on_half_shell() {
    for dom in [
        disk(),
        DomainSpec::ellipsoid(vec![0.1, -0.2], vec![2.0, 1.0], Some(rotation_2d(0.4))).unwrap(),
    ] {
        let r = 0.8 * dom.reach().unwrap();
        let f = dom.clamped_level_set(r, 0.0).unwrap();
        let mut rng = RngStream::new(11, 0);
        let (lo, hi) = dom.bounds();
        let mut checked = 0;
        while checked < 2000 {
            let x: Vec<f64> = (0..2).map(|i| lo[i] - 0.2 + (hi[i] - lo[i] + 0.4) * rng.uniform()).collect();
            let delta = dom.signed_distance(&x).unwrap();
            assert_eq!(dom.contains(&x).unwrap(), f.value(&x) > 0.0);
            if delta.abs() >= r / 2.0 {
                continue;
            }
            let h = 1e-6;
            let fd: Vec<f64> = (0..2)
                .map(|i| {
                    let mut p = x.clone();
                    let mut m = x.clone();
                    p[i] += h;
                    m[i] -= h;
                    (f.value(&p) - f.value(&m)) / (2.0 * h)
                })
                .collect();
            let n = fd[0].hypot(fd[1]);
            assert!((0.999..=1.001).contains(&n), "{x:?}: {n}");
            checked += 1;
        }
    }
}

#[test]
fn level_set_volume_and_perimeter() {
    let f = disk().clamped_level_set(0.3, 0.0).unwrap();
    let ls = DomainSpec::level_set(f).unwrap();
    let v = ls.volume();
    assert!((v.value - PI).abs() < 1e-3, "{v:?}");
    let p = ls.perimeter().unwrap();
    assert!((p.value - 2.0 * PI).abs() < 1e-5, "{p:?}");
    assert!(p.error < 1e-5);
}

#[test]
fn rotated_ellipse_invariants() {
    let e0 = DomainSpec::ellipsoid(vec![0.0, 0.0], vec![2.0, 1.0], None).unwrap();
    let e1 = DomainSpec::ellipsoid(vec![0.3, 0.1], vec![2.0, 1.0], Some(rotation_2d(PI / 6.0))).unwrap();
    assert_relative_eq!(e0.volume().value, e1.volume().value, max_relative = 1e-14);
    assert_relative_eq!(
        e0.perimeter().unwrap().value,
        e1.perimeter().unwrap().value,
        max_relative = 1e-14
    );
    // Distance commutes with the rigid motion.
    let r = rotation_2d(PI / 6.0);
    for y in [[0.5, 0.2], [1.9, -0.3], [3.0, 1.0]] {
        let x = [0.3 + r[0] * y[0] + r[1] * y[1], 0.1 + r[2] * y[0] + r[3] * y[1]];
        assert_relative_eq!(
            e0.signed_distance(&y).unwrap(),
            e1.signed_distance(&x).unwrap(),
            max_relative = 1e-10
        );
    }
}

#[test]
fn signed_distance_is_one_lipschitz() {
    let doms = [
        disk(),
        DomainSpec::annulus(vec![0.0, 0.0], 0.4, 1.0).unwrap(),
        DomainSpec::ellipsoid(vec![0.0, 0.0, 0.0], vec![1.5, 1.0, 0.6], None).unwrap(),
    ];
    let mut rng = RngStream::new(5, 0);
    for dom in &doms {
        let d = dom.dim();
        for _ in 0..5000 {
            let x: Vec<f64> = (0..d).map(|_| 4.0 * rng.uniform() - 2.0).collect();
            let y: Vec<f64> = (0..d).map(|_| 4.0 * rng.uniform() - 2.0).collect();
            let lhs = (dom.signed_distance(&x).unwrap() - dom.signed_distance(&y).unwrap()).abs();
            assert!(lhs <= crate::scalar::dist(&x, &y) + 1e-9);
        }
    }
}

#[test]
fn sample_uniform_examples() {
    let mut rng = RngStream::new(1, 0);
    let s = disk().sample_uniform(100_000, &mut rng).unwrap();
    let radii: Vec<f64> = s.points.iter().map(|p| p[0].hypot(p[1])).collect();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    // E|x| = 2/3, Var|x| = 1/2 - 4/9.
    let se = ((0.5 - 4.0 / 9.0) / 1e5f64).sqrt();
    assert!((mean - 2.0 / 3.0).abs() < 3.0 * se);

    let s = DomainSpec::interval(0.0, 1.0).unwrap().sample_uniform(10, &mut rng).unwrap();
    assert_eq!(s.points.len(), 10);
    assert!(s.points.iter().all(|p| p[0] > 0.0 && p[0] < 1.0));

    let s = DomainSpec::<f64>::unit_ball(3).unwrap().sample_uniform(100_000, &mut rng).unwrap();
    let inner = s.points.iter().filter(|p| crate::scalar::norm(p) < 0.5).count() as f64 / 1e5;
    assert!((inner - 0.125).abs() < 3.0 * (0.125f64 * 0.875 / 1e5).sqrt());

    let ls = DomainSpec::level_set(disk().clamped_level_set(0.2, 0.0).unwrap()).unwrap();
    let s = ls.sample_uniform(1000, &mut rng).unwrap();
    assert!((s.acceptance_rate - PI / 4.0).abs() < 0.06);
}

#[test]
fn low_acceptance_is_reported() {
    let field = DistortedBall::new(0.0, 1.0, vec![0.0, 0.0])
        .unwrap()
        .into_level_set()
        .unwrap();
    // A tiny level set inside a huge declared box.
    #[derive(Debug)]
    struct Shrunk(LevelSetField<f64>);
    impl ScalarField<f64> for Shrunk {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.value(&[x[0] * 100.0, x[1] * 100.0])
        }
        fn gradient(&self, x: &[f64], out: &mut [f64]) {
            self.0.gradient(&[x[0] * 100.0, x[1] * 100.0], out);
            out.iter_mut().for_each(|v| *v *= 100.0);
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![-10.0, -10.0], vec![10.0, 10.0])
        }
        fn describe(&self) -> String {
            "shrunk".into()
        }
    }
    let ls = LevelSetField::with_boundary_gradient(std::sync::Arc::new(Shrunk(field)), 1.0, 1.0, 1.0, 1.0)
        .unwrap();
    let dom = DomainSpec::level_set(ls).unwrap();
    let mut rng = RngStream::new(3, 0);
    assert!(matches!(dom.sample_uniform(100, &mut rng), Err(Error::LowAcceptance(_))));
}

#[test]
fn shell_sample_examples() {
    let mut rng = RngStream::new(2, 0);
    let s = disk().boundary_shell_sample(0.1, 20_000, &mut rng).unwrap();
    assert_relative_eq!(s.shell_volume, PI * (1.0 - 0.81), max_relative = 1e-12);
    assert_relative_eq!(s.shell_volume + s.interior_volume, PI, max_relative = 1e-12);
    let total: f64 = s.weights.iter().sum();
    assert_relative_eq!(total, PI, max_relative = 1e-9);
    for (p, &shell) in s.points.iter().zip(&s.in_shell) {
        let delta = 1.0 - p[0].hypot(p[1]);
        assert!(delta > 0.0);
        assert_eq!(shell, delta < 0.1);
    }

    let i = DomainSpec::interval(0.0, 1.0).unwrap();
    let s = i.boundary_shell_sample(0.1, 100, &mut rng).unwrap();
    assert_relative_eq!(s.shell_volume, 0.2, max_relative = 1e-12);
    assert!(matches!(
        i.boundary_shell_sample(0.5, 100, &mut rng),
        Err(Error::ReachExceeded { .. })
    ));

    let high = DomainSpec::unit_ball(9).unwrap();
    assert!(matches!(
        high.boundary_shell_sample(0.1, 100, &mut rng),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn ellipse_shell_volume_matches_monte_carlo() {
    let e = DomainSpec::ellipsoid(vec![0.0, 0.0], vec![2.0, 1.0], Some(rotation_2d(0.3))).unwrap();
    let w = 0.2;
    let strata = Strata::new(&e, w).unwrap();
    let mut rng = RngStream::new(9, 0);
    let s = e.sample_uniform(200_000, &mut rng).unwrap();
    let frac = s
        .points
        .iter()
        .filter(|p| e.signed_distance(p).unwrap() < w)
        .count() as f64
        / 2e5;
    let se = (frac * (1.0 - frac) / 2e5).sqrt();
    assert!((frac * 2.0 * PI - strata.shell_volume).abs() < 4.0 * se * 2.0 * PI);

    let e3 = DomainSpec::ellipsoid(vec![0.0; 3], vec![1.5, 1.0, 0.8], None).unwrap();
    let strata = Strata::new(&e3, 0.1).unwrap();
    let s = e3.sample_uniform(200_000, &mut rng).unwrap();
    let frac = s
        .points
        .iter()
        .filter(|p| e3.signed_distance(p).unwrap() < 0.1)
        .count() as f64
        / 2e5;
    let vol = e3.volume().value;
    let se = (frac * (1.0 - frac) / 2e5).sqrt();
    assert!((frac * vol - strata.shell_volume).abs() < 4.0 * se * vol);
}

#[test]
fn shell_points_are_uniform_in_shell() {
    // Within the shell of the rotated ellipse, the fraction in the inner half
    // of the shell must match the ratio of Steiner volumes.
    let e = DomainSpec::ellipsoid(vec![0.0, 0.0], vec![2.0, 1.0], Some(rotation_2d(1.1))).unwrap();
    let (w, n) = (0.3, 100_000);
    let strata = Strata::new(&e, w).unwrap();
    let half = e.shell_volume(w / 2.0).unwrap();
    let mut rng = RngStream::new(4, 0);
    let mut x = [0.0; 2];
    let mut outer = 0;
    for _ in 0..n {
        strata.sample_shell(&mut rng, &mut x).unwrap();
        if e.signed_distance(&x).unwrap() < w / 2.0 {
            outer += 1;
        }
    }
    let p = half / strata.shell_volume;
    let frac = outer as f64 / n as f64;
    assert!((frac - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
}

#[test]
fn mollified_variation_examples() {
    let tv = disk().mollified_variation(0.02, 0.004).unwrap();
    assert!((tv / (2.0 * PI) - 1.0).abs() < 0.02, "{tv}");
    let i = DomainSpec::interval(0.0, 1.0).unwrap();
    let tv: f64 = i.mollified_variation(0.01, 0.001).unwrap();
    assert!((tv - 2.0).abs() < 0.02, "{tv}");
    assert!(matches!(
        disk().mollified_variation(0.02, 0.006),
        Err(Error::GridTooCoarse { .. })
    ));
    // Dilation by 2 in the plane doubles the variation at fixed eps.
    let big = disk().dilate(2.0).unwrap().mollified_variation(0.04, 0.008).unwrap();
    let small = disk().mollified_variation(0.04, 0.008).unwrap();
    assert!((big / small - 2.0).abs() < 0.01, "{big} {small}");
}

#[test]
fn mollified_indicator_preserves_mass() {
    let m = disk().mollify(0.05, 0.005).unwrap();
    assert!((m.integral() - PI).abs() < 2e-3, "{}", m.integral());
    assert!((m.value_at(&[0.0, 0.0]) - 1.0).abs() < 1e-12);
    assert_eq!(m.value_at(&[1.2, 0.0]), 0.0);
    let edge = m.value_at(&[1.0, 0.0]);
    assert!(edge > 0.4 && edge < 0.5, "{edge}");
}
