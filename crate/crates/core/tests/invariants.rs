//! Property tests for deterministic invariants of the public API.

use std::f64::consts::PI;

use proptest::prelude::*;
use shc_core::asymptotics::{
    extrapolate_ratio, inverse_stable_moment, mu_reference, predicted_limit, stable_sup_key, Constant,
    ConstantsCache, NormalizerKind, Theta,
};
use shc_core::geometry::{rotation_2d, DomainSpec};
use shc_core::processes::{ClockSpec, ProcessSpec, SubordinatorSpec};
use shc_core::special::gamma;
use shc_core::stats::{reduce_paths, Moments};

fn cache() -> ConstantsCache {
    let mut c = ConstantsCache::new();
    for alpha in [1.2, 1.5, 1.8] {
        c.insert(
            stable_sup_key(alpha),
            Constant {
                value: shc_core::special::stable_sup_mean_closed_form(alpha),
                stderr: 1e-4,
                provenance: "closed form".into(),
            },
        );
    }
    c
}

fn ellipse(a: f64, b: f64, angle: f64) -> DomainSpec<f64> {
    DomainSpec::ellipsoid(vec![0.1, -0.2], vec![a, b], Some(rotation_2d(angle))).unwrap()
}

fn analytic_domain() -> impl Strategy<Value = DomainSpec<f64>> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|r| DomainSpec::ball(vec![0.3, -0.1], r).unwrap()),
        (0.2f64..1.0, 1.1f64..2.0).prop_map(|(a, k)| DomainSpec::annulus(vec![0.0, 0.0], a, a * k).unwrap()),
        (0.3f64..2.0, 0.3f64..2.0, 0.0f64..PI).prop_map(|(a, b, t)| ellipse(a, b, t)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signed_distance_is_one_lipschitz(
        dom in analytic_domain(),
        p in prop::array::uniform4(-3.0f64..3.0),
    ) {
        let (x, y) = ([p[0], p[1]], [p[2], p[3]]);
        let dx = dom.signed_distance(&x).unwrap();
        let dy = dom.signed_distance(&y).unwrap();
        let gap = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        prop_assert!((dx - dy).abs() <= gap * (1.0 + 1e-9) + 1e-10);
    }

    #[test]
    fn signed_distance_sign_matches_membership(dom in analytic_domain(), p in prop::array::uniform2(-3.0f64..3.0)) {
        let d = dom.signed_distance(&p).unwrap();
        if d.abs() > 1e-9 {
            prop_assert_eq!(d > 0.0, dom.contains(&p).unwrap());
        }
    }

    #[test]
    fn rotation_preserves_volume_and_perimeter(a in 0.3f64..2.0, b in 0.3f64..2.0, angle in 0.0f64..(2.0 * PI)) {
        let (p, q) = (ellipse(a, b, 0.0), ellipse(a, b, angle));
        prop_assert!((p.volume().value - q.volume().value).abs() <= 1e-12 * p.volume().value);
        let (pp, pq) = (p.perimeter().unwrap().value, q.perimeter().unwrap().value);
        prop_assert!((pp - pq).abs() <= 1e-10 * pp);
    }

    #[test]
    fn clamped_field_agrees_with_membership(r in 0.05f64..0.4, p in prop::array::uniform2(-1.5f64..1.5)) {
        let ball = DomainSpec::ball(vec![0.0, 0.0], 1.0).unwrap();
        let field = ball.clamped_level_set(r, 0.0).unwrap();
        let phi = field.value(&p);
        if phi.abs() > 1e-12 {
            prop_assert_eq!(phi > 0.0, ball.contains(&p).unwrap());
        }
    }

    #[test]
    fn clamped_gradient_matches_finite_differences(r in 0.05f64..0.4, rad in 0.0f64..1.0, ang in 0.0f64..(2.0 * PI)) {
        let field = DomainSpec::ball(vec![0.0, 0.0], 1.0).unwrap().clamped_level_set(r, 0.0).unwrap();
        // Radius within the half shell |delta| < r/2.
        let rho = 1.0 + r * (rad - 0.5) * 0.98;
        let x = [rho * ang.cos(), rho * ang.sin()];
        let mut g = [0.0; 2];
        field.gradient(&x, &mut g);
        let h = 1e-6;
        for i in 0..2 {
            let (mut a, mut b) = (x, x);
            a[i] += h;
            b[i] -= h;
            let fd = (field.value(&a) - field.value(&b)) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() < 1e-6, "coordinate {}: fd {} vs {}", i, fd, g[i]);
        }
        let n = g[0].hypot(g[1]);
        prop_assert!((0.999..=1.001).contains(&n));
    }

    #[test]
    fn reference_mu_vanishes_and_increases(alpha in prop::sample::select(vec![1.0, 1.2, 1.5, 1.8, 2.0])) {
        let p = ProcessSpec::stable(alpha, 1).unwrap();
        let c = cache();
        let ts: Vec<f64> = (1..=40).map(|k| 0.1 * k as f64 / 40.0).collect();
        let mu: Vec<f64> = ts.iter().map(|&t| mu_reference(&p, t, &c).unwrap().value).collect();
        prop_assert!(mu_reference(&p, 1e-14, &c).unwrap().value < 1e-4);
        prop_assert!(mu.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn prediction_rotates_and_dilates_like_perimeter(
        a in 0.3f64..2.0,
        b in 0.3f64..2.0,
        angle in 0.0f64..PI,
        c in 0.2f64..5.0,
        alpha in prop::sample::select(vec![1.2, 1.5, 2.0]),
    ) {
        let p = ProcessSpec::stable(alpha, 2).unwrap();
        let cache = cache();
        let base = predicted_limit(&p, &ellipse(a, b, 0.0), NormalizerKind::EstimatedMu, &cache).unwrap().value;
        let turned = predicted_limit(&p, &ellipse(a, b, angle), NormalizerKind::EstimatedMu, &cache).unwrap().value;
        let big = predicted_limit(&p, &ellipse(a, b, 0.0).dilate(c).unwrap(), NormalizerKind::EstimatedMu, &cache).unwrap().value;
        prop_assert!((base - turned).abs() <= 1e-10 * base);
        prop_assert!((big - c * base).abs() <= 1e-9 * big);
    }

    #[test]
    fn extrapolation_is_exact_on_its_model(l in 0.5f64..10.0, a in -5.0f64..5.0, theta in 0.1f64..1.0) {
        let t: Vec<f64> = (0..6).map(|k| 10f64.powf(-1.0 - 0.7 * k as f64)).collect();
        let r: Vec<f64> = t.iter().map(|&s| l + a * s.powf(theta)).collect();
        let se = vec![1e-3; t.len()];
        let e = extrapolate_ratio(&t, &r, &se, Theta::Fixed(theta)).unwrap();
        prop_assert!((e.limit - l).abs() <= 1e-9 * l, "{} vs {}", e.limit, l);
    }

    #[test]
    fn inverse_stable_moments_scale(beta in 0.05f64..0.95, q in 0.1f64..3.0, t in 1e-3f64..10.0, c in 0.1f64..10.0) {
        let m = inverse_stable_moment(beta, q, t).unwrap();
        let mc = inverse_stable_moment(beta, q, c * t).unwrap();
        prop_assert!(m > 0.0);
        prop_assert!((mc / m - c.powf(q * beta)).abs() <= 1e-10 * c.powf(q * beta));
    }

    #[test]
    fn moments_merge_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 2..200), split in 1usize..199) {
        let split = split.min(xs.len() - 1);
        let (mut a, mut b, mut all) = (Moments::new(1), Moments::new(1), Moments::new(1));
        for (i, &x) in xs.iter().enumerate() {
            if i < split { a.push(&[x]) } else { b.push(&[x]) }
            all.push(&[x]);
        }
        let m = a.merge(&b);
        prop_assert_eq!(m.count(), all.count());
        prop_assert!((m.mean(0) - all.mean(0)).abs() <= 1e-9 * (1.0 + all.mean(0).abs()));
        prop_assert!((m.variance(0) - all.variance(0)).abs() <= 1e-8 * (1.0 + all.variance(0)));
    }
}

#[test]
fn cauchy_reference_dominates_t() {
    let p = ProcessSpec::stable(1.0, 1).unwrap();
    let c = ConstantsCache::new();
    let ratios: Vec<f64> = (2..=8)
        .map(|k| {
            let t = 10f64.powi(-k);
            mu_reference(&p, t, &c).unwrap().value / t
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
}

#[test]
fn gamma_matches_sqrt_pi() {
    assert!((gamma(0.5) / PI.sqrt() - 1.0).abs() < 1e-12);
}

#[test]
fn reduction_is_independent_of_thread_count() {
    let f = |i: usize, out: &mut [f64]| out[0] = ((i as f64) * 0.618_033_988_75).fract().ln_1p();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| reduce_paths(0..100_003, 1, f))
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.mean(0).to_bits(), b.mean(0).to_bits());
    assert_eq!(a.variance(0).to_bits(), b.variance(0).to_bits());
}

#[test]
fn stable_clock_moments_grow_with_t() {
    let clock = ClockSpec::InverseSubordinator(SubordinatorSpec::Stable { beta: 0.5 });
    let a = shc_core::asymptotics::clock_scale(&clock, 1.8, 1e-6).unwrap();
    let b = shc_core::asymptotics::clock_scale(&clock, 1.8, 1e-3).unwrap();
    assert!(b > a && a > 0.0);
}
