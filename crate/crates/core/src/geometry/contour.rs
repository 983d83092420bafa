//! Zero-contour quadrature for level-set fields on regular grids.
//!
//! Crossings on grid edges are located by bisection on the field itself, so
//! the only discretisation error is the chord approximation of the curve.

type Field<'a> = dyn Fn(&[f64]) -> f64 + 'a;

const BISECTION_STEPS: usize = 40;

/// Result of a contour pass: (weighted) measure and the crossing points found.
#[derive(Clone, Debug, Default)]
pub(crate) struct ContourSummary {
    pub measure: f64,
    pub points: Vec<Vec<f64>>,
}

fn refine(f: &Field, a: &[f64], fa: f64, b: &[f64]) -> Vec<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut x = a.to_vec();
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        for i in 0..x.len() {
            x[i] = a[i] + mid * (b[i] - a[i]);
        }
        if (f(&x) > 0.0) == (fa > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    (0..a.len()).map(|i| a[i] + mid * (b[i] - a[i])).collect()
}

/// Roots of a 1-D field: counts them (the `H^0` measure of the boundary).
pub(crate) fn roots_1d(f: &Field, lo: f64, hi: f64, n: usize) -> ContourSummary {
    let h = (hi - lo) / n as f64;
    let mut out = ContourSummary::default();
    let mut prev_x = [lo];
    let mut prev = f(&prev_x);
    for i in 1..=n {
        let x = [lo + i as f64 * h];
        let v = f(&x);
        if (v > 0.0) != (prev > 0.0) {
            out.points.push(refine(f, &prev_x, prev, &x));
            out.measure += 1.0;
        }
        prev = v;
        prev_x = x;
    }
    out
}

/// Marching squares on an `n x n` grid over `[lo, hi]`; `embed` lifts a planar
/// point to the field's coordinates and `weight` scales each segment's length
/// (evaluated at the segment midpoint).
pub(crate) fn marching_squares(
    f: &Field,
    embed: &dyn Fn(f64, f64) -> Vec<f64>,
    weight: &dyn Fn(&[f64]) -> f64,
    lo: [f64; 2],
    hi: [f64; 2],
    n: usize,
) -> ContourSummary {
    let hx = (hi[0] - lo[0]) / n as f64;
    let hy = (hi[1] - lo[1]) / n as f64;
    let node = |i: usize, j: usize| embed(lo[0] + i as f64 * hx, lo[1] + j as f64 * hy);
    let mut values = vec![0.0; (n + 1) * (n + 1)];
    for j in 0..=n {
        for i in 0..=n {
            values[j * (n + 1) + i] = f(&node(i, j));
        }
    }
    let val = |i: usize, j: usize| values[j * (n + 1) + i];
    let mut out = ContourSummary::default();
    for j in 0..n {
        for i in 0..n {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let inside: Vec<bool> = corners.iter().map(|&(a, b)| val(a, b) > 0.0).collect();
            if inside.iter().all(|&s| s) || inside.iter().all(|&s| !s) {
                continue;
            }
            // Edge k joins corner k and corner k+1.
            let mut crossings: Vec<(usize, Vec<f64>)> = Vec::with_capacity(4);
            for k in 0..4 {
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                if inside[k] != inside[(k + 1) % 4] {
                    let pa = node(a.0, a.1);
                    let pb = node(b.0, b.1);
                    crossings.push((k, refine(f, &pa, val(a.0, a.1), &pb)));
                }
            }
            let pairs: Vec<(usize, usize)> = if crossings.len() == 2 {
                vec![(0, 1)]
            } else {
                // Saddle: the cell centre decides which corners connect.
                let centre = f(&embed(lo[0] + (i as f64 + 0.5) * hx, lo[1] + (j as f64 + 0.5) * hy));
                if (centre > 0.0) == inside[0] {
                    vec![(0, 3), (1, 2)]
                } else {
                    vec![(0, 1), (2, 3)]
                }
            };
            for (a, b) in pairs {
                let (pa, pb) = (&crossings[a].1, &crossings[b].1);
                let len = pa
                    .iter()
                    .zip(pb)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let mid: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| 0.5 * (x + y)).collect();
                out.measure += len * weight(&mid);
            }
            out.points.extend(crossings.into_iter().map(|(_, p)| p));
        }
    }
    out
}

/// Surface measure of the zero set of a 3-D field by co-area slicing along
/// the last axis: each slice contour is weighted by `|grad f| / |grad_xy f|`.
pub(crate) fn coarea_slices(
    f: &Field,
    grad: &dyn Fn(&[f64]) -> [f64; 3],
    lo: [f64; 3],
    hi: [f64; 3],
    n: usize,
) -> ContourSummary {
    let hz = (hi[2] - lo[2]) / n as f64;
    let mut out = ContourSummary::default();
    for k in 0..n {
        let z = lo[2] + (k as f64 + 0.5) * hz;
        let embed = move |x: f64, y: f64| vec![x, y, z];
        let weight = |p: &[f64]| {
            let g = grad(p);
            let full = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            let planar = (g[0] * g[0] + g[1] * g[1]).sqrt();
            // Caps the pole singularity; the slice contour there is tiny.
            (full / planar.max(1e-3 * full)).min(1e3)
        };
        let slice = marching_squares(f, &embed, &weight, [lo[0], lo[1]], [hi[0], hi[1]], n);
        out.measure += slice.measure * hz;
        out.points.extend(slice.points);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_length() {
        let f = |x: &[f64]| 1.0 - x[0] * x[0] - x[1] * x[1];
        let s = marching_squares(&f, &|x, y| vec![x, y], &|_| 1.0, [-1.1, -1.1], [1.1, 1.1], 256);
        assert!((s.measure - 2.0 * PI).abs() < 1e-4);
        for p in &s.points {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sphere_area_by_slices() {
        let f = |x: &[f64]| 1.0 - x[0] * x[0] - x[1] * x[1] - x[2] * x[2];
        let g = |x: &[f64]| [-2.0 * x[0], -2.0 * x[1], -2.0 * x[2]];
        let s = coarea_slices(&f, &g, [-1.1; 3], [1.1; 3], 128);
        assert!((s.measure / (4.0 * PI) - 1.0).abs() < 0.01, "{}", s.measure);
    }

    #[test]
    fn interval_roots() {
        let f = |x: &[f64]| x[0] * (1.0 - x[0]);
        let s = roots_1d(&f, -0.13, 1.21, 100);
        assert_eq!(s.measure, 2.0);
    }
}
