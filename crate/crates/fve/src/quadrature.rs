//! Gauss–Legendre quadrature on segments and tensor-product rules on
//! axis-aligned rectangles. Every numerical integral in the crate (assembly
//! fluxes, reaction/load terms, error norms, identity oracles) goes through
//! these two entry points.

use crate::mesh::Rect;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("unsupported Gauss order {0}; supported orders are 1..=6")]
    UnsupportedOrder(usize),
}

/// Nodes and weights of the q-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Exact for polynomials of degree `2q - 1`; weights sum to 2.
#[derive(Debug, Clone, Copy)]
pub struct SegmentRule {
    pub points: &'static [f64],
    pub weights: &'static [f64],
}

impl SegmentRule {
    pub fn order(&self) -> usize {
        self.points.len()
    }
}

// Nodes/weights to 16 significant digits (Abramowitz & Stegun 25.4.29-30).
const GL1_X: [f64; 1] = [0.0];
const GL1_W: [f64; 1] = [2.0];

const GL2_X: [f64; 2] = [-0.5773502691896258, 0.5773502691896258];
const GL2_W: [f64; 2] = [1.0, 1.0];

const GL3_X: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
const GL3_W: [f64; 3] = [
    0.5555555555555556,
    0.8888888888888888,
    0.5555555555555556,
];

const GL4_X: [f64; 4] = [
    -0.8611363115940526,
    -0.3399810435848563,
    0.3399810435848563,
    0.8611363115940526,
];
const GL4_W: [f64; 4] = [
    0.3478548451374539,
    0.6521451548625461,
    0.6521451548625461,
    0.3478548451374539,
];

const GL5_X: [f64; 5] = [
    -0.9061798459386640,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.9061798459386640,
];
const GL5_W: [f64; 5] = [
    0.2369268850561891,
    0.4786286704993665,
    0.5688888888888889,
    0.4786286704993665,
    0.2369268850561891,
];

const GL6_X: [f64; 6] = [
    -0.9324695142031521,
    -0.6612093864662645,
    -0.2386191860831969,
    0.2386191860831969,
    0.6612093864662645,
    0.9324695142031521,
];
const GL6_W: [f64; 6] = [
    0.1713244923791704,
    0.3607615730481386,
    0.4679139345726910,
    0.4679139345726910,
    0.3607615730481386,
    0.1713244923791704,
];

const RULES: [SegmentRule; 6] = [
    SegmentRule { points: &GL1_X, weights: &GL1_W },
    SegmentRule { points: &GL2_X, weights: &GL2_W },
    SegmentRule { points: &GL3_X, weights: &GL3_W },
    SegmentRule { points: &GL4_X, weights: &GL4_W },
    SegmentRule { points: &GL5_X, weights: &GL5_W },
    SegmentRule { points: &GL6_X, weights: &GL6_W },
];

/// The q-point segment rule, `q` in `1..=6`.
pub fn segment_rule(q: usize) -> Result<SegmentRule, QuadratureError> {
    if (1..=6).contains(&q) {
        Ok(RULES[q - 1])
    } else {
        Err(QuadratureError::UnsupportedOrder(q))
    }
}

/// Integrates `f` along the straight segment from `p0` to `p1` with the
/// q-point Gauss rule mapped affinely onto the segment.
pub fn integrate_segment<F>(
    mut f: F,
    p0: (f64, f64),
    p1: (f64, f64),
    q: usize,
) -> Result<f64, QuadratureError>
where
    F: FnMut(f64, f64) -> f64,
{
    let rule = segment_rule(q)?;
    let mx = 0.5 * (p0.0 + p1.0);
    let my = 0.5 * (p0.1 + p1.1);
    let dx = 0.5 * (p1.0 - p0.0);
    let dy = 0.5 * (p1.1 - p0.1);
    let half_len = (dx * dx + dy * dy).sqrt();
    let mut acc = 0.0;
    for (&t, &w) in rule.points.iter().zip(rule.weights) {
        acc += w * f(mx + t * dx, my + t * dy);
    }
    Ok(acc * half_len)
}

/// Integrates `f` over an axis-aligned rectangle with the tensor-product
/// `qx`-by-`qy` Gauss rule.
pub fn integrate_rect<F>(mut f: F, rect: &Rect, qx: usize, qy: usize) -> Result<f64, QuadratureError>
where
    F: FnMut(f64, f64) -> f64,
{
    let rx = segment_rule(qx)?;
    let ry = segment_rule(qy)?;
    let (cx, cy) = rect.center();
    let hx = 0.5 * rect.hx();
    let hy = 0.5 * rect.hy();
    let mut acc = 0.0;
    for (&tx, &wx) in rx.points.iter().zip(rx.weights) {
        let x = cx + tx * hx;
        let mut inner = 0.0;
        for (&ty, &wy) in ry.points.iter().zip(ry.weights) {
            inner += wy * f(x, cy + ty * hy);
        }
        acc += wx * inner;
    }
    Ok(acc * hx * hy)
}

/// Gauss orders used by the scheme: segment fluxes on dual boundaries,
/// volume terms on quarter-rectangles, and error-norm integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub flux_order: usize,
    pub volume_order: usize,
    pub norm_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            flux_order: 3,
            volume_order: 3,
            norm_order: 4,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Legendre polynomial value and derivative via the three-term recurrence.
    fn legendre(n: usize, x: f64) -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, x);
        if n == 0 {
            return (1.0, 0.0);
        }
        for k in 2..=n {
            let k = k as f64;
            let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, d)
    }

    /// Independent recomputation of the q-point rule by Newton iteration on
    /// the Legendre roots, cross-checking the hard-coded tables.
    #[test]
    fn tables_match_recomputed_legendre_roots() {
        for q in 1..=6 {
            let rule = segment_rule(q).unwrap();
            for i in 0..q {
                // Chebyshev-based initial guess, then Newton.
                let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
                for _ in 0..100 {
                    let (p, d) = legendre(q, x);
                    if d == 0.0 {
                        break;
                    }
                    let step = p / d;
                    x -= step;
                    if step.abs() < 1e-16 {
                        break;
                    }
                }
                let (_, d) = legendre(q, x);
                let w = 2.0 / ((1.0 - x * x) * d * d);
                assert!(
                    (rule.points[i] - x).abs() <= 2e-16,
                    "order {q} node {i}: table {} vs recomputed {}",
                    rule.points[i],
                    x
                );
                assert!(
                    (rule.weights[i] - w).abs() <= 4e-16,
                    "order {q} weight {i}: table {} vs recomputed {}",
                    rule.weights[i],
                    w
                );
            }
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for q in 1..=6 {
            let rule = segment_rule(q).unwrap();
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-15, "order {q}: weight sum {sum}");
        }
    }

    #[test]
    fn segment_constant_gives_length() {
        let v = integrate_segment(|_, _| 1.0, (0.3, -0.1), (0.3, 0.4), 2).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn segment_degree_two_exact_at_q2() {
        let v = integrate_segment(|x, _| x * x, (0.0, 0.0), (1.0, 0.0), 2).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-16, "got {v}");
    }

    #[test]
    fn segment_x6_needs_order_four() {
        // q = 3 is exact only to degree 5; q = 6 integrates x^6 exactly.
        let lo = integrate_segment(|x, _| x.powi(6), (0.0, 0.0), (1.0, 0.0), 3).unwrap();
        let hi = integrate_segment(|x, _| x.powi(6), (0.0, 0.0), (1.0, 0.0), 6).unwrap();
        assert!((lo - 1.0 / 7.0).abs() > 1e-6, "q=3 unexpectedly exact: {lo}");
        assert!((hi - 1.0 / 7.0).abs() < 1e-15, "q=6 off: {hi}");
    }

    #[test]
    fn polynomial_exactness_on_random_segments() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for q in 1..=6usize {
            let deg = 2 * q - 1;
            for _ in 0..20 {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = a + rng.gen_range(0.1..2.0);
                // integrate t^deg along the x-axis segment [a, b]
                let exact = (b.powi(deg as i32 + 1) - a.powi(deg as i32 + 1)) / (deg as f64 + 1.0);
                let v = integrate_segment(|x, _| x.powi(deg as i32), (a, 0.0), (b, 0.0), q).unwrap();
                let scale = exact.abs().max(1.0);
                assert!(
                    (v - exact).abs() <= 1e-13 * scale,
                    "q={q} deg={deg} [{a},{b}]: {v} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn rect_constant_and_bilinear() {
        let r = Rect::new(0.0, 1.0, 0.0, 1.0);
        let one = integrate_rect(|_, _| 1.0, &r, 1, 1).unwrap();
        assert!((one - 1.0).abs() < 1e-15);
        let xy = integrate_rect(|x, y| x * y, &r, 2, 2).unwrap();
        assert!((xy - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rect_smooth_matches_closed_form() {
        // a11 of the benchmark problem: exp(2x) + y^3 + 1 over the unit square.
        let r = Rect::new(0.0, 1.0, 0.0, 1.0);
        let v = integrate_rect(|x, y| (2.0 * x).exp() + y.powi(3) + 1.0, &r, 6, 6).unwrap();
        let exact = (2.0f64.exp() - 1.0) / 2.0 + 0.25 + 1.0;
        // 6-point Gauss truncation for exp(2x) over a unit interval is ~6e-12
        assert!((v - exact).abs() < 1e-11, "got {v}, want {exact}");
    }

    #[test]
    fn rect_rule_equals_iterated_segments_on_separable_integrand() {
        let r = Rect::new(0.2, 0.9, -0.3, 0.4);
        let fx = |x: f64| x * x + 1.0;
        let fy = |y: f64| y.powi(3) - y;
        let rect = integrate_rect(|x, y| fx(x) * fy(y), &r, 3, 4).unwrap();
        let ix = integrate_segment(|x, _| fx(x), (r.x1, 0.0), (r.x2, 0.0), 3).unwrap();
        let iy = integrate_segment(|_, y| fy(y), (0.0, r.y1), (0.0, r.y2), 4).unwrap();
        assert!((rect - ix * iy).abs() <= 1e-15 * (ix * iy).abs().max(1.0));
    }

    #[test]
    fn unsupported_order_is_an_error() {
        assert_eq!(segment_rule(0).unwrap_err(), QuadratureError::UnsupportedOrder(0));
        assert_eq!(segment_rule(7).unwrap_err(), QuadratureError::UnsupportedOrder(7));
    }
}
