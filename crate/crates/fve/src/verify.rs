//! Executable oracles for the exact integral identities behind the scheme:
//! dual-projection mean preservation, the closed-form edge integrals, the
//! FVE/FEM difference identity, the discrete-norm equivalence, the
//! constant-coefficient boundary identity, and coercivity of the discrete
//! form. Each oracle compares two independently computed quantities on a
//! seeded randomized corpus.

use crate::assembly::{assemble_fve, AssemblyError};
use crate::expr::{EvalError, Expr, ProblemData, Var};
use crate::femspace::{bilinear_gradient, bilinear_value, NodalField};
use crate::mesh::{Rect, TensorMesh};
use crate::quadrature::{integrate_rect, integrate_segment, QuadratureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Outcome of one oracle family.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub name: &'static str,
    pub trials: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Recorded diagnostics (e.g. coercivity constants per mesh).
    pub note: String,
}

impl OracleResult {
    fn from_discrepancies(
        name: &'static str,
        trials: usize,
        max_abs: f64,
        max_rel: f64,
        tolerance: f64,
    ) -> Self {
        OracleResult {
            name,
            trials,
            max_abs,
            max_rel,
            tolerance,
            passed: max_rel <= tolerance,
            note: String::new(),
        }
    }
}

/// Suite configuration. `lemma32_constant` is the 1/24 factor of the closed
/// edge-integral forms; tests mutate it to confirm the oracle notices.
#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    pub lemma32_constant: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 42,
            lemma32_constant: 1.0 / 24.0,
        }
    }
}

fn oracle_rng(seed: u64, name: &str) -> ChaCha12Rng {
    // FNV-1a over the oracle name gives each oracle its own stream
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    ChaCha12Rng::seed_from_u64(seed ^ h)
}

fn random_rect(rng: &mut ChaCha12Rng) -> Rect {
    let x1 = rng.gen_range(-1.0..1.0);
    let y1 = rng.gen_range(-1.0..1.0);
    Rect::new(
        x1,
        x1 + rng.gen_range(0.05..1.0),
        y1,
        y1 + rng.gen_range(0.05..1.0),
    )
}

fn random_corners(rng: &mut ChaCha12Rng) -> [f64; 4] {
    [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ]
}

/// One identity instance: the two independently computed sides plus the
/// gross magnitude of the underlying integrand, which normalizes the
/// discrepancy (rounding noise scales with the integrand, not with the
/// often-cancelling integral value).
#[derive(Debug, Clone, Copy)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl IdentityCheck {
    pub fn abs_discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn rel_discrepancy(&self) -> f64 {
        let denom = self.lhs.abs().max(self.rhs.abs()).max(self.scale);
        if denom > 0.0 {
            self.abs_discrepancy() / denom
        } else {
            self.abs_discrepancy()
        }
    }
}

/// Mean-preservation of the dual projection on one element: for bilinear `v`
/// the projection keeps the element mean and every full-edge mean.
///
/// Left sides by quadrature (element 4x4, half-edges q=4); right sides are 0.
pub fn lemma21_checks(rect: &Rect, v: &[f64; 4]) -> [IdentityCheck; 5] {
    let (cx, cy) = rect.center();
    let quarters = [
        (Rect::new(rect.x1, cx, rect.y1, cy), v[0]),
        (Rect::new(cx, rect.x2, rect.y1, cy), v[1]),
        (Rect::new(cx, rect.x2, cy, rect.y2), v[2]),
        (Rect::new(rect.x1, cx, cy, rect.y2), v[3]),
    ];
    // evaluating the gap leaves rounding noise proportional to |v|, so the
    // normalization keeps a |v|-sized floor even when the gap is tiny
    let v_mag = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut volume = 0.0;
    let mut volume_gross = v_mag * rect.area();
    for (q, dual) in &quarters {
        volume += integrate_rect(|x, y| bilinear_value(rect, v, x, y) - dual, q, 4, 4).unwrap();
        volume_gross +=
            integrate_rect(|x, y| (bilinear_value(rect, v, x, y) - dual).abs(), q, 4, 4).unwrap();
    }
    // full edges, split at their midpoints where the dual value switches
    let edges = [
        ((rect.x1, rect.y1), (rect.x2, rect.y1), v[0], v[1]),
        ((rect.x2, rect.y1), (rect.x2, rect.y2), v[1], v[2]),
        ((rect.x1, rect.y2), (rect.x2, rect.y2), v[3], v[2]),
        ((rect.x1, rect.y1), (rect.x1, rect.y2), v[0], v[3]),
    ];
    let zero = IdentityCheck { lhs: 0.0, rhs: 0.0, scale: 0.0 };
    let mut out = [
        IdentityCheck { lhs: volume, rhs: 0.0, scale: volume_gross },
        zero,
        zero,
        zero,
        zero,
    ];
    for (k, (p0, p1, d0, d1)) in edges.iter().enumerate() {
        let mid = (0.5 * (p0.0 + p1.0), 0.5 * (p0.1 + p1.1));
        let gap0 = |x: f64, y: f64| bilinear_value(rect, v, x, y) - d0;
        let gap1 = |x: f64, y: f64| bilinear_value(rect, v, x, y) - d1;
        let a = integrate_segment(gap0, *p0, mid, 4).unwrap();
        let b = integrate_segment(gap1, mid, *p1, 4).unwrap();
        let len = (p1.0 - p0.0).hypot(p1.1 - p0.1);
        let gross = v_mag * len
            + integrate_segment(|x, y| gap0(x, y).abs(), *p0, mid, 4).unwrap()
            + integrate_segment(|x, y| gap1(x, y).abs(), mid, *p1, 4).unwrap();
        out[k + 1] = IdentityCheck { lhs: a + b, rhs: 0.0, scale: gross };
    }
    out
}

/// The eight closed-form edge integrals of the dual-projection gap against
/// gradient components of another bilinear function: left/right edges
/// against `w_x` then `w_y`, bottom/top against `w_y` then `w_x`. The
/// nonzero closed forms carry `constant` (1/24).
pub fn lemma32_pairs(
    rect: &Rect,
    w: &[f64; 4],
    v: &[f64; 4],
    constant: f64,
) -> [IdentityCheck; 8] {
    let hx = rect.hx();
    let hy = rect.hy();
    let w_xy = (w[2] + w[0] - w[1] - w[3]) / (hx * hy);
    let vy_left = (v[3] - v[0]) / hy;
    let vy_right = (v[2] - v[1]) / hy;
    let vx_bottom = (v[1] - v[0]) / hx;
    let vx_top = (v[2] - v[3]) / hx;

    let gap_integral = |p0: (f64, f64), p1: (f64, f64), d0: f64, d1: f64, comp: usize| -> (f64, f64) {
        let mid = (0.5 * (p0.0 + p1.0), 0.5 * (p0.1 + p1.1));
        let f = |x: f64, y: f64, dual: f64| {
            (dual - bilinear_value(rect, v, x, y)) * bilinear_gradient(rect, w, x, y)[comp]
        };
        let value = integrate_segment(|x, y| f(x, y, d0), p0, mid, 6).unwrap()
            + integrate_segment(|x, y| f(x, y, d1), mid, p1, 6).unwrap();
        let gross = integrate_segment(|x, y| f(x, y, d0).abs(), p0, mid, 6).unwrap()
            + integrate_segment(|x, y| f(x, y, d1).abs(), mid, p1, 6).unwrap();
        (value, gross)
    };
    let check = |lr: (f64, f64), rhs: f64| IdentityCheck { lhs: lr.0, rhs, scale: lr.1 };

    let left = ((rect.x1, rect.y1), (rect.x1, rect.y2), v[0], v[3]);
    let right = ((rect.x2, rect.y1), (rect.x2, rect.y2), v[1], v[2]);
    let bottom = ((rect.x1, rect.y1), (rect.x2, rect.y1), v[0], v[1]);
    let top = ((rect.x1, rect.y2), (rect.x2, rect.y2), v[3], v[2]);

    [
        check(
            gap_integral(left.0, left.1, left.2, left.3, 0),
            constant * hy.powi(3) * vy_left * w_xy,
        ),
        check(gap_integral(left.0, left.1, left.2, left.3, 1), 0.0),
        check(
            gap_integral(right.0, right.1, right.2, right.3, 0),
            constant * hy.powi(3) * vy_right * w_xy,
        ),
        check(gap_integral(right.0, right.1, right.2, right.3, 1), 0.0),
        check(
            gap_integral(bottom.0, bottom.1, bottom.2, bottom.3, 1),
            constant * hx.powi(3) * vx_bottom * w_xy,
        ),
        check(gap_integral(bottom.0, bottom.1, bottom.2, bottom.3, 0), 0.0),
        check(
            gap_integral(top.0, top.1, top.2, top.3, 1),
            constant * hx.powi(3) * vx_top * w_xy,
        ),
        check(gap_integral(top.0, top.1, top.2, top.3, 0), 0.0),
    ]
}

/// Constant-coefficient boundary identity on one element:
///
/// ```text
/// oint_{dK} n . (Ac grad w)(Pi* v - v) ds
///     = (hy^3 hx / 24) a11 v_xy w_xy + (hy hx^3 / 24) a22 v_xy w_xy
/// ```
pub fn lemma42_pair(rect: &Rect, w: &[f64; 4], v: &[f64; 4], ac: &[[f64; 2]; 2]) -> IdentityCheck {
    let hx = rect.hx();
    let hy = rect.hy();
    let w_xy = (w[2] + w[0] - w[1] - w[3]) / (hx * hy);
    let v_xy = (v[2] + v[0] - v[1] - v[3]) / (hx * hy);

    let flux = |x: f64, y: f64, comp: usize| {
        let g = bilinear_gradient(rect, w, x, y);
        ac[comp][0] * g[0] + ac[comp][1] * g[1]
    };
    let gap = |x: f64, y: f64, dual: f64| dual - bilinear_value(rect, v, x, y);

    let seg = |p0: (f64, f64), p1: (f64, f64), d0: f64, d1: f64, comp: usize| -> (f64, f64) {
        let mid = (0.5 * (p0.0 + p1.0), 0.5 * (p0.1 + p1.1));
        let value = integrate_segment(|x, y| gap(x, y, d0) * flux(x, y, comp), p0, mid, 6).unwrap()
            + integrate_segment(|x, y| gap(x, y, d1) * flux(x, y, comp), mid, p1, 6).unwrap();
        let gross =
            integrate_segment(|x, y| (gap(x, y, d0) * flux(x, y, comp)).abs(), p0, mid, 6).unwrap()
                + integrate_segment(|x, y| (gap(x, y, d1) * flux(x, y, comp)).abs(), mid, p1, 6)
                    .unwrap();
        (value, gross)
    };

    // counterclockwise boundary with outward normals
    let right = seg((rect.x2, rect.y1), (rect.x2, rect.y2), v[1], v[2], 0);
    let left = seg((rect.x1, rect.y1), (rect.x1, rect.y2), v[0], v[3], 0);
    let top = seg((rect.x1, rect.y2), (rect.x2, rect.y2), v[3], v[2], 1);
    let bottom = seg((rect.x1, rect.y1), (rect.x2, rect.y1), v[0], v[1], 1);
    let lhs = right.0 - left.0 + top.0 - bottom.0;
    let rhs = (hy.powi(3) * hx / 24.0) * ac[0][0] * v_xy * w_xy
        + (hy * hx.powi(3) / 24.0) * ac[1][1] * v_xy * w_xy;
    IdentityCheck {
        lhs,
        rhs,
        scale: right.1 + left.1 + top.1 + bottom.1,
    }
}

/// Mixed derivative of the interpolant vs the cell average of the mixed
/// derivative, on one element. Returns `(twist, cell average)`.
pub fn interpolant_twist_pair(rect: &Rect, u: &Expr) -> Result<(f64, f64), VerifyError> {
    let uxy = u.differentiate(Var::X).differentiate(Var::Y);
    let corners = [
        (rect.x1, rect.y1),
        (rect.x2, rect.y1),
        (rect.x2, rect.y2),
        (rect.x1, rect.y2),
    ];
    let mut w = [0.0; 4];
    for (k, (x, y)) in corners.iter().enumerate() {
        w[k] = u.eval(*x, *y)?;
    }
    let twist = (w[2] + w[0] - w[1] - w[3]) / rect.area();
    let mut err = None;
    let avg = integrate_rect(
        |x, y| match uxy.eval(x, y) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        rect,
        6,
        6,
    )
    .unwrap()
        / rect.area();
    if let Some(e) = err {
        return Err(VerifyError::Eval(e));
    }
    Ok((twist, avg))
}

/// Discrete-norm equivalence margins on one element: returns
/// `(lower slack, upper slack)`, both nonnegative when the bounds hold.
pub fn lemma41_margins(rect: &Rect, w: &[f64; 4]) -> (f64, f64) {
    let discrete = (w[1] - w[0]).powi(2)
        + (w[2] - w[1]).powi(2)
        + (w[2] - w[3]).powi(2)
        + (w[3] - w[0]).powi(2);
    let true_sq = integrate_rect(
        |x, y| {
            let g = bilinear_gradient(rect, w, x, y);
            g[0] * g[0] + g[1] * g[1]
        },
        rect,
        3,
        3,
    )
    .unwrap();
    let gamma = rect.diameter() / rect.inscribed_diameter();
    (true_sq - discrete / (6.0 * gamma), 0.5 * gamma * discrete - true_sq)
}

/// Direct high-order quadrature of the conventional form
/// `a(w, v) = int A grad w . grad v + c w v` for nodal fields.
fn fem_form_direct(
    mesh: &TensorMesh,
    p: &ProblemData,
    w: &NodalField,
    v: &NodalField,
) -> Result<f64, VerifyError> {
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let rect = mesh.element(e).rect;
        let wc = w.corner_values(e);
        let vc = v.corner_values(e);
        total += integrate_expr(&rect, 6, |x, y| {
            let gw = bilinear_gradient(&rect, &wc, x, y);
            let gv = bilinear_gradient(&rect, &vc, x, y);
            let a11 = p.a11.eval(x, y)?;
            let a12 = p.a12.eval(x, y)?;
            let a21 = p.a21.eval(x, y)?;
            let a22 = p.a22.eval(x, y)?;
            let c = p.c.eval(x, y)?;
            Ok((a11 * gw[0] + a12 * gw[1]) * gv[0]
                + (a21 * gw[0] + a22 * gw[1]) * gv[1]
                + c * bilinear_value(&rect, &wc, x, y) * bilinear_value(&rect, &vc, x, y))
        })?;
    }
    Ok(total)
}

/// `integrate_rect` for fallible integrands.
fn integrate_expr<F>(rect: &Rect, q: usize, f: F) -> Result<f64, VerifyError>
where
    F: Fn(f64, f64) -> Result<f64, EvalError>,
{
    let mut err = None;
    let v = integrate_rect(
        |x, y| match f(x, y) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        rect,
        q,
        q,
    )
    .unwrap();
    match err {
        Some(e) => Err(VerifyError::Eval(e)),
        None => Ok(v),
    }
}

fn integrate_segment_expr<F>(
    p0: (f64, f64),
    p1: (f64, f64),
    q: usize,
    f: F,
) -> Result<f64, VerifyError>
where
    F: Fn(f64, f64) -> Result<f64, EvalError>,
{
    let mut err = None;
    let v = integrate_segment(
        |x, y| match f(x, y) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        p0,
        p1,
        q,
    )
    .unwrap();
    match err {
        Some(e) => Err(VerifyError::Eval(e)),
        None => Ok(v),
    }
}

/// Both sides of the FVE/FEM difference identity for discrete `w` and
/// interior-supported `v`:
///
/// ```text
/// a_h(w, Pi* v) - a(w, v)
///   = sum_K oint_{dK} n . (A grad w)(Pi* v - v) ds
///   + sum_K (-div(A grad w) + c w, Pi* v - v)_K
/// ```
///
/// The left side pairs the assembled FVE operator with direct quadrature of
/// the conventional form; the right side is evaluated edge by edge and
/// quarter by quarter with the divergence expanded through the coefficient
/// derivatives. Returns `(lhs, rhs, scale)`.
pub fn lemma31_sides(
    mesh: &Arc<TensorMesh>,
    p: &ProblemData,
    w: &NodalField,
    v: &NodalField,
    q: &QuadratureSpec,
) -> Result<(f64, f64, f64), VerifyError> {
    let asm = assemble_fve(mesh, p, q)?;
    let a_h = asm.bilinear(w.values(), v.values());
    let a_fem = fem_form_direct(mesh, p, w, v)?;
    let lhs = a_h - a_fem;

    // coefficient derivatives for div(A grad w) on bilinear w:
    // (d a11/dx + d a21/dy) w_x + (d a12/dx + d a22/dy) w_y + (a12 + a21) w_xy
    let a11x = p.a11.differentiate(Var::X);
    let a21y = p.a21.differentiate(Var::Y);
    let a12x = p.a12.differentiate(Var::X);
    let a22y = p.a22.differentiate(Var::Y);

    let dual = v.pi_star();
    let dual_values = dual.values();

    let mut rhs = 0.0;
    for e in 0..mesh.num_elements() {
        let el = mesh.element(e);
        let rect = el.rect;
        let wc = w.corner_values(e);
        let vc = v.corner_values(e);
        let dc = [
            dual_values[el.corners[0]],
            dual_values[el.corners[1]],
            dual_values[el.corners[2]],
            dual_values[el.corners[3]],
        ];
        let gap = |x: f64, y: f64, dual_val: f64| dual_val - bilinear_value(&rect, &vc, x, y);
        let flux = |x: f64, y: f64, comp: usize| -> Result<f64, EvalError> {
            let g = bilinear_gradient(&rect, &wc, x, y);
            Ok(match comp {
                0 => p.a11.eval(x, y)? * g[0] + p.a12.eval(x, y)? * g[1],
                _ => p.a21.eval(x, y)? * g[0] + p.a22.eval(x, y)? * g[1],
            })
        };
        let seg = |p0: (f64, f64),
                   p1: (f64, f64),
                   d0: f64,
                   d1: f64,
                   comp: usize|
         -> Result<f64, VerifyError> {
            let mid = (0.5 * (p0.0 + p1.0), 0.5 * (p0.1 + p1.1));
            Ok(
                integrate_segment_expr(p0, mid, 6, |x, y| Ok(gap(x, y, d0) * flux(x, y, comp)?))?
                    + integrate_segment_expr(mid, p1, 6, |x, y| {
                        Ok(gap(x, y, d1) * flux(x, y, comp)?)
                    })?,
            )
        };
        // boundary term with outward normals
        rhs += seg((rect.x2, rect.y1), (rect.x2, rect.y2), dc[1], dc[2], 0)?
            - seg((rect.x1, rect.y1), (rect.x1, rect.y2), dc[0], dc[3], 0)?
            + seg((rect.x1, rect.y2), (rect.x2, rect.y2), dc[3], dc[2], 1)?
            - seg((rect.x1, rect.y1), (rect.x2, rect.y1), dc[0], dc[1], 1)?;

        // volume term per quarter (the dual projection is constant there)
        let (cx, cy) = rect.center();
        let w_xy = (wc[2] + wc[0] - wc[1] - wc[3]) / rect.area();
        let quarters = [
            (Rect::new(rect.x1, cx, rect.y1, cy), dc[0]),
            (Rect::new(cx, rect.x2, rect.y1, cy), dc[1]),
            (Rect::new(cx, rect.x2, cy, rect.y2), dc[2]),
            (Rect::new(rect.x1, cx, cy, rect.y2), dc[3]),
        ];
        for (quarter, d) in quarters {
            rhs += integrate_expr(&quarter, 6, |x, y| {
                let g = bilinear_gradient(&rect, &wc, x, y);
                let div = (a11x.eval(x, y)? + a21y.eval(x, y)?) * g[0]
                    + (a12x.eval(x, y)? + a22y.eval(x, y)?) * g[1]
                    + (p.a12.eval(x, y)? + p.a21.eval(x, y)?) * w_xy;
                let react = p.c.eval(x, y)? * bilinear_value(&rect, &wc, x, y);
                Ok((-div + react) * gap(x, y, d))
            })?;
        }
    }
    Ok((lhs, rhs, a_h.abs().max(a_fem.abs()).max(1.0)))
}

/// Coercivity probe: min over random interior-supported `v` of
/// `a_h(v, Pi* v) / ||v||_1^2`.
pub fn coercivity_ratio_min(
    mesh: &Arc<TensorMesh>,
    p: &ProblemData,
    q: &QuadratureSpec,
    trials: usize,
    rng: &mut ChaCha12Rng,
) -> Result<f64, VerifyError> {
    let asm = assemble_fve(mesh, p, q)?;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..trials {
        let values: Vec<f64> = (0..mesh.num_nodes())
            .map(|n| {
                if mesh.is_boundary_node(n) {
                    0.0
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            })
            .collect();
        let v = NodalField::from_values(mesh.clone(), values).expect("sizes agree");
        let energy = asm.bilinear(v.values(), v.values());
        let mut norm_sq = 0.0;
        for e in 0..mesh.num_elements() {
            let rect = mesh.element(e).rect;
            let vc = v.corner_values(e);
            norm_sq += integrate_rect(
                |x, y| {
                    let g = bilinear_gradient(&rect, &vc, x, y);
                    let val = bilinear_value(&rect, &vc, x, y);
                    val * val + g[0] * g[0] + g[1] * g[1]
                },
                &rect,
                3,
                3,
            )
            .unwrap();
        }
        if norm_sq > 0.0 {
            min_ratio = min_ratio.min(energy / norm_sq);
        }
    }
    Ok(min_ratio)
}

/// Runs the whole oracle suite with default options and the given seed.
pub fn run_suite(seed: u64) -> Result<Vec<OracleResult>, VerifyError> {
    run_suite_with(&SuiteOptions {
        seed,
        ..Default::default()
    })
}

/// Runs all seven oracle families; deterministic for a fixed seed.
pub fn run_suite_with(opts: &SuiteOptions) -> Result<Vec<OracleResult>, VerifyError> {
    let mut out = Vec::with_capacity(7);
    let quad = QuadratureSpec::default();
    let paper = crate::expr::benchmark_problem();

    // Lemma 2.1: mean preservation of the dual projection.
    {
        let mut rng = oracle_rng(opts.seed, "lemma_2.1");
        let mut max_abs = 0.0f64;
        let mut max_rel = 0.0f64;
        let trials = 100;
        for _ in 0..trials {
            let rect = random_rect(&mut rng);
            let v = random_corners(&mut rng);
            for check in lemma21_checks(&rect, &v) {
                max_abs = max_abs.max(check.abs_discrepancy());
                max_rel = max_rel.max(check.rel_discrepancy());
            }
        }
        out.push(OracleResult::from_discrepancies(
            "lemma_2.1",
            trials,
            max_abs,
            max_rel,
            1e-13,
        ));
    }

    // Lemma 3.2: eight closed-form edge integrals.
    {
        let mut rng = oracle_rng(opts.seed, "lemma_3.2");
        let mut max_abs = 0.0f64;
        let mut max_rel = 0.0f64;
        let trials = 200;
        for t in 0..trials {
            let rect = if t == 0 {
                // the spec's pinned case
                Rect::new(0.0, 0.5, 0.0, 0.25)
            } else {
                random_rect(&mut rng)
            };
            let w = random_corners(&mut rng);
            let v = if t % 10 == 0 {
                // constant v: every identity degenerates to 0 = 0
                let c = rng.gen_range(-1.0..1.0);
                [c, c, c, c]
            } else {
                random_corners(&mut rng)
            };
            for check in lemma32_pairs(&rect, &w, &v, opts.lemma32_constant) {
                max_abs = max_abs.max(check.abs_discrepancy());
                max_rel = max_rel.max(check.rel_discrepancy());
            }
        }
        out.push(OracleResult::from_discrepancies(
            "lemma_3.2",
            trials,
            max_abs,
            max_rel,
            1e-13,
        ));
    }

    // Eq. (3.11): interpolant mixed derivative equals the cell average.
    {
        let mut rng = oracle_rng(opts.seed, "eq_3.11");
        let exprs = [
            paper.u_exact.clone().unwrap(),
            Expr::parse("exp(x+y)").unwrap(),
            Expr::parse("sin(x)*cos(2*y)+x^3*y^2").unwrap(),
        ];
        let mut max_abs = 0.0f64;
        let trials = 60;
        for t in 0..trials {
            let u = &exprs[t % exprs.len()];
            let x1 = rng.gen_range(0.0..0.9);
            let y1 = rng.gen_range(0.0..0.9);
            let rect = Rect::new(
                x1,
                x1 + rng.gen_range(0.01..0.06),
                y1,
                y1 + rng.gen_range(0.01..0.06),
            );
            let (twist, avg) = interpolant_twist_pair(&rect, u)?;
            max_abs = max_abs.max((twist - avg).abs());
        }
        let mut r = OracleResult::from_discrepancies("eq_3.11", trials, max_abs, max_abs, 1e-10);
        r.passed = max_abs <= 1e-10;
        out.push(r);
    }

    // Lemma 4.1: norm equivalence margins.
    {
        let mut rng = oracle_rng(opts.seed, "lemma_4.1");
        let mut worst = f64::INFINITY;
        let trials = 1000;
        for _ in 0..trials {
            let rect = random_rect(&mut rng);
            let w = random_corners(&mut rng);
            let (lo, hi) = lemma41_margins(&rect, &w);
            worst = worst.min(lo.min(hi));
        }
        let violation = (-worst).max(0.0);
        let mut r =
            OracleResult::from_discrepancies("lemma_4.1", trials, violation, violation, 1e-12);
        r.passed = violation <= 1e-12;
        r.note = format!("smallest bound slack {worst:.3e}");
        out.push(r);
    }

    // Lemma 4.2: constant-coefficient boundary identity.
    {
        let mut rng = oracle_rng(opts.seed, "lemma_4.2");
        let mut max_abs = 0.0f64;
        let mut max_rel = 0.0f64;
        let trials = 200;
        for t in 0..trials {
            let rect = random_rect(&mut rng);
            let ac = [
                [rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-1.0..1.0), rng.gen_range(0.5..3.0)],
            ];
            let w = random_corners(&mut rng);
            let v = if t % 10 == 0 {
                // ruled v (zero twist): both sides vanish
                let a = rng.gen_range(-1.0..1.0);
                let b = rng.gen_range(-1.0..1.0);
                [a, b, b, a]
            } else {
                random_corners(&mut rng)
            };
            let check = lemma42_pair(&rect, &w, &v, &ac);
            max_abs = max_abs.max(check.abs_discrepancy());
            max_rel = max_rel.max(check.rel_discrepancy());
        }
        out.push(OracleResult::from_discrepancies(
            "lemma_4.2",
            trials,
            max_abs,
            max_rel,
            1e-13,
        ));
    }

    // Lemma 3.1: FVE/FEM difference identity on meshes with both constant
    // and the benchmark coefficients.
    {
        let mut rng = oracle_rng(opts.seed, "lemma_3.1");
        let mut max_rel = 0.0f64;
        let mut max_abs = 0.0f64;
        let constant = ProblemData::with_source(
            [Expr::Num(2.0), Expr::Num(0.3), Expr::Num(0.3), Expr::Num(1.5)],
            Expr::Num(0.0),
            Expr::Num(0.0),
            None,
        );
        let cases: [(&ProblemData, usize, usize); 2] = [(&constant, 4, 10), (&paper, 8, 20)];
        let mut trials = 0;
        for (p, n, pairs) in cases {
            let mesh = Arc::new(TensorMesh::unit_square(n));
            for k in 0..pairs {
                let w_vals: Vec<f64> =
                    (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v_vals: Vec<f64> = (0..mesh.num_nodes())
                    .map(|i| {
                        if mesh.is_boundary_node(i) {
                            0.0
                        } else {
                            rng.gen_range(-1.0..1.0)
                        }
                    })
                    .collect();
                let w = if k % 5 == 4 {
                    // self-pairing case: w = v
                    NodalField::from_values(mesh.clone(), v_vals.clone()).unwrap()
                } else {
                    NodalField::from_values(mesh.clone(), w_vals).unwrap()
                };
                let v = NodalField::from_values(mesh.clone(), v_vals).unwrap();
                let (lhs, rhs, scale) = lemma31_sides(&mesh, p, &w, &v, &quad)?;
                max_abs = max_abs.max((lhs - rhs).abs());
                max_rel = max_rel.max((lhs - rhs).abs() / scale);
                trials += 1;
            }
        }
        out.push(OracleResult::from_discrepancies(
            "lemma_3.1",
            trials,
            max_abs,
            max_rel,
            1e-9,
        ));
    }

    // Lemma 2.2: coercivity ratios stay positive across meshes.
    {
        let mut rng = oracle_rng(opts.seed, "lemma_2.2");
        let mut min_ratio = f64::INFINITY;
        let mut notes = Vec::new();
        for n in [4, 8, 16] {
            let mesh = Arc::new(TensorMesh::unit_square(n));
            let kappa = coercivity_ratio_min(&mesh, &paper, &quad, 34, &mut rng)?;
            notes.push(format!("kappa(1/{n}) = {kappa:.4}"));
            min_ratio = min_ratio.min(kappa);
        }
        let passed = min_ratio > 0.0;
        out.push(OracleResult {
            name: "lemma_2.2",
            trials: 3 * 34,
            max_abs: min_ratio,
            max_rel: min_ratio,
            tolerance: 0.0,
            passed,
            note: notes.join(", "),
        });
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma32_concrete_value() {
        // unit square, v = eta, w = xi eta: left-edge integral equals 1/24
        let rect = Rect::new(0.0, 1.0, 0.0, 1.0);
        let v = [0.0, 0.0, 1.0, 1.0]; // eta
        let w = [0.0, 0.0, 1.0, 0.0]; // xi eta
        let pairs = lemma32_pairs(&rect, &w, &v, 1.0 / 24.0);
        assert!((pairs[0].lhs - 1.0 / 24.0).abs() <= 1e-15, "lhs {}", pairs[0].lhs);
        assert!((pairs[0].rhs - 1.0 / 24.0).abs() <= 1e-15);
    }

    #[test]
    fn lemma32_zero_identities_hold_tightly() {
        let mut rng = oracle_rng(7, "test");
        for _ in 0..50 {
            let rect = random_rect(&mut rng);
            let w = random_corners(&mut rng);
            let v = random_corners(&mut rng);
            let pairs = lemma32_pairs(&rect, &w, &v, 1.0 / 24.0);
            for k in [1usize, 3, 5, 7] {
                assert!(
                    pairs[k].rel_discrepancy() <= 1e-14,
                    "zero identity {k}: {}",
                    pairs[k].lhs
                );
            }
        }
    }

    #[test]
    fn lemma42_concrete_value() {
        // Ac = I, unit square, w = v = xi eta: rhs = 2/24 = 1/12
        let rect = Rect::new(0.0, 1.0, 0.0, 1.0);
        let wv = [0.0, 0.0, 1.0, 0.0];
        let ac = [[1.0, 0.0], [0.0, 1.0]];
        let check = lemma42_pair(&rect, &wv, &wv, &ac);
        assert!((check.rhs - 1.0 / 12.0).abs() <= 1e-15);
        assert!(check.abs_discrepancy() <= 1e-14, "lhs {}", check.lhs);
    }

    #[test]
    fn lemma42_vanishes_for_zero_twist() {
        let rect = Rect::new(0.2, 0.9, -0.1, 0.5);
        let v = [0.3, -0.6, -0.6, 0.3]; // v_1234 = 0
        let w = [1.0, 0.2, -0.4, 0.9];
        let ac = [[2.0, 0.7], [-0.3, 1.1]];
        let check = lemma42_pair(&rect, &w, &v, &ac);
        assert_eq!(check.rhs, 0.0);
        assert!(check.rel_discrepancy() <= 1e-14);
    }

    #[test]
    fn suite_passes_and_is_deterministic() {
        let a = run_suite(42).unwrap();
        let b = run_suite(42).unwrap();
        assert_eq!(a.len(), 7);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.max_abs.to_bits(), y.max_abs.to_bits());
            assert_eq!(x.max_rel.to_bits(), y.max_rel.to_bits());
            assert_eq!(x.note, y.note);
            assert!(x.passed, "{} failed: rel {} tol {}", x.name, x.max_rel, x.tolerance);
        }
        // a different seed still passes
        for r in run_suite(7).unwrap() {
            assert!(r.passed, "{} failed with seed 7", r.name);
        }
    }

    #[test]
    fn mutated_constant_trips_the_lemma32_oracle() {
        let results = run_suite_with(&SuiteOptions {
            seed: 42,
            lemma32_constant: 1.0 / 20.0,
        })
        .unwrap();
        let l32 = results.iter().find(|r| r.name == "lemma_3.2").unwrap();
        assert!(!l32.passed, "perturbed constant must fail the oracle");
        // the other oracles are unaffected
        for r in &results {
            if r.name != "lemma_3.2" {
                assert!(r.passed, "{} unexpectedly failed", r.name);
            }
        }
    }

    #[test]
    fn coercivity_does_not_decrease_with_larger_reaction() {
        let mesh = Arc::new(TensorMesh::unit_square(4));
        let base = ProblemData::with_source(
            [Expr::Num(1.0), Expr::Num(0.0), Expr::Num(0.0), Expr::Num(1.0)],
            Expr::Num(0.0),
            Expr::Num(0.0),
            None,
        );
        let shifted = ProblemData::with_source(
            [Expr::Num(1.0), Expr::Num(0.0), Expr::Num(0.0), Expr::Num(1.0)],
            Expr::Num(10.0),
            Expr::Num(0.0),
            None,
        );
        let quad = QuadratureSpec::default();
        let asm_base = assemble_fve(&mesh, &base, &quad).unwrap();
        let asm_shift = assemble_fve(&mesh, &shifted, &quad).unwrap();
        let mut rng = oracle_rng(3, "mono");
        for _ in 0..50 {
            let values: Vec<f64> = (0..mesh.num_nodes())
                .map(|n| if mesh.is_boundary_node(n) { 0.0 } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let e0 = asm_base.bilinear(&values, &values);
            let e1 = asm_shift.bilinear(&values, &values);
            assert!(e0 > 0.0);
            assert!(e1 >= e0 - 1e-12, "reaction term must not reduce the energy");
        }
    }
}
