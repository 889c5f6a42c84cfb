//! Error measurement against a known exact solution: L2 and H1-seminorm
//! errors, nodal max error, supercloseness to the interpolant, the
//! stress-point averaged-gradient error, and rate tables for refinement
//! studies.

use crate::assembly::{solve_problem, AssemblyError};
use crate::expr::{EvalError, ProblemData};
use crate::femspace::NodalField;
use crate::linalg::{SolveOptions, SolveReport};
use crate::mesh::{StressPointSet, TensorMesh};
use crate::par::map_indexed;
use crate::quadrature::{segment_rule, QuadratureSpec};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("the exact solution (and its gradient) is required for this measurement")]
    MissingExactSolution,
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Stress-point gradient error in several norms: the Euclidean vector norm
/// (reported as the headline number), the componentwise max, and the
/// per-class Euclidean maxima (interior nodes, edge midpoints, element
/// centers).
#[derive(Debug, Clone, Copy)]
pub struct SuperconvError {
    pub euclid: f64,
    pub max_component: f64,
    pub by_class: [f64; 3],
}

/// Max over the stress set of the averaged-gradient error of `u_h`.
pub fn superconv_error(
    u_h: &NodalField,
    p: &ProblemData,
    s: &StressPointSet,
) -> Result<SuperconvError, AnalysisError> {
    let (ux, uy) = match (&p.ux_exact, &p.uy_exact) {
        (Some(ux), Some(uy)) => (ux, uy),
        _ => return Err(AnalysisError::MissingExactSolution),
    };
    let classes = [&s.interior_nodes, &s.edge_midpoints, &s.element_centers];
    let mut by_class = [0.0f64; 3];
    let mut max_component = 0.0f64;
    for (k, points) in classes.iter().enumerate() {
        let per_point = map_indexed(points.len(), |i| {
            let pt = &points[i];
            let g = u_h.averaged_gradient(pt);
            let ex = ux.eval(pt.x, pt.y).map(|v| v - g[0]);
            let ey = uy.eval(pt.x, pt.y).map(|v| v - g[1]);
            match (ex, ey) {
                (Ok(ex), Ok(ey)) => Ok((ex.hypot(ey), ex.abs().max(ey.abs()))),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        });
        for r in per_point {
            let (euclid, comp) = r?;
            by_class[k] = by_class[k].max(euclid);
            max_component = max_component.max(comp);
        }
    }
    Ok(SuperconvError {
        euclid: by_class[0].max(by_class[1]).max(by_class[2]),
        max_component,
        by_class,
    })
}

/// `(e_L2, e_H1 seminorm, e_inf)` of `u_h` against the exact solution;
/// volume norms by tensor Gauss of `q.norm_order`, `e_inf` over nodes.
pub fn error_norms(
    u_h: &NodalField,
    p: &ProblemData,
    q: &QuadratureSpec,
) -> Result<(f64, f64, f64), AnalysisError> {
    let (u, ux, uy) = match (&p.u_exact, &p.ux_exact, &p.uy_exact) {
        (Some(u), Some(ux), Some(uy)) => (u, ux, uy),
        _ => return Err(AnalysisError::MissingExactSolution),
    };
    let mesh = u_h.mesh().clone();
    let rule = segment_rule(q.norm_order).map_err(AssemblyError::from)?;
    let per_element = map_indexed(mesh.num_elements(), |e| -> Result<(f64, f64), EvalError> {
        let rect = mesh.element(e).rect;
        let (cx, cy) = rect.center();
        let hx2 = 0.5 * rect.hx();
        let hy2 = 0.5 * rect.hy();
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        for (&tx, &wx) in rule.points.iter().zip(rule.weights) {
            let x = cx + tx * hx2;
            for (&ty, &wy) in rule.points.iter().zip(rule.weights) {
                let y = cy + ty * hy2;
                let wq = wx * wy * hx2 * hy2;
                let diff = u.eval(x, y)? - u_h.eval_in(e, x, y);
                let g = u_h.grad_in(e, x, y);
                let dx = ux.eval(x, y)? - g[0];
                let dy = uy.eval(x, y)? - g[1];
                l2 += wq * diff * diff;
                h1 += wq * (dx * dx + dy * dy);
            }
        }
        Ok((l2, h1))
    });
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for r in per_element {
        let (a, b) = r?;
        l2 += a;
        h1 += b;
    }
    let mut e_inf = 0.0f64;
    for node in 0..mesh.num_nodes() {
        let (x, y) = mesh.node_coords(node);
        e_inf = e_inf.max((u.eval(x, y)? - u_h.values()[node]).abs());
    }
    Ok((l2.sqrt(), h1.sqrt(), e_inf))
}

/// Full H1 norm of `Pi_h u - u_h` (supercloseness to the interpolant).
pub fn supercloseness(
    u_h: &NodalField,
    p: &ProblemData,
    q: &QuadratureSpec,
) -> Result<f64, AnalysisError> {
    let u = p.u_exact.as_ref().ok_or(AnalysisError::MissingExactSolution)?;
    let mesh = u_h.mesh().clone();
    let rule = segment_rule(q.norm_order).map_err(AssemblyError::from)?;
    // nodal coefficients of Pi_h u - u_h; evaluation errors surface first
    let mut diff = Vec::with_capacity(mesh.num_nodes());
    for node in 0..mesh.num_nodes() {
        let (x, y) = mesh.node_coords(node);
        diff.push(u.eval(x, y)? - u_h.values()[node]);
    }
    let field = NodalField::from_values(mesh.clone(), diff).expect("sizes agree");
    let per_element = map_indexed(mesh.num_elements(), |e| {
        let rect = mesh.element(e).rect;
        let (cx, cy) = rect.center();
        let hx2 = 0.5 * rect.hx();
        let hy2 = 0.5 * rect.hy();
        let mut acc = 0.0;
        for (&tx, &wx) in rule.points.iter().zip(rule.weights) {
            let x = cx + tx * hx2;
            for (&ty, &wy) in rule.points.iter().zip(rule.weights) {
                let y = cy + ty * hy2;
                let wq = wx * wy * hx2 * hy2;
                let v = field.eval_in(e, x, y);
                let g = field.grad_in(e, x, y);
                acc += wq * (v * v + g[0] * g[0] + g[1] * g[1]);
            }
        }
        acc
    });
    Ok(per_element.iter().sum::<f64>().sqrt())
}

/// Errors and solver data of one refinement level.
#[derive(Debug, Clone)]
pub struct LevelErrors {
    /// Largest element diameter.
    pub h: f64,
    /// Mesh size label 1/n of the uniform level.
    pub n: usize,
    pub dof: usize,
    /// Stress-point errors; absent when no exact solution is configured.
    pub e_s: Option<SuperconvError>,
    pub e_l2: Option<f64>,
    pub e_h1: Option<f64>,
    pub e_close: Option<f64>,
    pub e_inf: Option<f64>,
    pub solve: SolveReport,
}

/// Ordered levels of a refinement study.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub levels: Vec<LevelErrors>,
}

/// Observed order between consecutive errors: `ln(e_h / e_{h/2}) / ln 2`.
/// Undefined (rather than infinite) when either error is zero or negative.
pub fn rate(coarse: f64, fine: f64) -> Option<f64> {
    if coarse > 0.0 && fine > 0.0 {
        Some((coarse / fine).ln() / std::f64::consts::LN_2)
    } else {
        None
    }
}

impl StudyReport {
    pub fn new(levels: Vec<LevelErrors>) -> StudyReport {
        StudyReport { levels }
    }

    /// Rates of one error column; `None` marks undefined entries. The result
    /// has one entry per adjacent level pair.
    pub fn rates_of<F>(&self, column: F) -> Vec<Option<f64>>
    where
        F: Fn(&LevelErrors) -> Option<f64>,
    {
        self.levels
            .windows(2)
            .map(|w| match (column(&w[0]), column(&w[1])) {
                (Some(a), Some(b)) => rate(a, b),
                _ => None,
            })
            .collect()
    }
}

/// Runs one level: solve on the given mesh and measure every error the
/// problem data supports.
pub fn run_level(
    mesh: &Arc<TensorMesh>,
    n_label: usize,
    p: &ProblemData,
    q: &QuadratureSpec,
    opts: &SolveOptions,
) -> Result<LevelErrors, AnalysisError> {
    let (u_h, report) = solve_problem(mesh, p, q, opts)?;
    let dof = mesh.num_interior_nodes();
    if p.u_exact.is_some() {
        let s = mesh.stress_points();
        let e_s = superconv_error(&u_h, p, &s)?;
        let (l2, h1, inf) = error_norms(&u_h, p, q)?;
        let close = supercloseness(&u_h, p, q)?;
        Ok(LevelErrors {
            h: mesh.h_max(),
            n: n_label,
            dof,
            e_s: Some(e_s),
            e_l2: Some(l2),
            e_h1: Some(h1),
            e_close: Some(close),
            e_inf: Some(inf),
            solve: report,
        })
    } else {
        Ok(LevelErrors {
            h: mesh.h_max(),
            n: n_label,
            dof,
            e_s: None,
            e_l2: None,
            e_h1: None,
            e_close: None,
            e_inf: None,
            solve: report,
        })
    }
}

/// Runs `levels` uniform levels on the unit square starting at `1/n0`,
/// refining by edge-midpoint halving.
pub fn run_study(
    p: &ProblemData,
    n0: usize,
    levels: usize,
    q: &QuadratureSpec,
    opts: &SolveOptions,
) -> Result<StudyReport, AnalysisError> {
    let mut out = Vec::with_capacity(levels);
    let mut mesh = Arc::new(TensorMesh::unit_square(n0));
    let mut n = n0;
    for _ in 0..levels {
        out.push(run_level(&mesh, n, p, q, opts)?);
        mesh = Arc::new(mesh.refine_halve());
        n *= 2;
    }
    Ok(StudyReport::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    #[test]
    fn superconv_error_vanishes_for_bilinear_exact_solution() {
        // u_h = interpolant of xy: the averaged gradient is exact at every
        // stress point regardless of A and c
        let p = ProblemData::with_exact_solution(
            [
                Expr::parse("exp(x+y)").unwrap(),
                Expr::parse("x").unwrap(),
                Expr::parse("y").unwrap(),
                Expr::parse("2+x^2").unwrap(),
            ],
            Expr::parse("1+x").unwrap(),
            Expr::parse("x*y").unwrap(),
            None,
        );
        let mesh = Arc::new(TensorMesh::new(vec![0.0, 0.3, 0.7, 1.0], vec![0.0, 0.5, 1.0]).unwrap());
        let u_h = NodalField::interpolate(&mesh, |x, y| x * y);
        let e = superconv_error(&u_h, &p, &mesh.stress_points()).unwrap();
        assert!(e.euclid <= 1e-12, "e_S = {}", e.euclid);
        assert!(e.max_component <= e.euclid + 1e-15);
    }

    #[test]
    fn superconv_error_requires_exact_solution() {
        let p = ProblemData::with_source(
            [Expr::Num(1.0), Expr::Num(0.0), Expr::Num(0.0), Expr::Num(1.0)],
            Expr::Num(0.0),
            Expr::Num(1.0),
            None,
        );
        let mesh = Arc::new(TensorMesh::unit_square(2));
        let u_h = NodalField::interpolate(&mesh, |_, _| 0.0);
        assert!(matches!(
            superconv_error(&u_h, &p, &mesh.stress_points()),
            Err(AnalysisError::MissingExactSolution)
        ));
    }

    #[test]
    fn interpolant_of_exact_solution_has_tiny_errors() {
        let p = ProblemData::laplace(Expr::Num(0.0), Expr::parse("x*y").unwrap(), None);
        let mesh = Arc::new(TensorMesh::unit_square(3));
        let u_h = NodalField::interpolate(&mesh, |x, y| x * y);
        let (l2, h1, inf) = error_norms(&u_h, &p, &QuadratureSpec::default()).unwrap();
        assert!(l2 <= 1e-12 && h1 <= 1e-12 && inf <= 1e-12);
        let close = supercloseness(&u_h, &p, &QuadratureSpec::default()).unwrap();
        assert!(close <= 1e-10);
    }

    #[test]
    fn l2_error_of_quadratic_interpolant_on_single_element() {
        // u = x^2 on the unit square, u_h = Pi_h u: e_L2 = ||x^2 - x|| = 1/sqrt(30)
        let p = ProblemData::laplace(Expr::Num(0.0), Expr::parse("x^2").unwrap(), None);
        let mesh = Arc::new(TensorMesh::unit_square(1));
        let u_h = NodalField::interpolate(&mesh, |x, _| x * x);
        let (l2, h1, _) = error_norms(&u_h, &p, &QuadratureSpec::default()).unwrap();
        assert!((l2 - (1.0 / 30.0f64).sqrt()).abs() <= 1e-14, "L2 {l2}");
        // |u - Pi u|_H1 = ||2x - 1||_L2 = 1/sqrt(3)
        assert!((h1 - (1.0 / 3.0f64).sqrt()).abs() <= 1e-14, "H1 {h1}");
    }

    #[test]
    fn rate_basics() {
        assert_eq!(rate(4.0, 1.0), Some(2.0));
        assert_eq!(rate(0.0, 1.0), None);
        assert_eq!(rate(1.0, 0.0), None);
        // rounded Table-1 style pairs reproduce the printed rates to ~1e-3
        let r = rate(3.099e-1, 7.856e-2).unwrap();
        assert!((r - 1.9802).abs() <= 1.5e-3, "rate {r}");
        let r = rate(1.969e-2, 4.949e-3).unwrap();
        assert!((r - 1.9926).abs() <= 1.5e-3, "rate {r}");
    }

    #[test]
    fn rates_invariant_under_scaling() {
        let es = [0.9, 0.21, 0.052];
        for scale in [1.0, 3.7, 1e-6] {
            let a = rate(es[0] * scale, es[1] * scale).unwrap();
            let b = rate(es[0], es[1]).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn study_report_rates_align_with_levels() {
        let p = ProblemData::laplace(
            Expr::Num(0.0),
            Expr::parse("sin(pi*x)*sin(pi*y)").unwrap(),
            None,
        );
        let report = run_study(
            &p,
            2,
            3,
            &QuadratureSpec::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(report.levels.len(), 3);
        let rates = report.rates_of(|l| l.e_l2);
        assert_eq!(rates.len(), 2);
        // smooth low-frequency solution: L2 converges near second order already
        for r in rates.into_iter().flatten() {
            assert!(r > 1.7 && r < 2.3, "rate {r}");
        }
        // h halves at every level
        assert!(report.levels[0].h > report.levels[1].h);
        assert!(report.levels[1].h > report.levels[2].h);
    }

    #[test]
    fn study_without_exact_solution_omits_error_columns() {
        let p = ProblemData::with_source(
            [Expr::Num(1.0), Expr::Num(0.0), Expr::Num(0.0), Expr::Num(1.0)],
            Expr::Num(0.0),
            Expr::Num(1.0),
            None,
        );
        let report = run_study(
            &p,
            2,
            2,
            &QuadratureSpec::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(report.levels[0].e_s.is_none());
        assert!(report.levels[0].e_l2.is_none());
        assert_eq!(report.rates_of(|l| l.e_l2), vec![None]);
    }
}
