//! Element-wise assembly of the FVE scheme and of the standard bilinear FEM
//! form, plus Dirichlet elimination.
//!
//! The FVE equation at an interior node P balances the flux through the
//! boundary of its control volume against reaction and load:
//!
//! ```text
//! -int_{dK_P*} n . (A grad u_h) ds + int_{K_P*} c u_h = int_{K_P*} f
//! ```
//!
//! Assembly runs element by element: inside each element the dual boundaries
//! form a cross through the element center, and each corner's control volume
//! contributes two flux segments of that cross plus reaction/load integrals
//! over the corner's quarter-rectangle.

use crate::expr::{EvalError, Expr, ProblemData};
use crate::femspace::{shape_gradients, shape_values, NodalField};
use crate::linalg::{solve, LinalgError, SolveOptions, SolveReport, SparseMatrix};
use crate::mesh::{Rect, TensorMesh};
use crate::par::{map_indexed, map_indexed_seq};
use crate::quadrature::{segment_rule, QuadratureError, QuadratureSpec};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("mesh has no interior nodes; refine at least to 2x2")]
    NoInteriorNodes,
}

/// Which bilinear form the rows were assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Control-volume flux form with dual test functions.
    Fve,
    /// Conventional `int A grad u . grad v + c u v` with nodal test functions.
    Fem,
}

/// Assembled equations before boundary elimination: one row per interior
/// node, columns over all mesh nodes.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub scheme: Scheme,
    pub mesh: Arc<TensorMesh>,
    /// unknown index -> node id
    pub interior_nodes: Vec<usize>,
    /// node id -> unknown index
    pub node_to_unknown: Vec<Option<usize>>,
    /// interior-rows by all-nodes matrix
    pub matrix: SparseMatrix,
    /// load vector over interior rows
    pub load: Vec<f64>,
}

impl Assembled {
    /// Applies the assembled bilinear form to nodal coefficient vectors:
    /// `a_h(w, Pi_h* v)` for the FVE scheme, `a(w, v)` for FEM, where `v`
    /// must vanish on the boundary (its boundary entries are ignored).
    pub fn bilinear(&self, w: &[f64], v: &[f64]) -> f64 {
        assert_eq!(w.len(), self.mesh.num_nodes());
        assert_eq!(v.len(), self.mesh.num_nodes());
        let aw = self.matrix.matvec(w);
        self.interior_nodes
            .iter()
            .zip(&aw)
            .map(|(&node, &row)| v[node] * row)
            .sum()
    }

    /// Right-hand side functional `(f, Pi_h* v)` (FVE) or `(f, v)` (FEM).
    pub fn load_functional(&self, v: &[f64]) -> f64 {
        self.interior_nodes
            .iter()
            .zip(&self.load)
            .map(|(&node, &l)| v[node] * l)
            .sum()
    }
}

/// Square system over interior unknowns after Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct FveSystem {
    pub mesh: Arc<TensorMesh>,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub interior_nodes: Vec<usize>,
    pub node_to_unknown: Vec<Option<usize>>,
    /// Interpolated boundary values per node id (0 at interior nodes).
    pub boundary_values: Vec<f64>,
}

impl FveSystem {
    /// Expands an interior solution vector to all nodes, inserting the
    /// boundary values.
    pub fn full_values(&self, interior: &[f64]) -> Vec<f64> {
        let mut out = self.boundary_values.clone();
        for (k, &node) in self.interior_nodes.iter().enumerate() {
            out[node] = interior[k];
        }
        out
    }

    pub fn solve(&self, opts: &SolveOptions) -> Result<(NodalField, SolveReport), AssemblyError> {
        let (x, report) = solve(&self.matrix, &self.rhs, opts)?;
        let field = NodalField::from_values(self.mesh.clone(), self.full_values(&x))
            .expect("system and mesh sizes agree");
        Ok((field, report))
    }
}

/// Per-element contribution: 4x4 corner coupling plus 4 load entries.
type LocalMatrix = ([[f64; 4]; 4], [f64; 4]);

fn local_fve(
    rect: &Rect,
    p: &ProblemData,
    q: &QuadratureSpec,
) -> Result<LocalMatrix, EvalError> {
    let seg = segment_rule(q.flux_order).expect("order validated by caller");
    let vol = segment_rule(q.volume_order).expect("order validated by caller");
    let (cx, cy) = rect.center();
    let mut mat = [[0.0; 4]; 4];
    let mut rhs = [0.0; 4];

    // Flux segments of the control-volume cross, per corner: (vertical
    // half y-range, sign of outward normal (n_x, 0)) and (horizontal half
    // x-range, sign of outward normal (0, n_y)).
    let v_lower = (rect.y1, cy);
    let v_upper = (cy, rect.y2);
    let h_left = (rect.x1, cx);
    let h_right = (cx, rect.x2);
    let corner_segments = [
        (v_lower, 1.0, h_left, 1.0),
        (v_lower, -1.0, h_right, 1.0),
        (v_upper, -1.0, h_right, -1.0),
        (v_upper, 1.0, h_left, -1.0),
    ];

    for (a, &((vy1, vy2), vsign, (hx1, hx2), hsign)) in corner_segments.iter().enumerate() {
        // vertical segment x = cx, y in [vy1, vy2]: flux = a11 wx + a12 wy
        let half = 0.5 * (vy2 - vy1);
        let mid = 0.5 * (vy1 + vy2);
        for (&t, &wq) in seg.points.iter().zip(seg.weights) {
            let y = mid + t * half;
            let a11 = p.a11.eval(cx, y)?;
            let a12 = p.a12.eval(cx, y)?;
            let g = shape_gradients(rect, cx, y);
            for b in 0..4 {
                mat[a][b] -= vsign * (a11 * g[b][0] + a12 * g[b][1]) * wq * half;
            }
        }
        // horizontal segment y = cy, x in [hx1, hx2]: flux = a21 wx + a22 wy
        let half = 0.5 * (hx2 - hx1);
        let mid = 0.5 * (hx1 + hx2);
        for (&t, &wq) in seg.points.iter().zip(seg.weights) {
            let x = mid + t * half;
            let a21 = p.a21.eval(x, cy)?;
            let a22 = p.a22.eval(x, cy)?;
            let g = shape_gradients(rect, x, cy);
            for b in 0..4 {
                mat[a][b] -= hsign * (a21 * g[b][0] + a22 * g[b][1]) * wq * half;
            }
        }
        // reaction and load over the corner's quarter-rectangle
        let (qx1, qx2) = if a == 0 || a == 3 { (rect.x1, cx) } else { (cx, rect.x2) };
        let (qy1, qy2) = if a == 0 || a == 1 { (rect.y1, cy) } else { (cy, rect.y2) };
        let hx2q = 0.5 * (qx2 - qx1);
        let hy2q = 0.5 * (qy2 - qy1);
        let mx = 0.5 * (qx1 + qx2);
        let my = 0.5 * (qy1 + qy2);
        for (&tx, &wx) in vol.points.iter().zip(vol.weights) {
            let x = mx + tx * hx2q;
            for (&ty, &wy) in vol.points.iter().zip(vol.weights) {
                let y = my + ty * hy2q;
                let wq = wx * wy * hx2q * hy2q;
                let cv = p.c.eval(x, y)?;
                if cv != 0.0 {
                    let n = shape_values(rect, x, y);
                    for b in 0..4 {
                        mat[a][b] += cv * n[b] * wq;
                    }
                }
                rhs[a] += p.f.eval(x, y)? * wq;
            }
        }
    }
    Ok((mat, rhs))
}

fn local_fem(
    rect: &Rect,
    p: &ProblemData,
    q: &QuadratureSpec,
) -> Result<LocalMatrix, EvalError> {
    let vol = segment_rule(q.volume_order).expect("order validated by caller");
    let (cx, cy) = rect.center();
    let hx2 = 0.5 * rect.hx();
    let hy2 = 0.5 * rect.hy();
    let mut mat = [[0.0; 4]; 4];
    let mut rhs = [0.0; 4];
    for (&tx, &wx) in vol.points.iter().zip(vol.weights) {
        let x = cx + tx * hx2;
        for (&ty, &wy) in vol.points.iter().zip(vol.weights) {
            let y = cy + ty * hy2;
            let wq = wx * wy * hx2 * hy2;
            let a11 = p.a11.eval(x, y)?;
            let a12 = p.a12.eval(x, y)?;
            let a21 = p.a21.eval(x, y)?;
            let a22 = p.a22.eval(x, y)?;
            let cv = p.c.eval(x, y)?;
            let fv = p.f.eval(x, y)?;
            let n = shape_values(rect, x, y);
            let g = shape_gradients(rect, x, y);
            for a in 0..4 {
                for b in 0..4 {
                    let flux = (a11 * g[b][0] + a12 * g[b][1]) * g[a][0]
                        + (a21 * g[b][0] + a22 * g[b][1]) * g[a][1];
                    mat[a][b] += (flux + cv * n[b] * n[a]) * wq;
                }
                rhs[a] += fv * n[a] * wq;
            }
        }
    }
    Ok((mat, rhs))
}

fn assemble(
    mesh: &Arc<TensorMesh>,
    p: &ProblemData,
    q: &QuadratureSpec,
    scheme: Scheme,
    sequential: bool,
) -> Result<Assembled, AssemblyError> {
    segment_rule(q.flux_order)?;
    segment_rule(q.volume_order)?;
    let n_nodes = mesh.num_nodes();
    let mut node_to_unknown = vec![None; n_nodes];
    let mut interior_nodes = Vec::new();
    for node in 0..n_nodes {
        if !mesh.is_boundary_node(node) {
            node_to_unknown[node] = Some(interior_nodes.len());
            interior_nodes.push(node);
        }
    }
    if interior_nodes.is_empty() {
        return Err(AssemblyError::NoInteriorNodes);
    }

    let work = |e: usize| -> Result<LocalMatrix, EvalError> {
        let rect = mesh.element(e).rect;
        match scheme {
            Scheme::Fve => local_fve(&rect, p, q),
            Scheme::Fem => local_fem(&rect, p, q),
        }
    };
    let locals = if sequential {
        map_indexed_seq(mesh.num_elements(), work)
    } else {
        map_indexed(mesh.num_elements(), work)
    };

    // deterministic sequential scatter in element order
    let mut triplets = Vec::with_capacity(mesh.num_elements() * 16);
    let mut load = vec![0.0; interior_nodes.len()];
    for (e, local) in locals.into_iter().enumerate() {
        let (mat, rhs) = local?;
        let corners = mesh.element(e).corners;
        for a in 0..4 {
            if let Some(row) = node_to_unknown[corners[a]] {
                for b in 0..4 {
                    triplets.push((row, corners[b], mat[a][b]));
                }
                load[row] += rhs[a];
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(interior_nodes.len(), n_nodes, &triplets)?;
    Ok(Assembled {
        scheme,
        mesh: mesh.clone(),
        interior_nodes,
        node_to_unknown,
        matrix,
        load,
    })
}

/// Assembles the FVE equations (rows at interior nodes, columns over all
/// nodes). Element loop runs in parallel with the `parallel` feature.
pub fn assemble_fve(
    mesh: &Arc<TensorMesh>,
    p: &ProblemData,
    q: &QuadratureSpec,
) -> Result<Assembled, AssemblyError> {
    assemble(mesh, p, q, Scheme::Fve, false)
}

/// Sequential reference path for `assemble_fve`; results are bitwise equal.
pub fn assemble_fve_seq(
    mesh: &Arc<TensorMesh>,
    p: &ProblemData,
    q: &QuadratureSpec,
) -> Result<Assembled, AssemblyError> {
    assemble(mesh, p, q, Scheme::Fve, true)
}

/// Assembles the conventional FEM form with the same row/column layout.
pub fn assemble_fem(
    mesh: &Arc<TensorMesh>,
    p: &ProblemData,
    q: &QuadratureSpec,
) -> Result<Assembled, AssemblyError> {
    assemble(mesh, p, q, Scheme::Fem, false)
}

/// Fixes boundary nodes to the nodal interpolant of `g` and moves their
/// columns to the right-hand side, leaving a square interior system.
pub fn apply_dirichlet(asm: &Assembled, g: &Expr) -> Result<FveSystem, AssemblyError> {
    let mesh = &asm.mesh;
    let n_int = asm.interior_nodes.len();
    let mut boundary_values = vec![0.0; mesh.num_nodes()];
    for node in 0..mesh.num_nodes() {
        if mesh.is_boundary_node(node) {
            let (x, y) = mesh.node_coords(node);
            boundary_values[node] = g.eval(x, y)?;
        }
    }
    let mut triplets = Vec::with_capacity(asm.matrix.nnz());
    let mut rhs = asm.load.clone();
    for row in 0..n_int {
        let (cols, vals) = asm.matrix.row(row);
        for (&node, &v) in cols.iter().zip(vals) {
            match asm.node_to_unknown[node] {
                Some(col) => triplets.push((row, col, v)),
                None => rhs[row] -= v * boundary_values[node],
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(n_int, n_int, &triplets)?;
    Ok(FveSystem {
        mesh: mesh.clone(),
        matrix,
        rhs,
        interior_nodes: asm.interior_nodes.clone(),
        node_to_unknown: asm.node_to_unknown.clone(),
        boundary_values,
    })
}

/// Assembles, eliminates the boundary, and solves in one step.
pub fn solve_problem(
    mesh: &Arc<TensorMesh>,
    p: &ProblemData,
    q: &QuadratureSpec,
    opts: &SolveOptions,
) -> Result<(NodalField, SolveReport), AssemblyError> {
    let asm = assemble_fve(mesh, p, q)?;
    let sys = apply_dirichlet(&asm, &p.g)?;
    sys.solve(opts)
}
