//! Bilinear shape functions on rectangles, nodal interpolation, the dual
//! (piecewise-constant) projection, cell averages, the discrete H1 seminorm,
//! and averaged gradients at stress points.

use crate::mesh::{Rect, StressPoint, TensorMesh};
use crate::par::map_indexed;
use crate::quadrature::{integrate_rect, QuadratureError};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("point ({0}, {1}) lies outside the element")]
    PointOutsideElement(f64, f64),
    #[error("field has {0} values but mesh has {1} nodes")]
    SizeMismatch(usize, usize),
}

/// Values of the four corner basis functions at `(x, y)` in `rect`,
/// ordered counterclockwise from the lower-left corner. They sum to 1.
pub fn shape_values(rect: &Rect, x: f64, y: f64) -> [f64; 4] {
    let xi = (x - rect.x1) / rect.hx();
    let eta = (y - rect.y1) / rect.hy();
    [
        (1.0 - xi) * (1.0 - eta),
        xi * (1.0 - eta),
        xi * eta,
        (1.0 - xi) * eta,
    ]
}

/// Gradients of the four corner basis functions at `(x, y)`; they sum to 0.
pub fn shape_gradients(rect: &Rect, x: f64, y: f64) -> [[f64; 2]; 4] {
    let hx = rect.hx();
    let hy = rect.hy();
    let xi = (x - rect.x1) / hx;
    let eta = (y - rect.y1) / hy;
    [
        [-(1.0 - eta) / hx, -(1.0 - xi) / hy],
        [(1.0 - eta) / hx, -xi / hy],
        [eta / hx, xi / hy],
        [-eta / hx, (1.0 - xi) / hy],
    ]
}

/// Checked variant: values and gradients, failing for points outside the
/// closure of `rect`.
pub fn shape_eval(rect: &Rect, x: f64, y: f64) -> Result<([f64; 4], [[f64; 2]; 4]), FieldError> {
    if !rect.contains(x, y) {
        return Err(FieldError::PointOutsideElement(x, y));
    }
    Ok((shape_values(rect, x, y), shape_gradients(rect, x, y)))
}

/// A continuous piecewise-bilinear function given by one coefficient per
/// mesh node.
#[derive(Debug, Clone)]
pub struct NodalField {
    mesh: Arc<TensorMesh>,
    values: Vec<f64>,
}

impl NodalField {
    pub fn from_values(mesh: Arc<TensorMesh>, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != mesh.num_nodes() {
            return Err(FieldError::SizeMismatch(values.len(), mesh.num_nodes()));
        }
        Ok(NodalField { mesh, values })
    }

    /// Nodal interpolant: coefficients are the values of `f` at the nodes.
    pub fn interpolate<F>(mesh: &Arc<TensorMesh>, f: F) -> NodalField
    where
        F: Fn(f64, f64) -> f64,
    {
        let values = (0..mesh.num_nodes())
            .map(|n| {
                let (x, y) = mesh.node_coords(n);
                f(x, y)
            })
            .collect();
        NodalField {
            mesh: mesh.clone(),
            values,
        }
    }

    pub fn mesh(&self) -> &Arc<TensorMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Corner coefficients of the element, counterclockwise from lower-left.
    pub fn corner_values(&self, element: usize) -> [f64; 4] {
        let e = self.mesh.element(element);
        [
            self.values[e.corners[0]],
            self.values[e.corners[1]],
            self.values[e.corners[2]],
            self.values[e.corners[3]],
        ]
    }

    /// Evaluate inside a given element (valid on its closure).
    pub fn eval_in(&self, element: usize, x: f64, y: f64) -> f64 {
        let rect = self.mesh.element(element).rect;
        let w = self.corner_values(element);
        bilinear_value(&rect, &w, x, y)
    }

    /// Gradient inside a given element (valid on its closure; one-sided on
    /// shared edges).
    pub fn grad_in(&self, element: usize, x: f64, y: f64) -> [f64; 2] {
        let rect = self.mesh.element(element).rect;
        let w = self.corner_values(element);
        bilinear_gradient(&rect, &w, x, y)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.eval_in(self.mesh.locate(x, y), x, y)
    }

    /// Projection onto the dual test space: same coefficients reinterpreted
    /// as constants on dual cells, with boundary coefficients zeroed.
    pub fn pi_star(&self) -> DualField {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(n, &v)| if self.mesh.is_boundary_node(n) { 0.0 } else { v })
            .collect();
        DualField {
            mesh: self.mesh.clone(),
            values,
        }
    }

    /// Discrete H1 seminorm: the root of the sum over elements of
    /// `(w2-w1)^2 + (w3-w2)^2 + (w3-w4)^2 + (w4-w1)^2`.
    pub fn discrete_h1_seminorm(&self) -> f64 {
        let mut acc = 0.0;
        for e in 0..self.mesh.num_elements() {
            let [w1, w2, w3, w4] = self.corner_values(e);
            acc += (w2 - w1).powi(2)
                + (w3 - w2).powi(2)
                + (w3 - w4).powi(2)
                + (w4 - w1).powi(2);
        }
        acc.sqrt()
    }

    /// Arithmetic mean of the one-sided gradients over the elements
    /// containing the stress point (4 at interior nodes, 2 at edge
    /// midpoints, 1 at element centers).
    pub fn averaged_gradient(&self, p: &StressPoint) -> [f64; 2] {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for &e in &p.elements {
            let g = self.grad_in(e, p.x, p.y);
            gx += g[0];
            gy += g[1];
        }
        let n = p.elements.len() as f64;
        [gx / n, gy / n]
    }
}

/// Bilinear value on `rect` from the four corner coefficients.
pub fn bilinear_value(rect: &Rect, w: &[f64; 4], x: f64, y: f64) -> f64 {
    let xi = (x - rect.x1) / rect.hx();
    let eta = (y - rect.y1) / rect.hy();
    w[0] + (w[1] - w[0]) * xi + (w[3] - w[0]) * eta + (w[2] + w[0] - w[1] - w[3]) * xi * eta
}

/// Bilinear gradient on `rect` from the four corner coefficients.
pub fn bilinear_gradient(rect: &Rect, w: &[f64; 4], x: f64, y: f64) -> [f64; 2] {
    let hx = rect.hx();
    let hy = rect.hy();
    let xi = (x - rect.x1) / hx;
    let eta = (y - rect.y1) / hy;
    let twist = w[2] + w[0] - w[1] - w[3];
    [
        ((w[1] - w[0]) + twist * eta) / hx,
        ((w[3] - w[0]) + twist * xi) / hy,
    ]
}

/// A piecewise-constant function on the dual partition, one value per node;
/// dual cells of boundary nodes carry 0.
#[derive(Debug, Clone)]
pub struct DualField {
    mesh: Arc<TensorMesh>,
    values: Vec<f64>,
}

impl DualField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of the dual cell containing `(x, y)`. Points on a dual-cell
    /// boundary resolve to the lower-index node.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (ei, ej) = self.mesh.element_grid(self.mesh.locate(x, y));
        let rect = self.mesh.element(self.mesh.element_id(ei, ej)).rect;
        let (cx, cy) = rect.center();
        let i = if x <= cx { ei } else { ei + 1 };
        let j = if y <= cy { ej } else { ej + 1 };
        self.values[self.mesh.node_id(i, j)]
    }
}

/// Per-element mean values `(1/|K|) int_K f`, by `q`-by-`q` Gauss quadrature
/// (4 by default, matching the error-norm order).
pub fn cell_average<F>(mesh: &TensorMesh, f: F, q: usize) -> Result<Vec<f64>, QuadratureError>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    // probe the order once so the parallel loop cannot fail
    crate::quadrature::segment_rule(q)?;
    Ok(map_indexed(mesh.num_elements(), |e| {
        let rect = mesh.element(e).rect;
        integrate_rect(&f, &rect, q, q).unwrap() / rect.area()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_segment;
    use rand::{Rng, SeedableRng};

    fn unit_rect() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    #[test]
    fn shape_basics() {
        let r = unit_rect();
        let center = shape_values(&r, 0.5, 0.5);
        for v in center {
            assert!((v - 0.25).abs() < 1e-15);
        }
        let corner = shape_values(&r, 0.0, 0.0);
        assert_eq!(corner, [1.0, 0.0, 0.0, 0.0]);
        assert!(shape_eval(&r, 2.0, 0.0).is_err());
    }

    #[test]
    fn partition_of_unity_and_zero_gradient_sum() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        for _ in 0..10 {
            let x1: f64 = rng.gen_range(-1.0..1.0);
            let y1: f64 = rng.gen_range(-1.0..1.0);
            let r = Rect::new(x1, x1 + rng.gen_range(0.1..2.0), y1, y1 + rng.gen_range(0.1..2.0));
            for _ in 0..100 {
                let x = rng.gen_range(r.x1..r.x2);
                let y = rng.gen_range(r.y1..r.y2);
                let v = shape_values(&r, x, y);
                let g = shape_gradients(&r, x, y);
                assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-14);
                let gx: f64 = g.iter().map(|gi| gi[0]).sum();
                let gy: f64 = g.iter().map(|gi| gi[1]).sum();
                assert!(gx.abs() <= 1e-14 / r.hx().min(1.0));
                assert!(gy.abs() <= 1e-14 / r.hy().min(1.0));
            }
        }
    }

    #[test]
    fn twist_coefficient_vanishes_for_ruled_corner_values() {
        // corner values (0, 1, 1, 0) have w3 + w1 - w2 - w4 = 0, so the
        // mixed derivative of the interpolant vanishes
        let r = unit_rect();
        let w = [0.0, 1.0, 1.0, 0.0];
        let g_bottom = bilinear_gradient(&r, &w, 0.3, 0.0);
        let g_top = bilinear_gradient(&r, &w, 0.3, 1.0);
        assert_eq!(g_bottom[0], g_top[0]);
    }

    #[test]
    fn interpolate_reproduces_bilinear() {
        let mesh = Arc::new(TensorMesh::new(vec![0.0, 0.3, 1.0], vec![0.0, 0.6, 1.0]).unwrap());
        let f = NodalField::interpolate(&mesh, |x, y| x * y);
        for e in 0..mesh.num_elements() {
            let (cx, cy) = mesh.element(e).rect.center();
            assert!((f.eval_in(e, cx, cy) - cx * cy).abs() < 1e-15);
            let g = f.grad_in(e, cx, cy);
            assert!((g[0] - cy).abs() < 1e-15);
            assert!((g[1] - cx).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolating_x_squared_on_single_cell() {
        let mesh = Arc::new(TensorMesh::unit_square(1));
        let f = NodalField::interpolate(&mesh, |x, _| x * x);
        // interpolant is linear in xi: value 1/2 at the center, exact is 1/4
        assert!((f.eval(0.5, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_idempotent_on_nodal_fields() {
        let mesh = Arc::new(TensorMesh::unit_square(3));
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(23);
        let values: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = NodalField::from_values(mesh.clone(), values.clone()).unwrap();
        let again = NodalField::interpolate(&mesh, |x, y| f.eval(x, y));
        for (a, b) in values.iter().zip(again.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pi_star_zeroes_boundary_and_keeps_interior() {
        let mesh = Arc::new(TensorMesh::unit_square(4));
        let ones = NodalField::from_values(mesh.clone(), vec![1.0; mesh.num_nodes()]).unwrap();
        let dual = ones.pi_star();
        for n in 0..mesh.num_nodes() {
            let expect = if mesh.is_boundary_node(n) { 0.0 } else { 1.0 };
            assert_eq!(dual.values()[n], expect);
        }
        // value lookup on an interior dual cell
        assert_eq!(dual.eval(0.25, 0.25), 1.0);
        assert_eq!(dual.eval(0.01, 0.01), 0.0);
    }

    /// Lemma-2.1-style identities: the dual projection preserves element
    /// means and full-edge means of bilinear fields.
    #[test]
    fn dual_projection_preserves_element_and_edge_means() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(29);
        // interior element of a 4x4 mesh so boundary zeroing does not interfere
        let mesh = Arc::new(TensorMesh::unit_square(4));
        for _ in 0..100 {
            let values: Vec<f64> = (0..mesh.num_nodes())
                .map(|n| if mesh.is_boundary_node(n) { 0.0 } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let v = NodalField::from_values(mesh.clone(), values).unwrap();
            let dual = v.pi_star();
            let e = mesh.element_id(1, 1);
            let rect = mesh.element(e).rect;
            // volume identity
            let diff = integrate_rect(
                |x, y| v.eval_in(e, x, y) - dual.eval(x, y),
                &rect,
                4,
                4,
            )
            .unwrap();
            assert!(diff.abs() <= 1e-13, "volume mean differs by {diff}");
            // full-edge identities on all four edges
            let edges = [
                ((rect.x1, rect.y1), (rect.x2, rect.y1)),
                ((rect.x2, rect.y1), (rect.x2, rect.y2)),
                ((rect.x1, rect.y2), (rect.x2, rect.y2)),
                ((rect.x1, rect.y1), (rect.x1, rect.y2)),
            ];
            for (p0, p1) in edges {
                // integrate the two half-edges separately: the dual value jumps
                // at the edge midpoint
                let mid = (0.5 * (p0.0 + p1.0), 0.5 * (p0.1 + p1.1));
                let f = |x: f64, y: f64| v.eval_in(e, x, y) - dual.eval(x, y);
                let d = integrate_segment(f, p0, mid, 4).unwrap()
                    + integrate_segment(f, mid, p1, 4).unwrap();
                assert!(d.abs() <= 1e-13, "edge mean differs by {d}");
            }
        }
    }

    #[test]
    fn cell_average_basics() {
        let mesh = TensorMesh::unit_square(2);
        let ones = cell_average(&mesh, |_, _| 1.0, 4).unwrap();
        for v in ones {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let mesh1 = TensorMesh::unit_square(1);
        let xbar = cell_average(&mesh1, |x, _| x, 4).unwrap();
        assert!((xbar[0] - 0.5).abs() < 1e-15);
    }

    /// The mixed derivative of the interpolant equals the cell average of the
    /// mixed derivative of the function.
    #[test]
    fn interpolant_twist_equals_cell_average_of_mixed_derivative() {
        use crate::expr::{Expr, Var};
        let u = Expr::parse("2*sin(2*pi*x)*sin(3*pi*y)").unwrap();
        let uxy = u.differentiate(Var::X).differentiate(Var::Y);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        for _ in 0..50 {
            let x1: f64 = rng.gen_range(0.0..0.9);
            let y1: f64 = rng.gen_range(0.0..0.9);
            let hx: f64 = rng.gen_range(0.01..0.04);
            let hy: f64 = rng.gen_range(0.01..0.04);
            let mesh = Arc::new(
                TensorMesh::new(vec![x1, x1 + hx], vec![y1, y1 + hy]).unwrap(),
            );
            let field = NodalField::interpolate(&mesh, |x, y| u.eval(x, y).unwrap());
            let [w1, w2, w3, w4] = field.corner_values(0);
            let twist = (w3 + w1 - w2 - w4) / (hx * hy);
            let avg = cell_average(&mesh, |x, y| uxy.eval(x, y).unwrap(), 4).unwrap()[0];
            assert!(
                (twist - avg).abs() <= 1e-10,
                "twist {twist} vs cell average {avg}"
            );
        }
    }

    #[test]
    fn discrete_seminorm_examples() {
        let mesh = Arc::new(TensorMesh::unit_square(3));
        let constant = NodalField::from_values(mesh.clone(), vec![4.0; mesh.num_nodes()]).unwrap();
        assert_eq!(constant.discrete_h1_seminorm(), 0.0);

        // corner values (w1, w2, w3, w4) = (0, 1, 1, 0) in node-id order:
        // nodes (0,0), (1,0), (0,1), (1,1) carry 0, 1, 0, 1
        let single = Arc::new(TensorMesh::unit_square(1));
        let f = NodalField::from_values(single, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(f.corner_values(0), [0.0, 1.0, 1.0, 0.0]);
        // (1-0)^2 + (1-1)^2 + (1-0)^2 + (0-0)^2 = 2
        assert!((f.discrete_h1_seminorm().powi(2) - 2.0).abs() < 1e-14);
    }

    /// Norm equivalence on a single element: the true H1 seminorm squared of
    /// a bilinear function sits between 1/(6 gamma) and gamma/2 times the
    /// discrete seminorm squared, with gamma = h_K / rho_K of that element.
    #[test]
    fn seminorm_equivalence_bounds() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(37);
        for _ in 0..1000 {
            let hx: f64 = rng.gen_range(0.05..1.5);
            let hy: f64 = rng.gen_range(0.05..1.5);
            let rect = Rect::new(0.0, hx, 0.0, hy);
            let w: [f64; 4] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let discrete =
                (w[1] - w[0]).powi(2) + (w[2] - w[1]).powi(2) + (w[2] - w[3]).powi(2) + (w[3] - w[0]).powi(2);
            let true_sq = integrate_rect(
                |x, y| {
                    let g = bilinear_gradient(&rect, &w, x, y);
                    g[0] * g[0] + g[1] * g[1]
                },
                &rect,
                3,
                3,
            )
            .unwrap();
            let gamma = rect.diameter() / rect.inscribed_diameter();
            let lower = discrete / (6.0 * gamma);
            let upper = 0.5 * gamma * discrete;
            assert!(
                true_sq >= lower - 1e-12 && true_sq <= upper + 1e-12,
                "hx={hx} hy={hy} w={w:?}: {lower} <= {true_sq} <= {upper}"
            );
        }
    }

    #[test]
    fn seminorm_equivalence_concrete_case() {
        // unit square, corner values (0,1,1,0): w = xi, |w|_{1,K}^2 = 1,
        // discrete seminorm squared = 2, gamma = sqrt(2)
        let rect = unit_rect();
        let w = [0.0, 1.0, 1.0, 0.0];
        let true_sq = integrate_rect(
            |x, y| {
                let g = bilinear_gradient(&rect, &w, x, y);
                g[0] * g[0] + g[1] * g[1]
            },
            &rect,
            2,
            2,
        )
        .unwrap();
        assert!((true_sq - 1.0).abs() < 1e-15);
        let gamma = 2f64.sqrt();
        assert!(2.0 / (6.0 * gamma) <= 1.0 && 1.0 <= gamma * 2.0 / 2.0);
    }

    #[test]
    fn averaged_gradient_of_bilinear_is_exact() {
        let mesh = Arc::new(TensorMesh::new(vec![0.0, 0.25, 0.6, 1.0], vec![0.0, 0.5, 0.75, 1.0]).unwrap());
        let f = NodalField::interpolate(&mesh, |x, y| x * y);
        for p in mesh.stress_points().iter() {
            let g = f.averaged_gradient(p);
            assert!((g[0] - p.y).abs() < 1e-14, "at ({}, {})", p.x, p.y);
            assert!((g[1] - p.x).abs() < 1e-14);
        }
    }

    #[test]
    fn averaged_gradient_at_edge_midpoint_is_mean_of_sides() {
        let mesh = Arc::new(TensorMesh::unit_square(2));
        // a field whose d/dx jumps across the vertical edge x = 0.5
        let f = NodalField::interpolate(&mesh, |x, _| if x > 0.5 { 2.0 * (x - 0.5) } else { 0.0 });
        let s = mesh.stress_points();
        let p = s
            .edge_midpoints
            .iter()
            .find(|p| (p.x - 0.5).abs() < 1e-15 && (p.y - 0.25).abs() < 1e-15)
            .unwrap();
        let left = f.grad_in(p.elements[0], p.x, p.y)[0];
        let right = f.grad_in(p.elements[1], p.x, p.y)[0];
        assert!((left - 0.0).abs() < 1e-15);
        assert!((right - 2.0).abs() < 1e-15);
        assert!((f.averaged_gradient(p)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn averaged_gradient_at_center_is_single_element_gradient() {
        let mesh = Arc::new(TensorMesh::unit_square(2));
        let f = NodalField::interpolate(&mesh, |x, y| x * x + y);
        let s = mesh.stress_points();
        let p = &s.element_centers[0];
        let g = f.averaged_gradient(p);
        let direct = f.grad_in(p.elements[0], p.x, p.y);
        assert_eq!(g, direct);
    }
}
