//! Tensor-product rectangular meshes, their central dual partitions, and the
//! optimal stress point set (interior nodes, interior-edge midpoints, element
//! midpoints).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("break vector needs at least 2 strictly increasing entries, got {0:?}")]
    InvalidBreaks(Vec<f64>),
    #[error("node id {0} out of range (mesh has {1} nodes)")]
    NodeOutOfRange(usize, usize),
}

/// Axis-aligned rectangle `[x1, x2] x [y1, y2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
}

impl Rect {
    pub fn new(x1: f64, x2: f64, y1: f64, y2: f64) -> Self {
        Rect { x1, x2, y1, y2 }
    }

    pub fn hx(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn hy(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))
    }

    /// Diameter (diagonal length).
    pub fn diameter(&self) -> f64 {
        self.hx().hypot(self.hy())
    }

    /// Diameter of the largest inscribed disc: the shorter side.
    pub fn inscribed_diameter(&self) -> f64 {
        self.hx().min(self.hy())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x1 <= x && x <= self.x2 && self.y1 <= y && y <= self.y2
    }
}

/// One element of the primal partition together with its corner node ids,
/// counterclockwise from the lower-left corner.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub id: usize,
    pub rect: Rect,
    /// Node ids of (lower-left, lower-right, upper-right, upper-left).
    pub corners: [usize; 4],
}

/// Control volume of a node: the rectangle bounded by the midlines of the
/// adjacent break intervals, clipped to the domain at boundary nodes.
#[derive(Debug, Clone, Copy)]
pub struct DualCell {
    pub node: usize,
    pub rect: Rect,
}

/// Which class of the stress point set a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StressClass {
    InteriorNode,
    EdgeMidpoint,
    ElementCenter,
}

/// A point of the stress set with the elements containing it
/// (4 for interior nodes, 2 for edge midpoints, 1 for element centers).
#[derive(Debug, Clone)]
pub struct StressPoint {
    pub x: f64,
    pub y: f64,
    pub class: StressClass,
    pub elements: Vec<usize>,
}

/// The optimal stress point set: all interior mesh nodes, midpoints of
/// interior edges, and element midpoints. Boundary nodes and boundary-edge
/// midpoints are excluded.
#[derive(Debug, Clone)]
pub struct StressPointSet {
    pub interior_nodes: Vec<StressPoint>,
    pub edge_midpoints: Vec<StressPoint>,
    pub element_centers: Vec<StressPoint>,
}

impl StressPointSet {
    pub fn len(&self) -> usize {
        self.interior_nodes.len() + self.edge_midpoints.len() + self.element_centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &StressPoint> {
        self.interior_nodes
            .iter()
            .chain(self.edge_midpoints.iter())
            .chain(self.element_centers.iter())
    }
}

/// Tensor-product rectangular partition of `[x_0, x_nx] x [y_0, y_ny]`.
///
/// Immutable after construction; all accessors are cheap index arithmetic.
#[derive(Debug, Clone)]
pub struct TensorMesh {
    x_breaks: Vec<f64>,
    y_breaks: Vec<f64>,
}

fn check_breaks(breaks: &[f64]) -> Result<(), MeshError> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MeshError::InvalidBreaks(breaks.to_vec()));
    }
    Ok(())
}

impl TensorMesh {
    pub fn new(x_breaks: Vec<f64>, y_breaks: Vec<f64>) -> Result<Self, MeshError> {
        check_breaks(&x_breaks)?;
        check_breaks(&y_breaks)?;
        Ok(TensorMesh { x_breaks, y_breaks })
    }

    /// Uniform n-by-n mesh of the unit square.
    pub fn unit_square(n: usize) -> Self {
        let breaks: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        TensorMesh {
            x_breaks: breaks.clone(),
            y_breaks: breaks,
        }
    }

    pub fn x_breaks(&self) -> &[f64] {
        &self.x_breaks
    }

    pub fn y_breaks(&self) -> &[f64] {
        &self.y_breaks
    }

    /// Number of elements along x.
    pub fn nx(&self) -> usize {
        self.x_breaks.len() - 1
    }

    /// Number of elements along y.
    pub fn ny(&self) -> usize {
        self.y_breaks.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx() + 1) * (self.ny() + 1)
    }

    pub fn num_elements(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn domain(&self) -> Rect {
        Rect::new(
            self.x_breaks[0],
            *self.x_breaks.last().unwrap(),
            self.y_breaks[0],
            *self.y_breaks.last().unwrap(),
        )
    }

    /// Largest element diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.num_elements())
            .map(|e| self.element(e).rect.diameter())
            .fold(0.0, f64::max)
    }

    pub fn node_id(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx() && j <= self.ny());
        j * (self.nx() + 1) + i
    }

    pub fn node_grid(&self, id: usize) -> (usize, usize) {
        (id % (self.nx() + 1), id / (self.nx() + 1))
    }

    pub fn node_coords(&self, id: usize) -> (f64, f64) {
        let (i, j) = self.node_grid(id);
        (self.x_breaks[i], self.y_breaks[j])
    }

    pub fn is_boundary_node(&self, id: usize) -> bool {
        let (i, j) = self.node_grid(id);
        i == 0 || j == 0 || i == self.nx() || j == self.ny()
    }

    pub fn num_interior_nodes(&self) -> usize {
        (self.nx().saturating_sub(1)) * (self.ny().saturating_sub(1))
    }

    pub fn element_id(&self, ei: usize, ej: usize) -> usize {
        debug_assert!(ei < self.nx() && ej < self.ny());
        ej * self.nx() + ei
    }

    pub fn element_grid(&self, id: usize) -> (usize, usize) {
        (id % self.nx(), id / self.nx())
    }

    pub fn element(&self, id: usize) -> Element {
        let (ei, ej) = self.element_grid(id);
        let rect = Rect::new(
            self.x_breaks[ei],
            self.x_breaks[ei + 1],
            self.y_breaks[ej],
            self.y_breaks[ej + 1],
        );
        Element {
            id,
            rect,
            corners: [
                self.node_id(ei, ej),
                self.node_id(ei + 1, ej),
                self.node_id(ei + 1, ej + 1),
                self.node_id(ei, ej + 1),
            ],
        }
    }

    /// Element containing `(x, y)`; points on shared edges resolve to the
    /// element with the larger index range start (clamped to the domain).
    pub fn locate(&self, x: f64, y: f64) -> usize {
        let ei = locate_interval(&self.x_breaks, x);
        let ej = locate_interval(&self.y_breaks, y);
        self.element_id(ei, ej)
    }

    /// Bisects every break interval; element count quadruples and the parent
    /// break points are a subset of the child's.
    pub fn refine_halve(&self) -> TensorMesh {
        TensorMesh {
            x_breaks: halve(&self.x_breaks),
            y_breaks: halve(&self.y_breaks),
        }
    }

    /// Control volume of a node (clipped to the domain at boundary nodes).
    pub fn dual_cell(&self, node: usize) -> Result<DualCell, MeshError> {
        if node >= self.num_nodes() {
            return Err(MeshError::NodeOutOfRange(node, self.num_nodes()));
        }
        let (i, j) = self.node_grid(node);
        let xb = &self.x_breaks;
        let yb = &self.y_breaks;
        let x1 = if i == 0 { xb[0] } else { 0.5 * (xb[i - 1] + xb[i]) };
        let x2 = if i == self.nx() { xb[i] } else { 0.5 * (xb[i] + xb[i + 1]) };
        let y1 = if j == 0 { yb[0] } else { 0.5 * (yb[j - 1] + yb[j]) };
        let y2 = if j == self.ny() { yb[j] } else { 0.5 * (yb[j] + yb[j + 1]) };
        Ok(DualCell {
            node,
            rect: Rect::new(x1, x2, y1, y2),
        })
    }

    /// Regularity ratio `gamma = max_K h_K / rho_K` over all elements.
    pub fn regularity_ratio(&self) -> f64 {
        (0..self.num_elements())
            .map(|e| {
                let r = self.element(e).rect;
                r.diameter() / r.inscribed_diameter()
            })
            .fold(0.0, f64::max)
    }

    /// Quasi-uniformity measure `max_K h_K / min_K h_K`.
    pub fn quasi_uniformity(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for e in 0..self.num_elements() {
            let d = self.element(e).rect.diameter();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        hi / lo
    }

    /// The optimal stress point set with containing-element lists.
    pub fn stress_points(&self) -> StressPointSet {
        let nx = self.nx();
        let ny = self.ny();
        let mut interior_nodes = Vec::new();
        for j in 1..ny {
            for i in 1..nx {
                interior_nodes.push(StressPoint {
                    x: self.x_breaks[i],
                    y: self.y_breaks[j],
                    class: StressClass::InteriorNode,
                    elements: vec![
                        self.element_id(i - 1, j - 1),
                        self.element_id(i, j - 1),
                        self.element_id(i - 1, j),
                        self.element_id(i, j),
                    ],
                });
            }
        }
        let mut edge_midpoints = Vec::new();
        // vertical interior edges x = x_i shared by elements (i-1, j) and (i, j)
        for i in 1..nx {
            for j in 0..ny {
                edge_midpoints.push(StressPoint {
                    x: self.x_breaks[i],
                    y: 0.5 * (self.y_breaks[j] + self.y_breaks[j + 1]),
                    class: StressClass::EdgeMidpoint,
                    elements: vec![self.element_id(i - 1, j), self.element_id(i, j)],
                });
            }
        }
        // horizontal interior edges y = y_j shared by (i, j-1) and (i, j)
        for j in 1..ny {
            for i in 0..nx {
                edge_midpoints.push(StressPoint {
                    x: 0.5 * (self.x_breaks[i] + self.x_breaks[i + 1]),
                    y: self.y_breaks[j],
                    class: StressClass::EdgeMidpoint,
                    elements: vec![self.element_id(i, j - 1), self.element_id(i, j)],
                });
            }
        }
        let mut element_centers = Vec::new();
        for e in 0..self.num_elements() {
            let (cx, cy) = self.element(e).rect.center();
            element_centers.push(StressPoint {
                x: cx,
                y: cy,
                class: StressClass::ElementCenter,
                elements: vec![e],
            });
        }
        StressPointSet {
            interior_nodes,
            edge_midpoints,
            element_centers,
        }
    }
}

fn halve(breaks: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * breaks.len() - 1);
    for w in breaks.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*breaks.last().unwrap());
    out
}

/// Index of the interval of `breaks` containing `t`, clamped to valid range.
fn locate_interval(breaks: &[f64], t: f64) -> usize {
    match breaks.binary_search_by(|b| b.partial_cmp(&t).unwrap()) {
        Ok(i) => i.min(breaks.len() - 2),
        Err(i) => i.saturating_sub(1).min(breaks.len() - 2),
    }
}
