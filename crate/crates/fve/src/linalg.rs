//! Minimal sparse linear algebra: compressed-row matrices, a banded LU
//! direct solver with partial pivoting, and Jacobi-preconditioned BiCGStab
//! for the generally nonsymmetric FVE systems.

use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("triplet index ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("dimension mismatch: matrix is {0}x{1}, vector has length {2}")]
    DimensionMismatch(usize, usize, usize),
    #[error("singular pivot at column {0}")]
    SingularPivot(usize),
    #[error("iterative solver failed to converge: best relative residual {0:.3e} after {1} iterations")]
    NoConvergence(f64, usize),
}

/// Compressed sparse row matrix; per-row column indices strictly increasing,
/// duplicates summed at construction.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        for &(r, c, _) in triplets {
            if r >= rows || c >= cols {
                return Err(LinalgError::IndexOutOfRange {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&k| (triplets[k].0, triplets[k].1));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut cur_row = 0usize;
        for &k in &order {
            let (r, c, v) = triplets[k];
            while cur_row < r {
                cur_row += 1;
                row_ptr[cur_row] = col_idx.len();
            }
            if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
            }
        }
        while cur_row < rows {
            cur_row += 1;
            row_ptr[cur_row] = col_idx.len();
        }
        Ok(SparseMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
        y
    }

    /// Half bandwidth: max |i - j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for r in 0..self.rows {
            let (cols, _) = self.row(r);
            for &c in cols {
                bw = bw.max(r.abs_diff(c));
            }
        }
        bw
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max|a|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c < self.rows && r < self.cols {
                    worst = worst.max((v - self.get(c, r)).abs());
                }
            }
        }
        worst / scale
    }
}

/// Which solver `solve` should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Banded LU when the band storage is small enough, else BiCGStab.
    Auto,
    Direct,
    BiCgStab,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub method: Method,
    /// Target relative residual.
    pub tol: f64,
    /// Iteration cap for BiCGStab; defaults to 10 n.
    pub max_iter: Option<usize>,
    /// Auto picks the direct solver while n * (3 bw + 1) stays below this.
    pub direct_storage_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Auto,
            tol: 1e-12,
            max_iter: None,
            direct_storage_cap: 32_000_000,
        }
    }
}

/// What the solver did; the residual is recomputed from the returned
/// solution, never trusted from the iteration.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: &'static str,
    pub iterations: usize,
    pub residual: f64,
    pub seconds: f64,
}

/// Solves `A x = b`, auto-selecting banded LU or BiCGStab.
pub fn solve(
    a: &SparseMatrix,
    b: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::NotSquare(a.rows, a.cols));
    }
    if b.len() != a.rows {
        return Err(LinalgError::DimensionMismatch(a.rows, a.cols, b.len()));
    }
    if a.rows == 0 {
        return Ok((
            Vec::new(),
            SolveReport {
                method: "direct",
                iterations: 0,
                residual: 0.0,
                seconds: 0.0,
            },
        ));
    }
    let start = Instant::now();
    let bw = a.bandwidth();
    let banded_storage = a.rows.saturating_mul(3 * bw + 1);
    let use_direct = match opts.method {
        Method::Direct => true,
        Method::BiCgStab => false,
        Method::Auto => banded_storage <= opts.direct_storage_cap,
    };
    let (x, method, iterations) = if use_direct {
        let lu = BandedLu::factor(a, bw)?;
        (lu.solve(b), "direct", 0)
    } else {
        let max_iter = opts.max_iter.unwrap_or(10 * a.rows);
        let (x, iters) = bicgstab(a, b, opts.tol, max_iter)?;
        (x, "bicgstab", iters)
    };
    let residual = relative_residual(a, &x, b);
    if residual > opts.tol.max(1e-10) && method == "bicgstab" {
        return Err(LinalgError::NoConvergence(residual, iterations));
    }
    Ok((
        x,
        SolveReport {
            method,
            iterations,
            residual,
            seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

/// `||b - A x||_2 / ||b||_2` (or the absolute residual when `b = 0`).
pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let mut rr = 0.0;
    let mut bb = 0.0;
    for i in 0..b.len() {
        rr += (b[i] - ax[i]) * (b[i] - ax[i]);
        bb += b[i] * b[i];
    }
    if bb > 0.0 {
        (rr / bb).sqrt()
    } else {
        rr.sqrt()
    }
}

/// LAPACK-style banded LU with partial pivoting. Storage holds `kl` extra
/// superdiagonals for pivoting fill-in: row `kl + ku + i - j`, column `j`.
struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// column-major band storage, (2 kl + ku + 1) rows by n columns
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    fn factor(a: &SparseMatrix, bw: usize) -> Result<Self, LinalgError> {
        let n = a.rows;
        let (kl, ku) = (bw, bw);
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        let at = |i: usize, j: usize| kl + ku + i - j; // band row of A(i, j)
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                ab[at(i, j) + j * ldab] += v;
            }
        }
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize; // last column updated by pivoting so far
        for j in 0..n {
            let km = kl.min(n - 1 - j); // subdiagonal entries in this column
            // partial pivot among rows j..=j+km
            let mut jp = 0usize;
            let mut best = ab[at(j, j) + j * ldab].abs();
            for p in 1..=km {
                let v = ab[at(j + p, j) + j * ldab].abs();
                if v > best {
                    best = v;
                    jp = p;
                }
            }
            ipiv[j] = j + jp;
            let pivot = ab[at(j + jp, j) + j * ldab];
            if pivot == 0.0 {
                return Err(LinalgError::SingularPivot(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                // swap rows j and j+jp across columns j..=ju
                for col in j..=ju {
                    ab.swap(at(j, col) + col * ldab, at(j + jp, col) + col * ldab);
                }
            }
            if km > 0 {
                let d = ab[at(j, j) + j * ldab];
                for p in 1..=km {
                    ab[at(j + p, j) + j * ldab] /= d;
                }
                for col in (j + 1)..=ju {
                    let ajc = ab[at(j, col) + col * ldab];
                    if ajc != 0.0 {
                        for p in 1..=km {
                            let l = ab[at(j + p, j) + j * ldab];
                            ab[at(j + p, col) + col * ldab] -= l * ajc;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, ab, ipiv })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let ldab = 2 * kl + ku + 1;
        let at = |i: usize, j: usize| kl + ku + i - j;
        let mut x = b.to_vec();
        // forward: apply pivots and unit-lower band
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            for i in 1..=km {
                x[j + i] -= self.ab[at(j + i, j) + j * ldab] * x[j];
            }
        }
        // backward: upper band has width ku + kl after pivoting
        let ubw = ku + kl;
        for j in (0..n).rev() {
            x[j] /= self.ab[at(j, j) + j * ldab];
            let lo = j.saturating_sub(ubw);
            for i in lo..j {
                x[i] -= self.ab[at(i, j) + j * ldab] * x[j];
            }
        }
        x
    }
}

/// Jacobi-preconditioned BiCGStab. Returns the iterate and iteration count.
fn bicgstab(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize), LinalgError> {
    let n = a.rows;
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.get(i, i);
            if d != 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, d)| a * d).collect() };

    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut best = (x.clone(), f64::INFINITY);

    for it in 1..=max_iter {
        let rho_next = dot(&r0, &r);
        if rho_next == 0.0 {
            break;
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        v = a.matvec(&p_hat);
        let denom = dot(&r0, &v);
        if denom == 0.0 {
            break;
        }
        alpha = rho / denom;
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        let s_norm = dot(&s, &s).sqrt();
        if s_norm / norm_b < tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok((x, it));
        }
        let s_hat = precond(&s);
        let t = a.matvec(&s_hat);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
        }
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        let rel = dot(&r, &r).sqrt() / norm_b;
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        if rel < tol {
            return Ok((x, it));
        }
        if omega == 0.0 {
            break;
        }
    }
    // breakdown or iteration cap: report the best iterate seen
    let rel = relative_residual(a, &best.0, b);
    if rel < tol {
        return Ok((best.0, max_iter));
    }
    Err(LinalgError::NoConvergence(rel, max_iter))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
