//! Dense least squares via Householder QR with column pivoting.
//!
//! The design matrix is stored column-major so that each Householder sweep
//! touches contiguous memory. Rank is decided greedily: columns are pivoted
//! by remaining norm and elimination stops once the next pivot falls below
//! `rel_tol * |R[0,0]|`. Remaining columns are reported as dropped and get a
//! zero coefficient.

use nalgebra::DMatrix;

/// Column-major dense matrix with a fixed row count.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    rows: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            data: Vec::with_capacity(rows * cols),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.data.len().checked_div(self.rows).unwrap_or(0)
    }

    pub fn push_column<I: IntoIterator<Item = f64>>(&mut self, values: I) {
        let before = self.data.len();
        self.data.extend(values);
        assert_eq!(
            self.data.len() - before,
            self.rows,
            "column length does not match design rows"
        );
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    /// `X * coef`.
    pub fn mul_vec(&self, coef: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &c) in coef.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.column(j)) {
                *o += c * x;
            }
        }
        out
    }
}

/// Outcome of a pivoted least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// Coefficients in original column order; dropped columns are zero.
    pub coef: Vec<f64>,
    /// Columns retained, in original order.
    pub kept: Vec<usize>,
    /// Columns dropped for rank deficiency, in original order.
    pub dropped: Vec<usize>,
    /// Residual sum of squares from the orthogonal complement of Q.
    pub sse: f64,
    /// Upper-triangular factor over the kept columns, in pivot order.
    r: DMatrix<f64>,
    /// Pivot order of the kept columns (original indices).
    pivots: Vec<usize>,
}

impl LeastSquares {
    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    /// `(X_kept' X_kept)^{-1}` with rows and columns in the order of `kept`.
    pub fn xtx_inverse(&self) -> DMatrix<f64> {
        let r = self.pivots.len();
        let mut rinv = DMatrix::<f64>::identity(r, r);
        // back substitution column by column
        for col in 0..r {
            for i in (0..r).rev() {
                let mut s = rinv[(i, col)];
                for k in i + 1..r {
                    s -= self.r[(i, k)] * rinv[(k, col)];
                }
                rinv[(i, col)] = s / self.r[(i, i)];
            }
        }
        let pivoted = &rinv * rinv.transpose();
        // reorder from pivot order to ascending original order
        let order: Vec<usize> = self
            .kept
            .iter()
            .map(|c| self.pivots.iter().position(|p| p == c).unwrap())
            .collect();
        DMatrix::from_fn(r, r, |i, j| pivoted[(order[i], order[j])])
    }
}

/// Solve `min ||y - X b||` with column pivoting. Consumes a copy of `design`.
pub fn least_squares(design: &Design, y: &[f64], rel_tol: f64) -> LeastSquares {
    let n = design.rows;
    let p = design.cols();
    assert_eq!(y.len(), n, "response length does not match design rows");

    let mut a = design.data.clone();
    let mut rhs = y.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();
    let mut rank = 0usize;
    let mut r00 = 0.0f64;

    for k in 0..p.min(n) {
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..p {
            let col = &a[j * n + k..(j + 1) * n];
            let s: f64 = col.iter().map(|v| v * v).sum();
            if s > best_norm {
                best_norm = s;
                best = j;
            }
        }
        if best != k {
            for i in 0..n {
                a.swap(k * n + i, best * n + i);
            }
            perm.swap(k, best);
        }
        let norm = best_norm.sqrt();
        if k == 0 {
            r00 = norm;
        }
        if norm == 0.0 || norm <= rel_tol * r00 {
            break;
        }

        let x0 = a[k * n + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let v0 = x0 - alpha;
        let vnorm2 = norm * norm - x0 * x0 + v0 * v0;
        a[k * n + k] = v0;
        if vnorm2 > 0.0 {
            let scale = 2.0 / vnorm2;
            for j in k + 1..p {
                let mut s = 0.0;
                for i in k..n {
                    s += a[k * n + i] * a[j * n + i];
                }
                let f = s * scale;
                for i in k..n {
                    a[j * n + i] -= f * a[k * n + i];
                }
            }
            let mut s = 0.0;
            for i in k..n {
                s += a[k * n + i] * rhs[i];
            }
            let f = s * scale;
            for i in k..n {
                rhs[i] -= f * a[k * n + i];
            }
        }
        a[k * n + k] = alpha;
        rank += 1;
    }

    let mut r = DMatrix::<f64>::zeros(rank, rank);
    for j in 0..rank {
        for i in 0..=j {
            r[(i, j)] = a[j * n + i];
        }
    }
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for k in i + 1..rank {
            s -= r[(i, k)] * z[k];
        }
        z[i] = s / r[(i, i)];
    }

    let mut coef = vec![0.0; p];
    for (k, &c) in perm.iter().take(rank).enumerate() {
        coef[c] = z[k];
    }
    let pivots: Vec<usize> = perm[..rank].to_vec();
    let mut kept = pivots.clone();
    kept.sort_unstable();
    let mut dropped: Vec<usize> = perm[rank..].to_vec();
    dropped.sort_unstable();
    let sse = rhs[rank..].iter().map(|v| v * v).sum();

    LeastSquares {
        coef,
        kept,
        dropped,
        sse,
        r,
        pivots,
    }
}
