//! Minimal dense linear algebra for the analytic classifiers.
//!
//! Everything here is 64-bit, dense and row-major. The only solver is a
//! Cholesky factorization of the regularized Gram matrix `G + γI`, which is
//! symmetric positive definite whenever `G` is positive semidefinite and
//! `γ > 0`. Dimension mismatches are contract violations and panic; non-finite
//! data is rejected with an error.

use crate::error::{AirError, Result};

/// Symmetric `f × f` matrix. Only symmetric updates are exposed, so
/// `entries[i][j] == entries[j][i]` holds bit-exactly by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "SymMatrix dimension must be positive");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// `self += scale · x xᵀ`. The product for each `(i, j)` pair is computed
    /// once and written to both triangles, so symmetry survives bit-exactly.
    pub fn rank_one_update(&mut self, x: &[f64], scale: f64) -> Result<()> {
        assert_eq!(
            x.len(),
            self.dim,
            "rank_one_update: vector length {} does not match dimension {}",
            x.len(),
            self.dim
        );
        if !scale.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(AirError::NonFinite("rank_one_update"));
        }
        let n = self.dim;
        for i in 0..n {
            let xi = scale * x[i];
            for (j, &xj) in x.iter().enumerate().skip(i) {
                let v = xi * xj;
                self.data[i * n + j] += v;
                if i != j {
                    self.data[j * n + i] += v;
                }
            }
        }
        Ok(())
    }

    /// `self += scale · other`, elementwise.
    pub fn add_scaled(&mut self, other: &SymMatrix, scale: f64) {
        assert_eq!(self.dim, other.dim, "add_scaled: dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Dense `rows × cols` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RectMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RectMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            rows > 0 && cols > 0,
            "RectMatrix dimensions must be positive"
        );
        RectMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "from_rows: data length mismatch");
        assert!(
            rows > 0 && cols > 0,
            "RectMatrix dimensions must be positive"
        );
        RectMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// `column(j) += scale · v`.
    pub fn add_scaled_column(&mut self, j: usize, v: &[f64], scale: f64) {
        assert_eq!(v.len(), self.rows, "add_scaled_column: length mismatch");
        assert!(j < self.cols, "add_scaled_column: column out of range");
        for (i, x) in v.iter().enumerate() {
            self.data[i * self.cols + j] += scale * x;
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        assert!(j < self.cols, "column out of range");
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `‖a − b‖_F / max(1, ‖b‖_F)`, the relative distance used by the
/// equivalence checks throughout the crate.
pub fn relative_frobenius_distance(a: &RectMatrix, b: &RectMatrix) -> f64 {
    assert_eq!(a.rows, b.rows, "relative_frobenius_distance: row mismatch");
    assert_eq!(
        a.cols, b.cols,
        "relative_frobenius_distance: column mismatch"
    );
    let diff: f64 = a
        .data
        .iter()
        .zip(b.data.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    diff / b.frobenius_norm().max(1.0)
}

/// Solves `(G + γI) W = B` for `W` by Cholesky factorization.
///
/// `G` must be positive semidefinite and `gamma` strictly positive, which
/// makes the system SPD in exact arithmetic. If factorization fails from
/// round-off, a diagonal jitter of `1e-8 · trace(G)/f` is added once and the
/// factorization retried.
pub fn regularized_spd_solve(g: &SymMatrix, b: &RectMatrix, gamma: f64) -> Result<RectMatrix> {
    assert_eq!(
        g.dim, b.rows,
        "regularized_spd_solve: G is {}x{} but B has {} rows",
        g.dim, g.dim, b.rows
    );
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(AirError::InvalidParameter(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    if !g.is_finite() || !b.is_finite() {
        return Err(AirError::NonFinite("regularized_spd_solve"));
    }

    let n = g.dim;
    let mut m = g.data.clone();
    for i in 0..n {
        m[i * n + i] += gamma;
    }

    let factor = match cholesky_in_place(&mut m, n) {
        Ok(()) => m,
        Err(_) => {
            // Round-off can push a pivot below zero; retry with jitter.
            let jitter = 1e-8 * g.trace() / n as f64;
            let mut retry = g.data.clone();
            for i in 0..n {
                retry[i * n + i] += gamma + jitter;
            }
            cholesky_in_place(&mut retry, n)?;
            retry
        }
    };

    let mut w = RectMatrix::zeros(b.rows, b.cols);
    let mut col = vec![0.0; n];
    for j in 0..b.cols {
        for (i, c) in col.iter_mut().enumerate() {
            *c = b.get(i, j);
        }
        solve_with_factor(&factor, n, &mut col);
        for (i, &c) in col.iter().enumerate() {
            w.set(i, j, c);
        }
    }
    Ok(w)
}

/// Lower-triangular Cholesky factor computed in place. Fails on a
/// non-positive pivot.
fn cholesky_in_place(m: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(AirError::FactorizationFailed);
        }
        let ljj = d.sqrt();
        m[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / ljj;
        }
    }
    Ok(())
}

/// Solves `L Lᵀ x = b` in place given the lower factor `L`.
fn solve_with_factor(l: &[f64], n: usize, b: &mut [f64]) {
    // Forward: L y = b.
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    // Backward: Lᵀ x = y.
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}
