//! Orthogonal projections onto the tangent space `R` of a low-rank matrix and
//! onto a support set `Ω`.

use crate::error::{invalid, Result};
use crate::matrix::DenseMatrix;

const ORTHONORMAL_TOL: f64 = 1e-8;

/// The space `R = {UXᵀ + YUᵀ}` spanned by an orthonormal column basis `U`.
#[derive(Clone, Debug)]
pub struct TangentSpace {
    u: DenseMatrix,
    ut: DenseMatrix,
}

impl TangentSpace {
    pub fn new(u: DenseMatrix) -> Result<Self> {
        let ut = u.transpose();
        let gram = ut.matmul(&u)?;
        let err = (&gram - &DenseMatrix::identity(u.cols())).max_abs();
        if err > ORTHONORMAL_TOL {
            return invalid(format!(
                "basis is not orthonormal (max |UᵀU - I| = {err:e})"
            ));
        }
        Ok(Self { u, ut })
    }

    /// Tangent space of a clique indicator: `U = 1_V/√|V|`.
    pub fn from_clique(n_vertices: usize, clique: &[usize]) -> Result<Self> {
        if clique.is_empty() {
            return invalid("clique must be non-empty");
        }
        if let Some(&v) = clique.iter().find(|&&v| v >= n_vertices) {
            return invalid(format!("vertex {v} out of range for {n_vertices} vertices"));
        }
        let scale = 1.0 / (clique.len() as f64).sqrt();
        let mut u = DenseMatrix::zeros(n_vertices, 1);
        for &v in clique {
            u[(v, 0)] = scale;
        }
        Self::new(u)
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }

    /// `UUᵀ`.
    pub fn projector(&self) -> DenseMatrix {
        self.u.matmul(&self.ut).expect("basis shapes agree")
    }

    fn check(&self, x: &DenseMatrix) -> Result<()> {
        let n = self.dim();
        if x.shape() != (n, n) {
            return invalid(format!(
                "expected a {n}x{n} matrix, got {:?}",
                x.shape()
            ));
        }
        Ok(())
    }

    /// `UUᵀX + XUUᵀ − UUᵀXUUᵀ`.
    pub fn project(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(x)?;
        let utx = self.ut.matmul(x)?;
        let xu = x.matmul(&self.u)?;
        let utxu = utx.matmul(&self.u)?;
        let mut out = self.u.matmul(&utx)?;
        out.axpy(1.0, &xu.matmul(&self.ut)?);
        out.axpy(-1.0, &self.u.matmul(&utxu)?.matmul(&self.ut)?);
        Ok(out)
    }

    /// `(I − UUᵀ)X(I − UUᵀ)`.
    pub fn project_perp(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(x)?;
        let left = x - &self.u.matmul(&self.ut.matmul(x)?)?;
        let right = left.matmul(&self.u)?.matmul(&self.ut)?;
        Ok(&left - &right)
    }
}

pub fn project_r(u: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    TangentSpace::new(u.clone())?.project(x)
}

pub fn project_r_perp(u: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    TangentSpace::new(u.clone())?.project_perp(x)
}

/// Boolean entry mask describing a support set `Ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl SupportMask {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                bits.push(f(i, j));
            }
        }
        Self { rows, cols, bits }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| false)
    }

    /// Support of `x`: entries that are not exactly zero.
    pub fn support_of(x: &DenseMatrix) -> Self {
        Self {
            rows: x.rows(),
            cols: x.cols(),
            bits: x.as_slice().iter().map(|&v| v != 0.0).collect(),
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.bits.len() as f64
        }
    }

    fn check(&self, x: &DenseMatrix) -> Result<()> {
        if self.shape() != x.shape() {
            return invalid(format!(
                "mask shape {:?} does not match matrix shape {:?}",
                self.shape(),
                x.shape()
            ));
        }
        Ok(())
    }

    pub fn project(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(x)?;
        self.apply(x, true)
    }

    pub fn project_perp(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(x)?;
        self.apply(x, false)
    }

    fn apply(&self, x: &DenseMatrix, keep_inside: bool) -> Result<DenseMatrix> {
        let data = x
            .as_slice()
            .iter()
            .zip(&self.bits)
            .map(|(&v, &b)| if b == keep_inside { v } else { 0.0 })
            .collect();
        DenseMatrix::from_row_major(self.rows, self.cols, data)
    }
}

pub fn project_omega(mask: &SupportMask, x: &DenseMatrix) -> Result<DenseMatrix> {
    mask.project(x)
}

pub fn project_omega_perp(mask: &SupportMask, x: &DenseMatrix) -> Result<DenseMatrix> {
    mask.project_perp(x)
}
