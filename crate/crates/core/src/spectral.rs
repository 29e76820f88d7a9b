//! Eigen and singular value machinery, plus the matrix norms built on it.
//!
//! Symmetric matrices go through a self-adjoint eigendecomposition with
//! `σᵢ = |λᵢ|`; anything else falls back to a full SVD. All faer calls run with
//! `Par::Seq`.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::{Mat, Par};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::DenseMatrix;

/// Inputs this close to symmetric (relative to their largest entry) use the eigen path.
const SYMMETRIC_FAST_PATH_TOL: f64 = 1e-12;

/// Eigenpairs of a symmetric matrix, eigenvalues in nondecreasing order.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: DenseMatrix,
}

pub fn symmetric_eigen(x: &DenseMatrix) -> Result<SymmetricEigen> {
    let n = check_square(x)?;
    let mut u = Mat::<f64>::zeros(n, n);
    let mut s = Diag::<f64>::zeros(n);
    let par = Par::Seq;
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        x.faer_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| eigen_failure(format!("{e:?}")))?;
    Ok(SymmetricEigen {
        values: s.column_vector().iter().copied().collect(),
        vectors: DenseMatrix::from_faer(u.as_ref()),
    })
}

pub fn symmetric_eigenvalues(x: &DenseMatrix) -> Result<Vec<f64>> {
    let n = check_square(x)?;
    let mut s = Diag::<f64>::zeros(n);
    let par = Par::Seq;
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::No,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        x.faer_ref(),
        s.as_mut(),
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| eigen_failure(format!("{e:?}")))?;
    Ok(s.column_vector().iter().copied().collect())
}

/// Singular values in nonincreasing order.
pub fn singular_values(x: &DenseMatrix) -> Result<Vec<f64>> {
    if x.rows() == 0 || x.cols() == 0 {
        return Ok(Vec::new());
    }
    let mut sv = if x.is_square() && is_nearly_symmetric(x) {
        let mut sym = x.clone();
        sym.symmetrize();
        symmetric_eigenvalues(&sym)?
            .into_iter()
            .map(f64::abs)
            .collect::<Vec<_>>()
    } else {
        general_singular_values(x)?
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

fn general_singular_values(x: &DenseMatrix) -> Result<Vec<f64>> {
    let (m, n) = x.shape();
    let mut s = Diag::<f64>::zeros(m.min(n));
    let par = Par::Seq;
    let mut buf = MemBuffer::new(svd::svd_scratch::<f64>(
        m,
        n,
        ComputeSvdVectors::No,
        ComputeSvdVectors::No,
        par,
        Default::default(),
    ));
    svd::svd(
        x.faer_ref(),
        s.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| eigen_failure(format!("{e:?}")))?;
    Ok(s.column_vector().iter().copied().collect())
}

fn is_nearly_symmetric(x: &DenseMatrix) -> bool {
    x.asymmetry() <= SYMMETRIC_FAST_PATH_TOL * x.max_abs().max(1.0)
}

fn check_square(x: &DenseMatrix) -> Result<usize> {
    if !x.is_square() {
        return invalid(format!("expected a square matrix, got {:?}", x.shape()));
    }
    Ok(x.rows())
}

fn eigen_failure(msg: String) -> Error {
    Error::Numerical {
        iteration: 0,
        message: format!("eigensolver did not converge: {msg}"),
    }
}

/// Thin SVD `u·diag(sigma)·vᵀ` of a symmetric matrix; zero singular values dropped.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    /// Equal to `u` with the columns of negative eigenvalues negated.
    pub v: DenseMatrix,
}

impl SpectralDecomposition {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let scaled = DenseMatrix::from_fn(self.u.rows(), self.rank(), |i, k| {
            self.u[(i, k)] * self.sigma[k]
        });
        scaled
            .matmul(&self.v.transpose())
            .expect("factor shapes agree by construction")
    }

    /// `Σ sgn(λₖ) uₖuₖᵀ`, the polar factor `UVᵀ` of the decomposed matrix.
    pub fn polar_factor(&self) -> DenseMatrix {
        self.u
            .matmul(&self.v.transpose())
            .expect("factor shapes agree by construction")
    }
}

/// Singular values at or below `rank_tol · σ_max` are treated as zero.
pub fn spectral_decomposition(x: &DenseMatrix, rank_tol: f64) -> Result<SpectralDecomposition> {
    let n = check_square(x)?;
    if !is_nearly_symmetric(x) {
        return invalid("spectral decomposition requires a symmetric matrix");
    }
    let mut sym = x.clone();
    sym.symmetrize();
    let eig = symmetric_eigen(&sym)?;
    let sigma_max = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut order: Vec<usize> = (0..n)
        .filter(|&k| sigma_max > 0.0 && eig.values[k].abs() > rank_tol * sigma_max)
        .collect();
    order.sort_by(|&a, &b| {
        eig.values[b]
            .abs()
            .total_cmp(&eig.values[a].abs())
            .then(a.cmp(&b))
    });
    let r = order.len();
    let u = DenseMatrix::from_fn(n, r, |i, k| eig.vectors[(i, order[k])]);
    let v = DenseMatrix::from_fn(n, r, |i, k| {
        eig.vectors[(i, order[k])] * eig.values[order[k]].signum()
    });
    let sigma = order.iter().map(|&k| eig.values[k].abs()).collect();
    Ok(SpectralDecomposition { u, sigma, v })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub frobenius: f64,
    pub nuclear: f64,
    pub spectral: f64,
    pub l1_entrywise: f64,
    pub linf_entrywise: f64,
}

pub fn norms(x: &DenseMatrix) -> Result<Norms> {
    let sv = singular_values(x)?;
    Ok(Norms {
        frobenius: x.frobenius_norm(),
        nuclear: sv.iter().sum(),
        spectral: sv.first().copied().unwrap_or(0.0),
        l1_entrywise: x.l1_norm(),
        linf_entrywise: x.max_abs(),
    })
}

pub fn spectral_norm(x: &DenseMatrix) -> Result<f64> {
    if x.is_zero() {
        return Ok(0.0);
    }
    Ok(singular_values(x)?.first().copied().unwrap_or(0.0))
}

pub fn nuclear_norm(x: &DenseMatrix) -> Result<f64> {
    if x.is_zero() {
        return Ok(0.0);
    }
    Ok(singular_values(x)?.iter().sum())
}

/// `Σ Cᵢⱼ·|Xᵢⱼ|`.
pub fn weighted_l1(x: &DenseMatrix, c: &DenseMatrix) -> Result<f64> {
    x.check_same_shape(c, "weighted l1")?;
    Ok(x.as_slice()
        .iter()
        .zip(c.as_slice())
        .map(|(v, w)| w * v.abs())
        .sum())
}
