//! Proximal operators of the nuclear norm and of the (weighted) entrywise ℓ1 norm.

use crate::error::{invalid, Result};
use crate::matrix::DenseMatrix;
use crate::spectral::symmetric_eigen;

/// Absolute asymmetry accepted by [`svt`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// `sgn(v)·max(|v| - t, 0)` with `sgn(0) = 0`.
#[inline]
pub fn shrink(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Result of a singular value thresholding step.
#[derive(Clone, Debug)]
pub struct SvtOutput {
    pub matrix: DenseMatrix,
    /// Nuclear norm of `matrix`, i.e. the sum of the thresholded singular values.
    pub nuclear_norm: f64,
    pub rank: usize,
}

/// Minimizer of `τ‖Y‖* + ½‖Y − X‖²_F` for symmetric `X`.
pub fn svt(x: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    Ok(svt_detailed(x, tau)?.matrix)
}

pub fn svt_detailed(x: &DenseMatrix, tau: f64) -> Result<SvtOutput> {
    check_tau(tau)?;
    if !x.is_square() {
        return invalid(format!("svt needs a square matrix, got {:?}", x.shape()));
    }
    let asym = x.asymmetry();
    if asym > SYMMETRY_TOL {
        return invalid(format!(
            "svt input is not symmetric (max asymmetry {asym:e})"
        ));
    }
    let n = x.rows();
    if x.is_zero() {
        return Ok(SvtOutput {
            matrix: DenseMatrix::zeros(n, n),
            nuclear_norm: 0.0,
            rank: 0,
        });
    }

    let eig = symmetric_eigen(x)?;
    // Thresholding |λ| and restoring the sign is SVT with matched singular vectors.
    let kept: Vec<(usize, f64)> = eig
        .values
        .iter()
        .enumerate()
        .map(|(k, &lam)| (k, shrink(lam, tau)))
        .filter(|&(_, t)| t != 0.0)
        .collect();
    let rank = kept.len();
    let nuclear_norm = kept.iter().map(|(_, t)| t.abs()).sum();
    if rank == 0 {
        return Ok(SvtOutput {
            matrix: DenseMatrix::zeros(n, n),
            nuclear_norm,
            rank,
        });
    }
    let basis = DenseMatrix::from_fn(n, rank, |i, c| eig.vectors[(i, kept[c].0)]);
    let scaled = DenseMatrix::from_fn(n, rank, |i, c| basis[(i, c)] * kept[c].1);
    let mut matrix = scaled.matmul(&basis.transpose())?;
    matrix.symmetrize();
    Ok(SvtOutput {
        matrix,
        nuclear_norm,
        rank,
    })
}

/// Entrywise `sgn(Xᵢⱼ)·max(|Xᵢⱼ| − τ, 0)`.
pub fn soft_threshold(x: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    check_tau(tau)?;
    Ok(x.map(|v| shrink(v, tau)))
}

/// Entrywise `sgn(Xᵢⱼ)·max(|Xᵢⱼ| − τ·Cᵢⱼ, 0)` for strictly positive weights `C`.
pub fn weighted_soft_threshold(c: &DenseMatrix, x: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    check_tau(tau)?;
    c.check_same_shape(x, "weighted soft threshold")?;
    if let Some(w) = c.as_slice().iter().find(|&&w| w <= 0.0) {
        return invalid(format!("weights must be strictly positive, found {w}"));
    }
    Ok(x.zip_map(c, |v, w| shrink(v, tau * w)))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        invalid(format!("threshold must be positive and finite, got {tau}"))
    }
}
