//! Recovery scores: relative error against ground truth, the decomposition's
//! clique-size error, clique extraction, and the incoherence / variance checks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{GroundTruthPair, Graph};
use crate::matrix::DenseMatrix;
use crate::spectral::{spectral_decomposition, spectral_norm};

/// Diagonal entries at or above this value mark clique membership.
pub const MEMBERSHIP_THRESHOLD: f64 = 0.5;

/// Singular values under this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// `‖L − L*‖_F / ‖L*‖_F`.
pub fn relative_error(l: &DenseMatrix, l_star: &DenseMatrix) -> Result<f64> {
    l.check_same_shape(l_star, "relative error")?;
    let denom = l_star.frobenius_norm();
    if denom == 0.0 {
        return invalid("relative error against a zero ground truth");
    }
    Ok((l - l_star).frobenius_norm() / denom)
}

/// `√(Σᵢⱼ Lᵢⱼ)`, the clique size implied by the entry sum of `L`.
pub fn observed_size(l: &DenseMatrix) -> Result<f64> {
    let total = l.sum();
    if total < 0.0 {
        return Err(Error::Numerical {
            iteration: 0,
            message: format!("entry sum of L is negative ({total:e})"),
        });
    }
    Ok(total.sqrt())
}

/// `|√(Σᵢⱼ Lᵢⱼ) − ‖L‖|`; zero for an exact clique indicator.
pub fn clique_size_error(l: &DenseMatrix) -> Result<f64> {
    Ok((observed_size(l)? - spectral_norm(l)?).abs())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedClique {
    pub vertices: Vec<usize>,
    /// Every pair of extracted vertices is adjacent.
    pub valid: bool,
}

/// Vertices whose diagonal entry in `L` is at least 0.5.
pub fn extract_clique(l: &DenseMatrix, graph: &Graph) -> Result<ExtractedClique> {
    if l.shape() != (graph.n_vertices(), graph.n_vertices()) {
        return invalid(format!(
            "L has shape {:?} but the graph has {} vertices",
            l.shape(),
            graph.n_vertices()
        ));
    }
    let vertices: Vec<usize> = l
        .diag()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= MEMBERSHIP_THRESHOLD)
        .map(|(i, _)| i)
        .collect();
    let valid = graph.is_clique(&vertices);
    Ok(ExtractedClique { vertices, valid })
}

/// Greedy repair of a vertex set into a clique: repeatedly drop the vertex
/// with the most non-neighbours in the set (ties to the highest index).
pub fn prune_to_clique(vertices: &[usize], graph: &Graph) -> Vec<usize> {
    let mut set = vertices.to_vec();
    loop {
        let misses: Vec<usize> = set
            .iter()
            .map(|&i| set.iter().filter(|&&j| j != i && !graph.has_edge(i, j)).count())
            .collect();
        let worst = misses
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
            .filter(|(_, &m)| m > 0)
            .map(|(k, _)| k);
        match worst {
            Some(k) => {
                set.remove(k);
            }
            None => return set,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceReport {
    pub mu0_bound_ok: bool,
    pub joint_bound_ok: bool,
    /// `max_i ‖Uᵀeᵢ‖²`, equal to `1/n` for a clique indicator.
    pub max_leverage: f64,
    /// `‖UUᵀ‖_∞`, equal to `1/n` for a clique indicator.
    pub uut_max: f64,
    /// `μ₀·r/N`.
    pub bound: f64,
}

/// Relative slack on the `≤` comparisons so the equality case survives rounding.
const INCOHERENCE_SLACK: f64 = 1e-12;

/// Checks `max_i ‖Uᵀeᵢ‖² ≤ μ₀r/N` and `‖UUᵀ‖_∞ ≤ μ₀r/N` for the
/// singular vectors of `L*`.
pub fn incoherence_check(truth: &GroundTruthPair, mu0: f64) -> Result<IncoherenceReport> {
    let n = truth.n_vertices();
    let decomp = spectral_decomposition(&truth.l_star, RANK_TOL)?;
    let r = decomp.rank();
    if r != 1 {
        return invalid(format!("incoherence check expects a rank-one L*, got rank {r}"));
    }
    if !(mu0 >= 1.0 && mu0 <= n as f64 / r as f64) {
        return invalid(format!("mu0 must lie in [1, N/r] = [1, {}], got {mu0}", n / r));
    }
    let u = &decomp.u;
    let max_leverage = (0..n)
        .map(|i| (0..r).map(|k| u[(i, k)] * u[(i, k)]).sum::<f64>())
        .fold(0.0, f64::max);
    let uut_max = u.matmul(&u.transpose())?.max_abs();
    let bound = mu0 * r as f64 / n as f64;
    let limit = bound * (1.0 + INCOHERENCE_SLACK);
    Ok(IncoherenceReport {
        mu0_bound_ok: max_leverage <= limit,
        joint_bound_ok: uut_max <= limit,
        max_leverage,
        uut_max,
        bound,
    })
}

/// Largest gap between the population variances of any two columns.
pub fn variance_spread(s: &DenseMatrix) -> f64 {
    let rows = s.rows() as f64;
    if s.rows() == 0 || s.cols() == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..s.cols() {
        let col = s.column(j);
        let mean = col.iter().sum::<f64>() / rows;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / rows;
        lo = lo.min(var);
        hi = hi.max(var);
    }
    hi - lo
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// Absent when no ground truth is known.
    pub err_l: Option<f64>,
    pub clique_size_error: f64,
    pub observed_size: f64,
    pub spectral_norm: f64,
    pub clique: Vec<usize>,
    pub clique_valid: bool,
    /// Evaluated at the loosest admissible `μ₀ = N/r`.
    pub incoherence: Option<IncoherenceReport>,
    /// Smallest `μ₀` for which the ground truth passes both incoherence bounds.
    pub min_mu0: Option<f64>,
    pub variance_spread: f64,
}

pub fn recovery_report(
    l: &DenseMatrix,
    s: &DenseMatrix,
    graph: &Graph,
    truth: Option<&GroundTruthPair>,
) -> Result<RecoveryReport> {
    let extracted = extract_clique(l, graph)?;
    let observed = observed_size(l)?;
    let spec = spectral_norm(l)?;
    let (err_l, incoherence, min_mu0) = match truth {
        Some(t) => {
            let inc = incoherence_check(t, t.n_vertices() as f64)?;
            let min_mu0 = inc.uut_max.max(inc.max_leverage) * t.n_vertices() as f64;
            (Some(relative_error(l, &t.l_star)?), Some(inc), Some(min_mu0))
        }
        None => (None, None, None),
    };
    Ok(RecoveryReport {
        err_l,
        clique_size_error: (observed - spec).abs(),
        observed_size: observed,
        spectral_norm: spec,
        clique: extracted.vertices,
        clique_valid: extracted.valid,
        incoherence,
        min_mu0,
        variance_spread: variance_spread(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_bernoulli_symmetric, generate_planted};

    fn indicator(n_total: usize, members: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(n_total, n_total, |i, j| {
            if members.contains(&i) && members.contains(&j) {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn relative_error_cases() {
        let l_star = indicator(200, &(0..50).collect::<Vec<_>>());
        assert_eq!(relative_error(&l_star, &l_star).unwrap(), 0.0);
        assert_eq!(relative_error(&DenseMatrix::zeros(200, 200), &l_star).unwrap(), 1.0);
        let perturbed = l_star.map(|v| v + 0.01);
        let e = relative_error(&perturbed, &l_star).unwrap();
        assert!((e - 0.01 * 200.0 / 50.0).abs() < 1e-12);
        assert!(relative_error(&l_star, &DenseMatrix::zeros(200, 200)).is_err());
    }

    #[test]
    fn clique_size_error_cases() {
        let l = indicator(30, &[3, 4, 9, 12]);
        assert!(clique_size_error(&l).unwrap() < 1e-12);
        assert_eq!(clique_size_error(&DenseMatrix::zeros(5, 5)).unwrap(), 0.0);
        assert!(clique_size_error(&DenseMatrix::filled(2, 2, -1.0)).is_err());
    }

    #[test]
    fn clique_size_error_is_permutation_invariant() {
        let g = generate_bernoulli_symmetric(12, 0.6, 3).unwrap();
        let l = g.adjacency_matrix();
        let perm = [5, 2, 11, 0, 7, 1, 9, 3, 10, 4, 8, 6];
        let lp = DenseMatrix::from_fn(12, 12, |i, j| l[(perm[i], perm[j])]);
        let (a, b) = (clique_size_error(&l).unwrap(), clique_size_error(&lp).unwrap());
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn extraction() {
        let inst = generate_planted(200, 50, 0.5, 3).unwrap();
        let gt = inst.ground_truth();
        let got = extract_clique(&gt.l_star, &inst.graph).unwrap();
        assert_eq!(got.vertices, gt.clique);
        assert!(got.valid);
        let empty = extract_clique(&DenseMatrix::zeros(200, 200), &inst.graph).unwrap();
        assert!(empty.vertices.is_empty() && empty.valid);
    }

    #[test]
    fn pruning_yields_a_clique() {
        let g = generate_bernoulli_symmetric(40, 0.5, 1).unwrap();
        let all: Vec<usize> = (0..40).collect();
        let c = prune_to_clique(&all, &g);
        assert!(g.is_clique(&c) && !c.is_empty());
    }

    #[test]
    fn incoherence_cases() {
        let inst = generate_planted(200, 50, 0.5, 1).unwrap();
        let gt = inst.ground_truth();
        let loose = incoherence_check(&gt, 200.0).unwrap();
        assert!(loose.mu0_bound_ok && loose.joint_bound_ok);
        assert!((loose.uut_max - 1.0 / 50.0).abs() < 1e-12);
        let tight = incoherence_check(&gt, 1.0).unwrap();
        assert!(!tight.mu0_bound_ok && !tight.joint_bound_ok);
        assert!(incoherence_check(&gt, 0.5).is_err());

        let full = generate_planted(40, 40, 0.5, 1).unwrap().ground_truth();
        let eq = incoherence_check(&full, 1.0).unwrap();
        assert!(eq.mu0_bound_ok && eq.joint_bound_ok);
    }

    #[test]
    fn variance_spread_cases() {
        assert_eq!(variance_spread(&DenseMatrix::filled(6, 4, 0.3)), 0.0);
        let s = DenseMatrix::from_fn(5, 2, |_, j| if j == 0 { 1.0 } else { 0.0 });
        assert_eq!(variance_spread(&s), 0.0);
        for seed in 0..10 {
            let g = generate_bernoulli_symmetric(500, 0.5, 100 + seed).unwrap();
            assert!(variance_spread(&g.adjacency_matrix()) < 0.05);
        }
    }

    #[test]
    fn report_without_truth_has_no_error() {
        let g = generate_bernoulli_symmetric(20, 0.5, 2).unwrap();
        let r = recovery_report(&DenseMatrix::zeros(20, 20), &g.adjacency_matrix(), &g, None).unwrap();
        assert!(r.err_l.is_none() && r.incoherence.is_none());
    }
}
