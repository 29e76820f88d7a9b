//! ADMM for `min ‖L‖* + λ‖C∘S‖₁  s.t.  L + S = M`, with the weight matrix `C`
//! refreshed from the sparse iterate every `l` iterations (the weighted model),
//! or held at all-ones (the regular model).
//!
//! One iteration `J`:
//!
//! ```text
//! L_J = SVT_{1/ρ}(M − S_{J−1} + μ_{J−1}/ρ)
//! S_J = STT_{λ/ρ}(C, M − L_J + μ_{J−1}/ρ)
//! μ_J = μ_{J−1} + ρ(M − L_J − S_J)
//! C   = ε/(S_J + ε)²            when J mod l = 0
//! ```
//!
//! terminating once `‖M − L_J − S_J‖_F ≤ δ`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{rng_from_seed, Graph};
use crate::matrix::DenseMatrix;
use crate::metrics::extract_clique;
use crate::projection::TangentSpace;
use crate::prox::{soft_threshold, svt_detailed, weighted_soft_threshold};
use crate::spectral::{spectral_decomposition, spectral_norm, weighted_l1};

/// Empirical range of `α` for which `λ = α/√N` is known to work.
pub const ALPHA_RANGE: (f64, f64) = (0.0021, 0.0914);

/// Entries of `S` outside `[-tol, 1 + tol]` trigger a diagnostic.
pub const S_RANGE_DIAGNOSTIC_TOL: f64 = 1e-6;

/// Relative singular value cutoff used when reading off the rank of `L`.
const KKT_RANK_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[default]
    Weighted,
    Regular,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Weighted => "weighted",
            Model::Regular => "regular",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted" => Ok(Model::Weighted),
            "regular" => Ok(Model::Regular),
            other => invalid(format!("unknown model `{other}` (expected weighted|regular)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum InitMode {
    #[default]
    Zeros,
    /// `S₀ᵢⱼ = 0` with probability `p_zero`, else 1 (mirrored); `L₀ = M − S₀`.
    RandomFeasible { p_zero: f64, seed: u64 },
}

impl InitMode {
    pub fn random_feasible(seed: u64) -> Self {
        InitMode::RandomFeasible { p_zero: 0.75, seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub alpha: f64,
    pub lambda_override: Option<f64>,
    /// Penalty parameter; `None` means `1/mean(M)`.
    pub rho: Option<f64>,
    pub epsilon: f64,
    pub epoch_length: usize,
    pub delta: f64,
    pub max_iterations: usize,
    pub init: InitMode,
    pub model: Model,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.054,
            lambda_override: None,
            rho: None,
            epsilon: 0.05,
            epoch_length: 1,
            delta: 1e-4,
            max_iterations: 5000,
            init: InitMode::Zeros,
            model: Model::Weighted,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        positive("alpha", self.alpha)?;
        if let Some(l) = self.lambda_override {
            positive("lambda", l)?;
        }
        if let Some(r) = self.rho {
            positive("rho", r)?;
        }
        positive("epsilon", self.epsilon)?;
        positive("delta", self.delta)?;
        if self.epoch_length == 0 {
            return invalid("epoch length must be at least 1");
        }
        if self.max_iterations == 0 {
            return invalid("max iterations must be at least 1");
        }
        if let InitMode::RandomFeasible { p_zero, .. } = self.init {
            if !(0.0..=1.0).contains(&p_zero) {
                return invalid(format!("p_zero must lie in [0, 1], got {p_zero}"));
            }
        }
        Ok(())
    }

    pub fn lambda(&self, n_vertices: usize) -> Result<f64> {
        match self.lambda_override {
            Some(l) => Ok(l),
            None => compute_lambda(n_vertices, self.alpha),
        }
    }

    pub fn rho_for(&self, m: &DenseMatrix) -> f64 {
        self.rho.unwrap_or_else(|| 1.0 / m.mean())
    }
}

/// `λ = α/√N`. An `α` outside [`ALPHA_RANGE`] is allowed but logged.
pub fn compute_lambda(n_vertices: usize, alpha: f64) -> Result<f64> {
    if n_vertices < 2 {
        return invalid(format!("lambda needs N >= 2, got {n_vertices}"));
    }
    positive("alpha", alpha)?;
    if alpha <= ALPHA_RANGE.0 || alpha >= ALPHA_RANGE.1 {
        log::warn!(
            "alpha = {alpha} lies outside the empirical range ({}, {})",
            ALPHA_RANGE.0,
            ALPHA_RANGE.1
        );
    }
    Ok(alpha / (n_vertices as f64).sqrt())
}

/// `Cᵢⱼ = ε/(Sᵢⱼ + ε)²`.
pub fn update_weights(s: &DenseMatrix, epsilon: f64) -> Result<DenseMatrix> {
    positive("epsilon", epsilon)?;
    if s.as_slice().iter().any(|&v| v == -epsilon) {
        return Err(Error::Domain(format!(
            "weight update undefined where S = -epsilon ({epsilon})"
        )));
    }
    let c = s.map(|v| epsilon / ((v + epsilon) * (v + epsilon)));
    if c.has_non_finite() {
        return Err(Error::Domain("weight update overflowed".into()));
    }
    Ok(c)
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub l: DenseMatrix,
    pub s: DenseMatrix,
    pub mu: DenseMatrix,
    /// Weights built from `S` at the most recent epoch boundary.
    pub c: DenseMatrix,
    pub iteration: usize,
    pub epoch: usize,
}

impl SolverState {
    pub fn zeros(n: usize, epsilon: f64) -> Self {
        Self {
            l: DenseMatrix::zeros(n, n),
            s: DenseMatrix::zeros(n, n),
            mu: DenseMatrix::zeros(n, n),
            c: DenseMatrix::filled(n, n, 1.0 / epsilon),
            iteration: 0,
            epoch: 0,
        }
    }

    fn initial(m: &DenseMatrix, config: &SolverConfig) -> Result<Self> {
        let n = m.rows();
        let mut state = Self::zeros(n, config.epsilon);
        if let InitMode::RandomFeasible { p_zero, seed } = config.init {
            let mut rng = rng_from_seed(seed);
            let mut s = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = if rng.random::<f64>() < p_zero { 0.0 } else { 1.0 };
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
            state.l = m - &s;
            state.s = s;
        }
        state.c = match config.model {
            Model::Weighted => update_weights(&state.s, config.epsilon)?,
            Model::Regular => DenseMatrix::filled(n, n, 1.0),
        };
        Ok(state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity_l: f64,
    pub stationarity_s: f64,
    pub feasibility: f64,
}

/// Distances of `μ` from `∂‖·‖*(L)` and from `λ∂‖C∘·‖₁(S)`, and `‖M − L − S‖_F`.
///
/// For symmetric `L = VΛVᵀ` the subgradient anchor is the polar factor
/// `V sgn(Λ) Vᵀ`, which is `UUᵀ` when `L` is positive semidefinite.
pub fn kkt_residuals(state: &SolverState, lambda: f64, graph: &Graph) -> Result<KktReport> {
    let m = graph.adjacency_matrix();
    state.l.check_same_shape(&m, "kkt residuals")?;
    let feasibility = (&(&m - &state.l) - &state.s).frobenius_norm();

    let decomp = spectral_decomposition(&state.l, KKT_RANK_TOL)?;
    let stationarity_l = if decomp.rank() == 0 {
        (spectral_norm(&state.mu)? - 1.0).max(0.0)
    } else {
        let r = TangentSpace::new(decomp.u.clone())?;
        let on_r = (&r.project(&state.mu)? - &decomp.polar_factor()).frobenius_norm();
        let off_r = spectral_norm(&r.project_perp(&state.mu)?)?;
        on_r + (off_r - 1.0).max(0.0)
    };

    let stationarity_s = state
        .s
        .as_slice()
        .iter()
        .zip(state.mu.as_slice())
        .zip(state.c.as_slice())
        .map(|((&s, &mu), &c)| {
            let bound = lambda * c;
            let gap = if s != 0.0 {
                (mu - bound * s.signum()).abs()
            } else {
                (mu.abs() - bound).max(0.0)
            };
            gap * gap
        })
        .sum::<f64>()
        .sqrt();

    Ok(KktReport {
        stationarity_l,
        stationarity_s,
        feasibility,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterationLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationLimit => "iteration_limit",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub state: SolverState,
    pub clique: Vec<usize>,
    pub clique_valid: bool,
    pub iterations: usize,
    pub status: SolveStatus,
    /// `‖M − L_J − S_J‖_F` per iteration.
    pub residual_trace: Vec<f64>,
    /// `‖L_J‖* + λ‖C∘S_J‖₁` with the weights used in that iteration's S-step.
    pub objective_trace: Vec<f64>,
    /// `ρ‖S_J − S_{J−1}‖_F` per iteration; diagnostic only.
    pub dual_residual_trace: Vec<f64>,
    pub kkt: KktReport,
    pub lambda: f64,
    pub rho: f64,
    /// Smallest and largest entry of any `S` iterate.
    pub s_range: (f64, f64),
    pub wall_time_s: f64,
}

impl SolveResult {
    pub fn l(&self) -> &DenseMatrix {
        &self.state.l
    }

    pub fn s(&self) -> &DenseMatrix {
        &self.state.s
    }
}

/// `M − A + B/ρ`, shared by both sub-steps.
fn shifted(m: &DenseMatrix, a: &DenseMatrix, mu: &DenseMatrix, inv_rho: f64) -> DenseMatrix {
    let data = m
        .as_slice()
        .iter()
        .zip(a.as_slice())
        .zip(mu.as_slice())
        .map(|((&mv, &av), &uv)| mv - av + uv * inv_rho)
        .collect();
    DenseMatrix::from_raw(m.rows(), m.cols(), data)
}

pub fn solve(graph: &Graph, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    if !graph.has_self_loops() {
        return invalid("solver input must have a unit diagonal");
    }
    let started = Instant::now();
    let m = graph.adjacency_matrix();
    let n = m.rows();
    let lambda = config.lambda(n.max(2))?;
    let rho = config.rho_for(&m);
    let inv_rho = 1.0 / rho;
    let tau_s = lambda * inv_rho;

    let mut state = SolverState::initial(&m, config)?;
    let mut residual_trace = Vec::new();
    let mut objective_trace = Vec::new();
    let mut dual_residual_trace = Vec::new();
    let mut s_range = (state.s.min_value(), state.s.max_value());
    let mut status = SolveStatus::IterationLimit;
    let mut warned_range = false;

    while state.iteration < config.max_iterations {
        let j = state.iteration + 1;
        let numerical = |what: &str| Error::Numerical {
            iteration: j,
            message: format!("non-finite entries in {what}"),
        };

        let x = shifted(&m, &state.s, &state.mu, inv_rho);
        if x.has_non_finite() {
            return Err(numerical("L-step input"));
        }
        let svt_out = svt_detailed(&x, inv_rho).map_err(|e| match e {
            Error::Numerical { message, .. } => Error::Numerical { iteration: j, message },
            other => other,
        })?;
        let l = svt_out.matrix;

        let y = shifted(&m, &l, &state.mu, inv_rho);
        let s = match config.model {
            Model::Weighted => weighted_soft_threshold(&state.c, &y, tau_s)?,
            Model::Regular => soft_threshold(&y, tau_s)?,
        };
        if s.has_non_finite() {
            return Err(numerical("S"));
        }
        let objective = svt_out.nuclear_norm + lambda * weighted_l1(&s, &state.c)?;

        let mut mu = state.mu.clone();
        let mut r2 = 0.0;
        for ((mu_v, (&mv, &lv)), &sv) in mu
            .as_mut_slice()
            .iter_mut()
            .zip(m.as_slice().iter().zip(l.as_slice()))
            .zip(s.as_slice())
        {
            let r = mv - lv - sv;
            r2 += r * r;
            *mu_v += rho * r;
        }
        if mu.has_non_finite() {
            return Err(numerical("multiplier"));
        }
        let residual = r2.sqrt();
        dual_residual_trace.push(rho * (&s - &state.s).frobenius_norm());

        let (lo, hi) = (s.min_value(), s.max_value());
        s_range = (s_range.0.min(lo), s_range.1.max(hi));
        if !warned_range && (lo < -S_RANGE_DIAGNOSTIC_TOL || hi > 1.0 + S_RANGE_DIAGNOSTIC_TOL) {
            log::debug!("iteration {j}: S entries span [{lo:e}, {hi}] outside [0, 1]");
            warned_range = true;
        }

        state.l = l;
        state.s = s;
        state.mu = mu;
        state.iteration = j;
        if config.model == Model::Weighted && j % config.epoch_length == 0 {
            state.c = update_weights(&state.s, config.epsilon)?;
            state.epoch += 1;
        }
        residual_trace.push(residual);
        objective_trace.push(objective);

        if residual <= config.delta {
            status = SolveStatus::Converged;
            break;
        }
    }

    let kkt = kkt_residuals(&state, lambda, graph)?;
    let extracted = extract_clique(&state.l, graph)?;
    Ok(SolveResult {
        clique: extracted.vertices,
        clique_valid: extracted.valid,
        iterations: state.iteration,
        status,
        residual_trace,
        objective_trace,
        dual_residual_trace,
        kkt,
        lambda,
        rho,
        s_range,
        wall_time_s: started.elapsed().as_secs_f64(),
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_planted;
    use crate::metrics::relative_error;

    #[test]
    fn lambda_values() {
        assert!((compute_lambda(200, 0.054).unwrap() - 3.8184e-3).abs() < 1e-7);
        assert!((compute_lambda(100, 0.0914).unwrap() - 9.14e-3).abs() < 1e-15);
        assert!(compute_lambda(1, 0.054).is_err());
        assert!(compute_lambda(10, -1.0).is_err());
        assert!(compute_lambda(10, 0.5).is_ok());
    }

    #[test]
    fn weight_values() {
        let s = DenseMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let c = update_weights(&s, 0.05).unwrap();
        assert!((c[(0, 0)] - 20.0).abs() < 1e-12);
        assert!((c[(0, 1)] - 0.045351).abs() < 1e-6);
        let uniform = update_weights(&DenseMatrix::zeros(3, 3), 0.05).unwrap();
        assert!(uniform.as_slice().iter().all(|&v| (v - 20.0).abs() < 1e-12));
        let bad = DenseMatrix::filled(1, 1, -0.05);
        assert!(matches!(update_weights(&bad, 0.05), Err(Error::Domain(_))));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            epoch_length: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("regular".parse::<Model>().unwrap(), Model::Regular);
        assert!("lasso".parse::<Model>().is_err());
    }

    #[test]
    fn complete_graph_is_its_own_clique() {
        let g = Graph::complete(10).unwrap();
        let res = solve(&g, &SolverConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert!((res.l() - &g.adjacency_matrix()).max_abs() < 1e-3);
        assert!(res.s().max_abs() < 1e-3);
        assert_eq!(res.clique, (0..10).collect::<Vec<_>>());
        assert!(res.clique_valid);
    }

    #[test]
    fn rejects_graph_without_unit_diagonal() {
        let g = Graph::new(4, &[(0, 1)], false).unwrap();
        assert!(matches!(
            solve(&g, &SolverConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_state_feasibility_is_norm_of_m() {
        let inst = generate_planted(30, 8, 0.5, 2).unwrap();
        let st = SolverState::zeros(30, 0.05);
        let k = kkt_residuals(&st, 0.01, &inst.graph).unwrap();
        let m = inst.graph.adjacency_matrix();
        assert!((k.feasibility - m.frobenius_norm()).abs() < 1e-12);
        assert_eq!(k.stationarity_l, 0.0);
        assert_eq!(k.stationarity_s, 0.0);
    }

    #[test]
    fn converged_run_satisfies_stopping_rule() {
        let inst = generate_planted(100, 30, 0.5, 4).unwrap();
        let res = solve(&inst.graph, &SolverConfig::default()).unwrap();
        if res.status == SolveStatus::Converged {
            assert!(*res.residual_trace.last().unwrap() <= 1e-4);
            assert!(res.kkt.feasibility <= 1e-4);
        }
        assert_eq!(res.residual_trace.len(), res.iterations);
        assert_eq!(res.objective_trace.len(), res.iterations);
    }

    #[test]
    fn solve_is_deterministic() {
        let inst = generate_planted(60, 20, 0.5, 8).unwrap();
        let cfg = SolverConfig {
            max_iterations: 40,
            ..Default::default()
        };
        let a = solve(&inst.graph, &cfg).unwrap();
        let b = solve(&inst.graph, &cfg).unwrap();
        assert_eq!(a.state.l, b.state.l);
        assert_eq!(a.residual_trace, b.residual_trace);
    }

    #[test]
    fn regular_model_is_worse_on_planted_instance() {
        let inst = generate_planted(200, 100, 0.5, 1).unwrap();
        let gt = inst.ground_truth();
        let weighted = solve(&inst.graph, &SolverConfig::default()).unwrap();
        let regular = solve(
            &inst.graph,
            &SolverConfig {
                model: Model::Regular,
                ..Default::default()
            },
        )
        .unwrap();
        let ew = relative_error(weighted.l(), &gt.l_star).unwrap();
        let er = relative_error(regular.l(), &gt.l_star).unwrap();
        assert!(er > ew, "regular {er} vs weighted {ew}");
    }
}
