//! Batch experiments: planted-clique sweeps, random-graph batches, DIMACS
//! benchmark runs and certificate studies.
//!
//! Every job is a pure function of `(spec, trial seed)` with trial seed
//! `spec.seed + trial`. Jobs run on a rayon pool of `spec.workers` threads and
//! rows are sorted before they are returned, so emitted tables do not depend
//! on scheduling. Wall-clock columns are only filled when `include_timings`
//! is set, since they are the one non-reproducible quantity.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{solve, update_weights, InitMode, Model, SolveResult, SolveStatus, SolverConfig};
use crate::certificate::{certify, CertificateConfig};
use crate::error::{invalid, Error, Result};
use crate::graph::{generate_bernoulli_symmetric, generate_planted, parse_dimacs, Graph, GroundTruthPair};
use crate::metrics::{clique_size_error, observed_size, prune_to_clique, relative_error, RecoveryReport, recovery_report};
use crate::spectral::spectral_norm;

/// Rows with `err_l` below this count as exact recoveries.
pub const RECOVERY_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    PlantedSweep,
    RandomBatch,
    Dimacs,
    Certify,
    Single,
}

/// Optional solver settings layered over [`SolverConfig::default`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOverrides {
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub max_iterations: Option<usize>,
    pub epoch_length: Option<usize>,
    pub model: Option<Model>,
}

impl SolverOverrides {
    pub fn apply(&self, mut cfg: SolverConfig) -> SolverConfig {
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if self.lambda.is_some() {
            cfg.lambda_override = self.lambda;
        }
        if self.rho.is_some() {
            cfg.rho = self.rho;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.max_iterations = v;
        }
        if let Some(v) = self.epoch_length {
            cfg.epoch_length = v;
        }
        if let Some(v) = self.model {
            cfg.model = v;
        }
        cfg
    }

    /// Fields set in `other` replace ours.
    pub fn merge(&mut self, other: &SolverOverrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(alpha, lambda, rho, epsilon, delta, max_iterations, epoch_length, model);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n_vertices: Vec<usize>,
    pub clique_sizes: Vec<usize>,
    /// Used when `clique_sizes` is empty: `n = s, 2s, …` below `N`.
    pub clique_stride: Option<usize>,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverOverrides,
    /// Also solve every planted instance with the regular model.
    pub compare_regular: bool,
    /// Start planted solves from the random feasible point seeded by the trial seed.
    pub random_init: bool,
    pub files: Vec<PathBuf>,
    pub certificate: CertificateConfig,
    pub workers: usize,
    pub include_timings: bool,
    pub include_traces: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::PlantedSweep,
            n_vertices: Vec::new(),
            clique_sizes: Vec::new(),
            clique_stride: None,
            p: 0.5,
            trials: 1,
            seed: 0,
            solver: SolverOverrides::default(),
            compare_regular: false,
            random_init: false,
            files: Vec::new(),
            certificate: CertificateConfig::default(),
            workers: 1,
            include_timings: false,
            include_traces: false,
            output: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.apply(SolverConfig::default())
    }

    /// `(N, n)` cells in ascending order.
    pub fn cells(&self) -> Result<Vec<(usize, usize)>> {
        if self.n_vertices.is_empty() {
            return invalid("the N grid is empty");
        }
        let mut cells = Vec::new();
        for &big_n in &self.n_vertices {
            let sizes: Vec<usize> = if !self.clique_sizes.is_empty() {
                self.clique_sizes.clone()
            } else if let Some(s) = self.clique_stride.filter(|&s| s > 0) {
                (1..).map(|k| k * s).take_while(|&n| n < big_n).collect()
            } else {
                return invalid("the clique-size grid is empty");
            };
            if sizes.is_empty() {
                return invalid(format!("no clique sizes below N={big_n}"));
            }
            for n in sizes {
                if n == 0 || n > big_n {
                    return invalid(format!("clique size {n} outside 1..={big_n}"));
                }
                cells.push((big_n, n));
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(cells)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return invalid(format!("p must lie in (0, 1), got {}", self.p));
        }
        self.solver_config().validate()?;
        match self.kind {
            ExperimentKind::PlantedSweep | ExperimentKind::Certify => {
                self.cells()?;
            }
            ExperimentKind::RandomBatch => {
                if self.n_vertices.is_empty() || self.n_vertices.contains(&0) {
                    return invalid("the N grid is empty or contains 0");
                }
            }
            ExperimentKind::Dimacs => {
                if self.files.is_empty() {
                    return invalid("no DIMACS files given");
                }
            }
            ExperimentKind::Single => {}
        }
        if let Some(out) = &self.output {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                if !dir.is_dir() {
                    return invalid(format!("output directory {} does not exist", dir.display()));
                }
            }
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Converged,
    IterationLimit,
    Failed,
}

impl From<SolveStatus> for RowStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Converged => RowStatus::Converged,
            SolveStatus::IterationLimit => RowStatus::IterationLimit,
        }
    }
}

/// One solve in a planted sweep or random batch. `n` and `err_l` are empty
/// for random graphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(rename = "N")]
    pub n_vertices: usize,
    pub n: Option<usize>,
    pub p: f64,
    pub model: Model,
    pub trial: usize,
    pub seed: u64,
    pub err_l: Option<f64>,
    pub clique_size_error: Option<f64>,
    pub observed_size: Option<f64>,
    pub spectral_norm: Option<f64>,
    pub extracted_size: Option<usize>,
    pub clique_valid: Option<bool>,
    pub recovered: bool,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub status: RowStatus,
    pub error: Option<String>,
}

impl ResultRow {
    fn key(&self) -> (usize, usize, usize, Model) {
        (self.n_vertices, self.n.unwrap_or(0), self.trial, self.model)
    }
}

/// Per-iteration traces of one solve, emitted in JSON on request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    #[serde(rename = "N")]
    pub n_vertices: usize,
    pub n: Option<usize>,
    pub model: Model,
    pub trial: usize,
    pub residual: Vec<f64>,
    pub objective: Vec<f64>,
    pub dual_residual: Vec<f64>,
}

/// Per-cell means over trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    #[serde(rename = "N")]
    pub n_vertices: usize,
    pub n: Option<usize>,
    pub p: f64,
    pub model: Model,
    pub trials: usize,
    pub failures: usize,
    pub mean_err_l: Option<f64>,
    pub recovery_probability: f64,
    pub mean_clique_size_error: Option<f64>,
    pub mean_iterations: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub traces: Vec<TraceRecord>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut cells: BTreeMap<(usize, usize, Model), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        cells
            .entry((r.n_vertices, r.n.unwrap_or(0), r.model))
            .or_default()
            .push(r);
    }
    cells
        .into_values()
        .map(|group| {
            let first = group[0];
            let ok: Vec<&&ResultRow> = group.iter().filter(|r| r.status != RowStatus::Failed).collect();
            AggregateRow {
                n_vertices: first.n_vertices,
                n: first.n,
                p: first.p,
                model: first.model,
                trials: group.len(),
                failures: group.len() - ok.len(),
                mean_err_l: mean(group.iter().filter_map(|r| r.err_l)),
                recovery_probability: group.iter().filter(|r| r.recovered).count() as f64
                    / group.len() as f64,
                mean_clique_size_error: mean(group.iter().filter_map(|r| r.clique_size_error)),
                mean_iterations: mean(ok.iter().map(|r| r.iterations as f64)).unwrap_or(0.0),
            }
        })
        .collect()
}

struct Job {
    n_vertices: usize,
    n: Option<usize>,
    trial: usize,
    seed: u64,
    model: Model,
}

fn score(
    job: &Job,
    p: f64,
    graph: &Graph,
    truth: Option<&GroundTruthPair>,
    res: &SolveResult,
    timings: bool,
) -> Result<ResultRow> {
    let err_l = truth.map(|t| relative_error(res.l(), &t.l_star)).transpose()?;
    let observed = observed_size(res.l())?;
    let spec = spectral_norm(res.l())?;
    let status = RowStatus::from(res.status);
    Ok(ResultRow {
        n_vertices: job.n_vertices,
        n: job.n,
        p,
        model: job.model,
        trial: job.trial,
        seed: job.seed,
        err_l,
        clique_size_error: Some((observed - spec).abs()),
        observed_size: Some(observed),
        spectral_norm: Some(spec),
        extracted_size: Some(res.clique.len()),
        clique_valid: Some(graph.is_clique(&res.clique)),
        recovered: status == RowStatus::Converged && err_l.is_some_and(|e| e < RECOVERY_THRESHOLD),
        iterations: res.iterations,
        final_residual: res.residual_trace.last().copied(),
        wall_time_s: timings.then_some(res.wall_time_s),
        status,
        error: None,
    })
}

fn failed_row(job: &Job, p: f64, err: &Error) -> ResultRow {
    ResultRow {
        n_vertices: job.n_vertices,
        n: job.n,
        p,
        model: job.model,
        trial: job.trial,
        seed: job.seed,
        err_l: None,
        clique_size_error: None,
        observed_size: None,
        spectral_norm: None,
        extracted_size: None,
        clique_valid: None,
        recovered: false,
        iterations: 0,
        final_residual: None,
        wall_time_s: None,
        status: RowStatus::Failed,
        error: Some(err.to_string()),
    }
}

fn run_jobs(spec: &ExperimentSpec, jobs: Vec<Job>) -> Result<SweepOutput> {
    let base = spec.solver_config();
    let run = |job: &Job| -> (ResultRow, Option<TraceRecord>) {
        let outcome = (|| -> Result<(ResultRow, TraceRecord)> {
            let (graph, truth) = match job.n {
                Some(n) => {
                    let inst = generate_planted(job.n_vertices, n, spec.p, job.seed)?;
                    let truth = inst.ground_truth();
                    (inst.graph, Some(truth))
                }
                None => (generate_bernoulli_symmetric(job.n_vertices, spec.p, job.seed)?, None),
            };
            let mut cfg = base.clone();
            cfg.model = job.model;
            if spec.random_init {
                cfg.init = InitMode::random_feasible(job.seed);
            }
            let res = solve(&graph, &cfg)?;
            let row = score(job, spec.p, &graph, truth.as_ref(), &res, spec.include_timings)?;
            let trace = TraceRecord {
                n_vertices: job.n_vertices,
                n: job.n,
                model: job.model,
                trial: job.trial,
                residual: res.residual_trace,
                objective: res.objective_trace,
                dual_residual: res.dual_residual_trace,
            };
            Ok((row, trace))
        })();
        match outcome {
            Ok((row, trace)) => (row, spec.include_traces.then_some(trace)),
            Err(e) => {
                log::warn!("N={} n={:?} trial={} failed: {e}", job.n_vertices, job.n, job.trial);
                (failed_row(job, spec.p, &e), None)
            }
        }
    };
    let results: Vec<(ResultRow, Option<TraceRecord>)> =
        spec.pool()?.install(|| jobs.par_iter().map(run).collect());
    let (mut rows, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    rows.sort_by_key(ResultRow::key);
    let mut traces: Vec<TraceRecord> = traces.into_iter().flatten().collect();
    traces.sort_by_key(|t| (t.n_vertices, t.n.unwrap_or(0), t.trial, t.model));
    let aggregates = aggregate(&rows);
    Ok(SweepOutput {
        rows,
        aggregates,
        traces,
    })
}

/// Solves `trials` planted instances per `(N, n)` cell.
pub fn run_planted_sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let primary = spec.solver_config().model;
    let mut models = vec![primary];
    if spec.compare_regular && primary != Model::Regular {
        models.push(Model::Regular);
    }
    let mut jobs = Vec::new();
    for (big_n, n) in spec.cells()? {
        for trial in 0..spec.trials {
            for &model in &models {
                jobs.push(Job {
                    n_vertices: big_n,
                    n: Some(n),
                    trial,
                    seed: spec.trial_seed(trial),
                    model,
                });
            }
        }
    }
    run_jobs(spec, jobs)
}

/// Solves `trials` Bernoulli graphs per `N`, with no planted clique.
pub fn run_random_batch(spec: &ExperimentSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let model = spec.solver_config().model;
    let mut sizes = spec.n_vertices.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let jobs = sizes
        .iter()
        .flat_map(|&big_n| {
            (0..spec.trials).map(move |trial| Job {
                n_vertices: big_n,
                n: None,
                trial,
                seed: spec.trial_seed(trial),
                model,
            })
        })
        .collect();
    run_jobs(spec, jobs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimacsRow {
    pub file: String,
    #[serde(rename = "N")]
    pub n_vertices: Option<usize>,
    pub edges: Option<usize>,
    pub rho: Option<f64>,
    /// `round(√ΣL)`, the size read off the decomposition.
    pub decomposition_size: Option<usize>,
    pub observed_size: Option<f64>,
    pub spectral_norm: Option<f64>,
    pub clique_size_error: Option<f64>,
    pub extracted_size: Option<usize>,
    pub clique_valid: Option<bool>,
    /// Size of the extracted set after pruning it to a complete subgraph.
    pub verified_size: Option<usize>,
    pub iterations: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub status: RowStatus,
    pub error: Option<String>,
}

fn dimacs_row(path: &Path, cfg: &SolverConfig, timings: bool) -> Result<DimacsRow> {
    let file = fs::File::open(path)?;
    let graph = parse_dimacs(std::io::BufReader::new(file))?;
    let res = solve(&graph, cfg)?;
    let observed = observed_size(res.l())?;
    let verified = prune_to_clique(&res.clique, &graph);
    Ok(DimacsRow {
        file: path.display().to_string(),
        n_vertices: Some(graph.n_vertices()),
        edges: Some(graph.edge_count()),
        rho: Some(res.rho),
        decomposition_size: Some(observed.round() as usize),
        observed_size: Some(observed),
        spectral_norm: Some(spectral_norm(res.l())?),
        clique_size_error: Some(clique_size_error(res.l())?),
        extracted_size: Some(res.clique.len()),
        clique_valid: Some(res.clique_valid),
        verified_size: Some(verified.len()),
        iterations: Some(res.iterations),
        wall_time_s: timings.then_some(res.wall_time_s),
        status: res.status.into(),
        error: None,
    })
}

/// Solves each listed DIMACS file; parse or solver failures become failed rows.
pub fn run_dimacs(spec: &ExperimentSpec) -> Result<Vec<DimacsRow>> {
    if spec.files.is_empty() {
        return invalid("no DIMACS files given");
    }
    let cfg = spec.solver_config();
    cfg.validate()?;
    let mut rows: Vec<DimacsRow> = spec.pool()?.install(|| {
        spec.files
            .par_iter()
            .map(|path| {
                dimacs_row(path, &cfg, spec.include_timings).unwrap_or_else(|e| {
                    log::warn!("{}: {e}", path.display());
                    DimacsRow {
                        file: path.display().to_string(),
                        n_vertices: None,
                        edges: None,
                        rho: cfg.rho,
                        decomposition_size: None,
                        observed_size: None,
                        spectral_norm: None,
                        clique_size_error: None,
                        extracted_size: None,
                        clique_valid: None,
                        verified_size: None,
                        iterations: None,
                        wall_time_s: None,
                        status: RowStatus::Failed,
                        error: Some(e.to_string()),
                    }
                })
            })
            .collect()
    });
    rows.sort_by(|a, b| a.file.cmp(&b.file));
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyRow {
    #[serde(rename = "N")]
    pub n_vertices: usize,
    pub n: usize,
    pub p: f64,
    pub trial: usize,
    pub seed: u64,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub q: Option<f64>,
    pub omega_density: Option<f64>,
    pub dual_spectral: Option<f64>,
    pub dual_spectral_ok: Option<bool>,
    pub omega_frobenius: Option<f64>,
    pub omega_frobenius_ok: Option<bool>,
    pub omega_perp_linf: Option<f64>,
    pub omega_perp_linf_ok: Option<bool>,
    pub w_l_spectral: Option<f64>,
    pub w_l_spectral_ok: Option<bool>,
    pub w_l_omega_perp_linf: Option<f64>,
    pub w_l_omega_perp_linf_ok: Option<bool>,
    pub w_s_spectral: Option<f64>,
    pub w_s_spectral_ok: Option<bool>,
    pub w_s_omega_perp_linf: Option<f64>,
    pub w_s_omega_perp_linf_ok: Option<bool>,
    pub pq_norm: Option<f64>,
    pub pq_norm_ok: Option<bool>,
    pub overall_pass: bool,
    pub golfing_monotone: Option<bool>,
    pub golfing_final_residual: Option<f64>,
    pub w_l_tangent_leak: Option<f64>,
    pub w_s_tangent_leak: Option<f64>,
    pub neumann_tail_ratio: Option<f64>,
    pub sign_norm_ratio: Option<f64>,
    pub f_linf: Option<f64>,
    pub b_omega_frobenius: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyAggregate {
    #[serde(rename = "N")]
    pub n_vertices: usize,
    pub n: usize,
    pub trials: usize,
    pub failures: usize,
    pub pass_rate: f64,
    pub monotone_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertifyOutput {
    pub rows: Vec<CertifyRow>,
    pub aggregates: Vec<CertifyAggregate>,
}

fn certify_row(spec: &ExperimentSpec, big_n: usize, n: usize, trial: usize) -> CertifyRow {
    let seed = spec.trial_seed(trial);
    let solver = spec.solver_config();
    let mut row = CertifyRow {
        n_vertices: big_n,
        n,
        p: spec.p,
        trial,
        seed,
        alpha: solver.alpha,
        lambda: None,
        k: None,
        q: None,
        omega_density: None,
        dual_spectral: None,
        dual_spectral_ok: None,
        omega_frobenius: None,
        omega_frobenius_ok: None,
        omega_perp_linf: None,
        omega_perp_linf_ok: None,
        w_l_spectral: None,
        w_l_spectral_ok: None,
        w_l_omega_perp_linf: None,
        w_l_omega_perp_linf_ok: None,
        w_s_spectral: None,
        w_s_spectral_ok: None,
        w_s_omega_perp_linf: None,
        w_s_omega_perp_linf_ok: None,
        pq_norm: None,
        pq_norm_ok: None,
        overall_pass: false,
        golfing_monotone: None,
        golfing_final_residual: None,
        w_l_tangent_leak: None,
        w_s_tangent_leak: None,
        neumann_tail_ratio: None,
        sign_norm_ratio: None,
        f_linf: None,
        b_omega_frobenius: None,
        error: None,
    };
    let report = (|| {
        let truth = generate_planted(big_n, n, spec.p, seed)?.ground_truth();
        let c = update_weights(&truth.s_star, solver.epsilon)?;
        let cfg = CertificateConfig {
            seed,
            ..spec.certificate.clone()
        };
        certify(&truth, &c, solver.alpha, &cfg)
    })();
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let get = |name: &str| report.check(name).map(|c| (c.value, c.passed));
    let fill = |slot: (&mut Option<f64>, &mut Option<bool>), name: &str| {
        if let Some((v, ok)) = get(name) {
            *slot.0 = Some(v);
            *slot.1 = Some(ok);
        }
    };
    fill((&mut row.dual_spectral, &mut row.dual_spectral_ok), "dual_spectral");
    fill((&mut row.omega_frobenius, &mut row.omega_frobenius_ok), "omega_frobenius");
    fill((&mut row.omega_perp_linf, &mut row.omega_perp_linf_ok), "omega_perp_linf");
    fill((&mut row.w_l_spectral, &mut row.w_l_spectral_ok), "w_l_spectral");
    fill(
        (&mut row.w_l_omega_perp_linf, &mut row.w_l_omega_perp_linf_ok),
        "w_l_omega_perp_linf",
    );
    fill((&mut row.w_s_spectral, &mut row.w_s_spectral_ok), "w_s_spectral");
    fill(
        (&mut row.w_s_omega_perp_linf, &mut row.w_s_omega_perp_linf_ok),
        "w_s_omega_perp_linf",
    );
    fill((&mut row.pq_norm, &mut row.pq_norm_ok), "pq_norm");
    row.lambda = Some(report.lambda);
    row.k = Some(report.config.k);
    row.q = Some(report.config.q);
    row.omega_density = Some(report.config.p);
    row.overall_pass = report.overall_pass;
    row.golfing_monotone = Some(report.golfing_monotone);
    row.golfing_final_residual = report.golfing_trace.last().copied();
    row.w_l_tangent_leak = Some(report.w_l_tangent_leak);
    row.w_s_tangent_leak = Some(report.w_s_tangent_leak);
    row.neumann_tail_ratio = Some(report.neumann_tail_ratio);
    row.sign_norm_ratio = Some(report.sign_norm_ratio);
    row.f_linf = Some(report.f_linf);
    row.b_omega_frobenius = Some(report.b_omega_frobenius);
    row
}

/// Builds and checks a dual certificate for each planted `(N, n, trial)`.
pub fn run_certify(spec: &ExperimentSpec) -> Result<CertifyOutput> {
    spec.validate()?;
    let jobs: Vec<(usize, usize, usize)> = spec
        .cells()?
        .into_iter()
        .flat_map(|(big_n, n)| (0..spec.trials).map(move |t| (big_n, n, t)))
        .collect();
    let mut rows: Vec<CertifyRow> = spec.pool()?.install(|| {
        jobs.par_iter()
            .map(|&(big_n, n, t)| certify_row(spec, big_n, n, t))
            .collect()
    });
    rows.sort_by_key(|r| (r.n_vertices, r.n, r.trial));

    let mut cells: BTreeMap<(usize, usize), Vec<&CertifyRow>> = BTreeMap::new();
    for r in &rows {
        cells.entry((r.n_vertices, r.n)).or_default().push(r);
    }
    let aggregates = cells
        .into_iter()
        .map(|((big_n, n), group)| {
            let trials = group.len() as f64;
            CertifyAggregate {
                n_vertices: big_n,
                n,
                trials: group.len(),
                failures: group.iter().filter(|r| r.error.is_some()).count(),
                pass_rate: group.iter().filter(|r| r.overall_pass).count() as f64 / trials,
                monotone_rate: group.iter().filter(|r| r.golfing_monotone == Some(true)).count()
                    as f64
                    / trials,
            }
        })
        .collect();
    Ok(CertifyOutput { rows, aggregates })
}

/// Full result of one solve, for the `solve` command.
#[derive(Clone, Debug, Serialize)]
pub struct SingleReport {
    #[serde(rename = "N")]
    pub n_vertices: usize,
    pub edges: usize,
    pub lambda: f64,
    pub rho: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub kkt: crate::admm::KktReport,
    pub s_range: (f64, f64),
    pub recovery: RecoveryReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_trace: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_trace: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_residual_trace: Option<Vec<f64>>,
}

pub fn run_single(
    graph: &Graph,
    truth: Option<&GroundTruthPair>,
    cfg: &SolverConfig,
    include_traces: bool,
    include_timings: bool,
) -> Result<SingleReport> {
    let res = solve(graph, cfg)?;
    let recovery = recovery_report(res.l(), res.s(), graph, truth)?;
    Ok(SingleReport {
        n_vertices: graph.n_vertices(),
        edges: graph.edge_count(),
        lambda: res.lambda,
        rho: res.rho,
        status: res.status,
        iterations: res.iterations,
        final_residual: res.residual_trace.last().copied(),
        kkt: res.kkt,
        s_range: res.s_range,
        recovery,
        wall_time_s: include_timings.then_some(res.wall_time_s),
        residual_trace: include_traces.then(|| res.residual_trace.clone()),
        objective_trace: include_traces.then(|| res.objective_trace.clone()),
        dual_residual_trace: include_traces.then(|| res.dual_residual_trace.clone()),
    })
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}
