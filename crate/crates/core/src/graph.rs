//! Undirected graphs stored as dense 0/1 adjacency, random instance
//! generators, and DIMACS / JSON I/O.
//!
//! All randomness comes from [`Xoshiro256PlusPlus`] seeded with
//! `seed_from_u64(seed)`. Edges are drawn over the strict upper triangle in
//! row-major order (`(0,1), (0,2), …, (1,2), …`), one `f64` draw per pair, an
//! edge present when the draw is `< p`. The planted generator consumes the same
//! stream and then overwrites the clique block, so for a fixed seed the planted
//! instance is the Bernoulli graph with a clique inserted.

use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::DenseMatrix;

pub type GraphRng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> GraphRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<bool>,
    has_self_loops: bool,
}

/// JSON form: `{"n": N, "edges": [[i, j], …]}` with 0-based indices, `i < j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl Graph {
    /// Graph on `n` vertices with the given undirected edges. Self-loop pairs
    /// are accepted; with `unit_diagonal` every diagonal entry is set to 1.
    pub fn new(n: usize, edges: &[(usize, usize)], unit_diagonal: bool) -> Result<Self> {
        if n == 0 {
            return invalid("graph needs at least one vertex");
        }
        let mut g = Self {
            n,
            adjacency: vec![false; n * n],
            has_self_loops: false,
        };
        for &(i, j) in edges {
            if i >= n || j >= n {
                return invalid(format!("edge ({i}, {j}) out of range for {n} vertices"));
            }
            g.set_edge(i, j);
        }
        if unit_diagonal {
            g.set_unit_diagonal();
        }
        Ok(g)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, edges, true)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::new(n, &[], true)?;
        g.adjacency.iter_mut().for_each(|a| *a = true);
        Ok(g)
    }

    fn set_edge(&mut self, i: usize, j: usize) {
        self.adjacency[i * self.n + j] = true;
        self.adjacency[j * self.n + i] = true;
    }

    fn set_unit_diagonal(&mut self) {
        for i in 0..self.n {
            self.adjacency[i * self.n + i] = true;
        }
        self.has_self_loops = true;
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn has_self_loops(&self) -> bool {
        self.has_self_loops
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// Undirected edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.has_edge(i, j))
    }

    /// Number of undirected edges, diagonal excluded.
    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Edge count over the number of vertex pairs.
    pub fn density(&self) -> f64 {
        let pairs = self.n * (self.n - 1) / 2;
        if pairs == 0 {
            0.0
        } else {
            self.edge_count() as f64 / pairs as f64
        }
    }

    /// The matrix `M`: adjacency as 0.0/1.0 entries.
    pub fn adjacency_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| {
            if self.has_edge(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Whether every pair of distinct listed vertices is adjacent.
    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(a, &i)| {
            vertices[a + 1..]
                .iter()
                .all(|&j| i == j || self.has_edge(i, j))
        })
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            n: self.n,
            edges: self.edges().map(|(i, j)| [i, j]).collect(),
        }
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self> {
        let edges: Vec<(usize, usize)> = doc.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::from_edges(doc.n, &edges)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p edge {} {}\n", self.n, self.edge_count());
        for (i, j) in self.edges() {
            out.push_str(&format!("e {} {}\n", i + 1, j + 1));
        }
        out
    }
}

/// Planted-clique instance. `clique_vertices` is sorted.
#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub graph: Graph,
    pub clique_vertices: Vec<usize>,
    pub edge_probability: f64,
    pub seed: u64,
}

impl PlantedInstance {
    pub fn ground_truth(&self) -> GroundTruthPair {
        GroundTruthPair::from_clique(&self.graph, &self.clique_vertices)
            .expect("planted clique is complete by construction")
    }
}

/// The decomposition `M = L* + S*` induced by a known clique.
#[derive(Clone, Debug)]
pub struct GroundTruthPair {
    pub l_star: DenseMatrix,
    pub s_star: DenseMatrix,
    pub clique: Vec<usize>,
}

impl GroundTruthPair {
    /// `L*` is the indicator of `clique × clique`; `S* = M − L*`.
    pub fn from_clique(graph: &Graph, clique: &[usize]) -> Result<Self> {
        let n = graph.n_vertices();
        if clique.is_empty() {
            return invalid("ground truth needs a non-empty clique");
        }
        if let Some(&v) = clique.iter().find(|&&v| v >= n) {
            return invalid(format!("vertex {v} out of range for {n} vertices"));
        }
        if !graph.has_self_loops() {
            return invalid("ground truth requires a unit diagonal");
        }
        if !graph.is_clique(clique) {
            return invalid("vertex set is not a clique");
        }
        let mut member = vec![false; n];
        for &v in clique {
            member[v] = true;
        }
        let l_star = DenseMatrix::from_fn(n, n, |i, j| {
            if member[i] && member[j] {
                1.0
            } else {
                0.0
            }
        });
        let s_star = &graph.adjacency_matrix() - &l_star;
        let mut clique = clique.to_vec();
        clique.sort_unstable();
        clique.dedup();
        Ok(Self {
            l_star,
            s_star,
            clique,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.l_star.rows()
    }

    pub fn clique_size(&self) -> usize {
        self.clique.len()
    }

    pub fn m(&self) -> DenseMatrix {
        &self.l_star + &self.s_star
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        invalid(format!("edge probability must lie in (0, 1), got {p}"))
    }
}

fn sample_upper_triangle(n: usize, p: f64, rng: &mut GraphRng) -> Vec<bool> {
    let mut adjacency = vec![false; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                adjacency[i * n + j] = true;
                adjacency[j * n + i] = true;
            }
        }
    }
    adjacency
}

fn planted(
    n_vertices: usize,
    clique_size: usize,
    p: f64,
    seed: u64,
    shuffle: bool,
) -> Result<PlantedInstance> {
    if n_vertices == 0 || clique_size == 0 || clique_size > n_vertices {
        return invalid(format!(
            "clique size must satisfy 1 <= n <= N, got n={clique_size}, N={n_vertices}"
        ));
    }
    check_probability(p)?;
    let mut rng = rng_from_seed(seed);
    let mut clique: Vec<usize> = if shuffle {
        let mut labels: Vec<usize> = (0..n_vertices).collect();
        labels.shuffle(&mut rng);
        labels.truncate(clique_size);
        labels
    } else {
        (0..clique_size).collect()
    };
    clique.sort_unstable();

    let mut graph = Graph {
        n: n_vertices,
        adjacency: sample_upper_triangle(n_vertices, p, &mut rng),
        has_self_loops: false,
    };
    for (a, &i) in clique.iter().enumerate() {
        for &j in &clique[a + 1..] {
            graph.set_edge(i, j);
        }
    }
    graph.set_unit_diagonal();
    Ok(PlantedInstance {
        graph,
        clique_vertices: clique,
        edge_probability: p,
        seed,
    })
}

/// Planted clique on vertices `0..n`, every other pair an edge with probability `p`.
pub fn generate_planted(n_vertices: usize, clique_size: usize, p: f64, seed: u64) -> Result<PlantedInstance> {
    planted(n_vertices, clique_size, p, seed, false)
}

/// As [`generate_planted`] with the clique placed on a seeded random vertex subset.
pub fn generate_planted_shuffled(
    n_vertices: usize,
    clique_size: usize,
    p: f64,
    seed: u64,
) -> Result<PlantedInstance> {
    planted(n_vertices, clique_size, p, seed, true)
}

/// Symmetric Bernoulli graph `G(N, p)` with unit diagonal.
pub fn generate_bernoulli_symmetric(n_vertices: usize, p: f64, seed: u64) -> Result<Graph> {
    if n_vertices == 0 {
        return invalid("graph needs at least one vertex");
    }
    check_probability(p)?;
    let mut rng = rng_from_seed(seed);
    let mut graph = Graph {
        n: n_vertices,
        adjacency: sample_upper_triangle(n_vertices, p, &mut rng),
        has_self_loops: false,
    };
    graph.set_unit_diagonal();
    Ok(graph)
}

pub fn parse_dimacs_str(text: &str) -> Result<Graph> {
    parse_dimacs(text.as_bytes())
}

/// Reads the DIMACS clique format (`c`, `p edge N M`, `e i j` with 1-based ids).
pub fn parse_dimacs<R: BufRead>(reader: R) -> Result<Graph> {
    let mut graph: Option<Graph> = None;
    let mut declared_edges = 0usize;
    let mut warned_weights = false;
    let mut warned_nodes = false;
    let mut last_line = 0;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        let rest: Vec<&str> = tokens.collect();
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        match tag {
            "c" => {}
            "p" => {
                if graph.is_some() {
                    return Err(parse_err("duplicate problem line".into()));
                }
                if rest.len() < 3 {
                    return Err(parse_err("problem line must read `p <format> <N> <M>`".into()));
                }
                let n: usize = rest[1]
                    .parse()
                    .map_err(|_| parse_err(format!("invalid vertex count `{}`", rest[1])))?;
                declared_edges = rest[2]
                    .parse()
                    .map_err(|_| parse_err(format!("invalid edge count `{}`", rest[2])))?;
                if n == 0 {
                    return Err(parse_err("vertex count must be positive".into()));
                }
                graph = Some(Graph::new(n, &[], false)?);
            }
            "e" => {
                let g = graph
                    .as_mut()
                    .ok_or_else(|| parse_err("edge line before problem line".into()))?;
                if rest.len() < 2 {
                    return Err(parse_err("edge line must read `e <i> <j>`".into()));
                }
                if rest.len() > 2 && !warned_weights {
                    log::warn!("line {lineno}: extra edge fields (weights) ignored");
                    warned_weights = true;
                }
                let endpoint = |tok: &str| -> Result<usize> {
                    let v: usize = tok
                        .parse()
                        .map_err(|_| parse_err(format!("invalid vertex index `{tok}`")))?;
                    if v == 0 || v > g.n {
                        return Err(parse_err(format!(
                            "vertex index {v} out of range 1..={}",
                            g.n
                        )));
                    }
                    Ok(v - 1)
                };
                let i = endpoint(rest[0])?;
                let j = endpoint(rest[1])?;
                g.set_edge(i, j);
            }
            "n" => {
                if !warned_nodes {
                    log::warn!("line {lineno}: node lines ignored");
                    warned_nodes = true;
                }
            }
            other => return Err(parse_err(format!("unrecognised line type `{other}`"))),
        }
    }

    let mut g = graph.ok_or(Error::Parse {
        line: last_line,
        message: "missing problem line".into(),
    })?;
    g.set_unit_diagonal();
    let found = g.edge_count();
    if found != declared_edges {
        log::warn!("problem line declares {declared_edges} edges, found {found} distinct");
    }
    Ok(g)
}
