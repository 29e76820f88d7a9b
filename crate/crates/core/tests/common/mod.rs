//! Test-only oracles that share no numerical code with the library: a cyclic
//! Jacobi eigensolver, a projected-gradient prox solver for the nuclear norm
//! and golden-section search for scalar prox problems.
#![allow(dead_code)]

use clique_decomp::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn to_mat(x: &DenseMatrix) -> Mat {
    (0..x.rows()).map(|i| x.row(i).to_vec()).collect()
}

pub fn from_mat(m: &Mat) -> DenseMatrix {
    DenseMatrix::from_rows(m).unwrap()
}

pub fn random_symmetric(n: usize, scale: f64, rng: &mut impl Rng) -> Mat {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = scale * (2.0 * rng.random::<f64>() - 1.0);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(values, vectors)` with eigenvectors in the columns.
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn project_psd(a: &Mat) -> Mat {
    let n = a.len();
    let (w, v) = jacobi_eigen(a);
    let mut out = vec![vec![0.0; n]; n];
    for (k, &lam) in w.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[i][j] += lam * v[i][k] * v[j][k];
            }
        }
    }
    out
}

pub fn nuclear_norm(a: &Mat) -> f64 {
    jacobi_eigen(a).0.iter().map(|x| x.abs()).sum()
}

/// `argmin_Y τ‖Y‖* + ½‖Y − X‖²_F` over symmetric `Y`, solved as
/// `min τ(tr P + tr Q) + ½‖P − Q − X‖²` over `P, Q ⪰ 0` by projected gradient.
pub fn svt_oracle(x: &Mat, tau: f64) -> Mat {
    let n = x.len();
    let mut p = project_psd(x);
    let neg: Mat = x.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let mut q = project_psd(&neg);
    let step = 0.5;
    for _ in 0..20_000 {
        let mut r = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                r[i][j] = p[i][j] - q[i][j] - x[i][j];
            }
        }
        let mut p_next = p.clone();
        let mut q_next = q.clone();
        for i in 0..n {
            for j in 0..n {
                let eye = if i == j { tau } else { 0.0 };
                p_next[i][j] -= step * (eye + r[i][j]);
                q_next[i][j] -= step * (eye - r[i][j]);
            }
        }
        let p_next = project_psd(&p_next);
        let q_next = project_psd(&q_next);
        let change = max_diff(&p_next, &p).max(max_diff(&q_next, &q));
        p = p_next;
        q = q_next;
        if change < 1e-14 {
            break;
        }
    }
    (0..n)
        .map(|i| (0..n).map(|j| p[i][j] - q[i][j]).collect())
        .collect()
}

/// Minimizer of a unimodal `f` on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-12 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// `argmin_y w|y| + ½(y − x)²` by search.
pub fn scalar_prox_oracle(x: f64, w: f64) -> f64 {
    let r = x.abs() + w + 1.0;
    golden_section(|y| w * y.abs() + 0.5 * (y - x) * (y - x), -r, r)
}
