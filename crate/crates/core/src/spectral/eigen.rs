//! Spectral abscissa `η` and matrix measure `μ`.
//!
//! Metzler inputs take the Perron path: split into strongly connected
//! blocks of the off-diagonal support, then shifted power iteration on each
//! block, stopped on the Collatz–Wielandt gap. Symmetric inputs that are not
//! Metzler use a dense symmetric solver up to [`DENSE_LIMIT`] and Lanczos
//! above it. Anything else falls back to a dense Schur decomposition when
//! small enough.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};

/// Largest dimension handled by dense eigendecomposition.
pub const DENSE_LIMIT: usize = 64;

/// A real square operator accessed through products.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y ← A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self, i: usize) -> f64;
    /// `max_i Σ_{j≠i} |A_ij|`.
    fn max_offdiag_row_sum(&self) -> f64;
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        y.iter_mut().for_each(|v| *v = 0.0);
        // column-major: accumulate column by column
        for j in 0..n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let col = self.column(j);
            for (yi, &a) in y.iter_mut().zip(col.iter()) {
                *yi += a * xj;
            }
        }
    }

    fn diagonal(&self, i: usize) -> f64 {
        self[(i, i)]
    }

    fn max_offdiag_row_sum(&self) -> f64 {
        (0..self.nrows())
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub max_iterations: usize,
    /// Stop when the Collatz–Wielandt gap is below `tol` times the operator
    /// scale `max|A_ii| + max row sum`.
    pub tol: f64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            tol: 1e-13,
        }
    }
}

/// Perron root and a positive eigenvector estimate.
#[derive(Debug, Clone)]
pub struct Perron {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
}

/// Perron root of an irreducible Metzler operator.
///
/// Iterates on `A + cI` with `c = R/2 − min_i A_ii`, `R` the largest
/// off-diagonal row sum. The shifted operator is nonnegative with a positive
/// diagonal and therefore primitive, and its convergence ratio does not
/// depend on a common diagonal offset.
pub fn perron_root<O: LinearOperator + ?Sized>(
    op: &O,
    warm: Option<&[f64]>,
    opts: PowerOptions,
) -> Result<Perron> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::DomainError("empty operator".into()));
    }
    let dmax = (0..n).map(|i| op.diagonal(i).abs()).fold(0.0, f64::max);
    let r = op.max_offdiag_row_sum();
    if n == 1 || r == 0.0 {
        let v = (0..n)
            .map(|i| op.diagonal(i))
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(Perron {
            value: v,
            vector: vec![1.0; n],
            iterations: 0,
            gap: 0.0,
        });
    }
    let dmin = (0..n).map(|i| op.diagonal(i)).fold(f64::INFINITY, f64::min);
    let c = 0.5 * r - dmin;
    let scale = dmax + r;
    let tol = opts.tol * scale;
    let mut x: Vec<f64> = match warm {
        Some(w) if w.len() == n && w.iter().all(|&v| v > 0.0 && v.is_finite()) => w.to_vec(),
        _ => vec![1.0; n],
    };
    normalize_max(&mut x);
    let mut y = vec![0.0; n];
    let mut best_gap = f64::INFINITY;
    let mut best_it = 0;
    let mut estimate = f64::NAN;
    for it in 1..=opts.max_iterations {
        op.apply(&x, &mut y);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (yi, &xi) in y.iter_mut().zip(&x) {
            *yi += c * xi;
            if xi > 0.0 {
                let q = *yi / xi;
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        let gap = hi - lo;
        estimate = 0.5 * (lo + hi) - c;
        if gap <= tol {
            return Ok(Perron {
                value: estimate,
                vector: y,
                iterations: it,
                gap,
            });
        }
        if gap < best_gap * 0.999 {
            best_gap = gap;
            best_it = it;
        } else if it - best_it > 2_000 && best_gap <= 1e-10 * scale {
            // rounding floor reached
            return Ok(Perron {
                value: estimate,
                vector: y,
                iterations: it,
                gap,
            });
        }
        std::mem::swap(&mut x, &mut y);
        if !normalize_max(&mut x) {
            break;
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: opts.max_iterations,
        estimate,
        gap: best_gap,
    })
}

fn normalize_max(x: &mut [f64]) -> bool {
    let m = x.iter().cloned().fold(0.0, f64::max);
    if !(m > 0.0 && m.is_finite()) {
        return false;
    }
    let inv = 1.0 / m;
    x.iter_mut().for_each(|v| *v *= inv);
    true
}

pub fn is_metzler(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] >= 0.0))
}

pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..j).all(|i| m[(i, j)] == m[(j, i)]))
}

/// Strongly connected components of the off-diagonal support of `m`.
pub fn support_components(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

/// `η(M)`, the largest real part of the eigenvalues of `M`.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    check_square(m)?;
    if is_metzler(m) {
        metzler_abscissa(m)
    } else if is_symmetric(m) {
        symmetric_max(m)
    } else if m.nrows() <= DENSE_LIMIT {
        Ok(dense_spectral_abscissa(m))
    } else {
        Err(Error::UnsupportedMatrix { dim: m.nrows() })
    }
}

/// `μ(M) = η(M + Mᵀ)/2`.
pub fn matrix_measure(m: &DMatrix<f64>) -> Result<f64> {
    check_square(m)?;
    let s = (m + m.transpose()) * 0.5;
    spectral_abscissa(&s)
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::DomainError(format!(
            "expected a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn metzler_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    let mut eta = f64::NEG_INFINITY;
    for comp in support_components(m) {
        let v = if comp.len() == 1 {
            m[(comp[0], comp[0])]
        } else {
            let sub = m.select_rows(&comp).select_columns(&comp);
            match perron_root(&sub, None, PowerOptions::default()) {
                Ok(p) => p.value,
                Err(_) if sub.nrows() <= DENSE_LIMIT => dense_spectral_abscissa(&sub),
                Err(_) if is_symmetric(&sub) => SymmetricEigen::new(sub).eigenvalues.max(),
                Err(e) => return Err(e),
            }
        };
        eta = eta.max(v);
    }
    Ok(eta)
}

fn symmetric_max(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() <= DENSE_LIMIT {
        Ok(SymmetricEigen::new(m.clone()).eigenvalues.max())
    } else {
        lanczos_max(m, 1e-12)
    }
}

/// Dense reference: max real part over the Schur eigenvalues.
pub fn dense_spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue of a symmetric matrix by Lanczos with full
/// reorthogonalization. Stops when the Ritz residual `β_k |y_k|` is below
/// `tol · ‖M‖_∞`, which bounds the distance to an eigenvalue.
pub fn lanczos_max(m: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let n = m.nrows();
    let norm = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let thresh = tol * norm;
    let mut q: Vec<DVector<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    // deterministic start with components in every direction
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.754_877_666).sin());
    v /= v.norm();
    let mut last = f64::NAN;
    for k in 0..n {
        q.push(v.clone());
        let mut w = m * &v;
        let a = w.dot(&v);
        alpha.push(a);
        for _ in 0..2 {
            for qi in &q {
                let c = w.dot(qi);
                w.axpy(-c, qi, 1.0);
            }
        }
        let b = w.norm();
        let kk = k + 1;
        if kk % 8 == 0 || b <= thresh || kk == n {
            let mut t = DMatrix::zeros(kk, kk);
            for i in 0..kk {
                t[(i, i)] = alpha[i];
                if i + 1 < kk {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (idx, &theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty");
            let resid = b * eig.eigenvectors[(kk - 1, idx)].abs();
            last = theta;
            if resid <= thresh || b <= thresh || kk == n {
                return Ok(theta);
            }
        }
        beta.push(b);
        v = w / b;
    }
    Err(Error::ConvergenceFailure {
        iterations: n,
        estimate: last,
        gap: f64::NAN,
    })
}
