//! Brute-force ground truth for small graphs: dense symmetric
//! eigendecomposition of the Laplacian and resistance distances from its
//! pseudoinverse.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{laplacian_dense, Budget, Graph, GraphSpec};
use crate::metrics::{check_agreement, relative_error};
use crate::spectrum::NeumaierSum;

/// Eigenvalues below this magnitude are snapped to exactly zero. Every
/// oracle-scale graph here has algebraic connectivity above `1e-4`.
pub const ZERO_SNAP: f64 = 1e-9;

/// Relative agreement required between the two Kirchhoff routes.
pub const KIRCHHOFF_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub source_spec: GraphSpec,
    /// Ascending, length `num_vertices`.
    pub eigenvalues: Vec<f64>,
    pub lambda_sum: f64,
    pub lambda_sq_sum: f64,
    pub kirchhoff: f64,
}

impl OracleResult {
    pub fn second_smallest(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }
}

/// Full Laplacian spectrum of `g` by a dense symmetric eigensolver.
pub fn eig_all(g: &Graph, budget: &Budget) -> Result<OracleResult> {
    let lap = laplacian_dense(g, budget)?;
    if lap != lap.transpose() {
        return Err(Error::InternalCheck("Laplacian is not symmetric".into()));
    }
    let mut eigenvalues: Vec<f64> = lap.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    for v in eigenvalues.iter_mut() {
        if v.abs() < ZERO_SNAP {
            *v = 0.0;
        }
    }
    if eigenvalues.len() > 1 && eigenvalues[1] == 0.0 {
        return Err(Error::InternalCheck(format!("{}: zero eigenvalue is repeated; graph is disconnected", g.spec())));
    }

    let mut sum = NeumaierSum::default();
    let mut sq_sum = NeumaierSum::default();
    for &v in eigenvalues.iter().skip(1) {
        sum.add(1.0 / v);
        sq_sum.add(1.0 / (v * v));
    }
    let lambda_sum = sum.total();
    Ok(OracleResult {
        source_spec: g.spec(),
        kirchhoff: g.num_vertices() as f64 * lambda_sum,
        eigenvalues,
        lambda_sum,
        lambda_sq_sum: sq_sum.total(),
    })
}

/// Moore–Penrose pseudoinverse of a connected graph's Laplacian:
/// `L⁺ = (L + J/N)⁻¹ - J/N`.
pub fn laplacian_pseudoinverse(g: &Graph, budget: &Budget) -> Result<DMatrix<f64>> {
    let n = g.num_vertices();
    let mut shifted = laplacian_dense(g, budget)?;
    let fill = 1.0 / n as f64;
    shifted.add_scalar_mut(fill);
    let inverse = shifted
        .cholesky()
        .ok_or_else(|| Error::InternalCheck(format!("{}: L + J/N is not positive definite", g.spec())))?
        .inverse();
    Ok(inverse.add_scalar(-fill))
}

/// `Σ_{u<v} r(u,v)` with `r(u,v) = L⁺_uu + L⁺_vv - 2 L⁺_uv`.
pub fn kirchhoff_pairwise(g: &Graph, budget: &Budget) -> Result<f64> {
    let pinv = laplacian_pseudoinverse(g, budget)?;
    let n = g.num_vertices();
    let mut total = NeumaierSum::default();
    for u in 0..n {
        for v in u + 1..n {
            total.add(pinv[(u, u)] + pinv[(v, v)] - 2.0 * pinv[(u, v)]);
        }
    }
    Ok(total.total())
}

/// Kirchhoff index by pairwise resistance distances, checked against
/// `N · Σ 1/λ` from [`eig_all`].
pub fn kirchhoff_via_pinv(g: &Graph, budget: &Budget) -> Result<f64> {
    let pairwise = kirchhoff_pairwise(g, budget)?;
    let spectral = eig_all(g, budget)?.kirchhoff;
    check_agreement("kirchhoff", pairwise, spectral, KIRCHHOFF_TOL)?;
    Ok(pairwise)
}

pub fn second_smallest(g: &Graph, budget: &Budget) -> Result<f64> {
    Ok(eig_all(g, budget)?.second_smallest())
}

pub fn largest(g: &Graph, budget: &Budget) -> Result<f64> {
    Ok(eig_all(g, budget)?.largest())
}

/// Largest absolute difference between two sorted eigenvalue lists.
pub fn max_abs_deviation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    Some(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

pub fn sums_relative_error(oracle: &OracleResult, lambda_sum: f64, lambda_sq_sum: f64) -> f64 {
    relative_error(oracle.lambda_sum, lambda_sum).max(relative_error(oracle.lambda_sq_sum, lambda_sq_sum))
}
