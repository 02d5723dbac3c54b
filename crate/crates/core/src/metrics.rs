//! Consensus performance metrics of `H(n,k)` and `S(n,k)`.
//!
//! Every spectral quantity is available through up to three independent
//! routes that are checked against each other:
//!
//! * scalar recursions over the generation `n` (`Λ_n`, `Γ_n` for
//!   hierarchical graphs; `Θ_n`, `Ω_n` for Sierpiński graphs),
//! * closed forms in `n` and `k`,
//! * direct summation over the decimated spectrum.
//!
//! Naming: `lambda_sum` is `Σ 1/λ_i` and `lambda_sq_sum` is `Σ 1/λ_i²`
//! over the nonzero Laplacian eigenvalues, whichever family.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Budget, Family, GraphSpec};
use crate::spectrum::{hierarchical_children, sierpinski_children, SpectrumMultiset};

/// Relative tolerance between two analytic routes.
pub const ROUTE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Recursion,
    ClosedForm,
    SpectrumSum,
    Oracle,
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn check_agreement(metric: &'static str, left: f64, right: f64, tol: f64) -> Result<()> {
    let rel = relative_error(left, right);
    if rel <= tol && left.is_finite() && right.is_finite() {
        Ok(())
    } else {
        Err(Error::RouteDisagreement { metric, left, right, rel, tol })
    }
}

// ---------------------------------------------------------------------------
// Extreme eigenvalues

/// Second-smallest eigenvalue by iterating the smaller-root map from `ε_1 = k`.
pub fn epsilon_recursive(family: Family, n: u32, k: u32) -> f64 {
    let mut eps = k as f64;
    for _ in 1..n {
        eps = match family {
            Family::Hierarchical => hierarchical_children(eps, k).0,
            Family::Sierpinski => sierpinski_children(eps, k).expect("eps <= k stays inside the decimation domain").0,
        };
    }
    eps
}

/// `k^{2-n}` (hierarchical) or `k / (k+2)^{n-1}` (Sierpiński).
pub fn epsilon_asymptotic(family: Family, n: u32, k: u32) -> f64 {
    let k = k as f64;
    let steps = n as i32 - 1;
    match family {
        Family::Hierarchical => k * k.powi(-steps),
        Family::Sierpinski => k / (k + 2.0).powi(steps),
    }
}

/// Largest eigenvalue. Hierarchical: iterate the larger-root map from
/// `ζ_1 = k`. Sierpiński: `k` at `n = 1` and exactly `k + 2` afterwards.
pub fn zeta_recursive(family: Family, n: u32, k: u32) -> f64 {
    match family {
        Family::Hierarchical => {
            let mut zeta = k as f64;
            for _ in 1..n {
                zeta = hierarchical_children(zeta, k).1;
            }
            zeta
        }
        Family::Sierpinski => {
            if n <= 1 {
                k as f64
            } else {
                k as f64 + 2.0
            }
        }
    }
}

/// `(k-1) n` for hierarchical graphs; the exact value for Sierpiński graphs.
pub fn zeta_asymptotic(family: Family, n: u32, k: u32) -> f64 {
    match family {
        Family::Hierarchical => (k as f64 - 1.0) * n as f64,
        Family::Sierpinski => zeta_recursive(family, n, k),
    }
}

pub fn zeta(family: Family, n: u32, k: u32) -> f64 {
    zeta_recursive(family, n, k)
}

/// Largest uniform delay that keeps `ẋ = -L x(t-τ)` stable: `π / (2 ζ)`.
pub fn tau_max(zeta: f64) -> f64 {
    FRAC_PI_2 / zeta
}

// ---------------------------------------------------------------------------
// Hierarchical sums

/// `Λ_n = k Λ_{n-1} + 2(k-1)k^{n-2} - (k-1)/k`, `Λ_1 = (k-1)/k`.
pub fn lambda_sum_recursive(n: u32, k: u32) -> f64 {
    let kf = k as f64;
    let mut lam = (kf - 1.0) / kf;
    for m in 2..=n {
        lam = kf * lam + 2.0 * (kf - 1.0) * kf.powi(m as i32 - 2) - (kf - 1.0) / kf;
    }
    lam
}

pub fn lambda_sum_closed(n: u32, k: u32) -> f64 {
    2.0 * (k as f64).powi(n as i32) * h1_hierarchical_closed(n, k)
}

/// First-order coherence of `H(n,k)`, divided through by `k^n`:
/// `((2n-1) - 2n/k + k^{-n}) / (2k)`.
pub fn h1_hierarchical_closed(n: u32, k: u32) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    ((2.0 * nf - 1.0) - 2.0 * nf / kf + kf.powi(-(n as i32))) / (2.0 * kf)
}

/// Which form of the `Γ_n` recursion to run. Only [`GammaRecursion::Full`]
/// is correct; the other two reproduce commonly quoted shortened forms and
/// are kept so their disagreement with the spectrum stays under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaRecursion {
    /// `k²Γ + (2k-2)Λ + k^{n-1} - 1 + (k-2)k^{n-3} + 1/k²`.
    Full,
    /// Drops the contribution of the fixed eigenvalue `k`.
    WithoutFixedTerm,
    /// Additionally uses `Γ_{n-1}` instead of `Λ_{n-1}` in the middle term.
    GammaMiddleTerm,
}

pub fn gamma_recursive_variant(n: u32, k: u32, variant: GammaRecursion) -> f64 {
    let kf = k as f64;
    let mut gam = (kf - 1.0) / (kf * kf);
    let mut lam = (kf - 1.0) / kf;
    for m in 2..=n {
        let m = m as i32;
        let middle = match variant {
            GammaRecursion::GammaMiddleTerm => gam,
            _ => lam,
        };
        let fixed = match variant {
            GammaRecursion::Full => (kf - 2.0) * kf.powi(m - 3) + 1.0 / (kf * kf),
            _ => 0.0,
        };
        let next = kf * kf * gam + (2.0 * kf - 2.0) * middle + kf.powi(m - 1) - 1.0 + fixed;
        lam = kf * lam + 2.0 * (kf - 1.0) * kf.powi(m - 2) - (kf - 1.0) / kf;
        gam = next;
    }
    gam
}

/// `Γ_n = Σ 1/λ²` for `H(n,k)` by recursion, `Γ_1 = (k-1)/k²`.
pub fn gamma_recursive(n: u32, k: u32) -> f64 {
    gamma_recursive_variant(n, k, GammaRecursion::Full)
}

pub fn gamma_closed(n: u32, k: u32) -> f64 {
    2.0 * (k as f64).powi(n as i32) * h2_hierarchical_closed(n, k)
}

/// Second-order coherence of `H(n,k)`, evaluated term by term so no power
/// of `k` larger than `k^n` is formed.
pub fn h2_hierarchical_closed(n: u32, k: u32) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let kn = kf.powi(n as i32);
    let denom = 2.0 * kf.powi(3) * (1.0 + kf);
    (kf - kf * kf) / (kn * denom)
        + (kf * kf - 5.0 * kf - 6.0) / denom
        + kn * (4.0 * kf + 6.0) / denom
        + 2.0 * nf * (1.0 - kf) / kf.powi(3)
}

pub fn h1_hierarchical(n: u32, k: u32) -> Result<f64> {
    let closed = h1_hierarchical_closed(n, k);
    let recursive = lambda_sum_recursive(n, k) / (2.0 * (k as f64).powi(n as i32));
    check_agreement("H1 hierarchical", closed, recursive, ROUTE_TOL)?;
    Ok(closed)
}

pub fn h2_hierarchical(n: u32, k: u32) -> Result<f64> {
    let closed = h2_hierarchical_closed(n, k);
    let recursive = gamma_recursive(n, k) / (2.0 * (k as f64).powi(n as i32));
    check_agreement("H2 hierarchical", closed, recursive, ROUTE_TOL)?;
    Ok(closed)
}

// ---------------------------------------------------------------------------
// Sierpiński sums

fn theta_fixed_term(m: i32, kf: f64) -> f64 {
    (kf - 2.0) / 2.0 * (kf.powi(m - 2) + 1.0 / (kf - 2.0) + (kf.powi(m - 1) - 1.0) / (kf + 2.0))
}

fn omega_fixed_term(m: i32, kf: f64) -> f64 {
    (kf - 2.0) / 2.0 * (kf.powi(m - 3) + 1.0 / (kf * (kf - 2.0)) + (kf.powi(m - 1) - 1.0) / ((kf + 2.0) * (kf + 2.0)))
}

/// `Θ_n = (k+2)Θ_{n-1} + fixed_n`, `Θ_1 = (k-1)/k`.
pub fn theta_recursive(n: u32, k: u32) -> f64 {
    let kf = k as f64;
    let mut theta = (kf - 1.0) / kf;
    for m in 2..=n {
        theta = (kf + 2.0) * theta + theta_fixed_term(m as i32, kf);
    }
    theta
}

/// `Ω_n = (k+2)²Ω_{n-1} - 2Θ_{n-1} + fixed_n`, `Ω_1 = (k-1)/k²`.
pub fn omega_recursive(n: u32, k: u32) -> f64 {
    let kf = k as f64;
    let mut theta = (kf - 1.0) / kf;
    let mut omega = (kf - 1.0) / (kf * kf);
    for m in 2..=n {
        let m = m as i32;
        omega = (kf + 2.0) * (kf + 2.0) * omega - 2.0 * theta + omega_fixed_term(m, kf);
        theta = (kf + 2.0) * theta + theta_fixed_term(m, kf);
    }
    omega
}

pub fn h1_sierpinski_closed(n: u32, k: u32) -> f64 {
    let kf = k as f64;
    let n = n as i32;
    let growth = ((kf + 2.0) / kf).powi(n);
    let denom = 4.0 * kf * (kf + 1.0) * (kf + 2.0);
    (kf * kf + kf + 2.0) * (kf - 1.0) * growth / denom
        - 4.0 * kf / (kf.powi(n) * denom)
        - (kf - 2.0) * (kf + 1.0) / (4.0 * kf * (kf + 2.0))
}

pub fn h2_sierpinski_closed(n: u32, k: u32) -> f64 {
    let kf = k as f64;
    let n = n as i32;
    let k1 = kf + 1.0;
    let k2 = kf + 2.0;
    let k3 = kf + 3.0;
    let quad = kf * kf + 3.0 * kf + 4.0;
    let growth = (k2 / kf).powi(n);
    let t1 = -(7.0 * kf * kf + 13.0 * kf + 2.0) / (2.0 * kf.powi(n + 1) * k1 * k1 * k2 * k2 * k3);
    let t2 = -(kf - 2.0) * (kf.powi(3) + 4.0 * kf * kf + 4.0 * kf + 2.0) / (2.0 * kf * kf * k2 * k2 * quad);
    // (k+2)^{n-2} / k^{n+1}
    let t3 = (kf - 1.0) * (kf * kf + kf + 2.0) * growth / (2.0 * kf * k2 * k2 * k1 * k1);
    let poly = kf.powi(5) + 7.0 * kf.powi(4) + 16.0 * kf.powi(3) + 28.0 * kf * kf + 26.0 * kf + 12.0;
    // (k+2)^{2n-2} / k^{n+2}
    let t4 = poly * (kf - 1.0) * growth * k2.powi(n) / (2.0 * kf * kf * k1 * k1 * k3 * quad * k2 * k2);
    t1 + t2 + t3 + t4
}

pub fn theta_closed(n: u32, k: u32) -> f64 {
    2.0 * (k as f64).powi(n as i32) * h1_sierpinski_closed(n, k)
}

pub fn omega_closed(n: u32, k: u32) -> f64 {
    2.0 * (k as f64).powi(n as i32) * h2_sierpinski_closed(n, k)
}

pub fn h1_sierpinski(n: u32, k: u32) -> Result<f64> {
    let closed = h1_sierpinski_closed(n, k);
    let recursive = theta_recursive(n, k) / (2.0 * (k as f64).powi(n as i32));
    check_agreement("H1 sierpinski", closed, recursive, ROUTE_TOL)?;
    Ok(closed)
}

pub fn h2_sierpinski(n: u32, k: u32) -> Result<f64> {
    let closed = h2_sierpinski_closed(n, k);
    let recursive = omega_recursive(n, k) / (2.0 * (k as f64).powi(n as i32));
    // the closed form has four terms of alternating sign
    check_agreement("H2 sierpinski", closed, recursive, 1e-9)?;
    Ok(closed)
}

// ---------------------------------------------------------------------------
// Family dispatch and leading-order scalings

pub fn lambda_sum_recursive_for(family: Family, n: u32, k: u32) -> f64 {
    match family {
        Family::Hierarchical => lambda_sum_recursive(n, k),
        Family::Sierpinski => theta_recursive(n, k),
    }
}

pub fn lambda_sq_sum_recursive_for(family: Family, n: u32, k: u32) -> f64 {
    match family {
        Family::Hierarchical => gamma_recursive(n, k),
        Family::Sierpinski => omega_recursive(n, k),
    }
}

pub fn lambda_sum_closed_for(family: Family, n: u32, k: u32) -> f64 {
    match family {
        Family::Hierarchical => lambda_sum_closed(n, k),
        Family::Sierpinski => theta_closed(n, k),
    }
}

pub fn lambda_sq_sum_closed_for(family: Family, n: u32, k: u32) -> f64 {
    match family {
        Family::Hierarchical => gamma_closed(n, k),
        Family::Sierpinski => omega_closed(n, k),
    }
}

pub fn h1(family: Family, n: u32, k: u32) -> Result<f64> {
    match family {
        Family::Hierarchical => h1_hierarchical(n, k),
        Family::Sierpinski => h1_sierpinski(n, k),
    }
}

pub fn h2(family: Family, n: u32, k: u32) -> Result<f64> {
    match family {
        Family::Hierarchical => h2_hierarchical(n, k),
        Family::Sierpinski => h2_sierpinski(n, k),
    }
}

/// Growth law of `H1` in the order `N = k^n`: `H1 ≈ coefficient · g(N)`
/// with `g = log_k N` (hierarchical) or `g = N^exponent` (Sierpiński).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub coefficient: f64,
    /// `None` for logarithmic growth.
    pub exponent: Option<f64>,
}

pub fn h1_scaling(family: Family, k: u32) -> Scaling {
    let kf = k as f64;
    match family {
        Family::Hierarchical => Scaling { coefficient: (kf - 1.0) / (kf * kf), exponent: None },
        Family::Sierpinski => Scaling {
            coefficient: (kf.powi(3) + kf - 2.0) / (4.0 * kf * (kf + 1.0) * (kf + 2.0)),
            exponent: Some((kf + 2.0).ln() / kf.ln() - 1.0),
        },
    }
}

pub fn h2_scaling(family: Family, k: u32) -> Scaling {
    let kf = k as f64;
    match family {
        Family::Hierarchical => {
            Scaling { coefficient: (2.0 * kf + 3.0) / (kf.powi(3) * (kf + 1.0)), exponent: Some(1.0) }
        }
        Family::Sierpinski => {
            let poly = kf.powi(5) + 7.0 * kf.powi(4) + 16.0 * kf.powi(3) + 28.0 * kf * kf + 26.0 * kf + 12.0;
            let denom =
                2.0 * kf * kf * (kf + 1.0).powi(2) * (kf + 2.0).powi(2) * (kf + 3.0) * (kf * kf + 3.0 * kf + 4.0);
            Scaling { coefficient: poly * (kf - 1.0) / denom, exponent: Some(2.0 * (kf + 2.0).ln() / kf.ln() - 1.0) }
        }
    }
}

impl Scaling {
    pub fn evaluate(&self, n: u32, k: u32) -> f64 {
        let order = (k as f64).powi(n as i32);
        match self.exponent {
            None => self.coefficient * n as f64,
            Some(e) => self.coefficient * order.powf(e),
        }
    }
}

// ---------------------------------------------------------------------------
// Derived indices

/// Kirchhoff index `N·Λ` and mean hitting time `2E·Λ/(N-1)`.
pub fn kirchhoff_and_hitting(lambda_sum: f64, n: u32, k: u32) -> (f64, f64) {
    let kf = k as f64;
    let order = kf.powi(n as i32);
    let size = (order * kf - kf) / 2.0;
    (order * lambda_sum, 2.0 * size * lambda_sum / (order - 1.0))
}

/// `(Σ 1/λ, Σ 1/λ²)` summed over a decimated spectrum.
pub fn spectrum_sums(spectrum: &SpectrumMultiset) -> (f64, f64) {
    (spectrum.reciprocal_power_sum(1), spectrum.reciprocal_power_sum(2))
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Methods {
    pub epsilon: Method,
    pub zeta: Method,
    pub tau_max: Method,
    pub h1: Method,
    pub h2: Method,
    pub lambda_sum: Method,
    pub lambda_sq_sum: Method,
    pub kirchhoff: Method,
    pub mean_hitting: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub spec: GraphSpec,
    pub num_vertices: u64,
    pub num_edges: u64,
    pub epsilon: f64,
    pub epsilon_asym: f64,
    pub zeta: f64,
    pub zeta_asym: f64,
    pub tau_max: f64,
    pub h1: f64,
    pub h2: f64,
    pub lambda_sum: f64,
    pub lambda_sq_sum: f64,
    pub kirchhoff: f64,
    pub mean_hitting: f64,
    pub methods: Methods,
    /// Routes that were compared against the reported values.
    pub cross_checked: Vec<Method>,
}

/// Fills every field through the cheapest exact route and cross-checks it
/// against the scalar recursions and, when the compressed spectrum fits the
/// budget, against direct spectrum summation.
pub fn full_report(spec: GraphSpec, budget: &Budget) -> Result<MetricsReport> {
    let spec = GraphSpec::new(spec.family, spec.n, spec.k)?;
    let (family, n, k) = (spec.family, spec.n, spec.k);

    let epsilon = epsilon_recursive(family, n, k);
    let zeta = zeta_recursive(family, n, k);
    let h1 = h1(family, n, k)?;
    let h2 = h2(family, n, k)?;
    let lambda_sum = lambda_sum_closed_for(family, n, k);
    let lambda_sq_sum = lambda_sq_sum_closed_for(family, n, k);
    let (kirchhoff, mean_hitting) = kirchhoff_and_hitting(lambda_sum, n, k);

    let mut cross_checked = vec![Method::Recursion];
    if budget.check_spectrum_entries(crate::spectrum::max_distinct_entries(n)).is_ok() {
        let spectrum = SpectrumMultiset::compute(spec, budget)?;
        let summary = spectrum.summary();
        let (lam, gam) = spectrum_sums(&spectrum);
        check_agreement("epsilon", epsilon, summary.min_nonzero, ROUTE_TOL)?;
        check_agreement("zeta", zeta, summary.max, ROUTE_TOL)?;
        check_agreement("lambda_sum", lambda_sum, lam, 1e-9)?;
        check_agreement("lambda_sq_sum", lambda_sq_sum, gam, 1e-9)?;
        cross_checked.push(Method::SpectrumSum);
    }

    let zeta_method = match family {
        Family::Hierarchical => Method::Recursion,
        Family::Sierpinski => Method::ClosedForm,
    };
    Ok(MetricsReport {
        spec,
        num_vertices: spec.order(),
        num_edges: spec.size(),
        epsilon,
        epsilon_asym: epsilon_asymptotic(family, n, k),
        zeta,
        zeta_asym: zeta_asymptotic(family, n, k),
        tau_max: tau_max(zeta),
        h1,
        h2,
        lambda_sum,
        lambda_sq_sum,
        kirchhoff,
        mean_hitting,
        methods: Methods {
            epsilon: Method::Recursion,
            zeta: zeta_method,
            tau_max: zeta_method,
            h1: Method::ClosedForm,
            h2: Method::ClosedForm,
            lambda_sum: Method::ClosedForm,
            lambda_sq_sum: Method::ClosedForm,
            kirchhoff: Method::ClosedForm,
            mean_hitting: Method::ClosedForm,
        },
        cross_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{hierarchical_spectrum, sierpinski_spectrum};

    const H: Family = Family::Hierarchical;
    const S: Family = Family::Sierpinski;

    fn close(a: f64, b: f64, rel: f64) {
        assert!(relative_error(a, b) <= rel, "{a} vs {b} (rel {:e})", relative_error(a, b));
    }

    #[test]
    fn epsilon_examples() {
        close(epsilon_recursive(H, 2, 3), 3.0 - 6f64.sqrt(), 1e-14);
        close(epsilon_recursive(S, 2, 3), (5.0 - 13f64.sqrt()) / 2.0, 1e-14);
        for k in 3..=7 {
            assert_eq!(epsilon_recursive(H, 1, k), k as f64);
            assert_eq!(epsilon_recursive(S, 1, k), k as f64);
            assert_eq!(epsilon_asymptotic(H, 1, k), k as f64);
            assert_eq!(zeta_recursive(H, 1, k), k as f64);
        }
        close(epsilon_asymptotic(H, 5, 3), 1.0 / 27.0, 1e-15);
        close(epsilon_asymptotic(S, 5, 3), 0.0048, 1e-14);
    }

    #[test]
    fn zeta_and_tau_examples() {
        assert_eq!(zeta(S, 7, 4), 6.0);
        assert_eq!(zeta(S, 1, 4), 4.0);
        close(zeta(H, 2, 3), 3.0 + 6f64.sqrt(), 1e-15);
        assert_eq!(zeta_asymptotic(H, 10, 3), 20.0);
        close(tau_max(5.0), 0.3141592653589793, 1e-15);
        close(tau_max(FRAC_PI_2), 1.0, 1e-15);
        assert!((tau_max(3.0 + 6f64.sqrt()) - 0.288247).abs() < 1e-6);
    }

    #[test]
    fn hierarchical_coherence_examples() {
        close(h1_hierarchical(1, 3).unwrap(), 1.0 / 9.0, 1e-14);
        close(h1_hierarchical(2, 3).unwrap(), 8.0 / 27.0, 1e-14);
        close(lambda_sum_recursive(2, 3), 16.0 / 3.0, 1e-14);
        close(h2_hierarchical(1, 3).unwrap(), 1.0 / 27.0, 1e-14);
        let r6 = 6f64.sqrt();
        let gamma2 = 4.0 / 9.0 + 2.0 / (3.0 - r6).powi(2) + 2.0 / (3.0 + r6).powi(2);
        close(h2_hierarchical(2, 3).unwrap(), gamma2 / 18.0, 1e-13);
    }

    #[test]
    fn sierpinski_coherence_examples() {
        close(h1_sierpinski(1, 3).unwrap(), 1.0 / 9.0, 1e-14);
        close(theta_recursive(2, 3), 68.0 / 15.0, 1e-14);
        close(h1_sierpinski(2, 3).unwrap(), 34.0 / 135.0, 1e-14);
        close(h2_sierpinski(1, 3).unwrap(), 1.0 / 27.0, 1e-14);
        let omega2 = 50.0 / 9.0 - 4.0 / 3.0 + 28.0 / 75.0;
        close(omega_recursive(2, 3), omega2, 1e-14);
        close(h2_sierpinski(2, 3).unwrap(), omega2 / 18.0, 1e-13);
    }

    #[test]
    fn base_case_coherence_all_k() {
        for k in 3..=8u32 {
            let kf = k as f64;
            for family in Family::ALL {
                close(h1(family, 1, k).unwrap(), (kf - 1.0) / (2.0 * kf * kf), 1e-14);
                close(h2(family, 1, k).unwrap(), (kf - 1.0) / (2.0 * kf.powi(3)), 1e-14);
            }
        }
    }

    #[test]
    fn three_routes_agree() {
        let budget = Budget::default();
        for k in 3..=5 {
            for n in 1..=8 {
                let hs = hierarchical_spectrum(n, k, &budget).unwrap();
                let (lam, gam) = spectrum_sums(&hs);
                for (a, b, c) in [
                    (lambda_sum_closed(n, k), lambda_sum_recursive(n, k), lam),
                    (gamma_closed(n, k), gamma_recursive(n, k), gam),
                ] {
                    close(a, b, 1e-9);
                    close(a, c, 1e-9);
                }
                let ss = sierpinski_spectrum(n, k, &budget).unwrap();
                let (theta, omega) = spectrum_sums(&ss);
                for (a, b, c) in [
                    (theta_closed(n, k), theta_recursive(n, k), theta),
                    (omega_closed(n, k), omega_recursive(n, k), omega),
                ] {
                    close(a, b, 1e-9);
                    close(a, c, 1e-9);
                }
            }
        }
    }

    #[test]
    fn shortened_gamma_recursions_disagree_with_spectrum() {
        let budget = Budget::default();
        for k in 3..=5 {
            for n in 2..=6 {
                let (_, gam) = spectrum_sums(&hierarchical_spectrum(n, k, &budget).unwrap());
                close(gamma_recursive_variant(n, k, GammaRecursion::Full), gam, 1e-10);
                for variant in [GammaRecursion::WithoutFixedTerm, GammaRecursion::GammaMiddleTerm] {
                    let v = gamma_recursive_variant(n, k, variant);
                    assert!(relative_error(v, gam) > 1e-3, "{variant:?} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn extreme_eigenvalues_match_spectrum() {
        let budget = Budget::default();
        for k in 3..=5 {
            for n in 1..=10 {
                for family in Family::ALL {
                    let spec = GraphSpec::new(family, n, k).unwrap();
                    let s = SpectrumMultiset::compute(spec, &budget).unwrap().summary();
                    close(epsilon_recursive(family, n, k), s.min_nonzero, 1e-10);
                    close(zeta_recursive(family, n, k), s.max, 1e-10);
                }
            }
        }
    }

    #[test]
    fn monotonicity() {
        for k in 3..=5 {
            for n in 1..20 {
                for family in Family::ALL {
                    assert!(epsilon_recursive(family, n + 1, k) < epsilon_recursive(family, n, k));
                }
                assert!(zeta_recursive(H, n + 1, k) >= zeta_recursive(H, n, k));
                if n >= 2 {
                    assert_eq!(zeta_recursive(S, n, k), k as f64 + 2.0);
                }
            }
        }
    }

    #[test]
    fn hierarchical_approximation_error_signs() {
        for k in 3..=6 {
            for n in 2..=20 {
                assert!(zeta_asymptotic(H, n, k) <= zeta_recursive(H, n, k));
                assert!(epsilon_asymptotic(H, n, k) >= epsilon_recursive(H, n, k));
            }
        }
    }

    #[test]
    fn epsilon_approximations_have_the_right_rate() {
        // The exact/approximate ratio settles to a k-dependent constant, so
        // the approximations share the geometric rate but not the prefactor.
        for k in 3..=5 {
            for family in Family::ALL {
                let ratio = |n| epsilon_recursive(family, n, k) / epsilon_asymptotic(family, n, k);
                let steps: Vec<f64> = (4..=12).map(|n| (ratio(n + 1) / ratio(n) - 1.0).abs()).collect();
                assert!(steps.windows(2).all(|w| w[1] < w[0]), "{family} k={k}: {steps:?}");
                assert!(*steps.last().unwrap() < 1e-3);
            }
        }
    }

    #[test]
    fn cross_family_ratios_grow_at_predicted_rate() {
        for k in 3..=5u32 {
            let kf = k as f64;
            let normalized =
                |n: u32| epsilon_recursive(H, n, k) / epsilon_recursive(S, n, k) / ((kf + 2.0) / kf).powi(n as i32 - 1);
            close(normalized(12), normalized(11), 1e-3);
            let zeta_ratio = |n: u32| zeta(H, n, k) / zeta(S, n, k) / ((kf - 1.0) * n as f64 / (kf + 2.0));
            assert!(zeta_ratio(40) < zeta_ratio(10));
            assert!(zeta_ratio(40) > 1.0);
        }
    }

    #[test]
    fn kirchhoff_examples() {
        let (kf, mh) = kirchhoff_and_hitting(16.0 / 3.0, 2, 3);
        close(kf, 48.0, 1e-15);
        close(mh, 16.0, 1e-15);
        let (kf, mh) = kirchhoff_and_hitting(2.0 / 3.0, 1, 3);
        close(kf, 2.0, 1e-15);
        close(mh, 2.0, 1e-15);
        let (kf, _) = kirchhoff_and_hitting(68.0 / 15.0, 2, 3);
        close(kf, 40.8, 1e-14);
    }

    #[test]
    fn closed_forms_stay_finite_to_n_30() {
        for k in 3..=5 {
            for family in Family::ALL {
                let a = h1(family, 30, k).unwrap();
                let b = h2(family, 30, k).unwrap();
                assert!(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0);
            }
        }
    }

    #[test]
    fn report_h23() {
        let r = full_report(GraphSpec::hierarchical(2, 3).unwrap(), &Budget::default()).unwrap();
        close(r.epsilon, 3.0 - 6f64.sqrt(), 1e-14);
        close(r.zeta, 3.0 + 6f64.sqrt(), 1e-14);
        close(r.tau_max, FRAC_PI_2 / (3.0 + 6f64.sqrt()), 1e-14);
        close(r.h1, 8.0 / 27.0, 1e-14);
        close(r.kirchhoff, 48.0, 1e-13);
        close(r.mean_hitting, 16.0, 1e-13);
        assert_eq!(r.num_vertices, 9);
        assert_eq!(r.num_edges, 12);
        assert_eq!(r.methods.epsilon, Method::Recursion);
        assert!(r.cross_checked.contains(&Method::SpectrumSum));
    }

    #[test]
    fn report_s23() {
        let r = full_report(GraphSpec::sierpinski(2, 3).unwrap(), &Budget::default()).unwrap();
        close(r.epsilon, (5.0 - 13f64.sqrt()) / 2.0, 1e-14);
        assert_eq!(r.zeta, 5.0);
        close(r.tau_max, std::f64::consts::PI / 10.0, 1e-15);
        close(r.h1, 34.0 / 135.0, 1e-14);
        close(r.kirchhoff, 40.8, 1e-13);
        assert_eq!(r.methods.zeta, Method::ClosedForm);
    }

    #[test]
    fn report_base_case() {
        for family in Family::ALL {
            for k in 3..=6 {
                let kf = k as f64;
                let r = full_report(GraphSpec::new(family, 1, k).unwrap(), &Budget::default()).unwrap();
                assert_eq!(r.epsilon, kf);
                assert_eq!(r.zeta, kf);
                close(r.h1, (kf - 1.0) / (2.0 * kf * kf), 1e-14);
                close(r.h2, (kf - 1.0) / (2.0 * kf.powi(3)), 1e-14);
            }
        }
    }

    #[test]
    fn report_invariants() {
        for family in Family::ALL {
            for n in 1..=9 {
                let r = full_report(GraphSpec::new(family, n, 4).unwrap(), &Budget::default()).unwrap();
                let order = r.num_vertices as f64;
                assert!(r.epsilon > 0.0 && r.zeta >= r.epsilon);
                assert_eq!(r.tau_max, FRAC_PI_2 / r.zeta);
                close(r.h1, r.lambda_sum / (2.0 * order), 1e-12);
                close(r.h2, r.lambda_sq_sum / (2.0 * order), 1e-9);
                close(r.kirchhoff, order * r.lambda_sum, 1e-15);
                close(r.mean_hitting, 2.0 * r.num_edges as f64 * r.lambda_sum / (order - 1.0), 1e-14);
            }
        }
    }

    #[test]
    fn report_without_spectrum_budget_uses_recursion_only() {
        let budget = Budget { spectrum_entries: 8, ..Budget::default() };
        let r = full_report(GraphSpec::sierpinski(6, 3).unwrap(), &budget).unwrap();
        assert_eq!(r.cross_checked, vec![Method::Recursion]);
    }
}
