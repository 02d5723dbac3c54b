//! Oracle cross-check matrix: each check compares two independent routes to
//! the same quantity and records pass/fail with the observed discrepancy.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Budget, Family, Graph, GraphSpec};
use crate::metrics::{self, relative_error};
use crate::oracle;
use crate::sim::{self, SimConfig, SimKind};
use crate::spectrum::SpectrumMultiset;

/// Sorted oracle vs recursive eigenvalues, max absolute error.
pub const SPECTRUM_TOL: f64 = 1e-8;
/// Oracle sums vs closed forms, relative.
pub const ORACLE_SUM_TOL: f64 = 1e-7;
/// Closed form vs recursion vs spectrum summation, relative.
pub const ROUTE_SUM_TOL: f64 = 1e-9;
/// Graphs at most this large also get simulation smoke tests.
pub const SIM_SMOKE_MAX_VERTICES: usize = 81;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub spec: GraphSpec,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationTable {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationTable {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn extend(&mut self, other: ValidationTable) {
        self.checks.extend(other.checks);
    }

    fn push<E: std::fmt::Display>(
        &mut self,
        spec: GraphSpec,
        name: &'static str,
        outcome: std::result::Result<(bool, String), E>,
    ) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(CheckOutcome { spec, name, passed, detail });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:<26} {:<6} detail", "graph", "check", "result");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<10} {:<26} {:<6} {}",
                c.spec.to_string(),
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.detail
            );
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {} passed, {} failed", self.checks.len(), self.checks.len() - failed, failed);
        out
    }
}

fn within(label: &str, err: f64, tol: f64) -> (bool, String) {
    (err <= tol, format!("{label} {err:.3e} (tol {tol:.0e})"))
}

/// Checks a concrete graph against everything its spec predicts. The graph
/// need not have been built by this crate, so a corrupted edge list shows up
/// as failures rather than errors.
pub fn validate_graph(g: &Graph, budget: &Budget) -> Result<ValidationTable> {
    let spec = g.spec();
    let (family, n, k) = (spec.family, spec.n, spec.k);
    let mut table = ValidationTable::default();

    table.push(
        spec,
        "order-and-size",
        Ok::<_, Error>((
            g.num_vertices() as u64 == spec.order() && g.num_edges() as u64 == spec.size(),
            format!("N={} E={} (expected {} {})", g.num_vertices(), g.num_edges(), spec.order(), spec.size()),
        )),
    );
    table.push(spec, "connected", Ok::<_, Error>((g.is_connected(), String::new())));

    if budget.check_dense(g.num_vertices() as u64).is_err() {
        return Ok(table);
    }
    let spectrum = SpectrumMultiset::compute(spec, budget)?;
    let oracle = oracle::eig_all(g, budget).map_err(|e| e.to_string());

    table.push(
        spec,
        "spectrum-match",
        oracle.as_ref().map_err(Clone::clone).map(|o| {
            match oracle::max_abs_deviation(&o.eigenvalues, &spectrum.expand()) {
                Some(dev) => within("max abs", dev, SPECTRUM_TOL),
                None => (false, "length mismatch".into()),
            }
        }),
    );
    table.push(
        spec,
        "extremes-match",
        oracle.as_ref().map_err(Clone::clone).map(|o| {
            let err = (o.second_smallest() - metrics::epsilon_recursive(family, n, k))
                .abs()
                .max((o.largest() - metrics::zeta(family, n, k)).abs());
            within("max abs", err, SPECTRUM_TOL)
        }),
    );
    table.push(
        spec,
        "oracle-sums-closed-form",
        oracle.as_ref().map_err(Clone::clone).map(|o| {
            let err = oracle::sums_relative_error(
                o,
                metrics::lambda_sum_closed_for(family, n, k),
                metrics::lambda_sq_sum_closed_for(family, n, k),
            );
            within("rel", err, ORACLE_SUM_TOL)
        }),
    );
    table.push(
        spec,
        "kirchhoff-pinv",
        oracle::kirchhoff_pairwise(g, budget).map(|pairwise| {
            let closed = g.num_vertices() as f64 * metrics::lambda_sum_closed_for(family, n, k);
            within("rel", relative_error(pairwise, closed), oracle::KIRCHHOFF_TOL)
        }),
    );
    Ok(table)
}

/// Agreement of the analytic routes, independent of any constructed graph.
pub fn validate_routes(spec: GraphSpec, budget: &Budget) -> Result<ValidationTable> {
    let (family, n, k) = (spec.family, spec.n, spec.k);
    let mut table = ValidationTable::default();
    let spectrum = SpectrumMultiset::compute(spec, budget)?;
    let (spec_lam, spec_gam) = metrics::spectrum_sums(&spectrum);

    let lam_rec = metrics::lambda_sum_recursive_for(family, n, k);
    let lam_closed = metrics::lambda_sum_closed_for(family, n, k);
    let err = relative_error(lam_rec, lam_closed).max(relative_error(lam_closed, spec_lam));
    table.push(spec, "lambda-sum-three-routes", Ok::<_, Error>(within("rel", err, ROUTE_SUM_TOL)));

    let gam_rec = metrics::lambda_sq_sum_recursive_for(family, n, k);
    let gam_closed = metrics::lambda_sq_sum_closed_for(family, n, k);
    let err = relative_error(gam_rec, gam_closed).max(relative_error(gam_closed, spec_gam));
    table.push(spec, "lambda-sq-sum-three-routes", Ok::<_, Error>(within("rel", err, ROUTE_SUM_TOL)));

    let summary = spectrum.summary();
    let err = relative_error(metrics::epsilon_recursive(family, n, k), summary.min_nonzero)
        .max(relative_error(metrics::zeta(family, n, k), summary.max));
    table.push(spec, "extremes-recursion", Ok::<_, Error>(within("rel", err, metrics::ROUTE_TOL)));

    table.push(spec, "fixed-multiplicities", Ok::<_, Error>(fixed_multiplicities(&spectrum)));
    Ok(table)
}

fn fixed_multiplicities(s: &SpectrumMultiset) -> (bool, String) {
    let spec = s.spec();
    let (n, k) = (spec.n, spec.k as u64);
    let kn1 = k.pow(n - 1);
    let tol = 1e-9;
    let expected = match spec.family {
        Family::Hierarchical => vec![(k, (k - 2) * kn1 + 1)],
        Family::Sierpinski => vec![(k, ((k - 2) * kn1 + k) / 2), (k + 2, (k - 2) * (kn1 - 1) / 2)],
    };
    let mut detail = Vec::new();
    let mut ok = true;
    for (value, mult) in expected {
        let got = s.multiplicity_of(value as f64, tol);
        ok &= got == mult;
        detail.push(format!("m({value})={got}/{mult}"));
    }
    (ok, detail.join(" "))
}

/// Noiseless convergence with average conservation, and the delay threshold
/// straddled at ±10%.
pub fn validate_simulation(g: &Graph) -> Result<ValidationTable> {
    let spec = g.spec();
    let (family, n, k) = (spec.family, spec.n, spec.k);
    let mut table = ValidationTable::default();
    let x0: Vec<f64> = sim::random_initial_state(g.num_vertices(), 1).into_iter().map(|v| v + 1.0).collect();
    let avg0 = x0.iter().sum::<f64>() / x0.len() as f64;

    let mut cfg = SimConfig::new(g, SimKind::Noiseless);
    cfg.initial_state = x0.clone();
    cfg.t_end = 20.0 / metrics::epsilon_recursive(family, n, k);
    cfg.stride = 100;
    let outcome = sim::run_noiseless(&cfg).map(|trace| {
        let drift =
            trace.states.iter().map(|x| (x.iter().sum::<f64>() / x.len() as f64 - avg0).abs()).fold(0.0, f64::max);
        let residual = trace.final_state().iter().map(|v| (v - avg0).abs()).fold(0.0, f64::max);
        (drift <= 1e-9 && residual < 1e-6, format!("mean drift {drift:.1e}, residual {residual:.1e}"))
    });
    table.push(spec, "sim-noiseless", outcome);

    let zeta = metrics::zeta(family, n, k);
    let tau_max = metrics::tau_max(zeta);
    let mut cfg = SimConfig::new(g, SimKind::Delayed);
    cfg.initial_state = x0;
    cfg.dt = tau_max / 500.0;
    cfg.t_end = 600.0 / zeta;
    cfg.stride = usize::MAX;
    let outcome = (|| -> Result<(bool, String)> {
        cfg.tau = 450.0 * cfg.dt;
        let below = sim::run_delayed(&cfg)?;
        cfg.tau = 550.0 * cfg.dt;
        let above = sim::run_delayed(&cfg)?;
        Ok((
            !below.diverged && above.diverged,
            format!("0.9 tau_max diverged={}, 1.1 tau_max diverged={}", below.diverged, above.diverged),
        ))
    })();
    table.push(spec, "sim-delay-threshold", outcome);
    Ok(table)
}

/// Full matrix for one spec: analytic routes always, oracle checks within
/// the dense budget, simulation smoke tests on small graphs.
pub fn validate_spec(spec: GraphSpec, budget: &Budget) -> Result<ValidationTable> {
    let mut table = validate_routes(spec, budget)?;
    if budget.check_dense(spec.order()).is_ok() {
        let g = Graph::build(spec, budget)?;
        table.extend(validate_graph(&g, budget)?);
        if g.num_vertices() <= SIM_SMOKE_MAX_VERTICES {
            table.extend(validate_simulation(&g)?);
        }
    }
    Ok(table)
}

/// Runs [`validate_spec`] for both families, `k ∈ {3,4,5}` and
/// `1 <= n <= max_n_per_k`, restricted to graphs within the dense budget.
pub fn validate_all(max_n_per_k: u32, budget: &Budget) -> Result<ValidationTable> {
    let mut table = ValidationTable::default();
    for family in Family::ALL {
        for k in 3..=5u32 {
            for n in 1..=max_n_per_k {
                let spec = GraphSpec::new(family, n, k)?;
                if budget.check_dense(spec.order()).is_err() {
                    break;
                }
                table.extend(validate_spec(spec, budget)?);
            }
        }
    }
    if table.checks.is_empty() {
        return Err(Error::NoChecks);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_spec_passes() {
        let budget = Budget::default();
        for spec in [GraphSpec::hierarchical(2, 3).unwrap(), GraphSpec::sierpinski(2, 3).unwrap()] {
            let table = validate_spec(spec, &budget).unwrap();
            assert!(table.all_passed(), "{}", table.render());
            assert_eq!(table.checks.len(), 4 + 6 + 2);
        }
    }

    #[test]
    fn base_cases_pass() {
        let table = validate_all(1, &Budget::default()).unwrap();
        assert!(table.all_passed(), "{}", table.render());
    }

    #[test]
    fn corrupted_edge_is_caught() {
        let spec = GraphSpec::sierpinski(2, 3).unwrap();
        let budget = Budget::default();
        let good = Graph::build(spec, &budget).unwrap();
        let mut edges = good.edges().to_vec();
        // rewire one edge; vertex and edge counts stay right
        let (u, _) = edges[0];
        let target = (0..9).find(|&w| w != u && !edges.contains(&(u.min(w), u.max(w)))).unwrap();
        edges[0] = (u.min(target), u.max(target));
        let bad = Graph::from_edges(spec, 9, edges).unwrap();
        let table = validate_graph(&bad, &budget).unwrap();
        let failed: Vec<&str> = table.failures().map(|c| c.name).collect();
        assert!(failed.contains(&"spectrum-match"), "{}", table.render());
    }

    #[test]
    fn zero_budget_runs_nothing() {
        assert!(matches!(validate_all(0, &Budget::default()), Err(Error::NoChecks)));
        let tight = Budget { dense: 0, ..Budget::default() };
        assert!(matches!(validate_all(3, &tight), Err(Error::NoChecks)));
    }

    #[test]
    fn render_lists_every_check() {
        let table = validate_routes(GraphSpec::hierarchical(3, 4).unwrap(), &Budget::default()).unwrap();
        let text = table.render();
        assert_eq!(text.lines().count(), table.checks.len() + 2);
        assert!(text.contains("H(3,4)"));
        assert!(text.ends_with("4 checks, 4 passed, 0 failed\n"));
    }
}
