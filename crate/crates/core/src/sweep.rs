//! Metric tables over a grid of `(family, k, n)`.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{self, METRICS_COLUMNS};
use crate::graph::{Budget, Family, GraphSpec};
use crate::metrics::{full_report, MetricsReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidSweep(format!("unknown format {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub families: Vec<Family>,
    pub k_values: Vec<u32>,
    pub n_range: RangeInclusive<u32>,
    /// Metric columns to emit; empty means all.
    pub outputs: Vec<String>,
    pub format: OutputFormat,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSweep(msg));
        if self.families.is_empty() {
            return bad("no families given".into());
        }
        if self.k_values.is_empty() {
            return bad("no k values given".into());
        }
        if let Some(k) = self.k_values.iter().find(|&&k| k < 3) {
            return bad(format!("k = {k} is below 3"));
        }
        if self.n_range.is_empty() {
            return bad(format!("empty n range {}..={}", self.n_range.start(), self.n_range.end()));
        }
        if *self.n_range.start() == 0 {
            return bad("n starts at 1".into());
        }
        if let Some(c) = self.outputs.iter().find(|c| !METRICS_COLUMNS.contains(&c.as_str())) {
            return bad(format!("unknown output column {c}"));
        }
        Ok(())
    }

    /// Grid points in output order: family, then k, then n.
    pub fn specs(&self) -> Result<Vec<GraphSpec>> {
        let mut specs = Vec::new();
        for &family in &self.families {
            for &k in &self.k_values {
                for n in self.n_range.clone() {
                    specs.push(GraphSpec::new(family, n, k)?);
                }
            }
        }
        Ok(specs)
    }
}

/// One report per grid point, computed in parallel and returned in
/// [`SweepSpec::specs`] order.
pub fn cmd_sweep(spec: &SweepSpec, budget: &Budget) -> Result<Vec<MetricsReport>> {
    spec.validate()?;
    spec.specs()?.into_par_iter().map(|s| full_report(s, budget)).collect()
}

pub fn render_sweep(spec: &SweepSpec, reports: &[MetricsReport]) -> Result<String> {
    match spec.format {
        OutputFormat::Json => export::metrics_json(reports),
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            if spec.outputs.is_empty() {
                export::write_metrics_csv(reports, &mut buf)?;
            } else {
                // identify rows even when only metric columns were requested
                let mut columns: Vec<&str> = vec!["family", "n", "k"];
                for c in &spec.outputs {
                    if !columns.contains(&c.as_str()) {
                        columns.push(c);
                    }
                }
                export::write_metrics_csv_columns(reports, &columns, &mut buf)?;
            }
            Ok(String::from_utf8(buf).expect("csv output is ASCII"))
        }
    }
}
