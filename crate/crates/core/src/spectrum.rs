//! Complete Laplacian spectra of `H(n,k)` and `S(n,k)` by spectral
//! decimation, with no matrix diagonalization.
//!
//! Every nonzero eigenvalue of generation `n-1` spawns two eigenvalues of
//! generation `n` as the roots of a quadratic, each inheriting the parent
//! multiplicity; a fixed set of new eigenvalues (value `k`, and `k+2` for
//! Sierpiński graphs) fills the remaining slots.
//!
//! | family       | child quadratic                    | sum       | product |
//! |--------------|------------------------------------|-----------|---------|
//! | hierarchical | `x² - (k+λ)x + λ = 0`              | `k + λ`   | `λ`     |
//! | Sierpiński   | `x² - (k+2)x + λ = 0`              | `k + 2`   | `λ`     |
//!
//! The smaller root is computed as `λ / larger` instead of through the
//! subtractive form, which loses all precision once `λ` is tiny.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Budget, Family, GraphSpec};

/// Tolerance for the hierarchical interlacing check `minus < k-2 < plus`.
pub const INTERLACING_TOL: f64 = 1e-9;

/// How an entry was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// The zero eigenvalue, or a generation-1 eigenvalue.
    Base,
    /// One of the eigenvalues that appear at every generation with a closed-form multiplicity.
    Fixed,
    /// Smaller root of the child quadratic.
    Minus,
    /// Larger root of the child quadratic.
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub value: f64,
    pub multiplicity: u64,
    pub branch: Branch,
    /// Position of the parent entry in the previous generation's sorted
    /// list; 0 for base and fixed entries.
    pub parent: usize,
}

/// Sorted multiset of Laplacian eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumMultiset {
    pub family: Family,
    pub n: u32,
    pub k: u32,
    entries: Vec<SpectrumEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub min_nonzero: f64,
    pub max: f64,
    pub count: u64,
    pub trace: f64,
}

/// Roots of `x² - (k+λ)x + λ`, smaller first.
pub fn hierarchical_children(parent: f64, k: u32) -> (f64, f64) {
    let k = k as f64;
    let sum = k + parent;
    let disc = sum * sum - 4.0 * parent;
    let plus = 0.5 * (sum + disc.sqrt());
    (parent / plus, plus)
}

/// Roots of `x² - (k+2)x + λ`, smaller first. `None` when the discriminant
/// is negative, which cannot happen for a genuine Laplacian eigenvalue of
/// `S(n-1,k)` because those never exceed `k+2`.
pub fn sierpinski_children(parent: f64, k: u32) -> Option<(f64, f64)> {
    let s = k as f64 + 2.0;
    let disc = s * s - 4.0 * parent;
    if disc < 0.0 {
        return None;
    }
    let plus = 0.5 * (s + disc.sqrt());
    Some((parent / plus, plus))
}

fn compare_entries(a: &SpectrumEntry, b: &SpectrumEntry) -> Ordering {
    a.value.total_cmp(&b.value).then(a.branch.cmp(&b.branch)).then(a.parent.cmp(&b.parent))
}

impl SpectrumMultiset {
    /// `{0, k × (k-1)}`, the spectrum of `K_k`, shared by both families at `n = 1`.
    fn base(family: Family, k: u32) -> Self {
        SpectrumMultiset {
            family,
            n: 1,
            k,
            entries: vec![
                SpectrumEntry { value: 0.0, multiplicity: 1, branch: Branch::Base, parent: 0 },
                SpectrumEntry { value: k as f64, multiplicity: (k - 1) as u64, branch: Branch::Base, parent: 0 },
            ],
        }
    }

    pub fn compute(spec: GraphSpec, budget: &Budget) -> Result<Self> {
        match spec.family {
            Family::Hierarchical => hierarchical_spectrum(spec.n, spec.k, budget),
            Family::Sierpinski => sierpinski_spectrum(spec.n, spec.k, budget),
        }
    }

    pub fn entries(&self) -> &[SpectrumEntry] {
        &self.entries
    }

    pub fn spec(&self) -> GraphSpec {
        GraphSpec { family: self.family, n: self.n, k: self.k }
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Multiplicity-weighted sum of the values, i.e. the Laplacian trace `2E`.
    pub fn trace(&self) -> f64 {
        self.entries.iter().map(|e| e.value * e.multiplicity as f64).sum()
    }

    pub fn zero_multiplicity(&self) -> u64 {
        self.entries.iter().filter(|e| e.value == 0.0).map(|e| e.multiplicity).sum()
    }

    /// Total multiplicity of entries within `tol` of `value`.
    pub fn multiplicity_of(&self, value: f64, tol: f64) -> u64 {
        self.entries.iter().filter(|e| (e.value - value).abs() <= tol).map(|e| e.multiplicity).sum()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = &SpectrumEntry> {
        self.entries.iter().filter(|e| e.value != 0.0)
    }

    /// `Σ m / λ^power` over the nonzero entries, compensated.
    pub fn reciprocal_power_sum(&self, power: i32) -> f64 {
        let mut acc = NeumaierSum::default();
        for e in self.nonzero() {
            acc.add(e.multiplicity as f64 / e.value.powi(power));
        }
        acc.total()
    }

    /// One value per eigenvalue, ascending; length `k^n`.
    pub fn expand(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_multiplicity() as usize);
        for e in &self.entries {
            out.extend(std::iter::repeat_n(e.value, e.multiplicity as usize));
        }
        out
    }

    pub fn summary(&self) -> SpectrumSummary {
        spectrum_summary(self)
    }
}

pub fn spectrum_summary(s: &SpectrumMultiset) -> SpectrumSummary {
    let min_nonzero = s.nonzero().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let max = s.entries.iter().map(|e| e.value).fold(0.0, f64::max);
    SpectrumSummary { min_nonzero, max, count: s.total_multiplicity(), trace: s.trace() }
}

/// Upper bound on the number of distinct entries at generation `n`: each
/// nonzero entry splits in two and at most three fresh entries appear.
pub fn max_distinct_entries(n: u32) -> u64 {
    (1..n).fold(2u64, |acc, _| acc.saturating_mul(2).saturating_add(1))
}

fn check_spectrum_args(n: u32, k: u32, budget: &Budget) -> Result<()> {
    GraphSpec::new(Family::Hierarchical, n, k)?;
    budget.check_spectrum_entries(max_distinct_entries(n))
}

fn finish(family: Family, n: u32, k: u32, mut entries: Vec<SpectrumEntry>) -> SpectrumMultiset {
    entries.sort_by(compare_entries);
    SpectrumMultiset { family, n, k, entries }
}

fn zero_entry() -> SpectrumEntry {
    SpectrumEntry { value: 0.0, multiplicity: 1, branch: Branch::Base, parent: 0 }
}

pub fn hierarchical_spectrum(n: u32, k: u32, budget: &Budget) -> Result<SpectrumMultiset> {
    check_spectrum_args(n, k, budget)?;
    let mut current = SpectrumMultiset::base(Family::Hierarchical, k);
    let threshold = k as f64 - 2.0;
    for generation in 2..=n {
        let mut entries = Vec::with_capacity(2 * current.entries.len() + 2);
        entries.push(zero_entry());
        entries.push(SpectrumEntry {
            value: k as f64,
            multiplicity: (k as u64 - 2) * (k as u64).pow(generation - 1) + 1,
            branch: Branch::Fixed,
            parent: 0,
        });
        for (idx, parent) in current.entries.iter().enumerate() {
            if parent.value == 0.0 {
                continue;
            }
            let (minus, plus) = hierarchical_children(parent.value, k);
            if minus >= threshold + INTERLACING_TOL || plus <= threshold - INTERLACING_TOL {
                log::warn!(
                    "H({generation},{k}): children {minus} / {plus} of {} do not straddle {threshold}",
                    parent.value
                );
            }
            for (value, branch) in [(minus, Branch::Minus), (plus, Branch::Plus)] {
                entries.push(SpectrumEntry { value, multiplicity: parent.multiplicity, branch, parent: idx });
            }
        }
        current = finish(Family::Hierarchical, generation, k, entries);
    }
    Ok(current)
}

pub fn sierpinski_spectrum(n: u32, k: u32, budget: &Budget) -> Result<SpectrumMultiset> {
    check_spectrum_args(n, k, budget)?;
    let mut current = SpectrumMultiset::base(Family::Sierpinski, k);
    let kk = k as u64;
    for generation in 2..=n {
        let prev_order = kk.pow(generation - 1);
        let mut entries = Vec::with_capacity(2 * current.entries.len() + 3);
        entries.push(zero_entry());
        entries.push(SpectrumEntry {
            value: k as f64,
            multiplicity: ((kk - 2) * prev_order + kk) / 2,
            branch: Branch::Fixed,
            parent: 0,
        });
        let top = (kk - 2) * (prev_order - 1) / 2;
        if top > 0 {
            entries.push(SpectrumEntry { value: k as f64 + 2.0, multiplicity: top, branch: Branch::Fixed, parent: 1 });
        }
        for (idx, parent) in current.entries.iter().enumerate() {
            if parent.value == 0.0 {
                continue;
            }
            let (minus, plus) = sierpinski_children(parent.value, k).ok_or_else(|| {
                Error::InternalCheck(format!("S({generation},{k}): parent eigenvalue {} exceeds k+2", parent.value))
            })?;
            for (value, branch) in [(minus, Branch::Minus), (plus, Branch::Plus)] {
                entries.push(SpectrumEntry { value, multiplicity: parent.multiplicity, branch, parent: idx });
            }
        }
        current = finish(Family::Sierpinski, generation, k, entries);
    }
    Ok(current)
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
