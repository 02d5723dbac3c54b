//! Direct simulation of the four consensus systems on a constructed graph.
//!
//! * noiseless: `ẋ = -L x`
//! * uniform delay: `ẋ(t) = -L x(t - τ)`, constant pre-history `x(0)`
//! * first-order noise: `ẋ = -L x + w`
//! * second-order noise: `ẋ = v`, `v̇ = -L x - L v + w`
//!
//! Deterministic parts use fixed-step explicit Euler and the noisy systems
//! Euler–Maruyama. Each Monte-Carlo trial draws from its own ChaCha stream
//! selected by `(seed, trial)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics;

/// Largest admissible `dt · ζ`.
pub const MAX_STEP_ZETA: f64 = 0.1;
/// Divergence is declared once `max |x_i|` exceeds this multiple of `‖x(0)‖`.
pub const BLOW_UP_FACTOR: f64 = 1e6;

/// Stream reserved for drawing initial conditions; trials use `0..M`.
const INITIAL_STATE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimKind {
    Noiseless,
    Delayed,
    FirstOrderNoisy,
    SecondOrderNoisy,
}

#[derive(Debug, Clone)]
pub struct SimConfig<'a> {
    pub graph: &'a Graph,
    pub kind: SimKind,
    pub dt: f64,
    pub t_end: f64,
    /// Uniform delay; only read for [`SimKind::Delayed`].
    pub tau: f64,
    /// Standard deviation of the white noise per unit time.
    pub noise_intensity: f64,
    pub seed: u64,
    pub initial_state: Vec<f64>,
    pub initial_velocity: Option<Vec<f64>>,
    /// Record every `stride`-th step (plus the first and last).
    pub stride: usize,
}

impl<'a> SimConfig<'a> {
    /// Zero initial state, unit noise, `dt = 0.02/ζ`, `t_end = 10`.
    pub fn new(graph: &'a Graph, kind: SimKind) -> Self {
        let spec = graph.spec();
        let zeta = metrics::zeta(spec.family, spec.n, spec.k);
        SimConfig {
            graph,
            kind,
            dt: 0.02 / zeta,
            t_end: 10.0,
            tau: 0.0,
            noise_intensity: 1.0,
            seed: 0,
            initial_state: vec![0.0; graph.num_vertices()],
            initial_velocity: None,
            stride: 1,
        }
    }

    /// Exact largest eigenvalue for the graph's spec.
    pub fn zeta(&self) -> f64 {
        let spec = self.graph.spec();
        metrics::zeta(spec.family, spec.n, spec.k)
    }

    pub fn delay_steps(&self) -> usize {
        (self.tau / self.dt).round() as usize
    }

    pub fn num_steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.num_vertices();
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        let limit = MAX_STEP_ZETA / self.zeta();
        if self.dt > limit * (1.0 + 1e-12) {
            return bad(format!("dt = {} exceeds 0.1/zeta = {limit}", self.dt));
        }
        if self.t_end.is_nan() || self.t_end < self.dt {
            return bad(format!("t_end = {} is shorter than dt", self.t_end));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be non-negative, got {}", self.tau));
        }
        if self.kind == SimKind::Delayed {
            let steps = self.tau / self.dt;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                return bad(format!("tau = {} is not a multiple of dt = {}", self.tau, self.dt));
            }
        }
        if self.noise_intensity.is_nan() || self.noise_intensity < 0.0 {
            return bad("noise intensity must be non-negative".into());
        }
        if self.initial_state.len() != n {
            return bad(format!("initial state has {} entries, graph has {n}", self.initial_state.len()));
        }
        if let Some(v) = &self.initial_velocity {
            if v.len() != n {
                return bad(format!("initial velocity has {} entries, graph has {n}", v.len()));
            }
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        Ok(())
    }

    fn expect_kind(&self, kind: SimKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::InvalidConfig(format!("expected a {kind:?} config, got {:?}", self.kind)));
        }
        self.validate()
    }
}

/// Uniform `[-1, 1)` initial state drawn from a stream reserved for it.
pub fn random_initial_state(num_vertices: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INITIAL_STATE_STREAM);
    let dist = Uniform::new(-1.0, 1.0).expect("valid range");
    (0..num_vertices).map(|_| dist.sample(&mut rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceEstimate {
    pub value: f64,
    /// Standard error across trials; `None` with a single trial.
    pub stderr: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub kind: SimKind,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    pub tau: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub velocities: Option<Vec<Vec<f64>>>,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
    pub empirical_coherence: Option<CoherenceEstimate>,
}

impl SimTrace {
    fn new(cfg: &SimConfig<'_>) -> Self {
        SimTrace {
            kind: cfg.kind,
            seed: cfg.seed,
            dt: cfg.dt,
            t_end: cfg.t_end,
            tau: cfg.tau,
            times: Vec::new(),
            states: Vec::new(),
            velocities: None,
            diverged: false,
            divergence_time: None,
            empirical_coherence: None,
        }
    }

    fn record(&mut self, step: usize, dt: f64, x: &[f64], v: Option<&[f64]>) {
        self.times.push(step as f64 * dt);
        self.states.push(x.to_vec());
        if let Some(v) = v {
            self.velocities.get_or_insert_with(Vec::new).push(v.to_vec());
        }
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `(1/N) Σ (x_i - x̄)²`.
pub fn deviation_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|&xi| (xi - m) * (xi - m)).sum::<f64>() / x.len() as f64
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, &v| acc.max(v.abs()))
}

fn blow_up_threshold(x0: &[f64]) -> f64 {
    let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        BLOW_UP_FACTOR * norm
    } else {
        BLOW_UP_FACTOR
    }
}

fn should_record(step: usize, steps: usize, stride: usize) -> bool {
    step.is_multiple_of(stride) || step == steps
}

pub fn run_noiseless(cfg: &SimConfig<'_>) -> Result<SimTrace> {
    cfg.expect_kind(SimKind::Noiseless)?;
    let g = cfg.graph;
    let steps = cfg.num_steps();
    let threshold = blow_up_threshold(&cfg.initial_state);
    let mut trace = SimTrace::new(cfg);
    let mut x = cfg.initial_state.clone();
    let mut lx = vec![0.0; x.len()];
    trace.record(0, cfg.dt, &x, None);
    for step in 1..=steps {
        g.apply_laplacian(&x, &mut lx);
        for (xi, li) in x.iter_mut().zip(&lx) {
            *xi -= cfg.dt * li;
        }
        let blown = max_abs(&x) > threshold;
        if should_record(step, steps, cfg.stride) || blown {
            trace.record(step, cfg.dt, &x, None);
        }
        if blown {
            trace.diverged = true;
            trace.divergence_time = Some(step as f64 * cfg.dt);
            break;
        }
    }
    Ok(trace)
}

/// Method of steps with a ring buffer holding the last `τ/dt + 1` states.
pub fn run_delayed(cfg: &SimConfig<'_>) -> Result<SimTrace> {
    cfg.expect_kind(SimKind::Delayed)?;
    let g = cfg.graph;
    let steps = cfg.num_steps();
    let delay = cfg.delay_steps();
    let slots = delay + 1;
    let threshold = blow_up_threshold(&cfg.initial_state);
    let mut trace = SimTrace::new(cfg);
    // slot m % slots holds x_m; untouched slots still hold the pre-history x(0)
    let mut ring = vec![cfg.initial_state.clone(); slots];
    let mut lx = vec![0.0; g.num_vertices()];
    trace.record(0, cfg.dt, &cfg.initial_state, None);
    for step in 1..=steps {
        let current = (step - 1) % slots;
        let target = step % slots;
        // the delayed state x_{m-d} lives in the slot about to be overwritten
        g.apply_laplacian(&ring[target], &mut lx);
        if target == current {
            for (xi, li) in ring[target].iter_mut().zip(&lx) {
                *xi -= cfg.dt * li;
            }
        } else {
            let (src, dst) = if current < target {
                let (a, b) = ring.split_at_mut(target);
                (&a[current], &mut b[0])
            } else {
                let (a, b) = ring.split_at_mut(current);
                (&b[0], &mut a[target])
            };
            for ((d, &s), li) in dst.iter_mut().zip(src.iter()).zip(&lx) {
                *d = s - cfg.dt * li;
            }
        }
        let x = &ring[target];
        let blown = max_abs(x) > threshold;
        if should_record(step, steps, cfg.stride) || blown {
            trace.record(step, cfg.dt, x, None);
        }
        if blown {
            trace.diverged = true;
            trace.divergence_time = Some(step as f64 * cfg.dt);
            break;
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisyRun {
    /// Trajectory of trial 0.
    pub trace: SimTrace,
    pub estimate: CoherenceEstimate,
    /// Window-averaged deviation variance of each trial, in trial order.
    pub per_trial: Vec<f64>,
}

fn estimate(per_trial: &[f64]) -> CoherenceEstimate {
    let m = per_trial.len();
    let value = mean(per_trial);
    let stderr = (m > 1).then(|| {
        let var = per_trial.iter().map(|v| (v - value) * (v - value)).sum::<f64>() / (m - 1) as f64;
        (var / m as f64).sqrt()
    });
    CoherenceEstimate { value, stderr, trials: m }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs one trial; returns the mean deviation variance over the steady-state
/// window `[t_end/2, t_end]` and, if requested, the recorded trace.
fn first_order_trial(cfg: &SimConfig<'_>, trial: usize, record: bool) -> (f64, Option<SimTrace>) {
    let g = cfg.graph;
    let steps = cfg.num_steps();
    let window_start = steps / 2;
    let noise = cfg.noise_intensity * cfg.dt.sqrt();
    let mut rng = trial_rng(cfg.seed, trial);
    let mut x = cfg.initial_state.clone();
    let mut lx = vec![0.0; x.len()];
    let mut trace = record.then(|| SimTrace::new(cfg));
    if let Some(t) = trace.as_mut() {
        t.record(0, cfg.dt, &x, None);
    }
    let mut acc = 0.0;
    for step in 1..=steps {
        g.apply_laplacian(&x, &mut lx);
        for (xi, li) in x.iter_mut().zip(&lx) {
            let w: f64 = StandardNormal.sample(&mut rng);
            *xi += -cfg.dt * li + noise * w;
        }
        if step >= window_start {
            acc += deviation_variance(&x);
        }
        if let Some(t) = trace.as_mut() {
            if should_record(step, steps, cfg.stride) {
                t.record(step, cfg.dt, &x, None);
            }
        }
    }
    (acc / (steps - window_start + 1) as f64, trace)
}

fn second_order_trial(cfg: &SimConfig<'_>, trial: usize, record: bool) -> (f64, Option<SimTrace>) {
    let g = cfg.graph;
    let n = g.num_vertices();
    let steps = cfg.num_steps();
    let window_start = steps / 2;
    let noise = cfg.noise_intensity * cfg.dt.sqrt();
    let mut rng = trial_rng(cfg.seed, trial);
    let mut x = cfg.initial_state.clone();
    let mut v = cfg.initial_velocity.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut sum = vec![0.0; n];
    let mut l_sum = vec![0.0; n];
    let mut trace = record.then(|| SimTrace::new(cfg));
    if let Some(t) = trace.as_mut() {
        t.record(0, cfg.dt, &x, Some(&v));
    }
    let mut acc = 0.0;
    for step in 1..=steps {
        for ((s, &xi), &vi) in sum.iter_mut().zip(&x).zip(&v) {
            *s = xi + vi;
        }
        g.apply_laplacian(&sum, &mut l_sum);
        for i in 0..n {
            let w: f64 = StandardNormal.sample(&mut rng);
            x[i] += cfg.dt * v[i];
            v[i] += -cfg.dt * l_sum[i] + noise * w;
        }
        if step >= window_start {
            acc += deviation_variance(&x);
        }
        if let Some(t) = trace.as_mut() {
            if should_record(step, steps, cfg.stride) {
                t.record(step, cfg.dt, &x, Some(&v));
            }
        }
    }
    (acc / (steps - window_start + 1) as f64, trace)
}

fn run_trials<F>(cfg: &SimConfig<'_>, num_trials: usize, trial_fn: F) -> Result<NoisyRun>
where
    F: Fn(&SimConfig<'_>, usize, bool) -> (f64, Option<SimTrace>) + Sync,
{
    if num_trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    let results: Vec<(f64, Option<SimTrace>)> =
        (0..num_trials).into_par_iter().map(|trial| trial_fn(cfg, trial, trial == 0)).collect();
    let per_trial: Vec<f64> = results.iter().map(|r| r.0).collect();
    let estimate = estimate(&per_trial);
    let mut trace = results.into_iter().next().and_then(|r| r.1).expect("trial 0 records a trace");
    trace.empirical_coherence = Some(estimate);
    Ok(NoisyRun { trace, estimate, per_trial })
}

/// Empirical first-order coherence: time average of the deviation variance
/// over `[t_end/2, t_end]`, averaged over independent trials.
pub fn run_first_order_noisy(cfg: &SimConfig<'_>, num_trials: usize) -> Result<NoisyRun> {
    cfg.expect_kind(SimKind::FirstOrderNoisy)?;
    run_trials(cfg, num_trials, first_order_trial)
}

/// Empirical second-order coherence from the position deviations; noise
/// enters the velocities only.
pub fn run_second_order_noisy(cfg: &SimConfig<'_>, num_trials: usize) -> Result<NoisyRun> {
    cfg.expect_kind(SimKind::SecondOrderNoisy)?;
    run_trials(cfg, num_trials, second_order_trial)
}

/// Slope of `ln ‖x - x̄1‖` against time over the recorded samples with
/// `t >= from_time`, negated: the observed exponential decay rate.
pub fn decay_rate(trace: &SimTrace, from_time: f64) -> Option<f64> {
    let points: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.states)
        .filter(|(t, _)| **t >= from_time)
        .filter_map(|(&t, x)| {
            let dev = (deviation_variance(x) * x.len() as f64).sqrt();
            (dev > 0.0).then(|| (t, dev.ln()))
        })
        .collect();
    linear_fit(&points).map(|(slope, _)| -slope)
}

/// Least-squares `(slope, intercept)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Bracket of the empirical stability transition of the delayed system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayBracket {
    /// Largest delay tried that did not diverge.
    pub stable_tau: f64,
    /// Smallest delay tried that diverged.
    pub unstable_tau: f64,
    pub evaluations: usize,
}

impl DelayBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.stable_tau + self.unstable_tau)
    }
}

/// Bisects over whole delay steps between `lo_steps` (must not diverge) and
/// `hi_steps` (must diverge), using [`run_delayed`]'s divergence flag.
/// `template` supplies everything but the delay.
pub fn bisect_delay_threshold(template: &SimConfig<'_>, lo_steps: usize, hi_steps: usize) -> Result<DelayBracket> {
    let diverges = |steps: usize| -> Result<bool> {
        let mut cfg = template.clone();
        cfg.kind = SimKind::Delayed;
        cfg.tau = steps as f64 * cfg.dt;
        cfg.stride = usize::MAX;
        Ok(run_delayed(&cfg)?.diverged)
    };
    let mut evaluations = 2;
    if diverges(lo_steps)? || !diverges(hi_steps)? {
        return Err(Error::InvalidConfig(format!(
            "delays {lo_steps} and {hi_steps} steps do not bracket the stability boundary"
        )));
    }
    let (mut lo, mut hi) = (lo_steps, hi_steps);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        evaluations += 1;
        if diverges(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(DelayBracket { stable_tau: lo as f64 * template.dt, unstable_tau: hi as f64 * template.dt, evaluations })
}
