//! Alternating min-max pilot search.
//!
//! Each iteration updates one pilot: scan its worst side peaks, descend the
//! gradient of either the single largest peak or a weighted sum of the
//! largest few, then renormalise to unit time-domain energy. Pilots are
//! visited round-robin until a whole round moves every preimage by less than
//! `epsilon`, or the iteration budget runs out.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::correlation::{self, energy, peak_gradient_td, peak_scan, LagWindow, Peak};
use crate::error::{Error, Result};
use crate::subspace::ZeroTailSubspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Descend the single largest side peak.
    MaxPeak,
    /// Descend a rank- and component-weighted sum of the largest peaks.
    Weighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepStrategy {
    /// Divide the step by `divisor` whenever the targeted peaks rise; with
    /// `rollback` the offending update is discarded.
    ShrinkOnWorse { divisor: f64, rollback: bool },
    /// `h0 / (1 + iter / tau)`.
    Schedule { tau: f64 },
    /// `gain * F`, clamped to `[h_min, h_max]`.
    CostProportional { gain: f64, h_min: f64, h_max: f64 },
}

impl Default for StepStrategy {
    fn default() -> Self {
        StepStrategy::ShrinkOnWorse { divisor: 2.0, rollback: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    pub n_peaks: usize,
    /// Weight of auto-correlation peaks.
    pub alpha_acf: f64,
    /// Weight of cross-correlation peaks.
    pub alpha_mcf: f64,
    /// Per-rank peak weights; empty means `1/k` for `k = 1..=n_peaks`.
    pub beta: Vec<f64>,
    /// Gradient averaging mix; 1 disables averaging.
    pub learn_rate: f64,
    pub step: StepStrategy,
    pub h0: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::MaxPeak,
            n_peaks: 1,
            alpha_acf: 1.0,
            alpha_mcf: 1.0,
            beta: Vec::new(),
            learn_rate: 1.0,
            step: StepStrategy::default(),
            h0: 1.0,
            epsilon: 1e-6,
            max_iters: 20_000,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_peaks == 0 {
            return bad("n_peaks must be positive");
        }
        if !(self.h0 > 0.0) {
            return bad("h0 must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(0.0..=1.0).contains(&self.learn_rate) {
            return bad("learn_rate must lie in [0, 1]");
        }
        if self.alpha_acf < 0.0 || self.alpha_mcf < 0.0 {
            return bad("alpha weights must be non-negative");
        }
        if !self.beta.is_empty() {
            if self.beta.len() < self.n_peaks {
                return bad("beta needs at least n_peaks entries");
            }
            if self.beta.iter().any(|b| *b < 0.0) || self.beta.windows(2).any(|w| w[1] > w[0]) {
                return bad("beta must be non-negative and non-increasing");
            }
        }
        match self.step {
            StepStrategy::ShrinkOnWorse { divisor, .. } if !(divisor > 1.0) => {
                bad("shrink divisor must exceed 1")
            }
            StepStrategy::Schedule { tau } if !(tau > 0.0) => bad("schedule tau must be positive"),
            StepStrategy::CostProportional { gain, h_min, h_max }
                if !(gain > 0.0 && h_min > 0.0 && h_max >= h_min) =>
            {
                bad("cost-proportional step needs gain > 0 and 0 < h_min <= h_max")
            }
            _ => Ok(()),
        }
    }

    pub fn beta_weights(&self) -> Vec<f64> {
        if self.beta.is_empty() {
            (1..=self.n_peaks).map(|k| 1.0 / k as f64).collect()
        } else {
            self.beta.clone()
        }
    }

    fn alpha(&self, peak: &Peak) -> f64 {
        match peak.component {
            correlation::Component::Acf => self.alpha_acf,
            correlation::Component::Mcf(_) => self.alpha_mcf,
        }
    }
}

/// Preimages together with their frequency- and time-domain pilots.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotSet {
    preimages: Vec<Vec<Complex64>>,
    fd_pilots: Vec<Vec<Complex64>>,
    td_pilots: Vec<Vec<Complex64>>,
}

impl PilotSet {
    /// Derive FD/TD pilots from preimages as given (no normalisation).
    pub fn from_preimages(sub: &ZeroTailSubspace, preimages: Vec<Vec<Complex64>>) -> Result<Self> {
        let fd_pilots = preimages
            .iter()
            .map(|x| sub.to_frequency_domain(x))
            .collect::<Result<Vec<_>>>()?;
        let td_pilots = preimages
            .iter()
            .map(|x| sub.to_time_domain(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { preimages, fd_pilots, td_pilots })
    }

    pub fn len(&self) -> usize {
        self.preimages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preimages.is_empty()
    }

    pub fn preimages(&self) -> &[Vec<Complex64>] {
        &self.preimages
    }

    pub fn fd_pilots(&self) -> &[Vec<Complex64>] {
        &self.fd_pilots
    }

    pub fn td_pilots(&self) -> &[Vec<Complex64>] {
        &self.td_pilots
    }

    pub fn replace(&mut self, sub: &ZeroTailSubspace, index: usize, x: Vec<Complex64>) -> Result<()> {
        self.fd_pilots[index] = sub.to_frequency_domain(&x)?;
        self.td_pilots[index] = sub.to_time_domain(&x)?;
        self.preimages[index] = x;
        Ok(())
    }

    /// Largest windowed side peak over every pilot and component.
    pub fn worst_peak(&self, window: &LagWindow) -> f64 {
        (0..self.len())
            .filter_map(|p| peak_scan(&self.td_pilots, p, window, 1).first().map(|pk| pk.value))
            .fold(0.0, f64::max)
    }
}

/// Scale a preimage so its time-domain image has unit energy.
pub fn normalize_unit_energy(sub: &ZeroTailSubspace, x: &mut [Complex64]) -> Result<()> {
    let e = energy(&sub.to_time_domain(x)?);
    if e == 0.0 {
        return Err(Error::ZeroInput);
    }
    let s = 1.0 / e.sqrt();
    x.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

/// Seeded i.i.d. standard complex Gaussian preimages at unit TD energy.
pub fn init_pilots(sub: &ZeroTailSubspace, n_pilots: usize, seed: u64) -> Result<PilotSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = sub.dims().preimage_dim();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut preimages = Vec::with_capacity(n_pilots);
    for _ in 0..n_pilots {
        let mut x: Vec<Complex64> = (0..dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * scale, im * scale)
            })
            .collect();
        normalize_unit_energy(sub, &mut x)?;
        preimages.push(x);
    }
    PilotSet::from_preimages(sub, preimages)
}

/// `learn_rate * current + (1 - learn_rate) * previous`.
pub fn apply_gradient_averaging(
    current: &[Complex64],
    previous: &[Complex64],
    learn_rate: f64,
) -> Result<Vec<Complex64>> {
    if current.len() != previous.len() {
        return Err(Error::DimensionMismatch { expected: current.len(), got: previous.len() });
    }
    Ok(current
        .iter()
        .zip(previous)
        .map(|(g, p)| g * learn_rate + p * (1.0 - learn_rate))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepState {
    pub h_prev: f64,
    pub h0: f64,
    pub iter: usize,
    pub f_now: f64,
    pub f_prev: f64,
}

pub fn next_step_size(strategy: &StepStrategy, state: &StepState) -> f64 {
    match *strategy {
        StepStrategy::ShrinkOnWorse { divisor, .. } => {
            if state.f_now > state.f_prev {
                state.h_prev / divisor
            } else {
                state.h_prev
            }
        }
        StepStrategy::Schedule { tau } => state.h0 / (1.0 + state.iter as f64 / tau),
        StepStrategy::CostProportional { gain, h_min, h_max } => (gain * state.f_now).clamp(h_min, h_max),
    }
}

/// Mutable per-pilot optimiser state.
#[derive(Clone, Debug)]
pub struct PilotState {
    pub h: f64,
    pub avg_grad: Option<Vec<Complex64>>,
}

impl PilotState {
    pub fn new(h0: f64) -> Self {
        Self { h: h0, avg_grad: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub pilot: usize,
    pub targets: Vec<Peak>,
    pub cost_before: f64,
    pub cost_after: f64,
    pub step_size: f64,
    pub accepted: bool,
    /// `||x_new - x_old||` of the attempted update, also for rolled-back steps.
    pub displacement: f64,
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub preimage: Vec<Complex64>,
    pub record: StepRecord,
}

/// The same (component, lag) targets evaluated on a modified set.
fn reevaluate(td_pilots: &[Vec<Complex64>], index: usize, targets: &[Peak]) -> Vec<Peak> {
    let y = &td_pilots[index];
    let e = energy(y);
    targets
        .iter()
        .map(|t| {
            let other = match t.component {
                correlation::Component::Acf => y,
                correlation::Component::Mcf(o) => &td_pilots[o],
            };
            let value = correlation::correlation_at(y, other, t.lag).norm_sqr() / (e * e);
            Peak { value, ..*t }
        })
        .collect()
}

/// Cost of a target list: the single peak for `MaxPeak`, the weighted sum
/// otherwise.
fn objective(method: Method, config: &OptimizerConfig, peaks: &[Peak]) -> f64 {
    match method {
        Method::MaxPeak => peaks.first().map_or(0.0, |p| p.value),
        Method::Weighted => {
            let beta = config.beta_weights();
            peaks.iter().zip(&beta).map(|(p, b)| config.alpha(p) * b * p.value).sum()
        }
    }
}

/// One descent step on pilot `index`. `iteration` is the global update count
/// (used by the scheduled step size).
fn descent_step(
    method: Method,
    sub: &ZeroTailSubspace,
    set: &PilotSet,
    index: usize,
    window: &LagWindow,
    config: &OptimizerConfig,
    state: &mut PilotState,
    iteration: usize,
) -> Result<StepOutcome> {
    let n_peaks = match method {
        Method::MaxPeak => 1,
        Method::Weighted => config.n_peaks,
    };
    let x_old = &set.preimages()[index];
    let targets = peak_scan(set.td_pilots(), index, window, n_peaks);
    let cost_before = objective(method, config, &targets);
    if targets.is_empty() {
        return Ok(StepOutcome {
            preimage: x_old.clone(),
            record: StepRecord {
                pilot: index,
                targets,
                cost_before,
                cost_after: cost_before,
                step_size: 0.0,
                accepted: true,
                displacement: 0.0,
            },
        });
    }

    let n = sub.dims().n_fft;
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    match method {
        Method::MaxPeak => {
            w = peak_gradient_td(set.td_pilots(), index, &targets[0])?;
        }
        Method::Weighted => {
            let beta = config.beta_weights();
            for (peak, b) in targets.iter().zip(&beta) {
                let weight = config.alpha(peak) * b;
                if weight == 0.0 {
                    continue;
                }
                let g = peak_gradient_td(set.td_pilots(), index, peak)?;
                for (acc, v) in w.iter_mut().zip(g) {
                    *acc += v * weight;
                }
            }
        }
    }
    // conj(g) as a column: the descent direction.
    let grad = sub.adjoint(&w)?;
    let direction = match &state.avg_grad {
        Some(prev) if config.learn_rate < 1.0 => apply_gradient_averaging(&grad, prev, config.learn_rate)?,
        _ => grad,
    };

    let h = match config.step {
        StepStrategy::ShrinkOnWorse { .. } => state.h,
        _ => next_step_size(
            &config.step,
            &StepState { h_prev: state.h, h0: config.h0, iter: iteration, f_now: cost_before, f_prev: cost_before },
        ),
    };

    let mut x_new: Vec<Complex64> = x_old.iter().zip(&direction).map(|(x, d)| x - d * h).collect();
    normalize_unit_energy(sub, &mut x_new)?;
    let displacement = x_new
        .iter()
        .zip(x_old)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    state.avg_grad = Some(direction);

    let mut trial = set.td_pilots().to_vec();
    trial[index] = sub.to_time_domain(&x_new)?;
    let retargeted = reevaluate(&trial, index, &targets);
    let cost_after = objective(method, config, &retargeted);

    let mut accepted = true;
    if let StepStrategy::ShrinkOnWorse { rollback, .. } = config.step {
        state.h = next_step_size(
            &config.step,
            &StepState { h_prev: state.h, h0: config.h0, iter: iteration, f_now: cost_after, f_prev: cost_before },
        );
        if rollback && cost_after > cost_before {
            accepted = false;
        }
    } else {
        state.h = h;
    }

    let preimage = if accepted { x_new } else { x_old.clone() };
    Ok(StepOutcome {
        preimage,
        record: StepRecord {
            pilot: index,
            targets,
            cost_before,
            cost_after: if accepted { cost_after } else { cost_before },
            step_size: h,
            accepted,
            displacement,
        },
    })
}

/// Step against the single largest side peak of pilot `index`.
pub fn descent_step_maxpeak(
    sub: &ZeroTailSubspace,
    set: &PilotSet,
    index: usize,
    window: &LagWindow,
    config: &OptimizerConfig,
    state: &mut PilotState,
    iteration: usize,
) -> Result<StepOutcome> {
    descent_step(Method::MaxPeak, sub, set, index, window, config, state, iteration)
}

/// Step against `sum alpha_i beta_k F_(k)` over the `n_peaks` largest peaks.
pub fn descent_step_weighted(
    sub: &ZeroTailSubspace,
    set: &PilotSet,
    index: usize,
    window: &LagWindow,
    config: &OptimizerConfig,
    state: &mut PilotState,
    iteration: usize,
) -> Result<StepOutcome> {
    descent_step(Method::Weighted, sub, set, index, window, config, state, iteration)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub pilot: usize,
    /// Largest side peak over the whole set after this update.
    pub worst_peak: f64,
    pub worst_peak_db: f64,
    pub step_size: f64,
    pub accepted: bool,
    pub wall_ms: f64,
    /// PAPR of the updated pilot in dB, when PAPR reduction is interleaved.
    pub papr_db: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Running minimum of the set-wide worst peak.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.records
            .iter()
            .map(|r| {
                best = best.min(r.worst_peak);
                best
            })
            .collect()
    }

    /// Same records with wall-clock times zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Vec<TraceRecord> {
        self.records.iter().map(|r| TraceRecord { wall_ms: 0.0, ..r.clone() }).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let with_papr = self.records.iter().any(|r| r.papr_db.is_some());
        write!(out, "iteration,pilot,worst_peak_db,step_size,wall_ms")?;
        if with_papr {
            write!(out, ",papr_db")?;
        }
        writeln!(out)?;
        for r in &self.records {
            write!(out, "{},{},{},{},{}", r.iteration, r.pilot, r.worst_peak_db, r.step_size, r.wall_ms)?;
            if with_papr {
                write!(out, ",{}", r.papr_db.map_or(String::new(), |v| v.to_string()))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub pilots: PilotSet,
    pub trace: ConvergenceTrace,
    pub converged: bool,
    /// Pilot updates performed.
    pub iterations: usize,
    pub initial_worst_peak: f64,
    pub final_worst_peak: f64,
}

/// Called after every correlation step with the pilot index and its updated
/// preimage. May modify the preimage; returns an optional PAPR (dB) for the
/// trace.
pub type PostUpdate<'a> = dyn FnMut(&ZeroTailSubspace, usize, &mut Vec<Complex64>) -> Result<Option<f64>> + 'a;

pub fn synthesize(
    sub: &ZeroTailSubspace,
    window: &LagWindow,
    n_pilots: usize,
    config: &OptimizerConfig,
) -> Result<Synthesis> {
    synthesize_with(sub, window, n_pilots, config, &mut |_, _, _| Ok(None))
}

pub fn synthesize_with(
    sub: &ZeroTailSubspace,
    window: &LagWindow,
    n_pilots: usize,
    config: &OptimizerConfig,
    post_update: &mut PostUpdate<'_>,
) -> Result<Synthesis> {
    config.validate()?;
    window.validate()?;
    if window.outer() as usize >= sub.dims().n_fft {
        return Err(Error::InvalidWindow(format!(
            "t_max/2 = {} must be below n_fft = {}",
            window.outer(),
            sub.dims().n_fft
        )));
    }
    let mut set = init_pilots(sub, n_pilots, config.seed)?;
    let initial_worst_peak = set.worst_peak(window);
    let mut trace = ConvergenceTrace::default();
    if config.max_iters == 0 || n_pilots == 0 {
        return Ok(Synthesis {
            pilots: set,
            trace,
            converged: n_pilots == 0,
            iterations: 0,
            initial_worst_peak,
            final_worst_peak: initial_worst_peak,
        });
    }

    let started = Instant::now();
    let mut states: Vec<PilotState> = (0..n_pilots).map(|_| PilotState::new(config.h0)).collect();
    let mut best = (initial_worst_peak, set.clone());
    let mut iteration = 0;
    let mut converged = false;

    'rounds: while iteration < config.max_iters {
        let mut round_disp: f64 = 0.0;
        for p in 0..n_pilots {
            if iteration >= config.max_iters {
                break 'rounds;
            }
            let outcome = descent_step(config.method, sub, &set, p, window, config, &mut states[p], iteration)?;
            let mut x = outcome.preimage;
            let x_prev = set.preimages()[p].clone();
            let papr_db = post_update(sub, p, &mut x)?;
            let hook_disp = x
                .iter()
                .zip(&x_prev)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            set.replace(sub, p, x)?;
            round_disp = round_disp.max(outcome.record.displacement.max(hook_disp));

            let worst = set.worst_peak(window);
            if worst < best.0 {
                best = (worst, set.clone());
            }
            trace.records.push(TraceRecord {
                iteration,
                pilot: p,
                worst_peak: worst,
                worst_peak_db: 10.0 * worst.log10(),
                step_size: outcome.record.step_size,
                accepted: outcome.record.accepted,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
                papr_db,
            });
            iteration += 1;
        }
        debug_assert!(set_invariants_hold(sub, &set), "pilot lost unit energy or zero tail");
        if round_disp < config.epsilon {
            converged = true;
            break;
        }
    }

    let pilots = if converged { set } else { best.1 };
    let final_worst_peak = pilots.worst_peak(window);
    Ok(Synthesis { pilots, trace, converged, iterations: iteration, initial_worst_peak, final_worst_peak })
}

/// Unit TD energy and a vanishing tail for every pilot of the set.
pub fn set_invariants_hold(sub: &ZeroTailSubspace, set: &PilotSet) -> bool {
    let active = sub.dims().active_len();
    set.td_pilots().iter().all(|td| {
        let peak = td.iter().map(|v| v.norm()).fold(0.0, f64::max);
        (energy(td) - 1.0).abs() <= 1e-9 && td[active..].iter().all(|v| v.norm() <= 1e-9 * peak)
    })
}
