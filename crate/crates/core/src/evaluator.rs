//! Metrics for synthesised pilot sets.
//!
//! Main-to-side ratios are power ratios in dB taken inside the lag window.
//! The mixture metric correlates each pilot against the superposition of the
//! whole set, which is the simultaneous-exchange worst case. Multipath is
//! modelled by seeded tapped-delay-line channels.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::correlation::{cyclic_xcorr, energy, lag_index, CorrelationProfile, LagWindow};
use crate::error::{Error, Result};
use crate::optimizer::PilotSet;
use crate::papr::papr_of;
use crate::subspace::SubspaceDims;

/// Slack on the mixture-vs-pair sanity bound: `10 log10(2)` plus margin.
pub const MIXTURE_SANITY_SLACK_DB: f64 = 3.1;

pub fn main_to_side_db(profile: &CorrelationProfile) -> Result<f64> {
    if !profile.has_side_set() {
        return Err(Error::NoSidePeaks);
    }
    Ok(10.0 * (profile.main_peak / profile.max_side_peak).log10())
}

fn weighted_sum(tds: &[Vec<Complex64>], weights: &[f64], delays: &[i64]) -> Vec<Complex64> {
    let n = tds[0].len();
    let mut mix = vec![Complex64::new(0.0, 0.0); n];
    for ((td, &w), &d) in tds.iter().zip(weights).zip(delays) {
        let s = lag_index(d, n);
        for (m, acc) in mix.iter_mut().enumerate() {
            *acc += td[(m + n - s) % n] * w;
        }
    }
    mix
}

/// Per-pilot correlation profiles against the weighted mixture of the set.
/// Pilot `i` enters the mixture delayed by `delays[i]` (zero when `None`),
/// and its profile is referenced to that delay.
pub fn mixture_profiles(
    set: &PilotSet,
    window: &LagWindow,
    weights: &[f64],
    delays: Option<&[i64]>,
) -> Result<Vec<CorrelationProfile>> {
    let tds = set.td_pilots();
    if weights.len() != tds.len() {
        return Err(Error::DimensionMismatch { expected: tds.len(), got: weights.len() });
    }
    let zeros = vec![0; tds.len()];
    let delays = delays.unwrap_or(&zeros);
    if delays.len() != tds.len() {
        return Err(Error::DimensionMismatch { expected: tds.len(), got: delays.len() });
    }
    if tds.is_empty() {
        return Ok(Vec::new());
    }
    let mix = weighted_sum(tds, weights, delays);
    tds.iter()
        .zip(delays)
        .map(|(td, &d)| {
            let e = energy(td);
            let corr = cyclic_xcorr(td, &mix)?;
            Ok(CorrelationProfile::from_correlation(&corr, e * e, d, window, true, None))
        })
        .collect()
}

/// MainPeak-to-SidePeak (dB) of every pilot against the mixture.
pub fn mixture_metric(
    set: &PilotSet,
    window: &LagWindow,
    weights: &[f64],
    delays: Option<&[i64]>,
) -> Result<Vec<f64>> {
    mixture_profiles(set, window, weights, delays)?.iter().map(main_to_side_db).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay: usize,
    pub gain: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub taps: Vec<Tap>,
    #[serde(default)]
    pub path_loss_db: f64,
}

impl ChannelModel {
    pub fn identity() -> Self {
        Self { taps: vec![Tap { delay: 0, gain: Complex64::new(1.0, 0.0) }], path_loss_db: 0.0 }
    }

    /// Seeded multipath channel: a unit line-of-sight tap at delay 0 and
    /// `n_taps - 1` echoes at distinct delays in `1..=max_delay` with complex
    /// Gaussian gains whose power falls off by 3 dB per tap.
    pub fn random(seed: u64, n_taps: usize, max_delay: usize, path_loss_db: f64) -> Result<Self> {
        if n_taps == 0 {
            return Err(Error::InvalidChannel("need at least one tap".into()));
        }
        if n_taps > 1 && max_delay < n_taps - 1 {
            return Err(Error::InvalidChannel(format!(
                "cannot place {} echoes within max_delay {max_delay}",
                n_taps - 1
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut taps = vec![Tap { delay: 0, gain: Complex64::new(1.0, 0.0) }];
        while taps.len() < n_taps {
            let delay = rng.random_range(1..=max_delay);
            if taps.iter().any(|t| t.delay == delay) {
                continue;
            }
            let k = taps.len() as f64;
            let amp = (10f64.powf(-0.3 * k) / 2.0).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            taps.push(Tap { delay, gain: Complex64::new(re * amp, im * amp) });
        }
        Ok(Self { taps, path_loss_db })
    }

    pub fn validate(&self, window: &LagWindow) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::InvalidChannel("channel has no taps".into()));
        }
        if let Some(t) = self.taps.iter().find(|t| t.delay as i64 >= window.outer().max(1)) {
            return Err(Error::InvalidChannel(format!(
                "tap delay {} not below t_max/2 = {}",
                t.delay,
                window.outer()
            )));
        }
        if !self.path_loss_db.is_finite() {
            return Err(Error::InvalidChannel("path loss must be finite".into()));
        }
        Ok(())
    }

    /// Delay of the strongest tap (earliest on ties).
    pub fn reference_delay(&self) -> usize {
        let mut best = self.taps[0];
        for t in &self.taps[1..] {
            let (a, b) = (t.gain.norm_sqr(), best.gain.norm_sqr());
            if a > b || (a == b && t.delay < best.delay) {
                best = *t;
            }
        }
        best.delay
    }

    /// Cyclic convolution with the taps, scaled by the path-loss amplitude.
    pub fn apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        let n = y.len();
        let amp = 10f64.powf(-self.path_loss_db / 20.0);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for tap in &self.taps {
            let g = tap.gain * amp;
            let d = tap.delay % n;
            for (m, acc) in out.iter_mut().enumerate() {
                *acc += y[(m + n - d) % n] * g;
            }
        }
        out
    }
}

/// Per-pilot profiles of each clean pilot against the sum of all pilots
/// passed through their channels. The main peak sits at the strongest own
/// tap; lags within the inner exclusion zone of any own tap belong to the
/// desired response and are left out of the side set.
pub fn channel_overlap_profiles(
    set: &PilotSet,
    channels: &[ChannelModel],
    window: &LagWindow,
) -> Result<Vec<CorrelationProfile>> {
    let tds = set.td_pilots();
    if channels.len() != tds.len() {
        return Err(Error::InvalidChannel(format!(
            "expected {} channels, got {}",
            tds.len(),
            channels.len()
        )));
    }
    for ch in channels {
        ch.validate(window)?;
    }
    if tds.is_empty() {
        return Ok(Vec::new());
    }
    let n = tds[0].len();
    let mut rx = vec![Complex64::new(0.0, 0.0); n];
    for (td, ch) in tds.iter().zip(channels) {
        for (acc, v) in rx.iter_mut().zip(ch.apply(td)) {
            *acc += v;
        }
    }
    tds.iter()
        .zip(channels)
        .map(|(td, ch)| {
            let e = energy(td);
            let corr = cyclic_xcorr(td, &rx)?;
            let lags: Vec<i64> = window.mcf_lags().collect();
            let values: Vec<f64> = lags.iter().map(|&l| corr[lag_index(l, n)].norm_sqr() / (e * e)).collect();
            let excluded: Vec<bool> = lags
                .iter()
                .map(|&l| ch.taps.iter().any(|t| (l - t.delay as i64).abs() <= window.inner()))
                .collect();
            let main_peak = corr[lag_index(ch.reference_delay() as i64, n)].norm_sqr() / (e * e);
            let mut max_side_peak = f64::NEG_INFINITY;
            let mut max_side_lag: i64 = 0;
            for ((&l, &v), &ex) in lags.iter().zip(&values).zip(&excluded) {
                if !ex && (v > max_side_peak || (v == max_side_peak && l.abs() < max_side_lag.abs())) {
                    max_side_peak = v;
                    max_side_lag = l;
                }
            }
            Ok(CorrelationProfile { lags, values, excluded, main_peak, max_side_peak, max_side_lag })
        })
        .collect()
}

pub fn channel_overlap_eval(set: &PilotSet, channels: &[ChannelModel], window: &LagWindow) -> Result<Vec<f64>> {
    channel_overlap_profiles(set, channels, window)?.iter().map(main_to_side_db).collect()
}

/// Slot reduction (%) against a baseline of three simultaneous pairs per slot.
pub fn slot_savings(n_pilots: usize) -> f64 {
    100.0 * (1.0 - 3.0 / n_pilots as f64)
}

/// Zero-tail duration (us) left by a band-split baseline occupying
/// `occupied_fraction` of `n_sc` carriers.
pub fn baseline_zero_tail_us(n_sc: usize, occupied_fraction: f64, delta_f: f64, n_fft: usize) -> f64 {
    n_sc as f64 * (1.0 - occupied_fraction) / (delta_f * n_fft as f64) * 1e6
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeConversions {
    /// Timing precision `(1 + t_min) / (2 df n_fft)`, ns.
    pub precision_ns: f64,
    /// Largest clock offset covered, `t_max / (2 df n_fft)`, us.
    pub max_offset_us: f64,
    /// Zero-tail duration `t_zero / (df n_fft)`, us.
    pub tail_us: f64,
}

pub fn time_conversions(dims: &SubspaceDims, window: &LagWindow, delta_f: f64) -> TimeConversions {
    let sample = 1.0 / (delta_f * dims.n_fft as f64);
    TimeConversions {
        precision_ns: (1.0 + window.t_min as f64) / 2.0 * sample * 1e9,
        max_offset_us: window.t_max as f64 / 2.0 * sample * 1e6,
        tail_us: dims.t_zero as f64 * sample * 1e6,
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    /// Per-pilot mixture gains; equal unit gains when `None`.
    pub mixture_weights: Option<Vec<f64>>,
    pub mixture_delays: Option<Vec<i64>>,
    pub channels: Option<Vec<ChannelModel>>,
    pub sanity_check: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_pilots: usize,
    pub acf_db: Vec<f64>,
    /// `mcf_db[p][q]`: 1 over the largest windowed cross peak, dB; `None` on
    /// the diagonal.
    pub mcf_db: Vec<Vec<Option<f64>>>,
    pub mixture_db: Vec<f64>,
    pub mixture_worst_db: f64,
    pub mixture_mean_db: f64,
    pub channel_db: Option<Vec<f64>>,
    /// PAPR over the non-tail samples, dB.
    pub papr_db: Vec<f64>,
    /// PAPR over the full symbol, dB.
    pub papr_full_db: Vec<f64>,
    pub slot_savings_pct: Option<f64>,
    /// Whether every pilot satisfies the mixture-vs-best-pair bound.
    pub sanity_ok: Option<bool>,
    pub time: Option<TimeConversions>,
}

pub fn evaluate(
    dims: &SubspaceDims,
    set: &PilotSet,
    window: &LagWindow,
    options: &EvalOptions,
) -> Result<EvalReport> {
    let n = set.len();
    let tds = set.td_pilots();
    let acf_db = tds
        .iter()
        .map(|y| main_to_side_db(&CorrelationProfile::acf(y, window)?))
        .collect::<Result<Vec<_>>>()?;
    let mut mcf_db = vec![vec![None; n]; n];
    for p in 0..n {
        for q in 0..n {
            if p != q {
                mcf_db[p][q] = Some(main_to_side_db(&CorrelationProfile::cross(&tds[p], &tds[q], window)?)?);
            }
        }
    }
    let weights = options.mixture_weights.clone().unwrap_or_else(|| vec![1.0; n]);
    let mixture_db = mixture_metric(set, window, &weights, options.mixture_delays.as_deref())?;
    let mixture_worst_db = mixture_db.iter().copied().fold(f64::INFINITY, f64::min);
    let mixture_mean_db = if n == 0 { f64::NAN } else { mixture_db.iter().sum::<f64>() / n as f64 };
    let channel_db = match &options.channels {
        Some(ch) => Some(channel_overlap_eval(set, ch, window)?),
        None => None,
    };
    let active = dims.active_len();
    let papr_db = tds
        .iter()
        .map(|y| Ok(10.0 * papr_of(&y[..active])?.log10()))
        .collect::<Result<Vec<_>>>()?;
    let papr_full_db = tds
        .iter()
        .map(|y| Ok(10.0 * papr_of(y)?.log10()))
        .collect::<Result<Vec<_>>>()?;
    let sanity_ok = options.sanity_check.then(|| {
        (0..n).all(|p| {
            let best_pair = mcf_db[p].iter().flatten().copied().fold(f64::INFINITY, f64::min);
            mixture_db[p] <= best_pair + MIXTURE_SANITY_SLACK_DB
        })
    });
    Ok(EvalReport {
        n_pilots: n,
        acf_db,
        mcf_db,
        mixture_db,
        mixture_worst_db,
        mixture_mean_db,
        channel_db,
        papr_db,
        papr_full_db,
        slot_savings_pct: (n >= 3).then(|| slot_savings(n)),
        sanity_ok,
        time: None,
    })
}

impl EvalReport {
    /// Aligned text table; dB figures to one decimal.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:>5} {:>9} {:>12} {:>13} {:>9}", "pilot", "acf_db", "worst_mcf_db", "mixture_db", "papr_db");
        if self.channel_db.is_some() {
            let _ = write!(s, " {:>10}", "channel_db");
        }
        s.push('\n');
        for p in 0..self.n_pilots {
            let worst_mcf = self.mcf_db[p].iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let _ = write!(
                s,
                "{:>5} {:>9.1} {:>12.1} {:>13.1} {:>9.1}",
                p, self.acf_db[p], worst_mcf, self.mixture_db[p], self.papr_db[p]
            );
            if let Some(ch) = &self.channel_db {
                let _ = write!(s, " {:>10.1}", ch[p]);
            }
            s.push('\n');
        }
        let _ = writeln!(s, "mixture worst {:.1} dB, mean {:.1} dB", self.mixture_worst_db, self.mixture_mean_db);
        if let Some(v) = self.slot_savings_pct {
            let _ = writeln!(s, "slot savings vs 3-pair baseline: {v:.1}%");
        }
        if let Some(ok) = self.sanity_ok {
            let _ = writeln!(s, "mixture sanity bound: {}", if ok { "ok" } else { "VIOLATED" });
        }
        if let Some(t) = &self.time {
            let _ = writeln!(
                s,
                "precision {:.1} ns, max offset {:.3} us, zero tail {:.2} us",
                t.precision_ns, t.max_offset_us, t.tail_us
            );
        }
        s
    }
}
