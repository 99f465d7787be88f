//! Low-PAPR constraint.
//!
//! Peaks are attacked in time domain: the largest samples of `A x` form a
//! sparse gradient, which the least-squares inverse of `A` carries back to
//! the preimage space. The update therefore stays inside the zero-tail
//! subspace.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlation::{energy, LagWindow};
use crate::error::{Error, Result};
use crate::optimizer::{normalize_unit_energy, synthesize_with, OptimizerConfig, Synthesis};
use crate::subspace::ZeroTailSubspace;

/// Threshold below which samples are never treated as peaks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum MagnitudeFloor {
    Absolute(f64),
    /// Multiple of the mean sample magnitude over the non-tail samples.
    MeanRelative(f64),
}

impl Default for MagnitudeFloor {
    fn default() -> Self {
        MagnitudeFloor::MeanRelative(1.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaprConfig {
    pub n_papr_reductions: usize,
    pub n_peaks_td: usize,
    pub h_step_papr: f64,
    pub magnitude_floor: MagnitudeFloor,
}

impl Default for PaprConfig {
    fn default() -> Self {
        Self {
            n_papr_reductions: 1,
            n_peaks_td: 4,
            h_step_papr: 0.1,
            magnitude_floor: MagnitudeFloor::default(),
        }
    }
}

impl PaprConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_peaks_td == 0 {
            return Err(Error::Config("n_peaks_td must be positive".into()));
        }
        if !(self.h_step_papr > 0.0) {
            return Err(Error::Config("h_step_papr must be positive".into()));
        }
        let floor_ok = match self.magnitude_floor {
            MagnitudeFloor::Absolute(v) | MagnitudeFloor::MeanRelative(v) => v > 0.0,
        };
        if !floor_ok {
            return Err(Error::Config("magnitude_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Peak-to-average power ratio of a sample block.
pub fn papr_of(samples: &[Complex64]) -> Result<f64> {
    let e = energy(samples);
    if e == 0.0 {
        return Err(Error::ZeroInput);
    }
    let peak = samples.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    Ok(peak / (e / samples.len() as f64))
}

/// PAPR of `A x` over the `n_fft - t_zero` samples ahead of the zero tail.
pub fn papr_cost(sub: &ZeroTailSubspace, x: &[Complex64]) -> Result<f64> {
    let y = sub.to_time_domain(x)?;
    papr_of(&y[..sub.dims().active_len()])
}

/// PAPR of `A x` over all `n_fft` samples, tail included.
pub fn papr_cost_full(sub: &ZeroTailSubspace, x: &[Complex64]) -> Result<f64> {
    papr_of(&sub.to_time_domain(x)?)
}

/// Sparse time-domain gradient: the `n_peaks_td` largest-magnitude active
/// samples above the floor keep their value, all others are zero.
pub fn td_peak_gradient(y: &[Complex64], active_len: usize, config: &PaprConfig) -> Vec<Complex64> {
    let active = &y[..active_len];
    let floor = match config.magnitude_floor {
        MagnitudeFloor::Absolute(v) => v,
        MagnitudeFloor::MeanRelative(k) => {
            k * active.iter().map(|v| v.norm()).sum::<f64>() / active_len as f64
        }
    };
    let mut idx: Vec<usize> = (0..active_len).filter(|&k| active[k].norm() > floor).collect();
    idx.sort_by(|&a, &b| active[b].norm().total_cmp(&active[a].norm()).then(a.cmp(&b)));
    idx.truncate(config.n_peaks_td);
    let mut g = vec![Complex64::new(0.0, 0.0); y.len()];
    for k in idx {
        g[k] = y[k];
    }
    g
}

/// One reduction pass; `x` is returned unchanged when no sample clears the
/// floor.
pub fn papr_reduction_pass(sub: &ZeroTailSubspace, x: &[Complex64], config: &PaprConfig) -> Result<Vec<Complex64>> {
    let y = sub.to_time_domain(x)?;
    let g_td = td_peak_gradient(&y, sub.dims().active_len(), config);
    if g_td.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Ok(x.to_vec());
    }
    let g_fd = sub.pinv_apply(&g_td)?;
    let mut out: Vec<Complex64> = x.iter().zip(&g_fd).map(|(a, g)| a - g * config.h_step_papr).collect();
    normalize_unit_energy(sub, &mut out)?;
    Ok(out)
}

/// `n_papr_reductions` passes in a row.
pub fn papr_reduce(sub: &ZeroTailSubspace, x: &[Complex64], config: &PaprConfig) -> Result<Vec<Complex64>> {
    let mut cur = x.to_vec();
    for _ in 0..config.n_papr_reductions {
        cur = papr_reduction_pass(sub, &cur, config)?;
    }
    Ok(cur)
}

/// Correlation-driven synthesis with PAPR passes after every pilot update.
/// The trace carries the updated pilot's PAPR in dB.
pub fn interleaved_synthesis(
    sub: &ZeroTailSubspace,
    window: &LagWindow,
    n_pilots: usize,
    config: &OptimizerConfig,
    papr: &PaprConfig,
) -> Result<Synthesis> {
    papr.validate()?;
    synthesize_with(sub, window, n_pilots, config, &mut |sub, _, x| {
        if papr.n_papr_reductions > 0 {
            *x = papr_reduce(sub, x, papr)?;
        }
        Ok(Some(10.0 * papr_cost(sub, x)?.log10()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::init_pilots;
    use crate::subspace::{CarrierPlacement, SubspaceDims};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn flat_envelope_papr_is_one() {
        let y: Vec<Complex64> = (0..32).map(|k| Complex64::from_polar(1.0, 0.3 * k as f64)).collect();
        assert!((papr_of(&y).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(papr_of(&[c(0.0, 0.0); 4]), Err(Error::ZeroInput)));
    }

    #[test]
    fn impulse_papr_is_n_fft() {
        let dims = SubspaceDims::new(16, 16, 0).unwrap();
        let sub = ZeroTailSubspace::build(dims, &CarrierPlacement::Explicit((0..16).collect())).unwrap();
        let x = vec![c(1.0, 0.0); 16];
        assert!((papr_cost(&sub, &x).unwrap() - 16.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_is_sparse_and_above_floor() {
        let y: Vec<Complex64> = (0..20).map(|k| c(k as f64, 0.0)).collect();
        let cfg = PaprConfig { n_peaks_td: 3, magnitude_floor: MagnitudeFloor::Absolute(16.5), ..Default::default() };
        let g = td_peak_gradient(&y, 18, &cfg);
        let nz: Vec<usize> = (0..20).filter(|&k| g[k].norm() > 0.0).collect();
        assert_eq!(nz, vec![17]);
        let cfg = PaprConfig { n_peaks_td: 3, magnitude_floor: MagnitudeFloor::Absolute(1.0), ..Default::default() };
        let g = td_peak_gradient(&y, 18, &cfg);
        let nz: Vec<usize> = (0..20).filter(|&k| g[k].norm() > 0.0).collect();
        assert_eq!(nz, vec![15, 16, 17]);
        assert_eq!(g[16], y[16]);
    }

    #[test]
    fn flat_input_is_unchanged() {
        let dims = SubspaceDims::new(16, 16, 0).unwrap();
        let sub = ZeroTailSubspace::build(dims, &CarrierPlacement::Explicit((0..16).collect())).unwrap();
        // A single occupied bin gives a constant-envelope tone.
        let mut x = vec![c(0.0, 0.0); 16];
        x[3] = c(1.0, 0.0);
        let out = papr_reduction_pass(&sub, &x, &PaprConfig::default()).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn zero_passes_is_identity() {
        let sub = ZeroTailSubspace::build(SubspaceDims::new(64, 32, 8).unwrap(), &CarrierPlacement::ContiguousCentered)
            .unwrap();
        let set = init_pilots(&sub, 1, 5).unwrap();
        let cfg = PaprConfig { n_papr_reductions: 0, ..Default::default() };
        assert_eq!(papr_reduce(&sub, &set.preimages()[0], &cfg).unwrap(), set.preimages()[0]);
    }

    #[test]
    fn dominant_peak_is_reduced() {
        let sub = ZeroTailSubspace::build(SubspaceDims::new(64, 32, 8).unwrap(), &CarrierPlacement::ContiguousCentered)
            .unwrap();
        // Mostly a pinv-projected spike at sample 10, plus a little noise.
        let mut spike = vec![c(0.0, 0.0); 64];
        spike[10] = c(1.0, 0.0);
        let noise = init_pilots(&sub, 1, 8).unwrap();
        let mut x: Vec<Complex64> = sub
            .pinv_apply(&spike)
            .unwrap()
            .iter()
            .zip(&noise.preimages()[0])
            .map(|(a, b)| a + b * 0.05)
            .collect();
        normalize_unit_energy(&sub, &mut x).unwrap();
        let cfg = PaprConfig { n_peaks_td: 1, h_step_papr: 0.05, ..Default::default() };
        let before = papr_cost(&sub, &x).unwrap();
        let after = papr_cost(&sub, &papr_reduction_pass(&sub, &x, &cfg).unwrap()).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn papr_matches_direct_formula() {
        let sub = ZeroTailSubspace::build(SubspaceDims::new(64, 32, 8).unwrap(), &CarrierPlacement::ContiguousCentered)
            .unwrap();
        let set = init_pilots(&sub, 3, 21).unwrap();
        for (x, y) in set.preimages().iter().zip(set.td_pilots()) {
            let p: Vec<f64> = y[..56].iter().map(|v| v.re * v.re + v.im * v.im).collect();
            let direct = p.iter().cloned().fold(0.0, f64::max) * 56.0 / p.iter().sum::<f64>();
            assert!((papr_cost(&sub, x).unwrap() - direct).abs() <= 1e-12 * direct);
            let full: Vec<f64> = y.iter().map(|v| v.norm_sqr()).collect();
            let direct_full = full.iter().cloned().fold(0.0, f64::max) * 64.0 / full.iter().sum::<f64>();
            assert!((papr_cost_full(&sub, x).unwrap() - direct_full).abs() <= 1e-12 * direct_full);
        }
    }

    #[test]
    fn invalid_config() {
        assert!(PaprConfig { n_peaks_td: 0, ..Default::default() }.validate().is_err());
        assert!(PaprConfig { magnitude_floor: MagnitudeFloor::Absolute(0.0), ..Default::default() }
            .validate()
            .is_err());
    }
}
