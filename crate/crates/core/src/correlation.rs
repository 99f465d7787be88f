//! Cyclic correlation, the ACF/MCF side-peak costs and their gradients.
//!
//! Conventions used throughout:
//!
//! * `S_n` delays a vector cyclically by `n` samples, `(S_n y)[m] = y[m - n]`.
//! * The correlation of `a` against `b` at lag `n` is
//!   `R_ab(n) = sum_m conj(a[m - n]) b[m] = (S_n a)^H b`, so a copy of `a`
//!   delayed by `d` inside `b` peaks at lag `d`.
//! * With `y = A x` and `E = ||y||^2`, the ACF cost is
//!   `F1(x, n) = |R_yy(n)|^2 / E^2` and the MCF cost against others `y_i` is
//!   `F2(x, n) = sum_i |R_{y y_i}(n)|^2 / E^2`.
//! * Gradients are Wirtinger derivatives `g = dF/dx` returned as row vectors.
//!   For a real cost the steepest-descent update is `x <- x - h * conj(g)`.
//!   Internally each gradient is a time-domain vector `w` with
//!   `conj(g) = A^H w`.

use std::cell::RefCell;
use std::cmp::Ordering;

use num_complex::Complex64;
use rustfft::FftPlanner;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::subspace::ZeroTailSubspace;

/// Lengths above this use the FFT path in [`cyclic_xcorr`].
pub const DIRECT_XCORR_MAX_LEN: usize = 64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    plan.process(buf);
}

/// Unnormalised forward DFT.
pub(crate) fn spectrum(a: &[Complex64]) -> Vec<Complex64> {
    let mut buf = a.to_vec();
    fft_in_place(&mut buf, false);
    buf
}

/// Cyclic correlation from two unnormalised spectra.
pub(crate) fn xcorr_from_spectra(sa: &[Complex64], sb: &[Complex64]) -> Vec<Complex64> {
    let n = sa.len();
    let mut buf: Vec<Complex64> = sa.iter().zip(sb).map(|(a, b)| a.conj() * b).collect();
    fft_in_place(&mut buf, true);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

fn xcorr_direct(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    (0..n)
        .map(|lag| (0..n).map(|m| a[(m + n - lag) % n].conj() * b[m]).sum())
        .collect()
}

/// Cyclic cross-correlation `R_ab(n)` for every lag `n` in `0..len`.
/// Negative lags live at index `len + n`.
pub fn cyclic_xcorr(a: &[Complex64], b: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.len() <= DIRECT_XCORR_MAX_LEN {
        Ok(xcorr_direct(a, b))
    } else {
        Ok(xcorr_from_spectra(&spectrum(a), &spectrum(b)))
    }
}

/// Index of a signed lag in a length-`len` cyclic correlation vector.
pub fn lag_index(lag: i64, len: usize) -> usize {
    lag.rem_euclid(len as i64) as usize
}

/// `S_n y`: cyclic delay by `lag` samples.
pub fn cyclic_delay(y: &[Complex64], lag: i64) -> Vec<Complex64> {
    let n = y.len();
    let s = lag_index(lag, n);
    (0..n).map(|m| y[(m + n - s) % n]).collect()
}

pub(crate) fn energy(y: &[Complex64]) -> f64 {
    y.iter().map(|v| v.norm_sqr()).sum()
}

/// Lag window `[-t_max/2, t_max/2]` with inner exclusion `[-t_min/2, t_min/2]`
/// for auto-correlation. Half-widths round down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LagWindow {
    pub t_min: usize,
    pub t_max: usize,
}

impl LagWindow {
    pub fn new(t_min: usize, t_max: usize) -> Result<Self> {
        let w = Self { t_min, t_max };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 || self.t_min >= self.t_max {
            return Err(Error::InvalidWindow(format!(
                "need 0 <= t_min < t_max and t_max > 0, got t_min={} t_max={}",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    pub fn outer(&self) -> i64 {
        (self.t_max / 2) as i64
    }

    pub fn inner(&self) -> i64 {
        (self.t_min / 2) as i64
    }

    pub fn in_acf_set(&self, lag: i64) -> bool {
        lag.abs() <= self.outer() && lag.abs() > self.inner()
    }

    pub fn in_mcf_set(&self, lag: i64) -> bool {
        lag.abs() <= self.outer()
    }

    pub fn acf_lags(&self) -> impl Iterator<Item = i64> + '_ {
        (-self.outer()..=self.outer()).filter(|&l| self.in_acf_set(l))
    }

    pub fn mcf_lags(&self) -> impl Iterator<Item = i64> + '_ {
        -self.outer()..=self.outer()
    }
}

/// Cost component a side peak belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    /// Auto-correlation of the pilot being optimised.
    Acf,
    /// Cross-correlation against pilot `other` of the set.
    Mcf(usize),
}

impl Component {
    /// Numeric id: 1 for the ACF, `2 + other` for cross terms.
    pub fn id(&self) -> usize {
        match self {
            Component::Acf => 1,
            Component::Mcf(o) => 2 + o,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub component: Component,
    pub lag: i64,
    pub value: f64,
}

/// Descending by value; ties go to the smaller `|lag|`, then the smaller
/// component id, then the smaller signed lag.
fn peak_order(a: &Peak, b: &Peak) -> Ordering {
    b.value
        .total_cmp(&a.value)
        .then(a.lag.abs().cmp(&b.lag.abs()))
        .then(a.component.cmp(&b.component))
        .then(a.lag.cmp(&b.lag))
}

/// Power correlation profile over a lag window.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationProfile {
    pub lags: Vec<i64>,
    pub values: Vec<f64>,
    /// Lags outside the suppression set (the inner zone of an ACF-style profile).
    pub excluded: Vec<bool>,
    pub main_peak: f64,
    pub max_side_peak: f64,
    pub max_side_lag: i64,
}

impl CorrelationProfile {
    /// Build from a full cyclic correlation. `values` are `|corr|^2 / norm`,
    /// lags are relative to `reference` and span the window. With
    /// `exclude_inner` the window's inner zone is left out of the side set;
    /// the main peak is the value at `reference` unless `main_override` is
    /// given.
    pub fn from_correlation(
        corr: &[Complex64],
        norm: f64,
        reference: i64,
        window: &LagWindow,
        exclude_inner: bool,
        main_override: Option<f64>,
    ) -> Self {
        let n = corr.len();
        let value_at = |lag: i64| corr[lag_index(reference + lag, n)].norm_sqr() / norm;
        let lags: Vec<i64> = window.mcf_lags().collect();
        let values: Vec<f64> = lags.iter().map(|&l| value_at(l)).collect();
        let excluded: Vec<bool> = lags
            .iter()
            .map(|&l| exclude_inner && !window.in_acf_set(l))
            .collect();
        let mut max_side_peak = f64::NEG_INFINITY;
        let mut max_side_lag: i64 = 0;
        for ((&l, &v), &ex) in lags.iter().zip(&values).zip(&excluded) {
            if ex {
                continue;
            }
            if v > max_side_peak || (v == max_side_peak && l.abs() < max_side_lag.abs()) {
                max_side_peak = v;
                max_side_lag = l;
            }
        }
        let main_peak = main_override.unwrap_or_else(|| value_at(0));
        Self { lags, values, excluded, main_peak, max_side_peak, max_side_lag }
    }

    /// ACF profile of a time-domain pilot, normalised so lag 0 equals 1.
    pub fn acf(y: &[Complex64], window: &LagWindow) -> Result<Self> {
        let e = energy(y);
        if e == 0.0 {
            return Err(Error::ZeroInput);
        }
        let corr = cyclic_xcorr(y, y)?;
        Ok(Self::from_correlation(&corr, e * e, 0, window, true, Some(1.0)))
    }

    /// Cross-correlation profile of `y` against `other`, normalised by both
    /// energies. The main peak is the ACF reference, 1.
    pub fn cross(y: &[Complex64], other: &[Complex64], window: &LagWindow) -> Result<Self> {
        let (ey, eo) = (energy(y), energy(other));
        if ey == 0.0 || eo == 0.0 {
            return Err(Error::ZeroInput);
        }
        let corr = cyclic_xcorr(y, other)?;
        Ok(Self::from_correlation(&corr, ey * eo, 0, window, false, Some(1.0)))
    }

    pub fn has_side_set(&self) -> bool {
        self.excluded.iter().any(|e| !e)
    }
}

/// `F1` evaluated on a time-domain vector at any lag (no window check).
pub fn acf_cost_td(y: &[Complex64], lag: i64) -> Result<f64> {
    let e = energy(y);
    if e == 0.0 {
        return Err(Error::ZeroInput);
    }
    let r = correlation_at(y, y, lag);
    Ok(r.norm_sqr() / (e * e))
}

/// `F2` on time-domain vectors at any lag (no window check).
pub fn mcf_cost_td(y: &[Complex64], others: &[&[Complex64]], lag: i64) -> Result<f64> {
    let e = energy(y);
    if e == 0.0 {
        return Err(Error::ZeroInput);
    }
    Ok(others
        .iter()
        .map(|b| correlation_at(y, b, lag).norm_sqr())
        .sum::<f64>()
        / (e * e))
}

/// Single lag of `R_ab`, by direct sum.
pub fn correlation_at(a: &[Complex64], b: &[Complex64], lag: i64) -> Complex64 {
    let n = a.len();
    let s = lag_index(lag, n);
    (0..n).map(|m| a[(m + n - s) % n].conj() * b[m]).sum()
}

/// ACF cost `F1(x, n)` for a lag in the window's ACF suppression set.
pub fn acf_cost(sub: &ZeroTailSubspace, x: &[Complex64], lag: i64, window: &LagWindow) -> Result<f64> {
    if !window.in_acf_set(lag) {
        return Err(Error::LagOutsideWindow { lag });
    }
    acf_cost_td(&sub.to_time_domain(x)?, lag)
}

/// MCF cost `F2(x, n)` summed over `others` (preimages). Empty `others`
/// yields 0.
pub fn mcf_cost(
    sub: &ZeroTailSubspace,
    x: &[Complex64],
    others: &[Vec<Complex64>],
    lag: i64,
    window: &LagWindow,
) -> Result<f64> {
    if !window.in_mcf_set(lag) {
        return Err(Error::LagOutsideWindow { lag });
    }
    if others.is_empty() {
        return Ok(0.0);
    }
    let y = sub.to_time_domain(x)?;
    let tds = others
        .iter()
        .map(|o| sub.to_time_domain(o))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[Complex64]> = tds.iter().map(|v| v.as_slice()).collect();
    mcf_cost_td(&y, &refs, lag)
}

/// Time-domain form `w` of the ACF gradient (`conj(dF1/dx) = A^H w`):
/// `w = (R S_n y + conj(R) S_{-n} y) / E^2 - 2 |R|^2 / E^3 y`.
pub fn acf_gradient_td(y: &[Complex64], lag: i64) -> Result<Vec<Complex64>> {
    let e = energy(y);
    if e == 0.0 {
        return Err(Error::ZeroInput);
    }
    let n = y.len();
    let r = correlation_at(y, y, lag);
    let s = lag_index(lag, n);
    let e2 = e * e;
    let tail = 2.0 * r.norm_sqr() / (e2 * e);
    Ok((0..n)
        .map(|m| {
            let delayed = y[(m + n - s) % n];
            let advanced = y[(m + s) % n];
            (r * delayed + r.conj() * advanced) / e2 - y[m] * tail
        })
        .collect())
}

/// Time-domain form of the gradient of `|R_{y b}(n)|^2 / E^2` for one other:
/// `w = conj(C) S_{-n} b / E^2 - 2 |C|^2 / E^3 y`.
pub fn mcf_gradient_td_single(y: &[Complex64], other: &[Complex64], lag: i64) -> Result<Vec<Complex64>> {
    let e = energy(y);
    if e == 0.0 {
        return Err(Error::ZeroInput);
    }
    let n = y.len();
    let c = correlation_at(y, other, lag);
    let s = lag_index(lag, n);
    let e2 = e * e;
    let tail = 2.0 * c.norm_sqr() / (e2 * e);
    Ok((0..n)
        .map(|m| c.conj() * other[(m + s) % n] / e2 - y[m] * tail)
        .collect())
}

/// Row-vector gradient from its time-domain form.
pub(crate) fn row_gradient(sub: &ZeroTailSubspace, w: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(sub.adjoint(w)?.into_iter().map(|v| v.conj()).collect())
}

/// `dF1/dx` as a row vector.
pub fn acf_gradient(
    sub: &ZeroTailSubspace,
    x: &[Complex64],
    lag: i64,
    window: &LagWindow,
) -> Result<Vec<Complex64>> {
    if !window.in_acf_set(lag) {
        return Err(Error::LagOutsideWindow { lag });
    }
    let y = sub.to_time_domain(x)?;
    row_gradient(sub, &acf_gradient_td(&y, lag)?)
}

/// `dF2/dx` as a row vector, summed over `others` (preimages).
pub fn mcf_gradient(
    sub: &ZeroTailSubspace,
    x: &[Complex64],
    others: &[Vec<Complex64>],
    lag: i64,
    window: &LagWindow,
) -> Result<Vec<Complex64>> {
    if !window.in_mcf_set(lag) {
        return Err(Error::LagOutsideWindow { lag });
    }
    let y = sub.to_time_domain(x)?;
    let mut w = vec![Complex64::new(0.0, 0.0); y.len()];
    for o in others {
        let b = sub.to_time_domain(o)?;
        for (acc, v) in w.iter_mut().zip(mcf_gradient_td_single(&y, &b, lag)?) {
            *acc += v;
        }
    }
    row_gradient(sub, &w)
}

/// The `n_peaks` largest side peaks seen by pilot `index`: its ACF over the
/// ACF suppression set and its cross-correlation with every other pilot over
/// the MCF set, each other pilot reported separately.
pub fn peak_scan(td_pilots: &[Vec<Complex64>], index: usize, window: &LagWindow, n_peaks: usize) -> Vec<Peak> {
    let mut peaks = all_peaks(td_pilots, index, window);
    peaks.sort_by(peak_order);
    peaks.truncate(n_peaks);
    peaks
}

/// Every (component, lag) value in the suppression sets of pilot `index`.
pub fn all_peaks(td_pilots: &[Vec<Complex64>], index: usize, window: &LagWindow) -> Vec<Peak> {
    let y = &td_pilots[index];
    let e = energy(y);
    let n = y.len();
    let e2 = e * e;
    let sy = spectrum(y);
    let mut peaks = Vec::new();

    let acf = xcorr_from_spectra(&sy, &sy);
    for lag in window.acf_lags() {
        peaks.push(Peak { component: Component::Acf, lag, value: acf[lag_index(lag, n)].norm_sqr() / e2 });
    }
    // One task per other pilot; results are concatenated in pilot order, so
    // the output does not depend on the thread pool.
    let cross: Vec<Vec<Peak>> = td_pilots
        .par_iter()
        .enumerate()
        .filter(|(other, _)| *other != index)
        .map(|(other, b)| {
            let corr = xcorr_from_spectra(&sy, &spectrum(b));
            window
                .mcf_lags()
                .map(|lag| Peak { component: Component::Mcf(other), lag, value: corr[lag_index(lag, n)].norm_sqr() / e2 })
                .collect()
        })
        .collect();
    peaks.extend(cross.into_iter().flatten());
    peaks
}

/// Gradient (time-domain form) of a single peak's cost.
pub fn peak_gradient_td(td_pilots: &[Vec<Complex64>], index: usize, peak: &Peak) -> Result<Vec<Complex64>> {
    let y = &td_pilots[index];
    match peak.component {
        Component::Acf => acf_gradient_td(y, peak.lag),
        Component::Mcf(o) => mcf_gradient_td_single(y, &td_pilots[o], peak.lag),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::{CarrierPlacement, SubspaceDims};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    #[test]
    fn impulse_and_flat() {
        let mut imp = vec![c(0.0, 0.0); 8];
        imp[0] = c(1.0, 0.0);
        let r = cyclic_xcorr(&imp, &imp).unwrap();
        assert_eq!(r[0], c(1.0, 0.0));
        assert!(r[1..].iter().all(|v| v.norm() == 0.0));

        let ones = vec![c(1.0, 0.0); 8];
        let r = cyclic_xcorr(&ones, &ones).unwrap();
        assert!(r.iter().all(|v| (v - c(8.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn delayed_copy_peaks_at_delay() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = rvec(&mut rng, 100);
        let b = cyclic_delay(&a, 7);
        let r = cyclic_xcorr(&a, &b).unwrap();
        let best = (0..100).max_by(|&i, &j| r[i].norm().total_cmp(&r[j].norm())).unwrap();
        assert_eq!(best, 7);
        let b = cyclic_delay(&a, -3);
        let r = cyclic_xcorr(&a, &b).unwrap();
        let best = (0..100).max_by(|&i, &j| r[i].norm().total_cmp(&r[j].norm())).unwrap();
        assert_eq!(best, 97);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            cyclic_xcorr(&[c(1.0, 0.0); 3], &[c(1.0, 0.0); 4]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn window_sets() {
        let w = LagWindow::new(2, 16).unwrap();
        let acf: Vec<i64> = w.acf_lags().collect();
        assert_eq!(acf.len(), 14);
        assert!(!acf.contains(&0) && !acf.contains(&1) && !acf.contains(&-1));
        assert!(acf.contains(&8) && acf.contains(&-8) && !acf.contains(&9));
        assert_eq!(w.mcf_lags().count(), 17);
        assert!(LagWindow::new(4, 4).is_err());
        // Odd widths round down.
        let w = LagWindow::new(3, 7).unwrap();
        assert_eq!(w.acf_lags().collect::<Vec<_>>(), vec![-3, -2, 2, 3]);
    }

    #[test]
    fn cost_lag_checks() {
        let dims = SubspaceDims::new(16, 8, 2).unwrap();
        let sub = ZeroTailSubspace::build(dims, &CarrierPlacement::ContiguousCentered).unwrap();
        let x = vec![c(1.0, 0.5); 6];
        let w = LagWindow::new(2, 8).unwrap();
        assert!(matches!(acf_cost(&sub, &x, 0, &w), Err(Error::LagOutsideWindow { lag: 0 })));
        assert!(matches!(acf_cost(&sub, &x, 5, &w), Err(Error::LagOutsideWindow { .. })));
        assert!(acf_cost(&sub, &x, 2, &w).is_ok());
        assert_eq!(mcf_cost(&sub, &x, &[], 0, &w).unwrap(), 0.0);
        assert!(mcf_cost(&sub, &x, &[x.clone()], 9, &w).is_err());
    }

    #[test]
    fn acf_at_zero_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = rvec(&mut rng, 40);
        assert!((acf_cost_td(&y, 0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn impulse_has_no_acf_side_lobes() {
        // n_sc = n_fft, no tail: an all-ones spectrum is an impulse in time.
        let dims = SubspaceDims::new(16, 16, 0).unwrap();
        let sub = ZeroTailSubspace::build(dims, &CarrierPlacement::Explicit((0..16).collect())).unwrap();
        let x = vec![c(1.0, 0.0); 16];
        let w = LagWindow::new(0, 16).unwrap();
        for lag in w.acf_lags() {
            assert!(acf_cost(&sub, &x, lag, &w).unwrap() < 1e-28);
        }
    }

    #[test]
    fn disjoint_impulses_have_zero_mcf() {
        let dims = SubspaceDims::new(16, 16, 0).unwrap();
        let sub = ZeroTailSubspace::build(dims, &CarrierPlacement::Explicit((0..16).collect())).unwrap();
        // Impulses at 0 and 5 in time: preimages are their unitary spectra.
        let pre = |pos: usize| -> Vec<Complex64> {
            let mut td = vec![c(0.0, 0.0); 16];
            td[pos] = c(1.0, 0.0);
            sub.pinv_apply(&td).unwrap()
        };
        let (a, b) = (pre(0), pre(5));
        let w = LagWindow::new(0, 8).unwrap();
        for lag in w.mcf_lags() {
            let v = mcf_cost(&sub, &a, &[b.clone()], lag, &w).unwrap();
            if lag != 5 {
                assert!(v < 1e-28, "lag {lag}: {v}");
            }
        }
    }

    #[test]
    fn acf_minus_mcf_self_is_shift_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y = rvec(&mut rng, 24);
        for lag in [0i64, 3, -2] {
            let ga = acf_gradient_td(&y, lag).unwrap();
            let gm = mcf_gradient_td_single(&y, &y, lag).unwrap();
            let e = energy(&y);
            let r = correlation_at(&y, &y, lag);
            let shifted = cyclic_delay(&y, lag);
            for m in 0..24 {
                let expect = r * shifted[m] / (e * e);
                assert!((ga[m] - gm[m] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn peak_scan_ordering_and_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tds = vec![rvec(&mut rng, 32), rvec(&mut rng, 32)];
        let w = LagWindow::new(2, 4).unwrap();
        // ACF set {-2, 2}, MCF set {-2..=2}: 7 candidates.
        let all = peak_scan(&tds, 0, &w, 100);
        assert_eq!(all.len(), 7);
        assert!(all.windows(2).all(|p| p[0].value >= p[1].value));
        assert_eq!(peak_scan(&tds, 0, &w, 3), all[..3].to_vec());

        let single = vec![tds[0].clone()];
        let w1 = LagWindow::new(0, 2).unwrap();
        // Only lags -1 and 1, which have equal ACF magnitude.
        let p = peak_scan(&single, 0, &w1, 5);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].lag, -1);
    }

    #[test]
    fn profile_acf_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let y = rvec(&mut rng, 128);
        let w = LagWindow::new(2, 40).unwrap();
        let prof = CorrelationProfile::acf(&y, &w).unwrap();
        assert_eq!(prof.main_peak, 1.0);
        let k = prof.lags.len();
        for i in 0..k {
            assert!((prof.values[i] - prof.values[k - 1 - i]).abs() <= 1e-12 * prof.values[i].max(1e-300));
        }
        let side = prof
            .values
            .iter()
            .zip(&prof.excluded)
            .filter(|(_, e)| !**e)
            .map(|(v, _)| *v)
            .fold(0.0, f64::max);
        assert_eq!(side, prof.max_side_peak);
    }
}
