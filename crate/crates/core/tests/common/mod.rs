//! Shared oracles and fixtures for the integration tests.
#![allow(dead_code)]

use faer::Mat;
use num_complex::Complex64;
use pilotsynth::correlation::LagWindow;
use pilotsynth::subspace::{CarrierPlacement, SubspaceDims, SubspaceOptions, ZeroTailSubspace};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn subspace(n_fft: usize, n_sc: usize, t_zero: usize, dense: bool) -> ZeroTailSubspace {
    let opts = SubspaceOptions { dense_budget: if dense { usize::MAX } else { 0 }, ..Default::default() };
    ZeroTailSubspace::build_with(
        SubspaceDims::new(n_fft, n_sc, t_zero).unwrap(),
        &CarrierPlacement::ContiguousCentered,
        &opts,
    )
    .unwrap()
}

pub fn rand_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Unitary IDFT columns for the given bins, entry by entry.
pub fn explicit_w1(n: usize, carriers: &[usize]) -> Mat<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, carriers.len(), |m, k| {
        let phase = 2.0 * std::f64::consts::PI * ((m * carriers[k]) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    })
}

pub fn matvec(m: &Mat<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(m.ncols(), x.len());
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

/// `R_ab(n) = sum_m conj(a[m-n]) b[m]`, indexed by `n mod N`, by direct sum.
pub fn direct_xcorr(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    (0..n)
        .map(|s| (0..n).map(|m| a[(m + n - s) % n].conj() * b[m]).sum())
        .collect()
}

fn at(r: &[Complex64], lag: i64) -> Complex64 {
    let n = r.len() as i64;
    r[lag.rem_euclid(n) as usize]
}

/// Main-to-side dB of each pilot against the delayed, weighted mixture.
pub fn mixture_oracle(tds: &[Vec<Complex64>], window: &LagWindow, weights: &[f64], delays: &[i64]) -> Vec<f64> {
    let n = tds[0].len();
    let mut mix = vec![Complex64::new(0.0, 0.0); n];
    for ((td, &w), &d) in tds.iter().zip(weights).zip(delays) {
        for m in 0..n {
            mix[m] += td[(m as i64 - d).rem_euclid(n as i64) as usize] * w;
        }
    }
    tds.iter()
        .zip(delays)
        .map(|(td, &d)| {
            let r = direct_xcorr(td, &mix);
            let main = at(&r, d).norm_sqr();
            let side = (-window.outer()..=window.outer())
                .filter(|l| l.abs() > window.inner())
                .map(|l| at(&r, d + l).norm_sqr())
                .fold(0.0, f64::max);
            10.0 * (main / side).log10()
        })
        .collect()
}

/// Relative mismatch between the analytic directional derivative `2 Re(g d)`
/// and a central difference, along `d = conj(g) + r` with `|r| = |g| / 2`
/// so the derivative is bounded away from zero.
pub fn directional_check<R: Rng>(
    g: &[Complex64],
    x: &[Complex64],
    rng: &mut R,
    f: impl Fn(&[Complex64]) -> f64,
) -> f64 {
    let r = rand_vec(rng, x.len());
    let s = 0.5 * norm(g) / norm(&r);
    let d: Vec<Complex64> = g.iter().zip(&r).map(|(gi, ri)| gi.conj() + ri * s).collect();
    let d_norm = norm(&d);
    let d: Vec<Complex64> = d.iter().map(|v| v / d_norm).collect();
    let analytic = 2.0 * g.iter().zip(&d).map(|(gi, di)| gi * di).sum::<Complex64>().re;
    let h = 1e-6;
    let plus: Vec<Complex64> = x.iter().zip(&d).map(|(a, b)| a + b * h).collect();
    let minus: Vec<Complex64> = x.iter().zip(&d).map(|(a, b)| a - b * h).collect();
    let numeric = (f(&plus) - f(&minus)) / (2.0 * h);
    (numeric - analytic).abs() / analytic.abs()
}
