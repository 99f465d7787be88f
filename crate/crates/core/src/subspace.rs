//! Zero-tail pilot subspace.
//!
//! The occupied-carrier columns of the unitary IFFT matrix form `W1`
//! (`n_fft x n_sc`). Its bottom `t_zero` rows, `W21`, map any spectrum on the
//! occupied carriers to the tail samples. Every frequency-domain vector in the
//! nullspace of `W21` therefore has a time-domain image whose last `t_zero`
//! samples vanish. `V0` is an orthonormal basis of that nullspace, taken from
//! the full SVD of `W21`, and `A = W1 V0` maps preimages straight to time
//! domain.
//!
//! Because `W1` and `V0` both have orthonormal columns, `A^H A = I` and the
//! least-squares inverse of `A` coincides with `A^H`. Small subspaces keep a
//! dense pseudo-inverse computed by SVD; large ones apply `A` and `A^H`
//! through the FFT.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Entry budget (`n_fft * preimage_dim`) under which `A` is stored densely.
pub const DEFAULT_DENSE_BUDGET: usize = (1 << 6) * (1 << 6);

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SubspaceDims {
    pub n_fft: usize,
    pub n_sc: usize,
    pub t_zero: usize,
}

impl SubspaceDims {
    pub fn new(n_fft: usize, n_sc: usize, t_zero: usize) -> Result<Self> {
        let dims = Self { n_fft, n_sc, t_zero };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || self.n_sc == 0 {
            return Err(Error::InvalidDims("n_fft and n_sc must be positive".into()));
        }
        if self.n_sc > self.n_fft {
            return Err(Error::InvalidDims(format!(
                "n_sc ({}) exceeds n_fft ({})",
                self.n_sc, self.n_fft
            )));
        }
        if self.t_zero >= self.n_sc {
            return Err(Error::InvalidDims(format!(
                "t_zero ({}) must be smaller than n_sc ({})",
                self.t_zero, self.n_sc
            )));
        }
        Ok(())
    }

    /// Dimension of the preimage space, `n_sc - t_zero`.
    pub fn preimage_dim(&self) -> usize {
        self.n_sc - self.t_zero
    }

    /// Number of time samples outside the zero tail.
    pub fn active_len(&self) -> usize {
        self.n_fft - self.t_zero
    }
}

impl fmt::Display for SubspaceDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n_fft={}, n_sc={}, t_zero={})", self.n_fft, self.n_sc, self.t_zero)
    }
}

/// Which FFT bins carry the pilot.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum CarrierPlacement {
    /// `n_sc` adjacent carriers centred on DC. Logical subcarrier `k` runs over
    /// `-floor(n_sc/2) ..= n_sc - floor(n_sc/2) - 1` and lands on bin
    /// `k mod n_fft`, so negative frequencies wrap to the top of the grid. DC
    /// is occupied.
    #[default]
    ContiguousCentered,
    /// Arbitrary distinct bins, in the order used for frequency-domain pilots.
    Explicit(Vec<usize>),
}

impl CarrierPlacement {
    pub fn resolve(&self, dims: &SubspaceDims) -> Result<Vec<usize>> {
        match self {
            CarrierPlacement::ContiguousCentered => {
                let n = dims.n_fft as i64;
                let lo = -((dims.n_sc / 2) as i64);
                Ok((0..dims.n_sc as i64)
                    .map(|j| (lo + j).rem_euclid(n) as usize)
                    .collect())
            }
            CarrierPlacement::Explicit(bins) => {
                if bins.len() != dims.n_sc {
                    return Err(Error::InvalidPlacement(format!(
                        "expected {} carriers, got {}",
                        dims.n_sc,
                        bins.len()
                    )));
                }
                let mut seen = vec![false; dims.n_fft];
                for &b in bins {
                    if b >= dims.n_fft {
                        return Err(Error::InvalidPlacement(format!(
                            "carrier {b} out of range [0, {})",
                            dims.n_fft
                        )));
                    }
                    if std::mem::replace(&mut seen[b], true) {
                        return Err(Error::InvalidPlacement(format!("duplicate carrier {b}")));
                    }
                }
                Ok(bins.clone())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SubspaceOptions {
    /// Override for the rank cutoff on the singular values of `W21`.
    pub singular_floor: Option<f64>,
    /// Store `A` and its pseudo-inverse densely when `n_fft * preimage_dim`
    /// does not exceed this.
    pub dense_budget: usize,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        Self { singular_floor: None, dense_budget: DEFAULT_DENSE_BUDGET }
    }
}

#[derive(Clone)]
struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }
}

/// Immutable operators `V0`, `A` and `A^+` for one set of dimensions and
/// carriers. Shareable across threads.
#[derive(Clone)]
pub struct ZeroTailSubspace {
    dims: SubspaceDims,
    carriers: Vec<usize>,
    v0: Mat<Complex64>,
    a_dense: Option<Mat<Complex64>>,
    a_pinv: Option<Mat<Complex64>>,
    singular_floor: f64,
    singular_values: Vec<f64>,
    fft: FftPair,
}

impl fmt::Debug for ZeroTailSubspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZeroTailSubspace")
            .field("dims", &self.dims)
            .field("dense", &self.a_dense.is_some())
            .field("singular_floor", &self.singular_floor)
            .finish()
    }
}

/// Unitary IFFT matrix entry `W[m, k] = exp(2 pi i m k / n) / sqrt(n)`.
fn idft_entry(n: usize, m: usize, k: usize) -> Complex64 {
    let phase = 2.0 * PI * ((m * k) % n) as f64 / n as f64;
    Complex64::from_polar(1.0 / (n as f64).sqrt(), phase)
}

/// Occupied-carrier columns of the unitary IFFT matrix, rows `rows`.
fn idft_rows(n: usize, rows: std::ops::Range<usize>, carriers: &[usize]) -> Mat<Complex64> {
    let start = rows.start;
    Mat::from_fn(rows.len(), carriers.len(), |i, j| idft_entry(n, start + i, carriers[j]))
}

fn col_slice(m: &Mat<Complex64>, j: usize) -> &[Complex64] {
    m.col(j).try_as_col_major().expect("owned matrices are column-major").as_slice()
}

impl ZeroTailSubspace {
    pub fn build(dims: SubspaceDims, placement: &CarrierPlacement) -> Result<Self> {
        Self::build_with(dims, placement, &SubspaceOptions::default())
    }

    pub fn build_with(
        dims: SubspaceDims,
        placement: &CarrierPlacement,
        options: &SubspaceOptions,
    ) -> Result<Self> {
        dims.validate()?;
        let carriers = placement.resolve(&dims)?;
        let (n_fft, n_sc, t) = (dims.n_fft, dims.n_sc, dims.t_zero);
        let p = dims.preimage_dim();

        let (v0, singular_values, singular_floor) = if t == 0 {
            let floor = options.singular_floor.unwrap_or(f64::EPSILON);
            (Mat::<Complex64>::identity(n_sc, n_sc), Vec::new(), floor)
        } else {
            let w21 = idft_rows(n_fft, n_fft - t..n_fft, &carriers);
            let svd = w21
                .svd()
                .map_err(|e| Error::InvalidDims(format!("SVD of tail block failed: {e:?}")))?;
            let s = svd.S().column_vector();
            let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
            let sigma_max = sv.first().copied().unwrap_or(0.0);
            let floor = options
                .singular_floor
                .unwrap_or(t.max(n_sc) as f64 * f64::EPSILON * sigma_max);
            if !(floor > 0.0) {
                return Err(Error::InvalidDims(format!("singular floor must be positive, got {floor}")));
            }
            // Columns t.. of V have no partner singular value: exact zeros.
            let found = (n_sc - sv.len()) + sv.iter().filter(|&&v| v < floor).count();
            if found < p {
                let smallest_kept = sv.last().copied().unwrap_or(0.0);
                return Err(Error::DegenerateNullspace {
                    needed: p,
                    found,
                    floor,
                    smallest_kept,
                    largest_discarded: 0.0,
                });
            }
            let v = svd.V();
            let v0 = Mat::from_fn(n_sc, p, |i, j| v[(i, t + j)]);
            (v0, sv, floor)
        };

        let mut sub = Self {
            dims,
            carriers,
            v0,
            a_dense: None,
            a_pinv: None,
            singular_floor,
            singular_values,
            fft: FftPair::new(n_fft),
        };
        if n_fft * p <= options.dense_budget {
            sub.densify()?;
        }
        Ok(sub)
    }

    /// Rebuild from a cached `V0` (and optional dense pseudo-inverse).
    pub fn from_parts(
        dims: SubspaceDims,
        carriers: Vec<usize>,
        v0: Mat<Complex64>,
        a_pinv: Option<Mat<Complex64>>,
        singular_floor: f64,
    ) -> Result<Self> {
        dims.validate()?;
        let carriers = CarrierPlacement::Explicit(carriers).resolve(&dims)?;
        if v0.nrows() != dims.n_sc || v0.ncols() != dims.preimage_dim() {
            return Err(Error::DimensionMismatch {
                expected: dims.n_sc * dims.preimage_dim(),
                got: v0.nrows() * v0.ncols(),
            });
        }
        let mut sub = Self {
            dims,
            carriers,
            v0,
            a_dense: None,
            a_pinv: None,
            singular_floor,
            singular_values: Vec::new(),
            fft: FftPair::new(dims.n_fft),
        };
        if let Some(pinv) = a_pinv {
            if pinv.nrows() != dims.preimage_dim() || pinv.ncols() != dims.n_fft {
                return Err(Error::DimensionMismatch {
                    expected: dims.preimage_dim() * dims.n_fft,
                    got: pinv.nrows() * pinv.ncols(),
                });
            }
            let w1 = idft_rows(dims.n_fft, 0..dims.n_fft, &sub.carriers);
            sub.a_dense = Some(&w1 * &sub.v0);
            sub.a_pinv = Some(pinv);
        }
        Ok(sub)
    }

    /// Materialise `A = W1 V0` by explicit matrix product and its
    /// least-squares inverse by SVD, dropping singular values below the
    /// standard rank cutoff.
    fn densify(&mut self) -> Result<()> {
        let n = self.dims.n_fft;
        let w1 = idft_rows(n, 0..n, &self.carriers);
        let a = &w1 * &self.v0;
        let svd = a
            .thin_svd()
            .map_err(|e| Error::InvalidDims(format!("SVD of A failed: {e:?}")))?;
        let s = svd.S().column_vector();
        let k = s.nrows();
        let s_max = if k > 0 { s[0].re } else { 0.0 };
        let cutoff = n.max(self.dims.preimage_dim()) as f64 * f64::EPSILON * s_max;
        let (u, v) = (svd.U(), svd.V());
        let inv: Vec<f64> = (0..k)
            .map(|i| if s[i].re > cutoff { 1.0 / s[i].re } else { 0.0 })
            .collect();
        let pinv = Mat::from_fn(self.dims.preimage_dim(), n, |i, j| {
            (0..k).map(|l| v[(i, l)] * inv[l] * u[(j, l)].conj()).sum()
        });
        self.a_dense = Some(a);
        self.a_pinv = Some(pinv);
        Ok(())
    }

    pub fn dims(&self) -> SubspaceDims {
        self.dims
    }

    pub fn carriers(&self) -> &[usize] {
        &self.carriers
    }

    pub fn v0(&self) -> &Mat<Complex64> {
        &self.v0
    }

    pub fn a_pinv(&self) -> Option<&Mat<Complex64>> {
        self.a_pinv.as_ref()
    }

    pub fn singular_floor(&self) -> f64 {
        self.singular_floor
    }

    /// Explicit singular values of `W21`, descending (empty when rebuilt from
    /// a cache or when `t_zero == 0`).
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn is_dense(&self) -> bool {
        self.a_dense.is_some()
    }

    /// Dense `A`, built on demand when the subspace is factored.
    pub fn a_matrix(&self) -> Mat<Complex64> {
        if let Some(a) = &self.a_dense {
            return a.clone();
        }
        let p = self.dims.preimage_dim();
        let cols: Vec<Vec<Complex64>> = (0..p)
            .map(|j| self.spectrum_to_time(col_slice(&self.v0, j)))
            .collect();
        Mat::from_fn(self.dims.n_fft, p, |i, j| cols[j][i])
    }

    fn check_len(expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::DimensionMismatch { expected, got });
        }
        Ok(())
    }

    /// `y_FD = V0 x`, the frequency-domain pilot on the occupied carriers.
    pub fn to_frequency_domain(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        Self::check_len(self.dims.preimage_dim(), x.len())?;
        Ok(self.v0_mul(x))
    }

    fn v0_mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dims.n_sc];
        for (j, &xj) in x.iter().enumerate() {
            if xj == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (yi, &v) in y.iter_mut().zip(col_slice(&self.v0, j)) {
                *yi += v * xj;
            }
        }
        y
    }

    fn v0_adjoint_mul(&self, z: &[Complex64]) -> Vec<Complex64> {
        (0..self.dims.preimage_dim())
            .map(|j| col_slice(&self.v0, j).iter().zip(z).map(|(v, zi)| v.conj() * zi).sum())
            .collect()
    }

    /// Scatter an occupied-carrier spectrum onto the grid and apply the
    /// unitary IFFT.
    fn spectrum_to_time(&self, fd: &[Complex64]) -> Vec<Complex64> {
        let n = self.dims.n_fft;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (&bin, &v) in self.carriers.iter().zip(fd) {
            buf[bin] = v;
        }
        self.fft.inverse.process(&mut buf);
        let scale = 1.0 / (n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    /// `A x`: time-domain pilot of length `n_fft`.
    pub fn to_time_domain(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        Self::check_len(self.dims.preimage_dim(), x.len())?;
        Ok(match &self.a_dense {
            Some(a) => dense_mul(a, x),
            None => self.to_time_domain_factored(x),
        })
    }

    /// `A x` through `V0` and the FFT, regardless of storage mode.
    pub fn to_time_domain_factored(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.spectrum_to_time(&self.v0_mul(x))
    }

    /// `A^H w`, the adjoint map from time domain back to preimages.
    pub fn adjoint(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        Self::check_len(self.dims.n_fft, w.len())?;
        Ok(match &self.a_dense {
            Some(a) => dense_adjoint_mul(a, w),
            None => self.adjoint_factored(w),
        })
    }

    pub fn adjoint_factored(&self, w: &[Complex64]) -> Vec<Complex64> {
        let n = self.dims.n_fft;
        let mut buf = w.to_vec();
        self.fft.forward.process(&mut buf);
        let scale = 1.0 / (n as f64).sqrt();
        let gathered: Vec<Complex64> = self.carriers.iter().map(|&b| buf[b] * scale).collect();
        self.v0_adjoint_mul(&gathered)
    }

    /// Minimum-norm least-squares preimage of a time-domain vector.
    ///
    /// Dense subspaces use the SVD-based pseudo-inverse. Factored ones use
    /// `A^H`, which equals `A^+` because `A` has orthonormal columns.
    pub fn pinv_apply(&self, y_td: &[Complex64]) -> Result<Vec<Complex64>> {
        Self::check_len(self.dims.n_fft, y_td.len())?;
        Ok(match &self.a_pinv {
            Some(pinv) => dense_mul(pinv, y_td),
            None => self.adjoint_factored(y_td),
        })
    }
}

fn dense_mul(m: &Mat<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        for (yi, &v) in y.iter_mut().zip(col_slice(m, j)) {
            *yi += v * xj;
        }
    }
    y
}

fn dense_adjoint_mul(m: &Mat<Complex64>, w: &[Complex64]) -> Vec<Complex64> {
    (0..m.ncols())
        .map(|j| col_slice(m, j).iter().zip(w).map(|(v, wi)| v.conj() * wi).sum())
        .collect()
}
