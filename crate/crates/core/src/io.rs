//! Persistence: the JSON pilot file and the binary subspace cache.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::SynthesisConfig;
use crate::correlation::LagWindow;
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, EvalOptions};
use crate::optimizer::{PilotSet, Synthesis};
use crate::subspace::{SubspaceDims, ZeroTailSubspace};

pub const PILOT_FILE_FORMAT: &str = "pilotsynth-pilots";
pub const PILOT_FILE_VERSION: u32 = 1;
/// Tolerance when re-deriving stored FD/TD pilots from their preimages.
pub const PILOT_FILE_TOLERANCE: f64 = 1e-10;

pub const SUBSPACE_MAGIC: &[u8; 4] = b"ZTSS";
pub const SUBSPACE_VERSION: u32 = 1;

/// Write through a temporary file in the destination directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

fn from_pairs(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotMetrics {
    pub initial_worst_peak_db: f64,
    pub worst_peak_db: f64,
    pub acf_worst_db: f64,
    pub mixture_worst_db: f64,
    pub mixture_mean_db: f64,
    pub papr_db: Vec<f64>,
}

impl PilotMetrics {
    /// Headline metrics of a finished run.
    pub fn compute(sub: &ZeroTailSubspace, synthesis: &Synthesis, window: &LagWindow) -> Result<Self> {
        Self::for_set(sub, &synthesis.pilots, window, synthesis.initial_worst_peak)
    }

    /// Metrics of `set`, with the initial worst peak (linear) supplied.
    pub fn for_set(sub: &ZeroTailSubspace, set: &PilotSet, window: &LagWindow, initial_worst_peak: f64) -> Result<Self> {
        let report = evaluate(&sub.dims(), set, window, &EvalOptions::default())?;
        Ok(Self {
            initial_worst_peak_db: 10.0 * initial_worst_peak.log10(),
            worst_peak_db: 10.0 * set.worst_peak(window).log10(),
            acf_worst_db: report.acf_db.iter().copied().fold(f64::INFINITY, f64::min),
            mixture_worst_db: report.mixture_worst_db,
            mixture_mean_db: report.mixture_mean_db,
            papr_db: report.papr_db,
        })
    }

    /// Largest absolute difference between the dB figures of two metric sets.
    pub fn max_abs_diff_db(&self, other: &Self) -> f64 {
        let scalars = [
            (self.initial_worst_peak_db, other.initial_worst_peak_db),
            (self.worst_peak_db, other.worst_peak_db),
            (self.acf_worst_db, other.acf_worst_db),
            (self.mixture_worst_db, other.mixture_worst_db),
            (self.mixture_mean_db, other.mixture_mean_db),
        ];
        let papr = if self.papr_db.len() == other.papr_db.len() {
            self.papr_db.iter().zip(&other.papr_db).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        scalars.iter().map(|(a, b)| (a - b).abs()).fold(papr, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotFileHeader {
    pub format: String,
    pub version: u32,
    pub config: SynthesisConfig,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub metrics: PilotMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotRecord {
    pub preimage: Vec<[f64; 2]>,
    pub fd: Vec<[f64; 2]>,
    pub td: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotFile {
    pub header: PilotFileHeader,
    pub pilots: Vec<PilotRecord>,
}

impl PilotFile {
    pub fn new(config: &SynthesisConfig, synthesis: &Synthesis, metrics: PilotMetrics) -> Self {
        let set = &synthesis.pilots;
        let pilots = (0..set.len())
            .map(|i| PilotRecord {
                preimage: to_pairs(&set.preimages()[i]),
                fd: to_pairs(&set.fd_pilots()[i]),
                td: to_pairs(&set.td_pilots()[i]),
            })
            .collect();
        Self {
            header: PilotFileHeader {
                format: PILOT_FILE_FORMAT.to_string(),
                version: PILOT_FILE_VERSION,
                config: config.clone(),
                seed: config.optimizer.seed,
                iterations: synthesis.iterations,
                converged: synthesis.converged,
                metrics,
            },
            pilots,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Corrupt(e.to_string()))?;
        if file.header.format != PILOT_FILE_FORMAT {
            return Err(Error::Corrupt(format!("unexpected format tag {:?}", file.header.format)));
        }
        if file.header.version != PILOT_FILE_VERSION {
            return Err(Error::Corrupt(format!(
                "unsupported pilot file version {} (expected {PILOT_FILE_VERSION})",
                file.header.version
            )));
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Re-derive FD and TD pilots from the stored preimages and check them
    /// against the stored vectors.
    pub fn to_pilot_set(&self, sub: &ZeroTailSubspace) -> Result<PilotSet> {
        let preimages: Vec<Vec<Complex64>> = self.pilots.iter().map(|p| from_pairs(&p.preimage)).collect();
        let set = PilotSet::from_preimages(sub, preimages).map_err(|e| Error::Corrupt(e.to_string()))?;
        for (i, rec) in self.pilots.iter().enumerate() {
            let checks = [("fd", &rec.fd, &set.fd_pilots()[i]), ("td", &rec.td, &set.td_pilots()[i])];
            for (name, stored, derived) in checks {
                if stored.len() != derived.len() {
                    return Err(Error::Corrupt(format!("pilot {i}: {name} length {}", stored.len())));
                }
                let scale = derived.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
                let off = from_pairs(stored)
                    .iter()
                    .zip(derived)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                if off > PILOT_FILE_TOLERANCE * scale {
                    return Err(Error::Corrupt(format!("pilot {i}: stored {name} deviates by {off:e}")));
                }
            }
        }
        Ok(set)
    }
}

fn put_matrix(out: &mut Vec<u8>, m: &Mat<Complex64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
}

/// Binary cache layout, all little-endian: magic `ZTSS`, `u32` version,
/// `u64` n_fft, n_sc, t_zero, `f64` singular floor, `u64` carrier count and
/// carriers, `u8` pinv flag, then `V0` and (if flagged) `A^+` as row-major
/// `(f64 re, f64 im)` pairs.
pub fn encode_subspace(sub: &ZeroTailSubspace) -> Vec<u8> {
    let d = sub.dims();
    let mut out = Vec::new();
    out.extend_from_slice(SUBSPACE_MAGIC);
    out.extend_from_slice(&SUBSPACE_VERSION.to_le_bytes());
    for v in [d.n_fft, d.n_sc, d.t_zero] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&sub.singular_floor().to_le_bytes());
    out.extend_from_slice(&(sub.carriers().len() as u64).to_le_bytes());
    for &c in sub.carriers() {
        out.extend_from_slice(&(c as u64).to_le_bytes());
    }
    out.push(sub.a_pinv().is_some() as u8);
    put_matrix(&mut out, sub.v0());
    if let Some(p) = sub.a_pinv() {
        put_matrix(&mut out, p);
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Corrupt("subspace cache truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<usize> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Mat<Complex64>> {
        let bytes = self.take(rows.checked_mul(cols).and_then(|n| n.checked_mul(16)).unwrap_or(usize::MAX))?;
        let at = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
        Ok(Mat::from_fn(rows, cols, |i, j| {
            let k = 2 * (i * cols + j);
            Complex64::new(at(k), at(k + 1))
        }))
    }
}

pub fn decode_subspace(buf: &[u8]) -> Result<ZeroTailSubspace> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != SUBSPACE_MAGIC {
        return Err(Error::Corrupt("bad subspace cache magic".into()));
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().unwrap());
    if version != SUBSPACE_VERSION {
        return Err(Error::Corrupt(format!("unsupported subspace cache version {version}")));
    }
    let (n_fft, n_sc, t_zero) = (c.u64()?, c.u64()?, c.u64()?);
    let dims = SubspaceDims::new(n_fft, n_sc, t_zero).map_err(|e| Error::Corrupt(e.to_string()))?;
    let floor = c.f64()?;
    let n_carriers = c.u64()?;
    if n_carriers != n_sc {
        return Err(Error::Corrupt(format!("carrier count {n_carriers} != n_sc {n_sc}")));
    }
    let carriers = (0..n_carriers).map(|_| c.u64()).collect::<Result<Vec<_>>>()?;
    let has_pinv = c.take(1)?[0] != 0;
    let p = dims.preimage_dim();
    let v0 = c.matrix(n_sc, p)?;
    let pinv = if has_pinv { Some(c.matrix(p, n_fft)?) } else { None };
    if c.pos != buf.len() {
        return Err(Error::Corrupt("trailing bytes in subspace cache".into()));
    }
    ZeroTailSubspace::from_parts(dims, carriers, v0, pinv, floor)
}

pub fn write_subspace_cache(sub: &ZeroTailSubspace, path: &Path) -> Result<()> {
    write_atomic(path, &encode_subspace(sub))
}

pub fn read_subspace_cache(path: &Path) -> Result<ZeroTailSubspace> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    decode_subspace(&buf)
}
