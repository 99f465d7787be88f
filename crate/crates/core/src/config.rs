//! Run configuration, read from TOML.
//!
//! ```toml
//! n_pilots = 4
//!
//! [grid]
//! n_fft = 4096
//! n_sc = 3300
//! t_zero = 1750
//! delta_f = 30000.0
//! carriers = "contiguous-centered"   # or an explicit list of FFT bins
//!
//! [window]
//! t_min = 2
//! t_max = 370
//!
//! [optimizer]
//! method = "maxpeak"                 # or "weighted"
//! h0 = 1.0
//! seed = 42
//! step = { kind = "shrink_on_worse", divisor = 2.0, rollback = true }
//!
//! [papr]                             # optional; absent disables PAPR passes
//! n_papr_reductions = 1
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::correlation::LagWindow;
use crate::error::{Error, Result};
use crate::optimizer::{synthesize, OptimizerConfig, Synthesis};
use crate::papr::{interleaved_synthesis, PaprConfig};
use crate::subspace::{CarrierPlacement, SubspaceDims, SubspaceOptions, ZeroTailSubspace, DEFAULT_DENSE_BUDGET};

pub const CONTIGUOUS_CENTERED: &str = "contiguous-centered";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Carriers {
    Named(String),
    List(Vec<usize>),
}

impl Default for Carriers {
    fn default() -> Self {
        Carriers::Named(CONTIGUOUS_CENTERED.to_string())
    }
}

fn default_dense_budget() -> usize {
    DEFAULT_DENSE_BUDGET
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_fft: usize,
    pub n_sc: usize,
    pub t_zero: usize,
    /// Subcarrier spacing, Hz.
    pub delta_f: f64,
    #[serde(default)]
    pub carriers: Carriers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_floor: Option<f64>,
    #[serde(default = "default_dense_budget")]
    pub dense_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    pub n_pilots: usize,
    pub grid: GridConfig,
    pub window: LagWindow,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub papr: Option<PaprConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl SynthesisConfig {
    /// Parse and validate. Errors carry the TOML line and the offending key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn dims(&self) -> Result<SubspaceDims> {
        SubspaceDims::new(self.grid.n_fft, self.grid.n_sc, self.grid.t_zero)
    }

    pub fn placement(&self) -> Result<CarrierPlacement> {
        match &self.grid.carriers {
            Carriers::Named(name) if name == CONTIGUOUS_CENTERED => Ok(CarrierPlacement::ContiguousCentered),
            Carriers::Named(other) => Err(Error::Config(format!(
                "grid.carriers: unknown placement {other:?} (expected {CONTIGUOUS_CENTERED:?} or a list)"
            ))),
            Carriers::List(bins) => Ok(CarrierPlacement::Explicit(bins.clone())),
        }
    }

    pub fn subspace_options(&self) -> SubspaceOptions {
        SubspaceOptions { singular_floor: self.grid.singular_floor, dense_budget: self.grid.dense_budget }
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |key: &str, e: Error| Error::Config(format!("{key}: {e}"));
        let dims = self.dims().map_err(|e| ctx("grid", e))?;
        self.placement()?.resolve(&dims).map_err(|e| ctx("grid.carriers", e))?;
        if !(self.grid.delta_f > 0.0) {
            return Err(Error::Config("grid.delta_f: must be positive".into()));
        }
        if let Some(f) = self.grid.singular_floor {
            if !(f > 0.0) {
                return Err(Error::Config("grid.singular_floor: must be positive".into()));
            }
        }
        self.window.validate().map_err(|e| ctx("window", e))?;
        if self.window.outer() as usize >= dims.n_fft {
            return Err(Error::Config(format!(
                "window.t_max: t_max/2 = {} must be below n_fft = {}",
                self.window.outer(),
                dims.n_fft
            )));
        }
        self.optimizer.validate().map_err(|e| ctx("optimizer", e))?;
        if let Some(p) = &self.papr {
            p.validate().map_err(|e| ctx("papr", e))?;
        }
        Ok(())
    }

    pub fn build_subspace(&self) -> Result<ZeroTailSubspace> {
        ZeroTailSubspace::build_with(self.dims()?, &self.placement()?, &self.subspace_options())
    }

    /// Run the configured synthesis on a prebuilt subspace.
    pub fn run(&self, sub: &ZeroTailSubspace) -> Result<Synthesis> {
        match &self.papr {
            Some(papr) => interleaved_synthesis(sub, &self.window, self.n_pilots, &self.optimizer, papr),
            None => synthesize(sub, &self.window, self.n_pilots, &self.optimizer),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n_pilots = 2

[grid]
n_fft = 64
n_sc = 32
t_zero = 8
delta_f = 30000.0

[window]
t_min = 2
t_max = 16
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = SynthesisConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.optimizer, OptimizerConfig::default());
        assert_eq!(cfg.grid.carriers, Carriers::default());
        assert!(cfg.papr.is_none());
        assert_eq!(cfg.placement().unwrap(), CarrierPlacement::ContiguousCentered);
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace("n_fft = 64\n", "");
        let err = SynthesisConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("n_fft"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("t_zero = 8", "t_zero = 8\nbogus = 1");
        let err = SynthesisConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn semantic_errors() {
        let text = MINIMAL.replace("t_zero = 8", "t_zero = 40");
        assert!(SynthesisConfig::from_toml_str(&text).unwrap_err().to_string().contains("t_zero"));
        let text = MINIMAL.replace("t_max = 16", "t_max = 200");
        assert!(SynthesisConfig::from_toml_str(&text).unwrap_err().to_string().contains("t_max"));
        let text = MINIMAL.replace("delta_f = 30000.0", "delta_f = 0.0");
        assert!(SynthesisConfig::from_toml_str(&text).unwrap_err().to_string().contains("delta_f"));
        let text = MINIMAL.replace("delta_f = 30000.0", "delta_f = 30000.0\ncarriers = \"comb\"");
        assert!(SynthesisConfig::from_toml_str(&text).unwrap_err().to_string().contains("carriers"));
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = SynthesisConfig::from_toml_str(MINIMAL).unwrap();
        cfg.papr = Some(PaprConfig::default());
        cfg.grid.carriers = Carriers::List((0..32).collect());
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(SynthesisConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
