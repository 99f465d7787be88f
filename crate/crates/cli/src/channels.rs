//! Channel description files for `evaluate --channels`.
//!
//! Either list one channel per pilot:
//!
//! ```toml
//! [[channel]]
//! path_loss_db = 0.0
//! taps = [{ delay = 0, gain = [1.0, 0.0] }, { delay = 3, gain = [0.5, 0.0] }]
//! ```
//!
//! or ask for seeded random channels (pilot `i` uses `seed + i`):
//!
//! ```toml
//! [random]
//! seed = 1000
//! n_taps = 3
//! max_delay = 4
//! path_loss_db = 0.0
//! ```

use std::path::Path;

use pilotsynth::correlation::LagWindow;
use pilotsynth::evaluator::ChannelModel;
use pilotsynth::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomChannels {
    seed: u64,
    n_taps: usize,
    max_delay: usize,
    #[serde(default)]
    path_loss_db: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    #[serde(default)]
    channel: Vec<ChannelModel>,
    random: Option<RandomChannels>,
}

pub fn load(path: &Path, n_pilots: usize, window: &LagWindow) -> Result<Vec<ChannelModel>> {
    let text = std::fs::read_to_string(path)?;
    let file: ChannelFile =
        toml::from_str(&text).map_err(|e| Error::InvalidChannel(format!("{}: {e}", path.display())))?;
    let channels = match (file.channel.is_empty(), file.random) {
        (false, None) => file.channel,
        (true, Some(r)) => (0..n_pilots)
            .map(|i| ChannelModel::random(r.seed + i as u64, r.n_taps, r.max_delay, r.path_loss_db))
            .collect::<Result<Vec<_>>>()?,
        _ => {
            return Err(Error::InvalidChannel(
                "give either [[channel]] entries or a [random] section".into(),
            ))
        }
    };
    if channels.len() != n_pilots {
        return Err(Error::InvalidChannel(format!(
            "{} channels for {n_pilots} pilots",
            channels.len()
        )));
    }
    for ch in &channels {
        ch.validate(window)?;
    }
    Ok(channels)
}
