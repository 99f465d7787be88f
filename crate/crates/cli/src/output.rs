//! CSV emitters for plot data.

use std::fmt::Write as _;
use std::path::Path;

use pilotsynth::correlation::CorrelationProfile;
use pilotsynth::io::write_atomic;
use pilotsynth::optimizer::PilotSet;
use pilotsynth::subspace::ZeroTailSubspace;
use pilotsynth::Result;

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

/// `pilot,index,bin,magnitude` per occupied carrier.
pub fn fd_magnitude(sub: &ZeroTailSubspace, set: &PilotSet) -> String {
    let mut s = String::from("pilot,index,bin,magnitude\n");
    for (p, fd) in set.fd_pilots().iter().enumerate() {
        for (i, (v, bin)) in fd.iter().zip(sub.carriers()).enumerate() {
            let _ = writeln!(s, "{p},{i},{bin},{}", v.norm());
        }
    }
    s
}

/// `pilot,sample,magnitude,in_tail`.
pub fn td_magnitude(sub: &ZeroTailSubspace, set: &PilotSet) -> String {
    let active = sub.dims().active_len();
    let mut s = String::from("pilot,sample,magnitude,in_tail\n");
    for (p, td) in set.td_pilots().iter().enumerate() {
        for (m, v) in td.iter().enumerate() {
            let _ = writeln!(s, "{p},{m},{},{}", v.norm(), m >= active);
        }
    }
    s
}

pub const PROFILE_HEADER: &str = "pilot,component,lag,value,value_db,is_excluded\n";

pub fn push_profile(s: &mut String, pilot: usize, component: &str, profile: &CorrelationProfile) {
    for ((lag, v), ex) in profile.lags.iter().zip(&profile.values).zip(&profile.excluded) {
        let _ = writeln!(s, "{pilot},{component},{lag},{v},{},{ex}", 10.0 * v.log10());
    }
}
