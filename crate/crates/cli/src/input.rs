//! Reading objects from JSON files.
//!
//! Parsing happens in two stages so that malformed files and well-formed but invalid
//! objects map to different exit codes.

use std::fs;
use std::path::Path;

use dephaser_core::{Channel, ComplexMatrix, DephasingSuperchannel};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::Failure;

#[derive(Deserialize)]
pub struct RawSuperchannel {
    pub dim: usize,
    pub correlation: ComplexMatrix,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawChannel {
    Jamiolkowski { dim: usize, jamiolkowski: ComplexMatrix },
    Kraus { dim: usize, kraus: Vec<ComplexMatrix> },
}

fn read<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn raw_superchannel(path: &Path) -> Result<RawSuperchannel, Failure> {
    read(path)
}

pub fn superchannel(path: &Path) -> Result<DephasingSuperchannel, Failure> {
    let raw = raw_superchannel(path)?;
    DephasingSuperchannel::new(raw.correlation, raw.dim).map_err(|e| Failure::from(e).context(path))
}

pub fn channel(path: &Path) -> Result<Channel, Failure> {
    let (dim, ch) = match read::<RawChannel>(path)? {
        RawChannel::Jamiolkowski { dim, jamiolkowski } => (dim, Channel::from_jamiolkowski(jamiolkowski)),
        RawChannel::Kraus { dim, kraus } => (dim, Channel::from_kraus(kraus)),
    };
    let ch = ch.map_err(|e| Failure::from(e).context(path))?;
    if ch.dim() != dim {
        return Err(Failure::semantic(format!("{}: declared dim {dim}, matrices have dim {}", path.display(), ch.dim())));
    }
    Ok(ch)
}
