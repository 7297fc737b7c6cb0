//! Reference objects shipped with the repository as JSON (`fixtures/`).

use crate::channels::Channel;
use crate::superchannels::DephasingSuperchannel;

pub const NPT_QUTRIT_JSON: &str = include_str!("../../../fixtures/npt_qutrit.json");
pub const SIGN_FLIP_JSON: &str = include_str!("../../../fixtures/sign_flip.json");
pub const HADAMARD_JSON: &str = include_str!("../../../fixtures/hadamard.json");

/// Qutrit superchannel with an NPT correlation matrix.
pub fn npt_qutrit() -> DephasingSuperchannel<f64> {
    serde_json::from_str(NPT_QUTRIT_JSON).expect("bundled fixture is valid")
}

/// Qubit superchannel that post-processes with `Z`.
pub fn sign_flip() -> DephasingSuperchannel<f64> {
    serde_json::from_str(SIGN_FLIP_JSON).expect("bundled fixture is valid")
}

pub fn hadamard() -> Channel<f64> {
    serde_json::from_str(HADAMARD_JSON).expect("bundled fixture is valid")
}
