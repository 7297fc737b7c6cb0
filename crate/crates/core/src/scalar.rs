//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Real floating point type the library is generic over (`f32` or `f64`).
///
/// Arithmetic goes through [`RealField`]; conversions through num-traits.
pub trait Scalar:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + FloatConst
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + std::fmt::Display
{
    /// Machine epsilon of the type.
    const EPSILON: f64;

    /// Default tolerance table for this precision.
    fn tolerances() -> Tolerances;

    /// Converts an `f64` literal; total for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const EPSILON: f64 = f64::EPSILON;

    fn tolerances() -> Tolerances {
        Tolerances::default()
    }
}

impl Scalar for f32 {
    const EPSILON: f64 = f32::EPSILON as f64;

    fn tolerances() -> Tolerances {
        Tolerances {
            herm: 1e-4,
            eig: 1e-4,
            unit: 1e-4,
            psd: 1e-4,
            gram: 1e-4,
            pivot: 1e-4,
            kraus_prune: 1e-6,
        }
    }
}

/// Named numerical tolerances. All values are absolute unless noted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Hermiticity check, max-norm of `M - M†`.
    pub herm: f64,
    /// Eigendecomposition residual, relative to the max-norm of the input.
    pub eig: f64,
    /// Unitarity check, max-norm of `U†U - 1`.
    pub unit: f64,
    /// Slack allowed below zero in PSD checks.
    pub psd: f64,
    /// Allowed difference between Gram matrices in isometry completion.
    pub gram: f64,
    /// Residual-norm threshold for pivoted orthogonalization.
    pub pivot: f64,
    /// Eigenvalues of `d·J` below this are dropped when extracting Kraus operators.
    pub kraus_prune: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            eig: 1e-10,
            unit: 1e-10,
            psd: 1e-9,
            gram: 1e-9,
            pivot: 1e-9,
            kraus_prune: 1e-12,
        }
    }
}

impl Tolerances {
    /// Names accepted by [`Tolerances::set`].
    pub const NAMES: [&'static str; 7] = ["herm", "eig", "unit", "psd", "gram", "pivot", "kraus_prune"];

    /// Overrides one tolerance by name. Returns `false` for an unknown name.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "herm" => &mut self.herm,
            "eig" => &mut self.eig,
            "unit" => &mut self.unit,
            "psd" => &mut self.psd,
            "gram" => &mut self.gram,
            "pivot" => &mut self.pivot,
            "kraus_prune" => &mut self.kraus_prune,
            _ => return false,
        };
        *slot = value;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_by_name() {
        let mut t = Tolerances::default();
        assert!(t.set("psd", 1e-30));
        assert_eq!(t.psd, 1e-30);
        assert!(!t.set("nope", 1.0));
        for name in Tolerances::NAMES {
            assert!(t.set(name, 0.5));
        }
    }

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f64 as Scalar>::lit(0.25), 0.25);
        assert_eq!(<f32 as Scalar>::lit(0.25), 0.25f32);
    }
}
