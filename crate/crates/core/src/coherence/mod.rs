//! Coherence of states and channels, hypothesis-testing divergence, channel robustness
//! and the superchannel discrimination game.

mod discrimination;
mod divergence;
mod robustness;

use std::fmt;

use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use discrimination::{
    discrimination_seesaw, robustness_bound_check, BoundReport, DiscriminationInstance, IterRecord,
};
pub use divergence::{dh_channel_divergence_lower, hypothesis_test_divergence};
pub use robustness::{robustness, RobustnessCertificate};

use crate::channels::{check_density, random_channel, Channel};
use crate::error::Result;
use crate::matcore::linalg::herm_eig;
use crate::matcore::matrix::{cabs, Matrix};
use crate::matcore::random::Rng;
use crate::scalar::Scalar;
use crate::superchannels::DephasingSuperchannel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CoherenceMeasure {
    /// Sum of absolute off-diagonal entries.
    L1,
    /// `S(Δ(ρ)) − S(ρ)` in bits.
    RelEnt,
}

impl fmt::Display for CoherenceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::L1 => "L1",
            Self::RelEnt => "REL_ENT",
        })
    }
}

/// A real number or `+∞`. Serialized as a JSON number, or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(x) => x,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }

    pub fn max(self, other: Self) -> Self {
        if self.value() >= other.value() {
            self
        } else {
            other
        }
    }

    /// `2^x`.
    pub fn exp2(self) -> Self {
        match self {
            Self::Finite(x) if x.exp2().is_finite() => Self::Finite(x.exp2()),
            _ => Self::Infinite,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(x) => write!(f, "{x}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(x) => s.serialize_f64(*x),
            Self::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(de)? {
            Repr::Num(x) => Ok(Self::Finite(x)),
            Repr::Str(s) if s == "inf" => Ok(Self::Infinite),
            Repr::Str(s) => Err(D::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

/// Von Neumann entropy in bits of a spectrum; negative rounding noise is ignored.
fn entropy<T: Scalar>(p: impl IntoIterator<Item = T>) -> T {
    p.into_iter()
        .filter(|&x| x > T::zero())
        .fold(T::zero(), |s, x| s - x * x.log2())
}

fn coherence_unchecked<T: Scalar>(rho: &Matrix<T>, m: CoherenceMeasure) -> Result<T> {
    let n = rho.rows();
    match m {
        CoherenceMeasure::L1 => {
            let mut s = T::zero();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += cabs(rho[(i, j)]);
                    }
                }
            }
            Ok(s)
        }
        CoherenceMeasure::RelEnt => {
            let diag = entropy(rho.diagonal().iter().map(|z| z.re));
            let full = entropy(herm_eig(&rho.hermitian_part())?.values);
            Ok((diag - full).max(T::zero()))
        }
    }
}

pub fn state_coherence<T: Scalar>(rho: &Matrix<T>, m: CoherenceMeasure) -> Result<T> {
    check_density(rho)?;
    coherence_unchecked(rho, m)
}

/// `max_k C(E(|k⟩⟨k|))`.
pub fn cohering_power<T: Scalar>(ch: &Channel<T>, m: CoherenceMeasure) -> T {
    let d = ch.dim();
    (0..d)
        .map(|k| {
            let out = ch.apply_linear(&Matrix::unit(d, k, k)).hermitian_part();
            coherence_unchecked(&out, m).expect("channel output is Hermitian")
        })
        .fold(T::zero(), |a, b| a.max(b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl GapSummary {
    fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Self { min: v[0], median, mean: v.iter().sum::<f64>() / n as f64, max: v[n - 1] }
    }
}

/// Result of sampling `(channel, superchannel)` pairs and comparing cohering powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub dim: usize,
    pub measure: CoherenceMeasure,
    pub trials: usize,
    pub tolerance: f64,
    /// Trials with `C_g(Ξ[E]) > C_g(E) + tolerance`.
    pub violations: usize,
    /// Largest `C_g(Ξ[E]) − C_g(E)`, clipped at zero.
    pub max_violation: f64,
    /// Distribution of `C_g(Ξ[E]) − C_g(E)`.
    pub gap: GapSummary,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Tolerance on `C_g(Ξ[E]) ≤ C_g(E)`.
pub const MONOTONICITY_TOL: f64 = 1e-9;

/// `C_g(Ξ[E]) − C_g(E)` for one pair.
pub fn cohering_power_gap<T: Scalar>(
    sc: &DephasingSuperchannel<T>,
    ch: &Channel<T>,
    m: CoherenceMeasure,
) -> Result<f64> {
    let out = sc.apply(ch)?;
    Ok((cohering_power(&out, m) - cohering_power(ch, m)).to_f64_lossy())
}

/// Samples random channels (random Kraus rank) and random superchannels and checks that
/// cohering power never increases. Trial `i` uses stream `i` split from `rng`.
pub fn monotonicity_suite<T: Scalar>(
    rng: &mut Rng,
    trials: usize,
    d: usize,
    m: CoherenceMeasure,
) -> Result<MonotonicityReport> {
    if trials == 0 {
        return Err(crate::error::Error::InvalidArgument("trials must be at least 1".into()));
    }
    let base = rng.split();
    let gaps = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = base.derive(i as u64);
            let rank = r.range(1, d * d);
            let ch = random_channel::<T>(&mut r, d, rank)?;
            let sc = DephasingSuperchannel::<T>::sample(&mut r, d);
            cohering_power_gap(&sc, &ch, m)
        })
        .collect::<Result<Vec<f64>>>()?;
    let violations = gaps.iter().filter(|&&g| g > MONOTONICITY_TOL).count();
    let max_violation = gaps.iter().fold(0.0f64, |a, &g| a.max(g));
    Ok(MonotonicityReport {
        dim: d,
        measure: m,
        trials,
        tolerance: MONOTONICITY_TOL,
        violations,
        max_violation,
        gap: GapSummary::of(&gaps),
    })
}
