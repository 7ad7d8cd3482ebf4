//! Input-output transfer metrics of `X(k+1) = A X(k) + B U(k)`, `y = x_i`.
//!
//! All metrics are zero-state: `y(0) = 0`, inputs run over `k = 0..k_f-1`
//! and outputs over `k = 0..k_f`.

mod frequency;
mod gain;
mod markov;
pub mod opnorm;
pub mod quadrature;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use frequency::{frequency_response, frequency_response_all, FrequencyPoint};
pub use gain::{lp_gain, lp_gain_infinite, lp_gain_multi, lp_gains_all, GainMethod, GainResult};
pub use markov::{impulse_responses, markov_parameters, MarkovSequence};
pub use opnorm::ConvolutionOperator;
pub use quadrature::{
    band_energy, band_energy_all, weighted_band_energy, weighted_band_energy_all, BandEnergy,
    Spectrum,
};

/// A norm index `p` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PNorm(f64);

impl PNorm {
    pub const ONE: PNorm = PNorm(1.0);
    pub const TWO: PNorm = PNorm(2.0);
    pub const INFINITY: PNorm = PNorm(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::invalid(format!("norm index must be >= 1, got {p}")));
        }
        Ok(PNorm(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> PNorm {
        if self.0 == 1.0 {
            PNorm::INFINITY
        } else if self.is_infinite() {
            PNorm::ONE
        } else {
            PNorm(self.0 / (self.0 - 1.0))
        }
    }

    /// The p-norm of a sequence of magnitudes, scaled to avoid overflow.
    pub fn norm<I: IntoIterator<Item = f64>>(self, magnitudes: I) -> f64 {
        let v: Vec<f64> = magnitudes.into_iter().map(f64::abs).collect();
        let max = v.iter().copied().fold(0.0, f64::max);
        if self.is_infinite() || max == 0.0 {
            return max;
        }
        if self.0 == 1.0 {
            return v.iter().sum();
        }
        let p = self.0;
        max * v
            .iter()
            .map(|x| (x / max).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// `sum |x|^p`, the p-th power of the norm (finite `p` only).
    pub fn power_sum<I: IntoIterator<Item = f64>>(self, magnitudes: I) -> f64 {
        magnitudes.into_iter().map(|x| x.abs().powf(self.0)).sum()
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(PNorm::INFINITY),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse norm index '{other}'")))?;
                PNorm::new(p)
            }
        }
    }
}

impl Serialize for PNorm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Number(f64),
    Text(String),
}

impl<'de> Deserialize<'de> for PNorm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match NumberOrText::deserialize(deserializer)? {
            NumberOrText::Number(p) => PNorm::new(p),
            NumberOrText::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// A time horizon `k_f`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(k) => write!(f, "{k}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Horizon::Infinite),
            other => other
                .parse()
                .map(Horizon::Finite)
                .map_err(|_| Error::invalid(format!("cannot parse horizon '{other}'"))),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(k) => serializer.serialize_u64(*k as u64),
            Horizon::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match NumberOrText::deserialize(deserializer)? {
            NumberOrText::Number(k) if k >= 0.0 && k.fract() == 0.0 => {
                Ok(Horizon::Finite(k as usize))
            }
            NumberOrText::Number(k) => Err(serde::de::Error::custom(format!("bad horizon {k}"))),
            NumberOrText::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
