use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::element::VElement;
use crate::error::Error;

/// A split activation: one real function applied independently to every
/// coordinate, so `φ(ψ(x)) = ψ_R(φ(x))` holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SplitActivation {
    #[default]
    Identity,
    Relu,
    Sigmoid,
    Tanh,
}

impl SplitActivation {
    pub const ALL: [SplitActivation; 4] = [
        SplitActivation::Identity,
        SplitActivation::Relu,
        SplitActivation::Sigmoid,
        SplitActivation::Tanh,
    ];

    /// The underlying real function `ψ_R`.
    #[inline]
    pub fn real(self, t: f64) -> f64 {
        match self {
            SplitActivation::Identity => t,
            SplitActivation::Relu => t.max(0.0),
            SplitActivation::Sigmoid => 1.0 / (1.0 + (-t).exp()),
            SplitActivation::Tanh => t.tanh(),
        }
    }

    /// `ψ_R'(t)`, given the pre-activation `t` and the output `y = ψ_R(t)`.
    #[inline]
    pub fn derivative(self, t: f64, y: f64) -> f64 {
        match self {
            SplitActivation::Identity => 1.0,
            SplitActivation::Relu => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SplitActivation::Sigmoid => y * (1.0 - y),
            SplitActivation::Tanh => 1.0 - y * y,
        }
    }

    pub fn apply(self, x: &VElement) -> VElement {
        VElement::from_vec_unchecked(x.coords().iter().map(|t| self.real(*t)).collect())
    }

    pub fn apply_in_place(self, xs: &mut [f64]) {
        if self == SplitActivation::Identity {
            return;
        }
        for t in xs {
            *t = self.real(*t);
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SplitActivation::Identity => "identity",
            SplitActivation::Relu => "relu",
            SplitActivation::Sigmoid => "sigmoid",
            SplitActivation::Tanh => "tanh",
        }
    }
}

impl fmt::Display for SplitActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitActivation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SplitActivation::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownActivation(s.to_string()))
    }
}
