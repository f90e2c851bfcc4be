//! Multi-indices, points on the polytorus and the vertical-line flow.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::PrimeBasis;

/// Reduce an angle to its canonical representative in `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly 2π.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles measured along the unit circle, in `[0, π]`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d).max(0.0)
}

/// Euclidean distance between `e^{ia}` and `e^{ib}`.
pub fn chord_distance(a: f64, b: f64) -> f64 {
    2.0 * (circle_distance(a, b) / 2.0).sin()
}

/// Angle `(-t log p) mod 2π` of one coordinate of the flow.
#[inline]
pub fn flow_angle(log_p: f64, t: f64) -> f64 {
    wrap_angle(-t * log_p)
}

/// Finitely supported exponent vector `(α_1, ..., α_d, 0, ...)`.
///
/// Trailing zeros are stripped on construction, so two spellings of the same
/// monomial compare and hash equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(mut exponents: Vec<u32>) -> Self {
        while exponents.last() == Some(&0) {
            exponents.pop();
        }
        Self(exponents)
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Number of coordinates up to the last nonzero exponent.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, r: usize) -> u32 {
        self.0.get(r).copied().unwrap_or(0)
    }

    /// `|α|_1`.
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&a| a as u64).sum()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self::new(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// The point `ω = (e^{iθ_1}, ..., e^{iθ_d})`, stored by its angles.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    angles: Vec<f64>,
}

impl TorusPoint {
    pub fn new(angles: impl IntoIterator<Item = f64>) -> Result<Self> {
        let angles: Vec<f64> = angles.into_iter().collect();
        if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::Invalid(format!("torus angle {bad} is not finite")));
        }
        Ok(Self {
            angles: angles.into_iter().map(wrap_angle).collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angle(&self, r: usize) -> f64 {
        self.angles[r]
    }

    /// `ω^α = exp(i Σ θ_r α_r)`.
    pub fn monomial(&self, alpha: &MultiIndex) -> Result<Complex64> {
        if alpha.len() > self.dimension() {
            return Err(Error::Dimension(format!(
                "multi-index {alpha} needs {} coordinates, point has {}",
                alpha.len(),
                self.dimension()
            )));
        }
        let phase: f64 = alpha
            .exponents()
            .iter()
            .zip(&self.angles)
            .map(|(&a, &theta)| a as f64 * theta)
            .sum();
        Ok(Complex64::from_polar(1.0, phase))
    }

    /// `ω^α · conj(ω^β)`.
    pub fn character(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Result<Complex64> {
        Ok(self.monomial(alpha)? * self.monomial(beta)?.conj())
    }
}

/// Image of `t` under the vertical-line flow started at the identity:
/// `θ_j = (-t log p_j) mod 2π`.
pub fn flow_point(basis: &PrimeBasis, t: f64) -> TorusPoint {
    TorusPoint {
        angles: basis.logs().iter().map(|&l| flow_angle(l, t)).collect(),
    }
}
