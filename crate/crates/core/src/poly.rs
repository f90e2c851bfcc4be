//! Dirichlet polynomials, their Bohr lifts to the polytorus, and closed-form
//! vertical-line means.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::PrimeBasis;
use crate::torus::{MultiIndex, TorusPoint};

/// Relative size of the imaginary part tolerated in a closed-form line mean.
pub const IMAGINARY_RESIDUE_TOLERANCE: f64 = 1e-10;

/// `f(s) = Σ a_n n^{-s}` with finitely many nonzero terms, every frequency
/// factoring over the first `basis.dimension()` primes.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPolynomial {
    basis: PrimeBasis,
    terms: BTreeMap<u64, Complex64>,
}

impl DirichletPolynomial {
    pub fn new(
        basis_dim: usize,
        terms: impl IntoIterator<Item = (u64, Complex64)>,
    ) -> Result<Self> {
        let basis = PrimeBasis::new(basis_dim)?;
        let mut map = BTreeMap::new();
        for (n, a) in terms {
            if n == 0 {
                return Err(Error::Invalid("frequency 0 is not allowed".into()));
            }
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::Invalid(format!("coefficient of n={n} is not finite")));
            }
            if a == Complex64::new(0.0, 0.0) {
                return Err(Error::Invalid(format!("zero coefficient at frequency {n}")));
            }
            if basis.factor(n).is_none() {
                return Err(Error::Dimension(format!(
                    "frequency {n} has a prime factor beyond the first {basis_dim} primes"
                )));
            }
            match map.entry(n) {
                Entry::Occupied(_) => {
                    return Err(Error::Invalid(format!("duplicate frequency {n}")))
                }
                Entry::Vacant(v) => {
                    v.insert(a);
                }
            }
        }
        Ok(Self { basis, terms: map })
    }

    pub fn zero(basis_dim: usize) -> Result<Self> {
        Self::new(basis_dim, std::iter::empty())
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn terms(&self) -> &BTreeMap<u64, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ |a_n|`, an upper bound for the sup norm on the closed half-plane.
    pub fn abs_coefficient_sum(&self) -> f64 {
        self.terms.values().map(|a| a.norm()).sum()
    }

    /// `Σ |a_n|² n^{-2σ}`, the Carlson limit on the line `Re s = σ`.
    pub fn carlson_limit(&self, sigma: f64) -> f64 {
        crate::sum::sorted_sum(
            self.terms
                .iter()
                .map(|(&n, a)| a.norm_sqr() * (n as f64).powf(-2.0 * sigma)),
        )
    }

    pub fn to_json(&self) -> DirichletJson {
        DirichletJson {
            basis_dim: self.basis.dimension(),
            terms: self
                .terms
                .iter()
                .map(|(&n, a)| FrequencyTerm { n, re: a.re, im: a.im })
                .collect(),
        }
    }

    pub fn from_json(json: &DirichletJson) -> Result<Self> {
        Self::new(
            json.basis_dim,
            json.terms.iter().map(|t| (t.n, Complex64::new(t.re, t.im))),
        )
    }
}

/// `F(z) = Σ a_α z^α` over multi-indices of length at most `basis.dimension()`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPolynomial {
    basis: PrimeBasis,
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl TorusPolynomial {
    pub fn new(
        basis_dim: usize,
        terms: impl IntoIterator<Item = (MultiIndex, Complex64)>,
    ) -> Result<Self> {
        let basis = PrimeBasis::new(basis_dim)?;
        let mut map = BTreeMap::new();
        for (alpha, a) in terms {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::Invalid(format!("coefficient of {alpha} is not finite")));
            }
            if a == Complex64::new(0.0, 0.0) {
                return Err(Error::Invalid(format!("zero coefficient at index {alpha}")));
            }
            if alpha.len() > basis_dim {
                return Err(Error::Dimension(format!(
                    "index {alpha} exceeds basis dimension {basis_dim}"
                )));
            }
            match map.entry(alpha) {
                Entry::Occupied(e) => {
                    return Err(Error::Invalid(format!("duplicate index {}", e.key())))
                }
                Entry::Vacant(v) => {
                    v.insert(a);
                }
            }
        }
        Ok(Self { basis, terms: map })
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Longest index in use; `ω` must have at least this many coordinates.
    pub fn max_index_len(&self) -> usize {
        self.terms.keys().map(MultiIndex::len).max().unwrap_or(0)
    }

    pub fn abs_coefficient_sum(&self) -> f64 {
        self.terms.values().map(|a| a.norm()).sum()
    }

    /// Lipschitz constant of `|F|²` with respect to the max-coordinate chord
    /// distance on the polytorus: `2 (Σ|a_α|)(Σ|a_α| |α|_1)`.
    pub fn lipschitz_sq(&self) -> f64 {
        let weighted: f64 = self
            .terms
            .iter()
            .map(|(alpha, a)| a.norm() * alpha.degree() as f64)
            .sum();
        2.0 * self.abs_coefficient_sum() * weighted
    }

    pub fn to_json(&self) -> TorusJson {
        TorusJson {
            basis_dim: Some(self.basis.dimension()),
            terms: self
                .terms
                .iter()
                .map(|(alpha, a)| IndexTerm { alpha: alpha.exponents().to_vec(), re: a.re, im: a.im })
                .collect(),
        }
    }

    /// Without an explicit `basis_dim` the basis is sized by the longest index.
    pub fn from_json(json: &TorusJson) -> Result<Self> {
        let terms: Vec<(MultiIndex, Complex64)> = json
            .terms
            .iter()
            .map(|t| (MultiIndex::new(t.alpha.clone()), Complex64::new(t.re, t.im)))
            .collect();
        let dim = json
            .basis_dim
            .unwrap_or_else(|| terms.iter().map(|(a, _)| a.len()).max().unwrap_or(0).max(1));
        Self::new(dim, terms)
    }
}

/// Send `a_n n^{-s}` to `a_α z^α` where `n = Π p_j^{α_j}`.
pub fn bohr_lift(f: &DirichletPolynomial) -> TorusPolynomial {
    let terms = f
        .terms
        .iter()
        .map(|(&n, &a)| {
            let exps = f
                .basis
                .factor(n)
                .expect("frequencies factor over the basis by construction");
            (MultiIndex::new(exps), a)
        })
        .collect();
    TorusPolynomial {
        basis: f.basis.clone(),
        terms,
    }
}

/// Frequency `Π p_j^{α_j}` in exact integer arithmetic.
pub fn frequency_of(basis: &PrimeBasis, alpha: &MultiIndex) -> Result<u64> {
    if alpha.len() > basis.dimension() {
        return Err(Error::Dimension(format!(
            "index {alpha} exceeds basis dimension {}",
            basis.dimension()
        )));
    }
    alpha
        .exponents()
        .iter()
        .zip(basis.primes())
        .try_fold(1u64, |acc, (&e, &p)| p.checked_pow(e).and_then(|pe| acc.checked_mul(pe)))
        .ok_or_else(|| Error::Overflow(alpha.exponents().to_vec()))
}

/// Inverse of [`bohr_lift`]. Refuses indices whose frequency overflows `u64`.
pub fn bohr_unlift(poly: &TorusPolynomial) -> Result<DirichletPolynomial> {
    let mut terms = BTreeMap::new();
    for (alpha, &a) in &poly.terms {
        terms.insert(frequency_of(&poly.basis, alpha)?, a);
    }
    Ok(DirichletPolynomial {
        basis: poly.basis.clone(),
        terms,
    })
}

/// `f(σ + it) = Σ a_n n^{-σ} e^{-it log n}`.
pub fn eval_dirichlet(f: &DirichletPolynomial, sigma: f64, t: f64) -> Complex64 {
    f.terms
        .iter()
        .map(|(&n, &a)| {
            let log_n = (n as f64).ln();
            a * Complex64::from_polar((-sigma * log_n).exp(), -t * log_n)
        })
        .sum()
}

/// `F(ω) = Σ a_α ω^α`.
pub fn eval_torus(poly: &TorusPolynomial, omega: &TorusPoint) -> Result<Complex64> {
    if omega.dimension() < poly.max_index_len() {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, polynomial needs {}",
            omega.dimension(),
            poly.max_index_len()
        )));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (alpha, &a) in &poly.terms {
        total += a * omega.monomial(alpha)?;
    }
    Ok(total)
}

/// `(1/T) ∫_0^T e^{-itL} dt`, written as `e^{-iTL/2} sinc(TL/2)` so that it
/// stays accurate when `TL` is small.
pub fn character_line_mean(log_ratio: f64, t_max: f64) -> Complex64 {
    let half = 0.5 * t_max * log_ratio;
    let sinc = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    Complex64::from_polar(sinc, -half)
}

/// Exact `(1/T) ∫_0^T |f(σ+it)|² dt` from the term-by-term expansion.
///
/// The imaginary residue of the double sum is checked against
/// [`IMAGINARY_RESIDUE_TOLERANCE`] and then dropped.
pub fn lebesgue_line_mean(f: &DirichletPolynomial, sigma: f64, t_max: f64) -> Result<f64> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Domain(format!("line mean needs T > 0, got {t_max}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("line mean needs σ >= 0, got {sigma}")));
    }
    let terms: Vec<(f64, Complex64)> = f
        .terms
        .iter()
        .map(|(&n, &a)| {
            let log_n = (n as f64).ln();
            (log_n, a * (-sigma * log_n).exp())
        })
        .collect();

    let mut total = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (i, &(log_n, b_n)) in terms.iter().enumerate() {
        for (j, &(log_m, b_m)) in terms.iter().enumerate() {
            let weight = b_n * b_m.conj();
            scale += weight.norm();
            if i == j {
                total += weight;
            } else {
                total += weight * character_line_mean(log_n - log_m, t_max);
            }
        }
    }
    let tolerance = IMAGINARY_RESIDUE_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    if total.im.abs() > tolerance {
        return Err(Error::ImaginaryResidue {
            residue: total.im.abs(),
            tolerance,
        });
    }
    Ok(total.re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyTerm {
    pub n: u64,
    pub re: f64,
    pub im: f64,
}

/// `{"basis_dim": d, "terms": [{"n": 12, "re": 0.0, "im": 1.0}, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletJson {
    pub basis_dim: usize,
    pub terms: Vec<FrequencyTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexTerm {
    pub alpha: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

/// `{"terms": [{"alpha": [2,1], "re": ..., "im": ...}]}` with an optional
/// `basis_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_dim: Option<usize>,
    pub terms: Vec<IndexTerm>,
}

pub fn parse_dirichlet_json(text: &str) -> Result<DirichletPolynomial> {
    DirichletPolynomial::from_json(&serde_json::from_str(text)?)
}

pub fn parse_torus_json(text: &str) -> Result<TorusPolynomial> {
    TorusPolynomial::from_json(&serde_json::from_str(text)?)
}
