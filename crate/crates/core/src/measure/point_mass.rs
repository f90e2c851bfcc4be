use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{eval_torus, TorusPolynomial};
use crate::torus::{MultiIndex, TorusPoint};

/// Absolute tolerance on `Σ c_j = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// `μ = Σ c_j δ_{ω_j}` on the `d`-torus with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPointMassMeasure {
    dimension: usize,
    atoms: Vec<(TorusPoint, f64)>,
}

impl TorusPointMassMeasure {
    pub fn new(dimension: usize, atoms: Vec<(TorusPoint, f64)>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Invalid("point-mass measure needs dimension >= 1".into()));
        }
        if atoms.is_empty() {
            return Err(Error::Invalid("point-mass measure needs at least one atom".into()));
        }
        for (j, (omega, c)) in atoms.iter().enumerate() {
            if omega.dimension() != dimension {
                return Err(Error::Dimension(format!(
                    "atom {j} has {} angles, measure dimension is {dimension}",
                    omega.dimension()
                )));
            }
            if !(*c > 0.0) || !c.is_finite() {
                return Err(Error::Invalid(format!("weight c_{j} = {c} must be positive")));
            }
        }
        let total: f64 = atoms.iter().map(|(_, c)| c).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Invalid(format!(
                "weights must satisfy Σ c_j = 1 (within {WEIGHT_SUM_TOLERANCE:e}), got {total}"
            )));
        }
        Ok(Self { dimension, atoms })
    }

    /// Unit mass at one point.
    pub fn dirac(omega: TorusPoint) -> Self {
        Self {
            dimension: omega.dimension(),
            atoms: vec![(omega, 1.0)],
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn atoms(&self) -> &[(TorusPoint, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `∫ |F|² dμ = Σ c_j |F(ω_j)|²`.
    pub fn space_average(&self, poly: &TorusPolynomial) -> Result<f64> {
        let mut total = 0.0;
        for (omega, c) in &self.atoms {
            total += c * eval_torus(poly, omega)?.norm_sqr();
        }
        Ok(total)
    }

    /// `∫ z^α conj(z^β) dμ`.
    pub fn moment(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Result<num_complex::Complex64> {
        let mut total = num_complex::Complex64::new(0.0, 0.0);
        for (omega, c) in &self.atoms {
            total += *c * omega.character(alpha, beta)?;
        }
        Ok(total)
    }

    pub fn to_json(&self) -> PointMassJson {
        PointMassJson {
            dim: self.dimension,
            atoms: self
                .atoms
                .iter()
                .map(|(omega, c)| PointMassAtomJson {
                    theta: omega.angles().to_vec(),
                    c: *c,
                })
                .collect(),
        }
    }

    pub fn from_json(json: &PointMassJson) -> Result<Self> {
        let atoms = json
            .atoms
            .iter()
            .map(|a| Ok((TorusPoint::new(a.theta.iter().copied())?, a.c)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(json.dim, atoms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMassAtomJson {
    pub theta: Vec<f64>,
    pub c: f64,
}

/// `{"dim": d, "atoms": [{"theta": [...], "c": 0.5}, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMassJson {
    pub dim: usize,
    pub atoms: Vec<PointMassAtomJson>,
}

pub fn parse_point_mass_json(text: &str) -> Result<TorusPointMassMeasure> {
    TorusPointMassMeasure::from_json(&serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn point(a: &[f64]) -> TorusPoint {
        TorusPoint::new(a.iter().copied()).unwrap()
    }

    #[test]
    fn weights_must_sum_to_one() {
        let err = TorusPointMassMeasure::new(1, vec![(point(&[0.0]), 0.5), (point(&[1.0]), 0.4)])
            .unwrap_err();
        assert!(err.to_string().contains("Σ c_j = 1"), "{err}");
        assert!(TorusPointMassMeasure::new(1, vec![(point(&[0.0]), 1.0 + 1e-13)]).is_ok());
        assert!(TorusPointMassMeasure::new(1, vec![(point(&[0.0]), 1.0 + 1e-11)]).is_err());
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(TorusPointMassMeasure::new(1, vec![]).is_err());
        assert!(TorusPointMassMeasure::new(2, vec![(point(&[0.0]), 1.0)]).is_err());
        assert!(
            TorusPointMassMeasure::new(1, vec![(point(&[0.0]), 1.5), (point(&[0.0]), -0.5)])
                .is_err()
        );
    }

    #[test]
    fn space_average_examples() {
        let z1 = TorusPolynomial::new(1, [(MultiIndex::new(vec![1]), Complex64::new(1.0, 0.0))])
            .unwrap();
        let dirac = TorusPointMassMeasure::dirac(point(&[0.7]));
        assert!((dirac.space_average(&z1).unwrap() - 1.0).abs() < 1e-15);

        let one_plus_z1 = TorusPolynomial::new(
            1,
            [
                (MultiIndex::zero(), Complex64::new(1.0, 0.0)),
                (MultiIndex::new(vec![1]), Complex64::new(1.0, 0.0)),
            ],
        )
        .unwrap();
        let half = TorusPointMassMeasure::new(1, vec![(point(&[0.0]), 0.5), (point(&[PI]), 0.5)])
            .unwrap();
        assert!((half.space_average(&one_plus_z1).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"dim": 2, "atoms": [{"theta": [0.0, 1.0], "c": 0.25}, {"theta": [3.0, 2.0], "c": 0.75}]}"#;
        let mu = parse_point_mass_json(text).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(TorusPointMassMeasure::from_json(&mu.to_json()).unwrap(), mu);
    }
}
