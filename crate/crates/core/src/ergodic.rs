//! Time means along the imaginary axis, space averages on the polytorus, and
//! moments of a torus measure read off a line measure.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{AtomicLineMeasure, LineAtom, TorusPointMassMeasure};
use crate::poly::{
    character_line_mean, eval_dirichlet, eval_torus, lebesgue_line_mean, DirichletPolynomial,
    TorusPolynomial,
};
use crate::primes::PrimeBasis;
use crate::sum::{sorted_sum, NeumaierSum};
use crate::torus::{flow_point, MultiIndex, TorusPoint};

/// Atoms per parallel chunk. Partial sums are combined in chunk order, so a
/// mean does not depend on the thread count.
const CHUNK: usize = 8192;

pub const MEAN_BOUND_SLACK: f64 = 1e-12;

/// A measure on `[0, ∞)` that time means are taken against.
#[derive(Debug, Clone, Copy)]
pub enum LineMeasure<'a> {
    Atomic(&'a AtomicLineMeasure),
    /// `dt` on the vertical line `Re s = σ`.
    Lebesgue { sigma: f64 },
}

impl LineMeasure<'_> {
    fn label(&self) -> String {
        match self {
            LineMeasure::Atomic(l) => format!("atomic(levels={},growth={})", l.levels(), l.growth()),
            LineMeasure::Lebesgue { sigma } => format!("lebesgue(sigma={sigma})"),
        }
    }
}

/// `(Σ w_i g(t_i), Σ w_i)` over the atoms, chunked as described at [`CHUNK`].
fn chunked_sums(atoms: &[LineAtom], g: impl Fn(f64) -> f64 + Sync) -> (f64, f64) {
    let partials: Vec<(NeumaierSum, NeumaierSum)> = atoms
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut num = NeumaierSum::new();
            let mut den = NeumaierSum::new();
            for a in chunk {
                num += a.w * g(a.t);
                den += a.w;
            }
            (num, den)
        })
        .collect();
    let mut num = NeumaierSum::new();
    let mut den = NeumaierSum::new();
    for (n, d) in partials {
        num += n.value();
        den += d.value();
    }
    (num.value(), den.value())
}

fn atoms_up_to(lambda: &AtomicLineMeasure, t_max: f64) -> Result<&[LineAtom]> {
    let atoms = &lambda.atoms()[..lambda.count_up_to(t_max)];
    if atoms.iter().all(|a| a.w == 0.0) {
        return Err(Error::EmptyMeasure(t_max));
    }
    Ok(atoms)
}

/// `(Σ_{t_i ≤ T} w_i |f(i t_i)|²) / λ([0, T])`.
pub fn atomic_time_mean(f: &DirichletPolynomial, lambda: &AtomicLineMeasure, t_max: f64) -> Result<f64> {
    let atoms = atoms_up_to(lambda, t_max)?;
    let (num, den) = chunked_sums(atoms, |t| eval_dirichlet(f, 0.0, t).norm_sqr());
    Ok(num / den)
}

/// `Σ c_j |F(ω_j)|²`.
pub fn point_mass_space_average(poly: &TorusPolynomial, mu: &TorusPointMassMeasure) -> Result<f64> {
    mu.space_average(poly)
}

/// `∫ |F|² dm = Σ_α |a_α|²` for Haar measure `m`.
pub fn lebesgue_space_average(poly: &TorusPolynomial) -> f64 {
    sorted_sum(poly.terms().values().map(|a| a.norm_sqr()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl MonteCarloEstimate {
    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Estimate of `∫ |F|² dm` from uniform samples on the torus.
pub fn monte_carlo_space_average(poly: &TorusPolynomial, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::Invalid("Monte Carlo needs at least two samples".into()));
    }
    let d = poly.max_index_len().max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = NeumaierSum::new();
    let mut sum_sq = NeumaierSum::new();
    let mut angles = vec![0.0; d];
    for _ in 0..samples {
        for a in angles.iter_mut() {
            *a = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        let v = eval_torus(poly, &TorusPoint::new(angles.iter().copied())?)?.norm_sqr();
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum.value() / n;
    let var = ((sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub time_mean: f64,
    pub target: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub poly_id: String,
    pub measure_id: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceRecord {
    pub fn final_error(&self) -> Option<f64> {
        self.rows.last().map(|r| r.abs_error)
    }

    /// Rows whose time mean falls outside `[0, bound]`, allowing a relative
    /// rounding slack of `MEAN_BOUND_SLACK`.
    pub fn mean_bound_violations(&self, bound: f64) -> Vec<usize> {
        let slack = MEAN_BOUND_SLACK * bound;
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !(r.time_mean >= -slack && r.time_mean <= bound + slack))
            .map(|(i, _)| i)
            .collect()
    }

    /// `T,time_mean,target,abs_error` with one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,time_mean,target,abs_error\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.t, r.time_mean, r.target, r.abs_error));
        }
        out
    }
}

/// `‖f‖²_∞ ≤ (Σ|a_n|)²`, the bound every time mean must respect.
pub fn mean_upper_bound(f: &DirichletPolynomial) -> f64 {
    f.abs_coefficient_sum().powi(2)
}

/// Time mean of `|f|²` at each `T` in `t_grid`, against `target`.
pub fn convergence_sweep(
    f: &DirichletPolynomial,
    line: LineMeasure<'_>,
    target: f64,
    t_grid: &[f64],
) -> Result<ConvergenceRecord> {
    if t_grid.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::Domain("T grid must be positive and finite".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("T grid must be strictly increasing".into()));
    }
    let rows = t_grid
        .iter()
        .map(|&t| {
            let time_mean = match line {
                LineMeasure::Atomic(lambda) => atomic_time_mean(f, lambda, t)?,
                LineMeasure::Lebesgue { sigma } => lebesgue_line_mean(f, sigma, t)?,
            };
            Ok(ConvergenceRow {
                t,
                time_mean,
                target,
                abs_error: (time_mean - target).abs(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceRecord {
        poly_id: poly_label(f),
        measure_id: line.label(),
        rows,
    })
}

fn poly_label(f: &DirichletPolynomial) -> String {
    let terms: Vec<String> = f
        .terms()
        .iter()
        .map(|(n, a)| format!("({}{:+}i)*{n}^-s", a.re, a.im))
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

/// Upper bound on `|mean over [0, T_K] - Σ c_j |F(ω_j)|²|` for a point-mass
/// construction on a `dimension`-torus, where `level_masses` holds
/// `λ[0, T_1], ..., λ[0, T_K]`.
///
/// The top level contributes `L_F √d 2^{-K+1}` and the prior levels carry
/// `S² / (2^K + 1)`, with `S = Σ|a_α|` and `L_F` from
/// [`TorusPolynomial::lipschitz_sq`]. When level `K` does not dominate the
/// mass (slow growth), each prior level also adds its mass share times
/// `min(S², L_F √d 2^{-k+1})`, or `S²` while `k < d` leaves coordinates
/// unconstrained.
pub fn point_mass_error_bound(poly: &TorusPolynomial, dimension: usize, level_masses: &[f64]) -> f64 {
    let levels = level_masses.len() as u32;
    let s2 = poly.abs_coefficient_sum().powi(2);
    let lip = poly.lipschitz_sq() * (dimension as f64).sqrt();
    let slack = |k: u32| -> f64 {
        if (k as usize) < dimension {
            s2
        } else {
            s2.min(lip * 0.5f64.powi(k as i32 - 1))
        }
    };
    let total = level_masses.last().copied().unwrap_or(0.0);
    if levels == 0 || total <= 0.0 {
        return s2;
    }
    let mut bound = slack(levels) + s2 / (2f64.powi(levels as i32) + 1.0);
    let mut prev = 0.0;
    for k in 1..levels {
        let m = level_masses[k as usize - 1];
        bound += (m - prev) / total * slack(k);
        prev = m;
    }
    bound
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentPair {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub empirical: Complex64,
    /// `∫ z^α conj(z^β) dμ` when a source measure is attached.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Complex64>,
}

impl MomentPair {
    pub fn error(&self) -> Option<f64> {
        self.reference.map(|r| (self.empirical - r).norm())
    }
}

/// Empirical moments `∫ z^α conj(z^β)` of the torus measure seen through
/// `line` up to time `T`: the mean of `Π p_r^{-it(α_r-β_r)}`. For the
/// Lebesgue line this is the exact integral; `σ` plays no role.
pub fn recover_moments(
    line: LineMeasure<'_>,
    pairs: &[(MultiIndex, MultiIndex)],
    t_max: f64,
    mu: Option<&TorusPointMassMeasure>,
) -> Result<Vec<MomentPair>> {
    let needed = pairs
        .iter()
        .map(|(a, b)| a.len().max(b.len()))
        .max()
        .unwrap_or(0);
    if let Some(mu) = mu {
        if needed > mu.dimension() {
            return Err(Error::Dimension(format!(
                "moment index needs {needed} coordinates, μ has {}",
                mu.dimension()
            )));
        }
    }
    let basis = PrimeBasis::new(needed.max(1))?;
    let atoms = match line {
        LineMeasure::Atomic(lambda) => Some(atoms_up_to(lambda, t_max)?),
        LineMeasure::Lebesgue { .. } => {
            if !(t_max > 0.0) || !t_max.is_finite() {
                return Err(Error::EmptyMeasure(t_max));
            }
            None
        }
    };

    pairs
        .iter()
        .map(|(alpha, beta)| {
            let empirical = if alpha == beta {
                Complex64::new(1.0, 0.0)
            } else {
                match atoms {
                    Some(atoms) => {
                        let re = chunked_sums(atoms, |t| {
                            flow_point(&basis, t).character(alpha, beta).map(|c| c.re).unwrap_or(f64::NAN)
                        });
                        let im = chunked_sums(atoms, |t| {
                            flow_point(&basis, t).character(alpha, beta).map(|c| c.im).unwrap_or(f64::NAN)
                        });
                        Complex64::new(re.0 / re.1, im.0 / im.1)
                    }
                    None => {
                        let log_ratio: f64 = (0..needed)
                            .map(|r| (alpha.get(r) as f64 - beta.get(r) as f64) * basis.log(r))
                            .sum();
                        character_line_mean(log_ratio, t_max)
                    }
                }
            };
            let reference = mu.map(|m| m.moment(alpha, beta)).transpose()?;
            Ok(MomentPair {
                alpha: alpha.clone(),
                beta: beta.clone(),
                empirical,
                reference,
            })
        })
        .collect()
}
