//! Line measure for a general torus measure `μ`, given a finite sequence of
//! point-mass approximants `μ_1, μ_2, ...` and a finite family of test
//! polynomials.
//!
//! Level `k` uses the sources `μ_1..μ_{growth(k)}` and lays down
//! `‖λ^{(k-1)}‖` consecutive windows (one window at level 1). Inside a window
//! every source contributes a repetition of its point-mass atoms, normalized
//! to unit mass. The window is accepted once each source's windowed mean is
//! within `2^{-k}` of `∫|F|² dμ_s` for every test polynomial; otherwise the
//! window is rebuilt at the next approximation precision. So
//! `λ[0, T_{k+1}] = (growth(k) + 1) λ[0, T_k]`.
//!
//! The guarantee holds for the supplied test family only, not for a dense
//! family of polynomials.

use serde::{Deserialize, Serialize};

use super::atomic::{AtomicLineMeasure, LineAtom};
use super::build::{construction_error, level_step, level_tolerance, place_repetition, BuildOptions};
use super::point_mass::{PointMassJson, TorusPointMassMeasure};
use super::window::check_atoms;
use crate::error::{Error, Result};
use crate::poly::{TorusJson, TorusPolynomial};
use crate::primes::PrimeBasis;

/// Highest precision tried above the level before a window is given up.
pub const MAX_EXTRA_PRECISION: u32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct NestedConstructionPlan {
    pub mu_sequence: Vec<TorusPointMassMeasure>,
    pub test_polynomials: Vec<TorusPolynomial>,
}

impl NestedConstructionPlan {
    pub fn from_json(json: &PlanJson) -> Result<Self> {
        Ok(Self {
            mu_sequence: json
                .mu_sequence
                .iter()
                .map(TorusPointMassMeasure::from_json)
                .collect::<Result<_>>()?,
            test_polynomials: json
                .test_polynomials
                .iter()
                .map(TorusPolynomial::from_json)
                .collect::<Result<_>>()?,
        })
    }

    pub fn to_json(&self) -> PlanJson {
        PlanJson {
            mu_sequence: self.mu_sequence.iter().map(|m| m.to_json()).collect(),
            test_polynomials: self.test_polynomials.iter().map(|p| p.to_json()).collect(),
        }
    }
}

/// `{"mu_sequence": [<μ JSON>, ...], "test_polynomials": [<torus polynomial JSON>, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanJson {
    pub mu_sequence: Vec<PointMassJson>,
    pub test_polynomials: Vec<TorusJson>,
}

/// One accepted window `[T_k^{(ℓ-1)}, T_k^{(ℓ)}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub level: u32,
    /// `ℓ`, counted from 1.
    pub index: u64,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Worst windowed-mean error over sources and test polynomials.
    pub estimate: f64,
    pub tolerance: f64,
    /// Approximation precision `p` the window's atoms were placed at.
    pub precision: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedConstruction {
    pub lambda: AtomicLineMeasure,
    pub windows: Vec<WindowRecord>,
}

impl NestedConstruction {
    /// Window boundaries `T_1 = T_1^{(0)} < T_1^{(1)} < ...` in order.
    pub fn window_boundaries(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.windows.first().map(|w| w.t_lo).into_iter().collect();
        out.extend(self.windows.iter().map(|w| w.t_hi));
        out
    }
}

struct WindowAttempt {
    atoms: Vec<LineAtom>,
    end: f64,
    estimate: f64,
}

fn attempt_window(
    plan: &NestedConstructionPlan,
    bases: &[PrimeBasis],
    sources: usize,
    level: u32,
    window: u64,
    precision: u32,
    start: f64,
    options: &BuildOptions<'_>,
) -> Result<WindowAttempt> {
    let mut atoms = Vec::new();
    let mut cursor = start;
    let mut estimate: f64 = 0.0;
    for s in 0..sources {
        let mu = &plan.mu_sequence[s];
        let basis = &bases[s];
        let placed = place_repetition(basis, mu, precision, cursor, options)
            .map_err(|(j, e)| construction_error(level, j, window, e))?;
        let source_atoms: Vec<LineAtom> = placed
            .iter()
            .map(|&(t, j)| LineAtom {
                t,
                w: mu.atoms()[j].1,
                k: level,
                j: j as u32,
                m: window,
                s: Some(s as u32),
            })
            .collect();
        let report = check_atoms(&source_atoms, &plan.test_polynomials, mu, f64::INFINITY)?;
        estimate = estimate.max(report.worst_error);
        cursor = placed.last().map(|p| p.0).unwrap_or(cursor) + level_step(basis, precision);
        atoms.extend(source_atoms);
    }
    Ok(WindowAttempt {
        atoms,
        end: cursor,
        estimate,
    })
}

/// Build `λ^{(K)}` for the approximating sequence in `plan`.
pub fn build_nested_lambda(
    plan: &NestedConstructionPlan,
    levels: u32,
    options: &BuildOptions<'_>,
) -> Result<NestedConstruction> {
    if levels == 0 {
        return Err(Error::Invalid("at least one level is required".into()));
    }
    if plan.test_polynomials.is_empty() {
        return Err(Error::Plan("at least one test polynomial is required".into()));
    }
    let (windows_per_level, _) = options.growth.schedule(levels).ok_or(Error::Capacity {
        needed: u128::MAX,
        cap: options.atom_cap,
    })?;
    let needed_sources = (1..=levels).map(|k| options.growth.factor(k)).max().unwrap_or(0);
    if (plan.mu_sequence.len() as u64) < needed_sources {
        return Err(Error::Plan(format!(
            "{levels} levels need {needed_sources} approximating measures, plan has {}",
            plan.mu_sequence.len()
        )));
    }
    for (i, poly) in plan.test_polynomials.iter().enumerate() {
        if let Some(mu) = plan
            .mu_sequence
            .iter()
            .find(|mu| mu.dimension() < poly.max_index_len())
        {
            return Err(Error::Plan(format!(
                "test polynomial {i} needs {} coordinates, a measure has only {}",
                poly.max_index_len(),
                mu.dimension()
            )));
        }
    }
    // windows_per_level[k-1] = growth(k)·‖λ^{(k-1)}‖; we need ‖λ^{(k-1)}‖.
    let mut needed: u128 = 0;
    for (k, &w) in (1..=levels).zip(&windows_per_level) {
        let sources = options.growth.factor(k) as u128;
        let windows = w as u128 / sources;
        let atoms_per_window: u128 =
            plan.mu_sequence[..sources as usize].iter().map(|m| m.len() as u128).sum();
        needed += windows * atoms_per_window;
    }
    if needed > options.atom_cap as u128 {
        return Err(Error::Capacity {
            needed,
            cap: options.atom_cap,
        });
    }

    let bases = plan
        .mu_sequence
        .iter()
        .map(|mu| PrimeBasis::new(mu.dimension()))
        .collect::<Result<Vec<_>>>()?;

    let mut atoms: Vec<LineAtom> = Vec::new();
    let mut records = Vec::new();
    let mut boundaries = Vec::with_capacity(levels as usize);
    let mut masses = Vec::with_capacity(levels as usize);
    let mut cursor = 0.0;
    let mut mass = crate::sum::NeumaierSum::new();

    for (k, &level_mass) in (1..=levels).zip(&windows_per_level) {
        let sources = options.growth.factor(k) as usize;
        let windows = level_mass / sources as u64;
        let tolerance = level_tolerance(k);
        for window in 0..windows {
            let mut precision = k;
            let accepted = loop {
                let attempt =
                    attempt_window(plan, &bases, sources, k, window, precision, cursor, options)?;
                if attempt.estimate < tolerance {
                    break attempt;
                }
                if precision >= k + MAX_EXTRA_PRECISION {
                    return Err(Error::Construction {
                        level: k,
                        source_index: 0,
                        repetition: window,
                        reason: format!(
                            "window estimate {:e} still above {tolerance:e} at precision {precision}",
                            attempt.estimate
                        ),
                    });
                }
                precision += 1;
            };
            records.push(WindowRecord {
                level: k,
                index: window + 1,
                t_lo: cursor,
                t_hi: accepted.end,
                estimate: accepted.estimate,
                tolerance,
                precision,
            });
            cursor = accepted.end;
            for a in &accepted.atoms {
                mass += a.w;
            }
            atoms.extend(accepted.atoms);
        }
        boundaries.push(cursor);
        masses.push(mass.value());
    }

    let lambda = AtomicLineMeasure::new(atoms, boundaries, masses, options.growth)?;
    Ok(NestedConstruction {
        lambda,
        windows: records,
    })
}
