//! Atomic line measure for a point-mass torus measure.
//!
//! Level `k` places `M_k = growth(k) · ‖λ_{k-1}‖` repetitions (with
//! `‖λ_0‖ := 1`). Each repetition puts one atom of weight `c_j` near every
//! `ω_j`: a time `t` whose flow point is within `2^{-k}` of `ω_j` on the
//! first `min(k, d)` coordinates. Repetitions are strictly ordered in `t`,
//! so each level is a block `(T_{k-1}, T_k]`.

use rayon::prelude::*;

use super::atomic::{AtomicLineMeasure, Growth, LineAtom};
use super::point_mass::TorusPointMassMeasure;
use crate::error::{Error, Result};
use crate::kronecker::{KroneckerProblem, KroneckerSolver, WindowedScan};
use crate::primes::PrimeBasis;

pub struct BuildOptions<'a> {
    pub growth: Growth,
    /// Grid steps allowed per Kronecker solve.
    pub budget: u64,
    /// Largest number of atoms a construction may request.
    pub atom_cap: u64,
    pub solver: &'a dyn KroneckerSolver,
}

impl Default for BuildOptions<'_> {
    fn default() -> Self {
        Self {
            growth: Growth::PowerOfTwo,
            budget: 10_000_000_000,
            atom_cap: 10_000_000,
            solver: &WindowedScan,
        }
    }
}

/// Approximation tolerance `2^{-p}` used at precision `p`.
pub fn level_tolerance(precision: u32) -> f64 {
    0.5f64.powi(precision as i32)
}

/// Scan step of the Kronecker solver at precision `p` on a `d`-torus.
pub fn level_step(basis: &PrimeBasis, precision: u32) -> f64 {
    let active = (precision as usize).min(basis.dimension());
    level_tolerance(precision) / (2.0 * basis.log(active - 1))
}

/// One repetition: an atom near every `ω_j`, all strictly after `t_min`.
/// Each atom sits at the first qualifying scan point, not the solver's
/// refined time, so measures follow the scan's tie-breaking rule.
/// Returns `(t, j)` sorted by strictly increasing `t`.
pub(crate) fn place_repetition(
    basis: &PrimeBasis,
    mu: &TorusPointMassMeasure,
    precision: u32,
    t_min: f64,
    options: &BuildOptions<'_>,
) -> std::result::Result<Vec<(f64, usize)>, (usize, Error)> {
    let active = (precision as usize).min(basis.dimension());
    let eps = level_tolerance(precision);
    let solve_from = |j: usize, from: f64| -> std::result::Result<f64, (usize, Error)> {
        let targets = mu.atoms()[j].0.angles()[..active].to_vec();
        let problem =
            KroneckerProblem::new(basis.clone(), targets, eps, from).map_err(|e| (j, e))?;
        options
            .solver
            .solve(&problem, options.budget)
            .map(|s| s.scan_hit)
            .map_err(|e| (j, e))
    };

    let mut pending: Vec<(f64, usize)> = (0..mu.len())
        .into_par_iter()
        .map(|j| solve_from(j, t_min).map(|t| (t, j)))
        .collect::<std::result::Result<_, _>>()?;

    // Two sources can land on the same t (their targets agree on the active
    // coordinates); later ones are re-solved past the last placed atom.
    let mut placed: Vec<(f64, usize)> = Vec::with_capacity(pending.len());
    loop {
        pending.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
        let Some((t, j)) = pending.pop() else { break };
        match placed.last() {
            Some(&(last, _)) if t <= last => pending.push((solve_from(j, last)?, j)),
            _ => placed.push((t, j)),
        }
    }
    Ok(placed)
}

pub(crate) fn construction_error(level: u32, j: usize, m: u64, err: Error) -> Error {
    Error::Construction {
        level,
        source_index: j,
        repetition: m,
        reason: err.to_string(),
    }
}

/// Build `λ_K` for `μ = Σ c_j δ_{ω_j}`.
pub fn build_point_mass_lambda(
    mu: &TorusPointMassMeasure,
    levels: u32,
    options: &BuildOptions<'_>,
) -> Result<AtomicLineMeasure> {
    if levels == 0 {
        return Err(Error::Invalid("at least one level is required".into()));
    }
    if options.budget == 0 {
        return Err(Error::Invalid("solver budget must be positive".into()));
    }
    let (counts, _) = options.growth.schedule(levels).ok_or(Error::Capacity {
        needed: u128::MAX,
        cap: options.atom_cap,
    })?;
    let needed: u128 = counts.iter().map(|&m| m as u128).sum::<u128>() * mu.len() as u128;
    if needed > options.atom_cap as u128 {
        return Err(Error::Capacity {
            needed,
            cap: options.atom_cap,
        });
    }

    let basis = PrimeBasis::new(mu.dimension())?;
    let mut atoms: Vec<LineAtom> = Vec::with_capacity(needed as usize);
    let mut boundaries = Vec::with_capacity(levels as usize);
    let mut masses = Vec::with_capacity(levels as usize);
    let mut level_start = 0.0;
    let mut mass = crate::sum::NeumaierSum::new();

    for (k, &repetitions) in (1..=levels).zip(&counts) {
        let step = level_step(&basis, k);
        let mut t_min = level_start;
        let mut last = level_start;
        for m in 0..repetitions {
            let placed = place_repetition(&basis, mu, k, t_min, options)
                .map_err(|(j, e)| construction_error(k, j, m, e))?;
            for (t, j) in placed {
                let w = mu.atoms()[j].1;
                mass += w;
                atoms.push(LineAtom {
                    t,
                    w,
                    k,
                    j: j as u32,
                    m,
                    s: None,
                });
                last = t;
            }
            t_min = last + step;
        }
        let boundary = last + step;
        boundaries.push(boundary);
        masses.push(mass.value());
        level_start = boundary;
    }
    AtomicLineMeasure::new(atoms, boundaries, masses, options.growth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kronecker::residuals;
    use crate::torus::{chord_distance, flow_point, TorusPoint};
    use std::f64::consts::PI;

    fn point(a: &[f64]) -> TorusPoint {
        TorusPoint::new(a.iter().copied()).unwrap()
    }

    #[test]
    fn dirac_masses_follow_recursion() {
        let mu = TorusPointMassMeasure::dirac(point(&[1.0, 2.0]));
        let lambda = build_point_mass_lambda(&mu, 3, &BuildOptions::default()).unwrap();
        assert_eq!(lambda.total_mass_by_level(), &[2.0, 10.0, 90.0]);
        assert_eq!(lambda.len(), 90);
    }

    #[test]
    fn level_one_atoms_near_zero_angle() {
        let mu = TorusPointMassMeasure::dirac(point(&[0.0]));
        let lambda = build_point_mass_lambda(&mu, 1, &BuildOptions::default()).unwrap();
        assert_eq!(lambda.len(), 2);
        for a in lambda.atoms() {
            let angle = (-a.t * 2f64.ln()).rem_euclid(2.0 * PI);
            assert!(angle.min(2.0 * PI - angle) < 0.5);
        }
    }

    #[test]
    fn atom_count_two_sources_three_levels() {
        let mu = TorusPointMassMeasure::new(2, vec![(point(&[0.5, 1.5]), 0.3), (point(&[4.0, 0.2]), 0.7)])
            .unwrap();
        let lambda = build_point_mass_lambda(&mu, 3, &BuildOptions::default()).unwrap();
        assert_eq!(lambda.len(), 180);
        for k in 1..=3u32 {
            let at_level = lambda.atoms().iter().filter(|a| a.k == k).count();
            assert_eq!(at_level, 2 * [2, 8, 80][k as usize - 1]);
        }
        let masses = lambda.total_mass_by_level();
        assert!((masses[2] - 90.0).abs() < 1e-9);
    }

    #[test]
    fn residual_schedule_and_chord_bound() {
        let mu = TorusPointMassMeasure::new(
            3,
            vec![(point(&[0.1, 2.0, 5.0]), 0.5), (point(&[3.0, 0.0, 1.0]), 0.5)],
        )
        .unwrap();
        let lambda = build_point_mass_lambda(&mu, 3, &BuildOptions::default()).unwrap();
        let basis = PrimeBasis::new(3).unwrap();
        for a in lambda.atoms() {
            let active = (a.k as usize).min(3);
            let omega = &mu.atoms()[a.j as usize].0;
            let r = residuals(&basis, a.t, &omega.angles()[..active]);
            assert!(r.iter().all(|&x| x < level_tolerance(a.k)));
            let z = flow_point(&basis, a.t);
            let chord: f64 = (0..active)
                .map(|i| chord_distance(z.angle(i), omega.angle(i)).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(chord <= 0.5f64.powi(a.k as i32 - 1) * 3f64.sqrt());
        }
    }

    #[test]
    fn repetitions_strictly_ordered() {
        let mu = TorusPointMassMeasure::new(
            2,
            vec![(point(&[1.0, 1.0]), 0.25), (point(&[2.0, 5.0]), 0.25), (point(&[6.0, 0.5]), 0.5)],
        )
        .unwrap();
        let lambda = build_point_mass_lambda(&mu, 2, &BuildOptions::default()).unwrap();
        let atoms = lambda.atoms();
        for pair in atoms.windows(2) {
            assert!(pair[0].t < pair[1].t);
            if pair[0].k == pair[1].k && pair[1].m == pair[0].m + 1 {
                // every atom of repetition m precedes every atom of m + 1
                let rep_max = atoms
                    .iter()
                    .filter(|a| a.k == pair[0].k && a.m == pair[0].m)
                    .map(|a| a.t)
                    .fold(0.0, f64::max);
                assert!(pair[1].t > rep_max);
            }
        }
        for (k, &boundary) in lambda.level_boundaries().iter().enumerate() {
            assert!(atoms.iter().filter(|a| a.k as usize == k + 1).all(|a| a.t < boundary));
        }
    }

    #[test]
    fn coincident_sources_are_separated() {
        // Same first coordinate: level 1 only sees prime 2, so both sources
        // want the same t.
        let mu = TorusPointMassMeasure::new(
            2,
            vec![(point(&[1.0, 0.0]), 0.5), (point(&[1.0, 3.0]), 0.5)],
        )
        .unwrap();
        let lambda = build_point_mass_lambda(&mu, 2, &BuildOptions::default()).unwrap();
        assert_eq!(lambda.len(), 20);
    }

    #[test]
    fn capacity_checked_before_work() {
        let mu = TorusPointMassMeasure::dirac(point(&[0.0]));
        let options = BuildOptions {
            atom_cap: 1000,
            ..BuildOptions::default()
        };
        assert!(matches!(
            build_point_mass_lambda(&mu, 5, &options),
            Err(Error::Capacity { needed: 50_490, cap: 1000 })
        ));
        assert!(matches!(
            build_point_mass_lambda(&mu, 30, &BuildOptions::default()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn budget_exhaustion_names_location() {
        let mu = TorusPointMassMeasure::dirac(point(&[1.0, 2.0]));
        let options = BuildOptions {
            budget: 3,
            ..BuildOptions::default()
        };
        match build_point_mass_lambda(&mu, 2, &options) {
            Err(Error::Construction { level, source_index, .. }) => {
                assert_eq!(level, 1);
                assert_eq!(source_index, 0);
            }
            other => panic!("{other:?}"),
        }
    }
}
