//! Effective inhomogeneous simultaneous approximation on the vertical-line
//! flow: find `t > T` with `(-t log p_r) mod 2π` within `ε` of `θ_r` for the
//! first `k` primes.
//!
//! Two scans are provided. [`ForwardScan`] visits every grid point
//! `t_min + iδ` with `δ = ε / (2 log p_k)` and is the reference. Because each
//! residual is Lipschitz in `t` with constant `log p_r`, this grid cannot step
//! over an interval on which all residuals stay below `ε/2`. [`WindowedScan`]
//! visits the same grid but only inside the windows where the first
//! coordinate can pass, so it reports the same first hit much faster.
//!
//! The first qualifying grid point marks an approximation episode; the
//! returned `t` is the minimax point of that episode (the point minimizing
//! the largest residual), found exactly from the locally affine residuals.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::PrimeBasis;
use crate::torus::{circle_distance, flow_angle, wrap_angle};

#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerProblem {
    basis: PrimeBasis,
    targets: Vec<f64>,
    eps: f64,
    t_min: f64,
}

impl KroneckerProblem {
    /// `targets` has one angle per active prime, so `k = targets.len()`.
    pub fn new(basis: PrimeBasis, targets: Vec<f64>, eps: f64, t_min: f64) -> Result<Self> {
        let k = targets.len();
        if k == 0 || k > basis.dimension() {
            return Err(Error::Invalid(format!(
                "active dimension {k} must lie in 1..={}",
                basis.dimension()
            )));
        }
        if !(eps > 0.0 && eps < PI) {
            return Err(Error::Invalid(format!("tolerance {eps} must lie in (0, π)")));
        }
        if !(t_min >= 0.0) || !t_min.is_finite() {
            return Err(Error::Invalid(format!("t_min {t_min} must be finite and >= 0")));
        }
        if targets.iter().any(|a| !a.is_finite()) {
            return Err(Error::Invalid("target angles must be finite".into()));
        }
        Ok(Self {
            basis,
            targets: targets.into_iter().map(wrap_angle).collect(),
            eps,
            t_min,
        })
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn active_dim(&self) -> usize {
        self.targets.len()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// Grid spacing `ε / (2 max_r log p_r)`.
    pub fn scan_step(&self) -> f64 {
        self.eps / (2.0 * self.basis.log(self.active_dim() - 1))
    }

    fn active_logs(&self) -> &[f64] {
        &self.basis.logs()[..self.active_dim()]
    }

    fn grid_point(&self, i: u64) -> f64 {
        self.t_min + i as f64 * self.scan_step()
    }

    /// Largest residual at `t`, bailing out once one reaches `ε`.
    #[inline]
    fn passes(&self, t: f64) -> bool {
        self.active_logs()
            .iter()
            .zip(&self.targets)
            .all(|(&l, &theta)| circle_distance(flow_angle(l, t), theta) < self.eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerSolution {
    pub t: f64,
    /// First qualifying grid point; `t` is refined from here.
    pub scan_hit: f64,
    pub residuals: Vec<f64>,
    /// Integers with `-t log p_r - θ_r - 2πq_r` closest to zero.
    pub q: Vec<i64>,
}

impl KroneckerSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Circle distances between the flow angles `(-t log p_r) mod 2π` and the
/// targets, for `r = 1..=targets.len()`.
pub fn residuals(basis: &PrimeBasis, t: f64, targets: &[f64]) -> Vec<f64> {
    basis
        .logs()
        .iter()
        .zip(targets)
        .map(|(&l, &theta)| circle_distance(flow_angle(l, t), theta))
        .collect()
}

fn implied_integers(basis: &PrimeBasis, t: f64, targets: &[f64]) -> Vec<i64> {
    basis
        .logs()
        .iter()
        .zip(targets)
        .map(|(&l, &theta)| ((-t * l - theta) / TAU).round() as i64)
        .collect()
}

/// `x` reduced to `(-π, π]`.
fn signed_angle(x: f64) -> f64 {
    let r = wrap_angle(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Minimax point of the episode containing the grid hit `hit`.
fn refine(problem: &KroneckerProblem, hit: f64) -> f64 {
    let logs = problem.active_logs();
    let signed: Vec<f64> = logs
        .iter()
        .zip(problem.targets())
        .map(|(&l, &theta)| signed_angle(-hit * l - theta))
        .collect();
    // Offsets x = t - hit where the piecewise-affine max can bend.
    let mut candidates = vec![0.0];
    for (a, (&sa, &la)) in signed.iter().zip(logs).enumerate() {
        candidates.push(sa / la);
        for (&sb, &lb) in signed[a + 1..].iter().zip(&logs[a + 1..]) {
            if la != lb {
                candidates.push((sa - sb) / (la - lb));
            }
            candidates.push((sa + sb) / (la + lb));
        }
    }
    let model = |x: f64| -> f64 {
        signed
            .iter()
            .zip(logs)
            .map(|(&s, &l)| (s - x * l).abs())
            .fold(0.0, f64::max)
    };
    let mut best_x = 0.0;
    let mut best = model(0.0);
    for &x in &candidates {
        let v = model(x);
        if v < best || (v == best && x < best_x) {
            best = v;
            best_x = x;
        }
    }
    let refined = hit + best_x;
    if refined <= problem.t_min() {
        return hit;
    }
    let at_hit = residuals(problem.basis(), hit, problem.targets())
        .into_iter()
        .fold(0.0, f64::max);
    let at_refined = residuals(problem.basis(), refined, problem.targets())
        .into_iter()
        .fold(0.0, f64::max);
    if at_refined < problem.eps() && at_refined <= at_hit {
        refined
    } else {
        hit
    }
}

fn finish(problem: &KroneckerProblem, hit: f64) -> KroneckerSolution {
    let t = refine(problem, hit);
    KroneckerSolution {
        t,
        scan_hit: hit,
        residuals: residuals(problem.basis(), t, problem.targets()),
        q: implied_integers(problem.basis(), t, problem.targets()),
    }
}

struct BestSeen {
    max: f64,
    residuals: Vec<f64>,
}

impl BestSeen {
    fn new(k: usize) -> Self {
        Self {
            max: f64::INFINITY,
            residuals: vec![PI; k],
        }
    }

    fn offer(&mut self, problem: &KroneckerProblem, t: f64) {
        let r = residuals(problem.basis(), t, problem.targets());
        let m = r.iter().copied().fold(0.0, f64::max);
        if m < self.max {
            self.max = m;
            self.residuals = r;
        }
    }

    fn into_error(self, budget: u64) -> Error {
        Error::Budget {
            budget,
            best_residuals: self.residuals,
        }
    }
}

/// Search strategy behind [`solve`]. Implementations must return the same
/// scan hit as [`ForwardScan`] whenever it finds one within the budget.
pub trait KroneckerSolver: Sync {
    fn solve(&self, problem: &KroneckerProblem, budget: u64) -> Result<KroneckerSolution>;
}

/// Visits every grid point in order.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardScan;

impl KroneckerSolver for ForwardScan {
    fn solve(&self, problem: &KroneckerProblem, budget: u64) -> Result<KroneckerSolution> {
        if budget == 0 {
            return Err(Error::Invalid("solver budget must be positive".into()));
        }
        let mut best = BestSeen::new(problem.active_dim());
        for i in 1..=budget {
            let t = problem.grid_point(i);
            if problem.passes(t) {
                return Ok(finish(problem, t));
            }
            // Tracking every point would dominate the cost; sample sparsely.
            if i % 1024 == 1 {
                best.offer(problem, t);
            }
        }
        Err(best.into_error(budget))
    }
}

/// Visits only the grid points whose first coordinate can be within `ε` of
/// its target, and skips whole windows that another coordinate rules out.
#[derive(Debug, Clone, Copy, Default)]
pub struct WindowedScan;

impl WindowedScan {
    /// Extra grid points scanned on either side of each computed window.
    const MARGIN_STEPS: u64 = 2;
    /// Absolute slack on window pruning, covering `t log p` rounding at
    /// `t ≤ 10^9`.
    const PRUNE_SLACK: f64 = 1e-6;
}

impl KroneckerSolver for WindowedScan {
    fn solve(&self, problem: &KroneckerProblem, budget: u64) -> Result<KroneckerSolution> {
        if budget == 0 {
            return Err(Error::Invalid("solver budget must be positive".into()));
        }
        let logs = problem.active_logs();
        let targets = problem.targets();
        let eps = problem.eps();
        let step = problem.scan_step();
        let t_min = problem.t_min();
        let (l1, theta1) = (logs[0], targets[0]);
        let mut best = BestSeen::new(problem.active_dim());

        let mut i = 1u64;
        while i <= budget {
            let t = problem.grid_point(i);
            // -t l1 ≡ θ1 (mod 2π)  <=>  u = t l1 + θ1 ≡ 0.
            let u = t * l1 + theta1;
            let q = ((u - eps) / TAU).ceil();
            let center = (TAU * q - theta1) / l1;
            let lo = (TAU * q - eps - theta1) / l1;
            let hi = (TAU * q + eps - theta1) / l1;

            let i_lo = (((lo - t_min) / step).floor().max(0.0) as u64)
                .saturating_sub(Self::MARGIN_STEPS)
                .max(i);
            let i_hi = ((((hi - t_min) / step).ceil().max(0.0) as u64) + Self::MARGIN_STEPS)
                .min(budget);
            if i_lo > budget {
                break;
            }

            let half_width = 0.5 * (hi - lo) + (Self::MARGIN_STEPS + 1) as f64 * step;
            let ruled_out = logs.iter().zip(targets).skip(1).any(|(&l, &theta)| {
                circle_distance(flow_angle(l, center), theta) - half_width * l
                    >= eps + Self::PRUNE_SLACK
            });
            if !ruled_out {
                for j in i_lo..=i_hi {
                    let tj = problem.grid_point(j);
                    if problem.passes(tj) {
                        return Ok(finish(problem, tj));
                    }
                }
                best.offer(problem, center.max(problem.grid_point(i_lo)));
            }
            i = i_hi.max(i) + 1;
        }
        Err(best.into_error(budget))
    }
}

/// Solve with the default (windowed) scan.
pub fn solve(problem: &KroneckerProblem, budget: u64) -> Result<KroneckerSolution> {
    WindowedScan.solve(problem, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basis(d: usize) -> PrimeBasis {
        PrimeBasis::new(d).unwrap()
    }

    #[test]
    fn single_prime_zero_target_after_ten() {
        let problem = KroneckerProblem::new(basis(1), vec![0.0], 1e-6, 10.0).unwrap();
        let sol = solve(&problem, 100_000_000).unwrap();
        let expected = 2.0 * TAU / 2f64.ln();
        assert!((sol.t - expected).abs() < 1e-9, "{} vs {expected}", sol.t);
        assert!((sol.t - 18.1294).abs() < 1e-4);
        assert_eq!(sol.q, vec![-2]);
        assert!(sol.residuals[0] < 1e-12);
    }

    #[test]
    fn single_prime_pi_target() {
        let problem = KroneckerProblem::new(basis(1), vec![PI], 1e-6, 0.0).unwrap();
        let sol = solve(&problem, 100_000_000).unwrap();
        assert!((sol.t - PI / 2f64.ln()).abs() < 1e-9, "{}", sol.t);
        assert!((sol.t - 4.5324).abs() < 1e-4);
    }

    #[test]
    fn two_primes_rechecked() {
        let problem = KroneckerProblem::new(basis(2), vec![0.0, 0.0], 0.05, 0.0).unwrap();
        let sol = solve(&problem, 100_000_000).unwrap();
        assert!(sol.t > 0.0);
        // Independent recomputation from scratch.
        for (r, p) in [2f64, 3f64].iter().enumerate() {
            let angle = (-sol.t * p.ln()).rem_euclid(TAU);
            let dist = angle.min(TAU - angle);
            assert!(dist < 0.05, "prime {p}: {dist}");
            assert!((dist - sol.residuals[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_examples() {
        let b = basis(3);
        assert_eq!(residuals(&b, 0.0, &[0.0, 0.0, 0.0]), vec![0.0; 3]);
        assert_eq!(residuals(&b, 0.0, &[PI, PI, PI]), vec![PI; 3]);
    }

    #[test]
    fn invalid_problems() {
        assert!(KroneckerProblem::new(basis(2), vec![], 0.1, 0.0).is_err());
        assert!(KroneckerProblem::new(basis(2), vec![0.0; 3], 0.1, 0.0).is_err());
        assert!(KroneckerProblem::new(basis(2), vec![0.0], 0.0, 0.0).is_err());
        assert!(KroneckerProblem::new(basis(2), vec![0.0], PI, 0.0).is_err());
        assert!(KroneckerProblem::new(basis(2), vec![0.0], 0.1, -1.0).is_err());
        let ok = KroneckerProblem::new(basis(2), vec![0.0], 0.1, 0.0).unwrap();
        assert!(solve(&ok, 0).is_err());
    }

    #[test]
    fn budget_error_reports_best() {
        let problem = KroneckerProblem::new(basis(3), vec![1.0, 2.0, 3.0], 0.01, 0.0).unwrap();
        for solver in [&ForwardScan as &dyn KroneckerSolver, &WindowedScan] {
            match solver.solve(&problem, 1000) {
                Err(Error::Budget { budget, best_residuals }) => {
                    assert_eq!(budget, 1000);
                    assert_eq!(best_residuals.len(), 3);
                }
                other => panic!("expected budget error, got {other:?}"),
            }
        }
    }

    #[test]
    fn restart_is_strictly_later() {
        let mut t_min = 0.0;
        for _ in 0..20 {
            let problem = KroneckerProblem::new(basis(2), vec![1.0, 5.0], 0.1, t_min).unwrap();
            let sol = solve(&problem, 100_000_000).unwrap();
            assert!(sol.t > t_min);
            t_min = sol.t;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn self_targets_have_zero_residual(t in 0.0f64..1e4) {
            let b = basis(4);
            let targets: Vec<f64> = crate::torus::flow_point(&b, t).angles().to_vec();
            for r in residuals(&b, t, &targets) {
                prop_assert!(r < 1e-12);
            }
        }

        #[test]
        fn windowed_matches_forward(
            k in 1usize..=3,
            raw in proptest::collection::vec(0.0f64..TAU, 3),
            eps in 0.15f64..0.6,
            t_min in 0.0f64..200.0,
        ) {
            let problem = KroneckerProblem::new(basis(3), raw[..k].to_vec(), eps, t_min).unwrap();
            let forward = ForwardScan.solve(&problem, 5_000_000);
            let windowed = WindowedScan.solve(&problem, 5_000_000);
            match (forward, windowed) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.scan_hit.to_bits(), b.scan_hit.to_bits());
                    prop_assert_eq!(a.t.to_bits(), b.t.to_bits());
                    prop_assert!(a.t > t_min);
                    prop_assert!(a.max_residual() < eps);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "disagreement: {:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn refined_point_is_no_worse(
            raw in proptest::collection::vec(0.0f64..TAU, 2),
            eps in 0.1f64..0.5,
        ) {
            let problem = KroneckerProblem::new(basis(2), raw, eps, 0.0).unwrap();
            let sol = solve(&problem, 50_000_000).unwrap();
            let at_hit: f64 = residuals(problem.basis(), sol.scan_hit, problem.targets())
                .into_iter().fold(0.0, f64::max);
            prop_assert!(sol.max_residual() <= at_hit);
        }
    }
}
