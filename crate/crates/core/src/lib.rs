//! Atomic measures on the half-line that realize the Carlson mean-value
//! identity on the imaginary axis for Dirichlet polynomials.
//!
//! A Dirichlet polynomial `f(s) = Σ a_n n^{-s}` lifts to a polynomial `F` on
//! the polytorus through `z_j = p_j^{-s}`, and the imaginary axis becomes the
//! flow `t ↦ (p_1^{-it}, p_2^{-it}, ...)`. Given a probability measure `μ` on
//! the torus, [`measure`] builds a measure `λ` on `[0, ∞)` whose weighted time
//! means of `|f(it)|²` converge to `∫|F|² dμ`, placing atoms with the
//! [`kronecker`] solver. [`ergodic`] computes those means and the
//! corresponding space averages.

pub mod ergodic;
pub mod error;
pub mod harness;
pub mod kronecker;
pub mod measure;
pub mod poly;
pub mod primes;
pub mod sum;
pub mod torus;

pub use error::{Error, Result};
pub use kronecker::{KroneckerProblem, KroneckerSolution, KroneckerSolver};
pub use measure::{
    build_nested_lambda, build_point_mass_lambda, AtomicLineMeasure, BuildOptions, Growth,
    LineAtom, NestedConstructionPlan, TorusPointMassMeasure,
};
pub use poly::{
    bohr_lift, bohr_unlift, eval_dirichlet, eval_torus, lebesgue_line_mean, DirichletPolynomial,
    TorusPolynomial,
};
pub use primes::PrimeBasis;
pub use torus::{flow_point, MultiIndex, TorusPoint};
