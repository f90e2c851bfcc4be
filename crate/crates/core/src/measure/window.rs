use super::atomic::LineAtom;
use super::point_mass::TorusPointMassMeasure;
use crate::error::{Error, Result};
use crate::poly::{eval_torus, TorusPolynomial};
use crate::sum::NeumaierSum;
use crate::torus::flow_point;
use crate::AtomicLineMeasure;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub passed: bool,
    /// Largest `|windowed mean - space average|` over the polynomials.
    pub worst_error: f64,
    /// Index into the polynomial list attaining `worst_error`.
    pub worst_poly: usize,
    pub errors: Vec<f64>,
}

/// Compare the `λ`-weighted mean of `|f_m(it)|²` over atoms in
/// `[t_lo, t_hi]` with `∫ |F_m|² dμ`, for every polynomial.
///
/// Every atom of `μ` must be represented in the window by at least one atom
/// of `λ` (matched through `LineAtom::j`).
pub fn window_check(
    lambda: &AtomicLineMeasure,
    t_lo: f64,
    t_hi: f64,
    polys: &[TorusPolynomial],
    mu: &TorusPointMassMeasure,
    eps: f64,
) -> Result<WindowReport> {
    if !(t_lo < t_hi) {
        return Err(Error::Domain(format!("window needs T_lo < T_hi, got [{t_lo}, {t_hi}]")));
    }
    check_atoms(lambda.window(t_lo, t_hi), polys, mu, eps)
}

pub(crate) fn check_atoms(
    atoms: &[LineAtom],
    polys: &[TorusPolynomial],
    mu: &TorusPointMassMeasure,
    eps: f64,
) -> Result<WindowReport> {
    if polys.is_empty() {
        return Err(Error::Invalid("window check needs at least one polynomial".into()));
    }
    if atoms.is_empty() {
        return Err(Error::Representation("window contains no atoms".into()));
    }
    let mut represented = vec![false; mu.len()];
    for a in atoms {
        match represented.get_mut(a.j as usize) {
            Some(r) => *r = true,
            None => {
                return Err(Error::Representation(format!(
                    "atom at t = {} names source {} but μ has {} atoms",
                    a.t,
                    a.j,
                    mu.len()
                )))
            }
        }
    }
    if let Some(j) = represented.iter().position(|r| !r) {
        return Err(Error::Representation(format!("source {j} has no atom in the window")));
    }

    let mass: f64 = atoms.iter().map(|a| a.w).sum::<NeumaierSum>().value();
    let mut errors = Vec::with_capacity(polys.len());
    for poly in polys {
        let target = mu.space_average(poly)?;
        let mut acc = NeumaierSum::new();
        for a in atoms {
            let z = flow_point(poly.basis(), a.t);
            acc += a.w * eval_torus(poly, &z)?.norm_sqr();
        }
        errors.push((acc.value() / mass - target).abs());
    }
    let (worst_poly, worst_error) = errors
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, e)| if e > best.1 { (i, e) } else { best });
    Ok(WindowReport {
        passed: worst_error < eps,
        worst_error,
        worst_poly,
        errors,
    })
}
