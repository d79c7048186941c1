//! Ground states of `HQ − ∂_z²Q + Q − F_av(Q) = 0` (focusing case) by Petviashvili
//! iteration, the threshold `d = S[Q]`, the Nehari rescaling and the gap check.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, SpectralField};
use crate::error::{Result, RnlsError};
use crate::functionals::{self, classify_report, nehari_alpha, report, strichartz_quotient, Region};
use crate::nonlinearity::AveragedNonlinearity;

/// Relative tolerance for the agreement of the two threshold formulas.
pub const THRESHOLD_CONSISTENCY: f64 = 1e-6;

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PetviashviliOptions {
    /// Stop once the relative Euler–Lagrange residual falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PetviashviliOptions {
    fn default() -> Self {
        PetviashviliOptions { tol: 1e-8, max_iter: 400 }
    }
}

/// One recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Relative residual `‖(D+1)u − F_av(u)‖/‖u‖` of the iterate.
    pub residual: f64,
    /// Stabilising factor `⟨(D+1)u,u⟩/⟨F_av(u),u⟩`.
    pub m_factor: f64,
}

/// Output of [`petviashvili_solve`].
#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub q: SpectralField,
    /// `S[Q]`.
    pub d: f64,
    /// Relative residual of the returned (Nehari-rescaled) profile.
    pub residual: f64,
    /// `√(‖Q‖² + ⟨DQ,Q⟩) / ((2/π)∫∫|V(θ)Q|^{2σ+2})^{1/(2σ+2)}`.
    pub quotient: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

fn check_focusing(nl: &AveragedNonlinearity) -> Result<()> {
    if nl.params.lambda != -1.0 {
        return Err(RnlsError::InvalidInput("ground states exist for the focusing case lambda = -1 only".into()));
    }
    Ok(())
}

/// `(D + 1)φ`.
pub fn apply_d_plus_one(c: &SpectralField) -> SpectralField {
    let k = c.basis.k_eff.clone();
    c.map_modes(move |n1, n2, kk| Complex64::new(Basis::h_eig(n1, n2) + k[kk] * k[kk] + 1.0, 0.0))
}

/// `(D + 1)^{-1}φ`.
pub fn apply_resolvent(c: &SpectralField) -> SpectralField {
    let k = c.basis.k_eff.clone();
    c.map_modes(move |n1, n2, kk| Complex64::new(1.0 / (Basis::h_eig(n1, n2) + k[kk] * k[kk] + 1.0), 0.0))
}

/// Relative Euler–Lagrange residual `‖(D+1)u − F_av(u)‖/‖u‖` given `F_av(u)`.
pub fn residual_with(c: &SpectralField, f: &SpectralField) -> f64 {
    let r = apply_d_plus_one(c).axpy(Complex64::new(-1.0, 0.0), f);
    (r.l2_sq() / c.l2_sq()).sqrt()
}

/// Relative Euler–Lagrange residual of `u`.
pub fn residual(c: &SpectralField, nl: &AveragedNonlinearity) -> f64 {
    residual_with(c, &nl.eval(c))
}

/// Nehari factor `α_ψ` with `I[α_ψψ] = 0`.
pub fn compute_alpha(c: &SpectralField, nl: &AveragedNonlinearity) -> Result<f64> {
    check_focusing(nl)?;
    let r = report(c, nl);
    nehari_alpha(r.q_full(), r.pot, nl.params.sigma)
}

/// Default starting guess `e^{−3|y|²/2 − z²/2}`.
///
/// The y-width differs from that of the oscillator ground level, so the guess has
/// components on the higher even levels; an isotropic `e^{−|y|²/2}` guess stays in the
/// invariant lowest level and, for larger σ, converges to a saddle of higher action.
pub fn default_initial_guess(basis: &Arc<Basis>) -> SpectralField {
    SpectralField::project(basis, |y1, y2, z| Complex64::new((-1.5 * (y1 * y1 + y2 * y2) - 0.5 * z * z).exp(), 0.0))
}

/// Petviashvili iteration `u ← M^γ (D+1)^{-1}F_av(u)`, `γ = (2σ+1)/(2σ)`, followed by
/// the Nehari rescaling of the limit.
pub fn petviashvili_solve(
    init: &SpectralField,
    nl: &AveragedNonlinearity,
    opts: &PetviashviliOptions,
) -> Result<GroundStateResult> {
    check_focusing(nl)?;
    let sigma = nl.params.sigma;
    if !(sigma > 0.0 && sigma < 4.0) {
        return Err(RnlsError::InvalidInput(format!("sigma = {sigma} must lie in (0, 4)")));
    }
    if init.l2_sq() == 0.0 {
        return Err(RnlsError::InvalidInput("initial guess must be non-zero".into()));
    }
    let gamma = (2.0 * sigma + 1.0) / (2.0 * sigma);
    let mut u = init.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..=opts.max_iter {
        let f = nl.eval(&u);
        let num = apply_d_plus_one(&u).inner(&u).re;
        let den = f.inner(&u).re;
        let m = num / den;
        let res = residual_with(&u, &f);
        trace.push(IterationRecord { iteration: it, residual: res, m_factor: m });
        iterations = it;
        if !(m.is_finite() && m > 0.0 && res.is_finite()) || !(1e-12..=1e12).contains(&m) {
            break;
        }
        if res < opts.tol {
            converged = true;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        u = apply_resolvent(&f).scaled(Complex64::new(m.powf(gamma), 0.0));
    }
    let mut q = u;
    if converged {
        if let Ok(alpha) = compute_alpha(&q, nl) {
            q = q.scaled(Complex64::new(alpha, 0.0));
        }
    }
    let (fq, pot) = nl.eval_with_potential(&q);
    let rep = functionals::assemble(functionals::Quadratics::of(&q), pot, sigma, -1.0, 0.0);
    let res = residual_with(&q, &fq);
    converged = converged && res < opts.tol.max(1e-14) * 10.0;
    Ok(GroundStateResult {
        d: rep.s,
        residual: res,
        quotient: strichartz_quotient(rep.q_full(), pot, sigma),
        q,
        iterations,
        converged,
        trace,
    })
}

/// `σ/(2σ+2)·R^{2+2/σ}` from the Strichartz quotient.
pub fn d_from_quotient(quotient: f64, sigma: f64) -> f64 {
    sigma / (2.0 * sigma + 2.0) * quotient.powf(2.0 + 2.0 / sigma)
}

/// The threshold `d = S[Q]`, cross-checked against the quotient formula.
pub fn threshold_d(res: &GroundStateResult, sigma: f64) -> Result<f64> {
    if !res.converged {
        return Err(RnlsError::InvalidInput("ground-state iteration did not converge".into()));
    }
    let alt = d_from_quotient(res.quotient, sigma);
    if (alt - res.d).abs() > THRESHOLD_CONSISTENCY * res.d.abs() {
        return Err(RnlsError::Numerical(format!("threshold formulas disagree: S[Q] = {}, quotient form = {alt}", res.d)));
    }
    Ok(res.d)
}

/// `P[ψ] + ¼(d − S[ψ])` for `ψ ∈ K⁻` and `2 < σ < 4`; non-positive by the gap inequality.
pub fn gap_check(d: f64, c_test: &SpectralField, nl: &AveragedNonlinearity) -> Result<f64> {
    check_focusing(nl)?;
    let sigma = nl.params.sigma;
    if !(sigma > 2.0 && sigma < 4.0) {
        return Err(RnlsError::InvalidInput(format!("the gap inequality is stated for 2 < sigma < 4, got {sigma}")));
    }
    let r = report(c_test, nl);
    if classify_report(&r, d)? != Region::Kminus {
        return Err(RnlsError::InvalidInput("test datum is not in K-".into()));
    }
    Ok(r.p + 0.25 * (d - r.s))
}
