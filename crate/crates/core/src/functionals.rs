//! Conserved and variational functionals, the scaling family and K± classification.
//!
//! With `Q[ψ] = ‖ψ‖² + ⟨Dψ,ψ⟩` and `pot = ∫₀^{π/2}∫|V(θ)ψ|^{2σ+2}`:
//!
//! * `M = ½‖ψ‖²`, `K = ½⟨Hψ,ψ⟩`, `G = Im∫conj(ψ)∂_zψ`,
//! * `E = ½‖∂_zψ‖² + λ pot/(π(σ+1))`, `S = K + M + E`,
//! * `I = Q − (2/π) pot`, `P = 2‖∂_zψ‖² − 2σ pot/(π(σ+1))`,
//! * `J^{a,b} = (2a−b)(K+M) + ((2a+b)/2)‖∂_zψ‖² − ((2σ+2)a−b) pot/(π(σ+1))`.
//!
//! I, P and J always use the focusing sign; for λ ≠ −1 the report marks them as
//! not variational.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::SpectralField;
use crate::error::{Result, RnlsError};
use crate::nonlinearity::AveragedNonlinearity;

/// Relative tail mass tolerated by the z-dilation.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Snapshot of all functionals at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub time: f64,
    /// Mass `½‖φ‖²`.
    pub m: f64,
    /// Hamiltonian.
    pub e: f64,
    /// z-momentum.
    pub g: f64,
    /// Kinetic (harmonic) energy `½⟨Hφ,φ⟩`.
    pub k: f64,
    /// Action `K + M + E`.
    pub s: f64,
    /// Nehari functional.
    pub i: f64,
    /// Virial functional `J^{1,2}`.
    pub p: f64,
    /// B¹ seminorm squared `⟨Dφ,φ⟩ = 2K + ‖∂_zφ‖²`.
    pub b1_sq: f64,
    /// Unsigned potential integral.
    pub pot: f64,
    /// `‖∂_zφ‖²`.
    pub dz_sq: f64,
    /// Whether I, P, S carry their variational meaning (λ = −1).
    pub variational: bool,
}

impl FunctionalReport {
    /// CSV column order.
    pub const COLUMNS: [&'static str; 10] = ["time", "M", "E", "G", "K", "S", "I", "P", "B1_sq", "pot"];

    /// Header comment documenting the columns, followed by the column names.
    pub fn csv_header() -> String {
        format!(
            "# time: simulation time; M: mass (1/2)||phi||^2; E: Hamiltonian; G: z-momentum; \
             K: harmonic kinetic energy (1/2)<H phi,phi>; S: action K+M+E; I: Nehari functional; \
             P: virial functional; B1_sq: <D phi,phi>; pot: int_0^(pi/2) int |V(theta)phi|^(2 sigma+2)\n{}",
            Self::COLUMNS.join(",")
        )
    }

    /// One CSV row in [`Self::COLUMNS`] order.
    pub fn csv_row(&self) -> String {
        [self.time, self.m, self.e, self.g, self.k, self.s, self.i, self.p, self.b1_sq, self.pot]
            .iter()
            .map(|v| format!("{v:.17e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// `‖φ‖² + B1_sq`.
    pub fn q_full(&self) -> f64 {
        2.0 * self.m + self.b1_sq
    }

    /// `J^{a,b}` from the stored quantities.
    pub fn j_ab(&self, a: f64, b: f64, sigma: f64) -> f64 {
        (2.0 * a - b) * (self.k + self.m) + 0.5 * (2.0 * a + b) * self.dz_sq
            - ((2.0 * sigma + 2.0) * a - b) * self.pot / (PI * (sigma + 1.0))
    }
}

/// Quadratic ingredients computed spectrally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratics {
    pub l2_sq: f64,
    pub h_form: f64,
    pub dz_sq: f64,
    pub momentum: f64,
}

impl Quadratics {
    pub fn of(c: &SpectralField) -> Self {
        Quadratics { l2_sq: c.l2_sq(), h_form: c.h_form(), dz_sq: c.dz_sq(), momentum: c.momentum() }
    }
}

/// Assemble a report from the quadratic parts and the potential integral.
pub fn assemble(q: Quadratics, pot: f64, sigma: f64, lambda: f64, time: f64) -> FunctionalReport {
    let m = 0.5 * q.l2_sq;
    let k = 0.5 * q.h_form;
    let e = 0.5 * q.dz_sq + lambda * pot / (PI * (sigma + 1.0));
    let b1_sq = q.h_form + q.dz_sq;
    FunctionalReport {
        time,
        m,
        e,
        g: q.momentum,
        k,
        s: k + m + e,
        i: q.l2_sq + b1_sq - 2.0 / PI * pot,
        p: 2.0 * q.dz_sq - 2.0 * sigma * pot / (PI * (sigma + 1.0)),
        b1_sq,
        pot,
        dz_sq: q.dz_sq,
        variational: lambda == -1.0,
    }
}

/// All functionals of `c`.
pub fn report(c: &SpectralField, nl: &AveragedNonlinearity) -> FunctionalReport {
    let pot = nl.potential(c);
    assemble(Quadratics::of(c), pot, nl.params.sigma, nl.params.lambda, c.time)
}

/// Parameters of the scaling `ψ ↦ e^{aμ}ψ(y, e^{bμ}z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
}

impl ScaleParams {
    /// `a > 0, b ≥ 0, 2a − b ≥ 0, σa − b > 0`.
    pub fn admissible(a: f64, b: f64, sigma: f64) -> bool {
        a > 0.0 && b >= 0.0 && 2.0 * a - b >= 0.0 && sigma * a - b > 0.0
    }
}

/// `e^{aμ}ψ(y, e^{bμ}z)`, resampled in z by direct evaluation of the Fourier series.
///
/// Fails when the source has mass near the boundary of the period or the result
/// is not resolved by the z-modes (relative tail mass above [`TAIL_TOLERANCE`]).
pub fn scale(c: &SpectralField, sp: ScaleParams) -> Result<SpectralField> {
    let amp = (sp.a * sp.mu).exp();
    if sp.b * sp.mu == 0.0 {
        return Ok(c.scaled(Complex64::new(amp, 0.0)));
    }
    let s = (sp.b * sp.mu).exp();
    let basis = Arc::clone(&c.basis);
    let nz = basis.spec.n_z;
    let l = basis.spec.l_z;
    let src_tail = c.boundary_tail_fraction(0.05);
    if src_tail > TAIL_TOLERANCE {
        return Err(RnlsError::Numerical(format!("tail-mass violation: source boundary mass {src_tail:.3e}")));
    }
    let z = basis.z_grid();
    let norm = 1.0 / l.sqrt();
    // E[j][k] = e_m(s z_j) for points inside the period, zero outside.
    let mut e = vec![Complex64::new(0.0, 0.0); nz * nz];
    for (j, zj) in z.iter().enumerate() {
        let x = s * zj;
        if x.abs() >= 0.5 * l {
            continue;
        }
        for k in 0..nz {
            let m = crate::basis::wavenumber(k, nz) as f64;
            e[j * nz + k] = Complex64::from_polar(norm, 2.0 * PI * m * x / l);
        }
    }
    let rows = c.coeffs.len() / nz;
    let mut samples = vec![Complex64::new(0.0, 0.0); c.coeffs.len()];
    for r in 0..rows {
        let src = &c.coeffs[r * nz..(r + 1) * nz];
        for j in 0..nz {
            let erow = &e[j * nz..(j + 1) * nz];
            samples[r * nz + j] = amp * erow.iter().zip(src).map(|(a, b)| a * b).sum::<Complex64>();
        }
    }
    let mut out = basis.rows_to_spectral(samples);
    out.time = c.time;
    let spec_tail = out.spectral_tail_fraction(0.0625);
    let bnd_tail = out.boundary_tail_fraction(0.05);
    if spec_tail > TAIL_TOLERANCE || bnd_tail > TAIL_TOLERANCE {
        return Err(RnlsError::Numerical(format!(
            "tail-mass violation after dilation: spectral {spec_tail:.3e}, boundary {bnd_tail:.3e}"
        )));
    }
    Ok(out)
}

/// `J^{a,b}[ψ]` in closed form; rejects inadmissible `(a, b)`.
pub fn j_ab(c: &SpectralField, a: f64, b: f64, nl: &AveragedNonlinearity) -> Result<f64> {
    let sigma = nl.params.sigma;
    if !ScaleParams::admissible(a, b, sigma) {
        return Err(RnlsError::InvalidInput(format!("(a, b) = ({a}, {b}) is not admissible for sigma = {sigma}")));
    }
    Ok(report(c, nl).j_ab(a, b, sigma))
}

/// Region of the phase space relative to the threshold `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `S < d` and `P ≥ 0`.
    Kplus,
    /// `S < d` and `P < 0`.
    Kminus,
    /// `S ≥ d`.
    AboveThreshold,
}

/// Classify a report against the threshold `d` (focusing only).
pub fn classify_report(r: &FunctionalReport, d: f64) -> Result<Region> {
    if !r.variational {
        return Err(RnlsError::InvalidInput("K± classification requires lambda = -1".into()));
    }
    if !(d > 0.0) {
        return Err(RnlsError::InvalidInput(format!("threshold d = {d} must be positive")));
    }
    Ok(if r.s >= d {
        Region::AboveThreshold
    } else if r.p >= 0.0 {
        Region::Kplus
    } else {
        Region::Kminus
    })
}

/// Classify `c` against the threshold `d`.
pub fn classify(c: &SpectralField, d: f64, nl: &AveragedNonlinearity) -> Result<Region> {
    classify_report(&report(c, nl), d)
}

/// `K³E` before and after `φ ↦ μ^{1/4}φ(y, μz)` (σ = 4 only).
pub fn scale_invariant_check(c: &SpectralField, mu: f64, nl: &AveragedNonlinearity) -> Result<(f64, f64)> {
    if nl.params.sigma != 4.0 {
        return Err(RnlsError::InvalidInput("the K^3 E invariance holds for sigma = 4 only".into()));
    }
    if !(mu > 0.0) {
        return Err(RnlsError::InvalidInput("mu must be positive".into()));
    }
    let before = report(c, nl);
    let scaled = scale(c, ScaleParams { a: 0.25, b: 1.0, mu: mu.ln() })?;
    let after = report(&scaled, nl);
    Ok((before.k.powi(3) * before.e, after.k.powi(3) * after.e))
}

/// Nehari factor `α` with `I[αψ] = 0`: `α^{2σ} = Q / ((2/π) pot)`.
pub fn nehari_alpha(q_full: f64, pot: f64, sigma: f64) -> Result<f64> {
    if !(pot > 0.0) {
        return Err(RnlsError::InvalidInput("potential integral vanishes".into()));
    }
    Ok((q_full / (2.0 / PI * pot)).powf(1.0 / (2.0 * sigma)))
}

/// Action on the Nehari set, `S[αψ] = σ/(2σ+2) α² Q` (the same closed form holds
/// for the z-only functional with `Q = ‖ψ‖² + ‖∂_zψ‖²`).
pub fn nehari_action(q_full: f64, pot: f64, sigma: f64) -> Result<f64> {
    let alpha = nehari_alpha(q_full, pot, sigma)?;
    Ok(sigma / (2.0 * sigma + 2.0) * alpha * alpha * q_full)
}

/// Strichartz-type quotient `√Q / ((2/π) pot)^{1/(2σ+2)}` (θ-measure normalised).
pub fn strichartz_quotient(q_full: f64, pot: f64, sigma: f64) -> f64 {
    q_full.sqrt() / (2.0 / PI * pot).powf(1.0 / (2.0 * sigma + 2.0))
}

/// Ratio `‖V(θ)ψ‖_{L^{2σ+2}_{θ,x}} / (‖ψ‖^{(4−σ)/(2σ+2)} Q^{(3σ−2)/(4σ+4)})`; its supremum
/// over fields is the constant of the Strichartz-type bound. Homogeneous of degree 0.
pub fn strichartz_bound_ratio(c: &SpectralField, nl: &AveragedNonlinearity) -> f64 {
    let s = nl.params.sigma;
    let q = Quadratics::of(c);
    let mass = q.l2_sq;
    let q_full = mass + q.h_form + q.dz_sq;
    let lhs = nl.potential(c).powf(1.0 / (2.0 * s + 2.0));
    lhs / (mass.powf((4.0 - s) / (4.0 * (s + 1.0))) * q_full.powf((3.0 * s - 2.0) / (4.0 * (s + 1.0))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Basis, BasisSpec};
    use crate::nonlinearity::NonlinearityParams;

    fn small() -> Arc<Basis> {
        Basis::new(BasisSpec { n_hermite: 2, m_quad: 3, n_z: 32, l_z: 24.0, n_theta: 8 }).unwrap()
    }

    #[test]
    fn zero_field_reports_zero() {
        let b = small();
        let nl = AveragedNonlinearity::from_spec(&b, NonlinearityParams::focusing(2.0)).unwrap();
        let r = report(&SpectralField::zeros(&b), &nl);
        for v in [r.m, r.e, r.g, r.k, r.s, r.i, r.p, r.b1_sq, r.pot] {
            assert_eq!(v, 0.0);
        }
        assert_eq!(classify_report(&r, 1.0).unwrap(), Region::Kplus);
    }

    #[test]
    fn unit_mode() {
        let b = small();
        let mut c = SpectralField::zeros(&b);
        let i = b.idx(0, 0, 0);
        c.coeffs[i] = Complex64::new(1.0, 0.0);
        let q = Quadratics::of(&c);
        let r = assemble(q, 0.0, 1.0, -1.0, 0.0);
        assert_eq!((r.m, r.k, r.g), (0.5, 1.0, 0.0));
    }

    #[test]
    fn admissibility() {
        assert!(ScaleParams::admissible(1.0, 0.0, 2.0));
        assert!(!ScaleParams::admissible(1.0, 2.0, 2.0));
        assert!(ScaleParams::admissible(1.0, 2.0, 2.5));
        assert!(!ScaleParams::admissible(0.0, 0.0, 2.0));
    }

    #[test]
    fn csv_has_ten_columns() {
        let r = assemble(Quadratics { l2_sq: 1.0, h_form: 2.0, dz_sq: 0.5, momentum: 0.1 }, 0.3, 2.0, -1.0, 0.0);
        assert_eq!(r.csv_row().split(',').count(), 10);
        assert!(FunctionalReport::csv_header().starts_with('#'));
    }
}
