//! Localised virial identities.
//!
//! For a weight `χ(z)`:
//!
//! * `W = ∫χ|φ|²`,
//! * `W′ = 2 Im∫∂_zφ conj(φ) χ′`,
//! * `W″ = 4∫|∂_zφ|²χ″ + λ(4σ/(π(σ+1)))∫₀^{π/2}∫|V(θ)φ|^{2σ+2}χ″ − ∫|φ|²χ⁽⁴⁾`.
//!
//! The truncated weight equals `z²` on `|z| ≤ R` and vanishes for
//! `|z| ≥ TRANSITION_END·R`.  On the transition `χ″ = 2(1 − η((|z|−R)/R))` where
//! `η ≥ 0` is a quintic smoothstep plus two non-negative `x³(1−x)³` bumps whose
//! amplitudes are fixed by `χ′ = χ = 0` at the outer end.  Non-negativity of `η`
//! gives `χ″ ≤ 2`, the `C²` pieces make `χ ∈ C⁴`, and `χ⁽⁴⁾ = −2η″/R² ≤ 4/R`
//! holds once `R ≥ max(−η″)/2` (about 4).  A transition ending at `2R` cannot
//! satisfy `χ″ ≤ 2` together with `χ(2R) = χ′(2R) = 0`: integrating `χ″ ≤ 2`
//! backwards from `2R` gives `χ(R) ≤ R²`, with equality only for `χ″ ≡ 2`, which
//! contradicts `χ′(R) = 2R`.  The longer transition is the price of the bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{smooth_even_at_least, SpectralField};
use crate::error::{Result, RnlsError};
use crate::functionals::{classify_report, FunctionalReport, Region};
use crate::nonlinearity::AveragedNonlinearity;

/// Outer end of the truncated weight's support, in units of R.
pub const TRANSITION_END: f64 = 8.0;
const ELL: f64 = TRANSITION_END - 1.0;
const BUMP_WIDTHS: [f64; 2] = [1.5, 3.0];

/// Dense polynomial `Σ c_k t^k`.
#[derive(Debug, Clone, PartialEq)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
    fn deriv(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }
    fn antideriv(&self) -> Poly {
        let mut v = vec![0.0];
        v.extend(self.0.iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
        Poly(v)
    }
    fn add_scaled(&mut self, other: &Poly, a: f64) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0.0);
        }
        for (s, o) in self.0.iter_mut().zip(&other.0) {
            *s += a * o;
        }
    }
    fn scale(&self, a: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * a).collect())
    }
}

/// Smoothstep `S(t/ℓ) = x³(10 − 15x + 6x²)` as a polynomial in t.
fn smoothstep_poly(ell: f64) -> Poly {
    Poly(vec![0.0, 0.0, 0.0, 10.0 / ell.powi(3), -15.0 / ell.powi(4), 6.0 / ell.powi(5)])
}

/// Bump `64 x³(1 − x)³`, `x = t/w`, as a polynomial in t (valid on `[0, w]`).
fn bump_poly(w: f64) -> Poly {
    let c = 64.0 / w.powi(3);
    Poly(vec![0.0, 0.0, 0.0, c, -3.0 * c / w, 3.0 * c / (w * w), -c / w.powi(3)])
}

/// One polynomial piece of the transition, in the variable `t = (|z| − R)/R`.
#[derive(Debug, Clone)]
struct Piece {
    t0: f64,
    t1: f64,
    /// `η` on the piece.
    eta: Poly,
    /// `χ′` and `χ` at `t0`.
    chi1_0: f64,
    chi_0: f64,
}

/// Weight family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    UntruncatedZ2,
    Truncated,
}

/// Analytic virial weight with sampled values.
#[derive(Debug, Clone)]
pub struct VirialWeight {
    pub kind: WeightKind,
    /// Truncation radius (infinite for the untruncated weight).
    pub r: f64,
    pieces: Vec<Piece>,
    /// Sample points and `χ, χ′, χ″, χ⁽⁴⁾` on them.
    pub z: Vec<f64>,
    pub chi: Vec<f64>,
    pub chi1: Vec<f64>,
    pub chi2: Vec<f64>,
    pub chi4: Vec<f64>,
}

impl VirialWeight {
    /// `χ = z²`.
    pub fn untruncated(z: &[f64]) -> Self {
        let mut w = VirialWeight {
            kind: WeightKind::UntruncatedZ2,
            r: f64::INFINITY,
            pieces: Vec::new(),
            z: Vec::new(),
            chi: Vec::new(),
            chi1: Vec::new(),
            chi2: Vec::new(),
            chi4: Vec::new(),
        };
        w.resample(z);
        w
    }

    /// Truncated weight of radius `r`, sampled on `z`; the bounds
    /// `0 ≤ χ ≤ z²`, `χ″ ≤ 2`, `χ⁽⁴⁾ ≤ 4/R` are verified on the samples and on a
    /// fine check grid over the transition.
    pub fn truncated(r: f64, z: &[f64], l_z: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(RnlsError::InvalidInput(format!("radius R = {r} must be positive")));
        }
        if TRANSITION_END * r >= 0.5 * l_z {
            return Err(RnlsError::InvalidInput(format!(
                "weight support {TRANSITION_END}R = {} must lie inside the half period {}",
                TRANSITION_END * r,
                0.5 * l_z
            )));
        }
        let pieces = build_pieces(r)?;
        let last = pieces.last().expect("three pieces");
        let (chi_0, chi1_0, _, _) = piece_eval(last, r, last.t1);
        let scale = r * r;
        if chi_0.abs() > 1e-12 * scale || chi1_0.abs() > 1e-12 * r {
            return Err(RnlsError::Numerical(format!(
                "virial weight does not close: chi = {chi_0:e}, chi' = {chi1_0:e}"
            )));
        }
        let mut w = VirialWeight {
            kind: WeightKind::Truncated,
            r,
            pieces,
            z: Vec::new(),
            chi: Vec::new(),
            chi1: Vec::new(),
            chi2: Vec::new(),
            chi4: Vec::new(),
        };
        let check: Vec<f64> = (0..=4000).map(|i| r + i as f64 * ELL * r / 4000.0).collect();
        w.verify_bounds(&check)?;
        w.resample(z);
        w.verify_bounds(z)?;
        Ok(w)
    }

    /// `(χ, χ′, χ″, χ⁽⁴⁾)` at `z`.
    pub fn eval(&self, z: f64) -> (f64, f64, f64, f64) {
        match self.kind {
            WeightKind::UntruncatedZ2 => (z * z, 2.0 * z, 2.0, 0.0),
            WeightKind::Truncated => {
                let a = z.abs();
                let sgn = if z < 0.0 { -1.0 } else { 1.0 };
                if a <= self.r {
                    return (z * z, 2.0 * z, 2.0, 0.0);
                }
                let t = (a - self.r) / self.r;
                if t >= ELL {
                    return (0.0, 0.0, 0.0, 0.0);
                }
                let p = self.pieces.iter().find(|p| t <= p.t1).unwrap_or_else(|| self.pieces.last().expect("pieces"));
                let (c, c1, c2, c4) = piece_eval(p, self.r, t);
                (c, sgn * c1, c2, c4)
            }
        }
    }

    /// Re-sample the weight on new points.
    pub fn resample(&mut self, z: &[f64]) {
        self.z = z.to_vec();
        let vals: Vec<_> = z.iter().map(|&x| self.eval(x)).collect();
        self.chi = vals.iter().map(|v| v.0).collect();
        self.chi1 = vals.iter().map(|v| v.1).collect();
        self.chi2 = vals.iter().map(|v| v.2).collect();
        self.chi4 = vals.iter().map(|v| v.3).collect();
    }

    fn verify_bounds(&self, z: &[f64]) -> Result<()> {
        for &x in z {
            let (c, _, c2, c4) = self.eval(x);
            let scale = 1e-12 * (1.0 + x * x);
            if c < -scale || c > x * x + scale || c2 > 2.0 + 1e-12 || c4 > 4.0 / self.r + 1e-12 {
                return Err(RnlsError::Numerical(format!(
                    "virial weight bound violated at z = {x}: chi = {c}, chi'' = {c2}, chi'''' = {c4} (R = {})",
                    self.r
                )));
            }
        }
        Ok(())
    }

    /// Smallest radius for which the fourth-derivative bound holds.
    pub fn min_radius() -> f64 {
        // max(−η″)/2, evaluated on a fine grid of the transition.
        let probe = build_pieces(1.0).expect("amplitudes are positive");
        let mut worst: f64 = 0.0;
        for i in 0..=20000 {
            let t = i as f64 * ELL / 20000.0;
            let p = probe.iter().find(|p| t <= p.t1).expect("covered");
            worst = worst.max(-p.eta.deriv().deriv().eval(t));
        }
        0.5 * worst
    }
}

/// Transition pieces for radius `r`; bump amplitudes solve `∫(1−η) = −1` and
/// `∫(ℓ−t)(1−η) = −(ℓ + ½)`, i.e. `χ′ = χ = 0` at the outer end.
fn build_pieces(r: f64) -> Result<Vec<Piece>> {
    let s_m0 = 0.5 * ELL;
    let s_m1 = 5.0 / 14.0 * ELL * ELL;
    let bm0: Vec<f64> = BUMP_WIDTHS.iter().map(|w| 16.0 * w / 35.0).collect();
    let bm1: Vec<f64> = BUMP_WIDTHS.iter().zip(&bm0).map(|(w, m)| m * (ELL - 0.5 * w)).collect();
    let (rhs0, rhs1) = (s_m0 + 1.0, s_m1 + ELL + 0.5);
    let det = bm0[0] * bm1[1] - bm0[1] * bm1[0];
    let a1 = (rhs0 * bm1[1] - bm0[1] * rhs1) / det;
    let a2 = (bm0[0] * rhs1 - rhs0 * bm1[0]) / det;
    if a1 < 0.0 || a2 < 0.0 {
        return Err(RnlsError::Numerical("negative bump amplitude in virial weight".into()));
    }
    let step = smoothstep_poly(ELL);
    let (b1, b2) = (bump_poly(BUMP_WIDTHS[0]), bump_poly(BUMP_WIDTHS[1]));
    let breaks = [0.0, BUMP_WIDTHS[0], BUMP_WIDTHS[1], ELL];
    let mut pieces = Vec::new();
    let (mut chi1_0, mut chi_0) = (2.0 * r, r * r);
    for w in breaks.windows(2) {
        let mut eta = step.clone();
        if w[1] <= BUMP_WIDTHS[0] {
            eta.add_scaled(&b1, a1);
        }
        if w[1] <= BUMP_WIDTHS[1] {
            eta.add_scaled(&b2, a2);
        }
        let piece = Piece { t0: w[0], t1: w[1], eta, chi1_0, chi_0 };
        let (c, c1, _, _) = piece_eval(&piece, r, w[1]);
        chi1_0 = c1;
        chi_0 = c;
        pieces.push(piece);
    }
    Ok(pieces)
}

/// `(χ, χ′, χ″, χ⁽⁴⁾)` at local coordinate `t` on a piece (z > 0 branch).
fn piece_eval(p: &Piece, r: f64, t: f64) -> (f64, f64, f64, f64) {
    // χ″(t) = 2(1 − η(t)); dχ′/dt = R χ″; dχ/dt = R χ′.
    let one_minus = {
        let mut q = Poly(vec![1.0]);
        q.add_scaled(&p.eta, -1.0);
        q.scale(2.0)
    };
    let int1 = one_minus.antideriv();
    let chi1 = |s: f64| p.chi1_0 + r * (int1.eval(s) - int1.eval(p.t0));
    // χ(t) = χ(t0) + R∫_{t0}^{t} χ′ = χ(t0) + R(t − t0)(χ′(t0) − R I(t0)) + R² ∫_{t0}^{t} I
    let int2 = int1.antideriv();
    let c1_at_t0 = p.chi1_0 - r * int1.eval(p.t0);
    let chi = p.chi_0 + r * c1_at_t0 * (t - p.t0) + r * r * (int2.eval(t) - int2.eval(p.t0));
    let c2 = one_minus.eval(t);
    let c4 = one_minus.deriv().deriv().eval(t) / (r * r);
    (chi, chi1(t), c2, c4)
}

/// `W`, `W′`, `W″` of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialValues {
    pub w: f64,
    pub wp: f64,
    pub wpp: f64,
}

/// Padded z-grid size used for the quadratic virial integrals.
pub fn quadratic_grid_size(n_z: usize) -> usize {
    smooth_even_at_least(2 * n_z + 2)
}

/// Evaluate the three virial integrals; `weight` is resampled internally.
pub fn w_and_derivatives(c: &SpectralField, weight: &VirialWeight, nl: &AveragedNonlinearity) -> VirialValues {
    let basis = &c.basis;
    let n = quadratic_grid_size(basis.spec.n_z);
    let z = basis.z_grid_n(n);
    let dzg = basis.spec.l_z / n as f64;
    let vals: Vec<_> = z.iter().map(|&x| weight.eval(x)).collect();
    let phi = c.rows_on_grid(n);
    let dphi = c.dz().rows_on_grid(n);
    let (mut w, mut wp, mut grad2, mut mass4) = (0.0, 0.0, 0.0, 0.0);
    for (row_p, row_d) in phi.chunks(n).zip(dphi.chunks(n)) {
        for j in 0..n {
            let (chi, chi1, chi2, chi4) = vals[j];
            let p = row_p[j];
            let d = row_d[j];
            w += chi * p.norm_sqr();
            wp += chi1 * (d * p.conj()).im;
            grad2 += chi2 * d.norm_sqr();
            mass4 += chi4 * p.norm_sqr();
        }
    }
    let sigma = nl.params.sigma;
    let chi2_nl: Vec<f64> = nl.grid.z_grid().iter().map(|&x| weight.eval(x).2).collect();
    let pot2 = if nl.params.lambda == 0.0 { 0.0 } else { nl.potential_weighted(c, &chi2_nl) };
    VirialValues {
        w: w * dzg,
        wp: 2.0 * wp * dzg,
        wpp: 4.0 * grad2 * dzg + nl.params.lambda * 4.0 * sigma / (PI * (sigma + 1.0)) * pot2 - mass4 * dzg,
    }
}

/// One sample of the virial along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialSample {
    pub time: f64,
    pub values: VirialValues,
}

/// Outcome of the concavity monitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    /// Concavity constant `C₁`.
    pub c1: f64,
    /// `max_t (W″(t) + 4C₁)`; non-positive (up to slack) when the bound holds.
    pub max_excess: f64,
    /// Whether `W″ ≤ −4C₁ + slack` held at every sample.
    pub bound_holds: bool,
    /// Positive root of `W(0) + W′(0)t − 2C₁t²`, the latest time the solution can exist.
    pub vanishing_time: f64,
}

/// Concavity constant: `¼(d − S[φ₀])` for `2 < σ < 4`, `−P[φ₀]` for `σ = 2`.
pub fn concavity_constant(r0: &FunctionalReport, d: f64, sigma: f64) -> Result<f64> {
    if classify_report(r0, d)? != Region::Kminus {
        return Err(RnlsError::InvalidInput("concavity monitor requires K- initial data".into()));
    }
    if sigma == 2.0 {
        Ok(-r0.p)
    } else if sigma > 2.0 && sigma < 4.0 {
        Ok(0.25 * (d - r0.s))
    } else {
        Err(RnlsError::InvalidInput(format!("concavity monitor needs 2 <= sigma < 4, got {sigma}")))
    }
}

/// Check `W″ ≤ −4C₁ + slack` along the samples and predict the vanishing time of the envelope.
pub fn concavity_monitor(
    samples: &[VirialSample],
    r0: &FunctionalReport,
    d: f64,
    sigma: f64,
    slack: f64,
) -> Result<ConcavityReport> {
    let first = samples.first().ok_or_else(|| RnlsError::InvalidInput("no virial samples".into()))?;
    let c1 = concavity_constant(r0, d, sigma)?;
    let max_excess = samples.iter().map(|s| s.values.wpp + 4.0 * c1).fold(f64::NEG_INFINITY, f64::max);
    let (w0, wp0) = (first.values.w, first.values.wp);
    let vanishing_time = (wp0 + (wp0 * wp0 + 8.0 * c1 * w0).sqrt()) / (4.0 * c1);
    Ok(ConcavityReport { c1, max_excess, bound_holds: max_excess <= slack, vanishing_time })
}
