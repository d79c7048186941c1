//! The averaged nonlinearity
//! `F_av(φ) = (2/π)∫₀^{π/2} V(−θ)(|V(θ)φ|^{2σ}V(θ)φ) dθ`
//! and the potential integral `∫₀^{π/2}∫|V(θ)φ|^{2σ+2} dx dθ`.
//!
//! The pointwise power is taken on a dealiased collocation grid: in y the
//! Gauss–Hermite nodes are contracted by `s = √(σ+1)` so that products of
//! `2σ+2` Hermite functions (which carry `e^{−(σ+1)|y|²}`) are integrated exactly
//! for integer σ, and in z the grid is zero-padded to more than `(σ+1)N_z`
//! points.  Projection back onto the basis is the exact adjoint of synthesis on
//! this grid, which makes the pairings `⟨F_av(φ), φ⟩` real to round-off.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::basis::{smooth_even_at_least, tensor_apply, z_forward, z_inverse, Basis, HermiteTable, SpectralField};
use crate::error::{Result, RnlsError};

/// θ-nodes per parallel work unit; fixed so that reductions are bit-reproducible
/// regardless of the thread count.
const THETA_CHUNK: usize = 4;

/// Largest Hermite index accepted by the resonant-sum oracle.
pub const RESONANT_MAX_HERMITE: usize = 12;

/// Uniform midpoint rule on `[0, span)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub span: f64,
}

impl ThetaQuadrature {
    /// `n` midpoint nodes on `[0, π/2)`.
    pub fn midpoint(n: usize) -> Self {
        Self::midpoint_on(n, 0.5 * PI)
    }

    /// `n` midpoint nodes on `[0, span)`.
    pub fn midpoint_on(n: usize, span: f64) -> Self {
        let h = span / n as f64;
        ThetaQuadrature {
            nodes: (0..n).map(|i| (i as f64 + 0.5) * h).collect(),
            weights: vec![h; n],
            span,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// For integer σ, the smallest node count on `[0, π/2)` for which the rule is
    /// exact on band-limited fields with Hermite indices up to `n_hermite`.
    pub fn exactness_threshold(sigma: f64, n_hermite: usize) -> Option<usize> {
        if sigma.fract() == 0.0 && sigma > 0.0 {
            Some((sigma as usize + 1) * n_hermite + 1)
        } else {
            None
        }
    }
}

/// Power σ and sign λ of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearityParams {
    pub sigma: f64,
    /// `−1` focusing, `+1` defocusing; `0` switches the nonlinearity off (diagnostic mode).
    pub lambda: f64,
}

impl NonlinearityParams {
    pub fn new(sigma: f64, lambda: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(RnlsError::InvalidInput(format!("sigma = {sigma} must be positive")));
        }
        if ![-1.0, 0.0, 1.0].contains(&lambda) {
            return Err(RnlsError::InvalidInput(format!("lambda = {lambda} must be -1, 0 or +1")));
        }
        Ok(NonlinearityParams { sigma, lambda })
    }

    /// Focusing (λ = −1) parameters.
    pub fn focusing(sigma: f64) -> Self {
        NonlinearityParams { sigma, lambda: -1.0 }
    }
}

/// `|u|^{2σ}` evaluated from `|u|²`, with exact fast paths for integer and
/// half-integer σ and the convention `0^{2σ} = 0`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum PowerLaw {
    Int(i32),
    Half(i32),
    General(f64),
}

impl PowerLaw {
    pub(crate) fn new(sigma: f64) -> Self {
        if sigma.fract() == 0.0 {
            PowerLaw::Int(sigma as i32)
        } else if (2.0 * sigma).fract() == 0.0 {
            PowerLaw::Half(sigma.floor() as i32)
        } else {
            PowerLaw::General(sigma)
        }
    }

    /// `(r2)^σ`.
    #[inline]
    pub(crate) fn eval(self, r2: f64) -> f64 {
        match self {
            PowerLaw::Int(p) => r2.powi(p),
            PowerLaw::Half(p) => r2.powi(p) * r2.sqrt(),
            PowerLaw::General(s) => {
                if r2 > 0.0 {
                    (s * r2.ln()).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

/// Dealiased collocation grid attached to a basis.
pub struct CollocationGrid {
    basis: Arc<Basis>,
    /// Contracted Hermite table.
    pub table: HermiteTable,
    /// Padded z-grid size.
    pub nzp: usize,
    synth: Vec<f64>,
    analysis: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CollocationGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CollocationGrid").field("m", &self.table.m()).field("nzp", &self.nzp).finish()
    }
}

impl CollocationGrid {
    /// Grid that integrates the `(2σ+2)`-fold products exactly for integer σ.
    pub fn for_power(basis: &Arc<Basis>, sigma: f64) -> Result<Self> {
        let spec = &basis.spec;
        let m = spec.m_quad.max(((sigma + 1.0) * (spec.n_hermite + 1) as f64).ceil() as usize);
        let nzp = smooth_even_at_least(((sigma + 1.0) * spec.n_z as f64).ceil() as usize + 2);
        Self::with_sizes(basis, (sigma + 1.0).sqrt(), m, nzp)
    }

    /// Grid with explicit contraction `s`, node count `m` and padded size `nzp`.
    pub fn with_sizes(basis: &Arc<Basis>, s: f64, m: usize, nzp: usize) -> Result<Self> {
        if nzp < basis.spec.n_z || nzp % 2 != 0 {
            return Err(RnlsError::InvalidInput("padded z-grid must be even and >= n_z".into()));
        }
        let table = HermiteTable::scaled(basis.spec.n_hermite, m, s)?;
        let mut planner = FftPlanner::new();
        Ok(CollocationGrid {
            basis: Arc::clone(basis),
            synth: table.synthesis_matrix(),
            analysis: table.analysis_matrix(),
            table,
            nzp,
            fft_fwd: planner.plan_fft_forward(nzp),
            fft_inv: planner.plan_fft_inverse(nzp),
        })
    }

    /// Nodes per y-axis.
    pub fn m(&self) -> usize {
        self.table.m()
    }

    /// Grid spacing in z.
    pub fn dz(&self) -> f64 {
        self.basis.spec.l_z / self.nzp as f64
    }

    /// Padded z-grid points.
    pub fn z_grid(&self) -> Vec<f64> {
        self.basis.z_grid_n(self.nzp)
    }

    /// Number of physical samples.
    pub fn len(&self) -> usize {
        self.m() * self.m() * self.nzp
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Hermite rows of `c` sampled on the padded z-grid (`(N+1)² × nzp`).
    pub fn z_rows(&self, c: &SpectralField) -> Vec<Complex64> {
        let mut buf = c.coeffs.clone();
        z_inverse(&*self.fft_inv, &mut buf, self.basis.spec.n_z, self.nzp, self.basis.spec.l_z);
        buf
    }

    /// Hermite synthesis of z-rows onto the full grid (`M² × nzp`).
    pub fn synthesize_rows(&self, rows: &[Complex64]) -> Vec<Complex64> {
        tensor_apply(&self.synth, self.m(), self.basis.nh(), rows, self.nzp)
    }

    /// Hermite analysis of grid samples into z-rows (`(N+1)² × nzp`).
    pub fn analyze_to_rows(&self, samples: &[Complex64]) -> Vec<Complex64> {
        tensor_apply(&self.analysis, self.basis.nh(), self.m(), samples, self.nzp)
    }

    /// z-rows on the padded grid back to truncated spectral coefficients.
    pub fn rows_to_spectral(&self, mut rows: Vec<Complex64>) -> SpectralField {
        z_forward(&*self.fft_fwd, &mut rows, self.nzp, self.basis.spec.n_z, self.basis.spec.l_z);
        SpectralField { coeffs: rows, basis: Arc::clone(&self.basis), time: 0.0 }
    }

    /// Physical samples of `c` on the grid.
    pub fn synthesize(&self, c: &SpectralField) -> Vec<Complex64> {
        self.synthesize_rows(&self.z_rows(c))
    }

    /// `∫ g dx` of real samples on the grid, optionally weighted by a function of z.
    pub fn integrate(&self, samples: &[f64], zweight: Option<&[f64]>) -> f64 {
        let m = self.m();
        let w = &self.table.weights;
        let mut total = 0.0;
        for j1 in 0..m {
            for j2 in 0..m {
                let row = &samples[(j1 * m + j2) * self.nzp..(j1 * m + j2 + 1) * self.nzp];
                let s: f64 = match zweight {
                    None => row.iter().sum(),
                    Some(zw) => row.iter().zip(zw).map(|(a, b)| a * b).sum(),
                };
                total += w[j1] * w[j2] * s;
            }
        }
        total * self.dz()
    }

    /// Multiply every Hermite row by the level phase `e^{−2i(n1+n2+1)θ}` (conjugated if `conj`).
    fn phase_rows(&self, rows: &[Complex64], theta: f64, conj: bool, out: &mut [Complex64]) {
        let nh = self.basis.nh();
        let sgn = if conj { 1.0 } else { -1.0 };
        for n1 in 0..nh {
            for n2 in 0..nh {
                let p = Complex64::from_polar(1.0, sgn * 2.0 * (n1 + n2 + 1) as f64 * theta);
                let r = (n1 * nh + n2) * self.nzp;
                for (o, v) in out[r..r + self.nzp].iter_mut().zip(&rows[r..r + self.nzp]) {
                    *o = v * p;
                }
            }
        }
    }

    /// Samples of `V(θ)φ` on the grid, given the padded z-rows of `φ`.
    pub fn v_theta_samples(&self, rows: &[Complex64], theta: f64) -> Vec<Complex64> {
        let mut phased = vec![Complex64::new(0.0, 0.0); rows.len()];
        self.phase_rows(rows, theta, false, &mut phased);
        self.synthesize_rows(&phased)
    }
}

/// Evaluator for `F_av` and the potential integral at fixed σ and θ-rule.
#[derive(Debug)]
pub struct AveragedNonlinearity {
    pub params: NonlinearityParams,
    pub quad: ThetaQuadrature,
    pub grid: CollocationGrid,
    power: PowerLaw,
    diagnostics: Vec<String>,
}

impl AveragedNonlinearity {
    /// Build with the default dealiased grid for `params.sigma`.
    pub fn new(basis: &Arc<Basis>, params: NonlinearityParams, quad: ThetaQuadrature) -> Result<Self> {
        let grid = CollocationGrid::for_power(basis, params.sigma)?;
        Self::with_grid(params, quad, grid)
    }

    /// Build with the θ-rule `n_theta` nodes on `[0, π/2)` taken from the basis spec.
    pub fn from_spec(basis: &Arc<Basis>, params: NonlinearityParams) -> Result<Self> {
        Self::new(basis, params, ThetaQuadrature::midpoint(basis.spec.n_theta))
    }

    /// Build on an explicit grid.
    pub fn with_grid(params: NonlinearityParams, quad: ThetaQuadrature, grid: CollocationGrid) -> Result<Self> {
        if quad.is_empty() {
            return Err(RnlsError::InvalidInput("empty theta quadrature".into()));
        }
        let mut diagnostics = Vec::new();
        if let Some(thr) = ThetaQuadrature::exactness_threshold(params.sigma, grid.basis.spec.n_hermite) {
            let equivalent = (quad.len() as f64 * (0.5 * PI) / quad.span).round() as usize;
            if equivalent < thr {
                diagnostics.push(format!(
                    "warning: {} theta nodes per quarter period is below the exactness threshold {} \
                     for sigma = {} and n_hermite = {}",
                    equivalent, thr, params.sigma, grid.basis.spec.n_hermite
                ));
            }
        }
        Ok(AveragedNonlinearity { power: PowerLaw::new(params.sigma), params, quad, grid, diagnostics })
    }

    /// Warnings emitted at construction (e.g. under-resolved θ-rule).
    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    /// `F_av(φ)` (unsigned; λ is applied by callers).
    pub fn eval(&self, c: &SpectralField) -> SpectralField {
        self.eval_impl(c, true).0.expect("requested")
    }

    /// `∫₀^{π/2}∫|V(θ)φ|^{2σ+2} dx dθ`.
    pub fn potential(&self, c: &SpectralField) -> f64 {
        self.eval_impl(c, false).1
    }

    /// Both `F_av(φ)` and the potential integral from one pass.
    pub fn eval_with_potential(&self, c: &SpectralField) -> (SpectralField, f64) {
        let (f, p) = self.eval_impl(c, true);
        (f.expect("requested"), p)
    }

    /// Potential integral with an extra weight `w(z)` sampled on the padded z-grid.
    pub fn potential_weighted(&self, c: &SpectralField, zweight: &[f64]) -> f64 {
        let rows = self.grid.z_rows(c);
        let mut total = 0.0;
        for (theta, w) in self.quad.nodes.iter().zip(&self.quad.weights) {
            let u = self.grid.v_theta_samples(&rows, *theta);
            let dens: Vec<f64> = u
                .iter()
                .map(|v| {
                    let r2 = v.norm_sqr();
                    self.power.eval(r2) * r2
                })
                .collect();
            total += w * self.grid.integrate(&dens, Some(zweight));
        }
        total * (0.5 * PI) / self.quad.span
    }

    /// Call `f(θ_i, w_i, samples of V(θ_i)φ)` for every θ-node, in order.
    pub fn visit_theta_fields(&self, c: &SpectralField, mut f: impl FnMut(f64, f64, &[Complex64])) {
        let rows = self.grid.z_rows(c);
        for (theta, w) in self.quad.nodes.iter().zip(&self.quad.weights) {
            let u = self.grid.v_theta_samples(&rows, *theta);
            f(*theta, *w, &u);
        }
    }

    fn eval_impl(&self, c: &SpectralField, want_field: bool) -> (Option<SpectralField>, f64) {
        let grid = &self.grid;
        let rows = grid.z_rows(c);
        let n_nodes = self.quad.len();
        let chunks: Vec<usize> = (0..n_nodes.div_ceil(THETA_CHUNK)).collect();
        let partials: Vec<(Option<Vec<Complex64>>, f64)> = chunks
            .par_iter()
            .map(|&ci| {
                let lo = ci * THETA_CHUNK;
                let hi = (lo + THETA_CHUNK).min(n_nodes);
                let mut acc = if want_field { Some(vec![Complex64::new(0.0, 0.0); rows.len()]) } else { None };
                let mut pot = 0.0;
                let mut phased = vec![Complex64::new(0.0, 0.0); rows.len()];
                let mut dens = vec![0.0; grid.len()];
                for i in lo..hi {
                    let theta = self.quad.nodes[i];
                    let w = self.quad.weights[i];
                    grid.phase_rows(&rows, theta, false, &mut phased);
                    let mut u = grid.synthesize_rows(&phased);
                    for (v, d) in u.iter_mut().zip(dens.iter_mut()) {
                        let r2 = v.norm_sqr();
                        let p = self.power.eval(r2);
                        *d = p * r2;
                        *v *= p;
                    }
                    pot += w * grid.integrate(&dens, None);
                    if let Some(acc) = acc.as_mut() {
                        let back = grid.analyze_to_rows(&u);
                        grid.phase_rows(&back, theta, true, &mut phased);
                        for (a, b) in acc.iter_mut().zip(&phased) {
                            *a += b * w;
                        }
                    }
                }
                (acc, pot)
            })
            .collect();
        let mut pot = 0.0;
        let mut total: Option<Vec<Complex64>> = None;
        for (acc, p) in partials {
            pot += p;
            if let Some(a) = acc {
                match total.as_mut() {
                    None => total = Some(a),
                    Some(t) => t.iter_mut().zip(&a).for_each(|(x, y)| *x += y),
                }
            }
        }
        let field = total.map(|mut t| {
            let inv = 1.0 / self.quad.span;
            t.iter_mut().for_each(|v| *v *= inv);
            let mut f = grid.rows_to_spectral(t);
            f.time = c.time;
            f
        });
        (field, pot * (0.5 * PI) / self.quad.span)
    }
}

/// Exact resonant part of the cubic interaction (σ = 1):
/// the level-`n` component of `Σ_{ℓ1+ℓ2−ℓ3=n} P_{ℓ1}φ · P_{ℓ2}φ · conj(P_{ℓ3}φ)`,
/// where `P_ℓ` projects onto the Hermite level `n1 + n2 = ℓ`.
pub fn eval_resonant_sum(c: &SpectralField, params: &NonlinearityParams) -> Result<SpectralField> {
    if params.sigma != 1.0 {
        return Err(RnlsError::InvalidInput("the resonant-sum oracle is defined for sigma = 1 only".into()));
    }
    let basis = Arc::clone(&c.basis);
    let n = basis.spec.n_hermite;
    if n > RESONANT_MAX_HERMITE {
        return Err(RnlsError::InvalidInput(format!(
            "resonant-sum oracle limited to n_hermite <= {RESONANT_MAX_HERMITE}"
        )));
    }
    let grid = CollocationGrid::for_power(&basis, 1.0)?;
    let nh = basis.nh();
    let nz = basis.spec.n_z;
    let n_levels = 2 * n + 1;
    // Level-projected physical fields.
    let mut levels: Vec<Vec<Complex64>> = Vec::with_capacity(n_levels);
    for l in 0..n_levels {
        let proj = c.map_modes(|n1, n2, _| if n1 + n2 == l { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        levels.push(grid.synthesize(&proj));
    }
    let len = grid.len();
    // Pair sums Q_s = Σ_{ℓ1+ℓ2=s} P_ℓ1 P_ℓ2 over ordered pairs.
    let mut pairs: Vec<Vec<Complex64>> = Vec::with_capacity(2 * n_levels - 1);
    for s in 0..2 * n_levels - 1 {
        let mut q = vec![Complex64::new(0.0, 0.0); len];
        for l1 in s.saturating_sub(n_levels - 1)..=s.min(n_levels - 1) {
            let l2 = s - l1;
            for ((qv, a), b) in q.iter_mut().zip(&levels[l1]).zip(&levels[l2]) {
                *qv += a * b;
            }
        }
        pairs.push(q);
    }
    let mut out_rows = vec![Complex64::new(0.0, 0.0); nh * nh * grid.nzp];
    for lvl in 0..n_levels {
        let mut g = vec![Complex64::new(0.0, 0.0); len];
        for (l3, p3) in levels.iter().enumerate() {
            let q = &pairs[lvl + l3];
            for ((gv, a), b) in g.iter_mut().zip(q).zip(p3) {
                *gv += a * b.conj();
            }
        }
        let rows = grid.analyze_to_rows(&g);
        for n1 in 0..nh {
            for n2 in 0..nh {
                if n1 + n2 == lvl {
                    let r = (n1 * nh + n2) * grid.nzp;
                    out_rows[r..r + grid.nzp].copy_from_slice(&rows[r..r + grid.nzp]);
                }
            }
        }
    }
    let mut f = grid.rows_to_spectral(out_rows);
    debug_assert_eq!(f.coeffs.len(), nh * nh * nz);
    f.time = c.time;
    Ok(f)
}
