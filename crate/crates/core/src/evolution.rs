//! Time integration of
//!
//! * `i∂_tφ = −∂_z²φ + λF_av(φ)` (linear part `U`), and
//! * `i∂_tψ = Hψ − ∂_z²ψ + λF_av(ψ)` (linear part `e^{−itD}`).
//!
//! Two fixed-step schemes are provided.  `StrangRk4` splits off the exact linear
//! flow for half steps around a classical RK4 step of `i∂_tφ = λF_av(φ)`; the
//! nonlinear sub-flow has no closed form because `F_av` does not preserve the
//! pointwise modulus.  `LawsonRk4` is RK4 in the interaction picture of the
//! linear flow (fourth order overall).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::SpectralField;
use crate::error::{Result, RnlsError};
use crate::functionals::{report, FunctionalReport};
use crate::nonlinearity::AveragedNonlinearity;
use crate::propagators::{FlowKind, PhasePlan};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    StrangRk4,
    LawsonRk4,
}

impl Scheme {
    /// Global order of accuracy.
    pub fn order(self) -> u32 {
        match self {
            Scheme::StrangRk4 => 2,
            Scheme::LawsonRk4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::StrangRk4 => "strang_rk4",
            Scheme::LawsonRk4 => "lawson_rk4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "strang_rk4" => Some(Scheme::StrangRk4),
            "lawson_rk4" => Some(Scheme::LawsonRk4),
            _ => None,
        }
    }
}

/// Which linear operator accompanies the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// `−∂_z²` (flow `U`).
    Nls,
    /// `H − ∂_z²` (flow `e^{−itD}`).
    Nls2,
}

impl Model {
    fn flow(self) -> FlowKind {
        match self {
            Model::Nls => FlowKind::U,
            Model::Nls2 => FlowKind::D,
        }
    }
}

/// Fixed-step run configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    /// Record a functional report every this many steps (the final state is always recorded).
    pub report_every: usize,
    /// Stop with `BlowupDetected` once `‖∂_zφ‖²` exceeds this multiple of its initial value.
    pub blowup_multiple: f64,
    /// Keep a copy of the field every this many steps (`None`: keep none).
    pub snapshot_every: Option<usize>,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64, t_final: f64) -> Self {
        SchemeConfig { scheme, dt, t_final, report_every: 1, blowup_multiple: 1e4, snapshot_every: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(RnlsError::InvalidInput(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(RnlsError::InvalidInput(format!("T = {} must be non-negative", self.t_final)));
        }
        if self.report_every == 0 {
            return Err(RnlsError::InvalidInput("report cadence must be positive".into()));
        }
        if !(self.blowup_multiple > 1.0) {
            return Err(RnlsError::InvalidInput("blow-up multiple must exceed 1".into()));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupDetected,
    NanDetected,
}

/// Output of [`evolve`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<FunctionalReport>,
    pub snapshots: Vec<SpectralField>,
    pub termination: Termination,
    pub final_field: SpectralField,
}

impl Trajectory {
    /// Largest relative drifts of (M, K, E, G) against the first row, normalised as
    /// `|ΔM|/M₀`, `|ΔK|/K₀`, `|ΔE|/(1+|E₀|)`, `|ΔG|/(1+|G₀|)`.
    pub fn max_drifts(&self) -> [f64; 4] {
        let r0 = &self.rows[0];
        let mut d = [0.0f64; 4];
        let rel = |x: f64, x0: f64| if x0 != 0.0 { (x - x0).abs() / x0.abs() } else { (x - x0).abs() };
        for r in &self.rows {
            d[0] = d[0].max(rel(r.m, r0.m));
            d[1] = d[1].max(rel(r.k, r0.k));
            d[2] = d[2].max((r.e - r0.e).abs() / (1.0 + r0.e.abs()));
            d[3] = d[3].max((r.g - r0.g).abs() / (1.0 + r0.g.abs()));
        }
        d
    }
}

/// One-step integrator with precomputed linear phases.
pub struct Stepper<'a> {
    nl: &'a AveragedNonlinearity,
    scheme: Scheme,
    dt: f64,
    half: PhasePlan,
    full: PhasePlan,
}

impl<'a> Stepper<'a> {
    pub fn new(nl: &'a AveragedNonlinearity, basis: &crate::basis::Basis, model: Model, scheme: Scheme, dt: f64) -> Self {
        let kind = model.flow();
        Stepper {
            nl,
            scheme,
            dt,
            half: PhasePlan::new(basis, kind, 0.5 * dt),
            full: PhasePlan::new(basis, kind, dt),
        }
    }

    /// `−iλF_av(φ)`.
    fn rhs(&self, c: &SpectralField) -> SpectralField {
        let lambda = self.nl.params.lambda;
        if lambda == 0.0 {
            return SpectralField::zeros(&c.basis);
        }
        self.nl.eval(c).scaled(Complex64::new(0.0, -lambda))
    }

    fn rk4_nonlinear(&self, c: &SpectralField, h: f64) -> SpectralField {
        let hc = |x: f64| Complex64::new(x, 0.0);
        let k1 = self.rhs(c);
        let k2 = self.rhs(&c.axpy(hc(0.5 * h), &k1));
        let k3 = self.rhs(&c.axpy(hc(0.5 * h), &k2));
        let k4 = self.rhs(&c.axpy(hc(h), &k3));
        let mut out = c.clone();
        for (i, o) in out.coeffs.iter_mut().enumerate() {
            *o += (k1.coeffs[i] + 2.0 * k2.coeffs[i] + 2.0 * k3.coeffs[i] + k4.coeffs[i]) * (h / 6.0);
        }
        out
    }

    fn lawson(&self, c: &SpectralField) -> SpectralField {
        let h = self.dt;
        let hc = |x: f64| Complex64::new(x, 0.0);
        let k1 = self.rhs(c);
        let k2 = self.rhs(&self.half.apply(&c.axpy(hc(0.5 * h), &k1)));
        let e_half_c = self.half.apply(c);
        let k3 = self.rhs(&e_half_c.axpy(hc(0.5 * h), &k2));
        let k4 = self.rhs(&self.full.apply(c).axpy(hc(h), &self.half.apply(&k3)));
        let mut out = self.full.apply(c);
        let ek1 = self.full.apply(&k1);
        let mut k23 = k2.clone();
        k23.coeffs.iter_mut().zip(&k3.coeffs).for_each(|(a, b)| *a += b);
        let ek23 = self.half.apply(&k23);
        for (i, o) in out.coeffs.iter_mut().enumerate() {
            *o += (ek1.coeffs[i] + 2.0 * ek23.coeffs[i] + k4.coeffs[i]) * (h / 6.0);
        }
        out
    }

    /// Advance one step; fails with a numerical error when the result is not finite.
    pub fn step(&self, c: &SpectralField) -> Result<SpectralField> {
        let mut out = match self.scheme {
            Scheme::StrangRk4 => {
                let a = self.half.apply(c);
                let b = self.rk4_nonlinear(&a, self.dt);
                self.half.apply(&b)
            }
            Scheme::LawsonRk4 => self.lawson(c),
        };
        out.time = c.time + self.dt;
        if out.coeffs.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(RnlsError::Numerical(format!("non-finite coefficients at t = {}", out.time)));
        }
        Ok(out)
    }
}

/// One step of the `U`-model.
pub fn step_nls(c: &SpectralField, dt: f64, nl: &AveragedNonlinearity, scheme: Scheme) -> Result<SpectralField> {
    Stepper::new(nl, &c.basis, Model::Nls, scheme, dt).step(c)
}

/// One step of the `D`-model.
pub fn step_nls2(c: &SpectralField, dt: f64, nl: &AveragedNonlinearity, scheme: Scheme) -> Result<SpectralField> {
    Stepper::new(nl, &c.basis, Model::Nls2, scheme, dt).step(c)
}

/// Integrate to `cfg.t_final`, recording reports; `on_report` sees every recorded state.
pub fn evolve(
    c0: &SpectralField,
    cfg: &SchemeConfig,
    nl: &AveragedNonlinearity,
    model: Model,
    mut on_report: impl FnMut(&SpectralField, &FunctionalReport),
) -> Result<Trajectory> {
    cfg.validate()?;
    let n_full = (cfg.t_final / cfg.dt * (1.0 - 1e-12)).floor() as usize;
    let remainder = cfg.t_final - n_full as f64 * cfg.dt;
    let stepper = Stepper::new(nl, &c0.basis, model, cfg.scheme, cfg.dt);
    let last = if remainder > 1e-12 * cfg.dt.max(cfg.t_final) {
        Some(Stepper::new(nl, &c0.basis, model, cfg.scheme, remainder))
    } else {
        None
    };
    let n_steps = n_full + usize::from(last.is_some());
    let mut c = c0.clone();
    let r0 = report(&c, nl);
    on_report(&c, &r0);
    let dz0 = r0.dz_sq;
    let mut rows = vec![r0];
    let mut snapshots = Vec::new();
    if cfg.snapshot_every.is_some() {
        snapshots.push(c.clone());
    }
    let mut termination = Termination::Completed;
    for step in 1..=n_steps {
        let s = if step > n_full { last.as_ref().expect("remainder step") } else { &stepper };
        let next = match s.step(&c) {
            Ok(n) => n,
            Err(RnlsError::Numerical(_)) => {
                termination = Termination::NanDetected;
                break;
            }
            Err(e) => return Err(e),
        };
        c = next;
        if step > n_full {
            c.time = cfg.t_final;
        }
        let blown = dz0 > 0.0 && c.dz_sq() > cfg.blowup_multiple * dz0;
        if step % cfg.report_every == 0 || step == n_steps || blown {
            let r = report(&c, nl);
            on_report(&c, &r);
            rows.push(r);
        }
        if let Some(every) = cfg.snapshot_every {
            if step % every == 0 || step == n_steps {
                snapshots.push(c.clone());
            }
        }
        if blown {
            termination = Termination::BlowupDetected;
            break;
        }
    }
    Ok(Trajectory { rows, snapshots, termination, final_field: c })
}
