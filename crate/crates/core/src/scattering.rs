//! Scattering diagnostics: the critical space-time norm
//! `‖V(θ)φ‖_{L_t^{2q}L_θ^qL_x^{p0}}`, the auxiliary `L_t^4L_z^∞L_y²` norm of
//! `H^{1/2}φ`, and Cauchy defects of the pulled-back profile `U(−t)φ(t)`.
//!
//! Time integrals use the left-endpoint rule at the caller's cadence, and the
//! `L_z^∞` factor is the maximum over grid points (a lower bound of the continuum
//! norm).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, SpectralField};
use crate::error::{Result, RnlsError};
use crate::nonlinearity::AveragedNonlinearity;
use crate::propagators::apply_u;

/// Exponents of the critical norm for `2 < σ < 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringIndices {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub p0: f64,
}

impl ScatteringIndices {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 2.0 && sigma < 4.0) {
            return Err(RnlsError::InvalidInput(format!("scattering indices need 2 < sigma < 4, got {sigma}")));
        }
        Ok(ScatteringIndices {
            p: 2.0 * sigma / (sigma - 1.0),
            q: 2.0 * sigma,
            s: 3.0 * (sigma - 2.0) / (2.0 * (sigma - 1.0)),
            p0: 2.0 * sigma * (sigma - 1.0),
        })
    }
}

/// `‖V(θ)φ‖_{L_θ^q L_x^{p0}}` on the θ-rule and collocation grid of `nl`.
pub fn theta_space_norm(c: &SpectralField, idx: &ScatteringIndices, nl: &AveragedNonlinearity) -> f64 {
    let mut acc = 0.0;
    let mut dens = vec![0.0; nl.grid.len()];
    nl.visit_theta_fields(c, |_, w, u| {
        for (d, v) in dens.iter_mut().zip(u) {
            *d = v.norm().powf(idx.p0);
        }
        let lp = nl.grid.integrate(&dens, None).powf(1.0 / idx.p0);
        acc += w * lp.powf(idx.q);
    });
    acc.powf(1.0 / idx.q)
}

/// `max_z (∫|H^{1/2}φ(y,z)|² dy)^{1/2}` over the transform z-grid.
pub fn linf_z_l2_y_half(c: &SpectralField) -> f64 {
    let half = c.map_modes(|n1, n2, _| Complex64::new(Basis::h_eig(n1, n2).sqrt(), 0.0));
    half.z_profile_sq(c.basis.spec.n_z).into_iter().fold(0.0, f64::max).sqrt()
}

/// Running space-time norms along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterAccumulator {
    pub indices: ScatteringIndices,
    /// `Σ dt·‖V(θ)φ‖_{L_θ^qL_x^{p0}}^{2q}`.
    pub stnorm_pow: f64,
    /// `Σ dt·‖H^{1/2}φ‖_{L_z^∞L_y²}^4`.
    pub aux_pow: f64,
}

impl ScatterAccumulator {
    pub fn new(sigma: f64) -> Result<Self> {
        Ok(ScatterAccumulator { indices: ScatteringIndices::new(sigma)?, stnorm_pow: 0.0, aux_pow: 0.0 })
    }

    /// Add the contribution of the state `c` held for `dt`; returns the accumulated critical norm.
    pub fn st_norm_increment(&mut self, c: &SpectralField, nl: &AveragedNonlinearity, dt: f64) -> f64 {
        let x = theta_space_norm(c, &self.indices, nl);
        self.stnorm_pow += dt * x.powf(2.0 * self.indices.q);
        self.stnorm()
    }

    /// Add the auxiliary-norm contribution; returns the accumulated auxiliary norm.
    pub fn aux_increment(&mut self, c: &SpectralField, dt: f64) -> f64 {
        self.aux_pow += dt * linf_z_l2_y_half(c).powi(4);
        self.aux()
    }

    pub fn stnorm(&self) -> f64 {
        self.stnorm_pow.powf(1.0 / (2.0 * self.indices.q))
    }

    pub fn aux(&self) -> f64 {
        self.aux_pow.powf(0.25)
    }
}

/// Pulled-back profiles and their mutual B¹ distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub profile_times: Vec<f64>,
    /// `‖U(−tᵢ)φ(tᵢ) − U(−tⱼ)φ(tⱼ)‖_{B¹}`.
    pub profile_dists: Vec<Vec<f64>>,
    /// Distances between consecutive profiles.
    pub consecutive: Vec<f64>,
    /// Last consecutive distance (defect of the numerical asymptotic state).
    pub cauchy_defect: f64,
    /// Whether the consecutive distances decrease strictly.
    pub monotone_decreasing: bool,
}

/// `U(−t)φ(t)` for a snapshot carrying its time.
pub fn pull_back(c: &SpectralField) -> SpectralField {
    apply_u(c, -c.time)
}

/// Cauchy analysis of the pulled-back profiles of at least three snapshots.
pub fn asymptotic_profile(snapshots: &[SpectralField]) -> Result<(ProfileReport, SpectralField)> {
    if snapshots.len() < 3 {
        return Err(RnlsError::InvalidInput("asymptotic profile needs at least three checkpoints".into()));
    }
    if snapshots.windows(2).any(|w| !(w[1].time > w[0].time)) {
        return Err(RnlsError::InvalidInput("checkpoint times must increase".into()));
    }
    let profiles: Vec<SpectralField> = snapshots.iter().map(pull_back).collect();
    let n = profiles.len();
    let mut dists = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let d = profiles[i].dist_b1(&profiles[j]);
            dists[i][j] = d;
            dists[j][i] = d;
        }
    }
    let consecutive: Vec<f64> = (1..n).map(|i| dists[i][i - 1]).collect();
    let monotone_decreasing = consecutive.windows(2).all(|w| w[1] < w[0]);
    let report = ProfileReport {
        profile_times: snapshots.iter().map(|s| s.time).collect(),
        cauchy_defect: *consecutive.last().expect("n >= 3"),
        consecutive,
        profile_dists: dists,
        monotone_decreasing,
    };
    Ok((report, profiles.into_iter().last().expect("n >= 3")))
}
