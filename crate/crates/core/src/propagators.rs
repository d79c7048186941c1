//! Exact linear flows as diagonal phase multipliers.
//!
//! * `U(t) = e^{it∂_z²}`: phase `e^{−itk²}` per Fourier mode.
//! * `V(θ) = e^{−iθH}`: phase `e^{−2iθ(n1+n2+1)}` per Hermite mode.
//! * `e^{−itD}`, `D = H − ∂_z²`: the product of the two.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::basis::{Basis, SpectralField};

/// Which linear flow a plan realises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowKind {
    U,
    V,
    D,
}

/// Precomputed unimodular phases for one flow and one time/angle.
#[derive(Debug, Clone)]
pub struct PhasePlan {
    pub kind: FlowKind,
    pub param: f64,
    /// Per-Fourier-slot factor (U part); all ones for V.
    z_phase: Vec<Complex64>,
    /// Per-Hermite-level factor, indexed by `n1 + n2` (V part); all ones for U.
    level_phase: Vec<Complex64>,
}

impl PhasePlan {
    /// Build the plan for `kind` at time (or angle) `param`.
    pub fn new(basis: &Basis, kind: FlowKind, param: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let nz = basis.spec.n_z;
        let levels = 2 * basis.spec.n_hermite + 1;
        let z_phase = match kind {
            FlowKind::V => vec![one; nz],
            _ => basis.k_eff.iter().map(|k| Complex64::from_polar(1.0, -param * k * k)).collect(),
        };
        let level_phase = match kind {
            FlowKind::U => vec![one; levels],
            _ => (0..levels)
                .map(|n| Complex64::from_polar(1.0, -param * 2.0 * (n + 1) as f64))
                .collect(),
        };
        PhasePlan { kind, param, z_phase, level_phase }
    }

    /// Phase applied to coefficient `(n1, n2, k)`.
    #[inline]
    pub fn phase(&self, n1: usize, n2: usize, k: usize) -> Complex64 {
        self.level_phase[n1 + n2] * self.z_phase[k]
    }

    /// Apply the flow in place.
    pub fn apply_in_place(&self, c: &mut SpectralField) {
        let nh = c.basis.nh();
        let nz = c.basis.spec.n_z;
        for n1 in 0..nh {
            for n2 in 0..nh {
                let lp = self.level_phase[n1 + n2];
                let row = &mut c.coeffs[(n1 * nh + n2) * nz..(n1 * nh + n2 + 1) * nz];
                for (v, zp) in row.iter_mut().zip(&self.z_phase) {
                    *v *= lp * zp;
                }
            }
        }
    }

    /// Apply the flow, returning a new field.
    pub fn apply(&self, c: &SpectralField) -> SpectralField {
        let mut out = c.clone();
        self.apply_in_place(&mut out);
        out
    }

    /// True when every stored phase has unit modulus to `tol`.
    pub fn is_unimodular(&self, tol: f64) -> bool {
        self.z_phase.iter().chain(&self.level_phase).all(|p| (p.norm() - 1.0).abs() <= tol)
    }
}

/// `U(t)φ`.
pub fn apply_u(c: &SpectralField, t: f64) -> SpectralField {
    PhasePlan::new(&c.basis, FlowKind::U, t).apply(c)
}

/// `V(θ)φ = e^{−iθH}φ`.
pub fn apply_v(c: &SpectralField, theta: f64) -> SpectralField {
    PhasePlan::new(&c.basis, FlowKind::V, theta).apply(c)
}

/// `e^{−itD}φ`.
pub fn apply_d_flow(c: &SpectralField, t: f64) -> SpectralField {
    PhasePlan::new(&c.basis, FlowKind::D, t).apply(c)
}

/// Thread-safe cache of phase plans keyed by flow kind and the exact bit pattern
/// of the time/angle parameter.
#[derive(Debug, Default)]
pub struct PhaseCache {
    plans: Mutex<HashMap<(FlowKind, u64), Arc<PhasePlan>>>,
}

impl PhaseCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fetch (building on first use) the plan for `(kind, param)`.
    pub fn get(&self, basis: &Basis, kind: FlowKind, param: f64) -> Arc<PhasePlan> {
        let key = (kind, param.to_bits());
        let mut map = self.plans.lock().expect("phase cache poisoned");
        Arc::clone(map.entry(key).or_insert_with(|| Arc::new(PhasePlan::new(basis, kind, param))))
    }

    /// Number of cached plans.
    pub fn len(&self) -> usize {
        self.plans.lock().expect("phase cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use std::f64::consts::PI;

    #[test]
    fn zero_time_is_identity_and_parity_at_half_pi() {
        let basis = Basis::new(BasisSpec { n_hermite: 3, m_quad: 4, n_z: 8, l_z: 7.0, n_theta: 8 }).unwrap();
        let mut c = SpectralField::zeros(&basis);
        for (i, v) in c.coeffs.iter_mut().enumerate() {
            *v = Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos());
        }
        assert_eq!(apply_u(&c, 0.0).coeffs, c.coeffs);
        let p = apply_v(&c, PI / 2.0);
        for n1 in 0..4 {
            for n2 in 0..4 {
                let s = if (n1 + n2) % 2 == 0 { -1.0 } else { 1.0 };
                for k in 0..8 {
                    assert!((p.get(n1, n2, k) - c.get(n1, n2, k) * s).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn cache_reuses_plans() {
        let basis = Basis::new(BasisSpec { n_hermite: 1, m_quad: 2, n_z: 4, l_z: 3.0, n_theta: 4 }).unwrap();
        let cache = PhaseCache::new();
        let a = cache.get(&basis, FlowKind::U, 0.1);
        let b = cache.get(&basis, FlowKind::U, 0.1);
        assert!(Arc::ptr_eq(&a, &b));
        cache.get(&basis, FlowKind::U, 0.1 + f64::EPSILON);
        assert_eq!(cache.len(), 2);
    }
}
