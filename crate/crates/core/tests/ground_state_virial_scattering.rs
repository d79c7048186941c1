//! Ground states, the virial monitor and the scattering diagnostics.

mod common;

use std::f64::consts::PI;

use num_complex::Complex64;

use common::*;
use rnls_core::evolution::{evolve, Model, Scheme, SchemeConfig};
use rnls_core::functionals::{nehari_action, report};
use rnls_core::ground_state::{
    default_initial_guess, gap_check, petviashvili_solve, residual, PetviashviliOptions,
};
use rnls_core::nonlinearity::{AveragedNonlinearity, NonlinearityParams, ThetaQuadrature};
use rnls_core::propagators::apply_u;
use rnls_core::scattering::{asymptotic_profile, theta_space_norm, ScatterAccumulator, ScatteringIndices};
use rnls_core::virial::{concavity_monitor, w_and_derivatives, VirialSample, VirialWeight};
use rnls_core::SpectralField;

fn focusing(b: &std::sync::Arc<rnls_core::Basis>, sigma: f64) -> AveragedNonlinearity {
    AveragedNonlinearity::from_spec(b, NonlinearityParams::focusing(sigma)).unwrap()
}

fn gaussian(b: &std::sync::Arc<rnls_core::Basis>, amp: f64, wy: f64, wz: f64) -> SpectralField {
    SpectralField::project(b, |y1, y2, z| {
        Complex64::new(amp * (-(y1 * y1 + y2 * y2) / (2.0 * wy * wy) - z * z / (2.0 * wz * wz)).exp(), 0.0)
    })
}

#[test]
fn ground_state_from_the_default_guess() {
    let b = basis(2, 6, 64, 16.0, ThetaQuadrature::exactness_threshold(2.0, 2).unwrap());
    let nl = focusing(&b, 2.0);
    let gs = petviashvili_solve(&default_initial_guess(&b), &nl, &PetviashviliOptions { tol: 1e-10, max_iter: 2000 })
        .unwrap();
    assert!(gs.converged);
    assert!(residual(&gs.q, &nl) < 1e-8);
    assert!(gs.d > 0.0);

    // Nehari-projected perturbations do not go below d.
    let mut r = rng(301);
    for _ in 0..10 {
        let delta = normalised(band_limited(&b, &mut r, 4, 8));
        let c = gs.q.axpy(Complex64::new(1e-2 * gs.q.l2_sq().sqrt(), 0.0), &delta);
        let rep = report(&c, &nl);
        assert!(nehari_action(rep.q_full(), rep.pot, 2.0).unwrap() >= gs.d * (1.0 - 1e-12));
    }
}

/// The z-only action `½‖ψ‖² + ½‖∂_zψ‖² − pot/(π(σ+1))` after Nehari projection, for
/// `ψ^r = r^{1/σ} e^{−r²|y|²/2} g(z)`, from the Mehler closed form of `V(θ)` on Gaussians.
#[test]
fn z_only_problem_degenerates_under_y_concentration() {
    let sigma: f64 = 2.0;
    let p = 2.0 * sigma + 2.0;
    // g(z) = e^{−z²/2}: ‖g‖² = √π, ‖g′‖² = √π/2, ∫|g|^p = √(2π/p).
    let (g2, dg2, gp) = (PI.sqrt(), 0.5 * PI.sqrt(), (2.0 * PI / p).sqrt());
    let n_theta = 4000;
    let mut actions = Vec::new();
    for r in [1.0f64, 2.0, 4.0, 8.0] {
        let a = r * r;
        let amp2 = r.powf(2.0 / sigma);
        let y2 = PI / a;
        let q_z = amp2 * y2 * (g2 + dg2);
        let h = 0.5 * PI / n_theta as f64;
        let theta_int: f64 = (0..n_theta).map(|k| mehler_gaussian_lp(a, (k as f64 + 0.5) * h, p) * h).sum();
        let pot = amp2.powf(sigma + 1.0) * theta_int * gp;
        actions.push(nehari_action(q_z, pot, sigma).unwrap());
    }
    assert!(actions.windows(2).all(|w| w[1] < w[0]), "{actions:?}");
}

#[test]
fn mehler_oracle_agrees_with_the_potential_on_a_squeezed_gaussian() {
    let sigma = 2.0;
    let b = basis(14, 24, 32, 16.0, 64);
    let nl = focusing(&b, sigma);
    let a: f64 = 1.5;
    let c = SpectralField::project(&b, |y1, y2, z| {
        Complex64::new((-0.5 * a * (y1 * y1 + y2 * y2) - 0.5 * z * z).exp(), 0.0)
    });
    let p = 2.0 * sigma + 2.0;
    let n = 4000;
    let h = 0.5 * PI / n as f64;
    let theta_int: f64 = (0..n).map(|k| mehler_gaussian_lp(a, (k as f64 + 0.5) * h, p) * h).sum();
    let expected = theta_int * (2.0 * PI / p).sqrt();
    assert!(rel_diff(nl.potential(&c), expected) < 1e-6);
}

#[test]
fn gap_check_domain_and_sign() {
    let b = basis(2, 6, 64, 16.0, 16);
    let nl2 = focusing(&b, 2.0);
    assert!(gap_check(10.0, &gaussian(&b, 3.0, 1.0, 1.0), &nl2).is_err());

    let nl = focusing(&b, 2.5);
    let gs = petviashvili_solve(&default_initial_guess(&b), &nl, &PetviashviliOptions { tol: 1e-10, max_iter: 2000 })
        .unwrap();
    for eps in [1e-3, 1e-2, 0.1, 0.5] {
        let c = gs.q.scaled(Complex64::new(1.0 + eps, 0.0));
        assert!(gap_check(gs.d, &c, &nl).unwrap() <= 1e-8, "eps = {eps}");
    }
    let boosted = gaussian(&b, 4.0, 1.0, 1.0);
    assert!(gap_check(gs.d, &boosted, &nl).unwrap() <= 1e-8);
}

#[test]
fn truncated_weight_second_derivative_is_bounded() {
    let z: Vec<f64> = (0..10001).map(|j| -200.0 + 0.04 * j as f64).collect();
    for r in [1.0, 1.5, 2.0, 3.0].map(|f| f * VirialWeight::min_radius()) {
        let w = VirialWeight::truncated(r, &z, 400.0).unwrap();
        assert!(w.chi2.iter().all(|&v| v <= 2.0 + 1e-12), "R = {r}");
    }
}

#[test]
fn pseudo_conformal_identity_and_concavity_for_sigma_two() {
    let b = basis(2, 6, 128, 24.0, ThetaQuadrature::exactness_threshold(2.0, 2).unwrap());
    let nl = focusing(&b, 2.0);
    let gs = petviashvili_solve(&default_initial_guess(&b), &nl, &PetviashviliOptions { tol: 1e-10, max_iter: 2000 })
        .unwrap();
    let c0 = gaussian(&b, 3.2, 1.0, 1.0);
    let r0 = report(&c0, &nl);
    assert!(r0.s < gs.d && r0.p < 0.0, "datum must lie in K-");
    let w = VirialWeight::untruncated(&b.z_grid());
    let mut samples = Vec::new();
    let mut worst = 0f64;
    let cfg = SchemeConfig { report_every: 10, ..SchemeConfig::new(Scheme::LawsonRk4, 1e-3, 0.05) };
    evolve(&c0, &cfg, &nl, Model::Nls, |c, rep| {
        worst = worst.max((rep.p - 4.0 * rep.e).abs() / (1.0 + rep.e.abs()));
        samples.push(VirialSample { time: c.time, values: w_and_derivatives(c, &w, &nl) });
    })
    .unwrap();
    assert!(worst < 1e-9, "P - 4E = {worst:e}");
    let conc = concavity_monitor(&samples, &r0, gs.d, 2.0, 1e-8).unwrap();
    assert!(conc.bound_holds);
    assert!(conc.vanishing_time.is_finite() && conc.vanishing_time > 0.0);
}

#[test]
fn level_zero_theta_norm_is_a_scaled_lebesgue_norm() {
    let sigma = 2.5;
    let b = basis(2, 6, 128, 24.0, 16);
    let nl = focusing(&b, sigma);
    let amp = 1.7;
    let f: Vec<Complex64> = b.z_grid().iter().map(|&z| Complex64::new(amp * (-0.5 * z * z).exp(), 0.0)).collect();
    let c = level0_field(&b, &f);
    let idx = ScatteringIndices::new(sigma).unwrap();
    let p0 = idx.p0;
    // ‖h₀h₀ g‖_{p0} with ∫h₀^{p} = π^{−p/4}√(2π/p) and ∫|g|^p = A^p√(2π/p).
    let y = PI.powf(-p0 / 4.0) * (2.0 * PI / p0).sqrt();
    let lp = (y * y * amp.powf(p0) * (2.0 * PI / p0).sqrt()).powf(1.0 / p0);
    let expected = (0.5 * PI).powf(1.0 / idx.q) * lp;
    assert!(rel_diff(theta_space_norm(&c, &idx, &nl), expected) < 1e-8);
}

#[test]
fn free_flight_space_time_norm_converges() {
    let sigma = 2.5;
    let b = basis(1, 4, 1024, 400.0, 16);
    let nl = focusing(&b, sigma);
    let c0 = gaussian(&b, 1.0, 1.0, 1.0);
    let mut acc = ScatterAccumulator::new(sigma).unwrap();
    let dt = 0.1;
    let mut at = Vec::new();
    let mut t = 0.0;
    for target in [5.0, 10.0, 20.0, 40.0] {
        while t < target - 1e-9 {
            acc.st_norm_increment(&apply_u(&c0, t), &nl, dt);
            t += dt;
        }
        at.push(acc.stnorm_pow);
    }
    let increments: Vec<f64> = at.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(increments.windows(2).all(|w| w[1] < 0.5 * w[0]), "{increments:?}");
}

#[test]
fn blowing_up_run_is_not_cauchy() {
    let sigma = 2.5;
    let b = basis(1, 4, 256, 16.0, 16);
    let nl = focusing(&b, sigma);
    let c0 = gaussian(&b, 2.2, 1.0, 1.0);
    let cfg = SchemeConfig { report_every: 50, snapshot_every: Some(10), blowup_multiple: 10.0, ..SchemeConfig::new(Scheme::LawsonRk4, 5e-4, 2.0) };
    let run = evolve(&c0, &cfg, &nl, Model::Nls, |_, _| {}).unwrap();
    let (prof, _) = asymptotic_profile(&run.snapshots).unwrap();
    assert!(!prof.monotone_decreasing, "{:?}", prof.consecutive);
}
