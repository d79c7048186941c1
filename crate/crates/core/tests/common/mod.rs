//! Shared helpers for the integration and acceptance tests: seeded random fields
//! that can be materialised on any basis, and independent reference solutions.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use rnls_core::{Basis, BasisSpec, SpectralField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn basis(n_hermite: usize, m_quad: usize, n_z: usize, l_z: f64, n_theta: usize) -> Arc<Basis> {
    Basis::new(BasisSpec { n_hermite, m_quad, n_z, l_z, n_theta }).expect("valid test basis")
}

pub fn cnormal(r: &mut impl Rng) -> Complex64 {
    Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal))
}

/// Random field with spectrally uniform coefficients on `n1 + n2 ≤ max_level` and
/// `|m| ≤ max_wavenumber`, normalised to unit L² norm.
pub fn band_limited(b: &Arc<Basis>, r: &mut impl Rng, max_level: usize, max_wavenumber: i64) -> SpectralField {
    let nz = b.spec.n_z;
    let mut c = SpectralField::zeros(b);
    for n1 in 0..b.nh() {
        for n2 in 0..b.nh() {
            if n1 + n2 > max_level {
                continue;
            }
            for k in 0..nz {
                let m = rnls_core::basis::wavenumber(k, nz);
                if m.abs() <= max_wavenumber && 2 * m.abs() < nz as i64 {
                    c.coeffs[b.idx(n1, n2, k)] = cnormal(r);
                }
            }
        }
    }
    normalised(c)
}

pub fn normalised(c: SpectralField) -> SpectralField {
    let n = c.l2_sq().sqrt();
    c.scaled(Complex64::new(1.0 / n, 0.0))
}

/// A Gaussian bump `b e^{−(z−z₀)²/(2w²) + ivz}`.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub amp: Complex64,
    pub center: f64,
    pub width: f64,
    pub velocity: f64,
}

impl Bump {
    pub fn eval(&self, z: f64) -> Complex64 {
        let x = (z - self.center) / self.width;
        self.amp * Complex64::from_polar((-0.5 * x * x).exp(), self.velocity * z)
    }
}

/// Parameters of [`FieldRecipe::sample`].
#[derive(Debug, Clone, Copy)]
pub struct RecipeOptions {
    pub max_level: usize,
    pub bumps_per_mode: usize,
    pub min_width: f64,
    pub max_width: f64,
    pub center_spread: f64,
    pub max_velocity: f64,
}

impl Default for RecipeOptions {
    fn default() -> Self {
        RecipeOptions {
            max_level: 3,
            bumps_per_mode: 2,
            min_width: 1.0,
            max_width: 2.0,
            center_spread: 1.5,
            max_velocity: 1.0,
        }
    }
}

/// Resolution-independent random field: Hermite modes `(n1, n2)` times sums of
/// z-localised Gaussian bumps. Materialising it on any basis containing the modes
/// gives the same continuum function up to z-resolution.
#[derive(Debug, Clone)]
pub struct FieldRecipe {
    pub modes: Vec<(usize, usize, Vec<Bump>)>,
}

impl FieldRecipe {
    pub fn sample(r: &mut impl Rng, o: &RecipeOptions) -> Self {
        let mut modes = Vec::new();
        for n1 in 0..=o.max_level {
            for n2 in 0..=(o.max_level - n1) {
                let decay = (-0.3 * (n1 + n2) as f64).exp();
                let bumps = (0..o.bumps_per_mode)
                    .map(|_| Bump {
                        amp: cnormal(r) * decay,
                        center: r.gen_range(-o.center_spread..=o.center_spread),
                        width: r.gen_range(o.min_width..=o.max_width),
                        velocity: r.gen_range(-o.max_velocity..=o.max_velocity),
                    })
                    .collect();
                modes.push((n1, n2, bumps));
            }
        }
        FieldRecipe { modes }
    }

    /// Coefficients on `b` (modes above the basis cut-off are dropped).
    pub fn on(&self, b: &Arc<Basis>) -> SpectralField {
        let nz = b.spec.n_z;
        let z = b.z_grid();
        let mut rows = vec![Complex64::new(0.0, 0.0); b.len()];
        for (n1, n2, bumps) in &self.modes {
            if *n1 >= b.nh() || *n2 >= b.nh() {
                continue;
            }
            let base = b.idx(*n1, *n2, 0);
            for (j, &zj) in z.iter().enumerate() {
                rows[base + j] = bumps.iter().map(|bp| bp.eval(zj)).sum();
            }
        }
        debug_assert_eq!(rows.len() % nz, 0);
        b.rows_to_spectral(rows)
    }
}

/// Unit-norm random field from a fresh recipe.
pub fn localized(b: &Arc<Basis>, r: &mut impl Rng, o: &RecipeOptions) -> SpectralField {
    normalised(FieldRecipe::sample(r, o).on(b))
}

pub fn max_abs_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Independent reference solver for `i f_t = −f_zz − g|f|^{2σ}f` on a periodic grid of
/// length `l`: fourth-order Yoshida composition of Strang splitting, with the exact
/// nonlinear sub-flow `f ↦ f e^{i g|f|^{2σ} τ}` and the exact Fourier linear sub-flow.
pub fn nls1d_reference(f0: &[Complex64], l: f64, g: f64, sigma: f64, t: f64, dt: f64) -> Vec<Complex64> {
    let n = f0.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let k: Vec<f64> = (0..n)
        .map(|j| {
            let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
            2.0 * PI * m as f64 / l
        })
        .collect();
    let cbrt2 = 2f64.powf(1.0 / 3.0);
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 / (2.0 - cbrt2);
    let steps = (t / dt).round() as usize;
    assert!((steps as f64 * dt - t).abs() < 1e-12, "t must be a multiple of dt");
    let mut f = f0.to_vec();
    let linear = |f: &mut Vec<Complex64>, tau: f64| {
        fwd.process(f);
        for (v, kk) in f.iter_mut().zip(&k) {
            *v *= Complex64::from_polar(1.0 / n as f64, -kk * kk * tau);
        }
        inv.process(f);
    };
    let nonlinear = |f: &mut Vec<Complex64>, tau: f64| {
        for v in f.iter_mut() {
            *v *= Complex64::from_polar(1.0, g * v.norm().powf(2.0 * sigma) * tau);
        }
    };
    let strang = |f: &mut Vec<Complex64>, tau: f64| {
        nonlinear(f, 0.5 * tau);
        linear(f, tau);
        nonlinear(f, 0.5 * tau);
    };
    for _ in 0..steps {
        strang(&mut f, w1 * dt);
        strang(&mut f, w0 * dt);
        strang(&mut f, w1 * dt);
    }
    f
}

/// `h₀(y) = π^{−1/4} e^{−y²/2}`.
pub fn h0(y: f64) -> f64 {
    PI.powf(-0.25) * (-0.5 * y * y).exp()
}

/// Level-0 field `h₀(y₁)h₀(y₂) f(z)` from samples of `f` on the transform grid.
pub fn level0_field(b: &Arc<Basis>, f: &[Complex64]) -> SpectralField {
    let nz = b.spec.n_z;
    assert_eq!(f.len(), nz);
    let mut rows = vec![Complex64::new(0.0, 0.0); b.len()];
    rows[..nz].copy_from_slice(f);
    b.rows_to_spectral(rows)
}

/// Row `(0, 0)` of a field sampled on the transform grid.
pub fn level0_samples(c: &SpectralField) -> Vec<Complex64> {
    let nz = c.basis.spec.n_z;
    c.rows_on_grid(nz)[..nz].to_vec()
}

/// Positive even solution of `−f″ + 3f = c_σ f^{2σ+1}` with `c_σ = π^{−σ}/(σ+1)`:
/// `f = (3(σ+1)/c_σ)^{1/(2σ)} sech^{1/σ}(σ√3 z)`.
pub fn reduced_soliton(sigma: f64, z: f64) -> f64 {
    let c = PI.powf(-sigma) / (sigma + 1.0);
    (3.0 * (sigma + 1.0) / c).powf(0.5 / sigma) * (1.0 / (sigma * 3f64.sqrt() * z).cosh()).powf(1.0 / sigma)
}

/// `∫∫_{ℝ²}|V(θ)e^{−a|y|²/2}|^{p} dy` by the closed-form Mehler propagation of a Gaussian:
/// per axis `|u|² = |cos θ + ia sin θ|^{−1} e^{−a y²/(cos²θ + a² sin²θ)}`.
pub fn mehler_gaussian_lp(a: f64, theta: f64, p: f64) -> f64 {
    let c2 = theta.cos().powi(2) + a * a * theta.sin().powi(2);
    let re_a = a / c2;
    let per_axis = c2.powf(-p / 4.0) * (2.0 * PI / (p * re_a)).sqrt();
    per_axis * per_axis
}
