//! Mixed Hermite (y ∈ ℝ²) × Fourier (z, periodised) spectral basis.
//!
//! Spectral coefficients are stored as `c[(n1*(N+1) + n2)*N_z + k]` where `n1, n2`
//! are the 1D Hermite indices and `k` the Fourier slot in FFT order (slot `k`
//! carries wavenumber `k` for `k < N_z/2` and `k - N_z` otherwise).  Physical
//! samples are stored as `f[(j1*M + j2)*N_z + j]` on the tensor grid of
//! Gauss–Hermite nodes and the uniform z-grid `z_j = -L/2 + j L / N_z`.
//!
//! The Fourier functions are normalised, `e_m(z) = e^{2πimz/L}/√L`, so that the
//! full set `h_{n1}(y1) h_{n2}(y2) e_m(z)` is orthonormal in L²(ℝ² × [-L/2, L/2))
//! and `∫|φ|² = Σ|c|²` exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, RnlsError};

/// Resolution parameters of the basis.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BasisSpec {
    /// Largest 1D Hermite index per axis (modes `0..=n_hermite`).
    pub n_hermite: usize,
    /// Number of Gauss–Hermite nodes per axis of the transform grid.
    pub m_quad: usize,
    /// Number of Fourier modes in z (even).
    pub n_z: usize,
    /// Period of the z-domain.
    pub l_z: f64,
    /// Number of θ-quadrature nodes used by the averaged nonlinearity.
    pub n_theta: usize,
}

impl BasisSpec {
    /// Resolution used by the default test configuration.
    pub fn reference() -> Self {
        BasisSpec { n_hermite: 16, m_quad: 24, n_z: 128, l_z: 40.0 * PI, n_theta: 64 }
    }

    /// Check the structural constraints on the resolution.
    pub fn validate(&self) -> Result<()> {
        if self.m_quad < self.n_hermite + 1 {
            return Err(RnlsError::InvalidInput(format!(
                "m_quad = {} must be at least n_hermite + 1 = {}",
                self.m_quad,
                self.n_hermite + 1
            )));
        }
        if self.n_z < 2 || self.n_z % 2 != 0 {
            return Err(RnlsError::InvalidInput(format!("n_z = {} must be even and >= 2", self.n_z)));
        }
        if !(self.l_z.is_finite() && self.l_z > 0.0) {
            return Err(RnlsError::InvalidInput(format!("l_z = {} must be positive", self.l_z)));
        }
        if self.n_theta == 0 {
            return Err(RnlsError::InvalidInput("n_theta must be positive".into()));
        }
        Ok(())
    }
}

/// Values of the normalised Hermite functions `h_0..h_nmax` at a point.
///
/// Uses the stable three-term recurrence
/// `h_{n+1} = √(2/(n+1)) y h_n − √(n/(n+1)) h_{n−1}`, `h_0 = π^{-1/4} e^{-y²/2}`.
pub fn hermite_functions(n_max: usize, y: f64, out: &mut [f64]) {
    debug_assert!(out.len() > n_max);
    out[0] = PI.powf(-0.25) * (-0.5 * y * y).exp();
    if n_max == 0 {
        return;
    }
    out[1] = 2f64.sqrt() * y * out[0];
    for n in 1..n_max {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * y * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

/// Gauss–Hermite nodes (ascending) and *folded* weights for `m` points.
///
/// The folded weights `w̃_j = w_j e^{y_j²}` integrate functions that already carry
/// their Gaussian decay: `Σ_j w̃_j f(y_j) ≈ ∫ f(y) dy`, exactly when
/// `f = p·e^{-y²}` with `deg p ≤ 2m − 1`.
pub fn gauss_hermite(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(RnlsError::InvalidInput("Gauss-Hermite rule needs at least one node".into()));
    }
    if m == 1 {
        return Ok((vec![0.0], vec![PI.sqrt()]));
    }
    // Golub–Welsch: the Jacobi matrix of the Hermite weight has off-diagonals √(k/2).
    let jac = DMatrix::<f64>::from_fn(m, m, |i, j| {
        if i + 1 == j || j + 1 == i {
            (((i.max(j)) as f64) / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Symmetrise and polish with Newton on h_m, whose zeros are the nodes.
    for i in 0..m / 2 {
        let a = 0.5 * (nodes[m - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[m - 1 - i] = a;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    let mut h = vec![0.0; m + 1];
    let mut weights = vec![0.0; m];
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..3 {
            hermite_functions(m, *x, &mut h);
            let deriv = (2.0 * m as f64).sqrt() * h[m - 1] - *x * h[m];
            if deriv == 0.0 || !deriv.is_finite() {
                break;
            }
            let step = h[m] / deriv;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        hermite_functions(m, *x, &mut h);
        let hm1 = h[m - 1];
        *w = 1.0 / (m as f64 * hm1 * hm1);
        if !w.is_finite() || hm1 == 0.0 || hm1.abs() < 1e-150 {
            return Err(RnlsError::InvalidInput(format!(
                "Gauss-Hermite weights underflow for m = {m}"
            )));
        }
    }
    Ok((nodes, weights))
}

/// Tabulated Hermite functions on a Gauss–Hermite grid.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    /// Largest tabulated index.
    pub n_max: usize,
    /// Quadrature points `y_j`.
    pub nodes: Vec<f64>,
    /// Folded weights for weightless integration.
    pub weights: Vec<f64>,
    /// `values[n * m + j] = h_n(y_j)`.
    pub values: Vec<f64>,
}

impl HermiteTable {
    /// Standard Gauss–Hermite grid with `m` nodes.
    pub fn new(n_max: usize, m: usize) -> Result<Self> {
        Self::scaled(n_max, m, 1.0)
    }

    /// Grid `y_j = x_j / s` with weights `w̃_j / s`; integrates `p(y)e^{-s²y²}` exactly
    /// for `deg p ≤ 2m − 1`.
    pub fn scaled(n_max: usize, m: usize, s: f64) -> Result<Self> {
        let (x, w) = gauss_hermite(m)?;
        let nodes: Vec<f64> = x.iter().map(|v| v / s).collect();
        let weights: Vec<f64> = w.iter().map(|v| v / s).collect();
        let mut values = vec![0.0; (n_max + 1) * m];
        let mut h = vec![0.0; n_max + 1];
        for (j, &y) in nodes.iter().enumerate() {
            hermite_functions(n_max, y, &mut h);
            for n in 0..=n_max {
                values[n * m + j] = h[n];
            }
        }
        Ok(HermiteTable { n_max, nodes, weights, values })
    }

    /// Number of quadrature nodes.
    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    /// Synthesis matrix `S[j][n] = h_n(y_j)` (M × (n_max+1), row-major).
    pub fn synthesis_matrix(&self) -> Vec<f64> {
        let m = self.m();
        let n1 = self.n_max + 1;
        let mut s = vec![0.0; m * n1];
        for j in 0..m {
            for n in 0..n1 {
                s[j * n1 + n] = self.values[n * m + j];
            }
        }
        s
    }

    /// Analysis matrix `A[n][j] = w_j h_n(y_j)` ((n_max+1) × M, row-major).
    pub fn analysis_matrix(&self) -> Vec<f64> {
        let m = self.m();
        let mut a = self.values.clone();
        for n in 0..=self.n_max {
            for j in 0..m {
                a[n * m + j] *= self.weights[j];
            }
        }
        a
    }

    /// Largest deviation of the discrete Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let m = self.m();
        let mut worst: f64 = 0.0;
        for a in 0..=self.n_max {
            for b in 0..=a {
                let s: f64 = (0..m)
                    .map(|j| self.weights[j] * self.values[a * m + j] * self.values[b * m + j])
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

/// Wavenumber carried by FFT slot `k` of an `n`-point transform.
#[inline]
pub fn wavenumber(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Immutable basis: spec, Hermite table, FFT plans and per-mode eigenvalues.
pub struct Basis {
    pub spec: BasisSpec,
    pub table: HermiteTable,
    /// Effective z-wavenumbers `2πm/L` per Fourier slot.
    pub k_eff: Vec<f64>,
    synth: Vec<f64>,
    analysis: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Basis").field("spec", &self.spec).finish()
    }
}

impl Basis {
    /// Build the basis, validating the spec and the quadrature.
    pub fn new(spec: BasisSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let table = HermiteTable::new(spec.n_hermite, spec.m_quad)?;
        let k_eff = (0..spec.n_z)
            .map(|k| 2.0 * PI * wavenumber(k, spec.n_z) as f64 / spec.l_z)
            .collect();
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(spec.n_z);
        let fft_inv = planner.plan_fft_inverse(spec.n_z);
        let synth = table.synthesis_matrix();
        let analysis = table.analysis_matrix();
        Ok(Arc::new(Basis { spec, table, k_eff, synth, analysis, fft_fwd, fft_inv }))
    }

    /// Hermite modes per axis, `N + 1`.
    pub fn nh(&self) -> usize {
        self.spec.n_hermite + 1
    }

    /// Total number of spectral coefficients.
    pub fn len(&self) -> usize {
        self.nh() * self.nh() * self.spec.n_z
    }

    /// Always false; a basis holds at least one mode.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of physical samples.
    pub fn physical_len(&self) -> usize {
        self.spec.m_quad * self.spec.m_quad * self.spec.n_z
    }

    /// Flat index of coefficient `(n1, n2, k)`.
    #[inline]
    pub fn idx(&self, n1: usize, n2: usize, k: usize) -> usize {
        (n1 * self.nh() + n2) * self.spec.n_z + k
    }

    /// Eigenvalue of H on mode `(n1, n2)`: `2(n1 + n2 + 1)`.
    #[inline]
    pub fn h_eig(n1: usize, n2: usize) -> f64 {
        2.0 * (n1 + n2 + 1) as f64
    }

    /// Uniform z-grid `z_j = -L/2 + jL/n` with `n` points.
    pub fn z_grid_n(&self, n: usize) -> Vec<f64> {
        let l = self.spec.l_z;
        (0..n).map(|j| -0.5 * l + j as f64 * l / n as f64).collect()
    }

    /// Transform z-grid.
    pub fn z_grid(&self) -> Vec<f64> {
        self.z_grid_n(self.spec.n_z)
    }

    /// Physical samples → spectral coefficients (quadrature projection).
    pub fn to_spectral(self: &Arc<Self>, f: &PhysicalField) -> Result<SpectralField> {
        if f.values.len() != self.physical_len() {
            return Err(RnlsError::InvalidInput("physical field has wrong size".into()));
        }
        let nz = self.spec.n_z;
        let mut buf = f.values.clone();
        z_forward(&*self.fft_fwd, &mut buf, nz, nz, self.spec.l_z);
        let coeffs = tensor_apply(&self.analysis, self.nh(), self.spec.m_quad, &buf, nz);
        Ok(SpectralField { coeffs, basis: Arc::clone(self), time: f.time })
    }

    /// Spectral coefficients → physical samples on the transform grid.
    pub fn from_spectral(self: &Arc<Self>, c: &SpectralField) -> PhysicalField {
        let nz = self.spec.n_z;
        let mut values = tensor_apply(&self.synth, self.spec.m_quad, self.nh(), &c.coeffs, nz);
        z_inverse(&*self.fft_inv, &mut values, nz, nz, self.spec.l_z);
        PhysicalField { values, basis: Arc::clone(self), time: c.time }
    }

    /// Hermite z-rows sampled on the transform z-grid (`(N+1)² × N_z`) → coefficients.
    pub fn rows_to_spectral(self: &Arc<Self>, mut rows: Vec<Complex64>) -> SpectralField {
        let nz = self.spec.n_z;
        z_forward(&*self.fft_fwd, &mut rows, nz, nz, self.spec.l_z);
        SpectralField { coeffs: rows, basis: Arc::clone(self), time: 0.0 }
    }

    /// Weighted grid integral `∫ f dx` of a physical quantity sampled on the grid.
    pub fn grid_integral(&self, samples: &[f64]) -> f64 {
        let m = self.spec.m_quad;
        let nz = self.spec.n_z;
        let dz = self.spec.l_z / nz as f64;
        let w = &self.table.weights;
        let mut total = 0.0;
        for j1 in 0..m {
            for j2 in 0..m {
                let row = &samples[(j1 * m + j2) * nz..(j1 * m + j2 + 1) * nz];
                total += w[j1] * w[j2] * row.iter().sum::<f64>();
            }
        }
        total * dz
    }
}

/// Forward z-transform of consecutive rows of length `n_grid`, keeping the first
/// `n_keep` wavenumbers (FFT order); rows are compacted to length `n_keep`.
///
/// Implements `c_m = (√L/n_grid)(−1)^m Σ_j f_j e^{−2πimj/n_grid}`.
pub(crate) fn z_forward(fft: &dyn Fft<f64>, buf: &mut Vec<Complex64>, n_grid: usize, n_keep: usize, l: f64) {
    let rows = buf.len() / n_grid;
    fft.process(buf);
    let scale = l.sqrt() / n_grid as f64;
    let mut sign = vec![0.0; n_keep];
    for (k, s) in sign.iter_mut().enumerate() {
        let m = wavenumber(k, n_keep);
        *s = if m.rem_euclid(2) == 0 { scale } else { -scale };
    }
    if n_keep == n_grid {
        for row in buf.chunks_mut(n_grid) {
            for (v, s) in row.iter_mut().zip(&sign) {
                *v *= *s;
            }
        }
        return;
    }
    let mut out = vec![Complex64::new(0.0, 0.0); rows * n_keep];
    for r in 0..rows {
        for k in 0..n_keep {
            let m = wavenumber(k, n_keep);
            out[r * n_keep + k] = buf[r * n_grid + m.rem_euclid(n_grid as i64) as usize] * sign[k];
        }
    }
    *buf = out;
}

/// Inverse z-transform of rows of `n_modes` coefficients onto an `n_grid`-point grid
/// (zero-padded when `n_grid > n_modes`).  `buf` is resized to `rows * n_grid`.
pub(crate) fn z_inverse(fft: &dyn Fft<f64>, buf: &mut Vec<Complex64>, n_modes: usize, n_grid: usize, l: f64) {
    let rows = buf.len() / n_modes;
    let scale = 1.0 / l.sqrt();
    if n_grid == n_modes {
        for r in 0..rows {
            for k in 0..n_modes {
                let s = if k % 2 == 0 { scale } else { -scale };
                buf[r * n_modes + k] *= s;
            }
        }
    } else {
        let mut out = vec![Complex64::new(0.0, 0.0); rows * n_grid];
        for r in 0..rows {
            for k in 0..n_modes {
                let m = wavenumber(k, n_modes);
                let s = if m.rem_euclid(2) == 0 { scale } else { -scale };
                out[r * n_grid + m.rem_euclid(n_grid as i64) as usize] = buf[r * n_modes + k] * s;
            }
        }
        *buf = out;
    }
    fft.process(buf);
}

/// Apply a real matrix along both Hermite axes of a `cols × cols × len` complex tensor,
/// producing `rows × rows × len`: `out[r1][r2][·] = Σ mat[r1][c1] mat[r2][c2] in[c1][c2][·]`.
pub(crate) fn tensor_apply(mat: &[f64], rows: usize, cols: usize, input: &[Complex64], len: usize) -> Vec<Complex64> {
    debug_assert_eq!(mat.len(), rows * cols);
    debug_assert_eq!(input.len(), cols * cols * len);
    let zero = Complex64::new(0.0, 0.0);
    // Axis 1: tmp[r1][c2][·] = Σ_{c1} mat[r1][c1] in[c1][c2][·]
    let w = cols * len * 2;
    let mut tmp = vec![zero; rows * cols * len];
    {
        let b: &[f64] = bytemuck::cast_slice(input);
        let c: &mut [f64] = bytemuck::cast_slice_mut(&mut tmp);
        unsafe {
            matrixmultiply::dgemm(
                rows, cols, w, 1.0,
                mat.as_ptr(), cols as isize, 1,
                b.as_ptr(), w as isize, 1,
                0.0,
                c.as_mut_ptr(), w as isize, 1,
            );
        }
    }
    // Axis 2: out[r1][r2][·] = Σ_{c2} mat[r2][c2] tmp[r1][c2][·]
    let w2 = len * 2;
    let mut out = vec![zero; rows * rows * len];
    {
        let b: &[f64] = bytemuck::cast_slice(&tmp);
        let c: &mut [f64] = bytemuck::cast_slice_mut(&mut out);
        for r1 in 0..rows {
            let bsl = &b[r1 * cols * w2..(r1 + 1) * cols * w2];
            let csl = &mut c[r1 * rows * w2..(r1 + 1) * rows * w2];
            unsafe {
                matrixmultiply::dgemm(
                    rows, cols, w2, 1.0,
                    mat.as_ptr(), cols as isize, 1,
                    bsl.as_ptr(), w2 as isize, 1,
                    0.0,
                    csl.as_mut_ptr(), w2 as isize, 1,
                );
            }
        }
    }
    out
}

/// Spectral representation of a field.
#[derive(Clone, Debug)]
pub struct SpectralField {
    pub coeffs: Vec<Complex64>,
    pub basis: Arc<Basis>,
    pub time: f64,
}

/// Samples of a field on the transform grid.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    pub values: Vec<Complex64>,
    pub basis: Arc<Basis>,
    pub time: f64,
}

impl PhysicalField {
    /// Sample a function `f(y1, y2, z)` on the transform grid.
    pub fn from_fn(basis: &Arc<Basis>, f: impl Fn(f64, f64, f64) -> Complex64) -> Self {
        let y = &basis.table.nodes;
        let z = basis.z_grid();
        let mut values = Vec::with_capacity(basis.physical_len());
        for &y1 in y {
            for &y2 in y {
                for &zz in &z {
                    values.push(f(y1, y2, zz));
                }
            }
        }
        PhysicalField { values, basis: Arc::clone(basis), time: 0.0 }
    }

    /// `∫|f|²` by grid quadrature.
    pub fn l2_sq(&self) -> f64 {
        let s: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        self.basis.grid_integral(&s)
    }
}

impl SpectralField {
    /// The zero field.
    pub fn zeros(basis: &Arc<Basis>) -> Self {
        SpectralField { coeffs: vec![Complex64::new(0.0, 0.0); basis.len()], basis: Arc::clone(basis), time: 0.0 }
    }

    /// Wrap raw coefficients.
    pub fn from_coeffs(basis: &Arc<Basis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(RnlsError::InvalidInput(format!(
                "expected {} coefficients, got {}",
                basis.len(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { coeffs, basis: Arc::clone(basis), time: 0.0 })
    }

    /// Project a function given on ℝ³ onto the basis via the transform grid.
    pub fn project(basis: &Arc<Basis>, f: impl Fn(f64, f64, f64) -> Complex64) -> Self {
        let phys = PhysicalField::from_fn(basis, f);
        basis.to_spectral(&phys).expect("grid sizes agree by construction")
    }

    /// Coefficient accessor.
    #[inline]
    pub fn get(&self, n1: usize, n2: usize, k: usize) -> Complex64 {
        self.coeffs[self.basis.idx(n1, n2, k)]
    }

    /// `∫|φ|² = Σ|c|²`.
    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨self, other⟩ = ∫ self · conj(other)`.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum()
    }

    /// `⟨Hφ, φ⟩ = Σ 2(n1+n2+1)|c|²`.
    pub fn h_form(&self) -> f64 {
        self.weighted_sum(|n1, n2, _| Basis::h_eig(n1, n2))
    }

    /// `‖∂_zφ‖² = Σ k_eff²|c|²`.
    pub fn dz_sq(&self) -> f64 {
        let k = &self.basis.k_eff;
        self.weighted_sum(|_, _, kk| k[kk] * k[kk])
    }

    /// Momentum `Im ∫ conj(φ) ∂_zφ = Σ k_eff |c|²`.
    pub fn momentum(&self) -> f64 {
        let k = &self.basis.k_eff;
        self.weighted_sum(|_, _, kk| k[kk])
    }

    /// `⟨Dφ, φ⟩ = ⟨Hφ,φ⟩ + ‖∂_zφ‖²`.
    pub fn d_form(&self) -> f64 {
        let k = &self.basis.k_eff;
        self.weighted_sum(|n1, n2, kk| Basis::h_eig(n1, n2) + k[kk] * k[kk])
    }

    /// Full B¹ norm squared, `‖φ‖² + ⟨Dφ,φ⟩`.
    pub fn b1_full_sq(&self) -> f64 {
        self.l2_sq() + self.d_form()
    }

    /// `Σ w(n1, n2, k)|c|²`.
    pub fn weighted_sum(&self, w: impl Fn(usize, usize, usize) -> f64) -> f64 {
        let nh = self.basis.nh();
        let nz = self.basis.spec.n_z;
        let mut total = 0.0;
        for n1 in 0..nh {
            for n2 in 0..nh {
                let base = (n1 * nh + n2) * nz;
                for k in 0..nz {
                    total += w(n1, n2, k) * self.coeffs[base + k].norm_sqr();
                }
            }
        }
        total
    }

    /// Multiply each coefficient by `m(n1, n2, k)`.
    pub fn map_modes(&self, m: impl Fn(usize, usize, usize) -> Complex64) -> SpectralField {
        let nh = self.basis.nh();
        let nz = self.basis.spec.n_z;
        let mut out = self.clone();
        for n1 in 0..nh {
            for n2 in 0..nh {
                let base = (n1 * nh + n2) * nz;
                for k in 0..nz {
                    out.coeffs[base + k] *= m(n1, n2, k);
                }
            }
        }
        out
    }

    /// `Hφ`.
    pub fn apply_h(&self) -> SpectralField {
        self.map_modes(|n1, n2, _| Complex64::new(Basis::h_eig(n1, n2), 0.0))
    }

    /// `∂_zφ`.
    pub fn dz(&self) -> SpectralField {
        let k = self.basis.k_eff.clone();
        self.map_modes(move |_, _, kk| Complex64::new(0.0, k[kk]))
    }

    /// Multiply by a complex scalar.
    pub fn scaled(&self, a: Complex64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: Complex64, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        for (o, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o += a * b;
        }
        out
    }

    /// `‖self − other‖²` in L².
    pub fn dist_l2_sq(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm_sqr()).sum()
    }

    /// Full B¹ distance `‖self − other‖_{B¹}`.
    pub fn dist_b1(&self, other: &SpectralField) -> f64 {
        self.axpy(Complex64::new(-1.0, 0.0), other).b1_full_sq().sqrt()
    }

    /// Complex conjugate field: `conj(φ)` maps wavenumber m to −m (Nyquist onto itself).
    pub fn conj(&self) -> SpectralField {
        let nz = self.basis.spec.n_z;
        let mut out = self.clone();
        let rows = self.coeffs.len() / nz;
        for r in 0..rows {
            for k in 0..nz {
                let kk = (nz - k) % nz;
                out.coeffs[r * nz + kk] = self.coeffs[r * nz + k].conj();
            }
        }
        out
    }

    /// Mass fraction carried by the top `frac` of z-wavenumbers (spectral tail).
    pub fn spectral_tail_fraction(&self, frac: f64) -> f64 {
        let nz = self.basis.spec.n_z as i64;
        let cut = ((0.5 - frac).max(0.0) * nz as f64) as i64;
        let total = self.l2_sq();
        if total == 0.0 {
            return 0.0;
        }
        let tail = self.weighted_sum(|_, _, k| {
            if crate::basis::wavenumber(k, nz as usize).abs() >= cut {
                1.0
            } else {
                0.0
            }
        });
        tail / total
    }

    /// Mass fraction in the outer `frac` portion of the z-domain (spatial tail).
    pub fn boundary_tail_fraction(&self, frac: f64) -> f64 {
        let phys_z = self.z_profile_sq(self.basis.spec.n_z * 2);
        let n = phys_z.len();
        let z = self.basis.z_grid_n(n);
        let half = 0.5 * self.basis.spec.l_z;
        let total: f64 = phys_z.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = phys_z
            .iter()
            .zip(&z)
            .filter(|(_, zz)| zz.abs() >= half * (1.0 - frac))
            .map(|(v, _)| *v)
            .sum();
        tail / total
    }

    /// `ρ(z_j) = ∫|φ(y, z_j)|² dy` on an `n`-point z-grid (`n ≥ N_z`), by Hermite orthonormality.
    pub fn z_profile_sq(&self, n: usize) -> Vec<f64> {
        let rows = self.rows_on_grid(n);
        let mut out = vec![0.0; n];
        for row in rows.chunks(n) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v.norm_sqr();
            }
        }
        out
    }

    /// Every Hermite row `φ_{n1 n2}(z)` sampled on an `n`-point z-grid (`n ≥ N_z`, even).
    pub fn rows_on_grid(&self, n: usize) -> Vec<Complex64> {
        let nz = self.basis.spec.n_z;
        assert!(n >= nz && n % 2 == 0, "grid must be even and at least N_z");
        let mut buf = self.coeffs.clone();
        let fft = FftPlanner::new().plan_fft_inverse(n);
        z_inverse(&*fft, &mut buf, nz, n, self.basis.spec.l_z);
        buf
    }
}

/// Smallest integer `≥ n` whose only prime factors are 2, 3, 5 and which is even.
pub fn smooth_even_at_least(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        if m % 2 == 0 {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            if r == 1 {
                return m;
            }
        }
        m += 1;
    }
}
