//! Run orchestration for the command-line front end: builds the basis and
//! nonlinearity from a [`SimulationConfig`], runs the requested computation and
//! writes `diagnostics.csv`, `summary.json` and checkpoints into the output directory.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, BasisSpec, SpectralField};
use crate::checkpoint;
use crate::config::{InitialCondition, SimulationConfig};
use crate::error::{Result, RnlsError};
use crate::evolution::{evolve, Termination, Trajectory};
use crate::functionals::{classify, report, FunctionalReport, Region};
use crate::ground_state::{default_initial_guess, petviashvili_solve, threshold_d, PetviashviliOptions};
use crate::nonlinearity::{eval_resonant_sum, AveragedNonlinearity, RESONANT_MAX_HERMITE};
use crate::scattering::{asymptotic_profile, ProfileReport, ScatterAccumulator};
use crate::virial::{concavity_monitor, w_and_derivatives, ConcavityReport, VirialSample, VirialWeight};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const VIRIAL_FILE: &str = "virial.csv";
pub const GROUND_STATE_FILE: &str = "ground_state.rnls";
pub const GROUND_STATE_SUMMARY: &str = "ground_state.json";
pub const FINAL_CHECKPOINT: &str = "final.rnls";

/// Basis and nonlinearity built from a configuration.
pub struct RunContext {
    pub cfg: SimulationConfig,
    pub basis: Arc<Basis>,
    pub nl: AveragedNonlinearity,
}

impl RunContext {
    pub fn new(cfg: SimulationConfig) -> Result<Self> {
        let violations = cfg.violations();
        if !violations.is_empty() {
            return Err(RnlsError::Config(violations.join("; ")));
        }
        let basis = Basis::new(cfg.basis_spec())?;
        let nl = AveragedNonlinearity::from_spec(&basis, cfg.params())?;
        Ok(RunContext { cfg, basis, nl })
    }

    pub fn out_dir(&self) -> &Path {
        &self.cfg.output.dir
    }

    fn ensure_out_dir(&self) -> Result<()> {
        fs::create_dir_all(self.out_dir())?;
        Ok(())
    }

    /// The configured initial datum.
    pub fn initial_field(&self) -> Result<SpectralField> {
        match &self.cfg.initial {
            InitialCondition::Gaussian { amplitude, y_width, z_width, z_velocity } => {
                let (a, wy, wz, v) = (*amplitude, *y_width, *z_width, *z_velocity);
                Ok(SpectralField::project(&self.basis, |y1, y2, z| {
                    let r = (-(y1 * y1 + y2 * y2) / (2.0 * wy * wy) - z * z / (2.0 * wz * wz)).exp();
                    Complex64::from_polar(a * r, v * z)
                }))
            }
            InitialCondition::Checkpoint { path } => {
                let bytes = fs::read(path)?;
                checkpoint::decode_into(&bytes, &self.basis)
            }
            InitialCondition::GroundStateScaled { amplitude_factor, path } => {
                let stored = path.clone().unwrap_or_else(|| self.out_dir().join(GROUND_STATE_FILE));
                let q = if stored.exists() {
                    checkpoint::decode_into(&fs::read(&stored)?, &self.basis)?
                } else {
                    self.solve_ground_state()?.0
                };
                Ok(q.scaled(Complex64::new(*amplitude_factor, 0.0)))
            }
        }
    }

    /// The threshold `d`: from the configuration, else from a stored ground-state summary
    /// computed with the same σ and basis.
    pub fn stored_threshold(&self) -> Result<Option<f64>> {
        if let Some(d) = self.cfg.ground_state.d {
            return Ok(Some(d));
        }
        let p = self.out_dir().join(GROUND_STATE_SUMMARY);
        if !p.exists() {
            return Ok(None);
        }
        let s: GroundStateSummary = serde_json::from_slice(&fs::read(&p)?)
            .map_err(|e| RnlsError::Config(format!("{}: {e}", p.display())))?;
        let same = s.sigma == self.cfg.model.sigma && s.basis == self.cfg.basis_spec();
        Ok(same.then_some(s.d))
    }

    fn solve_ground_state(&self) -> Result<(SpectralField, GroundStateSummary)> {
        if self.cfg.model.lambda != -1.0 {
            return Err(RnlsError::Config("ground states need lambda = -1".into()));
        }
        let opts = PetviashviliOptions { tol: self.cfg.ground_state.tol, max_iter: self.cfg.ground_state.max_iter };
        let res = petviashvili_solve(&default_initial_guess(&self.basis), &self.nl, &opts)?;
        if !res.converged {
            return Err(RnlsError::Numerical(format!(
                "ground-state iteration stopped after {} iterations with residual {:.3e}",
                res.iterations, res.residual
            )));
        }
        let d = threshold_d(&res, self.cfg.model.sigma)?;
        let r = report(&res.q, &self.nl);
        let summary = GroundStateSummary {
            sigma: self.cfg.model.sigma,
            basis: self.cfg.basis_spec(),
            d,
            residual: res.residual,
            quotient: res.quotient,
            nehari_i: r.i,
            iterations: res.iterations,
            mass: r.m,
            kinetic: r.k,
        };
        Ok((res.q, summary))
    }
}

/// Maximal relative drifts of the conserved quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drifts {
    pub mass: f64,
    pub kinetic: f64,
    pub energy: f64,
    pub momentum: f64,
}

impl Drifts {
    fn of(t: &Trajectory) -> Self {
        let [mass, kinetic, energy, momentum] = t.max_drifts();
        Drifts { mass, kinetic, energy, momentum }
    }
}

/// Scattering section of a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSummary {
    pub stnorm_accum: f64,
    #[serde(rename = "aux_L4LinfL2")]
    pub aux_l4_linf_l2: f64,
    pub profile: Option<ProfileReport>,
}

/// Virial section of a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialSummary {
    pub weight: String,
    pub samples: usize,
    pub concavity: Option<ConcavityReport>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub termination: Termination,
    pub final_time: f64,
    pub max_drifts: Drifts,
    pub d_if_computed: Option<f64>,
    pub classification: Option<Region>,
    pub initial: FunctionalReport,
    pub scatter: Option<ScatterSummary>,
    pub virial: Option<VirialSummary>,
    pub warnings: Vec<String>,
}

/// Contents of `ground_state.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub sigma: f64,
    pub basis: BasisSpec,
    pub d: f64,
    pub residual: f64,
    pub quotient: f64,
    pub nehari_i: f64,
    pub iterations: usize,
    pub mass: f64,
    pub kinetic: f64,
}

/// Output of the σ = 1 quadrature-versus-resonant-sum comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantCheck {
    pub max_abs_discrepancy: f64,
    pub max_abs_coefficient: f64,
}

/// Output of `classify`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub d: f64,
    pub s: f64,
    pub p: f64,
    pub region: Region,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| RnlsError::Numerical(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Which extra diagnostics accompany a time evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub scatter: bool,
    pub virial: bool,
}

/// Evolve the configured datum, writing diagnostics, checkpoints and the summary.
pub fn simulate(ctx: &RunContext, opts: RunOptions) -> Result<Summary> {
    ctx.ensure_out_dir()?;
    let cfg = &ctx.cfg;
    let nl = &ctx.nl;
    let c0 = ctx.initial_field()?;
    let r0 = report(&c0, nl);
    let d = if cfg.model.lambda == -1.0 { ctx.stored_threshold()? } else { None };
    let classification = d.and_then(|d| classify(&c0, d, nl).ok());
    let mut warnings: Vec<String> = nl.diagnostics().to_vec();

    let mut csv = BufWriter::new(fs::File::create(ctx.out_dir().join(DIAGNOSTICS_FILE))?);
    writeln!(csv, "{}", FunctionalReport::csv_header())?;
    let mut io_err: Option<std::io::Error> = None;

    let mut scatter = if opts.scatter {
        match ScatterAccumulator::new(cfg.model.sigma) {
            Ok(a) => Some(a),
            Err(e) => {
                warnings.push(format!("scattering norms skipped: {e}"));
                None
            }
        }
    } else {
        None
    };
    let mut prev: Option<SpectralField> = None;

    let weight = if opts.virial { Some(build_weight(ctx)?) } else { None };
    let mut virial_rows: Vec<VirialSample> = Vec::new();

    let traj = evolve(&c0, &cfg.scheme_config(), nl, cfg.model_kind().expect("validated"), |c, r| {
        if io_err.is_none() {
            if let Err(e) = writeln!(csv, "{}", r.csv_row()) {
                io_err = Some(e);
            }
        }
        if let Some(acc) = scatter.as_mut() {
            if let Some(p) = prev.as_ref() {
                let dt = c.time - p.time;
                acc.st_norm_increment(p, nl, dt);
                acc.aux_increment(p, dt);
            }
            prev = Some(c.clone());
        }
        if let Some(w) = weight.as_ref() {
            virial_rows.push(VirialSample { time: c.time, values: w_and_derivatives(c, w, nl) });
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    csv.flush()?;

    for (i, s) in traj.snapshots.iter().enumerate() {
        checkpoint::write(&ctx.out_dir().join(format!("checkpoint_{i:04}.rnls")), s, cfg.model.sigma, cfg.model.lambda)?;
    }
    checkpoint::write(&ctx.out_dir().join(FINAL_CHECKPOINT), &traj.final_field, cfg.model.sigma, cfg.model.lambda)?;

    let scatter_summary = match scatter {
        Some(acc) => {
            let profile = if traj.snapshots.len() >= 3 {
                Some(asymptotic_profile(&traj.snapshots)?.0)
            } else {
                warnings.push("asymptotic profile needs at least three checkpoints (set diagnostics.checkpoint_every)".into());
                None
            };
            Some(ScatterSummary { stnorm_accum: acc.stnorm(), aux_l4_linf_l2: acc.aux(), profile })
        }
        None => None,
    };

    let virial_summary = if opts.virial {
        let mut f = BufWriter::new(fs::File::create(ctx.out_dir().join(VIRIAL_FILE))?);
        writeln!(f, "# time: simulation time; W: int chi |phi|^2; Wp: dW/dt; Wpp: d2W/dt2 (virial identity)")?;
        writeln!(f, "time,W,Wp,Wpp")?;
        for s in &virial_rows {
            writeln!(f, "{:.17e},{:.17e},{:.17e},{:.17e}", s.time, s.values.w, s.values.wp, s.values.wpp)?;
        }
        f.flush()?;
        let concavity = match (d, classification) {
            (Some(d), Some(Region::Kminus)) => concavity_monitor(&virial_rows, &r0, d, cfg.model.sigma, 1e-8).ok(),
            _ => None,
        };
        Some(VirialSummary { weight: cfg.virial.weight.clone(), samples: virial_rows.len(), concavity })
    } else {
        None
    };

    let summary = Summary {
        termination: traj.termination,
        final_time: traj.final_field.time,
        max_drifts: Drifts::of(&traj),
        d_if_computed: d,
        classification,
        initial: r0,
        scatter: scatter_summary,
        virial: virial_summary,
        warnings,
    };
    write_json(&ctx.out_dir().join(SUMMARY_FILE), &summary)?;
    if traj.termination == Termination::NanDetected {
        return Err(RnlsError::Numerical(format!("non-finite state at t = {}", traj.final_field.time)));
    }
    Ok(summary)
}

fn build_weight(ctx: &RunContext) -> Result<VirialWeight> {
    let z = ctx.basis.z_grid();
    match ctx.cfg.virial.weight.as_str() {
        "truncated" => VirialWeight::truncated(ctx.cfg.virial.radius, &z, ctx.cfg.basis.l_z),
        _ => Ok(VirialWeight::untruncated(&z)),
    }
}

/// Compute the ground state, store it and its summary.
pub fn ground_state(ctx: &RunContext) -> Result<GroundStateSummary> {
    ctx.ensure_out_dir()?;
    let (q, summary) = ctx.solve_ground_state()?;
    checkpoint::write(&ctx.out_dir().join(GROUND_STATE_FILE), &q, ctx.cfg.model.sigma, -1.0)?;
    write_json(&ctx.out_dir().join(GROUND_STATE_SUMMARY), &summary)?;
    Ok(summary)
}

/// Compare the σ = 1 quadrature with the resonant sum on the configured datum.
pub fn resonant_check(ctx: &RunContext) -> Result<ResonantCheck> {
    if ctx.cfg.model.sigma != 1.0 {
        return Err(RnlsError::Config("resonant-check needs sigma = 1".into()));
    }
    if ctx.cfg.basis.n_hermite > RESONANT_MAX_HERMITE {
        return Err(RnlsError::Config(format!("resonant-check needs n_hermite <= {RESONANT_MAX_HERMITE}")));
    }
    let c = ctx.initial_field()?;
    let a = ctx.nl.eval(&c);
    let b = eval_resonant_sum(&c, &ctx.nl.params)?;
    let max_abs_discrepancy = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let max_abs_coefficient = b.coeffs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(ResonantCheck { max_abs_discrepancy, max_abs_coefficient })
}

/// K± membership of the configured datum against a threshold (argument, config, or stored summary).
pub fn classify_initial(ctx: &RunContext, d: Option<f64>) -> Result<Classification> {
    let d = match d {
        Some(d) => d,
        None => ctx.stored_threshold()?.ok_or_else(|| {
            RnlsError::Config("no threshold: pass --d, set ground_state.d, or run ground-state first".into())
        })?,
    };
    let c = ctx.initial_field()?;
    let r = report(&c, &ctx.nl);
    let region = classify(&c, d, &ctx.nl)?;
    Ok(Classification { d, s: r.s, p: r.p, region })
}

/// Path of a file inside the run's output directory.
pub fn output_path(ctx: &RunContext, name: &str) -> PathBuf {
    ctx.out_dir().join(name)
}
