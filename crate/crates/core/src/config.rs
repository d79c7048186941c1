//! Run configuration: a strict TOML document with flat sections.
//!
//! ```toml
//! [model]            # required
//! sigma = 2.0        # 0.5 ≤ σ ≤ 4
//! lambda = -1        # −1 focusing, +1 defocusing
//! equation = "nls"   # "nls" (flow U) or "nls2" (flow e^{−itD})
//!
//! [basis]            # optional; reference resolution by default
//! n_hermite = 16
//! m_quad = 24
//! n_z = 128
//! l_z = 125.66370614359172
//! n_theta = 64
//!
//! [time]
//! scheme = "lawson_rk4"   # or "strang_rk4"
//! dt = 1e-3
//! t_final = 1.0
//! blowup_multiple = 1e4
//!
//! [initial]
//! kind = "gaussian"       # gaussian | checkpoint | ground_state_scaled
//! amplitude = 1.0         # gaussian: A e^{−|y|²/(2w_y²) − z²/(2w_z²) + i v z}
//! y_width = 1.0
//! z_width = 1.0
//! z_velocity = 0.0
//! # path = "state.rnls"            (checkpoint; optional for ground_state_scaled)
//! # amplitude_factor = 1.0         (ground_state_scaled)
//!
//! [diagnostics]
//! report_every = 10       # steps between CSV rows
//! checkpoint_every = 0    # steps between checkpoints (0: final state only)
//! scatter = false         # scattering norms and asymptotic profile
//!
//! [output]
//! dir = "rnls_out"
//!
//! [virial]
//! weight = "z2"           # "z2" or "truncated"
//! radius = 5.0            # R of the truncated weight
//!
//! [ground_state]
//! tol = 1e-10
//! max_iter = 2000
//! # d = 22.41             stored threshold used by `classify`
//! ```
//!
//! Unknown sections or keys are rejected; every violation is reported at once.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Result, RnlsError};
use crate::evolution::{Model, Scheme, SchemeConfig};
use crate::nonlinearity::NonlinearityParams;
use crate::virial::VirialWeight;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub sigma: f64,
    pub lambda: f64,
    #[serde(default = "default_equation")]
    pub equation: String,
}

fn default_equation() -> String {
    "nls".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasisSection {
    pub n_hermite: usize,
    pub m_quad: usize,
    pub n_z: usize,
    pub l_z: f64,
    pub n_theta: usize,
}

impl Default for BasisSection {
    fn default() -> Self {
        BasisSection { n_hermite: 16, m_quad: 24, n_z: 128, l_z: 40.0 * PI, n_theta: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeSection {
    pub scheme: String,
    pub dt: f64,
    pub t_final: f64,
    pub blowup_multiple: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { scheme: "lawson_rk4".into(), dt: 1e-3, t_final: 1.0, blowup_multiple: 1e4 }
    }
}

/// Initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `A e^{−|y|²/(2w_y²) − z²/(2w_z²) + i v z}`.
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        y_width: f64,
        #[serde(default = "one")]
        z_width: f64,
        #[serde(default)]
        z_velocity: f64,
    },
    /// A stored state.
    Checkpoint { path: PathBuf },
    /// `factor · Q`, with `Q` read from `path` (default `<output>/ground_state.rnls`) or
    /// computed when no stored profile exists.
    GroundStateScaled {
        #[serde(default = "one")]
        amplitude_factor: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Gaussian { amplitude: 1.0, y_width: 1.0, z_width: 1.0, z_velocity: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsSection {
    pub report_every: usize,
    pub checkpoint_every: usize,
    pub scatter: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection { report_every: 10, checkpoint_every: 0, scatter: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("rnls_out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VirialSection {
    pub weight: String,
    pub radius: f64,
}

impl Default for VirialSection {
    fn default() -> Self {
        VirialSection { weight: "z2".into(), radius: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundStateSection {
    pub tol: f64,
    pub max_iter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

impl Default for GroundStateSection {
    fn default() -> Self {
        GroundStateSection { tol: 1e-10, max_iter: 2000, d: None }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub basis: BasisSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub virial: VirialSection,
    #[serde(default)]
    pub ground_state: GroundStateSection,
}

fn allowed_keys() -> BTreeMap<&'static str, &'static [&'static str]> {
    BTreeMap::from([
        ("model", &["sigma", "lambda", "equation"][..]),
        ("basis", &["n_hermite", "m_quad", "n_z", "l_z", "n_theta"][..]),
        ("time", &["scheme", "dt", "t_final", "blowup_multiple"][..]),
        ("diagnostics", &["report_every", "checkpoint_every", "scatter"][..]),
        ("output", &["dir"][..]),
        ("virial", &["weight", "radius"][..]),
        ("ground_state", &["tol", "max_iter", "d"][..]),
    ])
}

fn initial_keys(kind: &str) -> Option<&'static [&'static str]> {
    match kind {
        "gaussian" => Some(&["kind", "amplitude", "y_width", "z_width", "z_velocity"]),
        "checkpoint" => Some(&["kind", "path"]),
        "ground_state_scaled" => Some(&["kind", "amplitude_factor", "path"]),
        _ => None,
    }
}

fn unknown_key_violations(table: &toml::Table) -> Vec<String> {
    let allowed = allowed_keys();
    let mut out = Vec::new();
    for (section, value) in table {
        let Some(inner) = value.as_table() else {
            out.push(format!("top-level key `{section}` must be a section"));
            continue;
        };
        let keys: &[&str] = if section == "initial" {
            match inner.get("kind").and_then(|k| k.as_str()) {
                Some(kind) => match initial_keys(kind) {
                    Some(k) => k,
                    None => {
                        out.push(format!(
                            "initial.kind = `{kind}` is not one of gaussian, checkpoint, ground_state_scaled"
                        ));
                        continue;
                    }
                },
                None => {
                    out.push("initial.kind is required when [initial] is present".into());
                    continue;
                }
            }
        } else if let Some(k) = allowed.get(section.as_str()) {
            k
        } else {
            out.push(format!("unknown section [{section}]"));
            continue;
        };
        for key in inner.keys() {
            if !keys.contains(&key.as_str()) {
                out.push(format!("unknown key `{section}.{key}`"));
            }
        }
    }
    out
}

impl SimulationConfig {
    /// Parse and validate; the error lists every violation found.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| RnlsError::Config(e.to_string()))?;
        let mut violations = unknown_key_violations(&table);
        if !violations.is_empty() {
            return Err(RnlsError::Config(violations.join("; ")));
        }
        let cfg: SimulationConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| RnlsError::Config(e.to_string().trim().to_string()))?;
        violations.extend(cfg.violations());
        if violations.is_empty() {
            Ok(cfg)
        } else {
            Err(RnlsError::Config(violations.join("; ")))
        }
    }

    /// Read and parse a configuration file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Serialise to the same grammar accepted by [`Self::parse`].
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// All semantic violations (empty when valid).
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let m = &self.model;
        if !(0.5..=4.0).contains(&m.sigma) {
            v.push(format!("model.sigma = {} outside the admissible range 0.5 <= sigma <= 4", m.sigma));
        }
        if m.lambda != 1.0 && m.lambda != -1.0 {
            v.push(format!("model.lambda = {} must be -1 (focusing) or +1 (defocusing)", m.lambda));
        }
        if self.model_kind().is_none() {
            v.push(format!("model.equation = `{}` must be `nls` or `nls2`", m.equation));
        }
        if let Err(e) = self.basis_spec().validate() {
            v.push(format!("basis: {e}"));
        }
        let t = &self.time;
        if Scheme::parse(&t.scheme).is_none() {
            v.push(format!("time.scheme = `{}` must be `lawson_rk4` or `strang_rk4`", t.scheme));
        }
        if !(t.dt.is_finite() && t.dt > 0.0) {
            v.push(format!("time.dt = {} must be positive", t.dt));
        }
        if !(t.t_final.is_finite() && t.t_final >= 0.0) {
            v.push(format!("time.t_final = {} must be non-negative", t.t_final));
        }
        if !(t.blowup_multiple > 1.0) {
            v.push(format!("time.blowup_multiple = {} must exceed 1", t.blowup_multiple));
        }
        match &self.initial {
            InitialCondition::Gaussian { amplitude, y_width, z_width, z_velocity } => {
                if !amplitude.is_finite() {
                    v.push("initial.amplitude must be finite".into());
                }
                if !(*y_width > 0.0 && *z_width > 0.0) {
                    v.push("initial.y_width and initial.z_width must be positive".into());
                }
                if !z_velocity.is_finite() {
                    v.push("initial.z_velocity must be finite".into());
                }
            }
            InitialCondition::Checkpoint { path } => {
                if !path.exists() {
                    v.push(format!("initial.path `{}` does not exist", path.display()));
                }
            }
            InitialCondition::GroundStateScaled { amplitude_factor, path } => {
                if !amplitude_factor.is_finite() {
                    v.push("initial.amplitude_factor must be finite".into());
                }
                if let Some(p) = path {
                    if !p.exists() {
                        v.push(format!("initial.path `{}` does not exist", p.display()));
                    }
                }
                if m.lambda != -1.0 {
                    v.push("initial.kind = ground_state_scaled requires lambda = -1".into());
                }
            }
        }
        if self.diagnostics.report_every == 0 {
            v.push("diagnostics.report_every must be at least 1".into());
        }
        match self.virial.weight.as_str() {
            "z2" => {}
            "truncated" => {
                let r = self.virial.radius;
                if !(r >= VirialWeight::min_radius()) {
                    v.push(format!("virial.radius = {r} is below the minimum {}", VirialWeight::min_radius()));
                }
                if !(8.0 * r < 0.5 * self.basis.l_z) {
                    v.push(format!("virial.radius = {r} needs 8R < l_z/2"));
                }
            }
            other => v.push(format!("virial.weight = `{other}` must be `z2` or `truncated`")),
        }
        let g = &self.ground_state;
        if !(g.tol > 0.0) {
            v.push("ground_state.tol must be positive".into());
        }
        if g.max_iter == 0 {
            v.push("ground_state.max_iter must be at least 1".into());
        }
        if let Some(d) = g.d {
            if !(d.is_finite() && d > 0.0) {
                v.push("ground_state.d must be positive".into());
            }
        }
        v
    }

    pub fn basis_spec(&self) -> BasisSpec {
        let b = &self.basis;
        BasisSpec { n_hermite: b.n_hermite, m_quad: b.m_quad, n_z: b.n_z, l_z: b.l_z, n_theta: b.n_theta }
    }

    pub fn params(&self) -> NonlinearityParams {
        NonlinearityParams { sigma: self.model.sigma, lambda: self.model.lambda }
    }

    pub fn model_kind(&self) -> Option<Model> {
        match self.model.equation.as_str() {
            "nls" => Some(Model::Nls),
            "nls2" => Some(Model::Nls2),
            _ => None,
        }
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        let t = &self.time;
        SchemeConfig {
            scheme: Scheme::parse(&t.scheme).unwrap_or(Scheme::LawsonRk4),
            dt: t.dt,
            t_final: t.t_final,
            report_every: self.diagnostics.report_every,
            blowup_multiple: t.blowup_multiple,
            snapshot_every: (self.diagnostics.checkpoint_every > 0).then_some(self.diagnostics.checkpoint_every),
        }
    }
}
