//! Scenario files: a versioned TOML description of one run, resolved into
//! the cocycle, bounds, perturbation and settings used by the commands.

pub mod commands;
pub mod presets;
pub mod report;

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bounds::BoundFamily;
use crate::certificate::{CertifyConfig, LipschitzBudget, Mode, DEFAULT_GAP_THRESHOLD};
use crate::cocycle::{BlockLinearMap, Cocycle};
use crate::perturbation::{radial_extension, PerturbationFamily};
use crate::sequence::Sequence;
use crate::solver::{RadiusPolicy, SolverConfig};
use crate::verification::{DEFAULT_SLACK, DEFAULT_TOL_INV};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("cannot parse {file}: {message}")]
    Parse { file: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("manifold fingerprint {found} does not match scenario fingerprint {expected}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("no run reports found under {0}")]
    EmptyDirectory(String),
}

impl ScenarioError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        ScenarioError::Config {
            path: path.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Row-major block matrices for one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixBlock {
    pub stable: Vec<Vec<f64>>,
    pub unstable: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocycleSpec {
    /// `A_n = diag(stable_i(n), unstable_j(n))`.
    Diagonal {
        stable: Vec<Sequence>,
        unstable: Vec<Sequence>,
    },
    /// Planar cocycle realising the ratio-form bounds of the same sequences.
    RatioDiagonal {
        a: Sequence,
        b: Sequence,
        c: Sequence,
        d: Sequence,
    },
    /// `A_n = diag(factor^{(-1)^n}, unstable)`.
    Alternating { factor: f64, unstable: f64 },
    /// Inline matrices repeated with period `blocks.len()`.
    Periodic { blocks: Vec<MatrixBlock> },
}

fn matrix(rows: &[Vec<f64>], path: &str) -> Result<DMatrix<f64>, ScenarioError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(ScenarioError::config(
            path,
            "expected a non-empty square matrix",
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl CocycleSpec {
    pub fn build(&self, horizon: usize) -> Result<Cocycle, ScenarioError> {
        let built = match self {
            CocycleSpec::Diagonal { stable, unstable } => {
                if stable.is_empty() || unstable.is_empty() {
                    return Err(ScenarioError::config(
                        "cocycle",
                        "both blocks need at least one entry",
                    ));
                }
                Cocycle::diagonal(stable, unstable, horizon)
            }
            CocycleSpec::RatioDiagonal { a, b, c, d } => {
                Cocycle::ratio_diagonal(a, b, c, d, horizon)
            }
            CocycleSpec::Alternating { factor, unstable } => {
                Cocycle::alternating(*factor, *unstable, horizon)
            }
            CocycleSpec::Periodic { blocks } => {
                let maps = blocks
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        Ok(BlockLinearMap::new(
                            matrix(&b.stable, &format!("cocycle.blocks[{i}].stable"))?,
                            matrix(&b.unstable, &format!("cocycle.blocks[{i}].unstable"))?,
                        ))
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                if maps.is_empty() {
                    return Err(ScenarioError::config(
                        "cocycle.blocks",
                        "at least one block is required",
                    ));
                }
                Cocycle::periodic(&maps, horizon)
            }
        };
        built.map_err(|e| ScenarioError::config("cocycle", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationProfile {
    Zero,
    Linear {
        slope: f64,
    },
    /// `t - tanh t` along the diagonal direction.
    Saturating,
    /// `c κ sign(t) |t|^{q+1}`, Lipschitz `c 2^q r^q` on `B(r)`.
    Power {
        c: f64,
        q: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub profile: PerturbationProfile,
    /// Time-dependent factor `δ_k`; omitted means 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<Sequence>,
}

impl PerturbationSpec {
    pub fn build(&self, stable_dim: usize, unstable_dim: usize) -> PerturbationFamily {
        let base = match self.profile {
            PerturbationProfile::Zero => return PerturbationFamily::zero(stable_dim, unstable_dim),
            PerturbationProfile::Linear { slope } => {
                PerturbationFamily::linear(stable_dim, unstable_dim, slope)
            }
            PerturbationProfile::Saturating => {
                PerturbationFamily::saturating(stable_dim, unstable_dim)
            }
            PerturbationProfile::Power { c, q } => {
                PerturbationFamily::power(stable_dim, unstable_dim, c, q)
            }
        };
        match &self.coefficient {
            Some(seq) => base.with_coefficient(seq.clone()),
            None => base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateSettings {
    pub gap_threshold: f64,
    /// Empty means `1` and `K/4`.
    pub gap_times: Vec<usize>,
}

impl Default for CertificateSettings {
    fn default() -> Self {
        CertificateSettings {
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            gap_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub tol_d: f64,
    /// Defaults to 1, or `r_1` in local mode.
    pub grid_radius: Option<f64>,
    pub points_per_axis: usize,
    /// Defaults to `envelope`, or radii-scaled envelopes in local mode.
    pub radius_policy: Option<RadiusPolicy>,
    pub force: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSettings {
            max_iterations: d.max_iterations,
            tol_d: d.tol_d,
            grid_radius: None,
            points_per_axis: d.points_per_axis,
            radius_policy: None,
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerificationSettings {
    pub tol_inv: f64,
    pub slack: f64,
    /// Largest `m - n` checked.
    pub span: usize,
    /// Start times for the invariance sweep; empty means every `n ≤ K`.
    pub start_times: Vec<usize>,
    /// Random off-grid starts per time, on top of the grid nodes.
    pub extra_points: usize,
    pub decay_pairs: usize,
    pub contraction_trials: usize,
    pub local_samples_per_time: usize,
}

impl Default for VerificationSettings {
    fn default() -> Self {
        VerificationSettings {
            tol_inv: DEFAULT_TOL_INV,
            slack: DEFAULT_SLACK,
            span: 10,
            start_times: Vec::new(),
            extra_points: 0,
            decay_pairs: 200,
            contraction_trials: 0,
            local_samples_per_time: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub name: String,
    /// Series horizon `K`; sups and sums are truncated here.
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    pub cocycle: CocycleSpec,
    pub bounds: BoundFamily,
    pub perturbation: PerturbationSpec,
    /// Ball radii `r_k`; presence selects local mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Sequence>,
    #[serde(default)]
    pub certificate: CertificateSettings,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub verification: VerificationSettings,
    /// Output directory; excluded from the fingerprint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub force: bool,
    pub local: bool,
    pub out: Option<PathBuf>,
}

/// Everything a command needs, built once from a validated scenario.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub fingerprint: String,
    pub mode: Mode,
    pub cocycle: Cocycle,
    /// The perturbation as given.
    pub perturbation: PerturbationFamily,
    /// What the solver iterates: the radial extension in local mode.
    pub solver_perturbation: PerturbationFamily,
    pub budget: LipschitzBudget,
    pub certify_config: CertifyConfig,
    pub solver_config: SolverConfig,
    pub out_dir: PathBuf,
}

impl Scenario {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse {
            file: origin.to_string(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Loads a scenario file, or a built-in preset written `preset:<name>`.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = path.to_string_lossy();
        if let Some(name) = text.strip_prefix("preset:") {
            return presets::preset(name).ok_or_else(|| {
                ScenarioError::config("scenario", format!("unknown preset `{name}`"))
            });
        }
        let body = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
        Self::from_toml_str(&body, &text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises to TOML")
    }

    pub fn is_local(&self) -> bool {
        self.radii.is_some()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ScenarioError::config(
                "format_version",
                format!(
                    "unsupported version {}, expected {FORMAT_VERSION}",
                    self.format_version
                ),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(ScenarioError::config("name", "must not be empty"));
        }
        if self.horizon < 4 {
            return Err(ScenarioError::config("horizon", "must be at least 4"));
        }
        self.bounds
            .validate(self.horizon + 1)
            .map_err(|e| ScenarioError::config("bounds", e.to_string()))?;
        if let Some(r) = &self.radii {
            if (1..=self.horizon + 1).any(|k| !(r.value(k) > 0.0 && r.value(k).is_finite())) {
                return Err(ScenarioError::config(
                    "radii",
                    "radii must be positive and finite",
                ));
            }
        }
        let s = &self.solver;
        if s.points_per_axis < 3 || s.points_per_axis % 2 == 0 {
            return Err(ScenarioError::config(
                "solver.points_per_axis",
                "must be odd and at least 3",
            ));
        }
        if !(s.tol_d > 0.0) {
            return Err(ScenarioError::config("solver.tol_d", "must be positive"));
        }
        if s.max_iterations == 0 {
            return Err(ScenarioError::config(
                "solver.max_iterations",
                "must be positive",
            ));
        }
        if let Some(r) = s.grid_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ScenarioError::config(
                    "solver.grid_radius",
                    "must be positive and finite",
                ));
            }
        }
        let v = &self.verification;
        if !(v.tol_inv > 0.0) {
            return Err(ScenarioError::config(
                "verification.tol_inv",
                "must be positive",
            ));
        }
        if !(v.slack >= 0.0) {
            return Err(ScenarioError::config(
                "verification.slack",
                "must be non-negative",
            ));
        }
        if let Some(&t) = v.start_times.iter().find(|&&t| t == 0 || t > self.horizon) {
            return Err(ScenarioError::config(
                "verification.start_times",
                format!("time {t} outside 1..={}", self.horizon),
            ));
        }
        if let Some(&t) = self
            .certificate
            .gap_times
            .iter()
            .find(|&&t| t == 0 || t >= self.horizon)
        {
            return Err(ScenarioError::config(
                "certificate.gap_times",
                format!("time {t} outside 1..{}", self.horizon),
            ));
        }
        Ok(())
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self, ScenarioError> {
        if let Some(h) = o.horizon {
            self.horizon = h;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if o.force {
            self.solver.force = true;
        }
        if o.local && self.radii.is_none() {
            return Err(ScenarioError::config(
                "radii",
                "--local requires a radii sequence",
            ));
        }
        if let Some(out) = &o.out {
            self.output = Some(out.clone());
        }
        self.validate()?;
        Ok(self)
    }

    /// SHA-256 of the canonical JSON form (sorted keys), output directory excluded.
    pub fn fingerprint(&self) -> String {
        let mut copy = self.clone();
        copy.output = None;
        let value = serde_json::to_value(&copy).expect("scenario serialises to JSON");
        let canonical = serde_json::to_string(&value).expect("JSON value serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn resolve(self) -> Result<Resolved, ScenarioError> {
        self.validate()?;
        let k = self.horizon;
        let cocycle = self.cocycle.build(k + 2)?;
        let (de, df) = (cocycle.stable_dim(), cocycle.unstable_dim());
        let perturbation = self.perturbation.build(de, df);
        let (mode, budget, solver_perturbation, certify_config) = match &self.radii {
            None => {
                let budget = LipschitzBudget::from_fn(k + 1, |i| perturbation.declared_lip(i));
                if let Some(i) = budget.values().iter().position(|v| !v.is_finite()) {
                    return Err(ScenarioError::config(
                        "perturbation",
                        format!(
                            "Lipschitz constant at k = {} is not finite; give radii for local mode",
                            i + 1
                        ),
                    ));
                }
                (
                    Mode::Global,
                    budget,
                    perturbation.clone(),
                    CertifyConfig::global(k),
                )
            }
            Some(r) => {
                let budget =
                    LipschitzBudget::from_fn(k + 1, |i| perturbation.ball_lip(i, r.value(i)));
                (
                    Mode::Local,
                    budget,
                    radial_extension(&perturbation, r),
                    CertifyConfig::local(k, r.clone()),
                )
            }
        };
        let certify_config = CertifyConfig {
            gap_threshold: self.certificate.gap_threshold,
            gap_times: self.certificate.gap_times.clone(),
            ..certify_config
        };
        let s = &self.solver;
        let solver_config = SolverConfig {
            series_horizon: k,
            max_iterations: s.max_iterations,
            tol_d: s.tol_d,
            grid_radius: s
                .grid_radius
                .unwrap_or_else(|| self.radii.as_ref().map_or(1.0, |r| r.value(1))),
            points_per_axis: s.points_per_axis,
            radius_policy: s
                .radius_policy
                .clone()
                .unwrap_or_else(|| match &self.radii {
                    Some(r) => RadiusPolicy::Scaled(r.clone()),
                    None => RadiusPolicy::Envelope,
                }),
            force: s.force,
        };
        let out_dir = self
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(&self.name));
        Ok(Resolved {
            fingerprint: self.fingerprint(),
            mode,
            cocycle,
            perturbation,
            solver_perturbation,
            budget,
            certify_config,
            solver_config,
            out_dir,
            scenario: self,
        })
    }
}
