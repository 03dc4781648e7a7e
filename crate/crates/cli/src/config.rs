//! JSON run configuration: `{state, probe, integrator, command}` sections
//! with per-field defaults. Invalid documents fail fast before any
//! propagation starts.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use cohmeter::{
    DensityMatrix2, EnvelopeKind, IntegratorConfig, NoiseModel, ProbeConfig, PulseEnvelope,
    PureSuperposition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub command: CommandSection,
}

/// Initial state: a pure superposition, an explicit mixed matrix
/// (`rho22 = 1 - rho11`), or a seeded random mixed state.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSection {
    Pure {
        alpha: f64,
        phi: f64,
    },
    Mixed {
        rho11: f64,
        re_rho12: f64,
        im_rho12: f64,
    },
    Random {
        seed: u64,
    },
}

impl Default for StateSection {
    fn default() -> Self {
        Self::Pure {
            alpha: FRAC_PI_4,
            phi: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default = "default_n_atoms")]
    pub n_atoms: f64,
    #[serde(default = "default_rms_peak")]
    pub rms_peak: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_atoms() -> f64 {
    1e6
}

fn default_rms_peak() -> f64 {
    2.0
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            n_atoms: default_n_atoms(),
            rms_peak: default_rms_peak(),
            delta: 0.0,
            envelope: EnvelopeSection::default(),
            noise: NoiseSection::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSection {
    #[serde(default = "default_kind")]
    pub kind: EnvelopeKindSection,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_span")]
    pub span: f64,
}

fn default_kind() -> EnvelopeKindSection {
    EnvelopeKindSection::Gaussian
}

fn default_width() -> f64 {
    1.0
}

fn default_span() -> f64 {
    4.0
}

impl Default for EnvelopeSection {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            width: default_width(),
            span: default_span(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKindSection {
    Gaussian,
    SinSquared,
    Rectangular,
}

impl EnvelopeKindSection {
    pub fn to_kind(self) -> EnvelopeKind {
        match self {
            Self::Gaussian => EnvelopeKind::Gaussian,
            Self::SinSquared => EnvelopeKind::SinSquared,
            Self::Rectangular => EnvelopeKind::Rectangular,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::SinSquared => "sin_squared",
            Self::Rectangular => "rectangular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSection {
    #[default]
    None,
    Poisson,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
}

fn default_rel_tol() -> f64 {
    1e-10
}

fn default_abs_tol() -> f64 {
    1e-12
}

fn default_max_step() -> f64 {
    0.1
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_step: default_max_step(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CommandSection {
    #[serde(default)]
    pub simulate: SimulateOpts,
    #[serde(default)]
    pub scan: ScanOpts,
    #[serde(default)]
    pub sweep: SweepOpts,
    #[serde(default)]
    pub reconstruct: ReconstructOpts,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOpts {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_theta() -> f64 {
    FRAC_PI_4
}

fn default_samples() -> usize {
    201
}

impl Default for SimulateOpts {
    fn default() -> Self {
        Self {
            theta: default_theta(),
            beta: 0.0,
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanOpts {
    #[serde(default = "default_scan_points")]
    pub n_points: usize,
}

fn default_scan_points() -> usize {
    64
}

impl Default for ScanOpts {
    fn default() -> Self {
        Self {
            n_points: default_scan_points(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOpts {
    #[serde(default = "default_sweep_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_sweep_envelopes")]
    pub envelopes: Vec<EnvelopeKindSection>,
    #[serde(default = "default_sweep_scales")]
    pub rms_scales: Vec<f64>,
}

fn default_sweep_deltas() -> Vec<f64> {
    vec![0.0, 1.0, 5.0]
}

fn default_sweep_envelopes() -> Vec<EnvelopeKindSection> {
    vec![
        EnvelopeKindSection::Gaussian,
        EnvelopeKindSection::SinSquared,
        EnvelopeKindSection::Rectangular,
    ]
}

fn default_sweep_scales() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

impl Default for SweepOpts {
    fn default() -> Self {
        Self {
            deltas: default_sweep_deltas(),
            envelopes: default_sweep_envelopes(),
            rms_scales: default_sweep_scales(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ReconstructOpts {
    #[serde(default)]
    pub records: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Apply command-line overrides on top of the file values.
    pub fn apply_overrides(&mut self, seed: Option<u64>) {
        if let Some(seed) = seed {
            self.probe.seed = seed;
        }
    }

    pub fn envelope(&self) -> Result<PulseEnvelope, CliError> {
        PulseEnvelope::new(
            self.probe.envelope.kind.to_kind(),
            self.probe.envelope.width,
            self.probe.envelope.span,
        )
        .map_err(|e| CliError::Config(format!("probe.envelope: {e}")))
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.integrator.rel_tol,
            abs_tol: self.integrator.abs_tol,
            max_step: self.integrator.max_step,
            ..IntegratorConfig::default()
        }
    }

    /// Build the validated probe configuration (runs the transfer guard).
    pub fn probe_config(&self) -> Result<ProbeConfig, CliError> {
        let envelope = self.envelope()?;
        let noise = match self.probe.noise {
            NoiseSection::None => NoiseModel::None,
            NoiseSection::Poisson => NoiseModel::Poisson,
        };
        ProbeConfig::new(
            self.probe.n_atoms,
            self.probe.rms_peak,
            self.probe.delta,
            envelope,
        )
        .map(|cfg| {
            cfg.with_noise(noise, self.probe.seed)
                .with_integrator(self.integrator())
        })
        .map_err(|e| CliError::Config(format!("probe: {e}")))
    }

    /// The prepared two-state matrix, plus the pure parametrization when
    /// the state section is pure.
    pub fn prepared_state(&self) -> Result<(DensityMatrix2, Option<PureSuperposition>), CliError> {
        match &self.state {
            StateSection::Pure { alpha, phi } => {
                let state = PureSuperposition::new(*alpha, *phi)
                    .map_err(|e| CliError::Config(format!("state.pure: {e}")))?;
                Ok((state.density(), Some(state)))
            }
            StateSection::Mixed {
                rho11,
                re_rho12,
                im_rho12,
            } => {
                let rho = DensityMatrix2::from_parts(
                    *rho11,
                    1.0 - *rho11,
                    num_complex::Complex64::new(*re_rho12, *im_rho12),
                );
                rho.validate(1e-9)
                    .map_err(|e| CliError::Config(format!("state.mixed: {e}")))?;
                Ok((rho, None))
            }
            StateSection::Random { seed } => {
                let mut rng = ChaCha12Rng::seed_from_u64(*seed);
                let chi = PureSuperposition::new(
                    rng.random_range(0.05..std::f64::consts::FRAC_PI_2 - 0.05),
                    rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                )
                .expect("angles drawn in range");
                let r_inc = rng.random_range(0.0..0.45);
                Ok((DensityMatrix2::mixture(r_inc, &chi), None))
            }
        }
    }
}
