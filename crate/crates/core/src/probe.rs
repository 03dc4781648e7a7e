//! Measurement forward model: map a prepared two-state density matrix and
//! a polarization setting onto a total-fluorescence signal, run the
//! four-setting protocol, and scan the preparation phase to detect
//! coherence. Optional Poisson shot noise with per-record deterministic
//! streams.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::model::{
    pulses_for_setting, DensityMatrix2, DensityMatrix3, MeasurementSetting, ModelError,
    PulseEnvelope, VALIDATION_TOL,
};
use crate::propagator::{
    propagate_liouville, transfer_probability, IntegratorConfig, PropagationError,
};
use nalgebra::Matrix3;

/// Transfer probabilities below this guard make every signal ratio
/// ill-conditioned; configurations are rejected at construction.
pub const MIN_TRANSFER: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error(
        "transfer probability {p:.3e} below the {min} guard; raise rms_peak or lower the detuning"
    )]
    TransferTooWeak { p: f64, min: f64 },
    #[error("atom number must be positive, got {0}")]
    NonPositiveAtoms(f64),
    #[error("rms peak must be positive, got {0}")]
    NonPositiveRmsPeak(f64),
    #[error("phase scan needs at least 4 points, got {0}")]
    TooFewScanPoints(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// Shot-noise model applied to simulated signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// Return the expectation value (real-valued).
    #[default]
    None,
    /// Draw an integer count from Poisson(n_atoms * rho_ee).
    Poisson,
}

/// Probe configuration shared by all measurements of one experiment:
/// atom number, rms peak Rabi frequency (held fixed across settings so the
/// transfer probability is common), detuning, envelope, noise model and
/// seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub n_atoms: f64,
    pub rms_peak: f64,
    pub delta: f64,
    pub envelope: PulseEnvelope,
    pub noise: NoiseModel,
    pub seed: u64,
    pub integrator: IntegratorConfig,
}

impl ProbeConfig {
    /// Validates the fields and runs one propagation to confirm the
    /// transfer probability clears [`MIN_TRANSFER`].
    pub fn new(
        n_atoms: f64,
        rms_peak: f64,
        delta: f64,
        envelope: PulseEnvelope,
    ) -> Result<Self, ProbeError> {
        if n_atoms.is_nan() || n_atoms <= 0.0 {
            return Err(ProbeError::NonPositiveAtoms(n_atoms));
        }
        if rms_peak.is_nan() || rms_peak <= 0.0 {
            return Err(ProbeError::NonPositiveRmsPeak(rms_peak));
        }
        let cfg = Self {
            n_atoms,
            rms_peak,
            delta,
            envelope,
            noise: NoiseModel::None,
            seed: 0,
            integrator: IntegratorConfig::default(),
        };
        let p = cfg.transfer_probability()?;
        if p <= MIN_TRANSFER {
            return Err(ProbeError::TransferTooWeak {
                p,
                min: MIN_TRANSFER,
            });
        }
        Ok(cfg)
    }

    /// Defaults: 1e6 atoms, rms peak 2/T at zero detuning with the default
    /// Gaussian envelope (transfer probability about 0.96), noiseless.
    pub fn standard() -> Self {
        Self::new(1e6, 2.0, 0.0, PulseEnvelope::default())
            .expect("standard configuration clears the transfer guard")
    }

    pub fn with_noise(mut self, noise: NoiseModel, seed: u64) -> Self {
        self.noise = noise;
        self.seed = seed;
        self
    }

    pub fn with_integrator(mut self, integrator: IntegratorConfig) -> Self {
        self.integrator = integrator;
        self
    }

    /// The common transfer probability of this configuration.
    pub fn transfer_probability(&self) -> Result<f64, ProbeError> {
        let setting = MeasurementSetting::new(std::f64::consts::FRAC_PI_4, 0.0).unwrap();
        let pulses = pulses_for_setting(&setting, self.rms_peak, self.delta, self.envelope);
        Ok(transfer_probability(&pulses, &self.integrator)?)
    }
}

/// One measured total-fluorescence signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluorescenceRecord {
    pub setting: MeasurementSetting,
    pub signal: f64,
    pub n_atoms: f64,
    pub noisy: bool,
}

/// Signals of a preparation-phase scan and their peak-to-peak contrast.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanResult {
    pub offsets: Vec<f64>,
    pub signals: Vec<f64>,
    pub contrast: f64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream seed derived from the configuration seed and the measurement
/// tag, so draws are independent of evaluation order.
fn stream_seed(seed: u64, tag_a: u64, tag_b: u64) -> u64 {
    splitmix(splitmix(seed ^ tag_a) ^ tag_b.rotate_left(17))
}

fn draw_signal(mean: f64, noise: NoiseModel, stream: u64) -> f64 {
    match noise {
        NoiseModel::None => mean,
        NoiseModel::Poisson => {
            if mean <= 0.0 {
                return 0.0;
            }
            let mut rng = ChaCha12Rng::seed_from_u64(stream);
            Poisson::new(mean)
                .expect("positive finite mean")
                .sample(&mut rng)
        }
    }
}

/// Simulate one fluorescence measurement of `prepared` at `setting`.
///
/// The prepared matrix is embedded with the excited row and column empty,
/// propagated through the pulse pair of the setting, and read out as
/// `n_atoms * rho_ee(+infinity)` (Poisson-sampled when noise is enabled).
pub fn simulate_signal(
    prepared: &DensityMatrix2,
    setting: &MeasurementSetting,
    cfg: &ProbeConfig,
) -> Result<FluorescenceRecord, ProbeError> {
    prepared.validate(VALIDATION_TOL)?;
    let pulses = pulses_for_setting(setting, cfg.rms_peak, cfg.delta, cfg.envelope);
    let rho0 = DensityMatrix3::embed_ground(prepared);
    let rho1 = propagate_liouville(&pulses, &rho0, &cfg.integrator)?;
    let mean = cfg.n_atoms * rho1.rho_ee().max(0.0);
    let stream = stream_seed(cfg.seed, setting.theta.to_bits(), setting.beta.to_bits());
    Ok(FluorescenceRecord {
        setting: *setting,
        signal: draw_signal(mean, cfg.noise, stream),
        n_atoms: cfg.n_atoms,
        noisy: cfg.noise == NoiseModel::Poisson,
    })
}

/// Run the four canonical measurements
/// `(0,0), (pi/2,0), (pi/4,0), (pi/4,pi/2)` with a common rms peak,
/// detuning and envelope.
pub fn four_setting_protocol(
    prepared: &DensityMatrix2,
    cfg: &ProbeConfig,
) -> Result<[FluorescenceRecord; 4], ProbeError> {
    let settings = MeasurementSetting::protocol();
    Ok([
        simulate_signal(prepared, &settings[0], cfg)?,
        simulate_signal(prepared, &settings[1], cfg)?,
        simulate_signal(prepared, &settings[2], cfg)?,
        simulate_signal(prepared, &settings[3], cfg)?,
    ])
}

/// Scan the preparation phase: apply `rho12 -> rho12 e^{i delta}` over a
/// uniform grid of `n_points` offsets in `[0, 2 pi)` and measure each
/// variant at the fixed setting `(theta = pi/4, beta = 0)`.
///
/// The propagation is linear in the prepared matrix, so the scan needs
/// only two propagations: one for the diagonal part and one for the
/// coherence part; every offset signal is a combination of the two. The
/// peak-to-peak contrast `(max - min) / (max + min)` equals `2 |rho12|`
/// up to grid resolution.
pub fn phase_scan(
    prepared: &DensityMatrix2,
    n_points: usize,
    cfg: &ProbeConfig,
) -> Result<PhaseScanResult, ProbeError> {
    if n_points < 4 {
        return Err(ProbeError::TooFewScanPoints(n_points));
    }
    prepared.validate(VALIDATION_TOL)?;
    let setting = MeasurementSetting::new(std::f64::consts::FRAC_PI_4, 0.0).unwrap();
    let pulses = pulses_for_setting(&setting, cfg.rms_peak, cfg.delta, cfg.envelope);

    // Diagonal part.
    let diag = DensityMatrix2::from_parts(prepared.rho11, prepared.rho22, C64::new(0.0, 0.0));
    let rho_diag = DensityMatrix3::embed_ground(&diag);
    let e_diag = propagate_liouville(&pulses, &rho_diag, &cfg.integrator)?.rho_ee();

    // Coherence part rho12 |1><2|; the Liouville map is linear on general
    // matrices, Hermiticity is restored in the recombination below.
    let mut coh = Matrix3::zeros();
    coh[(0, 2)] = prepared.rho12;
    let coh_out = propagate_liouville(
        &pulses,
        &DensityMatrix3::from_matrix_unchecked(coh),
        &cfg.integrator,
    )?;
    let e_coh = coh_out.matrix()[(1, 1)];

    let mut offsets = Vec::with_capacity(n_points);
    let mut signals = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let delta = std::f64::consts::TAU * k as f64 / n_points as f64;
        let rho_ee = e_diag + 2.0 * (C64::from_polar(1.0, delta) * e_coh).re;
        let mean = cfg.n_atoms * rho_ee.max(0.0);
        let stream = stream_seed(cfg.seed, delta.to_bits(), 0x5eed_5ca4);
        offsets.push(delta);
        signals.push(draw_signal(mean, cfg.noise, stream));
    }

    let max = signals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = signals.iter().copied().fold(f64::INFINITY, f64::min);
    let contrast = if max + min > 0.0 {
        (max - min) / (max + min)
    } else {
        0.0
    };
    Ok(PhaseScanResult {
        offsets,
        signals,
        contrast,
    })
}
