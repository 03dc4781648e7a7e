//! Simulation and reconstruction toolkit for measuring a coherent
//! superposition of two ground states through a pulsed coupling to a
//! common excited state.
//!
//! The forward direction simulates the driven three-level dynamics and
//! the total-fluorescence signals it produces; the inverse direction
//! recovers the populations, the relative phase and the degree of
//! coherence of the prepared state from four signals taken at canonical
//! polarization settings.
//!
//! Module map:
//! - [`model`]: domain types, the RWA Hamiltonian, bright/dark basis
//!   algebra.
//! - [`propagator`]: adaptive time propagation of the amplitude, reduced
//!   two-state, and density-matrix equations.
//! - [`closedform`]: analytic transition matrix, population formulas and
//!   the polarization-ellipse mapping.
//! - [`probe`]: fluorescence forward model, the four-setting protocol,
//!   phase-scan coherence detection, shot noise.
//! - [`tomography`]: density-matrix inversion, coherent/incoherent
//!   decomposition, parameter extraction, dark-state search.

pub mod closedform;
pub mod model;
pub mod probe;
pub mod propagator;
mod rk;
pub mod tomography;

pub use closedform::{
    ellipse_of, excited_population, full_transition_matrix, protocol_populations,
    resonant_transfer_probability, PolarizationEllipse,
};
pub use model::{
    build_hamiltonian, from_bright_dark_amplitudes, from_bright_dark_density, pulses_for_setting,
    rms_rabi, setting_of, to_bright_dark_amplitudes, to_bright_dark_density, wrap_angle,
    BrightDarkAmplitudes, DensityMatrix2, DensityMatrix3, EnvelopeKind, MeasurementSetting,
    ModelError, PulseEnvelope, PulsePair, PureSuperposition, ThreeLevelAmplitudes, TwoStateResult,
};
pub use probe::{
    four_setting_protocol, phase_scan, simulate_signal, FluorescenceRecord, NoiseModel,
    PhaseScanResult, ProbeConfig, ProbeError,
};
pub use propagator::{
    propagate_liouville, propagate_liouville_trajectory, propagate_tdse, propagate_tdse_trajectory,
    propagate_two_state, transfer_probability, transition_pair, IntegratorConfig, PropagationError,
    Stepper,
};
pub use tomography::{
    dark_search, decompose, degree_of_coherence, extract_parameters, project_physical, reconstruct,
    reconstruct_density, reconstruct_pure, CoherentPart, DarkSearchResult, Decomposition,
    ReconstructionResult, TomographyError,
};
