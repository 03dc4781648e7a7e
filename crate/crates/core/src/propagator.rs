//! Numerical propagation of the three-state Schrödinger equation, the
//! reduced bright-excited two-state problem, and the full Liouville
//! equation, over the pulse window `[-span*T, +span*T]`.
//!
//! All propagators are linear maps on their input state; closed-system
//! evolution preserves norm, trace and purity up to the integration
//! tolerance.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::{
    build_hamiltonian, rms_rabi, DensityMatrix3, PulsePair, ThreeLevelAmplitudes, TwoStateResult,
};
use crate::rk;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PropagationError {
    /// Adaptive step size underflowed (or the step budget ran out).
    #[error("integration failed at t = {t}: step size {step} underflowed")]
    IntegrationFailure { t: f64, step: f64 },
    /// The extracted transition pair is not unitary; the integrator is
    /// misconfigured for the requested pulses.
    #[error("transition pair violates unitarity by {defect}")]
    NonUnitary { defect: f64 },
}

/// Step-size controller choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepper {
    /// Embedded Dormand-Prince 5(4), error controlled per step.
    Adaptive,
    /// Classic RK4 with a fixed number of steps, for reproducibility runs.
    FixedRk4 { n_steps: usize },
}

/// Integration tolerances and step bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step the adaptive controller may take, in time units.
    pub max_step: f64,
    pub stepper: Stepper,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.1,
            stepper: Stepper::Adaptive,
        }
    }
}

impl IntegratorConfig {
    fn run<const N: usize>(
        &self,
        rhs: &impl Fn(f64, &[C64; N]) -> [C64; N],
        t0: f64,
        t1: f64,
        y0: [C64; N],
    ) -> Result<[C64; N], PropagationError> {
        match self.stepper {
            Stepper::Adaptive => {
                rk::integrate_adaptive(rhs, t0, t1, y0, self.rel_tol, self.abs_tol, self.max_step)
                    .map_err(|e| PropagationError::IntegrationFailure {
                        t: e.t,
                        step: e.step,
                    })
            }
            Stepper::FixedRk4 { n_steps } => Ok(rk::integrate_rk4(rhs, t0, t1, y0, n_steps)),
        }
    }
}

fn tdse_rhs(pulses: &PulsePair) -> impl Fn(f64, &[C64; 3]) -> [C64; 3] + '_ {
    |t, y| {
        let h = build_hamiltonian(pulses, t);
        let mi = C64::new(0.0, -1.0);
        [
            mi * (h[(0, 0)] * y[0] + h[(0, 1)] * y[1] + h[(0, 2)] * y[2]),
            mi * (h[(1, 0)] * y[0] + h[(1, 1)] * y[1] + h[(1, 2)] * y[2]),
            mi * (h[(2, 0)] * y[0] + h[(2, 1)] * y[1] + h[(2, 2)] * y[2]),
        ]
    }
}

fn two_state_rhs(pulses: &PulsePair) -> impl Fn(f64, &[C64; 2]) -> [C64; 2] + '_ {
    |t, y| {
        let half_omega = 0.5 * rms_rabi(pulses, t);
        let mi = C64::new(0.0, -1.0);
        [
            mi * half_omega * y[1],
            mi * (half_omega * y[0] + pulses.delta * y[1]),
        ]
    }
}

fn mat_to_arr(m: &Matrix3<C64>) -> [C64; 9] {
    let mut a = [C64::new(0.0, 0.0); 9];
    for i in 0..3 {
        for j in 0..3 {
            a[3 * i + j] = m[(i, j)];
        }
    }
    a
}

fn arr_to_mat(a: &[C64; 9]) -> Matrix3<C64> {
    Matrix3::from_fn(|i, j| a[3 * i + j])
}

fn liouville_rhs(pulses: &PulsePair) -> impl Fn(f64, &[C64; 9]) -> [C64; 9] + '_ {
    |t, y| {
        let h = build_hamiltonian(pulses, t);
        let rho = arr_to_mat(y);
        let comm = h * rho - rho * h;
        mat_to_arr(&(comm * C64::new(0.0, -1.0)))
    }
}

/// Propagate bare-basis amplitudes across the whole pulse window.
pub fn propagate_tdse(
    pulses: &PulsePair,
    initial: &ThreeLevelAmplitudes,
    cfg: &IntegratorConfig,
) -> Result<ThreeLevelAmplitudes, PropagationError> {
    let (t0, t1) = pulses.window();
    let y0 = [initial.c1, initial.ce, initial.c2];
    let y = cfg.run(&tdse_rhs(pulses), t0, t1, y0)?;
    Ok(ThreeLevelAmplitudes::new(y[0], y[1], y[2]))
}

/// Amplitudes sampled at `n_samples` uniform times across the window
/// (endpoints included).
pub fn propagate_tdse_trajectory(
    pulses: &PulsePair,
    initial: &ThreeLevelAmplitudes,
    cfg: &IntegratorConfig,
    n_samples: usize,
) -> Result<Vec<(f64, ThreeLevelAmplitudes)>, PropagationError> {
    let (t0, t1) = pulses.window();
    let rhs = tdse_rhs(pulses);
    let n = n_samples.max(2);
    let mut out = Vec::with_capacity(n);
    let mut y = [initial.c1, initial.ce, initial.c2];
    out.push((t0, *initial));
    for k in 1..n {
        let ta = t0 + (t1 - t0) * (k - 1) as f64 / (n - 1) as f64;
        let tb = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
        y = cfg.run(&rhs, ta, tb, y)?;
        out.push((tb, ThreeLevelAmplitudes::new(y[0], y[1], y[2])));
    }
    Ok(out)
}

/// Propagate `(c_bright, c_excited)` under the reduced Hamiltonian
/// `(1/2) [[0, Omega(t)], [Omega(t), 2 Delta]]` with `Omega` the rms Rabi
/// frequency of the pair.
pub fn propagate_two_state(
    pulses: &PulsePair,
    initial: (C64, C64),
    cfg: &IntegratorConfig,
) -> Result<(C64, C64), PropagationError> {
    let (t0, t1) = pulses.window();
    let y = cfg.run(&two_state_rhs(pulses), t0, t1, [initial.0, initial.1])?;
    Ok((y[0], y[1]))
}

/// Extract the transition pair `(a, b)` by propagating the two basis
/// vectors of the reduced problem. `a` and `b` form the bright-state row
/// of the two-state transition matrix, so `p = |b|^2` is the transfer
/// probability; `|a|^2 + |b|^2 = 1` up to integration error.
pub fn transition_pair(
    pulses: &PulsePair,
    cfg: &IntegratorConfig,
) -> Result<TwoStateResult, PropagationError> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let (a, _) = propagate_two_state(pulses, (one, zero), cfg)?;
    let (b, _) = propagate_two_state(pulses, (zero, one), cfg)?;
    let pair = TwoStateResult { a, b };
    let defect = pair.unitarity_defect();
    if defect > 1e-8 {
        return Err(PropagationError::NonUnitary { defect });
    }
    Ok(pair)
}

/// Transfer probability `P` of the reduced problem for these pulses: the
/// excited-state population produced by a unit-populated bright state.
/// One propagation; equals `|b|^2` of [`transition_pair`].
pub fn transfer_probability(
    pulses: &PulsePair,
    cfg: &IntegratorConfig,
) -> Result<f64, PropagationError> {
    let (_, ce) = propagate_two_state(pulses, (C64::new(1.0, 0.0), C64::new(0.0, 0.0)), cfg)?;
    Ok(ce.norm_sqr())
}

/// Propagate a three-level density matrix under `d rho / dt = -i [H, rho]`.
pub fn propagate_liouville(
    pulses: &PulsePair,
    initial: &DensityMatrix3,
    cfg: &IntegratorConfig,
) -> Result<DensityMatrix3, PropagationError> {
    let (t0, t1) = pulses.window();
    let y = cfg.run(&liouville_rhs(pulses), t0, t1, mat_to_arr(initial.matrix()))?;
    Ok(DensityMatrix3::from_matrix_unchecked(arr_to_mat(&y)))
}

/// Density matrix sampled at `n_samples` uniform times across the window.
pub fn propagate_liouville_trajectory(
    pulses: &PulsePair,
    initial: &DensityMatrix3,
    cfg: &IntegratorConfig,
    n_samples: usize,
) -> Result<Vec<(f64, DensityMatrix3)>, PropagationError> {
    let (t0, t1) = pulses.window();
    let rhs = liouville_rhs(pulses);
    let n = n_samples.max(2);
    let mut out = Vec::with_capacity(n);
    let mut y = mat_to_arr(initial.matrix());
    out.push((t0, initial.clone()));
    for k in 1..n {
        let ta = t0 + (t1 - t0) * (k - 1) as f64 / (n - 1) as f64;
        let tb = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
        y = cfg.run(&rhs, ta, tb, y)?;
        out.push((tb, DensityMatrix3::from_matrix_unchecked(arr_to_mat(&y))));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        pulses_for_setting, EnvelopeKind, MeasurementSetting, PulseEnvelope, PureSuperposition,
    };
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rect_pair(a1: f64, a2: f64, delta: f64) -> PulsePair {
        let env = PulseEnvelope::new(EnvelopeKind::Rectangular, 1.0, 4.0).unwrap();
        PulsePair::new(a1, a2, 0.0, 0.0, delta, env).unwrap()
    }

    #[test]
    fn zero_pulses_leave_ground_amplitudes_unchanged() {
        let pulses = rect_pair(0.0, 0.0, 2.0);
        let initial = PureSuperposition::new(0.9, -1.1).unwrap().amplitudes();
        let cfg = IntegratorConfig::default();
        let out = propagate_tdse(&pulses, &initial, &cfg).unwrap();
        assert_eq!(out, initial);
    }

    #[test]
    fn resonant_pi_pulse_inverts_single_coupling() {
        // Only Omega_1 on (theta = pi/2), rectangular, area pi over span 4.
        let area = PI;
        let pulses = rect_pair(area / 8.0, 0.0, 0.0);
        let initial =
            ThreeLevelAmplitudes::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let cfg = IntegratorConfig::default();
        let out = propagate_tdse(&pulses, &initial, &cfg).unwrap();
        assert_abs_diff_eq!(out.populations()[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn dark_state_stays_dark() {
        let env = PulseEnvelope::default();
        let setting = MeasurementSetting::new(0.8, 0.5).unwrap();
        let pulses = pulses_for_setting(&setting, 2.0, 0.7, env);
        let initial = setting.dark_state().amplitudes();
        let cfg = IntegratorConfig::default();
        let out = propagate_tdse(&pulses, &initial, &cfg).unwrap();
        assert!(
            out.populations()[1] < 1e-10,
            "rho_ee = {}",
            out.populations()[1]
        );
    }

    #[test]
    fn two_state_free_evolution_acquires_only_detuning_phase() {
        let delta = 1.7;
        let pulses = rect_pair(0.0, 0.0, delta);
        let cfg = IntegratorConfig::default();
        let cb0 = C64::new(0.6, 0.3);
        let ce0 = C64::from_polar((1.0f64 - cb0.norm_sqr()).sqrt(), -0.9);
        let (cb, ce) = propagate_two_state(&pulses, (cb0, ce0), &cfg).unwrap();
        assert_abs_diff_eq!((cb - cb0).norm(), 0.0, epsilon = 1e-9);
        let (t0, t1) = pulses.window();
        let expect = ce0 * C64::from_polar(1.0, -delta * (t1 - t0));
        assert_abs_diff_eq!((ce - expect).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn two_state_resonant_rabi_oscillation() {
        let cfg = IntegratorConfig::default();
        for &area in &[FRAC_PI_2, PI, 2.0 * PI, 3.0 * PI] {
            let pulses = rect_pair(area / 8.0, 0.0, 0.0);
            let (_, ce) =
                propagate_two_state(&pulses, (C64::new(1.0, 0.0), C64::new(0.0, 0.0)), &cfg)
                    .unwrap();
            let expect = (area / 2.0).sin().powi(2);
            assert_abs_diff_eq!(ce.norm_sqr(), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_state_detuned_rabi_formula() {
        // Rectangular pulse: |b|^2 = Omega^2/W^2 sin^2(W tau / 2),
        // W = sqrt(Omega^2 + Delta^2), tau the window length.
        let omega = 0.9;
        let delta = 0.65;
        let tau = 8.0;
        let pulses = rect_pair(omega, 0.0, delta);
        let cfg = IntegratorConfig::default();
        let pair = transition_pair(&pulses, &cfg).unwrap();
        let w = omega.hypot(delta);
        let expect = (omega / w).powi(2) * (w * tau / 2.0).sin().powi(2);
        assert_abs_diff_eq!(pair.transfer_probability(), expect, epsilon = 1e-9);
    }

    #[test]
    fn transition_pair_free_evolution_is_identity() {
        let pulses = rect_pair(0.0, 0.0, 0.0);
        let pair = transition_pair(&pulses, &IntegratorConfig::default()).unwrap();
        assert_abs_diff_eq!((pair.a - C64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.b.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn transition_pair_unitarity() {
        let pulses = PulsePair::new(1.3, 0.8, 0.2, -1.0, 1.5, PulseEnvelope::default()).unwrap();
        let pair = transition_pair(&pulses, &IntegratorConfig::default()).unwrap();
        assert!(pair.unitarity_defect() < 1e-9);
    }

    #[test]
    fn reconstructed_two_state_matrix_reproduces_propagations_on_resonance() {
        // On resonance the transition matrix is [[a, b], [-b*, a*]] exactly.
        let pulses = PulsePair::new(0.9, 1.4, 0.3, 0.8, 0.0, PulseEnvelope::default()).unwrap();
        let cfg = IntegratorConfig::default();
        let pair = transition_pair(&pulses, &cfg).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let (cb1, ce1) = propagate_two_state(&pulses, (one, zero), &cfg).unwrap();
        assert_abs_diff_eq!((cb1 - pair.a).norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!((ce1 + pair.b.conj()).norm(), 0.0, epsilon = 1e-9);
        let (cb2, ce2) = propagate_two_state(&pulses, (zero, one), &cfg).unwrap();
        assert_abs_diff_eq!((cb2 - pair.b).norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!((ce2 - pair.a.conj()).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn liouville_matches_pure_state_propagation() {
        let pulses = PulsePair::new(1.1, 0.6, -0.4, 0.9, 0.8, PulseEnvelope::default()).unwrap();
        let cfg = IntegratorConfig::default();
        let state = PureSuperposition::new(0.6, 1.9).unwrap().amplitudes();
        let rho0 = DensityMatrix3::from_pure(&state);
        let rho_out = propagate_liouville(&pulses, &rho0, &cfg).unwrap();
        let amp_out = propagate_tdse(&pulses, &state, &cfg).unwrap();
        let expect = DensityMatrix3::from_pure(&amp_out);
        let diff = (rho_out.matrix() - expect.matrix()).norm();
        assert!(diff < 1e-9, "density mismatch {diff}");
    }

    #[test]
    fn liouville_dark_projector_is_stationary() {
        let env = PulseEnvelope::default();
        let setting = MeasurementSetting::new(1.1, -2.0).unwrap();
        let pulses = pulses_for_setting(&setting, 2.5, 0.0, env);
        let dark = setting.dark_state().amplitudes();
        let rho0 = DensityMatrix3::from_pure(&dark);
        let out = propagate_liouville(&pulses, &rho0, &IntegratorConfig::default()).unwrap();
        let diff = (out.matrix() - rho0.matrix()).norm();
        assert!(diff < 1e-10, "dark projector moved by {diff}");
    }

    #[test]
    fn mixed_state_yields_half_transfer_at_balanced_polarization() {
        let env = PulseEnvelope::default();
        let setting = MeasurementSetting::new(std::f64::consts::FRAC_PI_4, 0.0).unwrap();
        let pulses = pulses_for_setting(&setting, 2.0, 0.0, env);
        let cfg = IntegratorConfig::default();
        let p = transfer_probability(&pulses, &cfg).unwrap();
        let mixed = DensityMatrix3::embed_ground(&crate::model::DensityMatrix2::maximally_mixed());
        let out = propagate_liouville(&pulses, &mixed, &cfg).unwrap();
        assert_abs_diff_eq!(out.rho_ee(), p / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn fixed_rk4_agrees_with_adaptive() {
        let pulses = PulsePair::new(1.5, 0.9, 0.1, 0.6, 0.5, PulseEnvelope::default()).unwrap();
        let initial = PureSuperposition::new(1.0, 0.3).unwrap().amplitudes();
        let adaptive = propagate_tdse(&pulses, &initial, &IntegratorConfig::default()).unwrap();
        let fixed_cfg = IntegratorConfig {
            stepper: Stepper::FixedRk4 { n_steps: 4000 },
            ..IntegratorConfig::default()
        };
        let fixed = propagate_tdse(&pulses, &initial, &fixed_cfg).unwrap();
        let diff = ((adaptive.c1 - fixed.c1).norm_sqr()
            + (adaptive.ce - fixed.ce).norm_sqr()
            + (adaptive.c2 - fixed.c2).norm_sqr())
        .sqrt();
        assert!(diff < 1e-8, "stepper disagreement {diff}");
    }

    #[test]
    fn trajectory_endpoints_match_direct_propagation() {
        let pulses = PulsePair::new(1.2, 0.4, 0.0, 0.0, 0.3, PulseEnvelope::default()).unwrap();
        let initial = PureSuperposition::new(0.5, 0.2).unwrap().amplitudes();
        let cfg = IntegratorConfig::default();
        let traj = propagate_tdse_trajectory(&pulses, &initial, &cfg, 21).unwrap();
        assert_eq!(traj.len(), 21);
        let direct = propagate_tdse(&pulses, &initial, &cfg).unwrap();
        let last = traj.last().unwrap().1;
        assert!((last.c1 - direct.c1).norm() < 1e-9);
        assert!((last.ce - direct.ce).norm() < 1e-9);
        assert!((last.c2 - direct.c2).norm() < 1e-9);
    }
}
