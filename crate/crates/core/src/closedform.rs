//! Analytic results for the pulsed three-level probe: the full 3x3
//! transition matrix assembled from a two-state pair `(a, b)`, the
//! excited-state population as a function of the superposition and the
//! polarization setting, the four-setting protocol populations, and the
//! elliptical-polarization mapping.
//!
//! These serve both as fast paths and as oracles for the numerical
//! propagators.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::{
    setting_of, wrap_angle, ModelError, PulsePair, PureSuperposition, TwoStateResult,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("transition pair violates unitarity by {defect}")]
    NonUnitaryPair { defect: f64 },
}

/// Polarization ellipse equivalent to a pulse pair: rotation angle
/// `beta/2` of the axes and axial ratio `|E1 - E2| / (E1 + E2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationEllipse {
    pub rotation: f64,
    pub axial_ratio: f64,
}

/// Assemble the three-state transition matrix (bare order `1, e, 2`) from
/// the two-state pair and the pulse parameters.
///
/// The excited row carries the free phase `gamma = -Delta * window` that
/// the reduced problem accumulates through its trace; on resonance it is
/// exactly
///
/// ```text
/// [ a sin^2 + cos^2     b e^{-i b1} sin     (a-1)/2 e^{-i B} sin2 ]
/// [ -b* e^{i b1} sin    a*                  -b* e^{-i b2} cos     ]
/// [ (a-1)/2 e^{i B} sin2    b e^{i b2} cos  a cos^2 + sin^2       ]
/// ```
///
/// with `B = b1 + b2` and all trigonometric functions of `theta`.
pub fn full_transition_matrix(
    pair: &TwoStateResult,
    pulses: &PulsePair,
) -> Result<Matrix3<C64>, ClosedFormError> {
    let defect = pair.unitarity_defect();
    if defect > 1e-8 {
        return Err(ClosedFormError::NonUnitaryPair { defect });
    }
    let setting = setting_of(pulses)?;
    let (s, c) = setting.theta.sin_cos();
    let (t0, t1) = pulses.window();
    let gamma = -pulses.delta * (t1 - t0);
    let phase = C64::from_polar(1.0, gamma);

    let a = pair.a;
    let b = pair.b;
    // Second row of the two-state matrix in the same gauge as the
    // propagators; gamma vanishes on resonance.
    let c2 = -b.conj() * phase;
    let d2 = a.conj() * phase;

    let e_b1 = C64::from_polar(1.0, pulses.beta1);
    let e_b2 = C64::from_polar(1.0, pulses.beta2);
    let e_beta = e_b1 * e_b2;
    let one = C64::new(1.0, 0.0);

    Ok(Matrix3::new(
        a * (s * s) + C64::new(c * c, 0.0),
        b * e_b1.conj() * s,
        (a - one) * e_beta.conj() * (s * c),
        c2 * e_b1 * s,
        d2,
        c2 * e_b2.conj() * c,
        (a - one) * e_beta * (s * c),
        b * e_b2 * c,
        a * (c * c) + C64::new(s * s, 0.0),
    ))
}

/// Excited-state population after the pulses for a pure superposition:
/// `P_e = p |sin(theta) cos(alpha) + e^{i(phi - beta)} cos(theta) sin(alpha)|^2`.
pub fn excited_population(p: f64, theta: f64, beta: f64, state: &PureSuperposition) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = state.alpha.sin_cos();
    let amp = C64::new(st * ca, 0.0) + C64::from_polar(ct * sa, state.phi - beta);
    p * amp.norm_sqr()
}

/// The four protocol populations at the canonical settings
/// `(0,0), (pi/2,0), (pi/4,0), (pi/4,pi/2)`:
/// `(p sin^2 a, p cos^2 a, p(1 + sin 2a cos phi)/2, p(1 + sin 2a sin phi)/2)`.
pub fn protocol_populations(p: f64, state: &PureSuperposition) -> [f64; 4] {
    let (sa, ca) = state.alpha.sin_cos();
    let sin2a = 2.0 * sa * ca;
    [
        p * sa * sa,
        p * ca * ca,
        0.5 * p * (1.0 + sin2a * state.phi.cos()),
        0.5 * p * (1.0 + sin2a * state.phi.sin()),
    ]
}

/// Resonant transfer probability for a pulse of rms area `A`:
/// `p = sin^2(A / 2)`, the value the propagator produces for
/// `Delta = 0` (verified in the test suite; see the acceptance checks).
pub fn resonant_transfer_probability(rms_area: f64) -> f64 {
    (rms_area / 2.0).sin().powi(2)
}

/// Map a pulse pair onto its equivalent polarization ellipse.
pub fn ellipse_of(pulses: &PulsePair) -> Result<PolarizationEllipse, ClosedFormError> {
    if pulses.a1 == 0.0 && pulses.a2 == 0.0 {
        return Err(ClosedFormError::Model(ModelError::BothAmplitudesZero));
    }
    Ok(PolarizationEllipse {
        rotation: wrap_angle(pulses.beta1 + pulses.beta2) / 2.0,
        axial_ratio: (pulses.a1 - pulses.a2).abs() / (pulses.a1 + pulses.a2),
    })
}
