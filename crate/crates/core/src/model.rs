//! Domain types and basis algebra for the pulsed three-level probe.
//!
//! Conventions used throughout the crate: hbar = 1, time in units of the
//! pulse width `T`, Rabi frequencies and the detuning in units of `1/T`.
//! The bare basis is ordered `(psi_1, psi_e, psi_2)`; the laser-defined
//! basis is ordered `(bright, excited, dark)`. All phases are reported
//! wrapped into `(-pi, pi]`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use thiserror::Error;

/// Mixing angles closer than this to 0 or pi/2 leave the relative phase
/// undefined; such states carry `degenerate_phase`.
pub const DEGENERACY_FLOOR: f64 = 1e-6;

/// Tolerance for validating density-matrix invariants (trace, Hermiticity,
/// positivity). Propagated matrices stay well inside this.
pub const VALIDATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// The laser polarization angle is undefined when both peaks vanish.
    #[error("both peak Rabi frequencies are zero; polarization angle undefined")]
    BothAmplitudesZero,
    #[error("peak Rabi frequency must be nonnegative, got {0}")]
    NegativeAmplitude(f64),
    #[error("mixing angle {0} outside [0, pi/2]")]
    MixingAngleOutOfRange(f64),
    #[error("polarization angle {0} outside [0, pi/2]")]
    PolarizationAngleOutOfRange(f64),
    #[error("envelope width and span must be positive")]
    InvalidEnvelope,
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(&'static str),
}

/// Clamp values that miss `[lo, hi]` by no more than a rounding margin
/// (1e-9); anything further out is a real range violation.
fn snap_to_range(x: f64, lo: f64, hi: f64) -> Option<f64> {
    if (lo..=hi).contains(&x) {
        Some(x)
    } else if x > lo - 1e-9 && x < hi + 1e-9 {
        Some(x.clamp(lo, hi))
    } else {
        None
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // The addition also canonicalizes a negative zero.
    if w > PI {
        w - TAU
    } else {
        w + 0.0
    }
}

/// Shape of the shared pulse envelope `f(t/T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    /// `f(x) = exp(-x^2)`, truncated at `|x| = span`.
    Gaussian,
    /// `f(x) = cos^2(pi x / (2 span))` on `[-span, span]`.
    SinSquared,
    /// `f(x) = 1` on `[-span, span]`.
    Rectangular,
}

/// Pulse envelope shared by both fields: a shape, a width `T`, and a
/// dimensionless half-window `span` (integration runs over
/// `[-span*T, +span*T]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEnvelope {
    pub kind: EnvelopeKind,
    pub width: f64,
    pub span: f64,
}

impl Default for PulseEnvelope {
    /// Gaussian with unit width and span 4 (tail below 1.2e-7 of the peak).
    fn default() -> Self {
        Self {
            kind: EnvelopeKind::Gaussian,
            width: 1.0,
            span: 4.0,
        }
    }
}

impl PulseEnvelope {
    pub fn new(kind: EnvelopeKind, width: f64, span: f64) -> Result<Self, ModelError> {
        if !(width.is_finite() && span.is_finite()) || width <= 0.0 || span <= 0.0 {
            return Err(ModelError::InvalidEnvelope);
        }
        Ok(Self { kind, width, span })
    }

    /// Envelope value at dimensionless argument `x = t/T`, in `[0, 1]` and
    /// zero outside `[-span, span]`.
    pub fn value(&self, x: f64) -> f64 {
        if x.abs() > self.span {
            return 0.0;
        }
        match self.kind {
            EnvelopeKind::Gaussian => (-x * x).exp(),
            EnvelopeKind::SinSquared => {
                let c = (PI * x / (2.0 * self.span)).cos();
                c * c
            }
            EnvelopeKind::Rectangular => 1.0,
        }
    }

    /// Integration window `[-span*T, +span*T]` in time units.
    pub fn window(&self) -> (f64, f64) {
        let half = self.span * self.width;
        (-half, half)
    }

    /// Dimensionless integral of the envelope over its window.
    ///
    /// Analytic for `SinSquared` and `Rectangular`; composite Simpson for
    /// the Gaussian (accurate to ~1e-12 at span 4).
    pub fn integral(&self) -> f64 {
        match self.kind {
            EnvelopeKind::Rectangular => 2.0 * self.span,
            EnvelopeKind::SinSquared => self.span,
            EnvelopeKind::Gaussian => {
                let n = 4000;
                let h = 2.0 * self.span / n as f64;
                let mut acc = self.value(-self.span) + self.value(self.span);
                for i in 1..n {
                    let x = -self.span + i as f64 * h;
                    acc += self.value(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
                }
                acc * h / 3.0
            }
        }
    }
}

/// The two-laser drive: peak Rabi frequencies, field phases, common
/// single-photon detuning, and the shared envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsePair {
    pub a1: f64,
    pub a2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub delta: f64,
    pub envelope: PulseEnvelope,
}

impl PulsePair {
    /// Both peaks must be nonnegative. A pair with both peaks zero is
    /// allowed (free evolution); only the basis transforms reject it.
    pub fn new(
        a1: f64,
        a2: f64,
        beta1: f64,
        beta2: f64,
        delta: f64,
        envelope: PulseEnvelope,
    ) -> Result<Self, ModelError> {
        if a1 < 0.0 || !a1.is_finite() {
            return Err(ModelError::NegativeAmplitude(a1));
        }
        if a2 < 0.0 || !a2.is_finite() {
            return Err(ModelError::NegativeAmplitude(a2));
        }
        Ok(Self {
            a1,
            a2,
            beta1,
            beta2,
            delta,
            envelope,
        })
    }

    /// Instantaneous Rabi frequency of the field coupling `psi_1` to `psi_e`.
    pub fn omega1(&self, t: f64) -> f64 {
        self.a1 * self.envelope.value(t / self.envelope.width)
    }

    /// Instantaneous Rabi frequency of the field coupling `psi_2` to `psi_e`.
    pub fn omega2(&self, t: f64) -> f64 {
        self.a2 * self.envelope.value(t / self.envelope.width)
    }

    /// Integration window in time units.
    pub fn window(&self) -> (f64, f64) {
        self.envelope.window()
    }

    /// Time integral of the rms Rabi frequency over the window (pulse area).
    pub fn rms_area(&self) -> f64 {
        self.a1.hypot(self.a2) * self.envelope.width * self.envelope.integral()
    }
}

/// Effective polarization parameters of a pulse pair: `tan(theta) = A1/A2`
/// and `beta = beta1 + beta2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetting {
    pub theta: f64,
    pub beta: f64,
}

impl MeasurementSetting {
    pub fn new(theta: f64, beta: f64) -> Result<Self, ModelError> {
        let theta = snap_to_range(theta, 0.0, FRAC_PI_2)
            .ok_or(ModelError::PolarizationAngleOutOfRange(theta))?;
        Ok(Self {
            theta,
            beta: wrap_angle(beta),
        })
    }

    /// The four canonical protocol settings, in order:
    /// `(0,0), (pi/2,0), (pi/4,0), (pi/4,pi/2)`.
    pub fn protocol() -> [MeasurementSetting; 4] {
        [
            MeasurementSetting {
                theta: 0.0,
                beta: 0.0,
            },
            MeasurementSetting {
                theta: FRAC_PI_2,
                beta: 0.0,
            },
            MeasurementSetting {
                theta: FRAC_PI_4,
                beta: 0.0,
            },
            MeasurementSetting {
                theta: FRAC_PI_4,
                beta: FRAC_PI_2,
            },
        ]
    }

    /// The superposition that is dark for this setting: `alpha = theta`,
    /// `phi = beta + pi`.
    pub fn dark_state(&self) -> PureSuperposition {
        PureSuperposition::new(self.theta, wrap_angle(self.beta + PI))
            .expect("theta is already in range")
    }
}

/// Pure two-state superposition `cos(alpha) psi_1 + e^{i phi} sin(alpha) psi_2`.
///
/// When `alpha` is within [`DEGENERACY_FLOOR`] of 0 or pi/2 the relative
/// phase carries no information; it is reported as 0 with
/// `degenerate_phase` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureSuperposition {
    pub alpha: f64,
    pub phi: f64,
    pub degenerate_phase: bool,
}

impl PureSuperposition {
    pub fn new(alpha: f64, phi: f64) -> Result<Self, ModelError> {
        let alpha =
            snap_to_range(alpha, 0.0, FRAC_PI_2).ok_or(ModelError::MixingAngleOutOfRange(alpha))?;
        let degenerate = alpha <= DEGENERACY_FLOOR || alpha >= FRAC_PI_2 - DEGENERACY_FLOOR;
        Ok(Self {
            alpha,
            phi: if degenerate { 0.0 } else { wrap_angle(phi) },
            degenerate_phase: degenerate,
        })
    }

    /// Bare-basis amplitudes `(cos alpha, 0, e^{i phi} sin alpha)`.
    pub fn amplitudes(&self) -> ThreeLevelAmplitudes {
        ThreeLevelAmplitudes {
            c1: C64::new(self.alpha.cos(), 0.0),
            ce: C64::new(0.0, 0.0),
            c2: C64::from_polar(self.alpha.sin(), self.phi),
        }
    }

    /// Projector onto this state as a two-state density matrix.
    pub fn density(&self) -> DensityMatrix2 {
        let (s, c) = self.alpha.sin_cos();
        DensityMatrix2 {
            rho11: c * c,
            rho22: s * s,
            rho12: C64::from_polar(c * s, -self.phi),
        }
    }
}

/// Probability amplitudes of the three-level system, bare order
/// `(c1, ce, c2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelAmplitudes {
    pub c1: C64,
    pub ce: C64,
    pub c2: C64,
}

impl ThreeLevelAmplitudes {
    pub fn new(c1: C64, ce: C64, c2: C64) -> Self {
        Self { c1, ce, c2 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c1.norm_sqr() + self.ce.norm_sqr() + self.c2.norm_sqr()
    }

    /// Populations `(|c1|^2, |ce|^2, |c2|^2)`.
    pub fn populations(&self) -> [f64; 3] {
        [self.c1.norm_sqr(), self.ce.norm_sqr(), self.c2.norm_sqr()]
    }

    pub(crate) fn as_vector(&self) -> Vector3<C64> {
        Vector3::new(self.c1, self.ce, self.c2)
    }

    pub(crate) fn from_vector(v: &Vector3<C64>) -> Self {
        Self {
            c1: v[0],
            ce: v[1],
            c2: v[2],
        }
    }
}

/// Amplitudes in the laser-defined basis, order `(cb, ce, cd)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrightDarkAmplitudes {
    pub cb: C64,
    pub ce: C64,
    pub cd: C64,
}

impl BrightDarkAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.cb.norm_sqr() + self.ce.norm_sqr() + self.cd.norm_sqr()
    }
}

/// Two-state description of the prepared superposition: real populations
/// `rho11`, `rho22` and the coherence `rho12` (`rho21` is implicit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    pub rho11: f64,
    pub rho22: f64,
    pub rho12: C64,
}

impl DensityMatrix2 {
    pub fn from_parts(rho11: f64, rho22: f64, rho12: C64) -> Self {
        Self {
            rho11,
            rho22,
            rho12,
        }
    }

    /// The fully mixed state `I/2`.
    pub fn maximally_mixed() -> Self {
        Self {
            rho11: 0.5,
            rho22: 0.5,
            rho12: C64::new(0.0, 0.0),
        }
    }

    /// Convex mixture `r_inc I + tr_coh |chi><chi|` with
    /// `tr_coh = 1 - 2 r_inc`.
    pub fn mixture(r_inc: f64, coherent: &PureSuperposition) -> Self {
        let pure = coherent.density();
        let tr_coh = 1.0 - 2.0 * r_inc;
        Self {
            rho11: r_inc + tr_coh * pure.rho11,
            rho22: r_inc + tr_coh * pure.rho22,
            rho12: pure.rho12 * tr_coh,
        }
    }

    /// Check trace, bounds and positivity within `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), ModelError> {
        if !(self.rho11.is_finite() && self.rho22.is_finite() && self.rho12.is_finite()) {
            return Err(ModelError::InvalidDensityMatrix("non-finite entry"));
        }
        if (self.rho11 + self.rho22 - 1.0).abs() > tol {
            return Err(ModelError::InvalidDensityMatrix("trace differs from 1"));
        }
        if self.rho11 < -tol || self.rho22 < -tol {
            return Err(ModelError::InvalidDensityMatrix("negative population"));
        }
        if self.rho12.norm_sqr() > self.rho11 * self.rho22 + tol {
            return Err(ModelError::InvalidDensityMatrix(
                "coherence exceeds positivity bound",
            ));
        }
        Ok(())
    }

    /// Rotate the coherence, `rho12 -> rho12 e^{i delta}`, leaving the
    /// populations untouched.
    pub fn rotate_coherence(&self, delta: f64) -> Self {
        Self {
            rho12: self.rho12 * C64::from_polar(1.0, delta),
            ..*self
        }
    }

    /// Bloch vector `(rho11 - rho22, 2 Re rho12, -2 Im rho12)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        [
            self.rho11 - self.rho22,
            2.0 * self.rho12.re,
            -2.0 * self.rho12.im,
        ]
    }
}

/// Density matrix of the full three-level system.
///
/// The basis order is `(psi_1, psi_e, psi_2)` for bare-basis matrices and
/// `(bright, excited, dark)` after [`to_bright_dark_density`]; the excited
/// state sits at index 1 in both.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix3 {
    m: Matrix3<C64>,
}

impl DensityMatrix3 {
    /// Validating constructor: Hermitian, unit trace, eigenvalues above
    /// `-VALIDATION_TOL`.
    pub fn new(m: Matrix3<C64>) -> Result<Self, ModelError> {
        let out = Self { m };
        out.validate(VALIDATION_TOL)?;
        Ok(out)
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix3<C64>) -> Self {
        Self { m }
    }

    /// Outer product `|psi><psi|` of a (normalized) amplitude vector.
    pub fn from_pure(state: &ThreeLevelAmplitudes) -> Self {
        let v = state.as_vector();
        Self { m: v * v.adjoint() }
    }

    /// Embed a two-state matrix with the excited row and column empty.
    pub fn embed_ground(rho: &DensityMatrix2) -> Self {
        let z = C64::new(0.0, 0.0);
        let m = Matrix3::new(
            C64::new(rho.rho11, 0.0),
            z,
            rho.rho12,
            z,
            z,
            z,
            rho.rho12.conj(),
            z,
            C64::new(rho.rho22, 0.0),
        );
        Self { m }
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix3<C64> {
        self.m
    }

    /// Excited-state population (index 1 in either basis order).
    pub fn rho_ee(&self) -> f64 {
        self.m[(1, 1)].re
    }

    pub fn trace(&self) -> f64 {
        (self.m[(0, 0)] + self.m[(1, 1)] + self.m[(2, 2)]).re
    }

    /// `Tr(rho^2)`, conserved under closed-system evolution.
    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }

    /// Eigenvalues in ascending order (the matrix is Hermitian).
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut ev: Vec<f64> = self
            .m
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        [ev[0], ev[1], ev[2]]
    }

    pub fn validate(&self, tol: f64) -> Result<(), ModelError> {
        if self
            .m
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(ModelError::InvalidDensityMatrix("non-finite entry"));
        }
        let herm_defect = (self.m - self.m.adjoint()).norm();
        if herm_defect > tol {
            return Err(ModelError::InvalidDensityMatrix("not Hermitian"));
        }
        if (self.trace() - 1.0).abs() > tol {
            return Err(ModelError::InvalidDensityMatrix("trace differs from 1"));
        }
        if self.eigenvalues()[0] < -tol {
            return Err(ModelError::InvalidDensityMatrix("negative eigenvalue"));
        }
        Ok(())
    }
}

/// The two complex numbers parametrising the bright-excited transition
/// matrix; `p = |b|^2` is the two-state transfer probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateResult {
    pub a: C64,
    pub b: C64,
}

impl TwoStateResult {
    /// Transfer probability `p = |b|^2`.
    pub fn transfer_probability(&self) -> f64 {
        self.b.norm_sqr()
    }

    /// `| |a|^2 + |b|^2 - 1 |`; nonzero values signal integrator trouble.
    pub fn unitarity_defect(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() - 1.0).abs()
    }
}

/// RWA Hamiltonian at time `t`, bare order `(1, e, 2)`:
///
/// ```text
///         [ 0                Omega1 e^{-i b1}   0               ]
/// (1/2) * [ Omega1 e^{i b1}  2 Delta            Omega2 e^{-i b2}]
///         [ 0                Omega2 e^{i b2}    0               ]
/// ```
pub fn build_hamiltonian(pulses: &PulsePair, t: f64) -> Matrix3<C64> {
    let z = C64::new(0.0, 0.0);
    let h1 = C64::from_polar(0.5 * pulses.omega1(t), pulses.beta1);
    let h2 = C64::from_polar(0.5 * pulses.omega2(t), pulses.beta2);
    Matrix3::new(
        z,
        h1.conj(),
        z,
        h1,
        C64::new(pulses.delta, 0.0),
        h2.conj(),
        z,
        h2,
        z,
    )
}

/// Root-mean-square Rabi frequency `sqrt(Omega1^2 + Omega2^2)` at time `t`.
pub fn rms_rabi(pulses: &PulsePair, t: f64) -> f64 {
    pulses.omega1(t).hypot(pulses.omega2(t))
}

/// Polarization parameters of a pulse pair.
pub fn setting_of(pulses: &PulsePair) -> Result<MeasurementSetting, ModelError> {
    if pulses.a1 == 0.0 && pulses.a2 == 0.0 {
        return Err(ModelError::BothAmplitudesZero);
    }
    Ok(MeasurementSetting {
        theta: pulses.a1.atan2(pulses.a2),
        beta: wrap_angle(pulses.beta1 + pulses.beta2),
    })
}

/// Inverse of [`setting_of`] at fixed rms peak, so the transfer
/// probability is held constant across settings. Splits the phase evenly,
/// `beta1 = beta2 = beta/2` (only the sum is observable).
pub fn pulses_for_setting(
    setting: &MeasurementSetting,
    rms_peak: f64,
    delta: f64,
    envelope: PulseEnvelope,
) -> PulsePair {
    debug_assert!(rms_peak >= 0.0, "rms peak must be nonnegative");
    let (s, c) = setting.theta.sin_cos();
    PulsePair {
        a1: rms_peak * s,
        a2: rms_peak * c,
        beta1: setting.beta / 2.0,
        beta2: setting.beta / 2.0,
        delta,
        envelope,
    }
}

/// Unitary mapping bare amplitudes to the `(bright, excited, dark)` basis:
/// row b is `(e^{i b1} sin(th), 0, e^{-i b2} cos(th))`,
/// row d is `(e^{i b2} cos(th), 0, -e^{-i b1} sin(th))`.
fn bright_dark_matrix(pulses: &PulsePair) -> Result<Matrix3<C64>, ModelError> {
    let setting = setting_of(pulses)?;
    let (s, c) = setting.theta.sin_cos();
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    Ok(Matrix3::new(
        C64::from_polar(s, pulses.beta1),
        z,
        C64::from_polar(c, -pulses.beta2),
        z,
        one,
        z,
        C64::from_polar(c, pulses.beta2),
        z,
        -C64::from_polar(s, -pulses.beta1),
    ))
}

/// Project bare amplitudes onto the bright and dark states of the pulses.
pub fn to_bright_dark_amplitudes(
    state: &ThreeLevelAmplitudes,
    pulses: &PulsePair,
) -> Result<BrightDarkAmplitudes, ModelError> {
    let t = bright_dark_matrix(pulses)?;
    let v = t * state.as_vector();
    Ok(BrightDarkAmplitudes {
        cb: v[0],
        ce: v[1],
        cd: v[2],
    })
}

/// Inverse of [`to_bright_dark_amplitudes`].
pub fn from_bright_dark_amplitudes(
    state: &BrightDarkAmplitudes,
    pulses: &PulsePair,
) -> Result<ThreeLevelAmplitudes, ModelError> {
    let t = bright_dark_matrix(pulses)?;
    let v = t.adjoint() * Vector3::new(state.cb, state.ce, state.cd);
    Ok(ThreeLevelAmplitudes::from_vector(&v))
}

/// Transform a bare-basis density matrix into `(bright, excited, dark)`
/// order, `rho_bed = T rho T^dagger`.
pub fn to_bright_dark_density(
    rho: &DensityMatrix3,
    pulses: &PulsePair,
) -> Result<DensityMatrix3, ModelError> {
    let t = bright_dark_matrix(pulses)?;
    Ok(DensityMatrix3::from_matrix_unchecked(
        t * rho.matrix() * t.adjoint(),
    ))
}

/// Inverse of [`to_bright_dark_density`].
pub fn from_bright_dark_density(
    rho: &DensityMatrix3,
    pulses: &PulsePair,
) -> Result<DensityMatrix3, ModelError> {
    let t = bright_dark_matrix(pulses)?;
    Ok(DensityMatrix3::from_matrix_unchecked(
        t.adjoint() * rho.matrix() * t,
    ))
}
