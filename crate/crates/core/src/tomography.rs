//! Inversion of the four-setting fluorescence protocol: recover the
//! two-state density matrix, split it into coherent and incoherent parts,
//! extract the mixing angle and relative phase, and locate the dark-state
//! null by derivative-free search.

use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

use crate::model::{
    wrap_angle, DensityMatrix2, MeasurementSetting, PureSuperposition, VALIDATION_TOL,
};
use crate::probe::{simulate_signal, FluorescenceRecord, NoiseModel, ProbeConfig, ProbeError};

/// Coherent parts with a trace below this floor carry no usable phase
/// information.
pub const COHERENT_FLOOR: f64 = 1e-6;

/// Settings are matched to the canonical protocol values within this
/// tolerance (radians).
pub const SETTING_MATCH_TOL: f64 = 1e-9;

/// A dark search whose residual exceeds this fraction of the transfer
/// probability found no null: the input is significantly mixed.
pub const NO_NULL_FACTOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TomographyError {
    #[error("total signal I(0,0) + I(pi/2,0) is not positive; nothing was excited")]
    ZeroTotalSignal,
    #[error("records do not form one measurement per canonical protocol setting")]
    NonCanonicalRecords,
    #[error("coherent part of the density matrix is below the floor; no phase to extract")]
    ZeroCoherentPart,
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

/// The rank-one coherent part of a two-state density matrix; its trace is
/// the degree of coherence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentPart {
    pub rho11: f64,
    pub rho22: f64,
    pub rho12: C64,
}

impl CoherentPart {
    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22
    }

    /// Determinant, zero for an exact rank-one part.
    pub fn det(&self) -> f64 {
        self.rho11 * self.rho22 - self.rho12.norm_sqr()
    }
}

/// Split of a density matrix into `r_inc * I + coherent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub r_inc: f64,
    pub coherent: CoherentPart,
}

/// Complete output of the reconstruction pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix2,
    pub r_inc: f64,
    pub tr_coh: f64,
    pub coherent: PureSuperposition,
    pub degenerate_phase: bool,
    pub zero_coherent_part: bool,
}

/// Outcome of the two-dimensional dark-state search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkSearchResult {
    pub theta_star: f64,
    pub beta_star: f64,
    /// Minimized excited-state population (signal divided by the atom
    /// number) at `(theta_star, beta_star)`.
    pub residual: f64,
    /// Forward-model evaluations spent (grid plus simplex refinement).
    pub iterations: usize,
    /// Set when the residual stays above `NO_NULL_FACTOR` times the
    /// transfer probability: no exact null exists, the input is mixed.
    pub no_null: bool,
}

/// Order records as `[(0,0), (pi/2,0), (pi/4,0), (pi/4,pi/2)]`, matching
/// settings by value; input order is arbitrary.
fn match_canonical(
    records: &[FluorescenceRecord],
) -> Result<[&FluorescenceRecord; 4], TomographyError> {
    if records.len() != 4 {
        return Err(TomographyError::NonCanonicalRecords);
    }
    let canonical = MeasurementSetting::protocol();
    let mut out: [Option<&FluorescenceRecord>; 4] = [None; 4];
    for rec in records {
        let mut matched = false;
        for (slot, want) in out.iter_mut().zip(canonical.iter()) {
            if (rec.setting.theta - want.theta).abs() <= SETTING_MATCH_TOL
                && wrap_angle(rec.setting.beta - want.beta).abs() <= SETTING_MATCH_TOL
            {
                if slot.is_some() {
                    return Err(TomographyError::NonCanonicalRecords);
                }
                *slot = Some(rec);
                matched = true;
                break;
            }
        }
        if !matched {
            return Err(TomographyError::NonCanonicalRecords);
        }
    }
    Ok([
        out[0].ok_or(TomographyError::NonCanonicalRecords)?,
        out[1].ok_or(TomographyError::NonCanonicalRecords)?,
        out[2].ok_or(TomographyError::NonCanonicalRecords)?,
        out[3].ok_or(TomographyError::NonCanonicalRecords)?,
    ])
}

/// Invert the four signals directly to the pure-state parameters:
/// `tan^2(alpha) = I(0,0) / I(pi/2,0)` and the in-phase and quadrature
/// signals give `cos(phi)` and `sin(phi)`. Valid when the preparation is
/// pure; for mixed inputs use [`reconstruct`].
pub fn reconstruct_pure(
    records: &[FluorescenceRecord],
) -> Result<PureSuperposition, TomographyError> {
    let [r1, r2, r3, r4] = match_canonical(records)?;
    let i1 = r1.signal.max(0.0);
    let i2 = r2.signal.max(0.0);
    let total = i1 + i2;
    if total.is_nan() || total <= 0.0 {
        return Err(TomographyError::ZeroTotalSignal);
    }
    let alpha = i1.sqrt().atan2(i2.sqrt());
    let state = PureSuperposition::new(alpha, 0.0).expect("atan2 of nonnegative values");
    if state.degenerate_phase {
        return Ok(state);
    }
    let denom = 2.0 * (i1 * i2).sqrt();
    let mut cos_phi = (2.0 * r3.signal - total) / denom;
    let mut sin_phi = (2.0 * r4.signal - total) / denom;
    let norm = cos_phi.hypot(sin_phi);
    if norm > 0.0 {
        cos_phi /= norm;
        sin_phi /= norm;
    }
    Ok(PureSuperposition::new(alpha, sin_phi.atan2(cos_phi)).expect("alpha already validated"))
}

/// Invert the four signals to the density matrix. With
/// `S = I(0,0) + I(pi/2,0)`:
///
/// ```text
/// rho22 = I(0,0) / S          rho11 = I(pi/2,0) / S
/// Re rho12 = I(pi/4,0)/S - 1/2    Im rho12 = 1/2 - I(pi/4,pi/2)/S
/// ```
///
/// `I(0,0)` is the sigma-plus measurement, which excites out of `psi_2`,
/// so it measures `rho22`. Noisy records are projected back onto the
/// physical set afterwards.
pub fn reconstruct_density(
    records: &[FluorescenceRecord],
) -> Result<DensityMatrix2, TomographyError> {
    let [r1, r2, r3, r4] = match_canonical(records)?;
    let total = r1.signal + r2.signal;
    if total.is_nan() || total <= 0.0 {
        return Err(TomographyError::ZeroTotalSignal);
    }
    let rho = DensityMatrix2::from_parts(
        r2.signal / total,
        r1.signal / total,
        C64::new(r3.signal / total - 0.5, 0.5 - r4.signal / total),
    );
    if records.iter().any(|r| r.noisy) {
        Ok(project_physical(&rho))
    } else {
        Ok(rho)
    }
}

/// Nearest physical state: clamp the populations to `[0, 1]`, renormalize
/// the trace, then shrink the coherence onto the positivity boundary
/// `|rho12| <= sqrt(rho11 rho22)` keeping its phase. Idempotent.
pub fn project_physical(rho: &DensityMatrix2) -> DensityMatrix2 {
    let mut r11 = rho.rho11.clamp(0.0, 1.0);
    let mut r22 = rho.rho22.clamp(0.0, 1.0);
    let tr = r11 + r22;
    if tr > 0.0 {
        r11 /= tr;
        r22 /= tr;
    } else {
        r11 = 0.5;
        r22 = 0.5;
    }
    let bound = (r11 * r22).sqrt();
    let mut r12 = rho.rho12;
    let mag = r12.norm();
    if mag > bound {
        r12 = if mag > 0.0 {
            r12 * (bound / mag)
        } else {
            C64::new(0.0, 0.0)
        };
    }
    DensityMatrix2::from_parts(r11, r22, r12)
}

/// Split `rho` into `r_inc I + rho_coh` with a rank-one coherent part:
///
/// ```text
/// rho_coh_11 = (rho11 - rho22 + t) / 2,   t = sqrt((rho11-rho22)^2 + 4 |rho12|^2)
/// rho_coh_22 = (rho22 - rho11 + t) / 2,   rho_coh_12 = rho12
/// r_inc      = (rho11 + rho22 - t) / 2
/// ```
///
/// The additivity `rho = r_inc I + rho_coh` holds exactly and
/// `det(rho_coh) = 0` up to rounding.
pub fn decompose(rho: &DensityMatrix2) -> Decomposition {
    let diff = rho.rho11 - rho.rho22;
    let t = (diff * diff + 4.0 * rho.rho12.norm_sqr()).sqrt();
    Decomposition {
        r_inc: 0.5 * (rho.rho11 + rho.rho22 - t),
        coherent: CoherentPart {
            rho11: 0.5 * (diff + t),
            rho22: 0.5 * (-diff + t),
            rho12: rho.rho12,
        },
    }
}

/// Trace of the coherent part,
/// `sqrt((rho11 - rho22)^2 + 4 |rho12|^2)`; equals the Bloch-vector
/// length (1 for a pure state, 0 for the fully mixed state).
pub fn degree_of_coherence(rho: &DensityMatrix2) -> f64 {
    let diff = rho.rho11 - rho.rho22;
    (diff * diff + 4.0 * rho.rho12.norm_sqr()).sqrt()
}

/// Mixing angle and relative phase of a (rank-one) coherent part:
/// `tan^2(alpha) = rho_coh_22 / rho_coh_11`, `phi = -arg(rho_coh_12)`.
pub fn extract_parameters(coh: &CoherentPart) -> Result<PureSuperposition, TomographyError> {
    if coh.trace() < COHERENT_FLOOR {
        return Err(TomographyError::ZeroCoherentPart);
    }
    let alpha = coh.rho22.max(0.0).sqrt().atan2(coh.rho11.max(0.0).sqrt());
    let phi = -coh.rho12.arg();
    Ok(PureSuperposition::new(alpha, phi).expect("atan2 of nonnegative values"))
}

/// Full pipeline: density matrix, decomposition, degree of coherence and
/// superposition parameters, with degeneracies reported as flags.
pub fn reconstruct(
    records: &[FluorescenceRecord],
) -> Result<ReconstructionResult, TomographyError> {
    let rho = reconstruct_density(records)?;
    let dec = decompose(&rho);
    let tr_coh = dec.coherent.trace();
    match extract_parameters(&dec.coherent) {
        Ok(coherent) => Ok(ReconstructionResult {
            rho,
            r_inc: dec.r_inc,
            tr_coh,
            degenerate_phase: coherent.degenerate_phase,
            zero_coherent_part: false,
            coherent,
        }),
        Err(TomographyError::ZeroCoherentPart) => Ok(ReconstructionResult {
            rho,
            r_inc: dec.r_inc,
            tr_coh,
            coherent: PureSuperposition::new(0.0, 0.0).unwrap(),
            degenerate_phase: true,
            zero_coherent_part: true,
        }),
        Err(e) => Err(e),
    }
}

/// Search `(theta, beta)` for the polarization setting that extinguishes
/// the fluorescence of `prepared`: a coarse grid over
/// `[0, pi/2] x (-pi, pi]` followed by Nelder-Mead refinement of the best
/// cell. For a pure preparation the minimizer sits at
/// `(alpha, phi + pi)` with a residual at the integration-noise floor;
/// mixed preparations bottom out at `r_inc * P` and are flagged `no_null`.
///
/// The search always evaluates noiseless signals, regardless of the noise
/// model configured for measurements.
pub fn dark_search(
    prepared: &DensityMatrix2,
    cfg: &ProbeConfig,
) -> Result<DarkSearchResult, TomographyError> {
    prepared
        .validate(VALIDATION_TOL)
        .map_err(ProbeError::from)?;
    let quiet = ProbeConfig {
        noise: NoiseModel::None,
        ..cfg.clone()
    };
    let transfer = quiet.transfer_probability()?;

    let evals = std::cell::Cell::new(0usize);
    let mut objective = |x: &[f64; 2]| -> Result<f64, TomographyError> {
        let setting = MeasurementSetting::new(x[0].clamp(0.0, FRAC_PI_2), wrap_angle(x[1]))
            .expect("clamped and wrapped");
        evals.set(evals.get() + 1);
        let rec = simulate_signal(prepared, &setting, &quiet)?;
        Ok(rec.signal / quiet.n_atoms)
    };

    // Coarse grid: 25 x 48 cells, then simplex refinement within the
    // remaining evaluation budget (2000 total).
    const N_THETA: usize = 25;
    const N_BETA: usize = 48;
    const MAX_EVALS: usize = 2000;
    let mut best_x = [0.0, 0.0];
    let mut best_f = f64::INFINITY;
    for i in 0..N_THETA {
        let theta = FRAC_PI_2 * i as f64 / (N_THETA - 1) as f64;
        for j in 0..N_BETA {
            let beta = -PI + 2.0 * PI * j as f64 / N_BETA as f64;
            let f = objective(&[theta, beta])?;
            if f < best_f {
                best_f = f;
                best_x = [theta, beta];
            }
        }
    }

    let dtheta = FRAC_PI_2 / (N_THETA - 1) as f64;
    let dbeta = 2.0 * PI / N_BETA as f64;
    let (x, f) = nelder_mead_2d(
        &mut objective,
        best_x,
        [dtheta, dbeta],
        best_f,
        1e-6,
        1e-12,
        MAX_EVALS,
        &evals,
    )?;

    let residual = f;
    Ok(DarkSearchResult {
        theta_star: x[0].clamp(0.0, FRAC_PI_2),
        beta_star: wrap_angle(x[1]),
        residual,
        iterations: evals.get(),
        no_null: residual > NO_NULL_FACTOR * transfer,
    })
}

/// Two-dimensional Nelder-Mead with standard coefficients. Stops when the
/// simplex diameter falls below `diam_tol`, the best value falls below
/// `value_tol`, or the shared evaluation budget runs out.
#[allow(clippy::too_many_arguments)]
fn nelder_mead_2d<F>(
    objective: &mut F,
    start: [f64; 2],
    scale: [f64; 2],
    f_start: f64,
    diam_tol: f64,
    value_tol: f64,
    max_evals: usize,
    evals: &std::cell::Cell<usize>,
) -> Result<([f64; 2], f64), TomographyError>
where
    F: FnMut(&[f64; 2]) -> Result<f64, TomographyError>,
{
    let mut xs = [
        start,
        [start[0] + scale[0], start[1]],
        [start[0], start[1] + scale[1]],
    ];
    let mut fs = [f_start, 0.0, 0.0];
    for i in 1..3 {
        if evals.get() >= max_evals {
            return Ok((start, f_start));
        }
        fs[i] = objective(&xs[i])?;
    }

    loop {
        // Order: index 0 best, 2 worst.
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
        let (xb, fb) = (xs[idx[0]], fs[idx[0]]);
        let (xs2, fs2) = (xs[idx[1]], fs[idx[1]]);
        let (xw, fw) = (xs[idx[2]], fs[idx[2]]);

        let diam = dist(&xb, &xs2).max(dist(&xb, &xw)).max(dist(&xs2, &xw));
        if fb < value_tol || diam < diam_tol || evals.get() >= max_evals {
            return Ok((xb, fb));
        }

        let centroid = [(xb[0] + xs2[0]) / 2.0, (xb[1] + xs2[1]) / 2.0];
        let reflect = [
            centroid[0] + (centroid[0] - xw[0]),
            centroid[1] + (centroid[1] - xw[1]),
        ];
        let fr = objective(&reflect)?;

        let (new_x, new_f) = if fr < fb {
            let expand = [
                centroid[0] + 2.0 * (centroid[0] - xw[0]),
                centroid[1] + 2.0 * (centroid[1] - xw[1]),
            ];
            if evals.get() < max_evals {
                let fe = objective(&expand)?;
                if fe < fr {
                    (expand, fe)
                } else {
                    (reflect, fr)
                }
            } else {
                (reflect, fr)
            }
        } else if fr < fs2 {
            (reflect, fr)
        } else {
            let contracted = if fr < fw {
                [
                    centroid[0] + 0.5 * (centroid[0] - xw[0]),
                    centroid[1] + 0.5 * (centroid[1] - xw[1]),
                ]
            } else {
                [
                    centroid[0] - 0.5 * (centroid[0] - xw[0]),
                    centroid[1] - 0.5 * (centroid[1] - xw[1]),
                ]
            };
            if evals.get() >= max_evals {
                return Ok((xb, fb));
            }
            let fc = objective(&contracted)?;
            if fc < fw.min(fr) {
                (contracted, fc)
            } else {
                // Shrink toward the best vertex.
                for &i in &idx[1..] {
                    xs[i] = [
                        xb[0] + 0.5 * (xs[i][0] - xb[0]),
                        xb[1] + 0.5 * (xs[i][1] - xb[1]),
                    ];
                    if evals.get() >= max_evals {
                        return Ok((xb, fb));
                    }
                    fs[i] = objective(&xs[i])?;
                }
                continue;
            }
        };
        xs[idx[2]] = new_x;
        fs[idx[2]] = new_f;
    }
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn records_from(signals: [f64; 4]) -> Vec<FluorescenceRecord> {
        MeasurementSetting::protocol()
            .iter()
            .zip(signals.iter())
            .map(|(setting, &signal)| FluorescenceRecord {
                setting: *setting,
                signal,
                n_atoms: 1.0,
                noisy: false,
            })
            .collect()
    }

    #[test]
    fn pure_inversion_examples() {
        let s = reconstruct_pure(&records_from([0.5, 0.5, 1.0, 0.5])).unwrap();
        assert_abs_diff_eq!(s.alpha, FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.phi, 0.0, epsilon = 1e-12);
        let s = reconstruct_pure(&records_from([1.5, 1.5, 1.5, 3.0])).unwrap();
        assert_abs_diff_eq!(s.alpha, FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.phi, FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn pure_inversion_flags_degenerate_alpha() {
        let s = reconstruct_pure(&records_from([0.0, 1.0, 0.5, 0.5])).unwrap();
        assert!(s.degenerate_phase);
        assert_eq!(s.phi, 0.0);
        assert_abs_diff_eq!(s.alpha, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_total_signal_is_an_error() {
        assert_eq!(
            reconstruct_pure(&records_from([0.0, 0.0, 0.0, 0.0])),
            Err(TomographyError::ZeroTotalSignal)
        );
    }

    #[test]
    fn density_inversion_examples() {
        let rho = reconstruct_density(&records_from([0.5, 0.5, 0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(rho.rho11, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.rho22, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.rho12.norm(), 0.0, epsilon = 1e-12);
        let rho = reconstruct_density(&records_from([0.5, 0.5, 1.0, 0.5])).unwrap();
        assert_abs_diff_eq!(rho.rho12.re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.rho12.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn density_inversion_accepts_any_record_order() {
        let mut recs = records_from([0.2, 0.8, 0.6, 0.5]);
        recs.swap(0, 3);
        recs.swap(1, 2);
        let rho = reconstruct_density(&recs).unwrap();
        assert_abs_diff_eq!(rho.rho22, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.rho11, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn mismatched_records_are_rejected() {
        let mut recs = records_from([0.5, 0.5, 1.0, 0.5]);
        recs[3].setting = MeasurementSetting::new(0.3, 0.3).unwrap();
        assert_eq!(
            reconstruct_density(&recs),
            Err(TomographyError::NonCanonicalRecords)
        );
        let dup = records_from([0.5, 0.5, 1.0, 0.5]);
        let mut recs: Vec<_> = dup.clone();
        recs[1] = dup[0];
        assert_eq!(
            reconstruct_density(&recs),
            Err(TomographyError::NonCanonicalRecords)
        );
    }

    #[test]
    fn projection_examples() {
        let valid = DensityMatrix2::from_parts(0.7, 0.3, C64::new(0.1, 0.2));
        assert_eq!(project_physical(&valid), valid);
        let over = DensityMatrix2::from_parts(0.5, 0.5, C64::from_polar(0.6, 1.0));
        let fixed = project_physical(&over);
        assert_abs_diff_eq!(fixed.rho12.norm(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fixed.rho12.arg(), 1.0, epsilon = 1e-12);
        let neg = DensityMatrix2::from_parts(-0.01, 1.01, C64::new(0.0, 0.0));
        let fixed = project_physical(&neg);
        assert_eq!((fixed.rho11, fixed.rho22), (0.0, 1.0));
        // Idempotence on the projected output.
        assert_eq!(project_physical(&fixed), fixed);
    }

    #[test]
    fn decompose_frozen_example() {
        // rho11 = 0.7, rho22 = 0.3, rho12 = 0.1:
        // t = sqrt(0.16 + 0.04) = 0.4472135954999579.
        let rho = DensityMatrix2::from_parts(0.7, 0.3, C64::new(0.1, 0.0));
        let dec = decompose(&rho);
        let t = 0.4472135954999579f64;
        assert_abs_diff_eq!(dec.coherent.trace(), t, epsilon = 1e-14);
        assert_abs_diff_eq!(dec.r_inc, (1.0 - t) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dec.coherent.rho11, (0.4 + t) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dec.coherent.rho22, (-0.4 + t) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(degree_of_coherence(&rho), t, epsilon = 1e-14);
    }

    #[test]
    fn decompose_limits() {
        let pure = PureSuperposition::new(0.9, 0.4).unwrap().density();
        let dec = decompose(&pure);
        assert_abs_diff_eq!(dec.r_inc, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(degree_of_coherence(&pure), 1.0, epsilon = 1e-14);
        let mixed = DensityMatrix2::maximally_mixed();
        let dec = decompose(&mixed);
        assert_abs_diff_eq!(dec.r_inc, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(dec.coherent.trace(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn extract_parameters_round_trips_construction() {
        let state = PureSuperposition::new(0.8, -2.1).unwrap();
        let dec = decompose(&state.density());
        let back = extract_parameters(&dec.coherent).unwrap();
        assert_abs_diff_eq!(back.alpha, state.alpha, epsilon = 1e-12);
        assert_abs_diff_eq!(back.phi, state.phi, epsilon = 1e-12);
    }

    #[test]
    fn extract_parameters_balanced_with_phase() {
        let c = 0.3;
        let coh = CoherentPart {
            rho11: c,
            rho22: c,
            rho12: C64::from_polar(c, -std::f64::consts::FRAC_PI_3),
        };
        let s = extract_parameters(&coh).unwrap();
        assert_abs_diff_eq!(s.alpha, FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.phi, std::f64::consts::FRAC_PI_3, epsilon = 1e-12);
    }

    #[test]
    fn extract_parameters_rejects_vanishing_coherent_part() {
        let dec = decompose(&DensityMatrix2::maximally_mixed());
        assert_eq!(
            extract_parameters(&dec.coherent),
            Err(TomographyError::ZeroCoherentPart)
        );
    }

    #[test]
    fn reconstruct_flags_fully_mixed_input() {
        let res = reconstruct(&records_from([0.5, 0.5, 0.5, 0.5])).unwrap();
        assert!(res.zero_coherent_part);
        assert_abs_diff_eq!(res.tr_coh, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.r_inc, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn reconstruction_result_reassembles_density() {
        let res = reconstruct(&records_from([0.31, 0.69, 0.62, 0.47])).unwrap();
        assert!(!res.zero_coherent_part);
        assert_abs_diff_eq!(2.0 * res.r_inc + res.tr_coh, 1.0, epsilon = 1e-12);
        let (sa, ca) = res.coherent.alpha.sin_cos();
        let r11 = res.r_inc + res.tr_coh * ca * ca;
        let r22 = res.r_inc + res.tr_coh * sa * sa;
        let r12 = C64::from_polar(res.tr_coh * sa * ca, -res.coherent.phi);
        assert_abs_diff_eq!(r11, res.rho.rho11, epsilon = 1e-12);
        assert_abs_diff_eq!(r22, res.rho.rho22, epsilon = 1e-12);
        assert!((r12 - res.rho.rho12).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn decomposition_is_exact_and_rank_one(
            r_inc in 0.0..0.5f64,
            alpha in 0.0..FRAC_PI_2,
            phi in -PI..PI,
        ) {
            let chi = PureSuperposition::new(alpha, phi).unwrap();
            let rho = DensityMatrix2::mixture(r_inc, &chi);
            let dec = decompose(&rho);
            prop_assert!(dec.coherent.det().abs() < 1e-12);
            prop_assert!((2.0 * dec.r_inc + dec.coherent.trace() - 1.0).abs() < 1e-12);
            prop_assert!((dec.r_inc + dec.coherent.rho11 - rho.rho11).abs() < 1e-14);
            prop_assert!((dec.r_inc + dec.coherent.rho22 - rho.rho22).abs() < 1e-14);
        }

        #[test]
        fn coherence_degree_is_bloch_length(
            rho11 in 0.0..1.0f64,
            mag in 0.0..0.5f64,
            arg in -PI..PI,
        ) {
            let rho22 = 1.0 - rho11;
            let bound = (rho11 * rho22).sqrt();
            let rho = DensityMatrix2::from_parts(
                rho11,
                rho22,
                C64::from_polar(mag.min(bound), arg),
            );
            let [x, y, z] = rho.bloch_vector();
            let len = (x * x + y * y + z * z).sqrt();
            prop_assert!((degree_of_coherence(&rho) - len).abs() < 1e-13);
        }

        #[test]
        fn reconstruction_is_scale_invariant(
            i1 in 0.01..1.0f64,
            i2 in 0.01..1.0f64,
            i3 in 0.0..1.0f64,
            i4 in 0.0..1.0f64,
            k in 0.01..100.0f64,
        ) {
            let base = reconstruct_density(&records_from([i1, i2, i3, i4])).unwrap();
            let scaled =
                reconstruct_density(&records_from([k * i1, k * i2, k * i3, k * i4])).unwrap();
            prop_assert!((base.rho11 - scaled.rho11).abs() < 1e-10);
            prop_assert!((base.rho22 - scaled.rho22).abs() < 1e-10);
            prop_assert!((base.rho12 - scaled.rho12).norm() < 1e-10);
        }
    }
}
