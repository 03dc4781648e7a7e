//! Runge-Kutta steppers for small complex-valued ODE systems.
//!
//! The right-hand side operates on a flat `[Complex64; N]` state. The
//! adaptive path is the embedded Dormand-Prince 5(4) pair with the FSAL
//! stage reuse; a fixed-step classic RK4 is kept for reproducibility runs.

use num_complex::Complex64 as C64;

/// Step-size underflow or step-count blowup during integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepFailure {
    /// Time at which the integrator gave up.
    pub t: f64,
    /// Last attempted step size.
    pub step: f64,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights coincide with the last A row (FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
const MAX_STEPS: usize = 10_000_000;

fn zeros<const N: usize>() -> [C64; N] {
    [C64::new(0.0, 0.0); N]
}

/// Weighted RMS of the local error estimate against the tolerance scale.
fn error_norm<const N: usize>(
    err: &[C64; N],
    y0: &[C64; N],
    y1: &[C64; N],
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = (abs_tol + rel_tol * y0[i].norm().max(y1[i].norm())).max(f64::MIN_POSITIVE);
        let r = err[i].norm() / scale;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

/// Advance `y0` from `t0` to `t1` with embedded 5(4) error control.
pub(crate) fn integrate_adaptive<const N: usize, F>(
    rhs: &F,
    t0: f64,
    t1: f64,
    y0: [C64; N],
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
) -> Result<[C64; N], StepFailure>
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    debug_assert!(span > 0.0, "integration runs forward in time");

    let mut t = t0;
    let mut y = y0;
    let mut h = max_step.min(span);
    let mut k: [[C64; N]; 7] = [zeros(); 7];
    // k[0] always holds rhs(t, y); a rejected step leaves it valid.
    k[0] = rhs(t, &y);
    // Remaining intervals this small are endpoint roundoff, not work.
    let tiny = 1e-14 * span.abs().max(1.0);

    for _ in 0..MAX_STEPS {
        if t1 - t <= tiny {
            return Ok(y);
        }
        h = h.min(t1 - t);
        if h < tiny {
            // Only reachable when error control shrank the step itself.
            return Err(StepFailure { t, step: h });
        }
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += kj[i] * (a * h);
                    }
                }
            }
            k[stage] = rhs(t + C[stage] * h, &ys);
        }
        let mut y5 = y;
        let mut err = zeros::<N>();
        for (j, kj) in k.iter().enumerate() {
            let b = B5[j];
            let e = B5[j] - B4[j];
            for i in 0..N {
                if b != 0.0 {
                    y5[i] += kj[i] * (b * h);
                }
                err[i] += kj[i] * (e * h);
            }
        }
        let norm = error_norm(&err, &y, &y5, rel_tol, abs_tol);
        if norm <= 1.0 {
            t += h;
            y = y5;
            // FSAL: the seventh stage was evaluated at (t + h, y5).
            k[0] = k[6];
        }
        let scale = if norm == 0.0 {
            MAX_SCALE
        } else if norm.is_finite() {
            (SAFETY * norm.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        } else {
            // Overflowing or NaN error estimates (blown-up state, zero
            // tolerances) must shrink the step, not stall it.
            MIN_SCALE
        };
        h = (h * scale).min(max_step);
    }
    Err(StepFailure { t, step: h })
}

/// Classic fixed-step fourth-order Runge-Kutta over `n_steps`.
pub(crate) fn integrate_rk4<const N: usize, F>(
    rhs: &F,
    t0: f64,
    t1: f64,
    y0: [C64; N],
    n_steps: usize,
) -> [C64; N]
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    let n = n_steps.max(1);
    let h = (t1 - t0) / n as f64;
    let mut y = y0;
    let mut t = t0;
    for _ in 0..n {
        let k1 = rhs(t, &y);
        let mut y2 = y;
        for i in 0..N {
            y2[i] += k1[i] * (h / 2.0);
        }
        let k2 = rhs(t + h / 2.0, &y2);
        let mut y3 = y;
        for i in 0..N {
            y3[i] += k2[i] * (h / 2.0);
        }
        let k3 = rhs(t + h / 2.0, &y3);
        let mut y4 = y;
        for i in 0..N {
            y4[i] += k3[i] * h;
        }
        let k4 = rhs(t + h, &y4);
        for i in 0..N {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        t += h;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // dy/dt = i w y has the solution y0 e^{i w t}.
    fn phase_rhs(w: f64) -> impl Fn(f64, &[C64; 1]) -> [C64; 1] {
        move |_t, y| [C64::new(0.0, w) * y[0]]
    }

    #[test]
    fn adaptive_matches_phase_rotation() {
        let y = integrate_adaptive(
            &phase_rhs(3.0),
            0.0,
            2.0,
            [C64::new(1.0, 0.0)],
            1e-12,
            1e-14,
            0.1,
        )
        .unwrap();
        let expect = C64::from_polar(1.0, 6.0);
        assert_abs_diff_eq!((y[0] - expect).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn adaptive_time_dependent_frequency() {
        // dy/dt = i t y  ->  y = exp(i t^2 / 2).
        let rhs = |t: f64, y: &[C64; 1]| [C64::new(0.0, t) * y[0]];
        let y =
            integrate_adaptive(&rhs, 0.0, 3.0, [C64::new(1.0, 0.0)], 1e-12, 1e-14, 0.2).unwrap();
        let expect = C64::from_polar(1.0, 4.5);
        assert_abs_diff_eq!((y[0] - expect).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_rhs_is_exact() {
        let rhs = |_t: f64, _y: &[C64; 2]| [C64::new(0.0, 0.0); 2];
        let y0 = [C64::new(0.25, -1.5), C64::new(0.0, 2.0)];
        let y = integrate_adaptive(&rhs, -4.0, 4.0, y0, 1e-10, 1e-12, 0.5).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn rk4_converges_fourth_order() {
        let exact = C64::from_polar(1.0, 5.0);
        let coarse = integrate_rk4(&phase_rhs(1.0), 0.0, 5.0, [C64::new(1.0, 0.0)], 50);
        let fine = integrate_rk4(&phase_rhs(1.0), 0.0, 5.0, [C64::new(1.0, 0.0)], 100);
        let e_coarse = (coarse[0] - exact).norm();
        let e_fine = (fine[0] - exact).norm();
        let order = (e_coarse / e_fine).log2();
        assert!(
            (3.5..4.5).contains(&order),
            "observed order {order}, errors {e_coarse:.3e} / {e_fine:.3e}"
        );
    }
}
