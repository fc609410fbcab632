//! Adaptive Dormand–Prince 5(4) integrator for scalar ODEs.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
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

const MAX_STEPS: usize = 1_000_000;

/// Integrates `y' = f(t, y)` from `(t0, y0)` to `t1` with mixed
/// absolute/relative tolerance `tol`. `f` returns an error to abort, e.g.
/// when the solution leaves the domain of the vector field.
pub(crate) fn integrate<F>(f: F, t0: f64, y0: f64, t1: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = (t1 - t0) * 1e-3;
    let mut k = [0.0f64; 7];
    for _ in 0..MAX_STEPS {
        if t >= t1 {
            return Ok(y);
        }
        if t + h > t1 {
            h = t1 - t;
        }
        k[0] = f(t, y)?;
        let mut failed = false;
        for i in 1..7 {
            let yi = y + h * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
            match f(t + C[i] * h, yi) {
                Ok(v) => k[i] = v,
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            h *= 0.25;
            if h < 1e-14 * (t1 - t0).abs().max(1.0) {
                return Err(Error::Integration(format!(
                    "vector field undefined near t = {t}"
                )));
            }
            continue;
        }
        let y5 = y + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
        let y4 = y + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
        let scale = tol * (1.0 + y.abs().max(y5.abs()));
        let err = (y5 - y4).abs() / scale;
        if !y5.is_finite() {
            return Err(Error::Integration(format!("solution blew up near t = {t}")));
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 * (t1 - t0).abs().max(1.0) {
            return Err(Error::Integration(format!(
                "step size underflow near t = {t}"
            )));
        }
    }
    Err(Error::Integration("too many steps".into()))
}
