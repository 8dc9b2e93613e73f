//! Embedded Dormand-Prince 5(4) integrator with fourth-order dense output,
//! specialised to the 18-dimensional background matrix system.

use crate::{Error, Result};
use nalgebra::SVector;

pub const DIM: usize = 18;
pub type State = SVector<f64, DIM>;

// Butcher tableau of the classical DP5(4) pair.
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
// 5th-order solution weights (same as last row of A: FSAL pair).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Error weights b - b̂.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output coefficients (Hairer's contd5).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its dense-output polynomial.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [State; 5],
}

impl DenseStep {
    /// Evaluate the continuous extension at `t ∈ [t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> State {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        self.rcont[0]
            + s * (self.rcont[1] + s1 * (self.rcont[2] + s * (self.rcont[3] + s1 * self.rcont[4])))
    }
}

/// Adaptive integration of `y' = f(t, y)` from `t0` to `t_end`.
///
/// Returns the list of accepted dense steps covering `[t0, t_end]` exactly.
pub fn integrate<F>(
    f: F,
    t0: f64,
    y0: State,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<Vec<DenseStep>>
where
    F: Fn(f64, &State) -> State,
{
    assert!(t_end > t0);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);

    // Initial step size from the scaled derivative magnitude.
    let scale = |y: &State| -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..DIM {
            m = m.max(y[i].abs());
        }
        atol + rtol * m
    };
    let mut h = {
        let d0 = y.amax().max(1e-6);
        let d1 = k1.amax().max(1e-10);
        (0.01 * d0 / d1).min(t_end - t0).max(1e-10)
    };

    let mut steps: Vec<DenseStep> = Vec::new();
    let max_steps = 10_000_000usize;
    let mut n_steps = 0usize;

    while t < t_end {
        n_steps += 1;
        if n_steps > max_steps {
            return Err(Error::Integration {
                t,
                reason: "step limit exceeded".into(),
            });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                reason: "step size underflow".into(),
            });
        }

        let mut k = [State::zeros(); 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys += h * a * kj;
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate() {
            if B[j] != 0.0 {
                y_new += h * B[j] * kj;
            }
        }

        // Scaled error estimate.
        let tol = scale(&y).max(scale(&y_new));
        let mut err2 = 0.0;
        for i in 0..DIM {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let e = h * e / tol;
            err2 += e * e;
        }
        let err = (err2 / DIM as f64).sqrt();

        if err <= 1.0 {
            // Accept.
            let ydiff = y_new - y;
            let bspl = h * k[0] - ydiff;
            let mut dsum = State::zeros();
            for (j, kj) in k.iter().enumerate() {
                if D[j] != 0.0 {
                    dsum += D[j] * kj;
                }
            }
            let rcont = [y, ydiff, bspl, ydiff - h * k[6] - bspl, h * dsum];
            steps.push(DenseStep { t0: t, h, rcont });
            t += h;
            y = y_new;
            k1 = k[6]; // FSAL
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h *= fac;
        } else {
            if !err.is_finite() {
                return Err(Error::Integration {
                    t,
                    reason: "non-finite error estimate (blow-up or invalid state)".into(),
                });
            }
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrates_linear_system_exactly() {
        // y' = const vector: dense output must reproduce the line.
        let c: State = State::from_fn(|i, _| 0.1 * (i as f64 + 1.0));
        let steps = integrate(|_, _| c, 0.0, State::zeros(), 10.0, 1e-10, 1e-12).unwrap();
        let last = steps.last().unwrap();
        let y = last.eval(7.3);
        for i in 0..DIM {
            assert_abs_diff_eq!(y[i], 7.3 * c[i], epsilon = 1e-11);
        }
    }

    #[test]
    fn converges_on_exponential() {
        let steps = integrate(
            |_, y| *y,
            0.0,
            State::from_element(1.0),
            2.0,
            1e-10,
            1e-12,
        )
        .unwrap();
        // Find the dense step containing t = 1.37.
        let t = 1.37;
        let s = steps
            .iter()
            .find(|s| t >= s.t0 && t <= s.t0 + s.h)
            .unwrap();
        assert_abs_diff_eq!(s.eval(t)[0], t.exp(), epsilon = 1e-8);
        let last = steps.last().unwrap();
        assert_abs_diff_eq!(last.eval(2.0)[0], 2.0f64.exp(), epsilon = 1e-8);
    }
}
