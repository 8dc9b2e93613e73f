//! Background affine motions.
//!
//! The ellipsoidal background is carried by a matrix trajectory
//! `A(t) ∈ GL⁺(3)` obeying the second-order system
//!
//! ```text
//! Ä = δ (det A)^{1-γ} A^{-⊤},    (A(0), Ȧ(0)) = (A0, A1),
//! ```
//!
//! which conserves `E = ½‖Ȧ‖² + δ/(γ-1) (det A)^{1-γ}`. For `det A1 > 0` the
//! motion expands linearly, `A(t) ≈ a(t) + t b`, and all perturbation-level
//! quantities are phrased in the derived frame `(μ, Λ, O, Γ*)` extracted here.

mod dopri;
pub mod picard;

use crate::numerics::{gauss_legendre_on, least_squares_line};
use crate::{Error, GasParams, Result};
use dopri::{DenseStep, State};
use nalgebra::{Matrix3, SymmetricEigen};

/// `N(A) = (det A)^{1-γ} A^{-⊤}`, the nonlinearity of the background system.
///
/// Errors if `det A ≤ 0` (the motion has left `GL⁺(3)`).
pub fn nonlinearity(a: &Matrix3<f64>, gamma: f64) -> Result<Matrix3<f64>> {
    let det = a.determinant();
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::domain(format!(
            "nonlinearity requires det A > 0, got det A = {det}"
        )));
    }
    let inv_t = a
        .try_inverse()
        .ok_or_else(|| Error::domain("matrix not invertible".to_string()))?
        .transpose();
    Ok(det.powf(1.0 - gamma) * inv_t)
}

/// Initial value problem for the background motion.
#[derive(Debug, Clone)]
pub struct AffineIvp {
    pub params: GasParams,
    pub a0: Matrix3<f64>,
    pub a1: Matrix3<f64>,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Permit `det A1 ≤ 0` (e.g. a frozen background for diagnostics). The
    /// expanding theory assumes `det A1 > 0`; linear-part decomposition and
    /// expansion rates will still reject degenerate drift.
    pub allow_non_expanding: bool,
}

impl AffineIvp {
    pub fn new(params: GasParams, a0: Matrix3<f64>, a1: Matrix3<f64>, t_end: f64) -> Result<Self> {
        if a0.determinant() <= 0.0 {
            return Err(Error::domain(format!(
                "initial datum requires det A0 > 0, got {}",
                a0.determinant()
            )));
        }
        if !(t_end > 0.0) {
            return Err(Error::domain("t_end must be positive".to_string()));
        }
        Ok(AffineIvp {
            params,
            a0,
            a1,
            t_end,
            rtol: 1e-10,
            atol: 1e-12,
            allow_non_expanding: false,
        })
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn allow_non_expanding(mut self) -> Self {
        self.allow_non_expanding = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.allow_non_expanding && self.a1.determinant() <= 0.0 {
            return Err(Error::domain(format!(
                "expanding motion requires det A1 > 0, got {} \
                 (use allow_non_expanding() for diagnostic runs)",
                self.a1.determinant()
            )));
        }
        Ok(())
    }
}

fn pack(a: &Matrix3<f64>, adot: &Matrix3<f64>) -> State {
    State::from_fn(|i, _| {
        if i < 9 {
            a[(i / 3, i % 3)]
        } else {
            adot[((i - 9) / 3, (i - 9) % 3)]
        }
    })
}

fn unpack(y: &State) -> (Matrix3<f64>, Matrix3<f64>) {
    (
        Matrix3::from_fn(|r, c| y[3 * r + c]),
        Matrix3::from_fn(|r, c| y[9 + 3 * r + c]),
    )
}

/// Integrated background trajectory with dense output and cached time maps.
#[derive(Debug, Clone)]
pub struct AffineTrajectory {
    pub ivp: AffineIvp,
    steps: Vec<DenseStep>,
    /// Cumulative intrinsic times at accepted step boundaries:
    /// `tau[i] = ∫_0^{t_i} dt/μ`, `s[i] = ∫_0^{t_i} (det A)^{(1-3γ)/6} dt`.
    step_t: Vec<f64>,
    step_tau: Vec<f64>,
    step_s: Vec<f64>,
}

impl AffineTrajectory {
    pub fn t_end(&self) -> f64 {
        self.ivp.t_end
    }

    /// `(A, Ȧ)` at `t ∈ [0, t_end]` from the dense output.
    pub fn sample(&self, t: f64) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
        let step = self.locate(t)?;
        Ok(unpack(&step.eval(t)))
    }

    /// `Ä(t) = δ N(A(t))`.
    pub fn accel(&self, t: f64) -> Result<Matrix3<f64>> {
        let (a, _) = self.sample(t)?;
        Ok(self.ivp.params.delta * nonlinearity(&a, self.ivp.params.gamma)?)
    }

    /// Conserved energy `½‖Ȧ‖² + δ/(γ-1) (det A)^{1-γ}` at time `t`.
    pub fn energy(&self, t: f64) -> Result<f64> {
        let (a, adot) = self.sample(t)?;
        let p = &self.ivp.params;
        Ok(0.5 * adot.norm_squared()
            + p.delta / (p.gamma - 1.0) * a.determinant().powf(1.0 - p.gamma))
    }

    fn locate(&self, t: f64) -> Result<&DenseStep> {
        if !(0.0..=self.ivp.t_end * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside trajectory range [0, {}]",
                self.ivp.t_end
            )));
        }
        let idx = self
            .step_t
            .partition_point(|&t0| t0 <= t)
            .saturating_sub(1)
            .min(self.steps.len() - 1);
        Ok(&self.steps[idx])
    }

    /// Intrinsic slow time `τ(t) = ∫_0^t dt'/μ(t')`.
    pub fn tau_of_t(&self, t: f64) -> Result<f64> {
        let step = self.locate(t)?;
        let idx = self.step_t.partition_point(|&t0| t0 <= t).saturating_sub(1);
        let base = self.step_tau[idx.min(self.step_tau.len() - 1)];
        Ok(base + quad_dense(step, self.step_t[idx], t, |a| 1.0 / mu_of(a)))
    }

    /// Intermediate self-similar time `s(t) = ∫_0^t (det A)^{(1-3γ)/6} dt'`.
    pub fn s_of_t(&self, t: f64) -> Result<f64> {
        let gamma = self.ivp.params.gamma;
        let e = (1.0 - 3.0 * gamma) / 6.0;
        let step = self.locate(t)?;
        let idx = self.step_t.partition_point(|&t0| t0 <= t).saturating_sub(1);
        let base = self.step_s[idx.min(self.step_s.len() - 1)];
        Ok(base + quad_dense(step, self.step_t[idx], t, |a| a.determinant().powf(e)))
    }

    /// Inverse map `t(τ)` by bisection + Newton on the cached monotone table.
    pub fn t_of_tau(&self, tau: f64) -> Result<f64> {
        let tau_final = self.tau_of_t(self.ivp.t_end)?;
        if tau < 0.0 || tau > tau_final * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!(
                "tau = {tau} outside [0, {tau_final}]"
            )));
        }
        // Bracket within step boundaries.
        let idx = self
            .step_tau
            .partition_point(|&x| x <= tau)
            .saturating_sub(1)
            .min(self.steps.len() - 1);
        let mut lo = self.step_t[idx];
        let mut hi = if idx + 1 < self.step_t.len() {
            self.step_t[idx + 1]
        } else {
            self.ivp.t_end
        };
        let mut t = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = self.tau_of_t(t)? - tau;
            if f.abs() < 1e-13 * (1.0 + tau.abs()) {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let (a, _) = self.sample(t)?;
            let tn = t - f * mu_of(&a); // Newton: dτ/dt = 1/μ
            t = if tn > lo && tn < hi { tn } else { 0.5 * (lo + hi) };
        }
        Ok(t.clamp(0.0, self.ivp.t_end))
    }

    /// Derived frame at Newtonian time `t`.
    pub fn frame_at(&self, t: f64) -> Result<AffineFrame> {
        let (a, adot) = self.sample(t)?;
        let tau = self.tau_of_t(t)?;
        AffineFrame::from_state(t, tau, &a, &adot)
    }

    /// Derived frame at intrinsic time `τ`.
    pub fn frame_at_tau(&self, tau: f64) -> Result<AffineFrame> {
        self.frame_at(self.t_of_tau(tau)?)
    }

    /// Export `n_samples` uniform samples as CSV with header
    /// `t,A11,...,A33,Adot11,...,Adot33,mu,detLambda,energy`.
    pub fn export_csv(&self, path: &std::path::Path, n_samples: usize) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "t")?;
        for name in ["A", "Adot"] {
            for r in 1..=3 {
                for c in 1..=3 {
                    write!(f, ",{name}{r}{c}")?;
                }
            }
        }
        writeln!(f, ",mu,detLambda,energy")?;
        let n = n_samples.max(2);
        for i in 0..n {
            let t = self.ivp.t_end * i as f64 / (n - 1) as f64;
            let (a, adot) = self.sample(t)?;
            let frame = AffineFrame::from_state(t, 0.0, &a, &adot)?;
            write!(f, "{t:.12e}")?;
            for m in [&a, &adot] {
                for r in 0..3 {
                    for c in 0..3 {
                        write!(f, ",{:.12e}", m[(r, c)])?;
                    }
                }
            }
            writeln!(
                f,
                ",{:.12e},{:.12e},{:.12e}",
                frame.mu,
                frame.lambda.determinant(),
                self.energy(t)?
            )?;
        }
        Ok(())
    }
}

fn mu_of(a: &Matrix3<f64>) -> f64 {
    a.determinant().cbrt()
}

/// Gauss quadrature of `g(A(t))` over `[t0, t1]` inside one dense step.
///
/// Accepted steps can be very long when the motion is nearly linear, while
/// the integrands (`1/μ`, powers of `det A`) vary on the scale `1 + t`, so
/// the interval is split into panels short relative to that scale.
fn quad_dense<F: Fn(&Matrix3<f64>) -> f64>(step: &DenseStep, t0: f64, t1: f64, g: F) -> f64 {
    if t1 <= t0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut a = t0;
    while a < t1 {
        let b = (a + 0.25 * (1.0 + a)).min(t1);
        let (x, w) = gauss_legendre_on(8, a, b);
        total += x
            .iter()
            .zip(&w)
            .map(|(&t, &wt)| {
                let (m, _) = unpack(&step.eval(t));
                wt * g(&m)
            })
            .sum::<f64>();
        a = b;
    }
    total
}

/// Integrate the background system with the adaptive embedded pair.
pub fn integrate(ivp: &AffineIvp) -> Result<AffineTrajectory> {
    ivp.validate()?;
    let gamma = ivp.params.gamma;
    let delta = ivp.params.delta;
    let rhs = move |_t: f64, y: &State| -> State {
        let (a, adot) = unpack(y);
        let n = match nonlinearity(&a, gamma) {
            Ok(n) => delta * n,
            // Signal blow-up through non-finite values; the controller
            // rejects the step and the caller sees an Integration error.
            Err(_) => Matrix3::from_element(f64::NAN),
        };
        pack(&adot, &n)
    };
    let y0 = pack(&ivp.a0, &ivp.a1);
    let steps = dopri::integrate(rhs, 0.0, y0, ivp.t_end, ivp.rtol, ivp.atol)?;

    // Cache cumulative intrinsic times at step boundaries.
    let e_s = (1.0 - 3.0 * gamma) / 6.0;
    let mut step_t = Vec::with_capacity(steps.len());
    let mut step_tau = Vec::with_capacity(steps.len());
    let mut step_s = Vec::with_capacity(steps.len());
    let mut tau = 0.0;
    let mut s = 0.0;
    for step in &steps {
        step_t.push(step.t0);
        step_tau.push(tau);
        step_s.push(s);
        let t1 = step.t0 + step.h;
        tau += quad_dense(step, step.t0, t1, |a| 1.0 / mu_of(a));
        s += quad_dense(step, step.t0, t1, |a| a.determinant().powf(e_s));
    }
    Ok(AffineTrajectory {
        ivp: ivp.clone(),
        steps,
        step_t,
        step_tau,
        step_s,
    })
}

/// Derived frame of the background motion at a fixed time.
#[derive(Debug, Clone)]
pub struct AffineFrame {
    pub t: f64,
    pub tau: f64,
    pub a: Matrix3<f64>,
    pub adot: Matrix3<f64>,
    /// Scale factor `μ = (det A)^{1/3}`.
    pub mu: f64,
    /// `dμ/dτ = μ dμ/dt` (τ is the intrinsic time with `dτ = dt/μ`).
    pub mu_tau: f64,
    /// Shape matrix `Λ = μ² A^{-1} A^{-⊤}` (symmetric, `det Λ = 1`).
    pub lambda: Matrix3<f64>,
    pub lambda_inv: Matrix3<f64>,
    /// Unit-determinant part `O = A/μ`.
    pub o: Matrix3<f64>,
    /// Rotation-shear rate `Γ* = O^{-1} dO/dτ = μ (A^{-1}Ȧ - ⅓ tr(A^{-1}Ȧ) Id)`.
    pub gamma_star: Matrix3<f64>,
    /// Eigenvalues of `Λ`, ascending.
    pub lambda_eigs: [f64; 3],
}

impl AffineFrame {
    pub fn from_state(
        t: f64,
        tau: f64,
        a: &Matrix3<f64>,
        adot: &Matrix3<f64>,
    ) -> Result<AffineFrame> {
        let det = a.determinant();
        if det <= 0.0 {
            return Err(Error::domain(format!("frame requires det A > 0, got {det}")));
        }
        let mu = det.cbrt();
        let a_inv = a
            .try_inverse()
            .ok_or_else(|| Error::domain("A not invertible".to_string()))?;
        let lambda = mu * mu * a_inv * a_inv.transpose();
        // Symmetrise to suppress round-off asymmetry before the eigensolver.
        let lambda = 0.5 * (lambda + lambda.transpose());
        let lambda_inv = a.transpose() * a / (mu * mu);
        let lambda_inv = 0.5 * (lambda_inv + lambda_inv.transpose());
        let m = a_inv * adot;
        let tr = m.trace();
        let gamma_star = mu * (m - (tr / 3.0) * Matrix3::identity());
        let mu_tau = mu * mu / 3.0 * tr;
        let mut eigs: Vec<f64> = SymmetricEigen::new(lambda).eigenvalues.iter().cloned().collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        Ok(AffineFrame {
            t,
            tau,
            a: *a,
            adot: *adot,
            mu,
            mu_tau,
            lambda,
            lambda_inv,
            o: a / mu,
            gamma_star,
            lambda_eigs: [eigs[0], eigs[1], eigs[2]],
        })
    }
}

/// Asymptotic expansion rates derived from the linear part `b`.
#[derive(Debug, Clone)]
pub struct ExpansionRates {
    /// `μ1 = (det b)^{1/3}`: asymptotic linear growth rate of `μ(t)/t`.
    pub mu1: f64,
    /// `μ0 = (3γ-3)/2 · μ1`: vorticity-norm decay rate.
    pub mu0: f64,
    /// `μ2 = (5-3γ)/2 · μ1`: dissipation prefactor rate.
    pub mu2: f64,
}

/// Compute `(μ1, μ0, μ2)` from the drift matrix `b`.
///
/// Requires `det b > 0`. Both derived rates are positive exactly when
/// `1 < γ < 5/3`; `μ2 → 0` as `γ → 5/3`.
pub fn expansion_rates(b: &Matrix3<f64>, gamma: f64) -> Result<ExpansionRates> {
    let det = b.determinant();
    if det <= 0.0 {
        return Err(Error::domain(format!(
            "expansion rates require det b > 0, got {det}"
        )));
    }
    let mu1 = det.cbrt();
    Ok(ExpansionRates {
        mu1,
        mu0: 0.5 * (3.0 * gamma - 3.0) * mu1,
        mu2: 0.5 * (5.0 - 3.0 * gamma) * mu1,
    })
}

/// Linear-part decomposition `A(t) ≈ a(t) + t b` of an integrated trajectory.
#[derive(Debug, Clone)]
pub struct LinearPart {
    /// Drift matrix `b ≈ lim Ȧ(t)`, taken as `Ȧ(t_end)`.
    pub b: Matrix3<f64>,
    /// `‖b - A1‖` (Frobenius), which is `O(δ)`.
    pub b_minus_a1: f64,
    /// Tail estimate `‖Ä(t_end)‖ · t_end` for the error in `b`.
    pub residual: f64,
    /// Log-log slope of `‖Ä(t)‖` over `[10, t_end]` (None when `t_end < 20`).
    pub accel_decay_slope: Option<f64>,
}

/// Extract the linear part of an expanding trajectory.
///
/// Errors if the tail estimate exceeds `target_accuracy` — the horizon is too
/// short for the requested accuracy of `b`.
pub fn decompose_linear_part(traj: &AffineTrajectory, target_accuracy: f64) -> Result<LinearPart> {
    let t_end = traj.t_end();
    let (_, b) = traj.sample(t_end)?;
    if b.determinant() <= 0.0 {
        return Err(Error::domain(
            "trajectory drift is not expanding (det Ȧ(t_end) ≤ 0)".to_string(),
        ));
    }
    let residual = traj.accel(t_end)?.norm() * t_end;
    if residual > target_accuracy {
        return Err(Error::domain(format!(
            "horizon t_end = {t_end} too short: tail estimate {residual:.3e} \
             exceeds target accuracy {target_accuracy:.3e}"
        )));
    }
    let accel_decay_slope = if t_end >= 20.0 {
        let n = 40;
        let lo = 10.0f64.ln();
        let hi = t_end.ln();
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let t = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            let a = traj.accel(t)?.norm();
            if a > 0.0 {
                xs.push(t.ln());
                ys.push(a.ln());
            }
        }
        if xs.len() >= 2 {
            Some(least_squares_line(&xs, &ys).0)
        } else {
            None
        }
    } else {
        None
    };
    Ok(LinearPart {
        b,
        b_minus_a1: (b - traj.ivp.a1).norm(),
        residual,
        accel_decay_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FieldSign;
    use approx::assert_abs_diff_eq;

    fn params(gamma: f64, delta: f64) -> GasParams {
        GasParams::new(gamma, delta, FieldSign::Attractive).unwrap()
    }

    #[test]
    fn nonlinearity_identity_matrix() {
        // N(Id) = Id for any gamma.
        let n = nonlinearity(&Matrix3::identity(), 1.4).unwrap();
        assert_abs_diff_eq!((n - Matrix3::identity()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn nonlinearity_diagonal_oracle() {
        // Independent cofactor-expansion oracle for A = diag(1, 2, 4), γ = 5/3:
        // det = 8, det^{1-γ} = 8^{-2/3} = 1/4, A^{-T} = diag(1, 1/2, 1/4).
        let a = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 4.0));
        let n = nonlinearity(&a, 5.0 / 3.0).unwrap();
        let expect = Matrix3::from_diagonal(&nalgebra::Vector3::new(0.25, 0.125, 0.0625));
        assert_abs_diff_eq!((n - expect).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn nonlinearity_general_oracle() {
        // Cofactor oracle: (det A)^{1-γ} adj(A)^⊤ / det A, entries via explicit
        // 2x2 minors, frozen for one non-symmetric matrix and γ = 1.5.
        let a = Matrix3::new(2.0, 1.0, 0.0, 0.5, 3.0, 1.0, 0.0, 1.0, 2.0);
        let det: f64 = 2.0 * (3.0 * 2.0 - 1.0 * 1.0) - 1.0 * (0.5 * 2.0 - 1.0 * 0.0);
        assert_abs_diff_eq!(det, 9.0, epsilon = 1e-15);
        // adj(A)_{ij} = cofactor C_{ji}; A^{-T} = adj(A)^T / det = C / det.
        let cof = Matrix3::new(
            5.0, -1.0, 0.5, // C11..C13
            -2.0, 4.0, -2.0, // C21..C23
            1.0, -2.0, 5.5, // C31..C33
        );
        let expect = det.powf(-0.5) / det * cof;
        let n = nonlinearity(&a, 1.5).unwrap();
        assert_abs_diff_eq!((n - expect).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn nonlinearity_rejects_degenerate() {
        assert!(nonlinearity(&Matrix3::zeros(), 1.4).is_err());
        let neg = Matrix3::from_diagonal(&nalgebra::Vector3::new(-1.0, 1.0, 1.0));
        assert!(nonlinearity(&neg, 1.4).is_err());
    }

    #[test]
    fn delta_zero_is_exactly_linear() {
        let p = params(1.5, 0.0);
        let a1 = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.2, 0.0, 0.05, 0.0, 0.9);
        let ivp = AffineIvp::new(p, Matrix3::identity(), a1, 50.0).unwrap();
        let traj = integrate(&ivp).unwrap();
        for &t in &[0.0, 13.7, 50.0] {
            let (a, adot) = traj.sample(t).unwrap();
            assert_abs_diff_eq!((a - (Matrix3::identity() + t * a1)).norm(), 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!((adot - a1).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn energy_is_conserved() {
        let p = params(1.5, 1e-2);
        let ivp = AffineIvp::new(p, Matrix3::identity(), Matrix3::identity(), 50.0).unwrap();
        let traj = integrate(&ivp).unwrap();
        let e0 = traj.energy(0.0).unwrap();
        // e0 = 3/2 + δ/(γ-1) = 1.5 + 0.02.
        assert_abs_diff_eq!(e0, 1.52, epsilon = 1e-14);
        for &t in &[1.0, 10.0, 33.3, 50.0] {
            assert_abs_diff_eq!(traj.energy(t).unwrap(), e0, epsilon = 1e-9);
        }
    }

    #[test]
    fn isotropic_matches_scalar_reduction() {
        // A = λ(t) Id reduces to λ̈ = δ λ^{2-3γ}; cross-check against a
        // fine RK4 integration of the scalar equation.
        let gamma = 1.5;
        let delta = 1e-2;
        let p = params(gamma, delta);
        let ivp = AffineIvp::new(p, Matrix3::identity(), Matrix3::identity(), 10.0).unwrap();
        let traj = integrate(&ivp).unwrap();

        let mut lam = 1.0f64;
        let mut lamdot = 1.0f64;
        let dt = 1e-4f64;
        let f = |l: f64| delta * l.powf(2.0 - 3.0 * gamma);
        let steps = (10.0 / dt).round() as usize;
        for _ in 0..steps {
            // RK4 on (λ, λ').
            let k1 = (lamdot, f(lam));
            let k2 = (lamdot + 0.5 * dt * k1.1, f(lam + 0.5 * dt * k1.0));
            let k3 = (lamdot + 0.5 * dt * k2.1, f(lam + 0.5 * dt * k2.0));
            let k4 = (lamdot + dt * k3.1, f(lam + dt * k3.0));
            lam += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            lamdot += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        let (a, adot) = traj.sample(10.0).unwrap();
        assert_abs_diff_eq!(a[(0, 0)], lam, epsilon = 1e-8);
        assert_abs_diff_eq!(adot[(1, 1)], lamdot, epsilon = 1e-8);
        assert_abs_diff_eq!(a[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn frame_identities() {
        let p = params(1.5, 1e-2);
        let a1 = Matrix3::new(1.1, 0.2, 0.0, -0.1, 0.9, 0.1, 0.0, 0.05, 1.0);
        let ivp = AffineIvp::new(p, Matrix3::identity(), a1, 20.0).unwrap();
        let traj = integrate(&ivp).unwrap();
        let f = traj.frame_at(7.0).unwrap();
        // det Λ = 1, det O = 1, Λ symmetric, Γ* trace-free.
        assert_abs_diff_eq!(f.lambda.determinant(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.o.determinant(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!((f.lambda - f.lambda.transpose()).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.gamma_star.trace(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((f.lambda * f.lambda_inv - Matrix3::identity()).norm(), 0.0, epsilon = 1e-11);
        // Eigenvalues positive with product 1.
        let prod: f64 = f.lambda_eigs.iter().product();
        assert!(f.lambda_eigs[0] > 0.0);
        assert_abs_diff_eq!(prod, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn frozen_background_time_maps_are_identity() {
        let p = params(1.5, 0.0);
        let ivp = AffineIvp::new(p, Matrix3::identity(), Matrix3::zeros(), 5.0)
            .unwrap()
            .allow_non_expanding();
        let traj = integrate(&ivp).unwrap();
        // A ≡ Id frozen: μ = 1, τ(t) = t, s(t) = t.
        for &t in &[0.5, 2.0, 5.0] {
            assert_abs_diff_eq!(traj.tau_of_t(t).unwrap(), t, epsilon = 1e-12);
            assert_abs_diff_eq!(traj.s_of_t(t).unwrap(), t, epsilon = 1e-12);
            assert_abs_diff_eq!(traj.t_of_tau(t).unwrap(), t, epsilon = 1e-10);
        }
    }

    #[test]
    fn tau_grows_logarithmically() {
        // Linear expansion A = (1+t) Id: τ(t) = log(1+t) exactly.
        let p = params(1.5, 0.0);
        let ivp = AffineIvp::new(p, Matrix3::identity(), Matrix3::identity(), 100.0).unwrap();
        let traj = integrate(&ivp).unwrap();
        for &t in &[1.0, 10.0, 99.0] {
            assert_abs_diff_eq!(traj.tau_of_t(t).unwrap(), (1.0 + t).ln(), epsilon = 1e-10);
        }
        // Round trip through the inverse map.
        let tau = traj.tau_of_t(42.0).unwrap();
        assert_abs_diff_eq!(traj.t_of_tau(tau).unwrap(), 42.0, epsilon = 1e-8);
        // s(t) for γ = 3/2: ds/dt = (1+t)^{3(1-3γ)/6·...}; det A = (1+t)^3,
        // exponent 3·(1-4.5)/6 = -1.75 ⇒ s(t) = (1-(1+t)^{-0.75})/0.75.
        let s = traj.s_of_t(10.0).unwrap();
        assert_abs_diff_eq!(s, (1.0 - 11.0f64.powf(-0.75)) / 0.75, epsilon = 1e-10);
    }

    #[test]
    fn expansion_rates_values() {
        // b = 2 Id, γ = 3/2: μ1 = 2, μ0 = (3γ-3)/2·μ1 = 1.5, μ2 = (5-3γ)/2·μ1 = 0.5·... = 0.5·2 = ... (5-4.5)/2·2 = 0.5.
        let r = expansion_rates(&(2.0 * Matrix3::identity()), 1.5).unwrap();
        assert_abs_diff_eq!(r.mu1, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.mu0, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.mu2, 0.5, epsilon = 1e-14);
        // μ2 → 0 as γ → 5/3.
        let r2 = expansion_rates(&Matrix3::identity(), 5.0 / 3.0 - 1e-9).unwrap();
        assert!(r2.mu2 > 0.0 && r2.mu2 < 1e-8);
        assert!(expansion_rates(&Matrix3::zeros(), 1.5).is_err());
    }

    #[test]
    fn decompose_linear_part_small_delta() {
        let p = params(1.5, 1e-3);
        let ivp = AffineIvp::new(p, Matrix3::identity(), Matrix3::identity(), 1000.0).unwrap();
        let traj = integrate(&ivp).unwrap();
        let lp = decompose_linear_part(&traj, 1e-3).unwrap();
        // ‖b - A1‖ = O(δ).
        assert!(lp.b_minus_a1 < 10.0 * 1e-3, "got {}", lp.b_minus_a1);
        assert!(lp.b_minus_a1 > 1e-5);
        // ‖Ä‖ ~ t^{2-3γ} = t^{-2.5}.
        let slope = lp.accel_decay_slope.unwrap();
        assert_abs_diff_eq!(slope, 2.0 - 3.0 * 1.5, epsilon = 0.05);
        // Short horizon refuses.
        let short = integrate(&AffineIvp::new(p, Matrix3::identity(), Matrix3::identity(), 2.0).unwrap()).unwrap();
        assert!(decompose_linear_part(&short, 1e-6).is_err());
    }
}
