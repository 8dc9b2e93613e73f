//! Spherically symmetric Lagrangian evolution.
//!
//! For isotropic backgrounds (`A0`, `A1` scalar multiples of the identity)
//! the shape matrix is `Λ = Id`, the rotational drift `Γ*` vanishes, and a
//! radial displacement `θ = ϑ(r) n` stays radial. With `χ(r) = r + ϑ(r)`
//! the flow map is `η = χ(r) n`, the deformation gradient is
//! `Dη = χ′ n⊗n + (χ/r)(Id − n⊗n)` and `𝒥 = χ′(χ/r)²`. The momentum
//! equation reduces to a 1-D degenerate wave equation with the exact
//! enclosed-mass force
//!
//! ```text
//! ϑ_ττ = −(μ_τ/μ) ϑ_τ − δ μ^{3−3γ} [ϑ + (1+α)w′ a + w (a′ + 2(a−b)/r)]
//!        − δ^α μ^{−1} c m(r)/χ²,
//! a = 𝒥^{−1/α}/χ′ − 1,   b = 𝒥^{−1/α} r/χ − 1,   m(r) = 4π∫₀^r s²w^α ds.
//! ```
//!
//! Because labels are Lagrangian the enclosed mass `m(r)` is constant in
//! time, so the nonlocal force costs `O(n)` per step and long-time runs are
//! cheap. This mode is the quantitative vehicle for the expansion and
//! scattering diagnostics; the full 3-D stepper exercises the anisotropic
//! structure on short runs.

use crate::affine::AffineTrajectory;
use crate::geometry::cutoff_psi;
use crate::numerics::{gauss_legendre_on, CompensatedSum};
use crate::{Error, GasParams, Result};

/// Uniform cell-centred radial grid on (0, 1): `r_j = (j + ½)h`, `h = 1/n`.
///
/// The offset keeps `r = 0` (coordinate centre) and `r = 1` (vacuum
/// boundary, where the enthalpy degenerates) off the grid.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub n: usize,
    pub h: f64,
    pub r: Vec<f64>,
    /// Enthalpy `w(r)` at the nodes.
    pub w: Vec<f64>,
    /// `w^α` at the nodes.
    pub wa: Vec<f64>,
    /// Enclosed mass `m(r_j) = 4π ∫₀^{r_j} s² w^α ds` (per-segment Gauss
    /// quadrature of the analytic integrand, accurate to round-off).
    pub m_enc: Vec<f64>,
    /// Boundary cutoff ψ(r) at the nodes.
    pub psi: Vec<f64>,
    params: GasParams,
}

impl RadialGrid {
    pub fn build(n: usize, params: &GasParams) -> Result<Self> {
        if n < 8 {
            return Err(Error::domain(format!("radial grid needs n >= 8, got {n}")));
        }
        let h = 1.0 / n as f64;
        let alpha = params.alpha();
        let cw = params.enthalpy_coeff();
        let r: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        let w: Vec<f64> = r.iter().map(|&x| cw * (1.0 - x * x)).collect();
        let wa: Vec<f64> = w.iter().map(|&x| x.powf(alpha)).collect();
        let psi: Vec<f64> = r.iter().map(|&x| cutoff_psi(x)).collect();
        let mut m_enc = Vec::with_capacity(n);
        let mut acc = 0.0;
        let mut prev = 0.0;
        let dens = |s: f64| {
            4.0 * std::f64::consts::PI * s * s * (cw * (1.0 - s * s)).max(0.0).powf(alpha)
        };
        for &rj in &r {
            let (sn, sw) = gauss_legendre_on(8, prev, rj);
            let mut seg = 0.0;
            for (&s, &ws) in sn.iter().zip(&sw) {
                seg += ws * dens(s);
            }
            acc += seg;
            m_enc.push(acc);
            prev = rj;
        }
        Ok(RadialGrid {
            n,
            h,
            r,
            w,
            wa,
            m_enc,
            psi,
            params: *params,
        })
    }

    /// 4th-order first derivative of a nodal profile (central 5-point
    /// stencil, one-sided at the edges).
    pub fn deriv(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let c = 1.0 / (12.0 * self.h);
        let mut out = vec![0.0; n];
        out[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
        out[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
        for j in 2..n - 2 {
            out[j] = c * (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]);
        }
        out[n - 2] =
            -c * (-3.0 * f[n - 1] - 10.0 * f[n - 2] + 18.0 * f[n - 3] - 6.0 * f[n - 4] + f[n - 5]);
        out[n - 1] = -c
            * (-25.0 * f[n - 1] + 48.0 * f[n - 2] - 36.0 * f[n - 3] + 16.0 * f[n - 4]
                - 3.0 * f[n - 5]);
        out
    }

    /// Midpoint-rule radial volume integral `4π ∫ r² f dr`.
    pub fn volume_integral(&self, f: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for (j, &v) in f.iter().enumerate() {
            acc.add(4.0 * std::f64::consts::PI * self.r[j] * self.r[j] * v * self.h);
        }
        acc.value()
    }

    /// Extrapolate a nodal profile to `r = 1` (cubic through the last four
    /// nodes).
    pub fn boundary_value(&self, f: &[f64]) -> f64 {
        extrapolate_cubic(&self.r[self.n - 4..], &f[self.n - 4..], 1.0)
    }

    /// Extrapolate a nodal profile to `r = 0`.
    pub fn center_value(&self, f: &[f64]) -> f64 {
        extrapolate_cubic(&self.r[..4], &f[..4], 0.0)
    }
}

fn extrapolate_cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    // Lagrange interpolation through four points.
    let mut acc = 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if i != j {
                l *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += l * ys[i];
    }
    acc
}

/// State of the radial perturbation: displacement and its τ-derivative.
#[derive(Debug, Clone)]
pub struct RadialState {
    pub tau: f64,
    pub thet: Vec<f64>,
    pub v: Vec<f64>,
}

/// One monitoring row of a radial run.
#[derive(Debug, Clone, Copy)]
pub struct RadialSample {
    pub tau: f64,
    pub t: f64,
    pub mu: f64,
    /// Instantaneous (non-supremum) order-0 energy functional.
    pub s_norm: f64,
    /// Vorticity functional (identically 0 for radial fields).
    pub b_norm: f64,
    pub d_norm: f64,
    /// Reconstructed Eulerian mass.
    pub mass: f64,
    pub max_j_dev: f64,
    pub apriori_flag: bool,
    /// Eulerian boundary radius `μ χ(1)`.
    pub boundary_radius: f64,
    /// Eulerian centre density.
    pub center_density: f64,
}

/// Stepper policy shared by the radial and 3-D modes.
#[derive(Debug, Clone, Copy)]
pub struct StepperConfig {
    /// CFL number in (0, 1].
    pub cfl: f64,
    pub max_dtau: f64,
    /// Steps between force re-evaluations (1 = every step). The radial
    /// force is cheap, so the radial mode always refreshes.
    pub force_cadence: usize,
    pub field_enabled: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            cfl: 0.6,
            max_dtau: 0.05,
            force_cadence: 1,
            field_enabled: true,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::domain(format!("CFL number {} not in (0, 1]", self.cfl)));
        }
        if self.force_cadence == 0 {
            return Err(Error::domain("force cadence must be >= 1".to_string()));
        }
        if !(self.max_dtau > 0.0) {
            return Err(Error::domain("max_dtau must be positive".to_string()));
        }
        Ok(())
    }
}

/// Geometry of the radial flow map at one instant.
struct RadialMap {
    chi: Vec<f64>,
    chi_p: Vec<f64>,
    jac: Vec<f64>,
}

fn radial_map(grid: &RadialGrid, thet: &[f64]) -> Result<RadialMap> {
    let n = grid.n;
    let mut chi = vec![0.0; n];
    for j in 0..n {
        chi[j] = grid.r[j] + thet[j];
    }
    let tp = grid.deriv(thet);
    let mut chi_p = vec![0.0; n];
    let mut jac = vec![0.0; n];
    for j in 0..n {
        chi_p[j] = 1.0 + tp[j];
        let ratio = chi[j] / grid.r[j];
        jac[j] = chi_p[j] * ratio * ratio;
        if !(jac[j] > 0.0) || chi[j] <= 0.0 {
            return Err(Error::DegenerateMap(format!(
                "radial jacobian {:.3e} at r = {:.4}",
                jac[j], grid.r[j]
            )));
        }
    }
    Ok(RadialMap { chi, chi_p, jac })
}

/// Acceleration `ϑ_ττ` of the radial perturbation.
///
/// `mu`, `mu_tau` come from the isotropic background frame; the field term
/// can be disabled to study the pure-Euler fixed point.
pub fn radial_rhs(
    grid: &RadialGrid,
    params: &GasParams,
    mu: f64,
    mu_tau: f64,
    state_thet: &[f64],
    state_v: &[f64],
    field_enabled: bool,
) -> Result<Vec<f64>> {
    let n = grid.n;
    let alpha = params.alpha();
    let cw = params.enthalpy_coeff();
    let gamma = params.gamma;
    let delta = params.delta;
    let map = radial_map(grid, state_thet)?;

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for j in 0..n {
        let jm = map.jac[j].powf(-1.0 / alpha);
        a[j] = jm / map.chi_p[j] - 1.0;
        b[j] = jm * grid.r[j] / map.chi[j] - 1.0;
    }
    let a_p = grid.deriv(&a);

    let spring = delta * mu.powf(3.0 - 3.0 * gamma);
    let force_coef = delta.powf(alpha) / mu * params.field_sign.c();
    let mut acc = vec![0.0; n];
    for j in 0..n {
        let r = grid.r[j];
        // Pressure in the w-divided form: w′ = −2 c_w r is analytic, so no
        // negative power of w appears near the vacuum boundary.
        let pressure = (1.0 + alpha) * (-2.0 * cw * r) * a[j]
            + grid.w[j] * (a_p[j] + 2.0 * (a[j] - b[j]) / r);
        let mut acc_j = -(mu_tau / mu) * state_v[j] - spring * (state_thet[j] + pressure);
        if field_enabled {
            acc_j -= force_coef * grid.m_enc[j] / (map.chi[j] * map.chi[j]);
        }
        acc[j] = acc_j;
    }
    Ok(acc)
}

/// Result of a radial run: monitoring series plus final state.
#[derive(Debug, Clone)]
pub struct RadialRun {
    pub series: Vec<RadialSample>,
    pub final_state: RadialState,
    /// Running supremum of the instantaneous energy functional.
    pub sup_s_norm: f64,
}

/// Evolve the radial perturbation along an isotropic affine background.
///
/// The trajectory must come from scalar multiples of the identity (checked);
/// `tau_max` is in slow time. Samples are appended every `sample_every`
/// accepted steps.
pub fn run_radial(
    grid: &RadialGrid,
    traj: &AffineTrajectory,
    theta0: &[f64],
    v0: &[f64],
    tau_max: f64,
    stepper: &StepperConfig,
    sample_every: usize,
) -> Result<RadialRun> {
    stepper.validate()?;
    let params = traj.ivp.params;
    let a0 = traj.ivp.a0;
    let iso_dev = (a0 - nalgebra::Matrix3::identity() * a0[(0, 0)]).norm()
        + (traj.ivp.a1 - nalgebra::Matrix3::identity() * traj.ivp.a1[(0, 0)]).norm();
    if iso_dev > 1e-12 * (1.0 + a0.norm()) {
        return Err(Error::domain(
            "radial mode requires isotropic A0, A1 (scalar multiples of the identity)".to_string(),
        ));
    }
    let alpha = params.alpha();
    let mut state = RadialState {
        tau: 0.0,
        thet: theta0.to_vec(),
        v: v0.to_vec(),
    };
    let max_w = grid.params.enthalpy_coeff();
    let mut series = Vec::new();
    let mut sup_s = 0.0f64;
    let mut step_count = 0usize;

    let mut push_sample = |state: &RadialState, sup_s: &mut f64| -> Result<()> {
        let frame = traj.frame_at_tau(state.tau)?;
        let sample = radial_sample(grid, &params, state, frame.t, frame.mu)?;
        *sup_s = sup_s.max(sample.s_norm);
        series.push(sample);
        Ok(())
    };
    push_sample(&state, &mut sup_s)?;

    while state.tau < tau_max {
        let frame = traj.frame_at_tau(state.tau)?;
        let (mu, mu_tau) = (frame.mu, frame.mu_tau);
        // Linearised sound speed of the degenerate pressure operator.
        let c_max = ((1.0 + alpha) * params.delta * mu.powf(3.0 - 3.0 * params.gamma) * max_w)
            .sqrt()
            .max(1e-12);
        let dtau = (stepper.cfl * grid.h / c_max)
            .min(stepper.max_dtau)
            .min(tau_max - state.tau)
            .max(1e-12);
        // Classic RK4 in τ; the frame varies slowly on a CFL step, so it is
        // held per stage pair (midpoint frame for the inner stages).
        let fr_mid = traj.frame_at_tau(state.tau + 0.5 * dtau)?;
        let fr_end = traj.frame_at_tau(state.tau + dtau)?;
        let rhs = |mu: f64, mu_tau: f64, th: &[f64], v: &[f64]| -> Result<Vec<f64>> {
            radial_rhs(grid, &params, mu, mu_tau, th, v, stepper.field_enabled)
        };
        let k1a = rhs(mu, mu_tau, &state.thet, &state.v)?;
        let (th2, v2) = advance(&state.thet, &state.v, &state.v, &k1a, 0.5 * dtau);
        let k2a = rhs(fr_mid.mu, fr_mid.mu_tau, &th2, &v2)?;
        let (th3, v3) = advance(&state.thet, &state.v, &v2, &k2a, 0.5 * dtau);
        let k3a = rhs(fr_mid.mu, fr_mid.mu_tau, &th3, &v3)?;
        let (th4, v4) = advance(&state.thet, &state.v, &v3, &k3a, dtau);
        let k4a = rhs(fr_end.mu, fr_end.mu_tau, &th4, &v4)?;
        for j in 0..grid.n {
            state.thet[j] += dtau / 6.0
                * (state.v[j] + 2.0 * v2[j] + 2.0 * v3[j] + v4[j]);
            state.v[j] += dtau / 6.0 * (k1a[j] + 2.0 * k2a[j] + 2.0 * k3a[j] + k4a[j]);
        }
        state.tau += dtau;
        if state.thet.iter().any(|x| !x.is_finite()) {
            return Err(Error::Evolution {
                tau: state.tau,
                reason: "non-finite displacement".to_string(),
            });
        }
        step_count += 1;
        if step_count % sample_every == 0 || state.tau >= tau_max {
            push_sample(&state, &mut sup_s)?;
        }
    }
    Ok(RadialRun {
        series,
        final_state: state,
        sup_s_norm: sup_s,
    })
}

fn advance(
    th0: &[f64],
    v0: &[f64],
    v_slope: &[f64],
    a_slope: &[f64],
    dt: f64,
) -> (Vec<f64>, Vec<f64>) {
    let th = th0
        .iter()
        .zip(v_slope)
        .map(|(&t, &v)| t + dt * v)
        .collect();
    let v = v0.iter().zip(a_slope).map(|(&v, &a)| v + dt * a).collect();
    (th, v)
}

/// Instantaneous order-0 monitors of a radial state.
fn radial_sample(
    grid: &RadialGrid,
    params: &GasParams,
    state: &RadialState,
    t: f64,
    mu: f64,
) -> Result<RadialSample> {
    let n = grid.n;
    let alpha = params.alpha();
    let map = radial_map(grid, &state.thet)?;
    // S⁰ pieces: for N = 0 the ψ- and (1−ψ)-weighted contributions share the
    // same weights, so they combine into plain w^α / w^{α+1} norms.
    let mut f_v = vec![0.0; n];
    let mut f_th = vec![0.0; n];
    let mut f_grad = vec![0.0; n];
    let mut f_div = vec![0.0; n];
    let tp = grid.deriv(&state.thet);
    let mut max_j_dev = 0.0f64;
    let mut max_theta = 0.0f64;
    for j in 0..n {
        let wk = grid.w[j].powf(alpha);
        let wk1 = grid.w[j].powf(alpha + 1.0);
        f_v[j] = wk * state.v[j] * state.v[j];
        f_th[j] = wk * state.thet[j] * state.thet[j];
        let g_rr = tp[j] / map.chi_p[j]; // [∇_ηθ] radial entry ϑ′/χ′
        let g_tt = state.thet[j] / map.chi[j];
        f_grad[j] = wk1 * (g_rr * g_rr + 2.0 * g_tt * g_tt);
        let div = g_rr + 2.0 * g_tt;
        f_div[j] = wk1 * div * div;
        max_j_dev = max_j_dev.max((map.jac[j] - 1.0).abs());
        max_theta = max_theta
            .max(state.thet[j].abs())
            .max(tp[j].abs());
    }
    let mu_fac = mu.powf(3.0 * params.gamma - 3.0) / params.delta;
    let v_norm = grid.volume_integral(&f_v);
    let s_norm = mu_fac * v_norm
        + grid.volume_integral(&f_th)
        + grid.volume_integral(&f_grad)
        + grid.volume_integral(&f_div);
    let d_norm = (5.0 - 3.0 * params.gamma) * mu_fac * v_norm;
    // Eulerian mass: 4π ∫ x²ρ dx with x = μχ, ρ = μ^{-3} δ^α w^α 𝒥^{-1}.
    let mut mass_f = vec![0.0; n];
    for j in 0..n {
        let x_sq = map.chi[j] * map.chi[j];
        mass_f[j] = params.delta.powf(alpha) * grid.wa[j] / map.jac[j] * x_sq * map.chi_p[j]
            / (grid.r[j] * grid.r[j]);
    }
    let mass = grid.volume_integral(&mass_f);
    let apriori = max_theta >= 1.0 / 3.0 || max_j_dev >= 1.0 / 3.0;
    let boundary_radius = mu * grid.boundary_value(&map.chi);
    let center_density =
        params.delta.powf(alpha) * params.enthalpy_coeff().powf(alpha)
            / (mu.powi(3) * grid.center_value(&map.jac));
    Ok(RadialSample {
        tau: state.tau,
        t,
        mu,
        s_norm,
        b_norm: 0.0,
        d_norm,
        mass,
        max_j_dev,
        apriori_flag: apriori,
        boundary_radius,
        center_density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{integrate, AffineIvp};
    use crate::{FieldSign, GasParams};
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix3;

    fn iso_traj(params: GasParams, t_end: f64) -> AffineTrajectory {
        let ivp = AffineIvp::new(
            params,
            Matrix3::identity(),
            Matrix3::identity(),
            t_end,
        )
        .unwrap();
        integrate(&ivp).unwrap()
    }

    #[test]
    fn enclosed_mass_oracle() {
        // γ = 2: m(r) = 4π c_w (r³/3 − r⁵/5), c_w = 1/4.
        let p = GasParams::new(2.0, 1e-2, FieldSign::Attractive).unwrap();
        let g = RadialGrid::build(64, &p).unwrap();
        for j in [0, 20, 63] {
            let r = g.r[j];
            let exact = std::f64::consts::PI * (r.powi(3) / 3.0 - r.powi(5) / 5.0);
            assert_abs_diff_eq!(g.m_enc[j], exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn fd4_derivative_is_fourth_order_exact_on_cubics() {
        let p = GasParams::new(1.5, 1e-2, FieldSign::Attractive).unwrap();
        let g = RadialGrid::build(32, &p).unwrap();
        let f: Vec<f64> = g.r.iter().map(|&x| 1.0 + x + x * x * x).collect();
        let d = g.deriv(&f);
        for j in 0..g.n {
            assert_abs_diff_eq!(d[j], 1.0 + 3.0 * g.r[j] * g.r[j], epsilon = 1e-11);
        }
    }

    #[test]
    fn zero_data_without_field_is_fixed_point() {
        let p = GasParams::new(1.5, 1e-2, FieldSign::Attractive).unwrap();
        let g = RadialGrid::build(48, &p).unwrap();
        let traj = iso_traj(p, 200.0);
        let stepper = StepperConfig {
            field_enabled: false,
            ..Default::default()
        };
        let run = run_radial(
            &g,
            &traj,
            &vec![0.0; g.n],
            &vec![0.0; g.n],
            1.0,
            &stepper,
            10,
        )
        .unwrap();
        assert!(run.sup_s_norm <= 1e-24, "S-norm {}", run.sup_s_norm);
        assert!(run
            .final_state
            .thet
            .iter()
            .all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn mass_is_conserved_for_both_signs() {
        let p0 = GasParams::new(1.5, 1e-2, FieldSign::Attractive).unwrap();
        for sign in [FieldSign::Attractive, FieldSign::Repulsive] {
            let p = GasParams::new(1.5, 1e-2, sign).unwrap();
            let g = RadialGrid::build(48, &p).unwrap();
            let traj = iso_traj(p, 500.0);
            let run = run_radial(
                &g,
                &traj,
                &vec![0.0; g.n],
                &vec![0.0; g.n],
                2.0,
                &StepperConfig::default(),
                5,
            )
            .unwrap();
            let m0 = run.series[0].mass;
            for s in &run.series {
                assert!(
                    ((s.mass - m0) / m0).abs() < 1e-9,
                    "mass drift {:.3e}",
                    (s.mass - m0) / m0
                );
            }
        }
        // The γ = 3/2 mass oracle from the static profile: δ² 4π/36 · 8/105.
        let g = RadialGrid::build(48, &p0).unwrap();
        let traj = iso_traj(p0, 10.0);
        let run = run_radial(
            &g,
            &traj,
            &vec![0.0; g.n],
            &vec![0.0; g.n],
            0.05,
            &StepperConfig::default(),
            1,
        )
        .unwrap();
        let exact = p0.delta.powi(2) * 4.0 * std::f64::consts::PI / 36.0 * 8.0 / 105.0;
        assert_abs_diff_eq!(run.series[0].mass / exact, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn opposite_signs_give_opposite_initial_response() {
        let g_p = GasParams::new(1.5, 1e-2, FieldSign::Attractive).unwrap();
        let g_m = GasParams::new(1.5, 1e-2, FieldSign::Repulsive).unwrap();
        let grid = RadialGrid::build(32, &g_p).unwrap();
        let z = vec![0.0; grid.n];
        let a_p = radial_rhs(&grid, &g_p, 1.0, 1.0, &z, &z, true).unwrap();
        let a_m = radial_rhs(&grid, &g_m, 1.0, 1.0, &z, &z, true).unwrap();
        for j in 0..grid.n {
            assert_abs_diff_eq!(a_p[j], -a_m[j], epsilon = 1e-15);
            // Attractive coupling accelerates inward at zero data.
            assert!(a_p[j] < 0.0);
        }
    }

    #[test]
    fn boundary_radius_grows_linearly() {
        let p = GasParams::new(1.5, 1e-2, FieldSign::Attractive).unwrap();
        let g = RadialGrid::build(48, &p).unwrap();
        let traj = iso_traj(p, 2.0e3);
        let tau_max = traj.tau_of_t(1.5e3).unwrap();
        let run = run_radial(
            &g,
            &traj,
            &vec![0.0; g.n],
            &vec![0.0; g.n],
            tau_max,
            &StepperConfig::default(),
            5,
        )
        .unwrap();
        // Fit R(t) over the last time decade.
        let t_hi = run.series.last().unwrap().t;
        let pts: Vec<(f64, f64)> = run
            .series
            .iter()
            .filter(|s| s.t >= 0.1 * t_hi)
            .map(|s| (s.t, s.boundary_radius))
            .collect();
        assert!(pts.len() > 10);
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (slope, intercept) = crate::numerics::least_squares_line(&xs, &ys);
        let r2 = crate::numerics::r_squared(&xs, &ys, slope, intercept);
        assert!(r2 > 0.9999, "R² = {r2}");
        // Slope ≈ μ1 (1 + ϑ_r(∞)) with ϑ small: within a few % of μ1 = 1.
        assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    }
}
