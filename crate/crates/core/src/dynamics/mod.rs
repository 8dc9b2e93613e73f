//! Time evolution of the Lagrangian perturbation.
//!
//! The displacement `θ = η − y` of the gas relative to the expanding
//! background satisfies, in slow time τ,
//!
//! ```text
//! θ_ττ = −(μ_τ/μ) V − 2Γ* V
//!        − δ μ^{3−3γ} [ Λθ + (1+α)(∇w)·K + w divK ]
//!        − δ^α μ^{−1} Λ𝒢,
//! K^k_i = Λ_{ij}(𝒜^k_j 𝒥^{−1/α} − δ^k_j),
//! ```
//!
//! where the pressure is assembled in the w-divided form: the product rule
//! is applied analytically to `w^{−α}(w^{1+α}K^k_i),_k`, so only `w` and the
//! analytic `∇w = −2c_w y` appear and the scheme never divides by the
//! degenerate enthalpy. With the field term off, `θ = V = 0` is an exact
//! fixed point (affine motions solve the pure Euler system).
//!
//! Two modes: the spherically symmetric reduction in [`radial`] for
//! long-time quantitative runs, and the coarse full-3D stepper here for
//! short residual and vorticity studies with anisotropic `Λ` and `Γ*`.

pub mod radial;

pub use radial::StepperConfig;

use crate::affine::{AffineFrame, AffineTrajectory};
use crate::field::{force_field, ConvolutionConfig, ForceField, KernelSpec};
use crate::geometry::{flow_map_derivatives, BallGrid, FlowMapDerivatives, VectorField};
use crate::{Error, GasParams, Result};
use nalgebra::{Matrix3, Vector3};

/// Snapshot of the 3-D perturbation at one instant of slow time.
#[derive(Debug, Clone)]
pub struct PerturbationState {
    pub tau: f64,
    pub theta: VectorField,
    pub v: VectorField,
}

/// Acceleration `θ_ττ` of the full 3-D system.
///
/// `force` is the current nonlocal field (`None` = field term disabled).
pub fn perturbation_rhs(
    grid: &BallGrid,
    params: &GasParams,
    frame: &AffineFrame,
    theta: &VectorField,
    v: &VectorField,
    fmd: &FlowMapDerivatives,
    force: Option<&VectorField>,
) -> Result<VectorField> {
    let n = grid.n_nodes();
    let alpha = params.alpha();
    let cw = params.enthalpy_coeff();
    let lam = frame.lambda;
    let spring = params.delta * frame.mu.powf(3.0 - 3.0 * params.gamma);
    let force_coef = params.delta.powf(alpha) / frame.mu;

    // K^k_i = Λ_{ij}(𝒜^k_j 𝒥^{-1/α} − δ^k_j), stored as k-indexed rows.
    let mut k_field: [[Vec<f64>; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; n]));
    for idx in 0..n {
        let a = fmd.a_inv.at(idx);
        let jm = fmd.jac[idx].powf(-1.0 / alpha);
        let m = lam * (jm * a.transpose() - Matrix3::identity()); // (i,k) = Λ_{ij}(𝒜^k_j J^{-1/α} − δ^k_j)
        for k in 0..3 {
            for i in 0..3 {
                k_field[k][i][idx] = m[(i, k)];
            }
        }
    }
    // div K_i = ∂_k K^k_i.
    let mut div_k: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
    for i in 0..3 {
        for k in 0..3 {
            let dk = grid.partial(&k_field[k][i], k);
            for idx in 0..n {
                div_k[i][idx] += dk[idx];
            }
        }
    }

    let mut acc = VectorField::zeros(n);
    for idx in 0..n {
        let y = grid.nodes[idx];
        let vv = v.at(idx);
        let th = theta.at(idx);
        let mut a_vec = -(frame.mu_tau / frame.mu) * vv - 2.0 * (frame.gamma_star * vv);
        // Pressure: (1+α) w,_k K^k_i + w ∂_k K^k_i with w,_k = −2 c_w y_k.
        let mut pressure = Vector3::zeros();
        for i in 0..3 {
            let mut grad_w_k = 0.0;
            for k in 0..3 {
                grad_w_k += -2.0 * cw * y[k] * k_field[k][i][idx];
            }
            pressure[i] = (1.0 + alpha) * grad_w_k + grid.w[idx] * div_k[i][idx];
        }
        a_vec -= spring * (lam * th + pressure);
        if let Some(g) = force {
            a_vec -= force_coef * (lam * g.at(idx));
        }
        acc.set(idx, &a_vec);
    }
    Ok(acc)
}

/// Configuration of a short full-3D run.
#[derive(Debug, Clone, Copy)]
pub struct Full3dConfig {
    pub tau_max: f64,
    pub stepper: StepperConfig,
    /// Snapshots kept every this many steps (1 = all).
    pub snapshot_every: usize,
}

/// Per-step scalar diagnostics of a 3-D run.
#[derive(Debug, Clone, Copy)]
pub struct RunDiagnostics {
    pub tau: f64,
    pub t: f64,
    pub mu: f64,
    pub mass: f64,
    pub max_j_dev: f64,
    pub apriori_flag: bool,
}

/// Output of [`run_full3d`].
#[derive(Debug, Clone)]
pub struct Full3dRun {
    pub snapshots: Vec<PerturbationState>,
    pub diagnostics: Vec<RunDiagnostics>,
}

/// Evolve the full 3-D perturbation along an affine background trajectory.
///
/// The nonlocal force is refreshed every `stepper.force_cadence` steps and
/// linearly extrapolated in τ in between; within an RK4 step it is held
/// fixed (it depends on θ only, and θ moves by O(dτ) per step).
pub fn run_full3d(
    grid: &BallGrid,
    traj: &AffineTrajectory,
    conv_cfg: &ConvolutionConfig,
    theta0: &VectorField,
    v0: &VectorField,
    cfg: &Full3dConfig,
) -> Result<Full3dRun> {
    cfg.stepper.validate()?;
    let params = traj.ivp.params;
    let alpha = params.alpha();
    let max_w = params.enthalpy_coeff();
    let h_min = mesh_width(grid);

    let mut state = PerturbationState {
        tau: 0.0,
        theta: theta0.clone(),
        v: v0.clone(),
    };
    let mut snapshots = Vec::new();
    let mut diagnostics = Vec::new();
    let mut step_count = 0usize;

    // Force bookkeeping for the cadence/extrapolation policy.
    let mut force_prev: Option<(f64, VectorField)> = None;
    let mut force_curr: Option<(f64, VectorField)> = None;

    loop {
        let frame = traj.frame_at_tau(state.tau)?;
        let fmd = flow_map_derivatives(grid, &state.theta).map_err(|e| match e {
            Error::DegenerateMap(msg) => Error::Evolution {
                tau: state.tau,
                reason: format!("vacuum degeneracy: {msg}"),
            },
            other => other,
        })?;

        if cfg.stepper.field_enabled && step_count % cfg.stepper.force_cadence == 0 {
            let kernel = KernelSpec::new(frame.lambda)?;
            let ff: ForceField = force_field(grid, &params, &kernel, &state.theta, &fmd, conv_cfg)?;
            force_prev = force_curr.take();
            force_curr = Some((state.tau, ff.g));
        }

        record(
            grid,
            &params,
            &state,
            &frame,
            &fmd,
            step_count,
            cfg.snapshot_every,
            &mut snapshots,
            &mut diagnostics,
        );
        if state.tau >= cfg.tau_max {
            break;
        }

        let c_max = ((1.0 + alpha)
            * params.delta
            * frame.mu.powf(3.0 - 3.0 * params.gamma)
            * max_w)
            .sqrt()
            .max(1e-12);
        let dtau = (cfg.stepper.cfl * h_min / c_max)
            .min(cfg.stepper.max_dtau)
            .min(cfg.tau_max - state.tau)
            .max(1e-12);

        let force_at = |tau: f64| -> Option<VectorField> {
            match (&force_prev, &force_curr) {
                (Some((ta, fa)), Some((tb, fb))) if tb > ta => {
                    let lam = (tau - tb) / (tb - ta);
                    let mut out = fb.clone();
                    for c in 0..3 {
                        for idx in 0..out.c[c].len() {
                            out.c[c][idx] += lam * (fb.c[c][idx] - fa.c[c][idx]);
                        }
                    }
                    Some(out)
                }
                (_, Some((_, fb))) => Some(fb.clone()),
                _ => None,
            }
        };
        let force_now = if cfg.stepper.field_enabled {
            force_at(state.tau + 0.5 * dtau)
        } else {
            None
        };

        let fr_mid = traj.frame_at_tau(state.tau + 0.5 * dtau)?;
        let fr_end = traj.frame_at_tau(state.tau + dtau)?;
        let eval = |fr: &AffineFrame, th: &VectorField, vv: &VectorField| -> Result<VectorField> {
            let fmd_s = flow_map_derivatives(grid, th).map_err(|e| match e {
                Error::DegenerateMap(msg) => Error::Evolution {
                    tau: state.tau,
                    reason: format!("vacuum degeneracy in stage: {msg}"),
                },
                other => other,
            })?;
            perturbation_rhs(grid, &params, fr, th, vv, &fmd_s, force_now.as_ref())
        };

        let k1 = eval(&frame, &state.theta, &state.v)?;
        let th2 = axpy(&state.theta, &state.v, 0.5 * dtau);
        let v2 = axpy(&state.v, &k1, 0.5 * dtau);
        let k2 = eval(&fr_mid, &th2, &v2)?;
        let th3 = axpy(&state.theta, &v2, 0.5 * dtau);
        let v3 = axpy(&state.v, &k2, 0.5 * dtau);
        let k3 = eval(&fr_mid, &th3, &v3)?;
        let th4 = axpy(&state.theta, &v3, dtau);
        let v4 = axpy(&state.v, &k3, dtau);
        let k4 = eval(&fr_end, &th4, &v4)?;

        for c in 0..3 {
            for idx in 0..grid.n_nodes() {
                state.theta.c[c][idx] += dtau / 6.0
                    * (state.v.c[c][idx]
                        + 2.0 * v2.c[c][idx]
                        + 2.0 * v3.c[c][idx]
                        + v4.c[c][idx]);
                state.v.c[c][idx] += dtau / 6.0
                    * (k1.c[c][idx] + 2.0 * k2.c[c][idx] + 2.0 * k3.c[c][idx] + k4.c[c][idx]);
                if !state.theta.c[c][idx].is_finite() {
                    return Err(Error::Evolution {
                        tau: state.tau,
                        reason: "non-finite displacement".to_string(),
                    });
                }
            }
        }
        // Strip the unresolvable angular modes accumulated during the step;
        // see `BallGrid::angular_filter`.
        for c in 0..3 {
            grid.angular_filter(&mut state.theta.c[c]);
            grid.angular_filter(&mut state.v.c[c]);
        }
        state.tau += dtau;
        step_count += 1;
    }

    Ok(Full3dRun {
        snapshots,
        diagnostics,
    })
}

#[allow(clippy::too_many_arguments)]
fn record(
    grid: &BallGrid,
    params: &GasParams,
    state: &PerturbationState,
    frame: &AffineFrame,
    fmd: &FlowMapDerivatives,
    step_count: usize,
    snapshot_every: usize,
    snapshots: &mut Vec<PerturbationState>,
    diagnostics: &mut Vec<RunDiagnostics>,
) {
    if step_count % snapshot_every != 0 {
        return;
    }
    let alpha = params.alpha();
    let n = grid.n_nodes();
    // Eulerian mass via the Lagrangian change of variables.
    let mut integrand = vec![0.0; n];
    let det_a = frame.a.determinant();
    let mut max_j_dev = 0.0f64;
    let mut max_theta = 0.0f64;
    for idx in 0..n {
        let rho = params.delta.powf(alpha) * grid.w[idx].powf(alpha) / (det_a * fmd.jac[idx]);
        integrand[idx] = rho * det_a * fmd.jac[idx];
        max_j_dev = max_j_dev.max((fmd.jac[idx] - 1.0).abs());
        let dh = fmd.d_eta.at(idx) - Matrix3::identity();
        max_theta = max_theta.max(state.theta.at(idx).norm()).max(dh.norm());
    }
    let mass = grid.integrate(&integrand);
    diagnostics.push(RunDiagnostics {
        tau: state.tau,
        t: frame.t,
        mu: frame.mu,
        mass,
        max_j_dev,
        apriori_flag: max_theta >= 1.0 / 3.0 || max_j_dev >= 1.0 / 3.0,
    });
    snapshots.push(state.clone());
}

fn axpy(base: &VectorField, slope: &VectorField, dt: f64) -> VectorField {
    let n = base.c[0].len();
    let mut out = VectorField::zeros(n);
    for c in 0..3 {
        for idx in 0..n {
            out.c[c][idx] = base.c[c][idx] + dt * slope.c[c][idx];
        }
    }
    out
}

/// Smallest effective mesh width of the collocation grid. The angular
/// spacing shrinks with the radius (and, for the azimuth, with sin θ), so
/// near the centre the stability limit is set by `r·sinθ·Δφ`, not by the
/// radial node gaps.
fn mesh_width(grid: &BallGrid) -> f64 {
    let mut h = grid.r[0];
    for pair in grid.r.windows(2) {
        h = h.min(pair[1] - pair[0]);
    }
    h = h.min(1.0 - grid.r[grid.r.len() - 1]);
    let r_min = grid.r[0];
    let sin_min = grid
        .theta
        .iter()
        .map(|t| t.sin())
        .fold(f64::INFINITY, f64::min);
    let d_theta = std::f64::consts::PI / grid.spec.n_theta as f64;
    let d_phi = 2.0 * std::f64::consts::PI / grid.spec.n_phi as f64;
    h.min(r_min * d_theta).min(r_min * sin_min * d_phi)
}

/// One Eulerian sample reconstructed from a Lagrangian state.
#[derive(Debug, Clone, Copy)]
pub struct EulerianSample {
    /// Physical position `x = A η(y)`.
    pub x: Vector3<f64>,
    /// Physical density `det A^{-1} δ^α w^α 𝒥^{-1}`.
    pub rho: f64,
    /// Physical velocity `Ȧ η(y) + μ^{-1} A V(y)`.
    pub u: Vector3<f64>,
}

/// Reconstruct Eulerian fields at the grid nodes.
pub fn eulerian_reconstruct(
    grid: &BallGrid,
    params: &GasParams,
    state: &PerturbationState,
    frame: &AffineFrame,
    fmd: &FlowMapDerivatives,
) -> Vec<EulerianSample> {
    let alpha = params.alpha();
    let det_a = frame.a.determinant();
    (0..grid.n_nodes())
        .map(|idx| {
            let eta = grid.nodes[idx] + state.theta.at(idx);
            EulerianSample {
                x: frame.a * eta,
                rho: params.delta.powf(alpha) * grid.w[idx].powf(alpha) / (det_a * fmd.jac[idx]),
                u: frame.adot * eta + (frame.a * state.v.at(idx)) / frame.mu,
            }
        })
        .collect()
}
