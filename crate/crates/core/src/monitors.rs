//! Weighted norms and residual monitors of the perturbation.
//!
//! The order-`N` energy functional combines boundary-adapted derivatives
//! (`X_r = r∂_r` and the tangential generators `∂̸_{ji}`) weighted by powers
//! of the degenerate enthalpy `w` near the vacuum boundary with plain
//! Cartesian derivatives in the interior, split by the cutoff `ψ`:
//!
//! ```text
//! S^N = Σ_{a+|β|≤N} { δ^{-1}μ^{3γ-3}‖X_r^a∂̸^β V‖²_{a+α,ψ} + ‖X_r^a∂̸^β θ‖²_{a+α,ψ}
//!                     + ‖∇_η X_r^a∂̸^β θ‖²_{a+α+1,ψ} + ‖div_η X_r^a∂̸^β θ‖²_{a+α+1,ψ} }
//!     + Σ_{|ν|≤N}    { δ^{-1}μ^{3γ-3}‖∂^ν V‖²_{α,1-ψ} + ‖∂^ν θ‖²_{α,1-ψ}
//!                     + ‖∇_η ∂^ν θ‖²_{α+1,1-ψ} + ‖div_η ∂^ν θ‖²_{α+1,1-ψ} },
//! ```
//!
//! with `‖f‖²_{k,g} = ∫_B w^k |f|² g dy`. The vorticity functional `B^N`
//! applies `Curl_{Λ𝒜}` to the same derivative stack of `V` (weight
//! `w^{a+α+1}`), and the dissipation is
//! `D^N = (5−3γ)/δ · μ^{3γ-3} × (the V-part of the S integrand)`, positive
//! for γ < 5/3. Supremum-over-time bookkeeping belongs to the time-series
//! layer; everything here is an instantaneous snapshot evaluation.

use crate::affine::AffineTrajectory;
use crate::dynamics::PerturbationState;
use crate::geometry::{flow_map_derivatives, BallGrid, FlowMapDerivatives, VectorField};
use crate::{Error, GasParams, Result};
use nalgebra::Matrix3;

/// The tangential generators as (j, i) pairs of `∂̸_{ji} = y_j∂_i − y_i∂_j`.
const GENERATORS: [(usize, usize); 3] = [(0, 1), (2, 0), (1, 2)];

/// All (a, β) with `a + β₁ + β₂ + β₃ ≤ n`.
fn boundary_indices(n: usize) -> Vec<(usize, [usize; 3])> {
    let mut out = Vec::new();
    for a in 0..=n {
        for b1 in 0..=n - a {
            for b2 in 0..=n - a - b1 {
                for b3 in 0..=n - a - b1 - b2 {
                    out.push((a, [b1, b2, b3]));
                }
            }
        }
    }
    out
}

/// All Cartesian ν with `|ν| ≤ n`.
fn interior_indices(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for n1 in 0..=n {
        for n2 in 0..=n - n1 {
            for n3 in 0..=n - n1 - n2 {
                out.push([n1, n2, n3]);
            }
        }
    }
    out
}

/// Apply `X_r^a ∂̸^β` componentwise (fixed generator order; `X_r` commutes
/// with every `∂̸`).
fn boundary_derivative(grid: &BallGrid, f: &VectorField, a: usize, beta: [usize; 3]) -> VectorField {
    let mut out = f.clone();
    for (g, &count) in beta.iter().enumerate() {
        let (j, i) = GENERATORS[g];
        for _ in 0..count {
            for c in 0..3 {
                out.c[c] = grid.dslash(&out.c[c], j, i);
            }
        }
    }
    for _ in 0..a {
        for c in 0..3 {
            out.c[c] = grid.xr(&out.c[c]);
        }
    }
    out
}

/// Apply `∂^ν` componentwise.
fn interior_derivative(grid: &BallGrid, f: &VectorField, nu: [usize; 3]) -> VectorField {
    let mut out = f.clone();
    for (axis, &count) in nu.iter().enumerate() {
        for _ in 0..count {
            for c in 0..3 {
                out.c[c] = grid.partial(&out.c[c], axis);
            }
        }
    }
    out
}

/// `∇_η` and `div_η` of a vector field, returned as (nine gradient
/// components, divergence).
fn eta_derivatives(
    grid: &BallGrid,
    f: &VectorField,
    fmd: &FlowMapDerivatives,
) -> ([[Vec<f64>; 3]; 3], Vec<f64>) {
    let n = grid.n_nodes();
    let df: [VectorField; 3] = std::array::from_fn(|i| grid.cartesian_gradient(&f.c[i]));
    let mut grad: [[Vec<f64>; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; n]));
    let mut div = vec![0.0; n];
    for idx in 0..n {
        let a = fmd.a_inv.at(idx);
        let d = Matrix3::from_fn(|i, s| df[i].c[s][idx]);
        let g = d * a;
        for i in 0..3 {
            for j in 0..3 {
                grad[i][j][idx] = g[(i, j)];
            }
        }
        div[idx] = g.trace();
    }
    (grad, div)
}

/// `Curl_{Λ𝒜}` of a vector field as six independent component fields
/// (upper triangle of the antisymmetric matrix).
fn lambda_curl(
    grid: &BallGrid,
    f: &VectorField,
    fmd: &FlowMapDerivatives,
    lambda: &Matrix3<f64>,
) -> [Vec<f64>; 3] {
    let n = grid.n_nodes();
    let df: [VectorField; 3] = std::array::from_fn(|i| grid.cartesian_gradient(&f.c[i]));
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
    for idx in 0..n {
        let a = fmd.a_inv.at(idx);
        let d = Matrix3::from_fn(|i, s| df[i].c[s][idx]);
        let gl = d * a * lambda;
        let c = gl - gl.transpose();
        out[0][idx] = c[(0, 1)];
        out[1][idx] = c[(0, 2)];
        out[2][idx] = c[(1, 2)];
    }
    out
}

/// Breakdown of the order-`N` energy functional.
#[derive(Debug, Clone, Copy)]
pub struct NormReport {
    pub total: f64,
    /// δ^{-1}μ^{3γ-3}-weighted velocity contribution.
    pub v_part: f64,
    /// Zeroth-order displacement contribution.
    pub theta_part: f64,
    /// ∇_η / div_η contribution.
    pub grad_part: f64,
    /// Interior (1−ψ) share of the total.
    pub interior_part: f64,
}

/// Instantaneous order-`N` energy functional `S^N` (no time supremum).
pub fn energy_norm(
    grid: &BallGrid,
    params: &GasParams,
    mu: f64,
    theta: &VectorField,
    v: &VectorField,
    fmd: &FlowMapDerivatives,
    n: usize,
) -> NormReport {
    let alpha = params.alpha();
    let mu_fac = mu.powf(3.0 * params.gamma - 3.0) / params.delta;
    let psi = &grid.psi;
    let one_minus_psi: Vec<f64> = psi.iter().map(|&p| 1.0 - p).collect();

    let mut v_part = 0.0;
    let mut theta_part = 0.0;
    let mut grad_part = 0.0;
    let mut interior_part = 0.0;

    for (a, beta) in boundary_indices(n) {
        let k = a as f64 + alpha;
        let dv = boundary_derivative(grid, v, a, beta);
        let dth = boundary_derivative(grid, theta, a, beta);
        let comps_v: Vec<&[f64]> = dv.c.iter().map(|c| c.as_slice()).collect();
        let comps_t: Vec<&[f64]> = dth.c.iter().map(|c| c.as_slice()).collect();
        v_part += mu_fac * grid.weighted_norm_sq(&comps_v, k, psi);
        theta_part += grid.weighted_norm_sq(&comps_t, k, psi);
        let (gr, dv_eta) = eta_derivatives(grid, &dth, fmd);
        let mut g_comps: Vec<&[f64]> = Vec::with_capacity(9);
        for row in &gr {
            for c in row {
                g_comps.push(c.as_slice());
            }
        }
        grad_part += grid.weighted_norm_sq(&g_comps, k + 1.0, psi);
        grad_part += grid.weighted_norm_sq(&[dv_eta.as_slice()], k + 1.0, psi);
    }
    for nu in interior_indices(n) {
        let dv = interior_derivative(grid, v, nu);
        let dth = interior_derivative(grid, theta, nu);
        let comps_v: Vec<&[f64]> = dv.c.iter().map(|c| c.as_slice()).collect();
        let comps_t: Vec<&[f64]> = dth.c.iter().map(|c| c.as_slice()).collect();
        interior_part += mu_fac * grid.weighted_norm_sq(&comps_v, alpha, &one_minus_psi);
        interior_part += grid.weighted_norm_sq(&comps_t, alpha, &one_minus_psi);
        let (gr, dv_eta) = eta_derivatives(grid, &dth, fmd);
        let mut g_comps: Vec<&[f64]> = Vec::with_capacity(9);
        for row in &gr {
            for c in row {
                g_comps.push(c.as_slice());
            }
        }
        interior_part += grid.weighted_norm_sq(&g_comps, alpha + 1.0, &one_minus_psi);
        interior_part += grid.weighted_norm_sq(&[dv_eta.as_slice()], alpha + 1.0, &one_minus_psi);
    }
    NormReport {
        total: v_part + theta_part + grad_part + interior_part,
        v_part,
        theta_part,
        grad_part,
        interior_part,
    }
}

/// Instantaneous modified-vorticity functional `B^N[F]`.
pub fn vorticity_norm(
    grid: &BallGrid,
    f: &VectorField,
    fmd: &FlowMapDerivatives,
    lambda: &Matrix3<f64>,
    n: usize,
) -> f64 {
    let alpha = grid.params.alpha();
    let psi = &grid.psi;
    let one_minus_psi: Vec<f64> = psi.iter().map(|&p| 1.0 - p).collect();
    let mut total = 0.0;
    for (a, beta) in boundary_indices(n) {
        let df = boundary_derivative(grid, f, a, beta);
        let curl = lambda_curl(grid, &df, fmd, lambda);
        // The antisymmetric matrix has each off-diagonal pair twice.
        let comps: Vec<&[f64]> = curl.iter().map(|c| c.as_slice()).collect();
        total += 2.0 * grid.weighted_norm_sq(&comps, a as f64 + alpha + 1.0, psi);
    }
    for nu in interior_indices(n) {
        let df = interior_derivative(grid, f, nu);
        let curl = lambda_curl(grid, &df, fmd, lambda);
        let comps: Vec<&[f64]> = curl.iter().map(|c| c.as_slice()).collect();
        total += 2.0 * grid.weighted_norm_sq(&comps, alpha + 1.0, &one_minus_psi);
    }
    total
}

/// Dissipation functional `D^N`, positive only for γ < 5/3.
pub fn dissipation(
    grid: &BallGrid,
    params: &GasParams,
    mu: f64,
    v: &VectorField,
    n: usize,
) -> Result<f64> {
    if params.gamma >= 5.0 / 3.0 {
        return Err(Error::domain(format!(
            "dissipation functional loses positivity for gamma = {} >= 5/3",
            params.gamma
        )));
    }
    let alpha = params.alpha();
    let pre = (5.0 - 3.0 * params.gamma) / params.delta * mu.powf(3.0 * params.gamma - 3.0);
    let psi = &grid.psi;
    let one_minus_psi: Vec<f64> = psi.iter().map(|&p| 1.0 - p).collect();
    let mut total = 0.0;
    for (a, beta) in boundary_indices(n) {
        let dv = boundary_derivative(grid, v, a, beta);
        let comps: Vec<&[f64]> = dv.c.iter().map(|c| c.as_slice()).collect();
        total += grid.weighted_norm_sq(&comps, a as f64 + alpha, psi);
    }
    for nu in interior_indices(n) {
        let dv = interior_derivative(grid, v, nu);
        let comps: Vec<&[f64]> = dv.c.iter().map(|c| c.as_slice()).collect();
        total += grid.weighted_norm_sq(&comps, alpha, &one_minus_psi);
    }
    Ok(pre * total)
}

/// Residual of the vorticity transport equation
/// `Curl_{Λ𝒜}V_τ + (μ_τ/μ)Curl_{Λ𝒜}V + 2Curl_{Λ𝒜}(Γ*V) = 0`
/// from consecutive snapshots (central τ-stencil of width `stride`).
///
/// Returns `(τ, weighted L² residual)` for each interior snapshot.
pub fn curl_transport_residual(
    grid: &BallGrid,
    traj: &AffineTrajectory,
    snapshots: &[PerturbationState],
    stride: usize,
) -> Result<Vec<(f64, f64)>> {
    if snapshots.len() < 2 * stride + 1 {
        return Err(Error::domain(format!(
            "need at least {} snapshots for stride {stride}, got {}",
            2 * stride + 1,
            snapshots.len()
        )));
    }
    let alpha = grid.params.alpha();
    let n = grid.n_nodes();
    let mut out = Vec::new();
    let ones = vec![1.0; n];
    for i in stride..snapshots.len() - stride {
        let sp = &snapshots[i + stride];
        let sm = &snapshots[i - stride];
        let s0 = &snapshots[i];
        let dtau = sp.tau - sm.tau;
        let frame = traj.frame_at_tau(s0.tau)?;
        let fmd = flow_map_derivatives(grid, &s0.theta)?;
        // F = V_τ + (μ_τ/μ)V + 2Γ*V, then Curl_{Λ𝒜}F.
        let mut f = VectorField::zeros(n);
        for idx in 0..n {
            let vdot = (sp.v.at(idx) - sm.v.at(idx)) / dtau;
            let val = vdot
                + (frame.mu_tau / frame.mu) * s0.v.at(idx)
                + 2.0 * (frame.gamma_star * s0.v.at(idx));
            f.set(idx, &val);
        }
        let curl = lambda_curl(grid, &f, &fmd, &frame.lambda);
        let comps: Vec<&[f64]> = curl.iter().map(|c| c.as_slice()).collect();
        let res = (2.0 * grid.weighted_norm_sq(&comps, alpha + 1.0, &ones)).sqrt();
        out.push((s0.tau, res));
    }
    Ok(out)
}

/// Least-squares exponent of `log(value)` vs τ over the trailing
/// `window_frac` of the series. Returns `(exponent, R²)`.
pub fn decay_fit(taus: &[f64], values: &[f64], window_frac: f64) -> Result<(f64, f64)> {
    if taus.len() != values.len() || taus.len() < 10 {
        return Err(Error::domain(format!(
            "decay fit needs >= 10 samples, got {}",
            taus.len()
        )));
    }
    let start = ((taus.len() as f64) * (1.0 - window_frac)).floor() as usize;
    let xs: Vec<f64> = taus[start..].to_vec();
    let mut ys = Vec::with_capacity(xs.len());
    for &v in &values[start..] {
        if v <= 0.0 {
            return Err(Error::domain(
                "decay fit refused: non-positive value in window".to_string(),
            ));
        }
        ys.push(v.ln());
    }
    let (slope, intercept) = crate::numerics::least_squares_line(&xs, &ys);
    Ok((slope, crate::numerics::r_squared(&xs, &ys, slope, intercept)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;
    use crate::numerics::gauss_legendre_on;
    use crate::{FieldSign, GasParams};
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    fn grid(gamma: f64, delta: f64) -> BallGrid {
        let p = GasParams::new(gamma, delta, FieldSign::Attractive).unwrap();
        BallGrid::build(GridSpec::new(12, 8, 16).unwrap(), &p).unwrap()
    }

    #[test]
    fn index_sets_have_expected_sizes() {
        // a + |β| ≤ 2 over (a, β ∈ ℕ³): 10 + 4 + 1 = 15 combinations.
        assert_eq!(boundary_indices(2).len(), 15);
        assert_eq!(interior_indices(2).len(), 10);
        assert_eq!(boundary_indices(0).len(), 1);
    }

    #[test]
    fn energy_norm_zero_at_zero_data() {
        let g = grid(1.5, 1e-2);
        let z = VectorField::zeros(g.n_nodes());
        let fmd = flow_map_derivatives(&g, &z).unwrap();
        let rep = energy_norm(&g, &g.params, 1.0, &z, &z, &fmd, 2);
        assert_eq!(rep.total, 0.0);
    }

    #[test]
    fn energy_norm_linear_dilation_oracle() {
        // θ = εy, V = 0, N = 0: Dη = (1+ε)Id, ∇_ηθ = ε/(1+ε) Id, so
        // S⁰ = ε² ∫w^α|y|² dy + (3 + 9)(ε/(1+ε))² ∫w^{α+1} dy.
        let g = grid(2.0, 1e-2);
        let p = g.params;
        let eps = 0.01;
        let theta = VectorField::from_fn(&g, |y| eps * y);
        let z = VectorField::zeros(g.n_nodes());
        let fmd = flow_map_derivatives(&g, &theta).unwrap();
        let rep = energy_norm(&g, &p, 1.0, &theta, &z, &fmd, 0);
        let alpha = p.alpha();
        let cw = p.enthalpy_coeff();
        let (rn, rw) = gauss_legendre_on(64, 0.0, 1.0);
        let mut i_a2 = 0.0; // ∫ w^α |y|² dy
        let mut i_a1 = 0.0; // ∫ w^{α+1} dy
        for (&r, &wq) in rn.iter().zip(&rw) {
            let w = cw * (1.0 - r * r);
            i_a2 += wq * 4.0 * std::f64::consts::PI * r.powi(4) * w.powf(alpha);
            i_a1 += wq * 4.0 * std::f64::consts::PI * r.powi(2) * w.powf(alpha + 1.0);
        }
        let e = eps / (1.0 + eps);
        let expect = eps * eps * i_a2 + 12.0 * e * e * i_a1;
        assert_abs_diff_eq!(rep.total / expect, 1.0, epsilon = 1e-9);
        assert_eq!(rep.v_part, 0.0);
    }

    #[test]
    fn velocity_terms_scale_inversely_with_delta() {
        let g1 = grid(2.0, 1e-2);
        let g2 = grid(2.0, 2e-2);
        let v = VectorField::from_fn(&g1, |y| Vector3::new(y[1], -y[0], y[2] * y[0]));
        let z = VectorField::zeros(g1.n_nodes());
        let fmd = flow_map_derivatives(&g1, &z).unwrap();
        let r1 = energy_norm(&g1, &g1.params, 1.3, &z, &v, &fmd, 1);
        let r2 = energy_norm(&g2, &g2.params, 1.3, &z, &v, &fmd, 1);
        assert_abs_diff_eq!(r2.v_part / r1.v_part, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(r2.theta_part, r1.theta_part, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_homogeneity() {
        let g = grid(1.5, 1e-2);
        let p = g.params;
        let theta = VectorField::from_fn(&g, |y| {
            0.02 * Vector3::new(y[0] * y[1], y[2], -y[0] + y[1] * y[1])
        });
        let v = VectorField::from_fn(&g, |y| 0.03 * Vector3::new(-y[1], y[0], y[2] * y[2]));
        let lam = 2.5f64;
        let mut theta_l = theta.clone();
        let mut v_l = v.clone();
        for c in 0..3 {
            for idx in 0..g.n_nodes() {
                theta_l.c[c][idx] *= lam;
                v_l.c[c][idx] *= lam;
            }
        }
        // Joint scaling is quadratic once the flow-map is frozen (the norm
        // is quadratic in (θ, V) at fixed η-geometry).
        let fmd = flow_map_derivatives(&g, &VectorField::zeros(g.n_nodes())).unwrap();
        let r1 = energy_norm(&g, &p, 1.1, &theta, &v, &fmd, 1);
        let r2 = energy_norm(&g, &p, 1.1, &theta_l, &v_l, &fmd, 1);
        assert_abs_diff_eq!(r2.total / r1.total, lam * lam, epsilon = 1e-10);
        let b1 = vorticity_norm(&g, &v, &fmd, &Matrix3::identity(), 1);
        let b2 = vorticity_norm(&g, &v_l, &fmd, &Matrix3::identity(), 1);
        assert_abs_diff_eq!(b2 / b1, lam * lam, epsilon = 1e-10);
    }

    #[test]
    fn vorticity_norm_rotation_oracle() {
        // F = (−y₂, y₁, 0), θ = 0, Λ = Id: Curl F has ±2 in the (1,2) pair,
        // so B⁰ = 8 ∫ w^{α+1} dy = 16π/105 for γ = 2.
        let g = grid(2.0, 1e-2);
        let f = VectorField::from_fn(&g, |y| Vector3::new(-y[1], y[0], 0.0));
        let fmd = flow_map_derivatives(&g, &VectorField::zeros(g.n_nodes())).unwrap();
        let b = vorticity_norm(&g, &f, &fmd, &Matrix3::identity(), 0);
        assert_abs_diff_eq!(b, 16.0 * std::f64::consts::PI / 105.0, epsilon = 1e-10);
        // A gradient field has zero Λ-curl at θ = 0, Λ = Id.
        let gf = VectorField::from_fn(&g, |y| Vector3::new(y[0], y[1] * 2.0, -y[2]));
        let bg = vorticity_norm(&g, &gf, &fmd, &Matrix3::identity(), 0);
        assert!(bg < 1e-20);
        // Anisotropic Λ sees curl even in a symmetric-gradient field.
        let lam = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 0.5));
        let shear = VectorField::from_fn(&g, |y| Vector3::new(y[1], y[0], 0.0));
        let ba = vorticity_norm(&g, &shear, &fmd, &lam, 0);
        assert!(ba > 1e-6);
    }

    #[test]
    fn dissipation_matches_v_part_of_energy() {
        let g = grid(1.5, 1e-2);
        let p = g.params;
        let v = VectorField::from_fn(&g, |y| Vector3::new(y[2], y[0] * y[1], -y[1]));
        let z = VectorField::zeros(g.n_nodes());
        let fmd = flow_map_derivatives(&g, &z).unwrap();
        let mu = 1.7;
        let d = dissipation(&g, &p, mu, &v, 1).unwrap();
        let rep = energy_norm(&g, &p, mu, &z, &v, &fmd, 1);
        // D^N = (5−3γ)·(V part of S^N), both carrying δ^{-1}μ^{3γ-3}.
        let expect = (5.0 - 3.0 * p.gamma) * (rep.v_part + rep.interior_part);
        assert_abs_diff_eq!(d / expect, 1.0, epsilon = 1e-12);
        let bad = GasParams::new(1.7, 1e-2, FieldSign::Attractive).unwrap();
        assert!(dissipation(&g, &bad, mu, &v, 1).is_err());
    }

    #[test]
    fn decay_fit_recovers_synthetic_exponents() {
        let taus: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
        let pure: Vec<f64> = taus.iter().map(|&t| (-2.0 * t).exp()).collect();
        let (slope, r2) = decay_fit(&taus, &pure, 0.5).unwrap();
        assert_abs_diff_eq!(slope, -2.0, epsilon = 1e-10);
        assert!(r2 > 0.999999);
        // (1+τ)e^{-τ} drifts towards exponent −1 on trailing windows.
        let mixed: Vec<f64> = taus.iter().map(|&t| (1.0 + t) * (-t).exp()).collect();
        let (slope_m, _) = decay_fit(&taus, &mixed, 0.25).unwrap();
        assert!((slope_m + 1.0).abs() < 0.15, "slope {slope_m}");
        // Refusal on non-positive values.
        let mut bad = pure.clone();
        bad[150] = 0.0;
        assert!(decay_fit(&taus, &bad, 0.5).is_err());
    }
}
