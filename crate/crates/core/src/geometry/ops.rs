//! Flow-map derivatives and Lie (pullback) differential operators.

use super::{BallGrid, MatrixField, ScalarField, VectorField};
use crate::{Error, Result};
use nalgebra::Matrix3;

/// Per-node deformation data of the flow map `η = y + θ`.
#[derive(Debug, Clone)]
pub struct FlowMapDerivatives {
    /// Deformation gradient `(Dη)^i_j = δ_ij + ∂_j θ^i`.
    pub d_eta: MatrixField,
    /// Inverse deformation gradient `𝒜 = (Dη)^{-1}`.
    pub a_inv: MatrixField,
    /// Jacobian `𝒥 = det Dη`.
    pub jac: ScalarField,
    /// `min_nodes 𝒥` (positivity margin).
    pub jac_min: f64,
}

/// Differentiate the flow map `η = y + θ` and invert it nodewise.
///
/// Errors with [`Error::DegenerateMap`] if `𝒥 ≤ 0` anywhere.
pub fn flow_map_derivatives(grid: &BallGrid, theta: &VectorField) -> Result<FlowMapDerivatives> {
    let n = grid.n_nodes();
    let mut d_eta = MatrixField::zeros(n);
    for i in 0..3 {
        let grad = grid.cartesian_gradient(&theta.c[i]);
        for j in 0..3 {
            for idx in 0..n {
                d_eta.c[i][j][idx] = grad.c[j][idx] + if i == j { 1.0 } else { 0.0 };
            }
        }
    }
    let mut a_inv = MatrixField::zeros(n);
    let mut jac = vec![0.0; n];
    let mut jac_min = f64::INFINITY;
    for idx in 0..n {
        let m = d_eta.at(idx);
        let det = m.determinant();
        if det <= 0.0 || !det.is_finite() {
            let (ir, it, ip) = grid.unidx(idx);
            return Err(Error::DegenerateMap(format!(
                "jacobian {det:.3e} at node (i_r={ir}, i_theta={it}, i_phi={ip})"
            )));
        }
        jac[idx] = det;
        jac_min = jac_min.min(det);
        let inv = m.try_inverse().ok_or_else(|| {
            Error::DegenerateMap(format!("deformation gradient not invertible at node {idx}"))
        })?;
        a_inv.set(idx, &inv);
    }
    Ok(FlowMapDerivatives {
        d_eta,
        a_inv,
        jac,
        jac_min,
    })
}

/// Pullback derivatives of a vector field along the flow map.
#[derive(Debug, Clone)]
pub struct LieOperators {
    /// `[∇_η F]^i_j = 𝒜^s_j ∂_s F^i`.
    pub grad_eta: MatrixField,
    /// `div_η F = 𝒜^s_ℓ ∂_s F^ℓ`.
    pub div_eta: ScalarField,
    /// `[Curl_η F]^i_j = 𝒜^s_j ∂_s F^i - 𝒜^s_i ∂_s F^j`.
    pub curl_eta: MatrixField,
    /// `[Curl_{Λ𝒜} F]^i_j = Λ_{jm} 𝒜^s_m ∂_s F^i - Λ_{im} 𝒜^s_m ∂_s F^j`.
    pub curl_lambda: MatrixField,
}

/// Evaluate all pullback operators of `F` for the deformation `fmd` and the
/// (spatially constant) shape matrix `Λ`.
pub fn lie_operators(
    grid: &BallGrid,
    f: &VectorField,
    fmd: &FlowMapDerivatives,
    lambda: &Matrix3<f64>,
) -> LieOperators {
    let n = grid.n_nodes();
    // Cartesian derivatives ∂_s F^i.
    let df: [VectorField; 3] = std::array::from_fn(|i| grid.cartesian_gradient(&f.c[i]));

    let mut grad_eta = MatrixField::zeros(n);
    let mut div_eta = vec![0.0; n];
    let mut curl_eta = MatrixField::zeros(n);
    let mut curl_lambda = MatrixField::zeros(n);
    for idx in 0..n {
        let a = fmd.a_inv.at(idx);
        // dF[(i, s)] = ∂_s F^i.
        let d = Matrix3::from_fn(|i, s| df[i].c[s][idx]);
        let g = d * a; // [∇_η F]^i_j = Σ_s ∂_s F^i 𝒜^s_j
        grad_eta.set(idx, &g);
        div_eta[idx] = g.trace();
        curl_eta.set(idx, &(g - g.transpose()));
        let gl = g * lambda; // Λ symmetric: Σ_m [∇_η F]^i_m Λ_{mj}
        curl_lambda.set(idx, &(gl - gl.transpose()));
    }
    LieOperators {
        grad_eta,
        div_eta,
        curl_eta,
        curl_lambda,
    }
}
