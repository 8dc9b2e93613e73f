//! Enthalpy profile on the unit ball and the fields it induces.
//!
//! The stationary enthalpy is `w(y) = (γ-1)/(2γ) (1 - |y|²)₊`, scaled by the
//! expansion amplitude as `w_δ = δ w`. It satisfies the physical-vacuum
//! condition (`∂_r w < 0` at the boundary) and generates the background
//! density/velocity pair of an affine motion:
//!
//! ```text
//! ρ_A(t, x) = (det A)^{-1} [ δ (γ-1)/(2γ) (1 - |A^{-1}x|²)₊ ]^{1/(γ-1)},
//! u_A(t, x) = Ȧ A^{-1} x.
//! ```
//!
//! The total mass `δ^α ∫_B w^α dy` is frame-invariant. Admissibility of the
//! adiabatic exponent combines an arithmetic condition on γ with a quadrature
//! check of the high-order weighted norms of `w^α`.

use crate::numerics::gauss_legendre_on;
use crate::{Error, GasParams, Result};
use nalgebra::{Matrix3, Vector3};

/// Enthalpy profile `w(y) = (γ-1)/(2γ)(1 - |y|²)₊` at radius `r = |y|`.
pub fn enthalpy(params: &GasParams, r: f64) -> f64 {
    params.enthalpy_coeff() * (1.0 - r * r).max(0.0)
}

/// Cartesian gradient of the enthalpy, `∇w = -(γ-1)/γ · y` inside the ball,
/// zero outside.
pub fn enthalpy_gradient(params: &GasParams, y: &Vector3<f64>) -> Vector3<f64> {
    if y.norm_squared() <= 1.0 {
        -2.0 * params.enthalpy_coeff() * y
    } else {
        Vector3::zeros()
    }
}

/// Background density of the affine motion at the spatial point `x`.
pub fn affine_density(params: &GasParams, a: &Matrix3<f64>, x: &Vector3<f64>) -> Result<f64> {
    let det = a.determinant();
    if det <= 0.0 {
        return Err(Error::domain(format!("affine density requires det A > 0, got {det}")));
    }
    let y = a
        .try_inverse()
        .ok_or_else(|| Error::domain("A not invertible".to_string()))?
        * x;
    let w = enthalpy(params, y.norm());
    Ok((params.delta * w).powf(params.alpha()) / det)
}

/// Background velocity `u_A = Ȧ A^{-1} x` of the affine motion.
pub fn affine_velocity(
    a: &Matrix3<f64>,
    adot: &Matrix3<f64>,
    x: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    let ainv = a
        .try_inverse()
        .ok_or_else(|| Error::domain("A not invertible".to_string()))?;
    Ok(adot * (ainv * x))
}

/// Total mass with a refinement-based error estimate.
#[derive(Debug, Clone)]
pub struct MassEstimate {
    pub value: f64,
    /// `|I_{2n} - I_n|`, a conservative quadrature error estimate.
    pub refinement_error: f64,
}

/// Total mass `δ^α ∫_B w^α dy = 4π δ^α c_γ^α ∫_0^1 r² (1-r²)^α dr`.
///
/// Frame-invariant: the ambient affine motion does not enter.
pub fn total_mass(params: &GasParams, n_quad: usize) -> MassEstimate {
    let radial = |n: usize| -> f64 {
        let (x, w) = gauss_legendre_on(n, 0.0, 1.0);
        let alpha = params.alpha();
        x.iter()
            .zip(&w)
            .map(|(&r, &wr)| wr * r * r * (1.0 - r * r).powf(alpha))
            .sum::<f64>()
    };
    let coarse = radial(n_quad);
    let fine = radial(2 * n_quad);
    let scale = 4.0
        * std::f64::consts::PI
        * params.delta.powf(params.alpha())
        * params.enthalpy_coeff().powf(params.alpha());
    MassEstimate {
        value: scale * fine,
        refinement_error: scale * (fine - coarse).abs(),
    }
}

/// One term `coef · (r²)^m · w^{α-j}` of the exact radial calculus below.
#[derive(Debug, Clone, Copy)]
struct RadialTerm {
    coef: f64,
    m: i32,
    j: i32,
}

/// Exact symbolic application of `X_r = r ∂_r` to `w^α`, repeated `a` times.
///
/// With `u = r²` and `w = c(1-u)` one has
/// `X_r (u^m w^{α-j}) = 2m u^m w^{α-j} - 2c(α-j) u^{m+1} w^{α-j-1}`,
/// closing the calculus over finite sums of such terms.
fn xr_power_terms(params: &GasParams, a: usize) -> Vec<RadialTerm> {
    let c = params.enthalpy_coeff();
    let alpha = params.alpha();
    let mut terms = vec![RadialTerm { coef: 1.0, m: 0, j: 0 }];
    for _ in 0..a {
        let mut next = Vec::with_capacity(2 * terms.len());
        for t in &terms {
            if t.m != 0 {
                next.push(RadialTerm { coef: 2.0 * t.m as f64 * t.coef, m: t.m, j: t.j });
            }
            next.push(RadialTerm {
                coef: -2.0 * c * (alpha - t.j as f64) * t.coef,
                m: t.m + 1,
                j: t.j + 1,
            });
        }
        // Merge duplicates (same (m, j)).
        next.sort_by_key(|t| (t.m, t.j));
        let mut merged: Vec<RadialTerm> = Vec::new();
        for t in next {
            match merged.last_mut() {
                Some(last) if last.m == t.m && last.j == t.j => last.coef += t.coef,
                _ => merged.push(t),
            }
        }
        terms = merged;
    }
    terms
}

/// Evaluate `X_r^a w^α` at radius `r` from the exact term calculus.
pub fn xr_power_enthalpy(params: &GasParams, a: usize, r: f64) -> f64 {
    let c = params.enthalpy_coeff();
    let alpha = params.alpha();
    let u = r * r;
    let w = c * (1.0 - u);
    xr_power_terms(params, a)
        .iter()
        .map(|t| t.coef * u.powi(t.m) * w.powf(alpha - t.j as f64))
        .sum()
}

/// Outcome of the admissibility diagnostics for an adiabatic exponent.
#[derive(Debug, Clone)]
pub struct Admissibility {
    /// `γ = 1 + 1/n` for an integer `n ≥ 2` (within 1e-9).
    pub reciprocal_integer: Option<u64>,
    /// `γ < 14/13`.
    pub below_14_13: bool,
    /// Either of the two sufficient arithmetic conditions holds.
    pub admissible: bool,
    /// Boundary slope `∂_r w (1) = -(γ-1)/γ` (physical vacuum requires < 0).
    pub boundary_slope: f64,
    /// Weighted norms `‖X_r^a w^α‖_{α+a,1}` for `a = 0..=N` at the coarse
    /// resolution (purely tangential derivatives of the radial `w^α` vanish
    /// identically, so these are the only contributions to the weight sum).
    pub weight_norms: Vec<f64>,
    /// Same norms at doubled quadrature resolution.
    pub weight_norms_fine: Vec<f64>,
    /// Growth ratios fine/coarse; a ratio well above 1 flags divergence.
    pub growth_ratios: Vec<f64>,
    /// Weight sum up to order N (fine resolution), when all terms converged.
    pub weight_sum: Option<f64>,
}

/// Check admissibility of `γ` up to derivative order `n_order`, using
/// `n_quad` Gauss nodes (and `2 n_quad` for the refinement check).
pub fn admissibility_check(params: &GasParams, n_order: usize, n_quad: usize) -> Admissibility {
    let gamma = params.gamma;
    let alpha = params.alpha();
    // γ = 1 + 1/n ⟺ α = n.
    let nearest = alpha.round();
    let reciprocal_integer = if nearest >= 2.0 && (alpha - nearest).abs() < 1e-9 * nearest {
        Some(nearest as u64)
    } else {
        None
    };
    let below_14_13 = gamma < 14.0 / 13.0;

    let norm_at = |a: usize, n: usize| -> f64 {
        let (x, w) = gauss_legendre_on(n, 0.0, 1.0);
        let four_pi = 4.0 * std::f64::consts::PI;
        let s: f64 = x
            .iter()
            .zip(&w)
            .map(|(&r, &wr)| {
                let wv = enthalpy(params, r);
                let f = xr_power_enthalpy(params, a, r);
                wr * r * r * wv.powf(alpha + a as f64) * f * f
            })
            .sum();
        (four_pi * s).sqrt()
    };

    let mut weight_norms = Vec::with_capacity(n_order + 1);
    let mut weight_norms_fine = Vec::with_capacity(n_order + 1);
    let mut growth_ratios = Vec::with_capacity(n_order + 1);
    let mut all_converged = true;
    for a in 0..=n_order {
        let coarse = norm_at(a, n_quad);
        let fine = norm_at(a, 2 * n_quad);
        let ratio = if coarse > 0.0 { fine / coarse } else { 1.0 };
        if !(ratio.is_finite() && ratio < 1.02) {
            all_converged = false;
        }
        weight_norms.push(coarse);
        weight_norms_fine.push(fine);
        growth_ratios.push(ratio);
    }
    let weight_sum = if all_converged {
        Some(weight_norms_fine.iter().sum())
    } else {
        None
    };

    Admissibility {
        reciprocal_integer,
        below_14_13,
        admissible: reciprocal_integer.is_some() || below_14_13,
        boundary_slope: -(gamma - 1.0) / gamma,
        weight_norms,
        weight_norms_fine,
        growth_ratios,
        weight_sum,
    }
}
