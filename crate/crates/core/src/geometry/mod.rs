//! Discrete geometry of the reference unit ball.
//!
//! A tensor-product grid adapted to the vector-field calculus of the
//! perturbation problem:
//!
//! * radial nodes are Gauss-Legendre points on `(0, 1)` (no node at the
//!   centre or the free boundary), differentiated by the barycentric
//!   polynomial matrix and integrated by the Gauss weights;
//! * colatitude nodes `θ_k = (k+½)π/n_θ` avoid the poles; derivatives use
//!   Fourier differentiation on the doubled sphere (the extension
//!   `f(2π-θ, φ) = f(θ, φ+π)` makes the grid uniform-periodic), and
//!   quadrature uses weights exact on low-order cosine polynomials;
//! * azimuth nodes `φ_l = l·2π/n_φ` with standard Fourier differentiation.
//!
//! Every one-dimensional operator is exact (to round-off) on the restriction
//! of Cartesian polynomials of modest degree, so all the operator identities
//! used by the analysis — commutators of `X_r`, tangential and Cartesian
//! derivatives, the radial/tangential decomposition of `∂_i` — hold at
//! round-off level on polynomial test fields rather than merely to
//! discretization order.
//!
//! Fields are stored component-wise in Cartesian frame with index
//! `(i_r · n_θ + i_θ) · n_φ + i_φ`.

mod ops;

use crate::numerics::{
    gauss_legendre_on, periodic_diff_matrix, periodic_filter_matrix,
    sin_weighted_theta_weights, Barycentric, CompensatedSum,
};
use crate::{Error, GasParams, Result};
use nalgebra::{DMatrix, Matrix3, Vector3};

pub use ops::{flow_map_derivatives, lie_operators, FlowMapDerivatives, LieOperators};

/// Scalar sample values on the grid nodes.
pub type ScalarField = Vec<f64>;

/// Cartesian components of a vector field on the grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub c: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        VectorField {
            c: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_fn(grid: &BallGrid, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Self {
        let mut v = VectorField::zeros(grid.n_nodes());
        for (idx, y) in grid.nodes.iter().enumerate() {
            let val = f(y);
            for i in 0..3 {
                v.c[i][idx] = val[i];
            }
        }
        v
    }

    pub fn at(&self, idx: usize) -> Vector3<f64> {
        Vector3::new(self.c[0][idx], self.c[1][idx], self.c[2][idx])
    }

    pub fn set(&mut self, idx: usize, v: &Vector3<f64>) {
        for i in 0..3 {
            self.c[i][idx] = v[i];
        }
    }
}

/// Cartesian components of a 3×3 matrix field; `c[i][j]` is the `(i,j)` entry.
#[derive(Debug, Clone)]
pub struct MatrixField {
    pub c: [[ScalarField; 3]; 3],
}

impl MatrixField {
    pub fn zeros(n: usize) -> Self {
        MatrixField {
            c: std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; n])),
        }
    }

    pub fn at(&self, idx: usize) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.c[i][j][idx])
    }

    pub fn set(&mut self, idx: usize, m: &Matrix3<f64>) {
        for i in 0..3 {
            for j in 0..3 {
                self.c[i][j][idx] = m[(i, j)];
            }
        }
    }
}

/// Grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl GridSpec {
    pub fn new(n_r: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_r < 4 || n_theta < 4 || n_phi < 4 {
            return Err(Error::domain("grid needs at least 4 nodes per direction".to_string()));
        }
        if n_phi % 2 != 0 {
            return Err(Error::domain("n_phi must be even (pole identification)".to_string()));
        }
        Ok(GridSpec { n_r, n_theta, n_phi })
    }
}

/// C² quintic cutoff: 0 for `r ≤ 1/4`, 1 for `r ≥ 3/4`, smoothstep between.
pub fn cutoff_psi(r: f64) -> f64 {
    if r <= 0.25 {
        0.0
    } else if r >= 0.75 {
        1.0
    } else {
        let t = (r - 0.25) * 2.0;
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// The discrete unit ball with all per-node tables and operator matrices.
#[derive(Debug, Clone)]
pub struct BallGrid {
    pub spec: GridSpec,
    pub params: GasParams,
    /// Radial Gauss-Legendre nodes on (0, 1).
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Cartesian coordinates per node.
    pub nodes: Vec<Vector3<f64>>,
    /// Quadrature weight per node (includes the `r² sinθ`-type Jacobian).
    pub quad_w: Vec<f64>,
    /// Cutoff `ψ(r)` per node.
    pub psi: Vec<f64>,
    /// Enthalpy `w(y)` per node.
    pub w: Vec<f64>,
    /// Interpolation helper along `r` (extrapolation to `r = 0, 1`).
    pub radial_interp: Barycentric,
    d_r: DMatrix<f64>,
    d_theta_ext: DMatrix<f64>,
    d_phi: DMatrix<f64>,
    filt_theta_ext: DMatrix<f64>,
    filt_phi: DMatrix<f64>,
    sin_t: Vec<f64>,
    cos_t: Vec<f64>,
    sin_p: Vec<f64>,
    cos_p: Vec<f64>,
}

impl BallGrid {
    pub fn build(spec: GridSpec, params: &GasParams) -> Result<BallGrid> {
        let (r, wr) = gauss_legendre_on(spec.n_r, 0.0, 1.0);
        let theta: Vec<f64> = (0..spec.n_theta)
            .map(|k| (k as f64 + 0.5) * std::f64::consts::PI / spec.n_theta as f64)
            .collect();
        let phi: Vec<f64> = (0..spec.n_phi)
            .map(|l| l as f64 * 2.0 * std::f64::consts::PI / spec.n_phi as f64)
            .collect();
        let wt = sin_weighted_theta_weights(spec.n_theta);
        let wp = 2.0 * std::f64::consts::PI / spec.n_phi as f64;

        let n = spec.n_r * spec.n_theta * spec.n_phi;
        let mut nodes = Vec::with_capacity(n);
        let mut quad_w = Vec::with_capacity(n);
        let mut psi = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for (ir, &rv) in r.iter().enumerate() {
            for (it, &tv) in theta.iter().enumerate() {
                for &pv in &phi {
                    let st = tv.sin();
                    nodes.push(Vector3::new(
                        rv * st * pv.cos(),
                        rv * st * pv.sin(),
                        rv * tv.cos(),
                    ));
                    quad_w.push(wr[ir] * rv * rv * wt[it] * wp);
                    psi.push(cutoff_psi(rv));
                    w.push(crate::profiles::enthalpy(params, rv));
                }
            }
        }

        let radial_interp = Barycentric::new(r.clone());
        let d_r = radial_interp.diff_matrix();
        let d_theta_ext = periodic_diff_matrix(2 * spec.n_theta);
        let d_phi = periodic_diff_matrix(spec.n_phi);
        // Filter strength: removes the highest Fourier modes to round-off
        // while leaving the lower half of the spectrum essentially intact.
        let filt_theta_ext = periodic_filter_matrix(2 * spec.n_theta, 36.0, 8);
        let filt_phi = periodic_filter_matrix(spec.n_phi, 36.0, 8);

        Ok(BallGrid {
            spec,
            params: *params,
            sin_t: theta.iter().map(|t| t.sin()).collect(),
            cos_t: theta.iter().map(|t| t.cos()).collect(),
            sin_p: phi.iter().map(|p| p.sin()).collect(),
            cos_p: phi.iter().map(|p| p.cos()).collect(),
            r,
            theta,
            phi,
            nodes,
            quad_w,
            psi,
            w,
            radial_interp,
            d_r,
            d_theta_ext,
            d_phi,
            filt_theta_ext,
            filt_phi,
        })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.spec.n_r * self.spec.n_theta * self.spec.n_phi
    }

    #[inline]
    pub fn idx(&self, ir: usize, it: usize, ip: usize) -> usize {
        (ir * self.spec.n_theta + it) * self.spec.n_phi + ip
    }

    /// Decompose a flat index into `(i_r, i_θ, i_φ)`.
    #[inline]
    pub fn unidx(&self, idx: usize) -> (usize, usize, usize) {
        let ip = idx % self.spec.n_phi;
        let rest = idx / self.spec.n_phi;
        (rest / self.spec.n_theta, rest % self.spec.n_theta, ip)
    }

    /// Build a scalar field from a closure on Cartesian coordinates.
    pub fn scalar_from_fn(&self, f: impl Fn(&Vector3<f64>) -> f64) -> ScalarField {
        self.nodes.iter().map(f).collect()
    }

    /// Deterministic compensated integral `∫_B f dy`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for (v, w) in f.iter().zip(&self.quad_w) {
            acc.add(v * w);
        }
        acc.value()
    }

    /// Radial derivative `∂_r f`.
    pub fn deriv_r(&self, f: &[f64]) -> ScalarField {
        let (nr, nt, np) = (self.spec.n_r, self.spec.n_theta, self.spec.n_phi);
        let mut out = vec![0.0; f.len()];
        for it in 0..nt {
            for ip in 0..np {
                for ir in 0..nr {
                    let mut s = 0.0;
                    for jr in 0..nr {
                        s += self.d_r[(ir, jr)] * f[self.idx(jr, it, ip)];
                    }
                    out[self.idx(ir, it, ip)] = s;
                }
            }
        }
        out
    }

    /// Colatitude derivative `∂_θ f` via the doubled-sphere extension.
    pub fn deriv_theta(&self, f: &[f64]) -> ScalarField {
        let (nr, nt, np) = (self.spec.n_r, self.spec.n_theta, self.spec.n_phi);
        let mut out = vec![0.0; f.len()];
        let mut ext = vec![0.0; 2 * nt];
        for ir in 0..nr {
            for ip in 0..np {
                let ip_op = (ip + np / 2) % np;
                for j in 0..nt {
                    ext[j] = f[self.idx(ir, j, ip)];
                }
                for j in nt..2 * nt {
                    ext[j] = f[self.idx(ir, 2 * nt - 1 - j, ip_op)];
                }
                for k in 0..nt {
                    let mut s = 0.0;
                    for (j, &e) in ext.iter().enumerate() {
                        s += self.d_theta_ext[(k, j)] * e;
                    }
                    out[self.idx(ir, k, ip)] = s;
                }
            }
        }
        out
    }

    /// Azimuthal derivative `∂_φ f`.
    pub fn deriv_phi(&self, f: &[f64]) -> ScalarField {
        let (nr, nt, np) = (self.spec.n_r, self.spec.n_theta, self.spec.n_phi);
        let mut out = vec![0.0; f.len()];
        for ir in 0..nr {
            for it in 0..nt {
                for ip in 0..np {
                    let mut s = 0.0;
                    for jp in 0..np {
                        s += self.d_phi[(ip, jp)] * f[self.idx(ir, it, jp)];
                    }
                    out[self.idx(ir, it, ip)] = s;
                }
            }
        }
        out
    }

    /// Exponential spectral filter in both angular directions.
    ///
    /// The collocation grid clusters near the poles and the centre, where
    /// the highest angular modes carry derivative factors `1/(r sinθ)` far
    /// beyond any physical wavenumber of a smooth field. Those modes are
    /// pure discretization noise and, left alone, feed an exponential
    /// instability of explicit time stepping; the filter removes them while
    /// leaving the resolved lower half of the spectrum intact to round-off.
    pub fn angular_filter(&self, f: &mut [f64]) {
        let (nr, nt, np) = (self.spec.n_r, self.spec.n_theta, self.spec.n_phi);
        // Azimuthal pass.
        let mut line = vec![0.0; np];
        for ir in 0..nr {
            for it in 0..nt {
                for jp in 0..np {
                    line[jp] = f[self.idx(ir, it, jp)];
                }
                for ip in 0..np {
                    let mut s = 0.0;
                    for (jp, &v) in line.iter().enumerate() {
                        s += self.filt_phi[(ip, jp)] * v;
                    }
                    f[self.idx(ir, it, ip)] = s;
                }
            }
        }
        // Colatitude pass on the doubled-sphere extension. Reads from a
        // snapshot: each meridian's extension borrows the opposite meridian,
        // which must not already be overwritten.
        let snap = f.to_vec();
        let mut ext = vec![0.0; 2 * nt];
        for ir in 0..nr {
            for ip in 0..np {
                let ip_op = (ip + np / 2) % np;
                for j in 0..nt {
                    ext[j] = snap[self.idx(ir, j, ip)];
                }
                for j in nt..2 * nt {
                    ext[j] = snap[self.idx(ir, 2 * nt - 1 - j, ip_op)];
                }
                for k in 0..nt {
                    let mut s = 0.0;
                    for (j, &e) in ext.iter().enumerate() {
                        s += self.filt_theta_ext[(k, j)] * e;
                    }
                    f[self.idx(ir, k, ip)] = s;
                }
            }
        }
    }

    /// Radial scaling operator `X_r f = r ∂_r f`.
    pub fn xr(&self, f: &[f64]) -> ScalarField {
        let mut out = self.deriv_r(f);
        for (idx, v) in out.iter_mut().enumerate() {
            let (ir, _, _) = self.unidx(idx);
            *v *= self.r[ir];
        }
        out
    }

    /// All three Cartesian derivatives at once (shares the 1-D passes).
    pub fn cartesian_gradient(&self, f: &[f64]) -> VectorField {
        let fr = self.deriv_r(f);
        let ft = self.deriv_theta(f);
        let fp = self.deriv_phi(f);
        let mut out = VectorField::zeros(f.len());
        for idx in 0..f.len() {
            let (ir, it, ip) = self.unidx(idx);
            let (r, st, ct) = (self.r[ir], self.sin_t[it], self.cos_t[it]);
            let (sp, cp) = (self.sin_p[ip], self.cos_p[ip]);
            let (dr, dt, dp) = (fr[idx], ft[idx] / r, fp[idx] / (r * st));
            out.c[0][idx] = st * cp * dr + ct * cp * dt - sp * dp;
            out.c[1][idx] = st * sp * dr + ct * sp * dt + cp * dp;
            out.c[2][idx] = ct * dr - st * dt;
        }
        out
    }

    /// Single Cartesian derivative `∂_i f`.
    pub fn partial(&self, f: &[f64], i: usize) -> ScalarField {
        self.cartesian_gradient(f).c[i].clone()
    }

    /// Tangential derivative `∂̸_{ji} f = y_j ∂_i f - y_i ∂_j f` (0-based
    /// component indices). Purely angular, hence commutes exactly with `X_r`.
    pub fn dslash(&self, f: &[f64], j: usize, i: usize) -> ScalarField {
        assert!(i < 3 && j < 3);
        if i == j {
            return vec![0.0; f.len()];
        }
        // The three independent generators in angular form:
        //   ∂̸_{01} = ∂_φ
        //   ∂̸_{20} = cosφ ∂_θ - cotθ sinφ ∂_φ
        //   ∂̸_{12} = -sinφ ∂_θ - cotθ cosφ ∂_φ
        let (gen, sign) = match (j, i) {
            (0, 1) => (0u8, 1.0),
            (1, 0) => (0, -1.0),
            (2, 0) => (1, 1.0),
            (0, 2) => (1, -1.0),
            (1, 2) => (2, 1.0),
            (2, 1) => (2, -1.0),
            _ => unreachable!(),
        };
        if gen == 0 {
            let mut out = self.deriv_phi(f);
            for v in &mut out {
                *v *= sign;
            }
            return out;
        }
        let ft = self.deriv_theta(f);
        let fp = self.deriv_phi(f);
        let mut out = vec![0.0; f.len()];
        for idx in 0..f.len() {
            let (_, it, ip) = self.unidx(idx);
            let cot = self.cos_t[it] / self.sin_t[it];
            let (sp, cp) = (self.sin_p[ip], self.cos_p[ip]);
            out[idx] = sign
                * match gen {
                    1 => cp * ft[idx] - cot * sp * fp[idx],
                    _ => -sp * ft[idx] - cot * cp * fp[idx],
                };
        }
        out
    }

    /// Weighted norm `‖f‖²_{k,g} = ∫_B w^k |f|² g dy` for a multi-component
    /// field (pass the components as slices; a scalar is one component).
    pub fn weighted_norm_sq(&self, comps: &[&[f64]], k: f64, g: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for idx in 0..self.n_nodes() {
            let mut f2 = 0.0;
            for c in comps {
                f2 += c[idx] * c[idx];
            }
            acc.add(self.quad_w[idx] * self.w[idx].powf(k) * f2 * g[idx]);
        }
        acc.value()
    }

    /// Evaluate a scalar field at `r = 0` or any off-grid radius along a
    /// fixed direction by polynomial extrapolation of its radial profile,
    /// averaged over the two polar-opposite azimuth columns for symmetry.
    pub fn radial_profile_eval(&self, f: &[f64], it: usize, ip: usize, r: f64) -> f64 {
        let vals: Vec<f64> = (0..self.spec.n_r)
            .map(|ir| f[self.idx(ir, it, ip)])
            .collect();
        self.radial_interp.eval(&vals, r)
    }
}

/// Write node coordinates plus named field values as CSV
/// (`r,theta,phi,y1,y2,y3,<name>...`).
pub fn export_field_csv(
    grid: &BallGrid,
    fields: &[(&str, &[f64])],
    path: &std::path::Path,
) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "r,theta,phi,y1,y2,y3")?;
    for (name, f) in fields {
        assert_eq!(f.len(), grid.n_nodes());
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for idx in 0..grid.n_nodes() {
        let (ir, it, ip) = grid.unidx(idx);
        let y = &grid.nodes[idx];
        write!(
            out,
            "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            grid.r[ir], grid.theta[it], grid.phi[ip], y[0], y[1], y[2]
        )?;
        for (_, f) in fields {
            write!(out, ",{:.9e}", f[idx])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FieldSign;
    use approx::assert_abs_diff_eq;

    fn grid(n_r: usize, n_t: usize, n_p: usize) -> BallGrid {
        let p = GasParams::new(2.0, 1.0, FieldSign::Attractive).unwrap();
        BallGrid::build(GridSpec::new(n_r, n_t, n_p).unwrap(), &p).unwrap()
    }

    fn sup(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn quadrature_exact_on_low_degree_polynomials() {
        let g = grid(8, 8, 16);
        let one = g.scalar_from_fn(|_| 1.0);
        assert_abs_diff_eq!(g.integrate(&one), 4.0 * std::f64::consts::PI / 3.0, epsilon = 1e-12);
        let r2 = g.scalar_from_fn(|y| y.norm_squared());
        assert_abs_diff_eq!(g.integrate(&r2), 4.0 * std::f64::consts::PI / 5.0, epsilon = 1e-12);
        // Odd moments vanish.
        let x = g.scalar_from_fn(|y| y[0]);
        assert_abs_diff_eq!(g.integrate(&x), 0.0, epsilon = 1e-13);
        // Mixed fourth-order moment ∫ x²z² = 4π/7 · 1/15·... = ∫r^6 dr · ∫ n_x²n_z² dΩ
        // = (1/7)·(4π/15).
        let xz = g.scalar_from_fn(|y| y[0] * y[0] * y[2] * y[2]);
        assert_abs_diff_eq!(xz.iter().zip(&g.quad_w).map(|(a, b)| a * b).sum::<f64>(),
            4.0 * std::f64::consts::PI / 105.0, epsilon = 1e-12);
    }

    #[test]
    fn cartesian_gradient_exact_on_polynomials() {
        let g = grid(10, 10, 16);
        // f = x²y + z³ - 2xyz.
        let f = g.scalar_from_fn(|y| y[0] * y[0] * y[1] + y[2].powi(3) - 2.0 * y[0] * y[1] * y[2]);
        let grad = g.cartesian_gradient(&f);
        let gx = g.scalar_from_fn(|y| 2.0 * y[0] * y[1] - 2.0 * y[1] * y[2]);
        let gy = g.scalar_from_fn(|y| y[0] * y[0] - 2.0 * y[0] * y[2]);
        let gz = g.scalar_from_fn(|y| 3.0 * y[2] * y[2] - 2.0 * y[0] * y[1]);
        assert!(sup(&grad.c[0], &gx) < 1e-11, "{}", sup(&grad.c[0], &gx));
        assert!(sup(&grad.c[1], &gy) < 1e-11);
        assert!(sup(&grad.c[2], &gz) < 1e-11);
    }

    #[test]
    fn xr_and_dslash_exact_on_polynomials() {
        let g = grid(10, 10, 16);
        let f = g.scalar_from_fn(|y| y[0] * y[1] * y[2]);
        // X_r(xyz) = 3xyz (homogeneous of degree 3).
        let xrf = g.xr(&f);
        let want = g.scalar_from_fn(|y| 3.0 * y[0] * y[1] * y[2]);
        assert!(sup(&xrf, &want) < 1e-11);
        // ∂̸_{01}(xyz) = (x∂_y - y∂_x)(xyz) = x²z - y²z.
        let ds = g.dslash(&f, 0, 1);
        let want = g.scalar_from_fn(|y| (y[0] * y[0] - y[1] * y[1]) * y[2]);
        assert!(sup(&ds, &want) < 1e-11);
        // ∂̸_{12}(z²) = y∂_z(z²)·... = (y∂_z - z∂_y)(z²) = 2yz.
        let f2 = g.scalar_from_fn(|y| y[2] * y[2]);
        let ds2 = g.dslash(&f2, 1, 2);
        let want2 = g.scalar_from_fn(|y| 2.0 * y[1] * y[2]);
        assert!(sup(&ds2, &want2) < 1e-11);
        // Antisymmetry and vanishing diagonal.
        let ds_rev = g.dslash(&f, 1, 0);
        let neg: Vec<f64> = ds.iter().map(|v| -v).collect();
        assert!(sup(&ds_rev, &neg) < 1e-13);
        assert!(g.dslash(&f, 2, 2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn commutator_identities_on_polynomials() {
        let g = grid(10, 10, 16);
        let f = g.scalar_from_fn(|y| {
            y[0].powi(3) - 2.0 * y[1] * y[2] * y[0] + y[2] * y[2] - 0.5 * y[1]
        });
        // [∂̸_{ji}, X_r] = 0 : structurally exact (different tensor directions).
        let a = g.dslash(&g.xr(&f), 2, 0);
        let b = g.xr(&g.dslash(&f, 2, 0));
        assert!(sup(&a, &b) < 1e-10, "{}", sup(&a, &b));
        // [∂̸_{01}, ∂̸_{12}] = ∂̸_{02}.
        let ab = g.dslash(&g.dslash(&f, 1, 2), 0, 1);
        let ba = g.dslash(&g.dslash(&f, 0, 1), 1, 2);
        let comm: Vec<f64> = ab.iter().zip(&ba).map(|(x, y)| x - y).collect();
        let want = g.dslash(&f, 0, 2);
        assert!(sup(&comm, &want) < 1e-10, "{}", sup(&comm, &want));
        // [∂_m, X_r] = ∂_m.
        for m in 0..3 {
            let ab = g.partial(&g.xr(&f), m);
            let ba = g.xr(&g.partial(&f, m));
            let comm: Vec<f64> = ab.iter().zip(&ba).map(|(x, y)| x - y).collect();
            let want = g.partial(&f, m);
            assert!(sup(&comm, &want) < 1e-10, "m={m}: {}", sup(&comm, &want));
        }
        // [∂_m, ∂̸_{ji}] = δ_{mj} ∂_i - δ_{mi} ∂_j, here (m,j,i) = (1,1,2): = ∂_2.
        let ab = g.partial(&g.dslash(&f, 1, 2), 1);
        let ba = g.dslash(&g.partial(&f, 1), 1, 2);
        let comm: Vec<f64> = ab.iter().zip(&ba).map(|(x, y)| x - y).collect();
        let want = g.partial(&f, 2);
        assert!(sup(&comm, &want) < 1e-10, "{}", sup(&comm, &want));
    }

    #[test]
    fn partial_decomposes_into_tangential_and_radial() {
        // ∂_i = (y_j/r²) ∂̸_{ji} + (y_i/r²) X_r (sum over j), valid away from 0.
        let g = grid(10, 10, 16);
        let f = g.scalar_from_fn(|y| y[0] * y[0] * y[2] - y[1] * y[2] + 0.3 * y[1] * y[1] * y[1]);
        for i in 0..3 {
            let direct = g.partial(&f, i);
            let xrf = g.xr(&f);
            let mut recon = vec![0.0; g.n_nodes()];
            for j in 0..3 {
                if j != i {
                    let ds = g.dslash(&f, j, i);
                    for (idx, v) in recon.iter_mut().enumerate() {
                        let y = &g.nodes[idx];
                        *v += y[j] / y.norm_squared() * ds[idx];
                    }
                }
            }
            for (idx, v) in recon.iter_mut().enumerate() {
                let y = &g.nodes[idx];
                *v += y[i] / y.norm_squared() * xrf[idx];
            }
            assert!(sup(&direct, &recon) < 1e-10, "i={i}: {}", sup(&direct, &recon));
        }
    }

    #[test]
    fn cutoff_properties() {
        assert_eq!(cutoff_psi(0.1), 0.0);
        assert_eq!(cutoff_psi(0.25), 0.0);
        assert_abs_diff_eq!(cutoff_psi(0.5), 0.5, epsilon = 1e-15);
        assert_eq!(cutoff_psi(0.75), 1.0);
        assert_eq!(cutoff_psi(0.9), 1.0);
        // C² join: value, first and second derivative continuous at 1/4.
        let h = 1e-5;
        let d2 = (cutoff_psi(0.25 + 2.0 * h) - 2.0 * cutoff_psi(0.25 + h) + cutoff_psi(0.25)) / (h * h);
        assert!(d2.abs() < 1e-2, "second derivative jump {d2}");
        assert!(cutoff_psi(0.26) > 0.0 && cutoff_psi(0.26) < 0.01);
    }

    #[test]
    fn weighted_norm_oracle() {
        // γ = 2: ∫ w·1²·1 = (1/4)∫(1-r²) = (1/4)(4π/3 - 4π/5) = 2π/15.
        let g = grid(12, 8, 16);
        let one = g.scalar_from_fn(|_| 1.0);
        let n = g.weighted_norm_sq(&[&one], 1.0, &one);
        assert_abs_diff_eq!(n, 2.0 * std::f64::consts::PI / 15.0, epsilon = 1e-12);
        // Quadratic homogeneity: ‖2f‖² = 4‖f‖².
        let f = g.scalar_from_fn(|y| y[0] + 0.2 * y[1] * y[2]);
        let f2: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
        let a = g.weighted_norm_sq(&[&f], 2.0, &g.psi.clone());
        let b = g.weighted_norm_sq(&[&f2], 2.0, &g.psi.clone());
        assert_abs_diff_eq!(b, 4.0 * a, epsilon = 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn angular_filter_preserves_smooth_fields_and_removes_noise() {
        let g = grid(8, 8, 16);
        // Low-degree polynomial: angular content far below the cut.
        let f = g.scalar_from_fn(|y| 1.0 + y[0] + 0.5 * y[1] * y[2] + y[2] * y[2]);
        let mut filtered = f.clone();
        g.angular_filter(&mut filtered);
        let max_dev = f
            .iter()
            .zip(&filtered)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_dev < 1e-5, "smooth field distorted by {max_dev:.3e}");
        // Highest azimuthal mode: pure grid noise, removed to round-off.
        let mut noise: Vec<f64> = (0..g.n_nodes())
            .map(|idx| {
                let (_, _, ip) = g.unidx(idx);
                if ip % 2 == 0 { 1.0 } else { -1.0 }
            })
            .collect();
        g.angular_filter(&mut noise);
        let residual = noise.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(residual < 1e-12, "sawtooth survives the filter: {residual:.3e}");
    }

    #[test]
    fn radial_extrapolation_to_center_and_boundary() {
        let g = grid(12, 8, 16);
        let f = g.scalar_from_fn(|y| 1.0 - y.norm_squared());
        assert_abs_diff_eq!(g.radial_profile_eval(&f, 3, 5, 0.0), 1.0, epsilon = 1e-11);
        assert_abs_diff_eq!(g.radial_profile_eval(&f, 0, 0, 1.0), 0.0, epsilon = 1e-11);
    }
}
