//! Shared numerical utilities: Gauss-Legendre rules, barycentric polynomial
//! interpolation/differentiation, spectral differentiation on periodic grids,
//! high-order cumulative quadrature, compensated summation and least-squares
//! fits.

use nalgebra::DMatrix;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Nodes are computed by Newton iteration on the Legendre recurrence and are
/// accurate to machine precision for the moderate `n` (< 200) used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&t| mid + c * t).collect(),
        w.iter().map(|&wi| c * wi).collect(),
    )
}

/// Barycentric Lagrange interpolation on a fixed set of distinct nodes.
///
/// Provides machine-precision interpolation, extrapolation and a dense
/// differentiation matrix, exact for polynomials of degree `< n`.
#[derive(Debug, Clone)]
pub struct Barycentric {
    pub nodes: Vec<f64>,
    bary_w: Vec<f64>,
}

impl Barycentric {
    pub fn new(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        assert!(n >= 2);
        // Rescale each factor to keep the products in range.
        let span = nodes.iter().cloned().fold(f64::MIN, f64::max)
            - nodes.iter().cloned().fold(f64::MAX, f64::min);
        let scale = 4.0 / span;
        let mut bary_w = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    bary_w[j] *= (nodes[j] - nodes[k]) * scale;
                }
            }
            bary_w[j] = 1.0 / bary_w[j];
        }
        Barycentric { nodes, bary_w }
    }

    /// Evaluate the interpolant of `values` at `x` (second-form barycentric).
    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.nodes.len() {
            let dx = x - self.nodes[j];
            if dx == 0.0 {
                return values[j];
            }
            let t = self.bary_w[j] / dx;
            num += t * values[j];
            den += t;
        }
        num / den
    }

    /// Dense differentiation matrix `D` with `(D f)_i ≈ f'(x_i)`.
    pub fn diff_matrix(&self) -> DMatrix<f64> {
        let n = self.nodes.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (self.bary_w[j] / self.bary_w[i]) / (self.nodes[i] - self.nodes[j]);
                    d[(i, j)] = v;
                    row_sum += v;
                }
            }
            d[(i, i)] = -row_sum;
        }
        d
    }
}

/// Spectral differentiation matrix for an even-size uniform periodic grid on
/// `[0, 2π)`. Exact (to round-off) for trigonometric polynomials of degree
/// `< n/2`.
pub fn periodic_diff_matrix(n: usize) -> DMatrix<f64> {
    assert!(n >= 2 && n % 2 == 0, "periodic grid size must be even");
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let k = i as isize - j as isize;
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = 0.5 * sign / (0.5 * k as f64 * h).tan();
            }
        }
    }
    d
}

/// Exponential spectral filter for an even-size uniform periodic grid:
/// Fourier mode `m` is scaled by `exp(-a (|m|/m_max)^(2p))` with
/// `m_max = n/2`. Low modes pass essentially unchanged
/// (`a (1/2)^(2p) ≪ 1` at `|m| = m_max/2`); the highest modes are removed
/// to round-off. Real circulant matrix, applied as `f ↦ F f`.
pub fn periodic_filter_matrix(n: usize, a: f64, p: u32) -> DMatrix<f64> {
    assert!(n >= 2 && n % 2 == 0, "periodic grid size must be even");
    let m_max = (n / 2) as f64;
    let sigma = |m: f64| (-a * (m / m_max).powi(2 * p as i32)).exp();
    // Circulant kernel c_d = (1/n) Σ_k σ(m_k) e^{i 2π k d / n}, real because
    // σ is even in the frequency.
    let mut kernel = vec![0.0; n];
    for (d, c) in kernel.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in 0..n {
            let m = if k <= n / 2 { k } else { n - k } as f64;
            s += sigma(m) * (2.0 * std::f64::consts::PI * (k * d) as f64 / n as f64).cos();
        }
        *c = s / n as f64;
    }
    let mut f = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            f[(i, j)] = kernel[(i + n - j) % n];
        }
    }
    f
}

/// Quadrature weights on the offset uniform colatitude grid
/// `θ_k = (k + 1/2) π / n` for integrals `∫_0^π g(θ) sin θ dθ`.
///
/// Exact for `g` in the span of `cos(jθ)`, `j = 0..n-1`, which covers the
/// azimuthal averages of Cartesian polynomial fields on the ball.
pub fn sin_weighted_theta_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for (k, wk) in w.iter_mut().enumerate() {
        let theta = (k as f64 + 0.5) * std::f64::consts::PI / n as f64;
        let mut s = 2.0 / n as f64; // j = 0 term: b_0 = 2, coefficient b_0/n
        let mut j = 2;
        while j < n {
            let b_j = 2.0 / (1.0 - (j * j) as f64);
            s += (2.0 / n as f64) * b_j * (j as f64 * theta).cos();
            j += 2;
        }
        *wk = s;
    }
    w
}

/// Cumulative integral of uniformly sampled data, fourth order.
///
/// Returns `F` with `F[0] = 0` and `F[i] ≈ ∫_{x_0}^{x_i} f`. Each subinterval
/// is integrated with the cubic through its four nearest samples.
pub fn cumulative_integral_uniform(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 4, "need at least 4 samples for fourth-order quadrature");
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n - 1 {
        let seg = if i == 0 {
            h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
        } else if i == n - 2 {
            h * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]) / 24.0
        } else {
            h * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) / 24.0
        };
        acc += seg;
        out[i + 1] = acc;
    }
    out
}

/// Neumaier-compensated accumulator for deterministic, low-error summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Ordinary least squares line fit; returns `(slope, intercept)`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Coefficient of determination R² for a line fit.
pub fn r_squared(xs: &[f64], ys: &[f64], slope: f64, intercept: f64) -> f64 {
    let n = ys.len() as f64;
    let my = ys.iter().sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let e = y - (slope * x + intercept);
        ss_res += e * e;
        ss_tot += (y - my) * (y - my);
    }
    1.0 - ss_res / ss_tot
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // 5-point rule is exact through degree 9.
        let (x, w) = gauss_legendre(5);
        for k in 0..=9usize {
            let num: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(k as i32)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(num, exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn gauss_legendre_mapped_interval() {
        let (x, w) = gauss_legendre_on(8, 0.0, 1.0);
        let s: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi * xi).sum();
        assert_abs_diff_eq!(s, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn barycentric_differentiates_polynomials_exactly() {
        let (nodes, _) = gauss_legendre_on(12, 0.0, 1.0);
        let b = Barycentric::new(nodes.clone());
        let d = b.diff_matrix();
        // f(r) = r^5 - 2 r^2 + 3, f'(r) = 5 r^4 - 4 r.
        let f: Vec<f64> = nodes.iter().map(|&r| r.powi(5) - 2.0 * r * r + 3.0).collect();
        let fv = nalgebra::DVector::from_vec(f);
        let df = &d * &fv;
        for (i, &r) in nodes.iter().enumerate() {
            assert_abs_diff_eq!(df[i], 5.0 * r.powi(4) - 4.0 * r, epsilon = 1e-11);
        }
        // Extrapolation to the endpoints.
        let g: Vec<f64> = nodes.iter().map(|&r| r.powi(3)).collect();
        assert_abs_diff_eq!(b.eval(&g, 1.0), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(b.eval(&g, 0.0), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn periodic_diff_exact_on_trig_polynomials() {
        let n = 16;
        let d = periodic_diff_matrix(n);
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let f: Vec<f64> = (0..n).map(|j| (3.0 * (j as f64 + 0.5) * h).sin()).collect();
        let fv = nalgebra::DVector::from_vec(f);
        // The matrix is shift-invariant, so an offset grid works identically.
        let df = &d * &fv;
        for j in 0..n {
            let x = (j as f64 + 0.5) * h;
            assert_abs_diff_eq!(df[j], 3.0 * (3.0 * x).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn theta_weights_integrate_cosine_polynomials() {
        let n = 16;
        let w = sin_weighted_theta_weights(n);
        // ∫_0^π cos^2(θ) sinθ dθ = 2/3 ; cos^2 θ = (1 + cos 2θ)/2.
        let mut s = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            let th = (k as f64 + 0.5) * std::f64::consts::PI / n as f64;
            s += wk * th.cos() * th.cos();
        }
        assert_abs_diff_eq!(s, 2.0 / 3.0, epsilon = 1e-14);
        // Total weight = ∫ sinθ = 2.
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn cumulative_integral_fourth_order() {
        let n = 101;
        let h = 1.0 / (n as f64 - 1.0);
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
        let cum = cumulative_integral_uniform(h, &f);
        for (i, &ci) in cum.iter().enumerate() {
            let x = i as f64 * h;
            assert_abs_diff_eq!(ci, 0.25 * x.powi(4), epsilon = 1e-12);
        }
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::new();
        c.add(1.0);
        for _ in 0..10_000 {
            c.add(1e-16);
        }
        assert_abs_diff_eq!(c.value(), 1.0 + 1e-12, epsilon = 1e-18);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| -2.5 * x + 0.7).collect();
        let (s, b) = least_squares_line(&xs, &ys);
        assert_abs_diff_eq!(s, -2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(r_squared(&xs, &ys, s, b), 1.0, epsilon = 1e-12);
    }
}
