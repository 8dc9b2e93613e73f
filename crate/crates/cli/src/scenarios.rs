//! Scenario implementations behind `expanse run`.
//!
//! Every scenario writes, into the output directory:
//! * one or more CSV series with fixed column order,
//! * `summary.jsonl` — one JSON object per reported quantity group,
//! * `checks.txt` — `PASS`/`FAIL` lines, one per invariant.
//!
//! Floats are printed with a fixed format so identical configs give
//! byte-identical artifacts.

use crate::config::{RunConfig, Scenario};
use expanse_core::affine::{decompose_linear_part, integrate, AffineIvp, AffineTrajectory};
use expanse_core::dynamics::radial::{run_radial, RadialGrid};
use expanse_core::dynamics::{run_full3d, Full3dConfig, StepperConfig};
use expanse_core::field::{
    background_potential, divcurl_residual, force_field, ConvolutionConfig, KernelSpec,
};
use expanse_core::geometry::{flow_map_derivatives, BallGrid, GridSpec, VectorField};
use expanse_core::monitors::{curl_transport_residual, decay_fit, dissipation, energy_norm, vorticity_norm};
use expanse_core::profiles::admissibility_check;
use expanse_core::{Error, GasParams};
use nalgebra::Vector3;
use serde_json::json;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub enum RunError {
    Io(String),
    Numerical(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => RunError::Io(e.to_string()),
            other => RunError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub struct Outcome {
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_checks(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{tag} {}: {}", c.name, c.detail);
        }
        let _ = write!(
            s,
            "{} of {} checks passed",
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len()
        );
        s
    }
}

/// Collects checks and summary rows for one run.
struct Recorder {
    checks: Vec<Check>,
    summary: Vec<serde_json::Value>,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            checks: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn finish(self, out_dir: &Path) -> Result<Outcome, RunError> {
        let mut jsonl = String::new();
        for v in &self.summary {
            jsonl.push_str(&v.to_string());
            jsonl.push('\n');
        }
        fs::write(out_dir.join("summary.jsonl"), jsonl)?;
        let outcome = Outcome {
            checks: self.checks,
        };
        let mut table = String::new();
        for c in &outcome.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(table, "{tag} {}: {}", c.name, c.detail);
        }
        fs::write(out_dir.join("checks.txt"), table)?;
        Ok(outcome)
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut rec = Recorder::new();
    match cfg.scenario {
        Scenario::Affine => affine(cfg, &mut rec)?,
        Scenario::FieldValidation => field_validation(cfg, &mut rec)?,
        Scenario::Radial => radial(cfg, &mut rec)?,
        Scenario::Full3d => full3d(cfg, &mut rec)?,
        Scenario::Norms => norms(cfg, &mut rec)?,
        Scenario::Sweep => sweep(cfg, &mut rec)?,
    }
    rec.finish(&cfg.out_dir)
}

fn build_trajectory(params: GasParams, cfg: &RunConfig) -> Result<AffineTrajectory, RunError> {
    let ivp = AffineIvp::new(params, cfg.a0, cfg.a1, cfg.t_end)?;
    Ok(integrate(&ivp)?)
}

fn affine(cfg: &RunConfig, rec: &mut Recorder) -> Result<(), RunError> {
    let traj = build_trajectory(cfg.params, cfg)?;
    traj.export_csv(&cfg.out_dir.join("trajectory.csv"), 401)?;

    let n = 401;
    let e0 = traj.energy(0.0)?;
    let mut energy_drift = 0.0f64;
    let mut det_lambda_dev = 0.0f64;
    let mut linear_dev = 0.0f64;
    for i in 0..n {
        let t = cfg.t_end * i as f64 / (n - 1) as f64;
        let e = traj.energy(t)?;
        energy_drift = energy_drift.max(((e - e0) / e0).abs());
        let frame = traj.frame_at(t)?;
        det_lambda_dev = det_lambda_dev.max((frame.lambda.determinant() - 1.0).abs());
        let (a, _) = traj.sample(t)?;
        linear_dev = linear_dev.max((a - (cfg.a0 + t * cfg.a1)).norm());
    }
    rec.check(
        "energy-conservation",
        energy_drift <= 1e-8,
        format!("relative drift {}", fmt_f(energy_drift)),
    );
    rec.check(
        "det-lambda-unit",
        det_lambda_dev <= 1e-10,
        format!("max |det Λ − 1| = {}", fmt_f(det_lambda_dev)),
    );
    if cfg.params.delta == 0.0 {
        rec.check(
            "exact-linear",
            linear_dev <= 1e-10,
            format!("sup ‖A − (A0 + tA1)‖ = {}", fmt_f(linear_dev)),
        );
    }
    let mut summary = json!({
        "scenario": "affine",
        "gamma": cfg.params.gamma,
        "delta": cfg.params.delta,
        "energy_drift": energy_drift,
        "det_lambda_dev": det_lambda_dev,
        "linear_dev": linear_dev,
    });
    if cfg.params.delta > 0.0 && cfg.t_end >= 100.0 {
        let lp = decompose_linear_part(&traj, 1.0)?;
        let target_slope = 2.0 - 3.0 * cfg.params.gamma;
        if let Some(slope) = lp.accel_decay_slope {
            // The power-law tail needs a long horizon before the fit settles;
            // on short runs the slope is reported but not enforced.
            if cfg.t_end >= 1000.0 {
                rec.check(
                    "accel-decay-slope",
                    (slope - target_slope).abs() <= 0.05,
                    format!("fitted {slope:.4}, expected {target_slope:.4} ± 0.05"),
                );
            }
            summary["accel_decay_slope"] = json!(slope);
        }
        summary["b_minus_a1_over_delta"] = json!(lp.b_minus_a1 / cfg.params.delta);
    }
    rec.summary.push(summary);
    Ok(())
}

fn field_validation(cfg: &RunConfig, rec: &mut Recorder) -> Result<(), RunError> {
    let levels = [(12usize, 8usize, 16usize), (18, 12, 24), (24, 16, 32)];
    let mut csv = String::from("level,n_r,n_theta,n_phi,div_residual_rel,curl_residual_rel,center_potential\n");
    let mut residuals = Vec::new();
    let mut center_vals = Vec::new();
    for (lvl, &(n_r, n_t, n_p)) in levels.iter().enumerate() {
        let grid = BallGrid::build(GridSpec::new(n_r, n_t, n_p)?, &cfg.params)?;
        let conv = ConvolutionConfig::for_grid(&grid.spec);
        let kernel = KernelSpec::isotropic();
        let theta = VectorField::zeros(grid.n_nodes());
        let fmd = flow_map_derivatives(&grid, &theta)?;
        let ff = force_field(&grid, &cfg.params, &kernel, &theta, &fmd, &conv)?;
        let rep = divcurl_residual(&grid, &cfg.params, &kernel, &ff, &theta, &fmd);
        let div_rel = rep.div_residual / rep.source_norm;
        let curl_rel = rep.curl_residual / rep.source_norm;
        let center = background_potential(&grid, &kernel, &[Vector3::zeros()], &conv)?[0];
        if lvl == 1 {
            expanse_core::geometry::export_field_csv(
                &grid,
                &[
                    ("psi", &ff.psi),
                    ("g1", &ff.g.c[0]),
                    ("g2", &ff.g.c[1]),
                    ("g3", &ff.g.c[2]),
                ],
                &cfg.out_dir.join("field.csv"),
            )?;
        }
        residuals.push(div_rel);
        center_vals.push(center);
        let _ = writeln!(
            csv,
            "{lvl},{n_r},{n_t},{n_p},{},{},{}",
            fmt_f(div_rel),
            fmt_f(curl_rel),
            fmt_f(center)
        );
    }
    fs::write(cfg.out_dir.join("convergence.csv"), csv)?;
    rec.check(
        "poisson-residual-decreasing",
        residuals[0] > residuals[1] && residuals[1] > residuals[2],
        format!(
            "relative residuals {} → {} → {}",
            fmt_f(residuals[0]),
            fmt_f(residuals[1]),
            fmt_f(residuals[2])
        ),
    );
    if (cfg.params.gamma - 2.0).abs() < 1e-12 {
        let err = (center_vals[1] - std::f64::consts::PI / 4.0).abs();
        rec.check(
            "center-potential-oracle",
            err <= 1e-3,
            format!("|Ψ̄(0) − π/4| = {}", fmt_f(err)),
        );
    }
    rec.summary.push(json!({
        "scenario": "field_validation",
        "gamma": cfg.params.gamma,
        "div_residuals": residuals,
        "center_potentials": center_vals,
    }));
    Ok(())
}

fn radial_initial_profile(grid: &RadialGrid, amp: f64) -> Vec<f64> {
    // Smooth, center-regular bump vanishing to first order at the boundary.
    grid.r.iter().map(|&r| amp * r * (1.0 - r * r)).collect()
}

fn radial(cfg: &RunConfig, rec: &mut Recorder) -> Result<(), RunError> {
    let grid = RadialGrid::build(cfg.n_radial, &cfg.params)?;
    let traj = build_trajectory(cfg.params, cfg)?;
    let tau_cap = traj.tau_of_t(cfg.t_end)?;
    let tau_max = cfg.tau_max.min(tau_cap * 0.999);
    let stepper = StepperConfig {
        cfl: cfg.cfl,
        max_dtau: cfg.max_dtau,
        force_cadence: cfg.force_cadence,
        field_enabled: cfg.field_enabled,
    };
    let theta0 = radial_initial_profile(&grid, cfg.theta0_amp);
    let v0 = radial_initial_profile(&grid, cfg.v0_amp);
    let run = run_radial(&grid, &traj, &theta0, &v0, tau_max, &stepper, cfg.sample_every)?;

    let mut csv = String::from("tau,t,mu,S_norm,B_norm,D_norm,mass,max_J_dev,apriori_flag\n");
    let mut scatter = String::from("tau,t,boundary_radius,center_density,t3_rho\n");
    for s in &run.series {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f(s.tau),
            fmt_f(s.t),
            fmt_f(s.mu),
            fmt_f(s.s_norm),
            fmt_f(s.b_norm),
            fmt_f(s.d_norm),
            fmt_f(s.mass),
            fmt_f(s.max_j_dev),
            u8::from(s.apriori_flag)
        );
        let _ = writeln!(
            scatter,
            "{},{},{},{},{}",
            fmt_f(s.tau),
            fmt_f(s.t),
            fmt_f(s.boundary_radius),
            fmt_f(s.center_density),
            fmt_f(s.t.powi(3) * s.center_density)
        );
    }
    fs::write(cfg.out_dir.join("run.csv"), csv)?;
    fs::write(cfg.out_dir.join("scattering.csv"), scatter)?;

    let m0 = run.series[0].mass;
    let mass_drift = run
        .series
        .iter()
        .map(|s| ((s.mass - m0) / m0).abs())
        .fold(0.0, f64::max);
    rec.check(
        "mass-conservation",
        mass_drift <= 1e-6,
        format!("relative drift {}", fmt_f(mass_drift)),
    );
    let tripped = run.series.iter().any(|s| s.apriori_flag);
    rec.check(
        "apriori-bounds",
        !tripped,
        if tripped {
            "smallness bounds tripped".to_string()
        } else {
            "‖θ‖ and ‖𝒥−1‖ stayed below 1/3".to_string()
        },
    );

    // Linear expansion and scattering over the last time decade.
    let t_hi = run.series.last().map(|s| s.t).unwrap_or(0.0);
    let tail: Vec<_> = run.series.iter().filter(|s| s.t >= 0.1 * t_hi).collect();
    let mut summary = json!({
        "scenario": "radial",
        "gamma": cfg.params.gamma,
        "delta": cfg.params.delta,
        "sup_s_norm": run.sup_s_norm,
        "mass_drift": mass_drift,
        "tau_max": tau_max,
    });
    if tail.len() >= 10 && t_hi > 10.0 {
        let xs: Vec<f64> = tail.iter().map(|s| s.t).collect();
        let ys: Vec<f64> = tail.iter().map(|s| s.boundary_radius).collect();
        let (slope, intercept) = expanse_core::numerics::least_squares_line(&xs, &ys);
        let r2 = expanse_core::numerics::r_squared(&xs, &ys, slope, intercept);
        rec.check(
            "boundary-linear-expansion",
            r2 >= 0.999,
            format!("R² = {r2:.6}, slope {slope:.6}"),
        );
        let t3r: Vec<f64> = tail.iter().map(|s| s.t.powi(3) * s.center_density).collect();
        let base = t3r[t3r.len() - 1];
        let drift = t3r
            .iter()
            .map(|&v| ((v - base) / base).abs())
            .fold(0.0, f64::max);
        rec.check(
            "scattering-density-limit",
            drift < 0.05,
            format!("t³ρ(center) relative drift {drift:.4} over last decade"),
        );
        summary["boundary_slope"] = json!(slope);
        summary["boundary_fit_r2"] = json!(r2);
        summary["t3_rho_drift"] = json!(drift);
    }
    rec.summary.push(summary);
    Ok(())
}

fn full3d(cfg: &RunConfig, rec: &mut Recorder) -> Result<(), RunError> {
    let grid = BallGrid::build(GridSpec::new(cfg.n_r, cfg.n_theta, cfg.n_phi)?, &cfg.params)?;
    let conv = ConvolutionConfig::for_grid(&grid.spec);
    let traj = build_trajectory(cfg.params, cfg)?;
    let theta0 = VectorField::from_fn(&grid, |y| {
        cfg.theta0_amp * (1.0 - y.norm_squared()) * y
    });
    let v0 = VectorField::from_fn(&grid, |y| {
        cfg.v0_amp * Vector3::new(-y[1], y[0], 0.0)
    });
    let run_cfg = Full3dConfig {
        tau_max: cfg.tau_max,
        stepper: StepperConfig {
            cfl: cfg.cfl,
            max_dtau: cfg.max_dtau,
            force_cadence: cfg.force_cadence,
            field_enabled: cfg.field_enabled,
        },
        snapshot_every: 1,
    };
    let run = run_full3d(&grid, &traj, &conv, &theta0, &v0, &run_cfg)?;

    let mut csv = String::from("tau,t,mu,S_norm,B_norm,D_norm,mass,max_J_dev,apriori_flag\n");
    let mut taus = Vec::new();
    let mut b_series = Vec::new();
    let n_ord = cfg.norm_order;
    for (snap, diag) in run.snapshots.iter().zip(&run.diagnostics) {
        let frame = traj.frame_at_tau(snap.tau)?;
        let fmd = flow_map_derivatives(&grid, &snap.theta)?;
        let s = energy_norm(&grid, &cfg.params, frame.mu, &snap.theta, &snap.v, &fmd, n_ord);
        let b = vorticity_norm(&grid, &snap.v, &fmd, &frame.lambda, n_ord);
        let d = dissipation(&grid, &cfg.params, frame.mu, &snap.v, n_ord)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f(snap.tau),
            fmt_f(diag.t),
            fmt_f(diag.mu),
            fmt_f(s.total),
            fmt_f(b),
            fmt_f(d),
            fmt_f(diag.mass),
            fmt_f(diag.max_j_dev),
            u8::from(diag.apriori_flag)
        );
        taus.push(snap.tau);
        b_series.push(b);
    }
    fs::write(cfg.out_dir.join("run.csv"), csv)?;

    let m0 = run.diagnostics[0].mass;
    let mass_drift = run
        .diagnostics
        .iter()
        .map(|d| ((d.mass - m0) / m0).abs())
        .fold(0.0, f64::max);
    rec.check(
        "mass-conservation",
        mass_drift <= 1e-6,
        format!("relative drift {}", fmt_f(mass_drift)),
    );

    let mut summary = json!({
        "scenario": "full3d",
        "gamma": cfg.params.gamma,
        "delta": cfg.params.delta,
        "steps": run.snapshots.len(),
        "mass_drift": mass_drift,
    });

    // Curl-transport residual at two stencil widths: the τ-stencil is 2nd
    // order, so doubling the width should grow the residual ≈ 4×.
    if run.snapshots.len() >= 5 {
        let fine = curl_transport_residual(&grid, &traj, &run.snapshots, 1)?;
        let coarse = curl_transport_residual(&grid, &traj, &run.snapshots, 2)?;
        let mid = |v: &[(f64, f64)]| v[v.len() / 2].1;
        let (rf, rc) = (mid(&fine), mid(&coarse));
        let ratio = rc / rf.max(1e-300);
        rec.check(
            "curl-transport-stencil-order",
            ratio >= 2.0,
            format!("residual ratio coarse/fine = {ratio:.3} (2nd-order stencil ⇒ ≈ 4)"),
        );
        summary["curl_residual_fine"] = json!(rf);
        summary["curl_residual_ratio"] = json!(ratio);
    }

    if cfg.v0_amp != 0.0 && taus.len() >= 10 {
        let (exponent, r2) = decay_fit(&taus, &b_series, 0.5)?;
        let lp = decompose_linear_part(&traj, 1.0).ok();
        let mu1 = lp
            .map(|l| l.b.determinant().powf(1.0 / 3.0))
            .unwrap_or(1.0);
        let mu0 = (3.0 * cfg.params.gamma - 3.0) / 2.0 * mu1;
        rec.check(
            "vorticity-decay",
            exponent <= -2.0 * mu0 * 0.85,
            format!("fitted exponent {exponent:.4} vs threshold {:.4}", -2.0 * mu0 * 0.85),
        );
        summary["b_decay_exponent"] = json!(exponent);
        summary["b_decay_fit_r2"] = json!(r2);
    }
    rec.summary.push(summary);
    Ok(())
}

fn norms(cfg: &RunConfig, rec: &mut Recorder) -> Result<(), RunError> {
    let mut csv = String::from(
        "gamma,alpha,reciprocal_integer,below_14_13,admissible,boundary_slope,weight_sum,max_growth_ratio\n",
    );
    let mut rows = Vec::new();
    for &gamma in &cfg.gammas {
        let params = GasParams::new(gamma, cfg.params.delta, cfg.params.field_sign)?;
        let adm = admissibility_check(&params, cfg.norm_order.max(2), 96);
        let max_ratio = adm
            .growth_ratios
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            csv,
            "{gamma},{},{},{},{},{},{},{}",
            fmt_f(params.alpha()),
            adm.reciprocal_integer.map_or(String::from("-"), |n| n.to_string()),
            adm.below_14_13,
            adm.admissible,
            fmt_f(adm.boundary_slope),
            adm.weight_sum.map_or(String::from("-"), fmt_f),
            fmt_f(max_ratio)
        );
        if adm.admissible {
            rec.check(
                &format!("weight-sum-finite-gamma-{gamma}"),
                adm.weight_sum.is_some(),
                format!("refinement ratios max {max_ratio:.6}"),
            );
        }
        rows.push(json!({
            "gamma": gamma,
            "alpha": params.alpha(),
            "admissible": adm.admissible,
            "weight_sum": adm.weight_sum,
            "max_growth_ratio": max_ratio,
        }));
    }
    fs::write(cfg.out_dir.join("norms.csv"), csv)?;
    rec.summary.push(json!({ "scenario": "norms", "rows": rows }));
    Ok(())
}

fn sweep(cfg: &RunConfig, rec: &mut Recorder) -> Result<(), RunError> {
    let mut csv = String::from("delta,b_minus_a1_over_delta,sup_s_norm\n");
    let mut b_devs = Vec::new();
    let mut log_d = Vec::new();
    let mut log_s = Vec::new();
    for &delta in &cfg.deltas {
        let params = GasParams::new(cfg.params.gamma, delta, cfg.params.field_sign)?;
        let ivp = AffineIvp::new(params, cfg.a0, cfg.a1, cfg.t_end)?;
        let traj = integrate(&ivp)?;
        let lp = decompose_linear_part(&traj, 1.0)?;
        let b_dev = lp.b_minus_a1 / delta;
        b_devs.push(b_dev);

        let grid = RadialGrid::build(cfg.n_radial, &params)?;
        let stepper = StepperConfig {
            cfl: cfg.cfl,
            max_dtau: cfg.max_dtau,
            force_cadence: cfg.force_cadence,
            field_enabled: cfg.field_enabled,
        };
        let z = vec![0.0; grid.n];
        let run = run_radial(&grid, &traj, &z, &z, cfg.tau_max, &stepper, cfg.sample_every)?;
        let _ = writeln!(csv, "{delta},{},{}", fmt_f(b_dev), fmt_f(run.sup_s_norm));
        if run.sup_s_norm > 0.0 {
            log_d.push(delta.ln());
            log_s.push(run.sup_s_norm.ln());
        }
    }
    fs::write(cfg.out_dir.join("sweep.csv"), csv)?;

    let b_min = b_devs.iter().cloned().fold(f64::INFINITY, f64::min);
    let b_max = b_devs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    rec.check(
        "drift-deviation-uniform-in-delta",
        b_max < 2.0 * b_min,
        format!("‖b − A1‖/δ ∈ [{}, {}]", fmt_f(b_min), fmt_f(b_max)),
    );
    let mut summary = json!({
        "scenario": "sweep",
        "gamma": cfg.params.gamma,
        "deltas": cfg.deltas,
        "b_minus_a1_over_delta": b_devs,
    });
    if log_d.len() >= 3 {
        let (slope, _) = expanse_core::numerics::least_squares_line(&log_d, &log_s);
        let target = 2.0 * cfg.params.alpha() - 1.0;
        rec.check(
            "zero-data-response-slope",
            (slope - target).abs() <= 0.3,
            format!("log-slope {slope:.3}, bootstrap size exponent {target:.3} ± 0.3"),
        );
        summary["response_slope"] = json!(slope);
    }
    rec.summary.push(summary);
    Ok(())
}
