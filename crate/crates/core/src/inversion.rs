//! Low-pass reconstruction of potential differences from generalized amplitudes
//! and the logarithmic stability experiment.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faddeev::{amplitude_h, solve_cgo, theta_pair};
use crate::forward::{data_discrepancy, far_field_on_sphere, near_field_matrix};
use crate::gmres::SolverConfig;
use crate::grid::{norm, Grid3};
use crate::medium::{make_phantom, potential_of, sobolev_norm, weighted_sup_norm, Bump, FourierSample, Potential};
use crate::parallel::{par_map, try_par_map};
use crate::quadrature::SphereQuadrature;

/// Smallest `δ` used in place of an exact zero discrepancy.
pub const DELTA_FLOOR: f64 = 1e-300;

/// Parameters `ρ(δ)` and `κ(ρ)` of the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub tau: f64,
    pub r2: f64,
    pub beta: f64,
    pub delta: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub energy: f64,
}

/// `β = (1 − τ)/(2r₂)`, `ρ = β ln(3 + δ⁻¹)`, `κ = ε (E + ρ²)^{1/6}`.
pub fn schedule_from_delta(delta: f64, tau: f64, r2: f64, energy: f64, epsilon: f64) -> Result<Schedule> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {tau}")));
    }
    if !(r2 > 0.0 && delta > 0.0 && epsilon > 0.0 && energy > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "schedule needs r2, delta, epsilon, E > 0 (got {r2}, {delta}, {epsilon}, {energy})"
        )));
    }
    let beta = (1.0 - tau) / (2.0 * r2);
    let rho = beta * log_term(delta);
    let kappa = epsilon * (energy + rho * rho).powf(1.0 / 6.0);
    let s = Schedule {
        tau,
        r2,
        beta,
        delta,
        rho,
        epsilon,
        kappa,
        energy,
    };
    s.check_admissible()?;
    Ok(s)
}

impl Schedule {
    /// `κ² ≤ 4(E + ρ²)`.
    pub fn check_admissible(&self) -> Result<()> {
        let limit = 4.0 * (self.energy + self.rho * self.rho);
        if self.kappa * self.kappa > limit {
            return Err(Error::ScheduleInadmissible {
                kappa_squared: self.kappa * self.kappa,
                limit,
            });
        }
        Ok(())
    }

    pub fn with_rho(self, rho: f64) -> Self {
        Self { rho, ..self }
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }
}

/// `ln(3 + δ⁻¹)`.
pub fn log_term(delta: f64) -> f64 {
    (3.0 + 1.0 / delta).ln()
}

/// Exponent `s = (m − 3)/3` of the stability estimate.
pub fn stability_exponent(m: u32) -> f64 {
    (m as f64 - 3.0) / 3.0
}

/// `C (ln(3 + δ⁻¹))^{−s}`.
pub fn theoretical_bound(delta: f64, s: f64, c: f64) -> f64 {
    c * log_term(delta).powf(-s)
}

/// `8π c₄ N / (m − 3) · κ^{−(m−3)}`.
pub fn tail_bound(norm_budget: f64, m: u32, kappa: f64, c4: f64) -> Result<f64> {
    if m <= 3 {
        return Err(Error::InvalidArgument(format!("tail bound needs m > 3, got {m}")));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    let e = m as f64 - 3.0;
    Ok(8.0 * PI * c4 * norm_budget / e * kappa.powf(-e))
}

/// Empirical constants of the tail estimate for a pair of potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConstants {
    /// `‖ŵ‖_m / ‖w‖_{m,1}` for `w = v₂ − v₁`.
    pub c4: f64,
    /// `max_j ‖v_j‖_{m,1}`.
    pub norm_budget: f64,
    pub resolved: bool,
}

/// Measures `c₄` and `N` from lattice samples of `ŵ`.
pub fn measure_tail_constants(
    v1: &Potential,
    v2: &Potential,
    w_hat: &[FourierSample],
    m: u32,
) -> Result<TailConstants> {
    let w = v2.difference(v1)?;
    let sw = sobolev_norm(&v1.grid, &w, m);
    let s1 = sobolev_norm(&v1.grid, &v1.samples, m);
    let s2 = sobolev_norm(&v2.grid, &v2.samples, m);
    let c4 = if sw.value == 0.0 {
        0.0
    } else {
        weighted_sup_norm(w_hat, m as f64)? / sw.value
    };
    Ok(TailConstants {
        c4,
        norm_budget: s1.value.max(s2.value),
        resolved: sw.resolved && s1.resolved && s2.resolved,
    })
}

/// `(I₁(κ), I₂(κ))`: lattice quadrature of `|ŵ|` inside and outside `|p| < κ`.
pub fn split_integrals(samples: &[FourierSample], spacing: f64, kappa: f64) -> (f64, f64) {
    let cell = spacing.powi(3);
    let mut low = 0.0;
    let mut tail = 0.0;
    for s in samples {
        if norm(s.p) < kappa {
            low += s.value.norm();
        } else {
            tail += s.value.norm();
        }
    }
    (low * cell, tail * cell)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs two or more matching points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("slope fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Integer lattice nodes `n` with `|n| Δp ≤ κ`, in lexicographic order.
pub fn ball_lattice(spacing: f64, kappa: f64) -> Vec<[i64; 3]> {
    let r = (kappa / spacing * (1.0 + 1e-12)).floor() as i64;
    let lim = (kappa / spacing) * (kappa / spacing) * (1.0 + 1e-12);
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                if ((a * a + b * b + c * c) as f64) <= lim {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// Coarsest admissible spacing of the `p`-lattice for a grid.
pub fn max_lattice_spacing(grid: &Grid3) -> f64 {
    PI / (2.0 * grid.half_extent())
}

/// `w(x) = Σ_{|p| ≤ κ} e^{−ip·x} ŵ(p) Δp³` on every node of `grid`.
pub fn lowpass_reconstruct(
    samples: &[FourierSample],
    spacing: f64,
    kappa: f64,
    grid: &Grid3,
) -> Result<Vec<Complex64>> {
    let max_spacing = max_lattice_spacing(grid);
    if !(spacing > 0.0) || spacing > max_spacing * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "p-lattice spacing {spacing} exceeds the sampling limit {max_spacing}"
        )));
    }
    if kappa > grid.nyquist() * (1.0 + 1e-12) {
        return Err(Error::BeyondNyquist {
            norm: kappa,
            nyquist: grid.nyquist(),
        });
    }
    let r = (kappa / spacing * (1.0 + 1e-12)).floor() as i64;
    let side = (2 * r + 1) as usize;
    let mut coeff = vec![Complex64::new(0.0, 0.0); side * side * side];
    let mut seen = vec![false; coeff.len()];
    for s in samples {
        let n = s.p.map(|c| (c / spacing).round());
        let off = [0, 1, 2].map(|a| (s.p[a] - n[a] * spacing).abs());
        if off.iter().any(|d| *d > 1e-9 * spacing.max(1.0)) {
            return Err(Error::SamplingMismatch(format!("sample {:?} is not on the p-lattice", s.p)));
        }
        if norm(s.p) > kappa * (1.0 + 1e-12) {
            return Err(Error::SamplingMismatch(format!("sample {:?} lies outside |p| <= {kappa}", s.p)));
        }
        let idx = n.map(|c| (c as i64 + r) as usize);
        let flat = (idx[0] * side + idx[1]) * side + idx[2];
        if seen[flat] {
            return Err(Error::SamplingMismatch(format!("duplicate sample at {:?}", s.p)));
        }
        seen[flat] = true;
        coeff[flat] = s.value;
    }
    let expected = ball_lattice(spacing, kappa).len();
    if samples.len() != expected {
        return Err(Error::SamplingMismatch(format!(
            "{} samples given for {expected} lattice nodes in the ball",
            samples.len()
        )));
    }
    let n = grid.points_per_axis();
    // phase[m][i] = e^{−i (m − r) Δp x_i}
    let phase: Vec<Complex64> = (0..side)
        .flat_map(|m| {
            let p = (m as i64 - r) as f64 * spacing;
            (0..n).map(move |i| Complex64::from_polar(1.0, -p * grid.coord(i)))
        })
        .collect();
    // contract axis 2, then 1, then 0
    let mut t2 = vec![Complex64::new(0.0, 0.0); side * side * n];
    for ab in 0..side * side {
        let row = &coeff[ab * side..(ab + 1) * side];
        if row.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            continue;
        }
        for (m, c) in row.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let ph = &phase[m * n..(m + 1) * n];
            for k in 0..n {
                t2[ab * n + k] += c * ph[k];
            }
        }
    }
    let mut t1 = vec![Complex64::new(0.0, 0.0); side * n * n];
    for a in 0..side {
        for b in 0..side {
            let src = &t2[(a * side + b) * n..(a * side + b + 1) * n];
            let ph = &phase[b * n..(b + 1) * n];
            for j in 0..n {
                let dst = &mut t1[(a * n + j) * n..(a * n + j + 1) * n];
                for k in 0..n {
                    dst[k] += src[k] * ph[j];
                }
            }
        }
    }
    let cell = spacing.powi(3);
    let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
    for a in 0..side {
        let ph = &phase[a * n..(a + 1) * n];
        let src = &t1[a * n * n..(a + 1) * n * n];
        for i in 0..n {
            let f = ph[i] * cell;
            let dst = &mut out[i * n * n..(i + 1) * n * n];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * f;
            }
        }
    }
    Ok(out)
}

/// `max |a − b|` over nodes with `|x| < r`.
pub fn linf_in_ball(grid: &Grid3, a: &[Complex64], b: &[Complex64], r: f64) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(idx, _)| norm(grid.node_of_index(*idx)) < r)
        .map(|(_, (x, y))| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Overrides applied on top of a schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReconOptions {
    pub rho: Option<f64>,
    pub kappa: Option<f64>,
    /// `p`-lattice spacing; defaults to the coarsest admissible one.
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Low-pass estimate of `v₂ − v₁`.
    pub field: Vec<Complex64>,
    /// `(p, h₂ − h₁)` for every retained lattice node.
    pub samples: Vec<FourierSample>,
    pub dropped: usize,
    pub rho: f64,
    pub kappa: f64,
    pub spacing: f64,
    /// `‖(v₂ − v₁) − field‖_{L∞(B_{r₁})}`.
    pub err_linf: f64,
    /// `‖v₂ − v₁‖_{L∞(B_{r₁})}`.
    pub diff_linf: f64,
    pub max_residual: f64,
}

/// Estimates `v̂₂ − v̂₁` on `|p| ≤ κ` by `h₂(k, l) − h₁(k, l)` and inverts.
pub fn reconstruct_difference(
    v1: &Potential,
    v2: &Potential,
    schedule: &Schedule,
    opts: &ReconOptions,
    cfg: &SolverConfig,
) -> Result<Reconstruction> {
    if v1.grid != v2.grid {
        return Err(Error::SamplingMismatch("potentials live on different grids".into()));
    }
    if v1.energy != v2.energy {
        return Err(Error::SamplingMismatch("potentials have different energies".into()));
    }
    let grid = v1.grid;
    let rho = opts.rho.unwrap_or(schedule.rho);
    let kappa = opts.kappa.unwrap_or(schedule.kappa);
    let spacing = opts.spacing.unwrap_or_else(|| max_lattice_spacing(&grid));
    let energy = v1.energy;
    let lattice = ball_lattice(spacing, kappa);
    let identical = v1.samples == v2.samples;
    let jobs = try_par_map(&lattice, |n| -> Result<Option<(FourierSample, f64)>> {
        let p = n.map(|c| c as f64 * spacing);
        if identical {
            return Ok(Some((
                FourierSample {
                    p,
                    value: Complex64::new(0.0, 0.0),
                },
                0.0,
            )));
        }
        let pair = match theta_pair(p, energy, rho, 0.0) {
            Ok(pair) => pair,
            Err(Error::Inadmissible { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let c1 = solve_cgo(v1, &pair.k, cfg)?;
        let c2 = solve_cgo(v2, &pair.k, cfg)?;
        let dh = amplitude_h(v2, &c2, &pair.l)? - amplitude_h(v1, &c1, &pair.l)?;
        Ok(Some((FourierSample { p, value: dh }, c1.residual.max(c2.residual))))
    })?;
    let mut samples = Vec::with_capacity(lattice.len());
    let mut dropped = 0;
    let mut max_residual = 0.0f64;
    for (n, job) in lattice.iter().zip(jobs) {
        match job {
            Some((s, res)) => {
                samples.push(s);
                max_residual = max_residual.max(res);
            }
            None => {
                dropped += 1;
                samples.push(FourierSample {
                    p: n.map(|c| c as f64 * spacing),
                    value: Complex64::new(0.0, 0.0),
                });
            }
        }
    }
    if dropped > 0 {
        log::warn!("{dropped} inadmissible lattice nodes dropped (rho = {rho}, kappa = {kappa})");
    }
    let field = lowpass_reconstruct(&samples, spacing, kappa, &grid)?;
    let truth = v2.difference(v1)?;
    let zero = vec![Complex64::new(0.0, 0.0); truth.len()];
    let r1 = v1.support_radius.max(v2.support_radius);
    Ok(Reconstruction {
        err_linf: linf_in_ball(&grid, &truth, &field, r1),
        diff_linf: linf_in_ball(&grid, &truth, &zero, r1),
        field,
        samples,
        dropped,
        rho,
        kappa,
        spacing,
        max_residual,
    })
}

/// A stability experiment: `v₁` from `base`, `v₂` from `base` plus the
/// perturbation scaled by each `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: Vec<Bump>,
    pub perturbation: Vec<Bump>,
    pub half_extent: f64,
    pub points_per_axis: usize,
    pub r1: f64,
    pub m: u32,
    pub omega: f64,
    pub alphas: Vec<f64>,
    pub tau: f64,
    pub r2: f64,
    pub epsilon: f64,
    /// Radius of the measurement sphere.
    pub r: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Direction quadrature for `δ_far`; `None` skips far-field data.
    pub far_quad: Option<(usize, usize)>,
    pub solver: SolverConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: vec![Bump::new([0.0; 3], 0.5, Complex64::new(-0.1, 0.0))],
            perturbation: vec![Bump::new([0.3, 0.0, 0.0], 0.4, Complex64::new(-0.05, 0.0))],
            half_extent: 2.0,
            points_per_axis: 32,
            r1: 1.0,
            m: 6,
            omega: 2.0,
            alphas: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            tau: 0.5,
            r2: 1.8,
            epsilon: 1.0,
            r: 1.5,
            n_theta: 16,
            n_phi: 32,
            far_quad: Some((8, 16)),
            solver: SolverConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> Result<Grid3> {
        Grid3::new(self.half_extent, self.points_per_axis)
    }

    pub fn potentials(&self, alpha: f64) -> Result<(Potential, Potential)> {
        let grid = self.grid()?;
        let n1 = make_phantom(&self.base, grid, self.r1, self.m)?;
        let mut bumps = self.base.clone();
        bumps.extend(self.perturbation.iter().map(|b| b.scaled(alpha)));
        let n2 = make_phantom(&bumps, grid, self.r1, self.m)?;
        Ok((potential_of(&n1, self.omega)?, potential_of(&n2, self.omega)?))
    }

    fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::InvalidArgument("empty alpha ladder".into()));
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidArgument("alphas must be finite and nonnegative".into()));
        }
        if self.r <= self.r1 {
            return Err(Error::InvalidArgument(format!(
                "measurement radius r = {} must exceed r1 = {}",
                self.r, self.r1
            )));
        }
        if self.r2 <= self.r {
            return Err(Error::InvalidArgument(format!("r2 = {} must exceed r = {}", self.r2, self.r)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub delta_near: f64,
    pub delta_far: Option<f64>,
    pub rho: f64,
    pub kappa: f64,
    pub err_linf: f64,
    pub diff_linf: f64,
    /// `C_fit (ln(3 + δ⁻¹))^{−s}`.
    pub bound: f64,
    pub s: f64,
    pub c_fit: f64,
    /// `δ` was zero and replaced by the floor.
    pub degenerate: bool,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    /// Completed rungs sorted by `α`.
    pub records: Vec<SweepRecord>,
    /// `(α, reason)` of rungs that failed.
    pub failures: Vec<(f64, String)>,
    pub c_fit: f64,
    pub s: f64,
}

impl SweepOutcome {
    /// Rungs where the envelope does not hold.
    pub fn violations(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.err_linf > r.bound)
            .map(|r| r.alpha)
            .collect()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("alpha,delta_near,delta_far,rho,kappa,err_linf,bound,s,C_fit\n");
        for r in &self.records {
            let far = r.delta_far.map(fmt_float).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                fmt_float(r.alpha),
                fmt_float(r.delta_near),
                far,
                fmt_float(r.rho),
                fmt_float(r.kappa),
                fmt_float(r.err_linf),
                fmt_float(r.bound),
                fmt_float(r.s),
                fmt_float(r.c_fit)
            ));
        }
        out
    }

    /// Two-column `ln(3 + 1/δ), err` plot data for non-degenerate rungs.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("ln(3+1/delta),err\n");
        for r in self.records.iter().filter(|r| !r.degenerate) {
            out.push_str(&format!("{},{}\n", fmt_float(log_term(r.delta_near)), fmt_float(r.err_linf)));
        }
        out
    }
}

/// Float formatting with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Upper-envelope constant `max err · (ln(3 + δ⁻¹))^s` over non-degenerate rungs.
pub fn fit_envelope(points: &[(f64, f64)], s: f64) -> f64 {
    points
        .iter()
        .map(|(delta, err)| err * log_term(*delta).powf(s))
        .fold(0.0, f64::max)
        * (1.0 + 4.0 * f64::EPSILON)
}

struct RungResult {
    alpha: f64,
    delta_near: f64,
    delta_far: Option<f64>,
    degenerate: bool,
    recon: Reconstruction,
}

pub fn stability_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let (v1, _) = cfg.potentials(0.0)?;
    let quad = SphereQuadrature::new(cfg.r, cfg.n_theta, cfg.n_phi)?;
    let near1 = near_field_matrix(&v1, &quad, &cfg.solver)?;
    let dirs = cfg.far_quad.map(|(a, b)| SphereQuadrature::unit(a, b)).transpose()?;
    let far1 = dirs
        .as_ref()
        .map(|d| far_field_on_sphere(&v1, d, &cfg.solver))
        .transpose()?;
    let s = stability_exponent(cfg.m);
    let rung = |alpha: &f64| -> Result<RungResult> {
        let (_, v2) = cfg.potentials(*alpha)?;
        let near2 = near_field_matrix(&v2, &quad, &cfg.solver)?;
        let delta_near = data_discrepancy(&near1, &near2)?;
        let delta_far = match (&dirs, &far1) {
            (Some(d), Some(f1)) => Some(data_discrepancy(f1, &far_field_on_sphere(&v2, d, &cfg.solver)?)?),
            _ => None,
        };
        let degenerate = delta_near == 0.0;
        let delta = delta_near.max(DELTA_FLOOR);
        let schedule = schedule_from_delta(delta, cfg.tau, cfg.r2, v1.energy, cfg.epsilon)?;
        let recon = reconstruct_difference(&v1, &v2, &schedule, &ReconOptions::default(), &cfg.solver)?;
        Ok(RungResult {
            alpha: *alpha,
            delta_near,
            delta_far,
            degenerate,
            recon,
        })
    };
    let results = par_map(&cfg.alphas, rung);
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for (alpha, res) in cfg.alphas.iter().zip(results) {
        match res {
            Ok(r) => done.push(r),
            Err(e) => {
                log::error!("sweep rung alpha = {alpha} aborted: {e}");
                failures.push((*alpha, e.to_string()));
            }
        }
    }
    done.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    failures.sort_by(|a, b| a.0.total_cmp(&b.0));
    let fit_points: Vec<(f64, f64)> = done
        .iter()
        .filter(|r| !r.degenerate)
        .map(|r| (r.delta_near, r.recon.err_linf))
        .collect();
    let c_fit = fit_envelope(&fit_points, s);
    let records = done
        .into_iter()
        .map(|r| {
            let delta = r.delta_near.max(DELTA_FLOOR);
            SweepRecord {
                alpha: r.alpha,
                delta_near: delta,
                delta_far: r.delta_far,
                rho: r.recon.rho,
                kappa: r.recon.kappa,
                err_linf: r.recon.err_linf,
                diff_linf: r.recon.diff_linf,
                bound: theoretical_bound(delta, s, c_fit),
                s,
                c_fit,
                degenerate: r.degenerate,
                dropped: r.recon.dropped,
            }
        })
        .collect();
    Ok(SweepOutcome {
        records,
        failures,
        c_fit,
        s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        let s = schedule_from_delta(0.01, 0.5, 2.0, 4.0, 1.0).unwrap();
        assert_eq!(s.beta, 0.125);
        assert!((s.rho - 0.125 * 103f64.ln()).abs() < 1e-15);
        assert_eq!(s.beta * 2.0 * s.r2 + s.tau, 1.0);
        let big = schedule_from_delta(1e9, 0.5, 2.0, 4.0, 1.0).unwrap();
        assert!((big.rho - 0.125 * 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn schedule_rejects_large_epsilon() {
        let err = schedule_from_delta(0.01, 0.5, 2.0, 4.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::ScheduleInadmissible { .. }));
        assert!(schedule_from_delta(0.01, 1.0, 2.0, 4.0, 1.0).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(stability_exponent(6), 1.0);
        let delta = 1.0 / (std::f64::consts::E.powi(2) - 3.0);
        assert!((theoretical_bound(delta, 1.5, 2.0) - 2.0 * 2f64.powf(-1.5)).abs() < 1e-14);
        let a = tail_bound(1.0, 6, 2.0, 1.0).unwrap();
        let b = tail_bound(1.0, 6, 4.0, 1.0).unwrap();
        assert!((a / b - 8.0).abs() < 1e-12);
        assert!(tail_bound(1.0, 3, 2.0, 1.0).is_err());
    }

    #[test]
    fn single_sample_is_constant() {
        let g = Grid3::new(2.0, 8).unwrap();
        let dp = max_lattice_spacing(&g);
        let c = Complex64::new(0.7, -0.2);
        let f = lowpass_reconstruct(&[FourierSample { p: [0.0; 3], value: c }], dp, 0.5 * dp, &g).unwrap();
        for z in f {
            assert!((z - c * dp.powi(3)).norm() < 1e-15);
        }
    }

    #[test]
    fn coarse_lattice_rejected() {
        let g = Grid3::new(2.0, 8).unwrap();
        let dp = 1.01 * max_lattice_spacing(&g);
        assert!(lowpass_reconstruct(&[FourierSample { p: [0.0; 3], value: Complex64::new(1.0, 0.0) }], dp, 0.5, &g).is_err());
    }

    #[test]
    fn incomplete_ball_rejected() {
        let g = Grid3::new(2.0, 8).unwrap();
        let dp = max_lattice_spacing(&g);
        let one = FourierSample { p: [0.0; 3], value: Complex64::new(1.0, 0.0) };
        assert!(lowpass_reconstruct(&[one], dp, 1.5 * dp, &g).is_err());
    }

    #[test]
    fn envelope_majorizes() {
        let pts = [(1e-3, 0.2), (1e-6, 0.05), (0.5, 0.3)];
        let c = fit_envelope(&pts, 1.0);
        for (d, e) in pts {
            assert!(e <= theoretical_bound(d, 1.0, c));
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 2.5).abs() < 1e-12);
    }
}
