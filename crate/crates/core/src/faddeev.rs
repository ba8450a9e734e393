//! Faddeev Green functions, complex geometrical optics solutions and the
//! generalized scattering amplitude.
//!
//! Writing `k = a + ib` and shifting `ξ = η − a`, the Faddeev kernel becomes
//!
//! ```text
//! g(z, k) = e^{−ia·z} D_b(z),   D_b(z) = −(2π)^{-3} ∫ e^{iη·z} / ((η + ib)² − E) dη,
//! G(z, k) = e^{ik·z} g(z, k) = e^{−b·z} D_b(z).
//! ```
//!
//! `D_b` is synthesized by a midpoint rule on the symmetric half-shifted lattice
//! `η_n = (n + ½)Δη`, `Δη = 2π/(Qh)`, `Q = 2N`, one inverse FFT per `(b, E)`.
//! The lattice is invariant under `η → −η`, so `D_{−b}(z) = D_b(−z)` holds on the
//! grid and with it `G(z, −l) = G(−z, k)` for every pair with `Im k = Im l`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{Convolver, Fft3};
use crate::forward::SecondKindOperator;
use crate::gmres::{gmres, SolverConfig};
use crate::grid::{add, cross, dot, norm, scale, sub, Grid3, IndexBox, Vec3};
use crate::medium::{fourier_hat, FourierSample, Potential};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Denominators of the kernel symbol smaller than this are floored.
pub const SYMBOL_FLOOR: f64 = 1e-12;

/// `ρ` below `RHO_MIN_FACTOR · max(1, √E)` triggers a contraction warning.
pub const RHO_MIN_FACTOR: f64 = 0.5;

const CONSTRAINT_TOL: f64 = 1e-12;

/// `k = re + i·im` on `Σ_E = {k ∈ ℂ³ : k² = E}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexWaveVector {
    pub re: Vec3,
    pub im: Vec3,
    pub energy: f64,
}

impl ComplexWaveVector {
    pub fn new(re: Vec3, im: Vec3, energy: f64) -> Result<Self> {
        let k = Self { re, im, energy };
        let scale = (dot(re, re) + dot(im, im)).max(energy.abs()).max(1.0);
        let sq = k.square();
        if (sq.re - energy).abs() > CONSTRAINT_TOL * scale || sq.im.abs() > CONSTRAINT_TOL * scale {
            return Err(Error::InvalidArgument(format!(
                "k·k = {sq} is not on the energy shell E = {energy}"
            )));
        }
        Ok(k)
    }

    /// `k·k` (no conjugation).
    pub fn square(&self) -> Complex64 {
        Complex64::new(
            dot(self.re, self.re) - dot(self.im, self.im),
            2.0 * dot(self.re, self.im),
        )
    }

    /// `|k| = (|Re k|² + |Im k|²)^{1/2}`.
    pub fn modulus(&self) -> f64 {
        (dot(self.re, self.re) + dot(self.im, self.im)).sqrt()
    }

    pub fn rho(&self) -> f64 {
        norm(self.im)
    }

    pub fn neg(&self) -> Self {
        Self {
            re: scale(self.re, -1.0),
            im: scale(self.im, -1.0),
            energy: self.energy,
        }
    }

    /// `e^{ik·x}`.
    pub fn plane_wave(&self, x: Vec3) -> Complex64 {
        (Complex64::new(-dot(self.im, x), dot(self.re, x))).exp()
    }
}

/// `(k, l) ∈ Θ_E`: `k² = l² = E`, `Im k = Im l`, `p = k − l` real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaPair {
    pub k: ComplexWaveVector,
    pub l: ComplexWaveVector,
    pub p: Vec3,
    pub rho: f64,
}

impl ThetaPair {
    /// Largest violation among the defining constraints.
    pub fn constraint_defect(&self) -> f64 {
        let e = self.k.energy;
        let kk = self.k.square();
        let ll = self.l.square();
        let mut d = [
            (kk.re - e).abs(),
            kk.im.abs(),
            (ll.re - e).abs(),
            ll.im.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        for a in 0..3 {
            d = d.max((self.k.im[a] - self.l.im[a]).abs());
            d = d.max((self.k.re[a] - self.l.re[a] - self.p[a]).abs());
        }
        d
    }
}

/// Reference frame `(â, b̂)` orthogonal to `p`: `b̂` is the normalized part of
/// the first of `e₃, e₂, e₁` making an angle above `1e−6` with the line of `p`, and
/// `(p̂, â, b̂)` is right-handed. For `p = 0`, `p̂ = e₃` is used.
pub fn reference_frame(p: Vec3) -> (Vec3, Vec3) {
    let pn = norm(p);
    let phat = if pn == 0.0 { [0.0, 0.0, 1.0] } else { scale(p, 1.0 / pn) };
    let axes = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
    let axis = axes
        .into_iter()
        .find(|e| norm(cross(*e, phat)) > 1e-6f64.sin())
        .unwrap_or([1.0, 0.0, 0.0]);
    let perp = sub(axis, scale(phat, dot(axis, phat)));
    let bhat = scale(perp, 1.0 / norm(perp));
    let ahat = cross(bhat, phat);
    (ahat, bhat)
}

/// Builds `k = p/2 + a + ib`, `l = k − p` with `|b| = ρ`,
/// `|a|² = E + ρ² − p²/4`. `frame_angle` rotates the reference frame about `p̂`.
pub fn theta_pair(p: Vec3, energy: f64, rho: f64, frame_angle: f64) -> Result<ThetaPair> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let p2 = dot(p, p);
    let limit = 4.0 * (energy + rho * rho);
    if p2 > limit * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::Inadmissible {
            p_squared: p2,
            limit,
        });
    }
    let (a0, b0) = reference_frame(p);
    let (s, c) = frame_angle.sin_cos();
    let ahat = add(scale(a0, c), scale(b0, s));
    let bhat = sub(scale(b0, c), scale(a0, s));
    let amod = (energy + rho * rho - 0.25 * p2).max(0.0).sqrt();
    let kre = add(scale(p, 0.5), scale(ahat, amod));
    let im = scale(bhat, rho);
    let k = ComplexWaveVector {
        re: kre,
        im,
        energy,
    };
    let l = ComplexWaveVector {
        re: sub(kre, p),
        im,
        energy,
    };
    let pair = ThetaPair { k, l, p, rho };
    let defect = pair.constraint_defect();
    if defect > CONSTRAINT_TOL * limit.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "theta pair constraints violated by {defect:e}"
        )));
    }
    Ok(pair)
}

/// `D_b` sampled at every grid offset in `[−N, N)³`.
pub struct FaddeevKernel {
    grid: Grid3,
    b: Vec3,
    energy: f64,
    q: usize,
    values: Vec<Complex64>,
    floored: usize,
}

impl FaddeevKernel {
    fn synthesize(grid: Grid3, b: Vec3, energy: f64) -> Self {
        let n = grid.points_per_axis();
        let q = 2 * n;
        let h = grid.spacing();
        let deta = 2.0 * PI / (q as f64 * h);
        let eta = |m: usize| {
            let n = if m < q / 2 { m as f64 } else { m as f64 - q as f64 };
            (n + 0.5) * deta
        };
        let rho2 = dot(b, b);
        let mut values = vec![Complex64::new(0.0, 0.0); q * q * q];
        let mut floored = 0;
        for m0 in 0..q {
            let e0 = eta(m0);
            for m1 in 0..q {
                let e1 = eta(m1);
                let row = (m0 * q + m1) * q;
                for m2 in 0..q {
                    let e2 = eta(m2);
                    let re = e0 * e0 + e1 * e1 + e2 * e2 - rho2 - energy;
                    let im = 2.0 * (e0 * b[0] + e1 * b[1] + e2 * b[2]);
                    let mut den = Complex64::new(re, im);
                    let mag = den.norm();
                    if mag < SYMBOL_FLOOR {
                        floored += 1;
                        den = if mag == 0.0 {
                            Complex64::new(SYMBOL_FLOOR, 0.0)
                        } else {
                            den * (SYMBOL_FLOOR / mag)
                        };
                    }
                    values[row + m2] = den.inv();
                }
            }
        }
        Fft3::new([q; 3]).inverse(&mut values);
        let pref = -1.0 / (q as f64 * h).powi(3);
        let signed = |m: usize| if m < q / 2 { m as f64 } else { m as f64 - q as f64 };
        let phase: Vec<Complex64> = (0..q)
            .map(|m| (I * (PI * signed(m) / q as f64)).exp())
            .collect();
        for m0 in 0..q {
            for m1 in 0..q {
                let p01 = phase[m0] * phase[m1] * pref;
                let row = (m0 * q + m1) * q;
                for m2 in 0..q {
                    values[row + m2] *= p01 * phase[m2];
                }
            }
        }
        if floored > 0 {
            log::info!("faddeev kernel: floored {floored} symbol nodes (|b| = {}, E = {energy})", norm(b));
        }
        Self {
            grid,
            b,
            energy,
            q,
            values,
            floored,
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn imag_part(&self) -> Vec3 {
        self.b
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Number of frequency nodes whose symbol denominator was floored.
    pub fn floored_nodes(&self) -> usize {
        self.floored
    }

    /// `D_b(d·h)` for an integer offset with components in `[−N, N)`.
    #[inline]
    pub fn d(&self, d: [i64; 3]) -> Complex64 {
        let q = self.q as i64;
        let [a, b, c] = d.map(|x| x.rem_euclid(q) as usize);
        self.values[(a * self.q + b) * self.q + c]
    }

    /// `g(d·h, k)` for any `k` with `Im k = b`.
    pub fn g(&self, re: Vec3, d: [i64; 3]) -> Complex64 {
        let h = self.grid.spacing();
        let z = [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h];
        (-I * dot(re, z)).exp() * self.d(d)
    }

    /// `G(d·h, k) = e^{−b·z} D_b(z)`.
    pub fn green(&self, d: [i64; 3]) -> Complex64 {
        let h = self.grid.spacing();
        let z = [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h];
        (-dot(self.b, z)).exp() * self.d(d)
    }
}

type KernelKey = ([u64; 3], u64, u64, usize);

const CACHE_CAPACITY: usize = 48;

fn kernel_cache() -> &'static Mutex<HashMap<KernelKey, Arc<FaddeevKernel>>> {
    static CACHE: OnceLock<Mutex<HashMap<KernelKey, Arc<FaddeevKernel>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Kernel for `Im k = b` at energy `E`, memoized per `(b, E, grid)`.
pub fn faddeev_kernel(grid: Grid3, b: Vec3, energy: f64) -> Result<Arc<FaddeevKernel>> {
    let rho = norm(b);
    if rho == 0.0 {
        return Err(Error::InvalidArgument(
            "the Faddeev kernel needs Im k != 0".into(),
        ));
    }
    let shell = (energy + rho * rho).sqrt();
    if shell >= grid.nyquist() {
        return Err(Error::BeyondNyquist {
            norm: shell,
            nyquist: grid.nyquist(),
        });
    }
    let key = (
        b.map(f64::to_bits),
        energy.to_bits(),
        grid.half_extent().to_bits(),
        grid.points_per_axis(),
    );
    if let Some(k) = kernel_cache().lock().unwrap().get(&key) {
        return Ok(k.clone());
    }
    let kernel = Arc::new(FaddeevKernel::synthesize(grid, b, energy));
    let mut cache = kernel_cache().lock().unwrap();
    if cache.len() >= CACHE_CAPACITY {
        cache.clear();
    }
    Ok(cache.entry(key).or_insert(kernel).clone())
}

/// `g(x, k)` at every node of `grid` (the origin is the node `N/2`).
#[derive(Debug, Clone)]
pub struct FaddeevGreen {
    pub grid: Grid3,
    pub values: Vec<Complex64>,
    pub floored_nodes: usize,
}

pub fn faddeev_green_kernel(k: &ComplexWaveVector, grid: Grid3) -> Result<FaddeevGreen> {
    let kernel = faddeev_kernel(grid, k.im, k.energy)?;
    let half = (grid.points_per_axis() / 2) as i64;
    let values = (0..grid.len())
        .map(|idx| {
            let n = grid.points_per_axis();
            let d = [idx / (n * n), (idx / n) % n, idx % n].map(|i| i as i64 - half);
            kernel.g(k.re, d)
        })
        .collect();
    Ok(FaddeevGreen {
        grid,
        values,
        floored_nodes: kernel.floored_nodes(),
    })
}

/// `μ(·, k)` on an index box containing the support of `v`.
#[derive(Clone)]
pub struct CgoField {
    pub grid: Grid3,
    pub k: ComplexWaveVector,
    /// Empty for the zero potential, where `μ ≡ 1`.
    pub support: Option<IndexBox>,
    pub mu: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
    /// `sup |μ − 1|` over the box.
    pub sup_deviation: f64,
    pub floored_nodes: usize,
    /// `ρ` fell below the contraction threshold.
    pub below_rho_min: bool,
    kernel: Option<Arc<FaddeevKernel>>,
    weights: Vec<Complex64>,
}

impl std::fmt::Debug for CgoField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CgoField")
            .field("k", &self.k)
            .field("support", &self.support)
            .field("iterations", &self.iterations)
            .field("residual", &self.residual)
            .field("sup_deviation", &self.sup_deviation)
            .finish_non_exhaustive()
    }
}

impl CgoField {
    /// `sup |μ|` over the box.
    pub fn sup_modulus(&self) -> f64 {
        self.mu.iter().map(|z| z.norm()).fold(1.0, f64::max)
    }

    /// `ψ = e^{ikx} μ` on the box.
    pub fn psi(&self) -> Vec<Complex64> {
        let Some(support) = self.support else {
            return Vec::new();
        };
        self.mu
            .iter()
            .enumerate()
            .map(|(idx, m)| {
                let [i, j, k] = support.global(idx);
                self.k.plane_wave(self.grid.node(i, j, k)) * m
            })
            .collect()
    }

    /// `μ` at every grid node, `1 + Σ_y h³ g(x − y) v(y) μ(y)`.
    pub fn extend_to_grid(&self) -> Vec<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let (Some(support), Some(kernel)) = (self.support, &self.kernel) else {
            return vec![one; self.grid.len()];
        };
        let full = self.grid.full_box();
        let re = self.k.re;
        let conv = Convolver::new(support, full, |d| kernel.g(re, d));
        let src: Vec<Complex64> = self.mu.iter().zip(&self.weights).map(|(m, w)| m * w).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); full.len()];
        conv.apply(&src, &mut out);
        out.iter_mut().for_each(|z| *z += one);
        out
    }
}

fn rho_threshold(energy: f64) -> f64 {
    RHO_MIN_FACTOR * energy.sqrt().max(1.0)
}

/// CGO solution on the support box of `v`.
pub fn solve_cgo(v: &Potential, k: &ComplexWaveVector, cfg: &SolverConfig) -> Result<CgoField> {
    solve_cgo_on(v, k, v.support_box(), cfg)
}

/// CGO solution on a given box, which must contain the support of `v`.
/// `None` is allowed only for the zero potential.
pub fn solve_cgo_on(
    v: &Potential,
    k: &ComplexWaveVector,
    support: Option<IndexBox>,
    cfg: &SolverConfig,
) -> Result<CgoField> {
    let k = ComplexWaveVector::new(k.re, k.im, k.energy)?;
    if (k.energy - v.energy).abs() > CONSTRAINT_TOL * v.energy.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "k is on the shell E = {}, the potential has E = {}",
            k.energy, v.energy
        )));
    }
    let rho = k.rho();
    if rho == 0.0 {
        return Err(Error::InvalidArgument("CGO solutions need Im k != 0".into()));
    }
    let below_rho_min = rho < rho_threshold(v.energy);
    if below_rho_min {
        log::warn!(
            "rho = {rho} is below {}; contraction of the CGO equation is not guaranteed",
            rho_threshold(v.energy)
        );
    }
    let grid = v.grid;
    let Some(support) = support else {
        if !v.is_zero() {
            return Err(Error::InvalidArgument("a nonzero potential needs a support box".into()));
        }
        return Ok(CgoField {
            grid,
            k,
            support: None,
            mu: Vec::new(),
            iterations: 0,
            residual: 0.0,
            sup_deviation: 0.0,
            floored_nodes: 0,
            below_rho_min,
            kernel: None,
            weights: Vec::new(),
        });
    };
    let kernel = faddeev_kernel(grid, k.im, k.energy)?;
    let dv = grid.cell_volume();
    let weights: Vec<Complex64> = support
        .gather(&grid, &v.samples)
        .into_iter()
        .map(|x| x * dv)
        .collect();
    let re = k.re;
    let conv = Convolver::new(support, support, |d| kernel.g(re, d));
    let op = SecondKindOperator {
        conv: &conv,
        weights: &weights,
    };
    let rhs = vec![Complex64::new(1.0, 0.0); support.len()];
    let out = gmres(&op, &rhs, None, cfg)?;
    let sup_deviation = out
        .solution
        .iter()
        .map(|m| (m - 1.0).norm())
        .fold(0.0, f64::max);
    Ok(CgoField {
        grid,
        k,
        support: Some(support),
        mu: out.solution,
        iterations: out.iterations,
        residual: out.residual,
        sup_deviation,
        floored_nodes: kernel.floored_nodes(),
        below_rho_min,
        kernel: Some(kernel),
        weights,
    })
}

fn real_difference(k: &ComplexWaveVector, l: &ComplexWaveVector) -> Result<Vec3> {
    let scale = k.modulus().max(1.0);
    for a in 0..3 {
        if (k.im[a] - l.im[a]).abs() > CONSTRAINT_TOL * scale {
            return Err(Error::InvalidArgument("(k, l) is not in Θ_E: Im k != Im l".into()));
        }
    }
    Ok(sub(k.re, l.re))
}

/// `h(k, l) = (2π)^{-3} ∫ e^{−il·x} v(x) ψ(x, k) dx`, evaluated as
/// `(2π)^{-3} Σ h³ e^{ip·x} v μ` with `p = k − l`.
pub fn amplitude_h(v: &Potential, cgo: &CgoField, l: &ComplexWaveVector) -> Result<Complex64> {
    let p = real_difference(&cgo.k, l)?;
    let Some(support) = cgo.support else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let grid = v.grid;
    let dv = grid.cell_volume();
    let sum: Complex64 = cgo
        .mu
        .iter()
        .enumerate()
        .map(|(idx, m)| {
            let [i, j, kk] = support.global(idx);
            let x = grid.node(i, j, kk);
            v.samples[grid.index(i, j, kk)] * m * (I * dot(p, x)).exp()
        })
        .sum();
    Ok(sum * dv / (8.0 * PI * PI * PI))
}

/// One generalized-amplitude sample used as an estimate of `v̂(p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HSample {
    pub p: Vec3,
    pub rho: f64,
    pub energy: f64,
    pub h: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

impl HSample {
    pub fn fourier(&self) -> FourierSample {
        FourierSample {
            p: self.p,
            value: self.h,
        }
    }
}

/// `theta_pair → solve_cgo → amplitude_h` at the reference frame.
pub fn hat_v_from_h(v: &Potential, p: Vec3, rho: f64, cfg: &SolverConfig) -> Result<HSample> {
    let pair = theta_pair(p, v.energy, rho, 0.0)?;
    let cgo = solve_cgo(v, &pair.k, cfg)?;
    let h = amplitude_h(v, &cgo, &pair.l)?;
    Ok(HSample {
        p,
        rho,
        energy: v.energy,
        h,
        residual: cgo.residual,
        iterations: cgo.iterations,
    })
}

/// `|h(k, l) − v̂(p)|` for one sample.
pub fn h_error(v: &Potential, sample: &HSample) -> Result<f64> {
    Ok((sample.h - fourier_hat(v, sample.p)?.value).norm())
}
