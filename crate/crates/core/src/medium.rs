//! Refractive-index phantoms, potentials and the norms used to certify them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{norm, sub, Grid3, IndexBox, Vec3};

/// Smooth compactly supported bump `amplitude · exp(−a² / (a² − |x − c|²))` on
/// `|x − c| < a`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec3,
    pub radius: f64,
    pub amplitude: Complex64,
}

impl Bump {
    pub fn new(center: Vec3, radius: f64, amplitude: Complex64) -> Self {
        Self {
            center,
            radius,
            amplitude,
        }
    }

    /// Real profile without the amplitude.
    pub fn profile(&self, x: Vec3) -> f64 {
        let a2 = self.radius * self.radius;
        let d = sub(x, self.center);
        let s = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        if s >= a2 {
            0.0
        } else {
            (-a2 / (a2 - s)).exp()
        }
    }

    pub fn value(&self, x: Vec3) -> Complex64 {
        self.amplitude * self.profile(x)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amplitude: self.amplitude * factor,
            ..*self
        }
    }
}

/// Gridded refractive index with `n = 1` outside `B_{r₁}` and `Im n ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefractiveIndex {
    pub grid: Grid3,
    pub samples: Vec<Complex64>,
    pub support_radius: f64,
    pub smoothness: u32,
    /// `‖1 − n‖_{m,1}` certified by quadrature at construction.
    pub norm_budget: f64,
}

impl RefractiveIndex {
    /// Wrap existing samples, checking every invariant of a refractive index.
    pub fn from_samples(
        grid: Grid3,
        samples: Vec<Complex64>,
        support_radius: f64,
        smoothness: u32,
    ) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidPhantom(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        check_support_params(&grid, support_radius, smoothness)?;
        for (idx, n) in samples.iter().enumerate() {
            if !(n.re.is_finite() && n.im.is_finite()) {
                return Err(Error::InvalidPhantom(format!("non-finite sample at node {idx}")));
            }
            if n.im < 0.0 {
                return Err(Error::InvalidPhantom(format!(
                    "Im n = {} < 0 at node {idx}",
                    n.im
                )));
            }
            let x = grid.node_of_index(idx);
            if norm(x) >= support_radius && *n != Complex64::new(1.0, 0.0) {
                return Err(Error::InvalidPhantom(format!(
                    "n != 1 at node {idx} outside the support radius"
                )));
            }
        }
        let contrast: Vec<Complex64> = samples.iter().map(|n| Complex64::new(1.0, 0.0) - n).collect();
        let norm_budget = sobolev_norm(&grid, &contrast, smoothness).value;
        Ok(Self {
            grid,
            samples,
            support_radius,
            smoothness,
            norm_budget,
        })
    }

    pub fn contrast(&self) -> Vec<Complex64> {
        self.samples
            .iter()
            .map(|n| Complex64::new(1.0, 0.0) - n)
            .collect()
    }

    /// Regularity exponent `s = (m − 3) / 3` of the stability estimate.
    pub fn stability_exponent(&self) -> f64 {
        (self.smoothness as f64 - 3.0) / 3.0
    }
}

fn check_support_params(grid: &Grid3, r1: f64, m: u32) -> Result<()> {
    if !(r1.is_finite() && r1 > 0.0) {
        return Err(Error::InvalidPhantom(format!("support radius must be positive, got {r1}")));
    }
    if !grid.covers_ball(r1) {
        return Err(Error::InvalidPhantom(format!(
            "grid half extent {} does not cover B_r1 with r1 = {r1}",
            grid.half_extent()
        )));
    }
    if m <= 3 {
        return Err(Error::InvalidPhantom(format!("smoothness order must exceed 3, got {m}")));
    }
    Ok(())
}

/// Build `n = 1 + Σ bumps` on the grid.
pub fn make_phantom(bumps: &[Bump], grid: Grid3, r1: f64, smoothness: u32) -> Result<RefractiveIndex> {
    check_support_params(&grid, r1, smoothness)?;
    for (i, b) in bumps.iter().enumerate() {
        if !(b.radius > 0.0) {
            return Err(Error::InvalidPhantom(format!("bump {i}: radius must be positive")));
        }
        let reach = norm(b.center) + b.radius;
        if reach > r1 * (1.0 + 1e-12) {
            return Err(Error::InvalidPhantom(format!(
                "bump {i} escapes B_r1: |center| + radius = {reach} > r1 = {r1}"
            )));
        }
    }
    let samples: Vec<Complex64> = (0..grid.len())
        .map(|idx| {
            let x = grid.node_of_index(idx);
            let mut n = Complex64::new(1.0, 0.0);
            for b in bumps {
                n += b.value(x);
            }
            n
        })
        .collect();
    RefractiveIndex::from_samples(grid, samples, r1, smoothness)
}

/// Schrödinger-form potential `v = ω²(1 − n)` at energy `E = ω²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub grid: Grid3,
    pub samples: Vec<Complex64>,
    pub energy: f64,
    pub omega: f64,
    pub support_radius: f64,
}

pub fn potential_of(n: &RefractiveIndex, omega: f64) -> Result<Potential> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
    }
    let e = omega * omega;
    Ok(Potential {
        grid: n.grid,
        samples: n
            .samples
            .iter()
            .map(|ni| (Complex64::new(1.0, 0.0) - ni) * e)
            .collect(),
        energy: e,
        omega,
        support_radius: n.support_radius,
    })
}

impl Potential {
    /// Zero potential on `grid`.
    pub fn zero(grid: Grid3, omega: f64, support_radius: f64) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
            energy: omega * omega,
            omega,
            support_radius,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|v| v.im == 0.0)
    }

    /// Smallest index box containing every node where `v ≠ 0`.
    pub fn support_box(&self) -> Option<IndexBox> {
        nonzero_box(&self.grid, &self.samples)
    }

    /// Bounding box of the union of supports of several potentials on one grid.
    pub fn common_box(potentials: &[&Potential]) -> Option<IndexBox> {
        let boxes: Vec<IndexBox> = potentials.iter().filter_map(|v| v.support_box()).collect();
        let first = *boxes.first()?;
        let mut lo = first.lo;
        let mut hi = [0, 1, 2].map(|a| first.lo[a] + first.dims[a]);
        for b in &boxes[1..] {
            for a in 0..3 {
                lo[a] = lo[a].min(b.lo[a]);
                hi[a] = hi[a].max(b.lo[a] + b.dims[a]);
            }
        }
        Some(IndexBox {
            lo,
            dims: [0, 1, 2].map(|a| hi[a] - lo[a]),
        })
    }

    /// `max |v|` over nodes inside `B_r`.
    pub fn sup_norm_in_ball(&self, r: f64) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .filter(|(idx, _)| norm(self.grid.node_of_index(*idx)) < r)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn difference(&self, other: &Potential) -> Result<Vec<Complex64>> {
        if self.grid != other.grid {
            return Err(Error::SamplingMismatch("potentials live on different grids".into()));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect())
    }
}

pub(crate) fn nonzero_box(grid: &Grid3, field: &[Complex64]) -> Option<IndexBox> {
    let n = grid.points_per_axis();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if field[grid.index(i, j, k)] != Complex64::new(0.0, 0.0) {
                    any = true;
                    for (a, c) in [i, j, k].into_iter().enumerate() {
                        lo[a] = lo[a].min(c);
                        hi[a] = hi[a].max(c);
                    }
                }
            }
        }
    }
    any.then(|| IndexBox {
        lo,
        dims: [0, 1, 2].map(|a| hi[a] - lo[a] + 1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSample {
    pub p: Vec3,
    pub value: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevNorm {
    pub value: f64,
    /// False when the grid is judged too coarse for derivatives of this order.
    pub resolved: bool,
}

// fourth-order centered stencils
const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

fn stencil_axis(grid: &Grid3, f: &[Complex64], axis: usize, taps: &[f64; 5], scale: f64) -> Vec<Complex64> {
    let n = grid.points_per_axis();
    let stride = match axis {
        0 => n * n,
        1 => n,
        _ => 1,
    };
    let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
    for idx in 0..f.len() {
        let c = (idx / stride) % n;
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, &w) in taps.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let off = t as i64 - 2;
            let cc = c as i64 + off;
            if cc < 0 || cc >= n as i64 {
                continue;
            }
            acc += f[(idx as i64 + off * stride as i64) as usize] * w;
        }
        out[idx] = acc * scale;
    }
    out
}

/// Derivatives `∂^j` along one axis for `j = 0..=max`, built as `D2^{j/2} D1^{j mod 2}`.
fn axis_chain(grid: &Grid3, f: &[Complex64], axis: usize, max: usize) -> Vec<Vec<Complex64>> {
    let h = grid.spacing();
    let mut chain = vec![f.to_vec()];
    if max >= 1 {
        chain.push(stencil_axis(grid, f, axis, &D1, 1.0 / h));
    }
    for j in 2..=max {
        let next = stencil_axis(grid, &chain[j - 2], axis, &D2, 1.0 / (h * h));
        chain.push(next);
    }
    chain
}

/// `‖w‖_{m,1} = max_{|J| ≤ m} ‖∂^J w‖_{L¹}` with fourth-order centered differences
/// and trapezoidal quadrature.
pub fn sobolev_norm(grid: &Grid3, w: &[Complex64], m: u32) -> SobolevNorm {
    let m = m as usize;
    let dv = grid.cell_volume();
    let l1 = |f: &[Complex64]| f.iter().map(|z| z.norm()).sum::<f64>() * dv;
    let mut best = 0.0f64;
    let xs = axis_chain(grid, w, 0, m);
    for (jx, fx) in xs.iter().enumerate() {
        let ys = axis_chain(grid, fx, 1, m - jx);
        for (jy, fy) in ys.iter().enumerate() {
            let zs = axis_chain(grid, fy, 2, m - jx - jy);
            for fz in &zs {
                best = best.max(l1(fz));
            }
        }
    }
    let resolved = match nonzero_box(grid, w) {
        None => true,
        Some(b) => {
            let narrowest = *b.dims.iter().min().unwrap() as f64;
            let half_width = 0.5 * (narrowest - 1.0).max(0.0) * grid.spacing();
            m as f64 * grid.spacing() <= 0.5 * half_width
        }
    };
    SobolevNorm {
        value: best,
        resolved,
    }
}

fn phase_table(grid: &Grid3, p: f64) -> Vec<Complex64> {
    (0..grid.points_per_axis())
        .map(|i| {
            let (s, c) = (p * grid.coord(i)).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

/// `ŵ(p) = (2π)^{-3} ∫ e^{ipx} w(x) dx` by the trapezoidal rule on the grid.
pub fn fourier_transform(grid: &Grid3, w: &[Complex64], p: Vec3) -> Result<Complex64> {
    let nyq = grid.nyquist();
    let pn = norm(p);
    if pn > nyq * (1.0 + 1e-12) {
        return Err(Error::BeyondNyquist {
            norm: pn,
            nyquist: nyq,
        });
    }
    let n = grid.points_per_axis();
    let t0 = phase_table(grid, p[0]);
    let t1 = phase_table(grid, p[1]);
    let t2 = phase_table(grid, p[2]);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut acc_i = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let row = grid.index(i, j, 0);
            let line = &w[row..row + n];
            if line.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            let s: Complex64 = line.iter().zip(&t2).map(|(f, t)| t * f).sum();
            acc_i += t1[j] * s;
        }
        acc += t0[i] * acc_i;
    }
    Ok(acc * grid.cell_volume() / (8.0 * PI * PI * PI))
}

pub fn fourier_hat(v: &Potential, p: Vec3) -> Result<FourierSample> {
    Ok(FourierSample {
        p,
        value: fourier_transform(&v.grid, &v.samples, p)?,
    })
}

/// Trapezoidal Fourier transform sampled on the cubic lattice
/// `p = n Δp`, `Δp = 2π / (q h)`, `n ∈ [−q/2, q/2)³`, computed by one FFT.
#[derive(Debug, Clone)]
pub struct FourierLattice {
    pub spacing: f64,
    pub q: usize,
    values: Vec<Complex64>,
}

impl FourierLattice {
    pub fn new(grid: &Grid3, w: &[Complex64], q: usize) -> Result<Self> {
        let n = grid.points_per_axis();
        if q < n {
            return Err(Error::InvalidArgument(format!(
                "lattice size {q} smaller than grid size {n}"
            )));
        }
        let fft = Fft3::new([q; 3]);
        let mut buf = vec![Complex64::new(0.0, 0.0); q * q * q];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    buf[(i * q + j) * q + k] = w[grid.index(i, j, k)];
                }
            }
        }
        fft.inverse(&mut buf);
        let h = grid.spacing();
        let spacing = 2.0 * PI / (q as f64 * h);
        let l = grid.half_extent();
        let norm = grid.cell_volume() / (8.0 * PI * PI * PI);
        let shift: Vec<Complex64> = (0..q)
            .map(|idx| {
                let nn = wrap(idx, q);
                let (s, c) = (-(nn as f64) * spacing * l).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    let idx = (a * q + b) * q + c;
                    buf[idx] *= shift[a] * shift[b] * shift[c] * norm;
                }
            }
        }
        Ok(Self {
            spacing,
            q,
            values: buf,
        })
    }

    /// Value at integer lattice coordinates `n` (taken modulo `q`).
    pub fn at(&self, n: [i64; 3]) -> Complex64 {
        let q = self.q as i64;
        let [a, b, c] = n.map(|x| x.rem_euclid(q) as usize);
        self.values[(a * self.q + b) * self.q + c]
    }

    /// Iterate `(p, value)` over every lattice node.
    pub fn samples(&self) -> impl Iterator<Item = FourierSample> + '_ {
        let q = self.q;
        (0..q * q * q).map(move |idx| {
            let c = idx % q;
            let b = (idx / q) % q;
            let a = idx / (q * q);
            let p = [wrap(a, q), wrap(b, q), wrap(c, q)].map(|x| x as f64 * self.spacing);
            FourierSample {
                p,
                value: self.values[idx],
            }
        })
    }
}

fn wrap(idx: usize, q: usize) -> i64 {
    if idx < q / 2 {
        idx as i64
    } else {
        idx as i64 - q as i64
    }
}

/// `‖u‖_μ = max (1 + |p|)^μ |u(p)|` over the given samples.
pub fn weighted_sup_norm(samples: &[FourierSample], mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("weight exponent must be positive, got {mu}")));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    Ok(samples
        .iter()
        .map(|s| (1.0 + norm(s.p)).powf(mu) * s.value.norm())
        .fold(0.0, f64::max))
}
