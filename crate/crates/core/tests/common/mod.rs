#![allow(dead_code)]

use num_complex::Complex64;
use scatterlab::gmres::SolverConfig;
use scatterlab::inversion::SweepConfig;
use scatterlab::medium::{make_phantom, potential_of, Bump, Potential, RefractiveIndex};
use scatterlab::Grid3;

pub const OMEGA: f64 = 2.0;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn grid(n: usize) -> Grid3 {
    Grid3::new(2.0, n).unwrap()
}

pub fn index(bumps: &[Bump], g: Grid3) -> RefractiveIndex {
    make_phantom(bumps, g, 1.0, 6).unwrap()
}

pub fn potential(bumps: &[Bump], g: Grid3) -> Potential {
    potential_of(&index(bumps, g), OMEGA).unwrap()
}

pub fn bump(center: [f64; 3], radius: f64, amp: f64) -> Bump {
    Bump::new(center, radius, c(amp))
}

/// The standard pair at perturbation scale `alpha`.
pub fn standard_pair(n: usize, alpha: f64) -> (Potential, Potential) {
    let cfg = SweepConfig {
        points_per_axis: n,
        ..SweepConfig::default()
    };
    cfg.potentials(alpha).unwrap()
}

pub fn tight() -> SolverConfig {
    SolverConfig {
        tol: 1e-13,
        max_iter: 500,
        restart: 60,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Complex64>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in col..n {
                let t = a[col * n + k];
                a[row * n + k] -= f * t;
            }
            let t = b[col];
            b[row] -= f * t;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    x
}

/// `(2π)^{-3} Σ h³ e^{ip·x} w(x)` by a direct triple loop.
pub fn direct_fourier(g: &Grid3, w: &[Complex64], p: [f64; 3]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, val) in w.iter().enumerate() {
        if *val == Complex64::new(0.0, 0.0) {
            continue;
        }
        let x = g.node_of_index(idx);
        acc += Complex64::from_polar(1.0, p[0] * x[0] + p[1] * x[1] + p[2] * x[2]) * val;
    }
    acc * g.cell_volume() / (8.0 * std::f64::consts::PI.powi(3))
}

pub fn max_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}
