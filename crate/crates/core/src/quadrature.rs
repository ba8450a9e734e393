//! Gauss–Legendre rules and the product quadrature on spheres.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Vec3;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre in `cos θ` times the uniform trapezoid rule in azimuth on the
/// sphere of radius `r`. Node `(a, b)` has index `a * n_phi + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereQuadrature {
    pub radius: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(radius: f64, n_theta: usize, n_phi: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || n_theta == 0 || n_phi == 0 {
            return Err(Error::InvalidArgument(format!(
                "sphere quadrature needs r > 0 and positive sizes, got r={radius}, {n_theta}x{n_phi}"
            )));
        }
        let (t, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (ct, wt) in t.iter().zip(&w) {
            let st = (1.0 - ct * ct).sqrt();
            for b in 0..n_phi {
                let phi = b as f64 * dphi;
                nodes.push([
                    radius * st * phi.cos(),
                    radius * st * phi.sin(),
                    radius * ct,
                ]);
                weights.push(radius * radius * wt * dphi);
            }
        }
        Ok(Self {
            radius,
            n_theta,
            n_phi,
            nodes,
            weights,
        })
    }

    /// Unit-sphere rule (directions), weights summing to `4π`.
    pub fn unit(n_theta: usize, n_phi: usize) -> Result<Self> {
        Self::new(1.0, n_theta, n_phi)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn descriptor(&self) -> String {
        format!("gauss-legendre x trapezoid {}x{}", self.n_theta, self.n_phi)
    }
}
