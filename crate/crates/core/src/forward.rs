//! Outgoing scattering at fixed frequency.
//!
//! All volume integrals are discretized by sample-and-multiply collocation on the
//! phantom grid: `∫ K(x − y) f(y) dy ≈ Σ_j h³ K(x − x_j) f(x_j)`. The outgoing
//! kernel `G₀⁺(x) = −e^{iω|x|} / (4π|x|)` is sampled pointwise except at the
//! origin, where it is replaced by its average over a ball with the volume of one
//! cell. The convolution is applied by FFT on a zero-padded box around the
//! support of the potential, so the unknowns of every solve are the field values
//! on that box only; values elsewhere follow from one more convolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Convolver;
use crate::gmres::{gmres, LinearOperator, SolverConfig};
use crate::grid::{dot, norm, sub, Grid3, IndexBox, Vec3};
use crate::medium::Potential;
use crate::parallel::try_par_map;
use crate::quadrature::SphereQuadrature;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Outgoing free-space Green function `−e^{iωr} / (4πr)`.
pub fn free_green(omega: f64, r: f64) -> Complex64 {
    -(I * omega * r).exp() / (4.0 * PI * r)
}

/// Average of `G₀⁺` over the ball of volume `h³` centred at the singularity.
pub fn free_green_cell_average(omega: f64, h: f64) -> Complex64 {
    let a = h * (3.0 / (4.0 * PI)).powf(1.0 / 3.0);
    // ∫_0^a r e^{iωr} dr
    let radial = (I * omega * a).exp() * (a / (I * omega) + 1.0 / (omega * omega))
        - 1.0 / (omega * omega);
    -radial / h.powi(3)
}

/// Average of `G₀⁺` over a flat disc of area `w` around a point on the sphere;
/// used for the coincident-node entries of the near-field matrix.
pub fn free_green_patch_average(omega: f64, w: f64) -> Complex64 {
    let radius = (w / PI).sqrt();
    -((I * omega * radius).exp() - 1.0) / (2.0 * I * omega * w)
}

/// Collocation kernel for grid offsets.
pub fn free_green_grid(omega: f64, h: f64) -> impl Fn([i64; 3]) -> Complex64 {
    let origin = free_green_cell_average(omega, h);
    move |d: [i64; 3]| {
        if d == [0, 0, 0] {
            origin
        } else {
            let r = h * ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64).sqrt();
            free_green(omega, r)
        }
    }
}

/// `x − Conv(w ∘ x)` on a box.
pub(crate) struct SecondKindOperator<'a> {
    pub(crate) conv: &'a Convolver,
    pub(crate) weights: &'a [Complex64],
}

impl LinearOperator for SecondKindOperator<'_> {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let wx: Vec<Complex64> = x.iter().zip(self.weights).map(|(a, b)| a * b).collect();
        self.conv.apply(&wx, y);
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi = xi - *yi);
    }
}

/// Outgoing Lippmann–Schwinger solver for a fixed nonzero potential; reusable
/// across many right-hand sides.
pub struct OutgoingSolver<'a> {
    potential: &'a Potential,
    support: IndexBox,
    weights: Vec<Complex64>,
    conv: Convolver,
    cfg: SolverConfig,
}

#[derive(Debug, Clone)]
pub struct BoxSolution {
    /// Total field on the support box.
    pub values: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

impl<'a> OutgoingSolver<'a> {
    /// `None` for the zero potential.
    pub fn new(potential: &'a Potential, cfg: SolverConfig) -> Option<Self> {
        let support = potential.support_box()?;
        let grid = potential.grid;
        let dv = grid.cell_volume();
        let weights = support
            .gather(&grid, &potential.samples)
            .into_iter()
            .map(|v| v * dv)
            .collect();
        let conv = Convolver::new(support, support, free_green_grid(potential.omega, grid.spacing()));
        Some(Self {
            potential,
            support,
            weights,
            conv,
            cfg,
        })
    }

    pub fn support(&self) -> IndexBox {
        self.support
    }

    pub fn box_nodes(&self) -> Vec<Vec3> {
        let grid = self.potential.grid;
        (0..self.support.len())
            .map(|idx| {
                let [i, j, k] = self.support.global(idx);
                grid.node(i, j, k)
            })
            .collect()
    }

    /// Solve `u − G₀⁺(v u) = incident` on the support box.
    pub fn solve(&self, incident: &[Complex64]) -> Result<BoxSolution> {
        let op = SecondKindOperator {
            conv: &self.conv,
            weights: &self.weights,
        };
        let out = gmres(&op, incident, None, &self.cfg)?;
        Ok(BoxSolution {
            values: out.solution,
            iterations: out.iterations,
            residual: out.residual,
        })
    }

    /// Sources `v h³ u` on the box.
    pub fn sources(&self, u: &[Complex64]) -> Vec<Complex64> {
        u.iter().zip(&self.weights).map(|(a, b)| a * b).collect()
    }

    /// Scattered field `Σ_z G₀⁺(x − z) v(z) u(z) h³` on every grid node.
    pub fn scattered_on_grid(&self, u: &[Complex64]) -> Vec<Complex64> {
        let grid = self.potential.grid;
        let full = grid.full_box();
        let conv = Convolver::new(self.support, full, free_green_grid(self.potential.omega, grid.spacing()));
        let mut out = vec![Complex64::new(0.0, 0.0); full.len()];
        conv.apply(&self.sources(u), &mut out);
        out
    }

    /// Scattered field at arbitrary points off the grid nodes.
    pub fn scattered_at(&self, points: &[Vec3], u: &[Complex64]) -> Vec<Complex64> {
        let src = self.sources(u);
        let nodes = self.box_nodes();
        let omega = self.potential.omega;
        points
            .iter()
            .map(|x| {
                nodes
                    .iter()
                    .zip(&src)
                    .filter(|(_, s)| s.re != 0.0 || s.im != 0.0)
                    .map(|(z, s)| free_green(omega, norm(sub(*x, *z))) * s)
                    .sum()
            })
            .collect()
    }
}

fn plane_wave(k: Vec3, x: Vec3) -> Complex64 {
    (I * dot(k, x)).exp()
}

fn check_on_shell(k: Vec3, energy: f64) -> Result<()> {
    let k2 = dot(k, k);
    if (k2 - energy).abs() > 1e-12 * energy.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "incident wavevector has k^2 = {k2}, expected E = {energy}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ScatteredField {
    pub grid: Grid3,
    /// Total field `ψ⁺` on every grid node.
    pub values: Vec<Complex64>,
    pub wavevector: Vec3,
    pub iterations: usize,
    pub residual: f64,
}

/// Total field `ψ⁺ = e^{ikx} + ∫ G₀⁺(x − y) v(y) ψ⁺(y) dy` for a real incident
/// wavevector with `k² = E`.
pub fn solve_total_field(v: &Potential, k: Vec3, cfg: &SolverConfig) -> Result<ScatteredField> {
    check_on_shell(k, v.energy)?;
    let grid = v.grid;
    let mut values: Vec<Complex64> = (0..grid.len())
        .map(|idx| plane_wave(k, grid.node_of_index(idx)))
        .collect();
    let Some(solver) = OutgoingSolver::new(v, *cfg) else {
        return Ok(ScatteredField {
            grid,
            values,
            wavevector: k,
            iterations: 0,
            residual: 0.0,
        });
    };
    let incident: Vec<Complex64> = solver.box_nodes().iter().map(|x| plane_wave(k, *x)).collect();
    let sol = solver.solve(&incident)?;
    let scattered = solver.scattered_on_grid(&sol.values);
    values.iter_mut().zip(&scattered).for_each(|(a, b)| *a += b);
    Ok(ScatteredField {
        grid,
        values,
        wavevector: k,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

fn check_outside_support(v: &Potential, r: f64, what: &str) -> Result<()> {
    if r <= v.support_radius {
        return Err(Error::InvalidArgument(format!(
            "{what} radius {r} must exceed the support radius {}",
            v.support_radius
        )));
    }
    Ok(())
}

/// `G⁺(·, y)` on the grid and on the quadrature sphere for one source point.
#[derive(Debug, Clone)]
pub struct GreenSource {
    pub source: Vec3,
    pub field: Vec<Complex64>,
    pub trace: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Near-field Green function for a source `y` outside `B_{r₁}`:
/// `G⁺(x, y) = G₀⁺(x − y) + w(x)` with `w = ∫ G₀⁺(x − z) v(z) G⁺(z, y) dz`.
pub fn near_field_green(
    v: &Potential,
    y: Vec3,
    quad: &SphereQuadrature,
    cfg: &SolverConfig,
) -> Result<GreenSource> {
    check_outside_support(v, norm(y), "source")?;
    let grid = v.grid;
    let omega = v.omega;
    let h = grid.spacing();
    let free = |x: Vec3, w: f64| {
        let d = norm(sub(x, y));
        if d < 1e-12 * h {
            // coincident with a node (grid) or a quadrature point (trace)
            if w > 0.0 {
                free_green_patch_average(omega, w)
            } else {
                free_green_cell_average(omega, h)
            }
        } else {
            free_green(omega, d)
        }
    };
    let mut field: Vec<Complex64> = (0..grid.len())
        .map(|idx| free(grid.node_of_index(idx), 0.0))
        .collect();
    let mut trace: Vec<Complex64> = quad
        .nodes
        .iter()
        .zip(&quad.weights)
        .map(|(x, w)| free(*x, *w))
        .collect();
    let Some(solver) = OutgoingSolver::new(v, *cfg) else {
        return Ok(GreenSource {
            source: y,
            field,
            trace,
            iterations: 0,
            residual: 0.0,
        });
    };
    let incident: Vec<Complex64> = solver.box_nodes().iter().map(|z| free_green(omega, norm(sub(*z, y)))).collect();
    let sol = solver.solve(&incident)?;
    let on_grid = solver.scattered_on_grid(&sol.values);
    field.iter_mut().zip(&on_grid).for_each(|(a, b)| *a += b);
    let on_sphere = solver.scattered_at(&quad.nodes, &sol.values);
    trace.iter_mut().zip(&on_sphere).for_each(|(a, b)| *a += b);
    Ok(GreenSource {
        source: y,
        field,
        trace,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// `G⁺(x_i, y_j)` for all pairs of quadrature nodes on `∂B_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldData {
    pub quad: SphereQuadrature,
    pub omega: f64,
    /// Row-major `V[i][j]`, receiver `i`, source `j`. Coincident entries
    /// `i = j` hold the patch-averaged free part plus the scattered part.
    pub values: Vec<Complex64>,
    pub max_iterations: usize,
    pub max_residual: f64,
}

impl NearFieldData {
    pub fn size(&self) -> usize {
        self.quad.len()
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.size() + j]
    }

    /// `‖V − Vᵀ‖_F / ‖V‖_F`.
    pub fn reciprocity_defect(&self) -> f64 {
        let n = self.size();
        let mut diff = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                diff += (self.at(i, j) - self.at(j, i)).norm_sqr();
                total += self.at(i, j).norm_sqr();
            }
        }
        (diff / total).sqrt()
    }
}

pub fn near_field_matrix(v: &Potential, quad: &SphereQuadrature, cfg: &SolverConfig) -> Result<NearFieldData> {
    check_outside_support(v, quad.radius, "quadrature sphere")?;
    let n = quad.len();
    let omega = v.omega;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = if i == j {
                free_green_patch_average(omega, quad.weights[i])
            } else {
                free_green(omega, norm(sub(quad.nodes[i], quad.nodes[j])))
            };
        }
    }
    let Some(solver) = OutgoingSolver::new(v, *cfg) else {
        return Ok(NearFieldData {
            quad: quad.clone(),
            omega,
            values,
            max_iterations: 0,
            max_residual: 0.0,
        });
    };
    let nodes = solver.box_nodes();
    // G₀⁺ from every box node to every sphere node
    let coupling: Vec<Complex64> = quad
        .nodes
        .iter()
        .flat_map(|x| nodes.iter().map(move |z| free_green(omega, norm(sub(*x, *z)))))
        .collect();
    let m = nodes.len();
    let sources: Vec<usize> = (0..n).collect();
    let columns = try_par_map(&sources, |&j| -> Result<(Vec<Complex64>, usize, f64)> {
        let y = quad.nodes[j];
        let incident: Vec<Complex64> = nodes.iter().map(|z| free_green(omega, norm(sub(*z, y)))).collect();
        let sol = solver.solve(&incident)?;
        let src = solver.sources(&sol.values);
        let col = (0..n)
            .map(|i| {
                coupling[i * m..(i + 1) * m]
                    .iter()
                    .zip(&src)
                    .map(|(g, s)| g * s)
                    .sum()
            })
            .collect();
        Ok((col, sol.iterations, sol.residual))
    })?;
    let mut max_iterations = 0;
    let mut max_residual = 0.0f64;
    for (j, (col, it, res)) in columns.into_iter().enumerate() {
        for (i, c) in col.into_iter().enumerate() {
            values[i * n + j] += c;
        }
        max_iterations = max_iterations.max(it);
        max_residual = max_residual.max(res);
    }
    Ok(NearFieldData {
        quad: quad.clone(),
        omega,
        values,
        max_iterations,
        max_residual,
    })
}

/// Scattering amplitude samples `f(ω k̂, ω l̂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldData {
    pub omega: f64,
    /// `(k̂, l̂)` unit incident and outgoing directions.
    pub pairs: Vec<(Vec3, Vec3)>,
    pub values: Vec<Complex64>,
    /// Measure weight of every pair on `M_ω`; 1 for ad-hoc pair lists.
    pub weights: Vec<f64>,
}

/// `f(k, l) = (2π)^{-3} ∫ e^{−ily} v(y) ψ⁺(y, k) dy` for each direction pair.
pub fn far_field_matrix(
    v: &Potential,
    pairs: &[(Vec3, Vec3)],
    cfg: &SolverConfig,
) -> Result<FarFieldData> {
    for (k, l) in pairs {
        for d in [k, l] {
            if (norm(*d) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("direction {d:?} is not a unit vector")));
            }
        }
    }
    let omega = v.omega;
    let mut values = vec![Complex64::new(0.0, 0.0); pairs.len()];
    if let Some(solver) = OutgoingSolver::new(v, *cfg) {
        let mut incident_dirs: Vec<Vec3> = Vec::new();
        for (k, _) in pairs {
            if !incident_dirs.contains(k) {
                incident_dirs.push(*k);
            }
        }
        let nodes = solver.box_nodes();
        let prefactor = 1.0 / (8.0 * PI * PI * PI);
        let sources = try_par_map(&incident_dirs, |khat| -> Result<Vec<Complex64>> {
            let k = khat.map(|c| c * omega);
            let incident: Vec<Complex64> = nodes.iter().map(|x| plane_wave(k, *x)).collect();
            let sol = solver.solve(&incident)?;
            Ok(solver.sources(&sol.values))
        })?;
        for (idx, (khat, lhat)) in pairs.iter().enumerate() {
            let which = incident_dirs.iter().position(|d| d == khat).unwrap();
            let l = lhat.map(|c| -c * omega);
            let f: Complex64 = nodes
                .iter()
                .zip(&sources[which])
                .map(|(y, s)| plane_wave(l, *y) * s)
                .sum();
            values[idx] = f * prefactor;
        }
    }
    Ok(FarFieldData {
        omega,
        pairs: pairs.to_vec(),
        values,
        weights: vec![1.0; pairs.len()],
    })
}

/// Far field on the full product of a direction quadrature with itself; the pair
/// weights are the product surface measure of the two spheres of radius `ω`.
pub fn far_field_on_sphere(v: &Potential, dirs: &SphereQuadrature, cfg: &SolverConfig) -> Result<FarFieldData> {
    let unit: Vec<Vec3> = dirs.nodes.iter().map(|x| x.map(|c| c / dirs.radius)).collect();
    let unit_w: Vec<f64> = dirs.weights.iter().map(|w| w / (dirs.radius * dirs.radius)).collect();
    let mut pairs = Vec::with_capacity(unit.len() * unit.len());
    let mut weights = Vec::with_capacity(unit.len() * unit.len());
    let e = v.energy;
    for (k, wk) in unit.iter().zip(&unit_w) {
        for (l, wl) in unit.iter().zip(&unit_w) {
            pairs.push((*k, *l));
            weights.push(e * wk * e * wl);
        }
    }
    let mut data = far_field_matrix(v, &pairs, cfg)?;
    data.weights = weights;
    Ok(data)
}

/// `(Ŝφ)(x_i) = Σ_j V[i][j] φ(y_j) w_j`.
pub fn apply_near_field_operator(data: &NearFieldData, phi: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = data.size();
    if phi.len() != n {
        return Err(Error::SamplingMismatch(format!(
            "density has {} values for {n} quadrature nodes",
            phi.len()
        )));
    }
    let weighted: Vec<Complex64> = phi.iter().zip(&data.quad.weights).map(|(p, w)| p * w).collect();
    Ok((0..n)
        .map(|i| {
            data.values[i * n..(i + 1) * n]
                .iter()
                .zip(&weighted)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect())
}

/// Quadrature-weighted L² distance between two data sets of the same kind.
pub trait Discrepancy {
    fn discrepancy(&self, other: &Self) -> Result<f64>;
    fn kind(&self) -> &'static str;
}

impl Discrepancy for NearFieldData {
    fn discrepancy(&self, other: &Self) -> Result<f64> {
        if self.quad != other.quad {
            return Err(Error::SamplingMismatch("near-field quadratures differ".into()));
        }
        if self.omega != other.omega {
            return Err(Error::SamplingMismatch("near-field frequencies differ".into()));
        }
        let n = self.size();
        let w = &self.quad.weights;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.at(i, j) - other.at(i, j)).norm_sqr() * w[i] * w[j];
            }
        }
        Ok(acc.sqrt())
    }

    fn kind(&self) -> &'static str {
        "near"
    }
}

impl Discrepancy for FarFieldData {
    fn discrepancy(&self, other: &Self) -> Result<f64> {
        if self.pairs != other.pairs || self.weights != other.weights {
            return Err(Error::SamplingMismatch("far-field direction sets differ".into()));
        }
        if self.omega != other.omega {
            return Err(Error::SamplingMismatch("far-field frequencies differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(&self.weights)
            .map(|((a, b), w)| (a - b).norm_sqr() * w)
            .sum::<f64>()
            .sqrt())
    }

    fn kind(&self) -> &'static str {
        "far"
    }
}

pub fn data_discrepancy<D: Discrepancy>(a: &D, b: &D) -> Result<f64> {
    a.discrepancy(b)
}
