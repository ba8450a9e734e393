//! Browser bindings for a few cheap scatterlab operations.
//!
//! Every exported function has a plain Rust twin in [`ops`] that the native
//! tests call directly.

use wasm_bindgen::prelude::*;

pub mod ops {
    use scatterlab::faddeev::{solve_cgo, theta_pair};
    use scatterlab::gmres::SolverConfig;
    use scatterlab::inversion::{schedule_from_delta, stability_exponent, theoretical_bound};
    use scatterlab::medium::{make_phantom, potential_of, Bump};
    use scatterlab::{Complex64, Grid3, Result};

    const OMEGA: f64 = 2.0;
    const R1: f64 = 1.0;
    const M: u32 = 6;

    fn phantom_bumps(amplitude: f64, radius: f64, offset: f64) -> Vec<Bump> {
        vec![
            Bump::new([0.0; 3], 0.5, Complex64::new(-0.1, 0.0)),
            Bump::new([offset, 0.0, 0.0], radius, Complex64::new(amplitude, 0.0)),
        ]
    }

    /// `Re n` on the plane `z = 0` of an `n³` grid over `[−1.25, 1.25)³`,
    /// row-major in `(x, y)`.
    pub fn phantom_slice(amplitude: f64, radius: f64, offset: f64, n: usize) -> Result<Vec<f64>> {
        let grid = Grid3::new(1.25, n)?;
        let index = make_phantom(&phantom_bumps(amplitude, radius, offset), grid, R1, M)?;
        let k = n / 2;
        Ok((0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| index.samples[grid.index(i, j, k)].re)
            .collect())
    }

    /// `(|k|, sup |μ − 1|)` pairs for the same phantom at `p = (1, 0, 0)`.
    pub fn cgo_decay(amplitude: f64, radius: f64, offset: f64, rhos: &[f64]) -> Result<Vec<f64>> {
        let grid = Grid3::new(1.25, 16)?;
        let index = make_phantom(&phantom_bumps(amplitude, radius, offset), grid, R1, M)?;
        let v = potential_of(&index, OMEGA)?;
        let cfg = SolverConfig::default();
        let mut out = Vec::with_capacity(2 * rhos.len());
        for &rho in rhos {
            let pair = theta_pair([1.0, 0.0, 0.0], v.energy, rho, 0.0)?;
            let cgo = solve_cgo(&v, &pair.k, &cfg)?;
            out.push(pair.k.modulus());
            out.push(cgo.sup_deviation);
        }
        Ok(out)
    }

    /// Rows `(δ, ρ, κ, C (ln(3 + δ⁻¹))^{−s})` on a log-spaced `δ` ladder.
    pub fn stability_curve(m: u32, c: f64, log10_min: f64, log10_max: f64, count: usize) -> Result<Vec<f64>> {
        let s = stability_exponent(m);
        let steps = count.max(2);
        let mut out = Vec::with_capacity(4 * steps);
        for i in 0..steps {
            let t = i as f64 / (steps - 1) as f64;
            let delta = 10f64.powf(log10_min + t * (log10_max - log10_min));
            let schedule = schedule_from_delta(delta, 0.5, 1.8, OMEGA * OMEGA, 1.0)?;
            out.extend([delta, schedule.rho, schedule.kappa, theoretical_bound(delta, s, c)]);
        }
        Ok(out)
    }
}

fn js(e: scatterlab::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn phantom_slice(amplitude: f64, radius: f64, offset: f64, n: usize) -> Result<Vec<f64>, JsError> {
    ops::phantom_slice(amplitude, radius, offset, n).map_err(js)
}

#[wasm_bindgen]
pub fn cgo_decay(amplitude: f64, radius: f64, offset: f64, rhos: Vec<f64>) -> Result<Vec<f64>, JsError> {
    ops::cgo_decay(amplitude, radius, offset, &rhos).map_err(js)
}

#[wasm_bindgen]
pub fn stability_curve(m: u32, c: f64, log10_min: f64, log10_max: f64, count: usize) -> Result<Vec<f64>, JsError> {
    ops::stability_curve(m, c, log10_min, log10_max, count).map_err(js)
}
