//! Three-dimensional FFTs and the zero-padded box convolution used by the
//! volume integral solvers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::IndexBox;

/// Smallest integer `>= min` whose only prime factors are 2, 3 and 5.
pub fn fast_len(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Planned 3-D transform over a row-major `dims[0] × dims[1] × dims[2]` array.
pub struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.map(|n| planner.plan_fft_forward(n));
        let inverse = dims.map(|n| planner.plan_fft_inverse(n));
        Self {
            dims,
            forward,
            inverse,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward transform, `Σ x e^{-2πi n·j / N}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse transform, `Σ x e^{+2πi n·j / N}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [n0, n1, n2] = self.dims;
        assert_eq!(data.len(), n0 * n1 * n2, "FFT buffer size mismatch");
        let scratch_len = plans
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];

        // contiguous axis
        plans[2].process_with_scratch(data, &mut scratch);

        let mut line = vec![Complex64::new(0.0, 0.0); n0.max(n1)];
        for a in 0..n0 {
            for c in 0..n2 {
                for b in 0..n1 {
                    line[b] = data[(a * n1 + b) * n2 + c];
                }
                plans[1].process_with_scratch(&mut line[..n1], &mut scratch);
                for b in 0..n1 {
                    data[(a * n1 + b) * n2 + c] = line[b];
                }
            }
        }
        let stride = n1 * n2;
        for bc in 0..stride {
            for a in 0..n0 {
                line[a] = data[a * stride + bc];
            }
            plans[0].process_with_scratch(&mut line[..n0], &mut scratch);
            for a in 0..n0 {
                data[a * stride + bc] = line[a];
            }
        }
    }
}

/// Discrete convolution `out[t] = Σ_s K(t − s) in[s]` from a source box to a
/// target box, evaluated as a cyclic convolution on a zero-padded FFT grid large
/// enough that no wrap-around occurs.
pub struct Convolver {
    src: IndexBox,
    dst: IndexBox,
    fft: Fft3,
    kernel_hat: Vec<Complex64>,
}

impl Convolver {
    /// `kernel` receives the 3-D grid index offset `t − s`.
    pub fn new(src: IndexBox, dst: IndexBox, kernel: impl Fn([i64; 3]) -> Complex64) -> Self {
        let pad = [0, 1, 2].map(|a| fast_len(src.dims[a] + dst.dims[a] - 1));
        let fft = Fft3::new(pad);
        let shift = [0, 1, 2].map(|a| dst.lo[a] as i64 - src.lo[a] as i64);
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); fft.len()];
        let range = |a: usize| -(src.dims[a] as i64 - 1)..=(dst.dims[a] as i64 - 1);
        for j0 in range(0) {
            let i0 = j0.rem_euclid(pad[0] as i64) as usize;
            for j1 in range(1) {
                let i1 = j1.rem_euclid(pad[1] as i64) as usize;
                for j2 in range(2) {
                    let i2 = j2.rem_euclid(pad[2] as i64) as usize;
                    kernel_hat[(i0 * pad[1] + i1) * pad[2] + i2] =
                        kernel([shift[0] + j0, shift[1] + j1, shift[2] + j2]);
                }
            }
        }
        fft.forward(&mut kernel_hat);
        let inv_len = 1.0 / fft.len() as f64;
        kernel_hat.iter_mut().for_each(|z| *z *= inv_len);
        Self {
            src,
            dst,
            fft,
            kernel_hat,
        }
    }

    pub fn source(&self) -> IndexBox {
        self.src
    }

    pub fn target(&self) -> IndexBox {
        self.dst
    }

    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(input.len(), self.src.len());
        assert_eq!(out.len(), self.dst.len());
        let pad = self.fft.dims();
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        let [s0, s1, s2] = self.src.dims;
        for a in 0..s0 {
            for b in 0..s1 {
                let row = (a * pad[1] + b) * pad[2];
                let src_row = (a * s1 + b) * s2;
                buf[row..row + s2].copy_from_slice(&input[src_row..src_row + s2]);
            }
        }
        self.fft.forward(&mut buf);
        buf.iter_mut()
            .zip(&self.kernel_hat)
            .for_each(|(x, k)| *x *= k);
        self.fft.inverse(&mut buf);
        let [t0, t1, t2] = self.dst.dims;
        for a in 0..t0 {
            for b in 0..t1 {
                let row = (a * pad[1] + b) * pad[2];
                let dst_row = (a * t1 + b) * t2;
                out[dst_row..dst_row + t2].copy_from_slice(&buf[row..row + t2]);
            }
        }
    }
}
