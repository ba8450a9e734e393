use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Uniform cubic grid on `[-L, L)³` with `n` nodes per axis.
///
/// Node `i` along an axis sits at `-L + i h`, `h = 2L / n`; since `n` is even the
/// origin is node `n / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    half_extent: f64,
    n: usize,
}

impl Grid3 {
    pub fn new(half_extent: f64, n: usize) -> Result<Self> {
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half extent must be positive, got {half_extent}"
            )));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be an even integer >= 8, got {n}"
            )));
        }
        Ok(Self { half_extent, n })
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest resolvable wavenumber per axis, `π / h`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.spacing()
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn node_of_index(&self, idx: usize) -> Vec3 {
        let k = idx % self.n;
        let j = (idx / self.n) % self.n;
        let i = idx / (self.n * self.n);
        self.node(i, j, k)
    }

    /// Whether the ball `B_r` lies strictly inside the grid box.
    pub fn covers_ball(&self, r: f64) -> bool {
        self.half_extent > r
    }

    /// The whole grid as an index box.
    pub fn full_box(&self) -> IndexBox {
        IndexBox {
            lo: [0; 3],
            dims: [self.n; 3],
        }
    }

    /// Smallest index box containing every node with all coordinates in `(-r, r)`.
    pub fn ball_box(&self, r: f64) -> IndexBox {
        let mut lo = self.n;
        let mut hi = 0;
        for i in 0..self.n {
            if self.coord(i).abs() < r {
                lo = lo.min(i);
                hi = hi.max(i);
            }
        }
        if lo > hi {
            return IndexBox {
                lo: [self.n / 2; 3],
                dims: [1; 3],
            };
        }
        IndexBox {
            lo: [lo; 3],
            dims: [hi - lo + 1; 3],
        }
    }
}

/// Axis-aligned block of grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBox {
    pub lo: [usize; 3],
    pub dims: [usize; 3],
}

impl IndexBox {
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn local_index(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.dims[1] + b) * self.dims[2] + c
    }

    /// Global `(i, j, k)` of the `idx`-th box node in row-major order.
    #[inline]
    pub fn global(&self, idx: usize) -> [usize; 3] {
        let c = idx % self.dims[2];
        let b = (idx / self.dims[2]) % self.dims[1];
        let a = idx / (self.dims[1] * self.dims[2]);
        [self.lo[0] + a, self.lo[1] + b, self.lo[2] + c]
    }

    /// Gather box values out of a full-grid field.
    pub fn gather<T: Copy>(&self, grid: &Grid3, field: &[T]) -> Vec<T> {
        (0..self.len())
            .map(|idx| {
                let [i, j, k] = self.global(idx);
                field[grid.index(i, j, k)]
            })
            .collect()
    }

    /// Scatter box values into a full-grid field.
    pub fn scatter<T: Copy>(&self, grid: &Grid3, values: &[T], field: &mut [T]) {
        for (idx, &val) in values.iter().enumerate() {
            let [i, j, k] = self.global(idx);
            field[grid.index(i, j, k)] = val;
        }
    }
}
