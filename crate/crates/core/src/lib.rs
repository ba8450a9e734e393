//! Numerical laboratory for monochromatic inverse acoustic scattering.
//!
//! The crate is organised bottom-up:
//!
//! * [`medium`]: refractive-index phantoms, potentials `v = ω²(1 − n)`, Sobolev
//!   and weighted spectral norms, Fourier transforms of compactly supported fields.
//! * [`forward`]: outgoing Lippmann–Schwinger solves, near-field Green data on a
//!   sphere, far-field amplitudes and data discrepancies.
//! * [`faddeev`]: complex wave vectors, the Faddeev kernel, CGO solutions and the
//!   generalized amplitude `h(k, l)`.
//! * [`inversion`]: the low-pass/tail reconstruction with its logarithmic
//!   parameter schedule, and stability sweeps.
//! * [`verify`]: numerical checks of the exact identities and inequality chain.
//!
//! Supporting plumbing lives in [`grid`], [`fft`], [`gmres`], [`quadrature`],
//! [`config`], [`container`] and [`parallel`].

pub mod config;
pub mod container;
pub mod error;
pub mod faddeev;
pub mod fft;
pub mod forward;
pub mod gmres;
pub mod grid;
pub mod inversion;
pub mod medium;
pub mod parallel;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid3, IndexBox, Vec3};
pub use num_complex::Complex64;
