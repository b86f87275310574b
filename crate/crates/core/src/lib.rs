//! Limiting eigenvalue densities of random inner-product kernel matrices.
//!
//! A kernel matrix is built from `n` random vectors `X_i` in `R^p` as
//! `A_ij = f(X_i^T X_j; p)` off the diagonal and zero on it. As `p, n` grow
//! with `p/n = gamma` fixed, the spectrum of `A` converges to a law that only
//! depends on three numbers `(a, nu, gamma)`, where `a` is the linear
//! Hermite coefficient of the rescaled kernel and `nu` its variance.
//!
//! The crate is organised along that pipeline:
//!
//! * [`poly_basis`]: Hermite polynomials, exact inner-product moments,
//!   moment-based orthonormal polynomials and quadrature.
//! * [`kernels`]: kernel catalog and extraction of `(a, nu)`.
//! * [`limit_law`]: the Stieltjes-transform equation and its densities.
//! * [`ensemble`]: seeded Monte Carlo sampling and eigenvalues.
//! * [`verify`]: empirical-versus-theory metrics and sweeps.
//! * [`cli`]: the `kernel-spectra` command-line front end.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod kernels;
pub mod limit_law;
pub mod poly_basis;
pub mod verify;

pub use error::{Error, Result};
