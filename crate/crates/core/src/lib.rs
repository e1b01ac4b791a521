//! Gaussian RBF kernels on Riemannian manifolds.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: symmetric eigendecomposition and spectral matrix functions
//! - [`spd`]: SPD matrices, five distances, Karcher means, dispersion
//! - [`grassmann`]: subspaces, principal angles, five distances
//! - [`kernel`]: `exp(−γ d²)` kernels, Gram matrices, definiteness search
//! - [`learn`]: kernel k-means, kernel PCA, kernel FDA, SVM, MKL
//! - [`features`]: region covariance and structure tensor descriptors
//! - [`io`], [`sample`], [`synth`]: file formats and seeded generators
//!
//! All learning algorithms consume precomputed Gram matrices and never
//! touch the manifold points directly.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod features;
pub mod grassmann;
pub mod io;
pub mod kernel;
pub mod learn;
pub mod linalg;
pub mod sample;
pub mod spd;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
pub use grassmann::{GrassmannMetric, GrassmannPoint};
pub use kernel::{GramMatrix, KernelSpec, Manifold, Point};
pub use linalg::{Matrix, Vector};
pub use spd::{SpdMatrix, SpdMetric};
