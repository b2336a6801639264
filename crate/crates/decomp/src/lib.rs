//! Randomized low-rank matrix decompositions with sparse sub-Gaussian
//! sketching.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`] — deterministic dense/sparse kernels (GEMM, QR, SVD, LU,
//!   permutations, matrix-free operators, file I/O);
//! * [`fourier`] — a real-valued orthonormal DFT map used by the SRFT sketch
//!   and the matrix-free benchmark operator;
//! * [`sketch`] — seeded samplers for the sketch ensembles and
//!   nnz-proportional sketch application;
//! * [`rsvd`] / [`rlu`] — the randomized SVD and LU decompositions;
//! * [`conservation`] — Monte-Carlo checks of the distributional properties
//!   the sketches are chosen for;
//! * [`bench`] — the experiment harness behind the `decomp` CLI.

pub mod bench;
pub mod conservation;
pub mod error;
pub mod fourier;
pub mod linalg;
pub mod rlu;
pub mod rsvd;
pub mod sketch;

pub use error::{Error, Result};
pub use linalg::{CsrMatrix, DenseMatrix, LinearOperator, PermutationVector};
pub use rlu::{randomized_lu, LuFactors, RluParams};
pub use rsvd::{randomized_svd, truncate_rank, weyl_check, MatrixInput, RsvdParams, SvdFactors};
