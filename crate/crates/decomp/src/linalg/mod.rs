//! Dense and sparse matrix kernels: storage, products, QR, SVD, LU,
//! permutations, linear operators, and file I/O.
//!
//! Everything here is deterministic: the same inputs produce bitwise
//! identical outputs, which the decomposition layers above rely on for
//! reproducible experiments.

pub mod dense;
pub mod io;
pub mod lu;
pub mod operator;
pub mod perm;
pub mod qr;
pub mod sparse;
pub mod svd;

pub use dense::{gemm, gemm_nt, gemm_tn, DenseMatrix};
pub use io::{
    read_auto, read_dense_binary, read_dense_text, read_matrix_market, write_dense_binary,
    write_dense_text, write_matrix_market,
};
pub use lu::{lu_column_pivot, lu_partial_pivot};
pub use operator::{
    adjoint_consistency_defect, materialize, spectral_norm_estimate, DifferenceOperator,
    LinearOperator, LowRankOperator, PermutedOperator, ProductOperator,
};
pub use perm::PermutationVector;
pub use qr::thin_qr;
pub use sparse::{csr_csr_dense, spmm, CsrMatrix, Side};
pub use svd::{default_rank_tol, dense_svd, numerical_rank, pseudo_inverse, Svd};
