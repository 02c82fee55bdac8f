//! Dense complex linear algebra shared by every other module.

pub mod linalg;
pub mod matrix;

pub use linalg::{
    apply_kron_power, hermitian_eigen, hermitian_function, isometry_residual, min_eigenvalue,
    numerical_rank, op_norm, orthogonal_complement, orthonormal_range, partial_trace_left,
    partial_trace_right, psd_inverse, psd_inverse_sqrt, psd_sqrt, singular_values,
};
pub use matrix::CMatrix;
