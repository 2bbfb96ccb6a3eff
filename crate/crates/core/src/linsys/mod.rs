//! Dense linear-system numerics.

mod eig;
mod expm;
mod mat;
mod system;

pub use eig::{
    eigenvalues, is_hurwitz, is_schur, lyapunov, spectral_abscissa, spectral_radius, symmetric_eigenvalues, EIG_MARGIN,
};
pub use expm::{expm, expm_integral, zoh_discretize};
pub use mat::{Lu, Mat};
pub use system::{l1_norm, realize_cascade, Cascade, L1Norm, StateSpaceSystem};
