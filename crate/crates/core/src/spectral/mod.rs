//! Scalar and spectral kernels shared by the certificates.

pub mod eigen;
pub mod kappa;
pub mod maximize;

pub use eigen::{
    dense_spectral_abscissa, is_metzler, matrix_measure, perron_root, spectral_abscissa,
    LinearOperator, Perron, PowerOptions,
};
pub use kappa::{c_minus, kappa, kappa_inv_at_one, log_kappa, KappaParams};
pub use maximize::{maximize_on_interval, MaximizeOptions, ScalarMaximizeResult};
