//! Discrete operators and weighted operator-norm measurement.

mod bilinear;
mod linear;
mod norm;

pub use bilinear::{bht, bi_s, BilinearForm, BilinearKernelOp, BilinearKind, WeightedBilinear};
pub use linear::{
    double_hilbert, hilbert, hilbert_direct, maximal, riesz, DenseMatrix, LinearKernelOp,
    LinearKind, LinearMap,
};
pub use norm::{
    bilinear_norm_lower_bound, boyd_lower_bound, top_singular_value, weighted_norm,
    weighted_operator_norm, weighted_operator_norm_with, BoydOptions, NormMethod, Spectral, WeightedNormEstimate,
};
