//! Injective norm and geometric measure of entanglement estimation for dense
//! real and complex tensors.
//!
//! The crate provides dense tensors and their contraction kernels, random
//! tensor and MPS samplers, reference states with closed-form entanglement,
//! four product-state optimizers (ALS, PIM, NGD, SGD), least-squares fits of
//! the asymptotic scaling forms and a reproducible experiment runner.

pub mod bench;
pub mod candidate;
mod contract;
pub mod error;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod random;
pub mod scalar;
pub mod states;
pub mod tensor;

pub use bench::{run_experiment, ExperimentConfig, ResultRecord};
pub use candidate::{assemble_product, ProductCandidate};
pub use error::{Error, Result};
pub use fit::{fit_mps_surface, fit_sqrt_inverse, FitModel, FitResult};
pub use linalg::operator_norm_order2;
pub use optim::{
    als_fit, estimate_injective_norm, fit, gradient, loss, ngd_fit, pim_fit, sgd_fit, Algorithm,
    Estimate, OptimizeResult, OptimizerConfig,
};
pub use random::{ModelKind, ModelSpec, Seed};
pub use scalar::Field;
pub use states::{build_antisym, build_dicke, gme_antisym, gme_dicke, AntisymSpec, DickeSpec};
pub use tensor::{
    euclidean_norm, inner_product, symmetrize_cyclic, symmetrize_full, DenseTensor, TensorData,
};
