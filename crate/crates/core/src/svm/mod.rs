//! Support vector machines with linear and RBF kernels, trained by SMO, combined
//! one-vs-one for three classes, and tuned by a two-level grid search over base-2
//! exponents of cost and gamma.

mod grid;
mod kernel;
mod multiclass;
mod smo;

pub use grid::{
    cross_validate, grid_search, plan_folds, refinement, GridPoint, GridResult, GridSpec,
};
pub use kernel::KernelSpec;
pub use multiclass::{train_multiclass, train_rows, PairModel, SvmModel, MODEL_FORMAT_VERSION};
pub use smo::{kkt_violation, train_binary, BinaryModel, SvmHyper};
