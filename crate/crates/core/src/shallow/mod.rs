//! Kernel and feed-forward regressors over standardized tabular features.

mod mlp;
mod svr;

pub use mlp::{fit_mlp, init_params, layer_sizes, loss_and_grad, param_count, Dense, MlpModel, MlpParams};
pub use svr::{dual_objective, fit_svr, gram_matrix, rbf_kernel, solve_dual, SvrModel, SvrParams, SvrSolution};
