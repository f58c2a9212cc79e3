//! Desk-scale objectives with analytic gradients and curvature.

mod data;
mod logistic;
mod mlp;
mod quadratic;
mod two_eigen;

pub use data::{make_blobs, Dataset};
pub use logistic::LogisticProblem;
pub use mlp::{Activation, LossKind, MlpProblem};
pub use quadratic::{HMatrix, QuadraticProblem};
pub use two_eigen::TwoEigenQuadratic;
