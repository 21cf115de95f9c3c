//! Image-space objectives: pixel L2 and optimal-transport style.

pub mod distribution;
pub mod kernel;
pub mod mse;
pub mod ot;
pub mod sinkhorn;

pub use distribution::image_to_distribution;
pub use kernel::CostMatrix;
pub use mse::mse_loss;
pub use ot::{ot_loss, style_preserving_loss, style_preserving_loss_with, OtEvaluation, OtLoss, StyleLoss};
pub use sinkhorn::{sinkhorn, TransportPlan, TransportProblem};
