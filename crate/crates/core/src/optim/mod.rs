//! Adam-driven refinement loops.

mod adam;
mod fit;

pub use adam::{adam_step, AdamState};
pub use fit::{
    imitation_fit, imitation_fit_with, synthesize, synthesize_with, RunConfig, RunReport, TraceEntry,
};
