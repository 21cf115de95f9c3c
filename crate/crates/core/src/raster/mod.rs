//! Differentiable rasterizer for quadratic Bézier strokes.

pub mod bezier;
pub mod render;

pub use bezier::bezier_distance;
pub use render::{
    cull_box, render, render_backward, render_image, stroke_coverage, ParamGradients, PixelBox,
    RenderOutput, CULL_SOFTNESS_UNITS,
};
