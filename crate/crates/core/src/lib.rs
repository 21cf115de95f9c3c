//! Painterly stroke extraction and stylized SVG synthesis.
//!
//! The pipeline: segment a reference painting into superpixels, turn each
//! region into one quadratic Bézier stroke, refine the strokes so their
//! rendering reproduces the painting, then rearrange them toward a content
//! image under a loss that mixes pixel MSE with an entropic
//! optimal-transport term anchored to the refined reference.

pub mod error;
pub mod extract;
pub mod io;
pub mod losses;
pub mod model;
pub mod optim;
pub mod raster;
pub mod superpixel;

pub use error::{Error, Result};
pub use model::{
    clamp_params, flatten_params, unflatten_params, ControlPoint, OptimConfig, OtCost, Params,
    Point, RasterImage, Rgba, SinkhornConfig, Stroke, StrokeSet,
};
