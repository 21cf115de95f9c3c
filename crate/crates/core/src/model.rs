//! Shared value types: strokes, stroke sets, raster images and the
//! optimizer / transport configurations, plus the flat parameter view the
//! optimizer works on.
//!
//! Canvas coordinates put the origin at the top-left with `y` growing
//! downward. Pixel `(x, y)` is sampled at the point `(x, y)`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Narrowest width a stroke may have after clamping, in pixels.
pub const MIN_WIDTH: f64 = 0.5;

/// A 2-D canvas point in continuous pixel units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Control points are plain canvas points.
pub type ControlPoint = Point;

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Straight (non-premultiplied) RGBA color, each channel nominally in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rgba {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    pub a: f64,
}

impl Rgba {
    pub const fn new(r: f64, g: f64, b: f64, a: f64) -> Self {
        Self { r, g, b, a }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.r, self.g, self.b, self.a]
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn rgb(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

/// One quadratic Bézier paint stroke.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub points: [ControlPoint; 3],
    pub color: Rgba,
    pub width: f64,
}

impl Stroke {
    pub fn new(points: [ControlPoint; 3], color: Rgba, width: f64) -> Self {
        Self {
            points,
            color,
            width,
        }
    }

    /// Point on the curve at parameter `t`.
    pub fn eval(&self, t: f64) -> Point {
        let [p1, p2, p3] = self.points;
        let s = 1.0 - t;
        p1 * (s * s) + p2 * (2.0 * t * s) + p3 * (t * t)
    }
}

/// An ordered list of strokes on a fixed canvas. List order is paint order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrokeSet {
    pub strokes: Vec<Stroke>,
    pub canvas_width: usize,
    pub canvas_height: usize,
}

impl StrokeSet {
    pub fn new(canvas_width: usize, canvas_height: usize) -> Self {
        Self {
            strokes: Vec::new(),
            canvas_width,
            canvas_height,
        }
    }

    pub fn with_strokes(canvas_width: usize, canvas_height: usize, strokes: Vec<Stroke>) -> Self {
        Self {
            strokes,
            canvas_width,
            canvas_height,
        }
    }

    pub fn len(&self) -> usize {
        self.strokes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strokes.is_empty()
    }

    pub fn canvas_diagonal(&self) -> f64 {
        (self.canvas_width as f64).hypot(self.canvas_height as f64)
    }

    /// Widest width a stroke may have after clamping.
    pub fn max_width(&self) -> f64 {
        (self.canvas_diagonal() / 4.0).max(MIN_WIDTH)
    }
}

/// Dense row-major image with 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl RasterImage {
    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::dims(width * height * channels, data.len()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    /// RGB triple at `(x, y)`; gray images replicate their single channel.
    pub fn rgb(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 1 {
            let v = self.data[i];
            [v, v, v]
        } else {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        }
    }

    /// Returns a 3-channel copy (gray is replicated).
    pub fn to_rgb(&self) -> RasterImage {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }
}

/// Adam settings with one learning rate per parameter group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub lr_points: f64,
    pub lr_width: f64,
    pub lr_color: f64,
    pub steps: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Logistic edge softness of the rasterizer, in pixels.
    pub softness: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr_points: 1.0,
            lr_width: 0.1,
            lr_color: 0.05,
            steps: 250,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            softness: 1.0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lr_points", self.lr_points),
            ("lr_width", self.lr_width),
            ("lr_color", self.lr_color),
            ("adam_eps", self.adam_eps),
            ("softness", self.softness),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must be in [0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

/// Ground cost between transport grid cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OtCost {
    Euclidean,
    #[default]
    SqEuclidean,
}

/// Entropic optimal-transport settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkhornConfig {
    /// Side length of the square grid images are downsampled to.
    pub grid_size: usize,
    /// Entropic regularization strength.
    pub reg: f64,
    pub max_iters: usize,
    /// Stop once the L1 marginal violation drops below this.
    pub marginal_tol: f64,
    pub cost: OtCost,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            grid_size: 64,
            reg: 0.01,
            max_iters: 200,
            marginal_tol: 1e-6,
            cost: OtCost::SqEuclidean,
        }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg.is_finite() && self.reg > 0.0) {
            return Err(Error::InvalidArgument(format!("reg must be > 0, got {}", self.reg)));
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid_size must be >= 2, got {}",
                self.grid_size
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// The optimizer's view of a stroke set: three flat parameter groups.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    /// `p1.x, p1.y, p2.x, p2.y, p3.x, p3.y` per stroke.
    pub points: Vec<f64>,
    pub widths: Vec<f64>,
    /// `r, g, b, a` per stroke.
    pub colors: Vec<f64>,
}

impl Params {
    pub fn zeros(strokes: usize) -> Self {
        Self {
            points: vec![0.0; strokes * 6],
            widths: vec![0.0; strokes],
            colors: vec![0.0; strokes * 4],
        }
    }

    pub fn stroke_count(&self) -> usize {
        self.widths.len()
    }

    fn is_aligned(&self) -> bool {
        let n = self.widths.len();
        self.points.len() == n * 6 && self.colors.len() == n * 4
    }
}

pub fn flatten_params(s: &StrokeSet) -> Params {
    let n = s.len();
    let mut p = Params {
        points: Vec::with_capacity(n * 6),
        widths: Vec::with_capacity(n),
        colors: Vec::with_capacity(n * 4),
    };
    for st in &s.strokes {
        for cp in st.points {
            p.points.extend([cp.x, cp.y]);
        }
        p.widths.push(st.width);
        p.colors.extend(st.color.to_array());
    }
    p
}

/// Inverse of [`flatten_params`].
pub fn unflatten_params(params: &Params, canvas_width: usize, canvas_height: usize) -> Result<StrokeSet> {
    if !params.is_aligned() {
        return Err(Error::dims(
            format!("{} points, {} colors", params.widths.len() * 6, params.widths.len() * 4),
            format!("{} points, {} colors", params.points.len(), params.colors.len()),
        ));
    }
    let strokes = (0..params.widths.len())
        .map(|i| {
            let pt = &params.points[i * 6..i * 6 + 6];
            let c = &params.colors[i * 4..i * 4 + 4];
            Stroke {
                points: [
                    Point::new(pt[0], pt[1]),
                    Point::new(pt[2], pt[3]),
                    Point::new(pt[4], pt[5]),
                ],
                color: Rgba::new(c[0], c[1], c[2], c[3]),
                width: params.widths[i],
            }
        })
        .collect();
    Ok(StrokeSet::with_strokes(canvas_width, canvas_height, strokes))
}

/// Forces colors into `[0, 1]` and widths into `[0.5, diagonal / 4]`.
/// Control points are left alone; strokes may hang off the canvas.
pub fn clamp_params(s: &StrokeSet) -> Result<StrokeSet> {
    let max_w = s.max_width();
    let mut out = s.clone();
    for (i, st) in out.strokes.iter_mut().enumerate() {
        check_finite(i, st)?;
        st.width = st.width.clamp(MIN_WIDTH, max_w);
        let c = st.color.to_array().map(|v| v.clamp(0.0, 1.0));
        st.color = Rgba::from_array(c);
    }
    Ok(out)
}

pub(crate) fn check_finite(i: usize, st: &Stroke) -> Result<()> {
    for (k, cp) in st.points.iter().enumerate() {
        if !cp.is_finite() {
            let field = ["p1", "p2", "p3"][k];
            return Err(Error::NonFinite { stroke: i, field });
        }
    }
    if !st.width.is_finite() {
        return Err(Error::NonFinite {
            stroke: i,
            field: "width",
        });
    }
    if !st.color.to_array().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            stroke: i,
            field: "color",
        });
    }
    Ok(())
}
