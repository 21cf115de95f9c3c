//! Soft stroke rasterization and its reverse-mode derivative.
//!
//! Coverage of a pixel by a stroke is a logistic function of the signed
//! distance from the pixel to the stroke's edge:
//!
//! ```text
//! z        = (width / 2 - dist(q, curve)) / softness
//! coverage = logistic(z)                      for z ≥ -8
//!          = logistic(z) · smootherstep(z)    for -10 < z < -8
//!          = 0                                for z ≤ -10
//! ```
//!
//! The short taper makes coverage exactly zero ten softness units outside
//! the edge while keeping it twice differentiable, so culling pixels outside
//! the stroke's expanded bounding box changes nothing, not even the
//! finite-difference behaviour of the loss.
//!
//! Strokes are composited over a white background in list order with
//! `out = (1 - a)·under + a·rgb`, `a = alpha · coverage`.

use rayon::prelude::*;

use super::bezier::bezier_distance;
use crate::error::{Error, Result};
use crate::model::{Params, Point, RasterImage, Stroke, StrokeSet};

/// Gradients of a scalar loss, laid out like [`crate::model::flatten_params`].
pub type ParamGradients = Params;

/// Coverage is exactly zero this many softness units outside the edge.
pub const CULL_SOFTNESS_UNITS: f64 = 10.0;
const TAPER: f64 = 2.0;
const BAND_ROWS: usize = 16;

/// Inclusive-exclusive pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelBox {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub image: RasterImage,
    /// Per stroke, the pixels it can touch; `None` when wholly off-canvas.
    pub boxes: Vec<Option<PixelBox>>,
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Coverage and its derivative with respect to `z`.
fn coverage_of_z(z: f64) -> (f64, f64) {
    if z <= -CULL_SOFTNESS_UNITS {
        return (0.0, 0.0);
    }
    let s = logistic(z);
    let ds = s * (1.0 - s);
    if z >= TAPER - CULL_SOFTNESS_UNITS {
        return (s, ds);
    }
    let u = (z + CULL_SOFTNESS_UNITS) / TAPER;
    let taper = u * u * u * (10.0 + u * (6.0 * u - 15.0));
    let dtaper = 30.0 * u * u * (1.0 - u) * (1.0 - u) / TAPER;
    (s * taper, ds * taper + s * dtaper)
}

/// Soft coverage of pixel center `q` by stroke `s`.
pub fn stroke_coverage(q: Point, s: &Stroke, softness: f64) -> f64 {
    let [p1, p2, p3] = s.points;
    let (d, _) = bezier_distance(q, p1, p2, p3);
    coverage_of_z((0.5 * s.width - d) / softness).0
}

/// Pixels that can receive non-zero coverage from `s`.
pub fn cull_box(s: &Stroke, softness: f64, width: usize, height: usize) -> Option<PixelBox> {
    let r = 0.5 * s.width + CULL_SOFTNESS_UNITS * softness;
    let xs = s.points.map(|p| p.x);
    let ys = s.points.map(|p| p.y);
    let min = |v: [f64; 3]| v[0].min(v[1]).min(v[2]);
    let max = |v: [f64; 3]| v[0].max(v[1]).max(v[2]);
    let lo_x = (min(xs) - r).ceil().max(0.0);
    let hi_x = (max(xs) + r).floor() + 1.0;
    let lo_y = (min(ys) - r).ceil().max(0.0);
    let hi_y = (max(ys) + r).floor() + 1.0;
    if !(lo_x.is_finite() && hi_x.is_finite() && lo_y.is_finite() && hi_y.is_finite()) {
        return None;
    }
    let x1 = hi_x.min(width as f64);
    let y1 = hi_y.min(height as f64);
    if lo_x >= x1 || lo_y >= y1 {
        return None;
    }
    Some(PixelBox {
        x0: lo_x as usize,
        x1: x1 as usize,
        y0: lo_y as usize,
        y1: y1 as usize,
    })
}

fn check_inputs(s: &StrokeSet, softness: f64) -> Result<()> {
    if s.canvas_width == 0 || s.canvas_height == 0 {
        return Err(Error::EmptyImage);
    }
    if !(softness.is_finite() && softness > 0.0) {
        return Err(Error::InvalidArgument(format!("softness must be > 0, got {softness}")));
    }
    Ok(())
}

fn boxes_for(s: &StrokeSet, softness: f64) -> Vec<Option<PixelBox>> {
    s.strokes
        .iter()
        .map(|st| cull_box(st, softness, s.canvas_width, s.canvas_height))
        .collect()
}

/// Renders `s` over a white background.
pub fn render(s: &StrokeSet, softness: f64) -> Result<RenderOutput> {
    check_inputs(s, softness)?;
    let (w, h) = (s.canvas_width, s.canvas_height);
    let boxes = boxes_for(s, softness);
    let mut data = vec![1.0; w * h * 3];

    data.par_chunks_mut(BAND_ROWS * w * 3)
        .enumerate()
        .for_each(|(band, chunk)| {
            let y_start = band * BAND_ROWS;
            let y_end = (y_start + BAND_ROWS).min(h);
            for (st, bx) in s.strokes.iter().zip(&boxes) {
                let Some(bx) = bx else { continue };
                let (y0, y1) = (bx.y0.max(y_start), bx.y1.min(y_end));
                if y0 >= y1 {
                    continue;
                }
                let alpha = st.color.a;
                let rgb = st.color.rgb();
                let [p1, p2, p3] = st.points;
                let inv_soft = 1.0 / softness;
                for y in y0..y1 {
                    for x in bx.x0..bx.x1 {
                        let q = Point::new(x as f64, y as f64);
                        let (d, _) = bezier_distance(q, p1, p2, p3);
                        let (cov, _) = coverage_of_z((0.5 * st.width - d) * inv_soft);
                        let a = alpha * cov;
                        if a == 0.0 {
                            continue;
                        }
                        let i = ((y - y_start) * w + x) * 3;
                        for c in 0..3 {
                            chunk[i + c] = (1.0 - a) * chunk[i + c] + a * rgb[c];
                        }
                    }
                }
            }
        });

    Ok(RenderOutput {
        image: RasterImage {
            width: w,
            height: h,
            channels: 3,
            data,
        },
        boxes,
    })
}

/// Convenience wrapper returning only the image.
pub fn render_image(s: &StrokeSet, softness: f64) -> Result<RasterImage> {
    render(s, softness).map(|o| o.image)
}

#[derive(Clone, Copy)]
struct Hit {
    stroke: u32,
    cov: f64,
    dcov_dz: f64,
    t: f64,
    // unit vector from the query to the nearest curve point, zero on the spine
    nx: f64,
    ny: f64,
}

const GRAD_STRIDE: usize = 11;

/// Gradient of a scalar loss with respect to every stroke parameter, given
/// the loss gradient `d_image` with respect to the rendered RGB pixels.
///
/// The nearest-point parameter `t*` is held fixed when differentiating the
/// distance: it is a minimizer, so its own sensitivity vanishes to first
/// order.
pub fn render_backward(s: &StrokeSet, softness: f64, d_image: &RasterImage) -> Result<ParamGradients> {
    check_inputs(s, softness)?;
    let (w, h) = (s.canvas_width, s.canvas_height);
    if d_image.width != w || d_image.height != h || d_image.channels != 3 {
        return Err(Error::dims(format!("{w}x{h}x3"), d_image.shape_string()));
    }
    let n = s.len();
    let boxes = boxes_for(s, softness);
    let bands = h.div_ceil(BAND_ROWS);

    let partials: Vec<Vec<f64>> = (0..bands)
        .into_par_iter()
        .map(|band| backward_band(s, softness, &boxes, d_image, band))
        .collect();

    let mut acc = vec![0.0; n * GRAD_STRIDE];
    for part in &partials {
        if part.is_empty() {
            continue;
        }
        for (a, p) in acc.iter_mut().zip(part) {
            *a += p;
        }
    }

    let mut g = Params::zeros(n);
    for i in 0..n {
        let src = &acc[i * GRAD_STRIDE..(i + 1) * GRAD_STRIDE];
        g.points[i * 6..i * 6 + 6].copy_from_slice(&src[..6]);
        g.widths[i] = src[6];
        g.colors[i * 4..i * 4 + 4].copy_from_slice(&src[7..11]);
    }
    Ok(g)
}

fn backward_band(
    s: &StrokeSet,
    softness: f64,
    boxes: &[Option<PixelBox>],
    d_image: &RasterImage,
    band: usize,
) -> Vec<f64> {
    let w = s.canvas_width;
    let y_start = band * BAND_ROWS;
    let y_end = (y_start + BAND_ROWS).min(s.canvas_height);
    let band_pixels = (y_end - y_start) * w;
    let inv_soft = 1.0 / softness;

    // gather hits in paint order, then bucket them per pixel
    let mut raw: Vec<(u32, Hit)> = Vec::new();
    for (k, (st, bx)) in s.strokes.iter().zip(boxes).enumerate() {
        let Some(bx) = bx else { continue };
        let (y0, y1) = (bx.y0.max(y_start), bx.y1.min(y_end));
        let [p1, p2, p3] = st.points;
        for y in y0..y1 {
            for x in bx.x0..bx.x1 {
                let q = Point::new(x as f64, y as f64);
                let (d, t) = bezier_distance(q, p1, p2, p3);
                let (cov, dcov_dz) = coverage_of_z((0.5 * st.width - d) * inv_soft);
                if cov == 0.0 && dcov_dz == 0.0 {
                    continue;
                }
                let (nx, ny) = if d > 0.0 {
                    let b = st.eval(t);
                    ((b.x - q.x) / d, (b.y - q.y) / d)
                } else {
                    (0.0, 0.0)
                };
                let pix = ((y - y_start) * w + x) as u32;
                raw.push((
                    pix,
                    Hit {
                        stroke: k as u32,
                        cov,
                        dcov_dz,
                        t,
                        nx,
                        ny,
                    },
                ));
            }
        }
    }
    if raw.is_empty() {
        return Vec::new();
    }

    let mut start = vec![0usize; band_pixels + 1];
    for (pix, _) in &raw {
        start[*pix as usize + 1] += 1;
    }
    for i in 0..band_pixels {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut hits = vec![
        Hit {
            stroke: 0,
            cov: 0.0,
            dcov_dz: 0.0,
            t: 0.0,
            nx: 0.0,
            ny: 0.0
        };
        raw.len()
    ];
    for (pix, hit) in raw {
        let slot = &mut fill[pix as usize];
        hits[*slot] = hit;
        *slot += 1;
    }

    let mut grads = vec![0.0; s.len() * GRAD_STRIDE];
    let mut under: Vec<[f64; 3]> = Vec::new();
    for pix in 0..band_pixels {
        let list = &hits[start[pix]..start[pix + 1]];
        if list.is_empty() {
            continue;
        }
        let (x, y) = (pix % w, y_start + pix / w);
        let gi = (y * w + x) * 3;
        let mut gout = [d_image.data[gi], d_image.data[gi + 1], d_image.data[gi + 2]];
        if gout == [0.0; 3] {
            continue;
        }

        // colors beneath each hit
        under.clear();
        let mut c = [1.0; 3];
        for hit in list {
            under.push(c);
            let st = &s.strokes[hit.stroke as usize];
            let a = st.color.a * hit.cov;
            let rgb = st.color.rgb();
            for ch in 0..3 {
                c[ch] = (1.0 - a) * c[ch] + a * rgb[ch];
            }
        }

        for (hit, below) in list.iter().zip(&under).rev() {
            let st = &s.strokes[hit.stroke as usize];
            let alpha = st.color.a;
            let a = alpha * hit.cov;
            let rgb = st.color.rgb();
            let g = &mut grads[hit.stroke as usize * GRAD_STRIDE..][..GRAD_STRIDE];

            let mut d_a = 0.0;
            for ch in 0..3 {
                g[7 + ch] += gout[ch] * a;
                d_a += gout[ch] * (rgb[ch] - below[ch]);
            }
            g[10] += d_a * hit.cov;
            let d_z = d_a * alpha * hit.dcov_dz;
            g[6] += d_z * 0.5 * inv_soft;
            let d_dist = -d_z * inv_soft;
            let t = hit.t;
            let basis = [(1.0 - t) * (1.0 - t), 2.0 * t * (1.0 - t), t * t];
            for (j, bj) in basis.iter().enumerate() {
                g[2 * j] += d_dist * bj * hit.nx;
                g[2 * j + 1] += d_dist * bj * hit.ny;
            }
            for ch in gout.iter_mut() {
                *ch *= 1.0 - a;
            }
        }
    }
    grads
}
