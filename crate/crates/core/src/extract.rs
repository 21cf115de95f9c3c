//! One stroke per superpixel region.
//!
//! The two border pixels farthest apart become the end points, the middle
//! control point sits halfway between them, the width is the mean distance
//! of the border to the line through the end points and the color is the
//! region's mean color.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Point, RasterImage, Rgba, Stroke, StrokeSet, MIN_WIDTH};
use crate::superpixel::LabelMap;

/// Above this many border pixels the farthest pair is searched on the
/// convex hull only.
pub const BRUTE_FORCE_LIMIT: usize = 2000;

/// Pixels of one region as `(x, y)`, both lists in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionGeometry {
    pub region_id: usize,
    pub interior_pixels: Vec<(usize, usize)>,
    /// Region pixels with a 4-neighbor outside the region or off the image.
    pub border_pixels: Vec<(usize, usize)>,
}

fn is_border(lm: &LabelMap, x: usize, y: usize) -> bool {
    let l = lm.label(x, y);
    x == 0
        || y == 0
        || x + 1 == lm.width
        || y + 1 == lm.height
        || lm.label(x - 1, y) != l
        || lm.label(x + 1, y) != l
        || lm.label(x, y - 1) != l
        || lm.label(x, y + 1) != l
}

pub fn region_border(lm: &LabelMap, region_id: usize) -> Result<RegionGeometry> {
    let mut geo = RegionGeometry {
        region_id,
        interior_pixels: Vec::new(),
        border_pixels: Vec::new(),
    };
    for y in 0..lm.height {
        for x in 0..lm.width {
            if lm.label(x, y) == region_id {
                geo.interior_pixels.push((x, y));
                if is_border(lm, x, y) {
                    geo.border_pixels.push((x, y));
                }
            }
        }
    }
    if geo.interior_pixels.is_empty() {
        return Err(Error::EmptyRegion(region_id));
    }
    Ok(geo)
}

/// Geometry of every region in one pass, indexed by region id.
pub fn region_geometries(lm: &LabelMap) -> Result<Vec<RegionGeometry>> {
    let mut out: Vec<RegionGeometry> = (0..lm.region_count)
        .map(|region_id| RegionGeometry {
            region_id,
            interior_pixels: Vec::new(),
            border_pixels: Vec::new(),
        })
        .collect();
    for y in 0..lm.height {
        for x in 0..lm.width {
            let l = lm.label(x, y);
            let geo = out.get_mut(l).ok_or_else(|| {
                Error::InvalidArgument(format!("label {l} outside [0, {})", lm.region_count))
            })?;
            geo.interior_pixels.push((x, y));
            if is_border(lm, x, y) {
                geo.border_pixels.push((x, y));
            }
        }
    }
    if let Some(empty) = out.iter().find(|g| g.interior_pixels.is_empty()) {
        return Err(Error::EmptyRegion(empty.region_id));
    }
    Ok(out)
}

fn sq_dist(a: (usize, usize), b: (usize, usize)) -> u64 {
    let dx = a.0.abs_diff(b.0) as u64;
    let dy = a.1.abs_diff(b.1) as u64;
    dx * dx + dy * dy
}

/// Index pair `(i, j)`, `i <= j`, into `pts` (row-major) of the farthest
/// pair, smallest `(i, j)` among ties, scanning only `candidates`.
fn farthest_among(pts: &[(usize, usize)], candidates: &[usize]) -> (usize, usize) {
    let mut best = (0, candidates[0], candidates[0]);
    for (a, &i) in candidates.iter().enumerate() {
        for &j in &candidates[a + 1..] {
            let d = sq_dist(pts[i], pts[j]);
            let (lo, hi) = (i.min(j), i.max(j));
            if d > best.0 || (d == best.0 && (lo, hi) < (best.1, best.2)) {
                best = (d, lo, hi);
            }
        }
    }
    (best.1, best.2)
}

fn cross(o: (usize, usize), a: (usize, usize), b: (usize, usize)) -> i64 {
    let (ox, oy) = (o.0 as i64, o.1 as i64);
    (a.0 as i64 - ox) * (b.1 as i64 - oy) - (a.1 as i64 - oy) * (b.0 as i64 - ox)
}

/// Indices of the strict convex hull vertices (monotone chain).
fn hull_indices(pts: &[(usize, usize)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by_key(|&i| (pts[i].0, pts[i].1));
    if order.len() < 3 {
        return order;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= 0 {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

/// Farthest pair of border pixels as indices into the row-major border list.
pub fn farthest_pair(border: &[(usize, usize)]) -> (usize, usize) {
    if border.len() <= BRUTE_FORCE_LIMIT {
        let all: Vec<usize> = (0..border.len()).collect();
        farthest_among(border, &all)
    } else {
        // every maximizing pair consists of hull vertices
        let mut hull = hull_indices(border);
        hull.sort_unstable();
        farthest_among(border, &hull)
    }
}

/// Mean distance of `pts` to the infinite line through `a` and `b`; zero
/// when `a == b`.
pub fn mean_line_distance(pts: &[(usize, usize)], a: (usize, usize), b: (usize, usize)) -> f64 {
    if a == b || pts.is_empty() {
        return 0.0;
    }
    let len = (sq_dist(a, b) as f64).sqrt();
    let total: f64 = pts.iter().map(|&p| cross(a, b, p).unsigned_abs() as f64).sum();
    total / len / pts.len() as f64
}

fn to_point(p: (usize, usize)) -> Point {
    Point::new(p.0 as f64, p.1 as f64)
}

pub fn extract_stroke_from_region(img: &RasterImage, geo: &RegionGeometry) -> Result<Stroke> {
    if geo.interior_pixels.is_empty() || geo.border_pixels.is_empty() {
        return Err(Error::EmptyRegion(geo.region_id));
    }
    let border = &geo.border_pixels;
    let (i, j) = farthest_pair(border);
    let (a, b) = (border[i], border[j]);
    let max_width = (img.width as f64).hypot(img.height as f64) / 4.0;
    let width = mean_line_distance(border, a, b).max(MIN_WIDTH).min(max_width.max(MIN_WIDTH));

    let mut sum = [0.0; 3];
    for &(x, y) in &geo.interior_pixels {
        let c = img.rgb(x, y);
        for k in 0..3 {
            sum[k] += c[k];
        }
    }
    let inv = 1.0 / geo.interior_pixels.len() as f64;
    let (p1, p3) = (to_point(a), to_point(b));
    Ok(Stroke {
        points: [p1, (p1 + p3) * 0.5, p3],
        color: Rgba::new(sum[0] * inv, sum[1] * inv, sum[2] * inv, 1.0),
        width,
    })
}

/// One stroke per region, in region id order, on the image's canvas.
pub fn extract_stroke_set(img: &RasterImage, lm: &LabelMap) -> Result<StrokeSet> {
    if img.width != lm.width || img.height != lm.height {
        return Err(Error::dims(
            format!("{}x{}", lm.width, lm.height),
            img.shape_string(),
        ));
    }
    let geos = region_geometries(lm)?;
    let strokes = geos
        .par_iter()
        .map(|g| extract_stroke_from_region(img, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(StrokeSet::with_strokes(img.width, img.height, strokes))
}
