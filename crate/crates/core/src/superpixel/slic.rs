use super::connectivity::enforce_connectivity;
use super::lab::rgb_to_lab;
use super::LabelMap;
use crate::error::{Error, Result};
use crate::model::RasterImage;

pub const DEFAULT_COMPACTNESS: f64 = 10.0;
pub const DEFAULT_ITERS: usize = 10;

#[derive(Clone, Copy, Debug)]
struct Center {
    lab: [f64; 3],
    x: f64,
    y: f64,
}

/// Seed grid `nx × ny` with `nx·ny` as close to `k` as possible and cells
/// as square as possible, preferring more columns on ties.
fn seed_grid(k: usize, w: usize, h: usize) -> (usize, usize) {
    let ideal = (k as f64 * w as f64 / h as f64).sqrt();
    let lo = ((ideal * 0.75).floor() as usize).max(1);
    let hi = ((ideal * 1.34).ceil() as usize).max(lo).min(w.max(1));
    let mut best = (usize::MAX, f64::INFINITY, 1, 1);
    for nx in (lo.min(w)..=hi).rev() {
        let ny = ((k as f64 / nx as f64).round() as usize).clamp(1, h);
        let miss = (nx * ny).abs_diff(k);
        let aspect = ((w as f64 / nx as f64) / (h as f64 / ny as f64)).ln().abs();
        if miss < best.0 || (miss == best.0 && aspect < best.1) {
            best = (miss, aspect, nx, ny);
        }
    }
    (best.2, best.3)
}

fn lab_at(lab: &RasterImage, x: usize, y: usize) -> [f64; 3] {
    let i = (y * lab.width + x) * 3;
    [lab.data[i], lab.data[i + 1], lab.data[i + 2]]
}

fn sq_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn gradient(lab: &RasterImage, x: usize, y: usize) -> f64 {
    let (w, h) = (lab.width, lab.height);
    let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
    let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
    sq_dist(lab_at(lab, xr, y), lab_at(lab, xl, y)) + sq_dist(lab_at(lab, x, yd), lab_at(lab, x, yu))
}

/// SLIC superpixels: localized k-means over `(L, a, b, x, y)` with distance
/// `sqrt(d_lab² + (m/S)² d_xy²)`, `S = sqrt(pixels / k)`, followed by
/// [`enforce_connectivity`]. Gray images are treated as RGB.
pub fn slic_segment(img: &RasterImage, k: usize, compactness: f64, iters: usize) -> Result<LabelMap> {
    let (w, h) = (img.width, img.height);
    let n = w * h;
    if n == 0 {
        return Err(Error::EmptyImage);
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k must be in [1, {n}], got {k}")));
    }
    if iters == 0 {
        return Err(Error::InvalidArgument("iters must be >= 1".into()));
    }
    if !(compactness.is_finite() && compactness > 0.0) {
        return Err(Error::InvalidArgument(format!("compactness must be > 0, got {compactness}")));
    }
    if img.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("image"));
    }
    let lab = rgb_to_lab(&img.to_rgb())?;

    let (nx, ny) = seed_grid(k, w, h);
    let (cell_w, cell_h) = (w as f64 / nx as f64, h as f64 / ny as f64);
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cx = (((i as f64 + 0.5) * cell_w) as usize).min(w - 1);
            let cy = (((j as f64 + 0.5) * cell_h) as usize).min(h - 1);
            let mut best = (gradient(&lab, cx, cy), cx, cy);
            for y in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                for x in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                    let g = gradient(&lab, x, y);
                    if g < best.0 {
                        best = (g, x, y);
                    }
                }
            }
            centers.push(Center {
                lab: lab_at(&lab, best.1, best.2),
                x: best.1 as f64,
                y: best.2 as f64,
            });
        }
    }

    let s = (n as f64 / k as f64).sqrt();
    let spatial = (compactness / s).powi(2);
    let radius = s.max(cell_w).max(cell_h).ceil() as i64;
    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![f64::INFINITY; n];

    for _ in 0..iters {
        labels.fill(usize::MAX);
        dist.fill(f64::INFINITY);
        for (c, center) in centers.iter().enumerate() {
            let (cx, cy) = (center.x.round() as i64, center.y.round() as i64);
            let x0 = (cx - radius).max(0) as usize;
            let x1 = ((cx + radius).min(w as i64 - 1)).max(-1);
            let y0 = (cy - radius).max(0) as usize;
            let y1 = ((cy + radius).min(h as i64 - 1)).max(-1);
            if x1 < 0 || y1 < 0 {
                continue;
            }
            for y in y0..=y1 as usize {
                for x in x0..=x1 as usize {
                    let i = y * w + x;
                    let d = sq_dist(lab_at(&lab, x, y), center.lab)
                        + spatial * ((x as f64 - center.x).powi(2) + (y as f64 - center.y).powi(2));
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = c;
                    }
                }
            }
        }
        // pixels outside every window go to the nearest center
        for i in 0..n {
            if labels[i] != usize::MAX {
                continue;
            }
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let px = lab_at(&lab, i % w, i / w);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(px, center.lab) + spatial * ((x - center.x).powi(2) + (y - center.y).powi(2));
                if d < dist[i] {
                    dist[i] = d;
                    labels[i] = c;
                }
            }
        }

        let mut sums = vec![[0.0f64; 6]; centers.len()];
        for (i, &l) in labels.iter().enumerate() {
            let px = lab_at(&lab, i % w, i / w);
            let acc = &mut sums[l];
            acc[0] += px[0];
            acc[1] += px[1];
            acc[2] += px[2];
            acc[3] += (i % w) as f64;
            acc[4] += (i / w) as f64;
            acc[5] += 1.0;
        }
        for (center, acc) in centers.iter_mut().zip(&sums) {
            if acc[5] > 0.0 {
                let inv = 1.0 / acc[5];
                *center = Center {
                    lab: [acc[0] * inv, acc[1] * inv, acc[2] * inv],
                    x: acc[3] * inv,
                    y: acc[4] * inv,
                };
            }
        }
    }

    Ok(enforce_connectivity(&LabelMap {
        width: w,
        height: h,
        labels,
        region_count: centers.len(),
    }))
}
