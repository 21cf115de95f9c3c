//! Turning an image into a probability histogram over a coarse grid.
//!
//! Dark paint carries the mass: luminance is inverted, box-averaged onto a
//! `side × side` grid, floored at [`MASS_FLOOR`] and normalized.

use crate::model::RasterImage;

pub const MASS_FLOOR: f64 = 1e-8;

/// Rec. 709 luma weights.
pub const LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Area-weighted box resampling from an image onto the transport grid.
#[derive(Clone, Debug)]
pub(crate) struct GridMap {
    pub width: usize,
    pub height: usize,
    pub side: usize,
    /// Per pixel column, the grid columns it overlaps and the overlap length.
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
    inv_cell_area: f64,
}

fn overlaps(pixels: usize, side: usize) -> Vec<Vec<(usize, f64)>> {
    let cell = pixels as f64 / side as f64;
    (0..pixels)
        .map(|p| {
            let (lo, hi) = (p as f64, p as f64 + 1.0);
            let first = ((lo / cell).floor() as usize).min(side - 1);
            let mut out = Vec::new();
            for c in first..side {
                let (clo, chi) = (c as f64 * cell, (c + 1) as f64 * cell);
                if clo >= hi {
                    break;
                }
                let len = hi.min(chi) - lo.max(clo);
                if len > 0.0 {
                    out.push((c, len));
                }
            }
            out
        })
        .collect()
}

impl GridMap {
    pub fn new(width: usize, height: usize, side: usize) -> Self {
        Self {
            width,
            height,
            side,
            cols: overlaps(width, side),
            rows: overlaps(height, side),
            inv_cell_area: (side * side) as f64 / (width * height) as f64,
        }
    }

    /// Mean inverted luminance per grid cell.
    pub fn cell_means(&self, img: &RasterImage) -> Vec<f64> {
        let mut cells = vec![0.0; self.side * self.side];
        for y in 0..self.height {
            for x in 0..self.width {
                let v = 1.0 - luminance(img, x, y);
                for &(cy, wy) in &self.rows[y] {
                    for &(cx, wx) in &self.cols[x] {
                        cells[cy * self.side + cx] += v * wx * wy;
                    }
                }
            }
        }
        for c in cells.iter_mut() {
            *c *= self.inv_cell_area;
        }
        cells
    }

    /// Pulls a gradient on cell means back to the pixels of an image with
    /// `channels` channels.
    pub fn backward(&self, d_cells: &[f64], channels: usize) -> RasterImage {
        let mut out = RasterImage::filled(self.width, self.height, channels, 0.0);
        for y in 0..self.height {
            for x in 0..self.width {
                let mut d = 0.0;
                for &(cy, wy) in &self.rows[y] {
                    for &(cx, wx) in &self.cols[x] {
                        d += d_cells[cy * self.side + cx] * wx * wy;
                    }
                }
                // d(1 - Y)/d channel = -weight
                let d = -d * self.inv_cell_area;
                let i = (y * self.width + x) * channels;
                if channels == 1 {
                    out.data[i] = d;
                } else {
                    for (o, l) in out.data[i..i + 3].iter_mut().zip(LUMA) {
                        *o = d * l;
                    }
                }
            }
        }
        out
    }
}

fn luminance(img: &RasterImage, x: usize, y: usize) -> f64 {
    let i = (y * img.width + x) * img.channels;
    if img.channels == 1 {
        img.data[i]
    } else {
        LUMA[0] * img.data[i] + LUMA[1] * img.data[i + 1] + LUMA[2] * img.data[i + 2]
    }
}

/// Histogram plus what its backward pass needs.
#[derive(Clone, Debug)]
pub(crate) struct Histogram {
    pub p: Vec<f64>,
    pub floored: Vec<bool>,
    pub total: f64,
}

impl Histogram {
    pub fn from_cells(cells: &[f64]) -> Self {
        let floored: Vec<bool> = cells.iter().map(|&c| c < MASS_FLOOR).collect();
        let mass: Vec<f64> = cells.iter().map(|&c| c.max(MASS_FLOOR)).collect();
        let total: f64 = mass.iter().sum();
        Self {
            p: mass.iter().map(|m| m / total).collect(),
            floored,
            total,
        }
    }

    /// Gradient with respect to the cell means given one with respect to `p`.
    pub fn backward(&self, d_p: &[f64]) -> Vec<f64> {
        let mean: f64 = d_p.iter().zip(&self.p).map(|(d, p)| d * p).sum();
        d_p.iter()
            .zip(&self.floored)
            .map(|(d, &fl)| if fl { 0.0 } else { (d - mean) / self.total })
            .collect()
    }
}

/// Inverted-luminance histogram of `img` on a `grid_size × grid_size` grid,
/// row-major, summing to one with every entry positive.
pub fn image_to_distribution(img: &RasterImage, grid_size: usize) -> Vec<f64> {
    let map = GridMap::new(img.width, img.height, grid_size);
    Histogram::from_cells(&map.cell_means(img)).p
}
