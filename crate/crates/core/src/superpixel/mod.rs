//! SLIC superpixels: the regions each extracted stroke comes from.

mod connectivity;
mod lab;
mod slic;

pub use connectivity::enforce_connectivity;
pub use lab::{rgb_to_lab, srgb_to_lab};
pub use slic::{slic_segment, DEFAULT_COMPACTNESS, DEFAULT_ITERS};

/// Region id per pixel, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<usize>,
    pub region_count: usize,
}

impl LabelMap {
    pub fn label(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    /// Pixel count per region.
    pub fn areas(&self) -> Vec<usize> {
        let mut a = vec![0; self.region_count];
        for &l in &self.labels {
            a[l] += 1;
        }
        a
    }

    /// Checks label range, density and that every region is 4-connected.
    pub fn is_valid(&self) -> bool {
        if self.labels.len() != self.width * self.height
            || self.labels.iter().any(|&l| l >= self.region_count)
        {
            return false;
        }
        if self.areas().contains(&0) {
            return false;
        }
        let (_, components) = connectivity::components(self);
        components == self.region_count
    }
}
