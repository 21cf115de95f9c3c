//! File formats: SVG for the final artwork, JSON between pipeline stages,
//! PNG for rasters.

mod image;
mod json;
mod svg;

pub use image::{decode_png, encode_png, load_png, save_label_png, save_png};
pub use json::{export_json, import_json, parse_json, to_json_string, FORMAT_VERSION};
pub use svg::{export_svg, import_svg, parse_svg, to_svg_string};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
