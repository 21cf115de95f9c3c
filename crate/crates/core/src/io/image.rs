use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::model::RasterImage;
use crate::superpixel::LabelMap;

/// Decodes an 8-bit PNG into an RGB image with values `byte / 255`.
/// Gray and palette images are expanded; alpha is composited over white.
pub fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder.read_info()?;
    let depth = reader.info().bit_depth;
    if depth == BitDepth::Sixteen {
        return Err(Error::UnsupportedImage("16-bit PNG".into()));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::UnsupportedImage("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf)?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let (color, out_depth) = reader.output_color_type();
    if out_depth != BitDepth::Eight {
        return Err(Error::UnsupportedImage(format!("{out_depth:?} output depth")));
    }
    let stride = frame.line_size;
    let channels = color.samples();
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        let row = &buf[y * stride..y * stride + w * channels];
        for px in row.chunks_exact(channels) {
            let (rgb, alpha) = match color {
                ColorType::Grayscale => ([px[0]; 3], 255),
                ColorType::GrayscaleAlpha => ([px[0]; 3], px[1]),
                ColorType::Rgb => ([px[0], px[1], px[2]], 255),
                ColorType::Rgba => ([px[0], px[1], px[2]], px[3]),
                ColorType::Indexed => return Err(Error::UnsupportedImage("unexpanded palette".into())),
            };
            let a = alpha as f64 / 255.0;
            for c in rgb {
                data.push(c as f64 / 255.0 * a + (1.0 - a));
            }
        }
    }
    RasterImage::from_data(w, h, 3, data)
}

pub fn load_png(path: impl AsRef<Path>) -> Result<RasterImage> {
    decode_png(&read_file(path.as_ref())?)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Encodes a gray or RGB image as an 8-bit PNG, rounding half up.
pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>> {
    let color = match img.channels {
        1 => ColorType::Grayscale,
        3 => ColorType::Rgb,
        c => return Err(Error::InvalidArgument(format!("cannot encode {c}-channel image"))),
    };
    let bytes: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
    write_png(img.width, img.height, color, None, &bytes)
}

fn write_png(w: usize, h: usize, color: ColorType, palette: Option<Vec<u8>>, data: &[u8]) -> Result<Vec<u8>> {
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, w as u32, h as u32);
        encoder.set_color(color);
        encoder.set_depth(BitDepth::Eight);
        if let Some(p) = palette {
            encoder.set_palette(p);
        }
        let mut writer = encoder.write_header()?;
        writer.write_image_data(data)?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn save_png(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_png(img)?)
}

/// Distinct, deterministic color for a region id.
fn label_color(label: usize) -> [u8; 3] {
    let hue = (label as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let (s, v) = (0.65, if label.is_multiple_of(2) { 0.95 } else { 0.75 });
    let sector = hue.floor() as usize % 6;
    let f = hue.fract();
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    let rgb = match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    };
    rgb.map(quantize)
}

/// Writes a label map with one color per region: indexed when it has at
/// most 256 regions, RGB otherwise.
pub fn save_label_png(lm: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let bytes = if lm.region_count <= 256 {
        let palette = (0..lm.region_count).flat_map(label_color).collect();
        let data: Vec<u8> = lm.labels.iter().map(|&l| l as u8).collect();
        write_png(lm.width, lm.height, ColorType::Indexed, Some(palette), &data)?
    } else {
        let data: Vec<u8> = lm.labels.iter().flat_map(|&l| label_color(l)).collect();
        write_png(lm.width, lm.height, ColorType::Rgb, None, &data)?
    };
    write_file(path.as_ref(), &bytes)
}
