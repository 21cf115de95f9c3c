use crate::error::{Error, Result};
use crate::model::RasterImage;

/// Mean squared error over every pixel and channel, and its gradient
/// `2 (x - target) / N` with respect to `x`.
pub fn mse_loss(x: &RasterImage, target: &RasterImage) -> Result<(f64, RasterImage)> {
    if !x.same_shape(target) {
        return Err(Error::dims(target.shape_string(), x.shape_string()));
    }
    let n = x.data.len();
    if n == 0 {
        return Err(Error::EmptyImage);
    }
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let grad = x
        .data
        .iter()
        .zip(&target.data)
        .map(|(a, b)| {
            let d = a - b;
            loss += d * d;
            2.0 * d * inv_n
        })
        .collect();
    Ok((
        loss * inv_n,
        RasterImage {
            width: x.width,
            height: x.height,
            channels: x.channels,
            data: grad,
        },
    ))
}
