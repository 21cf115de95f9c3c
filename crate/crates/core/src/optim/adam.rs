use crate::error::{Error, Result};
use crate::model::{clamp_params, flatten_params, unflatten_params, OptimConfig, Params, StrokeSet};
use crate::raster::ParamGradients;

/// First and second moments per parameter group, aligned with
/// [`flatten_params`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub step: u64,
}

impl AdamState {
    pub fn new(strokes: usize) -> Self {
        Self {
            m: Params::zeros(strokes),
            v: Params::zeros(strokes),
            step: 0,
        }
    }
}

fn update_group(theta: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64], lr: f64, cfg: &OptimConfig, t: i32) {
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for i in 0..theta.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}

/// One bias-corrected Adam update with per-group learning rates, followed
/// by [`clamp_params`].
pub fn adam_step(
    state: &AdamState,
    grads: &ParamGradients,
    cfg: &OptimConfig,
    s: &StrokeSet,
) -> Result<(StrokeSet, AdamState)> {
    let n = s.len();
    let aligned = |p: &Params| p.points.len() == n * 6 && p.widths.len() == n && p.colors.len() == n * 4;
    if !aligned(grads) || !aligned(&state.m) || !aligned(&state.v) {
        return Err(Error::dims(
            format!("{n} strokes"),
            format!(
                "gradients for {}, moments for {}",
                grads.widths.len(),
                state.m.widths.len()
            ),
        ));
    }
    for (name, g) in [
        ("point gradient", &grads.points),
        ("width gradient", &grads.widths),
        ("color gradient", &grads.colors),
    ] {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(name));
        }
    }
    let mut theta = flatten_params(s);
    let mut next = state.clone();
    next.step += 1;
    let t = next.step.min(i32::MAX as u64) as i32;
    update_group(&mut theta.points, &mut next.m.points, &mut next.v.points, &grads.points, cfg.lr_points, cfg, t);
    update_group(&mut theta.widths, &mut next.m.widths, &mut next.v.widths, &grads.widths, cfg.lr_width, cfg, t);
    update_group(&mut theta.colors, &mut next.m.colors, &mut next.v.colors, &grads.colors, cfg.lr_color, cfg, t);
    let updated = unflatten_params(&theta, s.canvas_width, s.canvas_height)?;
    Ok((clamp_params(&updated)?, next))
}
