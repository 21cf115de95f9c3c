use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use crate::error::{Error, Result};
use crate::losses::{mse_loss, style_preserving_loss_with, OtLoss};
use crate::model::{OptimConfig, RasterImage, SinkhornConfig, StrokeSet};
use crate::raster::{render_backward, render_image};

/// Losses of the strokes going into one optimizer step. `ot` is zero when
/// the OT term is not evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub loss: f64,
    pub l2: f64,
    pub ot: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub optim: OptimConfig,
    pub sinkhorn: Option<SinkhornConfig>,
    pub lambda_l2: f64,
    pub lambda_ot: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// One entry per executed step.
    pub trace: Vec<TraceEntry>,
    /// Losses of the final strokes.
    pub final_loss: TraceEntry,
    pub wall_time_secs: f64,
    pub config: RunConfig,
    pub final_strokes: StrokeSet,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_canvas(s: &StrokeSet, img: &RasterImage, what: &str) -> Result<()> {
    if s.canvas_width != img.width || s.canvas_height != img.height {
        return Err(Error::dims(
            format!("{what} of {}x{}", s.canvas_width, s.canvas_height),
            img.shape_string(),
        ));
    }
    if img.pixel_count() == 0 {
        return Err(Error::EmptyImage);
    }
    if img.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("image"));
    }
    Ok(())
}

/// Fits `init` to `reference` by Adam on the pixel MSE.
pub fn imitation_fit(init: &StrokeSet, reference: &RasterImage, cfg: &OptimConfig) -> Result<RunReport> {
    imitation_fit_with(init, reference, cfg, &mut |_| {})
}

/// [`imitation_fit`] calling `on_step` after every loss evaluation.
pub fn imitation_fit_with(
    init: &StrokeSet,
    reference: &RasterImage,
    cfg: &OptimConfig,
    on_step: &mut dyn FnMut(&TraceEntry),
) -> Result<RunReport> {
    cfg.validate()?;
    check_canvas(init, reference, "canvas")?;
    let target = reference.to_rgb();
    let mut objective = |s: &StrokeSet, step: usize| -> Result<(TraceEntry, RasterImage)> {
        let img = render_image(s, cfg.softness)?;
        let (l2, grad) = mse_loss(&img, &target)?;
        Ok((TraceEntry { step, loss: l2, l2, ot: 0.0 }, grad))
    };
    let run_cfg = RunConfig {
        optim: cfg.clone(),
        sinkhorn: None,
        lambda_l2: 1.0,
        lambda_ot: 0.0,
    };
    run(init, cfg, run_cfg, &mut objective, on_step)
}

/// Rearranges and recolors `style_strokes` toward `content_target` under
/// `λ_l2 · mse(render, content) + λ_ot · ot(render, ref_render)`.
/// Strokes are never added or removed.
#[allow(clippy::too_many_arguments)]
pub fn synthesize(
    style_strokes: &StrokeSet,
    ref_render: &RasterImage,
    content_target: &RasterImage,
    cfg: &OptimConfig,
    ot_cfg: &SinkhornConfig,
    lambda_ot: f64,
    lambda_l2: f64,
) -> Result<RunReport> {
    synthesize_with(style_strokes, ref_render, content_target, cfg, ot_cfg, lambda_ot, lambda_l2, &mut |_| {})
}

/// [`synthesize`] calling `on_step` after every loss evaluation.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_with(
    style_strokes: &StrokeSet,
    ref_render: &RasterImage,
    content_target: &RasterImage,
    cfg: &OptimConfig,
    ot_cfg: &SinkhornConfig,
    lambda_ot: f64,
    lambda_l2: f64,
    on_step: &mut dyn FnMut(&TraceEntry),
) -> Result<RunReport> {
    cfg.validate()?;
    ot_cfg.validate()?;
    for (name, v) in [("lambda_ot", lambda_ot), ("lambda_l2", lambda_l2)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    check_canvas(style_strokes, ref_render, "canvas")?;
    check_canvas(style_strokes, content_target, "canvas")?;
    let content = content_target.to_rgb();
    let mut ot = if lambda_ot > 0.0 {
        Some(OtLoss::new(ref_render, ot_cfg)?)
    } else {
        None
    };
    let mut objective = |s: &StrokeSet, step: usize| -> Result<(TraceEntry, RasterImage)> {
        let img = render_image(s, cfg.softness)?;
        match ot.as_mut() {
            Some(ot) => {
                let sl = style_preserving_loss_with(&img, &content, ot, lambda_l2, lambda_ot)?;
                Ok((
                    TraceEntry {
                        step,
                        loss: sl.total,
                        l2: sl.l2,
                        ot: sl.ot,
                    },
                    sl.grad,
                ))
            }
            None => {
                let (l2, mut grad) = mse_loss(&img, &content)?;
                grad.data.iter_mut().for_each(|g| *g *= lambda_l2);
                Ok((
                    TraceEntry {
                        step,
                        loss: lambda_l2 * l2,
                        l2,
                        ot: 0.0,
                    },
                    grad,
                ))
            }
        }
    };
    let run_cfg = RunConfig {
        optim: cfg.clone(),
        sinkhorn: Some(ot_cfg.clone()),
        lambda_l2,
        lambda_ot,
    };
    run(style_strokes, cfg, run_cfg, &mut objective, on_step)
}

type Objective<'a> = dyn FnMut(&StrokeSet, usize) -> Result<(TraceEntry, RasterImage)> + 'a;

fn run(
    init: &StrokeSet,
    cfg: &OptimConfig,
    run_cfg: RunConfig,
    objective: &mut Objective<'_>,
    on_step: &mut dyn FnMut(&TraceEntry),
) -> Result<RunReport> {
    let start = Instant::now();
    let mut s = init.clone();
    let mut state = AdamState::new(s.len());
    let mut trace = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let (entry, d_image) = objective(&s, step)?;
        on_step(&entry);
        trace.push(entry);
        let grads = render_backward(&s, cfg.softness, &d_image)?;
        (s, state) = adam_step(&state, &grads, cfg, &s)?;
    }
    let (final_loss, _) = objective(&s, cfg.steps)?;
    Ok(RunReport {
        trace,
        final_loss,
        wall_time_secs: start.elapsed().as_secs_f64(),
        config: run_cfg,
        final_strokes: s,
    })
}
