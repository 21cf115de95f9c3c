use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use brushwork::extract::extract_stroke_set;
use brushwork::io::{export_json, export_svg, import_json, import_svg, load_png, save_label_png, save_png};
use brushwork::losses::mse_loss;
use brushwork::optim::{imitation_fit_with, synthesize_with, RunReport, TraceEntry};
use brushwork::raster::render_image;
use brushwork::superpixel::{slic_segment, DEFAULT_COMPACTNESS, DEFAULT_ITERS};
use brushwork::{OptimConfig, OtCost, RasterImage, SinkhornConfig, StrokeSet};

/// Extract painterly strokes from a reference image and rearrange them
/// into new stylized SVGs.
#[derive(Parser)]
#[command(name = "brushwork", version)]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a style image into superpixels and vectorize one stroke per region.
    Extract(ExtractArgs),
    /// Refine extracted strokes so their rendering matches the style image.
    Reconstruct(ReconstructArgs),
    /// Rearrange style strokes toward a content image.
    Synthesize(SynthesizeArgs),
    /// Rasterize an SVG produced by this tool.
    Render(RenderArgs),
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    style: PathBuf,
    /// Requested number of strokes (superpixels).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    strokes: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the superpixel label map as a PNG.
    #[arg(long)]
    debug_labels: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_COMPACTNESS)]
    compactness: f64,
    #[arg(long, default_value_t = DEFAULT_ITERS)]
    slic_iters: usize,
}

#[derive(Args)]
struct AdamArgs {
    #[arg(long, default_value_t = 1.0)]
    lr_points: f64,
    #[arg(long, default_value_t = 0.1)]
    lr_width: f64,
    #[arg(long, default_value_t = 0.05)]
    lr_color: f64,
    /// Edge softness of the rasterizer in pixels.
    #[arg(long, default_value_t = 1.0)]
    softness: f64,
}

impl AdamArgs {
    fn config(&self, steps: usize) -> OptimConfig {
        OptimConfig {
            lr_points: self.lr_points,
            lr_width: self.lr_width,
            lr_color: self.lr_color,
            steps,
            softness: self.softness,
            ..OptimConfig::default()
        }
    }
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    style: PathBuf,
    #[arg(long)]
    strokes_in: PathBuf,
    #[arg(long, default_value_t = 250)]
    iters: usize,
    #[arg(long)]
    out: PathBuf,
    /// Write the rendered reconstruction.
    #[arg(long)]
    render: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    adam: AdamArgs,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CostArg {
    Euclidean,
    Sqeuclidean,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long)]
    strokes_in: PathBuf,
    /// Rendering of the refined style strokes; anchors the OT term.
    #[arg(long)]
    style_render: PathBuf,
    /// Image the L2 term pulls toward.
    #[arg(long)]
    content: PathBuf,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda_ot: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_l2: f64,
    #[arg(long, default_value_t = 64)]
    ot_grid: usize,
    #[arg(long, default_value_t = 0.01)]
    ot_reg: f64,
    #[arg(long, value_enum, default_value_t = CostArg::Sqeuclidean)]
    ot_cost: CostArg,
    #[arg(long, default_value_t = 200)]
    ot_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    ot_tol: f64,
    #[arg(long)]
    out_svg: PathBuf,
    #[arg(long)]
    out_png: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    adam: AdamArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    svg: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    softness: f64,
}

fn progress(e: &TraceEntry) {
    eprintln!("step={} l2={:.8} ot={:.8}", e.step, e.l2, e.ot);
}

fn write_report(report: &RunReport, path: &Option<PathBuf>) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, report.to_json()?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let img = load_png(&a.style)?;
    let k = usize::try_from(a.strokes)?;
    let labels = slic_segment(&img, k, a.compactness, a.slic_iters)?;
    if let Some(p) = &a.debug_labels {
        save_label_png(&labels, p)?;
    }
    let strokes = extract_stroke_set(&img, &labels)?;
    export_json(&strokes, &a.out)?;
    eprintln!("strokes={}", strokes.len());
    Ok(())
}

fn reconstruct(a: ReconstructArgs) -> Result<()> {
    let style = load_png(&a.style)?;
    let init = import_json(&a.strokes_in)?;
    let cfg = a.adam.config(a.iters);
    let report = imitation_fit_with(&init, &style, &cfg, &mut progress)?;
    let initial = mse_loss(&render_image(&init, cfg.softness)?, &style)?.0;
    eprintln!("initial_mse={initial:.8} final_mse={:.8}", report.final_loss.l2);
    export_json(&report.final_strokes, &a.out)?;
    if let Some(p) = &a.render {
        save_png(&render_image(&report.final_strokes, cfg.softness)?, p)?;
    }
    write_report(&report, &a.report)
}

fn synthesize(a: SynthesizeArgs) -> Result<()> {
    let strokes: StrokeSet = import_json(&a.strokes_in)?;
    let style_render: RasterImage = load_png(&a.style_render)?;
    let content = load_png(&a.content)?;
    let cfg = a.adam.config(a.steps);
    let ot = SinkhornConfig {
        grid_size: a.ot_grid,
        reg: a.ot_reg,
        max_iters: a.ot_iters,
        marginal_tol: a.ot_tol,
        cost: match a.ot_cost {
            CostArg::Euclidean => OtCost::Euclidean,
            CostArg::Sqeuclidean => OtCost::SqEuclidean,
        },
    };
    let report = synthesize_with(
        &strokes,
        &style_render,
        &content,
        &cfg,
        &ot,
        a.lambda_ot,
        a.lambda_l2,
        &mut progress,
    )?;
    export_svg(&report.final_strokes, &a.out_svg)?;
    if let Some(p) = &a.out_png {
        save_png(&render_image(&report.final_strokes, cfg.softness)?, p)?;
    }
    write_report(&report, &a.report)
}

fn render(a: RenderArgs) -> Result<()> {
    let strokes = import_svg(&a.svg)?;
    save_png(&render_image(&strokes, a.softness)?, &a.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Extract(a) => extract(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Synthesize(a) => synthesize(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let unsupported = e
                .downcast_ref::<brushwork::Error>()
                .is_some_and(brushwork::Error::is_unsupported_format);
            ExitCode::from(if unsupported { 2 } else { 1 })
        }
    }
}
