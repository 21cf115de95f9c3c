//! Optimal-transport style loss between a render and a reference.
//!
//! Both images become inverted-luminance histograms on a square grid. The
//! loss is the transport cost `<D, P>` of the entropic plan. Its gradient
//! with respect to the render's histogram is obtained by differentiating
//! through the converged Sinkhorn fixed point: with `a = P 1`, `b = Pᵀ 1`,
//! `r = (D ∘ P) 1`, `c = (D ∘ P)ᵀ 1`, solve
//!
//! ```text
//! [diag(a)  P      ] [u]   [r]
//! [Pᵀ       diag(b)] [v] = [c]
//! ```
//!
//! and `∂<D, P>/∂p = u` up to an additive constant, which the histogram
//! normalization removes. The system is positive semi-definite with the
//! single null direction `(1, -1)`; pinning `v_last = 0` makes it definite
//! and conjugate gradients solves it.

use super::distribution::{GridMap, Histogram};
use super::kernel::{CostMatrix, Gibbs, Weight};
use super::mse::mse_loss;
use super::sinkhorn::{solve, TransportPlan};
use crate::error::{Error, Result};
use crate::model::{RasterImage, SinkhornConfig};

const CG_TOL: f64 = 1e-10;
const CG_MAX_ITERS: usize = 2000;

/// Result of one OT loss evaluation.
#[derive(Clone, Debug)]
pub struct OtEvaluation {
    pub loss: f64,
    /// `∂loss/∂image`, same shape as the evaluated image.
    pub grad: RasterImage,
    pub sinkhorn_iterations: usize,
    pub marginal_violation: f64,
    pub cg_iterations: usize,
}

/// OT loss against a fixed reference, reusing the kernel and warm-starting
/// both Sinkhorn and the adjoint solve across calls.
pub struct OtLoss {
    map: GridMap,
    gibbs: Gibbs,
    q: Vec<f64>,
    reg: f64,
    max_iters: usize,
    tol: f64,
    warm_g: Option<Vec<f64>>,
    warm_adjoint: Option<Vec<f64>>,
}

impl OtLoss {
    pub fn new(reference: &RasterImage, cfg: &SinkhornConfig) -> Result<Self> {
        cfg.validate()?;
        if reference.pixel_count() == 0 {
            return Err(Error::EmptyImage);
        }
        if reference.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("reference"));
        }
        let map = GridMap::new(reference.width, reference.height, cfg.grid_size);
        let q = Histogram::from_cells(&map.cell_means(reference)).p;
        let gibbs = Gibbs::new(&CostMatrix::grid(cfg.grid_size, cfg.cost), cfg.reg);
        Ok(Self {
            map,
            gibbs,
            q,
            reg: cfg.reg,
            max_iters: cfg.max_iters,
            tol: cfg.marginal_tol,
            warm_g: None,
            warm_adjoint: None,
        })
    }

    /// Forgets the warm-start state.
    pub fn reset(&mut self) {
        self.warm_g = None;
        self.warm_adjoint = None;
    }

    pub fn evaluate(&mut self, x: &RasterImage) -> Result<OtEvaluation> {
        if x.width != self.map.width || x.height != self.map.height {
            return Err(Error::dims(
                format!("{}x{}", self.map.width, self.map.height),
                x.shape_string(),
            ));
        }
        if x.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("image"));
        }
        let hist = Histogram::from_cells(&self.map.cell_means(x));
        let plan = solve(
            &self.gibbs,
            self.reg,
            &hist.p,
            &self.q,
            self.max_iters,
            self.tol,
            self.warm_g.as_deref(),
        );
        let (u, cg_iterations, adjoint) = sensitivity(&self.gibbs, self.reg, &plan, self.warm_adjoint.as_deref());
        let d_cells = hist.backward(&u);
        let grad = self.map.backward(&d_cells, x.channels);
        self.warm_g = Some(plan.g.clone());
        self.warm_adjoint = Some(adjoint);
        Ok(OtEvaluation {
            loss: plan.plan_cost,
            grad,
            sinkhorn_iterations: plan.iterations,
            marginal_violation: plan.marginal_violation,
            cg_iterations,
        })
    }
}

/// Solves the adjoint system above. Returns `u`, the CG iteration count and
/// the full `[u; v]` for warm starting.
fn sensitivity(gibbs: &Gibbs, reg: f64, plan: &TransportPlan, warm: Option<&[f64]>) -> (Vec<f64>, usize, Vec<f64>) {
    let n = gibbs.len();
    let alpha: Vec<f64> = plan.f.iter().map(|v| v / reg).collect();
    let beta: Vec<f64> = plan.g.iter().map(|v| v / reg).collect();
    let plan_op = gibbs.plan_operator(&alpha, &beta);
    let ones = vec![1.0; n];
    let rows = plan_op.apply(&ones);
    let cols = plan_op.apply_t(&ones);
    let mut b = gibbs.weighted_apply(&alpha, &beta, None, Weight::CostKernel);
    b.extend(gibbs.weighted_apply(&beta, &alpha, None, Weight::CostKernel));
    b[2 * n - 1] = 0.0;

    let apply = |z: &[f64]| -> Vec<f64> {
        let (x, y) = z.split_at(n);
        let mut out = plan_op.apply(y);
        out.extend(plan_op.apply_t(x));
        for i in 0..n {
            out[i] += rows[i] * x[i];
            out[n + i] += cols[i] * y[i];
        }
        out[2 * n - 1] = 0.0;
        out
    };
    let diag: Vec<f64> = rows
        .iter()
        .chain(&cols)
        .map(|&d| if d > 0.0 { d } else { 1.0 })
        .collect();

    let mut z = match warm {
        Some(w) if w.len() == 2 * n && w.iter().all(|v| v.is_finite()) => w.to_vec(),
        _ => vec![0.0; 2 * n],
    };
    z[2 * n - 1] = 0.0;
    let az = apply(&z);
    let mut r: Vec<f64> = b.iter().zip(&az).map(|(b, a)| b - a).collect();
    r[2 * n - 1] = 0.0;
    let b_norm = norm(&b).max(f64::MIN_POSITIVE);
    let mut s: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut d = s.clone();
    let mut rs = dot(&r, &s);
    let mut iterations = 0;
    while norm(&r) > CG_TOL * b_norm && iterations < CG_MAX_ITERS {
        let ad = apply(&d);
        let dad = dot(&d, &ad);
        if dad <= 0.0 {
            break;
        }
        let step = rs / dad;
        for i in 0..2 * n {
            z[i] += step * d[i];
            r[i] -= step * ad[i];
        }
        for i in 0..2 * n {
            s[i] = r[i] / diag[i];
        }
        let rs_next = dot(&r, &s);
        let beta_cg = rs_next / rs;
        rs = rs_next;
        for i in 0..2 * n {
            d[i] = s[i] + beta_cg * d[i];
        }
        iterations += 1;
    }
    (z[..n].to_vec(), iterations, z)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Transport cost between the histograms of `x` and `reference`, and its
/// gradient with respect to `x`.
pub fn ot_loss(x: &RasterImage, reference: &RasterImage, cfg: &SinkhornConfig) -> Result<(f64, RasterImage)> {
    if x.width != reference.width || x.height != reference.height {
        return Err(Error::dims(reference.shape_string(), x.shape_string()));
    }
    let e = OtLoss::new(reference, cfg)?.evaluate(x)?;
    Ok((e.loss, e.grad))
}

/// Weighted sum of the L2 content term and the OT style term.
#[derive(Clone, Debug)]
pub struct StyleLoss {
    pub total: f64,
    pub l2: f64,
    pub ot: f64,
    pub grad: RasterImage,
}

/// `λ_l2 · mse(x, content) + λ_ot · ot(x, style)` using a prepared OT term.
pub fn style_preserving_loss_with(
    x: &RasterImage,
    content: &RasterImage,
    ot: &mut OtLoss,
    lambda_l2: f64,
    lambda_ot: f64,
) -> Result<StyleLoss> {
    for (name, v) in [("lambda_l2", lambda_l2), ("lambda_ot", lambda_ot)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    let (l2, g2) = mse_loss(x, content)?;
    let e = ot.evaluate(x)?;
    let grad = RasterImage {
        data: g2
            .data
            .iter()
            .zip(&e.grad.data)
            .map(|(a, b)| lambda_l2 * a + lambda_ot * b)
            .collect(),
        ..g2
    };
    Ok(StyleLoss {
        total: lambda_l2 * l2 + lambda_ot * e.loss,
        l2,
        ot: e.loss,
        grad,
    })
}

/// One-shot form of [`style_preserving_loss_with`].
pub fn style_preserving_loss(
    x: &RasterImage,
    content: &RasterImage,
    style: &RasterImage,
    lambda_l2: f64,
    lambda_ot: f64,
    cfg: &SinkhornConfig,
) -> Result<StyleLoss> {
    if x.width != style.width || x.height != style.height {
        return Err(Error::dims(x.shape_string(), style.shape_string()));
    }
    let mut ot = OtLoss::new(style, cfg)?;
    style_preserving_loss_with(x, content, &mut ot, lambda_l2, lambda_ot)
}
