//! Log-domain Sinkhorn iterations for entropic optimal transport.
//!
//! Potentials `f, g` parameterize the plan
//! `P = diag(e^{f/reg}) K diag(e^{g/reg})`, `K = e^{-D/reg}`. Each half step
//! maximizes the dual objective
//!
//! ```text
//! F(f, g) = <f, p> + <g, q> - reg Σ_ij P_ij + reg
//! ```
//!
//! over one potential exactly, so `F` never decreases. After a `g` update the
//! columns of `P` match `q` exactly and `F = <f, p> + <g, q>`.

use super::kernel::{CostMatrix, Gibbs, Weight};
use crate::error::{Error, Result};
use crate::model::SinkhornConfig;

const MASS_TOL: f64 = 1e-9;

/// Two histograms on a common support and the cost between support points.
#[derive(Clone, Debug)]
pub struct TransportProblem {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub cost: CostMatrix,
    pub reg: f64,
}

impl TransportProblem {
    pub fn new(p: Vec<f64>, q: Vec<f64>, cost: CostMatrix, reg: f64) -> Result<Self> {
        let n = cost.len();
        if p.len() != n || q.len() != n {
            return Err(Error::dims(n, format!("p: {}, q: {}", p.len(), q.len())));
        }
        if !(reg.is_finite() && reg > 0.0) {
            return Err(Error::InvalidArgument(format!("reg must be > 0, got {reg}")));
        }
        for (name, h) in [("p", &p), ("q", &q)] {
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput(name));
            }
            if h.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidArgument(format!("{name} has negative mass")));
            }
            let total: f64 = h.iter().sum();
            if (total - 1.0).abs() > MASS_TOL {
                return Err(Error::InvalidArgument(format!("{name} sums to {total}, not 1")));
            }
        }
        Ok(Self { p, q, cost, reg })
    }
}

#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// `<D, P>`.
    pub plan_cost: f64,
    /// `‖P 1 - p‖₁` (columns are exact).
    pub marginal_violation: f64,
    pub iterations: usize,
    /// Dual objective after every full iteration.
    pub dual_trace: Vec<f64>,
}

impl TransportPlan {
    /// Materializes `P` row-major. Meant for small problems.
    pub fn dense_plan(&self, tp: &TransportProblem) -> Vec<f64> {
        let n = tp.cost.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let e = (self.f[i] + self.g[j] - tp.cost.entry(i, j)) / tp.reg;
                out[i * n + j] = if e.is_nan() { 0.0 } else { e.exp() };
            }
        }
        out
    }
}

/// Solves `tp` from cold potentials.
pub fn sinkhorn(tp: &TransportProblem, cfg: &SinkhornConfig) -> Result<TransportPlan> {
    if cfg.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
    }
    let gibbs = Gibbs::new(&tp.cost, tp.reg);
    Ok(solve(&gibbs, tp.reg, &tp.p, &tp.q, cfg.max_iters, cfg.marginal_tol, None))
}

pub(crate) fn solve(
    gibbs: &Gibbs,
    reg: f64,
    p: &[f64],
    q: &[f64],
    max_iters: usize,
    tol: f64,
    warm_g: Option<&[f64]>,
) -> TransportPlan {
    let n = p.len();
    let log_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let log_q: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    let inv_reg = 1.0 / reg;

    let mut g = match warm_g {
        Some(w) if w.len() == n && w.iter().all(|v| !v.is_nan()) => w.to_vec(),
        _ => vec![0.0; n],
    };
    // zero-mass entries carry -inf potentials
    for (gj, lq) in g.iter_mut().zip(&log_q) {
        if *lq == f64::NEG_INFINITY {
            *gj = f64::NEG_INFINITY;
        }
    }

    let mut scratch = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut update = |other: &[f64], log_mass: &[f64], out: &mut Vec<f64>| {
        for (hv, o) in h.iter_mut().zip(other) {
            *hv = o * inv_reg;
        }
        gibbs.log_apply(&h, &mut scratch);
        for ((o, lm), s) in out.iter_mut().zip(log_mass).zip(&scratch) {
            *o = if *lm == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                reg * (lm - s)
            };
        }
    };

    let mut f = vec![0.0; n];
    update(&g, &log_p, &mut f);
    let mut f_next = vec![0.0; n];
    let mut dual_trace = Vec::new();
    let mut violation = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=max_iters {
        update(&f, &log_q, &mut g);
        dual_trace.push(dual(&f, p) + dual(&g, q));
        update(&g, &log_p, &mut f_next);
        violation = f
            .iter()
            .zip(&f_next)
            .zip(p)
            .filter(|(_, &pi)| pi > 0.0)
            .map(|((fi, fn_), pi)| pi * (((fi - fn_) * inv_reg).exp() - 1.0).abs())
            .sum();
        iterations = it;
        if violation < tol || it == max_iters {
            break;
        }
        std::mem::swap(&mut f, &mut f_next);
    }

    let alpha: Vec<f64> = f.iter().map(|v| v * inv_reg).collect();
    let beta: Vec<f64> = g.iter().map(|v| v * inv_reg).collect();
    let plan_cost = gibbs
        .weighted_apply(&alpha, &beta, None, Weight::CostKernel)
        .iter()
        .sum::<f64>()
        .max(0.0);

    TransportPlan {
        f,
        g,
        plan_cost,
        marginal_violation: violation,
        iterations,
        dual_trace,
    }
}

fn dual(pot: &[f64], mass: &[f64]) -> f64 {
    pot.iter()
        .zip(mass)
        .filter(|(_, &m)| m > 0.0)
        .map(|(v, m)| v * m)
        .sum()
}
