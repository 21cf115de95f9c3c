//! Cost matrices and the Gibbs kernel `K = exp(-D / reg)` applied in the
//! log domain.
//!
//! Squared-Euclidean cost on a regular grid factors as `Kx ⊗ Ky`, so kernel
//! products cost `O(side³)` instead of `O(side⁴)`. Whenever every kernel
//! entry is representable (`max D / reg ≤ 600`) the products use a max-shift
//! with a precomputed kernel; otherwise each entry is exponentiated exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::OtCost;

/// Largest `max D / reg` for which `exp(-D / reg)` is stored directly.
const FAST_EXPONENT: f64 = 600.0;
/// Bound on `α_i + max β` before a plan row is recomputed entry by entry.
const ROW_EXPONENT: f64 = 700.0;
/// Widest spread of a log-domain vector that a single global shift handles
/// without underflow.
const SHIFT_RANGE: f64 = 600.0;

/// Ground cost between support points.
#[derive(Clone, Debug, PartialEq)]
pub enum CostMatrix {
    /// Explicit symmetric `n × n` matrix, row-major.
    Dense { n: usize, data: Vec<f64> },
    /// Cells of a `side × side` grid (row-major) with coordinates in
    /// `[0, 1]²`; entries are computed from coordinates.
    Grid { side: usize, metric: OtCost },
}

impl CostMatrix {
    /// Validates symmetry, zero diagonal and non-negativity.
    pub fn dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::dims(n * n, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("cost matrix"));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("cost diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = data[i * n + j];
                if v < 0.0 {
                    return Err(Error::InvalidArgument(format!("negative cost at ({i}, {j})")));
                }
                if v != data[j * n + i] {
                    return Err(Error::InvalidArgument(format!("cost not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(CostMatrix::Dense { n, data })
    }

    pub fn grid(side: usize, metric: OtCost) -> Self {
        CostMatrix::Grid { side, metric }
    }

    pub fn len(&self) -> usize {
        match self {
            CostMatrix::Dense { n, .. } => *n,
            CostMatrix::Grid { side, .. } => side * side,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            CostMatrix::Dense { n, data } => data[i * n + j],
            CostMatrix::Grid { side, metric } => {
                let (xi, yi) = grid_coord(*side, i);
                let (xj, yj) = grid_coord(*side, j);
                let d2 = (xi - xj).powi(2) + (yi - yj).powi(2);
                match metric {
                    OtCost::SqEuclidean => d2,
                    OtCost::Euclidean => d2.sqrt(),
                }
            }
        }
    }

    pub fn max_entry(&self) -> f64 {
        match self {
            CostMatrix::Dense { data, .. } => data.iter().copied().fold(0.0, f64::max),
            CostMatrix::Grid { side, metric } => {
                if *side < 2 {
                    0.0
                } else {
                    match metric {
                        OtCost::SqEuclidean => 2.0,
                        OtCost::Euclidean => std::f64::consts::SQRT_2,
                    }
                }
            }
        }
    }
}

fn grid_coord(side: usize, i: usize) -> (f64, f64) {
    let scale = if side > 1 { 1.0 / (side - 1) as f64 } else { 0.0 };
    ((i % side) as f64 * scale, (i / side) as f64 * scale)
}

/// Which matrix [`Gibbs::weighted_apply`] multiplies with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Weight {
    /// `K`
    Kernel,
    /// `D ∘ K`
    CostKernel,
}

enum Fast {
    /// Full kernel.
    Dense(Vec<f64>),
    /// 1-D factors: kernel and kernel times squared axis distance.
    Separable {
        kernel: Vec<f64>,
        cost_kernel: Vec<f64>,
    },
}

pub(crate) struct Gibbs {
    cost: CostMatrix,
    reg: f64,
    fast: Option<Fast>,
}

impl Gibbs {
    pub(crate) fn new(cost: &CostMatrix, reg: f64) -> Self {
        let fast_ok = cost.max_entry() / reg <= FAST_EXPONENT;
        let separable = matches!(cost, CostMatrix::Grid { metric: OtCost::SqEuclidean, .. });
        let fast = if !fast_ok {
            None
        } else if separable {
            let CostMatrix::Grid { side, .. } = cost else { unreachable!() };
            let side = *side;
            let scale = if side > 1 { 1.0 / (side - 1) as f64 } else { 0.0 };
            let mut axis = vec![0.0; side * side];
            for a in 0..side {
                for b in 0..side {
                    axis[a * side + b] = ((a as f64 - b as f64) * scale).powi(2);
                }
            }
            let kernel: Vec<f64> = axis.iter().map(|d| (-d / reg).exp()).collect();
            let cost_kernel = axis.iter().zip(&kernel).map(|(d, k)| d * k).collect();
            Some(Fast::Separable { kernel, cost_kernel })
        } else {
            let n = cost.len();
            let mut k = vec![0.0; n * n];
            k.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = (-cost.entry(i, j) / reg).exp();
                }
            });
            Some(Fast::Dense(k))
        };
        Self {
            cost: cost.clone(),
            reg,
            fast,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.cost.len()
    }

    /// `K v` with the stored kernel, `None` without one.
    fn kernel_apply(&self, v: &[f64]) -> Option<Vec<f64>> {
        match (&self.fast, &self.cost) {
            (Some(Fast::Dense(k)), _) => {
                let n = self.len();
                let mut out = vec![0.0; n];
                out.par_iter_mut()
                    .enumerate()
                    .for_each(|(i, o)| *o = dot(&k[i * n..(i + 1) * n], v));
                Some(out)
            }
            (Some(Fast::Separable { kernel, .. }), CostMatrix::Grid { side, .. }) => {
                Some(separable_apply(*side, kernel, kernel, v))
            }
            _ => None,
        }
    }

    /// `out_i = ln Σ_j K_ij exp(h_j)`.
    pub(crate) fn log_apply(&self, h: &[f64], out: &mut [f64]) {
        let m = max_finite(h);
        if m == f64::NEG_INFINITY {
            out.fill(f64::NEG_INFINITY);
            return;
        }
        let lo = h.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
        if m - lo <= SHIFT_RANGE {
            let e: Vec<f64> = h.iter().map(|v| (v - m).exp()).collect();
            if let Some(s) = self.kernel_apply(&e) {
                for (o, s) in out.iter_mut().zip(s) {
                    *o = s.ln() + m;
                }
                return;
            }
        }
        match &self.cost {
            CostMatrix::Grid {
                side,
                metric: OtCost::SqEuclidean,
            } => {
                let side = *side;
                let scale = if side > 1 { 1.0 / (side - 1) as f64 } else { 0.0 };
                let reg = self.reg;
                let exponent = move |a: usize, b: usize| -((a as f64 - b as f64) * scale).powi(2) / reg;
                separable_log_apply(side, h, out, &exponent);
            }
            _ => {
                let reg = self.reg;
                out.par_iter_mut().enumerate().for_each(|(i, o)| {
                    let m = h
                        .iter()
                        .enumerate()
                        .map(|(j, v)| v - self.cost.entry(i, j) / reg)
                        .fold(f64::NEG_INFINITY, f64::max);
                    if m == f64::NEG_INFINITY {
                        *o = m;
                        return;
                    }
                    let s: f64 = h
                        .iter()
                        .enumerate()
                        .map(|(j, v)| (v - self.cost.entry(i, j) / reg - m).exp())
                        .sum();
                    *o = s.ln() + m;
                });
            }
        }
    }

    /// The plan `diag(e^α) K diag(e^β)` as a linear operator.
    pub(crate) fn plan_operator<'a>(&'a self, alpha: &'a [f64], beta: &'a [f64]) -> PlanOperator<'a> {
        let m = max_finite(beta);
        let top = max_finite(alpha) + m;
        let bottom = beta
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
            - m;
        let scaled = (self.fast.is_some() && m.is_finite() && top <= ROW_EXPONENT && bottom >= -ROW_EXPONENT).then(|| {
            (
                alpha.iter().map(|a| (a + m).exp()).collect(),
                beta.iter().map(|b| (b - m).exp()).collect(),
            )
        });
        PlanOperator {
            gibbs: self,
            alpha,
            beta,
            scaled,
        }
    }

    /// `out_i = Σ_j exp(α_i + β_j) W_ij y_j`, with `y = 1` when `None`.
    ///
    /// With `α = f / reg`, `β = g / reg` this is the plan `P` (or `D ∘ P`)
    /// applied to `y`.
    pub(crate) fn weighted_apply(&self, alpha: &[f64], beta: &[f64], y: Option<&[f64]>, w: Weight) -> Vec<f64> {
        let n = self.len();
        let yv = |j: usize| y.map_or(1.0, |y| y[j]);
        let m = max_finite(beta);
        let mut out = vec![0.0; n];
        if m == f64::NEG_INFINITY {
            return out;
        }
        let shifted = match &self.fast {
            None => None,
            Some(fast) => {
                let v: Vec<f64> = (0..n).map(|j| (beta[j] - m).exp() * yv(j)).collect();
                Some(match (fast, &self.cost) {
                    (Fast::Dense(k), _) => {
                        let mut s = vec![0.0; n];
                        s.par_iter_mut().enumerate().for_each(|(i, o)| {
                            let row = &k[i * n..(i + 1) * n];
                            *o = match w {
                                Weight::Kernel => dot(row, &v),
                                Weight::CostKernel => row
                                    .iter()
                                    .zip(&v)
                                    .enumerate()
                                    .map(|(j, (kij, vj))| self.cost.entry(i, j) * kij * vj)
                                    .sum(),
                            };
                        });
                        s
                    }
                    (
                        Fast::Separable {
                            kernel, cost_kernel, ..
                        },
                        CostMatrix::Grid { side, .. },
                    ) => match w {
                        Weight::Kernel => separable_apply(*side, kernel, kernel, &v),
                        Weight::CostKernel => {
                            let mut a = separable_apply(*side, cost_kernel, kernel, &v);
                            let b = separable_apply(*side, kernel, cost_kernel, &v);
                            for (x, y) in a.iter_mut().zip(b) {
                                *x += y;
                            }
                            a
                        }
                    },
                    _ => unreachable!("separable kernel on a dense cost"),
                })
            }
        };

        for i in 0..n {
            if alpha[i] == f64::NEG_INFINITY {
                continue;
            }
            out[i] = match &shifted {
                Some(s) if alpha[i] + m <= ROW_EXPONENT => (alpha[i] + m).exp() * s[i],
                _ => self.exact_row(i, alpha[i], beta, &yv, w),
            };
        }
        out
    }

    fn exact_row(&self, i: usize, alpha: f64, beta: &[f64], y: &dyn Fn(usize) -> f64, w: Weight) -> f64 {
        let mut s = 0.0;
        for (j, b) in beta.iter().enumerate() {
            if *b == f64::NEG_INFINITY {
                continue;
            }
            let d = self.cost.entry(i, j);
            let p = (alpha + b - d / self.reg).exp();
            s += match w {
                Weight::Kernel => p,
                Weight::CostKernel => d * p,
            } * y(j);
        }
        s
    }

    #[cfg(test)]
    pub(crate) fn is_fast(&self) -> bool {
        self.fast.is_some()
    }
}

pub(crate) struct PlanOperator<'a> {
    gibbs: &'a Gibbs,
    alpha: &'a [f64],
    beta: &'a [f64],
    /// `e^{α + max β}` and `e^{β - max β}` when both are representable.
    scaled: Option<(Vec<f64>, Vec<f64>)>,
}

impl PlanOperator<'_> {
    /// `P y`.
    pub(crate) fn apply(&self, y: &[f64]) -> Vec<f64> {
        match &self.scaled {
            Some((a, b)) => {
                let v: Vec<f64> = b.iter().zip(y).map(|(b, y)| b * y).collect();
                let mut out = self.gibbs.kernel_apply(&v).expect("scaled plans have a kernel");
                out.iter_mut().zip(a).for_each(|(o, a)| *o *= a);
                out
            }
            None => self.gibbs.weighted_apply(self.alpha, self.beta, Some(y), Weight::Kernel),
        }
    }

    /// `Pᵀ x`.
    pub(crate) fn apply_t(&self, x: &[f64]) -> Vec<f64> {
        match &self.scaled {
            Some((a, b)) => {
                let v: Vec<f64> = a.iter().zip(x).map(|(a, x)| a * x).collect();
                let mut out = self.gibbs.kernel_apply(&v).expect("scaled plans have a kernel");
                out.iter_mut().zip(b).for_each(|(o, b)| *o *= b);
                out
            }
            None => self.gibbs.weighted_apply(self.beta, self.alpha, Some(x), Weight::Kernel),
        }
    }
}

/// Four independent partial sums so the loop pipelines.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn max_finite(v: &[f64]) -> f64 {
    v.iter().copied().filter(|x| !x.is_nan()).fold(f64::NEG_INFINITY, f64::max)
}

/// `(My ⊗ Mx) v` on a row-major `side × side` grid: `Mx` acts along x.
fn separable_apply(side: usize, mx: &[f64], my: &[f64], v: &[f64]) -> Vec<f64> {
    let mut tmp = vec![0.0; side * side];
    for y in 0..side {
        let row = &v[y * side..(y + 1) * side];
        for x1 in 0..side {
            tmp[y * side + x1] = dot(&mx[x1 * side..(x1 + 1) * side], row);
        }
    }
    let mut out = vec![0.0; side * side];
    for y1 in 0..side {
        let wrow = &my[y1 * side..(y1 + 1) * side];
        let orow = &mut out[y1 * side..(y1 + 1) * side];
        for (y2, wv) in wrow.iter().enumerate() {
            if *wv == 0.0 {
                continue;
            }
            let trow = &tmp[y2 * side..(y2 + 1) * side];
            for (o, t) in orow.iter_mut().zip(trow) {
                *o += wv * t;
            }
        }
    }
    out
}

/// Separable `ln Σ K exp(h)` with the 1-D kernel `exp(exponent(a, b))`
/// evaluated exactly inside a log-sum-exp.
fn separable_log_apply(side: usize, h: &[f64], out: &mut [f64], exponent: &dyn Fn(usize, usize) -> f64) {
    let lse_1d = |vals: &[f64], dst: &mut dyn FnMut(usize, f64)| {
        for a in 0..side {
            let m = (0..side)
                .map(|b| vals[b] + exponent(a, b))
                .fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                dst(a, m);
                continue;
            }
            let s: f64 = (0..side).map(|b| (vals[b] + exponent(a, b) - m).exp()).sum();
            dst(a, s.ln() + m);
        }
    };

    let mut tmp = vec![0.0; side * side];
    for y in 0..side {
        lse_1d(&h[y * side..(y + 1) * side], &mut |x, v| tmp[y * side + x] = v);
    }
    let mut column = vec![0.0; side];
    for x in 0..side {
        for y in 0..side {
            column[y] = tmp[y * side + x];
        }
        lse_1d(&column, &mut |y, v| out[y * side + x] = v);
    }
}
