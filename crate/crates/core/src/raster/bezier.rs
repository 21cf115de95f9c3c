//! Closest point on a quadratic Bézier curve.

use crate::model::Point;

/// Distance from `q` to the curve `B(t) = (1-t)²p1 + 2t(1-t)p2 + t²p3`,
/// `t ∈ [0, 1]`, together with the minimizing parameter.
///
/// The stationarity condition `(B(t) - q) · B'(t) = 0` is a cubic in `t`;
/// its real roots inside `[0, 1]` and the two endpoints are the candidates.
/// Ties resolve to the smallest `t`.
pub fn bezier_distance(q: Point, p1: Point, p2: Point, p3: Point) -> (f64, f64) {
    let a = p1 - p2 * 2.0 + p3;
    let b = p2 - p1;
    let m = p1 - q;

    let c3 = a.dot(a);
    let c2 = 3.0 * a.dot(b);
    let c1 = 2.0 * b.dot(b) + m.dot(a);
    let c0 = m.dot(b);

    let mut cands = [0.0; 5];
    let mut n = 0;
    cands[n] = 0.0;
    n += 1;
    for t in cubic_roots(c3, c2, c1, c0).iter() {
        let t = polish(c3, c2, c1, c0, t);
        if (0.0..=1.0).contains(&t) {
            cands[n] = t;
            n += 1;
        }
    }
    cands[n] = 1.0;
    n += 1;

    let cands = &mut cands[..n];
    cands.sort_by(f64::total_cmp);

    let mut best_t = 0.0;
    let mut best_d2 = f64::INFINITY;
    for &t in cands.iter() {
        // B(t) - q = m + 2bt + at²
        let d = m + b * (2.0 * t) + a * (t * t);
        let d2 = d.norm_sq();
        if d2 < best_d2 {
            best_d2 = d2;
            best_t = t;
        }
    }
    (best_d2.sqrt(), best_t)
}

/// Up to three real roots, unordered.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Roots {
    vals: [f64; 3],
    len: usize,
}

impl Roots {
    fn push(&mut self, v: f64) {
        if v.is_finite() && self.len < 3 {
            self.vals[self.len] = v;
            self.len += 1;
        }
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.vals[..self.len].iter().copied()
    }
}

const DEGENERATE: f64 = 1e-12;

/// Real roots of `c3 t³ + c2 t² + c1 t + c0`.
pub(crate) fn cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Roots {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    let mut out = Roots::default();
    if scale == 0.0 {
        return out;
    }
    if c3.abs() <= DEGENERATE * scale {
        quadratic_roots(c2, c1, c0, scale, &mut out);
        return out;
    }

    let (aa, bb, cc) = (c2 / c3, c1 / c3, c0 / c3);
    let shift = aa / 3.0;
    let p = bb - aa * shift;
    let q = 2.0 * shift * shift * shift - shift * bb + cc;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    if disc > 0.0 {
        // one real root; pick the cube root that avoids cancellation
        let s = disc.sqrt();
        let u = (-0.5 * q - q.signum() * s).cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        out.push(u + v - shift);
    } else if p == 0.0 {
        out.push(-shift);
    } else {
        let r = (-p / 3.0).sqrt();
        let cos_arg = (-0.5 * q / (r * r * r)).clamp(-1.0, 1.0);
        let phi = cos_arg.acos();
        for k in 0..3 {
            let ang = (phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0;
            out.push(2.0 * r * ang.cos() - shift);
        }
    }
    out
}

fn quadratic_roots(c2: f64, c1: f64, c0: f64, scale: f64, out: &mut Roots) {
    if c2.abs() <= DEGENERATE * scale {
        if c1 != 0.0 {
            out.push(-c0 / c1);
        }
        return;
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        // nearest real point of a complex pair; a stationary point of the
        // distance always exists nearby when the discriminant is tiny
        out.push(-c1 / (2.0 * c2));
        return;
    }
    let s = disc.sqrt();
    let qq = -0.5 * (c1 + c1.signum() * s);
    if qq != 0.0 {
        out.push(qq / c2);
        out.push(c0 / qq);
    } else {
        out.push(-c1 / (2.0 * c2));
    }
}

/// Two Newton steps on the unnormalized cubic.
fn polish(c3: f64, c2: f64, c1: f64, c0: f64, mut t: f64) -> f64 {
    for _ in 0..2 {
        let f = ((c3 * t + c2) * t + c1) * t + c0;
        let df = (3.0 * c3 * t + 2.0 * c2) * t + c1;
        if df == 0.0 {
            break;
        }
        let next = t - f / df;
        if !next.is_finite() {
            break;
        }
        t = next;
    }
    t
}
