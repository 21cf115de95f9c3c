//! Scene generators and independent oracles shared by the integration
//! tests and the acceptance runner.
#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

use brushwork::superpixel::LabelMap;
use brushwork::{Point, RasterImage, Rgba, Stroke, StrokeSet};
use rand::Rng;

pub fn random_stroke(rng: &mut impl Rng, w: f64, h: f64, margin: f64, widths: (f64, f64)) -> Stroke {
    let mut p = || Point::new(rng.gen_range(-margin..w + margin), rng.gen_range(-margin..h + margin));
    let points = [p(), p(), p()];
    Stroke::new(
        points,
        Rgba::new(rng.gen(), rng.gen(), rng.gen(), rng.gen_range(0.2..=1.0)),
        rng.gen_range(widths.0..widths.1),
    )
}

/// Opaque strokes with short spans, the kind extraction produces.
pub fn painterly_scene(rng: &mut impl Rng, n: usize, w: usize, h: usize) -> StrokeSet {
    let strokes = (0..n)
        .map(|_| {
            let c = Point::new(rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64));
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let half = rng.gen_range(3.0..10.0);
            let dir = Point::new(angle.cos(), angle.sin());
            let bend = Point::new(-dir.y, dir.x) * rng.gen_range(-3.0..3.0);
            Stroke::new(
                [c - dir * half, c + bend, c + dir * half],
                Rgba::new(rng.gen(), rng.gen(), rng.gen(), 1.0),
                rng.gen_range(2.0..6.0),
            )
        })
        .collect();
    StrokeSet::with_strokes(w, h, strokes)
}

/// Minimum distance from `q` to the curve by sampling `samples` values of t.
pub fn sampled_distance(q: Point, p: [Point; 3], samples: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let u = 1.0 - t;
        let b = p[0] * (u * u) + p[1] * (2.0 * u * t) + p[2] * (t * t);
        best = best.min((b - q).norm());
    }
    best
}

fn segment_distance(q: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 == 0.0 { 0.0 } else { ((q - a).dot(ab) / len2).clamp(0.0, 1.0) };
    (a + ab * t - q).norm()
}

/// Hard rasterization of straight strokes (`p2` on the chord) with
/// `ss × ss` samples per pixel. Pixel `(x, y)` covers the unit square
/// centered on the integer point `(x, y)`.
pub fn supersample_straight(s: &StrokeSet, ss: usize) -> RasterImage {
    let (w, h) = (s.canvas_width, s.canvas_height);
    let mut img = RasterImage::filled(w, h, 3, 1.0);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for sy in 0..ss {
                for sx in 0..ss {
                    let q = Point::new(
                        x as f64 - 0.5 + (sx as f64 + 0.5) / ss as f64,
                        y as f64 - 0.5 + (sy as f64 + 0.5) / ss as f64,
                    );
                    let mut c = [1.0; 3];
                    for st in &s.strokes {
                        if segment_distance(q, st.points[0], st.points[2]) <= st.width / 2.0 {
                            let a = st.color.a;
                            let rgb = st.color.rgb();
                            for k in 0..3 {
                                c[k] = rgb[k] * a + c[k] * (1.0 - a);
                            }
                        }
                    }
                    for k in 0..3 {
                        acc[k] += c[k];
                    }
                }
            }
            let i = (y * w + x) * 3;
            for k in 0..3 {
                img.data[i + k] = acc[k] / (ss * ss) as f64;
            }
        }
    }
    img
}

/// Exact discrete OT cost by enumerating every basis of the transport
/// polytope: each 7-cell support of a 4×4 plan that determines a unique
/// solution, kept when that solution is non-negative.
pub fn exact_ot_4x4(p: &[f64], q: &[f64], cost: &[f64]) -> f64 {
    let n = 4;
    let mut best = f64::INFINITY;
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut subset = [0usize; 7];
    fn rec(
        start: usize,
        depth: usize,
        subset: &mut [usize; 7],
        cells: &[(usize, usize)],
        p: &[f64],
        q: &[f64],
        cost: &[f64],
        best: &mut f64,
    ) {
        if depth == 7 {
            if let Some(v) = solve_basis(subset, cells, p, q, cost) {
                *best = best.min(v);
            }
            return;
        }
        for c in start..cells.len() {
            subset[depth] = c;
            rec(c + 1, depth + 1, subset, cells, p, q, cost, best);
        }
    }
    rec(0, 0, &mut subset, &cells, p, q, cost, &mut best);
    best
}

fn solve_basis(subset: &[usize; 7], cells: &[(usize, usize)], p: &[f64], q: &[f64], cost: &[f64]) -> Option<f64> {
    // 4 row equations + first 3 column equations (the last is implied)
    let mut a = [[0.0f64; 8]; 7];
    for (k, &c) in subset.iter().enumerate() {
        let (i, j) = cells[c];
        a[i][k] = 1.0;
        if j < 3 {
            a[4 + j][k] = 1.0;
        }
    }
    for r in 0..4 {
        a[r][7] = p[r];
    }
    for r in 0..3 {
        a[4 + r][7] = q[r];
    }
    for col in 0..7 {
        let piv = (col..7).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..7 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..8 {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    let x: Vec<f64> = (0..7).map(|k| a[k][7] / a[k][k]).collect();
    if x.iter().any(|&v| v < -1e-12) {
        return None;
    }
    // the implied last column must hold
    let last: f64 = subset
        .iter()
        .zip(&x)
        .filter(|(&c, _)| cells[c].1 == 3)
        .map(|(_, v)| v)
        .sum();
    if (last - q[3]).abs() > 1e-9 {
        return None;
    }
    Some(subset.iter().zip(&x).map(|(&c, v)| cost[cells[c].0 * 4 + cells[c].1] * v).sum())
}

/// Row-major border pixels of label 0 by direct neighbor inspection.
pub fn border_of_zero(lm: &LabelMap) -> Vec<(usize, usize)> {
    let (w, h) = (lm.width as i64, lm.height as i64);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if lm.labels[(y * w + x) as usize] != 0 {
                continue;
            }
            let outside = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| {
                let (nx, ny) = (x + dx, y + dy);
                nx < 0 || ny < 0 || nx >= w || ny >= h || lm.labels[(ny * w + nx) as usize] != 0
            });
            if outside {
                out.push((x as usize, y as usize));
            }
        }
    }
    out
}

/// Exhaustive farthest pair with the smallest row-major `(i, j)` on ties.
pub fn brute_force_pair(border: &[(usize, usize)]) -> (usize, usize) {
    let d2 = |a: (usize, usize), b: (usize, usize)| {
        let (dx, dy) = (a.0 as i64 - b.0 as i64, a.1 as i64 - b.1 as i64);
        dx * dx + dy * dy
    };
    let mut best = (-1i64, 0, 0);
    for i in 0..border.len() {
        for j in i..border.len() {
            let d = d2(border[i], border[j]);
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    (best.1, best.2)
}

/// Mean point-to-line distance in plain floating point.
pub fn mean_perpendicular(border: &[(usize, usize)], a: (usize, usize), b: (usize, usize)) -> f64 {
    if a == b {
        return 0.0;
    }
    let (ax, ay, bx, by) = (a.0 as f64, a.1 as f64, b.0 as f64, b.1 as f64);
    let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
    border
        .iter()
        .map(|&(x, y)| ((bx - ax) * (ay - y as f64) - (ax - x as f64) * (by - ay)).abs() / len)
        .sum::<f64>()
        / border.len() as f64
}

/// Random 4-connected blob of label 0 grown from the center of a `w × h`
/// map; every other pixel is label 1.
pub fn random_blob(rng: &mut impl Rng, w: usize, h: usize, size: usize) -> LabelMap {
    let mut labels = vec![1usize; w * h];
    let mut members = vec![(w / 2, h / 2)];
    labels[(h / 2) * w + w / 2] = 0;
    while members.len() < size {
        let (x, y) = members[rng.gen_range(0..members.len())];
        let (dx, dy) = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)][rng.gen_range(0..4)];
        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
            continue;
        }
        let i = ny as usize * w + nx as usize;
        if labels[i] == 1 {
            labels[i] = 0;
            members.push((nx as usize, ny as usize));
        }
    }
    LabelMap {
        width: w,
        height: h,
        labels,
        region_count: 2,
    }
}

/// Synthetic images for the segmentation corpus: gradients, stripes,
/// discs, checkerboards and noise.
pub fn synthetic_image(kind: usize, w: usize, h: usize, rng: &mut impl Rng) -> RasterImage {
    let mut img = RasterImage::filled(w, h, 3, 1.0);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64 / w as f64, y as f64 / h as f64);
            let rgb = match kind % 5 {
                0 => [fx, fy, 1.0 - fx],
                1 => {
                    let band = ((fx * 6.0) as usize) % 3;
                    [(band == 0) as u8 as f64, (band == 1) as u8 as f64, 0.5]
                }
                2 => {
                    let d = ((fx - 0.5).powi(2) + (fy - 0.5).powi(2)).sqrt();
                    if d < 0.3 { [0.9, 0.2, 0.1] } else { [0.1, 0.3, 0.8] }
                }
                3 => {
                    let on = ((x / 8) + (y / 8)) % 2 == 0;
                    if on { [0.0; 3] } else { [1.0; 3] }
                }
                _ => [rng.gen(), rng.gen(), rng.gen()],
            };
            let i = (y * w + x) * 3;
            img.data[i..i + 3].copy_from_slice(&rgb);
        }
    }
    img
}

/// Flood-fill check that every label of `lm` is one 4-connected piece.
pub fn all_regions_connected(lm: &LabelMap) -> bool {
    let (w, h) = (lm.width, lm.height);
    let mut seen = vec![false; w * h];
    let mut first_seen = vec![false; lm.region_count];
    for start in 0..w * h {
        if seen[start] {
            continue;
        }
        let label = lm.labels[start];
        if first_seen[label] {
            return false;
        }
        first_seen[label] = true;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut nbrs = Vec::with_capacity(4);
            if x > 0 {
                nbrs.push(i - 1);
            }
            if x + 1 < w {
                nbrs.push(i + 1);
            }
            if y > 0 {
                nbrs.push(i - w);
            }
            if y + 1 < h {
                nbrs.push(i + w);
            }
            for j in nbrs {
                if !seen[j] && lm.labels[j] == label {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    true
}

pub fn mean_point_displacement(a: &StrokeSet, b: &StrokeSet) -> f64 {
    let mut total = 0.0;
    for (sa, sb) in a.strokes.iter().zip(&b.strokes) {
        for (pa, pb) in sa.points.iter().zip(&sb.points) {
            total += (*pa - *pb).norm();
        }
    }
    total / (3 * a.len()).max(1) as f64
}
