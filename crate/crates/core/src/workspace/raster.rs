use super::Scene;
use crate::tensorad::Tensor;

/// Scene channels of the network input: occupancy, normalized distance to the
/// nearest occupied cell, and two reserved zero channels.
pub const RASTER_CHANNELS: usize = 4;

/// A `[4, h, w]` tensor produced by [`rasterize`].
pub type Raster = Tensor;

/// Renders the workspace on an `h×w` grid; row 0 is the lowest `y`.
///
/// A cell is occupied when its center lies inside an obstacle. The distance
/// channel holds the Euclidean distance (workspace units) from each cell center
/// to the nearest occupied cell center, divided by the largest such distance;
/// it is all zero when nothing is occupied.
pub fn rasterize(scene: &Scene, h: usize, w: usize) -> Raster {
    let b = scene.bounds();
    let e = b.extent();
    let (cw, ch) = (e[0] / w as f64, e[1] / h as f64);
    let mut occ = vec![false; h * w];
    for r in 0..h {
        for c in 0..w {
            let p = [b.min[0] + (c as f64 + 0.5) * cw, b.min[1] + (r as f64 + 0.5) * ch];
            occ[r * w + c] = scene.obstacles().iter().any(|o| o.contains(p));
        }
    }
    let dist = distance_transform(&occ, h, w, ch, cw);
    let max = dist.iter().cloned().fold(0.0, f64::max);

    let plane = h * w;
    let mut data = vec![0.0; RASTER_CHANNELS * plane];
    for i in 0..plane {
        data[i] = if occ[i] { 1.0 } else { 0.0 };
        data[plane + i] = if max > 0.0 { dist[i] / max } else { 0.0 };
    }
    Tensor::from_parts(vec![RASTER_CHANNELS, h, w], data)
}

/// Exact Euclidean distance from every cell to the nearest `true` cell, for
/// cells `row_step × col_step` apart. Two separable passes of the
/// lower-envelope-of-parabolas transform. Returns all zeros when no cell is set.
pub fn distance_transform(occ: &[bool], h: usize, w: usize, row_step: f64, col_step: f64) -> Vec<f64> {
    if !occ.iter().any(|&o| o) {
        return vec![0.0; h * w];
    }
    let inf = f64::INFINITY;
    let mut sq: Vec<f64> = occ.iter().map(|&o| if o { 0.0 } else { inf }).collect();
    let mut line = Vec::new();
    for r in 0..h {
        line.clear();
        line.extend_from_slice(&sq[r * w..(r + 1) * w]);
        let out = edt_1d(&line, col_step);
        sq[r * w..(r + 1) * w].copy_from_slice(&out);
    }
    for c in 0..w {
        line.clear();
        line.extend((0..h).map(|r| sq[r * w + c]));
        let out = edt_1d(&line, row_step);
        for (r, v) in out.into_iter().enumerate() {
            sq[r * w + c] = v;
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// `out[q] = min_p (step·(q − p))² + f[p]`.
fn edt_1d(f: &[f64], step: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::INFINITY; n];
    let pos = |i: usize| i as f64 * step;
    // Vertices of the lower envelope and the boundaries between them.
    let mut v: Vec<usize> = Vec::with_capacity(n);
    let mut z: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.clear();
                z.push(f64::NEG_INFINITY);
                z.push(f64::INFINITY);
                break;
            };
            let s = ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
            if s <= z[z.len() - 2] {
                v.pop();
                z.pop();
                if v.is_empty() {
                    z.clear();
                }
                continue;
            }
            let last = z.len() - 1;
            z[last] = s;
            z.push(f64::INFINITY);
            v.push(q);
            break;
        }
    }
    if v.is_empty() {
        return out;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < pos(q) {
            k += 1;
        }
        let d = pos(q) - pos(v[k]);
        *o = d * d + f[v[k]];
    }
    out
}
