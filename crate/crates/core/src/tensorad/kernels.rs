//! Numeric kernels behind the graph ops. Everything here works on a single
//! sample: images are `[channels, height, width]`, dense vectors are `[n]`.

/// Geometry of a 2D convolution with square kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_h: usize,
    pub in_w: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        (self.in_h + 2 * self.padding - self.kernel) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.in_w + 2 * self.padding - self.kernel) / self.stride + 1
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [self.in_ch, self.in_h, self.in_w]
    }

    pub fn output_shape(&self) -> [usize; 3] {
        [self.out_ch, self.out_h(), self.out_w()]
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [self.out_ch, self.in_ch, self.kernel, self.kernel]
    }

    fn patch_len(&self) -> usize {
        self.in_ch * self.kernel * self.kernel
    }

    fn out_pixels(&self) -> usize {
        self.out_h() * self.out_w()
    }
}

/// `c[m×n] = op(a) · op(b)` with `op(a)` of shape `m×k`, `op(b)` of shape `k×n`.
/// `ta`/`tb` say whether the stored matrix is the transpose.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the slices cover exactly the strided extents computed above,
    // as checked by the debug assertions.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn im2col(x: &[f64], g: &ConvGeom) -> Vec<f64> {
    let (oh, ow) = (g.out_h(), g.out_w());
    let p = oh * ow;
    let mut cols = vec![0.0; g.patch_len() * p];
    for c in 0..g.in_ch {
        let plane = &x[c * g.in_h * g.in_w..(c + 1) * g.in_h * g.in_w];
        for ky in 0..g.kernel {
            for kx in 0..g.kernel {
                let row = (c * g.kernel + ky) * g.kernel + kx;
                let dst = &mut cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = (oy * g.stride + ky) as isize - g.padding as isize;
                    if iy < 0 || iy >= g.in_h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * g.in_w..(iy as usize + 1) * g.in_w];
                    for ox in 0..ow {
                        let ix = (ox * g.stride + kx) as isize - g.padding as isize;
                        if ix >= 0 && ix < g.in_w as isize {
                            dst[oy * ow + ox] = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], g: &ConvGeom) -> Vec<f64> {
    let (oh, ow) = (g.out_h(), g.out_w());
    let p = oh * ow;
    let mut x = vec![0.0; g.in_ch * g.in_h * g.in_w];
    for c in 0..g.in_ch {
        let plane = &mut x[c * g.in_h * g.in_w..(c + 1) * g.in_h * g.in_w];
        for ky in 0..g.kernel {
            for kx in 0..g.kernel {
                let row = (c * g.kernel + ky) * g.kernel + kx;
                let src = &cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = (oy * g.stride + ky) as isize - g.padding as isize;
                    if iy < 0 || iy >= g.in_h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * g.in_w..(iy as usize + 1) * g.in_w];
                    for ox in 0..ow {
                        let ix = (ox * g.stride + kx) as isize - g.padding as isize;
                        if ix >= 0 && ix < g.in_w as isize {
                            dst[ix as usize] += src[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
    x
}

/// Cross-correlation `y[o] = Σ_c w[o,c] ⋆ x[c]` (no bias).
pub fn conv2d(x: &[f64], w: &[f64], g: &ConvGeom) -> Vec<f64> {
    let cols = im2col(x, g);
    let mut y = vec![0.0; g.out_ch * g.out_pixels()];
    gemm(g.out_ch, g.patch_len(), g.out_pixels(), w, false, &cols, false, &mut y);
    y
}

/// Adjoint of [`conv2d`] in its input: maps an output-shaped tensor back to
/// input shape.
pub fn conv2d_input_grad(gy: &[f64], w: &[f64], g: &ConvGeom) -> Vec<f64> {
    let mut cols = vec![0.0; g.patch_len() * g.out_pixels()];
    gemm(g.patch_len(), g.out_ch, g.out_pixels(), w, true, gy, false, &mut cols);
    col2im(&cols, g)
}

/// Adjoint of [`conv2d`] in its weights.
pub fn conv2d_weight_grad(x: &[f64], gy: &[f64], g: &ConvGeom) -> Vec<f64> {
    let cols = im2col(x, g);
    let mut gw = vec![0.0; g.out_ch * g.patch_len()];
    gemm(g.out_ch, g.out_pixels(), g.patch_len(), gy, false, &cols, true, &mut gw);
    gw
}

/// `y = W x` for `W` of shape `[rows, cols]`.
pub fn matvec(w: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    (0..rows)
        .map(|r| {
            w[r * cols..(r + 1) * cols]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// `y = Wᵀ x` for `W` of shape `[rows, cols]`.
pub fn matvec_t(w: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut y = vec![0.0; cols];
    for (r, &xr) in x.iter().enumerate().take(rows) {
        for (yc, wc) in y.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *yc += wc * xr;
        }
    }
    y
}

pub fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut o = Vec::with_capacity(a.len() * b.len());
    for &ai in a {
        o.extend(b.iter().map(|&bj| ai * bj));
    }
    o
}

/// Nearest-neighbour upsampling of `[c, h, w]` by an integer factor.
pub fn upsample(x: &[f64], c: usize, h: usize, w: usize, f: usize) -> Vec<f64> {
    let (hh, ww) = (h * f, w * f);
    let mut y = vec![0.0; c * hh * ww];
    for ch in 0..c {
        for oy in 0..hh {
            let src = &x[(ch * h + oy / f) * w..(ch * h + oy / f + 1) * w];
            let dst = &mut y[(ch * hh + oy) * ww..(ch * hh + oy + 1) * ww];
            for (ox, d) in dst.iter_mut().enumerate() {
                *d = src[ox / f];
            }
        }
    }
    y
}

/// Sum over non-overlapping `f×f` blocks of `[c, h, w]`; adjoint of [`upsample`].
pub fn block_sum(x: &[f64], c: usize, h: usize, w: usize, f: usize) -> Vec<f64> {
    let (sh, sw) = (h / f, w / f);
    let mut y = vec![0.0; c * sh * sw];
    for ch in 0..c {
        for iy in 0..h {
            let src = &x[(ch * h + iy) * w..(ch * h + iy + 1) * w];
            let dst = &mut y[(ch * sh + iy / f) * sw..(ch * sh + iy / f + 1) * sw];
            for (ix, v) in src.iter().enumerate() {
                dst[ix / f] += v;
            }
        }
    }
    y
}
