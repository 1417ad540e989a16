//! Dense tensor contractions, quadrature rules and finite-difference stencils.
//!
//! Tensors are flat row-major buffers with the first axis varying slowest.

use num_complex::Complex64;
use std::f64::consts::PI;

pub type C64 = Complex64;

/// Real row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }
}

pub fn product(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Contracts `mat` (rows x shape[axis]) against one axis of a tensor.
pub fn apply_axis(data: &[C64], shape: &[usize], axis: usize, mat: &RMat) -> (Vec<C64>, Vec<usize>) {
    assert_eq!(mat.cols, shape[axis], "matrix does not match tensor axis");
    assert_eq!(data.len(), product(shape));
    let outer = product(&shape[..axis]);
    let inner = product(&shape[axis + 1..]);
    let len = shape[axis];
    let mut out = vec![C64::new(0.0, 0.0); outer * mat.rows * inner];
    for o in 0..outer {
        let src = &data[o * len * inner..(o + 1) * len * inner];
        let dst = &mut out[o * mat.rows * inner..(o + 1) * mat.rows * inner];
        for r in 0..mat.rows {
            let row = &mat.data[r * len..(r + 1) * len];
            let d = &mut dst[r * inner..(r + 1) * inner];
            for (j, &m) in row.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let s = &src[j * inner..(j + 1) * inner];
                for (a, b) in d.iter_mut().zip(s) {
                    *a += b * m;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = mat.rows;
    (out, new_shape)
}

/// Applies one matrix per axis.
pub fn apply_all_axes(data: &[C64], shape: &[usize], mats: &[&RMat]) -> (Vec<C64>, Vec<usize>) {
    let mut cur = data.to_vec();
    let mut cur_shape = shape.to_vec();
    for (axis, m) in mats.iter().enumerate() {
        let (d, s) = apply_axis(&cur, &cur_shape, axis, m);
        cur = d;
        cur_shape = s;
    }
    (cur, cur_shape)
}

/// Unravels a flat row-major index.
pub fn unravel(mut idx: usize, shape: &[usize], out: &mut [usize]) {
    for a in (0..shape.len()).rev() {
        out[a] = idx % shape[a];
        idx /= shape[a];
    }
}

pub fn ravel(index: &[usize], shape: &[usize]) -> usize {
    let mut idx = 0;
    for a in 0..shape.len() {
        idx = idx * shape[a] + index[a];
    }
    idx
}

/// Quadrature weights on `m` equispaced nodes (endpoints included) with the
/// fourth-order Gregory end correction; falls back to trapezoid below 8 nodes.
/// All weights are positive and sum to (m-1)h.
pub fn gregory_weights(m: usize, h: f64) -> Vec<f64> {
    if m == 1 {
        return vec![1.0];
    }
    let mut w = vec![h; m];
    if m >= 8 {
        let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
        for (i, e) in ends.iter().enumerate() {
            w[i] = e * h;
            w[m - 1 - i] = e * h;
        }
    } else {
        w[0] = 0.5 * h;
        w[m - 1] = 0.5 * h;
    }
    w
}

/// Orthonormal sine on (0, l).
#[inline]
pub fn sine_mode(l: f64, k: usize, x: f64) -> f64 {
    (2.0 / l).sqrt() * (k as f64 * PI * x / l).sin()
}

/// Discrete sine analysis on the `g` interior nodes x_j = j l/(g+1): entries h phi_k(x_j).
pub fn dst_analysis(l: f64, n: usize, g: usize) -> RMat {
    let h = l / (g as f64 + 1.0);
    RMat::from_fn(n, g, |k, j| h * sine_mode(l, k + 1, (j + 1) as f64 * h))
}

/// Sine synthesis at arbitrary nodes: entries phi_k(x_i).
pub fn sine_synthesis(l: f64, n: usize, nodes: &[f64]) -> RMat {
    RMat::from_fn(nodes.len(), n, |i, k| sine_mode(l, k + 1, nodes[i]))
}

/// Fourth-order one-sided second derivative at the first node.
#[inline]
pub fn d2_left(f: &[C64], h: f64) -> C64 {
    (f[0] * 45.0 - f[1] * 154.0 + f[2] * 214.0 - f[3] * 156.0 + f[4] * 61.0 - f[5] * 10.0)
        / (12.0 * h * h)
}

/// Sine-moment rule on the closed grid of `g + 2` nodes.
///
/// Approximates the integrals of f against phi_1..phi_n. A cubic lift
/// matching the end values and end curvatures is integrated in closed form and
/// the remainder, which vanishes with its curvature at both ends, goes through
/// the discrete sine transform. Exact on cubics. The lift is built from the
/// data itself so that smooth inputs never see the 1/h^2 curvature weights
/// cancel against each other.
#[derive(Debug, Clone)]
pub struct MomentRule {
    l: f64,
    n: usize,
    g: usize,
    dst: RMat,
}

impl MomentRule {
    pub fn new(l: f64, n: usize, g: usize) -> Self {
        Self { l, n, g, dst: dst_analysis(l, n, g) }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.g + 2
    }

    /// Moments of one closed-grid line into `out` (length n).
    pub fn apply_line(&self, f: &[C64], out: &mut [C64]) {
        let (l, g) = (self.l, self.g);
        let m = g + 2;
        assert_eq!(f.len(), m);
        let h = l / (g as f64 + 1.0);
        let f0 = f[0];
        let fl = f[m - 1];
        let (c0, c1) = if m >= 6 {
            let rev: Vec<C64> = f.iter().rev().copied().collect();
            (d2_left(f, h), d2_left(&rev, h))
        } else {
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        };
        let sq = (2.0 / l).sqrt() * l;
        let r: Vec<C64> = (0..g)
            .map(|j| {
                let t = (j + 1) as f64 * h / l;
                let a = ((1.0 - t).powi(3) - (1.0 - t)) / 6.0;
                let b = (t.powi(3) - t) / 6.0;
                f[j + 1] - (f0 * (1.0 - t) + fl * t + (c0 * a + c1 * b) * (l * l))
            })
            .collect();
        for (k, o) in out.iter_mut().enumerate().take(self.n) {
            let w = (k + 1) as f64 * PI;
            let sgn = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
            let mut acc = (f0 / w - fl * sgn / w + (-c0 / w.powi(3) + c1 * sgn / w.powi(3)) * (l * l)) * sq;
            let row = &self.dst.data[k * g..(k + 1) * g];
            for (rj, d) in r.iter().zip(row) {
                acc += rj * *d;
            }
            *o = acc;
        }
    }

    /// Applies the rule along one tensor axis.
    pub fn apply_axis(&self, data: &[C64], shape: &[usize], axis: usize) -> (Vec<C64>, Vec<usize>) {
        apply_lines(data, shape, axis, self.n, |line, out| self.apply_line(line, out))
    }
}

/// Applies a line operator along one axis, changing its length to `out_len`.
pub fn apply_lines(
    data: &[C64],
    shape: &[usize],
    axis: usize,
    out_len: usize,
    op: impl Fn(&[C64], &mut [C64]),
) -> (Vec<C64>, Vec<usize>) {
    assert_eq!(data.len(), product(shape));
    let n = shape[axis];
    let outer = product(&shape[..axis]);
    let inner = product(&shape[axis + 1..]);
    let mut out = vec![C64::new(0.0, 0.0); outer * out_len * inner];
    let mut line = vec![C64::new(0.0, 0.0); n];
    let mut res = vec![C64::new(0.0, 0.0); out_len];
    for o in 0..outer {
        for i in 0..inner {
            for j in 0..n {
                line[j] = data[(o * n + j) * inner + i];
            }
            op(&line, &mut res);
            for j in 0..out_len {
                out[(o * out_len + j) * inner + i] = res[j];
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = out_len;
    (out, new_shape)
}

/// Unnormalized FFT along every axis (forward uses e^{-2πi jk/n}).
pub fn fft_axes(values: &[C64], shape: &[usize], inverse: bool) -> Vec<C64> {
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let mut cur = values.to_vec();
    for (axis, &n) in shape.iter().enumerate() {
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let (out, _) = apply_lines(&cur, shape, axis, n, |line, out| {
            out.copy_from_slice(line);
            fft.process(out);
        });
        cur = out;
    }
    cur
}

/// Fourth-order first derivative along one axis (one-sided near the ends).
pub fn fd_d1(data: &[C64], shape: &[usize], axis: usize, h: f64) -> Vec<C64> {
    fd_apply(data, shape, axis, |line, i| {
        let n = line.len();
        let v = if i >= 2 && i + 2 < n {
            line[i - 2] - line[i - 1] * 8.0 + line[i + 1] * 8.0 - line[i + 2]
        } else if i == 0 {
            -line[0] * 25.0 + line[1] * 48.0 - line[2] * 36.0 + line[3] * 16.0 - line[4] * 3.0
        } else if i == 1 {
            -line[0] * 3.0 - line[1] * 10.0 + line[2] * 18.0 - line[3] * 6.0 + line[4]
        } else if i == n - 1 {
            line[n - 1] * 25.0 - line[n - 2] * 48.0 + line[n - 3] * 36.0 - line[n - 4] * 16.0 + line[n - 5] * 3.0
        } else {
            line[n - 1] * 3.0 + line[n - 2] * 10.0 - line[n - 3] * 18.0 + line[n - 4] * 6.0 - line[n - 5]
        };
        v / (12.0 * h)
    })
}

/// Fourth-order second derivative along one axis (one-sided near the ends).
pub fn fd_d2(data: &[C64], shape: &[usize], axis: usize, h: f64) -> Vec<C64> {
    fd_apply(data, shape, axis, |line, i| {
        let n = line.len();
        let v = if i >= 2 && i + 2 < n {
            -line[i - 2] + line[i - 1] * 16.0 - line[i] * 30.0 + line[i + 1] * 16.0 - line[i + 2]
        } else if i == 0 {
            line[0] * 45.0 - line[1] * 154.0 + line[2] * 214.0 - line[3] * 156.0 + line[4] * 61.0 - line[5] * 10.0
        } else if i == 1 {
            line[0] * 10.0 - line[1] * 15.0 - line[2] * 4.0 + line[3] * 14.0 - line[4] * 6.0 + line[5]
        } else if i == n - 1 {
            line[n - 1] * 45.0 - line[n - 2] * 154.0 + line[n - 3] * 214.0 - line[n - 4] * 156.0 + line[n - 5] * 61.0
                - line[n - 6] * 10.0
        } else {
            line[n - 1] * 10.0 - line[n - 2] * 15.0 - line[n - 3] * 4.0 + line[n - 4] * 14.0 - line[n - 5] * 6.0
                + line[n - 6]
        };
        v / (12.0 * h * h)
    })
}

fn fd_apply(data: &[C64], shape: &[usize], axis: usize, op: impl Fn(&[C64], usize) -> C64) -> Vec<C64> {
    let n = shape[axis];
    assert!(n >= 6, "finite differences need at least 6 nodes per axis");
    let outer = product(&shape[..axis]);
    let inner = product(&shape[axis + 1..]);
    let mut out = vec![C64::new(0.0, 0.0); data.len()];
    let mut line = vec![C64::new(0.0, 0.0); n];
    for o in 0..outer {
        for i in 0..inner {
            for j in 0..n {
                line[j] = data[(o * n + j) * inner + i];
            }
            for j in 0..n {
                out[(o * n + j) * inner + i] = op(&line, j);
            }
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Local Lagrange interpolation of degree `order - 1` on a uniform grid starting at `lo`.
pub fn lagrange_uniform(values: &[f64], lo: f64, h: f64, x: f64, order: usize) -> f64 {
    let n = values.len();
    let pos = (x - lo) / h;
    let half = order as isize / 2;
    let mut start = pos.floor() as isize - half + 1;
    start = start.clamp(0, n as isize - order as isize);
    let start = start as usize;
    let mut acc = 0.0;
    for j in 0..order {
        let xj = (start + j) as f64;
        let mut basis = 1.0;
        for m in 0..order {
            if m != j {
                let xm = (start + m) as f64;
                basis *= (pos - xm) / (xj - xm);
            }
        }
        acc += basis * values[start + j];
    }
    acc
}
