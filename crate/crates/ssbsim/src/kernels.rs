//! Fixed-order numeric kernels.
//!
//! The reduction order in every kernel here is part of the crate's
//! determinism contract: four independent accumulator lanes striding the
//! input, combined lane0+lane1+lane2+lane3 at the end. The compiler may
//! vectorize the lanes but cannot reassociate the sums, so results are
//! bit-identical across runs, thread counts, and targets.

use num_complex::Complex64;

/// Dot product of two real slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = i * 4;
        lanes[0] += a[k] * b[k];
        lanes[1] += a[k + 1] * b[k + 1];
        lanes[2] += a[k + 2] * b[k + 2];
        lanes[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in chunks * 4..a.len() {
        tail += a[k] * b[k];
    }
    ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + tail
}

/// Hermitian inner product `conj(a) . b` of two complex slices.
pub fn cdot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = i * 4;
        for l in 0..4 {
            let (x, y) = (a[k + l], b[k + l]);
            re[l] += x.re * y.re + x.im * y.im;
            im[l] += x.re * y.im - x.im * y.re;
        }
    }
    let (mut tre, mut tim) = (0.0, 0.0);
    for k in chunks * 4..a.len() {
        let (x, y) = (a[k], b[k]);
        tre += x.re * y.re + x.im * y.im;
        tim += x.re * y.im - x.im * y.re;
    }
    Complex64::new(
        ((re[0] + re[1]) + (re[2] + re[3])) + tre,
        ((im[0] + im[1]) + (im[2] + im[3])) + tim,
    )
}

/// `y[r] = sum_c w[r*cols + c] * x[c] + b[r]` for a row-major matrix.
pub fn matvec(w: &[f64], b: &[f64], x: &[f64], y: &mut [f64]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), b.len() * cols);
    debug_assert_eq!(y.len(), b.len());
    for (r, out) in y.iter_mut().enumerate() {
        *out = dot(&w[r * cols..(r + 1) * cols], x) + b[r];
    }
}

/// `x[c] += sum_r w[r*cols + c] * dy[r]` (transposed matvec, accumulating).
pub fn matvec_t_acc(w: &[f64], dy: &[f64], x: &mut [f64]) {
    let cols = x.len();
    for (r, &g) in dy.iter().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        for (c, xi) in x.iter_mut().enumerate() {
            *xi += row[c] * g;
        }
    }
}

/// Rank-1 accumulate `dw[r*cols + c] += dy[r] * x[c]`.
pub fn outer_acc(dw: &mut [f64], dy: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &g) in dy.iter().enumerate() {
        let row = &mut dw[r * cols..(r + 1) * cols];
        for (c, w) in row.iter_mut().enumerate() {
            *w += g * x[c];
        }
    }
}

/// Euclidean norm with the fixed lane order of [`dot`].
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Magnitude of the geometric phase sum `sum_{i<n} e^{j i theta}`.
///
/// Uses the closed form `|sin(n theta / 2) / sin(theta / 2)|` away from
/// the coherent point and the direct series near it.
pub fn geometric_sum_mag(n: usize, theta: f64) -> f64 {
    let half = 0.5 * theta;
    let s = half.sin();
    if s.abs() < 1e-9 {
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for i in 0..n {
            let p = theta * i as f64;
            re += p.cos();
            im += p.sin();
        }
        re.hypot(im)
    } else {
        ((n as f64) * half).sin().abs() / s.abs()
    }
}
