//! Low-level dense ops: GEMM-backed 3x3 convolution (im2col), linear layers
//! and row softmax, generic over the element type. Backward variants
//! accumulate gradients into caller-provided flat buffers.

use super::scalar::Scalar;
use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView2, ArrayViewMut2};

/// C[m,n] (+)= A[m,k] * B[k,n], all row-major slices.
pub fn gemm<T: Scalar>(
    a: &[T],
    b: &[T],
    c: &mut [T],
    m: usize,
    k: usize,
    n: usize,
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let av = ArrayView2::from_shape((m, k), a).unwrap();
    let bv = ArrayView2::from_shape((k, n), b).unwrap();
    let mut cv = ArrayViewMut2::from_shape((m, n), c).unwrap();
    let beta = if accumulate { T::one() } else { T::zero() };
    general_mat_mul(T::one(), &av, &bv, beta, &mut cv);
}

/// A^T variant: C[m,n] (+)= A[k,m]^T * B[k,n].
pub fn gemm_at<T: Scalar>(
    a: &[T],
    b: &[T],
    c: &mut [T],
    m: usize,
    k: usize,
    n: usize,
    accumulate: bool,
) {
    let av = ArrayView2::from_shape((k, m), a).unwrap();
    let bv = ArrayView2::from_shape((k, n), b).unwrap();
    let mut cv = ArrayViewMut2::from_shape((m, n), c).unwrap();
    let beta = if accumulate { T::one() } else { T::zero() };
    general_mat_mul(T::one(), &av.t(), &bv, beta, &mut cv);
}

/// B^T variant: C[m,n] (+)= A[m,k] * B[n,k]^T.
pub fn gemm_bt<T: Scalar>(
    a: &[T],
    b: &[T],
    c: &mut [T],
    m: usize,
    k: usize,
    n: usize,
    accumulate: bool,
) {
    let av = ArrayView2::from_shape((m, k), a).unwrap();
    let bv = ArrayView2::from_shape((n, k), b).unwrap();
    let mut cv = ArrayViewMut2::from_shape((m, n), c).unwrap();
    let beta = if accumulate { T::one() } else { T::zero() };
    general_mat_mul(T::one(), &av, &bv.t(), beta, &mut cv);
}

/// Expand a `[c_in, h, w]` input into the `[c_in*9, h_out*w_out]` patch
/// matrix for a 3x3 kernel with padding 1.
pub fn im2col<T: Scalar>(
    input: &[T],
    col: &mut [T],
    c_in: usize,
    h: usize,
    w: usize,
    h_out: usize,
    w_out: usize,
    stride: usize,
) {
    let s_out = h_out * w_out;
    debug_assert_eq!(col.len(), c_in * 9 * s_out);
    for c in 0..c_in {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut col[(c * 9 + ky * 3 + kx) * s_out..][..s_out];
                for oy in 0..h_out {
                    let iy = (oy * stride + ky) as isize - 1;
                    let dst = &mut row[oy * w_out..][..w_out];
                    if iy < 0 || iy >= h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src_row = &plane[iy as usize * w..][..w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - 1;
                        *d = if ix < 0 || ix >= w as isize {
                            T::zero()
                        } else {
                            src_row[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Scatter-add the patch-matrix gradient back onto the input gradient.
pub fn col2im_add<T: Scalar>(
    dcol: &[T],
    dinput: &mut [T],
    c_in: usize,
    h: usize,
    w: usize,
    h_out: usize,
    w_out: usize,
    stride: usize,
) {
    let s_out = h_out * w_out;
    for c in 0..c_in {
        let dplane = &mut dinput[c * h * w..(c + 1) * h * w];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &dcol[(c * 9 + ky * 3 + kx) * s_out..][..s_out];
                for oy in 0..h_out {
                    let iy = (oy * stride + ky) as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst_row = &mut dplane[iy as usize * w..][..w];
                    let src = &row[oy * w_out..][..w_out];
                    for (ox, &v) in src.iter().enumerate() {
                        let ix = (ox * stride + kx) as isize - 1;
                        if ix >= 0 && ix < w as isize {
                            dst_row[ix as usize] = dst_row[ix as usize] + v;
                        }
                    }
                }
            }
        }
    }
}

pub fn add_bias_rows<T: Scalar>(out: &mut [T], bias: &[T], cols: usize) {
    for (r, &b) in bias.iter().enumerate() {
        for v in &mut out[r * cols..(r + 1) * cols] {
            *v = *v + b;
        }
    }
}

pub fn relu_inplace<T: Scalar>(x: &mut [T]) {
    for v in x.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// dPre = dPost masked by the stored post-activation.
pub fn relu_backward_inplace<T: Scalar>(d: &mut [T], post: &[T]) {
    for (dv, &p) in d.iter_mut().zip(post.iter()) {
        if p <= T::zero() {
            *dv = T::zero();
        }
    }
}

/// y = W x + b for row-major W[m,n], x[n].
pub fn linear<T: Scalar>(w: &[T], b: &[T], x: &[T], y: &mut [T]) {
    let n = x.len();
    for (r, yr) in y.iter_mut().enumerate() {
        let row = &w[r * n..(r + 1) * n];
        let mut acc = T::zero();
        for (wv, xv) in row.iter().zip(x.iter()) {
            acc = acc + *wv * *xv;
        }
        *yr = acc + b[r];
    }
}

/// Backward of `linear`: accumulates dW, db and optionally dx.
pub fn linear_backward<T: Scalar>(
    w: &[T],
    x: &[T],
    dy: &[T],
    dw: &mut [T],
    db: &mut [T],
    dx: Option<&mut [T]>,
) {
    let n = x.len();
    for (r, &g) in dy.iter().enumerate() {
        db[r] = db[r] + g;
        let drow = &mut dw[r * n..(r + 1) * n];
        for (dv, &xv) in drow.iter_mut().zip(x.iter()) {
            *dv = *dv + g * xv;
        }
    }
    if let Some(dx) = dx {
        for (c, dxv) in dx.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (r, &g) in dy.iter().enumerate() {
                acc = acc + g * w[r * n + c];
            }
            *dxv = *dxv + acc;
        }
    }
}

/// Row-wise softmax over an `[rows, cols]` matrix, in place.
pub fn softmax_rows_inplace<T: Scalar>(x: &mut [T], rows: usize, cols: usize) {
    for r in 0..rows {
        let row = &mut x[r * cols..(r + 1) * cols];
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
}

/// Backward of row softmax: dS = A o (dA - rowdot(dA, A)).
pub fn softmax_rows_backward<T: Scalar>(
    a: &[T],
    da: &[T],
    ds: &mut [T],
    rows: usize,
    cols: usize,
) {
    for r in 0..rows {
        let ar = &a[r * cols..(r + 1) * cols];
        let dar = &da[r * cols..(r + 1) * cols];
        let mut dot = T::zero();
        for (x, y) in ar.iter().zip(dar.iter()) {
            dot = dot + *x * *y;
        }
        let dsr = &mut ds[r * cols..(r + 1) * cols];
        for c in 0..cols {
            dsr[c] = ar[c] * (dar[c] - dot);
        }
    }
}
