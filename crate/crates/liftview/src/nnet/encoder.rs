//! Feature extractor: 12 conv layers (3x3, fixed stride pattern, ReLU), one
//! single-head self-attention layer over the final spatial grid with learned
//! positional encoding, then projection to the feature dimension with layer
//! normalization and a tanh bound.
//!
//! Forward passes fill an [`EncoderTape`]; the backward pass consumes it and
//! accumulates parameter gradients into a flat buffer. Per-sample tapes and
//! scratch are reused across calls to keep allocation out of the hot loop.

use super::arch::{ArchConfig, CONV_STRIDES};
use super::ops::{
    add_bias_rows, col2im_add, gemm, gemm_at, gemm_bt, im2col, linear, linear_backward,
    relu_backward_inplace, relu_inplace, softmax_rows_backward, softmax_rows_inplace,
};
use super::params::Params;
use super::scalar::Scalar;
use crate::error::{LiftError, Result};
use crate::raster::Image;

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub struct ConvDims {
    pub c_in: usize,
    pub side_in: usize,
    pub side_out: usize,
    pub stride: usize,
}

pub fn conv_dims(arch: &ArchConfig) -> [ConvDims; 12] {
    let sides = arch.conv_sides();
    let mut out = [ConvDims { c_in: 0, side_in: 0, side_out: 0, stride: 1 }; 12];
    for i in 0..12 {
        out[i] = ConvDims {
            c_in: if i == 0 { arch.input_channels() } else { arch.channels },
            side_in: sides[i],
            side_out: sides[i + 1],
            stride: CONV_STRIDES[i],
        };
    }
    out
}

/// Intermediate activations of one encoder forward pass.
#[derive(Debug, Clone)]
pub struct EncoderTape<T: Scalar = f32> {
    /// `acts[0]` is the input; `acts[i+1]` the post-ReLU output of conv `i`.
    pub acts: Vec<Vec<T>>,
    pub x1: Vec<T>,
    pub q: Vec<T>,
    pub k: Vec<T>,
    pub v: Vec<T>,
    /// Row-softmax attention matrix, `[S, S]`.
    pub attn: Vec<T>,
    /// `v * attn^T`, `[ch, S]`.
    pub ao: Vec<T>,
    /// Post-residual attention output, flattened projection input.
    pub y: Vec<T>,
    pub p: Vec<T>,
    pub xhat: Vec<T>,
    pub inv_std: T,
    /// Encoder output, `tanh`-bounded, length `feature_dim`.
    pub feat: Vec<T>,
}

impl<T: Scalar> EncoderTape<T> {
    pub fn new(arch: &ArchConfig) -> Self {
        let dims = conv_dims(arch);
        let z = T::zero();
        let mut acts = Vec::with_capacity(13);
        acts.push(vec![z; arch.input_channels() * arch.conv_sides()[0].pow(2)]);
        for d in dims.iter() {
            acts.push(vec![z; arch.channels * d.side_out * d.side_out]);
        }
        let s = arch.grid_len();
        let ch = arch.channels;
        EncoderTape {
            acts,
            x1: vec![z; ch * s],
            q: vec![z; ch * s],
            k: vec![z; ch * s],
            v: vec![z; ch * s],
            attn: vec![z; s * s],
            ao: vec![z; ch * s],
            y: vec![z; ch * s],
            p: vec![z; arch.feature_dim],
            xhat: vec![z; arch.feature_dim],
            inv_std: z,
            feat: vec![z; arch.feature_dim],
        }
    }
}

/// Reusable scratch for forward/backward passes.
#[derive(Debug, Clone)]
pub struct EncScratch<T: Scalar = f32> {
    col: Vec<T>,
    dcol: Vec<T>,
    dbuf_a: Vec<T>,
    dbuf_b: Vec<T>,
    dx1: Vec<T>,
    dq: Vec<T>,
    dk: Vec<T>,
    dv: Vec<T>,
    da: Vec<T>,
    ds: Vec<T>,
    dao: Vec<T>,
}

impl<T: Scalar> EncScratch<T> {
    pub fn new(arch: &ArchConfig) -> Self {
        let dims = conv_dims(arch);
        let max_col = dims
            .iter()
            .map(|d| d.c_in * 9 * d.side_out * d.side_out)
            .max()
            .unwrap();
        let max_act = dims
            .iter()
            .map(|d| (d.c_in * d.side_in * d.side_in).max(arch.channels * d.side_out * d.side_out))
            .max()
            .unwrap();
        let s = arch.grid_len();
        let ch = arch.channels;
        let z = T::zero();
        EncScratch {
            col: vec![z; max_col],
            dcol: vec![z; max_col],
            dbuf_a: vec![z; max_act],
            dbuf_b: vec![z; max_act],
            dx1: vec![z; ch * s],
            dq: vec![z; ch * s],
            dk: vec![z; ch * s],
            dv: vec![z; ch * s],
            da: vec![z; s * s],
            ds: vec![z; s * s],
            dao: vec![z; ch * s],
        }
    }
}

/// Channel-concatenate camera views into the CHW input buffer; egocentric
/// first, then third-person views in index order, is the caller's contract.
pub fn build_input<T: Scalar>(arch: &ArchConfig, images: &[&Image]) -> Result<Vec<T>> {
    let side = arch.conv_sides()[0];
    if images.len() != arch.views {
        return Err(LiftError::Shape(format!(
            "expected {} camera views, got {}",
            arch.views,
            images.len()
        )));
    }
    let mut input = vec![T::zero(); arch.input_channels() * side * side];
    for (vi, img) in images.iter().enumerate() {
        if img.width != side || img.height != side {
            return Err(LiftError::Shape(format!(
                "view {}: expected {side}x{side}, got {}x{}",
                vi, img.width, img.height
            )));
        }
        for c in 0..3 {
            let plane = &mut input[(vi * 3 + c) * side * side..][..side * side];
            for (pi, pv) in plane.iter_mut().enumerate() {
                *pv = T::from_f32(img.data[pi * 3 + c]);
            }
        }
    }
    Ok(input)
}

/// Attention sublayer on `x` (`[ch, S]` column-per-position); adds the
/// learned positional encoding when configured, then a residual connection
/// around the projected single-head attention.
pub fn attention_forward<T: Scalar>(params: &Params<T>, x: &[T], tape: &mut EncoderTape<T>) {
    let arch = params.arch();
    let ch = arch.channels;
    let s = arch.grid_len();
    tape.x1.copy_from_slice(x);
    if arch.positional_encoding {
        for (xv, pv) in tape.x1.iter_mut().zip(params.seg("attn.pos").iter()) {
            *xv = *xv + *pv;
        }
    }
    gemm(params.seg("attn.wq"), &tape.x1, &mut tape.q, ch, ch, s, false);
    add_bias_rows(&mut tape.q, params.seg("attn.bq"), s);
    gemm(params.seg("attn.wk"), &tape.x1, &mut tape.k, ch, ch, s, false);
    add_bias_rows(&mut tape.k, params.seg("attn.bk"), s);
    gemm(params.seg("attn.wv"), &tape.x1, &mut tape.v, ch, ch, s, false);
    add_bias_rows(&mut tape.v, params.seg("attn.bv"), s);

    gemm_at(&tape.q, &tape.k, &mut tape.attn, s, ch, s, false);
    let scale = T::one() / T::from_f64(ch as f64).sqrt();
    for v in tape.attn.iter_mut() {
        *v = *v * scale;
    }
    softmax_rows_inplace(&mut tape.attn, s, s);

    gemm_bt(&tape.v, &tape.attn, &mut tape.ao, ch, s, s, false);
    gemm(params.seg("attn.wo"), &tape.ao, &mut tape.y, ch, ch, s, false);
    add_bias_rows(&mut tape.y, params.seg("attn.bo"), s);
    for (yv, xv) in tape.y.iter_mut().zip(tape.x1.iter()) {
        *yv = *yv + *xv;
    }
}

fn attention_backward<T: Scalar>(params: &Params<T>, tape: &EncoderTape<T>, dy: &[T], grad: &mut [T], scratch: &mut EncScratch<T>) {
    let arch = params.arch();
    let ch = arch.channels;
    let s = arch.grid_len();
    let layout = params.layout.clone();
    let r = |name: &str| layout.range(name);

    // Output projection and residual.
    gemm_bt(dy, &tape.ao, &mut scratch.dq[..ch * ch], ch, s, ch, false);
    for (g, d) in grad[r("attn.wo")].iter_mut().zip(scratch.dq[..ch * ch].iter()) {
        *g = *g + *d;
    }
    for row in 0..ch {
        let mut sum = T::zero();
        for v in &dy[row * s..(row + 1) * s] {
            sum = sum + *v;
        }
        grad[r("attn.bo")][row] = grad[r("attn.bo")][row] + sum;
    }
    gemm_at(params.seg("attn.wo"), dy, &mut scratch.dao, ch, ch, s, false);
    scratch.dx1.copy_from_slice(dy);

    // ao = v * A^T.
    gemm(&scratch.dao, &tape.attn, &mut scratch.dv, ch, s, s, false);
    gemm_at(&scratch.dao, &tape.v, &mut scratch.da, s, ch, s, false);
    softmax_rows_backward(&tape.attn, &scratch.da, &mut scratch.ds, s, s);
    let scale = T::one() / T::from_f64(ch as f64).sqrt();

    // scores = q^T k * scale.
    gemm_bt(&tape.k, &scratch.ds, &mut scratch.dq, ch, s, s, false);
    for v in scratch.dq.iter_mut() {
        *v = *v * scale;
    }
    gemm(&tape.q, &scratch.ds, &mut scratch.dk, ch, s, s, false);
    for v in scratch.dk.iter_mut() {
        *v = *v * scale;
    }

    // Projection weights and the three input paths.
    for (dmat, wname, bname) in [
        (&scratch.dq, "attn.wq", "attn.bq"),
        (&scratch.dk, "attn.wk", "attn.bk"),
        (&scratch.dv, "attn.wv", "attn.bv"),
    ] {
        gemm_bt(dmat, &tape.x1, &mut scratch.da[..ch * ch], ch, s, ch, false);
        for (g, d) in grad[r(wname)].iter_mut().zip(scratch.da[..ch * ch].iter()) {
            *g = *g + *d;
        }
        for row in 0..ch {
            let mut sum = T::zero();
            for v in &dmat[row * s..(row + 1) * s] {
                sum = sum + *v;
            }
            grad[r(bname)][row] = grad[r(bname)][row] + sum;
        }
        gemm_at(params.seg(wname), dmat, &mut scratch.dx1, ch, ch, s, true);
    }
    if arch.positional_encoding {
        for (g, d) in grad[r("attn.pos")].iter_mut().zip(scratch.dx1.iter()) {
            *g = *g + *d;
        }
    }
}

/// Full encoder forward; the feature lands in `tape.feat`.
pub fn encoder_forward<T: Scalar>(params: &Params<T>, input: &[T], tape: &mut EncoderTape<T>, scratch: &mut EncScratch<T>) {
    let arch = params.arch();
    debug_assert_eq!(input.len(), tape.acts[0].len());
    tape.acts[0].copy_from_slice(input);
    let dims = conv_dims(arch);
    let ch = arch.channels;
    for (i, d) in dims.iter().enumerate() {
        let s_out = d.side_out * d.side_out;
        let k = d.c_in * 9;
        let col = &mut scratch.col[..k * s_out];
        let (src, dst) = {
            let (a, b) = tape.acts.split_at_mut(i + 1);
            (&a[i], &mut b[0])
        };
        im2col(src, col, d.c_in, d.side_in, d.side_in, d.side_out, d.side_out, d.stride);
        gemm(params.seg(&format!("conv{i}.w")), col, dst, ch, k, s_out, false);
        add_bias_rows(dst, params.seg(&format!("conv{i}.b")), s_out);
        relu_inplace(dst);
    }

    if arch.attention {
        let x = tape.acts[12].clone();
        attention_forward(params, &x, tape);
    } else {
        tape.x1.copy_from_slice(&tape.acts[12]);
        tape.y.copy_from_slice(&tape.acts[12]);
    }

    linear(params.seg("proj.w"), params.seg("proj.b"), &tape.y, &mut tape.p);

    let z = arch.feature_dim;
    let zt = T::from_f64(z as f64);
    let mut mean = T::zero();
    for v in tape.p.iter() {
        mean = mean + *v;
    }
    mean = mean / zt;
    let mut var = T::zero();
    for v in tape.p.iter() {
        var = var + (*v - mean) * (*v - mean);
    }
    var = var / zt;
    tape.inv_std = T::one() / (var + T::from_f64(LN_EPS)).sqrt();
    let gamma = params.seg("ln.gamma");
    let beta = params.seg("ln.beta");
    for i in 0..z {
        tape.xhat[i] = (tape.p[i] - mean) * tape.inv_std;
        tape.feat[i] = (gamma[i] * tape.xhat[i] + beta[i]).tanh();
    }
}

/// Backpropagate `dfeat` through the encoder, accumulating parameter
/// gradients; image-input gradients are not needed and not produced.
pub fn encoder_backward<T: Scalar>(
    params: &Params<T>,
    tape: &EncoderTape<T>,
    dfeat: &[T],
    grad: &mut [T],
    scratch: &mut EncScratch<T>,
) {
    let arch = params.arch();
    let z = arch.feature_dim;
    let layout = params.layout.clone();
    let r = |name: &str| layout.range(name);

    // tanh + layer norm.
    let gamma = params.seg("ln.gamma");
    let mut dxhat = vec![T::zero(); z];
    let mut dln_buf = vec![T::zero(); z];
    for i in 0..z {
        let dln = dfeat[i] * (T::one() - tape.feat[i] * tape.feat[i]);
        dln_buf[i] = dln;
        dxhat[i] = dln * gamma[i];
    }
    for i in 0..z {
        grad[r("ln.gamma")][i] = grad[r("ln.gamma")][i] + dln_buf[i] * tape.xhat[i];
        grad[r("ln.beta")][i] = grad[r("ln.beta")][i] + dln_buf[i];
    }
    let mut sum1 = T::zero();
    let mut sum2 = T::zero();
    for i in 0..z {
        sum1 = sum1 + dxhat[i];
        sum2 = sum2 + dxhat[i] * tape.xhat[i];
    }
    let mut dp = vec![T::zero(); z];
    let n = T::from_f64(z as f64);
    for i in 0..z {
        dp[i] = tape.inv_std / n * (n * dxhat[i] - sum1 - tape.xhat[i] * sum2);
    }

    // Projection.
    let ch = arch.channels;
    let s = arch.grid_len();
    let mut dy = vec![T::zero(); ch * s];
    {
        let (gw, gb) = {
            let rw = r("proj.w");
            let rb = r("proj.b");
            let (lo, hi) = if rw.start < rb.start {
                let (a, b) = grad.split_at_mut(rb.start);
                (&mut a[rw.start..rw.end], &mut b[..rb.end - rb.start])
            } else {
                unreachable!("proj.w precedes proj.b in layout");
            };
            (lo, hi)
        };
        linear_backward(params.seg("proj.w"), &tape.y, &dp, gw, gb, Some(&mut dy));
    }

    // Attention (or passthrough).
    let mut dconv = vec![T::zero(); ch * s];
    if arch.attention {
        attention_backward(params, tape, &dy, grad, scratch);
        dconv.copy_from_slice(&scratch.dx1);
    } else {
        dconv.copy_from_slice(&dy);
    }

    // Conv stack, deepest first.
    let dims = conv_dims(arch);
    scratch.dbuf_a[..dconv.len()].copy_from_slice(&dconv);
    for i in (0..12).rev() {
        let d = dims[i];
        let s_out = d.side_out * d.side_out;
        let k = d.c_in * 9;
        let dout = &mut scratch.dbuf_a[..ch * s_out];
        relu_backward_inplace(dout, &tape.acts[i + 1]);

        let col = &mut scratch.col[..k * s_out];
        im2col(
            &tape.acts[i],
            col,
            d.c_in,
            d.side_in,
            d.side_in,
            d.side_out,
            d.side_out,
            d.stride,
        );
        gemm_bt(dout, col, &mut scratch.dcol[..ch * k], ch, s_out, k, false);
        {
            let gw = &mut grad[r(&format!("conv{i}.w"))];
            for (g, v) in gw.iter_mut().zip(scratch.dcol[..ch * k].iter()) {
                *g = *g + *v;
            }
            let gb = &mut grad[r(&format!("conv{i}.b"))];
            for (row, g) in gb.iter_mut().enumerate() {
                let mut sum = T::zero();
                for v in &dout[row * s_out..(row + 1) * s_out] {
                    sum = sum + *v;
                }
                *g = *g + sum;
            }
        }
        if i > 0 {
            let dcol = &mut scratch.dcol[..k * s_out];
            gemm_at(params.seg(&format!("conv{i}.w")), dout, dcol, k, ch, s_out, false);
            let din_len = d.c_in * d.side_in * d.side_in;
            let din = &mut scratch.dbuf_b[..din_len];
            din.fill(T::zero());
            col2im_add(dcol, din, d.c_in, d.side_in, d.side_in, d.side_out, d.side_out, d.stride);
            scratch.dbuf_a[..din_len].copy_from_slice(din);
        }
    }
}

/// One-call convenience: encode a list of camera views.
pub fn encode<T: Scalar>(
    params: &Params<T>,
    images: &[&Image],
    tape: &mut EncoderTape<T>,
    scratch: &mut EncScratch<T>,
) -> Result<Vec<T>> {
    let input = build_input(params.arch(), images)?;
    encoder_forward(params, &input, tape, scratch);
    Ok(tape.feat.clone())
}
