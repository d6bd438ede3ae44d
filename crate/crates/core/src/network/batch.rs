//! Batched jet evaluation with a hand-derived reverse pass.
//!
//! Activations for `n` points are stored as `(units, channels * n)` matrices
//! where each channel block holds one Taylor coefficient: the value, the
//! first derivative along each input axis, then one block per requested
//! second-derivative pair. Affine maps act on all channels with one matrix
//! product (the bias only touches the value block); `tanh` and the encoder
//! mix propagate the coefficients exactly. [`backward`] is the adjoint of
//! that propagation and accumulates parameter gradients given adjoints of
//! the output coefficients.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis};

use super::{Affine, ArchKind, NetworkDef};
use crate::autodiff::{validate_pairs, Jet2};
use crate::error::{Error, Result};

/// Which Taylor coefficients to carry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JetRequest {
    pub first: bool,
    pub pairs: Vec<(usize, usize)>,
}

impl JetRequest {
    pub fn value_only() -> Self {
        Self::default()
    }

    pub fn first_order() -> Self {
        Self {
            first: true,
            pairs: Vec::new(),
        }
    }

    pub fn second_order(pairs: &[(usize, usize)]) -> Self {
        Self {
            first: true,
            pairs: pairs.to_vec(),
        }
    }

    fn first_dim(&self, dim: usize) -> usize {
        if self.first {
            dim
        } else {
            0
        }
    }

    pub fn channels(&self, dim: usize) -> usize {
        1 + self.first_dim(dim) + self.pairs.len()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !self.first && !self.pairs.is_empty() {
            return Err(Error::contract(
                "second derivatives require first derivatives",
            ));
        }
        validate_pairs(&self.pairs, dim)
    }
}

/// Output coefficients for a batch of points: `(output_dim, channels * n)`.
#[derive(Debug, Clone)]
pub struct BatchJets {
    pub n: usize,
    pub dim: usize,
    pub request: JetRequest,
    pub out: Array2<f64>,
}

impl BatchJets {
    pub fn channels(&self) -> usize {
        self.request.channels(self.dim)
    }

    /// Column of coefficient `channel` for point `p`.
    pub fn column(&self, channel: usize, p: usize) -> usize {
        channel * self.n + p
    }

    pub fn value(&self, output: usize, p: usize) -> f64 {
        self.out[[output, p]]
    }

    pub fn grad(&self, output: usize, axis: usize, p: usize) -> f64 {
        debug_assert!(self.request.first);
        self.out[[output, self.column(1 + axis, p)]]
    }

    pub fn second(&self, output: usize, pair: usize, p: usize) -> f64 {
        let c = 1 + self.request.first_dim(self.dim) + pair;
        self.out[[output, self.column(c, p)]]
    }

    /// Coefficients of one output at one point as a [`Jet2`]. Gradient
    /// entries are zero when first derivatives were not requested.
    pub fn jet(&self, output: usize, p: usize) -> Jet2 {
        let grad = (0..self.dim)
            .map(|i| {
                if self.request.first {
                    self.grad(output, i, p)
                } else {
                    0.0
                }
            })
            .collect();
        let second = (0..self.request.pairs.len())
            .map(|k| self.second(output, k, p))
            .collect();
        Jet2 {
            value: self.value(output, p),
            grad,
            second,
            pairs: self.request.pairs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Chan<'a> {
    n: usize,
    first: usize,
    pairs: &'a [(usize, usize)],
}

impl Chan<'_> {
    fn grad(&self, i: usize) -> usize {
        (1 + i) * self.n
    }
    fn pair(&self, k: usize) -> usize {
        (1 + self.first + k) * self.n
    }
    fn width(&self) -> usize {
        (1 + self.first + self.pairs.len()) * self.n
    }
}

#[derive(Debug, Clone)]
struct Encoders {
    z_u: Array2<f64>,
    u: Array2<f64>,
    z_v: Array2<f64>,
    v: Array2<f64>,
    diff: Array2<f64>,
}

#[derive(Debug, Clone)]
struct Layer {
    z: Array2<f64>,
    h: Array2<f64>,
    /// Post-mix activations (improved networks only; plain uses `h`).
    mixed: Option<Array2<f64>>,
}

impl Layer {
    fn output(&self) -> &Array2<f64> {
        self.mixed.as_ref().unwrap_or(&self.h)
    }
}

/// Intermediate coefficients kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct Trace {
    n: usize,
    request: JetRequest,
    input: Array2<f64>,
    encoders: Option<Encoders>,
    layers: Vec<Layer>,
}

fn weight_view<'a>(a: &Affine, params: &'a [f64]) -> ArrayView2<'a, f64> {
    ArrayView2::from_shape((a.rows, a.cols), a.weight(params)).expect("weight block shape")
}

fn affine(a: &Affine, params: &[f64], input: &Array2<f64>, n: usize) -> Array2<f64> {
    let mut z = weight_view(a, params).dot(input);
    let b = a.bias(params);
    for (mut row, &b) in z.axis_iter_mut(Axis(0)).zip(b) {
        for v in row.iter_mut().take(n) {
            *v += b;
        }
    }
    z
}

fn tanh_forward(z: &Array2<f64>, ch: Chan<'_>) -> Array2<f64> {
    let mut h = Array2::zeros(z.raw_dim());
    let width = ch.width();
    let zs = z.as_slice().expect("standard layout");
    let hs = h.as_slice_mut().expect("standard layout");
    for (zr, hr) in zs.chunks_exact(width).zip(hs.chunks_exact_mut(width)) {
        for p in 0..ch.n {
            let h0 = zr[p].tanh();
            let t1 = 1.0 - h0 * h0;
            let t2 = -2.0 * h0 * t1;
            hr[p] = h0;
            for i in 0..ch.first {
                let c = ch.grad(i) + p;
                hr[c] = t1 * zr[c];
            }
            for (k, &(a, b)) in ch.pairs.iter().enumerate() {
                let c = ch.pair(k) + p;
                hr[c] = t1 * zr[c] + t2 * (zr[ch.grad(a) + p] * zr[ch.grad(b) + p]);
            }
        }
    }
    h
}

fn tanh_backward(
    hbar: &Array2<f64>,
    z: &Array2<f64>,
    h: &Array2<f64>,
    ch: Chan<'_>,
) -> Array2<f64> {
    let mut zbar = Array2::zeros(z.raw_dim());
    let width = ch.width();
    let rows = hbar
        .as_slice()
        .unwrap()
        .chunks_exact(width)
        .zip(z.as_slice().unwrap().chunks_exact(width))
        .zip(h.as_slice().unwrap().chunks_exact(width))
        .zip(zbar.as_slice_mut().unwrap().chunks_exact_mut(width));
    for (((hb, zr), hr), zb) in rows {
        for p in 0..ch.n {
            let h0 = hr[p];
            let t1 = 1.0 - h0 * h0;
            let t2 = -2.0 * h0 * t1;
            let t3 = -2.0 * t1 * t1 + 4.0 * h0 * h0 * t1;
            let mut acc0 = hb[p] * t1;
            for i in 0..ch.first {
                let c = ch.grad(i) + p;
                acc0 += hb[c] * t2 * zr[c];
                zb[c] += hb[c] * t1;
            }
            for (k, &(a, b)) in ch.pairs.iter().enumerate() {
                let c = ch.pair(k) + p;
                let (ca, cb) = (ch.grad(a) + p, ch.grad(b) + p);
                let g = hb[c];
                acc0 += g * (t2 * zr[c] + t3 * (zr[ca] * zr[cb]));
                zb[ca] += g * t2 * zr[cb];
                zb[cb] += g * t2 * zr[ca];
                zb[c] = g * t1;
            }
            zb[p] = acc0;
        }
    }
    zbar
}

/// `u + h * d` as jets.
fn mix_forward(h: &Array2<f64>, u: &Array2<f64>, d: &Array2<f64>, ch: Chan<'_>) -> Array2<f64> {
    let mut out = u.clone();
    let width = ch.width();
    let rows = h
        .as_slice()
        .unwrap()
        .chunks_exact(width)
        .zip(d.as_slice().unwrap().chunks_exact(width))
        .zip(out.as_slice_mut().unwrap().chunks_exact_mut(width));
    for ((hr, dr), or) in rows {
        for p in 0..ch.n {
            let (h0, d0) = (hr[p], dr[p]);
            or[p] += h0 * d0;
            for i in 0..ch.first {
                let c = ch.grad(i) + p;
                or[c] += hr[c] * d0 + h0 * dr[c];
            }
            for (k, &(a, b)) in ch.pairs.iter().enumerate() {
                let c = ch.pair(k) + p;
                let (ca, cb) = (ch.grad(a) + p, ch.grad(b) + p);
                or[c] += hr[c] * d0 + hr[ca] * dr[cb] + hr[cb] * dr[ca] + h0 * dr[c];
            }
        }
    }
    out
}

/// Adjoint of the product part of [`mix_forward`]: returns `(hbar, dbar)`.
fn mix_backward(
    pbar: &Array2<f64>,
    h: &Array2<f64>,
    d: &Array2<f64>,
    ch: Chan<'_>,
) -> (Array2<f64>, Array2<f64>) {
    let mut hbar = Array2::zeros(h.raw_dim());
    let mut dbar = Array2::zeros(h.raw_dim());
    let width = ch.width();
    let rows = pbar
        .as_slice()
        .unwrap()
        .chunks_exact(width)
        .zip(h.as_slice().unwrap().chunks_exact(width))
        .zip(d.as_slice().unwrap().chunks_exact(width))
        .zip(hbar.as_slice_mut().unwrap().chunks_exact_mut(width))
        .zip(dbar.as_slice_mut().unwrap().chunks_exact_mut(width));
    for ((((pb, hr), dr), hb), db) in rows {
        for p in 0..ch.n {
            let (h0, d0) = (hr[p], dr[p]);
            let mut hb0 = pb[p] * d0;
            let mut db0 = pb[p] * h0;
            for i in 0..ch.first {
                let c = ch.grad(i) + p;
                hb0 += pb[c] * dr[c];
                db0 += pb[c] * hr[c];
                hb[c] += pb[c] * d0;
                db[c] += pb[c] * h0;
            }
            for (k, &(a, b)) in ch.pairs.iter().enumerate() {
                let c = ch.pair(k) + p;
                let (ca, cb) = (ch.grad(a) + p, ch.grad(b) + p);
                let g = pb[c];
                hb0 += g * dr[c];
                db0 += g * hr[c];
                hb[ca] += g * dr[cb];
                hb[cb] += g * dr[ca];
                db[ca] += g * hr[cb];
                db[cb] += g * hr[ca];
                hb[c] = g * d0;
                db[c] = g * h0;
            }
            hb[p] = hb0;
            db[p] = db0;
        }
    }
    (hbar, dbar)
}

/// Seeds the input coefficients: coordinates in the value block, unit
/// vectors in the first-derivative blocks, zeros elsewhere.
fn input_jets(points: &[f64], dim: usize, ch: Chan<'_>) -> Array2<f64> {
    let mut x = Array2::zeros((dim, ch.width()));
    for p in 0..ch.n {
        for i in 0..dim {
            x[[i, p]] = points[p * dim + i];
        }
        for i in 0..ch.first {
            x[[i, ch.grad(i) + p]] = 1.0;
        }
    }
    x
}

/// Evaluates the network and the requested input derivatives at `n` points
/// given row-major as `points[p * input_dim + i]`.
pub fn forward(
    def: &NetworkDef,
    params: &[f64],
    points: &[f64],
    request: &JetRequest,
) -> Result<(BatchJets, Trace)> {
    let dim = def.input_dim;
    request.validate(dim)?;
    if params.len() != def.param_count() {
        return Err(Error::contract(format!(
            "parameter vector has {} slots, network expects {}",
            params.len(),
            def.param_count()
        )));
    }
    if points.len() % dim != 0 {
        return Err(Error::contract(
            "point buffer length is not a multiple of the input dimension",
        ));
    }
    let n = points.len() / dim;
    let ch = Chan {
        n,
        first: request.first_dim(dim),
        pairs: &request.pairs,
    };
    let off = def.offsets();
    let input = input_jets(points, dim, ch);
    let encoders = off.encoders.map(|(eu, ev)| {
        let z_u = affine(&eu, params, &input, n);
        let u = tanh_forward(&z_u, ch);
        let z_v = affine(&ev, params, &input, n);
        let v = tanh_forward(&z_v, ch);
        let diff = &v - &u;
        Encoders {
            z_u,
            u,
            z_v,
            v,
            diff,
        }
    });
    let mut layers: Vec<Layer> = Vec::with_capacity(off.hidden.len());
    for a in &off.hidden {
        let prev = layers.last().map(Layer::output).unwrap_or(&input);
        let z = affine(a, params, prev, n);
        let h = tanh_forward(&z, ch);
        let mixed = encoders
            .as_ref()
            .map(|e| mix_forward(&h, &e.u, &e.diff, ch));
        layers.push(Layer { z, h, mixed });
    }
    let last = layers.last().expect("at least one hidden layer").output();
    let out = affine(&off.output, params, last, n);
    let jets = BatchJets {
        n,
        dim,
        request: request.clone(),
        out,
    };
    let trace = Trace {
        n,
        request: request.clone(),
        input,
        encoders,
        layers,
    };
    Ok((jets, trace))
}

/// Accumulates `dW += zbar · inputᵀ` and the value-block row sums into `db`.
fn accumulate_affine(
    a: &Affine,
    zbar: &Array2<f64>,
    input: &Array2<f64>,
    n: usize,
    grad: &mut [f64],
) {
    {
        let mut gw = ArrayViewMut2::from_shape(
            (a.rows, a.cols),
            &mut grad[a.weight..a.weight + a.rows * a.cols],
        )
        .expect("weight block shape");
        general_mat_mul(1.0, zbar, &input.t(), 1.0, &mut gw);
    }
    for (r, row) in zbar.axis_iter(Axis(0)).enumerate() {
        grad[a.bias + r] += row.iter().take(n).sum::<f64>();
    }
}

/// Reverse pass: given adjoints of the output coefficients
/// (`(output_dim, channels * n)`), adds the parameter gradient into `grad`.
pub fn backward(
    def: &NetworkDef,
    params: &[f64],
    trace: &Trace,
    out_adjoint: &Array2<f64>,
    grad: &mut [f64],
) -> Result<()> {
    let n = trace.n;
    let ch = Chan {
        n,
        first: trace.request.first_dim(def.input_dim),
        pairs: &trace.request.pairs,
    };
    if out_adjoint.dim() != (def.output_dim, ch.width()) {
        return Err(Error::contract(format!(
            "output adjoint has shape {:?}, expected {:?}",
            out_adjoint.dim(),
            (def.output_dim, ch.width())
        )));
    }
    if grad.len() < def.param_count() {
        return Err(Error::contract(
            "gradient buffer shorter than the parameter vector",
        ));
    }
    let off = def.offsets();
    let last = trace.layers.last().expect("hidden layer").output();
    accumulate_affine(&off.output, out_adjoint, last, n, grad);
    let mut abar = weight_view(&off.output, params).t().dot(out_adjoint);

    let mut enc_acc = trace.encoders.as_ref().map(|_| {
        (
            Array2::<f64>::zeros(abar.raw_dim()),
            Array2::<f64>::zeros(abar.raw_dim()),
        )
    });

    for (l, a) in off.hidden.iter().enumerate().rev() {
        let layer = &trace.layers[l];
        let hbar = match (&trace.encoders, enc_acc.as_mut()) {
            (Some(enc), Some((ubar, dbar_acc))) => {
                *ubar += &abar;
                let (hbar, dbar) = mix_backward(&abar, &layer.h, &enc.diff, ch);
                *dbar_acc += &dbar;
                hbar
            }
            _ => abar,
        };
        let zbar = tanh_backward(&hbar, &layer.z, &layer.h, ch);
        let prev = if l == 0 {
            &trace.input
        } else {
            trace.layers[l - 1].output()
        };
        accumulate_affine(a, &zbar, prev, n, grad);
        abar = if l == 0 {
            Array2::zeros((0, 0))
        } else {
            weight_view(a, params).t().dot(&zbar)
        };
    }

    if let (Some(enc), Some((mut ubar, dbar)), Some((eu, ev))) =
        (&trace.encoders, enc_acc, off.encoders)
    {
        ubar -= &dbar;
        let zbar_u = tanh_backward(&ubar, &enc.z_u, &enc.u, ch);
        accumulate_affine(&eu, &zbar_u, &trace.input, n, grad);
        let zbar_v = tanh_backward(&dbar, &enc.z_v, &enc.v, ch);
        accumulate_affine(&ev, &zbar_v, &trace.input, n, grad);
    }
    debug_assert!(def.kind == ArchKind::Improved || trace.encoders.is_none());
    Ok(())
}

/// Plain values of every output at many points, evaluated in chunks.
pub fn values(def: &NetworkDef, params: &[f64], points: &[f64]) -> Result<Array2<f64>> {
    const CHUNK: usize = 2048;
    let dim = def.input_dim;
    let n = points.len() / dim;
    let mut out = Array2::zeros((def.output_dim, n));
    for (c, chunk) in points.chunks(CHUNK * dim).enumerate() {
        let (jets, _) = forward(def, params, chunk, &JetRequest::value_only())?;
        let start = c * CHUNK;
        out.slice_mut(ndarray::s![.., start..start + jets.n])
            .assign(&jets.out);
    }
    Ok(out)
}
