//! Simplicial convolutional encoder.
//!
//! Each layer applies a matrix polynomial in the lower and upper Hodge
//! Laplacians to multi-channel edge features,
//!
//! ```text
//! Y = X W_eps + Σ_l (L_low^l X) W_low[l] + Σ_l (L_up^l X) W_up[l]
//! ```
//!
//! followed by a pointwise activation. The last layer is mean-pooled over
//! edges and passed through a dense projection head. Gradients are computed
//! by replaying a [`ForwardTape`] in reverse.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::hodge::{HodgeBasis, HodgeLaplacians};
use crate::linalg::{Mat, SparseMatrix};

/// The two edge-adjacency operators a filter propagates over.
#[derive(Clone, Debug)]
pub struct EdgeOperators {
    pub low: SparseMatrix,
    pub up: SparseMatrix,
}

impl EdgeOperators {
    pub fn from_laplacians(lap: &HodgeLaplacians) -> Self {
        Self {
            low: lap.l1_low.clone(),
            up: lap.l1_up.clone(),
        }
    }

    /// Operators divided by their largest eigenvalues, so every power stays
    /// in `[0, 1]` spectrally; a zero operator is left as is.
    pub fn normalized(lap: &HodgeLaplacians, basis: &HodgeBasis) -> Self {
        let mut ops = Self::from_laplacians(lap);
        let top = |v: &[f64]| v.iter().fold(0.0f64, |m, &x| m.max(x));
        for (op, lmax) in [
            (&mut ops.low, top(&basis.eigvals_g)),
            (&mut ops.up, top(&basis.eigvals_c)),
        ] {
            if lmax > 0.0 {
                op.scale(1.0 / lmax);
            }
        }
        ops
    }

    pub fn num_edges(&self) -> usize {
        self.low.rows()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    /// No nonlinearity; used to check gradients against linear closed forms.
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Identity => v,
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - out * out,
            Activation::Identity => 1.0,
        }
    }
}

/// Filter coefficients of one layer, each `F_in × F_out`.
///
/// `w_low[l - 1]` multiplies `L_low^l`, `w_up[l - 1]` multiplies `L_up^l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParameters {
    pub w_eps: Mat,
    pub w_low: Vec<Mat>,
    pub w_up: Vec<Mat>,
}

impl LayerParameters {
    pub fn f_in(&self) -> usize {
        self.w_eps.rows()
    }

    pub fn f_out(&self) -> usize {
        self.w_eps.cols()
    }

    fn mats(&self) -> impl Iterator<Item = &Mat> {
        std::iter::once(&self.w_eps).chain(&self.w_low).chain(&self.w_up)
    }

    fn mats_mut(&mut self) -> impl Iterator<Item = &mut Mat> {
        std::iter::once(&mut self.w_eps)
            .chain(&mut self.w_low)
            .chain(&mut self.w_up)
    }

    fn check(&self) -> Result<()> {
        let shape = self.w_eps.shape();
        if self.mats().any(|m| m.shape() != shape) {
            return Err(dim_mismatch("filter coefficient shapes differ within a layer"));
        }
        Ok(())
    }
}

/// Encoder parameters: filter layers plus a dense head `z = headᵀ h + bias`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScnnParameters {
    pub layers: Vec<LayerParameters>,
    /// `pooled_dim × embed_dim`.
    pub head: Mat,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Layer widths and polynomial orders of an encoder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderShape {
    /// Output channels of each filter layer; the input has one channel.
    pub hidden: Vec<usize>,
    pub order_low: usize,
    pub order_up: usize,
    pub embed_dim: usize,
}

impl ScnnParameters {
    pub fn pooled_dim(&self) -> usize {
        self.head.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.head.cols()
    }

    /// Checks that layer widths chain and start from a single channel.
    pub fn validate(&self) -> Result<()> {
        let mut f = 1;
        for (t, layer) in self.layers.iter().enumerate() {
            layer.check()?;
            if layer.f_in() != f {
                return Err(dim_mismatch(format!(
                    "layer {t} expects {} input channels, previous layer gives {f}",
                    layer.f_in()
                )));
            }
            f = layer.f_out();
        }
        if self.head.rows() != f || self.bias.len() != self.head.cols() {
            return Err(dim_mismatch("head does not match last layer"));
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_slice_mut(|s| s.fill(0.0));
        z
    }

    pub fn num_parameters(&self) -> usize {
        let mut n = 0;
        self.for_each_slice(|s| n += s.len());
        n
    }

    /// Visits every coefficient array in a fixed order.
    pub fn for_each_slice(&self, mut f: impl FnMut(&[f64])) {
        for layer in &self.layers {
            for m in layer.mats() {
                f(m.as_slice());
            }
        }
        f(self.head.as_slice());
        f(&self.bias);
    }

    pub fn for_each_slice_mut(&mut self, mut f: impl FnMut(&mut [f64])) {
        for layer in &mut self.layers {
            for m in layer.mats_mut() {
                f(m.as_mut_slice());
            }
        }
        f(self.head.as_mut_slice());
        f(&mut self.bias);
    }

    /// Flattened copy of all coefficients.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_parameters());
        self.for_each_slice(|s| v.extend_from_slice(s));
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_parameters() {
            return Err(dim_mismatch("flat parameter vector length"));
        }
        let mut off = 0;
        self.for_each_slice_mut(|s| {
            s.copy_from_slice(&flat[off..off + s.len()]);
            off += s.len();
        });
        Ok(())
    }

    /// `self += s * other`, entry by entry. Shapes must agree.
    pub fn axpy(&mut self, s: f64, other: &ScnnParameters) -> Result<()> {
        if self.num_parameters() != other.num_parameters() {
            return Err(dim_mismatch("parameter sets differ in size"));
        }
        let flat = other.to_flat();
        let mut off = 0;
        self.for_each_slice_mut(|d| {
            let n = d.len();
            for (a, b) in d.iter_mut().zip(&flat[off..off + n]) {
                *a += s * b;
            }
            off += n;
        });
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.for_each_slice(|s| ok &= s.iter().all(|v| v.is_finite()));
        ok
    }

    /// One SGD step with L2 weight decay: `θ ← θ - lr (g + wd θ)`.
    pub fn sgd_step(&mut self, grad: &ScnnParameters, lr: f64, weight_decay: f64) -> Result<()> {
        if lr == 0.0 {
            return Ok(());
        }
        let g = grad.to_flat();
        if g.len() != self.num_parameters() {
            return Err(dim_mismatch("gradient does not match parameters"));
        }
        let mut off = 0;
        self.for_each_slice_mut(|d| {
            let n = d.len();
            for (a, b) in d.iter_mut().zip(&g[off..off + n]) {
                *a -= lr * (b + weight_decay * *a);
            }
            off += n;
        });
        Ok(())
    }
}

/// Draws parameters uniformly in `±sqrt(6 / (F_in (1 + L1 + L2) + F_out))`
/// per layer; the head uses the same rule with a single term and zero bias.
pub fn init_parameters<R: Rng + ?Sized>(rng: &mut R, shape: &EncoderShape) -> Result<ScnnParameters> {
    if shape.hidden.is_empty() || shape.hidden.contains(&0) || shape.embed_dim == 0 {
        return Err(Error::InvalidConfig(format!("invalid encoder shape {shape:?}")));
    }
    let mut uniform = |rows: usize, cols: usize, scale: f64| -> Mat {
        let data = (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect();
        Mat::from_vec(rows, cols, data).expect("sized")
    };
    let mut layers = Vec::with_capacity(shape.hidden.len());
    let mut f_in = 1;
    for &f_out in &shape.hidden {
        let terms = 1 + shape.order_low + shape.order_up;
        let scale = (6.0 / (f_in * terms + f_out) as f64).sqrt();
        let w_eps = uniform(f_in, f_out, scale);
        let w_low = (0..shape.order_low).map(|_| uniform(f_in, f_out, scale)).collect();
        let w_up = (0..shape.order_up).map(|_| uniform(f_in, f_out, scale)).collect();
        layers.push(LayerParameters { w_eps, w_low, w_up });
        f_in = f_out;
    }
    let scale = (6.0 / (f_in + shape.embed_dim) as f64).sqrt();
    let head = uniform(f_in, shape.embed_dim, scale);
    Ok(ScnnParameters {
        layers,
        head,
        bias: vec![0.0; shape.embed_dim],
        activation: Activation::Tanh,
    })
}

/// The encoder with every upper-Laplacian term removed.
pub fn make_lower_only(params: &ScnnParameters) -> ScnnParameters {
    let mut p = params.clone();
    for layer in &mut p.layers {
        layer.w_up.clear();
    }
    p
}

fn powers(op: &SparseMatrix, x: &Mat, order: usize) -> Result<Vec<Mat>> {
    let mut out: Vec<Mat> = Vec::with_capacity(order);
    for l in 0..order {
        let prev = if l == 0 { x } else { &out[l - 1] };
        let next = op.matmul_dense(prev)?;
        out.push(next);
    }
    Ok(out)
}

struct FilterTerms {
    low: Vec<Mat>,
    up: Vec<Mat>,
    out: Mat,
}

fn filter_terms(ops: &EdgeOperators, x: &Mat, layer: &LayerParameters) -> Result<FilterTerms> {
    if x.rows() != ops.num_edges() || x.cols() != layer.f_in() {
        return Err(dim_mismatch(format!(
            "features {:?} for {} edges and {} input channels",
            x.shape(),
            ops.num_edges(),
            layer.f_in()
        )));
    }
    layer.check()?;
    let low = powers(&ops.low, x, layer.w_low.len())?;
    let up = powers(&ops.up, x, layer.w_up.len())?;
    let mut out = x.matmul(&layer.w_eps)?;
    for (p, w) in low.iter().zip(&layer.w_low) {
        p.matmul_acc(w, &mut out)?;
    }
    for (p, w) in up.iter().zip(&layer.w_up) {
        p.matmul_acc(w, &mut out)?;
    }
    Ok(FilterTerms { low, up, out })
}

/// Applies one simplicial filter to `num_edges × F_in` features using the
/// sparse recursion `L^l X = L (L^{l-1} X)`.
pub fn filter_apply(ops: &EdgeOperators, x: &Mat, layer: &LayerParameters) -> Result<Mat> {
    Ok(filter_terms(ops, x, layer)?.out)
}

/// Intermediate values of one layer.
#[derive(Clone, Debug)]
pub struct LayerTape {
    pub input: Mat,
    pub low_powers: Vec<Mat>,
    pub up_powers: Vec<Mat>,
    pub pre: Mat,
    pub post: Mat,
}

#[derive(Clone, Debug)]
pub struct ForwardTape {
    pub layers: Vec<LayerTape>,
    pub pooled: Vec<f64>,
    pub z: Vec<f64>,
}

fn head_apply(params: &ScnnParameters, pooled: &[f64]) -> Result<Vec<f64>> {
    let mut z = params.head.tr_matvec(pooled)?;
    for (zi, b) in z.iter_mut().zip(&params.bias) {
        *zi += b;
    }
    Ok(z)
}

impl ForwardTape {
    /// Recomputes the representation from the recorded pooled vector.
    pub fn replay(&self, params: &ScnnParameters) -> Result<Vec<f64>> {
        head_apply(params, &self.pooled)
    }
}

fn mean_pool(a: &Mat) -> Vec<f64> {
    let mut h = vec![0.0; a.cols()];
    for i in 0..a.rows() {
        for (s, v) in h.iter_mut().zip(a.row(i)) {
            *s += v;
        }
    }
    let inv = 1.0 / a.rows().max(1) as f64;
    h.iter_mut().for_each(|v| *v *= inv);
    h
}

/// Encodes one edge flow, recording everything the backward pass needs.
pub fn scnn_forward(params: &ScnnParameters, ops: &EdgeOperators, x: &[f64]) -> Result<(ForwardTape, Vec<f64>)> {
    if x.len() != ops.num_edges() {
        return Err(dim_mismatch(format!(
            "flow of length {} on {} edges",
            x.len(),
            ops.num_edges()
        )));
    }
    let mut input = Mat::column(x);
    let mut layers = Vec::with_capacity(params.layers.len());
    for (t, layer) in params.layers.iter().enumerate() {
        let terms = filter_terms(ops, &input, layer)?;
        let mut post = terms.out.clone();
        post.as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = params.activation.apply(*v));
        if !post.is_finite() {
            return Err(Error::NonFiniteActivation { layer: t });
        }
        let next = post.clone();
        layers.push(LayerTape {
            input,
            low_powers: terms.low,
            up_powers: terms.up,
            pre: terms.out,
            post,
        });
        input = next;
    }
    let pooled = mean_pool(&input);
    let z = head_apply(params, &pooled)?;
    let tape = ForwardTape {
        layers,
        pooled,
        z: z.clone(),
    };
    Ok((tape, z))
}

/// Pooled SCNN embedding `h` of a flow (no projection head).
pub fn scnn_embed(params: &ScnnParameters, ops: &EdgeOperators, x: &[f64]) -> Result<Vec<f64>> {
    Ok(scnn_forward(params, ops, x)?.0.pooled)
}

fn check_tape(params: &ScnnParameters, tape: &ForwardTape, dz: &[f64]) -> Result<()> {
    if tape.layers.len() != params.layers.len() {
        return Err(Error::TapeMismatch(format!(
            "{} recorded layers for {} parameter layers",
            tape.layers.len(),
            params.layers.len()
        )));
    }
    for (t, (lt, lp)) in tape.layers.iter().zip(&params.layers).enumerate() {
        if lt.low_powers.len() != lp.w_low.len()
            || lt.up_powers.len() != lp.w_up.len()
            || lt.input.cols() != lp.f_in()
            || lt.pre.cols() != lp.f_out()
        {
            return Err(Error::TapeMismatch(format!("layer {t} shapes differ")));
        }
    }
    if tape.pooled.len() != params.pooled_dim() {
        return Err(Error::TapeMismatch("pooled dimension".into()));
    }
    if dz.len() != params.embed_dim() {
        return Err(dim_mismatch(format!(
            "cotangent of length {} for embedding dimension {}",
            dz.len(),
            params.embed_dim()
        )));
    }
    Ok(())
}

/// Reverse-mode gradient of a scalar loss given `dL/dz`.
///
/// The result has the same structure as `params`.
pub fn scnn_backward(
    params: &ScnnParameters,
    ops: &EdgeOperators,
    tape: &ForwardTape,
    dz: &[f64],
) -> Result<ScnnParameters> {
    let mut grad = params.zeros_like();
    scnn_backward_acc(params, ops, tape, dz, &mut grad)?;
    Ok(grad)
}

/// Like [`scnn_backward`] but adds into an existing gradient.
pub fn scnn_backward_acc(
    params: &ScnnParameters,
    ops: &EdgeOperators,
    tape: &ForwardTape,
    dz: &[f64],
    grad: &mut ScnnParameters,
) -> Result<()> {
    check_tape(params, tape, dz)?;

    // head
    for (g, d) in grad.bias.iter_mut().zip(dz) {
        *g += d;
    }
    let embed = params.embed_dim();
    for (f, &h) in tape.pooled.iter().enumerate() {
        let row = grad.head.row_mut(f);
        for (g, d) in row.iter_mut().zip(dz) {
            *g += h * d;
        }
    }
    let dh = params.head.matvec(dz)?;
    debug_assert_eq!(dz.len(), embed);

    // mean pooling
    let last = tape
        .layers
        .last()
        .ok_or_else(|| Error::TapeMismatch("empty tape".into()))?;
    let n = last.post.rows();
    let mut d_post = Mat::zeros(n, last.post.cols());
    let inv = 1.0 / n.max(1) as f64;
    for i in 0..n {
        for (d, &g) in d_post.row_mut(i).iter_mut().zip(&dh) {
            *d = g * inv;
        }
    }

    for t in (0..params.layers.len()).rev() {
        let lt = &tape.layers[t];
        let lp = &params.layers[t];
        let gl = &mut grad.layers[t];

        let mut delta = d_post;
        for (d, &a) in delta.as_mut_slice().iter_mut().zip(lt.post.as_slice()) {
            *d *= params.activation.derivative_from_output(a);
        }

        lt.input.tr_matmul_acc(&delta, &mut gl.w_eps)?;
        for (p, g) in lt.low_powers.iter().zip(gl.w_low.iter_mut()) {
            p.tr_matmul_acc(&delta, g)?;
        }
        for (p, g) in lt.up_powers.iter().zip(gl.w_up.iter_mut()) {
            p.tr_matmul_acc(&delta, g)?;
        }

        if t == 0 {
            break;
        }
        // dX = δ W_epsᵀ + Σ_l L^l (δ W[l]ᵀ), each sum evaluated by Horner's rule.
        let mut dx = Mat::zeros(delta.rows(), lp.f_in());
        delta.matmul_tr_acc(&lp.w_eps, &mut dx)?;
        for (op, ws) in [(&ops.low, &lp.w_low), (&ops.up, &lp.w_up)] {
            if ws.is_empty() {
                continue;
            }
            let mut acc = Mat::zeros(delta.rows(), lp.f_in());
            for w in ws.iter().rev() {
                delta.matmul_tr_acc(w, &mut acc)?;
                acc = op.matmul_dense(&acc)?;
            }
            dx.axpy(1.0, &acc)?;
        }
        d_post = dx;
    }
    Ok(())
}

/// Dense filter matrix `H` of a single-channel layer; a test oracle for the
/// sparse recursion.
pub fn dense_filter_matrix(ops: &EdgeOperators, layer: &LayerParameters) -> Result<Mat> {
    if layer.f_in() != 1 || layer.f_out() != 1 {
        return Err(dim_mismatch("dense filter matrix needs a single-channel layer"));
    }
    let n = ops.num_edges();
    let mut h = Mat::identity(n);
    h.scale(layer.w_eps[(0, 0)]);
    for (op, ws) in [(&ops.low, &layer.w_low), (&ops.up, &layer.w_up)] {
        let dense = op.to_dense();
        let mut pow = Mat::identity(n);
        for w in ws {
            pow = pow.matmul(&dense)?;
            h.axpy(w[(0, 0)], &pow)?;
        }
    }
    Ok(h)
}

/// Versioned parameter checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub params: ScnnParameters,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn new(params: ScnnParameters) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            params,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint version {}",
                c.version
            )));
        }
        c.params.validate()?;
        Ok(c)
    }
}
