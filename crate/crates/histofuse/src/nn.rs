//! Minimal dense/conv layers with hand-written backward passes and AdamW.
//!
//! Everything is f64 and single-threaded so training runs are deterministic
//! for a given seed. Layers accumulate parameter gradients internally;
//! [`AdamW`] consumes them via [`Param`] references in a fixed order.

use ndarray::{Array1, Array2, Array4, ArrayD, Axis, Ix1, Ix2};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// A trainable tensor with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: ArrayD<f64>,
    pub grad: ArrayD<f64>,
    /// Whether AdamW's decoupled weight decay applies to this parameter.
    pub decay: bool,
}

impl Param {
    pub fn new(name: impl Into<String>, value: ArrayD<f64>, decay: bool) -> Self {
        let grad = ArrayD::zeros(value.raw_dim());
        Param {
            name: name.into(),
            value,
            grad,
            decay,
        }
    }

    pub fn scalar(name: impl Into<String>, v: f64) -> Self {
        Param::new(name, ArrayD::from_elem(ndarray::IxDyn(&[]), v), false)
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

fn uniform_init(rng: &mut ChaCha12Rng, shape: &[usize], bound: f64) -> ArrayD<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
    ArrayD::from_shape_vec(ndarray::IxDyn(shape), data).expect("shape/data mismatch")
}

/// Fully connected layer, `y = x W^T + b` with `W: (out, in)`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Param,
    pub b: Param,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(name: &str, in_dim: usize, out_dim: usize, rng: &mut ChaCha12Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Linear {
            w: Param::new(
                format!("{name}.w"),
                uniform_init(rng, &[out_dim, in_dim], bound),
                true,
            ),
            b: Param::new(
                format!("{name}.b"),
                uniform_init(rng, &[out_dim], bound),
                true,
            ),
            in_dim,
            out_dim,
        }
    }

    fn w2(&self) -> ndarray::ArrayView2<'_, f64> {
        self.w.value.view().into_dimensionality::<Ix2>().unwrap()
    }

    fn b1(&self) -> ndarray::ArrayView1<'_, f64> {
        self.b.value.view().into_dimensionality::<Ix1>().unwrap()
    }

    /// `x: (n, in) -> (n, out)`
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(x.ncols(), self.in_dim);
        x.dot(&self.w2().t()) + self.b1()
    }

    /// Accumulates parameter grads; returns the gradient wrt the input.
    pub fn backward(&mut self, x: &Array2<f64>, grad_out: &Array2<f64>) -> Array2<f64> {
        let gw = grad_out.t().dot(x);
        let gb = grad_out.sum_axis(Axis(0));
        self.w.grad += &gw.into_dyn();
        self.b.grad += &gb.into_dyn();
        grad_out.dot(&self.w2())
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Gradient through ReLU given the pre-activation input.
pub fn relu_backward(pre: &Array2<f64>, grad_out: &Array2<f64>) -> Array2<f64> {
    let mut g = grad_out.clone();
    g.zip_mut_with(pre, |gv, &p| {
        if p <= 0.0 {
            *gv = 0.0;
        }
    });
    g
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Gradient through a row-wise softmax: `g_logits = p ⊙ (g_p − (g_p·p))`.
pub fn softmax_backward(probs: &Array2<f64>, grad_probs: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(probs.raw_dim());
    for i in 0..probs.nrows() {
        let p = probs.row(i);
        let g = grad_probs.row(i);
        let dot: f64 = p.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        for j in 0..probs.ncols() {
            out[[i, j]] = p[j] * (g[j] - dot);
        }
    }
    out
}

/// 2D convolution with square kernel, zero padding.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub w: Param, // (out_c, in_c, k, k)
    pub b: Param, // (out_c,)
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2d {
    pub fn new(
        name: &str,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let fan_in = in_c * kernel * kernel;
        let bound = 1.0 / (fan_in as f64).sqrt();
        Conv2d {
            w: Param::new(
                format!("{name}.w"),
                uniform_init(rng, &[out_c, in_c, kernel, kernel], bound),
                true,
            ),
            b: Param::new(
                format!("{name}.b"),
                uniform_init(rng, &[out_c], bound),
                true,
            ),
            in_c,
            out_c,
            kernel,
            stride,
            pad,
        }
    }

    pub fn out_size(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.kernel) / self.stride + 1,
            (w + 2 * self.pad - self.kernel) / self.stride + 1,
        )
    }

    /// `x: (n, in_c, h, w) -> (n, out_c, oh, ow)`
    pub fn forward(&self, x: &Array4<f64>) -> Array4<f64> {
        let (n, ic, h, w) = x.dim();
        debug_assert_eq!(ic, self.in_c);
        let (oh, ow) = self.out_size(h, w);
        let wv = self
            .w
            .value
            .view()
            .into_dimensionality::<ndarray::Ix4>()
            .unwrap();
        let bv = self.b.value.view().into_dimensionality::<Ix1>().unwrap();
        let mut out = Array4::zeros((n, self.out_c, oh, ow));
        let (k, s, p) = (self.kernel as i64, self.stride as i64, self.pad as i64);
        for ni in 0..n {
            for oc in 0..self.out_c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = bv[oc];
                        for ci in 0..ic {
                            for ky in 0..k {
                                let iy = oy as i64 * s + ky - p;
                                if iy < 0 || iy >= h as i64 {
                                    continue;
                                }
                                for kx in 0..k {
                                    let ix = ox as i64 * s + kx - p;
                                    if ix < 0 || ix >= w as i64 {
                                        continue;
                                    }
                                    acc += wv[[oc, ci, ky as usize, kx as usize]]
                                        * x[[ni, ci, iy as usize, ix as usize]];
                                }
                            }
                        }
                        out[[ni, oc, oy, ox]] = acc;
                    }
                }
            }
        }
        out
    }

    /// Accumulates parameter grads; returns the gradient wrt the input.
    pub fn backward(&mut self, x: &Array4<f64>, grad_out: &Array4<f64>) -> Array4<f64> {
        let (n, ic, h, w) = x.dim();
        let (_, oc, oh, ow) = grad_out.dim();
        let wv = self
            .w
            .value
            .view()
            .into_dimensionality::<ndarray::Ix4>()
            .unwrap()
            .to_owned();
        let mut gw = Array4::<f64>::zeros((self.out_c, self.in_c, self.kernel, self.kernel));
        let mut gb = Array1::<f64>::zeros(self.out_c);
        let mut gin = Array4::<f64>::zeros((n, ic, h, w));
        let (k, s, p) = (self.kernel as i64, self.stride as i64, self.pad as i64);
        for ni in 0..n {
            for o in 0..oc {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let g = grad_out[[ni, o, oy, ox]];
                        if g == 0.0 {
                            continue;
                        }
                        gb[o] += g;
                        for ci in 0..ic {
                            for ky in 0..k {
                                let iy = oy as i64 * s + ky - p;
                                if iy < 0 || iy >= h as i64 {
                                    continue;
                                }
                                for kx in 0..k {
                                    let ix = ox as i64 * s + kx - p;
                                    if ix < 0 || ix >= w as i64 {
                                        continue;
                                    }
                                    let (iyu, ixu) = (iy as usize, ix as usize);
                                    gw[[o, ci, ky as usize, kx as usize]] +=
                                        g * x[[ni, ci, iyu, ixu]];
                                    gin[[ni, ci, iyu, ixu]] +=
                                        g * wv[[o, ci, ky as usize, kx as usize]];
                                }
                            }
                        }
                    }
                }
            }
        }
        self.w.grad += &gw.into_dyn();
        self.b.grad += &gb.into_dyn();
        gin
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Global average pooling `(n, c, h, w) -> (n, c)`.
pub fn global_avg_pool(x: &Array4<f64>) -> Array2<f64> {
    let (n, c, h, w) = x.dim();
    let scale = 1.0 / (h * w) as f64;
    let mut out = Array2::zeros((n, c));
    for ni in 0..n {
        for ci in 0..c {
            let mut acc = 0.0;
            for y in 0..h {
                for xx in 0..w {
                    acc += x[[ni, ci, y, xx]];
                }
            }
            out[[ni, ci]] = acc * scale;
        }
    }
    out
}

pub fn global_avg_pool_backward(grad_out: &Array2<f64>, h: usize, w: usize) -> Array4<f64> {
    let (n, c) = grad_out.dim();
    let scale = 1.0 / (h * w) as f64;
    let mut gin = Array4::zeros((n, c, h, w));
    for ni in 0..n {
        for ci in 0..c {
            let g = grad_out[[ni, ci]] * scale;
            for y in 0..h {
                for xx in 0..w {
                    gin[[ni, ci, y, xx]] = g;
                }
            }
        }
    }
    gin
}

/// AdamW with decoupled weight decay. Optimizer state is keyed by the
/// position of each parameter in the (stable) `params` ordering.
#[derive(Debug)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    t: u64,
    m: Vec<ArrayD<f64>>,
    v: Vec<ArrayD<f64>>,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut Param]) {
        if self.m.is_empty() {
            self.m = params
                .iter()
                .map(|p| ArrayD::zeros(p.value.raw_dim()))
                .collect();
            self.v = self.m.clone();
        }
        assert_eq!(
            self.m.len(),
            params.len(),
            "parameter set changed between steps"
        );
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, p) in params.iter_mut().enumerate() {
            if p.decay && self.weight_decay > 0.0 {
                let f = 1.0 - self.lr * self.weight_decay;
                p.value.mapv_inplace(|v| v * f);
            }
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            ndarray::Zip::from(&mut *m).and(&p.grad).for_each(|mv, &g| {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * g;
            });
            ndarray::Zip::from(&mut *v).and(&p.grad).for_each(|vv, &g| {
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * g * g;
            });
            let lr = self.lr;
            let eps = self.eps;
            ndarray::Zip::from(&mut p.value)
                .and(&*m)
                .and(&*v)
                .for_each(|pv, &mv, &vv| {
                    let mhat = mv / bc1;
                    let vhat = vv / bc2;
                    *pv -= lr * mhat / (vhat.sqrt() + eps);
                });
        }
    }
}
