use super::{mismatch, ParamId, ParamStore, Tensor, TensorError};
use crate::scalar::Scalar;

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine(Var, T),
    Concat(Vec<Var>, usize),
    Slice {
        x: Var,
        axis: usize,
        start: usize,
    },
    Reshape(Var),
    Transpose(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Exp(Var),
    Log(Var),
    Clamp(Var, T, T),
    Softmax {
        x: Var,
        axis: usize,
    },
    Conv1d {
        x: Var,
        kernels: Var,
    },
    MaxPool1d {
        x: Var,
        argmax: Vec<usize>,
    },
    Lstm {
        xw: Var,
        w_h: Var,
        reverse: bool,
        gates: Vec<T>,
        cells: Vec<T>,
    },
    Sum(Var),
    Mean(Var),
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Records primitive applications in evaluation order.
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients of a scalar loss with respect to every node on a tape.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    params: Vec<(Var, ParamId)>,
}

impl<T: Scalar> Gradients<T> {
    pub fn wrt(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads[v.0].as_ref()
    }

    /// Gradient per parameter leaf; `None` when the loss does not reach it.
    pub fn params(&self) -> impl Iterator<Item = (ParamId, Option<&Tensor<T>>)> {
        self.params.iter().map(move |&(v, id)| (id, self.grads[v.0].as_ref()))
    }

    /// Adds every parameter gradient into the matching `Parameter::grad`.
    pub fn accumulate_into(&self, store: &mut ParamStore<T>) {
        for (id, g) in self.params() {
            if let Some(g) = g {
                store.get_mut(id).grad.add_assign(g);
            }
        }
    }
}

fn check<T: Scalar>(op: &'static str, t: Tensor<T>) -> Result<Tensor<T>, TensorError> {
    if t.is_finite() {
        Ok(t)
    } else {
        Err(TensorError::NonFiniteValue { op })
    }
}

/// Splits a shape around `axis` into (outer, axis length, inner).
fn around_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

/// Dot product with four independent accumulators.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let (x, y) = (&a[4 * i..4 * i + 4], &b[4 * i..4 * i + 4]);
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = T::zero();
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn matmul_raw<T: Scalar>(a: &[T], b: &[T], m: usize, n: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * p];
    for i in 0..m {
        let row = &mut out[i * p..(i + 1) * p];
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == T::zero() {
                continue;
            }
            let brow = &b[k * p..(k + 1) * p];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    out
}

/// `a [m×n] · bᵀ` where `b` is `[p×n]`.
fn matmul_nt<T: Scalar>(a: &[T], b: &[T], m: usize, n: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * p];
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        for j in 0..p {
            let brow = &b[j * n..(j + 1) * n];
            out[i * p + j] = dot(arow, brow);
        }
    }
    out
}

/// `aᵀ · b` where `a` is `[m×n]` and `b` is `[m×p]`.
fn matmul_tn<T: Scalar>(a: &[T], b: &[T], m: usize, n: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * p];
    for r in 0..m {
        let arow = &a[r * n..(r + 1) * n];
        let brow = &b[r * p..(r + 1) * p];
        for (i, &av) in arow.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let orow = &mut out[i * p..(i + 1) * p];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Constant input; receives a gradient but is not a parameter.
    pub fn leaf(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Constant)
    }

    fn is_constant(&self, v: Var) -> bool {
        matches!(self.nodes[v.0].op, Op::Constant)
    }

    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        self.push(store.get(id).value.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (m, n) = self
            .value(a)
            .dims2()
            .ok_or_else(|| mismatch("matmul", "left operand must be 2-D"))?;
        let (n2, p) = self
            .value(b)
            .dims2()
            .ok_or_else(|| mismatch("matmul", "right operand must be 2-D"))?;
        if n != n2 {
            return Err(mismatch("matmul", format!("[{m}x{n}] . [{n2}x{p}]")));
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), m, n, p);
        let t = check("matmul", Tensor::new(vec![m, p], out)?)?;
        Ok(self.push(t, Op::MatMul(a, b)))
    }

    fn zip_same(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Result<Tensor<T>, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(mismatch(op, format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        check(op, Tensor::new(self.shape(a).to_vec(), data)?)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip_same("add", a, b, |x, y| x + y)?;
        Ok(self.push(t, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip_same("sub", a, b, |x, y| x - y)?;
        Ok(self.push(t, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let t = self.zip_same("mul", a, b, |x, y| x * y)?;
        Ok(self.push(t, Op::Mul(a, b)))
    }

    /// Adds a length-`n` vector to every row of an `[m×n]` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let (m, n) = self
            .value(a)
            .dims2()
            .ok_or_else(|| mismatch("add_row", "left operand must be 2-D"))?;
        if self.value(row).len() != n {
            return Err(mismatch(
                "add_row",
                format!("row of {} for width {n}", self.value(row).len()),
            ));
        }
        let r = self.value(row).data();
        let mut data = self.value(a).data().to_vec();
        for i in 0..m {
            for (x, &b) in data[i * n..(i + 1) * n].iter_mut().zip(r) {
                *x += b;
            }
        }
        let t = check("add_row", Tensor::new(vec![m, n], data)?)?;
        Ok(self.push(t, Op::AddRow(a, row)))
    }

    /// `scale · x + shift`, elementwise.
    pub fn affine(&mut self, x: Var, scale: T, shift: T) -> Result<Var, TensorError> {
        let t = check("affine", self.value(x).map(|v| scale * v + shift))?;
        Ok(self.push(t, Op::Affine(x, scale)))
    }

    pub fn scale(&mut self, x: Var, s: T) -> Result<Var, TensorError> {
        self.affine(x, s, T::zero())
    }

    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var, TensorError> {
        let first = xs.first().ok_or_else(|| mismatch("concat", "no inputs"))?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(mismatch("concat", format!("axis {axis} for shape {base:?}")));
        }
        let mut total = 0;
        for &x in xs {
            let s = self.shape(x);
            let ok = s.len() == base.len() && s.iter().zip(&base).enumerate().all(|(d, (a, b))| d == axis || a == b);
            if !ok {
                return Err(mismatch("concat", format!("{base:?} vs {s:?} on axis {axis}")));
            }
            total += s[axis];
        }
        let (outer, _, inner) = around_axis(&base, axis);
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &x in xs {
                let (_, len, _) = around_axis(self.shape(x), axis);
                let chunk = len * inner;
                data.extend_from_slice(&self.value(x).data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let t = Tensor::new(shape, data)?;
        Ok(self.push(t, Op::Concat(xs.to_vec(), axis)))
    }

    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var, TensorError> {
        let shape = self.shape(x).to_vec();
        if axis >= shape.len() || len == 0 || start + len > shape[axis] {
            return Err(mismatch(
                "slice",
                format!("[{start}..{}] on axis {axis} of {shape:?}", start + len),
            ));
        }
        let (outer, alen, inner) = around_axis(&shape, axis);
        let src = self.value(x).data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * alen * inner + start * inner;
            data.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut out_shape = shape;
        out_shape[axis] = len;
        let t = Tensor::new(out_shape, data)?;
        Ok(self.push(t, Op::Slice { x, axis, start }))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(x).clone().reshape(shape.to_vec())?;
        Ok(self.push(t, Op::Reshape(x)))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var, TensorError> {
        let (m, n) = self
            .value(x)
            .dims2()
            .ok_or_else(|| mismatch("transpose", "operand must be 2-D"))?;
        let src = self.value(x).data();
        let mut data = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = src[i * n + j];
            }
        }
        let t = Tensor::new(vec![n, m], data)?;
        Ok(self.push(t, Op::Transpose(x)))
    }

    fn unary(&mut self, op: &'static str, x: Var, f: impl Fn(T) -> T, rec: Op<T>) -> Result<Var, TensorError> {
        let t = check(op, self.value(x).map(f))?;
        Ok(self.push(t, rec))
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, TensorError> {
        self.unary("tanh", x, |v| v.tanh(), Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, TensorError> {
        self.unary("sigmoid", x, sigmoid, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, TensorError> {
        self.unary("relu", x, |v| v.max(T::zero()), Op::Relu(x))
    }

    pub fn exp(&mut self, x: Var) -> Result<Var, TensorError> {
        self.unary("exp", x, |v| v.exp(), Op::Exp(x))
    }

    pub fn log(&mut self, x: Var) -> Result<Var, TensorError> {
        self.unary("log", x, |v| v.ln(), Op::Log(x))
    }

    /// Clamps into `[lo, hi]`; the gradient is zero where clamping is active.
    pub fn clamp(&mut self, x: Var, lo: T, hi: T) -> Result<Var, TensorError> {
        self.unary("clamp", x, |v| v.max(lo).min(hi), Op::Clamp(x, lo, hi))
    }

    /// Softmax along `axis`. When `mask` is given (one flag per position
    /// along `axis`), masked positions get weight exactly zero and the rest
    /// renormalize among themselves. A lane with every position masked
    /// yields all zeros.
    pub fn softmax(&mut self, x: Var, axis: usize, mask: Option<&[bool]>) -> Result<Var, TensorError> {
        let shape = self.shape(x).to_vec();
        if axis >= shape.len() {
            return Err(mismatch("softmax", format!("axis {axis} for shape {shape:?}")));
        }
        let (outer, alen, inner) = around_axis(&shape, axis);
        if let Some(m) = mask {
            if m.len() != alen {
                return Err(mismatch(
                    "softmax",
                    format!("mask of {} for axis length {alen}", m.len()),
                ));
            }
        }
        let keep = |i: usize| mask.is_none_or(|m| m[i]);
        let src = self.value(x).data();
        let mut data = vec![T::zero(); src.len()];
        for o in 0..outer {
            for inn in 0..inner {
                let at = |i: usize| o * alen * inner + i * inner + inn;
                let mut max = T::neg_infinity();
                for i in (0..alen).filter(|&i| keep(i)) {
                    max = max.max(src[at(i)]);
                }
                if max == T::neg_infinity() {
                    continue;
                }
                let mut z = T::zero();
                for i in (0..alen).filter(|&i| keep(i)) {
                    let e = (src[at(i)] - max).exp();
                    data[at(i)] = e;
                    z += e;
                }
                for i in (0..alen).filter(|&i| keep(i)) {
                    data[at(i)] /= z;
                }
            }
        }
        let t = check("softmax", Tensor::new(shape, data)?)?;
        Ok(self.push(t, Op::Softmax { x, axis }))
    }

    /// 1-D convolution of `x [T×C]` with `kernels [K×w×C]`, zero "same"
    /// padding, producing `[T×K]`. The kernel width must be odd.
    pub fn conv1d(&mut self, x: Var, kernels: Var) -> Result<Var, TensorError> {
        let (steps, chans) = self
            .value(x)
            .dims2()
            .ok_or_else(|| mismatch("conv1d", "input must be [T x C]"))?;
        let (k, w, kc) = match self.shape(kernels) {
            &[k, w, c] => (k, w, c),
            s => return Err(mismatch("conv1d", format!("kernels must be [K x w x C], got {s:?}"))),
        };
        if kc != chans {
            return Err(mismatch("conv1d", format!("kernel channels {kc} vs input {chans}")));
        }
        if w % 2 == 0 {
            return Err(mismatch("conv1d", format!("kernel width {w} must be odd")));
        }
        let half = w / 2;
        let xs = self.value(x).data();
        let ks = self.value(kernels).data();
        let mut out = vec![T::zero(); steps * k];
        for t in 0..steps {
            for j in 0..w {
                let Some(src) = (t + j).checked_sub(half).filter(|&s| s < steps) else {
                    continue;
                };
                let xrow = &xs[src * chans..(src + 1) * chans];
                for f in 0..k {
                    let krow = &ks[(f * w + j) * chans..(f * w + j + 1) * chans];
                    out[t * k + f] += dot(xrow, krow);
                }
            }
        }
        let t = check("conv1d", Tensor::new(vec![steps, k], out)?)?;
        Ok(self.push(t, Op::Conv1d { x, kernels }))
    }

    /// LSTM recurrence over precomputed input projections `xw [T×4H]`
    /// (gate order i, f, g, o, biases already added) with recurrent weights
    /// `w_h [H×4H]` and zero initial state. Returns hidden states `[T×H]` in
    /// input order; `reverse` runs from the last timestep to the first.
    pub fn lstm(&mut self, xw: Var, w_h: Var, reverse: bool) -> Result<Var, TensorError> {
        let (h, h4) = self
            .value(w_h)
            .dims2()
            .ok_or_else(|| mismatch("lstm", "recurrent weights must be [H x 4H]"))?;
        if h4 != 4 * h {
            return Err(mismatch("lstm", format!("recurrent weights {h}x{h4}")));
        }
        let (steps, width) = self
            .value(xw)
            .dims2()
            .ok_or_else(|| mismatch("lstm", "projections must be [T x 4H]"))?;
        if width != h4 {
            return Err(mismatch("lstm", format!("projection width {width}, expected {h4}")));
        }
        let xs = self.value(xw).data();
        let wh = self.value(w_h).data();
        let mut gates = vec![T::zero(); steps * h4];
        let mut cells = vec![T::zero(); steps * h];
        let mut hs = vec![T::zero(); steps * h];
        let mut prev: Option<usize> = None;
        for k in 0..steps {
            let t = if reverse { steps - 1 - k } else { k };
            let z = &mut gates[t * h4..(t + 1) * h4];
            z.copy_from_slice(&xs[t * h4..(t + 1) * h4]);
            if let Some(p) = prev {
                for (j, &hv) in hs[p * h..(p + 1) * h].iter().enumerate() {
                    for (zv, &w) in z.iter_mut().zip(&wh[j * h4..(j + 1) * h4]) {
                        *zv += hv * w;
                    }
                }
            }
            for j in 0..h {
                z[j] = sigmoid(z[j]);
                z[h + j] = sigmoid(z[h + j]);
                z[2 * h + j] = z[2 * h + j].tanh();
                z[3 * h + j] = sigmoid(z[3 * h + j]);
                let c_prev = prev.map_or(T::zero(), |p| cells[p * h + j]);
                let c = z[h + j] * c_prev + z[j] * z[2 * h + j];
                cells[t * h + j] = c;
                hs[t * h + j] = z[3 * h + j] * c.tanh();
            }
            prev = Some(t);
        }
        let out = check("lstm", Tensor::new(vec![steps, h], hs)?)?;
        Ok(self.push(
            out,
            Op::Lstm {
                xw,
                w_h,
                reverse,
                gates,
                cells,
            },
        ))
    }

    /// Non-overlapping max pooling over time on `[T×C]`; output has
    /// `floor(T / width)` rows.
    pub fn max_pool1d(&mut self, x: Var, width: usize) -> Result<Var, TensorError> {
        let (steps, chans) = self
            .value(x)
            .dims2()
            .ok_or_else(|| mismatch("max_pool1d", "input must be [T x C]"))?;
        if width == 0 || width > steps {
            return Err(mismatch("max_pool1d", format!("width {width} for {steps} steps")));
        }
        let rows = steps / width;
        let src = self.value(x).data();
        let mut data = Vec::with_capacity(rows * chans);
        let mut argmax = Vec::with_capacity(rows * chans);
        for r in 0..rows {
            for c in 0..chans {
                let mut best = r * width * chans + c;
                for t in r * width..(r + 1) * width {
                    let i = t * chans + c;
                    if src[i] > src[best] {
                        best = i;
                    }
                }
                data.push(src[best]);
                argmax.push(best);
            }
        }
        let t = Tensor::new(vec![rows, chans], data)?;
        Ok(self.push(t, Op::MaxPool1d { x, argmax }))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, TensorError> {
        let t = check("sum", Tensor::scalar(self.value(x).sum_all()))?;
        Ok(self.push(t, Op::Sum(x)))
    }

    pub fn mean(&mut self, x: Var) -> Result<Var, TensorError> {
        let v = self.value(x);
        let n = T::from_usize(v.len()).unwrap();
        let t = check("mean", Tensor::scalar(v.sum_all() / n))?;
        Ok(self.push(t, Op::Mean(x)))
    }

    /// Reverse sweep from a single-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>, TensorError> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(TensorError::NotScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::ones(lv.shape()));

        let constant: Vec<bool> = self.nodes.iter().map(|n| matches!(n.op, Op::Constant)).collect();
        let acc = |grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>| {
            if constant[v.0] {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot => *slot = Some(g),
            }
        };

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let y = &node.value;
            let like = |v: Var, data: Vec<T>| Tensor::new(self.shape(v).to_vec(), data).unwrap();
            match &node.op {
                Op::Leaf | Op::Constant | Op::Param(_) => {}
                Op::MatMul(a, b) => {
                    let (m, n) = self.value(*a).dims2().unwrap();
                    let (_, p) = self.value(*b).dims2().unwrap();
                    let da = matmul_nt(g.data(), self.value(*b).data(), m, p, n);
                    let db = matmul_tn(self.value(*a).data(), g.data(), m, n, p);
                    acc(&mut grads, *a, like(*a, da));
                    acc(&mut grads, *b, like(*b, db));
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g.clone());
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g.map(|v| -v));
                }
                Op::Mul(a, b) => {
                    let av = self.value(*a).data();
                    let bv = self.value(*b).data();
                    let da = g.data().iter().zip(bv).map(|(&d, &x)| d * x).collect();
                    let db = g.data().iter().zip(av).map(|(&d, &x)| d * x).collect();
                    acc(&mut grads, *a, like(*a, da));
                    acc(&mut grads, *b, like(*b, db));
                }
                Op::AddRow(a, row) => {
                    let (m, n) = g.dims2().unwrap();
                    let mut dr = vec![T::zero(); n];
                    for r in 0..m {
                        for (d, &v) in dr.iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *row, like(*row, dr));
                }
                Op::Affine(x, s) => {
                    let s = *s;
                    acc(&mut grads, *x, g.map(|v| v * s));
                }
                Op::Concat(xs, axis) => {
                    let (outer, total, inner) = around_axis(y.shape(), *axis);
                    let mut offset = 0;
                    for &x in xs {
                        let len = self.shape(x)[*axis];
                        let mut d = Vec::with_capacity(outer * len * inner);
                        for o in 0..outer {
                            let base = o * total * inner + offset * inner;
                            d.extend_from_slice(&g.data()[base..base + len * inner]);
                        }
                        offset += len;
                        acc(&mut grads, x, like(x, d));
                    }
                }
                Op::Slice { x, axis, start } => {
                    let (outer, alen, inner) = around_axis(self.shape(*x), *axis);
                    let len = y.shape()[*axis];
                    let mut d = vec![T::zero(); self.value(*x).len()];
                    for o in 0..outer {
                        let base = o * alen * inner + start * inner;
                        let src = &g.data()[o * len * inner..(o + 1) * len * inner];
                        d[base..base + len * inner].copy_from_slice(src);
                    }
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Reshape(x) => {
                    acc(&mut grads, *x, like(*x, g.data().to_vec()));
                }
                Op::Transpose(x) => {
                    let (m, n) = self.value(*x).dims2().unwrap();
                    let mut d = vec![T::zero(); m * n];
                    for i in 0..m {
                        for j in 0..n {
                            d[i * n + j] = g.data()[j * m + i];
                        }
                    }
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Tanh(x) => {
                    let d = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(&d, &t)| d * (T::one() - t * t))
                        .collect();
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Sigmoid(x) => {
                    let d = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(&d, &s)| d * s * (T::one() - s))
                        .collect();
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Relu(x) => {
                    let xv = self.value(*x).data();
                    let d = g
                        .data()
                        .iter()
                        .zip(xv)
                        .map(|(&d, &v)| if v > T::zero() { d } else { T::zero() })
                        .collect();
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Exp(x) => {
                    let d = g.data().iter().zip(y.data()).map(|(&d, &e)| d * e).collect();
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Log(x) => {
                    let xv = self.value(*x).data();
                    let d = g.data().iter().zip(xv).map(|(&d, &v)| d / v).collect();
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Clamp(x, lo, hi) => {
                    let xv = self.value(*x).data();
                    let d = g
                        .data()
                        .iter()
                        .zip(xv)
                        .map(|(&d, &v)| if v < *lo || v > *hi { T::zero() } else { d })
                        .collect();
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Softmax { x, axis } => {
                    let (outer, alen, inner) = around_axis(y.shape(), *axis);
                    let mut d = vec![T::zero(); y.len()];
                    for o in 0..outer {
                        for inn in 0..inner {
                            let at = |i: usize| o * alen * inner + i * inner + inn;
                            let dot: T = (0..alen).map(|i| y.data()[at(i)] * g.data()[at(i)]).sum();
                            for i in 0..alen {
                                d[at(i)] = y.data()[at(i)] * (g.data()[at(i)] - dot);
                            }
                        }
                    }
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Conv1d { x, kernels } => {
                    let (steps, chans) = self.value(*x).dims2().unwrap();
                    let (k, w) = (self.shape(*kernels)[0], self.shape(*kernels)[1]);
                    let half = w / 2;
                    let xs = self.value(*x).data();
                    let ks = self.value(*kernels).data();
                    let want_dx = !self.is_constant(*x);
                    let mut dx = vec![T::zero(); if want_dx { xs.len() } else { 0 }];
                    let mut dk = vec![T::zero(); ks.len()];
                    for t in 0..steps {
                        for j in 0..w {
                            let Some(src) = (t + j).checked_sub(half).filter(|&s| s < steps) else {
                                continue;
                            };
                            let xrow = &xs[src * chans..(src + 1) * chans];
                            for f in 0..k {
                                let gv = g.data()[t * k + f];
                                if gv == T::zero() {
                                    continue;
                                }
                                let kb = (f * w + j) * chans;
                                for (d, &xv) in dk[kb..kb + chans].iter_mut().zip(xrow) {
                                    *d += gv * xv;
                                }
                                if want_dx {
                                    let krow = &ks[kb..kb + chans];
                                    for (d, &kv) in dx[src * chans..(src + 1) * chans].iter_mut().zip(krow) {
                                        *d += gv * kv;
                                    }
                                }
                            }
                        }
                    }
                    if want_dx {
                        acc(&mut grads, *x, like(*x, dx));
                    }
                    acc(&mut grads, *kernels, like(*kernels, dk));
                }
                Op::MaxPool1d { x, argmax } => {
                    let mut d = vec![T::zero(); self.value(*x).len()];
                    for (&src, &gv) in argmax.iter().zip(g.data()) {
                        d[src] += gv;
                    }
                    acc(&mut grads, *x, like(*x, d));
                }
                Op::Lstm {
                    xw,
                    w_h,
                    reverse,
                    gates,
                    cells,
                } => {
                    let (steps, h) = y.dims2().unwrap();
                    let h4 = 4 * h;
                    let wh = self.value(*w_h).data();
                    let hs = y.data();
                    let mut dxw = vec![T::zero(); steps * h4];
                    let mut dwh = vec![T::zero(); h * h4];
                    let mut dh_next = vec![T::zero(); h];
                    let mut dc_next = vec![T::zero(); h];
                    for k in (0..steps).rev() {
                        let t = if *reverse { steps - 1 - k } else { k };
                        let prev = (k > 0).then(|| if *reverse { t + 1 } else { t - 1 });
                        let z = &gates[t * h4..(t + 1) * h4];
                        let dz = &mut dxw[t * h4..(t + 1) * h4];
                        for j in 0..h {
                            let (i, f, gg, o) = (z[j], z[h + j], z[2 * h + j], z[3 * h + j]);
                            let tc = cells[t * h + j].tanh();
                            let dh = g.data()[t * h + j] + dh_next[j];
                            let dc = dh * o * (T::one() - tc * tc) + dc_next[j];
                            let c_prev = prev.map_or(T::zero(), |p| cells[p * h + j]);
                            dz[j] = dc * gg * i * (T::one() - i);
                            dz[h + j] = dc * c_prev * f * (T::one() - f);
                            dz[2 * h + j] = dc * i * (T::one() - gg * gg);
                            dz[3 * h + j] = dh * tc * o * (T::one() - o);
                            dc_next[j] = dc * f;
                        }
                        match prev {
                            Some(p) => {
                                let hp = &hs[p * h..(p + 1) * h];
                                for (r, &hv) in hp.iter().enumerate() {
                                    for (d, &zv) in dwh[r * h4..(r + 1) * h4].iter_mut().zip(dz.iter()) {
                                        *d += hv * zv;
                                    }
                                }
                                for (r, dn) in dh_next.iter_mut().enumerate() {
                                    *dn = dot(&wh[r * h4..(r + 1) * h4], dz);
                                }
                            }
                            None => dh_next.fill(T::zero()),
                        }
                    }
                    acc(&mut grads, *xw, like(*xw, dxw));
                    acc(&mut grads, *w_h, like(*w_h, dwh));
                }
                Op::Sum(x) => {
                    let gv = g.item();
                    acc(&mut grads, *x, Tensor::full(self.shape(*x), gv));
                }
                Op::Mean(x) => {
                    let n = T::from_usize(self.value(*x).len()).unwrap();
                    acc(&mut grads, *x, Tensor::full(self.shape(*x), g.item() / n));
                }
            }
            if !g.is_finite() {
                return Err(TensorError::NonFiniteValue { op: "backward" });
            }
            grads[i] = Some(g);
        }

        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Param(id) => Some((Var(i), id)),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads, params })
    }
}
