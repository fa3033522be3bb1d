//! Reverse-mode differentiation over a linear recording of tensor operations.
//!
//! Every operation appends a node holding its output value. [`Tape::backward`]
//! walks the nodes once, newest first, and accumulates adjoints into the
//! operands. Leaves never touched by the loss receive zero gradients.

use crate::error::{Error, Result};
use crate::numeric::tensor::{gemm, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    /// `y = x · wᵀ` with `x: [rows, in]`, `w: [out, in]`.
    Linear { x: Var, w: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sin(Var),
    ConcatCols(Var, Var),
    ConcatRows(Vec<Var>),
    SelectRows { x: Var, rows: Vec<usize> },
    /// Row `i` of the output is the mean of the input rows listed in `sources[i]`.
    MeanAggregate { x: Var, sources: Vec<Vec<usize>> },
    /// Row `k` of the output is `x[a] - x[b]` for `pairs[k] = (a, b)`.
    PairDiff { x: Var, pairs: Vec<(usize, usize)> },
    /// `y[k] = Σ_c x[k, c] · w[c]`.
    RowDot { x: Var, w: Var },
    Dot(Var, Var),
    Mean(Var),
    /// First component of the two-way softmax over `(f, -f)`, elementwise.
    PairSoftmax(Var),
    /// Mean of `-ln(clamp(p, eps, 1 - eps))`.
    NegLogMean { p: Var, eps: f64 },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Records a computation so it can be differentiated.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`], one slot per recorded value.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient with respect to `var`; zeros if the loss does not depend on it.
    pub fn wrt(&self, var: Var) -> Tensor {
        match &self.grads[var.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[var.0]),
        }
    }

    pub fn take(&mut self, var: Var) -> Tensor {
        self.grads[var.0]
            .take()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[var.0]))
    }
}

fn check_2d(op: &'static str, t: &Tensor) -> Result<(usize, usize)> {
    if t.shape().len() != 2 {
        return Err(Error::shape(op, format!("expected a matrix, got {:?}", t.shape())));
    }
    Ok((t.shape()[0], t.shape()[1]))
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input. Parameters and constants are both leaves; constants
    /// are simply leaves whose gradient nobody reads.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn linear(&mut self, x: Var, w: Var) -> Result<Var> {
        let (rows, inner) = check_2d("linear", self.value(x))?;
        let (out, w_in) = check_2d("linear", self.value(w))?;
        if inner != w_in {
            return Err(Error::shape(
                "linear",
                format!("input [{rows}, {inner}] vs weight [{out}, {w_in}]"),
            ));
        }
        let mut y = vec![0.0; rows * out];
        gemm(
            rows,
            inner,
            out,
            self.value(x).data(),
            (inner as isize, 1),
            self.value(w).data(),
            (1, inner as isize),
            0.0,
            &mut y,
        );
        Ok(self.push(Tensor::matrix(rows, out, y)?, Op::Linear { x, w }))
    }

    fn binary(&mut self, name: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.same_shape(tb) {
            return Err(Error::shape(
                name,
                format!("{:?} vs {:?}", ta.shape(), tb.shape()),
            ));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    fn unary(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let t = self.value(a);
        Tensor::new(t.shape().to_vec(), t.data().iter().map(|&x| f(x)).collect())
            .expect("same element count")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary("add", a, b, |x, y| x + y)?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary("sub", a, b, |x, y| x - y)?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.unary(a, |x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.unary(a, |x| if x > 0.0 { x } else { 0.0 });
        self.push(v, Op::Relu(a))
    }

    pub fn sin(&mut self, a: Var) -> Var {
        let v = self.unary(a, f64::sin);
        self.push(v, Op::Sin(a))
    }

    /// `[a | b]` for matrices with equal row counts.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ra, ca) = check_2d("concat_cols", self.value(a))?;
        let (rb, cb) = check_2d("concat_cols", self.value(b))?;
        if ra != rb {
            return Err(Error::shape(
                "concat_cols",
                format!("[{ra}, {ca}] vs [{rb}, {cb}]"),
            ));
        }
        let mut data = Vec::with_capacity(ra * (ca + cb));
        for i in 0..ra {
            data.extend_from_slice(self.value(a).row(i));
            data.extend_from_slice(self.value(b).row(i));
        }
        Ok(self.push(Tensor::matrix(ra, ca + cb, data)?, Op::ConcatCols(a, b)))
    }

    /// Stacks matrices with equal column counts.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::shape("concat_rows", "no operands"))?;
        let (_, cols) = check_2d("concat_rows", self.value(*first))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let (r, c) = check_2d("concat_rows", self.value(p))?;
            if c != cols {
                return Err(Error::shape(
                    "concat_rows",
                    format!("column count {c} vs {cols}"),
                ));
            }
            rows += r;
            data.extend_from_slice(self.value(p).data());
        }
        Ok(self.push(Tensor::matrix(rows, cols, data)?, Op::ConcatRows(parts.to_vec())))
    }

    pub fn select_rows(&mut self, x: Var, rows: &[usize]) -> Result<Var> {
        let (n, cols) = check_2d("select_rows", self.value(x))?;
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            if r >= n {
                return Err(Error::shape("select_rows", format!("row {r} of {n}")));
            }
            data.extend_from_slice(self.value(x).row(r));
        }
        let v = Tensor::matrix(rows.len(), cols, data)?;
        Ok(self.push(v, Op::SelectRows { x, rows: rows.to_vec() }))
    }

    /// Row `i` of the result is the mean of `x[j]` over `j ∈ sources[i]`, zero when empty.
    pub fn mean_aggregate(&mut self, x: Var, sources: Vec<Vec<usize>>) -> Result<Var> {
        let (n, cols) = check_2d("mean_aggregate", self.value(x))?;
        let mut data = vec![0.0; sources.len() * cols];
        for (i, src) in sources.iter().enumerate() {
            if src.is_empty() {
                continue;
            }
            let out = &mut data[i * cols..(i + 1) * cols];
            for &j in src {
                if j >= n {
                    return Err(Error::shape("mean_aggregate", format!("source {j} of {n}")));
                }
                for (o, v) in out.iter_mut().zip(self.nodes[x.0].value.row(j)) {
                    *o += v;
                }
            }
            let c = src.len() as f64;
            for o in out.iter_mut() {
                *o /= c;
            }
        }
        let v = Tensor::matrix(sources.len(), cols, data)?;
        Ok(self.push(v, Op::MeanAggregate { x, sources }))
    }

    pub fn pair_diff(&mut self, x: Var, pairs: Vec<(usize, usize)>) -> Result<Var> {
        let (n, cols) = check_2d("pair_diff", self.value(x))?;
        let mut data = Vec::with_capacity(pairs.len() * cols);
        for &(a, b) in &pairs {
            if a >= n || b >= n {
                return Err(Error::shape("pair_diff", format!("pair ({a}, {b}) of {n} rows")));
            }
            let t = self.value(x);
            data.extend(t.row(a).iter().zip(t.row(b)).map(|(p, q)| p - q));
        }
        let v = Tensor::matrix(pairs.len(), cols, data)?;
        Ok(self.push(v, Op::PairDiff { x, pairs }))
    }

    pub fn row_dot(&mut self, x: Var, w: Var) -> Result<Var> {
        let (rows, cols) = check_2d("row_dot", self.value(x))?;
        let tw = self.value(w);
        if tw.shape() != [cols] {
            return Err(Error::shape(
                "row_dot",
                format!("rows [{rows}, {cols}] vs weight {:?}", tw.shape()),
            ));
        }
        let tx = self.value(x);
        let data = (0..rows)
            .map(|r| tx.row(r).iter().zip(tw.data()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(self.push(Tensor::vector(data), Op::RowDot { x, w }))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape().len() != 1 || !ta.same_shape(tb) {
            return Err(Error::shape("dot", format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let v: f64 = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).sum();
        Ok(self.push(Tensor::scalar(v), Op::Dot(a, b)))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.numel() == 0 {
            return Err(Error::shape("mean", "empty tensor"));
        }
        let v = t.data().iter().sum::<f64>() / t.numel() as f64;
        Ok(self.push(Tensor::scalar(v), Op::Mean(a)))
    }

    pub fn pair_softmax(&mut self, f: Var) -> Var {
        let v = self.unary(f, |s| two_way_softmax(s, -s).0);
        self.push(v, Op::PairSoftmax(f))
    }

    /// Mean negative log-likelihood of probabilities assigned to the gold class.
    pub fn neg_log_mean(&mut self, p: Var, eps: f64) -> Result<Var> {
        let t = self.value(p);
        if t.numel() == 0 {
            return Err(Error::EmptyEdgeSet);
        }
        let v = t
            .data()
            .iter()
            .map(|&q| -q.clamp(eps, 1.0 - eps).ln())
            .sum::<f64>()
            / t.numel() as f64;
        Ok(self.push(Tensor::scalar(v), Op::NegLogMean { p, eps }))
    }

    /// Adjoints of `loss` with respect to every recorded value.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(Error::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        let mut seed = Tensor::zeros(lv.shape());
        seed.data_mut()[0] = 1.0;
        grads[loss.0] = Some(seed);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        grads.resize(self.nodes.len(), None);
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let mut accumulate = |var: Var, delta: Tensor| match &mut grads[var.0] {
            Some(existing) => existing.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        };
        let like = |var: Var, data: Vec<f64>| {
            Tensor::new(self.value(var).shape().to_vec(), data).expect("gradient shape")
        };

        match &node.op {
            Op::Leaf => {}
            Op::Linear { x, w } => {
                let tx = self.value(*x);
                let tw = self.value(*w);
                let (rows, inner) = (tx.shape()[0], tx.shape()[1]);
                let out = tw.shape()[0];
                let mut dx = vec![0.0; rows * inner];
                gemm(rows, out, inner, g.data(), (out as isize, 1), tw.data(), (inner as isize, 1), 0.0, &mut dx);
                let mut dw = vec![0.0; out * inner];
                gemm(out, rows, inner, g.data(), (1, out as isize), tx.data(), (inner as isize, 1), 0.0, &mut dw);
                accumulate(*x, like(*x, dx));
                accumulate(*w, like(*w, dw));
            }
            Op::Add(a, b) => {
                accumulate(*a, g.clone());
                accumulate(*b, g.clone());
            }
            Op::Sub(a, b) => {
                accumulate(*a, g.clone());
                let mut neg = g.clone();
                neg.scale_in_place(-1.0);
                accumulate(*b, neg);
            }
            Op::Scale(a, s) => {
                let mut d = g.clone();
                d.scale_in_place(*s);
                accumulate(*a, d);
            }
            Op::Relu(a) => {
                let d = self
                    .value(*a)
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&x, &gy)| if x > 0.0 { gy } else { 0.0 })
                    .collect();
                accumulate(*a, like(*a, d));
            }
            Op::Sin(a) => {
                let d = self
                    .value(*a)
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&x, &gy)| x.cos() * gy)
                    .collect();
                accumulate(*a, like(*a, d));
            }
            Op::ConcatCols(a, b) => {
                let ca = self.value(*a).shape()[1];
                let cb = self.value(*b).shape()[1];
                let rows = self.value(*a).shape()[0];
                let mut da = Vec::with_capacity(rows * ca);
                let mut db = Vec::with_capacity(rows * cb);
                for r in 0..rows {
                    let row = g.row(r);
                    da.extend_from_slice(&row[..ca]);
                    db.extend_from_slice(&row[ca..]);
                }
                accumulate(*a, like(*a, da));
                accumulate(*b, like(*b, db));
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.value(p).numel();
                    accumulate(p, like(p, g.data()[offset..offset + n].to_vec()));
                    offset += n;
                }
            }
            Op::SelectRows { x, rows } => {
                let tx = self.value(*x);
                let cols = tx.shape()[1];
                let mut d = vec![0.0; tx.numel()];
                for (k, &r) in rows.iter().enumerate() {
                    for (o, v) in d[r * cols..(r + 1) * cols].iter_mut().zip(g.row(k)) {
                        *o += v;
                    }
                }
                accumulate(*x, like(*x, d));
            }
            Op::MeanAggregate { x, sources } => {
                let tx = self.value(*x);
                let cols = tx.shape()[1];
                let mut d = vec![0.0; tx.numel()];
                for (i, src) in sources.iter().enumerate() {
                    if src.is_empty() {
                        continue;
                    }
                    let c = src.len() as f64;
                    for &j in src {
                        for (o, v) in d[j * cols..(j + 1) * cols].iter_mut().zip(g.row(i)) {
                            *o += v / c;
                        }
                    }
                }
                accumulate(*x, like(*x, d));
            }
            Op::PairDiff { x, pairs } => {
                let tx = self.value(*x);
                let cols = tx.shape()[1];
                let mut d = vec![0.0; tx.numel()];
                for (k, &(a, b)) in pairs.iter().enumerate() {
                    for (c, v) in g.row(k).iter().enumerate() {
                        d[a * cols + c] += v;
                        d[b * cols + c] -= v;
                    }
                }
                accumulate(*x, like(*x, d));
            }
            Op::RowDot { x, w } => {
                let tx = self.value(*x);
                let tw = self.value(*w);
                let cols = tw.numel();
                let mut dx = Vec::with_capacity(tx.numel());
                let mut dw = vec![0.0; cols];
                for (r, &gy) in g.data().iter().enumerate() {
                    dx.extend(tw.data().iter().map(|wc| wc * gy));
                    for (o, xv) in dw.iter_mut().zip(tx.row(r)) {
                        *o += xv * gy;
                    }
                }
                accumulate(*x, like(*x, dx));
                accumulate(*w, like(*w, dw));
            }
            Op::Dot(a, b) => {
                let gy = g.item();
                let da = self.value(*b).data().iter().map(|v| v * gy).collect();
                let db = self.value(*a).data().iter().map(|v| v * gy).collect();
                accumulate(*a, like(*a, da));
                accumulate(*b, like(*b, db));
            }
            Op::Mean(a) => {
                let n = self.value(*a).numel();
                accumulate(*a, like(*a, vec![g.item() / n as f64; n]));
            }
            Op::PairSoftmax(f) => {
                let d = node
                    .value
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&p, &gy)| 2.0 * p * (1.0 - p) * gy)
                    .collect();
                accumulate(*f, like(*f, d));
            }
            Op::NegLogMean { p, eps } => {
                let tp = self.value(*p);
                let n = tp.numel() as f64;
                let gy = g.item();
                let d = tp
                    .data()
                    .iter()
                    .map(|&q| {
                        if q < *eps || q > 1.0 - *eps {
                            0.0
                        } else {
                            -gy / (q * n)
                        }
                    })
                    .collect();
                accumulate(*p, like(*p, d));
            }
        }
    }
}

/// Numerically stable softmax over two logits.
pub fn two_way_softmax(a: f64, b: f64) -> (f64, f64) {
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let s = ea + eb;
    (ea / s, eb / s)
}
