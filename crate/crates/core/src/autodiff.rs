//! Reverse-mode automatic differentiation over an append-only graph.
//!
//! Every operation appends a node holding its cached output, so node ids are
//! already a topological order. [`Graph::backward`] walks the nodes once in
//! reverse and may only be called once per graph.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(usize),
    MatMul(NodeId, NodeId),
    MatVec(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRowBias(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Lookup { table: NodeId, index: usize },
    Slice { input: NodeId, start: usize },
    Concat(Vec<NodeId>),
    Sum(Vec<NodeId>),
    // `probs` caches softmax(logits) for the backward pass.
    SoftmaxNll {
        logits: NodeId,
        gold: usize,
        probs: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Gradients produced by one backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    by_node: Vec<Option<Tensor>>,
    params: Vec<(usize, NodeId)>,
}

impl Gradients {
    /// Gradient of the loss with respect to a node, if the node was reachable.
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.by_node.get(id.0).and_then(|g| g.as_ref())
    }

    /// Gradients of every parameter leaf reachable from the loss, keyed by the
    /// parameter index passed to [`Graph::param`].
    pub fn params(&self) -> impl Iterator<Item = (usize, &Tensor)> + '_ {
        self.params
            .iter()
            .filter_map(|&(p, id)| self.get(id).map(|g| (p, g)))
    }
}

/// An append-only computation graph.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    backward_done: bool,
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Dimension {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn accumulate<'a>(slot: &'a mut Option<Tensor>, shape: &[usize]) -> &'a mut [f64] {
    slot.get_or_insert_with(|| Tensor::zeros(shape)).data_mut()
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    /// A leaf that receives no gradient bookkeeping beyond its own slot.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Constant, value)
    }

    /// A trainable leaf; `index` identifies the parameter in the caller's store.
    pub fn param(&mut self, value: Tensor, index: usize) -> NodeId {
        self.push(Op::Param(index), value)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        let ((m, k), (k2, n)) = match (ta.dims2(), tb.dims2()) {
            (Some(x), Some(y)) if x.1 == y.0 => (x, y),
            _ => return Err(shape_err("matmul", ta, tb)),
        };
        debug_assert_eq!(k, k2);
        let (ad, bd) = (ta.data(), tb.data());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let av = ad[i * k + p];
                if av == 0.0 {
                    continue;
                }
                let brow = &bd[p * n..(p + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
        let value = Tensor::matrix(m, n, out)?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    /// Matrix `[m×k]` times vector `[k]`, giving `[m]`.
    pub fn matvec(&mut self, a: NodeId, x: NodeId) -> Result<NodeId> {
        let (ta, tx) = (self.value(a), self.value(x));
        let (m, k) = match ta.dims2() {
            Some((m, k)) if tx.is_vector() && tx.len() == k => (m, k),
            _ => return Err(shape_err("matvec", ta, tx)),
        };
        let (ad, xd) = (ta.data(), tx.data());
        let out: Vec<f64> = (0..m)
            .map(|i| {
                ad[i * k..(i + 1) * k]
                    .iter()
                    .zip(xd)
                    .map(|(w, v)| w * v)
                    .sum()
            })
            .collect();
        Ok(self.push(Op::MatVec(a, x), Tensor::vector(out)))
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(name, ta, tb));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(op, value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Adds `bias[n]` to every row of `a[m×n]`. The only broadcast supported.
    pub fn add_row_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(bias));
        let (m, n) = match ta.dims2() {
            Some((m, n)) if tb.is_vector() && tb.len() == n => (m, n),
            _ => return Err(shape_err("add_row_bias", ta, tb)),
        };
        let bd = tb.data();
        let mut data = ta.data().to_vec();
        for r in 0..m {
            for (v, b) in data[r * n..(r + 1) * n].iter_mut().zip(bd) {
                *v += b;
            }
        }
        let value = Tensor::matrix(m, n, data)?;
        Ok(self.push(Op::AddRowBias(a, bias), value))
    }

    fn unary(&mut self, a: NodeId, f: impl Fn(f64) -> f64, op: Op) -> NodeId {
        let ta = self.value(a);
        let data = ta.data().iter().map(|&x| f(x)).collect();
        let value = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        self.push(op, value)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    /// Row `index` of a `[V×d]` table, as a `[d]` vector.
    pub fn lookup(&mut self, table: NodeId, index: usize) -> Result<NodeId> {
        let tt = self.value(table);
        let (rows, _) = tt.dims2().ok_or_else(|| {
            Error::Contract(format!("lookup table must be a matrix, got {:?}", tt.shape()))
        })?;
        if index >= rows {
            return Err(Error::Index {
                what: "lookup table",
                index,
                size: rows,
            });
        }
        let value = Tensor::vector(tt.row(index).to_vec());
        Ok(self.push(Op::Lookup { table, index }, value))
    }

    /// Contiguous sub-range `[start, start+len)` of a vector.
    pub fn slice(&mut self, input: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let t = self.value(input);
        if !t.is_vector() || len == 0 || start + len > t.len() {
            return Err(Error::Index {
                what: "slice",
                index: start + len,
                size: t.len(),
            });
        }
        let value = Tensor::vector(t.data()[start..start + len].to_vec());
        Ok(self.push(Op::Slice { input, start }, value))
    }

    /// Concatenation of vectors.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Contract("concat of zero vectors".into()));
        }
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if !t.is_vector() {
                return Err(Error::Contract(format!(
                    "concat expects vectors, got {:?}",
                    t.shape()
                )));
            }
            data.extend_from_slice(t.data());
        }
        Ok(self.push(Op::Concat(parts.to_vec()), Tensor::vector(data)))
    }

    /// Sum of scalar nodes.
    pub fn sum(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let mut total = 0.0;
        for &p in parts {
            let t = self.value(p);
            if !t.is_scalar() {
                return Err(Error::Contract(format!(
                    "sum expects scalars, got {:?}",
                    t.shape()
                )));
            }
            total += t.data()[0];
        }
        Ok(self.push(Op::Sum(parts.to_vec()), Tensor::scalar(total)))
    }

    /// `-ln softmax(logits)[gold]`, computed with max subtraction.
    pub fn softmax_nll(&mut self, logits: NodeId, gold: usize) -> Result<NodeId> {
        let t = self.value(logits);
        if !t.is_vector() {
            return Err(Error::Contract(format!(
                "softmax_nll expects a vector of logits, got {:?}",
                t.shape()
            )));
        }
        if gold >= t.len() {
            return Err(Error::Index {
                what: "gold label",
                index: gold,
                size: t.len(),
            });
        }
        let probs = softmax(t.data());
        let max = t.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max
            + t.data()
                .iter()
                .map(|&v| (v - max).exp())
                .sum::<f64>()
                .ln();
        let loss = log_z - t.data()[gold];
        Ok(self.push(
            Op::SoftmaxNll {
                logits,
                gold,
                probs,
            },
            Tensor::scalar(loss),
        ))
    }

    /// Back-propagates from a scalar `loss` with seed gradient 1.
    ///
    /// A graph supports exactly one backward pass; a second call is a
    /// contract error.
    pub fn backward(&mut self, loss: NodeId) -> Result<Gradients> {
        if self.backward_done {
            return Err(Error::Contract(
                "backward() already ran on this graph".into(),
            ));
        }
        if loss.0 >= self.nodes.len() {
            return Err(Error::Index {
                what: "graph node",
                index: loss.0,
                size: self.nodes.len(),
            });
        }
        if !self.value(loss).is_scalar() {
            return Err(Error::Contract(format!(
                "backward() needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        self.backward_done = true;

        let n = loss.0 + 1;
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..n).rev() {
            let Some(g) = grads[i].take() else { continue };
            let (before, _) = grads.split_at_mut(i);
            let node = &self.nodes[i];
            let gd = g.data();
            match &node.op {
                Op::Constant | Op::Param(_) => {}
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k) = ta.dims2().unwrap();
                    let (_, ncol) = tb.dims2().unwrap();
                    let (ad, bd) = (ta.data(), tb.data());
                    {
                        let da = accumulate(&mut before[a.0], ta.shape());
                        for r in 0..m {
                            for p in 0..k {
                                let mut s = 0.0;
                                for c in 0..ncol {
                                    s += gd[r * ncol + c] * bd[p * ncol + c];
                                }
                                da[r * k + p] += s;
                            }
                        }
                    }
                    let db = accumulate(&mut before[b.0], tb.shape());
                    for r in 0..m {
                        for p in 0..k {
                            let av = ad[r * k + p];
                            for c in 0..ncol {
                                db[p * ncol + c] += av * gd[r * ncol + c];
                            }
                        }
                    }
                }
                Op::MatVec(a, x) => {
                    let (ta, tx) = (self.value(*a), self.value(*x));
                    let (m, k) = ta.dims2().unwrap();
                    let (ad, xd) = (ta.data(), tx.data());
                    {
                        let da = accumulate(&mut before[a.0], ta.shape());
                        for r in 0..m {
                            let gr = gd[r];
                            if gr == 0.0 {
                                continue;
                            }
                            for (d, &xv) in da[r * k..(r + 1) * k].iter_mut().zip(xd) {
                                *d += gr * xv;
                            }
                        }
                    }
                    let dx = accumulate(&mut before[x.0], tx.shape());
                    for r in 0..m {
                        let gr = gd[r];
                        if gr == 0.0 {
                            continue;
                        }
                        for (d, &w) in dx.iter_mut().zip(&ad[r * k..(r + 1) * k]) {
                            *d += gr * w;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for id in [a, b] {
                        let shape = self.value(*id).shape();
                        for (d, &gv) in accumulate(&mut before[id.0], shape).iter_mut().zip(gd) {
                            *d += gv;
                        }
                    }
                }
                Op::AddRowBias(a, bias) => {
                    let shape = self.value(*a).shape();
                    for (d, &gv) in accumulate(&mut before[a.0], shape).iter_mut().zip(gd) {
                        *d += gv;
                    }
                    let tb = self.value(*bias);
                    let ncol = tb.len();
                    let db = accumulate(&mut before[bias.0], tb.shape());
                    for (j, &gv) in gd.iter().enumerate() {
                        db[j % ncol] += gv;
                    }
                }
                Op::Mul(a, b) => {
                    let (ad, bd) = (self.value(*a).data(), self.value(*b).data());
                    {
                        let da = accumulate(&mut before[a.0], self.value(*a).shape());
                        for ((d, &gv), &bv) in da.iter_mut().zip(gd).zip(bd) {
                            *d += gv * bv;
                        }
                    }
                    let db = accumulate(&mut before[b.0], self.value(*b).shape());
                    for ((d, &gv), &av) in db.iter_mut().zip(gd).zip(ad) {
                        *d += gv * av;
                    }
                }
                Op::Tanh(a) => {
                    let out = node.value.data();
                    let da = accumulate(&mut before[a.0], self.value(*a).shape());
                    for ((d, &gv), &y) in da.iter_mut().zip(gd).zip(out) {
                        *d += gv * (1.0 - y * y);
                    }
                }
                Op::Sigmoid(a) => {
                    let out = node.value.data();
                    let da = accumulate(&mut before[a.0], self.value(*a).shape());
                    for ((d, &gv), &y) in da.iter_mut().zip(gd).zip(out) {
                        *d += gv * y * (1.0 - y);
                    }
                }
                Op::Lookup { table, index } => {
                    let tt = self.value(*table);
                    let (_, cols) = tt.dims2().unwrap();
                    let dt = accumulate(&mut before[table.0], tt.shape());
                    for (d, &gv) in dt[index * cols..(index + 1) * cols].iter_mut().zip(gd) {
                        *d += gv;
                    }
                }
                Op::Slice { input, start } => {
                    let shape = self.value(*input).shape();
                    let di = accumulate(&mut before[input.0], shape);
                    for (d, &gv) in di[*start..*start + gd.len()].iter_mut().zip(gd) {
                        *d += gv;
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let t = self.value(*p);
                        let len = t.len();
                        let dp = accumulate(&mut before[p.0], t.shape());
                        for (d, &gv) in dp.iter_mut().zip(&gd[offset..offset + len]) {
                            *d += gv;
                        }
                        offset += len;
                    }
                }
                Op::Sum(parts) => {
                    for p in parts {
                        accumulate(&mut before[p.0], &[1])[0] += gd[0];
                    }
                }
                Op::SoftmaxNll {
                    logits,
                    gold,
                    probs,
                } => {
                    let dl = accumulate(&mut before[logits.0], self.value(*logits).shape());
                    for (j, (d, &p)) in dl.iter_mut().zip(probs).enumerate() {
                        let onehot = if j == *gold { 1.0 } else { 0.0 };
                        *d += gd[0] * (p - onehot);
                    }
                }
            }
            grads[i] = Some(g);
        }

        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Param(p) => Some((p, NodeId(i))),
                _ => None,
            })
            .collect();
        Ok(Gradients {
            by_node: grads,
            params,
        })
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Inverted-dropout mask: each entry is `1/(1-rate)` with probability
/// `1-rate`, else 0. Callers reuse one mask across all time steps of a
/// sequence.
pub fn dropout_mask<R: Rng + ?Sized>(shape: &[usize], rate: f64, rng: &mut R) -> Result<Tensor> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Contract(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    let numel: usize = shape.iter().product();
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let data = (0..numel)
        .map(|_| {
            if rate == 0.0 || rng.gen::<f64>() < keep {
                scale
            } else {
                0.0
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matmul_identity_and_hand_case() {
        let mut g = Graph::new();
        let i2 = g.constant(Tensor::identity(2));
        let m = g.constant(Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let out = g.matmul(i2, m).unwrap();
        assert_eq!(g.value(out).data(), &[1.0, 2.0, 3.0, 4.0]);

        let a = g.constant(Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap());
        let b = g.constant(Tensor::matrix(2, 1, vec![3.0, 4.0]).unwrap());
        let out = g.matmul(a, b).unwrap();
        assert_eq!(g.value(out).shape(), &[1, 1]);
        assert_eq!(g.value(out).data(), &[11.0]);
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[2, 3]));
        let err = g.matmul(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]"), "{msg}");
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn elementwise_basics() {
        let mut g = Graph::new();
        let z = g.constant(Tensor::scalar(0.0));
        let t = g.tanh(z);
        let s = g.sigmoid(z);
        assert_eq!(g.value(t).data(), &[0.0]);
        assert_eq!(g.value(s).data(), &[0.5]);

        let a = g.constant(Tensor::vector(vec![1.0, 2.0]));
        let b = g.constant(Tensor::vector(vec![1.0, 2.0, 3.0]));
        assert!(matches!(g.add(a, b), Err(Error::Dimension { .. })));
        assert!(matches!(g.mul(a, b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn lookup_returns_row_and_accumulates() {
        let mut g = Graph::new();
        let table = g.param(Tensor::identity(3), 0);
        let r = g.lookup(table, 1).unwrap();
        assert_eq!(g.value(r).data(), &[0.0, 1.0, 0.0]);
        assert!(matches!(g.lookup(table, 3), Err(Error::Index { .. })));

        let r2 = g.lookup(table, 1).unwrap();
        let both = g.add(r, r2).unwrap();
        let w = g.constant(Tensor::matrix(1, 3, vec![1.0, 2.0, 3.0]).unwrap());
        let dot = g.matvec(w, both).unwrap();
        let grads = g.backward(dot).unwrap();
        let dt = grads.get(table).unwrap();
        assert_eq!(dt.data(), &[0.0, 0.0, 0.0, 2.0, 4.0, 6.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn softmax_nll_cases() {
        let mut g = Graph::new();
        let l = g.constant(Tensor::vector(vec![0.3; 4]));
        let loss = g.softmax_nll(l, 2).unwrap();
        assert!((g.value(loss).data()[0] - 4f64.ln()).abs() < 1e-12);

        let l = g.constant(Tensor::vector(vec![1000.0, 0.0]));
        let loss = g.softmax_nll(l, 0).unwrap();
        let v = g.value(loss).data()[0];
        assert!(v.is_finite() && v.abs() < 1e-12);

        assert!(matches!(g.softmax_nll(l, 2), Err(Error::Index { .. })));
    }

    #[test]
    fn softmax_nll_gradient_is_probs_minus_onehot() {
        let logits = vec![0.5, -1.0, 2.0];
        let mut g = Graph::new();
        let l = g.param(Tensor::vector(logits.clone()), 0);
        let loss = g.softmax_nll(l, 1).unwrap();
        let grads = g.backward(loss).unwrap();
        let p = softmax(&logits);
        let expect = [p[0], p[1] - 1.0, p[2]];
        for (a, b) in grads.get(l).unwrap().data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn backward_twice_is_contract_error() {
        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(2.0), 0);
        let y = g.mul(x, x).unwrap();
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[4.0]);
        assert!(matches!(g.backward(y), Err(Error::Contract(_))));
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(vec![1.0, 2.0]), 0);
        let y = g.tanh(x);
        assert!(matches!(g.backward(y), Err(Error::Contract(_))));
    }

    #[test]
    fn dropout_mask_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = dropout_mask(&[5], 0.0, &mut rng).unwrap();
        assert!(m.data().iter().all(|&v| v == 1.0));
        assert!(dropout_mask(&[5], 1.0, &mut rng).is_err());
        assert!(dropout_mask(&[5], -0.1, &mut rng).is_err());

        let a = dropout_mask(&[64], 0.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = dropout_mask(&[64], 0.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn dropout_mask_mean_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = dropout_mask(&[10_000], 0.5, &mut rng).unwrap();
        let mean = m.data().iter().sum::<f64>() / m.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }
}
