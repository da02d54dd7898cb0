// Wengert-style tape. Nodes are appended in evaluation order, so the node
// vector is already a topological order and backward is a reverse sweep.

use std::borrow::Cow;
use std::collections::HashMap;

use super::{AutodiffError, ParamId, ParamSet, Tensor};

/// Floor applied to probabilities before taking `-ln`.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseKind {
    Add,
    Hadamard,
    Tanh,
    Sigmoid,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    OneMinus(NodeId),
    Gather {
        table: NodeId,
        rows: Vec<usize>,
    },
    ConcatCols(Vec<NodeId>),
    Softmax(NodeId),
    WeightedSum {
        weights: NodeId,
        items: Vec<NodeId>,
    },
    Nll {
        dist: NodeId,
        targets: Vec<usize>,
        weights: Vec<f64>,
    },
    Sum(NodeId),
    SelectRows {
        mask: Vec<bool>,
        on: NodeId,
        off: NodeId,
    },
}

impl Op {
    fn kind(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Hadamard(..) => "hadamard",
            Op::AddBias(..) => "add_bias",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::OneMinus(_) => "one_minus",
            Op::Gather { .. } => "gather",
            Op::ConcatCols(_) => "concat_cols",
            Op::Softmax(_) => "softmax",
            Op::WeightedSum { .. } => "weighted_sum",
            Op::Nll { .. } => "nll",
            Op::Sum(_) => "sum",
            Op::SelectRows { .. } => "select_rows",
        }
    }

    fn parents(&self) -> Vec<NodeId> {
        match self {
            Op::Leaf | Op::Param(_) => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Hadamard(a, b) | Op::AddBias(a, b) => {
                vec![*a, *b]
            }
            Op::Tanh(a) | Op::Sigmoid(a) | Op::OneMinus(a) | Op::Softmax(a) | Op::Sum(a) => {
                vec![*a]
            }
            Op::Gather { table, .. } => vec![*table],
            Op::ConcatCols(parts) => parts.clone(),
            Op::WeightedSum { weights, items } => {
                let mut p = vec![*weights];
                p.extend(items.iter().copied());
                p
            }
            Op::Nll { dist, .. } => vec![*dist],
            Op::SelectRows { on, off, .. } => vec![*on, *off],
        }
    }
}

struct Node<'p> {
    value: Cow<'p, Tensor>,
    op: Op,
}

/// Records a forward computation. Parameter values are borrowed from a
/// [`ParamSet`]; every other value is owned by the tape and never mutated.
pub struct Tape<'p> {
    nodes: Vec<Node<'p>>,
    param_nodes: HashMap<ParamId, NodeId>,
    clamped: usize,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
            clamped: 0,
        }
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

    pub fn op_kind(&self, id: NodeId) -> &'static str {
        self.nodes[id.0].op.kind()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// The parameter a node was registered from, if any.
    pub fn param_of(&self, id: NodeId) -> Option<ParamId> {
        match self.nodes[id.0].op {
            Op::Param(p) => Some(p),
            _ => None,
        }
    }

    pub fn parents(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes[id.0].op.parents()
    }

    /// Number of probabilities that fell below [`PROB_FLOOR`] in `nll`.
    pub fn clamped_probabilities(&self) -> usize {
        self.clamped
    }

    fn push(&mut self, value: Cow<'p, Tensor>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    fn push_owned(&mut self, value: Tensor, op: Op) -> NodeId {
        self.push(Cow::Owned(value), op)
    }

    /// A constant input; receives a gradient but is not a parameter.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push_owned(value, Op::Leaf)
    }

    /// Registers a parameter once per tape; later calls return the same node.
    pub fn param(&mut self, params: &'p ParamSet, id: ParamId) -> NodeId {
        if let Some(&node) = self.param_nodes.get(&id) {
            return node;
        }
        let node = self.push(Cow::Borrowed(params.get(id)), Op::Param(id));
        self.param_nodes.insert(id, node);
        node
    }

    fn dims(&self, id: NodeId) -> (usize, usize) {
        let v = self.value(id);
        (v.rows(), v.cols())
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<(), AutodiffError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if self.dims(a) != self.dims(b) {
            return Err(AutodiffError::ShapeMismatch {
                op,
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        if k != k2 {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                left: self.value(a).shape().to_vec(),
                right: self.value(b).shape().to_vec(),
            });
        }
        let mut out = vec![0.0; m * n];
        gemm(
            m,
            k,
            n,
            self.value(a).data(),
            false,
            self.value(b).data(),
            false,
            &mut out,
        );
        Ok(self.push_owned(Tensor::matrix(m, n, out)?, Op::MatMul(a, b)))
    }

    pub fn elementwise(
        &mut self,
        kind: ElementwiseKind,
        x: NodeId,
        y: Option<NodeId>,
    ) -> Result<NodeId, AutodiffError> {
        match (kind, y) {
            (ElementwiseKind::Add, Some(y)) => self.add(x, y),
            (ElementwiseKind::Hadamard, Some(y)) => self.hadamard(x, y),
            (ElementwiseKind::Tanh, None) => Ok(self.tanh(x)),
            (ElementwiseKind::Sigmoid, None) => Ok(self.sigmoid(x)),
            (kind, _) => Err(AutodiffError::Arity {
                op: match kind {
                    ElementwiseKind::Add => "add",
                    ElementwiseKind::Hadamard => "hadamard",
                    ElementwiseKind::Tanh => "tanh",
                    ElementwiseKind::Sigmoid => "sigmoid",
                },
            }),
        }
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.same_shape("add", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x + y);
        Ok(self.push_owned(out, Op::Add(a, b)))
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.same_shape("hadamard", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x * y);
        Ok(self.push_owned(out, Op::Hadamard(a, b)))
    }

    /// `a[m×n] + bias[1×n]`, bias broadcast over rows.
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId, AutodiffError> {
        let (m, n) = self.dims(a);
        if self.dims(bias) != (1, n) {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_bias",
                left: self.value(a).shape().to_vec(),
                right: self.value(bias).shape().to_vec(),
            });
        }
        let b = self.value(bias).data();
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_exact_mut(n) {
            for (o, bv) in row.iter_mut().zip(b) {
                *o += bv;
            }
        }
        Ok(self.push_owned(Tensor::matrix(m, n, out)?, Op::AddBias(a, bias)))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let out = map(self.value(a), f64::tanh);
        self.push_owned(out, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let out = map(self.value(a), sigmoid);
        self.push_owned(out, Op::Sigmoid(a))
    }

    /// `1 - a`, elementwise.
    pub fn one_minus(&mut self, a: NodeId) -> NodeId {
        let out = map(self.value(a), |x| 1.0 - x);
        self.push_owned(out, Op::OneMinus(a))
    }

    /// Row lookup into a `[V × d]` table; produces `[rows.len() × d]`.
    pub fn gather(&mut self, table: NodeId, rows: &[usize]) -> Result<NodeId, AutodiffError> {
        let (v, d) = self.dims(table);
        let src = self.value(table).data();
        let mut out = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            if r >= v {
                return Err(AutodiffError::IndexOutOfRange {
                    op: "gather",
                    index: r,
                    bound: v,
                });
            }
            out.extend_from_slice(&src[r * d..(r + 1) * d]);
        }
        Ok(self.push_owned(
            Tensor::matrix(rows.len(), d, out)?,
            Op::Gather {
                table,
                rows: rows.to_vec(),
            },
        ))
    }

    /// Column-wise concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, AutodiffError> {
        let first = *parts.first().ok_or(AutodiffError::EmptyInput { op: "concat_cols" })?;
        let m = self.dims(first).0;
        for &p in parts {
            if self.dims(p).0 != m {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat_cols",
                    left: self.value(first).shape().to_vec(),
                    right: self.value(p).shape().to_vec(),
                });
            }
        }
        let total: usize = parts.iter().map(|&p| self.dims(p).1).sum();
        let mut out = Vec::with_capacity(m * total);
        for r in 0..m {
            for &p in parts {
                out.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        Ok(self.push_owned(Tensor::matrix(m, total, out)?, Op::ConcatCols(parts.to_vec())))
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.masked_softmax(a, None)
    }

    /// Row-wise softmax restricted to entries where `mask[r * n + j]` is set.
    /// Masked entries come out exactly zero. Every row needs one live entry.
    pub fn masked_softmax(
        &mut self,
        a: NodeId,
        mask: Option<&[bool]>,
    ) -> Result<NodeId, AutodiffError> {
        let (m, n) = self.dims(a);
        if n == 0 || m == 0 {
            return Err(AutodiffError::EmptyInput { op: "softmax" });
        }
        if let Some(mask) = mask {
            if mask.len() != m * n {
                return Err(AutodiffError::ShapeMismatch {
                    op: "softmax",
                    left: vec![m, n],
                    right: vec![mask.len()],
                });
            }
        }
        let src = self.value(a).data();
        let mut out = vec![0.0; m * n];
        for r in 0..m {
            let row = &src[r * n..(r + 1) * n];
            let live = |j: usize| mask.is_none_or(|mk| mk[r * n + j]);
            let mut max = f64::NEG_INFINITY;
            for (j, &x) in row.iter().enumerate() {
                if live(j) && x > max {
                    max = x;
                }
            }
            if max == f64::NEG_INFINITY {
                return Err(AutodiffError::EmptyInput { op: "softmax" });
            }
            let dst = &mut out[r * n..(r + 1) * n];
            let mut total = 0.0;
            for (j, &x) in row.iter().enumerate() {
                if live(j) {
                    let e = (x - max).exp();
                    dst[j] = e;
                    total += e;
                }
            }
            for v in dst.iter_mut() {
                *v /= total;
            }
        }
        Ok(self.push_owned(Tensor::matrix(m, n, out)?, Op::Softmax(a)))
    }

    /// `Σ_i weights[:, i] ⊙ items[i]`, each weight column broadcast across
    /// the columns of its item.
    pub fn weighted_sum(
        &mut self,
        weights: NodeId,
        items: &[NodeId],
    ) -> Result<NodeId, AutodiffError> {
        let (m, k) = self.dims(weights);
        let first = *items.first().ok_or(AutodiffError::EmptyInput {
            op: "weighted_sum",
        })?;
        if k != items.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "weighted_sum",
                left: vec![m, k],
                right: vec![items.len()],
            });
        }
        let d = self.dims(first).1;
        for &it in items {
            if self.dims(it) != (m, d) {
                return Err(AutodiffError::ShapeMismatch {
                    op: "weighted_sum",
                    left: self.value(first).shape().to_vec(),
                    right: self.value(it).shape().to_vec(),
                });
            }
        }
        let w = self.value(weights).data();
        let mut out = vec![0.0; m * d];
        for (i, &it) in items.iter().enumerate() {
            let src = self.value(it).data();
            for r in 0..m {
                let wi = w[r * k + i];
                let dst = &mut out[r * d..(r + 1) * d];
                for (o, s) in dst.iter_mut().zip(&src[r * d..(r + 1) * d]) {
                    *o += wi * s;
                }
            }
        }
        Ok(self.push_owned(
            Tensor::matrix(m, d, out)?,
            Op::WeightedSum {
                weights,
                items: items.to_vec(),
            },
        ))
    }

    /// Per-row weighted negative log-likelihood: `out[r] = -w_r ln p[r, t_r]`,
    /// `p` floored at [`PROB_FLOOR`]. Produces `[m × 1]`.
    pub fn nll(
        &mut self,
        dist: NodeId,
        targets: &[usize],
        weights: &[f64],
    ) -> Result<NodeId, AutodiffError> {
        let (m, n) = self.dims(dist);
        if targets.len() != m || weights.len() != m {
            return Err(AutodiffError::ShapeMismatch {
                op: "nll",
                left: vec![m, n],
                right: vec![targets.len()],
            });
        }
        let mut out = vec![0.0; m];
        let mut clamped = 0;
        {
            let p = self.value(dist).data();
            for r in 0..m {
                let t = targets[r];
                if t >= n {
                    return Err(AutodiffError::IndexOutOfRange {
                        op: "nll",
                        index: t,
                        bound: n,
                    });
                }
                if weights[r] == 0.0 {
                    continue;
                }
                let mut pt = p[r * n + t];
                if pt < PROB_FLOOR {
                    pt = PROB_FLOOR;
                    clamped += 1;
                }
                out[r] = -weights[r] * pt.ln();
            }
        }
        self.clamped += clamped;
        Ok(self.push_owned(
            Tensor::matrix(m, 1, out)?,
            Op::Nll {
                dist,
                targets: targets.to_vec(),
                weights: weights.to_vec(),
            },
        ))
    }

    /// Negative log-probability of one target symbol; a `[1 × 1]` node.
    pub fn cross_entropy(&mut self, dist: NodeId, target: usize) -> Result<NodeId, AutodiffError> {
        if self.dims(dist).0 != 1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "cross_entropy",
                left: self.value(dist).shape().to_vec(),
                right: vec![1],
            });
        }
        self.nll(dist, &[target], &[1.0])
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        // Fixed left-to-right order keeps the result bit-reproducible.
        let total = self.value(a).data().iter().fold(0.0, |acc, v| acc + v);
        self.push_owned(Tensor::scalar(total), Op::Sum(a))
    }

    /// Row `r` of the result comes from `on` where `mask[r]`, else from `off`.
    pub fn select_rows(
        &mut self,
        mask: &[bool],
        on: NodeId,
        off: NodeId,
    ) -> Result<NodeId, AutodiffError> {
        self.same_shape("select_rows", on, off)?;
        let (m, n) = self.dims(on);
        if mask.len() != m {
            return Err(AutodiffError::ShapeMismatch {
                op: "select_rows",
                left: vec![m, n],
                right: vec![mask.len()],
            });
        }
        let mut out = Vec::with_capacity(m * n);
        for (r, &keep) in mask.iter().enumerate() {
            let src = if keep { on } else { off };
            out.extend_from_slice(self.value(src).row_slice(r));
        }
        Ok(self.push_owned(
            Tensor::matrix(m, n, out)?,
            Op::SelectRows {
                mask: mask.to_vec(),
                on,
                off,
            },
        ))
    }

    /// Reverse sweep from a scalar node.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients, AutodiffError> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(AutodiffError::NonScalarLoss {
                shape: lv.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::filled(lv.shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let (lower, upper) = grads.split_at_mut(i);
            let Some(g) = upper[0].as_ref() else {
                continue;
            };
            let g = g.data();
            let node = &self.nodes[i];
            let y = node.value.data();
            match &node.op {
                Op::Leaf | Op::Param(_) => {}
                Op::MatMul(a, b) => {
                    let (m, k) = self.dims(*a);
                    let n = self.dims(*b).1;
                    // dA = dC · Bᵀ ; dB = Aᵀ · dC
                    let bv = self.value(*b).data();
                    let av = self.value(*a).data();
                    gemm(m, n, k, g, false, bv, true, acc(lower, &self.nodes, *a));
                    gemm(k, m, n, av, true, g, false, acc(lower, &self.nodes, *b));
                }
                Op::Add(a, b) => {
                    add_into(acc(lower, &self.nodes, *a), g);
                    add_into(acc(lower, &self.nodes, *b), g);
                }
                Op::Hadamard(a, b) => {
                    let av = self.value(*a).data();
                    let bv = self.value(*b).data();
                    for ((d, gi), bi) in acc(lower, &self.nodes, *a).iter_mut().zip(g).zip(bv) {
                        *d += gi * bi;
                    }
                    for ((d, gi), ai) in acc(lower, &self.nodes, *b).iter_mut().zip(g).zip(av) {
                        *d += gi * ai;
                    }
                }
                Op::AddBias(a, bias) => {
                    add_into(acc(lower, &self.nodes, *a), g);
                    let n = self.dims(*bias).1;
                    let db = acc(lower, &self.nodes, *bias);
                    for row in g.chunks_exact(n) {
                        add_into(db, row);
                    }
                }
                Op::Tanh(a) => {
                    for ((d, gi), yi) in acc(lower, &self.nodes, *a).iter_mut().zip(g).zip(y) {
                        *d += gi * (1.0 - yi * yi);
                    }
                }
                Op::Sigmoid(a) => {
                    for ((d, gi), yi) in acc(lower, &self.nodes, *a).iter_mut().zip(g).zip(y) {
                        *d += gi * yi * (1.0 - yi);
                    }
                }
                Op::OneMinus(a) => {
                    for (d, gi) in acc(lower, &self.nodes, *a).iter_mut().zip(g) {
                        *d -= gi;
                    }
                }
                Op::Gather { table, rows } => {
                    let d = self.dims(*table).1;
                    let dt = acc(lower, &self.nodes, *table);
                    for (k, &r) in rows.iter().enumerate() {
                        add_into(&mut dt[r * d..(r + 1) * d], &g[k * d..(k + 1) * d]);
                    }
                }
                Op::ConcatCols(parts) => {
                    let total = node.value.cols();
                    let m = node.value.rows();
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.dims(p).1;
                        let dp = acc(lower, &self.nodes, p);
                        for r in 0..m {
                            add_into(
                                &mut dp[r * w..(r + 1) * w],
                                &g[r * total + offset..r * total + offset + w],
                            );
                        }
                        offset += w;
                    }
                }
                Op::Softmax(a) => {
                    let n = node.value.cols();
                    let da = acc(lower, &self.nodes, *a);
                    for ((dr, gr), yr) in da
                        .chunks_exact_mut(n)
                        .zip(g.chunks_exact(n))
                        .zip(y.chunks_exact(n))
                    {
                        let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                        for ((d, gi), yi) in dr.iter_mut().zip(gr).zip(yr) {
                            *d += yi * (gi - dot);
                        }
                    }
                }
                Op::WeightedSum { weights, items } => {
                    let (m, k) = self.dims(*weights);
                    let d = node.value.cols();
                    let w = self.value(*weights).data();
                    let mut dw = vec![0.0; m * k];
                    for (i, &it) in items.iter().enumerate() {
                        let iv = self.value(it).data();
                        for r in 0..m {
                            let gr = &g[r * d..(r + 1) * d];
                            dw[r * k + i] +=
                                gr.iter().zip(&iv[r * d..(r + 1) * d]).map(|(a, b)| a * b).sum::<f64>();
                        }
                        let di = acc(lower, &self.nodes, it);
                        for r in 0..m {
                            let wi = w[r * k + i];
                            for (dv, gv) in di[r * d..(r + 1) * d].iter_mut().zip(&g[r * d..(r + 1) * d]) {
                                *dv += wi * gv;
                            }
                        }
                    }
                    add_into(acc(lower, &self.nodes, *weights), &dw);
                }
                Op::Nll {
                    dist,
                    targets,
                    weights,
                } => {
                    let n = self.dims(*dist).1;
                    let p = self.value(*dist).data();
                    let dd = acc(lower, &self.nodes, *dist);
                    for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                        let pt = p[r * n + t];
                        if w != 0.0 && pt >= PROB_FLOOR {
                            dd[r * n + t] -= g[r] * w / pt;
                        }
                    }
                }
                Op::Sum(a) => {
                    let s = g[0];
                    for d in acc(lower, &self.nodes, *a).iter_mut() {
                        *d += s;
                    }
                }
                Op::SelectRows { mask, on, off } => {
                    let n = node.value.cols();
                    for (r, &keep) in mask.iter().enumerate() {
                        let dst = acc(lower, &self.nodes, if keep { *on } else { *off });
                        add_into(&mut dst[r * n..(r + 1) * n], &g[r * n..(r + 1) * n]);
                    }
                }
            }
        }

        let grads = grads
            .into_iter()
            .zip(&self.nodes)
            .map(|(g, node)| g.unwrap_or_else(|| Tensor::zeros(node.value.shape())))
            .collect();
        let params = self
            .param_nodes
            .iter()
            .map(|(&pid, &nid)| (pid, nid))
            .collect();
        Ok(Gradients { grads, params })
    }
}

/// Result of a reverse sweep: one gradient per node, shaped like its value.
pub struct Gradients {
    grads: Vec<Tensor>,
    params: Vec<(ParamId, NodeId)>,
}

impl Gradients {
    pub fn wrt(&self, id: NodeId) -> &Tensor {
        &self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Parameter gradients reached by this sweep.
    pub fn params(&self) -> impl Iterator<Item = (ParamId, &Tensor)> + '_ {
        self.params.iter().map(|&(p, n)| (p, &self.grads[n.0]))
    }
}

/// Accumulated parameter gradients, one zero-initialised entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct GradStore {
    grads: Vec<Tensor>,
}

impl GradStore {
    pub fn zeros_like(params: &ParamSet) -> Self {
        GradStore {
            grads: params.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn from_backward(params: &ParamSet, grads: &Gradients) -> Self {
        let mut store = Self::zeros_like(params);
        store.absorb(grads);
        store
    }

    pub fn absorb(&mut self, grads: &Gradients) {
        for (pid, g) in grads.params() {
            add_into(self.grads[pid.index()].data_mut(), g.data());
        }
    }

    pub fn zero(&mut self) {
        for g in &mut self.grads {
            g.data_mut().fill(0.0);
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.grads[id.index()]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.grads.iter()
    }
}

fn acc<'a>(lower: &'a mut [Option<Tensor>], nodes: &[Node<'_>], id: NodeId) -> &'a mut [f64] {
    lower[id.0]
        .get_or_insert_with(|| Tensor::zeros(nodes[id.0].value.shape()))
        .data_mut()
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(t.shape().to_vec(), t.data().iter().map(|&x| f(x)).collect())
        .expect("shape preserved")
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor::new(
        a.shape().to_vec(),
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
    )
    .expect("shape preserved")
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `c += op(a) · op(b)` for row-major operands, where `op` optionally
/// transposes. Logical shapes: `op(a)` is `m×k`, `op(b)` is `k×n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    c: &mut [f64],
) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    let (rsa, csa) = if a_trans { (1, m) } else { (k, 1) };
    let (rsb, csb) = if b_trans { (1, k) } else { (n, 1) };
    // SAFETY: the asserts above bound every index the kernel touches by the
    // slice lengths, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
