//! The autodiff tape: eager forward evaluation, recorded ops, one backward pass.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{s, Array2, Axis};
use rand_chacha::ChaCha20Rng;

use super::params::{ParamId, ParamStore};

pub type NodeId = usize;

const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

enum Value {
    Owned(Array2<f64>),
    Shared(Arc<Array2<f64>>),
}

impl Value {
    fn get(&self) -> &Array2<f64> {
        match self {
            Value::Owned(a) => a,
            Value::Shared(a) => a,
        }
    }
}

enum Op {
    /// Leaf node; `param` links it to a [`ParamStore`] slot for gradient flow.
    Leaf { param: Option<ParamId> },
    /// Row gather: `out[r, :] = table[ids[r], :]`.
    Gather { table: NodeId, ids: Vec<usize> },
    /// `a @ b`
    MatMul { a: NodeId, b: NodeId },
    /// `a @ b.T` (linear layers keep weights in `[out, in]` layout)
    MatMulTransB { a: NodeId, b: NodeId },
    /// Elementwise sum of same-shape matrices.
    Add { a: NodeId, b: NodeId },
    /// `[n, d] + [1, d]`, broadcast over rows.
    AddRow { a: NodeId, row: NodeId },
    /// Elementwise product of same-shape matrices.
    Mul { a: NodeId, b: NodeId },
    /// Elementwise product with a constant mask (dropout).
    MulMask { a: NodeId, mask: Array2<f64> },
    /// Add a constant row vector to every row (additive attention mask).
    AddConstRow { a: NodeId },
    Scale { a: NodeId, c: f64 },
    AddScalar { a: NodeId },
    /// Per-row layer normalization with learned gain/bias (`[1, d]` each).
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        eps: f64,
    },
    SoftmaxRows { x: NodeId },
    LogSoftmaxRows { x: NodeId },
    Gelu { x: NodeId },
    Tanh { x: NodeId },
    Sigmoid { x: NodeId },
    Relu { x: NodeId },
    SliceCols { x: NodeId, start: usize, len: usize },
    ConcatCols { parts: Vec<NodeId> },
    SliceRows { x: NodeId, start: usize, len: usize },
    /// Cosine similarity of two row vectors, denominators clamped at `floor`.
    CosineSim { a: NodeId, b: NodeId, floor: f64 },
    /// `[1,1]` from `x[0, col]`.
    PickCol { x: NodeId, col: usize },
    /// Arithmetic mean of scalar nodes.
    MeanScalars { parts: Vec<NodeId> },
    /// Sum of all entries, `[1,1]`.
    SumAll { x: NodeId },
}

struct Node {
    value: Value,
    op: Op,
}

/// A single-use computation graph. Build it forward, call [`Tape::backward`]
/// once from a scalar root, then drop it.
pub struct Tape {
    nodes: Vec<Node>,
    param_nodes: HashMap<ParamId, NodeId>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value of a node. Forward evaluation is eager, so this is always ready.
    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        self.nodes[id].value.get()
    }

    /// Scalar value of a `[1,1]` node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        assert_eq!(v.dim(), (1, 1), "scalar() called on non-scalar node");
        v[[0, 0]]
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> NodeId {
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        self.nodes.len() - 1
    }

    pub fn constant(&mut self, value: Array2<f64>) -> NodeId {
        self.push(value, Op::Leaf { param: None })
    }

    /// Leaf for a stored parameter. Repeated calls for the same parameter
    /// return the same node, so multi-use parameters accumulate gradients.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        if let Some(&n) = self.param_nodes.get(&id) {
            return n;
        }
        self.nodes.push(Node {
            value: Value::Shared(Arc::clone(store.value_arc(id))),
            op: Op::Leaf { param: Some(id) },
        });
        let n = self.nodes.len() - 1;
        self.param_nodes.insert(id, n);
        n
    }

    pub fn gather(&mut self, table: NodeId, ids: &[usize]) -> NodeId {
        let t = self.value(table);
        let d = t.ncols();
        let mut out = Array2::zeros((ids.len(), d));
        for (r, &i) in ids.iter().enumerate() {
            out.row_mut(r).assign(&t.row(i));
        }
        self.push(
            out,
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
        )
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul { a, b })
    }

    pub fn matmul_tb(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).dot(&self.value(b).t());
        self.push(v, Op::MatMulTransB { a, b })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.value(a).dim(), self.value(b).dim());
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add { a, b })
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        debug_assert_eq!(self.value(row).nrows(), 1);
        let v = self.value(a) + &self.value(row).row(0);
        self.push(v, Op::AddRow { a, row })
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.value(a).dim(), self.value(b).dim());
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Mul { a, b })
    }

    pub fn mul_mask(&mut self, a: NodeId, mask: Array2<f64>) -> NodeId {
        debug_assert_eq!(self.value(a).dim(), mask.dim());
        let v = self.value(a) * &mask;
        self.push(v, Op::MulMask { a, mask })
    }

    pub fn add_const_row(&mut self, a: NodeId, row: Vec<f64>) -> NodeId {
        debug_assert_eq!(self.value(a).ncols(), row.len());
        let mut v = self.value(a).clone();
        for mut r in v.rows_mut() {
            for (x, m) in r.iter_mut().zip(row.iter()) {
                *x += m;
            }
        }
        self.push(v, Op::AddConstRow { a })
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a) * c;
        self.push(v, Op::Scale { a, c })
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a) + c;
        self.push(v, Op::AddScalar { a })
    }

    pub fn layer_norm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId, eps: f64) -> NodeId {
        let xv = self.value(x);
        let g = self.value(gamma);
        let b = self.value(beta);
        debug_assert_eq!(g.dim(), (1, xv.ncols()));
        debug_assert_eq!(b.dim(), (1, xv.ncols()));
        let mut out = Array2::zeros(xv.dim());
        for (r, row) in xv.rows().into_iter().enumerate() {
            let (mean, rstd) = row_moments(row, eps);
            for (c, &v) in row.iter().enumerate() {
                out[[r, c]] = (v - mean) * rstd * g[[0, c]] + b[[0, c]];
            }
        }
        self.push(out, Op::LayerNorm { x, gamma, beta, eps })
    }

    pub fn softmax_rows(&mut self, x: NodeId) -> NodeId {
        let mut v = self.value(x).clone();
        for mut row in v.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for e in row.iter_mut() {
                *e = (*e - max).exp();
                sum += *e;
            }
            for e in row.iter_mut() {
                *e /= sum;
            }
        }
        self.push(v, Op::SoftmaxRows { x })
    }

    pub fn log_softmax_rows(&mut self, x: NodeId) -> NodeId {
        let mut v = self.value(x).clone();
        for mut row in v.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
            for e in row.iter_mut() {
                *e -= lse;
            }
        }
        self.push(v, Op::LogSoftmaxRows { x })
    }

    pub fn gelu(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).mapv(|t| 0.5 * t * (1.0 + libm::erf(t * INV_SQRT_2)));
        self.push(v, Op::Gelu { x })
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).mapv(f64::tanh);
        self.push(v, Op::Tanh { x })
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).mapv(|t| 1.0 / (1.0 + (-t).exp()));
        self.push(v, Op::Sigmoid { x })
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).mapv(|t| t.max(0.0));
        self.push(v, Op::Relu { x })
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(x).slice(s![.., start..start + len]).to_owned();
        self.push(v, Op::SliceCols { x, start, len })
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        let n = self.value(parts[0]).nrows();
        let total: usize = parts.iter().map(|&p| self.value(p).ncols()).sum();
        let mut out = Array2::zeros((n, total));
        let mut at = 0;
        for &p in parts {
            let v = self.value(p);
            debug_assert_eq!(v.nrows(), n);
            out.slice_mut(s![.., at..at + v.ncols()]).assign(v);
            at += v.ncols();
        }
        self.push(
            out,
            Op::ConcatCols {
                parts: parts.to_vec(),
            },
        )
    }

    pub fn slice_rows(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(x).slice(s![start..start + len, ..]).to_owned();
        self.push(v, Op::SliceRows { x, start, len })
    }

    /// Cosine similarity of two `[1, d]` nodes. Denominator norms are clamped
    /// below at `floor`, so the op never divides by zero.
    pub fn cosine_sim(&mut self, a: NodeId, b: NodeId, floor: f64) -> NodeId {
        let av = self.value(a);
        let bv = self.value(b);
        debug_assert_eq!(av.nrows(), 1);
        debug_assert_eq!(av.dim(), bv.dim());
        let dot: f64 = av.iter().zip(bv.iter()).map(|(x, y)| x * y).sum();
        let na = l2(av).max(floor);
        let nb = l2(bv).max(floor);
        let v = Array2::from_elem((1, 1), dot / (na * nb));
        self.push(v, Op::CosineSim { a, b, floor })
    }

    pub fn pick_col(&mut self, x: NodeId, col: usize) -> NodeId {
        let v = Array2::from_elem((1, 1), self.value(x)[[0, col]]);
        self.push(v, Op::PickCol { x, col })
    }

    pub fn mean_scalars(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty());
        let m = parts.iter().map(|&p| self.scalar(p)).sum::<f64>() / parts.len() as f64;
        self.push(
            Array2::from_elem((1, 1), m),
            Op::MeanScalars {
                parts: parts.to_vec(),
            },
        )
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let v = Array2::from_elem((1, 1), self.value(x).sum());
        self.push(v, Op::SumAll { x })
    }

    /// Reverse pass from `root`, accumulating parameter gradients into
    /// `store`. Gradients of earlier calls are kept (callers zero the store
    /// once per optimizer step).
    pub fn backward(&self, root: NodeId, store: &mut ParamStore) {
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[root] = Some(Array2::ones(self.value(root).dim()));

        for id in (0..=root).rev() {
            let Some(g) = grads[id].take() else { continue };
            match &self.nodes[id].op {
                Op::Leaf { param } => {
                    if let Some(pid) = param {
                        store.accumulate_grad(*pid, &g);
                    }
                }
                Op::Gather { table, ids } => {
                    let d = g.ncols();
                    let rows = self.value(*table).nrows();
                    let gt = grads[*table].get_or_insert_with(|| Array2::zeros((rows, d)));
                    for (r, &i) in ids.iter().enumerate() {
                        let mut dst = gt.row_mut(i);
                        dst += &g.row(r);
                    }
                }
                Op::MatMul { a, b } => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::MatMulTransB { a, b } => {
                    let ga = g.dot(self.value(*b));
                    let gb = g.t().dot(self.value(*a));
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add { a, b } => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::AddRow { a, row } => {
                    let grow = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, *a, g);
                    acc(&mut grads, *row, grow);
                }
                Op::Mul { a, b } => {
                    let ga = &g * self.value(*b);
                    let gb = &g * self.value(*a);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::MulMask { a, mask } => {
                    acc(&mut grads, *a, &g * mask);
                }
                Op::AddConstRow { a } => {
                    acc(&mut grads, *a, g);
                }
                Op::Scale { a, c } => {
                    acc(&mut grads, *a, &g * *c);
                }
                Op::AddScalar { a } => {
                    acc(&mut grads, *a, g);
                }
                Op::LayerNorm { x, gamma, beta, eps } => {
                    let xv = self.value(*x);
                    let gv = self.value(*gamma);
                    let d = xv.ncols();
                    let mut gx = Array2::zeros(xv.dim());
                    let mut ggamma = Array2::zeros((1, d));
                    let mut gbeta = Array2::zeros((1, d));
                    for (r, row) in xv.rows().into_iter().enumerate() {
                        let (mean, rstd) = row_moments(row, *eps);
                        let xhat: Vec<f64> = row.iter().map(|&v| (v - mean) * rstd).collect();
                        let gout = g.row(r);
                        let mut dxhat = vec![0.0; d];
                        for c in 0..d {
                            ggamma[[0, c]] += gout[c] * xhat[c];
                            gbeta[[0, c]] += gout[c];
                            dxhat[c] = gout[c] * gv[[0, c]];
                        }
                        let mean_dxhat = dxhat.iter().sum::<f64>() / d as f64;
                        let mean_dxhat_xhat =
                            dxhat.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / d as f64;
                        for c in 0..d {
                            gx[[r, c]] = (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat) * rstd;
                        }
                    }
                    acc(&mut grads, *x, gx);
                    acc(&mut grads, *gamma, ggamma);
                    acc(&mut grads, *beta, gbeta);
                }
                Op::SoftmaxRows { x } => {
                    let y = self.value(id);
                    let mut gx = Array2::zeros(y.dim());
                    for r in 0..y.nrows() {
                        let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(a, b)| a * b).sum();
                        for c in 0..y.ncols() {
                            gx[[r, c]] = y[[r, c]] * (g[[r, c]] - dot);
                        }
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::LogSoftmaxRows { x } => {
                    let y = self.value(id);
                    let mut gx = Array2::zeros(y.dim());
                    for r in 0..y.nrows() {
                        let gsum: f64 = g.row(r).sum();
                        for c in 0..y.ncols() {
                            gx[[r, c]] = g[[r, c]] - y[[r, c]].exp() * gsum;
                        }
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::Gelu { x } => {
                    let xv = self.value(*x);
                    let gx = ndarray::Zip::from(&g).and(xv).map_collect(|&go, &t| {
                        let cdf = 0.5 * (1.0 + libm::erf(t * INV_SQRT_2));
                        let pdf = INV_SQRT_2PI * (-0.5 * t * t).exp();
                        go * (cdf + t * pdf)
                    });
                    acc(&mut grads, *x, gx);
                }
                Op::Tanh { x } => {
                    let y = self.value(id);
                    acc(&mut grads, *x, &g * &y.mapv(|t| 1.0 - t * t));
                }
                Op::Sigmoid { x } => {
                    let y = self.value(id);
                    acc(&mut grads, *x, &g * &y.mapv(|t| t * (1.0 - t)));
                }
                Op::Relu { x } => {
                    let xv = self.value(*x);
                    let gx = ndarray::Zip::from(&g)
                        .and(xv)
                        .map_collect(|&go, &t| if t > 0.0 { go } else { 0.0 });
                    acc(&mut grads, *x, gx);
                }
                Op::SliceCols { x, start, len } => {
                    let xv = self.value(*x);
                    let gx = grads[*x].get_or_insert_with(|| Array2::zeros(xv.dim()));
                    let mut dst = gx.slice_mut(s![.., *start..*start + *len]);
                    dst += &g;
                }
                Op::ConcatCols { parts } => {
                    let mut at = 0;
                    for &p in parts {
                        let w = self.value(p).ncols();
                        let gp = g.slice(s![.., at..at + w]).to_owned();
                        acc(&mut grads, p, gp);
                        at += w;
                    }
                }
                Op::SliceRows { x, start, len } => {
                    let xv = self.value(*x);
                    let gx = grads[*x].get_or_insert_with(|| Array2::zeros(xv.dim()));
                    let mut dst = gx.slice_mut(s![*start..*start + *len, ..]);
                    dst += &g;
                }
                Op::CosineSim { a, b, floor } => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    let dot: f64 = av.iter().zip(bv.iter()).map(|(x, y)| x * y).sum();
                    let na = l2(av);
                    let nb = l2(bv);
                    let ca = na.max(*floor);
                    let cb = nb.max(*floor);
                    let gs = g[[0, 0]];
                    let mut ga = bv / (ca * cb);
                    if na > *floor {
                        ga -= &(av * (dot / (ca * ca * ca * cb)));
                    }
                    let mut gb = av / (ca * cb);
                    if nb > *floor {
                        gb -= &(bv * (dot / (ca * cb * cb * cb)));
                    }
                    acc(&mut grads, *a, ga * gs);
                    acc(&mut grads, *b, gb * gs);
                }
                Op::PickCol { x, col } => {
                    let xv = self.value(*x);
                    let gx = grads[*x].get_or_insert_with(|| Array2::zeros(xv.dim()));
                    gx[[0, *col]] += g[[0, 0]];
                }
                Op::MeanScalars { parts } => {
                    let share = g[[0, 0]] / parts.len() as f64;
                    for &p in parts {
                        acc(&mut grads, p, Array2::from_elem((1, 1), share));
                    }
                }
                Op::SumAll { x } => {
                    let xv = self.value(*x);
                    acc(&mut grads, *x, Array2::from_elem(xv.dim(), g[[0, 0]]));
                }
            }
        }
    }
}

fn acc(grads: &mut [Option<Array2<f64>>], id: NodeId, contribution: Array2<f64>) {
    match &mut grads[id] {
        Some(g) => *g += &contribution,
        slot => *slot = Some(contribution),
    }
}

fn l2(v: &Array2<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Mean and reciprocal standard deviation of one row (biased variance).
fn row_moments(row: ndarray::ArrayView1<f64>, eps: f64) -> (f64, f64) {
    let d = row.len() as f64;
    let mean = row.sum() / d;
    let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d;
    (mean, 1.0 / (var + eps).sqrt())
}

/// Inverted-dropout mask: entries are `0` with probability `p`, else
/// `1/(1-p)`, so expectations match between train and inference.
pub fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut ChaCha20Rng) -> Array2<f64> {
    use rand::Rng;
    assert!((0.0..1.0).contains(&p));
    let keep = 1.0 - p;
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.random::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    })
}
