//! Minimal reverse-mode differentiation over dense matrices.

use ndarray::{Array2, Axis, Zip};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `a + b`, where `b` may be `1x1`, `1xk` or `kx1` and is broadcast.
    Add(Var, Var),
    Hadamard(Var, Var),
    Transpose(Var),
    Sigmoid(Var),
    Relu(Var),
    SoftmaxRows(Var),
    /// `a * s` with `s` a `1x1` variable.
    Scale(Var, Var),
    ScaleConst(Var, f64),
    /// A single entry of `a` as a `1x1` node.
    Element(Var, usize, usize),
    /// Mean absolute error against a constant target.
    Mae(Var, Array2<f64>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.nodes.iter().all(|n| n.value.iter().all(|x| x.is_finite()))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Hadamard(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).t().to_owned();
        self.push(v, Op::Transpose(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let v = softmax_rows(self.value(a));
        self.push(v, Op::SoftmaxRows(a))
    }

    pub fn scale(&mut self, a: Var, s: Var) -> Var {
        let v = self.value(a) * self.value(s)[[0, 0]];
        self.push(v, Op::Scale(a, s))
    }

    pub fn scale_const(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        self.push(v, Op::ScaleConst(a, c))
    }

    pub fn element(&mut self, a: Var, row: usize, col: usize) -> Var {
        let v = Array2::from_elem((1, 1), self.value(a)[[row, col]]);
        self.push(v, Op::Element(a, row, col))
    }

    pub fn mae(&mut self, a: Var, target: Array2<f64>) -> Var {
        let diff = self.value(a) - &target;
        let loss = diff.mapv(f64::abs).mean().unwrap_or(0.0);
        self.push(Array2::from_elem((1, 1), loss), Op::Mae(a, target))
    }

    /// Gradients of `root` (a `1x1` node) with respect to every node.
    pub fn backward(&self, root: Var) -> Vec<Array2<f64>> {
        let mut grads: Vec<Array2<f64>> = self
            .nodes
            .iter()
            .map(|n| Array2::zeros(n.value.raw_dim()))
            .collect();
        grads[root.0].fill(1.0);
        for idx in (0..=root.0).rev() {
            let g = std::mem::replace(&mut grads[idx], Array2::zeros((0, 0)));
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    grads[a.0] += &ga;
                    grads[b.0] += &gb;
                }
                Op::Add(a, b) => {
                    grads[a.0] += &g;
                    let bshape = self.value(*b).dim();
                    let gb = reduce_to(&g, bshape);
                    grads[b.0] += &gb;
                }
                Op::Hadamard(a, b) => {
                    let ga = &g * self.value(*b);
                    let gb = &g * self.value(*a);
                    grads[a.0] += &ga;
                    grads[b.0] += &gb;
                }
                Op::Transpose(a) => {
                    grads[a.0] += &g.t();
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let ga = Zip::from(&g).and(y).map_collect(|g, y| g * y * (1.0 - y));
                    grads[a.0] += &ga;
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let ga = Zip::from(&g).and(x).map_collect(|g, x| if *x > 0.0 { *g } else { 0.0 });
                    grads[a.0] += &ga;
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut ga = Array2::zeros(y.raw_dim());
                    for ((mut out, gr), yr) in ga.rows_mut().into_iter().zip(g.rows()).zip(y.rows()) {
                        let dot = gr.dot(&yr);
                        Zip::from(&mut out)
                            .and(&gr)
                            .and(&yr)
                            .for_each(|o, g, y| *o = y * (g - dot));
                    }
                    grads[a.0] += &ga;
                }
                Op::Scale(a, s) => {
                    let sv = self.value(*s)[[0, 0]];
                    let ga = &g * sv;
                    let gs = (&g * self.value(*a)).sum();
                    grads[a.0] += &ga;
                    grads[s.0][[0, 0]] += gs;
                }
                Op::ScaleConst(a, c) => {
                    let ga = &g * *c;
                    grads[a.0] += &ga;
                }
                Op::Element(a, r, c) => {
                    grads[a.0][[*r, *c]] += g[[0, 0]];
                }
                Op::Mae(a, target) => {
                    let x = self.value(*a);
                    let count = x.len().max(1) as f64;
                    let up = g[[0, 0]];
                    let ga = Zip::from(x).and(target).map_collect(|x, t| {
                        let d = x - t;
                        let sign = if d > 0.0 {
                            1.0
                        } else if d < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        up * sign / count
                    });
                    grads[a.0] += &ga;
                }
            }
            grads[idx] = g;
        }
        grads
    }
}

fn reduce_to(g: &Array2<f64>, shape: (usize, usize)) -> Array2<f64> {
    let mut out = g.clone();
    if shape.0 == 1 && out.nrows() != 1 {
        out = out.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
    if shape.1 == 1 && out.ncols() != 1 {
        out = out.sum_axis(Axis(1)).insert_axis(Axis(1));
    }
    out
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_rows(a: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}
