//! Reverse-mode tape over jet-valued nodes.
//!
//! Every node holds a short vector of jets: a layer activation, a feature
//! vector, or a scalar. Because the stored values are whole jets, one reverse
//! sweep differentiates quantities such as the Laplacian of the wavefunction
//! with respect to the network parameters.
//!
//! A tape evaluates [`LANES`] points at once; each element of a node is a
//! [`JetLanes`]. Parameters are shared by all lanes and their gradients are
//! accumulated per lane, then summed by the caller.
//!
//! Nodes that cannot vary in space (anything built only from parameters and
//! spatially constant inputs) are flagged and only their `value` component is
//! computed and differentiated. Nodes that cannot reach a trainable parameter
//! or a tracked input are skipped during the backward sweep.

use std::ops::Range;

use super::jet::{SpatialJet, UnaryFn};
use super::lanes::{self, JetLanes, Lanes, LANES};
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Input,
    /// `len` consecutive parameters starting at `offset`.
    Param { offset: usize },
    /// `W x + b` with `W` row-major (`len × in`) at `offset`, followed by `b`.
    Affine { x: NodeId, offset: usize },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Unary(NodeId, UnaryFn),
    /// Lifts the Laplacian component to a spatially constant scalar.
    Laplacian(NodeId),
    /// Drops the derivative components.
    Value(NodeId),
    Sum(NodeId),
}

#[derive(Clone, Copy, Debug)]
struct Node {
    op: Op,
    start: usize,
    len: usize,
    spatial: bool,
    needs_grad: bool,
    trainable: bool,
}

/// Recording of one forward evaluation.
///
/// The tape borrows the flat parameter vector; parameter-bearing nodes refer
/// to it by offset. Call [`Tape::clear`] to reuse the allocation for the next
/// batch of points.
pub struct Tape<'p> {
    params: &'p [f64],
    frozen: Vec<Range<usize>>,
    nodes: Vec<Node>,
    values: Vec<JetLanes>,
    adjoints: Vec<JetLanes>,
}

#[inline]
fn bidx(len: usize, i: usize) -> usize {
    if len == 1 {
        0
    } else {
        i
    }
}

/// Pairwise sum in a fixed order.
#[inline(always)]
fn lane_sum(x: &Lanes) -> f64 {
    let mut h = *x;
    let mut w = LANES;
    while w > 1 {
        w /= 2;
        for l in 0..w {
            h[l] += h[l + w];
        }
    }
    h[0]
}

fn lane_derivs(f: UnaryFn, x: &Lanes) -> [Lanes; 4] {
    let mut out = [[0.0; LANES]; 4];
    for l in 0..LANES {
        let d = f.derivatives(x[l]);
        for k in 0..4 {
            out[k][l] = d[k];
        }
    }
    out
}

/// Derivatives reusing the stored output where that avoids a transcendental call.
fn lane_derivs_from_output(f: UnaryFn, x: &Lanes, y: &Lanes) -> [Lanes; 4] {
    match f {
        UnaryFn::Sigmoid => {
            let mut out = [[0.0; LANES]; 4];
            for l in 0..LANES {
                let s = y[l];
                let s1 = s * (1.0 - s);
                out[0][l] = s;
                out[1][l] = s1;
                out[2][l] = s1 * (1.0 - 2.0 * s);
                out[3][l] = s1 * (1.0 - 6.0 * s + 6.0 * s * s);
            }
            out
        }
        UnaryFn::Exp => [*y; 4],
        _ => lane_derivs(f, x),
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [f64]) -> Self {
        Self {
            params,
            frozen: Vec::new(),
            nodes: Vec::with_capacity(64),
            values: Vec::with_capacity(256),
            adjoints: Vec::new(),
        }
    }

    /// Marks a parameter range as frozen: it receives no gradient and nodes
    /// depending only on frozen parameters are skipped by `backward`.
    pub fn freeze(&mut self, range: Range<usize>) {
        if !range.is_empty() {
            self.frozen.push(range);
        }
    }

    pub fn params(&self) -> &'p [f64] {
        self.params
    }

    /// Forgets all recorded nodes but keeps the parameter binding and freezes.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.values.clear();
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_len(&self, id: NodeId) -> usize {
        self.nodes[id.index()].len
    }

    pub fn lanes(&self, id: NodeId) -> &[JetLanes] {
        let n = &self.nodes[id.index()];
        &self.values[n.start..n.start + n.len]
    }

    /// Element 0 of a node in lane `lane`.
    pub fn jet_lane(&self, id: NodeId, lane: usize) -> SpatialJet {
        self.lanes(id)[0].lane(lane)
    }

    /// Element 0 of a node in lane 0, the usual way to read a scalar result.
    pub fn jet(&self, id: NodeId) -> SpatialJet {
        self.jet_lane(id, 0)
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        self.jet(id).value
    }

    fn is_frozen(&self, range: Range<usize>) -> bool {
        self.frozen.iter().any(|f| range.start < f.end && f.start < range.end)
    }

    fn push_node(&mut self, op: Op, start: usize, spatial: bool, needs_grad: bool, trainable: bool) -> NodeId {
        let len = self.values.len() - start;
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            op,
            start,
            len,
            spatial,
            needs_grad,
            trainable,
        });
        id
    }

    /// Records constant inputs, one [`JetLanes`] per element. `spatial` says
    /// whether the jets carry derivative data; `tracked` requests input
    /// adjoints from `backward`.
    pub fn input_lanes(&mut self, jets: &[JetLanes], spatial: bool, tracked: bool) -> NodeId {
        let start = self.values.len();
        for j in jets {
            self.values.push(if spatial { *j } else { JetLanes::values(j.value) });
        }
        self.push_node(Op::Input, start, spatial, tracked, false)
    }

    /// Records inputs that are the same in every lane.
    pub fn input(&mut self, jets: &[SpatialJet], spatial: bool, tracked: bool) -> NodeId {
        let start = self.values.len();
        for j in jets {
            let j = if spatial { *j } else { SpatialJet::constant(j.value) };
            self.values.push(JetLanes::splat(j));
        }
        self.push_node(Op::Input, start, spatial, tracked, false)
    }

    pub fn scalar_input(&mut self, value: f64, tracked: bool) -> NodeId {
        self.input(&[SpatialJet::constant(value)], false, tracked)
    }

    /// A spatially constant scalar that differs between lanes.
    pub fn scalar_input_lanes(&mut self, value: Lanes, tracked: bool) -> NodeId {
        self.input_lanes(&[JetLanes::values(value)], false, tracked)
    }

    pub fn param(&mut self, offset: usize, len: usize) -> NodeId {
        let trainable = !self.is_frozen(offset..offset + len);
        let start = self.values.len();
        for &p in &self.params[offset..offset + len] {
            self.values.push(JetLanes::values([p; LANES]));
        }
        self.push_node(Op::Param { offset }, start, false, trainable, trainable)
    }

    /// Dense layer `W x + b` reading `out_len * (in_len + 1)` parameters.
    pub fn affine(&mut self, x: NodeId, offset: usize, out_len: usize) -> NodeId {
        let xn = self.nodes[x.index()];
        let in_len = xn.len;
        let end = offset + out_len * (in_len + 1);
        assert!(end <= self.params.len(), "affine layer reads past the parameter vector");
        let trainable = !self.is_frozen(offset..end);
        let params = self.params;
        let w = &params[offset..offset + out_len * in_len];
        let b = &params[offset + out_len * in_len..end];
        let start = self.values.len();
        self.values.resize(start + out_len, JetLanes::ZERO);
        let (prev, out) = self.values.split_at_mut(start);
        let xs = &prev[xn.start..xn.start + in_len];
        for (k, dst) in out.iter_mut().enumerate() {
            // Accumulate in a local so the sum can live in registers.
            let mut acc = JetLanes::values([b[k]; LANES]);
            let row = &w[k * in_len..(k + 1) * in_len];
            if xn.spatial {
                for (xi, &wk) in xs.iter().zip(row) {
                    acc.axpy(wk, xi);
                }
            } else {
                for (xi, &wk) in xs.iter().zip(row) {
                    acc.axpy_value(wk, xi);
                }
            }
            *dst = acc;
        }
        self.push_node(Op::Affine { x, offset }, start, xn.spatial, xn.needs_grad || trainable, trainable)
    }

    fn binary(&mut self, a: NodeId, b: NodeId, op: Op, f: impl Fn(&JetLanes, &JetLanes) -> JetLanes) -> NodeId {
        let an = self.nodes[a.index()];
        let bn = self.nodes[b.index()];
        assert!(
            an.len == bn.len || an.len == 1 || bn.len == 1,
            "elementwise operands have lengths {} and {}",
            an.len,
            bn.len
        );
        let len = an.len.max(bn.len);
        let start = self.values.len();
        for i in 0..len {
            let v = f(&self.values[an.start + bidx(an.len, i)], &self.values[bn.start + bidx(bn.len, i)]);
            self.values.push(v);
        }
        self.push_node(op, start, an.spatial || bn.spatial, an.needs_grad || bn.needs_grad, false)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(a, b, Op::Add(a, b), |x, y| x.add(y, 1.0))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(a, b, Op::Sub(a, b), |x, y| x.add(y, -1.0))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let spatial = self.nodes[a.index()].spatial || self.nodes[b.index()].spatial;
        if spatial {
            self.binary(a, b, Op::Mul(a, b), |x, y| x.mul(y))
        } else {
            self.binary(a, b, Op::Mul(a, b), |x, y| {
                let mut v = [0.0; LANES];
                for l in 0..LANES {
                    v[l] = x.value[l] * y.value[l];
                }
                JetLanes::values(v)
            })
        }
    }

    fn map(&mut self, a: NodeId, op: Op, spatial: bool, f: impl Fn(&JetLanes) -> JetLanes) -> NodeId {
        let an = self.nodes[a.index()];
        let start = self.values.len();
        for i in 0..an.len {
            let v = f(&self.values[an.start + i]);
            self.values.push(v);
        }
        self.push_node(op, start, spatial, an.needs_grad, false)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let spatial = self.nodes[a.index()].spatial;
        self.map(a, Op::Scale(a, c), spatial, |x| x.scale(c))
    }

    pub fn unary(&mut self, a: NodeId, f: UnaryFn) -> Result<NodeId> {
        let an = self.nodes[a.index()];
        for x in &self.values[an.start..an.start + an.len] {
            for &v in &x.value {
                f.check_domain(v)?;
            }
        }
        if f == UnaryFn::Sigmoid {
            return Ok(self.map(a, Op::Unary(a, f), an.spatial, |x| {
                let s = lanes::sigmoid(&x.value);
                if !an.spatial {
                    return JetLanes::values(s);
                }
                let [_, d1, d2, _] = lane_derivs_from_output(f, &x.value, &s);
                x.chain(&s, &d1, &d2)
            }));
        }
        Ok(if an.spatial {
            self.map(a, Op::Unary(a, f), true, |x| {
                let [v, d1, d2, _] = lane_derivs(f, &x.value);
                x.chain(&v, &d1, &d2)
            })
        } else {
            self.map(a, Op::Unary(a, f), false, |x| {
                let mut v = [0.0; LANES];
                for l in 0..LANES {
                    v[l] = f.derivatives(x.value[l])[0];
                }
                JetLanes::values(v)
            })
        })
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(a, UnaryFn::Sigmoid).expect("sigmoid is defined everywhere")
    }

    pub fn laplacian(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Laplacian(a), false, |x| JetLanes::values(x.lap))
    }

    pub fn value(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Value(a), false, |x| JetLanes::values(x.value))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let an = self.nodes[a.index()];
        let mut total = JetLanes::ZERO;
        for x in &self.values[an.start..an.start + an.len] {
            if an.spatial {
                total.axpy(1.0, x);
            } else {
                total.axpy_value(1.0, x);
            }
        }
        let start = self.values.len();
        self.values.push(total);
        self.push_node(Op::Sum(a), start, an.spatial, an.needs_grad, false)
    }

    /// Gradient of the lane-0 value of scalar node `output` with respect to
    /// every parameter.
    pub fn backward(&mut self, output: NodeId) -> Result<Vec<f64>> {
        let len = self.node_len(output);
        if len != 1 {
            return Err(Error::NotScalar { len });
        }
        let mut seed = [0.0; LANES];
        seed[0] = 1.0;
        let mut grad = vec![0.0; self.params.len()];
        self.backward_seeded(&[(output, seed)], &mut grad);
        Ok(grad)
    }

    /// Reverse sweep seeded with per-lane weights on the value adjoint of each
    /// listed scalar node, so one sweep yields the gradient of
    /// `Σ_nodes Σ_lanes weight · value`, which is accumulated into `grad`.
    pub fn backward_seeded(&mut self, seeds: &[(NodeId, Lanes)], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        // Only adjoints of nodes taking part in the sweep are read or written.
        self.adjoints.resize(self.values.len(), JetLanes::ZERO);
        for n in &self.nodes {
            if !n.needs_grad {
                continue;
            }
            for a in &mut self.adjoints[n.start..n.start + n.len] {
                if n.spatial {
                    *a = JetLanes::ZERO;
                } else {
                    a.value = [0.0; LANES];
                }
            }
        }
        for &(id, w) in seeds {
            let n = self.nodes[id.index()];
            assert_eq!(n.len, 1, "seeded nodes must be scalar");
            for l in 0..LANES {
                self.adjoints[n.start].value[l] += w[l];
            }
        }
        for idx in (0..self.nodes.len()).rev() {
            let node = self.nodes[idx];
            if node.needs_grad {
                self.backward_node(node, grad);
            }
        }
    }

    /// Adjoints of a node after the last backward sweep (meaningful for
    /// tracked inputs).
    pub fn adjoint(&self, id: NodeId) -> &[JetLanes] {
        let n = &self.nodes[id.index()];
        &self.adjoints[n.start..n.start + n.len]
    }

    fn backward_node(&mut self, node: Node, grad: &mut [f64]) {
        let (lower, upper) = self.adjoints.split_at_mut(node.start);
        let out_adj = &upper[..node.len];
        let values = &self.values;
        let nodes = &self.nodes;
        match node.op {
            Op::Input => {}
            Op::Param { offset } => {
                if node.trainable {
                    for (g, a) in grad[offset..offset + node.len].iter_mut().zip(out_adj) {
                        *g += lane_sum(&a.value);
                    }
                }
            }
            Op::Affine { x, offset } => {
                let xn = nodes[x.index()];
                let in_len = xn.len;
                let w = &self.params[offset..offset + node.len * in_len];
                let xs = &values[xn.start..xn.start + in_len];
                if xn.needs_grad {
                    let xa = &mut lower[xn.start..xn.start + in_len];
                    for (k, a) in out_adj.iter().enumerate() {
                        let row = &w[k * in_len..(k + 1) * in_len];
                        if xn.spatial {
                            for (xi, &wk) in xa.iter_mut().zip(row) {
                                xi.axpy(wk, a);
                            }
                        } else {
                            for (xi, &wk) in xa.iter_mut().zip(row) {
                                xi.axpy_value(wk, a);
                            }
                        }
                    }
                }
                if node.trainable {
                    let (gw, gb) = grad[offset..offset + node.len * (in_len + 1)].split_at_mut(node.len * in_len);
                    for (k, a) in out_adj.iter().enumerate() {
                        gb[k] += lane_sum(&a.value);
                        let grow = &mut gw[k * in_len..(k + 1) * in_len];
                        if xn.spatial {
                            for (g, xi) in grow.iter_mut().zip(xs) {
                                *g += lane_sum(&a.contract(xi));
                            }
                        } else {
                            for (g, xi) in grow.iter_mut().zip(xs) {
                                let mut c = [0.0; LANES];
                                for l in 0..LANES {
                                    c[l] = a.value[l] * xi.value[l];
                                }
                                *g += lane_sum(&c);
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                for (id, s) in [(a, 1.0), (b, sign)] {
                    let n = nodes[id.index()];
                    if !n.needs_grad {
                        continue;
                    }
                    for (i, adj) in out_adj.iter().enumerate() {
                        let dst = &mut lower[n.start + bidx(n.len, i)];
                        if n.spatial {
                            dst.axpy(s, adj);
                        } else {
                            dst.axpy_value(s, adj);
                        }
                    }
                }
            }
            Op::Mul(a, b) => {
                for (id, other) in [(a, b), (b, a)] {
                    let n = nodes[id.index()];
                    if !n.needs_grad {
                        continue;
                    }
                    let o = nodes[other.index()];
                    for (i, adj) in out_adj.iter().enumerate() {
                        let y = &values[o.start + bidx(o.len, i)];
                        let dst = &mut lower[n.start + bidx(n.len, i)];
                        if node.spatial {
                            let c = adj.contract(y);
                            for l in 0..LANES {
                                dst.value[l] += c[l];
                            }
                        } else {
                            for l in 0..LANES {
                                dst.value[l] += adj.value[l] * y.value[l];
                            }
                        }
                        if n.spatial {
                            for l in 0..LANES {
                                for k in 0..3 {
                                    dst.grad[k][l] += adj.grad[k][l] * y.value[l] + 2.0 * adj.lap[l] * y.grad[k][l];
                                }
                                dst.lap[l] += adj.lap[l] * y.value[l];
                            }
                        }
                    }
                }
            }
            Op::Scale(a, c) => {
                let n = nodes[a.index()];
                for (dst, adj) in lower[n.start..n.start + n.len].iter_mut().zip(out_adj) {
                    if n.spatial {
                        dst.axpy(c, adj);
                    } else {
                        dst.axpy_value(c, adj);
                    }
                }
            }
            Op::Unary(a, f) => {
                let n = nodes[a.index()];
                let xs = &values[n.start..n.start + n.len];
                let ys = &values[node.start..node.start + node.len];
                for (((dst, adj), x), y) in lower[n.start..n.start + n.len].iter_mut().zip(out_adj).zip(xs).zip(ys) {
                    let [_, d1, d2, d3] = lane_derivs_from_output(f, &x.value, &y.value);
                    if n.spatial {
                        let g2 = x.grad_dot(x);
                        let ag = adj.grad_dot(x);
                        for l in 0..LANES {
                            dst.value[l] += adj.value[l] * d1[l] + ag[l] * d2[l] + adj.lap[l] * (d3[l] * g2[l] + d2[l] * x.lap[l]);
                            for k in 0..3 {
                                dst.grad[k][l] += adj.grad[k][l] * d1[l] + 2.0 * adj.lap[l] * d2[l] * x.grad[k][l];
                            }
                            dst.lap[l] += adj.lap[l] * d1[l];
                        }
                    } else {
                        for l in 0..LANES {
                            dst.value[l] += adj.value[l] * d1[l];
                        }
                    }
                }
            }
            Op::Laplacian(a) => {
                let n = nodes[a.index()];
                if n.spatial {
                    for (dst, adj) in lower[n.start..n.start + n.len].iter_mut().zip(out_adj) {
                        for l in 0..LANES {
                            dst.lap[l] += adj.value[l];
                        }
                    }
                }
            }
            Op::Value(a) => {
                let n = nodes[a.index()];
                for (dst, adj) in lower[n.start..n.start + n.len].iter_mut().zip(out_adj) {
                    dst.axpy_value(1.0, adj);
                }
            }
            Op::Sum(a) => {
                let n = nodes[a.index()];
                let adj = out_adj[0];
                for dst in lower[n.start..n.start + n.len].iter_mut() {
                    if n.spatial {
                        dst.axpy(1.0, &adj);
                    } else {
                        dst.axpy_value(1.0, &adj);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_product_gradient() {
        let params = [2.0, 5.0];
        let mut tape = Tape::new(&params);
        let theta = tape.param(0, 1);
        let c = tape.scalar_input(3.0, false);
        let out = tape.mul(theta, c);
        let g = tape.backward(out).unwrap();
        assert_eq!(g, vec![3.0, 0.0]);
    }

    #[test]
    fn non_scalar_output_is_rejected() {
        let params = [1.0, 2.0];
        let mut tape = Tape::new(&params);
        let p = tape.param(0, 2);
        assert!(matches!(tape.backward(p), Err(Error::NotScalar { len: 2 })));
    }

    #[test]
    fn frozen_parameters_get_no_gradient() {
        let params = [1.0, 2.0, 0.5];
        let mut tape = Tape::new(&params);
        tape.freeze(0..2);
        let x = tape.scalar_input(0.3, false);
        let h = tape.affine(x, 0, 1);
        let h = tape.sigmoid(h);
        let s = tape.param(2, 1);
        let out = tape.mul(h, s);
        let g = tape.backward(out).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.0);
        assert!(g[2] > 0.0);
    }

    #[test]
    fn tracked_input_adjoint_is_derivative() {
        let params = [0.7, -0.2];
        let mut tape = Tape::new(&params);
        let x = tape.scalar_input(1.3, true);
        let z = tape.affine(x, 0, 1);
        let y = tape.sigmoid(z);
        tape.backward(y).unwrap();
        let s = crate::autodiff::sigmoid(0.7 * 1.3 - 0.2);
        let expected = 0.7 * s * (1.0 - s);
        assert!((tape.adjoint(x)[0].value[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn laplacian_through_tape_matches_jets() {
        let params = [0.4, -1.1, 0.3, 0.9];
        let r = [0.3, -0.5, 0.8];
        let coords = SpatialJet::coordinates(r);
        let mut tape = Tape::new(&params);
        let x = tape.input(&coords, true, false);
        let h = tape.affine(x, 0, 1);
        let y = tape.sigmoid(h);
        let z = coords[0] * 0.4 + coords[1] * -1.1 + coords[2] * 0.3 + SpatialJet::constant(0.9);
        let direct = z.sigmoid();
        let got = tape.jet(y);
        assert!((got.lap - direct.lap).abs() < 1e-15);
        assert!((got.value - direct.value).abs() < 1e-15);
    }

    #[test]
    fn lanes_are_independent() {
        let params = [0.5, -0.3];
        let mut tape = Tape::new(&params);
        let mut xs = [0.0; LANES];
        for (l, x) in xs.iter_mut().enumerate() {
            *x = 0.1 * l as f64;
        }
        let x = tape.scalar_input_lanes(xs, false);
        let z = tape.affine(x, 0, 1);
        let y = tape.sigmoid(z);
        for l in 0..LANES {
            let expected = crate::autodiff::sigmoid(0.5 * xs[l] - 0.3);
            assert!((tape.jet_lane(y, l).value - expected).abs() < 1e-15);
        }
        let mut seed = [0.0; LANES];
        seed[3] = 1.0;
        let mut grad = vec![0.0; 2];
        tape.backward_seeded(&[(y, seed)], &mut grad);
        let s = crate::autodiff::sigmoid(0.5 * xs[3] - 0.3);
        assert!((grad[1] - s * (1.0 - s)).abs() < 1e-15);
        assert!((grad[0] - xs[3] * s * (1.0 - s)).abs() < 1e-15);
    }
}
