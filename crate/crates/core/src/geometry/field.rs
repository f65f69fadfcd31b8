//! Lazily evaluated smooth fields on the torus.
//!
//! Every field is a node holding an evaluator that returns the Taylor jets of
//! its components at the point of an [`EvalCtx`]. Nodes are shared through
//! `Arc`, and each context memoizes node values so that a deep expression is
//! evaluated once per point and order.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use crate::jet::{Jet, MAX_ORDER};

/// A point of the torus `T^d = R^d / Z^d` in canonical coordinates `[0, 1)^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    /// Wraps arbitrary real coordinates into `[0, 1)`.
    pub fn new(coords: Vec<f64>) -> Point {
        Point(coords.into_iter().map(wrap_unit).collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Reduces `x` into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Reduces a coordinate difference into `(-1/2, 1/2]`.
pub fn wrap_diff(x: f64) -> f64 {
    let r = x - x.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

pub(crate) type EvalFn = dyn Fn(&EvalCtx, usize) -> Vec<Jet> + Send + Sync;

pub(crate) struct Node {
    ncomp: usize,
    f: Box<EvalFn>,
}

/// Shared handle to a field node.
#[derive(Clone)]
pub(crate) struct NodeRef(Arc<Node>);

impl NodeRef {
    pub(crate) fn new(ncomp: usize, f: impl Fn(&EvalCtx, usize) -> Vec<Jet> + Send + Sync + 'static) -> NodeRef {
        NodeRef(Arc::new(Node { ncomp, f: Box::new(f) }))
    }

    pub(crate) fn ncomp(&self) -> usize {
        self.0.ncomp
    }

    /// Jets of all components at the context point, memoized per context.
    pub(crate) fn eval(&self, ctx: &EvalCtx, order: usize) -> Rc<Vec<Jet>> {
        assert!(order <= MAX_ORDER, "derivative order {order} exceeds the jet limit {MAX_ORDER}");
        let key = Arc::as_ptr(&self.0) as *const u8 as usize;
        if let Some(v) = ctx.lookup(key, order) {
            return v;
        }
        let out = (self.0.f)(ctx, order);
        debug_assert_eq!(out.len(), self.0.ncomp);
        let out = Rc::new(out);
        ctx.store(key, order, self.0.clone(), out.clone());
        out
    }
}

type Memo = RefCell<HashMap<(usize, usize), Rc<Vec<Jet>>>>;

/// Evaluation context: a point plus a per-point memo of node values.
pub struct EvalCtx {
    point: Point,
    memo: Memo,
    // Holding the nodes keeps their addresses unique while the memo lives.
    keep: RefCell<Vec<Arc<Node>>>,
}

impl EvalCtx {
    pub fn new(point: &Point) -> EvalCtx {
        EvalCtx { point: point.clone(), memo: RefCell::new(HashMap::new()), keep: RefCell::new(Vec::new()) }
    }

    pub fn point(&self) -> &Point {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    /// Coordinate jets `x_a` at the point.
    pub fn coords(&self, order: usize) -> Vec<Jet> {
        let d = self.dim();
        (0..d).map(|a| Jet::variable(d, order, a, self.point.0[a])).collect()
    }

    fn lookup(&self, key: usize, order: usize) -> Option<Rc<Vec<Jet>>> {
        let memo = self.memo.borrow();
        if let Some(v) = memo.get(&(key, order)) {
            return Some(v.clone());
        }
        let higher = (order + 1..=MAX_ORDER).find_map(|o| memo.get(&(key, o)).cloned())?;
        drop(memo);
        let t = Rc::new(higher.iter().map(|j| j.truncate(order)).collect::<Vec<_>>());
        self.memo.borrow_mut().insert((key, order), t.clone());
        Some(t)
    }

    fn store(&self, key: usize, order: usize, node: Arc<Node>, v: Rc<Vec<Jet>>) {
        self.keep.borrow_mut().push(node);
        self.memo.borrow_mut().insert((key, order), v);
    }
}

/// Evaluates a node at a jet-valued point `y` (jets in any variable space),
/// by expanding at the base point and substituting `y - y(0)`.
pub(crate) fn eval_node_at_jets(node: &NodeRef, y: &[Jet]) -> Vec<Jet> {
    let base = Point::new(y.iter().map(Jet::value).collect());
    let order = y.iter().map(Jet::order).min().unwrap_or(0);
    let ctx = EvalCtx::new(&base);
    let local = node.eval(&ctx, order);
    if order == 0 {
        let m = y[0].nvars();
        return local.iter().map(|j| Jet::constant(m, 0, j.value())).collect();
    }
    local.iter().map(|j| j.compose(y)).collect()
}

/// Multi-indices `i_1 < ... < i_k` in `0..dim`, lexicographic.
pub fn basis(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= dim {
        rec(0, dim, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Position of a strictly increasing multi-index in [`basis`].
pub fn basis_index(dim: usize, idx: &[usize]) -> usize {
    basis(dim, idx.len()).iter().position(|b| b == idx).expect("multi-index not increasing")
}

/// Sorts `idx` and returns the permutation sign, or `None` on a repeat.
pub fn sort_with_sign(idx: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            } else if v[j] == v[j + 1] {
                return None;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, v))
}

/// A differential `k`-form on `T^d`, components on the increasing basis.
///
/// iR-valued forms are stored by their imaginary part throughout the crate.
#[derive(Clone)]
pub struct KForm {
    dim: usize,
    degree: usize,
    pub(crate) node: NodeRef,
}

/// A smooth function, i.e. a 0-form.
pub type ScalarField = KForm;

impl fmt::Debug for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KForm(dim={}, degree={})", self.dim, self.degree)
    }
}

fn n_components(dim: usize, degree: usize) -> usize {
    basis(dim, degree).len()
}

impl KForm {
    /// A form from an evaluator returning its component jets.
    pub fn from_fn(
        dim: usize,
        degree: usize,
        f: impl Fn(&EvalCtx, usize) -> Vec<Jet> + Send + Sync + 'static,
    ) -> KForm {
        KForm { dim, degree, node: NodeRef::new(n_components(dim, degree), f) }
    }

    pub fn zero(dim: usize, degree: usize) -> KForm {
        let n = n_components(dim, degree);
        KForm::from_fn(dim, degree, move |ctx, order| vec![Jet::zero(ctx.dim(), order); n])
    }

    /// A form with constant coefficients.
    pub fn constant(dim: usize, degree: usize, values: Vec<f64>) -> KForm {
        assert_eq!(values.len(), n_components(dim, degree));
        KForm::from_fn(dim, degree, move |ctx, order| {
            values.iter().map(|&v| Jet::constant(ctx.dim(), order, v)).collect()
        })
    }

    /// A constant function.
    pub fn scalar_constant(dim: usize, v: f64) -> ScalarField {
        KForm::constant(dim, 0, vec![v])
    }

    /// The coordinate function `x_axis` lifted to `R` near `anchor`.
    pub fn coordinate(dim: usize, axis: usize, anchor: f64) -> ScalarField {
        KForm::from_fn(dim, 0, move |ctx, order| {
            let x = ctx.point().coords()[axis];
            vec![Jet::variable(dim, order, axis, anchor + wrap_diff(x - anchor))]
        })
    }

    /// Assembles a form from scalar components on the increasing basis.
    pub fn from_components(dim: usize, degree: usize, comps: Vec<ScalarField>) -> KForm {
        assert_eq!(comps.len(), n_components(dim, degree));
        KForm::from_fn(dim, degree, move |ctx, order| comps.iter().map(|c| c.node.eval(ctx, order)[0].clone()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_components(&self) -> usize {
        self.node.ncomp()
    }

    /// The scalar coefficient of basis element `i`.
    pub fn component(&self, i: usize) -> ScalarField {
        let me = self.node.clone();
        KForm::from_fn(self.dim, 0, move |ctx, order| vec![me.eval(ctx, order)[i].clone()])
    }

    /// Component jets at the context point.
    pub fn jets(&self, ctx: &EvalCtx, order: usize) -> Rc<Vec<Jet>> {
        self.node.eval(ctx, order)
    }

    /// Component values at the context point.
    pub fn values(&self, ctx: &EvalCtx) -> Vec<f64> {
        self.node.eval(ctx, 0).iter().map(Jet::value).collect()
    }

    /// Component values at a point.
    pub fn eval(&self, p: &Point) -> Vec<f64> {
        self.values(&EvalCtx::new(p))
    }

    /// Largest absolute component at the context point.
    pub fn max_abs(&self, ctx: &EvalCtx) -> f64 {
        self.values(ctx).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Component jets at a jet-valued point of `R^d`, reduced mod 1.
    pub fn eval_at_jets(&self, y: &[Jet]) -> Vec<Jet> {
        eval_node_at_jets(&self.node, y)
    }

    /// `Σ k_i ω_i` over forms of equal degree.
    pub fn linear_combination(terms: Vec<(f64, KForm)>) -> KForm {
        assert!(!terms.is_empty(), "empty linear combination");
        let dim = terms[0].1.dim;
        let degree = terms[0].1.degree;
        for (_, t) in &terms {
            assert_eq!((t.dim, t.degree), (dim, degree), "linear combination of mismatched forms");
        }
        let n = terms[0].1.n_components();
        let nodes: Vec<(f64, NodeRef)> = terms.into_iter().map(|(k, t)| (k, t.node)).collect();
        KForm::from_fn(dim, degree, move |ctx, order| {
            let mut out = vec![Jet::zero(ctx.dim(), order); n];
            for (k, node) in &nodes {
                let v = node.eval(ctx, order);
                for (o, j) in out.iter_mut().zip(v.iter()) {
                    o.axpy(*k, j);
                }
            }
            out
        })
    }

    pub fn add(&self, other: &KForm) -> KForm {
        KForm::linear_combination(vec![(1.0, self.clone()), (1.0, other.clone())])
    }

    pub fn sub(&self, other: &KForm) -> KForm {
        KForm::linear_combination(vec![(1.0, self.clone()), (-1.0, other.clone())])
    }

    pub fn scale(&self, k: f64) -> KForm {
        KForm::linear_combination(vec![(k, self.clone())])
    }

    pub fn neg(&self) -> KForm {
        self.scale(-1.0)
    }

    /// Pointwise product with a function.
    pub fn mul_fn(&self, f: &ScalarField) -> KForm {
        assert_eq!(f.degree, 0);
        let me = self.node.clone();
        let fnode = f.node.clone();
        KForm::from_fn(self.dim, self.degree, move |ctx, order| {
            let fv = fnode.eval(ctx, order);
            me.eval(ctx, order).iter().map(|j| j * &fv[0]).collect()
        })
    }

    /// Applies a univariate map to a function, given its Taylor coefficients
    /// `taylor(a, order)[k] = g^(k)(a) / k!`.
    pub fn map_scalar(
        &self,
        taylor: impl Fn(f64, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> ScalarField {
        assert_eq!(self.degree, 0);
        let me = self.node.clone();
        KForm::from_fn(self.dim, 0, move |ctx, order| {
            let v = &me.eval(ctx, order)[0];
            vec![v.compose_univariate(&taylor(v.value(), order))]
        })
    }
}

/// A smooth vector field on `T^d`.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    pub(crate) node: NodeRef,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField(dim={})", self.dim)
    }
}

impl VectorField {
    pub fn from_fn(dim: usize, f: impl Fn(&EvalCtx, usize) -> Vec<Jet> + Send + Sync + 'static) -> VectorField {
        VectorField { dim, node: NodeRef::new(dim, f) }
    }

    pub fn from_components(comps: Vec<ScalarField>) -> VectorField {
        let dim = comps.len();
        for c in &comps {
            assert_eq!((c.dim(), c.degree()), (dim, 0));
        }
        VectorField::from_fn(dim, move |ctx, order| comps.iter().map(|c| c.node.eval(ctx, order)[0].clone()).collect())
    }

    pub fn constant(values: Vec<f64>) -> VectorField {
        let dim = values.len();
        VectorField::from_fn(dim, move |_, order| values.iter().map(|&v| Jet::constant(dim, order, v)).collect())
    }

    pub fn zero(dim: usize) -> VectorField {
        VectorField::constant(vec![0.0; dim])
    }

    /// The coordinate field `∂_axis`.
    pub fn coordinate(dim: usize, axis: usize) -> VectorField {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        VectorField::constant(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component(&self, a: usize) -> ScalarField {
        let me = self.node.clone();
        KForm::from_fn(self.dim, 0, move |ctx, order| vec![me.eval(ctx, order)[a].clone()])
    }

    pub fn jets(&self, ctx: &EvalCtx, order: usize) -> Rc<Vec<Jet>> {
        self.node.eval(ctx, order)
    }

    pub fn values(&self, ctx: &EvalCtx) -> Vec<f64> {
        self.node.eval(ctx, 0).iter().map(Jet::value).collect()
    }

    pub fn eval(&self, p: &Point) -> Vec<f64> {
        self.values(&EvalCtx::new(p))
    }

    /// Component jets at a jet-valued point of `R^d`, reduced mod 1.
    pub fn eval_at_jets(&self, y: &[Jet]) -> Vec<Jet> {
        eval_node_at_jets(&self.node, y)
    }

    pub fn linear_combination(terms: Vec<(f64, VectorField)>) -> VectorField {
        assert!(!terms.is_empty());
        let dim = terms[0].1.dim;
        let nodes: Vec<(f64, NodeRef)> = terms.into_iter().map(|(k, t)| (k, t.node)).collect();
        VectorField::from_fn(dim, move |ctx, order| {
            let mut out = vec![Jet::zero(dim, order); dim];
            for (k, node) in &nodes {
                for (o, j) in out.iter_mut().zip(node.eval(ctx, order).iter()) {
                    o.axpy(*k, j);
                }
            }
            out
        })
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField::linear_combination(vec![(1.0, self.clone()), (1.0, other.clone())])
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField::linear_combination(vec![(1.0, self.clone()), (-1.0, other.clone())])
    }

    pub fn scale(&self, k: f64) -> VectorField {
        VectorField::linear_combination(vec![(k, self.clone())])
    }

    /// Pointwise product with a function.
    pub fn mul_fn(&self, f: &ScalarField) -> VectorField {
        let me = self.node.clone();
        let fnode = f.node.clone();
        VectorField::from_fn(self.dim, move |ctx, order| {
            let fv = fnode.eval(ctx, order);
            me.eval(ctx, order).iter().map(|j| j * &fv[0]).collect()
        })
    }

    /// Largest absolute component at the context point.
    pub fn max_abs(&self, ctx: &EvalCtx) -> f64 {
        self.values(ctx).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_is_canonical() {
        assert_eq!(wrap_unit(1.25), 0.25);
        assert_eq!(wrap_unit(-0.25), 0.75);
        assert_eq!(wrap_diff(0.75), -0.25);
        assert_eq!(wrap_diff(-0.5), 0.5);
        assert_eq!(Point::new(vec![2.5, -0.1]).coords()[0], 0.5);
    }

    #[test]
    fn basis_is_lexicographic() {
        assert_eq!(basis(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(basis(2, 3).len(), 0);
        assert_eq!(basis_index(3, &[1, 2]), 2);
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(sort_with_sign(&[2, 0, 1]), Some((1.0, vec![0, 1, 2])));
        assert_eq!(sort_with_sign(&[1, 0]), Some((-1.0, vec![0, 1])));
        assert_eq!(sort_with_sign(&[1, 1]), None);
        assert_eq!(sort_with_sign(&[0, 2, 0]), None);
    }

    #[test]
    fn memo_shares_subexpressions() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        static CALLS: AtomicUsize = AtomicUsize::new(0);
        let f = KForm::from_fn(1, 0, |ctx, order| {
            CALLS.fetch_add(1, Ordering::SeqCst);
            vec![ctx.coords(order)[0].sin()]
        });
        let g = f.add(&f).mul_fn(&f);
        let ctx = EvalCtx::new(&Point::new(vec![0.3]));
        let v = g.values(&ctx)[0];
        assert!((v - 2.0 * 0.3f64.sin().powi(2)).abs() < 1e-15);
        assert_eq!(CALLS.load(Ordering::SeqCst), 1);
    }
}
