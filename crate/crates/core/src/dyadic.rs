//! The finite dyadic universe: every dyadic subinterval of `[0, 1)` down to a
//! fixed depth, functions that are constant on the finest cells, exact dyadic
//! averages, and the (weighted) Haar systems.
//!
//! Nodes are stored in heap order: the root is `0`, the children of `i` are
//! `2i + 1` (left, `I₋`) and `2i + 2` (right, `I₊`). Internal nodes occupy
//! `0..2^N - 1` and leaves occupy `2^N - 1..2^{N+1} - 1`, so any per-node
//! array can be sliced into its internal part without reindexing.
//!
//! The Haar function of `I` is `|I|^{-1/2} (1_{I₊} - 1_{I₋})`, right minus left.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::Weight;

pub const MAX_DEPTH: u32 = 24;

/// Address of a dyadic interval in heap order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Node(pub usize);

impl Node {
    pub const ROOT: Node = Node(0);

    pub fn new(level: u32, index: usize) -> Node {
        debug_assert!(index < 1usize << level);
        Node((1usize << level) - 1 + index)
    }

    pub fn level(self) -> u32 {
        usize::BITS - 1 - (self.0 + 1).leading_zeros()
    }

    /// Position `k` of the node within its level, so the interval is
    /// `[k 2^{-l}, (k+1) 2^{-l})`.
    pub fn index(self) -> usize {
        self.0 + 1 - (1usize << self.level())
    }

    pub fn left(self) -> Node {
        Node(2 * self.0 + 1)
    }

    pub fn right(self) -> Node {
        Node(2 * self.0 + 2)
    }

    pub fn parent(self) -> Option<Node> {
        if self.0 == 0 {
            None
        } else {
            Some(Node((self.0 - 1) / 2))
        }
    }

    /// Lebesgue length `2^{-level}`.
    pub fn length(self) -> f64 {
        exp2i(-(self.level() as i32))
    }

    /// Left and right endpoints of the interval.
    pub fn interval(self) -> (f64, f64) {
        let len = self.length();
        let k = self.index() as f64;
        (k * len, (k + 1.0) * len)
    }
}

/// `2^e` for small integer `e`, exact.
pub(crate) fn exp2i(e: i32) -> f64 {
    f64::powi(2.0, e)
}

/// `|I|^{1/2}` for a node at `level`.
pub(crate) fn sqrt_length(level: u32) -> f64 {
    let half = level / 2;
    let base = exp2i(-(half as i32));
    if level.is_multiple_of(2) {
        base
    } else {
        base * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// All dyadic subintervals of `[0, 1)` to depth `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicTree {
    depth: u32,
}

impl DyadicTree {
    pub fn new(depth: u32) -> Result<Self> {
        if !(1..=MAX_DEPTH).contains(&depth) {
            return Err(Error::DepthOutOfRange(depth));
        }
        Ok(DyadicTree { depth })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn num_leaves(&self) -> usize {
        1usize << self.depth
    }

    pub fn num_internal(&self) -> usize {
        self.num_leaves() - 1
    }

    pub fn num_nodes(&self) -> usize {
        2 * self.num_leaves() - 1
    }

    /// Width of a leaf cell, `2^{-N}`.
    pub fn leaf_width(&self) -> f64 {
        exp2i(-(self.depth as i32))
    }

    pub fn is_leaf(&self, node: Node) -> bool {
        node.0 >= self.num_internal() && node.0 < self.num_nodes()
    }

    pub fn is_internal(&self, node: Node) -> bool {
        node.0 < self.num_internal()
    }

    pub fn contains(&self, node: Node) -> bool {
        node.0 < self.num_nodes()
    }

    /// Node of leaf cell `j`.
    pub fn leaf(&self, j: usize) -> Node {
        Node(self.num_internal() + j)
    }

    /// Range of leaf cells under `node`.
    pub fn leaf_range(&self, node: Node) -> std::ops::Range<usize> {
        let shift = self.depth - node.level();
        let k = node.index();
        (k << shift)..((k + 1) << shift)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> {
        (0..self.num_nodes()).map(Node)
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = Node> {
        (0..self.num_internal()).map(Node)
    }

    pub(crate) fn check_same(&self, other: &DyadicTree) -> Result<()> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch(self.depth, other.depth));
        }
        Ok(())
    }
}

/// A real function constant on each of the `2^N` leaf cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LeafFnRepr", into = "LeafFnRepr")]
pub struct LeafFn {
    tree: DyadicTree,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LeafFnRepr {
    depth: u32,
    values: Vec<f64>,
}

impl TryFrom<LeafFnRepr> for LeafFn {
    type Error = Error;
    fn try_from(r: LeafFnRepr) -> Result<Self> {
        LeafFn::new(DyadicTree::new(r.depth)?, r.values)
    }
}

impl From<LeafFn> for LeafFnRepr {
    fn from(f: LeafFn) -> Self {
        LeafFnRepr {
            depth: f.tree.depth,
            values: f.values,
        }
    }
}

impl LeafFn {
    pub fn new(tree: DyadicTree, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.num_leaves() {
            return Err(Error::LengthMismatch {
                expected: tree.num_leaves(),
                got: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(LeafFn { tree, values })
    }

    pub(crate) fn from_vec_unchecked(tree: DyadicTree, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), tree.num_leaves());
        LeafFn { tree, values }
    }

    pub fn constant(tree: DyadicTree, c: f64) -> Self {
        LeafFn {
            tree,
            values: vec![c; tree.num_leaves()],
        }
    }

    pub fn zeros(tree: DyadicTree) -> Self {
        Self::constant(tree, 0.0)
    }

    /// Indicator of the interval `node`.
    pub fn indicator(tree: DyadicTree, node: Node) -> Self {
        let mut f = Self::zeros(tree);
        for j in tree.leaf_range(node) {
            f.values[j] = 1.0;
        }
        f
    }

    pub fn tree(&self) -> DyadicTree {
        self.tree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> LeafFn {
        LeafFn {
            tree: self.tree,
            values: self.values.iter().map(|&x| op(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &LeafFn, op: impl Fn(f64, f64) -> f64) -> Result<LeafFn> {
        self.tree.check_same(&other.tree)?;
        Ok(LeafFn {
            tree: self.tree,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    /// `∫ f g dx` over `[0, 1)`.
    pub fn inner(&self, other: &LeafFn) -> f64 {
        dot(&self.values, &other.values) * self.tree.leaf_width()
    }

    /// `∫ f g w dx`.
    pub fn inner_weighted(&self, other: &LeafFn, w: &Weight) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .zip(w.values())
            .map(|((a, b), c)| a * b * c)
            .sum();
        s * self.tree.leaf_width()
    }

    /// `‖f‖²` in flat `L²[0,1)`.
    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One real per node of a tree.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeScalars {
    tree: DyadicTree,
    values: Vec<f64>,
}

impl NodeScalars {
    pub fn zeros(tree: DyadicTree) -> Self {
        NodeScalars {
            tree,
            values: vec![0.0; tree.num_nodes()],
        }
    }

    pub fn tree(&self) -> DyadicTree {
        self.tree
    }

    pub fn get(&self, node: Node) -> f64 {
        self.values[node.0]
    }

    pub fn set(&mut self, node: Node, x: f64) {
        self.values[node.0] = x;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn internal(&self) -> &[f64] {
        &self.values[..self.tree.num_internal()]
    }

    pub fn leaves(&self) -> &[f64] {
        &self.values[self.tree.num_internal()..]
    }
}

/// Fill the internal part of a heap-ordered array from its leaves by
/// repeated halving: `a[i] = (a[2i+1] + a[2i+2]) / 2`.
pub(crate) fn average_up(a: &mut [f64], num_internal: usize) {
    for i in (0..num_internal).rev() {
        a[i] = 0.5 * (a[2 * i + 1] + a[2 * i + 2]);
    }
}

pub(crate) fn averages_of(tree: DyadicTree, leaves: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; tree.num_nodes()];
    a[tree.num_internal()..].copy_from_slice(leaves);
    average_up(&mut a, tree.num_internal());
    a
}

/// Averages `m_I f` on every node, leaves included.
pub fn dyadic_averages(f: &LeafFn) -> NodeScalars {
    NodeScalars {
        tree: f.tree,
        values: averages_of(f.tree, &f.values),
    }
}

/// Global mean and Haar coefficients `⟨f, h_I⟩` on internal nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarDecomposition {
    tree: DyadicTree,
    pub mean: f64,
    coeffs: Vec<f64>,
}

impl HaarDecomposition {
    pub fn new(tree: DyadicTree, mean: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != tree.num_internal() {
            return Err(Error::LengthMismatch {
                expected: tree.num_internal(),
                got: coeffs.len(),
            });
        }
        Ok(HaarDecomposition { tree, mean, coeffs })
    }

    pub fn tree(&self) -> DyadicTree {
        self.tree
    }

    pub fn coeff(&self, node: Node) -> f64 {
        self.coeffs[node.0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }
}

/// Haar coefficients from a full array of dyadic averages.
pub(crate) fn coeffs_from_averages(tree: DyadicTree, avg: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(tree.num_internal());
    for i in 0..tree.num_internal() {
        let s = sqrt_length(Node(i).level());
        out.push(0.5 * s * (avg[2 * i + 2] - avg[2 * i + 1]));
    }
    out
}

pub fn haar_analysis(f: &LeafFn) -> HaarDecomposition {
    let avg = averages_of(f.tree, &f.values);
    HaarDecomposition {
        tree: f.tree,
        mean: avg[0],
        coeffs: coeffs_from_averages(f.tree, &avg),
    }
}

/// Leaf values from a mean and internal coefficients, written into `out`.
pub(crate) fn synthesize_into(tree: DyadicTree, mean: f64, coeffs: &[f64], out: &mut [f64]) {
    let mut m = vec![0.0; tree.num_nodes()];
    m[0] = mean;
    for i in 0..tree.num_internal() {
        let d = coeffs[i] / sqrt_length(Node(i).level());
        m[2 * i + 1] = m[i] - d;
        m[2 * i + 2] = m[i] + d;
    }
    out.copy_from_slice(&m[tree.num_internal()..]);
}

pub fn haar_synthesis(d: &HaarDecomposition) -> LeafFn {
    let mut out = vec![0.0; d.tree.num_leaves()];
    synthesize_into(d.tree, d.mean, &d.coeffs, &mut out);
    LeafFn {
        tree: d.tree,
        values: out,
    }
}

/// The Haar function `h_I` as a leaf function.
pub fn haar_function(tree: DyadicTree, node: Node) -> Result<LeafFn> {
    if !tree.is_internal(node) {
        return Err(Error::NotInternal);
    }
    let mut f = LeafFn::zeros(tree);
    let c = 1.0 / sqrt_length(node.level());
    for j in tree.leaf_range(node.left()) {
        f.values[j] = -c;
    }
    for j in tree.leaf_range(node.right()) {
        f.values[j] = c;
    }
    Ok(f)
}

/// Values of `h_I^v` on the right and left child.
fn weighted_haar_values(v: &Weight, node: Node) -> Result<(f64, f64)> {
    let vm = v.mass(node.left());
    let vp = v.mass(node.right());
    if !(vm > 0.0 && vp > 0.0) {
        return Err(Error::InvalidParameter("zero child mass".into()));
    }
    let norm = 1.0 / (vm + vp).sqrt();
    Ok((norm * (vm / vp).sqrt(), -norm * (vp / vm).sqrt()))
}

/// The weighted Haar function `h_I^v`, orthonormal in `L²(v)`.
pub fn weighted_haar(v: &Weight, node: Node) -> Result<LeafFn> {
    let tree = v.tree();
    if !tree.is_internal(node) {
        return Err(Error::NotInternal);
    }
    let (plus, minus) = weighted_haar_values(v, node)?;
    let mut f = LeafFn::zeros(tree);
    for j in tree.leaf_range(node.left()) {
        f.values[j] = minus;
    }
    for j in tree.leaf_range(node.right()) {
        f.values[j] = plus;
    }
    Ok(f)
}

/// Coefficients with `h_I = α h_I^v + β 1_I / √|I|`, from the 2×2 system on
/// the two children.
pub fn whb_decompose(v: &Weight, node: Node) -> Result<(f64, f64)> {
    if !v.tree().is_internal(node) {
        return Err(Error::NotInternal);
    }
    let (plus, minus) = weighted_haar_values(v, node)?;
    let s = 1.0 / sqrt_length(node.level());
    // [plus  s] [α]   [ s]
    // [minus s] [β] = [-s]
    let det = plus * s - s * minus;
    if det == 0.0 {
        return Err(Error::InvalidParameter("singular decomposition".into()));
    }
    let alpha = (s * s - s * (-s)) / det;
    let beta = (plus * (-s) - minus * s) / det;
    Ok((alpha, beta))
}
