//! Matrix-free dyadic operators acting on leaf functions.
//!
//! Every apply is a constant number of passes over the heap-ordered tree, so
//! a single application costs `O(2^N)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{
    average_up, averages_of, coeffs_from_averages, synthesize_into, DyadicTree, LeafFn, Node,
};
use crate::error::{Error, Result};
use crate::weights::Weight;

/// Signs `r_I ∈ {-1, +1}` on the internal nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignAssignment {
    tree: DyadicTree,
    signs: Vec<i8>,
}

impl SignAssignment {
    pub fn all_plus(tree: DyadicTree) -> Self {
        SignAssignment {
            tree,
            signs: vec![1; tree.num_internal()],
        }
    }

    pub fn random(tree: DyadicTree, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SignAssignment {
            tree,
            signs: (0..tree.num_internal())
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
        }
    }

    pub fn new(tree: DyadicTree, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != tree.num_internal() {
            return Err(Error::LengthMismatch {
                expected: tree.num_internal(),
                got: signs.len(),
            });
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("signs must be +1 or -1".into()));
        }
        Ok(SignAssignment { tree, signs })
    }

    pub fn tree(&self) -> DyadicTree {
        self.tree
    }

    pub fn get(&self, node: Node) -> f64 {
        self.signs[node.0] as f64
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn flip(&mut self, node: Node) {
        self.signs[node.0] = -self.signs[node.0];
    }

    pub fn negated(&self) -> Self {
        SignAssignment {
            tree: self.tree,
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }
}

/// A linear operator on leaf functions together with its adjoint for the
/// flat inner product `⟨f, g⟩ = Σ_j f_j g_j 2^{-N}`.
pub trait LinearOperator: Send + Sync {
    fn tree(&self) -> DyadicTree;
    fn apply_into(&self, f: &[f64], out: &mut [f64]);
    fn apply_adjoint_into(&self, g: &[f64], out: &mut [f64]);

    fn apply(&self, f: &LeafFn) -> LeafFn {
        let mut out = vec![0.0; f.values().len()];
        self.apply_into(f.values(), &mut out);
        LeafFn::from_vec_unchecked(self.tree(), out)
    }

    fn apply_adjoint(&self, g: &LeafFn) -> LeafFn {
        let mut out = vec![0.0; g.values().len()];
        self.apply_adjoint_into(g.values(), &mut out);
        LeafFn::from_vec_unchecked(self.tree(), out)
    }
}

/// Haar coefficients of a leaf slice (the mean is `avg[0]`).
fn analysis(tree: DyadicTree, f: &[f64]) -> Vec<f64> {
    coeffs_from_averages(tree, &averages_of(tree, f))
}

/// Writes `Σ_I s_I 1_I(x)` on the leaves, `s` given on internal nodes.
fn accumulate_down(tree: DyadicTree, s: &[f64], out: &mut [f64]) {
    let ni = tree.num_internal();
    let mut acc = vec![0.0; tree.num_nodes()];
    for i in 0..ni {
        let a = acc[i] + s[i];
        acc[2 * i + 1] = a;
        acc[2 * i + 2] = a;
    }
    out.copy_from_slice(&acc[ni..]);
}

/// The dyadic paraproduct `π_b f = Σ_I m_I f · b_I · h_I`.
#[derive(Clone, Debug)]
pub struct Paraproduct {
    tree: DyadicTree,
    b_coeffs: Vec<f64>,
}

impl Paraproduct {
    pub fn new(b: &LeafFn) -> Self {
        Paraproduct {
            tree: b.tree(),
            b_coeffs: analysis(b.tree(), b.values()),
        }
    }

    pub fn b_coeffs(&self) -> &[f64] {
        &self.b_coeffs
    }
}

impl LinearOperator for Paraproduct {
    fn tree(&self) -> DyadicTree {
        self.tree
    }

    fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let m = averages_of(self.tree, f);
        let c: Vec<f64> = self.b_coeffs.iter().zip(&m).map(|(b, m)| b * m).collect();
        synthesize_into(self.tree, 0.0, &c, out);
    }

    fn apply_adjoint_into(&self, g: &[f64], out: &mut [f64]) {
        let a = analysis(self.tree, g);
        let s: Vec<f64> = (0..self.tree.num_internal())
            .map(|i| self.b_coeffs[i] * a[i] / Node(i).length())
            .collect();
        accumulate_down(self.tree, &s, out);
    }
}

/// `π_b^* g = Σ_I b_I ⟨g, h_I⟩ 1_I / |I|`, as an operator in its own right.
#[derive(Clone, Debug)]
pub struct ParaproductAdjoint(pub Paraproduct);

impl ParaproductAdjoint {
    pub fn new(b: &LeafFn) -> Self {
        ParaproductAdjoint(Paraproduct::new(b))
    }
}

impl LinearOperator for ParaproductAdjoint {
    fn tree(&self) -> DyadicTree {
        self.0.tree
    }

    fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        self.0.apply_adjoint_into(f, out)
    }

    fn apply_adjoint_into(&self, g: &[f64], out: &mut [f64]) {
        self.0.apply_into(g, out)
    }
}

/// The martingale transform `T_r f = Σ_I r_I ⟨f, h_I⟩ h_I`.
#[derive(Clone, Debug)]
pub struct Martingale {
    pub signs: SignAssignment,
}

impl Martingale {
    pub fn new(signs: SignAssignment) -> Self {
        Martingale { signs }
    }
}

impl LinearOperator for Martingale {
    fn tree(&self) -> DyadicTree {
        self.signs.tree
    }

    fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let mut a = analysis(self.signs.tree, f);
        for (c, &s) in a.iter_mut().zip(&self.signs.signs) {
            *c *= s as f64;
        }
        synthesize_into(self.signs.tree, 0.0, &a, out);
    }

    fn apply_adjoint_into(&self, g: &[f64], out: &mut [f64]) {
        self.apply_into(g, out)
    }
}

/// The positive operator `T₀ f = Σ_I k_I m_I f 1_I` with
/// `k_I = (|Δ_I v| / m_I v)(|Δ_I u^{-1}| / m_I u^{-1})`.
#[derive(Clone, Debug)]
pub struct T0 {
    tree: DyadicTree,
    k: Vec<f64>,
}

impl T0 {
    pub fn new(u: &Weight, v: &Weight) -> Result<Self> {
        let tree = u.tree();
        tree.check_same(&v.tree())?;
        let k = tree
            .internal_nodes()
            .map(|n| (v.delta(n).abs() / v.avg(n)) * (u.inv_delta(n).abs() / u.inv_avg(n)))
            .collect();
        Ok(T0 { tree, k })
    }

    pub fn kernel(&self) -> &[f64] {
        &self.k
    }
}

impl LinearOperator for T0 {
    fn tree(&self) -> DyadicTree {
        self.tree
    }

    fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let m = averages_of(self.tree, f);
        let s: Vec<f64> = self.k.iter().zip(&m).map(|(k, m)| k * m).collect();
        accumulate_down(self.tree, &s, out);
    }

    fn apply_adjoint_into(&self, g: &[f64], out: &mut [f64]) {
        self.apply_into(g, out)
    }
}

pub fn apply_paraproduct(b: &LeafFn, f: &LeafFn) -> Result<LeafFn> {
    b.tree().check_same(&f.tree())?;
    Ok(Paraproduct::new(b).apply(f))
}

pub fn apply_paraproduct_adjoint(b: &LeafFn, g: &LeafFn) -> Result<LeafFn> {
    b.tree().check_same(&g.tree())?;
    Ok(Paraproduct::new(b).apply_adjoint(g))
}

pub fn apply_martingale(r: &SignAssignment, f: &LeafFn) -> Result<LeafFn> {
    r.tree.check_same(&f.tree())?;
    Ok(Martingale::new(r.clone()).apply(f))
}

pub fn apply_t0(u: &Weight, v: &Weight, f: &LeafFn) -> Result<LeafFn> {
    u.tree().check_same(&f.tree())?;
    Ok(T0::new(u, v)?.apply(f))
}

/// `(S^d f)(x) = (Σ_{I ∋ x, I ≠ [0,1)} |m_I f - m_{Î} f|²)^{1/2}`.
pub fn square_function(f: &LeafFn) -> LeafFn {
    let tree = f.tree();
    let m = averages_of(tree, f.values());
    let mut acc = vec![0.0; tree.num_nodes()];
    for i in 0..tree.num_internal() {
        for c in [2 * i + 1, 2 * i + 2] {
            acc[c] = acc[i] + (m[c] - m[i]).powi(2);
        }
    }
    LeafFn::from_vec_unchecked(
        tree,
        acc[tree.num_internal()..]
            .iter()
            .map(|x| x.sqrt())
            .collect(),
    )
}

/// Coefficients `m_I v` of the quadratic form `‖S^d f‖²_{L²(v)} = Σ_I m_I v ⟨f, h_I⟩²`.
pub fn sq_form_coeffs(v: &Weight) -> Vec<f64> {
    v.averages()[..v.tree().num_internal()].to_vec()
}

/// The symmetric operator `A f = Σ_I c_I ⟨f, h_I⟩ h_I` of a diagonal Haar form.
#[derive(Clone, Debug)]
pub struct HaarMultiplier {
    tree: DyadicTree,
    c: Vec<f64>,
}

impl HaarMultiplier {
    pub fn new(tree: DyadicTree, c: Vec<f64>) -> Result<Self> {
        if c.len() != tree.num_internal() {
            return Err(Error::LengthMismatch {
                expected: tree.num_internal(),
                got: c.len(),
            });
        }
        Ok(HaarMultiplier { tree, c })
    }

    /// The form of `‖S^d f‖²_{L²(v)}`.
    pub fn square_form(v: &Weight) -> Self {
        HaarMultiplier {
            tree: v.tree(),
            c: sq_form_coeffs(v),
        }
    }

    pub fn quadratic(&self, f: &[f64]) -> f64 {
        analysis(self.tree, f)
            .iter()
            .zip(&self.c)
            .map(|(a, c)| c * a * a)
            .sum()
    }
}

impl LinearOperator for HaarMultiplier {
    fn tree(&self) -> DyadicTree {
        self.tree
    }

    fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let mut a = analysis(self.tree, f);
        for (x, c) in a.iter_mut().zip(&self.c) {
            *x *= c;
        }
        synthesize_into(self.tree, 0.0, &a, out);
    }

    fn apply_adjoint_into(&self, g: &[f64], out: &mut [f64]) {
        self.apply_into(g, out)
    }
}

/// Leafwise maximal averages together with the maximizing ancestor of each
/// leaf (the coarsest one on ties).
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalSelection {
    pub values: Vec<f64>,
    pub selection: Vec<usize>,
}

/// `sup_{I ∋ x} w(I)^{-1} ∫_I |f| w`, flat when `w` is `None`.
pub fn maximal_select(tree: DyadicTree, f: &[f64], w: Option<&Weight>) -> MaximalSelection {
    let ni = tree.num_internal();
    let mut num = vec![0.0; tree.num_nodes()];
    match w {
        Some(w) => {
            for (dst, (x, wx)) in num[ni..].iter_mut().zip(f.iter().zip(w.values())) {
                *dst = x.abs() * wx;
            }
        }
        None => {
            for (dst, x) in num[ni..].iter_mut().zip(f) {
                *dst = x.abs();
            }
        }
    }
    average_up(&mut num, ni);
    if let Some(w) = w {
        for (x, m) in num.iter_mut().zip(w.averages()) {
            *x /= m;
        }
    }
    let mut best = vec![0usize; tree.num_nodes()];
    for i in 0..ni {
        for c in [2 * i + 1, 2 * i + 2] {
            best[c] = if num[c] > num[best[i]] { c } else { best[i] };
        }
    }
    let selection = best[ni..].to_vec();
    let values = selection.iter().map(|&s| num[s]).collect();
    MaximalSelection { values, selection }
}

/// The flat dyadic maximal function.
pub fn maximal(f: &LeafFn) -> LeafFn {
    LeafFn::from_vec_unchecked(f.tree(), maximal_select(f.tree(), f.values(), None).values)
}

/// The dyadic weighted maximal function `M_v`.
pub fn maximal_weighted(v: &Weight, f: &LeafFn) -> Result<LeafFn> {
    v.tree().check_same(&f.tree())?;
    Ok(LeafFn::from_vec_unchecked(
        f.tree(),
        maximal_select(f.tree(), f.values(), Some(v)).values,
    ))
}

/// Per-node localized testing ratios
/// `u^{-1}(J)^{-1} ∫_J (M(1_J u^{-1}))² v`, with the maximal function taken over
/// intervals inside `J`.
pub fn sawyer_ratios(u: &Weight, v: &Weight) -> Result<Vec<f64>> {
    let tree = u.tree();
    tree.check_same(&v.tree())?;
    let n = tree.depth();
    let ni = tree.num_internal();
    let ui = u.inv_averages();
    let h = tree.leaf_width();
    let mut run = vec![0.0; tree.num_nodes()];
    let mut out = Vec::with_capacity(tree.num_nodes());
    for j in 0..tree.num_nodes() {
        let lj = Node(j).level();
        run[j] = ui[j];
        for d in 1..=(n - lj) {
            let first = ((j + 1) << d) - 1;
            for c in first..first + (1 << d) {
                run[c] = run[(c - 1) / 2].max(ui[c]);
            }
        }
        let first = ((j + 1) << (n - lj)) - 1;
        let s: f64 = (first..first + (1 << (n - lj)))
            .map(|c| run[c] * run[c] * v.values()[c - ni])
            .sum();
        out.push(s * h / (Node(j).length() * ui[j]));
    }
    Ok(out)
}

/// Localized Sawyer testing constant, maximized over all nodes.
pub fn sawyer_constant(u: &Weight, v: &Weight) -> Result<f64> {
    Ok(sawyer_ratios(u, v)?.into_iter().fold(0.0, f64::max))
}

/// Operators available to the norm estimators.
#[derive(Clone, Debug)]
pub enum OperatorKind {
    Paraproduct(LeafFn),
    ParaproductAdjoint(LeafFn),
    Martingale(SignAssignment),
    T0(Weight, Weight),
    SquareFn,
    MaximalFlat,
    MaximalWeighted(Weight),
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Paraproduct(_) => "paraproduct",
            OperatorKind::ParaproductAdjoint(_) => "paraproduct-adjoint",
            OperatorKind::Martingale(_) => "martingale",
            OperatorKind::T0(..) => "t0",
            OperatorKind::SquareFn => "square",
            OperatorKind::MaximalFlat => "maximal",
            OperatorKind::MaximalWeighted(_) => "maximal-weighted",
        }
    }

    pub fn tree(&self) -> Option<DyadicTree> {
        match self {
            OperatorKind::Paraproduct(b) | OperatorKind::ParaproductAdjoint(b) => Some(b.tree()),
            OperatorKind::Martingale(r) => Some(r.tree()),
            OperatorKind::T0(u, _) => Some(u.tree()),
            OperatorKind::MaximalWeighted(w) => Some(w.tree()),
            OperatorKind::SquareFn | OperatorKind::MaximalFlat => None,
        }
    }

    /// The matrix-free linear operator, when the kind is linear.
    pub fn linear(&self) -> Result<Box<dyn LinearOperator>> {
        Ok(match self {
            OperatorKind::Paraproduct(b) => Box::new(Paraproduct::new(b)),
            OperatorKind::ParaproductAdjoint(b) => Box::new(ParaproductAdjoint::new(b)),
            OperatorKind::Martingale(r) => Box::new(Martingale::new(r.clone())),
            OperatorKind::T0(u, v) => Box::new(T0::new(u, v)?),
            _ => return Err(Error::NotLinear),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{haar_analysis, haar_function, haar_synthesis};

    fn t(n: u32) -> DyadicTree {
        DyadicTree::new(n).unwrap()
    }

    fn lf(n: u32, v: &[f64]) -> LeafFn {
        LeafFn::new(t(n), v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn paraproduct_examples() {
        let tree = t(1);
        let h = haar_function(tree, Node::ROOT).unwrap();
        let one = LeafFn::constant(tree, 1.0);
        close(
            apply_paraproduct(&h, &one).unwrap().values(),
            &[-1.0, 1.0],
            1e-15,
        );
        let c = LeafFn::constant(t(3), 2.0);
        let f = lf(3, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        assert!(apply_paraproduct(&c, &f)
            .unwrap()
            .values()
            .iter()
            .all(|&x| x == 0.0));

        let b = lf(3, &[0.3, -1.0, 2.0, 0.5, 0.0, 1.5, -0.7, 4.0]);
        let got = apply_paraproduct(&b, &LeafFn::constant(t(3), 1.0)).unwrap();
        let mut d = haar_analysis(&b);
        d.mean = 0.0;
        close(got.values(), haar_synthesis(&d).values(), 1e-14);
    }

    #[test]
    fn paraproduct_adjoint_examples() {
        let tree = t(1);
        let h = haar_function(tree, Node::ROOT).unwrap();
        close(
            apply_paraproduct_adjoint(&h, &h).unwrap().values(),
            &[1.0, 1.0],
            1e-15,
        );
        let c = LeafFn::constant(t(2), 3.0);
        let g = lf(2, &[1., -2., 0.5, 4.]);
        assert!(apply_paraproduct_adjoint(&c, &g)
            .unwrap()
            .values()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn martingale_examples() {
        let tree = t(1);
        let r = SignAssignment::all_plus(tree);
        close(
            apply_martingale(&r, &lf(1, &[2.0, 0.0])).unwrap().values(),
            &[1.0, -1.0],
            1e-15,
        );
        let r = SignAssignment::random(t(3), 4);
        let c = LeafFn::constant(t(3), 7.0);
        assert!(apply_martingale(&r, &c)
            .unwrap()
            .values()
            .iter()
            .all(|x| x.abs() < 1e-15));
        let f = lf(3, &[1., 0., 3., -2., 5., 1., 1., 8.]);
        let a = apply_martingale(&r, &f).unwrap();
        let b = apply_martingale(&r.negated(), &f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x + y).abs() < 1e-14);
        }
        assert!(SignAssignment::new(t(1), vec![0]).is_err());
    }

    #[test]
    fn t0_examples() {
        let tree = t(1);
        let one = Weight::constant(t(3), 1.0);
        let f = lf(3, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        assert!(apply_t0(&one, &one, &f)
            .unwrap()
            .values()
            .iter()
            .all(|&x| x == 0.0));

        let v = Weight::from_values(tree, vec![1.0, 3.0]).unwrap();
        let u1 = Weight::constant(tree, 1.0);
        let f1 = LeafFn::constant(tree, 1.0);
        close(apply_t0(&u1, &v, &f1).unwrap().values(), &[0.0, 0.0], 1e-15);
        let u = Weight::from_values(tree, vec![1.0, 1.0 / 3.0]).unwrap();
        close(apply_t0(&u, &v, &f1).unwrap().values(), &[1.0, 1.0], 1e-15);
    }

    #[test]
    fn square_function_examples() {
        let tree = t(1);
        let h = haar_function(tree, Node::ROOT).unwrap();
        close(square_function(&h).values(), &[1.0, 1.0], 1e-15);
        assert!(square_function(&LeafFn::constant(t(4), 3.0))
            .values()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn sq_form_coeffs_examples() {
        assert!(sq_form_coeffs(&Weight::constant(t(3), 1.0))
            .iter()
            .all(|&x| x == 1.0));
        let v = Weight::from_values(t(2), vec![1., 1., 2., 2.]).unwrap();
        assert_eq!(sq_form_coeffs(&v), vec![1.5, 1.0, 2.0]);
    }

    #[test]
    fn sq_form_two_ways() {
        let v = crate::weights::gen_random_a2_weight(6, 0.6, 3).unwrap();
        let f = crate::weights::gen_random_a2_weight(6, 0.9, 8)
            .unwrap()
            .leaf_fn()
            .map(|x| x.ln());
        let s = square_function(&f);
        let lhs = s.inner_weighted(&s, &v);
        let rhs = HaarMultiplier::square_form(&v).quadratic(f.values());
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn maximal_examples() {
        let f = lf(2, &[4., 0., 0., 0.]);
        assert_eq!(maximal(&f).values(), &[4.0, 2.0, 1.0, 1.0]);
        close(
            maximal(&LeafFn::constant(t(3), -2.5)).values(),
            &[2.5; 8],
            1e-15,
        );
        let g = lf(3, &[1., -4., 3., 0.5, 2., 2., -1., 7.]);
        let one = Weight::constant(t(3), 1.0);
        close(
            maximal_weighted(&one, &g).unwrap().values(),
            maximal(&g).values(),
            1e-15,
        );
    }

    fn brute_maximal(f: &LeafFn, w: &Weight) -> Vec<f64> {
        let tree = f.tree();
        (0..tree.num_leaves())
            .map(|j| {
                let mut node = tree.leaf(j);
                let mut best: f64 = 0.0;
                loop {
                    let r = tree.leaf_range(node);
                    let num: f64 = r.clone().map(|k| f.values()[k].abs() * w.values()[k]).sum();
                    let den: f64 = r.map(|k| w.values()[k]).sum();
                    best = best.max(num / den);
                    match node.parent() {
                        Some(p) => node = p,
                        None => break,
                    }
                }
                best
            })
            .collect()
    }

    #[test]
    fn maximal_weighted_matches_brute_force() {
        let w = crate::weights::gen_random_a2_weight(5, 0.8, 1).unwrap();
        let f = crate::weights::gen_random_a2_weight(5, 0.8, 2)
            .unwrap()
            .leaf_fn()
            .map(|x| x - 1.0);
        let got = maximal_weighted(&w, &f).unwrap();
        for (a, b) in got.values().iter().zip(brute_maximal(&f, &w)) {
            assert!((a - b).abs() < 1e-13 * b.max(1.0));
        }
    }

    fn brute_sawyer(u: &Weight, v: &Weight) -> f64 {
        let tree = u.tree();
        let h = tree.leaf_width();
        let mut best: f64 = 0.0;
        for jn in tree.nodes() {
            let rj = tree.leaf_range(jn);
            let mut s = 0.0;
            for x in rj.clone() {
                let mut m: f64 = 0.0;
                for i in tree.nodes() {
                    let ri = tree.leaf_range(i);
                    if ri.start >= rj.start && ri.end <= rj.end && ri.contains(&x) {
                        let a: f64 =
                            ri.clone().map(|k| 1.0 / u.values()[k]).sum::<f64>() / ri.len() as f64;
                        m = m.max(a);
                    }
                }
                s += m * m * v.values()[x] * h;
            }
            let mass: f64 = rj.map(|k| h / u.values()[k]).sum();
            best = best.max(s / mass);
        }
        best
    }

    #[test]
    fn sawyer_examples() {
        let one = Weight::constant(t(4), 1.0);
        assert!((sawyer_constant(&one, &one).unwrap() - 1.0).abs() < 1e-15);
        let tree = t(1);
        let u = Weight::from_values(tree, vec![1.0, 1.0 / 3.0]).unwrap();
        let v = Weight::constant(tree, 1.0);
        let r = sawyer_ratios(&u, &v).unwrap();
        assert!((r[0] - 3.25).abs() < 1e-14);
        assert!((r[1] - 1.0).abs() < 1e-14);
        assert!((r[2] - 3.0).abs() < 1e-14);
        assert!((sawyer_constant(&u, &v).unwrap() - 3.25).abs() < 1e-14);

        let u = crate::weights::gen_random_a2_weight(5, 0.7, 5).unwrap();
        let v = crate::weights::gen_random_a2_weight(5, 0.7, 6).unwrap();
        let a = sawyer_constant(&u, &v).unwrap();
        assert!((a - brute_sawyer(&u, &v)).abs() < 1e-12 * a);
    }

    #[test]
    fn linear_dispatch() {
        assert!(matches!(
            OperatorKind::SquareFn.linear(),
            Err(Error::NotLinear)
        ));
        let b = lf(2, &[1., 2., 0., 5.]);
        let op = OperatorKind::Paraproduct(b.clone()).linear().unwrap();
        let f = lf(2, &[3., -1., 2., 2.]);
        assert_eq!(op.apply(&f), apply_paraproduct(&b, &f).unwrap());
    }
}
