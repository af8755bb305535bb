//! Weights, reproducible weight generators and the scalar characteristics
//! (joint A₂, RH₁, Hruščev A∞, dyadic doubling).
//!
//! The reciprocal `w^{-1}` is always the pointwise reciprocal of the leaf
//! values, averaged afterwards; it is never the reciprocal of averages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{averages_of, DyadicTree, LeafFn, Node};
use crate::error::{Error, Result};

/// A strictly positive leaf function with cached averages of itself and of
/// its reciprocal.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    leaf: LeafFn,
    avg: Vec<f64>,
    inv_avg: Vec<f64>,
}

impl Weight {
    pub fn new(leaf: LeafFn) -> Result<Self> {
        if let Some(j) = leaf.values().iter().position(|&x| x.is_nan() || x <= 0.0) {
            return Err(Error::NonPositive(j));
        }
        let tree = leaf.tree();
        let inv: Vec<f64> = leaf.values().iter().map(|x| 1.0 / x).collect();
        if let Some(j) = inv.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        let avg = averages_of(tree, leaf.values());
        let inv_avg = averages_of(tree, &inv);
        Ok(Weight { leaf, avg, inv_avg })
    }

    pub fn from_values(tree: DyadicTree, values: Vec<f64>) -> Result<Self> {
        Weight::new(LeafFn::new(tree, values)?)
    }

    pub fn constant(tree: DyadicTree, c: f64) -> Self {
        Weight::new(LeafFn::constant(tree, c)).expect("positive constant")
    }

    pub fn tree(&self) -> DyadicTree {
        self.leaf.tree()
    }

    pub fn leaf_fn(&self) -> &LeafFn {
        &self.leaf
    }

    pub fn values(&self) -> &[f64] {
        self.leaf.values()
    }

    /// `m_I w`.
    pub fn avg(&self, node: Node) -> f64 {
        self.avg[node.0]
    }

    /// `m_I (w^{-1})`.
    pub fn inv_avg(&self, node: Node) -> f64 {
        self.inv_avg[node.0]
    }

    pub fn averages(&self) -> &[f64] {
        &self.avg
    }

    pub fn inv_averages(&self) -> &[f64] {
        &self.inv_avg
    }

    /// `w(I) = |I| m_I w`.
    pub fn mass(&self, node: Node) -> f64 {
        node.length() * self.avg[node.0]
    }

    /// `Δ_I w = m_{I₊} w - m_{I₋} w`.
    pub fn delta(&self, node: Node) -> f64 {
        self.avg[node.right().0] - self.avg[node.left().0]
    }

    /// `Δ_I (w^{-1})`.
    pub fn inv_delta(&self, node: Node) -> f64 {
        self.inv_avg[node.right().0] - self.inv_avg[node.left().0]
    }

    /// The weight `w^{-1}`.
    pub fn reciprocal(&self) -> Weight {
        let leaf = self.leaf.map(|x| 1.0 / x);
        Weight {
            leaf,
            avg: self.inv_avg.clone(),
            inv_avg: self.avg.clone(),
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Weight> {
        Weight::new(self.leaf.map(|x| c * x))
    }

    /// Replace by the depth `N - 1` averages.
    pub fn coarsen(&self) -> Result<Weight> {
        let tree = self.tree();
        let coarse = DyadicTree::new(tree.depth() - 1)?;
        let off = coarse.num_internal();
        Weight::from_values(coarse, self.avg[off..off + coarse.num_leaves()].to_vec())
    }
}

/// Generator families for reproducible corpora.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Power,
    RandomMartingale,
    Step,
    LeafValues,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Power => "power",
            Family::RandomMartingale => "random-martingale",
            Family::Step => "step",
            Family::LeafValues => "leaf-values",
        }
    }
}

/// Serializable description of a weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub family: Family,
    pub depth: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Interior breakpoints of a step weight, increasing in `(0, 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
}

impl WeightSpec {
    pub fn power(alpha: f64, depth: u32) -> Self {
        WeightSpec {
            family: Family::Power,
            depth,
            alpha: Some(alpha),
            delta: None,
            seed: None,
            values: None,
            breakpoints: None,
        }
    }

    pub fn random_martingale(delta: f64, seed: u64, depth: u32) -> Self {
        WeightSpec {
            family: Family::RandomMartingale,
            depth,
            alpha: None,
            delta: Some(delta),
            seed: Some(seed),
            values: None,
            breakpoints: None,
        }
    }

    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>, depth: u32) -> Self {
        WeightSpec {
            family: Family::Step,
            depth,
            alpha: None,
            delta: None,
            seed: None,
            values: Some(values),
            breakpoints: Some(breakpoints),
        }
    }

    pub fn leaf_values(values: Vec<f64>, depth: u32) -> Self {
        WeightSpec {
            family: Family::LeafValues,
            depth,
            alpha: None,
            delta: None,
            seed: None,
            values: Some(values),
            breakpoints: None,
        }
    }

    /// Same description at another depth.
    pub fn at_depth(&self, depth: u32) -> Self {
        WeightSpec {
            depth,
            ..self.clone()
        }
    }

    /// Check parameter ranges without building.
    pub fn validate(&self) -> Result<()> {
        DyadicTree::new(self.depth)?;
        match self.family {
            Family::Power => {
                let a = self.alpha.ok_or_else(|| missing("alpha"))?;
                check_alpha(a)
            }
            Family::RandomMartingale => {
                let d = self.delta.ok_or_else(|| missing("delta"))?;
                self.seed.ok_or_else(|| missing("seed"))?;
                check_delta(d)
            }
            Family::Step => {
                let values = self.values.as_ref().ok_or_else(|| missing("values"))?;
                let bps = self.breakpoints.clone().unwrap_or_default();
                check_step(&bps, values)
            }
            Family::LeafValues => {
                self.values.as_ref().ok_or_else(|| missing("values"))?;
                Ok(())
            }
        }
    }

    pub fn build(&self) -> Result<Weight> {
        self.validate()?;
        match self.family {
            Family::Power => gen_power_weight(self.alpha.unwrap(), self.depth),
            Family::RandomMartingale => {
                gen_random_a2_weight(self.depth, self.delta.unwrap(), self.seed.unwrap())
            }
            Family::Step => gen_step_weight(
                self.depth,
                &self.breakpoints.clone().unwrap_or_default(),
                self.values.as_ref().unwrap(),
            ),
            Family::LeafValues => {
                Weight::from_values(DyadicTree::new(self.depth)?, self.values.clone().unwrap())
            }
        }
    }

    /// Compact parameter string for reports, e.g. `alpha=0.5`.
    pub fn params(&self) -> String {
        match self.family {
            Family::Power => format!("alpha={}", self.alpha.unwrap_or(f64::NAN)),
            Family::RandomMartingale => format!(
                "delta={};seed={}",
                self.delta.unwrap_or(f64::NAN),
                self.seed.unwrap_or(0)
            ),
            Family::Step => format!(
                "breakpoints={:?};values={:?}",
                self.breakpoints.clone().unwrap_or_default(),
                self.values.clone().unwrap_or_default()
            ),
            Family::LeafValues => format!("n={}", self.values.as_ref().map_or(0, Vec::len)),
        }
    }
}

fn missing(field: &str) -> Error {
    Error::InvalidParameter(format!("missing field `{field}`"))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha outside (-1,1): {alpha}"
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta outside (0,1): {delta}"
        )));
    }
    Ok(())
}

fn check_step(breakpoints: &[f64], values: &[f64]) -> Result<()> {
    if values.len() != breakpoints.len() + 1 {
        return Err(Error::InvalidParameter(
            "step weight needs one more value than breakpoints".into(),
        ));
    }
    if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("step values must be > 0".into()));
    }
    let mut prev = 0.0;
    for &b in breakpoints {
        if !(b > prev && b < 1.0) {
            return Err(Error::InvalidParameter(
                "breakpoints must increase inside (0,1)".into(),
            ));
        }
        prev = b;
    }
    Ok(())
}

/// Cell averages of `x^α` at depth `N`.
pub fn gen_power_weight(alpha: f64, depth: u32) -> Result<Weight> {
    check_alpha(alpha)?;
    let tree = DyadicTree::new(depth)?;
    let h = tree.leaf_width();
    let p = alpha + 1.0;
    let values = (0..tree.num_leaves())
        .map(|j| {
            if alpha == 0.0 {
                return 1.0;
            }
            let a = j as f64 * h;
            let b = a + h;
            // b^p - a^p = a^p · expm1(p · ln(b/a)), stable for small cells
            let diff = if j == 0 {
                b.powf(p)
            } else {
                a.powf(p) * (p * (1.0 / j as f64).ln_1p()).exp_m1()
            };
            diff / (p * h)
        })
        .collect();
    Weight::from_values(tree, values)
}

/// Random martingale weight: `m_root = 1`, and each internal node splits its
/// average as `m(1 + s)` on the right and `m(1 - s)` on the left, with
/// `s ∈ [-δ, δ)` drawn from a ChaCha stream keyed by `(seed, node)`.
pub fn gen_random_a2_weight(depth: u32, delta: f64, seed: u64) -> Result<Weight> {
    check_delta(delta)?;
    let tree = DyadicTree::new(depth)?;
    let mut m = vec![0.0; tree.num_nodes()];
    m[0] = 1.0;
    for i in 0..tree.num_internal() {
        let s = node_uniform(seed, i as u64, -delta, delta);
        m[2 * i + 1] = m[i] * (1.0 - s);
        m[2 * i + 2] = m[i] * (1.0 + s);
    }
    Weight::from_values(tree, m[tree.num_internal()..].to_vec())
}

/// A uniform draw from `[lo, hi)` keyed by `(seed, key)`.
pub(crate) fn node_uniform(seed: u64, key: u64, lo: f64, hi: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng.random_range(lo..hi)
}

/// Exact cell averages of a positive step function.
pub fn gen_step_weight(depth: u32, breakpoints: &[f64], values: &[f64]) -> Result<Weight> {
    check_step(breakpoints, values)?;
    let tree = DyadicTree::new(depth)?;
    let h = tree.leaf_width();
    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(breakpoints);
    edges.push(1.0);
    let out = (0..tree.num_leaves())
        .map(|j| {
            let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
            let mut s = 0.0;
            for (k, &val) in values.iter().enumerate() {
                let lo = edges[k].max(a);
                let hi = edges[k + 1].min(b);
                if hi > lo {
                    s += (hi - lo) * val;
                }
            }
            s / h
        })
        .collect();
    Weight::from_values(tree, out)
}

/// A supremum over nodes together with a node attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeSup {
    pub value: f64,
    pub node: Node,
}

pub(crate) fn sup_over(values: impl Iterator<Item = (Node, f64)>) -> NodeSup {
    let mut best = NodeSup {
        value: f64::NEG_INFINITY,
        node: Node::ROOT,
    };
    for (node, x) in values {
        if x > best.value {
            best = NodeSup { value: x, node };
        }
    }
    best
}

/// `[u, v]_{A₂} = sup_I m_I(u^{-1}) m_I v`, leaves included.
pub fn char_joint_a2(u: &Weight, v: &Weight) -> Result<NodeSup> {
    u.tree().check_same(&v.tree())?;
    Ok(sup_over(
        u.tree().nodes().map(|n| (n, u.inv_avg(n) * v.avg(n))),
    ))
}

/// One-weight `[w]_{A₂}`.
pub fn char_a2(w: &Weight) -> NodeSup {
    char_joint_a2(w, w).expect("same tree")
}

/// `x log x - x + 1`, the nonnegative entropy density.
pub(crate) fn entropy_density(x: f64) -> f64 {
    let t = x - 1.0;
    if t.abs() < 1e-4 {
        // series of (1+t) ln(1+t) - t
        t * t * (0.5 - t / 6.0 + t * t / 12.0)
    } else {
        x * x.ln() - t
    }
}

/// `[v]_{RH₁} = sup_I m_I((v / m_I v) log(v / m_I v))`.
///
/// Evaluated leafwise as the mean of `φ(v / m_I v)` with
/// `φ(x) = x log x - x + 1`, which agrees with the defining integrand because
/// `v / m_I v` has mean one on `I`.
pub fn char_rh1(v: &Weight) -> NodeSup {
    let tree = v.tree();
    let vals = v.values();
    sup_over(tree.nodes().map(|n| {
        let m = v.avg(n);
        let r = tree.leaf_range(n);
        let len = r.len() as f64;
        let s: f64 = vals[r].iter().map(|&x| entropy_density(x / m)).sum();
        (n, s / len)
    }))
}

/// Hruščev constant `sup_I m_I(v) exp(m_I(log v^{-1}))`.
pub fn char_ainfty(v: &Weight) -> NodeSup {
    let tree = v.tree();
    let logs: Vec<f64> = v.values().iter().map(|x| x.ln()).collect();
    let mlog = averages_of(tree, &logs);
    sup_over(tree.nodes().map(|n| (n, v.avg(n) * (-mlog[n.0]).exp())))
}

/// Dyadic doubling constant `sup_{I ≠ root} v(Î) / v(I)`.
pub fn char_doubling(v: &Weight) -> NodeSup {
    let tree = v.tree();
    sup_over(
        tree.nodes()
            .skip(1)
            .map(|n| (n, 2.0 * v.avg(n.parent().unwrap()) / v.avg(n))),
    )
}

/// A pair of weights on the same tree.
#[derive(Clone, Debug)]
pub struct WeightPair {
    pub u: Weight,
    pub v: Weight,
}

impl WeightPair {
    pub fn new(u: Weight, v: Weight) -> Result<Self> {
        u.tree().check_same(&v.tree())?;
        Ok(WeightPair { u, v })
    }

    pub fn tree(&self) -> DyadicTree {
        self.u.tree()
    }
}
