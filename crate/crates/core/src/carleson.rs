//! Carleson sequences on internal nodes and their intensities against weight
//! measures, together with the sequences and oscillation norms that appear as
//! hypotheses of the two-weight estimates.

use crate::dyadic::{averages_of, haar_analysis, DyadicTree, LeafFn, Node};
use crate::error::{Error, Result};
use crate::weights::{sup_over, NodeSup, Weight};

/// Nonnegative entries `λ_I` on the internal nodes of a tree.
#[derive(Clone, Debug, PartialEq)]
pub struct CarlesonSequence {
    tree: DyadicTree,
    entries: Vec<f64>,
}

impl CarlesonSequence {
    pub fn new(tree: DyadicTree, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != tree.num_internal() {
            return Err(Error::LengthMismatch {
                expected: tree.num_internal(),
                got: entries.len(),
            });
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = entries.iter().position(|&x| x < 0.0) {
            return Err(Error::Negative(i));
        }
        Ok(CarlesonSequence { tree, entries })
    }

    fn from_fn(tree: DyadicTree, f: impl Fn(Node) -> f64) -> Self {
        CarlesonSequence {
            tree,
            entries: tree.internal_nodes().map(f).collect(),
        }
    }

    pub fn tree(&self) -> DyadicTree {
        self.tree
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, node: Node) -> f64 {
        self.entries[node.0]
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        CarlesonSequence::new(self.tree, self.entries.iter().map(|x| c * x).collect())
    }

    /// `S(J) = Σ_{I ⊆ J} λ_I` for every node, leaves being zero.
    pub fn subtree_sums(&self) -> Vec<f64> {
        let t = self.tree;
        let mut s = vec![0.0; t.num_nodes()];
        for i in (0..t.num_internal()).rev() {
            s[i] = self.entries[i] + s[2 * i + 1] + s[2 * i + 2];
        }
        s
    }
}

/// Best constant `C` with `Σ_{I ⊆ J} λ_I ≤ C μ(J)`, and the node attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntensityResult {
    pub intensity: f64,
    pub node: Node,
}

pub fn intensity(seq: &CarlesonSequence, mu: &Weight) -> Result<IntensityResult> {
    seq.tree.check_same(&mu.tree())?;
    let s = seq.subtree_sums();
    let best = sup_over(seq.tree.nodes().map(|n| (n, s[n.0] / mu.mass(n))));
    Ok(IntensityResult {
        intensity: best.value,
        node: best.node,
    })
}

/// Intensity against Lebesgue measure.
pub fn intensity_flat(seq: &CarlesonSequence) -> IntensityResult {
    let s = seq.subtree_sums();
    let best = sup_over(seq.tree.nodes().map(|n| (n, s[n.0] / n.length())));
    IntensityResult {
        intensity: best.value,
        node: best.node,
    }
}

/// `|b_I|² / m_I v`; its intensity against `u^{-1}` is the `Carl_{u,v}`
/// constant `𝓑_{u,v}`.
pub fn seq_carl(b: &LeafFn, v: &Weight) -> Result<CarlesonSequence> {
    b.tree().check_same(&v.tree())?;
    let d = haar_analysis(b);
    Ok(CarlesonSequence::from_fn(b.tree(), |n| {
        let c = d.coeff(n);
        c * c / v.avg(n)
    }))
}

/// `|Δ_I x|² |I| m_I y`.
pub fn seq_delta(x: &Weight, y: &Weight) -> Result<CarlesonSequence> {
    x.tree().check_same(&y.tree())?;
    Ok(CarlesonSequence::from_fn(x.tree(), |n| {
        let d = x.delta(n);
        d * d * n.length() * y.avg(n)
    }))
}

/// `|Δ_I v|² |I| / m_I v`.
pub fn seq_buckley(v: &Weight) -> CarlesonSequence {
    CarlesonSequence::from_fn(v.tree(), |n| {
        let d = v.delta(n);
        d * d * n.length() / v.avg(n)
    })
}

/// `α_I / m_I(v^{-1})`.
pub fn little_lemma_map(seq: &CarlesonSequence, v: &Weight) -> Result<CarlesonSequence> {
    seq.tree.check_same(&v.tree())?;
    Ok(CarlesonSequence::from_fn(seq.tree, |n| {
        seq.get(n) / v.inv_avg(n)
    }))
}

/// `𝓑_{u,v}`: intensity of `|b_I|²/m_I v` against `u^{-1}`.
pub fn carl_intensity(b: &LeafFn, u: &Weight, v: &Weight) -> Result<IntensityResult> {
    intensity(&seq_carl(b, v)?, &u.reciprocal())
}

/// `𝓓_{u,v}`: intensity of `|Δ_I v|² |I| m_I(u^{-1})` against `v`.
pub fn d_intensity(u: &Weight, v: &Weight) -> Result<IntensityResult> {
    intensity(&seq_delta(v, &u.reciprocal())?, v)
}

/// `𝓒_{u,v}`: intensity of `|Δ_I u^{-1}|² |I| m_I v` against `u^{-1}`.
pub fn c_intensity(u: &Weight, v: &Weight) -> Result<IntensityResult> {
    let ui = u.reciprocal();
    intensity(&seq_delta(&ui, v)?, &ui)
}

/// Both sides of the weighted Carleson pairing
/// `Σ_I (inf_I F) λ_I ≤ intensity · ∫ F v`.
pub fn wcl_pairing(seq: &CarlesonSequence, f: &LeafFn, v: &Weight) -> Result<(f64, f64)> {
    seq.tree.check_same(&f.tree())?;
    seq.tree.check_same(&v.tree())?;
    if let Some(j) = f.values().iter().position(|&x| x < 0.0) {
        return Err(Error::Negative(j));
    }
    let t = seq.tree;
    let mut mins = vec![0.0; t.num_nodes()];
    mins[t.num_internal()..].copy_from_slice(f.values());
    for i in (0..t.num_internal()).rev() {
        mins[i] = mins[2 * i + 1].min(mins[2 * i + 2]);
    }
    let lhs: f64 = seq.entries.iter().zip(&mins).map(|(l, m)| l * m).sum();
    let b = intensity(seq, v)?.intensity;
    let integral: f64 = f
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, w)| a * w)
        .sum::<f64>()
        * t.leaf_width();
    Ok((lhs, b * integral))
}

/// `‖b‖²_{BMO}` from Haar coefficients: `sup_I |I|^{-1} Σ_{J ⊆ I} |b_J|²`.
pub fn bmo_norm_sq(b: &LeafFn) -> NodeSup {
    let d = haar_analysis(b);
    let seq = CarlesonSequence::from_fn(b.tree(), |n| d.coeff(n).powi(2));
    let r = intensity_flat(&seq);
    NodeSup {
        value: r.intensity,
        node: r.node,
    }
}

/// `‖b‖_{BMO}`.
pub fn bmo_norm(b: &LeafFn) -> f64 {
    bmo_norm_sq(b).value.sqrt()
}

/// `sup_I |I|^{-1} ∫_I |b - m_I b|²`, evaluated on the leaves of each node.
pub fn bmo_norm_sq_direct(b: &LeafFn) -> NodeSup {
    let t = b.tree();
    let m = averages_of(t, b.values());
    sup_over(t.nodes().map(|n| {
        let r = t.leaf_range(n);
        let k = r.len() as f64;
        let s: f64 = b.values()[r].iter().map(|x| (x - m[n.0]).powi(2)).sum();
        (n, s / k)
    }))
}

/// Bloom oscillation `sup_I μ(I)^{-1} ∫_I |b - m_I b| dx`.
pub fn bloom_bmo_norm(b: &LeafFn, mu: &Weight) -> Result<NodeSup> {
    let t = b.tree();
    t.check_same(&mu.tree())?;
    let m = averages_of(t, b.values());
    let h = t.leaf_width();
    Ok(sup_over(t.nodes().map(|n| {
        let r = t.leaf_range(n);
        let s: f64 = b.values()[r].iter().map(|x| (x - m[n.0]).abs()).sum();
        (n, s * h / mu.mass(n))
    })))
}

/// `𝓑₂(u, v) = sup_J u^{-1}(J)^{-1} Σ_{I ⊆ J} b_I² (m_I u^{-1})² m_I v`.
pub fn b2_constant(b: &LeafFn, u: &Weight, v: &Weight) -> Result<IntensityResult> {
    let t = b.tree();
    t.check_same(&u.tree())?;
    t.check_same(&v.tree())?;
    let d = haar_analysis(b);
    let seq =
        CarlesonSequence::from_fn(t, |n| d.coeff(n).powi(2) * u.inv_avg(n).powi(2) * v.avg(n));
    intensity(&seq, &u.reciprocal())
}

/// Sup over `I` with a parent of `u(Î)^{-1} ∫_I |b - m_I b|² v`, the
/// paraproduct testing quantity.
pub fn paraproduct_testing(b: &LeafFn, u: &Weight, v: &Weight) -> Result<NodeSup> {
    let t = b.tree();
    t.check_same(&u.tree())?;
    t.check_same(&v.tree())?;
    let m = averages_of(t, b.values());
    let h = t.leaf_width();
    Ok(sup_over(t.nodes().skip(1).map(|n| {
        let r = t.leaf_range(n);
        let s: f64 = r
            .map(|j| (b.values()[j] - m[n.0]).powi(2) * v.values()[j])
            .sum();
        (n, s * h / u.mass(n.parent().unwrap()))
    })))
}
