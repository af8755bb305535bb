//! Operator norms `L²(u) → L²(v)`.
//!
//! All estimators work in the coordinates `x = u^{1/2} f`, where the squared
//! norm is the top eigenvalue of `B x = u^{-1/2} G(u^{-1/2} x)` for the form
//! `G = T^*(v T ·)` (or a Haar multiplier for the square function). The leaf
//! width cancels from every ratio.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{average_up, DyadicTree};
use crate::error::{Error, Result};
use crate::operators::{
    maximal_select, HaarMultiplier, LinearOperator, Martingale, OperatorKind, SignAssignment,
};
use crate::weights::Weight;

pub const DENSE_MAX_DEPTH: u32 = 12;
pub const DENSE_TOL: f64 = 1e-10;
pub const POWER_TOL: f64 = 1e-8;
pub const MAX_ITERS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    Exact,
    ConvergedIterative,
    LowerBound,
}

impl EstimateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateKind::Exact => "exact",
            EstimateKind::ConvergedIterative => "converged-iterative",
            EstimateKind::LowerBound => "lower-bound",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    pub iterations: usize,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            tol: POWER_TOL,
            max_iters: MAX_ITERS,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dense,
    Power,
    Form,
}

/// A symmetric positive semidefinite form `f ↦ G f` in the flat inner product.
trait Form {
    fn form_into(&self, f: &[f64], out: &mut [f64]);
}

/// `G f = T^*(v ⊙ T f)`.
struct Normal<'a> {
    op: &'a dyn LinearOperator,
    v: &'a [f64],
}

impl Form for Normal<'_> {
    fn form_into(&self, f: &[f64], out: &mut [f64]) {
        let mut tf = vec![0.0; f.len()];
        self.op.apply_into(f, &mut tf);
        for (x, w) in tf.iter_mut().zip(self.v) {
            *x *= w;
        }
        self.op.apply_adjoint_into(&tf, out);
    }
}

impl Form for HaarMultiplier {
    fn form_into(&self, f: &[f64], out: &mut [f64]) {
        self.apply_into(f, out)
    }
}

struct PowerRun {
    rho: f64,
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
    residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        for a in x.iter_mut() {
            *a /= n;
        }
    }
    n
}

fn apply_b(form: &dyn Form, us: &[f64], x: &[f64], out: &mut [f64]) {
    let f: Vec<f64> = x.iter().zip(us).map(|(a, s)| a * s).collect();
    form.form_into(&f, out);
    for (o, s) in out.iter_mut().zip(us) {
        *o *= s;
    }
}

/// Power iteration for the top eigenvalue of `B`; `us = u^{-1/2}` leafwise.
///
/// Stops once the relative Rayleigh-quotient increment and its geometric
/// extrapolation are both below `tol`.
fn power_iterate(
    form: &dyn Form,
    us: &[f64],
    start: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> PowerRun {
    let n = us.len();
    let mut x = start;
    if normalize(&mut x) == 0.0 {
        x = vec![1.0 / (n as f64).sqrt(); n];
    }
    let mut bx = vec![0.0; n];
    apply_b(form, us, &x, &mut bx);
    let mut rho = dot(&x, &bx);
    let mut prev_change = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let nb = normalize(&mut bx);
        if nb == 0.0 || !rho.is_finite() {
            converged = true;
            rho = 0.0;
            break;
        }
        std::mem::swap(&mut x, &mut bx);
        apply_b(form, us, &x, &mut bx);
        let next = dot(&x, &bx);
        let change = (next - rho).abs() / next.abs().max(f64::MIN_POSITIVE);
        rho = next;
        if change == 0.0 {
            converged = true;
            break;
        }
        let q = change / prev_change;
        prev_change = change;
        if change < tol && q < 1.0 && change * q / (1.0 - q) < tol {
            converged = true;
            break;
        }
    }
    let residual = if rho > 0.0 {
        let r: f64 = bx.iter().zip(&x).map(|(b, a)| (b - rho * a).powi(2)).sum();
        r.sqrt() / rho
    } else {
        0.0
    };
    PowerRun {
        rho: rho.max(0.0),
        x,
        iterations,
        converged,
        residual,
    }
}

fn alternating(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 })
        .collect()
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn inv_sqrt(u: &Weight) -> Vec<f64> {
    u.values().iter().map(|x| 1.0 / x.sqrt()).collect()
}

/// Alternating start plus one seeded random restart; the larger quotient wins.
fn power_estimate(form: &dyn Form, u: &Weight, cfg: &PowerConfig) -> NormEstimate {
    two_start_estimate(form, &inv_sqrt(u), cfg)
}

fn two_start_estimate(form: &dyn Form, scale: &[f64], cfg: &PowerConfig) -> NormEstimate {
    let n = scale.len();
    let a = power_iterate(form, scale, alternating(n), cfg.tol, cfg.max_iters);
    let b = power_iterate(
        form,
        scale,
        random_vector(n, cfg.seed),
        cfg.tol,
        cfg.max_iters,
    );
    let iterations = a.iterations + b.iterations;
    let best = if b.rho > a.rho { b } else { a };
    NormEstimate {
        value: best.rho.sqrt(),
        kind: if best.converged {
            EstimateKind::ConvergedIterative
        } else {
            EstimateKind::LowerBound
        },
        iterations,
        residual: best.residual,
        seed: Some(cfg.seed),
    }
}

fn check_weights(tree: Option<DyadicTree>, u: &Weight, v: &Weight) -> Result<()> {
    u.tree().check_same(&v.tree())?;
    if let Some(t) = tree {
        t.check_same(&u.tree())?;
    }
    Ok(())
}

/// Matrix-free norm of a linear operator.
pub fn op_norm_power(
    kind: &OperatorKind,
    u: &Weight,
    v: &Weight,
    cfg: &PowerConfig,
) -> Result<NormEstimate> {
    check_weights(kind.tree(), u, v)?;
    if let OperatorKind::SquareFn = kind {
        return sq_norm(u, v, cfg);
    }
    let op = kind.linear()?;
    let form = Normal {
        op: op.as_ref(),
        v: v.values(),
    };
    Ok(power_estimate(&form, u, cfg))
}

/// `‖S^d‖_{L²(u) → L²(v)}` from the Haar form with coefficients `m_I v`.
pub fn sq_norm(u: &Weight, v: &Weight, cfg: &PowerConfig) -> Result<NormEstimate> {
    u.tree().check_same(&v.tree())?;
    Ok(power_estimate(&HaarMultiplier::square_form(v), u, cfg))
}

fn top_eigenvalue(m: DMatrix<f64>) -> f64 {
    m.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Dense evaluation: the matrix of the operator is assembled column by column
/// from applies and the top eigenvalue of the normal matrix is computed by a
/// symmetric eigensolver.
pub fn op_norm_exact(kind: &OperatorKind, u: &Weight, v: &Weight) -> Result<NormEstimate> {
    check_weights(kind.tree(), u, v)?;
    let tree = u.tree();
    if tree.depth() > DENSE_MAX_DEPTH {
        return Err(Error::DenseTooLarge {
            depth: tree.depth(),
            max: DENSE_MAX_DEPTH,
        });
    }
    let n = tree.num_leaves();
    let us = inv_sqrt(u);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    let lam = match kind {
        OperatorKind::SquareFn => {
            let form = HaarMultiplier::square_form(v);
            let mut k = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                e[j] = us[j];
                form.apply_into(&e, &mut col);
                e[j] = 0.0;
                for i in 0..n {
                    k[(i, j)] = us[i] * col[i];
                }
            }
            let sym = (&k + k.transpose()) * 0.5;
            top_eigenvalue(sym)
        }
        _ => {
            let op = kind.linear()?;
            let vs: Vec<f64> = v.values().iter().map(|x| x.sqrt()).collect();
            let mut a = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                e[j] = us[j];
                op.apply_into(&e, &mut col);
                e[j] = 0.0;
                for i in 0..n {
                    a[(i, j)] = vs[i] * col[i];
                }
            }
            top_eigenvalue(a.tr_mul(&a))
        }
    };
    Ok(NormEstimate {
        value: lam.max(0.0).sqrt(),
        kind: EstimateKind::Exact,
        iterations: 0,
        residual: 0.0,
        seed: None,
    })
}

/// Dispatch by method; sublinear maximal operators always give lower bounds.
pub fn op_norm(
    kind: &OperatorKind,
    u: &Weight,
    v: &Weight,
    method: Method,
    cfg: &PowerConfig,
) -> Result<NormEstimate> {
    match kind {
        OperatorKind::MaximalFlat => maximal_norm_lower(u, v, cfg.max_iters.min(64), cfg.seed),
        OperatorKind::MaximalWeighted(w) => {
            maximal_weighted_norm_lower(w, u, v, cfg.max_iters.min(64), cfg.seed)
        }
        _ => match method {
            Method::Dense => op_norm_exact(kind, u, v),
            Method::Power => op_norm_power(kind, u, v, cfg),
            Method::Form => match kind {
                OperatorKind::SquareFn => sq_norm(u, v, cfg),
                _ => Err(Error::InvalidParameter(
                    "method `form` applies to the square function only".into(),
                )),
            },
        },
    }
}

/// `G a = analysis(w ⊙ synthesis(a))`, the Gram matrix of `L²(w)` in the
/// Haar coefficients of mean-zero functions.
struct CoeffGram<'a> {
    w: &'a Weight,
}

impl Form for CoeffGram<'_> {
    fn form_into(&self, a: &[f64], out: &mut [f64]) {
        let tree = self.w.tree();
        let mut f = vec![0.0; tree.num_leaves()];
        crate::dyadic::synthesize_into(tree, 0.0, a, &mut f);
        for (x, w) in f.iter_mut().zip(self.w.values()) {
            *x *= w;
        }
        out.copy_from_slice(&coeffs(tree, &f));
    }
}

/// Best constant `K` in `‖f‖_{L²(w)} ≤ K ‖S^d f‖_{L²(w)}` over mean-zero `f`:
/// the top eigenvalue of the `L²(w)` Gram matrix against `diag(m_I w)`.
pub fn inverse_sq_constant(w: &Weight, cfg: &PowerConfig) -> NormEstimate {
    let tree = w.tree();
    let ds: Vec<f64> = w.averages()[..tree.num_internal()]
        .iter()
        .map(|m| 1.0 / m.sqrt())
        .collect();
    two_start_estimate(&CoeffGram { w }, &ds, cfg)
}

/// The linear map obtained from a maximal operator by freezing the selected
/// ancestor of each leaf: `(K f)(x) = w(s(x))^{-1} ∫_{s(x)} f w`.
struct Frozen<'a> {
    tree: DyadicTree,
    w: Option<&'a Weight>,
    selection: Vec<usize>,
}

impl Frozen<'_> {
    fn weight_at(&self, j: usize) -> f64 {
        self.w.map_or(1.0, |w| w.values()[j])
    }

    fn avg_w(&self, node: usize) -> f64 {
        self.w.map_or(1.0, |w| w.averages()[node])
    }
}

impl LinearOperator for Frozen<'_> {
    fn tree(&self) -> DyadicTree {
        self.tree
    }

    fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let ni = self.tree.num_internal();
        let mut num = vec![0.0; self.tree.num_nodes()];
        for (j, x) in f.iter().enumerate() {
            num[ni + j] = x * self.weight_at(j);
        }
        average_up(&mut num, ni);
        for (o, &s) in out.iter_mut().zip(&self.selection) {
            *o = num[s] / self.avg_w(s);
        }
    }

    fn apply_adjoint_into(&self, g: &[f64], out: &mut [f64]) {
        let tree = self.tree;
        let ni = tree.num_internal();
        let nl = tree.num_leaves() as f64;
        let mut z = vec![0.0; tree.num_nodes()];
        for (x, &s) in g.iter().zip(&self.selection) {
            z[s] += x;
        }
        // coefficient of 1_I: Z_I / (#leaves in I · m_I w)
        for (i, zi) in z.iter_mut().enumerate() {
            if *zi != 0.0 {
                let leaves = nl * crate::dyadic::Node(i).length();
                *zi /= leaves * self.avg_w(i);
            }
        }
        for i in 0..ni {
            let a = z[i];
            z[2 * i + 1] += a;
            z[2 * i + 2] += a;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o = z[ni + j] * self.weight_at(j);
        }
    }
}

/// `‖M f‖²_{L²(v)} / ‖f‖²_{L²(u)}`.
fn maximal_ratio_sq(w: Option<&Weight>, u: &Weight, v: &Weight, f: &[f64]) -> f64 {
    let sel = maximal_select(u.tree(), f, w);
    let num: f64 = sel
        .values
        .iter()
        .zip(v.values())
        .map(|(m, v)| m * m * v)
        .sum();
    let den: f64 = f.iter().zip(u.values()).map(|(x, u)| x * x * u).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Squared ratios `‖M(u^{-1} 1_J)‖²_{L²(v)} / u^{-1}(J)` for every node `J`,
/// in `O(N 2^N)`: inside `J` the maximal function is localized, and on the
/// ring between consecutive ancestors it is the average over the smaller one.
fn indicator_test_ratios(w: Option<&Weight>, u: &Weight, v: &Weight) -> Vec<f64> {
    let tree = u.tree();
    let n = tree.depth();
    let ni = tree.num_internal();
    let nn = tree.num_nodes();
    let mut num = vec![0.0; nn];
    for j in 0..tree.num_leaves() {
        num[ni + j] = w.map_or(1.0, |w| w.values()[j]) / u.values()[j];
    }
    average_up(&mut num, ni);
    let wavg = |i: usize| w.map_or(1.0, |w| w.averages()[i]);
    let ratio: Vec<f64> = (0..nn).map(|i| num[i] / wavg(i)).collect();
    let uinv = u.inv_averages();
    let vavg = v.averages();
    let mut run = vec![0.0; nn];
    let mut out = Vec::with_capacity(nn);
    for j in 0..nn {
        let node = crate::dyadic::Node(j);
        let lj = node.level();
        run[j] = ratio[j];
        for d in 1..=(n - lj) {
            let first = ((j + 1) << d) - 1;
            for c in first..first + (1 << d) {
                run[c] = run[(c - 1) / 2].max(ratio[c]);
            }
        }
        let first = ((j + 1) << (n - lj)) - 1;
        let inside: f64 = (first..first + (1 << (n - lj)))
            .map(|c| run[c] * run[c] * v.values()[c - ni])
            .sum::<f64>()
            * tree.leaf_width();
        // ∫_J f w as a multiple of |J|, then divided by w(K) on each ring
        let mass = num[j] * node.length();
        let mut outside = 0.0;
        let mut child = node;
        while let Some(k) = child.parent() {
            let sib = if child.0 % 2 == 1 {
                child.0 + 1
            } else {
                child.0 - 1
            };
            let avg = mass / (k.length() * wavg(k.0));
            outside += avg * avg * vavg[sib] * crate::dyadic::Node(sib).length();
            child = k;
        }
        out.push((inside + outside) / (uinv[j] * node.length()));
    }
    out
}

/// Alternating ascent from a nonnegative start: freeze the selection, take the
/// top singular vector of the frozen map, re-select. Returns the best squared
/// ratio met and the number of ascent steps.
fn maximal_ascent(
    w: Option<&Weight>,
    u: &Weight,
    v: &Weight,
    start: Vec<f64>,
    budget: usize,
) -> (f64, usize) {
    let tree = u.tree();
    let us = inv_sqrt(u);
    let mut f = start;
    let mut best = maximal_ratio_sq(w, u, v, &f);
    let mut steps = 0;
    while steps < budget {
        steps += 1;
        let selection = maximal_select(tree, &f, w).selection;
        let frozen = Frozen { tree, w, selection };
        let form = Normal {
            op: &frozen,
            v: v.values(),
        };
        let x0: Vec<f64> = f.iter().zip(&us).map(|(a, s)| a.abs() / s).collect();
        let run = power_iterate(&form, &us, x0, 1e-10, 200);
        let g: Vec<f64> = run.x.iter().zip(&us).map(|(a, s)| a.abs() * s).collect();
        let r = maximal_ratio_sq(w, u, v, &g);
        if r <= best * (1.0 + 1e-12) {
            break;
        }
        best = r;
        f = g;
    }
    (best, steps)
}

fn maximal_lower_impl(
    w: Option<&Weight>,
    u: &Weight,
    v: &Weight,
    budget: usize,
    seed: u64,
) -> Result<NormEstimate> {
    u.tree().check_same(&v.tree())?;
    if let Some(w) = w {
        w.tree().check_same(&u.tree())?;
    }
    let tree = u.tree();
    let ratios = indicator_test_ratios(w, u, v);
    let (jbest, rbest) =
        ratios.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc },
        );
    let mut best = rbest;
    let mut steps = 0;
    let indicator: Vec<f64> = {
        let r = tree.leaf_range(crate::dyadic::Node(jbest));
        (0..tree.num_leaves())
            .map(|j| {
                if r.contains(&j) {
                    1.0 / u.values()[j]
                } else {
                    0.0
                }
            })
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random: Vec<f64> = (0..tree.num_leaves())
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    for start in [indicator, vec![1.0; tree.num_leaves()], random] {
        let (r, s) = maximal_ascent(w, u, v, start, budget);
        best = best.max(r);
        steps += s;
    }
    Ok(NormEstimate {
        value: best.sqrt(),
        kind: EstimateKind::LowerBound,
        iterations: steps,
        residual: 0.0,
        seed: Some(seed),
    })
}

/// Lower bound for `‖M‖_{L²(u) → L²(v)}` with the flat dyadic maximal function.
pub fn maximal_norm_lower(
    u: &Weight,
    v: &Weight,
    budget: usize,
    seed: u64,
) -> Result<NormEstimate> {
    maximal_lower_impl(None, u, v, budget, seed)
}

/// Lower bound for `‖M_w‖_{L²(u) → L²(v)}`.
pub fn maximal_weighted_norm_lower(
    w: &Weight,
    u: &Weight,
    v: &Weight,
    budget: usize,
    seed: u64,
) -> Result<NormEstimate> {
    maximal_lower_impl(Some(w), u, v, budget, seed)
}

/// Haar coefficients of a leaf slice.
fn coeffs(tree: DyadicTree, f: &[f64]) -> Vec<f64> {
    crate::dyadic::coeffs_from_averages(tree, &crate::dyadic::averages_of(tree, f))
}

/// Greedy sign flips increasing `‖T_r f‖²_{L²(v)}` for fixed `f`, one level at
/// a time (flips within a level do not interact). Returns the number of flips.
fn improve_signs(r: &mut SignAssignment, f: &[f64], v: &Weight) -> usize {
    let tree = r.tree();
    let a = coeffs(tree, f);
    let mv = v.averages();
    let mut flips = 0;
    let mut tf = vec![0.0; f.len()];
    for level in 0..tree.depth() {
        let op = Martingale::new(r.clone());
        op.apply_into(f, &mut tf);
        for (x, w) in tf.iter_mut().zip(v.values()) {
            *x *= w;
        }
        let e = coeffs(tree, &tf);
        let first = (1usize << level) - 1;
        for i in first..2 * first + 1 {
            let node = crate::dyadic::Node(i);
            let gain = 4.0 * a[i] * (a[i] * mv[i] - r.get(node) * e[i]);
            if gain > 1e-15 * (a[i] * a[i] * mv[i]) && gain > 0.0 {
                r.flip(node);
                flips += 1;
            }
        }
    }
    flips
}

/// Lower bound for `sup_r ‖T_r‖_{L²(u) → L²(v)}` by alternating power
/// iteration and greedy sign flips, over seeded random restarts.
pub fn martingale_sup_norm_lower(
    u: &Weight,
    v: &Weight,
    restarts: usize,
    seed: u64,
) -> Result<(SignAssignment, NormEstimate)> {
    u.tree().check_same(&v.tree())?;
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    let tree = u.tree();
    let us = inv_sqrt(u);
    let mut best: Option<(SignAssignment, f64)> = None;
    let mut iterations = 0;
    for k in 0..restarts {
        let mut r = SignAssignment::random(tree, seed.wrapping_add(k as u64));
        let mut x = random_vector(tree.num_leaves(), seed.wrapping_add(k as u64) ^ 0x9e37_79b9);
        let mut rho;
        let mut rounds = 0;
        loop {
            let op = Martingale::new(r.clone());
            let form = Normal {
                op: &op,
                v: v.values(),
            };
            let run = power_iterate(&form, &us, x, 1e-10, 2000);
            iterations += run.iterations;
            rho = run.rho;
            x = run.x;
            rounds += 1;
            if rounds > 100 {
                break;
            }
            let f: Vec<f64> = x.iter().zip(&us).map(|(a, s)| a * s).collect();
            if improve_signs(&mut r, &f, v) == 0 {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, b)| rho > *b) {
            best = Some((r, rho));
        }
    }
    let (r, rho) = best.expect("restarts >= 1");
    Ok((
        r,
        NormEstimate {
            value: rho.sqrt(),
            kind: EstimateKind::LowerBound,
            iterations,
            residual: 0.0,
            seed: Some(seed),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{haar_function, LeafFn, Node};
    use crate::weights::gen_random_a2_weight;

    fn t(n: u32) -> DyadicTree {
        DyadicTree::new(n).unwrap()
    }

    #[test]
    fn dense_examples() {
        let tree = t(1);
        let one = Weight::constant(tree, 1.0);
        let h = haar_function(tree, Node::ROOT).unwrap();
        let e = op_norm_exact(&OperatorKind::Paraproduct(h), &one, &one).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert_eq!(e.kind, EstimateKind::Exact);

        let one = Weight::constant(t(5), 1.0);
        let r = SignAssignment::all_plus(t(5));
        let e = op_norm_exact(&OperatorKind::Martingale(r), &one, &one).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);

        let w13 = Weight::constant(t(13), 1.0);
        assert!(matches!(
            op_norm_exact(&OperatorKind::SquareFn, &w13, &w13),
            Err(Error::DenseTooLarge { .. })
        ));
    }

    #[test]
    fn scaling_v() {
        let u = gen_random_a2_weight(5, 0.5, 1).unwrap();
        let v = gen_random_a2_weight(5, 0.5, 2).unwrap();
        let b = gen_random_a2_weight(5, 0.5, 3).unwrap().leaf_fn().clone();
        let k = OperatorKind::Paraproduct(b);
        let a = op_norm_exact(&k, &u, &v).unwrap().value;
        let c = op_norm_exact(&k, &u, &v.scaled(4.0).unwrap())
            .unwrap()
            .value;
        assert!((c - 2.0 * a).abs() < 1e-10 * a);
        let d = op_norm_exact(&k, &u.scaled(4.0).unwrap(), &v)
            .unwrap()
            .value;
        assert!((d - 0.5 * a).abs() < 1e-10 * a);
    }

    #[test]
    fn power_matches_dense() {
        let u = gen_random_a2_weight(6, 0.6, 4).unwrap();
        let v = gen_random_a2_weight(6, 0.6, 5).unwrap();
        let b = gen_random_a2_weight(6, 0.9, 6)
            .unwrap()
            .leaf_fn()
            .map(|x| x.ln());
        for kind in [
            OperatorKind::Paraproduct(b.clone()),
            OperatorKind::ParaproductAdjoint(b),
            OperatorKind::Martingale(SignAssignment::random(t(6), 3)),
            OperatorKind::T0(u.clone(), v.clone()),
            OperatorKind::SquareFn,
        ] {
            let d = op_norm_exact(&kind, &u, &v).unwrap();
            let p = op_norm_power(&kind, &u, &v, &PowerConfig::default()).unwrap();
            assert_eq!(p.kind, EstimateKind::ConvergedIterative, "{}", kind.name());
            assert!(
                (d.value - p.value).abs() < 1e-8 * d.value,
                "{}: {} vs {}",
                kind.name(),
                d.value,
                p.value
            );
        }
    }

    #[test]
    fn power_zero_and_determinism() {
        let one = Weight::constant(t(6), 1.0);
        let c = LeafFn::constant(t(6), 3.0);
        let e = op_norm_power(
            &OperatorKind::Paraproduct(c),
            &one,
            &one,
            &PowerConfig::default(),
        )
        .unwrap();
        assert_eq!(e.value, 0.0);
        let u = gen_random_a2_weight(6, 0.6, 4).unwrap();
        let a = sq_norm(&u, &one, &PowerConfig::default()).unwrap();
        let b = sq_norm(&u, &one, &PowerConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inverse_sq_unit_and_dense() {
        let one = Weight::constant(t(6), 1.0);
        let e = inverse_sq_constant(&one, &PowerConfig::default());
        assert!((e.value - 1.0).abs() < 1e-12);
        // dense oracle: sup over mean-zero f of ‖f‖²_w / Σ m_I w ⟨f,h_I⟩²
        let w = gen_random_a2_weight(4, 0.7, 9).unwrap();
        let tree = w.tree();
        let n = tree.num_internal();
        let mut g = DMatrix::<f64>::zeros(n, n);
        let hs: Vec<LeafFn> = tree
            .internal_nodes()
            .map(|i| haar_function(tree, i).unwrap())
            .collect();
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] =
                    hs[i].inner_weighted(&hs[j], &w) / (w.averages()[i] * w.averages()[j]).sqrt();
            }
        }
        let lam = top_eigenvalue(g);
        let e = inverse_sq_constant(&w, &PowerConfig::default());
        assert!((e.value - lam.sqrt()).abs() < 1e-8 * lam.sqrt());
    }

    #[test]
    fn sq_norm_unit() {
        let one = Weight::constant(t(8), 1.0);
        let e = sq_norm(&one, &one, &PowerConfig::default()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    fn brute_indicator_ratio(w: Option<&Weight>, u: &Weight, v: &Weight, j: Node) -> f64 {
        let tree = u.tree();
        let r = tree.leaf_range(j);
        let f: Vec<f64> = (0..tree.num_leaves())
            .map(|k| {
                if r.contains(&k) {
                    1.0 / u.values()[k]
                } else {
                    0.0
                }
            })
            .collect();
        maximal_ratio_sq(w, u, v, &f)
    }

    #[test]
    fn indicator_ratios_match_direct() {
        let u = gen_random_a2_weight(5, 0.7, 1).unwrap();
        let v = gen_random_a2_weight(5, 0.7, 2).unwrap();
        for w in [None, Some(&v)] {
            let r = indicator_test_ratios(w, &u, &v);
            for j in u.tree().nodes() {
                let b = brute_indicator_ratio(w, &u, &v, j);
                assert!((r[j.0] - b).abs() < 1e-12 * b, "{j:?}: {} vs {b}", r[j.0]);
            }
        }
    }

    #[test]
    fn frozen_adjoint() {
        let u = gen_random_a2_weight(5, 0.7, 1).unwrap();
        let tree = u.tree();
        let f: Vec<f64> = random_vector(32, 1);
        let g: Vec<f64> = random_vector(32, 2);
        for w in [None, Some(&u)] {
            let selection = maximal_select(tree, &random_vector(32, 3), w).selection;
            let k = Frozen { tree, w, selection };
            let mut kf = vec![0.0; 32];
            let mut ktg = vec![0.0; 32];
            k.apply_into(&f, &mut kf);
            k.apply_adjoint_into(&g, &mut ktg);
            let (a, b) = (dot(&kf, &g), dot(&f, &ktg));
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn maximal_lower_examples() {
        let one = Weight::constant(t(6), 1.0);
        let e = maximal_norm_lower(&one, &one, 20, 1).unwrap();
        assert!(e.value >= 1.0 - 1e-12);
        assert_eq!(e.kind, EstimateKind::LowerBound);
        let u = gen_random_a2_weight(6, 0.7, 3).unwrap();
        let v = gen_random_a2_weight(6, 0.7, 4).unwrap();
        let e = maximal_norm_lower(&u, &v, 20, 1).unwrap();
        let s = crate::operators::sawyer_constant(&u, &v).unwrap();
        assert!(e.value * e.value >= s * (1.0 - 1e-12));
        let e2 = maximal_norm_lower(&u, &v, 40, 1).unwrap();
        assert!(e2.value >= e.value);
    }

    #[test]
    fn martingale_sup_examples() {
        let one = Weight::constant(t(5), 1.0);
        let (_, e) = martingale_sup_norm_lower(&one, &one, 2, 1).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9);
        let u = gen_random_a2_weight(6, 0.7, 3).unwrap();
        let (r, e) = martingale_sup_norm_lower(&u, &u, 2, 1).unwrap();
        let exact = op_norm_exact(&OperatorKind::Martingale(r), &u, &u)
            .unwrap()
            .value;
        assert!(e.value <= exact * (1.0 + 1e-9));
        assert!(e.value >= exact * (1.0 - 1e-6), "{} vs {exact}", e.value);
    }
}
