//! The registry of checks. Each entry computes an `(lhs, rhs)` pair from a
//! shared per-item context; pass/fail is decided by the entry's kind.

use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use super::bspec::BSpec;
use super::{CheckKind, CheckReport};
use crate::carleson::{
    b2_constant, bloom_bmo_norm, bmo_norm_sq, bmo_norm_sq_direct, c_intensity, carl_intensity,
    d_intensity, intensity, intensity_flat, little_lemma_map, paraproduct_testing, seq_buckley,
    wcl_pairing, CarlesonSequence,
};
use crate::dyadic::{
    haar_analysis, haar_function, haar_synthesis, weighted_haar, whb_decompose, DyadicTree, LeafFn,
};
use crate::error::{Error, Result};
use crate::norms::{
    inverse_sq_constant, martingale_sup_norm_lower, maximal_norm_lower,
    maximal_weighted_norm_lower, op_norm_exact, op_norm_power, sq_norm, NormEstimate, PowerConfig,
};
use crate::operators::{sawyer_constant, square_function, HaarMultiplier, OperatorKind};
use crate::weights::{
    char_a2, char_ainfty, char_joint_a2, char_rh1, entropy_density, Weight, WeightSpec,
};

pub const IDENTITY_TOL: f64 = 1e-10;
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Largest depth for the dense paraproduct necessity check.
pub const PARA_NEC_MAX_DEPTH: u32 = 10;
const MAXIMAL_BUDGET: usize = 16;
const MARTINGALE_RESTARTS: usize = 2;

/// What a check reads from its input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// The weight `v` alone.
    Weight,
    /// The weight `v` and a function given by `b`.
    WeightFn,
    /// The weight `v` and a symbol `b`.
    WeightB,
    /// The pair `(u, v)`.
    Pair,
    /// The pair `(u, v)` and a symbol `b`.
    PairB,
}

/// Inputs to a single check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckInput {
    pub u: WeightSpec,
    pub v: WeightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<BSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl CheckInput {
    pub fn one_weight(w: WeightSpec, b: Option<BSpec>, seed: u64) -> Self {
        CheckInput {
            u: w.clone(),
            v: w,
            b,
            seed,
        }
    }

    fn labels(&self, scope: Scope) -> (String, String) {
        let (family, mut params) = match scope {
            Scope::Weight | Scope::WeightFn | Scope::WeightB => {
                (self.v.family.as_str().to_string(), self.v.params())
            }
            Scope::Pair | Scope::PairB if self.u == self.v => {
                (self.v.family.as_str().to_string(), self.v.params())
            }
            Scope::Pair | Scope::PairB => (
                format!("{}/{}", self.u.family.as_str(), self.v.family.as_str()),
                format!("u:{}|v:{}", self.u.params(), self.v.params()),
            ),
        };
        if let (Some(b), Scope::WeightFn | Scope::WeightB | Scope::PairB) = (&self.b, scope) {
            params.push_str(&format!("|b:{}", b.describe()));
        }
        (family, params)
    }
}

/// Lazily computed quantities shared by the checks of one item.
pub(crate) struct Ctx {
    pub tree: DyadicTree,
    pub u: Weight,
    pub v: Weight,
    pub b: Option<LeafFn>,
    pub seed: u64,
    a2: OnceCell<f64>,
    rh1_uinv: OnceCell<f64>,
    rh1_v: OnceCell<f64>,
    c_int: OnceCell<f64>,
    d_int: OnceCell<f64>,
    carl: OnceCell<f64>,
    sq: OnceCell<NormEstimate>,
    m_lower: OnceCell<NormEstimate>,
    t0: OnceCell<NormEstimate>,
}

impl Ctx {
    pub fn new(input: &CheckInput) -> Result<Self> {
        if input.u.depth != input.v.depth {
            return Err(Error::DepthMismatch(input.u.depth, input.v.depth));
        }
        let u = input.u.build()?;
        let v = input.v.build()?;
        let tree = u.tree();
        let b = match &input.b {
            Some(spec) => Some(spec.build(tree, &u)?),
            None => None,
        };
        Ok(Ctx {
            tree,
            u,
            v,
            b,
            seed: input.seed,
            a2: OnceCell::new(),
            rh1_uinv: OnceCell::new(),
            rh1_v: OnceCell::new(),
            c_int: OnceCell::new(),
            d_int: OnceCell::new(),
            carl: OnceCell::new(),
            sq: OnceCell::new(),
            m_lower: OnceCell::new(),
            t0: OnceCell::new(),
        })
    }

    fn cfg(&self) -> PowerConfig {
        PowerConfig {
            seed: self.seed,
            ..PowerConfig::default()
        }
    }

    fn b(&self) -> Result<&LeafFn> {
        self.b
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("check needs a `b` input".into()))
    }

    fn a2(&self) -> f64 {
        *self
            .a2
            .get_or_init(|| char_joint_a2(&self.u, &self.v).expect("same tree").value)
    }

    fn rh1_uinv(&self) -> f64 {
        *self
            .rh1_uinv
            .get_or_init(|| char_rh1(&self.u.reciprocal()).value)
    }

    fn rh1_v(&self) -> f64 {
        *self.rh1_v.get_or_init(|| char_rh1(&self.v).value)
    }

    fn c_int(&self) -> f64 {
        *self
            .c_int
            .get_or_init(|| c_intensity(&self.u, &self.v).expect("same tree").intensity)
    }

    fn d_int(&self) -> f64 {
        *self
            .d_int
            .get_or_init(|| d_intensity(&self.u, &self.v).expect("same tree").intensity)
    }

    fn carl(&self) -> Result<f64> {
        if let Some(x) = self.carl.get() {
            return Ok(*x);
        }
        let x = carl_intensity(self.b()?, &self.u, &self.v)?.intensity;
        Ok(*self.carl.get_or_init(|| x))
    }

    fn sq(&self) -> &NormEstimate {
        self.sq
            .get_or_init(|| sq_norm(&self.u, &self.v, &self.cfg()).expect("same tree"))
    }

    fn m_lower(&self) -> &NormEstimate {
        self.m_lower.get_or_init(|| {
            maximal_norm_lower(&self.u, &self.v, MAXIMAL_BUDGET, self.seed).expect("same tree")
        })
    }

    fn t0(&self) -> &NormEstimate {
        self.t0.get_or_init(|| {
            op_norm_power(
                &OperatorKind::T0(self.u.clone(), self.v.clone()),
                &self.u,
                &self.v,
                &self.cfg(),
            )
            .expect("same tree")
        })
    }
}

/// Result of evaluating one check on one context.
pub(crate) struct Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub note: String,
}

fn out(lhs: f64, rhs: f64) -> Result<Outcome> {
    Ok(Outcome {
        lhs,
        rhs,
        note: String::new(),
    })
}

fn out_note(lhs: f64, rhs: f64, note: String) -> Result<Outcome> {
    Ok(Outcome { lhs, rhs, note })
}

type CheckFn = fn(&Ctx) -> Result<Outcome>;

/// A registry entry.
#[derive(Clone, Copy)]
pub struct CheckDef {
    pub id: &'static str,
    pub kind: CheckKind,
    pub scope: Scope,
    pub tol: f64,
    pub tol_abs: f64,
    run: CheckFn,
}

const fn def(id: &'static str, kind: CheckKind, scope: Scope, run: CheckFn) -> CheckDef {
    let (tol, tol_abs) = match kind {
        CheckKind::ExactIdentity => (IDENTITY_TOL, 0.0),
        CheckKind::ExactInequality => (INEQUALITY_TOL, 0.0),
        CheckKind::MeasuredConstant => (0.0, 0.0),
    };
    CheckDef {
        id,
        kind,
        scope,
        tol,
        tol_abs,
        run,
    }
}

/// Identities stated as a normalized residual against zero.
const fn residual(id: &'static str, scope: Scope, run: CheckFn) -> CheckDef {
    CheckDef {
        id,
        kind: CheckKind::ExactIdentity,
        scope,
        tol: IDENTITY_TOL,
        tol_abs: IDENTITY_TOL,
        run,
    }
}

use CheckKind::{ExactIdentity as Id, ExactInequality as Ineq, MeasuredConstant as Meas};

pub const REGISTRY: &[CheckDef] = &[
    residual("CHK-HAAR-ROUNDTRIP", Scope::WeightFn, haar_roundtrip),
    def("CHK-PARSEVAL", Id, Scope::WeightFn, parseval),
    def("CHK-BMO-PLANCHEREL", Id, Scope::WeightFn, bmo_plancherel),
    def("CHK-SQ-IDENTITY", Id, Scope::WeightFn, sq_identity),
    residual("CHK-WHAAR-ORTHO", Scope::Weight, whaar_ortho),
    residual("CHK-WHB-RESIDUAL", Scope::Weight, whb_residual),
    def("CHK-WHB", Ineq, Scope::Weight, whb_bounds),
    def("CHK-LITTLE", Ineq, Scope::WeightB, little),
    def("CHK-WCL", Ineq, Scope::WeightB, wcl),
    def("CHK-CARL-BMO", Ineq, Scope::WeightB, carl_bmo),
    def("CHK-BERE", Ineq, Scope::Weight, bere),
    def("CHK-MV-NORM", Ineq, Scope::Weight, mv_norm),
    def("CHK-B2", Ineq, Scope::PairB, b2),
    def("CHK-SQ-NEC", Ineq, Scope::Pair, sq_nec),
    def("CHK-PARA-NEC", Ineq, Scope::PairB, para_nec),
    def("CHK-SHARPB-A", Meas, Scope::Weight, sharpb_a),
    def("CHK-SHARPB-B", Meas, Scope::Weight, sharpb_b),
    def("CHK-INV-SQ", Meas, Scope::Weight, inv_sq),
    def("CHK-SAWYER-NEC", Meas, Scope::Pair, sawyer_nec),
    def("CHK-PZR", Meas, Scope::Pair, pzr),
    def("CHK-SQ-LACEYLI", Meas, Scope::Pair, sq_laceyli),
    def("CHK-SQ-MIXED", Meas, Scope::Pair, sq_mixed),
    def("CHK-MAXSQ", Meas, Scope::Pair, maxsq),
    def("CHK-T0", Meas, Scope::Pair, t0_bundle),
    def("CHK-MART-NTV", Meas, Scope::Pair, mart_ntv),
    def("CHK-PARA-MAIN", Meas, Scope::PairB, para_main),
    def("CHK-PARA-COR", Meas, Scope::PairB, para_cor),
    def("CHK-BLOOM", Meas, Scope::PairB, bloom),
    def("CHK-CARL-SYM", Meas, Scope::PairB, carl_sym),
];

pub fn lookup(id: &str) -> Result<&'static CheckDef> {
    REGISTRY
        .iter()
        .find(|d| d.id == id)
        .ok_or_else(|| Error::UnknownCheck(id.to_string()))
}

pub fn check_ids() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|d| d.id)
}

pub(crate) fn evaluate(def: &CheckDef, ctx: &Ctx, input: &CheckInput) -> Result<CheckReport> {
    let o = (def.run)(ctx)?;
    let (family, params) = input.labels(def.scope);
    Ok(CheckReport::new(
        def.id,
        ctx.tree.depth(),
        family,
        params,
        Some(input.seed),
        o.lhs,
        o.rhs,
        def.kind,
        def.tol,
        def.tol_abs,
        o.note,
    ))
}

/// Runs one registered check.
pub fn run_check(id: &str, input: &CheckInput) -> Result<CheckReport> {
    let def = lookup(id)?;
    if matches!(def.scope, Scope::WeightFn | Scope::WeightB | Scope::PairB) && input.b.is_none() {
        return Err(Error::InvalidParameter(format!("{id} needs a `b` input")));
    }
    let ctx = Ctx::new(input)?;
    evaluate(def, &ctx, input)
}

fn max_abs(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, |m, x| m.max(x.abs()))
}

fn haar_roundtrip(c: &Ctx) -> Result<Outcome> {
    let f = c.b()?;
    let g = haar_synthesis(&haar_analysis(f));
    let scale = f.sup_norm().max(f64::MIN_POSITIVE);
    let r = max_abs(f.values().iter().zip(g.values()).map(|(a, b)| a - b));
    out(r / scale, 0.0)
}

fn parseval(c: &Ctx) -> Result<Outcome> {
    let f = c.b()?;
    let d = haar_analysis(f);
    let rhs = d.mean * d.mean + d.coeffs().iter().map(|a| a * a).sum::<f64>();
    out(f.norm_sq(), rhs)
}

fn bmo_plancherel(c: &Ctx) -> Result<Outcome> {
    let f = c.b()?;
    out(bmo_norm_sq(f).value, bmo_norm_sq_direct(f).value)
}

fn sq_identity(c: &Ctx) -> Result<Outcome> {
    let f = c.b()?;
    let s = square_function(f);
    let lhs = s.inner_weighted(&s, &c.v);
    let rhs = HaarMultiplier::square_form(&c.v).quadratic(f.values());
    out(lhs, rhs)
}

/// `⟨h_I^v, h_J^v⟩_v - δ_{IJ}` for every `I` and each `J ⊇ I`, together with
/// `⟨h_I^v, 1⟩_v`; disjoint pairs vanish by support.
fn whaar_ortho(c: &Ctx) -> Result<Outcome> {
    let tree = c.tree;
    let v = c.v.values();
    let h = tree.leaf_width();
    let ni = tree.num_internal();
    let mut plus = vec![0.0; ni];
    let mut minus = vec![0.0; ni];
    let mut worst: f64 = 0.0;
    for node in tree.internal_nodes() {
        let hv = weighted_haar(&c.v, node)?;
        let r = tree.leaf_range(node);
        plus[node.0] = hv.values()[tree.leaf_range(node.right()).start];
        minus[node.0] = hv.values()[r.start];
        let vals = &hv.values()[r.clone()];
        let ws = &v[r.clone()];
        let norm: f64 = vals.iter().zip(ws).map(|(a, w)| a * a * w).sum::<f64>() * h;
        let mass: f64 = vals.iter().zip(ws).map(|(a, w)| a * w).sum::<f64>() * h;
        let vmass = c.v.mass(node).sqrt();
        worst = worst.max((norm - 1.0).abs()).max(mass.abs() / vmass);
        let mut child = node;
        while let Some(anc) = child.parent() {
            let side = if child == anc.right() {
                plus[anc.0]
            } else {
                minus[anc.0]
            };
            let ip: f64 = vals.iter().zip(ws).map(|(a, w)| a * side * w).sum::<f64>() * h;
            worst = worst.max(ip.abs());
            child = anc;
        }
    }
    out(worst, 0.0)
}

fn whb_residual(c: &Ctx) -> Result<Outcome> {
    let tree = c.tree;
    let mut worst: f64 = 0.0;
    for node in tree.internal_nodes() {
        let (alpha, beta) = whb_decompose(&c.v, node)?;
        let hi = haar_function(tree, node)?;
        let hv = weighted_haar(&c.v, node)?;
        let s = node.length().sqrt();
        for j in tree.leaf_range(node) {
            let r = hi.values()[j] - alpha * hv.values()[j] - beta / s;
            worst = worst.max((r * s).abs());
        }
    }
    out(worst, 0.0)
}

fn whb_bounds(c: &Ctx) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut at = None;
    for node in c.tree.internal_nodes() {
        let (alpha, beta) = whb_decompose(&c.v, node)?;
        let m = c.v.avg(node);
        let ra = alpha.abs() / m.sqrt();
        let bound = c.v.delta(node).abs() / m;
        let rb = if bound > 0.0 {
            beta.abs() / bound
        } else if beta == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let r = ra.max(rb);
        if r > worst {
            worst = r;
            at = Some(node);
        }
    }
    out_note(
        worst,
        1.0,
        at.map_or(String::new(), |n| format!("argmax={}", n.0)),
    )
}

fn little(c: &Ctx) -> Result<Outcome> {
    let d = haar_analysis(c.b()?);
    let seq = CarlesonSequence::new(c.tree, d.coeffs().iter().map(|a| a * a).collect())?;
    let mapped = little_lemma_map(&seq, &c.v)?;
    let lhs = intensity(&mapped, &c.v)?;
    let rhs = 4.0 * intensity_flat(&seq).intensity;
    out_note(lhs.intensity, rhs, format!("argmax={}", lhs.node.0))
}

fn wcl(c: &Ctx) -> Result<Outcome> {
    let seq = seq_buckley(&c.v);
    let f = c.b()?.map(f64::abs);
    let (lhs, rhs) = wcl_pairing(&seq, &f, &c.v)?;
    out(lhs, rhs)
}

fn carl_bmo(c: &Ctx) -> Result<Outcome> {
    let b = c.b()?;
    let lhs = carl_intensity(b, &c.v, &c.v)?.intensity;
    out(lhs, 4.0 * bmo_norm_sq(b).value)
}

fn bere(c: &Ctx) -> Result<Outcome> {
    out(char_rh1(&c.v).value, 16f64.ln() * char_ainfty(&c.v).value)
}

fn mv_norm(c: &Ctx) -> Result<Outcome> {
    let e = maximal_weighted_norm_lower(&c.v, &c.v, &c.v, MAXIMAL_BUDGET, c.seed)?;
    out_note(
        e.value,
        2.0 * 2f64.sqrt(),
        format!("steps={}", e.iterations),
    )
}

fn b2(c: &Ctx) -> Result<Outcome> {
    let lhs = b2_constant(c.b()?, &c.u, &c.v)?.intensity;
    let a2 = c.a2();
    out(lhs, a2 * a2 * c.carl()?)
}

/// Squared norm evaluated with a tight tolerance so a lower-bound shortfall
/// cannot masquerade as a violation.
fn sq_nec(c: &Ctx) -> Result<Outcome> {
    let cfg = PowerConfig {
        tol: 1e-13,
        max_iters: 50_000,
        seed: c.seed,
    };
    let e = sq_norm(&c.u, &c.v, &cfg)?;
    out_note(
        c.c_int() / 4.0,
        e.value * e.value,
        format!("iterations={}", e.iterations),
    )
}

fn para_nec(c: &Ctx) -> Result<Outcome> {
    if c.tree.depth() > PARA_NEC_MAX_DEPTH {
        return Err(Error::DenseTooLarge {
            depth: c.tree.depth(),
            max: PARA_NEC_MAX_DEPTH,
        });
    }
    let b = c.b()?;
    let lhs = paraproduct_testing(b, &c.u, &c.v)?;
    let n = op_norm_exact(&OperatorKind::Paraproduct(b.clone()), &c.u, &c.v)?;
    out_note(
        lhs.value,
        n.value * n.value,
        format!("argmax={}", lhs.node.0),
    )
}

/// Per-node ratios of the Buckley sum to `m_J(v log(v / m_J v))`; nodes where
/// `v` is numerically constant are skipped.
fn sharpb_a(c: &Ctx) -> Result<Outcome> {
    let tree = c.tree;
    let sums = seq_buckley(&c.v).subtree_sums();
    let vals = c.v.values();
    let mut hi: f64 = 0.0;
    let mut lo = f64::INFINITY;
    for node in tree.nodes() {
        let m = c.v.avg(node);
        let r = tree.leaf_range(node);
        let k = r.len() as f64;
        let ent = m * vals[r].iter().map(|&x| entropy_density(x / m)).sum::<f64>() / k;
        if ent <= 1e-12 * m {
            continue;
        }
        let q = sums[node.0] / node.length() / ent;
        hi = hi.max(q);
        lo = lo.min(q);
    }
    if lo.is_infinite() {
        lo = 0.0;
    }
    out(hi, lo)
}

fn sharpb_b(c: &Ctx) -> Result<Outcome> {
    let i = intensity(&seq_buckley(&c.v), &c.v)?;
    out(i.intensity, c.rh1_v())
}

fn inv_sq(c: &Ctx) -> Result<Outcome> {
    let e = inverse_sq_constant(&c.v, &c.cfg());
    out_note(
        e.value,
        char_a2(&c.v).value.sqrt(),
        format!("kind={}", e.kind.as_str()),
    )
}

fn sawyer_nec(c: &Ctx) -> Result<Outcome> {
    let m = c.m_lower().value;
    out(sawyer_constant(&c.u, &c.v)?, m * m)
}

fn pzr(c: &Ctx) -> Result<Outcome> {
    out((c.m_lower()).value, (c.a2() * c.rh1_uinv()).sqrt())
}

fn sq_laceyli(c: &Ctx) -> Result<Outcome> {
    out(c.sq().value, (c.a2() + c.c_int()).sqrt())
}

fn sq_mixed(c: &Ctx) -> Result<Outcome> {
    out(c.sq().value, c.a2().sqrt() * (1.0 + c.rh1_uinv().sqrt()))
}

fn maxsq(c: &Ctx) -> Result<Outcome> {
    out(c.sq().value, c.m_lower().value * (1.0 + c.rh1_v().sqrt()))
}

fn t0_bundle(c: &Ctx) -> Result<Outcome> {
    out(c.t0().value, (c.a2() + c.c_int() + c.d_int()).sqrt())
}

fn mart_ntv(c: &Ctx) -> Result<Outcome> {
    let (_, e) = martingale_sup_norm_lower(&c.u, &c.v, MARTINGALE_RESTARTS, c.seed)?;
    let t0 = c.t0().value;
    out(e.value, (c.a2() + c.c_int() + c.d_int() + t0 * t0).sqrt())
}

fn para_norm(c: &Ctx) -> Result<NormEstimate> {
    op_norm_power(
        &OperatorKind::Paraproduct(c.b()?.clone()),
        &c.u,
        &c.v,
        &c.cfg(),
    )
}

fn para_main(c: &Ctx) -> Result<Outcome> {
    let a2 = c.a2();
    let rhs = (a2 * c.carl()?).sqrt() * (a2.sqrt() + c.d_int().sqrt());
    out(para_norm(c)?.value, rhs)
}

fn para_cor(c: &Ctx) -> Result<Outcome> {
    let a2 = c.a2();
    let s = sq_norm(&c.v.reciprocal(), &c.u.reciprocal(), &c.cfg())?.value;
    let rhs = (a2 * c.carl()?).sqrt() * (a2.sqrt() + s);
    out(para_norm(c)?.value, rhs)
}

fn bloom(c: &Ctx) -> Result<Outcome> {
    let mu_inv = Weight::new(
        c.v.leaf_fn()
            .zip_map(c.u.leaf_fn(), |v, u| (v / u).sqrt())?,
    )?;
    let bl = bloom_bmo_norm(c.b()?, &mu_inv)?.value;
    out(c.carl()?, bl * bl)
}

fn carl_sym(c: &Ctx) -> Result<Outcome> {
    let other = carl_intensity(c.b()?, &c.v.reciprocal(), &c.u.reciprocal())?.intensity;
    out(c.carl()?, other)
}
