//! Worked examples from hand computation, each checked against an oracle
//! written directly over leaf arrays.

#![allow(clippy::needless_range_loop)]

use dyweights::carleson::{
    bloom_bmo_norm, carl_intensity, intensity, seq_buckley, seq_delta, CarlesonSequence,
};
use dyweights::dyadic::{
    dyadic_averages, haar_analysis, haar_function, weighted_haar, whb_decompose,
};
use dyweights::norms::{op_norm_exact, op_norm_power, PowerConfig};
use dyweights::operators::{
    apply_martingale, apply_paraproduct, apply_paraproduct_adjoint, apply_t0, maximal,
    sawyer_ratios, square_function, OperatorKind, SignAssignment,
};
use dyweights::weights::{
    char_a2, char_ainfty, char_doubling, char_joint_a2, char_rh1, gen_power_weight, Weight,
};
use dyweights::{DyadicTree, LeafFn, Node};

fn tree(n: u32) -> DyadicTree {
    DyadicTree::new(n).unwrap()
}

fn lf(n: u32, v: &[f64]) -> LeafFn {
    LeafFn::new(tree(n), v.to_vec()).unwrap()
}

fn wt(n: u32, v: &[f64]) -> Weight {
    Weight::from_values(tree(n), v.to_vec()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Leaf slice of `node` for a tree of depth `n`.
fn cell(n: u32, node: Node) -> std::ops::Range<usize> {
    let k = 1usize << (n - node.level());
    node.index() * k..(node.index() + 1) * k
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn all_nodes(n: u32) -> Vec<Node> {
    (0..=n)
        .flat_map(|l| (0..1usize << l).map(move |i| Node::new(l, i)))
        .collect()
}

#[test]
fn averages_and_haar_coefficients() {
    let f = lf(2, &[1.0, 1.0, 2.0, 2.0]);
    let a = dyadic_averages(&f);
    assert_eq!(a.get(Node::new(1, 0)), 1.0);
    assert_eq!(a.get(Node::new(1, 1)), 2.0);
    assert_eq!(a.get(Node::new(0, 0)), 1.5);

    let d = haar_analysis(&f);
    for node in all_nodes(1) {
        let h = haar_function(tree(2), node).unwrap();
        let ip: f64 = f
            .values()
            .iter()
            .zip(h.values())
            .map(|(x, y)| x * y)
            .sum::<f64>()
            / 4.0;
        assert!(close(d.coeff(node), ip, 1e-15));
    }
    assert_eq!(d.coeff(Node(0)), 0.5);

    let g = haar_analysis(&lf(1, &[1.0, 0.0]));
    assert_eq!(g.mean, 0.5);
    assert_eq!(g.coeff(Node(0)), -0.5);
}

#[test]
fn weighted_haar_two_leaves() {
    let v = wt(1, &[1.0, 3.0]);
    let h = weighted_haar(&v, Node(0)).unwrap();
    let norm: f64 = h
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, w)| a * a * w)
        .sum::<f64>()
        / 2.0;
    assert!(close(norm, 1.0, 1e-14));
    let (alpha, beta) = whb_decompose(&v, Node(0)).unwrap();
    assert!(close(alpha, 1.5f64.sqrt(), 1e-14));
    assert!(alpha <= 2f64.sqrt());
    let h0 = haar_function(tree(1), Node(0)).unwrap();
    for j in 0..2 {
        let r = h0.values()[j] - alpha * h.values()[j] - beta;
        assert!(r.abs() < 1e-12);
    }
}

#[test]
fn power_weight_averages() {
    let w = gen_power_weight(0.5, 6).unwrap();
    assert!(close(w.avg(Node(0)), 2.0 / 3.0, 1e-13));
    let w1 = gen_power_weight(0.999, 1).unwrap();
    assert!(close(w1.values()[0], 0.25, 2e-3));
    assert!(close(w1.values()[1], 0.75, 2e-3));
    let k = 3usize;
    let node = Node::new(k as u32, 0);
    let expect = 2f64.powf(-0.5 * k as f64) / 1.5;
    assert!(close(w.avg(node), expect, 1e-13));
}

fn brute_joint_a2(n: u32, u: &[f64], v: &[f64]) -> f64 {
    all_nodes(n)
        .into_iter()
        .map(|node| {
            let r = cell(n, node);
            let ui: Vec<f64> = u[r.clone()].iter().map(|x| 1.0 / x).collect();
            mean(&ui) * mean(&v[r])
        })
        .fold(0.0, f64::max)
}

#[test]
fn characteristics_by_enumeration() {
    let vals = [1.0, 1.0, 2.0, 2.0];
    let v = wt(2, &vals);
    assert!(close(char_a2(&v).value, 1.125, 1e-15));
    assert!(close(
        char_a2(&v).value,
        brute_joint_a2(2, &vals, &vals),
        1e-15
    ));

    let rh1_root =
        0.5 * (2.0 / 3.0) * (2.0f64 / 3.0).ln() + 0.5 * (4.0 / 3.0) * (4.0f64 / 3.0).ln();
    assert!(close(char_rh1(&v).value, rh1_root, 1e-14));
    assert!(close(rh1_root, 0.05663, 1e-4));
    assert!(close(
        char_ainfty(&v).value,
        1.5 * (-0.5 * 2f64.ln()).exp(),
        1e-14
    ));
    assert!(close(char_doubling(&wt(1, &[1.0, 3.0])).value, 4.0, 1e-15));

    let w = gen_power_weight(0.5, 8).unwrap();
    let root = w.avg(Node(0)) * w.inv_avg(Node(0));
    // the first cell alone costs about sqrt(2^-8)/3 of the continuum value
    assert!(root > 4.0 / 3.0 - 0.025 && root <= 4.0 / 3.0);
    let brute = brute_joint_a2(8, w.values(), w.values());
    assert!(close(char_joint_a2(&w, &w).unwrap().value, brute, 1e-13));

    let u = gen_power_weight(-0.3, 7).unwrap();
    let v = gen_power_weight(0.6, 7).unwrap();
    let brute = brute_joint_a2(7, u.values(), v.values());
    assert!(close(char_joint_a2(&u, &v).unwrap().value, brute, 1e-13));
}

fn brute_intensity(n: u32, entries: &[f64], mu: &[f64]) -> f64 {
    all_nodes(n)
        .into_iter()
        .map(|j| {
            let sum: f64 = all_nodes(n)
                .into_iter()
                .filter(|i| {
                    i.level() < n && i.level() >= j.level() && {
                        let r = cell(n, *i);
                        let rj = cell(n, j);
                        r.start >= rj.start && r.end <= rj.end
                    }
                })
                .map(|i| entries[i.0])
                .sum();
            let r = cell(n, j);
            let m: f64 = mu[r.clone()].iter().sum::<f64>() / (1usize << n) as f64;
            sum / m
        })
        .fold(0.0, f64::max)
}

#[test]
fn carleson_intensity_by_enumeration() {
    let t = tree(2);
    let seq = CarlesonSequence::new(t, vec![1.0, 0.5, 0.5]).unwrap();
    let one = Weight::constant(t, 1.0);
    assert!(close(intensity(&seq, &one).unwrap().intensity, 2.0, 1e-15));

    let vals: Vec<f64> = (0..32).map(|j| 1.0 + ((j * 7) % 5) as f64).collect();
    let mu = wt(5, &vals);
    let ent: Vec<f64> = (0..31).map(|j| ((j * 13) % 9) as f64 * 0.1).collect();
    let seq = CarlesonSequence::new(tree(5), ent.clone()).unwrap();
    let got = intensity(&seq, &mu).unwrap().intensity;
    assert!(close(got, brute_intensity(5, &ent, &vals), 1e-13));

    let x = wt(1, &[1.0, 3.0]);
    let y = Weight::constant(tree(1), 1.0);
    assert!(close(seq_delta(&x, &y).unwrap().get(Node(0)), 4.0, 1e-15));
    let b = seq_buckley(&wt(2, &[1.0, 1.0, 2.0, 2.0]));
    assert!(close(b.get(Node(0)), 2.0 / 3.0, 1e-15));
    assert_eq!(b.get(Node(1)), 0.0);

    let h = haar_function(tree(1), Node(0)).unwrap();
    let one1 = Weight::constant(tree(1), 1.0);
    assert!(close(
        carl_intensity(&h, &one1, &one1).unwrap().intensity,
        1.0,
        1e-15
    ));
    let bl = bloom_bmo_norm(&h, &one1).unwrap();
    assert!(close(bl.value, 1.0, 1e-15));
}

#[test]
fn operators_on_small_trees() {
    let h = haar_function(tree(1), Node(0)).unwrap();
    let one = LeafFn::constant(tree(1), 1.0);
    assert_eq!(apply_paraproduct(&h, &one).unwrap().values(), &[-1.0, 1.0]);
    assert_eq!(
        apply_paraproduct_adjoint(&h, &h).unwrap().values(),
        &[1.0, 1.0]
    );

    let b: Vec<f64> = (0..16).map(|j| ((j * 5) % 7) as f64).collect();
    let b = lf(4, &b);
    let f = LeafFn::constant(tree(4), 1.0);
    let m = mean(b.values());
    let got = apply_paraproduct(&b, &f).unwrap();
    for (g, x) in got.values().iter().zip(b.values()) {
        assert!(close(*g, x - m, 1e-14));
    }

    let r = SignAssignment::all_plus(tree(1));
    assert_eq!(
        apply_martingale(&r, &lf(1, &[2.0, 0.0])).unwrap().values(),
        &[1.0, -1.0]
    );

    let u1 = Weight::constant(tree(1), 1.0);
    let v = wt(1, &[1.0, 3.0]);
    assert_eq!(apply_t0(&u1, &v, &one).unwrap().values(), &[0.0, 0.0]);
    let u = wt(1, &[1.0, 1.0 / 3.0]);
    let t = apply_t0(&u, &v, &one).unwrap();
    assert!(t.values().iter().all(|x| close(*x, 1.0, 1e-14)));

    assert_eq!(square_function(&h).values(), &[1.0, 1.0]);
    assert_eq!(
        maximal(&lf(2, &[4.0, 0.0, 0.0, 0.0])).values(),
        &[4.0, 2.0, 1.0, 1.0]
    );

    let uinv = wt(1, &[1.0, 3.0]);
    let ratios = sawyer_ratios(&uinv.reciprocal(), &Weight::constant(tree(1), 1.0)).unwrap();
    assert!(close(ratios[0], 3.25, 1e-14));
}

/// Largest singular value of `v^{1/2} T u^{-1/2}` by enumerating the matrix
/// from leaf indicators and running Jacobi sweeps on its normal matrix.
fn brute_norm(n: u32, apply: impl Fn(&LeafFn) -> LeafFn, u: &Weight, v: &Weight) -> f64 {
    let k = 1usize << n;
    let mut a = vec![vec![0.0; k]; k];
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0 / u.values()[j].sqrt();
        let col = apply(&lf(n, &e));
        for i in 0..k {
            a[i][j] = v.values()[i].sqrt() * col.values()[i];
        }
    }
    let mut g = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            g[i][j] = (0..k).map(|r| a[r][i] * a[r][j]).sum();
        }
    }
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..k {
            for q in p + 1..k {
                if g[p][q].abs() < 1e-300 {
                    continue;
                }
                off += g[p][q] * g[p][q];
                let theta = (g[q][q] - g[p][p]) / (2.0 * g[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (gp, gq) = (g[r][p], g[r][q]);
                    g[r][p] = c * gp - s * gq;
                    g[r][q] = s * gp + c * gq;
                }
                for r in 0..k {
                    let (gp, gq) = (g[p][r], g[q][r]);
                    g[p][r] = c * gp - s * gq;
                    g[q][r] = s * gp + c * gq;
                }
            }
        }
        if off < 1e-28 {
            break;
        }
    }
    (0..k).map(|i| g[i][i]).fold(0.0, f64::max).sqrt()
}

#[test]
fn norms_against_jacobi_oracle() {
    let one1 = Weight::constant(tree(1), 1.0);
    let h = haar_function(tree(1), Node(0)).unwrap();
    let p = OperatorKind::Paraproduct(h);
    assert!(close(
        op_norm_exact(&p, &one1, &one1).unwrap().value,
        1.0,
        1e-12
    ));

    let n = 4;
    let u = wt(
        n,
        &(0..16).map(|j| 1.0 + (j % 3) as f64).collect::<Vec<_>>(),
    );
    let v = wt(
        n,
        &(0..16)
            .map(|j| 0.5 + ((j * 7) % 4) as f64)
            .collect::<Vec<_>>(),
    );
    let b = lf(
        n,
        &(0..16)
            .map(|j| ((j * 3) % 5) as f64 - 2.0)
            .collect::<Vec<_>>(),
    );
    let r = SignAssignment::random(tree(n), 9);
    let cfg = PowerConfig::default();

    let oracle = brute_norm(n, |f| apply_paraproduct(&b, f).unwrap(), &u, &v);
    let kind = OperatorKind::Paraproduct(b.clone());
    assert!(close(
        op_norm_exact(&kind, &u, &v).unwrap().value,
        oracle,
        1e-9
    ));
    assert!(close(
        op_norm_power(&kind, &u, &v, &cfg).unwrap().value,
        oracle,
        1e-7
    ));

    let oracle = brute_norm(n, |f| apply_martingale(&r, f).unwrap(), &u, &v);
    let kind = OperatorKind::Martingale(r.clone());
    assert!(close(
        op_norm_exact(&kind, &u, &v).unwrap().value,
        oracle,
        1e-9
    ));

    let oracle = brute_norm(n, |f| apply_t0(&u, &v, f).unwrap(), &u, &v);
    let kind = OperatorKind::T0(u.clone(), v.clone());
    assert!(close(
        op_norm_exact(&kind, &u, &v).unwrap().value,
        oracle,
        1e-9
    ));
}
