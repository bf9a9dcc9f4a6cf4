//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use conic_pricer::lattice::{AdaptedProcess, EventTree, NodeRef};
use conic_pricer::market::{CashFlow, MarketModel, Security};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const TRINOMIAL_PROBABILITIES: [f64; 5] = [0.1, 0.125, 0.25, 0.25, 0.275];

pub fn trinomial_bids() -> AdaptedProcess {
    AdaptedProcess::from_rows(&[
        vec![50.0, 80.0, 90.0],
        vec![50.0, 80.0, 70.0],
        vec![50.0, 80.0, 60.0],
        vec![50.0, 40.0, 60.0],
        vec![50.0, 40.0, 30.0],
    ])
    .unwrap()
}

pub fn trinomial_model(lambda: f64) -> MarketModel {
    let bids = trinomial_bids();
    let tree = EventTree::from_observables(TRINOMIAL_PROBABILITIES.to_vec(), &[bids.clone()]).unwrap();
    MarketModel::new(tree, AdaptedProcess::zeros(5, 2), vec![Security::with_lambda("stock", bids, lambda).unwrap()]).unwrap()
}

pub fn binomial(p_up: f64, lambda: f64) -> MarketModel {
    let tree = EventTree::new(vec![p_up, 1.0 - p_up], vec![vec![vec![0, 1]], vec![vec![0], vec![1]]]).unwrap();
    let bid = AdaptedProcess::from_rows(&[vec![50.0, 80.0], vec![50.0, 40.0]]).unwrap();
    MarketModel::new(tree, AdaptedProcess::zeros(2, 1), vec![Security::with_lambda("stock", bid, lambda).unwrap()]).unwrap()
}

pub fn binomial_call(model: &MarketModel) -> CashFlow {
    let strike = 60.0;
    let payoff: Vec<f64> = (0..2).map(|i| (model.securities()[0].bid.get(i, 1) - strike).max(0.0)).collect();
    CashFlow::terminal(model.tree(), &payoff).unwrap()
}

/// A tree with `2..=max_paths` paths and the given horizon (1 or 2).
pub fn random_tree(rng: &mut TestRng, max_paths: usize, horizon: usize) -> EventTree {
    assert!(max_paths >= 2 && (1..=2).contains(&horizon));
    let mut partitions: Vec<Vec<Vec<usize>>> = Vec::new();
    let n;
    if horizon == 1 {
        n = rng.gen_range(2..=max_paths.min(4));
        partitions.push(vec![(0..n).collect()]);
        partitions.push((0..n).map(|i| vec![i]).collect());
    } else {
        let mut sizes = Vec::new();
        let mut total = 0;
        let k = rng.gen_range(1..=3usize);
        for _ in 0..k {
            let room = max_paths.saturating_sub(total);
            if room == 0 {
                break;
            }
            let s = rng.gen_range(1..=room.min(3));
            sizes.push(s);
            total += s;
        }
        if total < 2 {
            sizes = vec![1, 1];
            total = 2;
        }
        n = total;
        partitions.push(vec![(0..n).collect()]);
        let mut cells = Vec::new();
        let mut start = 0;
        for &s in &sizes {
            cells.push((start..start + s).collect::<Vec<_>>());
            start += s;
        }
        partitions.push(cells);
        partitions.push((0..n).map(|i| vec![i]).collect());
    }
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = w.iter().sum();
    EventTree::new(w.iter().map(|x| x / s).collect(), partitions).unwrap()
}

/// A process constant on every cell, drawn from `[lo, hi)`.
pub fn random_adapted(rng: &mut TestRng, tree: &EventTree, lo: f64, hi: f64) -> AdaptedProcess {
    let mut p = AdaptedProcess::zeros(tree.n_paths(), tree.horizon());
    for t in 0..=tree.horizon() {
        for node in tree.nodes_at(t).collect::<Vec<_>>() {
            let v = rng.gen_range(lo..hi);
            for &i in tree.paths_of(node) {
                p.set(i, t, v);
            }
        }
    }
    p
}

pub fn random_cash_flow(rng: &mut TestRng, tree: &EventTree) -> CashFlow {
    CashFlow::new(tree, random_adapted(rng, tree, -2.0, 2.0)).unwrap()
}

/// Multiplicative price tree from 1 with per-node factors in `[0.6, 1.6)`.
pub fn random_bids(rng: &mut TestRng, tree: &EventTree) -> AdaptedProcess {
    let mut p = AdaptedProcess::constant(tree.n_paths(), tree.horizon(), 1.0);
    for t in 1..=tree.horizon() {
        for node in tree.nodes_at(t).collect::<Vec<_>>() {
            let f = rng.gen_range(0.6..1.6);
            for &i in tree.paths_of(node) {
                p.set(i, t, p.get(i, t - 1) * f);
            }
        }
    }
    p
}

pub fn random_market(rng: &mut TestRng, tree: &EventTree, n_securities: usize, lambda: f64) -> MarketModel {
    let secs = (0..n_securities)
        .map(|j| Security::with_lambda(format!("s{j}"), random_bids(rng, tree), lambda).unwrap())
        .collect();
    MarketModel::new(tree.clone(), AdaptedProcess::zeros(tree.n_paths(), tree.horizon()), secs).unwrap()
}

/// `min` over `Λ ∈ {0,γ}^n` of `Σp(1+Λ)x / Σp(1+Λ)`, by plain enumeration.
pub fn band_min_by_vertices(p: &[f64], x: &[f64], gamma: f64) -> f64 {
    let n = p.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let w = p[i] * if mask >> i & 1 == 1 { 1.0 + gamma } else { 1.0 };
            num += w * x[i];
            den += w;
        }
        best = best.min(num / den);
    }
    best
}

pub fn ratio(p: &[f64], x: &[f64]) -> f64 {
    let gain: f64 = p.iter().zip(x).map(|(p, x)| p * x).sum();
    let loss: f64 = p.iter().zip(x).map(|(p, x)| p * (-x).max(0.0)).sum();
    if gain <= 0.0 {
        0.0
    } else if loss == 0.0 {
        f64::INFINITY
    } else {
        gain / loss
    }
}

/// Compositions of `total` into `k` nonnegative parts.
fn compositions(total: usize, k: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if cur.len() + 1 == k {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for a in 0..=total {
        cur.push(a);
        compositions(total - a, k, out, cur);
        cur.pop();
    }
}

fn binomial_coeff(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Largest gain-loss ratio of `Σ wₖ gₖ` over the simplex: a lattice of at least
/// 10³ points, then pattern search from the best lattice points. Flows that
/// vanish on every path count as 0.
pub fn brute_max_ratio(p: &[f64], gens: &[Vec<f64>]) -> f64 {
    let k = gens.len();
    if k == 0 {
        return 0.0;
    }
    let n = p.len();
    let scale = gens.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    let eval = |w: &[f64]| {
        let x: Vec<f64> = (0..n).map(|i| (0..k).map(|j| w[j] * gens[j][i]).sum()).collect();
        if x.iter().all(|v| v.abs() <= 1e-12 * (1.0 + scale)) {
            0.0
        } else {
            ratio(p, &x)
        }
    };
    let mut r = 1;
    while k > 1 && binomial_coeff(r + k - 1, k - 1) < 1000 {
        r += 1;
    }
    let mut lattice = Vec::new();
    compositions(r, k, &mut lattice, &mut Vec::new());
    let mut scored: Vec<(f64, Vec<f64>)> =
        lattice.iter().map(|c| c.iter().map(|&a| a as f64 / r as f64).collect::<Vec<f64>>()).map(|w| (eval(&w), w)).collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut best = scored[0].0;
    if best.is_infinite() {
        return best;
    }
    for (start_val, start) in scored.into_iter().take(8) {
        let (mut val, mut w) = (start_val, start);
        let mut step = 1.0 / r as f64;
        while step > 1e-10 {
            let mut improved = false;
            for a in 0..k {
                for b in 0..k {
                    if a == b || w[b] <= 0.0 {
                        continue;
                    }
                    let d = step.min(w[b]);
                    let mut cand = w.clone();
                    cand[a] += d;
                    cand[b] -= d;
                    let v = eval(&cand);
                    if v > val {
                        val = v;
                        w = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
            if val.is_infinite() {
                break;
            }
        }
        best = best.max(val);
        if best.is_infinite() {
            break;
        }
    }
    best
}

/// `max/min c·x` over `{A x ≤ b, E x = d, 0 ≤ x}` by enumerating every basic
/// point; the feasible set must be bounded. `None` when infeasible.
pub fn vertex_lp(maximize: bool, c: &[f64], a: &[Vec<f64>], b: &[f64], e: &[Vec<f64>], d: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    // all inequality rows, including -x ≤ 0
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().cloned()).collect();
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = -1.0;
        rows.push((r, 0.0));
    }
    let free = n.checked_sub(e.len())?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pick = Vec::new();
    choose(rows.len(), free, 0, &mut pick, &mut |sel: &[usize]| {
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for (r, (row, v)) in e.iter().zip(d).chain(sel.iter().map(|&s| (&rows[s].0, &rows[s].1))).enumerate() {
            for j in 0..n {
                m[(r, j)] = row[j];
            }
            rhs[r] = *v;
        }
        let lu = m.lu();
        if lu.determinant().abs() < 1e-12 {
            return;
        }
        let Some(x) = lu.solve(&rhs) else { return };
        let x: Vec<f64> = x.iter().cloned().collect();
        let tol = 1e-9;
        let ok = rows.iter().all(|(row, v)| row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() <= v + tol * (1.0 + v.abs()))
            && e.iter().zip(d).all(|(row, v)| (row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - v).abs() <= tol * (1.0 + v.abs()));
        if !ok {
            return;
        }
        let val: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
        let better = match &best {
            None => true,
            Some((bv, _)) => if maximize { val > *bv } else { val < *bv },
        };
        if better {
            best = Some((val, x));
        }
    });
    best
}

fn choose(n: usize, k: usize, start: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in start..n {
        if n - i < k - pick.len() {
            break;
        }
        pick.push(i);
        choose(n, k, i + 1, pick, f);
        pick.pop();
    }
}

/// Good-deal bounds on `node` from the measure polytope written out by hand:
/// variables `(u_1..u_n, m)`, generator rows `Σ pᵢuᵢGᵢ ≤ 0`, band
/// `m ≤ uᵢ ≤ (1+γ)m`, normalization on the node, objective `Σ_A pᵢuᵢXᵢ`.
pub fn polytope_bounds_by_vertices(
    p: &[f64],
    gens: &[Vec<f64>],
    gamma: f64,
    node_paths: &[usize],
    x: &[f64],
) -> Option<(f64, f64)> {
    let n = p.len();
    let nv = n + 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for g in gens {
        let mut row: Vec<f64> = (0..n).map(|i| p[i] * g[i]).collect();
        row.push(0.0);
        a.push(row);
        b.push(0.0);
    }
    for i in 0..n {
        let mut lo = vec![0.0; nv];
        lo[i] = -1.0;
        lo[n] = 1.0;
        a.push(lo);
        b.push(0.0);
        let mut hi = vec![0.0; nv];
        hi[i] = 1.0;
        hi[n] = -(1.0 + gamma);
        a.push(hi);
        b.push(0.0);
    }
    let mut norm = vec![0.0; nv];
    let mut c = vec![0.0; nv];
    for &i in node_paths {
        norm[i] = p[i];
        c[i] = p[i] * x[i];
    }
    // paths off the node only enter through the band; keep the set bounded
    let mut cap = vec![0.0; nv];
    cap[n] = 1.0;
    a.push(cap);
    b.push(1.0 / node_paths.iter().map(|&i| p[i]).sum::<f64>());
    let hi = vertex_lp(true, &c, &a, &b, &[norm.clone()], &[1.0])?;
    let lo = vertex_lp(false, &c, &a, &b, &[norm], &[1.0])?;
    Some((lo.0, hi.0))
}

pub fn node_values(tree: &EventTree, node: NodeRef, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = tree.probabilities();
    let paths = tree.paths_of(node);
    (paths.iter().map(|&i| p[i]).collect(), paths.iter().map(|&i| x[i]).collect())
}

/// Extremes of `Σ_A pᵢuᵢXᵢ` over `u ≥ 0`, `Σ_A pᵢuᵢGᵢ ≤ 0`, `Σ_A pᵢuᵢ = 1`,
/// everything restricted to the node's paths.
pub fn closure_bounds_by_vertices(p: &[f64], gens: &[Vec<f64>], x: &[f64]) -> Option<(f64, f64)> {
    let n = p.len();
    let a: Vec<Vec<f64>> = gens.iter().map(|g| (0..n).map(|i| p[i] * g[i]).collect()).collect();
    let b = vec![0.0; a.len()];
    let c: Vec<f64> = (0..n).map(|i| p[i] * x[i]).collect();
    let hi = vertex_lp(true, &c, &a, &b, &[p.to_vec()], &[1.0])?;
    let lo = vertex_lp(false, &c, &a, &b, &[p.to_vec()], &[1.0])?;
    Some((lo.0, hi.0))
}
