//! Independent oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use causal_precoder::entropy::CostTensor;
use causal_precoder::model::{AssociatedSymbol, ChannelSpec, MarginalSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn binary(noise: f64) -> ChannelSpec {
    ChannelSpec::new(vec![-1.0, 1.0], vec![-1.0, 1.0], vec![0.5, 0.5], noise).unwrap()
}

pub fn sym(ix: &[usize]) -> AssociatedSymbol {
    AssociatedSymbol::new(ix.to_vec(), 16).unwrap()
}

/// Random probability vector with entries bounded away from zero.
pub fn random_pmf(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|v| v / total).collect();
    let s: f64 = p.iter().sum();
    p[0] += 1.0 - s;
    p
}

/// Random distinct sorted reals in `[lo, hi)` separated by at least `gap`.
pub fn random_levels(rng: &mut impl Rng, n: usize, lo: f64, hi: f64, gap: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] >= gap) {
            return v;
        }
    }
}

pub fn random_spec(rng: &mut impl Rng, m: usize, q: usize, noise: f64) -> ChannelSpec {
    let x = random_levels(rng, m, -2.0, 2.0, 0.1);
    let s = random_levels(rng, q, -1.5, 1.5, 0.1);
    let r = random_pmf(rng, q);
    ChannelSpec::new(x, s, r, noise).unwrap()
}

pub fn random_costs(rng: &mut impl Rng, m: usize, q: usize) -> CostTensor {
    let n = m.pow(q as u32);
    CostTensor::from_values(m, q, (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
}

pub fn random_marginals(rng: &mut impl Rng, m: usize, q: usize) -> MarginalSet {
    MarginalSet::new((0..q).map(|_| random_pmf(rng, m)).collect()).unwrap()
}

fn tuple_of(rank: usize, m: usize, q: usize) -> Vec<usize> {
    let mut out = vec![0; q];
    let mut r = rank;
    for k in (0..q).rev() {
        out[k] = r % m;
        r /= m;
    }
    out
}

/// Marginal equality system with one redundant row per extra state removed,
/// as dense rows over all `M^Q` variables.
fn constraint_matrix(targets: &MarginalSet) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (m, q) = (targets.m(), targets.q());
    let n = m.pow(q as u32);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for s in 0..q {
        let last = if s == 0 { m } else { m - 1 };
        for i in 0..last {
            let row: Vec<f64> = (0..n)
                .map(|r| if tuple_of(r, m, q)[s] == i { 1.0 } else { 0.0 })
                .collect();
            a.push(row);
            b.push(targets.rows()[s][i]);
        }
    }
    (a, b)
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &k| a[i][c].abs().total_cmp(&a[k][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[i][k] -= f * a[c][k];
                }
                b[i] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimum of `Σ h·p` over every basic feasible solution of the marginal system.
pub fn vertex_enumeration_min(costs: &CostTensor, targets: &MarginalSet) -> f64 {
    let (a, b) = constraint_matrix(targets);
    let rows = a.len();
    let n = costs.values().len();
    let mut best = f64::INFINITY;
    for_each_subset(n, rows, &mut |cols| {
        let sub: Vec<Vec<f64>> = a.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect();
        if let Some(x) = solve_dense(sub, b.clone()) {
            if x.iter().all(|&v| v >= -1e-12) {
                let obj: f64 = cols.iter().zip(&x).map(|(&j, v)| costs.values()[j] * v).sum();
                best = best.min(obj);
            }
        }
    });
    best
}

/// A feasible point of the transportation polytope: greedy fill along random
/// per-state orderings of the constellation.
pub fn random_transportation_fill(rng: &mut impl Rng, targets: &MarginalSet) -> Vec<f64> {
    let (m, q) = (targets.m(), targets.q());
    let orders: Vec<Vec<usize>> = (0..q)
        .map(|_| {
            let mut o: Vec<usize> = (0..m).collect();
            o.shuffle(rng);
            o
        })
        .collect();
    let mut remaining: Vec<Vec<f64>> = targets.rows().to_vec();
    let mut pos = vec![0usize; q];
    let mut p = vec![0.0; m.pow(q as u32)];
    while pos.iter().all(|&k| k < m) {
        let idx: Vec<usize> = (0..q).map(|s| orders[s][pos[s]]).collect();
        let amount = (0..q).map(|s| remaining[s][idx[s]]).fold(f64::INFINITY, f64::min);
        let rank = idx.iter().fold(0, |acc, &i| acc * m + i);
        p[rank] += amount;
        for s in 0..q {
            remaining[s][idx[s]] -= amount;
        }
        let smallest = (0..q)
            .min_by(|&a, &b| remaining[a][idx[a]].total_cmp(&remaining[b][idx[b]]))
            .unwrap();
        pos[smallest] += 1;
    }
    p
}

/// Random convex combination of several greedy fills.
pub fn random_feasible_point(rng: &mut impl Rng, targets: &MarginalSet) -> Vec<f64> {
    let k = rng.random_range(1..4);
    let w = random_pmf(rng, k);
    let mut p = vec![0.0; targets.m().pow(targets.q() as u32)];
    for wk in w {
        for (a, b) in p.iter_mut().zip(random_transportation_fill(rng, targets)) {
            *a += wk * b;
        }
    }
    p
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut v = p.clone();
            v.insert(pos, n - 1);
            out.push(v);
        }
    }
    out
}

/// Minimum over all `M!` permutations.
pub fn brute_force_matching(cost: &[Vec<f64>]) -> f64 {
    permutations(cost.len())
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Minimum over all `(M!)^{Q-1}` axial assignments, with the lexicographically
/// smallest optimum (tuples listed by first coordinate).
pub fn brute_force_axial(costs: &CostTensor) -> (f64, Vec<Vec<usize>>) {
    let (m, q) = (costs.m(), costs.q());
    let perms = permutations(m);
    let mut best = (f64::INFINITY, Vec::new());
    let mut choice = vec![0usize; q - 1];
    loop {
        let tuples: Vec<Vec<usize>> = (0..m)
            .map(|row| {
                let mut t = vec![row + 1];
                t.extend(choice.iter().map(|&c| perms[c][row] + 1));
                t
            })
            .collect();
        let cost: f64 = tuples
            .iter()
            .map(|t| costs.values()[t.iter().fold(0, |acc, &i| acc * m + (i - 1))])
            .sum();
        if cost < best.0 - 1e-12 || ((cost - best.0).abs() <= 1e-12 && tuples < best.1) {
            best = (cost, tuples);
        }
        let mut k = choice.len();
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < perms.len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// `-∫ p ln p` by a midpoint Riemann sum on `n` cells.
pub fn riemann_entropy(pdf: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let dx = (hi - lo) / n as f64;
    (0..n)
        .map(|k| {
            let p = pdf(lo + (k as f64 + 0.5) * dx);
            if p > 0.0 {
                -p * p.ln() * dx
            } else {
                0.0
            }
        })
        .sum()
}
