//! Integral uniform transmission: `M` associated symbols, each used with
//! probability `1/M`, that together use every constellation point once per
//! state. For `Q = 2` this is the linear assignment problem; for `Q > 2` the
//! axial multidimensional assignment problem.
//!
//! Among equal-cost optima every solver returns the lexicographically smallest
//! tuple sequence (tuples ordered by their first coordinate).

use std::fmt;

use crate::entropy::{mutual_information, mutual_information_with_costs, CostTensor, GridPolicy};
use crate::error::{Error, Result};
use crate::model::{AssociatedSymbol, ChannelSpec, JointPmf, PrecoderCode};

/// Largest constellation the exact multidimensional solver accepts.
pub const MAX_EXACT_M: usize = 8;
/// Largest interference alphabet the exact multidimensional solver accepts.
pub const MAX_EXACT_Q: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Sorted by first coordinate: `tuples[m].index(1) == m + 1`.
    pub tuples: Vec<AssociatedSymbol>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn m(&self) -> usize {
        self.tuples.len()
    }

    /// Every coordinate uses each of `1..=M` exactly once.
    pub fn is_coordinate_disjoint(&self) -> bool {
        let m = self.m();
        let Some(q) = self.tuples.first().map(AssociatedSymbol::len) else {
            return false;
        };
        (1..=q).all(|s| {
            let mut seen = vec![false; m + 1];
            self.tuples.iter().all(|t| {
                t.len() == q && {
                    let i = t.index(s);
                    i >= 1 && i <= m && !std::mem::replace(&mut seen[i], true)
                }
            })
        })
    }

    pub fn pmf(&self) -> JointPmf {
        JointPmf::uniform_over(&self.tuples, self.m())
    }

    pub fn to_code(&self, spec: &ChannelSpec) -> Result<PrecoderCode> {
        PrecoderCode::new(self.tuples.clone(), spec)
    }

    /// Short identifier such as `1:1/2:2`.
    pub fn id(&self) -> String {
        assignment_id(&self.tuples)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tuples {
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// `/`-joined tuples with `:`-joined indices, e.g. `1:2/2:1`.
pub fn assignment_id(tuples: &[AssociatedSymbol]) -> String {
    tuples
        .iter()
        .map(|t| t.indices().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(":"))
        .collect::<Vec<_>>()
        .join("/")
}

fn tie_tol(scale: f64) -> f64 {
    1e-12 * (1.0 + scale)
}

/// Row-to-column minimum-cost permutation with potentials, `O(n³)`.
fn hungarian_permutation(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

fn matching_cost(cost: &[Vec<f64>], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

fn sub_matrix(cost: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|&i| cols.iter().map(|&j| cost[i][j]).collect()).collect()
}

/// Minimum-cost perfect matching on `K_{M,M}`.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment> {
    let n = cost.len();
    if n == 0 {
        return Err(Error::InvalidPmf("empty cost matrix".into()));
    }
    if let Some(r) = cost.iter().position(|row| row.len() != n) {
        return Err(Error::InvalidPmf(format!("cost row {} is not length {n}", r + 1)));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite { y: f64::NAN, value: f64::NAN });
    }

    let best = matching_cost(cost, &hungarian_permutation(cost));
    let scale = cost.iter().flatten().fold(0.0f64, |a, c| a.max(c.abs())) * n as f64;
    let tol = tie_tol(scale);

    // Fix rows in order to the smallest column that still admits an optimum.
    let mut perm = vec![usize::MAX; n];
    let mut fixed = 0.0;
    let mut free_cols: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let rest_rows: Vec<usize> = (i + 1..n).collect();
        let mut chosen = None;
        for (k, &j) in free_cols.iter().enumerate() {
            let rest_cols: Vec<usize> =
                free_cols.iter().copied().filter(|&c| c != j).collect();
            let sub = sub_matrix(cost, &rest_rows, &rest_cols);
            let tail = matching_cost(&sub, &hungarian_permutation(&sub));
            if fixed + cost[i][j] + tail <= best + tol {
                chosen = Some(k);
                break;
            }
        }
        // The optimum is always reachable; fall back to its column on round-off.
        let k = chosen.unwrap_or_else(|| {
            let sub = sub_matrix(cost, &(i..n).collect::<Vec<_>>(), &free_cols);
            hungarian_permutation(&sub)[0]
        });
        let j = free_cols.remove(k);
        perm[i] = j;
        fixed += cost[i][j];
    }

    let tuples = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| AssociatedSymbol::new(vec![i + 1, j + 1], n))
        .collect::<Result<Vec<_>>>()?;
    Ok(Assignment { total_cost: matching_cost(cost, &perm), tuples })
}

/// `h[i1][i2]` for a two-state tensor.
pub fn cost_matrix(costs: &CostTensor) -> Result<Vec<Vec<f64>>> {
    if costs.q() != 2 {
        return Err(Error::InvalidPmf(format!("need Q = 2, got Q = {}", costs.q())));
    }
    let m = costs.m();
    Ok(costs.values().chunks(m).map(<[f64]>::to_vec).collect())
}

struct Search<'a> {
    m: usize,
    values: &'a [f64],
    strides: Vec<usize>,
}

impl Search<'_> {
    /// Rank of the tuple with first index `row` (0-based) and tail `tail` (0-based).
    fn rank(&self, row: usize, tail: &[usize]) -> usize {
        row * self.strides[0] + tail.iter().zip(&self.strides[1..]).map(|(i, s)| i * s).sum::<usize>()
    }

    /// All tails drawing coordinate `c` from `free[c]`, in lexicographic order.
    fn tails(&self, free: &[u16]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for &mask in free {
            let mut next = Vec::new();
            for prefix in &out {
                for i in 0..self.m {
                    if mask & (1 << i) != 0 {
                        let mut t = prefix.clone();
                        t.push(i);
                        next.push(t);
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Sum over rows `from..M` of each row's cheapest tail within `free`.
    fn bound(&self, from: usize, free: &[u16]) -> f64 {
        if from >= self.m {
            return 0.0;
        }
        let tails = self.tails(free);
        (from..self.m)
            .map(|row| {
                tails
                    .iter()
                    .map(|t| self.values[self.rank(row, t)])
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    }

    fn take(free: &[u16], tail: &[usize]) -> Vec<u16> {
        free.iter().zip(tail).map(|(mask, &i)| mask & !(1 << i)).collect()
    }

    /// Depth-first search for the optimal cost; children by ascending cost.
    fn best_cost(&self, row: usize, free: &[u16], partial: f64, incumbent: &mut f64, tol: f64) {
        if row == self.m {
            if partial < *incumbent {
                *incumbent = partial;
            }
            return;
        }
        let mut kids: Vec<(f64, Vec<usize>)> = self
            .tails(free)
            .into_iter()
            .map(|t| (self.values[self.rank(row, &t)], t))
            .collect();
        kids.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (c, tail) in kids {
            let rest = Self::take(free, &tail);
            if partial + c + self.bound(row + 1, &rest) >= *incumbent - tol {
                continue;
            }
            self.best_cost(row + 1, &rest, partial + c, incumbent, tol);
        }
    }

    /// First tuple sequence in lexicographic order whose cost is within `tol` of `target`.
    fn lex_first(
        &self,
        row: usize,
        free: &[u16],
        partial: f64,
        target: f64,
        tol: f64,
        path: &mut Vec<Vec<usize>>,
    ) -> bool {
        if row == self.m {
            return partial <= target + tol;
        }
        for tail in self.tails(free) {
            let c = self.values[self.rank(row, &tail)];
            let rest = Self::take(free, &tail);
            if partial + c + self.bound(row + 1, &rest) > target + tol {
                continue;
            }
            path.push(tail);
            if self.lex_first(row + 1, &rest, partial + c, target, tol, path) {
                return true;
            }
            path.pop();
        }
        false
    }
}

/// Exact minimum-cost axial `Q`-dimensional assignment by branch and bound.
///
/// Nodes fix one tuple per first-coordinate value, left to right, and are
/// bounded by the per-row minima over the still-unused indices.
pub fn multidim_assignment(costs: &CostTensor) -> Result<Assignment> {
    let (m, q) = (costs.m(), costs.q());
    if m > MAX_EXACT_M || q > MAX_EXACT_Q {
        return Err(Error::BudgetExceeded(format!(
            "M = {m}, Q = {q}; exact solver handles M <= {MAX_EXACT_M}, Q <= {MAX_EXACT_Q}"
        )));
    }
    if q == 1 {
        let tuples = (1..=m)
            .map(|i| AssociatedSymbol::new(vec![i], m))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Assignment { total_cost: costs.values().iter().sum(), tuples });
    }
    let strides: Vec<usize> = (0..q).map(|k| m.pow((q - 1 - k) as u32)).collect();
    let search = Search { m, values: costs.values(), strides };
    let all: u16 = ((1u32 << m) - 1) as u16;
    let free = vec![all; q - 1];
    let scale = costs.values().iter().fold(0.0f64, |a, c| a.max(c.abs())) * m as f64;
    let tol = tie_tol(scale);

    // Greedy incumbent: every row takes its cheapest compatible tail.
    let mut incumbent = {
        let mut f = free.clone();
        let mut total = 0.0;
        for row in 0..m {
            let (c, t) = search
                .tails(&f)
                .into_iter()
                .map(|t| (search.values[search.rank(row, &t)], t))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("a free tail always remains");
            total += c;
            f = Search::take(&f, &t);
        }
        total
    };
    search.best_cost(0, &free, 0.0, &mut incumbent, tol);

    let mut path = Vec::with_capacity(m);
    let found = search.lex_first(0, &free, 0.0, incumbent, tol, &mut path);
    debug_assert!(found, "an optimal assignment must be reachable");

    let tuples = path
        .iter()
        .enumerate()
        .map(|(row, tail)| {
            let mut ix = vec![row + 1];
            ix.extend(tail.iter().map(|i| i + 1));
            AssociatedSymbol::new(ix, m)
        })
        .collect::<Result<Vec<_>>>()?;
    let total_cost = tuples.iter().map(|t| costs.get(t)).sum();
    Ok(Assignment { tuples, total_cost })
}

/// Hungarian for `Q = 2`, branch and bound otherwise.
pub fn best_assignment(costs: &CostTensor) -> Result<Assignment> {
    if costs.q() == 2 {
        hungarian(&cost_matrix(costs)?)
    } else {
        multidim_assignment(costs)
    }
}

/// Every coordinate-disjoint tuple family, in lexicographic order, provided
/// there are at most `limit` of them (`(M!)^{Q-1}` in total).
pub fn all_assignments(m: usize, q: usize, limit: usize) -> Option<Vec<Vec<AssociatedSymbol>>> {
    let fact: usize = (1..=m).product();
    let count = (fact as u128).checked_pow(q.saturating_sub(1) as u32)?;
    if count > limit as u128 {
        return None;
    }
    let perms = permutations(m);
    let mut out = Vec::with_capacity(count as usize);
    let mut choice = vec![0usize; q.saturating_sub(1)];
    loop {
        let tuples = (0..m)
            .map(|row| {
                let mut ix = vec![row + 1];
                ix.extend(choice.iter().map(|&c| perms[c][row] + 1));
                AssociatedSymbol::new(ix, m).expect("indices in range")
            })
            .collect();
        out.push(tuples);
        let mut k = choice.len();
        loop {
            if k == 0 {
                return Some(out);
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

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// `I(T;Y)` in bits for the uniform pmf on the assignment's tuples.
pub fn assignment_rate(a: &Assignment, spec: &ChannelSpec) -> Result<f64> {
    mutual_information(&a.pmf(), spec)
}

/// As [`assignment_rate`], reusing a precomputed cost tensor.
pub fn assignment_rate_with_costs(
    a: &Assignment,
    spec: &ChannelSpec,
    costs: &CostTensor,
    policy: &GridPolicy,
) -> Result<f64> {
    mutual_information_with_costs(&a.pmf(), spec, costs, policy)
}
