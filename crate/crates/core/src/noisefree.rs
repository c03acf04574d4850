//! Zero-error one-shot codes for the noise-free channel `Y = X + S`.
//!
//! A family of `M` associated symbols is a zero-error code when the output
//! multisets `{x_{i_q} + s_q : q = 1..Q}` of different messages share no value.
//! Output values are compared exactly after snapping: all values of an
//! instance are sorted and neighbours closer than `1e-12 · max(1, max|v|)`
//! are identified.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{AssociatedSymbol, ChannelSpec, PrecoderCode};

const SNAP_TOL: f64 = 1e-12;
const AP_TOL: f64 = 1e-9;

/// The `Q` outputs one message can produce, one per interference level.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMultiset {
    pub elements: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroErrorCode {
    pub code: PrecoderCode,
    /// `multisets[m].elements[q-1] = x_{i_q} + s_q` for message `m`.
    pub multisets: Vec<OutputMultiset>,
}

impl ZeroErrorCode {
    pub fn from_code(code: PrecoderCode, spec: &ChannelSpec) -> Self {
        let multisets = code
            .symbols()
            .iter()
            .map(|t| OutputMultiset { elements: t.output_means(spec) })
            .collect();
        Self { code, multisets }
    }

    /// Every state coordinate uses each constellation point exactly once.
    pub fn has_uniform_marginals(&self, m: usize) -> bool {
        let symbols = self.code.symbols();
        let q = symbols.first().map_or(0, AssociatedSymbol::len);
        symbols.len() == m
            && (1..=q).all(|s| {
                let mut seen = vec![false; m + 1];
                symbols.iter().all(|t| !std::mem::replace(&mut seen[t.index(s)], true))
            })
    }
}

/// Integer ids for real values; equal ids iff the values snap together.
/// Ids are increasing in value.
fn snap_ids(values: &[f64]) -> Vec<usize> {
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = SNAP_TOL * scale;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ids = vec![0; values.len()];
    let mut id = 0;
    for w in 0..order.len() {
        if w > 0 && values[order[w]] - values[order[w - 1]] > tol {
            id += 1;
        }
        ids[order[w]] = id;
    }
    ids
}

/// True iff consecutive gaps of the sorted points agree within relative `1e-9`.
pub fn is_arithmetic_progression(constellation: &[f64]) -> bool {
    let mut xs = constellation.to_vec();
    xs.sort_by(f64::total_cmp);
    if xs.len() <= 2 {
        return true;
    }
    let d0 = xs[1] - xs[0];
    xs.windows(2).all(|w| ((w[1] - w[0]) - d0).abs() <= AP_TOL * d0.abs())
}

/// True iff no value occurs in two different multisets.
/// Repeats inside one multiset are allowed.
pub fn multisets_disjoint(multisets: &[OutputMultiset]) -> bool {
    let flat: Vec<f64> = multisets.iter().flat_map(|m| m.elements.iter().copied()).collect();
    let ids = snap_ids(&flat);
    let mut owner: HashMap<usize, usize> = HashMap::new();
    let mut k = 0;
    for (msg, ms) in multisets.iter().enumerate() {
        for _ in &ms.elements {
            if *owner.entry(ids[k]).or_insert(msg) != msg {
                return false;
            }
            k += 1;
        }
    }
    true
}

pub fn verify_zero_error(code: &ZeroErrorCode) -> bool {
    multisets_disjoint(&code.multisets)
}

/// The message whose multiset contains `y`, if any.
pub fn decode_noiseless(y: f64, code: &ZeroErrorCode) -> Option<usize> {
    let mut flat: Vec<f64> = code.multisets.iter().flat_map(|m| m.elements.iter().copied()).collect();
    flat.push(y);
    let ids = snap_ids(&flat);
    let target = ids[ids.len() - 1];
    let mut k = 0;
    for (msg, ms) in code.multisets.iter().enumerate() {
        for _ in &ms.elements {
            if ids[k] == target {
                return Some(msg);
            }
            k += 1;
        }
    }
    None
}

/// Builds `M` mutually disjoint output multisets by induction on the state,
/// then reads off the associated symbols.
///
/// With levels sorted ascending, step `q` adds `Y^(q) = {x_k + s_q}` (points
/// sorted ascending). New outputs that already occur in some multiset are
/// appended to that multiset; the others go to the multisets not yet extended
/// at this step, both in ascending order. For an arithmetic-progression
/// constellation the reused outputs are exactly the prefix up to the largest
/// one, and each lies in a different multiset.
///
/// Requires an arithmetic progression when `Q ≥ 3`; for `Q ≤ 2` any
/// constellation works.
pub fn build_zero_error_code(spec: &ChannelSpec) -> Result<ZeroErrorCode> {
    let (m, q) = (spec.m(), spec.q());
    if q >= 3 && !is_arithmetic_progression(spec.constellation()) {
        return Err(Error::NotArithmetic);
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| spec.constellation()[a].total_cmp(&spec.constellation()[b]));

    let values: Vec<f64> = spec
        .interference_levels()
        .iter()
        .flat_map(|s| order.iter().map(move |&k| spec.constellation()[k] + s))
        .collect();
    let ids = snap_ids(&values);
    let id_of = |state: usize, k: usize| ids[state * m + k];

    // tails[msg][state] = position in the sorted constellation
    let mut tails: Vec<Vec<usize>> = (0..m).map(|k| vec![k]).collect();
    let mut owner: HashMap<usize, usize> = (0..m).map(|k| (id_of(0, k), k)).collect();

    for state in 1..q {
        let mut extended = vec![false; m];
        let mut leftovers = Vec::new();
        for k in 0..m {
            match owner.get(&id_of(state, k)) {
                Some(&msg) => {
                    if extended[msg] {
                        return Err(Error::Construction(format!(
                            "outputs at state {} collide in message {msg}",
                            state + 1
                        )));
                    }
                    extended[msg] = true;
                    tails[msg].push(k);
                }
                None => leftovers.push(k),
            }
        }
        let open: Vec<usize> = (0..m).filter(|&msg| !extended[msg]).collect();
        debug_assert_eq!(open.len(), leftovers.len());
        for (&msg, &k) in open.iter().zip(&leftovers) {
            tails[msg].push(k);
        }
        for (msg, t) in tails.iter().enumerate() {
            owner.insert(id_of(state, t[state]), msg);
        }
    }

    let symbols = tails
        .iter()
        .map(|t| AssociatedSymbol::new(t.iter().map(|&k| order[k] + 1).collect(), m))
        .collect::<Result<Vec<_>>>()?;
    let code = ZeroErrorCode::from_code(PrecoderCode::new(symbols, spec)?, spec);
    if !verify_zero_error(&code) {
        return Err(Error::Construction("built multisets are not disjoint".into()));
    }
    Ok(code)
}

/// Largest instance [`exhaustive_search`] accepts.
pub const MAX_SEARCH_M: usize = 5;
pub const MAX_SEARCH_Q: usize = 3;

/// Searches every family of `M` associated symbols (in lexicographic order of
/// families) for one with pairwise-disjoint output multisets. Returns the
/// first such family, or `None` if there is no zero-error code of rate
/// `log2 M`.
pub fn exhaustive_search(spec: &ChannelSpec) -> Result<Option<ZeroErrorCode>> {
    let (m, q) = (spec.m(), spec.q());
    if m > MAX_SEARCH_M || q > MAX_SEARCH_Q {
        return Err(Error::BudgetExceeded(format!(
            "M = {m}, Q = {q}; exhaustive search handles M <= {MAX_SEARCH_M}, Q <= {MAX_SEARCH_Q}"
        )));
    }
    let values: Vec<f64> = spec
        .interference_levels()
        .iter()
        .flat_map(|s| spec.constellation().iter().map(move |x| x + s))
        .collect();
    let ids = snap_ids(&values);
    let n = spec.num_symbols();
    let masks: Vec<u64> = (0..n)
        .map(|r| {
            let t = AssociatedSymbol::from_rank(r, m, q);
            t.indices()
                .iter()
                .enumerate()
                .fold(0u64, |acc, (s, &i)| acc | 1 << ids[s * m + (i - 1)])
        })
        .collect();

    fn dfs(masks: &[u64], start: usize, used: u64, need: usize, picked: &mut Vec<usize>) -> bool {
        if need == 0 {
            return true;
        }
        for r in start..masks.len() {
            if masks.len() - r < need {
                return false;
            }
            if masks[r] & used == 0 {
                picked.push(r);
                if dfs(masks, r + 1, used | masks[r], need - 1, picked) {
                    return true;
                }
                picked.pop();
            }
        }
        false
    }

    let mut picked = Vec::with_capacity(m);
    if !dfs(&masks, 0, 0, m, &mut picked) {
        return Ok(None);
    }
    let symbols = picked.iter().map(|&r| AssociatedSymbol::from_rank(r, m, q)).collect();
    Ok(Some(ZeroErrorCode::from_code(PrecoderCode::new(symbols, spec)?, spec)))
}

/// Human-readable certificate: tuples, multisets and the disjointness verdict.
pub fn certificate(code: &ZeroErrorCode) -> String {
    let mut out = String::new();
    for (msg, (t, ms)) in code.code.symbols().iter().zip(&code.multisets).enumerate() {
        let elems: Vec<String> = ms.elements.iter().map(|v| format!("{v}")).collect();
        out.push_str(&format!("message {msg}: tuple {t} outputs {{{}}}\n", elems.join(", ")));
    }
    let verdict = if verify_zero_error(code) { "PASS" } else { "FAIL" };
    out.push_str(&format!("disjointness: {verdict}\n"));
    out
}
