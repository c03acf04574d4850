//! Linear programs over joint pmfs with fixed marginals, a Blahut–Arimoto
//! capacity oracle for the output-discretized associated channel, and
//! support reduction of arbitrary pmfs.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::entropy::{cost_tensor, output_entropy, CostTensor, GridPolicy, Mixture};
use crate::error::{Error, Result};
use crate::model::{AssociatedSymbol, ChannelSpec, JointPmf, MarginalSet};
use crate::simplex::{self, EqualityLp};

/// A basic optimal solution of a marginal-constrained LP.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub pmf: JointPmf,
    /// `Σ h·p` in nats.
    pub objective: f64,
    pub iterations: usize,
    pub basis_size: usize,
}

/// Largest support a basic solution can have: `MQ − Q + 1`.
pub fn support_bound(m: usize, q: usize) -> usize {
    m * q - q + 1
}

/// Row of the marginal constraint `(state q, index i)` (both 0-based) once the
/// last row of every state after the first is dropped as redundant.
fn constraint_row(m: usize, q: usize, i: usize) -> Option<usize> {
    if q == 0 {
        Some(i)
    } else if i + 1 < m {
        Some(m + (q - 1) * (m - 1) + i)
    } else {
        None
    }
}

fn marginal_lp(costs: &CostTensor, targets: &MarginalSet) -> EqualityLp {
    let (m, q) = (costs.m(), costs.q());
    let rows = support_bound(m, q);
    let mut rhs = vec![0.0; rows];
    for (s, row) in targets.rows().iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            if let Some(r) = constraint_row(m, s, i) {
                rhs[r] = v;
            }
        }
    }
    let columns = (0..costs.values().len())
        .map(|rank| {
            let t = AssociatedSymbol::from_rank(rank, m, q);
            t.indices()
                .iter()
                .enumerate()
                .filter_map(|(s, &i)| constraint_row(m, s, i - 1).map(|r| (r, 1.0)))
                .collect()
        })
        .collect();
    EqualityLp { rows, columns, rhs, cost: costs.values().to_vec() }
}

/// `min Σ h·p` subject to the per-state marginals of `p` equal to `targets`.
pub fn solve_marginal_lp(costs: &CostTensor, targets: &MarginalSet) -> Result<LpSolution> {
    let (m, q) = (costs.m(), costs.q());
    if (targets.m(), targets.q()) != (m, q) {
        return Err(Error::InvalidPmf(format!(
            "targets are {}x{}, costs are over M={m}, Q={q}",
            targets.q(),
            targets.m()
        )));
    }
    let lp = marginal_lp(costs, targets);
    let out = simplex::solve(&lp, 10 * m * q)?;
    let total: f64 = out.x.iter().sum();
    let probs = out.x.iter().map(|p| p / total).collect();
    Ok(LpSolution {
        pmf: JointPmf::new(m, q, probs)?,
        objective: out.objective,
        iterations: out.iterations,
        basis_size: out.basis_size,
    })
}

/// The uniform-transmission LP: every marginal fixed to `1/M`.
pub fn solve_uniform_lp(costs: &CostTensor) -> Result<LpSolution> {
    solve_marginal_lp(costs, &MarginalSet::uniform(costs.m(), costs.q()))
}

/// Uniform-transmission optimum together with its achieved rate.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformTransmission {
    pub lp: LpSolution,
    /// `h(Y)` under uniform marginals, nats.
    pub output_entropy: f64,
    pub rate_bits: f64,
}

/// Solves the uniform LP and reports `h(Y | uniform marginals) − objective` in bits.
pub fn uniform_transmission(
    spec: &ChannelSpec,
    costs: &CostTensor,
    policy: &GridPolicy,
) -> Result<UniformTransmission> {
    let lp = solve_uniform_lp(costs)?;
    let hy = output_entropy(&MarginalSet::uniform(spec.m(), spec.q()), spec, policy)?;
    let rate_bits = (hy - lp.objective) / LN_2;
    Ok(UniformTransmission { lp, output_entropy: hy, rate_bits })
}

/// Re-solves the marginal LP with `p`'s own marginals: same `h(Y)`, no larger
/// `h(Y|T)`, and at most `MQ − Q + 1` symbols in the support.
pub fn support_reduce(spec: &ChannelSpec, p: &JointPmf, costs: &CostTensor) -> Result<LpSolution> {
    debug_assert_eq!((p.m(), p.q()), (spec.m(), spec.q()));
    let targets = MarginalSet::new(p.marginals().rows().to_vec())?;
    solve_marginal_lp(costs, &targets)
}

/// Settings for [`blahut_arimoto`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaConfig {
    /// Output bin width in units of σ.
    pub step_sigmas: f64,
    /// Padding of the output window in units of σ.
    pub tail_sigmas: f64,
    /// Stop once `max_t D_t − I_L` falls below this, in nats.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BaConfig {
    fn default() -> Self {
        Self { step_sigmas: 1.0 / 20.0, tail_sigmas: 10.0, tol: 1e-7, max_iter: 10_000 }
    }
}

/// Capacity of the output-discretized associated channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub pmf: JointPmf,
    /// Lower bound `I_L` at termination, bits.
    pub capacity_bits: f64,
    /// Upper bound `max_t D(W_t ‖ q)` at termination, bits.
    pub upper_bound_bits: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `I_L` after every iteration, bits.
    pub lower_bounds: Vec<f64>,
}

/// Transition matrix of the associated channel on a uniform output grid:
/// `W[t][k] ∝ f_{Y|T}(y_k | t)`, each row renormalized.
pub(crate) struct DiscreteChannel {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
}

impl DiscreteChannel {
    pub fn new(spec: &ChannelSpec, step_sigmas: f64, tail_sigmas: f64) -> Result<Self> {
        let policy = GridPolicy { tail_sigmas, ..GridPolicy::default() };
        let (lo, hi) = policy.window(spec)?;
        let step = step_sigmas * spec.sigma();
        let outputs = ((hi - lo) / step).ceil() as usize + 1;
        let inputs = spec.num_symbols();
        let (m, q) = (spec.m(), spec.q());
        let rows = (0..inputs)
            .into_par_iter()
            .map(|r| {
                let mix = Mixture::for_symbol(&AssociatedSymbol::from_rank(r, m, q), spec)?;
                let mut row: Vec<f64> =
                    (0..outputs).map(|k| mix.pdf(lo + k as f64 * step) * step).collect();
                let z: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= z);
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { inputs, outputs, w: rows.concat() })
    }

    fn row(&self, t: usize) -> &[f64] {
        &self.w[t * self.outputs..(t + 1) * self.outputs]
    }
}

/// Blahut–Arimoto over all `M^Q` associated symbols on a discretized output.
///
/// Returns a partial result with `converged = false` when `max_iter` is hit.
pub fn blahut_arimoto(spec: &ChannelSpec, config: &BaConfig) -> Result<CapacityResult> {
    let ch = DiscreteChannel::new(spec, config.step_sigmas, config.tail_sigmas)?;
    let n = ch.inputs;
    let self_info: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|t| ch.row(t).iter().filter(|&&w| w > 0.0).map(|w| w * w.ln()).sum())
        .collect();

    let mut p = vec![1.0 / n as f64; n];
    let mut lower_bounds = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;

    while iterations < config.max_iter {
        iterations += 1;
        let ln_q: Vec<f64> = (0..ch.outputs)
            .into_par_iter()
            .map(|k| {
                let qk: f64 = (0..n).map(|t| p[t] * ch.w[t * ch.outputs + k]).sum();
                qk.max(1e-300).ln()
            })
            .collect();
        let d: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|t| {
                let cross: f64 = ch
                    .row(t)
                    .iter()
                    .zip(&ln_q)
                    .filter(|(&w, _)| w > 0.0)
                    .map(|(w, lq)| w * lq)
                    .sum();
                self_info[t] - cross
            })
            .collect();
        upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = p.iter().zip(&d).map(|(p, d)| p * (d - upper).exp()).sum();
        lower = upper + z.ln();
        lower_bounds.push(lower / LN_2);
        if upper - lower < config.tol {
            converged = true;
            break;
        }
        for (pt, dt) in p.iter_mut().zip(&d) {
            *pt *= (dt - upper).exp() / z;
        }
    }

    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Ok(CapacityResult {
        pmf: JointPmf::new(spec.m(), spec.q(), p)?,
        capacity_bits: lower / LN_2,
        upper_bound_bits: upper / LN_2,
        converged,
        iterations,
        lower_bounds,
    })
}

/// Capacity pipeline: Blahut–Arimoto, then support reduction of its output.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityPipeline {
    pub ba: CapacityResult,
    pub reduced: LpSolution,
    /// Mutual information of the reduced pmf on the continuous output, bits.
    pub reduced_rate_bits: f64,
}

pub fn capacity_pipeline(
    spec: &ChannelSpec,
    config: &BaConfig,
    policy: &GridPolicy,
) -> Result<CapacityPipeline> {
    let ba = blahut_arimoto(spec, config)?;
    let costs = cost_tensor(spec, policy)?;
    let reduced = support_reduce(spec, &ba.pmf, &costs)?;
    let hy = output_entropy(&reduced.pmf.marginals(), spec, policy)?;
    let reduced_rate_bits = (hy - reduced.objective) / LN_2;
    Ok(CapacityPipeline { ba, reduced, reduced_rate_bits })
}
