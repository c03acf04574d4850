//! Likelihoods, output densities and differential entropies of the
//! associated channel. All entropies are in nats; mutual information is
//! converted to bits at the API boundary.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AssociatedSymbol, ChannelSpec, JointPmf, MarginalSet};
pub use crate::quadrature::{GaussLegendre, QuadratureGrid};

/// Densities below this contribute nothing to `-∫ p ln p`.
const DENSITY_FLOOR: f64 = 1e-300;

/// How [`QuadratureGrid`]s are laid out for a spec: panels of width
/// `panel_sigmas · σ` over the output range padded by `tail_sigmas · σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    pub nodes_per_panel: usize,
    pub panel_sigmas: f64,
    pub tail_sigmas: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self { nodes_per_panel: 32, panel_sigmas: 0.5, tail_sigmas: 10.0 }
    }
}

impl GridPolicy {
    /// Output window `[min x + min s − tail·σ, max x + max s + tail·σ]`.
    pub fn window(&self, spec: &ChannelSpec) -> Result<(f64, f64)> {
        let sigma = require_noise(spec)?;
        let xs = spec.constellation();
        let ss = spec.interference_levels();
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min) + ss[0];
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + ss[ss.len() - 1];
        Ok((min - self.tail_sigmas * sigma, max + self.tail_sigmas * sigma))
    }

    pub fn grid(&self, spec: &ChannelSpec) -> Result<QuadratureGrid> {
        let sigma = require_noise(spec)?;
        let (lo, hi) = self.window(spec)?;
        QuadratureGrid::with_panel_width(lo, hi, self.panel_sigmas * sigma, self.nodes_per_panel)
    }
}

fn require_noise(spec: &ChannelSpec) -> Result<f64> {
    if spec.noise_power() > 0.0 {
        Ok(spec.sigma())
    } else {
        Err(Error::DegenerateNoise)
    }
}

/// Gaussian density with the given variance.
pub fn gaussian_pdf(z: f64, variance: f64) -> f64 {
    (-0.5 * z * z / variance).exp() / (2.0 * PI * variance).sqrt()
}

/// `(1/2) ln(2πe·variance)`.
pub fn gaussian_entropy(variance: f64) -> f64 {
    0.5 * (2.0 * PI * std::f64::consts::E * variance).ln()
}

/// Finite Gaussian mixture with a shared variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    means: Vec<f64>,
    weights: Vec<f64>,
    variance: f64,
    norm: f64,
}

impl Mixture {
    pub fn new(means: Vec<f64>, weights: Vec<f64>, variance: f64) -> Self {
        debug_assert_eq!(means.len(), weights.len());
        let norm = 1.0 / (2.0 * PI * variance).sqrt();
        Self { means, weights, variance, norm }
    }

    /// `f_{Y|T}(·|t)`: component `j` has mean `x_{i_j} + s_j` and weight `r_j`.
    pub fn for_symbol(t: &AssociatedSymbol, spec: &ChannelSpec) -> Result<Self> {
        require_noise(spec)?;
        Ok(Self::new(
            t.output_means(spec),
            spec.interference_probs().to_vec(),
            spec.noise_power(),
        ))
    }

    /// Output density induced by per-state marginals.
    pub fn for_marginals(marginals: &MarginalSet, spec: &ChannelSpec) -> Result<Self> {
        require_noise(spec)?;
        let mut means = Vec::new();
        let mut weights = Vec::new();
        for ((row, &s), &r) in marginals
            .rows()
            .iter()
            .zip(spec.interference_levels())
            .zip(spec.interference_probs())
        {
            for (&px, &x) in row.iter().zip(spec.constellation()) {
                means.push(x + s);
                weights.push(r * px);
            }
        }
        Ok(Self::new(means, weights, spec.noise_power()))
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let inv = -0.5 / self.variance;
        let mut acc = 0.0;
        for (&mu, &w) in self.means.iter().zip(&self.weights) {
            let z = y - mu;
            acc += w * (inv * z * z).exp();
        }
        acc * self.norm
    }

    /// `ln pdf(y)` via log-sum-exp; finite even where `pdf` underflows.
    pub fn ln_pdf(&self, y: f64) -> f64 {
        let inv = -0.5 / self.variance;
        let mut best = f64::NEG_INFINITY;
        for (&mu, &w) in self.means.iter().zip(&self.weights) {
            if w > 0.0 {
                let z = y - mu;
                best = best.max(w.ln() + inv * z * z);
            }
        }
        if best == f64::NEG_INFINITY {
            return best;
        }
        let mut acc = 0.0;
        for (&mu, &w) in self.means.iter().zip(&self.weights) {
            if w > 0.0 {
                let z = y - mu;
                acc += (w.ln() + inv * z * z - best).exp();
            }
        }
        best + acc.ln() + self.norm.ln()
    }
}

/// `f_{Y|T}(y|t) = Σ_j r_j φ(y − x_{i_j} − s_j; P_N)`.
pub fn mixture_pdf(t: &AssociatedSymbol, y: f64, spec: &ChannelSpec) -> Result<f64> {
    Ok(Mixture::for_symbol(t, spec)?.pdf(y))
}

/// `p_Y(y) = Σ_q r_q Σ_i P(X_q = x_i) φ(y − x_i − s_q; P_N)`.
pub fn output_pdf(marginals: &MarginalSet, y: f64, spec: &ChannelSpec) -> Result<f64> {
    Ok(Mixture::for_marginals(marginals, spec)?.pdf(y))
}

/// `-∫ p ln p` over `grid`, with `0 ln 0 = 0`.
pub fn differential_entropy(pdf: impl Fn(f64) -> f64, grid: &QuadratureGrid) -> Result<f64> {
    let pts = grid.points();
    let mut total = 0.0;
    for panel in pts.chunks(grid.nodes_per_panel()) {
        let mut acc = 0.0;
        for &(y, w) in panel {
            let p = pdf(y);
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NonFinite { y, value: p });
            }
            if p >= DENSITY_FLOOR {
                acc -= w * p * p.ln();
            }
        }
        total += acc;
    }
    Ok(total)
}

/// Conditional differential entropies `h_{i_1…i_Q}` (nats), indexed by symbol rank.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor {
    m: usize,
    q: usize,
    values: Vec<f64>,
}

impl CostTensor {
    pub fn from_values(m: usize, q: usize, values: Vec<f64>) -> Result<Self> {
        let size = m.pow(q as u32);
        if values.len() != size {
            return Err(Error::InvalidPmf(format!(
                "cost tensor needs {size} entries, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { y: f64::NAN, value: *v });
        }
        Ok(Self { m, q, values })
    }

    /// `M×M` matrix as a two-state tensor; `rows[i1-1][i2-1] = h_{i1 i2}`.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_values(m, 2, values)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, t: &AssociatedSymbol) -> f64 {
        self.values[t.rank(self.m)]
    }

    /// `Σ_t h_t p(t)`, the conditional entropy `h(Y|T)` in nats.
    pub fn expected(&self, p: &JointPmf) -> f64 {
        self.values.iter().zip(p.probs()).map(|(h, p)| h * p).sum()
    }
}

/// Entropy of `f_{Y|T}(·|t)` on the spec's default grid.
pub fn symbol_entropy(t: &AssociatedSymbol, spec: &ChannelSpec, grid: &QuadratureGrid) -> Result<f64> {
    let mix = Mixture::for_symbol(t, spec)?;
    differential_entropy(|y| mix.pdf(y), grid)
}

/// Every `h_{i_1…i_Q}`. Entries are computed independently, so the result
/// does not depend on the rayon pool size.
pub fn cost_tensor(spec: &ChannelSpec, policy: &GridPolicy) -> Result<CostTensor> {
    let grid = policy.grid(spec)?;
    let (m, q) = (spec.m(), spec.q());
    let values = (0..spec.num_symbols())
        .into_par_iter()
        .map(|r| symbol_entropy(&AssociatedSymbol::from_rank(r, m, q), spec, &grid))
        .collect::<Result<Vec<_>>>()?;
    CostTensor::from_values(m, q, values)
}

/// `h(Y)` in nats for the output induced by `marginals`.
pub fn output_entropy(marginals: &MarginalSet, spec: &ChannelSpec, policy: &GridPolicy) -> Result<f64> {
    let grid = policy.grid(spec)?;
    let mix = Mixture::for_marginals(marginals, spec)?;
    differential_entropy(|y| mix.pdf(y), &grid)
}

/// `I(T;Y)` in bits using precomputed conditional entropies.
pub fn mutual_information_with_costs(
    p: &JointPmf,
    spec: &ChannelSpec,
    costs: &CostTensor,
    policy: &GridPolicy,
) -> Result<f64> {
    let hy = output_entropy(&p.marginals(), spec, policy)?;
    Ok((hy - costs.expected(p)) / LN_2)
}

/// `I(T;Y) = h(Y) − Σ_t p(t) h_t`, in bits. Only symbols with nonzero
/// probability are integrated.
pub fn mutual_information(p: &JointPmf, spec: &ChannelSpec) -> Result<f64> {
    let policy = GridPolicy::default();
    let grid = policy.grid(spec)?;
    let hy = output_entropy(&p.marginals(), spec, &policy)?;
    let (m, q) = (spec.m(), spec.q());
    let terms = p
        .probs()
        .par_iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(r, &w)| Ok(w * symbol_entropy(&AssociatedSymbol::from_rank(r, m, q), spec, &grid)?))
        .collect::<Result<Vec<f64>>>()?;
    let hyt: f64 = terms.iter().sum();
    Ok((hy - hyt) / LN_2)
}
