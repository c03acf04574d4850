//! Composite Gauss–Legendre quadrature on a fixed panel decomposition.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        // Roots are symmetric; solve for the positive half with Newton.
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// The cached 32-point rule used by the default grid policy.
    pub fn order32() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(32))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Integration window `[lo, hi]` split into `panels` equal panels, each
/// integrated with a `nodes_per_panel`-point Gauss–Legendre rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    lo: f64,
    hi: f64,
    panels: usize,
    nodes_per_panel: usize,
}

impl QuadratureGrid {
    pub fn new(lo: f64, hi: f64, panels: usize, nodes_per_panel: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if panels < 1 || nodes_per_panel < 1 {
            return Err(Error::InvalidGrid("need at least one panel and one node".into()));
        }
        Ok(Self { lo, hi, panels, nodes_per_panel })
    }

    /// Grid on `[lo, hi]` with panels no wider than `max_panel_width`.
    pub fn with_panel_width(
        lo: f64,
        hi: f64,
        max_panel_width: f64,
        nodes_per_panel: usize,
    ) -> Result<Self> {
        if !(max_panel_width.is_finite() && max_panel_width > 0.0) {
            return Err(Error::InvalidGrid(format!("bad panel width {max_panel_width}")));
        }
        let panels = ((hi - lo) / max_panel_width).ceil().max(1.0) as usize;
        Self::new(lo, hi, panels, nodes_per_panel)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    pub fn num_points(&self) -> usize {
        self.panels * self.nodes_per_panel
    }

    /// Every `(y, weight)` node in panel order, then node order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let owned;
        let rule = if self.nodes_per_panel == 32 {
            GaussLegendre::order32()
        } else {
            owned = GaussLegendre::new(self.nodes_per_panel);
            &owned
        };
        let width = (self.hi - self.lo) / self.panels as f64;
        let half = 0.5 * width;
        let mut out = Vec::with_capacity(self.num_points());
        for k in 0..self.panels {
            let mid = self.lo + (k as f64 + 0.5) * width;
            for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                out.push((mid + half * x, half * w));
            }
        }
        out
    }

    /// `∫ f` over the grid; sums within a panel first, then across panels.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let pts = self.points();
        pts.chunks(self.nodes_per_panel)
            .map(|panel| panel.iter().map(|&(y, w)| w * f(y)).sum::<f64>())
            .sum()
    }
}
