//! One-dimensional rules and their tensor products.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    #[default]
    GaussLegendre,
    MidpointComposite,
}

/// Points per face edge and the rule used on each face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n_q: usize,
    #[serde(default)]
    pub rule: Rule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            n_q: 32,
            rule: Rule::GaussLegendre,
        }
    }
}

impl QuadratureSpec {
    pub fn gauss(n_q: usize) -> Self {
        QuadratureSpec {
            n_q,
            rule: Rule::GaussLegendre,
        }
    }

    pub fn midpoint(n_q: usize) -> Self {
        QuadratureSpec {
            n_q,
            rule: Rule::MidpointComposite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_q < 2 {
            return Err(Error::invalid(format!("n_q = {} must be at least 2", self.n_q)));
        }
        Ok(())
    }

    /// Nodes and weights on `[-1, 1]`.
    pub fn rule_1d(&self) -> Rule1d {
        match self.rule {
            Rule::GaussLegendre => Rule1d::gauss_legendre(self.n_q),
            Rule::MidpointComposite => Rule1d::midpoint(self.n_q),
        }
    }
}

/// A quadrature rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Gauss-Legendre nodes by Newton iteration on `P_n`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
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
        Rule1d { nodes, weights }
    }

    /// `n` equal cells with one node at each midpoint.
    pub fn midpoint(n: usize) -> Self {
        let w = 2.0 / n as f64;
        Rule1d {
            nodes: (0..n).map(|i| -1.0 + w * (i as f64 + 0.5)).collect(),
            weights: vec![w; n],
        }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let m = 0.5 * (a + b);
        let s = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (m + s * x, s * w))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre on `[a, b]` split into `panels` equal pieces.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let rule = Rule1d::gauss_legendre(order);
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let lo = a + h * p as f64;
            rule.on(lo, lo + h).collect::<Vec<_>>()
        })
        .collect()
}
