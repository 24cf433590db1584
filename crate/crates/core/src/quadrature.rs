//! Composite tensor-product Gauss–Legendre quadrature on boxes.

use std::f64::consts::PI;

use crate::error::Result;
use crate::geometry::Interval;

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
    (nodes, weights)
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Composite rule: each axis is split into equal panels no longer than
/// `max_panel`, each panel gets `points` Gauss nodes.
#[derive(Debug, Clone)]
pub struct Rule {
    points: usize,
    max_panel: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    pub fn new(points: usize, max_panel: f64) -> Self {
        let (nodes, weights) = gauss_legendre(points);
        Self { points, max_panel, nodes, weights }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    // Abscissae and weights along one side.
    fn axis(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let len = hi - lo;
        let panels = ((len / self.max_panel).ceil() as usize).max(1);
        let h = len / panels as f64;
        let mut out = Vec::with_capacity(panels * self.points);
        for p in 0..panels {
            let a = lo + h * p as f64;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((a + 0.5 * h * (x + 1.0), 0.5 * h * w));
            }
        }
        out
    }

    /// `∫_b f`, summed in lexicographic node order.
    pub fn integrate(&self, b: &Interval, f: impl Fn(&[f64]) -> Result<f64>) -> Result<f64> {
        if b.volume() == 0.0 {
            return Ok(0.0);
        }
        let axes: Vec<Vec<(f64, f64)>> = (0..b.dim()).map(|i| self.axis(b.lo()[i], b.hi()[i])).collect();
        let n = axes.len();
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for i in 0..n {
                let (xi, wi) = axes[i][idx[i]];
                x[i] = xi;
                w *= wi;
            }
            total += w * f(&x)?;
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(total);
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
    }
}

impl Default for Rule {
    fn default() -> Self {
        Self::new(8, 0.5)
    }
}
