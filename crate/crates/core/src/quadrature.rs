//! Composite Gauss–Legendre rules on graded panels.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use crate::error::{Error, Result};

/// Panels shrink toward the left end like `(k/P)^2` unless told otherwise.
pub const DEFAULT_GRADING: f64 = 2.0;

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if libm::fabs(dx) <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
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

/// Composite Gauss–Legendre rule on `[start, end]`.
///
/// Panel breakpoints are `start + (end - start)·(k/P)^grading`, with an optional
/// extra breakpoint inserted at a requested split point. Every panel carries the
/// same number of nodes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureGrid {
    start: f64,
    end: f64,
    grading: f64,
    nodes_per_panel: usize,
    breakpoints: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Grid on `(0, r]` graded toward the origin with [`DEFAULT_GRADING`].
    pub fn build(
        r: f64,
        panels: usize,
        nodes_per_panel: usize,
        split_at: Option<f64>,
    ) -> Result<Self> {
        Self::graded(0.0, r, panels, nodes_per_panel, DEFAULT_GRADING, split_at)
    }

    pub fn graded(
        start: f64,
        end: f64,
        panels: usize,
        nodes_per_panel: usize,
        grading: f64,
        split_at: Option<f64>,
    ) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(Error::Grid("interval must be finite and non-empty"));
        }
        if panels == 0 {
            return Err(Error::Grid("at least one panel is required"));
        }
        if nodes_per_panel == 0 {
            return Err(Error::Grid("at least one node per panel is required"));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::Grid("grading exponent must be at least 1"));
        }
        let len = end - start;
        let mut breakpoints: Vec<f64> = (0..=panels)
            .map(|k| start + len * libm::pow(k as f64 / panels as f64, grading))
            .collect();
        breakpoints[panels] = end;

        if let Some(split) = split_at {
            if !(split > start && split < end) {
                return Err(Error::Grid(
                    "split point must lie strictly inside the interval",
                ));
            }
            let pos = breakpoints.partition_point(|&b| b < split);
            if breakpoints[pos] != split {
                breakpoints.insert(pos, split);
            }
        }

        let (ref_nodes, ref_weights) = gauss_legendre(nodes_per_panel);
        let total = (breakpoints.len() - 1) * nodes_per_panel;
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for pair in breakpoints.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }

        Ok(QuadratureGrid {
            start,
            end,
            grading,
            nodes_per_panel,
            breakpoints,
            nodes,
            weights,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Right end of the interval (the radius `r` for grids built on `(0, r]`).
    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
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

    pub fn panel_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Index range of the nodes belonging to panel `p`.
    pub fn panel_nodes(&self, p: usize) -> Range<usize> {
        p * self.nodes_per_panel..(p + 1) * self.nodes_per_panel
    }

    pub fn panel_bounds(&self, p: usize) -> (f64, f64) {
        (self.breakpoints[p], self.breakpoints[p + 1])
    }

    /// Panel holding node `i`.
    pub fn panel_of(&self, i: usize) -> usize {
        i / self.nodes_per_panel
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule_on_unit_interval() {
        let g = QuadratureGrid::build(1.0, 1, 2, None).unwrap();
        let h = 0.5 / libm::sqrt(3.0);
        assert!((g.nodes()[0] - (0.5 - h)).abs() < 1e-15);
        assert!((g.nodes()[1] - (0.5 + h)).abs() < 1e-15);
        assert!((g.weights()[0] - 0.5).abs() < 1e-15);
        assert!((g.weights()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_length() {
        let g = QuadratureGrid::build(1.0, 4, 8, None).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn split_point_becomes_breakpoint() {
        let g = QuadratureGrid::build(2.44, 8, 12, Some(1.0)).unwrap();
        assert!(g.breakpoints().contains(&1.0));
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes()[0] > 0.0);
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 2.44).abs() <= 1e-12 * 2.44);
    }

    #[test]
    fn split_on_existing_breakpoint_adds_no_panel() {
        // (1/2)^2 * 4 = 1
        let g = QuadratureGrid::build(4.0, 2, 3, Some(1.0)).unwrap();
        assert_eq!(g.panel_count(), 2);
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let approx: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(x, w)| w * libm::pow(*x, deg as f64))
                    .sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(QuadratureGrid::build(0.0, 1, 2, None).is_err());
        assert!(QuadratureGrid::build(-1.0, 1, 2, None).is_err());
        assert!(QuadratureGrid::build(1.0, 0, 2, None).is_err());
        assert!(QuadratureGrid::build(1.0, 1, 0, None).is_err());
        assert!(QuadratureGrid::build(1.0, 2, 2, Some(1.0)).is_err());
        assert!(QuadratureGrid::build(1.0, 2, 2, Some(0.0)).is_err());
        assert!(QuadratureGrid::graded(0.0, 1.0, 2, 2, 0.5, None).is_err());
    }
}
