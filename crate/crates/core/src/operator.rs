//! The integral operator `(K h)(s) = -∫_0^r g(s,t) h(t) t^-2 dt`, its Nyström
//! discretization and the smallest singular value of `I - A`.
//!
//! `g` is continuous with a derivative jump on the diagonal. [`apply_operator`]
//! removes the jump exactly by splitting each integral at `t = s` and using the
//! separable form of the kernel. The Nyström matrix comes in two flavours, see
//! [`Assembly`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::quadrature::{gauss_legendre, QuadratureGrid, DEFAULT_GRADING};
use crate::riccati;

pub const DEFAULT_PANELS: usize = 8;
pub const DEFAULT_NODES: usize = 12;
/// Absolute target for each sub-integral in [`apply_operator`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;
/// `sigma_min` at or below this marks a numerically nontrivial solution of `h = K h`.
pub const COLLAPSE_THRESHOLD: f64 = 1e-6;

/// Panel-doubling parameters for [`apply_operator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplyOptions {
    /// Panels per side of the split at the first attempt.
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub grading: f64,
    /// Absolute tolerance per sub-integral, measured as the change under doubling.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        ApplyOptions {
            panels: DEFAULT_PANELS,
            nodes_per_panel: DEFAULT_NODES,
            grading: DEFAULT_GRADING,
            tol: QUADRATURE_TOLERANCE,
            max_panels: 1024,
        }
    }
}

/// `(K h)(s)` for `s ∈ (0, r]`.
///
/// Computes `-Σ_m γ_m [v_m(s) ∫_0^s u_m h t^-2 dt + u_m(s) ∫_s^r v_m h t^-2 dt]`, each
/// integral on its own composite grid graded toward its left end, doubling the panel
/// count until every integral changes by at most `opts.tol`. `h` should vanish at
/// least linearly at the origin.
pub fn apply_operator<F>(
    spec: &KernelSpec,
    r: f64,
    h: F,
    s: f64,
    opts: &ApplyOptions,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain {
            what: "radius",
            value: r,
        });
    }
    if !(s > 0.0 && s <= r) {
        return Err(Error::Domain {
            what: "evaluation point",
            value: s,
        });
    }
    let terms: Vec<_> = spec.terms()?.collect();

    let integrals = |panels: usize| -> Result<Vec<(f64, f64)>> {
        let left =
            QuadratureGrid::graded(0.0, s, panels, opts.nodes_per_panel, opts.grading, None)?;
        let right = if s < r {
            Some(QuadratureGrid::graded(
                s,
                r,
                panels,
                opts.nodes_per_panel,
                opts.grading,
                None,
            )?)
        } else {
            None
        };
        let sample = |t: f64| -> Result<f64> {
            let y = h(t) / (t * t);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::NonFinite {
                    what: "h(t)/t^2",
                    at: t,
                })
            }
        };
        let left_h: Vec<f64> = left
            .nodes()
            .iter()
            .map(|&t| sample(t))
            .collect::<Result<_>>()?;
        let right_h: Vec<f64> = match &right {
            Some(g) => g
                .nodes()
                .iter()
                .map(|&t| sample(t))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let mut out = Vec::with_capacity(terms.len());
        for &(m, _) in &terms {
            let mut lower = 0.0;
            for ((&t, &w), &y) in left.nodes().iter().zip(left.weights()).zip(&left_h) {
                lower += w * riccati::eval_regular(m, t)?.value * y;
            }
            let mut upper = 0.0;
            if let Some(g) = &right {
                for ((&t, &w), &y) in g.nodes().iter().zip(g.weights()).zip(&right_h) {
                    upper += w * riccati::eval_irregular(m, t)?.value * y;
                }
            }
            out.push((lower, upper));
        }
        Ok(out)
    };

    let mut panels = opts.panels.max(1);
    let mut coarse = integrals(panels)?;
    let mut change = f64::INFINITY;
    let converged = loop {
        panels *= 2;
        if panels > opts.max_panels {
            return Err(Error::NotConverged {
                what: "operator quadrature",
                tolerance: opts.tol,
                achieved: change,
            });
        }
        let fine = integrals(panels)?;
        change = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| libm::fabs(a.0 - b.0).max(libm::fabs(a.1 - b.1)))
            .fold(0.0, f64::max);
        if change <= opts.tol {
            break fine;
        }
        coarse = fine;
    };

    let mut value = 0.0;
    for (&(m, gamma), &(lower, upper)) in terms.iter().zip(&converged) {
        let u = riccati::eval_regular(m, s)?.value;
        let v = riccati::eval_irregular(m, s)?.value;
        value -= gamma * (v * lower + u * upper);
    }
    Ok(value)
}

/// How the diagonal panel blocks of the Nyström matrix are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Assembly {
    /// `A[i,j] = -g(t_i, t_j) w_j / t_j^2` everywhere. The kink of `g` at `t = s`
    /// sits inside a panel, so this converges only like the panel width squared.
    Plain,
    /// Plain entries off the diagonal panel blocks. Inside the panel holding `t_i`,
    /// `h(t)/t` is replaced by its Lagrange interpolant on the panel nodes and
    /// integrated against `g(t_i, ·)/t` separately on each side of `t_i`, which
    /// keeps the full order of the panel rule.
    #[default]
    KinkCorrected,
}

/// Dense discretization `A` of `K` on a quadrature grid, collocated at the nodes.
#[derive(Debug, Clone)]
pub struct NystromOperator {
    grid: QuadratureGrid,
    matrix: DMatrix<f64>,
    spec: KernelSpec,
    assembly: Assembly,
}

/// Plain Nyström matrix `A[i,j] = -g(t_i,t_j) w_j / t_j^2`.
pub fn nystrom_matrix(spec: &KernelSpec, grid: &QuadratureGrid) -> Result<NystromOperator> {
    nystrom_matrix_with(spec, grid, Assembly::Plain)
}

pub fn nystrom_matrix_with(
    spec: &KernelSpec,
    grid: &QuadratureGrid,
    assembly: Assembly,
) -> Result<NystromOperator> {
    let n = grid.len();
    let nodes = grid.nodes();
    let weights = grid.weights();
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        let row = spec.row(nodes[i])?;
        for j in 0..n {
            matrix[(i, j)] = -row.at(nodes[j])? * weights[j] / (nodes[j] * nodes[j]);
        }
    }

    if assembly == Assembly::KinkCorrected {
        let (ref_x, ref_w) = gauss_legendre(grid.nodes_per_panel());
        for p in 0..grid.panel_count() {
            let range = grid.panel_nodes(p);
            let (a, b) = grid.panel_bounds(p);
            let local = &nodes[range.clone()];
            let bary = barycentric_weights(local);
            let mut basis = vec![0.0; local.len()];
            for i in range.clone() {
                let s = nodes[i];
                let row = spec.row(s)?;
                let mut block = vec![0.0; local.len()];
                for (lo, hi) in [(a, s)].into_iter().chain(geometric_pieces(s, b)) {
                    let half = 0.5 * (hi - lo);
                    let mid = 0.5 * (hi + lo);
                    for (x, w) in ref_x.iter().zip(&ref_w) {
                        let t = mid + half * x;
                        let g = row.at(t)?;
                        lagrange_basis(local, &bary, t, &mut basis);
                        for (acc, l) in block.iter_mut().zip(&basis) {
                            *acc += half * w * g * l / t;
                        }
                    }
                }
                for (k, j) in range.clone().enumerate() {
                    matrix[(i, j)] = -block[k] / nodes[j];
                }
            }
        }
    }

    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "Nystrom matrix entry",
            at: grid.end(),
        });
    }
    Ok(NystromOperator {
        grid: grid.clone(),
        matrix,
        spec: spec.clone(),
        assembly,
    })
}

/// Splits `[lo, hi]` into pieces no longer than their distance from the origin, so
/// a `1/t` factor stays resolved on panels that start near 0.
fn geometric_pieces(lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> {
    let mut x = lo;
    core::iter::from_fn(move || {
        if x >= hi {
            return None;
        }
        let next = if x > 0.0 && 2.0 * x < hi { 2.0 * x } else { hi };
        let piece = (x, next);
        x = next;
        Some(piece)
    })
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let prod: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &xk)| xj - xk)
                .product();
            1.0 / prod
        })
        .collect()
}

fn lagrange_basis(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    if let Some(hit) = nodes.iter().position(|&xj| xj == x) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[hit] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for ((o, &xj), &lj) in out.iter_mut().zip(nodes).zip(bary) {
        *o = lj / (x - xj);
        denom += *o;
    }
    out.iter_mut().for_each(|v| *v /= denom);
}

impl NystromOperator {
    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn assembly(&self) -> Assembly {
        self.assembly
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// `A · samples`.
    pub fn apply(&self, samples: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(samples);
        (&self.matrix * x).iter().copied().collect()
    }

    /// Rows of `A` as vectors, for dumping.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// Smallest singular value of `I - A` with its right singular vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralResult {
    pub r: f64,
    pub sigma_min: f64,
    /// Unit 2-norm; sign chosen so that the largest-magnitude entry is positive.
    pub null_vector: Vec<f64>,
    /// `‖(I - A) · null_vector‖₂` recomputed from the matrix.
    pub residual_norm: f64,
    /// Frobenius norm of `I - A`, the scale for rounding in `residual_norm`.
    pub matrix_norm: f64,
}

impl SpectralResult {
    /// Largest entrywise gap between the null vector and `samples` normalized the same way,
    /// after aligning signs.
    pub fn deviation_from(&self, samples: &[f64]) -> f64 {
        let norm = libm::sqrt(samples.iter().map(|x| x * x).sum::<f64>());
        let dot: f64 = samples
            .iter()
            .zip(&self.null_vector)
            .map(|(a, b)| a * b)
            .sum();
        let sign = if dot < 0.0 { -1.0 } else { 1.0 };
        samples
            .iter()
            .zip(&self.null_vector)
            .map(|(a, b)| libm::fabs(sign * a / norm - b))
            .fold(0.0, f64::max)
    }
}

pub fn min_singular_value(op: &NystromOperator) -> Result<SpectralResult> {
    let n = op.dim();
    let system = DMatrix::identity(n, n) - &op.matrix;
    if system.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "I - A",
            at: op.grid.end(),
        });
    }
    let svd = system
        .clone()
        .try_svd(false, true, f64::EPSILON, 100_000)
        .ok_or(Error::Decomposition)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::Decomposition)?;
    let (k, &sigma_min) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::Decomposition)?;
    let mut null_vector: Vec<f64> = v_t.row(k).iter().copied().collect();
    let (_, peak) = null_vector
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, &x)| {
            if libm::fabs(x) > libm::fabs(best.1) {
                (i, x)
            } else {
                best
            }
        });
    if peak < 0.0 {
        null_vector.iter_mut().for_each(|x| *x = -*x);
    }
    let x = DVector::from_column_slice(&null_vector);
    let residual_norm = (&system * x).norm();
    Ok(SpectralResult {
        r: op.grid.end(),
        sigma_min,
        null_vector,
        residual_norm,
        matrix_norm: system.norm(),
    })
}

/// Nyström grid size and assembly for spectral runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub assembly: Assembly,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            panels: DEFAULT_PANELS,
            nodes_per_panel: DEFAULT_NODES,
            assembly: Assembly::KinkCorrected,
        }
    }
}

/// Builds the default graded grid on `(0, r]`, assembles and decomposes.
pub fn spectral_at(spec: &KernelSpec, r: f64, opts: &SpectralOptions) -> Result<SpectralResult> {
    let grid = QuadratureGrid::build(r, opts.panels, opts.nodes_per_panel, None)?;
    let op = nystrom_matrix_with(spec, &grid, opts.assembly)?;
    min_singular_value(&op)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    pub spectral: SpectralOptions,
    /// Also run every radius with twice the panels and record `|Δ sigma_min|`.
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub r: f64,
    pub sigma_min: Option<f64>,
    pub refinement_delta: Option<f64>,
    /// Why this radius produced no value.
    pub failure: Option<String>,
}

/// `sigma_min(r)` tabulated over a range of radii.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanReport {
    pub rows: Vec<SweepRow>,
}

impl ScanReport {
    /// Row with the smallest `sigma_min`, ignoring failed points.
    pub fn argmin(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|row| row.sigma_min.is_some())
            .min_by(|a, b| a.sigma_min.unwrap().total_cmp(&b.sigma_min.unwrap()))
    }
}

/// `steps` equally spaced radii from `r_min` to `r_max` inclusive.
pub fn sweep_radii(r_min: f64, r_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
        return Err(Error::Domain {
            what: "sweep range lower end",
            value: r_min,
        });
    }
    if steps < 2 {
        return Err(Error::Grid("a sweep needs at least two steps"));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                r_max
            } else {
                r_min + (r_max - r_min) * i as f64 / last
            }
        })
        .collect())
}

/// One sweep row; failures land in the row instead of aborting.
pub fn sweep_point(spec: &KernelSpec, r: f64, opts: &SweepOptions) -> SweepRow {
    let base = spectral_at(spec, r, &opts.spectral);
    let sigma = match base {
        Ok(res) => res.sigma_min,
        Err(e) => {
            return SweepRow {
                r,
                sigma_min: None,
                refinement_delta: None,
                failure: Some(format!("{e}")),
            }
        }
    };
    let mut row = SweepRow {
        r,
        sigma_min: Some(sigma),
        refinement_delta: None,
        failure: None,
    };
    if opts.refine {
        let finer = SpectralOptions {
            panels: 2 * opts.spectral.panels,
            ..opts.spectral
        };
        match spectral_at(spec, r, &finer) {
            Ok(res) => row.refinement_delta = Some(libm::fabs(res.sigma_min - sigma)),
            Err(e) => row.failure = Some(format!("refinement: {e}")),
        }
    }
    row
}

pub fn sweep(
    spec: &KernelSpec,
    r_min: f64,
    r_max: f64,
    steps: usize,
    opts: &SweepOptions,
) -> Result<ScanReport> {
    let radii = sweep_radii(r_min, r_max, steps)?;
    Ok(ScanReport {
        rows: radii
            .into_iter()
            .map(|r| sweep_point(spec, r, opts))
            .collect(),
    })
}
