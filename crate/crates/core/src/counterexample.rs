//! The single-term kernel `S = {0}`, `T = {2}` (so `γ_0 = -6`) and the function
//!
//! ```text
//! p(r) = v_0(r) u_2'(r) - v_0'(r) u_2(r) = 1 - (3 + 3cos²r)/r² + 3 sin(2r)/r³
//! ```
//!
//! Integrating by parts twice gives `(K u_2)(s) = u_2(s) + p(r) u_0(s)` for every
//! `r`, so `u_2` solves the homogeneous equation `h = K h` on `(0, R]` whenever
//! `p(R) = 0`. This module computes `p` three independent ways, brackets its first
//! positive zero, and checks the conclusion against both the operator and the
//! spectrum of its Nyström matrix.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{solve_gamma, validate_sets, KernelSpec};
use crate::operator::{
    apply_operator, min_singular_value, nystrom_matrix_with, ApplyOptions, SpectralOptions,
};
use crate::quadrature::QuadratureGrid;
use crate::riccati::{self, Family, Ladder, Order};
use crate::roots::bisect_secant;

/// Default search window for the first positive zero of `p`; `p(2) < 0 < p(2.5)`.
pub const DEFAULT_BRACKET: (f64, f64) = (2.0, 2.5);
/// Below this radius the closed form is replaced by the Taylor series.
pub const SERIES_GUARD: f64 = 0.2;
/// Largest radius accepted by [`p_series`].
pub const SERIES_LIMIT: f64 = 0.5;
/// Normalization of the nontrivial solution `c·u_2`.
pub const SOLUTION_SCALE: f64 = 1.0;

const ROOT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Route {
    /// The closed form in `cos r`, `sin 2r`.
    Explicit,
    /// `v_0 u_2' - v_0' u_2` from Riccati–Bessel evaluations.
    Wronskian,
    /// Taylor series about the origin.
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PValue {
    pub r: f64,
    pub value: f64,
    /// The route that actually produced `value`.
    pub route: Route,
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "radius",
            value: r,
        })
    }
}

/// Closed form; hands over to [`p_series`] below [`SERIES_GUARD`].
pub fn p_explicit(r: f64) -> Result<PValue> {
    check_radius(r)?;
    if r < SERIES_GUARD {
        return p_series(r);
    }
    let c = libm::cos(r);
    let value = 1.0 - (3.0 + 3.0 * c * c) / (r * r) + 3.0 * libm::sin(2.0 * r) / (r * r * r);
    Ok(PValue {
        r,
        value,
        route: Route::Explicit,
    })
}

pub fn p_wronskian(r: f64) -> Result<PValue> {
    check_radius(r)?;
    let u2 = riccati::eval_regular(Order::new(2), r)?;
    let v0 = riccati::eval_irregular(Order::new(0), r)?;
    Ok(PValue {
        r,
        value: v0.value * u2.derivative - v0.derivative * u2.value,
        route: Route::Wronskian,
    })
}

/// `p(r) = Σ_{n≥1} (-1)^{n+1} 6 (1-2n) (2r)^{2n} / (2n+3)!`
/// `= -r²/5 + 2r⁴/35 - r⁶/189 + …`, for `0 < r <= 0.5`.
pub fn p_series(r: f64) -> Result<PValue> {
    if !(r > 0.0 && r <= SERIES_LIMIT) {
        return Err(Error::Domain {
            what: "series radius",
            value: r,
        });
    }
    let x = 4.0 * r * r;
    // a_n = (2r)^{2n} / (2n+3)!
    let mut a = x / 120.0;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for n in 1..60u32 {
        let nf = n as f64;
        let term = sign * 6.0 * (1.0 - 2.0 * nf) * a;
        sum += term;
        if libm::fabs(term) <= 1e-18 * libm::fabs(sum) {
            break;
        }
        a *= x / ((2.0 * nf + 4.0) * (2.0 * nf + 5.0));
        sign = -sign;
    }
    Ok(PValue {
        r,
        value: sum,
        route: Route::Series,
    })
}

pub fn p_by(route: Route, r: f64) -> Result<PValue> {
    match route {
        Route::Explicit => p_explicit(r),
        Route::Wronskian => p_wronskian(r),
        Route::Series => p_series(r),
    }
}

/// `p(r)` by the default route.
pub fn p(r: f64) -> Result<f64> {
    p_explicit(r).map(|v| v.value)
}

/// `p` on `steps` equally spaced radii including both ends.
pub fn p_scan(route: Route, r_min: f64, r_max: f64, steps: usize) -> Result<Vec<PValue>> {
    crate::operator::sweep_radii(r_min, r_max, steps)?
        .into_iter()
        .map(|r| p_by(route, r))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RootResult {
    #[cfg_attr(feature = "serde", serde(rename = "R"))]
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// First zero of `p` inside `[lo, hi]`, to `|p(R)| <= tol` and bracket width `<= tol`.
pub fn find_root(lo: f64, hi: f64, tol: f64) -> Result<RootResult> {
    find_root_with(Route::Explicit, lo, hi, tol)
}

pub fn find_root_with(route: Route, lo: f64, hi: f64, tol: f64) -> Result<RootResult> {
    let b = bisect_secant(
        |r| p_by(route, r).map(|v| v.value),
        lo,
        hi,
        tol,
        ROOT_MAX_ITER,
    )?;
    Ok(RootResult {
        root: b.root,
        lo: b.lo,
        hi: b.hi,
        residual: b.residual,
        iterations: b.iterations,
    })
}

/// Every sign change of `p` on a uniform scan of `[r_min, r_max]`, each refined to `tol`.
pub fn scan_roots(r_min: f64, r_max: f64, steps: usize, tol: f64) -> Result<Vec<RootResult>> {
    let values = p_scan(Route::Explicit, r_min, r_max, steps)?;
    let mut roots = Vec::new();
    for pair in values.windows(2) {
        if pair[0].value * pair[1].value < 0.0 {
            roots.push(find_root(pair[0].r, pair[1].r, tol)?);
        }
    }
    Ok(roots)
}

/// `S = {0}`, `T = {2}` with its solved coefficient `γ_0 = -6`.
pub fn counterexample_spec() -> Result<KernelSpec> {
    solve_gamma(validate_sets(&[0.0], &[2.0])?)
}

/// The candidate solution `c·u_2`.
pub fn solution(s: f64) -> f64 {
    SOLUTION_SCALE * riccati::eval_regular(Order::new(2), s).map_or(f64::NAN, |p| p.value)
}

/// `count` equally spaced points `r·k/count`, `k = 1..=count`.
pub fn sample_points(r: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| r * k as f64 / count as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityRow {
    pub s: f64,
    /// `(K u_2)(s)`.
    #[cfg_attr(feature = "serde", serde(rename = "J"))]
    pub j: f64,
    /// `u_2(s) + p(r) u_0(s)`.
    pub identity_rhs: f64,
    pub residual: f64,
}

pub fn identity_table(r: f64, s_points: &[f64], opts: &ApplyOptions) -> Result<Vec<IdentityRow>> {
    let spec = counterexample_spec()?;
    let p_r = p(r)?;
    s_points
        .iter()
        .map(|&s| {
            let j = apply_operator(&spec, r, solution, s, opts)?;
            let identity_rhs = solution(s) + p_r * libm::sin(s);
            Ok(IdentityRow {
                s,
                j,
                identity_rhs,
                residual: libm::fabs(j - identity_rhs),
            })
        })
        .collect()
}

/// `max_s |(K u_2)(s) - u_2(s) - p(r) u_0(s)|`.
pub fn check_identity(r: f64, s_points: &[f64]) -> Result<f64> {
    Ok(identity_table(r, s_points, &ApplyOptions::default())?
        .iter()
        .map(|row| row.residual)
        .fold(0.0, f64::max))
}

/// `max_s |u_2'' + u_2 - 6 s^-2 u_2|` with `u_2''` from the ladder identities.
pub fn check_ode(s_points: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &s in s_points {
        let ladder = Ladder::new(Family::Regular, Order::new(2), s)?;
        let u = ladder.value(2);
        let residual = ladder.second_derivative(2) + u - 6.0 / (s * s) * u;
        worst = worst.max(libm::fabs(residual));
    }
    Ok(worst)
}

/// Pass thresholds for [`verify_counterexample`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    /// `|γ_0 + 6|`.
    pub gamma: f64,
    pub identity: f64,
    pub equation: f64,
    pub sigma: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gamma: 1e-14,
            identity: 1e-8,
            equation: 1e-8,
            sigma: crate::operator::COLLAPSE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub tolerances: Tolerances,
    /// Radius for the equation and spectral checks; the root of `p` when `None`.
    pub radius: Option<f64>,
    pub bracket: (f64, f64),
    pub root_tol: f64,
    /// Points per radius in the identity and equation checks.
    pub points: usize,
    pub apply: ApplyOptions,
    pub spectral: SpectralOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tolerances: Tolerances::default(),
            radius: None,
            bracket: DEFAULT_BRACKET,
            root_tol: 1e-12,
            points: 20,
            apply: ApplyOptions::default(),
            spectral: SpectralOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityCheck {
    pub r: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    #[cfg_attr(feature = "serde", serde(rename = "R"))]
    pub root: RootResult,
    /// Radius of the equation and spectral checks.
    pub radius: f64,
    pub gamma0: f64,
    /// `(K u_2 - u_2 - p u_0)` residual at `r = 1, R, 3`.
    pub identity: Vec<IdentityCheck>,
    pub identity_residual: f64,
    /// `max_s |u_2(s) - (K u_2)(s)|` at `radius`.
    pub equation_residual: f64,
    pub sigma_min: f64,
    /// Largest entrywise gap between the unit null vector and normalized `u_2` samples.
    pub null_vector_deviation: f64,
    pub tolerances: Tolerances,
    pub pass: bool,
    /// Names of the checks that missed their threshold.
    pub failures: Vec<String>,
}

fn step<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Step {
        step: name,
        message: e.to_string(),
    })
}

/// Runs the whole chain: `γ_0`, the root `R`, the identity at `r ∈ {1, R, 3}`, the
/// equation residual and `sigma_min(I - A)` at `R` (or at `opts.radius`).
pub fn verify_counterexample(opts: &VerifyOptions) -> Result<VerificationReport> {
    let tol = opts.tolerances;
    let spec = step("gamma", counterexample_spec())?;
    let gamma0 = spec.gamma()[0];

    let root = step(
        "find-root",
        find_root(opts.bracket.0, opts.bracket.1, opts.root_tol),
    )?;
    let radius = opts.radius.unwrap_or(root.root);

    let mut identity = Vec::new();
    for r in [1.0, root.root, 3.0] {
        let residual = step(
            "identity",
            check_identity(r, &sample_points(r, opts.points)),
        )?;
        identity.push(IdentityCheck { r, residual });
    }
    let identity_residual = identity.iter().map(|c| c.residual).fold(0.0, f64::max);

    let mut equation_residual = 0.0f64;
    for s in sample_points(radius, opts.points) {
        let ku = step(
            "equation",
            apply_operator(&spec, radius, solution, s, &opts.apply),
        )?;
        equation_residual = equation_residual.max(libm::fabs(solution(s) - ku));
    }

    let grid = step(
        "spectral",
        QuadratureGrid::build(
            radius,
            opts.spectral.panels,
            opts.spectral.nodes_per_panel,
            None,
        ),
    )?;
    let op = step(
        "spectral",
        nystrom_matrix_with(&spec, &grid, opts.spectral.assembly),
    )?;
    let spectral = step("spectral", min_singular_value(&op))?;
    let samples: Vec<f64> = grid.nodes().iter().map(|&t| solution(t)).collect();
    let null_vector_deviation = spectral.deviation_from(&samples);

    let mut failures = Vec::new();
    if !(libm::fabs(gamma0 + 6.0) <= tol.gamma) {
        failures.push("gamma".to_string());
    }
    if !(identity_residual <= tol.identity) {
        failures.push("identity".to_string());
    }
    if !(equation_residual <= tol.equation) {
        failures.push("equation".to_string());
    }
    if !(spectral.sigma_min <= tol.sigma) {
        failures.push("spectral".to_string());
    }

    Ok(VerificationReport {
        root,
        radius,
        gamma0,
        identity,
        identity_residual,
        equation_residual,
        sigma_min: spectral.sigma_min,
        null_vector_deviation,
        tolerances: tol,
        pass: failures.is_empty(),
        failures,
    })
}

impl VerificationReport {
    /// Multi-line plain-text summary.
    pub fn summary(&self) -> String {
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        let failed = |name: &str| self.failures.iter().any(|f| f == name);
        let mut out = String::new();
        out += &format!(
            "gamma_0 = {:.16e}  [{}]\n",
            self.gamma0,
            mark(!failed("gamma"))
        );
        out += &format!(
            "R ≈ {:.16e}  (bracket [{:.16e}, {:.16e}], |p(R)| = {:.3e}, {} iterations)\n",
            self.root.root, self.root.lo, self.root.hi, self.root.residual, self.root.iterations
        );
        for c in &self.identity {
            out += &format!(
                "identity residual at r = {:.16e}: {:.3e}\n",
                c.r, c.residual
            );
        }
        out += &format!(
            "identity residual (max) = {:.3e} <= {:.1e}  [{}]\n",
            self.identity_residual,
            self.tolerances.identity,
            mark(!failed("identity"))
        );
        out += &format!(
            "equation residual at r = {:.16e}: {:.3e} <= {:.1e}  [{}]\n",
            self.radius,
            self.equation_residual,
            self.tolerances.equation,
            mark(!failed("equation"))
        );
        out += &format!(
            "sigma_min(I - A) = {:.3e} <= {:.1e}  [{}]\n",
            self.sigma_min,
            self.tolerances.sigma,
            mark(!failed("spectral"))
        );
        out += &format!(
            "null vector vs u_2 deviation = {:.3e}\n",
            self.null_vector_deviation
        );
        out += if self.pass { "PASS\n" } else { "FAIL\n" };
        out
    }
}
