//! Index sets, the coefficient system for `γ_m`, and the degenerate kernel
//! `g(s,t) = Σ_m γ_m u_m(min(s,t)) v_m(max(s,t))`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::riccati::{self, Family, Ladder, Order};

/// Condition-number estimate above which the coefficient system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Largest tolerated `|Σ_m γ_m/(m(m+1) - l(l+1)) - 1|` for any `l`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Two disjoint, equally sized sets of distinct reals greater than `-0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSets {
    s: Vec<f64>,
    t: Vec<f64>,
}

impl IndexSets {
    pub fn new(s: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        for set in [&s, &t] {
            for (i, &x) in set.iter().enumerate() {
                if !(x.is_finite() && x > -0.5) {
                    return Err(Error::OutOfRange(x));
                }
                if set[..i].contains(&x) {
                    return Err(Error::Duplicate(x));
                }
            }
        }
        if let Some(&x) = s.iter().find(|x| t.contains(x)) {
            return Err(Error::NotDisjoint(x));
        }
        if s.len() != t.len() {
            return Err(Error::NonSquare {
                s_len: s.len(),
                t_len: t.len(),
            });
        }
        if s.is_empty() {
            return Err(Error::NonSquare { s_len: 0, t_len: 0 });
        }
        Ok(IndexSets { s, t })
    }

    /// Orders of the kernel terms.
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Orders at which the coefficient equations are imposed.
    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// The elements of `S` as evaluable orders, or the first one that is not an integer.
    pub fn integer_orders(&self) -> Result<Vec<Order>> {
        self.s.iter().map(|&m| Order::try_from(m)).collect()
    }
}

pub fn validate_sets(s: &[f64], t: &[f64]) -> Result<IndexSets> {
    IndexSets::new(s.to_vec(), t.to_vec())
}

fn centrifugal(x: f64) -> f64 {
    x * (x + 1.0)
}

fn coefficient_matrix(sets: &IndexSets) -> DMatrix<f64> {
    let n = sets.len();
    DMatrix::from_fn(n, n, |row, col| {
        1.0 / (centrifugal(sets.s[col]) - centrifugal(sets.t[row]))
    })
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| libm::fabs(*x)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `Σ_{m∈S} γ_m / (m(m+1) - l(l+1)) = 1` for every `l ∈ T`.
pub fn solve_gamma(sets: IndexSets) -> Result<KernelSpec> {
    let n = sets.len();
    let matrix = coefficient_matrix(&sets);
    let ill = |condition: f64| Error::IllConditioned {
        condition,
        s: sets.s.clone(),
        t: sets.t.clone(),
    };

    let lu = matrix.clone().lu();
    let inverse = lu.try_inverse().ok_or_else(|| ill(f64::INFINITY))?;
    let condition = one_norm(&matrix) * one_norm(&inverse);
    if !(condition <= MAX_CONDITION) {
        return Err(ill(condition));
    }

    let ones = DVector::from_element(n, 1.0);
    let lu = matrix.clone().lu();
    let mut gamma = lu.solve(&ones).ok_or_else(|| ill(condition))?;
    // one step of iterative refinement
    let correction = lu
        .solve(&(&ones - &matrix * &gamma))
        .ok_or_else(|| ill(condition))?;
    gamma += correction;

    let spec = KernelSpec::from_parts(sets, gamma.iter().copied().collect());
    for (row, residual) in spec.equation_residuals().into_iter().enumerate() {
        if !(libm::fabs(residual) <= RESIDUAL_TOLERANCE) {
            return Err(Error::Residual { row, residual });
        }
    }
    Ok(spec)
}

/// Validated index sets together with their coefficients `γ_m`.
///
/// Immutable once built. Serializes as `{"S": [...], "T": [...], "gamma": [...]}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(into = "SpecRepr", try_from = "SpecRepr"))]
pub struct KernelSpec {
    sets: IndexSets,
    gamma: Vec<f64>,
    orders: Option<Vec<Order>>,
}

impl KernelSpec {
    /// Pairs index sets with given coefficients without checking the coefficient equations.
    pub fn from_parts(sets: IndexSets, gamma: Vec<f64>) -> Self {
        assert_eq!(sets.len(), gamma.len(), "one coefficient per element of S");
        let orders = sets.integer_orders().ok();
        KernelSpec {
            sets,
            gamma,
            orders,
        }
    }

    pub fn sets(&self) -> &IndexSets {
        &self.sets
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `Σ_m γ_m/(m(m+1) - l(l+1)) - 1` for each `l ∈ T`.
    pub fn equation_residuals(&self) -> Vec<f64> {
        self.sets
            .t
            .iter()
            .map(|&l| {
                self.sets
                    .s
                    .iter()
                    .zip(&self.gamma)
                    .map(|(&m, &g)| g / (centrifugal(m) - centrifugal(l)))
                    .sum::<f64>()
                    - 1.0
            })
            .collect()
    }

    /// Orders and coefficients, when every order in `S` is a nonnegative integer.
    pub fn terms(&self) -> Result<impl Iterator<Item = (Order, f64)> + '_> {
        match &self.orders {
            Some(orders) => Ok(orders.iter().copied().zip(self.gamma.iter().copied())),
            None => Err(self.sets.integer_orders().unwrap_err()),
        }
    }

    /// `g(s,t)`; the same value for `(s,t)` and `(t,s)` bit for bit.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        let (near, far) = if s <= t { (s, t) } else { (t, s) };
        let mut sum = 0.0;
        for (m, gamma) in self.terms()? {
            let u = riccati::eval_regular(m, near)?.value;
            let v = riccati::eval_irregular(m, far)?.value;
            sum += gamma * u * v;
        }
        Ok(sum)
    }

    /// `g(s, t)` for one fixed `s` and many `t`, sharing the work at `s`.
    pub(crate) fn row(&self, s: f64) -> Result<KernelRow> {
        let mut terms = Vec::new();
        for (m, gamma) in self.terms()? {
            let u = Ladder::new(Family::Regular, m, s)?.value(m.get() as i64);
            let v = Ladder::new(Family::Irregular, m, s)?.value(m.get() as i64);
            terms.push((m, gamma, u, v));
        }
        Ok(KernelRow { s, terms })
    }
}

pub(crate) struct KernelRow {
    s: f64,
    terms: Vec<(Order, f64, f64, f64)>,
}

impl KernelRow {
    pub(crate) fn at(&self, t: f64) -> Result<f64> {
        let mut sum = 0.0;
        for &(m, gamma, u_s, v_s) in &self.terms {
            let term = if t < self.s {
                riccati::eval_regular(m, t)?.value * v_s
            } else if t > self.s {
                u_s * riccati::eval_irregular(m, t)?.value
            } else {
                u_s * v_s
            };
            sum += gamma * term;
        }
        Ok(sum)
    }
}

pub fn eval_kernel(spec: &KernelSpec, s: f64, t: f64) -> Result<f64> {
    spec.eval(s, t)
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct SpecRepr {
    #[serde(rename = "S")]
    s: Vec<f64>,
    #[serde(rename = "T")]
    t: Vec<f64>,
    gamma: Vec<f64>,
}

#[cfg(feature = "serde")]
impl From<KernelSpec> for SpecRepr {
    fn from(spec: KernelSpec) -> Self {
        SpecRepr {
            s: spec.sets.s,
            t: spec.sets.t,
            gamma: spec.gamma,
        }
    }
}

#[cfg(feature = "serde")]
impl TryFrom<SpecRepr> for KernelSpec {
    type Error = Error;

    fn try_from(repr: SpecRepr) -> Result<Self> {
        let sets = IndexSets::new(repr.s, repr.t)?;
        if repr.gamma.len() != sets.len() {
            return Err(Error::NonSquare {
                s_len: sets.len(),
                t_len: repr.gamma.len(),
            });
        }
        Ok(KernelSpec::from_parts(sets, repr.gamma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec(s: &[f64], t: &[f64]) -> KernelSpec {
        solve_gamma(validate_sets(s, t).unwrap()).unwrap()
    }

    #[test]
    fn set_validation() {
        assert!(validate_sets(&[0.0], &[2.0]).is_ok());
        assert_eq!(validate_sets(&[1.0], &[1.0]), Err(Error::NotDisjoint(1.0)));
        assert_eq!(
            validate_sets(&[0.0, 1.0], &[2.0]),
            Err(Error::NonSquare { s_len: 2, t_len: 1 })
        );
        assert_eq!(validate_sets(&[-0.5], &[2.0]), Err(Error::OutOfRange(-0.5)));
        assert_eq!(
            validate_sets(&[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::Duplicate(0.0))
        );
        assert!(matches!(
            validate_sets(&[0.0], &[f64::NAN]),
            Err(Error::OutOfRange(x)) if x.is_nan()
        ));
        assert!(validate_sets(&[], &[]).is_err());
    }

    #[test]
    fn gamma_examples() {
        assert!((spec(&[0.0], &[2.0]).gamma()[0] + 6.0).abs() <= 1e-14);
        assert!((spec(&[1.0], &[0.0]).gamma()[0] - 2.0).abs() <= 1e-14);
        let two = spec(&[0.0, 1.0], &[2.0, 3.0]);
        assert!((two.gamma()[0] + 36.0).abs() <= 1e-12);
        assert!((two.gamma()[1] - 20.0).abs() <= 1e-12);
    }

    #[test]
    fn fractional_orders_solve_but_do_not_evaluate() {
        let k = spec(&[0.25], &[1.5]);
        assert!(k.equation_residuals()[0].abs() <= 1e-12);
        assert_eq!(k.eval(1.0, 2.0), Err(Error::UnsupportedOrder(0.25)));
    }

    #[test]
    fn nearly_coincident_orders_are_ill_conditioned() {
        let sets = validate_sets(&[1.0, 1.0 + 1e-14], &[2.0, 3.0]).unwrap();
        assert!(matches!(
            solve_gamma(sets),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn kernel_examples() {
        let k = spec(&[0.0], &[2.0]);
        let expected = -2.101_052_930_244_087_9;
        assert!((k.eval(2.0, 1.0).unwrap() - expected).abs() < 1e-14);
        assert_eq!(k.eval(2.0, 1.0), k.eval(1.0, 2.0));
        let half_pi = core::f64::consts::FRAC_PI_2;
        assert!(k.eval(half_pi, half_pi).unwrap().abs() < 1e-15);
    }

    #[test]
    fn row_matches_pointwise_evaluation() {
        let k = spec(&[0.0, 3.0], &[1.0, 2.0]);
        let row = k.row(1.3).unwrap();
        for t in [0.1, 0.9, 1.3, 2.0, 4.5] {
            let a = row.at(t).unwrap();
            let b = k.eval(1.3, t).unwrap();
            assert!((a - b).abs() <= 1e-13 * b.abs().max(1.0), "t={t}");
        }
    }

    #[test]
    fn from_parts_keeps_coefficients() {
        let sets = validate_sets(&[0.0], &[2.0]).unwrap();
        let k = KernelSpec::from_parts(sets, vec![-6.0]);
        assert_eq!(k.equation_residuals(), vec![0.0]);
    }
}
