//! Bracketing root finder: bisection with regula falsi steps kept inside the bracket.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracketed {
    pub root: f64,
    /// Final bracket; `f(lo)` and `f(hi)` have opposite signs and `lo < root < hi`.
    pub lo: f64,
    pub hi: f64,
    /// `|f(root)|`.
    pub residual: f64,
    pub iterations: usize,
}

/// Shrinks `[lo, hi]` until the bracket is no wider than `tol` and the midpoint
/// satisfies `|f| <= tol`.
///
/// Every iteration bisects, then tries one false-position point; that point is
/// only evaluated when it falls strictly inside the halved bracket.
pub fn bisect_secant<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<Bracketed>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain {
            what: "bracket lower end",
            value: lo,
        });
    }
    if !(tol >= 0.0) {
        return Err(Error::Domain {
            what: "tolerance",
            value: tol,
        });
    }
    let mut eval = |x: f64| -> Result<f64> {
        let y = f(x)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite {
                what: "function value",
                at: x,
            })
        }
    };

    let (mut lo, mut hi) = (lo, hi);
    let (mut f_lo, mut f_hi) = (eval(lo)?, eval(hi)?);
    if !(f_lo * f_hi < 0.0) {
        return Err(Error::NoSignChange { lo, f_lo, hi, f_hi });
    }

    for it in 1..=max_iter {
        let mid = lo + 0.5 * (hi - lo);
        let f_mid = eval(mid)?;
        if f_mid == 0.0 || (hi - lo <= tol && libm::fabs(f_mid) <= tol) {
            return Ok(Bracketed {
                root: mid,
                lo,
                hi,
                residual: libm::fabs(f_mid),
                iterations: it,
            });
        }
        if mid <= lo || mid >= hi {
            return Err(Error::NotConverged {
                what: "bracketing root search",
                tolerance: tol,
                achieved: libm::fabs(f_mid),
            });
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }

        let x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if x.is_finite() && x > lo && x < hi {
            let f_x = eval(x)?;
            if f_x == 0.0 {
                return Ok(Bracketed {
                    root: x,
                    lo,
                    hi,
                    residual: 0.0,
                    iterations: it,
                });
            }
            if (f_x < 0.0) == (f_lo < 0.0) {
                lo = x;
                f_lo = f_x;
            } else {
                hi = x;
                f_hi = f_x;
            }
        }
    }

    Err(Error::NotConverged {
        what: "bracketing root search",
        tolerance: tol,
        achieved: hi - lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two() {
        let b = bisect_secant(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((b.root - libm::sqrt(2.0)).abs() < 1e-14);
        assert!(b.lo < b.root && b.root < b.hi);
        assert!(b.hi - b.lo <= 1e-14);
    }

    #[test]
    fn same_sign_is_rejected() {
        let e = bisect_secant(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 200).unwrap_err();
        assert!(matches!(e, Error::NoSignChange { .. }));
    }

    #[test]
    fn non_finite_is_rejected() {
        let e = bisect_secant(|x| Ok(1.0 / x), 0.0, 1.0, 1e-12, 200).unwrap_err();
        assert!(matches!(e, Error::NonFinite { .. }));
    }

    #[test]
    fn zero_tolerance_cannot_converge_for_irrational_root() {
        let e = bisect_secant(|x| Ok(x * x - 2.0), 0.0, 2.0, 0.0, 500).unwrap_err();
        assert!(matches!(e, Error::NotConverged { .. }));
    }

    #[test]
    fn errors_from_the_function_propagate() {
        let e = bisect_secant(|_| Err(Error::Decomposition), 0.0, 1.0, 1e-12, 10).unwrap_err();
        assert_eq!(e, Error::Decomposition);
    }
}
