//! Riccati–Bessel functions of nonnegative integer order.
//!
//! `u_m(r) = r j_m(r)` is the regular solution of
//! `f'' + f - m(m+1) r^-2 f = 0` and `v_m(r) = r y_m(r)` the irregular one, so that
//! `u_0 = sin r`, `v_0 = -cos r` and `u_m v_m' - u_m' v_m = 1`. Both families obey
//!
//! ```text
//! f_{m+1} = ((2m+1)/r) f_m - f_{m-1},     f_m' = f_{m-1} - (m/r) f_m
//! ```
//!
//! with `u_{-1} = cos r` and `v_{-1} = sin r`.
//!
//! The regular family is the minimal solution of the recurrence, so it is computed
//! by a Taylor series below [`SERIES_CROSSOVER`] and by Miller's backward recurrence
//! above it. The irregular family is dominant and is run forward from `v_{-1}, v_0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Radius below which the regular family is summed from its Taylor series.
pub const SERIES_CROSSOVER: f64 = 0.5;

/// Nonnegative integer order of a Riccati–Bessel function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Order(u32);

impl Order {
    pub const fn new(m: u32) -> Self {
        Order(m)
    }

    pub const fn get(self) -> u32 {
        self.0
    }
}

impl From<u32> for Order {
    fn from(m: u32) -> Self {
        Order(m)
    }
}

impl TryFrom<i64> for Order {
    type Error = Error;

    fn try_from(m: i64) -> Result<Self> {
        u32::try_from(m)
            .map(Order)
            .map_err(|_| Error::NegativeOrder(m))
    }
}

impl TryFrom<f64> for Order {
    type Error = Error;

    /// Accepts only values that are exactly a nonnegative integer.
    fn try_from(m: f64) -> Result<Self> {
        if m.is_finite() && m >= 0.0 && m <= u32::MAX as f64 && libm::trunc(m) == m {
            Ok(Order(m as u32))
        } else {
            Err(Error::UnsupportedOrder(m))
        }
    }
}

/// Which of the two Riccati–Bessel solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `u_m`, vanishing like `r^{m+1}` at the origin.
    Regular,
    /// `v_m`, blowing up like `r^{-m}` at the origin.
    Irregular,
}

/// A function value together with its first derivative at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionPair {
    pub value: f64,
    pub derivative: f64,
}

/// The values `f_{-1}, f_0, ..., f_m` of one family at a fixed radius.
///
/// Derivatives are taken with the ladder identity rather than by differencing.
#[derive(Debug, Clone)]
pub struct Ladder {
    family: Family,
    r: f64,
    // values[k + 1] = f_k
    values: Vec<f64>,
}

impl Ladder {
    pub fn new(family: Family, m: Order, r: f64) -> Result<Self> {
        check_radius(r)?;
        let m = m.get() as usize;
        let values = match family {
            Family::Regular if r < SERIES_CROSSOVER => {
                let mut v = Vec::with_capacity(m + 2);
                v.push(libm::cos(r));
                v.extend((0..=m).map(|k| regular_series(Order(k as u32), r)));
                v
            }
            Family::Regular => {
                let mut v = Vec::with_capacity(m + 2);
                v.push(libm::cos(r));
                v.extend(regular_recurrence_values(m, r));
                v
            }
            Family::Irregular => irregular_forward(m, r)?,
        };
        Ok(Ladder { family, r, values })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    /// Highest order held.
    pub fn order(&self) -> Order {
        Order((self.values.len() - 2) as u32)
    }

    /// `f_k` for `-1 <= k <= m`.
    pub fn value(&self, k: i64) -> f64 {
        self.values[(k + 1) as usize]
    }

    /// `f_k'` for `0 <= k <= m`, and `f_{-1}' = -f_0`.
    pub fn derivative(&self, k: i64) -> f64 {
        if k < 0 {
            return -self.value(0);
        }
        self.value(k - 1) - (k as f64 / self.r) * self.value(k)
    }

    /// `f_k''` from the ladder identity applied twice.
    pub fn second_derivative(&self, k: i64) -> f64 {
        if k == 0 {
            return -self.value(0);
        }
        let kf = k as f64;
        let r = self.r;
        self.derivative(k - 1) + kf / (r * r) * self.value(k) - kf / r * self.derivative(k)
    }

    pub fn pair(&self, k: i64) -> FunctionPair {
        FunctionPair {
            value: self.value(k),
            derivative: self.derivative(k),
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain {
            what: "radius",
            value: r,
        });
    }
    Ok(())
}

/// `(u_m(r), u_m'(r))`.
///
/// `r = 0` returns the exact limit: value 0, derivative 1 for `m = 0` and 0 otherwise.
pub fn eval_regular(m: Order, r: f64) -> Result<FunctionPair> {
    if r == 0.0 {
        return Ok(FunctionPair {
            value: 0.0,
            derivative: if m.get() == 0 { 1.0 } else { 0.0 },
        });
    }
    let ladder = Ladder::new(Family::Regular, m, r)?;
    let pair = ladder.pair(m.get() as i64);
    finite(pair, "regular Riccati-Bessel function", r)
}

/// `(v_m(r), v_m'(r))`, normalized so that `v_0 = -cos r`. Requires `r > 0`.
pub fn eval_irregular(m: Order, r: f64) -> Result<FunctionPair> {
    let ladder = Ladder::new(Family::Irregular, m, r)?;
    let pair = ladder.pair(m.get() as i64);
    finite(pair, "irregular Riccati-Bessel function", r)
}

/// Dispatch on `family`.
pub fn eval(family: Family, m: Order, r: f64) -> Result<FunctionPair> {
    match family {
        Family::Regular => eval_regular(m, r),
        Family::Irregular => eval_irregular(m, r),
    }
}

/// `u_m v_m' - u_m' v_m`; identically 1 in exact arithmetic.
pub fn wronskian(m: Order, r: f64) -> Result<f64> {
    let u = eval_regular(m, r)?;
    let v = eval_irregular(m, r)?;
    Ok(u.value * v.derivative - u.derivative * v.value)
}

fn finite(pair: FunctionPair, what: &'static str, r: f64) -> Result<FunctionPair> {
    if pair.value.is_finite() && pair.derivative.is_finite() {
        Ok(pair)
    } else {
        Err(Error::NonFinite { what, at: r })
    }
}

/// Taylor series of `u_m(r)`:
///
/// ```text
/// u_m(r) = r^{m+1}/(2m+1)!! · Σ_k (-r²/2)^k / (k! (2m+3)(2m+5)…(2m+2k+1))
/// ```
///
/// Accurate to machine precision for `r <= 1`; used below [`SERIES_CROSSOVER`].
pub fn regular_series(m: Order, r: f64) -> f64 {
    let m = m.get() as usize;
    let mut lead = r;
    for k in 1..=m {
        lead *= r / (2 * k + 1) as f64;
    }
    let x = -0.5 * r * r;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= x / (k as f64 * (2 * m + 2 * k + 1) as f64);
        sum += term;
        if libm::fabs(term) <= 1e-17 * libm::fabs(sum) {
            break;
        }
    }
    lead * sum
}

/// `u_m(r)` from Miller's backward recurrence alone, whatever the radius.
pub fn regular_recurrence(m: Order, r: f64) -> Result<f64> {
    check_radius(r)?;
    let m = m.get() as usize;
    Ok(regular_recurrence_values(m, r)[m])
}

/// `u_0..=u_m` with `u_0`, `u_1` in closed form and the rest by backward recurrence
/// normalized against them.
fn regular_recurrence_values(m: usize, r: f64) -> Vec<f64> {
    let (s, c) = (libm::sin(r), libm::cos(r));
    let u0 = s;
    let u1 = s / r - c;
    let mut out = vec![0.0; m + 1];
    out[0] = u0;
    if m >= 1 {
        out[1] = u1;
    }
    if m < 2 {
        return out;
    }

    const BIG: f64 = 1e200;
    let start = m.max(r as usize) + 40 + (4.0 * libm::cbrt(r)) as usize;
    let mut above = 0.0; // f_{k+1}
    let mut here = 1e-30; // f_k
    let mut scaled = vec![0.0; m + 1];
    let mut k = start;
    loop {
        if k <= m {
            scaled[k] = here;
        }
        if k == 0 {
            break;
        }
        // f_{k-1} = ((2k+1)/r) f_k - f_{k+1}
        let below = (2 * k + 1) as f64 / r * here - above;
        above = here;
        here = below;
        k -= 1;
        if libm::fabs(here) > BIG {
            here /= BIG;
            above /= BIG;
            for x in scaled.iter_mut() {
                *x /= BIG;
            }
        }
    }

    // Least-squares fit of the scale against both closed forms; sin r and u_1 never
    // vanish together.
    let norm = libm::fabs(scaled[0]).max(libm::fabs(scaled[1]));
    let (a, b) = (scaled[0] / norm, scaled[1] / norm);
    let scale = (a * u0 + b * u1) / ((a * a + b * b) * norm);
    for k in 2..=m {
        out[k] = scaled[k] * scale;
    }
    out
}

fn irregular_forward(m: usize, r: f64) -> Result<Vec<f64>> {
    let mut v = Vec::with_capacity(m + 2);
    v.push(libm::sin(r));
    v.push(-libm::cos(r));
    for k in 0..m {
        let next = (2 * k + 1) as f64 / r * v[k + 1] - v[k];
        if !next.is_finite() {
            return Err(Error::NonFinite {
                what: "irregular Riccati-Bessel recurrence",
                at: r,
            });
        }
        v.push(next);
    }
    Ok(v)
}
