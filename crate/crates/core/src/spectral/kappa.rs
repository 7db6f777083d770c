//! The concentration function `κ_{b,d}` and its level-one inverse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of `κ_{b,d}(s) = n e^{s/b} ((bs+d)/d)^{-(bs+d)/b²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaParams {
    /// Deviation bound, `b > 0`.
    pub b: f64,
    /// Variance proxy, `d ≥ 0`.
    pub d: f64,
    /// Dimension, `n ≥ 1`.
    pub n: usize,
}

impl KappaParams {
    pub fn new(b: f64, d: f64, n: usize) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::DomainError(format!("kappa needs b > 0, got {b}")));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::DomainError(format!("kappa needs d >= 0, got {d}")));
        }
        if n == 0 {
            return Err(Error::DomainError("kappa needs n >= 1".into()));
        }
        Ok(Self { b, d, n })
    }
}

/// `log κ_{b,d}(s)`. For `d = 0` this is the pointwise limit: `log n` at
/// `s = 0` and `-∞` for `s > 0`.
pub fn log_kappa(p: KappaParams, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::DomainError(format!("kappa needs s >= 0, got {s}")));
    }
    let ln_n = (p.n as f64).ln();
    if s == 0.0 {
        return Ok(ln_n);
    }
    if p.d == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let bs = p.b * s;
    Ok(ln_n + s / p.b - (bs + p.d) / (p.b * p.b) * (bs / p.d).ln_1p())
}

pub fn kappa(p: KappaParams, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(p.n as f64);
    }
    log_kappa(p, s).map(f64::exp)
}

/// Smallest `s₀ ≥ 0` with `κ(s₀) ≤ 1`, to `1e-12` absolute.
///
/// Bisection on a bracket doubled until `κ < 1`; the upper end of the final
/// bracket is returned, so `κ(s₀) ≤ 1` holds exactly in floating point.
pub fn kappa_inv_at_one(p: KappaParams) -> Result<f64> {
    if p.n == 1 {
        return Ok(0.0);
    }
    if p.d == 0.0 {
        return Err(Error::DomainError(
            "kappa inverse is undefined for d = 0".into(),
        ));
    }
    let mut lo = 0.0_f64;
    let mut hi = p.b.max(p.d.sqrt()).max(1e-300);
    while log_kappa(p, hi)? >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NumericalFailure("kappa bracket overflow".into()));
        }
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_kappa(p, mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `c⁻ = (|c| − c)/2 = max(−c, 0)`.
pub fn c_minus(c: f64) -> f64 {
    (-c).max(0.0)
}
