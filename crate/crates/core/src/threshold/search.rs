use serde::{Deserialize, Serialize};

use super::certify::{certify_mean, prepare, requirements};
use super::params::EpidemicParams;
use super::report::Certificate;
use crate::error::{Error, Result};
use crate::graph::{DynamicGraphModel, MeanMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSearch {
    pub lo: f64,
    pub hi: f64,
    /// Half-width of the returned bracket.
    pub tol: f64,
}

impl BetaSearch {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi, tol: 1e-7 }
    }
}

/// Largest homogeneous `β` for which `cert` returns stable, by bisection.
///
/// Returns `hi` when the verdict is stable over the whole bracket, and fails
/// with `BracketError` when `lo` is already unstable.
pub fn threshold_in_beta(
    graph: &DynamicGraphModel,
    delta: f64,
    cert: Certificate,
    search: BetaSearch,
) -> Result<f64> {
    let (kind, time) = requirements(cert);
    let mean = prepare(graph, kind, time)?;
    threshold_in_beta_mean(&mean, delta, cert, search)
}

/// [`threshold_in_beta`] on a prepared mean matrix.
pub fn threshold_in_beta_mean(
    mean: &MeanMatrix,
    delta: f64,
    cert: Certificate,
    search: BetaSearch,
) -> Result<f64> {
    let BetaSearch {
        mut lo,
        mut hi,
        tol,
    } = search;
    if !(lo > 0.0 && hi > lo && tol > 0.0) {
        return Err(Error::InvalidParams(format!(
            "bad search bracket [{lo}, {hi}] with tolerance {tol}"
        )));
    }
    let n = mean.n();
    let stable = |beta: f64| -> Result<bool> {
        let p = EpidemicParams::homogeneous(n, beta, delta)?;
        Ok(certify_mean(cert, mean, &p)?.stable)
    };
    if stable(hi)? {
        return Ok(hi);
    }
    if !stable(lo)? {
        return Err(Error::BracketError { lo, hi });
    }
    while hi - lo > 2.0 * tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
