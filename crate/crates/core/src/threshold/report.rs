use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Which test produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Certificate {
    /// Arc-independent, continuous time.
    T1,
    /// Edge-independent, continuous time.
    T2,
    /// Edge-independent, continuous time, homogeneous rates.
    T3,
    /// Edge-independent, discrete time.
    T4,
    StaticCt,
    StaticDt,
    /// The support graph alone is stable; the optimization is not needed.
    SupportTrivial,
}

impl Certificate {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Some(Self::T1),
            "t2" => Some(Self::T2),
            "t3" => Some(Self::T3),
            "t4" => Some(Self::T4),
            "static_ct" | "static-ct" => Some(Self::StaticCt),
            "static_dt" | "static-dt" => Some(Self::StaticDt),
            _ => None,
        }
    }
}

/// Output of a certificate.
///
/// `stable == (lhs < threshold)` and `decay_rate_bound.is_some() == stable`.
/// Infinite thresholds serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// The test that decided the verdict.
    pub certificate: Certificate,
    /// The test that was requested.
    pub requested: Certificate,
    pub lhs: f64,
    pub threshold: f64,
    pub s_star: Option<f64>,
    pub decay_rate_bound: Option<f64>,
    pub stable: bool,
    /// Whether the support graph alone certifies stability.
    pub support_trivial: bool,
    pub intermediates: BTreeMap<String, f64>,
}

impl ThresholdReport {
    pub(crate) fn new(
        requested: Certificate,
        certificate: Certificate,
        lhs: f64,
        threshold: f64,
    ) -> Self {
        Self {
            certificate,
            requested,
            lhs,
            threshold,
            s_star: None,
            decay_rate_bound: None,
            stable: lhs < threshold,
            support_trivial: false,
            intermediates: BTreeMap::new(),
        }
    }

    pub(crate) fn set(&mut self, key: &str, v: f64) -> &mut Self {
        self.intermediates.insert(key.to_string(), v);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.intermediates.get(key).copied()
    }

    /// Records the decay bound when the verdict is stable.
    pub(crate) fn with_decay(mut self, decay: f64) -> Self {
        self.decay_rate_bound = self.stable.then_some(decay);
        self
    }
}
