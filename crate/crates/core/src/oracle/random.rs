//! Random certificate matrices `M₁..M₄` with independent Bernoulli `h_ij`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MeanMatrix;
use crate::rng;
use crate::spectral::eigen::DENSE_LIMIT;
use crate::spectral::{kappa, matrix_measure, spectral_abscissa, KappaParams};
use crate::threshold::{delta1, delta2, delta3, EpidemicParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// `M₁ = −D + Σ_{i≠j} β_i h_ij E_ij`; statistic `μ`.
    M1,
    /// `M₂ = −D + Σ_{i<j} √(β_iβ_j)(E_ij+E_ji) h_ij`; statistic `η`.
    M2,
    /// `M₃ = Σ_{i<j} (E_ij+E_ji) h_ij`; statistic `η`.
    M3,
    /// `M₄ = I − D + Σ_{i<j} √(β_iβ_j)(E_ij+E_ji) h_ij`; statistic `log η`.
    M4,
}

/// One independent Bernoulli term.
#[derive(Debug, Clone, PartialEq)]
struct Term {
    p: f64,
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomMatrixSampler {
    kind: SamplerKind,
    n: usize,
    /// Deterministic part, including terms with mean 1.
    base: DMatrix<f64>,
    /// Terms with mean strictly inside `(0, 1)`.
    terms: Vec<Term>,
    /// Concentration constants `(C, v²)`.
    c: f64,
    v2: f64,
}

impl RandomMatrixSampler {
    /// `params` is ignored for `M₃`.
    pub fn new(kind: SamplerKind, mean: &MeanMatrix, params: &EpidemicParams) -> Result<Self> {
        let n = mean.n();
        if params.n() != n {
            return Err(Error::InvalidParams(format!(
                "{} rate entries for {n} nodes",
                params.n()
            )));
        }
        let a = &mean.a_bar;
        if kind != SamplerKind::M1 && !mean.is_symmetric() {
            return Err(Error::WrongKind { expected: "AMEI" });
        }
        if kind == SamplerKind::M4 {
            params.check_discrete()?;
        }
        let (beta, delta) = (params.beta(), params.delta());
        let mut base = DMatrix::zeros(n, n);
        match kind {
            SamplerKind::M1 | SamplerKind::M2 => {
                for i in 0..n {
                    base[(i, i)] = -delta[i];
                }
            }
            SamplerKind::M4 => {
                for i in 0..n {
                    base[(i, i)] = 1.0 - delta[i];
                }
            }
            SamplerKind::M3 => {}
        }
        let mut terms = Vec::new();
        let mut push = |p: f64, entries: Vec<(usize, usize, f64)>, base: &mut DMatrix<f64>| {
            if p >= 1.0 {
                for (i, j, v) in entries {
                    base[(i, j)] += v;
                }
            } else if p > 0.0 {
                terms.push(Term { p, entries });
            }
        };
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                match kind {
                    SamplerKind::M1 => push(a[(i, j)], vec![(i, j, beta[i])], &mut base),
                    _ if j > i => {
                        let w = match kind {
                            SamplerKind::M3 => 1.0,
                            _ => (beta[i] * beta[j]).sqrt(),
                        };
                        push(a[(i, j)], vec![(i, j, w), (j, i, w)], &mut base);
                    }
                    _ => {}
                }
            }
        }
        let (c, v2) = match kind {
            SamplerKind::M1 => (params.beta_max(), delta1(a, beta)),
            SamplerKind::M2 | SamplerKind::M4 => (params.beta_max(), delta2(a, beta)),
            SamplerKind::M3 => (1.0, delta3(a)),
        };
        Ok(Self {
            kind,
            n,
            base,
            terms,
            c,
            v2,
        })
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    /// Number of independent Bernoulli terms.
    pub fn random_terms(&self) -> usize {
        self.terms.len()
    }

    /// Bound `C` and variance proxy `v²` of the symmetric family.
    pub fn concentration(&self) -> (f64, f64) {
        (self.c, self.v2)
    }

    pub fn expected_matrix(&self) -> DMatrix<f64> {
        let mut m = self.base.clone();
        for t in &self.terms {
            for &(i, j, v) in &t.entries {
                m[(i, j)] += t.p * v;
            }
        }
        m
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let mut m = self.base.clone();
        for t in &self.terms {
            if rng.random::<f64>() < t.p {
                for &(i, j, v) in &t.entries {
                    m[(i, j)] += v;
                }
            }
        }
        m
    }

    /// The certificate statistic: `μ` for `M₁`, `η` for `M₂`/`M₃`, `log η`
    /// for `M₄`.
    pub fn statistic(&self, m: &DMatrix<f64>) -> Result<f64> {
        match self.kind {
            SamplerKind::M1 => matrix_measure(m),
            SamplerKind::M2 | SamplerKind::M3 => symmetric_abscissa(m),
            SamplerKind::M4 => symmetric_abscissa(m).map(f64::ln),
        }
    }

    /// The symmetric matrix whose top eigenvalue the tail bound controls:
    /// `M + Mᵀ` for `M₁`, `M` itself otherwise.
    pub fn symmetric_part(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self.kind {
            SamplerKind::M1 => m + m.transpose(),
            _ => m.clone(),
        }
    }
}

/// One draw with independent Bernoulli `h_ij`, replayable from `seed`.
pub fn sample_certificate_matrix(sampler: &RandomMatrixSampler, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, &["certificate-matrix".into()]);
    sampler.sample_with(&mut r)
}

fn symmetric_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() <= DENSE_LIMIT {
        Ok(SymmetricEigen::new(m.clone()).eigenvalues.max())
    } else {
        spectral_abscissa(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectationMode {
    Exhaustive,
    MonteCarlo,
}

/// Cap on random terms in exhaustive mode.
pub const MAX_EXHAUSTIVE_BITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    /// Configurations summed (exhaustive) or draws (Monte Carlo).
    pub samples: usize,
}

/// `E[μ(M₁)]`, `E[η(M₂)]`, `E[η(M₃)]` or `E[log η(M₄)]`.
///
/// Exhaustive mode walks all `2^r` configurations of the `r` random terms in
/// Gray-code order, so consecutive matrices differ by one term and the
/// probability weight is updated by one factor.
pub fn expected_certificate(
    sampler: &RandomMatrixSampler,
    mode: ExpectationMode,
    draws: usize,
    seed: u64,
) -> Result<Estimate> {
    match mode {
        ExpectationMode::Exhaustive => exhaustive(sampler),
        ExpectationMode::MonteCarlo => monte_carlo(sampler, draws, seed),
    }
}

fn exhaustive(s: &RandomMatrixSampler) -> Result<Estimate> {
    let r = s.terms.len();
    if r > MAX_EXHAUSTIVE_BITS {
        return Err(Error::TooManyConfigurations {
            bits: r,
            limit: MAX_EXHAUSTIVE_BITS,
        });
    }
    let mut m = s.base.clone();
    let mut on = vec![false; r];
    let mut log_w: f64 = s.terms.iter().map(|t| (1.0 - t.p).ln()).sum();
    let mut total = s.statistic(&m)? * log_w.exp();
    for k in 1..(1u64 << r) {
        let bit = k.trailing_zeros() as usize;
        let t = &s.terms[bit];
        let sign = if on[bit] { -1.0 } else { 1.0 };
        for &(i, j, v) in &t.entries {
            m[(i, j)] += sign * v;
        }
        log_w += if on[bit] {
            (1.0 - t.p).ln() - t.p.ln()
        } else {
            t.p.ln() - (1.0 - t.p).ln()
        };
        on[bit] = !on[bit];
        let w = log_w.exp();
        if w > 0.0 {
            total += w * s.statistic(&m)?;
        }
    }
    Ok(Estimate {
        value: total,
        std_error: 0.0,
        samples: 1 << r,
    })
}

fn monte_carlo(s: &RandomMatrixSampler, draws: usize, seed: u64) -> Result<Estimate> {
    if draws < 2 {
        return Err(Error::InsufficientData {
            got: draws,
            need: 2,
        });
    }
    let key = rng::derive_key(seed, &["expected-certificate".into()]);
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut r = rng::item_stream(&key, d as u64);
            s.statistic(&s.sample_with(&mut r))
        })
        .collect::<Result<_>>()?;
    let (mean, se) = mean_se(&values);
    Ok(Estimate {
        value: mean,
        std_error: se,
        samples: draws,
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One point of a tail-bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChungPoint {
    pub s: f64,
    /// Frequency of `η(X) > η(E[X]) + s`.
    pub empirical: f64,
    /// `κ_{C,v²}(s)`.
    pub bound: f64,
    /// Binomial standard error of `empirical`.
    pub std_error: f64,
}

impl ChungPoint {
    /// `empirical ≤ bound + 3·SE`.
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound + 3.0 * self.std_error
    }
}

/// Empirical tail of the top eigenvalue against the concentration bound.
pub fn chung_tail_check(
    sampler: &RandomMatrixSampler,
    s_grid: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<ChungPoint>> {
    if draws == 0 {
        return Err(Error::InsufficientData { got: 0, need: 1 });
    }
    let (c, v2) = sampler.concentration();
    let center = symmetric_abscissa(&sampler.symmetric_part(&sampler.expected_matrix()))?;
    let key = rng::derive_key(seed, &["chung".into()]);
    let tops: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut r = rng::item_stream(&key, d as u64);
            symmetric_abscissa(&sampler.symmetric_part(&sampler.sample_with(&mut r)))
        })
        .collect::<Result<_>>()?;
    let kp = KappaParams::new(c, v2, sampler.n)?;
    s_grid
        .iter()
        .map(|&s| {
            let hits = tops.iter().filter(|&&t| t > center + s).count();
            let p = hits as f64 / draws as f64;
            Ok(ChungPoint {
                s,
                empirical: p,
                bound: kappa(kp, s)?,
                std_error: (p * (1.0 - p) / draws as f64).sqrt(),
            })
        })
        .collect()
}
