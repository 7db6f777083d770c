#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tempest::graph::{
    build_edge_markovian, DynamicGraphModel, EdgeProcessModel, GraphKind, TimeModel,
};
use tempest::rng;
use tempest::threshold::EpidemicParams;

pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    rng::stream(seed, &[name.into()])
}

pub fn uniform<R: Rng>(r: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

pub fn log_uniform<R: Rng>(r: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * r.random::<f64>()).exp()
}

/// All ordered (AMAI) or unordered `i < j` (AMEI) node pairs.
pub fn pairs(n: usize, kind: GraphKind) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let keep = match kind {
                GraphKind::Amei => i < j,
                GraphKind::Amai => i != j,
            };
            if keep {
                v.push((i, j));
            }
        }
    }
    v
}

/// Random two-state edge with rates (CT) or probabilities (DT) drawn from
/// ranges that keep the chain irreducible and aperiodic.
pub fn random_edge<R: Rng>(r: &mut R, time: TimeModel) -> EdgeProcessModel {
    let (q, s) = match time {
        TimeModel::Ct => (log_uniform(r, 0.3, 3.0), log_uniform(r, 0.3, 3.0)),
        TimeModel::Dt => (uniform(r, 0.05, 0.6), uniform(r, 0.05, 0.6)),
    };
    build_edge_markovian(q, s, time).expect("positive rates")
}

/// `m` distinct switching edges on `n` nodes.
pub fn random_markov_graph<R: Rng>(
    r: &mut R,
    n: usize,
    m: usize,
    kind: GraphKind,
    time: TimeModel,
) -> DynamicGraphModel {
    let all = pairs(n, kind);
    let m = m.min(all.len());
    let mut g = DynamicGraphModel::new(n, kind);
    for k in sample(r, all.len(), m) {
        let (i, j) = all[k];
        let e = random_edge(r, time);
        g.insert(i, j, e).expect("valid edge");
    }
    g
}

/// Each pair switching with probability `density`, static-on with
/// probability `static_on`, absent otherwise.
pub fn random_mixed_graph<R: Rng>(
    r: &mut R,
    n: usize,
    density: f64,
    static_on: f64,
    kind: GraphKind,
    time: TimeModel,
) -> DynamicGraphModel {
    let mut g = DynamicGraphModel::new(n, kind);
    for (i, j) in pairs(n, kind) {
        let u: f64 = r.random();
        if u < static_on {
            g.insert(i, j, EdgeProcessModel::static_on(time)).unwrap();
        } else if u < static_on + density {
            let e = random_edge(r, time);
            g.insert(i, j, e).unwrap();
        }
    }
    g
}

/// Heterogeneous rates `β_i = f·w_i`, `δ_i` in `[d_lo, d_hi]`.
pub fn scaled_params(f: f64, w: &[f64], delta: &[f64]) -> EpidemicParams {
    EpidemicParams::new(w.iter().map(|x| f * x).collect(), delta.to_vec()).unwrap()
}

/// Random Metzler matrix with off-diagonal density `p`.
pub fn random_metzler<R: Rng>(r: &mut R, n: usize, p: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            uniform(r, -3.0, 1.0)
        } else if r.random::<f64>() < p {
            uniform(r, 0.0, 2.0)
        } else {
            0.0
        }
    })
}

/// Largest `f` in `[lo, hi]` with `pred(f)` true, for a predicate true at
/// `lo` and monotone in `f`.
pub fn bisect_scale(mut lo: f64, mut hi: f64, mut pred: impl FnMut(f64) -> bool) -> f64 {
    if pred(hi) {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Each pair switching with stationary on-probability in `[0.01, pi_hi]`
/// with probability 0.8, static-on with probability 0.1, absent otherwise.
/// Rarely-on edges inflate `sgn Ā` far above `Ā`, which is where the
/// certificates beat the support bound.
pub fn random_rare_graph<R: Rng>(
    r: &mut R,
    n: usize,
    pi_hi: f64,
    kind: GraphKind,
    time: TimeModel,
) -> DynamicGraphModel {
    let mut g = DynamicGraphModel::new(n, kind);
    for (i, j) in pairs(n, kind) {
        let u: f64 = r.random();
        if u < 0.1 {
            g.insert(i, j, EdgeProcessModel::static_on(time)).unwrap();
        } else if u < 0.9 {
            let pi = uniform(r, 0.01, pi_hi);
            let total = match time {
                TimeModel::Ct => log_uniform(r, 0.3, 10.0),
                TimeModel::Dt => uniform(r, 0.2, 1.0),
            };
            let e = build_edge_markovian(pi * total, (1.0 - pi) * total, time).unwrap();
            g.insert(i, j, e).unwrap();
        }
    }
    g
}
