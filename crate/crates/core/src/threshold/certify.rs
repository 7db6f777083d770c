//! The linear-size stability certificates and the static baselines.

use nalgebra::DMatrix;

use super::params::EpidemicParams;
use super::report::{Certificate, ThresholdReport};
use crate::error::{Error, Result};
use crate::graph::{DynamicGraphModel, GraphKind, MeanMatrix, TimeModel};
use crate::spectral::{
    c_minus, kappa, kappa_inv_at_one, log_kappa, matrix_measure, maximize_on_interval,
    spectral_abscissa, KappaParams, MaximizeOptions,
};

/// Verdict of a static (deterministic-graph) condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticVerdict {
    pub stable: bool,
    pub lhs: f64,
    pub threshold: f64,
    /// `threshold − lhs`.
    pub margin: f64,
}

/// Continuous-time static condition on adjacency `a`.
///
/// Homogeneous rates: `β/δ < 1/η(A)`. Otherwise `η(BA − D) < 0`.
pub fn static_ct_condition(a: &DMatrix<f64>, params: &EpidemicParams) -> Result<StaticVerdict> {
    check_dims(a, params)?;
    let (lhs, threshold) = match params.as_homogeneous() {
        Some((b, d)) => {
            let eta = spectral_abscissa(a)?;
            (b / d, if eta > 0.0 { 1.0 / eta } else { f64::INFINITY })
        }
        None => (spectral_abscissa(&params.ct_matrix(a))?, 0.0),
    };
    Ok(StaticVerdict {
        stable: lhs < threshold,
        lhs,
        threshold,
        margin: threshold - lhs,
    })
}

/// Discrete-time static condition `η(BA + I − D) < 1`.
pub fn static_dt_condition(a: &DMatrix<f64>, params: &EpidemicParams) -> Result<StaticVerdict> {
    check_dims(a, params)?;
    params.check_discrete()?;
    let lhs = spectral_abscissa(&params.dt_matrix(a))?;
    Ok(StaticVerdict {
        stable: lhs < 1.0,
        lhs,
        threshold: 1.0,
        margin: 1.0 - lhs,
    })
}

fn check_dims(a: &DMatrix<f64>, params: &EpidemicParams) -> Result<()> {
    if a.nrows() != params.n() || a.ncols() != params.n() {
        return Err(Error::InvalidParams(format!(
            "{} rate entries for a {}x{} graph",
            params.n(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Checks kind, time model and irreducibility, and returns `Ā`.
pub fn prepare(
    graph: &DynamicGraphModel,
    kind: Option<GraphKind>,
    time: TimeModel,
) -> Result<MeanMatrix> {
    if let Some(k) = kind {
        if graph.kind() != k {
            return Err(Error::WrongKind { expected: k.name() });
        }
    }
    if let Some(t) = graph.time_model() {
        if t != time {
            return Err(Error::WrongTime {
                expected: match time {
                    TimeModel::Ct => "continuous time",
                    TimeModel::Dt => "discrete time",
                },
            });
        }
    }
    graph.check_irreducible()?;
    if time == TimeModel::Dt {
        graph.check_aperiodic()?;
    }
    graph.mean_matrix()
}

/// `Δ₁ = max_i Σ_j (β_i² Ā_ij(1−Ā_ij) + β_j² Ā_ji(1−Ā_ji))`.
pub fn delta1(a: &DMatrix<f64>, beta: &[f64]) -> f64 {
    let n = a.nrows();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (x, y) = (a[(i, j)], a[(j, i)]);
                    beta[i] * beta[i] * x * (1.0 - x) + beta[j] * beta[j] * y * (1.0 - y)
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `Δ₂ = max_i Σ_j β_i β_j Ā_ij(1−Ā_ij)`.
pub fn delta2(a: &DMatrix<f64>, beta: &[f64]) -> f64 {
    let n = a.nrows();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let x = a[(i, j)];
                    beta[i] * beta[j] * x * (1.0 - x)
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `Δ₃ = max_i Σ_j Ā_ij(1−Ā_ij)`.
pub fn delta3(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)] * (1.0 - a[(i, j)])).sum::<f64>())
        .fold(0.0, f64::max)
}

fn static_ct_report(
    requested: Certificate,
    mean: &MeanMatrix,
    params: &EpidemicParams,
) -> Result<ThresholdReport> {
    let lhs = spectral_abscissa(&params.ct_matrix(&mean.a_bar))?;
    let mut r = ThresholdReport::new(requested, Certificate::StaticCt, lhs, 0.0);
    r.set("eta_BA_minus_D", lhs);
    Ok(r.with_decay(-lhs))
}

fn static_dt_report(mean: &MeanMatrix, params: &EpidemicParams) -> Result<ThresholdReport> {
    let lhs = spectral_abscissa(&params.dt_matrix(&mean.a_bar))?;
    let mut r = ThresholdReport::new(Certificate::T4, Certificate::StaticDt, lhs, 1.0);
    r.set("lambda4", lhs);
    let decay = if lhs > 0.0 { -lhs.ln() } else { f64::INFINITY };
    Ok(r.with_decay(decay))
}

/// Arc-independent continuous-time certificate on a mean matrix.
pub fn t1_report(mean: &MeanMatrix, params: &EpidemicParams) -> Result<ThresholdReport> {
    check_dims(&mean.a_bar, params)?;
    let n = mean.n();
    let d1 = delta1(&mean.a_bar, params.beta());
    if d1 == 0.0 {
        let mut r = static_ct_report(Certificate::T1, mean, params)?;
        r.set("Delta1", 0.0);
        return Ok(r);
    }
    let kp = KappaParams::new(params.beta_max(), d1, n)?;
    let s0 = kappa_inv_at_one(kp)?;
    let mu_support = matrix_measure(&params.ct_matrix(&mean.support_matrix()))?;
    let c1 = mu_support - s0 / 2.0;
    let sbar = 2.0 * params.delta_min() + 2.0 * c_minus(c1);
    let lhs = matrix_measure(&params.ct_matrix(&mean.a_bar))?;

    let mut tmp = ThresholdReport::new(Certificate::T1, Certificate::T1, lhs, f64::NEG_INFINITY);
    tmp.set("Delta1", d1)
        .set("kappa_inv_1", s0)
        .set("c1", c1)
        .set("sbar1", sbar)
        .set("mu_support", mu_support)
        .set("mu_BA_minus_D", lhs);

    if mu_support < 0.0 {
        return Ok(support_trivial(tmp, -mu_support));
    }
    let objective = |s: f64| {
        let k = kappa(kp, s).unwrap_or(f64::NAN);
        -(s + 2.0 * c1 * k) / (2.0 * (1.0 - k))
    };
    let Some(best) = optimize(objective, s0, sbar, false)? else {
        tmp.set("tau_A", f64::NEG_INFINITY);
        return Ok(tmp);
    };
    let k = kappa(kp, best.0)?;
    let mut r = ThresholdReport {
        threshold: best.1,
        stable: lhs < best.1,
        s_star: Some(best.0),
        ..tmp
    };
    r.set("tau_A", best.1)
        .set("s_star", best.0)
        .set("kappa_at_s_star", k);
    let decay = -lhs * (1.0 - k) - best.0 / 2.0 - c1 * k;
    if r.stable {
        r.set("decay_bound", decay);
    }
    Ok(r.with_decay(decay))
}

/// Edge-independent continuous-time certificate on a mean matrix.
pub fn t2_report(mean: &MeanMatrix, params: &EpidemicParams) -> Result<ThresholdReport> {
    check_dims(&mean.a_bar, params)?;
    let n = mean.n();
    let d2 = delta2(&mean.a_bar, params.beta());
    if d2 == 0.0 {
        let mut r = static_ct_report(Certificate::T2, mean, params)?;
        r.set("Delta2", 0.0);
        return Ok(r);
    }
    let kp = KappaParams::new(params.beta_max(), d2, n)?;
    let s0 = kappa_inv_at_one(kp)?;
    let eta_support = spectral_abscissa(&params.ct_matrix(&mean.support_matrix()))?;
    let c2 = eta_support - s0;
    let sbar = params.delta_min() + c_minus(c2);
    let lhs = spectral_abscissa(&params.ct_matrix(&mean.a_bar))?;

    let mut tmp = ThresholdReport::new(Certificate::T2, Certificate::T2, lhs, f64::NEG_INFINITY);
    tmp.set("Delta2", d2)
        .set("kappa_inv_1", s0)
        .set("c2", c2)
        .set("sbar2", sbar)
        .set("eta_support", eta_support)
        .set("eta_BA_minus_D", lhs);

    if eta_support < 0.0 {
        return Ok(support_trivial(tmp, -eta_support));
    }
    let objective = |s: f64| {
        let k = kappa(kp, s).unwrap_or(f64::NAN);
        -(s + c2 * k) / (1.0 - k)
    };
    let Some(best) = optimize(objective, s0, sbar, false)? else {
        tmp.set("tau_E", f64::NEG_INFINITY);
        return Ok(tmp);
    };
    let k = kappa(kp, best.0)?;
    let mut r = ThresholdReport {
        threshold: best.1,
        stable: lhs < best.1,
        s_star: Some(best.0),
        ..tmp
    };
    r.set("tau_E", best.1)
        .set("s_star", best.0)
        .set("kappa_at_s_star", k);
    let decay = -lhs * (1.0 - k) - best.0 - c2 * k;
    if r.stable {
        r.set("decay_bound", decay);
    }
    Ok(r.with_decay(decay))
}

/// The factor `ξ_H` and its optimizer, from the scalar summary of a
/// homogeneous instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiH {
    /// `+∞` when `β/δ < 1/η(sgn Ā)`; `−∞` when the search interval is empty.
    pub value: f64,
    pub s_star: Option<f64>,
    pub kappa_inv_1: f64,
    pub c3: f64,
    pub sbar3: f64,
}

/// `ξ_H` for `n` nodes, support abscissa `η(sgn Ā)`, variability `Δ₃ > 0` and
/// ratio `β/δ`.
pub fn xi_h(n: usize, eta_sgn: f64, delta3: f64, beta_over_delta: f64) -> Result<XiH> {
    let kp = KappaParams::new(1.0, delta3, n)?;
    let s0 = kappa_inv_at_one(kp)?;
    let c3 = eta_sgn - s0;
    let sbar = 1.0 / beta_over_delta + c_minus(c3);
    let mut out = XiH {
        value: f64::INFINITY,
        s_star: None,
        kappa_inv_1: s0,
        c3,
        sbar3: sbar,
    };
    if 1.0 - beta_over_delta * eta_sgn > 0.0 {
        return Ok(out);
    }
    let objective = |s: f64| {
        let k = kappa(kp, s).unwrap_or(f64::NAN);
        (1.0 - beta_over_delta * (s + c3 * k)) / (1.0 - k)
    };
    match optimize(objective, s0, sbar, false)? {
        Some((s, v)) => {
            out.value = v;
            out.s_star = Some(s);
        }
        None => out.value = f64::NEG_INFINITY,
    }
    Ok(out)
}

/// Homogeneous edge-independent continuous-time certificate.
///
/// Reports `lhs = β/δ` and `threshold = ξ_H/η(Ā)`. The decay bound is
/// `δ − β(λ₃ + s* + (c₃ − λ₃)κ(s*))` with `λ₃ = η(Ā)`; the same quantity
/// divided by `β` is kept as `decay_bound_per_beta`.
pub fn t3_report(mean: &MeanMatrix, beta: f64, delta: f64) -> Result<ThresholdReport> {
    let params = EpidemicParams::homogeneous(mean.n(), beta, delta)?;
    let n = mean.n();
    let d3 = delta3(&mean.a_bar);
    let ratio = beta / delta;
    let lambda3 = spectral_abscissa(&mean.a_bar)?;
    if d3 == 0.0 {
        let v = static_ct_condition(&mean.a_bar, &params)?;
        let mut r =
            ThresholdReport::new(Certificate::T3, Certificate::StaticCt, v.lhs, v.threshold);
        r.set("Delta3", 0.0).set("lambda3", lambda3);
        return Ok(r.with_decay(delta - beta * lambda3));
    }
    let eta_sgn = spectral_abscissa(&mean.support_matrix())?;
    let xi = xi_h(n, eta_sgn, d3, ratio)?;
    let threshold = xi.value / lambda3;
    let mut r = ThresholdReport::new(Certificate::T3, Certificate::T3, ratio, threshold);
    r.set("Delta3", d3)
        .set("kappa_inv_1", xi.kappa_inv_1)
        .set("c3", xi.c3)
        .set("sbar3", xi.sbar3)
        .set("lambda3", lambda3)
        .set("eta_sgn", eta_sgn)
        .set("xi_H", xi.value);
    if xi.value == f64::INFINITY {
        let mut r = support_trivial(r, delta - beta * eta_sgn);
        r.threshold = f64::INFINITY;
        return Ok(r);
    }
    let Some(s) = xi.s_star else {
        return Ok(r);
    };
    let k = kappa(KappaParams::new(1.0, d3, n)?, s)?;
    r.s_star = Some(s);
    r.set("s_star", s).set("kappa_at_s_star", k);
    let per_beta = 1.0 / ratio - lambda3 - s - (xi.c3 - lambda3) * k;
    let decay = beta * per_beta;
    if r.stable {
        r.set("decay_bound", decay)
            .set("decay_bound_per_beta", per_beta);
    }
    Ok(r.with_decay(decay))
}

/// Edge-independent discrete-time certificate on a mean matrix.
pub fn t4_report(mean: &MeanMatrix, params: &EpidemicParams) -> Result<ThresholdReport> {
    check_dims(&mean.a_bar, params)?;
    params.check_discrete()?;
    let n = mean.n();
    let d2 = delta2(&mean.a_bar, params.beta());
    if d2 == 0.0 {
        let mut r = static_dt_report(mean, params)?;
        r.set("Delta2", 0.0);
        return Ok(r);
    }
    let lambda4 = spectral_abscissa(&params.dt_matrix(&mean.a_bar))?;
    let eta_max = spectral_abscissa(&params.dt_matrix(&mean.support_matrix()))?;
    let kp = KappaParams::new(params.beta_max(), d2, n)?;
    let mut r = ThresholdReport::new(Certificate::T4, Certificate::T4, lambda4, f64::NEG_INFINITY);
    r.set("Delta2", d2)
        .set("lambda4", lambda4)
        .set("eta_Mmax", eta_max);
    if lambda4 >= 1.0 || lambda4 <= 0.0 {
        r.set("tau_D", f64::NEG_INFINITY);
        return Ok(r);
    }
    // λ₄ ≤ η(M_max) by Metzler monotonicity; the ratio is clamped against
    // rounding so the base stays in (0, 1].
    let log_ratio = (lambda4 / eta_max).ln().min(0.0);
    let objective = |s: f64| {
        let lk = log_kappa(kp, s).unwrap_or(f64::NAN);
        (lk.exp() * log_ratio).exp() - s
    };
    let best = maximize_on_interval(
        objective,
        0.0,
        1.0 - lambda4,
        MaximizeOptions {
            closed_lo: true,
            ..Default::default()
        },
    )?;
    let (s, tau) = (best.s_star, best.value);
    let k = kappa(kp, s)?;
    r.threshold = tau;
    r.stable = lambda4 < tau;
    r.s_star = Some(s);
    r.set("tau_D", tau)
        .set("s_star", s)
        .set("kappa_at_s_star", k);
    let gamma = -(lambda4 + s).ln() + k * log_ratio;
    r.set("gamma_D", gamma);
    if r.stable {
        r.set("decay_bound", gamma);
    }
    Ok(r.with_decay(gamma))
}

fn support_trivial(mut r: ThresholdReport, decay: f64) -> ThresholdReport {
    r.certificate = Certificate::SupportTrivial;
    r.support_trivial = true;
    r.threshold = f64::INFINITY;
    r.stable = true;
    r.s_star = None;
    r.decay_rate_bound = Some(decay);
    r.set("decay_bound", decay);
    r
}

/// Maximizes on `(lo, hi]`; `None` when the interval is empty.
fn optimize<F: FnMut(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    closed: bool,
) -> Result<Option<(f64, f64)>> {
    if !(hi > lo) {
        return Ok(None);
    }
    let r = maximize_on_interval(
        f,
        lo,
        hi,
        MaximizeOptions {
            closed_lo: closed,
            ..Default::default()
        },
    )?;
    Ok(Some((r.s_star, r.value)))
}

/// Arc-independent continuous-time certificate.
pub fn certify_amai_ct(
    graph: &DynamicGraphModel,
    params: &EpidemicParams,
) -> Result<ThresholdReport> {
    let mean = prepare(graph, Some(GraphKind::Amai), TimeModel::Ct)?;
    t1_report(&mean, params)
}

/// Edge-independent continuous-time certificate.
pub fn certify_amei_ct(
    graph: &DynamicGraphModel,
    params: &EpidemicParams,
) -> Result<ThresholdReport> {
    let mean = prepare(graph, Some(GraphKind::Amei), TimeModel::Ct)?;
    t2_report(&mean, params)
}

/// Homogeneous edge-independent continuous-time certificate.
pub fn certify_homogeneous(
    graph: &DynamicGraphModel,
    beta: f64,
    delta: f64,
) -> Result<ThresholdReport> {
    let mean = prepare(graph, Some(GraphKind::Amei), TimeModel::Ct)?;
    t3_report(&mean, beta, delta)
}

/// Edge-independent discrete-time certificate.
pub fn certify_amei_dt(
    graph: &DynamicGraphModel,
    params: &EpidemicParams,
) -> Result<ThresholdReport> {
    let mean = prepare(graph, Some(GraphKind::Amei), TimeModel::Dt)?;
    t4_report(&mean, params)
}

/// Dispatches `cert` on a prepared mean matrix.
pub fn certify_mean(
    cert: Certificate,
    mean: &MeanMatrix,
    params: &EpidemicParams,
) -> Result<ThresholdReport> {
    match cert {
        Certificate::T1 => t1_report(mean, params),
        Certificate::T2 => t2_report(mean, params),
        Certificate::T3 => {
            let (b, d) = params.as_homogeneous().ok_or_else(|| {
                Error::InvalidParams("homogeneous certificate needs equal rates".into())
            })?;
            t3_report(mean, b, d)
        }
        Certificate::T4 => t4_report(mean, params),
        Certificate::StaticCt => static_ct_report(Certificate::StaticCt, mean, params),
        Certificate::StaticDt => {
            let mut r = static_dt_report(mean, params)?;
            r.requested = Certificate::StaticDt;
            Ok(r)
        }
        Certificate::SupportTrivial => Err(Error::InvalidParams(
            "the support test is not requested directly".into(),
        )),
    }
}

/// Graph kind and time model a certificate applies to.
pub fn requirements(cert: Certificate) -> (Option<GraphKind>, TimeModel) {
    match cert {
        Certificate::T1 => (Some(GraphKind::Amai), TimeModel::Ct),
        Certificate::T2 | Certificate::T3 => (Some(GraphKind::Amei), TimeModel::Ct),
        Certificate::T4 => (Some(GraphKind::Amei), TimeModel::Dt),
        Certificate::StaticCt | Certificate::SupportTrivial => (None, TimeModel::Ct),
        Certificate::StaticDt => (None, TimeModel::Dt),
    }
}

/// Checks `graph` against `cert` and evaluates it.
pub fn certify(
    cert: Certificate,
    graph: &DynamicGraphModel,
    params: &EpidemicParams,
) -> Result<ThresholdReport> {
    let (kind, time) = requirements(cert);
    let mean = prepare(graph, kind, time)?;
    certify_mean(cert, &mean, params)
}
