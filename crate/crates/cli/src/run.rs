//! Task runners.

use rayon::prelude::*;
use serde_json::json;

use tempest::graph::{DynamicGraphModel, GraphKind, TimeModel};
use tempest::oracle::{
    chung_tail_check, exponential_condition, expected_certificate, RandomMatrixSampler,
};
use tempest::rng;
use tempest::sim::{empirical_threshold_with, simulate_ct_exact, DtSimulator, InitialInfection};
use tempest::spectral::{kappa, kappa_inv_at_one, matrix_measure, spectral_abscissa, KappaParams};
use tempest::threshold::{
    certify_mean, delta1, delta2, delta3, prepare, requirements, threshold_in_beta_mean, xi_h,
    BetaSearch, Certificate, EpidemicParams,
};

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::graph::{build, BuiltGraph};
use crate::output::{Artifact, Output};

const TRACE_COLUMNS: [&str; 3] = ["path_id", "t_or_k", "infected_count"];

pub fn run(task: &Task, seed: u64) -> CliResult<Output> {
    task.validate()?;
    match task {
        Task::Threshold(a) => threshold(a, seed),
        Task::Simulate(a) => simulate(a, seed),
        Task::Empirical(a) => empirical(a, seed),
        Task::Oracle(a) => oracle(a, seed),
        Task::Chung(a) => chung(a, seed),
        Task::Spectra(a) => spectra(a, seed),
        Task::Figure3(a) => figure3(a),
        Task::Figure456(a) => figure456(a, seed),
    }
}

fn initial(nodes: &Option<Vec<usize>>, n: usize) -> CliResult<InitialInfection> {
    match nodes {
        None => Ok(InitialInfection::All),
        Some(v) => {
            if let Some(&i) = v.iter().find(|&&i| i >= n) {
                return Err(CliError::Config(format!(
                    "initially infected node {i} out of range for n = {n}"
                )));
            }
            Ok(InitialInfection::Nodes(v.clone()))
        }
    }
}

/// T1 for AMAI, T2 for continuous AMEI, T4 for discrete AMEI.
fn default_certificate(g: &BuiltGraph) -> CliResult<Certificate> {
    match (g.graph.kind(), g.time) {
        (GraphKind::Amai, TimeModel::Ct) => Ok(Certificate::T1),
        (GraphKind::Amei, TimeModel::Ct) => Ok(Certificate::T2),
        (GraphKind::Amei, TimeModel::Dt) => Ok(Certificate::T4),
        (GraphKind::Amai, TimeModel::Dt) => Err(CliError::Config(
            "no dynamic certificate for discrete-time amai graphs; pass --certificate static-dt"
                .into(),
        )),
    }
}

fn threshold(a: &ThresholdArgs, seed: u64) -> CliResult<Output> {
    let g = build(&a.graph, seed, Preset::Experiment)?;
    let cert = match a.certificate {
        Some(c) => c,
        None => default_certificate(&g)?,
    };
    let (kind, time) = requirements(cert);
    let mean = prepare(&g.graph, kind, time)?;
    let search = BetaSearch {
        lo: a.beta_lo,
        hi: a.beta_hi,
        tol: a.tol,
    };
    let beta_threshold = threshold_in_beta_mean(&mean, a.delta, cert, search)?;
    let report = match a.beta {
        Some(b) => {
            let p = EpidemicParams::homogeneous(mean.n(), b, a.delta)?;
            Some(certify_mean(cert, &mean, &p)?)
        }
        None => None,
    };
    let result = json!({
        "certificate": cert,
        "delta": a.delta,
        "beta_threshold": beta_threshold,
        "saturated": beta_threshold >= a.beta_hi,
        "report": report,
    });
    Ok(Output {
        summary: json!({"graph": g.source, "n": mean.n()}),
        artifacts: vec![Artifact::json("threshold.json", &result)?],
    })
}

fn simulate(a: &SimulateArgs, seed: u64) -> CliResult<Output> {
    let g = build(&a.graph, seed, Preset::Experiment)?;
    let n = g.graph.n();
    let beta = a.beta()?;
    let params = EpidemicParams::nonnegative(vec![beta; n], vec![a.delta; n])?;
    let init = initial(&a.infected, n)?;
    let path_seed = |k: usize| rng::derive_seed(seed, &["simulate".into(), k.into()]);
    let traces = match g.time {
        TimeModel::Dt => {
            if a.horizon.fract() != 0.0 {
                return Err(CliError::Config(format!(
                    "discrete-time horizon must be a whole step count, got {}",
                    a.horizon
                )));
            }
            let sim = DtSimulator::new(&g.graph)?;
            (0..a.paths)
                .into_par_iter()
                .map(|k| {
                    sim.run(
                        &params,
                        a.horizon as usize,
                        &init,
                        a.reinfect,
                        path_seed(k),
                        false,
                    )
                })
                .collect::<tempest::Result<Vec<_>>>()?
        }
        TimeModel::Ct => {
            if a.reinfect {
                return Err(CliError::Config(
                    "--reinfect is a discrete-time protocol".into(),
                ));
            }
            (0..a.paths)
                .into_par_iter()
                .map(|k| simulate_ct_exact(&g.graph, &params, a.horizon, &init, path_seed(k)))
                .collect::<tempest::Result<Vec<_>>>()?
        }
    };
    let extinct = traces.iter().filter(|t| t.is_extinct()).count();
    let rows = traces.iter().enumerate().flat_map(|(k, t)| {
        t.times
            .iter()
            .zip(&t.infected_counts)
            .map(move |(&time, &c)| (k, time, c))
    });
    let artifact = Artifact::csv("simulate.csv", &TRACE_COLUMNS, rows)?;
    Ok(Output {
        summary: json!({
            "graph": g.source,
            "n": n,
            "time": g.time,
            "paths": a.paths,
            "extinct": extinct,
            "reinfections": traces.iter().map(|t| t.reinfections).sum::<usize>(),
        }),
        artifacts: vec![artifact],
    })
}

fn empirical(a: &EmpiricalArgs, seed: u64) -> CliResult<Output> {
    let g = build(&a.graph, seed, Preset::Experiment)?;
    let grid = a.grid()?;
    let init = initial(&a.infected, g.graph.n())?;
    let r = empirical_threshold_with(&g.graph, a.delta, &grid, a.paths, a.steps, &init, seed)?;
    let artifact = Artifact::csv("empirical.csv", &["beta", "y_star", "z_star"], r.rows())?;
    Ok(Output {
        summary: json!({
            "graph": g.source,
            "beta_star": r.beta_star,
            "y_std_error": r.y_std_error,
            "paths": r.paths,
            "steps": r.horizon,
        }),
        artifacts: vec![artifact],
    })
}

fn oracle(a: &OracleArgs, seed: u64) -> CliResult<Output> {
    if a.instances > 1 && !matches!(a.graph.preset, Some(Preset::Random) | None) {
        return Err(CliError::Config(
            "several instances need the random preset".into(),
        ));
    }
    if a.instances > 1 && a.graph.file.is_some() {
        return Err(CliError::Config(
            "several instances need the random preset".into(),
        ));
    }
    let beta = a.beta()?;
    let base = a.graph.graph_seed.unwrap_or(seed);
    let rows = (0..a.instances)
        .into_par_iter()
        .map(|k| {
            let mut args = a.graph.clone();
            if a.instances > 1 {
                args.graph_seed = Some(rng::derive_seed(base, &["instance".into(), k.into()]));
            }
            let g = build(&args, seed, Preset::Random)?;
            let p = EpidemicParams::homogeneous(g.graph.n(), beta, a.delta)?;
            let v = exponential_condition(&g.graph, &p)?;
            Ok((k, v.eta, if v.stable { "stable" } else { "unstable" }, v.m))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let stable = rows.iter().filter(|r| r.2 == "stable").count();
    let switching: Vec<usize> = rows.iter().map(|r| r.3).collect();
    let artifact = Artifact::csv(
        "oracle.csv",
        &["instance_id", "eta", "verdict"],
        rows.iter().map(|&(k, eta, v, _)| (k, eta, v)),
    )?;
    Ok(Output {
        summary: json!({
            "instances": a.instances,
            "stable": stable,
            "switching_edges": switching,
            "graph_seed": base,
        }),
        artifacts: vec![artifact],
    })
}

/// Right end of the default `s` grid: the first doubling of `κ⁻¹(1)` where
/// the bound falls below `1/draws`.
fn default_s_max(kp: KappaParams, draws: usize) -> CliResult<f64> {
    let target = 1.0 / draws as f64;
    let mut s = kappa_inv_at_one(kp)?.max(1e-3) * 2.0;
    for _ in 0..200 {
        if kappa(kp, s)? < target {
            return Ok(s);
        }
        s *= 2.0;
    }
    Err(CliError::Numerical(
        "concentration bound does not fall below 1/draws".into(),
    ))
}

fn sampler_for(
    g: &DynamicGraphModel,
    kind: tempest::oracle::SamplerKind,
    beta: f64,
    delta: f64,
) -> CliResult<RandomMatrixSampler> {
    let mean = g.mean_matrix()?;
    let p = EpidemicParams::homogeneous(g.n(), beta, delta)?;
    Ok(RandomMatrixSampler::new(kind, &mean, &p)?)
}

fn chung(a: &ChungArgs, seed: u64) -> CliResult<Output> {
    let mut graph = a.graph.clone();
    if graph.preset.is_none() && graph.file.is_none() {
        graph.preset = Some(Preset::EdgeMarkovian);
    }
    let g = build(&graph, seed, Preset::EdgeMarkovian)?;
    let s = sampler_for(&g.graph, a.sampler, a.beta, a.delta)?;
    let (c, v2) = s.concentration();
    let kp = KappaParams::new(c, v2, g.graph.n())?;
    let s_max = match a.s_max {
        Some(v) => v,
        None => default_s_max(kp, a.draws)?,
    };
    let grid: Vec<f64> = (0..a.s_points)
        .map(|k| s_max * k as f64 / a.s_points as f64)
        .collect();
    let pts = chung_tail_check(&s, &grid, a.draws, seed)?;
    let worst = pts
        .iter()
        .map(|p| p.empirical - p.bound - 3.0 * p.std_error)
        .fold(f64::NEG_INFINITY, f64::max);
    let artifact = Artifact::csv(
        "chung.csv",
        &["s", "empirical", "bound"],
        pts.iter().map(|p| (p.s, p.empirical, p.bound)),
    )?;
    Ok(Output {
        summary: json!({
            "graph": g.source,
            "sampler": a.sampler,
            "C": c,
            "v2": v2,
            "draws": a.draws,
            "std_error": pts.iter().map(|p| p.std_error).collect::<Vec<_>>(),
            "holds": pts.iter().all(|p| p.holds()),
            "max_excess_over_3se": if pts.is_empty() { None } else { Some(worst) },
        }),
        artifacts: vec![artifact],
    })
}

fn spectra(a: &SpectraArgs, seed: u64) -> CliResult<Output> {
    let g = build(&a.graph, seed, Preset::Experiment)?;
    let mean = g.graph.mean_matrix()?;
    let n = mean.n();
    let mut result = json!({
        "n": n,
        "kind": g.graph.kind(),
        "time": g.time,
        "pairs": g.graph.edge_count(),
        "eta_mean": spectral_abscissa(&mean.a_bar)?,
        "mu_mean": matrix_measure(&mean.a_bar)?,
        "eta_support": spectral_abscissa(&mean.support_matrix())?,
        "Delta3": delta3(&mean.a_bar),
    });
    if let Some(b) = a.beta {
        let beta = vec![b; n];
        result["Delta1"] = json!(delta1(&mean.a_bar, &beta));
        result["Delta2"] = json!(delta2(&mean.a_bar, &beta));
    }
    if let Some(kind) = a.sampler {
        let s = sampler_for(&g.graph, kind, a.beta.unwrap_or(1.0), a.delta)?;
        let est = expected_certificate(&s, a.mode, a.draws, seed)?;
        result["expectation"] = json!({
            "sampler": kind,
            "mode": a.mode,
            "estimate": est,
        });
    }
    Ok(Output {
        summary: json!({"graph": g.source}),
        artifacts: vec![Artifact::json("spectra.json", &result)?],
    })
}

fn figure3(a: &Figure3Args) -> CliResult<Output> {
    let (n, eta) = a.panel.size();
    let mut rows = Vec::with_capacity(a.rho.len() * a.theta.len());
    for &rho in &a.rho {
        for &theta in &a.theta {
            let (ratio, d3) = (rho * eta, theta * eta / 4.0);
            let xi = xi_h(n, eta, d3, 1.0 / ratio)?;
            rows.push((rho, theta, ratio, d3, xi.value));
        }
    }
    let panel = serde_json::to_value(a.panel)?;
    let name = format!("figure3{}.csv", panel.as_str().unwrap_or_default());
    let artifact = Artifact::csv(
        name,
        &["rho", "theta", "delta_over_beta", "delta3", "xi_h"],
        rows,
    )?;
    Ok(Output {
        summary: json!({"panel": a.panel, "n": n, "eta_support": eta}),
        artifacts: vec![artifact],
    })
}

fn figure456(a: &Figure456Args, seed: u64) -> CliResult<Output> {
    let g = build(&a.graph, seed, Preset::Experiment)?;
    let mean = prepare(&g.graph, Some(GraphKind::Amei), TimeModel::Dt)?;
    let n = mean.n();
    let search = BetaSearch {
        lo: 1e-8,
        hi: 1.0,
        tol: 1e-10,
    };
    let certified = threshold_in_beta_mean(&mean, a.delta, Certificate::T4, search)?;
    let static_dt = threshold_in_beta_mean(&mean, a.delta, Certificate::StaticDt, search)?;

    // decay bound on [gamma_from, certified), then the marker row
    let mut fig4 = Vec::new();
    if a.gamma_points > 0 && a.gamma_from < certified {
        let h = (certified - a.gamma_from) / a.gamma_points as f64;
        let betas: Vec<f64> = (0..a.gamma_points)
            .map(|k| a.gamma_from + h * k as f64)
            .collect();
        let reports = betas
            .par_iter()
            .map(|&b| {
                let p = EpidemicParams::homogeneous(n, b, a.delta)?;
                certify_mean(Certificate::T4, &mean, &p)
            })
            .collect::<tempest::Result<Vec<_>>>()?;
        for (b, r) in betas.iter().zip(reports) {
            if let Some(gamma) = r.decay_rate_bound {
                fig4.push((*b, gamma, "grid"));
            }
        }
    }
    fig4.push((certified, 0.0, "threshold"));

    let grid = a.grid()?;
    let emp = empirical_threshold_with(
        &g.graph,
        a.delta,
        &grid,
        a.paths,
        a.steps,
        &InitialInfection::All,
        seed,
    )?;
    let mut fig5: Vec<(f64, Option<f64>, &str)> =
        emp.rows().map(|(b, _, z)| (b, Some(z), "grid")).collect();
    fig5.push((certified, None, "certified"));
    fig5.push((static_dt, None, "static"));

    let sim = DtSimulator::new(&g.graph)?;
    let mut artifacts = vec![
        Artifact::csv("figure4.csv", &["beta", "gamma_D", "kind"], fig4)?,
        Artifact::csv("figure5.csv", &["beta", "z_star", "kind"], fig5)?,
    ];
    for (i, &b) in a.sample_betas.iter().enumerate() {
        let p = EpidemicParams::nonnegative(vec![b; n], vec![a.delta; n])?;
        let traces = (0..a.sample_paths)
            .into_par_iter()
            .map(|k| {
                let s = rng::derive_seed(seed, &["sample-paths".into(), i.into(), k.into()]);
                sim.run(&p, a.steps, &InitialInfection::All, true, s, false)
            })
            .collect::<tempest::Result<Vec<_>>>()?;
        let rows = traces.iter().enumerate().flat_map(|(k, t)| {
            t.times
                .iter()
                .zip(&t.infected_counts)
                .map(move |(&time, &c)| (k, time, c))
        });
        artifacts.push(Artifact::csv(
            format!("figure6_{}.csv", i + 1),
            &TRACE_COLUMNS,
            rows,
        )?);
    }
    Ok(Output {
        summary: json!({
            "graph": g.source,
            "n": n,
            "delta": a.delta,
            "certified_threshold": certified,
            "static_threshold": static_dt,
            "beta_star": emp.beta_star,
            "sample_betas": a.sample_betas,
        }),
        artifacts,
    })
}
