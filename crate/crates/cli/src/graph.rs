//! Graph construction from presets and graph files.

use rand::seq::index;
use rand::Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use tempest::graph::{
    build_edge_markovian, edge_markovian_complete, experiment_graph, small_world,
    DynamicGraphModel, GraphKind, GraphSpec, TimeModel,
};
use tempest::rng;

use crate::config::{GraphArgs, Preset};
use crate::error::{CliError, CliResult};

pub struct BuiltGraph {
    pub graph: DynamicGraphModel,
    /// Time model of the switching edges, or the requested one for a graph
    /// without switching edges.
    pub time: TimeModel,
    /// Provenance recorded in the output header.
    pub source: Value,
}

fn fixed(name: &str, want: Option<TimeModel>, have: TimeModel) -> CliResult<()> {
    match want {
        Some(t) if t != have => Err(CliError::Config(format!(
            "the {name} preset is {} only",
            if have == TimeModel::Dt { "dt" } else { "ct" }
        ))),
        _ => Ok(()),
    }
}

/// Builds the graph for `args`, drawing random presets from `seed`.
pub fn build(args: &GraphArgs, seed: u64, default: Preset) -> CliResult<BuiltGraph> {
    if let Some(path) = &args.file {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let spec: GraphSpec = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let graph = DynamicGraphModel::from_spec(&spec)?;
        let time = graph
            .time_model()
            .or(args.time)
            .unwrap_or(TimeModel::Ct);
        let digest: String = Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        return Ok(BuiltGraph {
            graph,
            time,
            source: json!({"file": path, "sha256": digest}),
        });
    }
    let preset = args.preset.unwrap_or(default);
    let gseed = args.graph_seed.unwrap_or(seed);
    let kind = args.kind.unwrap_or(GraphKind::Amei);
    let (graph, time) = match preset {
        Preset::Experiment => {
            fixed("experiment", args.time, TimeModel::Dt)?;
            if kind != GraphKind::Amei {
                return Err(CliError::Config("the experiment preset is amei only".into()));
            }
            let g = experiment_graph(args.n.unwrap_or(500), args.p, gseed, args.dispersion)?;
            (g.graph, TimeModel::Dt)
        }
        Preset::SmallWorld => {
            let time = args.time.unwrap_or(TimeModel::Ct);
            let g = small_world(args.n.unwrap_or(20), args.r, args.speed, kind, time)?;
            (g, time)
        }
        Preset::EdgeMarkovian => {
            if kind != GraphKind::Amei {
                return Err(CliError::Config(
                    "the edge-markovian preset is amei only".into(),
                ));
            }
            let time = args.time.unwrap_or(TimeModel::Ct);
            let g = edge_markovian_complete(args.n.unwrap_or(10), args.q, args.r, time)?;
            (g, time)
        }
        Preset::Random => {
            let time = args.time.unwrap_or(TimeModel::Ct);
            let g = random_graph(args.n.unwrap_or(4), args.edges, kind, time, gseed)?;
            (g, time)
        }
    };
    Ok(BuiltGraph {
        graph,
        time,
        source: json!({"preset": preset, "graph_seed": gseed}),
    })
}

/// `m` distinct pairs, each a two-state edge. CT rates are log-uniform on
/// `[0.2, 5]`; DT probabilities are uniform on `[0.05, 0.95]`.
pub fn random_graph(
    n: usize,
    m: usize,
    kind: GraphKind,
    time: TimeModel,
    seed: u64,
) -> CliResult<DynamicGraphModel> {
    let pairs: Vec<(usize, usize)> = match kind {
        GraphKind::Amei => (0..n)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .collect(),
        GraphKind::Amai => (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect(),
    };
    if m > pairs.len() {
        return Err(CliError::Config(format!(
            "{m} edges requested but only {} pairs exist on {n} nodes",
            pairs.len()
        )));
    }
    let mut r = rng::stream(seed, &["random-graph".into()]);
    let mut g = DynamicGraphModel::new(n, kind);
    let mut chosen = index::sample(&mut r, pairs.len(), m).into_vec();
    chosen.sort_unstable();
    for k in chosen {
        let (i, j) = pairs[k];
        let (q, s) = match time {
            TimeModel::Ct => {
                let (lo, hi) = (0.2f64.ln(), 5.0f64.ln());
                (
                    r.random_range(lo..hi).exp(),
                    r.random_range(lo..hi).exp(),
                )
            }
            TimeModel::Dt => (r.random_range(0.05..0.95), r.random_range(0.05..0.95)),
        };
        g.insert(i, j, build_edge_markovian(q, s, time)?)?;
    }
    Ok(g)
}
