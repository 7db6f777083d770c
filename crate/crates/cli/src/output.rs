//! Artifacts and their headers.
//!
//! Every artifact starts with one JSON header line carrying the seed, the
//! canonical run config and its hash. CSV headers are prefixed with `# ` so
//! that CSV readers can skip them as a comment; JSON artifacts hold the
//! header line followed by one result line.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub format: Format,
    pub body: Vec<u8>,
}

impl Artifact {
    /// CSV with a fixed column row, written even when `rows` is empty.
    pub fn csv<R, I>(name: impl Into<String>, columns: &[&str], rows: I) -> CliResult<Self>
    where
        R: Serialize,
        I: IntoIterator<Item = R>,
    {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record(columns)?;
        for r in rows {
            w.serialize(r)?;
        }
        let body = w
            .into_inner()
            .map_err(|e| crate::error::CliError::Config(format!("csv: {e}")))?;
        Ok(Self {
            name: name.into(),
            format: Format::Csv,
            body,
        })
    }

    pub fn json(name: impl Into<String>, value: &impl Serialize) -> CliResult<Self> {
        let mut body = serde_json::to_vec(value)?;
        body.push(b'\n');
        Ok(Self {
            name: name.into(),
            format: Format::Json,
            body,
        })
    }
}

/// Result of a task: a summary shared by all headers, and the artifacts.
pub struct Output {
    pub summary: Value,
    pub artifacts: Vec<Artifact>,
}

pub fn header(config: &RunConfig, summary: &Value) -> Value {
    json!({
        "tool": "tempest",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "config_hash": config.hash(),
        "config": config.canonical_json(),
        "summary": summary,
    })
}

fn render(a: &Artifact, head: &Value) -> Vec<u8> {
    let mut out = Vec::with_capacity(a.body.len() + 256);
    if a.format == Format::Csv {
        out.extend_from_slice(b"# ");
    }
    out.extend_from_slice(head.to_string().as_bytes());
    out.push(b'\n');
    out.extend_from_slice(&a.body);
    out
}

/// Writes every artifact into `dir` and returns the paths written.
pub fn write_dir(dir: &Path, config: &RunConfig, output: &Output) -> CliResult<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let head = header(config, &output.summary);
    let mut paths = Vec::new();
    for a in &output.artifacts {
        let p = dir.join(&a.name);
        std::fs::write(&p, render(a, &head))?;
        paths.push(p.display().to_string());
    }
    Ok(paths)
}

/// Writes the artifacts of `output` to `w`, one after another.
pub fn write_stream(w: &mut impl Write, config: &RunConfig, output: &Output) -> CliResult<()> {
    let head = header(config, &output.summary);
    for a in &output.artifacts {
        w.write_all(&render(a, &head))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_csv_keeps_its_columns() {
        let a = Artifact::csv("x.csv", &["beta", "y_star"], Vec::<(f64, f64)>::new()).unwrap();
        assert_eq!(a.body, b"beta,y_star\n");
    }

    #[test]
    fn optional_cells_are_blank() {
        let a = Artifact::csv("x.csv", &["a", "b"], [(1.5, None::<f64>), (2.0, Some(3.0))]).unwrap();
        assert_eq!(String::from_utf8(a.body).unwrap(), "a,b\n1.5,\n2.0,3.0\n");
    }
}
