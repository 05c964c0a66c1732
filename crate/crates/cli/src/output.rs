//! CSV tables, the run manifest, and atomic file writes.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit }
}

/// One CSV result file.
#[derive(Clone, Debug)]
pub struct Table {
    pub file: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: impl Into<String>, columns: Vec<Column>) -> Self {
        Self {
            file: file.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name))?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner()?)
    }
}

/// Formats a float with the shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize)]
struct OutputEntry<'a> {
    file: &'a str,
    rows: usize,
    columns: &'a [Column],
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    outputs: Vec<OutputEntry<'a>>,
    extra_files: &'a [String],
}

pub const MANIFEST: &str = "manifest.json";

/// Writes every table, any extra JSON artefacts, and the manifest. Returns
/// the paths written.
pub fn write_run(
    cfg: &ExperimentConfig,
    tables: &[Table],
    extras: &[(String, Vec<u8>)],
) -> anyhow::Result<Vec<PathBuf>> {
    let dir = cfg.output_dir();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(&t.file);
        write_atomic(&path, &t.to_csv()?)?;
        written.push(path);
    }
    let mut extra_names: Vec<String> = extras.iter().map(|(name, _)| name.clone()).collect();
    for (name, bytes) in extras {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        written.push(path);
    }
    if cfg.emit_plot_script {
        let name = format!("plot_{}.py", cfg.experiment.name().replace('-', "_"));
        let path = dir.join(&name);
        write_atomic(&path, plot_script(tables).as_bytes())?;
        written.push(path);
        extra_names.push(name);
    }
    let manifest = Manifest {
        tool: "qsn",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name(),
        seed: cfg.seed,
        config: cfg,
        outputs: tables
            .iter()
            .map(|t| OutputEntry {
                file: &t.file,
                rows: t.rows.len(),
                columns: &t.columns,
            })
            .collect(),
        extra_files: &extra_names,
    };
    let path = dir.join(MANIFEST);
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)?;
    written.push(path);
    Ok(written)
}

fn plot_script(tables: &[Table]) -> String {
    let files: Vec<String> = tables
        .iter()
        .map(|t| format!("    {:?},", t.file))
        .collect();
    format!(
        r#"#!/usr/bin/env python3
# Plots every numeric column of each CSV against its first numeric column.
import csv
import pathlib

import matplotlib.pyplot as plt

HERE = pathlib.Path(__file__).resolve().parent
FILES = [
{}
]


def numeric(values):
    try:
        return [float(v) for v in values]
    except ValueError:
        return None


for name in FILES:
    with open(HERE / name, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {{h: numeric([r[i] for r in body]) for i, h in enumerate(header)}}
    cols = {{h: v for h, v in cols.items() if v is not None}}
    if len(cols) < 2:
        continue
    names = list(cols)
    x = names[0]
    fig, ax = plt.subplots()
    for y in names[1:]:
        ax.plot(cols[x], cols[y], marker="o", label=y)
    ax.set_xlabel(x)
    ax.set_title(name)
    ax.legend()
    fig.savefig(HERE / (pathlib.Path(name).stem + ".png"), dpi=150)
"#,
        files.join("\n")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new("x.csv", vec![col("lambda", "1"), col("qb", "rad^2")]);
        t.push(vec![num(0.0), num(0.015625)]);
        t.push(vec![num(0.1), num(f64::INFINITY)]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "lambda,qb\n0,0.015625\n0.1,inf\n");
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = std::env::temp_dir().join(format!("qsn-atomic-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(dir).ok();
    }
}
