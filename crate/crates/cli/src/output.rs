//! Table files and the run manifest.

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use padic_walk::Check;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "PADIC_WALK_OUT", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// A table already converted to rows of JSON values, in column order.
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<serde_json::Value>>,
}

impl Table {
    /// Rows of a flat serializable struct; columns follow field order.
    pub fn from_records<T: Serialize>(name: &'static str, records: &[T]) -> Result<Self> {
        let mut columns = Vec::new();
        let mut rows = Vec::with_capacity(records.len());
        for r in records {
            let serde_json::Value::Object(map) = serde_json::to_value(r)? else {
                anyhow::bail!("table {name} needs struct rows");
            };
            if columns.is_empty() {
                columns = map.keys().cloned().collect();
            }
            rows.push(
                columns
                    .iter()
                    .map(|c| map.get(c).cloned().unwrap_or_default())
                    .collect(),
            );
        }
        Ok(Self {
            name,
            columns,
            rows,
        })
    }

    fn write(&self, path: &Path, format: Format) -> Result<()> {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(file);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(cell))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let records: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.columns
                            .iter()
                            .cloned()
                            .zip(row.iter().cloned())
                            .collect()
                    })
                    .collect();
                let mut w = BufWriter::new(file);
                serde_json::to_writer_pretty(&mut w, &records)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

fn cell(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => String::new(),
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// What a subcommand produced, before anything is written.
pub struct Run {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub budgets: BTreeMap<&'static str, f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub cli: &'static str,
    pub library: &'static str,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub budgets: BTreeMap<&'static str, f64>,
    pub wall_clock_s: f64,
    pub format: Format,
    pub files: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Writes every table and the manifest; returns the manifest.
pub fn write_run(
    subcommand: &'static str,
    params: serde_json::Value,
    out: &OutputArgs,
    run: Run,
    wall_clock_s: f64,
) -> Result<RunManifest> {
    std::fs::create_dir_all(&out.out)
        .with_context(|| format!("cannot create {}", out.out.display()))?;
    let mut files = Vec::new();
    for t in &run.tables {
        let name = format!("{subcommand}_{}.{}", t.name, out.format.ext());
        t.write(&out.out.join(&name), out.format)?;
        files.push(name);
    }
    let manifest = RunManifest {
        subcommand,
        params,
        seed: run.seed,
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            library: padic_walk::VERSION,
        },
        budgets: run.budgets,
        wall_clock_s,
        format: out.format,
        files,
        passed: run.checks.iter().all(|c| c.passed),
        checks: run.checks,
    };
    let path = out.out.join(format!("{subcommand}.manifest.json"));
    let mut w = BufWriter::new(
        File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    Ok(manifest)
}
