//! Output directory, CSV helpers and the run manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use plateau::{FieldTable, LatticePoint, OrthantTable};
use serde::Serialize;
use serde_json::json;

use crate::error::CliResult;

/// Default output directory when neither `--out` nor this variable is set.
pub const OUT_ENV: &str = "PLATEAU_OUT_DIR";
pub const MANIFEST: &str = "manifest.json";

pub fn resolve_out(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("plateau-out")),
    }
}

/// Format of the numeric tables a run writes. Series and Monte Carlo sample
/// files keep their own CSV layout either way.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Files written by one run, and the manifest that lists them.
pub struct Run {
    dir: PathBuf,
    format: Format,
    outputs: Vec<String>,
    start: Instant,
}

impl Run {
    pub fn new(dir: PathBuf, format: Format) -> CliResult<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Run { dir, format, outputs: Vec::new(), start: Instant::now() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        std::fs::write(self.path(name), s)?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> CliResult<()> {
        std::fs::write(self.path(name), body)?;
        Ok(())
    }

    /// Write the manifest. `argv` is the merged argument vector without the
    /// program name; `config` is the parsed configuration.
    pub fn finish(self, subcommand: &str, argv: &[String], config: serde_json::Value, status: &str) -> CliResult<()> {
        let m = json!({
            "tool": "plateau",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "argv": argv,
            "config": config,
            "status": status,
            "wall_time_seconds": self.start.elapsed().as_secs_f64(),
            "outputs": self.outputs,
        });
        let mut s = serde_json::to_string_pretty(&m)?;
        s.push('\n');
        std::fs::write(self.dir.join(MANIFEST), s)?;
        Ok(())
    }
}

fn header(dim: usize, tail: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    h.extend(tail.iter().map(|s| s.to_string()));
    h
}

fn point_row(x: &LatticePoint, tail: &[f64]) -> Vec<f64> {
    x.coords().iter().map(|&c| c as f64).chain(tail.iter().copied()).collect()
}

/// Write `rows` under `columns` as `name` (CSV), or as `name` with a `.json`
/// extension holding `{"columns": .., "rows": ..}`.
pub fn emit(run: &mut Run, name: &str, columns: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    match run.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(run.create(name)?);
            w.write_record(columns)?;
            for r in rows {
                w.write_record(r.iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Json => {
            let stem = Path::new(name).with_extension("json");
            run.json(&stem.to_string_lossy(), &json!({ "columns": columns, "rows": rows }))
        }
    }
}

/// Rows `x1..xd,value` over the orthant of an even table.
pub fn write_orthant(run: &mut Run, name: &str, t: &OrthantTable) -> CliResult<()> {
    let rows: Vec<Vec<f64>> = t.iter().map(|(x, v)| point_row(&x, &[v])).collect();
    emit(run, name, &header(t.dim(), &["value"]), &rows)
}

/// Rows `x1..xd,value` over every torus site, coordinates in `0..r`.
pub fn write_torus(run: &mut Run, name: &str, t: &FieldTable) -> CliResult<()> {
    let r = t.geometry().period().unwrap_or(1) as i64;
    let mut rows: Vec<Vec<f64>> = t
        .iter()
        .map(|(x, v)| {
            let c: Vec<i64> = x.coords().iter().map(|c| c.rem_euclid(r)).collect();
            point_row(&LatticePoint::new(c), &[v])
        })
        .collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    emit(run, name, &header(t.dim(), &["value"]), &rows)
}

/// Rows `x1..xd,value,stderr`.
pub fn write_points_with_error(
    run: &mut Run,
    name: &str,
    dim: usize,
    rows: impl Iterator<Item = (LatticePoint, f64, f64)>,
) -> CliResult<()> {
    let rows: Vec<Vec<f64>> = rows.map(|(x, v, e)| point_row(&x, &[v, e])).collect();
    emit(run, name, &header(dim, &["value", "stderr"]), &rows)
}

/// Generic numeric table.
pub fn write_table(run: &mut Run, name: &str, columns: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
    let columns: Vec<String> = columns.iter().map(|s| s.to_string()).collect();
    emit(run, name, &columns, rows)
}

/// Mean of an orthant table over each sup-norm shell, weighted by multiplicity.
pub fn shell_means(t: &OrthantTable) -> Vec<Vec<f64>> {
    let mut acc = vec![(0.0, 0.0); t.extent() + 1];
    for (x, v) in t.iter() {
        let w = t.multiplicity(&x);
        let s = x.norm_sup() as usize;
        acc[s].0 += w * v;
        acc[s].1 += w;
    }
    acc.iter().enumerate().map(|(s, (a, w))| vec![s as f64, a / w]).collect()
}
