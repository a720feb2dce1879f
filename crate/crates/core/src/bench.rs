//! Runs every (file, shrink mode) pair of a corpus and collects one CSV row
//! per run. A file that fails to load produces a row with the error instead
//! of stopping the sweep.
//!
//! CSV header: `file,mode,status,partial_models,coverage,conflicts,decisions,propagations,elapsed_s,error`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::formula::parse_dimacs;
use crate::search::{enumerate, Discard, EnumerationSummary};
use crate::shrink::ShrinkMode;

pub fn mode_name(mode: ShrinkMode) -> &'static str {
    match mode {
        ShrinkMode::Dynamic => "dynamic",
        ShrinkMode::Conservative => "conservative",
        ShrinkMode::None => "none",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub file: String,
    pub mode: String,
    /// `complete`, `unsat`, `timeout`, `budget_exhausted` or `error`.
    pub status: String,
    pub partial_models: u64,
    /// Decimal digits.
    pub coverage: String,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub elapsed_s: f64,
    pub error: String,
}

/// `.cnf` files directly inside `dir`, sorted by name.
pub fn collect_corpus(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "cnf") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

impl BenchRow {
    /// A row for a run that has not produced a summary (yet).
    pub fn empty(file: &str, mode: ShrinkMode, status: &str, error: String) -> BenchRow {
        BenchRow {
            file: file.to_string(),
            mode: mode_name(mode).to_string(),
            status: status.to_string(),
            partial_models: 0,
            coverage: "0".to_string(),
            conflicts: 0,
            decisions: 0,
            propagations: 0,
            elapsed_s: 0.0,
            error,
        }
    }

    pub fn from_summary(file: &str, mode: ShrinkMode, s: &EnumerationSummary) -> BenchRow {
        BenchRow {
            status: s.status.to_string(),
            partial_models: s.partial_models,
            coverage: s.coverage.to_string(),
            conflicts: s.stats.conflicts,
            decisions: s.stats.decisions,
            propagations: s.stats.propagations,
            elapsed_s: s.elapsed.as_secs_f64(),
            ..BenchRow::empty(file, mode, "", String::new())
        }
    }
}

fn run_one(path: &Path, mode: ShrinkMode, base: &SolverConfig) -> BenchRow {
    let file = path.display().to_string();
    let mut row = BenchRow::empty(&file, mode, "error", String::new());
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    let formula = match parse_dimacs(&text) {
        Ok(f) => f,
        Err(e) if e.is_empty_clause() => {
            row.status = "unsat".to_string();
            return row;
        }
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    let config = SolverConfig {
        shrink: mode,
        ..base.clone()
    };
    match enumerate(&formula, config, &mut Discard) {
        Ok(s) => BenchRow::from_summary(&file, mode, &s),
        Err(e) => {
            row.error = e.to_string();
            row
        }
    }
}

/// Runs all cells in parallel. Rows come back in (file, mode) order.
pub fn bench_files(files: &[PathBuf], modes: &[ShrinkMode], config: &SolverConfig) -> Vec<BenchRow> {
    let cells: Vec<(&PathBuf, ShrinkMode)> = files
        .iter()
        .flat_map(|f| modes.iter().map(move |&m| (f, m)))
        .collect();
    cells
        .par_iter()
        .map(|&(f, m)| run_one(f, m, config))
        .collect()
}

pub fn write_bench_csv<W: io::Write>(out: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Appends one row to a CSV file, writing the header if the file is new or empty.
pub fn append_stats_csv(path: &Path, row: &BenchRow) -> csv::Result<()> {
    let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let empty = file.metadata()?.len() == 0;
    let mut writer = csv::WriterBuilder::new().has_headers(empty).from_writer(file);
    writer.serialize(row)?;
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::write_dimacs;
    use crate::generators::gen_binary;

    #[test]
    fn grid_shape_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.cnf"), write_dimacs(&gen_binary(4).unwrap())).unwrap();
        fs::write(dir.path().join("b.cnf"), "p cnf 2 1\n1 2 0\n").unwrap();
        fs::write(dir.path().join("c.cnf"), "p cnf 2\n").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let files = collect_corpus(dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let rows = bench_files(&files, &[ShrinkMode::Dynamic, ShrinkMode::None], &SolverConfig::default());
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].coverage, "9");
        assert_eq!(rows[0].mode, "dynamic");
        assert_eq!(rows[1].mode, "none");
        assert_eq!(rows[1].partial_models, 9);
        assert_eq!(rows[2].coverage, "3");
        assert_eq!(rows[4].status, "error");
        assert!(!rows[4].error.is_empty());

        let mut out = Vec::new();
        write_bench_csv(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("file,mode,status,partial_models,coverage,conflicts,decisions,propagations,elapsed_s,error")
        );
        assert_eq!(lines.count(), 6);
    }

    #[test]
    fn append_writes_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        let row = BenchRow::empty("x.cnf", ShrinkMode::Conservative, "unsat", String::new());
        append_stats_csv(&path, &row).unwrap();
        append_stats_csv(&path, &row).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("file,mode,status,"));
        assert_eq!(text.lines().nth(2), Some("x.cnf,conservative,unsat,0,0,0,0,0,0.0,"));
    }
}
