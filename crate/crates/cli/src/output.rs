//! CSV tables, the run manifest and the text report.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use fracthj_core::linear::SpaceTimeField;
use serde_json::json;

use crate::config::{ExperimentConfig, Kind};
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.txt";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Long-format diagnostics: quantity, index, value.
    pub fn diagnostics() -> Self {
        Table::new(&["quantity", "index", "value"])
    }

    pub fn scalar(&mut self, name: &str, v: f64) {
        self.push(vec![Cell::Text(name.into()), Cell::Empty, Cell::Num(v)]);
    }

    pub fn series(&mut self, name: &str, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.push(vec![Cell::Text(name.into()), Cell::Int(i as i64), Cell::Num(*v)]);
        }
    }

    /// Looks up a scalar diagnostic.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.rows.iter().find_map(|r| match (&r[0], &r[1], &r[2]) {
            (Cell::Text(n), Cell::Empty, Cell::Num(v)) if n == name => Some(*v),
            _ => None,
        })
    }

    /// Rows t, x [, y], then one column per field.
    pub fn solution(names: &[&str], fields: &[&SpaceTimeField]) -> Self {
        let grid = fields[0].values[0].grid();
        let mut header = vec!["t", "x"];
        if grid.dim() == 2 {
            header.push("y");
        }
        header.extend_from_slice(names);
        let mut table = Table::new(&header);
        for (k, t) in fields[0].grid.nodes().iter().enumerate() {
            for idx in 0..grid.len() {
                let p = grid.point(idx);
                let mut row = vec![Cell::Num(*t), Cell::Num(p[0])];
                if grid.dim() == 2 {
                    row.push(Cell::Num(p[1]));
                }
                row.extend(fields.iter().map(|f| Cell::Num(f.values[k].values[idx])));
                table.push(row);
            }
        }
        table
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut file = File::create(path)?;
        writeln!(file, "# manifest: {MANIFEST}")?;
        let mut w = csv::Writer::from_writer(file);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything a run produces, held in memory until it is written.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub tables: Vec<(String, Table)>,
    pub report: Vec<String>,
}

impl Outputs {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Writes the tables, the report and the manifest into `dir`.
    pub fn write(&self, dir: &Path, kind: Kind, config: &ExperimentConfig, status: &str) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (name, table) in &self.tables {
            table.write(&dir.join(name))?;
            files.push(name.clone());
        }
        fs::write(dir.join(REPORT), self.report.join("\n") + "\n")?;
        files.push(REPORT.into());
        // the output directory is left out so that reruns elsewhere match byte for byte
        let mut echoed = config.clone();
        echoed.output = None;
        echoed.kind = Some(kind);
        let manifest = json!({
            "program": "fracthj",
            "version": env!("CARGO_PKG_VERSION"),
            "core_version": fracthj_core::VERSION,
            "kind": kind.name(),
            "status": status,
            "seed": config.seed,
            "config": echoed,
            "files": files,
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(dir.join(MANIFEST), text + "\n")?;
        Ok(())
    }
}
