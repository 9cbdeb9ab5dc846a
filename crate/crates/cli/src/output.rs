//! CSV and JSON emission with a resolved-config header.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value as Json};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const UNITS: &str = "raw values as given; energies, couplings, omega and quasienergies share the unit of h, time is in its inverse";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    S(String),
    B(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:?}"),
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Cell::F(x) => json!(x),
            Cell::I(x) => json!(x),
            Cell::U(x) => json!(x),
            Cell::S(s) => json!(s),
            Cell::B(b) => json!(b),
            Cell::Empty => Json::Null,
        }
    }
}

/// Rows plus whatever extra structured data a command attaches.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra fields merged into each JSON row object (same length as `rows`
    /// when present).
    pub row_extras: Option<Vec<Json>>,
    /// Top-level JSON fields; in CSV each becomes a trailing `# key: json` line.
    pub footer: Vec<(&'static str, Json)>,
    /// Extra `# key = value` header lines specific to the command.
    pub notes: Vec<(&'static str, String)>,
    /// Cells or points that failed; a nonzero value makes the run partial.
    pub failed: usize,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn render(cfg: &RunConfig, table: &Table) -> String {
    match cfg.format {
        Format::Csv => render_csv(cfg, table),
        Format::Json => render_json(cfg, table),
    }
}

fn render_csv(cfg: &RunConfig, table: &Table) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# lmg {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# command = {}", cfg.command.name());
    let _ = writeln!(s, "# units = {UNITS}");
    for (k, v) in cfg.header_entries().into_iter().chain(table.notes.iter().cloned()) {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s.push_str(&table.columns.join(","));
    s.push('\n');
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(Cell::csv).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    for (k, v) in &table.footer {
        let _ = writeln!(s, "# {k}: {v}");
    }
    s
}

fn render_json(cfg: &RunConfig, table: &Table) -> String {
    let mut config = Map::new();
    for (k, v) in cfg.header_entries().into_iter().chain(table.notes.iter().cloned()) {
        match config.get_mut(k) {
            Some(Json::Array(a)) => a.push(json!(v)),
            Some(existing) => {
                let first = existing.take();
                *existing = json!([first, v]);
            }
            None => {
                config.insert(k.to_string(), json!(v));
            }
        }
    }
    let rows: Vec<Json> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut obj = Map::new();
            for (c, v) in table.columns.iter().zip(row) {
                obj.insert(c.to_string(), v.json());
            }
            if let Some(Json::Object(extra)) = table.row_extras.as_ref().map(|e| &e[i]) {
                for (k, v) in extra {
                    obj.insert(k.clone(), v.clone());
                }
            }
            Json::Object(obj)
        })
        .collect();
    let mut top = Map::new();
    top.insert("lmg_version".into(), json!(env!("CARGO_PKG_VERSION")));
    top.insert("command".into(), json!(cfg.command.name()));
    top.insert("units".into(), json!(UNITS));
    top.insert("config".into(), Json::Object(config));
    top.insert("columns".into(), json!(table.columns));
    top.insert("rows".into(), Json::Array(rows));
    for (k, v) in &table.footer {
        top.insert(k.to_string(), v.clone());
    }
    let mut s = serde_json::to_string_pretty(&Json::Object(top)).expect("json values serialise");
    s.push('\n');
    s
}

/// Write the whole document at once; remove the file if writing fails.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            let _ = std::fs::remove_file(path);
            CliError::Io(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("cannot write output: {e}")))
        }
    }
}
