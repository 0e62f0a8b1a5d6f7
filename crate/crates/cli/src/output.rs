use std::cell::RefCell;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::{CliError, Format, RunOptions};

pub const SCHEMA_VERSION: u32 = 1;

const DEFAULT_OUTPUT_DIR: &str = "irrlab-out";

/// Rows of plain values; numbers print as shortest round-trip decimals.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> Value {
        let records = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.header
                        .iter()
                        .map(|h| h.to_string())
                        .zip(row.iter().cloned())
                        .collect(),
                )
            })
            .collect();
        Value::Array(records)
    }

    fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| *h == name)?;
        self.rows.iter().map(|r| r[idx].as_f64()).collect()
    }
}

/// Which columns to draw when `--format svg` is requested.
pub struct Plot {
    pub x: &'static str,
    pub y: &'static str,
    pub log_log: bool,
}

/// Artifact writer rooted at the output directory.
pub struct Output {
    dir: PathBuf,
    format: Format,
    written: RefCell<Vec<String>>,
}

impl Output {
    pub fn new(opts: &RunOptions) -> Result<Self, CliError> {
        let dir = opts
            .output_dir
            .clone()
            .or_else(|| std::env::var_os("IRRLAB_OUTPUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        Ok(Output {
            dir,
            format: opts.format,
            written: RefCell::new(Vec::new()),
        })
    }

    fn write(&self, name: String, content: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir)?;
        std::fs::write(self.dir.join(&name), content)?;
        self.written.borrow_mut().push(name);
        Ok(())
    }

    /// Writes a JSON document stamped with the schema version.
    pub fn json<T: Serialize>(&self, stem: &str, doc: &T) -> Result<(), CliError> {
        let value = stamp(serde_json::to_value(doc).map_err(|e| CliError::Input(e.to_string()))?);
        let mut text =
            serde_json::to_string_pretty(&value).map_err(|e| CliError::Input(e.to_string()))?;
        text.push('\n');
        self.write(format!("{stem}.json"), &text)
    }

    /// Writes a table as CSV, as JSON records, or as CSV plus an SVG plot.
    pub fn table(&self, stem: &str, table: &Table, plot: Option<Plot>) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.write(format!("{stem}.csv"), &table.to_csv()),
            Format::Json => {
                let doc = serde_json::json!({ "columns": table.header, "rows": table.to_json() });
                self.json(stem, &doc)
            }
            Format::Svg => {
                self.write(format!("{stem}.csv"), &table.to_csv())?;
                match plot.and_then(|p| svg(table, &p)) {
                    Some(image) => self.write(format!("{stem}.svg"), &image),
                    None => Ok(()),
                }
            }
        }
    }

    /// Summary object for stdout, also saved as `summary.json`.
    pub fn finish(&self, command: &str, fields: Value) -> Result<Value, CliError> {
        let mut summary = Map::new();
        summary.insert("command".into(), Value::String(command.into()));
        if let Value::Object(map) = fields {
            summary.extend(map);
        }
        self.json("summary", &Value::Object(summary.clone()))?;
        let files = self
            .written
            .borrow()
            .iter()
            .map(|f| Value::String(f.clone()))
            .collect();
        summary.insert("files".into(), Value::Array(files));
        Ok(stamp(Value::Object(summary)))
    }
}

fn stamp(value: Value) -> Value {
    match value {
        Value::Object(mut map) => {
            map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
            Value::Object(map)
        }
        other => serde_json::json!({ "schema_version": SCHEMA_VERSION, "data": other }),
    }
}

fn svg(table: &Table, plot: &Plot) -> Option<String> {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 56.0;
    let tx = |v: f64| if plot.log_log { v.ln() } else { v };
    let pts: Vec<(f64, f64)> = table
        .column(plot.x)?
        .into_iter()
        .zip(table.column(plot.y)?)
        .map(|(x, y)| (tx(x), tx(y)))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let span = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    let (x0, x1) = span(|p| p.0);
    let (y0, y1) = span(|p| p.1);
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let label = |name: &str| {
        if plot.log_log {
            format!("ln {name}")
        } else {
            name.to_string()
        }
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{M} {} H{} M{M} {} V{M}" stroke="black" fill="none"/>"#,
        H - M,
        W - M,
        H - M
    );
    let line: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" stroke="steelblue" fill="none"/>"#,
        line.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 16.0,
        label(plot.x)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        label(plot.y)
    );
    for (v, x, y, anchor) in [
        (x0, sx(x0), H - M + 16.0, "start"),
        (x1, sx(x1), H - M + 16.0, "end"),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="11">{v:.4}</text>"#
        );
    }
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y:.2}" text-anchor="end" font-size="11">{v:.4}</text>"#,
            M - 4.0
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}
