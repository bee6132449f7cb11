use std::io::Write;
use std::path::Path;

use boxlab_core::scalar::{format_rational, Q};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, Resolved};
use crate::{CliError, CliResult};

/// Rows of already-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(|c| Value::String(c.clone()))).collect()))
                .collect(),
        )
    }
}

/// Shortest round-trip decimal; `Display` for `f64` never uses locale or
/// exponent notation.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        x.to_string()
    }
}

pub fn q_json(v: &Q) -> Value {
    json!({ "value": boxlab_core::scalar::q_to_f64(v), "exact": format_rational(v) })
}

/// What a subcommand produced: a table for CSV and a JSON document.
pub struct Output {
    pub table: Option<Table>,
    pub json: Value,
}

pub fn render_csv<P: Serialize>(resolved: &Resolved<P>, table: &Table) -> CliResult<Vec<u8>> {
    let (text, hash) = resolved.canonical();
    let mut buf = format!("# config={text}\n# config_sha256={hash}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(&table.columns).map_err(|e| CliError::Io(e.to_string()))?;
        for r in &table.rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(buf)
}

pub fn render_json<P: Serialize>(resolved: &Resolved<P>, result: Value) -> Vec<u8> {
    let (_, hash) = resolved.canonical();
    let doc = json!({ "config": resolved.to_value(), "config_sha256": hash, "result": result });
    let mut out = serde_json::to_vec_pretty(&doc).expect("output serializes");
    out.push(b'\n');
    out
}

pub fn render<P: Serialize>(resolved: &Resolved<P>, out: Output) -> CliResult<Vec<u8>> {
    match (resolved.format, out.table) {
        (Format::Csv, Some(t)) => render_csv(resolved, &t),
        (Format::Csv, None) => Err(CliError::Schema(format!("{} has no CSV form; use --format json", resolved.command))),
        (Format::Json, Some(t)) if out.json.is_null() => Ok(render_json(resolved, t.to_json())),
        (Format::Json, _) => Ok(render_json(resolved, out.json)),
    }
}

pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    write_bytes(Some(path), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{HieParams, NumericMode};

    #[test]
    fn csv_has_header_lines_and_lf_endings() {
        let r = Resolved {
            command: "hie",
            seed: 1,
            numeric_mode: NumericMode::Float,
            format: Format::Csv,
            output_path: None,
            params: HieParams::default(),
        };
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.push(vec!["0.5".into(), "x,y".into()]);
        let text = String::from_utf8(render_csv(&r, &t).unwrap()).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].starts_with("# config={"));
        assert!(lines[1].starts_with("# config_sha256="));
        assert_eq!(lines[2], "a,b");
        assert_eq!(lines[3], "0.5,\"x,y\"");
    }

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(1e-20), "0.00000000000000000001");
    }
}
