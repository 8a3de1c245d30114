//! Report serialization and atomic file output.

use std::io::Write;
use std::path::Path;

use epi_lab_core::io::format_f64;
use serde_json::{Map, Value};

use crate::run::Report;
use crate::spec::{is_small_integer, Format, Param};

pub fn to_bytes(report: &Report, format: Format) -> std::io::Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => to_csv(report),
    }
}

/// Writes through a temporary file in the target directory and renames it into
/// place, so readers never observe a partial report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn param_text(p: &Param) -> String {
    match p {
        Param::Scalar(x) if is_small_integer(*x) => (*x as i64).to_string(),
        _ => p
            .values()
            .into_iter()
            .map(format_f64)
            .collect::<Vec<_>>()
            .join(";"),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => format_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Array(xs) => xs.iter().map(cell).collect::<Vec<_>>().join(";"),
        Value::Object(_) => v.to_string(),
    }
}

fn flatten(prefix: &str, obj: &Map<String, Value>, out: &mut Vec<(String, String)>) {
    for (k, v) in obj {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Object(inner) => flatten(&key, inner, out),
            other => out.push((key, cell(other))),
        }
    }
}

/// `#`-prefixed header lines with the resolved spec, then one table.
fn to_csv(report: &Report) -> std::io::Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(
        out,
        "# {} {} {}",
        report.tool, report.version, report.command
    )?;
    for input in &report.inputs {
        writeln!(out, "# input = {input}")?;
    }
    for (k, v) in &report.params {
        writeln!(out, "# {k} = {}", param_text(v))?;
    }
    if let Some(v) = report.verdict {
        writeln!(out, "# verdict = {v}")?;
    }
    if let Some(w) = &report.scope_warning {
        writeln!(out, "# scope_warning = {w}")?;
    }

    if let Some(tr) = &report.trajectory {
        let c = tr.checks();
        writeln!(
            out,
            "# checks: max_excess_over_endpoint = {}, max_decrease = {}, min_formula_derivative = {}, max_derivative_gap = {}, passes = {}",
            format_f64(c.max_excess_over_endpoint),
            format_f64(c.max_decrease),
            format_f64(c.min_formula_derivative),
            format_f64(c.max_derivative_gap),
            c.passes
        )?;
        tr.write_csv(&mut out).map_err(std::io::Error::other)?;
        return Ok(out);
    }

    let mut header: Vec<String> = Vec::new();
    let mut rows = Vec::with_capacity(report.rows.len());
    for raw in &report.rows {
        let value: Value = serde_json::from_str(raw.get())?;
        let mut cells = Vec::new();
        if let Value::Object(obj) = &value {
            flatten("", obj, &mut cells);
        }
        for (k, _) in &cells {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
        rows.push(cells);
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(&header)?;
    for cells in rows {
        let record = header.iter().map(|h| {
            cells
                .iter()
                .find(|(k, _)| k == h)
                .map(|(_, v)| v.as_str())
                .unwrap_or("")
        });
        w.write_record(record)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}
