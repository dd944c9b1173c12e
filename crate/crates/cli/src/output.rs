use std::io::Write;
use std::path::{Path, PathBuf};

use liepair_core::flow::TrajectoryRecord;
use liepair_core::io::to_canonical_string;
use serde_json::Value;

use crate::args::Format;
use crate::commands::{CliError, CliResult};

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn is_flat(items: &[Value]) -> bool {
    items.iter().all(|x| !x.is_array() && !x.is_object())
}

fn inline(items: &[Value]) -> String {
    format!("[{}]", items.iter().map(scalar).collect::<Vec<_>>().join(", "))
}

fn text_into(v: &Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match x {
                    Value::Array(items) if is_flat(items) => out.push_str(&format!("{pad}{k}: {}\n", inline(items))),
                    Value::Array(_) | Value::Object(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        text_into(x, indent + 2, out);
                    }
                    s => out.push_str(&format!("{pad}{k}: {}\n", scalar(s))),
                }
            }
        }
        Value::Array(items) => {
            for x in items {
                match x {
                    Value::Array(inner) if is_flat(inner) => out.push_str(&format!("{pad}{}\n", inline(inner))),
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        text_into(x, indent + 2, out);
                    }
                    s => out.push_str(&format!("{pad}{}\n", scalar(s))),
                }
            }
        }
        s => out.push_str(&format!("{pad}{}\n", scalar(s))),
    }
}

pub fn render(v: &Value, format: Format) -> CliResult<String> {
    match format {
        Format::Json => Ok(to_canonical_string(v)?),
        Format::Text => {
            let mut s = String::new();
            text_into(v, 0, &mut s);
            Ok(s)
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// `dir/stem-<seed>.ext` for fan-out runs.
pub fn seeded_path(path: &Path, seed: u64) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{seed}"),
    };
    path.with_file_name(name)
}

pub fn write_trajectory(path: &Path, records: &[TrajectoryRecord]) -> CliResult<()> {
    let io_err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    for r in records {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
