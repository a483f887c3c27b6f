//! CSV and JSON emission with a metadata header.
//!
//! Output is a pure function of its inputs, so identical rows give
//! identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::sweep::SweepRow;

pub const TOOL: &str = concat!("dpo ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Ordered key/value pairs echoed ahead of the data.
#[derive(Debug, Clone, Default)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn new() -> Self {
        Metadata(vec![("tool".into(), TOOL.into())])
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.into(), value.to_string()));
        self
    }
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct FlatRow<'a> {
    swept_value: f64,
    n: Option<f64>,
    c_tilde_re: Option<f64>,
    c_tilde_im: Option<f64>,
    regime_ok: bool,
    T_analytic_ms: Option<f64>,
    T_fock_ms: Option<f64>,
    ln_gamma_T_analytic: Option<f64>,
    ln_gamma_T_fock: Option<f64>,
    cutoff_used: Option<usize>,
    error: Option<&'a str>,
}

impl<'a> From<&'a SweepRow> for FlatRow<'a> {
    fn from(r: &'a SweepRow) -> Self {
        FlatRow {
            swept_value: r.swept_value,
            n: r.n,
            c_tilde_re: r.c_tilde.map(|c| c.re),
            c_tilde_im: r.c_tilde.map(|c| c.im),
            regime_ok: r.regime_ok,
            T_analytic_ms: r.t_analytic_ms,
            T_fock_ms: r.t_fock_ms,
            ln_gamma_T_analytic: r.ln_gamma_t_analytic,
            ln_gamma_T_fock: r.ln_gamma_t_fock,
            cutoff_used: r.cutoff_used,
            error: r.error.as_deref(),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn write_header(w: &mut impl Write, meta: &Metadata) -> std::io::Result<()> {
    for (k, v) in &meta.0 {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

fn meta_json(meta: &Metadata) -> Value {
    Value::Object(meta.0.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
}

pub fn write_rows(rows: &[SweepRow], format: Format, meta: &Metadata, mut w: impl Write) -> std::io::Result<()> {
    let flat: Vec<FlatRow> = rows.iter().map(FlatRow::from).collect();
    match format {
        Format::Csv => {
            write_header(&mut w, meta)?;
            let mut cw = csv::Writer::from_writer(&mut w);
            for r in &flat {
                cw.serialize(r).map_err(csv_err)?;
            }
            cw.flush()?;
        }
        Format::Json => {
            let doc = serde_json::json!({ "meta": meta_json(meta), "rows": flat });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Numeric table with named columns, used for grids.
pub fn write_table(
    columns: &[&str],
    rows: &[Vec<f64>],
    format: Format,
    meta: &Metadata,
    mut w: impl Write,
) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            write_header(&mut w, meta)?;
            let mut cw = csv::Writer::from_writer(&mut w);
            cw.write_record(columns).map_err(csv_err)?;
            for r in rows {
                cw.write_record(r.iter().map(|v| v.to_string())).map_err(csv_err)?;
            }
            cw.flush()?;
        }
        Format::Json => {
            let objs: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> = columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number)))
                        .collect();
                    Value::Object(m)
                })
                .collect();
            let doc = serde_json::json!({ "meta": meta_json(meta), "rows": objs });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Writes sweep rows to `path`.
pub fn emit(rows: &[SweepRow], format: Format, path: &Path, meta: &Metadata) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Config("no rows to emit".into()));
    }
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    write_rows(rows, format, meta, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
