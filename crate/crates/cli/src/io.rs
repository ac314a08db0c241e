use std::fs;
use std::io::{Read, Write};

use psdrank_core::NonnegMatrix;
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::{Format, Opts};

pub fn read_input(opts: &Opts) -> Result<String, String> {
    match &opts.input {
        Some(p) if p.as_os_str() != "-" => {
            fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))
        }
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| format!("cannot read stdin: {e}"))?;
            Ok(s)
        }
    }
}

pub fn parse_json(text: &str) -> Result<Value, String> {
    serde_json::from_str(text).map_err(|e| format!("malformed JSON: {e}"))
}

pub fn from_value<T: DeserializeOwned>(v: &Value, what: &str) -> Result<T, String> {
    T::deserialize(v).map_err(|e| format!("invalid {what}: {e}"))
}

/// Accepts `{"rows": ...}`, a bare array of rows, or any object with a
/// `"matrix"` field holding either.
pub fn matrix_from_value(v: &Value) -> Result<NonnegMatrix, String> {
    match v {
        Value::Array(_) => {
            let rows: Vec<Vec<f64>> = from_value(v, "matrix")?;
            NonnegMatrix::from_rows(&rows).map_err(|e| format!("invalid matrix: {e}"))
        }
        Value::Object(map) if map.contains_key("matrix") => matrix_from_value(&map["matrix"]),
        _ => from_value(v, "matrix"),
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("csv line {}: {e}", i + 1))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| format!("csv line {}: {f:?}: {e}", i + 1))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_matrix(opts: &Opts) -> Result<NonnegMatrix, String> {
    let text = read_input(opts)?;
    match opts.format {
        Format::Json => matrix_from_value(&parse_json(&text)?),
        Format::Csv => {
            NonnegMatrix::from_rows(&parse_csv(&text)?).map_err(|e| format!("invalid matrix: {e}"))
        }
    }
}

pub fn matrix_csv(m: &NonnegMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in m.as_dense().to_rows() {
        // Display for f64 is the shortest round-trip form
        w.write_record(row.iter().map(|x| x.to_string()))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_output(opts: &Opts, text: &str) -> Result<(), String> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &opts.out {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write stdout: {e}")),
    }
}
