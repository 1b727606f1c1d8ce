//! Output files: JSONL records with a provenance header line, CSV tables with
//! `#` comment headers. Everything is written atomically.

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::interchange::ConceptCatalog;
use crate::maskops::Formula;
use crate::ratio::Ratio;
use crate::search::ExplanationRecord;
use crate::thresholds::{Interval, ThresholdMode};

pub const ENGINE: &str = concat!("dissector ", env!("CARGO_PKG_VERSION"));

/// First line of every JSONL file.
pub fn header(command: &str, config: &impl Serialize) -> Result<Value> {
    let config = serde_json::to_value(config).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(json!({ "kind": "header", "engine": ENGINE, "command": command, "config": config }))
}

/// One explanation as written to a results file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub kind: String,
    pub neuron: usize,
    pub cluster: u32,
    pub mode: ThresholdMode,
    pub interval: Interval,
    /// Compact token form, e.g. `3 OR 7`.
    pub formula: Option<String>,
    /// Same formula with concept names.
    pub label: Option<String>,
    pub iou: Ratio,
    pub iou_value: f64,
    pub visited: u64,
    pub dedup_skips: u64,
    pub degenerate: bool,
    pub reduced: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl ResultLine {
    pub fn from_record(
        r: &ExplanationRecord,
        mode: ThresholdMode,
        reduced: bool,
        catalog: &ConceptCatalog,
        timings: bool,
    ) -> Self {
        ResultLine {
            kind: "record".into(),
            neuron: r.neuron,
            cluster: r.interval.label,
            mode,
            interval: r.interval,
            formula: r.formula.as_ref().map(Formula::to_compact),
            label: r.formula.as_ref().map(|f| f.display_with(|c| catalog.name(c))),
            iou: r.iou,
            iou_value: r.iou.to_f64(),
            visited: r.visited,
            dedup_skips: r.dedup_skips,
            degenerate: r.degenerate,
            reduced,
            wall_time_ms: if timings { r.wall_time_ms } else { None },
        }
    }

    pub fn parsed_formula(&self) -> Result<Option<Formula>> {
        self.formula.as_deref().map(Formula::parse_compact).transpose()
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Serializes the header and lines, one JSON value per line.
pub fn jsonl_text<T: Serialize>(header: &Value, lines: &[T]) -> Result<String> {
    let mut out = to_json(header)?;
    out.push('\n');
    for l in lines {
        out.push_str(&to_json(l)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, header: &Value, lines: &[T]) -> Result<()> {
    write_atomic(path, jsonl_text(header, lines)?.as_bytes())
}

/// Reads `record` lines of a results file; the header and other kinds are
/// skipped.
pub fn read_results(path: &Path) -> Result<Vec<ResultLine>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |e: serde_json::Error| Error::Format(format!("{} line {}: {e}", path.display(), i + 1));
        let v: Value = serde_json::from_str(&line).map_err(bad)?;
        if v.get("kind").and_then(Value::as_str) == Some("record") {
            out.push(serde_json::from_value(v).map_err(bad)?);
        }
    }
    Ok(out)
}

/// CSV text with `# key: value` comment lines above the column header.
pub fn csv_text(comments: &[(String, String)], columns: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut out = String::new();
    for (k, v) in comments {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(columns).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

pub fn write_csv(path: &Path, header: &Value, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let comments = vec![
        ("engine".to_string(), ENGINE.to_string()),
        ("command".to_string(), header["command"].as_str().unwrap_or_default().to_string()),
        ("config".to_string(), header["config"].to_string()),
    ];
    write_atomic(path, csv_text(&comments, columns, rows)?.as_bytes())
}

/// Fixed-precision float cell; absent values are empty.
pub fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.6}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interchange::Category;
    use crate::maskops::{ConceptId, Op};

    #[test]
    fn results_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let catalog = ConceptCatalog::from_names([("sky", Category::Scene), ("tree", Category::Object)]).unwrap();
        let rec = ExplanationRecord {
            neuron: 3,
            interval: Interval::new(0.5, f64::INFINITY, 1),
            formula: Some(Formula::new(ConceptId(1), vec![(Op::AndNot, ConceptId(2))])),
            iou: Ratio::new(3, 10),
            visited: 40,
            dedup_skips: 2,
            degenerate: false,
            wall_time_ms: Some(1.5),
        };
        let line = ResultLine::from_record(&rec, ThresholdMode::QuantileTop, false, &catalog, false);
        assert_eq!(line.label.as_deref(), Some("(sky AND NOT tree)"));
        assert_eq!(line.wall_time_ms, None);
        let path = dir.path().join("r.jsonl");
        let h = header("explain", &json!({"seed": 1})).unwrap();
        write_jsonl(&path, &h, std::slice::from_ref(&line)).unwrap();
        let back = read_results(&path).unwrap();
        assert_eq!(back, vec![line.clone()]);
        assert_eq!(back[0].parsed_formula().unwrap(), rec.formula);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().next().unwrap().contains(r#""kind":"header""#));
        assert!(text.contains(r#""hi":null"#));
    }

    #[test]
    fn csv_has_comment_header() {
        let t = csv_text(
            &[("engine".into(), "x".into())],
            &["a", "b"],
            &[vec!["1".into(), "two, three".into()]],
        )
        .unwrap();
        assert_eq!(t, "# engine: x\na,b\n1,\"two, three\"\n");
        assert_eq!(cell(None), "");
        assert_eq!(cell(Some(0.5)), "0.500000");
    }
}
