//! Report files: JSON summary, flat CSV, plot series and a hashed manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::ExperimentSummary;

pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Plotdata,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "plotdata" => Ok(Format::Plotdata),
            other => Err(Error::param("format", format!("unknown format {other:?}"))),
        }
    }
}

/// Flattens a JSON tree into `(path, leaf)` rows; array indices become path segments.
pub fn flatten(value: &Value) -> Vec<(String, Value)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) if !m.is_empty() => m.iter().for_each(|(k, x)| walk(&join(k), x, out)),
            Value::Array(a) if !a.is_empty() => a.iter().enumerate().for_each(|(i, x)| walk(&join(&i.to_string()), x, out)),
            leaf => out.push((prefix.to_string(), leaf.clone())),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}

/// Inverse of [`flatten`] for trees whose object keys are not integers.
pub fn unflatten(rows: &[(String, Value)]) -> Result<Value> {
    fn insert(node: &mut Value, path: &[&str], leaf: Value) -> Result<()> {
        let Some((head, rest)) = path.split_first() else {
            *node = leaf;
            return Ok(());
        };
        let bad = || Error::Format(format!("inconsistent path segment {head:?}"));
        if let Ok(i) = head.parse::<usize>() {
            if node.is_null() {
                *node = Value::Array(vec![]);
            }
            let a = node.as_array_mut().ok_or_else(bad)?;
            if i == a.len() {
                a.push(Value::Null);
            } else if i > a.len() {
                return Err(bad());
            }
            insert(&mut a[i], rest, leaf)
        } else {
            if node.is_null() {
                *node = Value::Object(Map::new());
            }
            let m = node.as_object_mut().ok_or_else(bad)?;
            insert(m.entry(head.to_string()).or_insert(Value::Null), rest, leaf)
        }
    }
    let mut root = Value::Null;
    for (path, leaf) in rows {
        let segs: Vec<&str> = if path.is_empty() { vec![] } else { path.split('.').collect() };
        insert(&mut root, &segs, leaf.clone())?;
    }
    Ok(root)
}

/// Writes `path,value` rows; values are JSON literals.
pub fn write_flat_csv(w: impl std::io::Write, value: &Value) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Format(e.to_string());
    out.write_record(["path", "value"]).map_err(err)?;
    for (path, leaf) in flatten(value) {
        out.write_record([path, leaf.to_string()]).map_err(err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_flat_csv(r: impl std::io::Read) -> Result<Value> {
    let mut rows = Vec::new();
    for rec in csv::Reader::from_reader(r).records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let (Some(path), Some(value)) = (rec.get(0), rec.get(1)) else {
            return Err(Error::Format("csv rows need a path and a value".into()));
        };
        let leaf = serde_json::from_str(value).map_err(|e| Error::Format(format!("{path}: {e}")))?;
        rows.push((path.to_string(), leaf));
    }
    unflatten(&rows)
}

/// `(x, y, yerr)` series of mean ratio `μₙ/ν` per interval midpoint, one per level.
pub fn plot_series(summary: &ExperimentSummary) -> Vec<(u32, Vec<[f64; 3]>)> {
    summary
        .ratio_test
        .iter()
        .flat_map(|r| &r.per_n)
        .map(|l| (l.n, l.intervals.iter().map(|iv| [0.5 * (iv.lo + iv.hi), iv.mean, iv.stderr]).collect()))
        .collect()
}

fn to_json(summary: &ExperimentSummary) -> Result<String> {
    serde_json::to_string_pretty(summary).map_err(|e| Error::Format(e.to_string())).map(|s| s + "\n")
}

/// Writes the summary in `format` under `dir` and returns the written paths.
pub fn emit_report(summary: &ExperimentSummary, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    if summary.trials == 0 {
        return Err(Error::InsufficientData("refusing to report an empty run".into()));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match format {
        Format::Json => {
            let p = dir.join(SUMMARY_JSON);
            fs::write(&p, to_json(summary)?)?;
            written.push(p);
        }
        Format::Csv => {
            let p = dir.join(SUMMARY_CSV);
            let value = serde_json::to_value(summary).map_err(|e| Error::Format(e.to_string()))?;
            write_flat_csv(fs::File::create(&p)?, &value)?;
            written.push(p);
        }
        Format::Plotdata => {
            let series = plot_series(summary);
            if series.is_empty() {
                return Err(Error::InsufficientData("no ratio statistics to plot".into()));
            }
            for (n, rows) in series {
                let p = dir.join(format!("ratio_n{n}.dat"));
                let mut text = String::from("# x y yerr\n");
                for [x, y, e] in rows {
                    text.push_str(&format!("{x} {y} {e}\n"));
                }
                fs::write(&p, text)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Hashes every file under `dir` (except the manifest) into `manifest.json`, sorted by path.
pub fn write_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    fn collect(root: &Path, dir: &Path, out: &mut Vec<ManifestEntry>) -> Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                collect(root, &path, out)?;
                continue;
            }
            let rel = path.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
            if rel == MANIFEST {
                continue;
            }
            let data = fs::read(&path)?;
            out.push(ManifestEntry { path: rel, sha256: hex::encode(Sha256::digest(&data)), bytes: data.len() as u64 });
        }
        Ok(())
    }
    let mut entries = Vec::new();
    collect(dir, dir, &mut entries)?;
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let text = serde_json::to_string_pretty(&serde_json::json!({ "files": entries })).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join(MANIFEST), text + "\n")?;
    Ok(entries)
}
