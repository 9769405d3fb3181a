//! Artifact writing with the config-hash guard.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::UsageError;

/// Reads the `config_hash` recorded in an existing CSV or JSON artifact.
fn recorded_hash(path: &Path) -> Option<String> {
    let text = std::fs::read_to_string(path).ok()?;
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
        return v.get("config_hash")?.as_str().map(String::from);
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let col = rdr.headers().ok()?.iter().position(|h| h == "config_hash")?;
    let rec = rdr.records().next()?.ok()?;
    rec.get(col).map(String::from)
}

/// Refuses to overwrite an artifact produced under a different config
/// unless `force` is set.
pub fn guard(path: Option<&Path>, hash: &str, force: bool) -> anyhow::Result<()> {
    let Some(path) = path else { return Ok(()) };
    if force || !path.exists() {
        return Ok(());
    }
    match recorded_hash(path) {
        Some(h) if h != hash => Err(UsageError(format!(
            "{} was written under config {h}, current config is {hash}; pass --force to overwrite",
            path.display()
        ))
        .into()),
        _ => Ok(()),
    }
}

pub fn emit(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let tmp = p.with_extension("partial");
            std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
            std::fs::rename(&tmp, p).with_context(|| format!("moving {} into place", p.display()))?;
        }
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

pub fn json_bytes<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        q: u64,
        config_hash: &'static str,
    }

    #[test]
    fn guard_reads_csv_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("a.csv");
        emit(Some(&csv_path), &csv_bytes(&[Row { q: 2, config_hash: "abc" }]).unwrap()).unwrap();
        assert!(guard(Some(&csv_path), "abc", false).is_ok());
        assert!(guard(Some(&csv_path), "xyz", false).is_err());
        assert!(guard(Some(&csv_path), "xyz", true).is_ok());
        let json_path = dir.path().join("a.json");
        emit(Some(&json_path), &json_bytes(&serde_json::json!({ "config_hash": "abc" })).unwrap()).unwrap();
        assert!(guard(Some(&json_path), "xyz", false).is_err());
        assert!(guard(Some(&dir.path().join("none.csv")), "xyz", false).is_ok());
    }
}
