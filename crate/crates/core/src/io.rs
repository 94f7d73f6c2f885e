//! JSONL interchange helpers: one serialized object per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn jsonl_string<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ErrorRecord;
    use crate::taxonomy::Category;

    #[test]
    fn jsonl_round_trip_is_identity() {
        let records = vec![ErrorRecord {
            timestamp: 100,
            node_id: "n1".into(),
            gpu_id: "0000:07:00".into(),
            xid: Some(48),
            pattern_id: "xid48".into(),
            message: "DBE".into(),
            category: Category::Memory,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        write_jsonl(&path, &records).unwrap();
        let back: Vec<ErrorRecord> = read_jsonl(&path).unwrap();
        assert_eq!(back, records);
    }
}
