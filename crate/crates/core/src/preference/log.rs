//! Append-only JSON-lines choice log.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{ChoiceRecord, PreferenceError};

pub fn append(path: impl AsRef<Path>, record: &ChoiceRecord) -> Result<(), PreferenceError> {
    let path = path.as_ref();
    let mut line = serde_json::to_string(record).map_err(|e| PreferenceError::Log(e.to_string()))?;
    line.push('\n');
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| PreferenceError::Log(format!("{}: {e}", path.display())))?;
    f.write_all(line.as_bytes())
        .map_err(|e| PreferenceError::Log(format!("{}: {e}", path.display())))
}

pub fn write_all(path: impl AsRef<Path>, records: &[ChoiceRecord]) -> Result<(), PreferenceError> {
    let path = path.as_ref();
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).map_err(|e| PreferenceError::Log(e.to_string()))?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| PreferenceError::Log(format!("{}: {e}", path.display())))
}

/// Records in file order, optionally only those of one user. A missing
/// file reads as empty.
pub fn read(path: impl AsRef<Path>, user_id: Option<&str>) -> Result<Vec<ChoiceRecord>, PreferenceError> {
    let path = path.as_ref();
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(PreferenceError::Log(format!("{}: {e}", path.display()))),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| PreferenceError::Log(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ChoiceRecord = serde_json::from_str(&line)
            .map_err(|e| PreferenceError::Log(format!("{}:{}: {e}", path.display(), i + 1)))?;
        rec.validate()?;
        if user_id.is_none_or(|u| u == rec.user_id) {
            out.push(rec);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::FeatureVector;

    #[test]
    fn append_then_filter() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("choices.jsonl");
        assert!(read(&path, None).unwrap().is_empty());
        for (u, a) in [("a", 0), ("b", 1), ("a", 2)] {
            let r = ChoiceRecord::new(u, FeatureVector::zeros(2), FeatureVector::zeros(2), a, 3).unwrap();
            append(&path, &r).unwrap();
        }
        assert_eq!(read(&path, None).unwrap().len(), 3);
        let only_a = read(&path, Some("a")).unwrap();
        assert_eq!(only_a.iter().map(|r| r.answer).collect::<Vec<_>>(), [0, 2]);
    }
}
