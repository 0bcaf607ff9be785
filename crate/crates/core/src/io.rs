//! Reading databases and query classes from disk.
//!
//! JSON files hold `{"entries": [...]}` or `{"n": 3, "queries": [[...], ...]}`.
//! Files ending in `.csv` hold bare numbers without a header; `#` starts a
//! comment line. A database CSV may spread its entries over any number of
//! lines; a class CSV has one query per line.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::data::{Database, LinearQuery, QueryClass};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatabaseFile {
    entries: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassFile {
    n: usize,
    queries: Vec<Vec<f64>>,
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Numeric rows of a CSV document with their 1-based line numbers.
fn csv_rows(path: &Path, text: &str) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_error(path, line, format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if !values.is_empty() {
            rows.push((line, values));
        }
    }
    Ok(rows)
}

fn json_error(path: &Path, e: serde_json::Error) -> Error {
    parse_error(path, e.line() as u64, e.to_string())
}

pub fn parse_database(path: &Path, text: &str) -> Result<Database> {
    let entries = if is_csv(path) {
        let mut entries = Vec::new();
        for (line, values) in csv_rows(path, text)? {
            if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(parse_error(
                    path,
                    line,
                    format!("entry {v} must be finite and nonnegative"),
                ));
            }
            entries.extend(values);
        }
        entries
    } else {
        serde_json::from_str::<DatabaseFile>(text)
            .map_err(|e| json_error(path, e))?
            .entries
    };
    Database::new(entries).map_err(|e| parse_error(path, 0, e.to_string()))
}

pub fn parse_class(path: &Path, text: &str) -> Result<QueryClass> {
    let rows: Vec<(u64, Vec<f64>)> = if is_csv(path) {
        csv_rows(path, text)?
    } else {
        let file: ClassFile = serde_json::from_str(text).map_err(|e| json_error(path, e))?;
        if let Some((i, row)) = file
            .queries
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != file.n)
        {
            return Err(parse_error(
                path,
                0,
                format!(
                    "query {i} has {} coefficients, expected n = {}",
                    row.len(),
                    file.n
                ),
            ));
        }
        // JSON rows have no useful line number; report the query index instead.
        file.queries
            .into_iter()
            .enumerate()
            .map(|(i, r)| (i as u64, r))
            .collect()
    };
    let csv = is_csv(path);
    let queries = rows
        .into_iter()
        .map(|(pos, row)| {
            LinearQuery::new(row).map_err(|e| {
                if csv {
                    parse_error(path, pos, e.to_string())
                } else {
                    parse_error(path, 0, format!("query {pos}: {e}"))
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    QueryClass::new(queries).map_err(|e| parse_error(path, 0, e.to_string()))
}

pub fn read_database(path: &Path) -> Result<Database> {
    parse_database(path, &fs::read_to_string(path)?)
}

pub fn read_class(path: &Path) -> Result<QueryClass> {
    parse_class(path, &fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(e: Error) -> u64 {
        match e {
            Error::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn json_inputs() {
        let p = Path::new("db.json");
        let db = parse_database(p, r#"{"entries": [1, 2.5, 0]}"#).unwrap();
        assert_eq!(db.entries(), &[1.0, 2.5, 0.0]);
        let e = parse_database(p, "{\n\"entries\": [1,\n  x]}").unwrap_err();
        assert_eq!(line_of(e), 3);
        assert!(parse_database(p, r#"{"entries": [-1]}"#).is_err());

        let p = Path::new("c.json");
        let c = parse_class(p, r#"{"n": 2, "queries": [[1, 0], [0.5, 0.5]]}"#).unwrap();
        assert_eq!((c.len(), c.dim()), (2, 2));
        assert!(parse_class(p, r#"{"n": 3, "queries": [[1, 0]]}"#).is_err());
        assert!(parse_class(p, r#"{"n": 1, "queries": [[2]]}"#).is_err());
        assert!(parse_class(p, r#"{"n": 1, "queries": []}"#).is_err());
    }

    #[test]
    fn csv_inputs() {
        let p = Path::new("db.csv");
        let db = parse_database(p, "# counts\n1, 2\n3\n").unwrap();
        assert_eq!(db.entries(), &[1.0, 2.0, 3.0]);
        assert_eq!(line_of(parse_database(p, "1\n2\nfoo\n").unwrap_err()), 3);
        assert_eq!(line_of(parse_database(p, "1\n-2\n").unwrap_err()), 2);

        let p = Path::new("c.csv");
        let c = parse_class(p, "1,0,0\n# skip\n0,1,0.5\n").unwrap();
        assert_eq!((c.len(), c.dim()), (2, 3));
        assert_eq!(line_of(parse_class(p, "1,0\n0,1\n0,1.5\n").unwrap_err()), 3);
        assert!(parse_class(p, "1,0\n1\n").is_err());
    }

    #[test]
    fn reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.json");
        fs::write(&path, r#"{"entries": [4, 0]}"#).unwrap();
        assert_eq!(read_database(&path).unwrap().l1_norm(), 4.0);
        assert!(matches!(
            read_class(&dir.path().join("missing.json")),
            Err(Error::Io(_))
        ));
    }
}
