use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use super::QCSTriple;
use crate::error::{Error, Result};

/// Parses each non-blank line as a JSON object, returning `(line number, object)`.
pub fn read_objects(path: &Path) -> Result<Vec<(usize, Map<String, Value>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(map)) => out.push((line_no, map)),
            Ok(_) => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected a JSON object".into(),
                })
            }
            Err(e) => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

pub(crate) fn string_field(map: &Map<String, Value>, key: &str, line: usize) -> Result<String> {
    match map.get(key) {
        None => Err(Error::Schema {
            line,
            key: key.to_string(),
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(Error::Parse {
            line,
            msg: format!("key \"{key}\" must be a string, found {other}"),
        }),
    }
}

/// Loads q-c-s triples; keys `id`, `question`, `conclusion`, `supplement`.
pub fn load_jsonl(path: &Path) -> Result<Vec<QCSTriple>> {
    read_objects(path)?
        .into_iter()
        .map(|(line, map)| {
            let question = string_field(&map, "question", line)?;
            let conclusion = string_field(&map, "conclusion", line)?;
            let supplement = string_field(&map, "supplement", line)?;
            let id = string_field(&map, "id", line)?;
            for (key, text) in [
                ("question", &question),
                ("conclusion", &conclusion),
                ("supplement", &supplement),
            ] {
                if text.trim().is_empty() {
                    return Err(Error::Parse {
                        line,
                        msg: format!("\"{key}\" is empty"),
                    });
                }
            }
            Ok(QCSTriple {
                id,
                question,
                conclusion,
                supplement,
            })
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_jsonl(triples: &[QCSTriple], path: &Path) -> Result<()> {
    write_jsonl(triples, path)
}
