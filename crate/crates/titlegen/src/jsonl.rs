//! JSON-lines files: one object per line, UTF-8, trailing newline.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::AppError;

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, AppError> {
    let file = fs::File::open(path).map_err(AppError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(AppError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| AppError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn to_bytes<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("in-memory serialization of plain data");
        buf.push(b'\n');
    }
    buf
}

pub fn write<T: Serialize>(path: &Path, items: &[T]) -> Result<(), AppError> {
    write_bytes(path, &to_bytes(items))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(AppError::io(dir))?;
    }
    let mut f = fs::File::create(path).map_err(AppError::io(path))?;
    f.write_all(bytes).map_err(AppError::io(path))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("in-memory serialization of plain data");
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    let bytes = fs::read(path).map_err(AppError::io(path))?;
    serde_json::from_slice(&bytes).map_err(|source| AppError::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })
}
