//! Matrix Market coordinate files and plain-text vectors.
//!
//! Values are written in shortest round-trip scientific notation, so a
//! write/read cycle reproduces every `f64` bit-for-bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{SparseRect, SparseSym};
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn format_sym(k: &SparseSym) -> String {
    let lower = k.lower_triplets();
    let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(s, "{} {} {}", k.n(), k.n(), lower.len());
    for (i, j, v) in lower {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    s
}

pub fn format_rect(b: &SparseRect) -> String {
    let trip = b.triplets();
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", b.nrows(), b.ncols(), trip.len());
    for (i, j, v) in trip {
        let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
    }
    s
}

struct Coordinate {
    nrows: usize,
    ncols: usize,
    symmetric: bool,
    entries: Vec<(usize, usize, f64)>,
}

fn parse_coordinate(text: &str, path: &Path) -> Result<Coordinate> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(parse_err(path, 1, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'"));
    }
    if h[3] != "real" && h[3] != "integer" {
        return Err(parse_err(path, 1, format!("unsupported field '{}'", h[3])));
    }
    let symmetric = match h[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(path, 1, format!("unsupported symmetry '{other}'"))),
    };
    let mut size = None;
    let mut entries = Vec::new();
    let mut expected = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(path, lineno, "expected three fields"));
        }
        match size {
            None => {
                let p = |s: &str| s.parse::<usize>().map_err(|e| parse_err(path, lineno, e.to_string()));
                size = Some((p(f[0])?, p(f[1])?));
                expected = p(f[2])?;
            }
            Some((m, n)) => {
                let p = |s: &str| s.parse::<usize>().map_err(|e| parse_err(path, lineno, e.to_string()));
                let (i, j) = (p(f[0])?, p(f[1])?);
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(parse_err(path, lineno, format!("index ({i}, {j}) out of range")));
                }
                let v = f[2]
                    .parse::<f64>()
                    .map_err(|e| parse_err(path, lineno, e.to_string()))?;
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (nrows, ncols) = size.ok_or_else(|| parse_err(path, 2, "missing size line"))?;
    if entries.len() != expected {
        return Err(parse_err(
            path,
            text.lines().count(),
            format!("expected {expected} entries, found {}", entries.len()),
        ));
    }
    Ok(Coordinate {
        nrows,
        ncols,
        symmetric,
        entries,
    })
}

pub fn parse_sym(text: &str, path: &Path) -> Result<SparseSym> {
    let c = parse_coordinate(text, path)?;
    if c.nrows != c.ncols {
        return Err(parse_err(path, 2, "symmetric matrix must be square"));
    }
    if c.symmetric {
        SparseSym::from_lower_triplets(c.nrows, c.entries)
    } else {
        SparseSym::from_triplets(c.nrows, c.entries)
    }
}

pub fn parse_rect(text: &str, path: &Path) -> Result<SparseRect> {
    let c = parse_coordinate(text, path)?;
    let mut entries = c.entries;
    if c.symmetric {
        let mirrored: Vec<_> = entries.iter().filter(|e| e.0 != e.1).map(|&(i, j, v)| (j, i, v)).collect();
        entries.extend(mirrored);
    }
    SparseRect::from_triplets(c.nrows, c.ncols, entries)
}

pub fn format_vec(v: &[f64]) -> String {
    let mut s = String::with_capacity(v.len() * 24);
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

pub fn parse_vec(text: &str, path: &Path) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'))
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| parse_err(path, i + 1, e.to_string()))
        })
        .collect()
}

pub fn write_sym(path: &Path, k: &SparseSym) -> Result<()> {
    Ok(fs::write(path, format_sym(k))?)
}

pub fn write_rect(path: &Path, b: &SparseRect) -> Result<()> {
    Ok(fs::write(path, format_rect(b))?)
}

pub fn write_vec(path: &Path, v: &[f64]) -> Result<()> {
    Ok(fs::write(path, format_vec(v))?)
}

pub fn read_sym(path: &Path) -> Result<SparseSym> {
    parse_sym(&fs::read_to_string(path)?, path)
}

pub fn read_rect(path: &Path) -> Result<SparseRect> {
    parse_rect(&fs::read_to_string(path)?, path)
}

pub fn read_vec(path: &Path) -> Result<Vec<f64>> {
    parse_vec(&fs::read_to_string(path)?, path)
}
