//! Text serialization for dense matrices and vectors, shared by ground-truth
//! files, whitening-matrix dumps, and estimate outputs.
//!
//! Matrix layout on disk is column-major: a `rows cols` header line, then one
//! line per column with `rows` values. Floats are written in Rust's shortest
//! round-trip form, so a dump/load cycle is bit-exact.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn write_matrix(path: &Path, m: &Mat) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "{} {}", m.rows(), m.cols()).map_err(|e| Error::io(path, e))?;
    for j in 0..m.cols() {
        let col: Vec<String> = (0..m.rows()).map(|i| format!("{}", m.get(i, j))).collect();
        writeln!(w, "{}", col.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Mat> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(f);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            msg: "missing header".into(),
        })
        .and_then(|l| l.map_err(|e| Error::io(path, e)))?;
    let mut it = header.split_whitespace();
    let rows: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            msg: format!("bad header {:?}", header),
        })?;
    let cols: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            msg: format!("bad header {:?}", header),
        })?;
    let mut m = Mat::zeros(rows, cols);
    let mut j = 0;
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if j >= cols {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: "more columns than the header declares".into(),
            });
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format {
                path: path.to_path_buf(),
                msg: format!("bad value in column {}", j),
            })?;
        if vals.len() != rows {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: format!("column {} has {} values, expected {}", j, vals.len(), rows),
            });
        }
        for (i, v) in vals.into_iter().enumerate() {
            m.set(i, j, v);
        }
        j += 1;
    }
    if j != cols {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("{} columns found, header declares {}", j, cols),
        });
    }
    Ok(m)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for x in v {
        writeln!(w, "{}", x).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(f)
        .lines()
        .filter_map(|l| match l {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(l.trim().parse::<f64>().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                msg: format!("bad value {:?}", l),
            })),
            Err(e) => Some(Err(Error::io(path, e))),
        })
        .collect()
}

/// Sparse `community node weight` triples for membership estimates.
pub fn write_sparse_triples(path: &Path, m: &Mat) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "# {} {}", m.rows(), m.cols()).map_err(|e| Error::io(path, e))?;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if v != 0.0 {
                writeln!(w, "{} {} {}", i, j, v).map_err(|e| Error::io(path, e))?;
            }
        }
    }
    Ok(())
}

pub fn read_sparse_triples(path: &Path) -> Result<Mat> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(f);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            msg: "missing header".into(),
        })
        .and_then(|l| l.map_err(|e| Error::io(path, e)))?;
    let hdr = header.trim_start_matches('#').trim();
    let mut it = hdr.split_whitespace();
    let (rows, cols): (usize, usize) = match (
        it.next().and_then(|t| t.parse().ok()),
        it.next().and_then(|t| t.parse().ok()),
    ) {
        (Some(r), Some(c)) => (r, c),
        _ => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: format!("bad triples header {:?}", header),
            })
        }
    };
    let mut m = Mat::zeros(rows, cols);
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse_err = || Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 2,
            msg: format!("expected `community node weight`, got {:?}", line),
        };
        let i: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
        let j: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
        let v: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
        if i >= rows || j >= cols {
            return Err(Error::Validation(format!(
                "triple ({}, {}) outside {}×{} at {}:{}",
                i,
                j,
                rows,
                cols,
                path.display(),
                lineno + 2
            )));
        }
        m.set(i, j, v);
    }
    Ok(m)
}
