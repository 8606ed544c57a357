//! Matrix Market coordinate I/O.
//!
//! Symmetric matrices are written as `symmetric` (lower triangle, as the
//! format requires); triangular factors and row blocks as `general`. Values
//! carry 17 significant digits so a write/read cycle is lossless.

use std::io::{BufRead, Write};

use thiserror::Error;

use super::{LinalgError, SparseRowBlock, SparseSymmetric, UpperTriangular};

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, MarketError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

/// A parsed coordinate file with 0-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub symmetry: Symmetry,
    pub n_rows: usize,
    pub n_cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

fn write_coordinate<W: Write>(
    w: &mut W,
    symmetry: Symmetry,
    n_rows: usize,
    n_cols: usize,
    entries: &[(usize, usize, f64)],
) -> Result<()> {
    let kind = match symmetry {
        Symmetry::General => "general",
        Symmetry::Symmetric => "symmetric",
    };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    writeln!(w, "{} {} {}", n_rows, n_cols, entries.len())?;
    for &(i, j, v) in entries {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn write_symmetric<W: Write>(w: &mut W, m: &SparseSymmetric) -> Result<()> {
    let mut lower: Vec<(usize, usize, f64)> =
        m.entries().iter().map(|&(i, j, v)| (j, i, v)).collect();
    lower.sort_by_key(|e| (e.1, e.0));
    write_coordinate(w, Symmetry::Symmetric, m.dim(), m.dim(), &lower)
}

pub fn write_triangular<W: Write>(w: &mut W, r: &UpperTriangular) -> Result<()> {
    let mut entries = Vec::with_capacity(r.nnz());
    for i in 0..r.dim() {
        entries.push((i, i, r.diagonal()[i]));
        entries.extend(r.off_row(i).iter().map(|&(j, v)| (i, j, v)));
    }
    write_coordinate(w, Symmetry::General, r.dim(), r.dim(), &entries)
}

pub fn write_rows<W: Write>(w: &mut W, u: &SparseRowBlock) -> Result<()> {
    let entries: Vec<_> = u
        .rows()
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
        .collect();
    write_coordinate(w, Symmetry::General, u.n_rows(), u.n_cols(), &entries)
}

fn parse_err(line: usize, message: impl Into<String>) -> MarketError {
    MarketError::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_coordinate<R: BufRead>(r: R) -> Result<Coordinate> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
        || tokens[3] != "real"
    {
        return Err(parse_err(1, format!("unsupported header `{header}`")));
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(lineno, "expected three fields"));
        }
        match size {
            None => {
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| parse_err(lineno, format!("bad size `{s}`: {e}")))
                };
                size = Some((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
            }
            Some((n_rows, n_cols, _)) => {
                let i: usize = fields[0]
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad row index: {e}")))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad column index: {e}")))?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad value: {e}")))?;
                if i == 0 || j == 0 || i > n_rows || j > n_cols {
                    return Err(parse_err(lineno, format!("index ({i}, {j}) out of range")));
                }
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (n_rows, n_cols, nnz) = size.ok_or_else(|| parse_err(2, "missing size line"))?;
    if entries.len() != nnz {
        return Err(parse_err(
            0,
            format!("expected {nnz} entries, found {}", entries.len()),
        ));
    }
    Ok(Coordinate {
        symmetry,
        n_rows,
        n_cols,
        entries,
    })
}

pub fn read_symmetric<R: BufRead>(r: R) -> Result<SparseSymmetric> {
    let c = read_coordinate(r)?;
    if c.symmetry != Symmetry::Symmetric || c.n_rows != c.n_cols {
        return Err(parse_err(1, "expected a square symmetric matrix"));
    }
    let upper = c
        .entries
        .into_iter()
        .map(|(i, j, v)| if i >= j { (j, i, v) } else { (i, j, v) })
        .collect();
    Ok(SparseSymmetric::from_triplets(c.n_rows, upper)?)
}

pub fn read_triangular<R: BufRead>(r: R) -> Result<UpperTriangular> {
    let c = read_coordinate(r)?;
    if c.n_rows != c.n_cols {
        return Err(parse_err(1, "expected a square matrix"));
    }
    let n = c.n_rows;
    let mut diag = vec![0.0; n];
    let mut off = vec![Vec::new(); n];
    for (i, j, v) in c.entries {
        if j < i {
            return Err(LinalgError::ShapeViolation { row: i, col: j }.into());
        }
        if i == j {
            diag[i] = v;
        } else {
            off[i].push((j, v));
        }
    }
    for row in &mut off {
        row.sort_by_key(|e: &(usize, f64)| e.0);
    }
    Ok(UpperTriangular::new(diag, off)?)
}

pub fn read_rows<R: BufRead>(r: R) -> Result<SparseRowBlock> {
    let c = read_coordinate(r)?;
    let mut rows = vec![Vec::new(); c.n_rows];
    for (i, j, v) in c.entries {
        rows[i].push((j, v));
    }
    for row in &mut rows {
        row.sort_by_key(|e: &(usize, f64)| e.0);
    }
    Ok(SparseRowBlock::new(c.n_cols, rows)?)
}
