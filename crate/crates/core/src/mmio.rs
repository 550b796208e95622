//! MatrixMarket reading and writing: `array` format for dense matrices and
//! vectors, `coordinate` format for sparse operators.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linops::{CsrMatrix, DenseMatrix};
use crate::scalar::Scalar;

/// Writes a dense matrix as `%%MatrixMarket matrix array real general`.
pub fn write_dense<T: Scalar, W: Write>(mut w: W, m: &DenseMatrix<T>) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for &v in m.as_slice() {
        writeln!(w, "{v:e}")?;
    }
    Ok(())
}

/// Writes a vector as an `n × 1` array.
pub fn write_vector<T: Scalar, W: Write>(mut w: W, v: &[T]) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", v.len())?;
    for &x in v {
        writeln!(w, "{x:e}")?;
    }
    Ok(())
}

/// Writes a sparse matrix as `%%MatrixMarket matrix coordinate real general`.
pub fn write_coordinate<T: Scalar, W: Write>(mut w: W, m: &CsrMatrix<T>) -> Result<()> {
    use crate::linops::LinearOperator;
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(w, "{} {} {v:e}", i + 1, j + 1)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

struct Header {
    layout: Layout,
    field: Field,
    symmetry: Symmetry,
}

/// Whitespace-separated tokens with their byte offsets, comments removed.
struct Tokens<'a> {
    lines: Vec<(usize, &'a str)>,
    line: usize,
    within: Vec<(usize, &'a str)>,
    pos: usize,
    end: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, start: usize) -> Self {
        let mut lines = Vec::new();
        let mut offset = start;
        for line in text[start..].split_inclusive('\n') {
            let trimmed = line.trim_start();
            if !trimmed.is_empty() && !trimmed.starts_with('%') {
                lines.push((offset, line));
            }
            offset += line.len();
        }
        Self {
            lines,
            line: 0,
            within: Vec::new(),
            pos: 0,
            end: text.len(),
        }
    }

    /// Tokens of the next non-comment line.
    fn next_line(&mut self) -> Option<Vec<(usize, &'a str)>> {
        let (base, line) = *self.lines.get(self.line)?;
        self.line += 1;
        let mut out = Vec::new();
        let mut idx = 0;
        for tok in line.split_whitespace() {
            let found = line[idx..].find(tok).map_or(idx, |p| idx + p);
            out.push((base + found, tok));
            idx = found + tok.len();
        }
        Some(out)
    }

    /// Next token in a free-flowing stream of values.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        while self.pos >= self.within.len() {
            self.within = self.next_line()?;
            self.pos = 0;
        }
        self.pos += 1;
        Some(self.within[self.pos - 1])
    }
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn parse_num<N: std::str::FromStr>(tok: Option<(usize, &str)>, end: usize, what: &str) -> Result<N> {
    let (off, s) = tok.ok_or_else(|| parse_err(end, format!("unexpected end of input, expected {what}")))?;
    s.parse::<N>()
        .map_err(|_| parse_err(off, format!("invalid {what} `{s}`")))
}

fn parse_header(text: &str) -> Result<(Header, usize)> {
    let first = text.split_inclusive('\n').next().unwrap_or("");
    let words: Vec<String> = first.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(parse_err(0, "missing %%MatrixMarket banner"));
    }
    if words.get(1).map(String::as_str) != Some("matrix") {
        return Err(parse_err(0, "only `matrix` objects are supported"));
    }
    let layout = match words.get(2).map(String::as_str) {
        Some("array") => Layout::Array,
        Some("coordinate") => Layout::Coordinate,
        _ => return Err(parse_err(0, "format must be `array` or `coordinate`")),
    };
    let field = match words.get(3).map(String::as_str) {
        Some("real") | Some("double") => Field::Real,
        Some("integer") => Field::Integer,
        Some("pattern") if layout == Layout::Coordinate => Field::Pattern,
        _ => return Err(parse_err(0, "field must be real, integer or pattern")),
    };
    let symmetry = match words.get(4).map(String::as_str) {
        Some("general") => Symmetry::General,
        Some("symmetric") => Symmetry::Symmetric,
        Some("skew-symmetric") => Symmetry::SkewSymmetric,
        _ => return Err(parse_err(0, "symmetry must be general, symmetric or skew-symmetric")),
    };
    Ok((
        Header {
            layout,
            field,
            symmetry,
        },
        first.len(),
    ))
}

fn value<T: Scalar>(tok: Option<(usize, &str)>, end: usize, field: Field) -> Result<T> {
    match field {
        Field::Pattern => Ok(T::one()),
        Field::Integer => Ok(T::lit(parse_num::<i64>(tok, end, "integer entry")? as f64)),
        Field::Real => Ok(T::lit(parse_num::<f64>(tok, end, "real entry")?)),
    }
}

/// Reads a dense `array` matrix.
pub fn read_dense<T: Scalar, R: Read>(mut r: R) -> Result<DenseMatrix<T>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (header, start) = parse_header(&text)?;
    if header.layout != Layout::Array {
        return Err(parse_err(0, "expected an `array` matrix"));
    }
    let mut toks = Tokens::new(&text, start);
    let end = toks.end;
    let rows: usize = parse_num(toks.next(), end, "row count")?;
    let cols: usize = parse_num(toks.next(), end, "column count")?;
    let mut m = DenseMatrix::zeros(rows, cols);
    match header.symmetry {
        Symmetry::General => {
            for j in 0..cols {
                for i in 0..rows {
                    m[(i, j)] = value(toks.next(), end, header.field)?;
                }
            }
        }
        Symmetry::Symmetric | Symmetry::SkewSymmetric => {
            if rows != cols {
                return Err(parse_err(start, "symmetric array must be square"));
            }
            let skew = header.symmetry == Symmetry::SkewSymmetric;
            for j in 0..cols {
                let first = if skew { j + 1 } else { j };
                for i in first..rows {
                    let v: T = value(toks.next(), end, header.field)?;
                    m[(i, j)] = v;
                    m[(j, i)] = if skew { -v } else { v };
                }
            }
        }
    }
    if let Some((off, tok)) = toks.next() {
        return Err(parse_err(off, format!("trailing data `{tok}`")));
    }
    Ok(m)
}

/// Reads an `n × 1` (or `1 × n`) array as a vector.
pub fn read_vector<T: Scalar, R: Read>(r: R) -> Result<Vec<T>> {
    let m = read_dense::<T, _>(r)?;
    if m.cols() != 1 && m.rows() != 1 {
        return Err(parse_err(0, format!("expected a vector, found {}x{}", m.rows(), m.cols())));
    }
    Ok(m.as_slice().to_vec())
}

/// Reads a sparse `coordinate` matrix.
pub fn read_coordinate<T: Scalar, R: Read>(mut r: R) -> Result<CsrMatrix<T>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (header, start) = parse_header(&text)?;
    if header.layout != Layout::Coordinate {
        return Err(parse_err(0, "expected a `coordinate` matrix"));
    }
    let mut toks = Tokens::new(&text, start);
    let end = toks.end;
    let size_line = toks
        .next_line()
        .ok_or_else(|| parse_err(end, "missing size line"))?;
    let mut size = size_line.into_iter();
    let rows: usize = parse_num(size.next(), end, "row count")?;
    let cols: usize = parse_num(size.next(), end, "column count")?;
    let nnz: usize = parse_num(size.next(), end, "entry count")?;
    let mut triplets = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let line = toks
            .next_line()
            .ok_or_else(|| parse_err(end, "fewer entries than declared"))?;
        let line_off = line.first().map_or(end, |t| t.0);
        let mut it = line.into_iter();
        let i: usize = parse_num(it.next(), end, "row index")?;
        let j: usize = parse_num(it.next(), end, "column index")?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(parse_err(line_off, format!("index ({i}, {j}) out of range")));
        }
        let v: T = value(it.next(), end, header.field)?;
        triplets.push((i - 1, j - 1, v));
        if i != j {
            match header.symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((j - 1, i - 1, v)),
                Symmetry::SkewSymmetric => triplets.push((j - 1, i - 1, -v)),
            }
        }
    }
    if let Some(line) = toks.next_line() {
        let off = line.first().map_or(end, |t| t.0);
        return Err(parse_err(off, "more entries than declared"));
    }
    CsrMatrix::from_triplets(rows, cols, triplets)
}

pub fn save_dense<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<()> {
    let mut buf = Vec::new();
    write_dense(&mut buf, m)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn save_vector<T: Scalar>(path: impl AsRef<Path>, v: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    write_vector(&mut buf, v)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_dense<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    read_dense(std::fs::File::open(path)?)
}

pub fn load_vector<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    read_vector(std::fs::File::open(path)?)
}

pub fn load_coordinate<T: Scalar>(path: impl AsRef<Path>) -> Result<CsrMatrix<T>> {
    read_coordinate(std::fs::File::open(path)?)
}
