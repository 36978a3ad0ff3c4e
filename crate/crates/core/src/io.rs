//! File formats: MatrixMarket coordinate matrices, one-label-per-line
//! membership files and plain edge lists.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{BiAdjacency, Membership};

const MM_INTEGER: &str = "%%MatrixMarket matrix coordinate integer general";
const MM_REAL: &str = "%%MatrixMarket matrix coordinate real general";

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes the nonzero entries in row-major order, 1-based. Binary matrices use
/// the `integer` field, weighted ones `real`.
pub fn write_matrix_market<W: Write>(a: &BiAdjacency, mut out: W) -> std::io::Result<()> {
    let e = a.entries();
    let binary = e.iter().all(|&v| v == 0.0 || v == 1.0);
    writeln!(out, "{}", if binary { MM_INTEGER } else { MM_REAL })?;
    writeln!(out, "{} {} {}", e.nrows(), e.ncols(), a.nnz())?;
    for ((i, j), &v) in e.indexed_iter() {
        if v == 0.0 {
            continue;
        }
        if binary {
            writeln!(out, "{} {} 1", i + 1, j + 1)?;
        } else {
            // shortest representation that round-trips
            writeln!(out, "{} {} {:?}", i + 1, j + 1, v)?;
        }
    }
    out.flush()
}

pub fn save_matrix_market(a: &BiAdjacency, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_matrix_market(a, create(path)?).map_err(|e| Error::io(path, e))
}

/// Reads a `coordinate` MatrixMarket file with `integer`, `real` or `pattern`
/// entries and `general` symmetry. Repeated coordinates keep the last value.
pub fn read_matrix_market<R: Read>(input: R, path: &Path) -> Result<BiAdjacency> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(input).lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(1, format!("not a MatrixMarket header: {header:?}")));
    }
    if fields[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format {:?}", fields[2])));
    }
    let pattern = match fields[3].as_str() {
        "integer" | "real" => false,
        "pattern" => true,
        other => return Err(parse_err(1, format!("unsupported field {other:?}"))),
    };
    if fields[4] != "general" {
        return Err(parse_err(1, format!("unsupported symmetry {:?}", fields[4])));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Array2::<f64>::zeros((0, 0));
    let mut seen = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let Some((n1, n2, _)) = size else {
            if tokens.len() != 3 {
                return Err(parse_err(lineno, format!("expected 'rows cols nnz', got {line:?}")));
            }
            let nums = tokens
                .iter()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(lineno, e.to_string()))?;
            size = Some((nums[0], nums[1], nums[2]));
            entries = Array2::zeros((nums[0], nums[1]));
            continue;
        };
        let want = if pattern { 2 } else { 3 };
        if tokens.len() != want {
            return Err(parse_err(lineno, format!("expected {want} fields, got {}", tokens.len())));
        }
        let index = |t: &str, n: usize| -> Result<usize> {
            let v: usize = t.parse().map_err(|_| parse_err(lineno, format!("bad index {t:?}")))?;
            if v == 0 || v > n {
                return Err(parse_err(lineno, format!("index {v} outside 1..={n}")));
            }
            Ok(v - 1)
        };
        let (i, j) = (index(tokens[0], n1)?, index(tokens[1], n2)?);
        let value = if pattern {
            1.0
        } else {
            tokens[2]
                .parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("bad value {:?}", tokens[2])))?
        };
        if !(0.0..=1.0).contains(&value) {
            return Err(parse_err(lineno, format!("entry {value} is outside [0, 1]")));
        }
        entries[[i, j]] = value;
        seen += 1;
    }
    let Some((_, _, nnz)) = size else {
        return Err(parse_err(1, "missing size line".into()));
    };
    if seen != nnz {
        return Err(parse_err(0, format!("header announces {nnz} entries, found {seen}")));
    }
    BiAdjacency::new(entries)
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<BiAdjacency> {
    let path = path.as_ref();
    read_matrix_market(open(path)?, path)
}

/// One 1-based label per line.
pub fn write_labels<W: Write>(m: &Membership, mut out: W) -> std::io::Result<()> {
    for l in m.one_based() {
        writeln!(out, "{l}")?;
    }
    out.flush()
}

pub fn save_labels(m: &Membership, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_labels(m, create(path)?).map_err(|e| Error::io(path, e))
}

/// Reads 1-based labels, one per line; blank lines and `#` comments are
/// skipped. The number of clusters is the largest label unless given.
pub fn read_labels<R: Read>(input: R, path: &Path, k: Option<usize>) -> Result<Membership> {
    let mut labels = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: usize = t.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: format!("bad label {t:?}"),
        })?;
        if v == 0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: "labels are 1-based".into(),
            });
        }
        labels.push(v);
    }
    let k = k.unwrap_or_else(|| labels.iter().copied().max().unwrap_or(0));
    Membership::from_one_based(&labels, k)
}

pub fn load_labels(path: impl AsRef<Path>, k: Option<usize>) -> Result<Membership> {
    let path = path.as_ref();
    read_labels(open(path)?, path, k)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeListOptions {
    /// Indices start at 1 instead of 0.
    pub one_based: bool,
    /// Dimensions; inferred from the largest index when absent.
    pub n_rows: Option<usize>,
    pub n_cols: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct EdgeList {
    pub adjacency: BiAdjacency,
    /// Edges listed more than once (collapsed to a single 1).
    pub duplicates: usize,
    /// Lines whose weight was zero.
    pub zero_weight: usize,
}

/// Parses `row col [weight]` lines separated by whitespace or commas into a
/// binary bi-adjacency matrix. Blank lines and lines starting with `#` or `%`
/// are skipped; a nonzero weight counts as an edge.
pub fn read_edge_list<R: Read>(input: R, path: &Path, opts: EdgeListOptions) -> Result<EdgeList> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let offset = usize::from(opts.one_based);
    let mut edges = Vec::new();
    let mut zero_weight = 0;
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if !(2..=3).contains(&tokens.len()) {
            return Err(parse_err(lineno, format!("expected 'row col [weight]', got {t:?}")));
        }
        let index = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| parse_err(lineno, format!("bad index {s:?}")))?;
            v.checked_sub(offset)
                .ok_or_else(|| parse_err(lineno, "index 0 in a 1-based edge list".into()))
        };
        let (i, j) = (index(tokens[0])?, index(tokens[1])?);
        if let Some(w) = tokens.get(2) {
            let w: f64 = w.parse().map_err(|_| parse_err(lineno, format!("bad weight {w:?}")))?;
            if !w.is_finite() {
                return Err(parse_err(lineno, format!("bad weight {w}")));
            }
            if w == 0.0 {
                zero_weight += 1;
                continue;
            }
        }
        edges.push((lineno, i, j));
    }

    let n1 = opts
        .n_rows
        .unwrap_or_else(|| edges.iter().map(|e| e.1 + 1).max().unwrap_or(0));
    let n2 = opts
        .n_cols
        .unwrap_or_else(|| edges.iter().map(|e| e.2 + 1).max().unwrap_or(0));
    let mut entries = Array2::<f64>::zeros((n1, n2));
    let mut duplicates = 0;
    for (lineno, i, j) in edges {
        if i >= n1 || j >= n2 {
            return Err(parse_err(
                lineno,
                format!("edge ({}, {}) outside a {n1} x {n2} matrix", i + offset, j + offset),
            ));
        }
        if entries[[i, j]] == 1.0 {
            duplicates += 1;
        }
        entries[[i, j]] = 1.0;
    }
    Ok(EdgeList {
        adjacency: BiAdjacency::new(entries)?,
        duplicates,
        zero_weight,
    })
}

pub fn load_edge_list(path: impl AsRef<Path>, opts: EdgeListOptions) -> Result<EdgeList> {
    let path = path.as_ref();
    read_edge_list(open(path)?, path, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn p() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn matrix_market_round_trip() {
        let a = BiAdjacency::new(array![[0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, format!("{MM_INTEGER}\n2 3 3\n1 2 1\n2 1 1\n2 2 1\n"));
        assert_eq!(read_matrix_market(&buf[..], p()).unwrap(), a);

        let w = BiAdjacency::new(array![[0.1, 0.0], [0.0, 1.0 / 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&w, &mut buf).unwrap();
        assert!(buf.starts_with(MM_REAL.as_bytes()));
        assert_eq!(read_matrix_market(&buf[..], p()).unwrap(), w);
    }

    #[test]
    fn empty_matrix_has_no_entries() {
        let a = BiAdjacency::new(Array2::zeros((2, 2))).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{MM_INTEGER}\n2 2 0\n"));
    }

    #[test]
    fn matrix_market_errors_carry_line_numbers() {
        let text = format!("{MM_INTEGER}\n% comment\n2 2 1\n3 1 1\n");
        match read_matrix_market(text.as_bytes(), p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let pattern = "%%MatrixMarket matrix coordinate pattern general\n1 2 1\n1 2\n";
        let a = read_matrix_market(pattern.as_bytes(), p()).unwrap();
        assert_eq!(a.entries(), &array![[0.0, 1.0]]);
        assert!(read_matrix_market("%%MatrixMarket matrix array real general\n".as_bytes(), p()).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let m = Membership::new(vec![0, 2, 1, 2], 3).unwrap();
        let mut buf = Vec::new();
        write_labels(&m, &mut buf).unwrap();
        assert_eq!(buf, b"1\n3\n2\n3\n");
        assert_eq!(read_labels(&buf[..], p(), None).unwrap(), m);
        assert!(read_labels("1\n0\n".as_bytes(), p(), None).is_err());
    }

    #[test]
    fn edge_list_examples() {
        let one = EdgeListOptions {
            one_based: true,
            ..Default::default()
        };
        let e = read_edge_list("1 1\n2 2".as_bytes(), p(), one).unwrap();
        assert_eq!(e.adjacency.entries(), &array![[1.0, 0.0], [0.0, 1.0]]);

        let e = read_edge_list("0,1\n0 1\n# note\n1,0,2.5\n1 1 0\n".as_bytes(), p(), EdgeListOptions::default()).unwrap();
        assert_eq!(e.adjacency.entries(), &array![[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!((e.duplicates, e.zero_weight), (1, 1));

        match read_edge_list("1 2\n3\n".as_bytes(), p(), one) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let fixed = EdgeListOptions {
            one_based: true,
            n_rows: Some(2),
            n_cols: Some(5),
        };
        assert_eq!(read_edge_list("1 1\n".as_bytes(), p(), fixed).unwrap().adjacency.entries().dim(), (2, 5));
        match read_edge_list("1 1\n3 1\n".as_bytes(), p(), fixed) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(read_edge_list("0 1\n".as_bytes(), p(), one).is_err());
    }
}
