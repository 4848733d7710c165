//! Matrix Market coordinate files (real, general, 1-based indices).

use std::io::{BufRead, Write};

use crate::{OpError, SparseOperator};

pub fn write_matrix_market<W: Write>(
    op: &SparseOperator,
    mut w: W,
    comments: &[String],
) -> Result<(), OpError> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    for c in comments {
        for line in c.lines() {
            writeln!(w, "% {line}")?;
        }
    }
    writeln!(w, "{} {} {}", op.nrows, op.ncols, op.nnz())?;
    for (r, c, v) in op.triplets() {
        writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMarket {
    pub nrows: usize,
    pub ncols: usize,
    pub comments: Vec<String>,
    /// Zero-based triplets in file order.
    pub triplets: Vec<(usize, usize, f64)>,
}

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<MatrixMarket, OpError> {
    let mut lines = r.lines().enumerate();
    let bad = |line: usize, msg: &str| OpError::Parse { line: line + 1, msg: msg.to_string() };
    let (_, header) = lines.next().ok_or_else(|| bad(0, "empty file"))?;
    let header = header?;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(bad(0, "unsupported header"));
    }
    let mut comments = Vec::new();
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let t = line.trim();
        if let Some(c) = t.strip_prefix('%') {
            comments.push(c.trim_start().to_string());
            continue;
        }
        if t.is_empty() {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(bad(i, "expected three fields"));
        }
        match size {
            None => {
                let p = |s: &str| s.parse::<usize>().map_err(|_| bad(i, "bad size line"));
                size = Some((p(parts[0])?, p(parts[1])?, p(parts[2])?));
            }
            Some((nr, nc, _)) => {
                let r: usize = parts[0].parse().map_err(|_| bad(i, "bad row index"))?;
                let c: usize = parts[1].parse().map_err(|_| bad(i, "bad column index"))?;
                let v: f64 = parts[2].parse().map_err(|_| bad(i, "bad value"))?;
                if r == 0 || c == 0 || r > nr || c > nc {
                    return Err(bad(i, "index out of range"));
                }
                triplets.push((r - 1, c - 1, v));
            }
        }
    }
    let (nrows, ncols, nnz) = size.ok_or_else(|| bad(0, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(OpError::Parse {
            line: 0,
            msg: format!("declared {nnz} entries, found {}", triplets.len()),
        });
    }
    Ok(MatrixMarket { nrows, ncols, comments, triplets })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let op = SparseOperator::from_triplets(
            3,
            4,
            vec![(0, 1, 0.1), (2, 3, -1.0 / 3.0), (1, 0, 1e-300), (2, 0, 12345.678)],
        );
        let mut buf = Vec::new();
        write_matrix_market(&op, &mut buf, &["eps = 0.1".into(), "case I".into()]).unwrap();
        let mm = read_matrix_market(buf.as_slice()).unwrap();
        assert_eq!((mm.nrows, mm.ncols), (3, 4));
        assert_eq!(mm.comments, vec!["eps = 0.1", "case I"]);
        let mut want: Vec<_> = op.triplets().collect();
        let mut got = mm.triplets.clone();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_matrix_market("hello\n".as_bytes()).is_err());
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix_market(short.as_bytes()).is_err());
        let oob = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        match read_matrix_market(oob.as_bytes()) {
            Err(OpError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
