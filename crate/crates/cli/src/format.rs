//! Plain-text number and matrix encoding shared by matrix files and reports.

use bipartite_cartan::Matrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unexpected end of input, expected {0}")]
    Eof(&'static str),
}

/// Shortest round-trip decimal; integers print without a decimal point and
/// `-0` prints as `0`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

pub fn complex(z: Complex64) -> String {
    format!("{} {}", num(z.re), num(z.im))
}

pub fn write_entries(out: &mut String, m: &Matrix) {
    for z in m.entries() {
        out.push_str(&complex(*z));
        out.push('\n');
    }
}

/// Line cursor with 1-based line numbers for diagnostics; blank lines and
/// `#` comments are skipped.
pub struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    pub fn next_line(&mut self, what: &'static str) -> Result<&'a str, FormatError> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.last = i + 1;
            return Ok(t);
        }
        Err(FormatError::Eof(what))
    }

    pub fn error(&self, message: impl Into<String>) -> FormatError {
        FormatError::Parse {
            line: self.last,
            message: message.into(),
        }
    }

    /// Next line split into words, the first of which must be `key`.
    pub fn keyed(&mut self, key: &'static str) -> Result<Vec<&'a str>, FormatError> {
        let line = self.next_line(key)?;
        let mut words = line.split_whitespace();
        if words.next() != Some(key) {
            return Err(self.error(format!("expected `{key}`, found `{line}`")));
        }
        Ok(words.collect())
    }

    pub fn parse<T: std::str::FromStr>(&self, word: &str) -> Result<T, FormatError> {
        word.parse().map_err(|_| self.error(format!("cannot parse `{word}`")))
    }

    pub fn complex(&mut self) -> Result<Complex64, FormatError> {
        let line = self.next_line("matrix entry")?;
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 2 {
            return Err(self.error("expected `re im`"));
        }
        Ok(Complex64::new(self.parse(words[0])?, self.parse(words[1])?))
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix, FormatError> {
        let data = (0..rows * cols)
            .map(|_| self.complex())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_vec(rows, cols, data))
    }
}

pub const MATRIX_HEADER: &str = "bipartite-cartan matrix v1";

/// `header`, `d1 d2`, then `(d1·d2)²` lines of `re im` in row-major order.
pub fn write_matrix_file(m: &Matrix, d1: usize, d2: usize) -> String {
    let mut out = format!("{MATRIX_HEADER}\n{d1} {d2}\n");
    write_entries(&mut out, m);
    out
}

pub fn read_matrix_file(text: &str) -> Result<(Matrix, usize, usize), FormatError> {
    let mut lines = Lines::new(text);
    let header = lines.next_line("header")?;
    if header != MATRIX_HEADER {
        return Err(lines.error(format!("expected header `{MATRIX_HEADER}`")));
    }
    let dims = lines.next_line("dimensions")?;
    let words: Vec<&str> = dims.split_whitespace().collect();
    if words.len() != 2 {
        return Err(lines.error("expected `d1 d2`"));
    }
    let (d1, d2): (usize, usize) = (lines.parse(words[0])?, lines.parse(words[1])?);
    let n = d1 * d2;
    let m = lines.matrix(n, n)?;
    if lines.next_line("end").is_ok() {
        return Err(lines.error(format!("more than {} entries", n * n)));
    }
    Ok((m, d1, d2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(-2.0), "-2");
        assert_eq!(num(0.1), "0.1");
        let x = std::f64::consts::PI / 3.0;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn matrix_file_round_trip() {
        let m = bipartite_cartan::sample::random_unitary(4, 3);
        let text = write_matrix_file(&m, 2, 2);
        let (back, d1, d2) = read_matrix_file(&text).unwrap();
        assert_eq!((d1, d2), (2, 2));
        assert_eq!(back, m);
    }

    #[test]
    fn matrix_file_errors() {
        assert!(read_matrix_file("nope\n").is_err());
        let short = format!("{MATRIX_HEADER}\n1 2\n1 0\n0 0\n");
        assert!(matches!(read_matrix_file(&short), Err(FormatError::Eof(_))));
        let bad = format!("{MATRIX_HEADER}\n1 1\n1 x\n");
        let err = read_matrix_file(&bad).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let long = format!("{MATRIX_HEADER}\n1 1\n1 0\n0 0\n");
        assert!(read_matrix_file(&long).is_err());
    }
}
