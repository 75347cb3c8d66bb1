//! Dense row-major `f64` matrices and the comma-separated text format.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense real matrix stored row-major.
///
/// Every constructor rejects NaN and infinite entries. Zero-column (or
/// zero-row) matrices are allowed; they carry bases of trivial subspaces.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; panics on ragged or non-finite input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, data).expect("finite entries")
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length");
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (k, d) in diag.iter().enumerate() {
            m[(k, k)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (jj, &j) in idx.iter().enumerate() {
                m[(i, jj)] = self[(i, j)];
            }
        }
        m
    }

    /// Keeps the first `n` rows.
    pub fn take_rows(&self, n: usize) -> Self {
        assert!(n <= self.rows);
        Self {
            rows: n,
            cols: self.cols,
            data: self.data[..n * self.cols].to_vec(),
        }
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "cannot concatenate {}-row and {}-row matrices",
                self.rows, other.rows
            )));
        }
        let mut m = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)];
            }
            for j in 0..other.cols {
                m[(i, self.cols + j)] = other[(i, j)];
            }
        }
        Ok(m)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec length");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Spectral norm (largest singular value).
    pub fn norm2(&self) -> f64 {
        crate::dense::singular_values(self).first().copied().unwrap_or(0.0)
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension(format!(
                "shape {:?} does not match {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    /// Parses the comma-separated matrix format: one row per line, no
    /// header, no empty lines, no trailing commas.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        let body = body.strip_suffix('\r').unwrap_or(body);
        if body.is_empty() {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "empty input".into(),
            });
        }
        let mut data = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (li, raw) in body.split('\n').enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            let lineno = li + 1;
            if line.trim().is_empty() {
                return Err(Error::Parse {
                    line: lineno,
                    column: 1,
                    message: "empty line".into(),
                });
            }
            let mut column = 1;
            let mut count = 0;
            for field in line.split(',') {
                let trimmed = field.trim();
                if trimmed.is_empty() {
                    return Err(Error::Parse {
                        line: lineno,
                        column,
                        message: "empty field (trailing or doubled comma)".into(),
                    });
                }
                let v: f64 = trimmed.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    column,
                    message: format!("'{trimmed}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        column,
                        message: format!("'{trimmed}' is not finite"),
                    });
                }
                data.push(v);
                count += 1;
                column += field.len() + 1;
            }
            match cols {
                None => cols = Some(count),
                Some(c) if c != count => {
                    return Err(Error::Parse {
                        line: lineno,
                        column: 1,
                        message: format!("row has {count} entries, expected {c}"),
                    })
                }
                _ => {}
            }
            rows += 1;
        }
        Self::new(rows, cols.unwrap_or(0), data)
    }

    /// Writes the comma-separated format with shortest round-trip decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &'a Matrix) -> Matrix {
        self.try_mul(rhs).expect("conformable shapes")
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn add(self, rhs: &'a Matrix) -> Matrix {
        self.try_add(rhs).expect("equal shapes")
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &'a Matrix) -> Matrix {
        self.try_sub(rhs).expect("equal shapes")
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        Matrix::new(repr.rows, repr.cols, repr.data).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn csv_parses_scientific_and_reports_position() {
        let m = Matrix::parse_csv("1,2.5e-1\n-3, 4\n").unwrap();
        assert_eq!(m, Matrix::from_rows(&[&[1.0, 0.25], &[-3.0, 4.0]]));

        match Matrix::parse_csv("1,2\n3,x\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Matrix::parse_csv("1,2,\n"),
            Err(Error::Parse { line: 1, column: 5, .. })
        ));
        assert!(matches!(
            Matrix::parse_csv("1,2\n\n3,4\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Matrix::parse_csv("1,2\n3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(Matrix::parse_csv("").is_err());
        assert!(Matrix::parse_csv("nan\n").is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let m = Matrix::from_rows(&[&[0.1 + 0.2, 1.0 / 3.0], &[-1e-300, 6.02214076e23]]);
        let back = Matrix::parse_csv(&m.to_csv()).unwrap();
        assert_eq!(m.as_slice(), back.as_slice());
    }

    #[test]
    fn json_shape() {
        let m = Matrix::from_rows(&[&[1.0, 2.0]]);
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v, serde_json::json!({"rows": 1, "cols": 2, "data": [1.0, 2.0]}));
        let bad: std::result::Result<Matrix, _> =
            serde_json::from_value(serde_json::json!({"rows": 2, "cols": 2, "data": [1.0]}));
        assert!(bad.is_err());
    }

    #[test]
    fn products() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(&a * &b, Matrix::from_rows(&[&[2.0, 1.0], &[4.0, 3.0]]));
        assert!(a.try_mul(&Matrix::zeros(3, 1)).is_err());
        assert_eq!(a.transpose()[(0, 1)], 3.0);
        assert_eq!(a.hcat(&b).unwrap().shape(), (2, 4));
    }
}
