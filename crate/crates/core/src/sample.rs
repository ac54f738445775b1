//! Observation panels.
//!
//! Both sample types hold zero-mean observations, one row per time period.
//! Construction validates shape and finiteness; afterwards the data is immutable.

use crate::error::{Error, Result};

/// Read access to a rectangular `T × n` panel of observations.
pub trait Panel {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn row(&self, t: usize) -> &[f64];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn rows(&self) -> RowIter<'_, Self>
    where
        Self: Sized,
    {
        RowIter { panel: self, t: 0 }
    }

    /// Copy out column `j`.
    fn column(&self, j: usize) -> Vec<f64>
    where
        Self: Sized,
    {
        self.rows().map(|r| r[j]).collect()
    }
}

pub struct RowIter<'a, P> {
    panel: &'a P,
    t: usize,
}

impl<'a, P: Panel> Iterator for RowIter<'a, P> {
    type Item = &'a [f64];

    fn next(&mut self) -> Option<&'a [f64]> {
        if self.t < self.panel.len() {
            let r = self.panel.row(self.t);
            self.t += 1;
            Some(r)
        } else {
            None
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.panel.len() - self.t;
        (rem, Some(rem))
    }
}

impl<'a, P: Panel> ExactSizeIterator for RowIter<'a, P> {}

/// A sample of `T ≥ 1` bivariate observations `(x1, x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSample {
    rows: Vec<[f64; 2]>,
}

impl BivariateSample {
    pub fn new(rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        for (t, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: t, column: j });
                }
            }
        }
        Ok(BivariateSample { rows })
    }

    pub fn from_columns(x1: &[f64], x2: &[f64]) -> Result<Self> {
        if x1.len() != x2.len() {
            return Err(Error::Dimension(format!(
                "column lengths differ: {} vs {}",
                x1.len(),
                x2.len()
            )));
        }
        Self::new(x1.iter().zip(x2).map(|(&a, &b)| [a, b]).collect())
    }

    pub fn pairs(&self) -> &[[f64; 2]] {
        &self.rows
    }

    /// Multiply every observation by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.rows.iter().map(|[a, b]| [c * a, c * b]).collect())
    }

    pub fn swapped(&self) -> Self {
        BivariateSample {
            rows: self.rows.iter().map(|[a, b]| [*b, *a]).collect(),
        }
    }

    pub fn to_multivariate(&self) -> MultivariateSample {
        MultivariateSample {
            dim: 2,
            data: self.rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }
}

impl Panel for BivariateSample {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn dim(&self) -> usize {
        2
    }

    fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }
}

/// A sample of `T ≥ 1` observations of common dimension `n ≥ 2`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSample {
    dim: usize,
    data: Vec<f64>,
}

impl MultivariateSample {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptySample)?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for (t, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Dimension(format!(
                    "row {t} has {} entries, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Dimension(format!("need n ≥ 2 columns, got {dim}")));
        }
        if data.is_empty() {
            return Err(Error::EmptySample);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Dimension(format!(
                "{} values do not fill rows of width {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i / dim,
                column: i % dim,
            });
        }
        Ok(MultivariateSample { dim, data })
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_row_major(self.dim, self.data.iter().map(|v| c * v).collect())
    }

    /// Bivariate view, if `n = 2`.
    pub fn to_bivariate(&self) -> Option<BivariateSample> {
        (self.dim == 2).then(|| BivariateSample {
            rows: self.data.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        })
    }
}

impl Panel for MultivariateSample {
    fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }
}

impl From<BivariateSample> for MultivariateSample {
    fn from(s: BivariateSample) -> Self {
        s.to_multivariate()
    }
}
