use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major matrix of per-epoch values, one row per time point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    cols: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(cols: usize, rows: usize) -> Self {
        Self {
            cols,
            data: Vec::with_capacity(cols * rows),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut t = Self::with_capacity(cols, rows.len());
        for row in rows {
            t.push_row(row)?;
        }
        Ok(t)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::Shape {
                expected: format!("{} columns", self.cols),
                actual: format!("{} columns", row.len()),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// One column as a time series.
    pub fn column(&self, col: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[col]).collect()
    }

    pub fn last_row(&self) -> Option<&[f64]> {
        self.rows().checked_sub(1).map(|i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols)
    }

    /// Element-wise mean of equally shaped trajectories.
    pub fn mean_of<'a>(items: impl IntoIterator<Item = &'a Trajectory>) -> Result<Self> {
        let mut iter = items.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::domain("mean of zero trajectories"))?;
        let mut acc = first.data.clone();
        let mut n = 1usize;
        for t in iter {
            if t.shape() != first.shape() {
                return Err(Error::Shape {
                    expected: format!("{:?}", first.shape()),
                    actual: format!("{:?}", t.shape()),
                });
            }
            for (a, b) in acc.iter_mut().zip(&t.data) {
                *a += b;
            }
            n += 1;
        }
        let inv = 1.0 / n as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Ok(Self {
            cols: first.cols,
            data: acc,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_access() {
        let t = Trajectory::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(t.shape(), (3, 2));
        assert_eq!(t.row(1), &[3.0, 4.0]);
        assert_eq!(t.column(1), vec![2.0, 4.0, 6.0]);
        assert_eq!(t.last_row(), Some(&[5.0, 6.0][..]));
    }

    #[test]
    fn ragged_row_rejected() {
        let mut t = Trajectory::new(2);
        assert!(t.push_row(&[1.0]).is_err());
    }

    #[test]
    fn mean() {
        let a = Trajectory::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let b = Trajectory::from_rows(&[vec![1.0, 3.0]]).unwrap();
        let m = Trajectory::mean_of([&a, &b]).unwrap();
        assert_eq!(m.row(0), &[0.5, 2.0]);
    }
}
