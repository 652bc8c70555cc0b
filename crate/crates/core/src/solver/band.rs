use std::io::{self, Write};

use crate::error::{KornError, Result};

/// Symmetric matrix stored as its lower band: row `i` keeps columns
/// `i - bandwidth ..= i`, left-padded with zeros near the top.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bandwidth = bandwidth.min(n.saturating_sub(1));
        BandMatrix { n, bandwidth, data: vec![0.0; n * (bandwidth + 1)] }
    }

    /// Lower band of a symmetric dense matrix given row-major.
    pub fn from_dense(n: usize, rows: &[f64]) -> Self {
        let mut bandwidth = 0;
        for i in 0..n {
            for j in 0..i {
                if rows[i * n + j] != 0.0 {
                    bandwidth = bandwidth.max(i - j);
                }
            }
        }
        let mut m = Self::zeros(n, bandwidth);
        for i in 0..n {
            for j in i.saturating_sub(bandwidth)..=i {
                m.add(i, j, rows[i * n + j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn row(&self, i: usize) -> &[f64] {
        let w = self.bandwidth + 1;
        &self.data[i * w..(i + 1) * w]
    }

    fn pos(&self, i: usize, j: usize) -> usize {
        i * (self.bandwidth + 1) + (j + self.bandwidth - i)
    }

    /// Adds `value` at `(i, j)` and, by symmetry, at `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bandwidth);
        let p = self.pos(i, j);
        self.data[p] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            return 0.0;
        }
        self.data[self.pos(i, j)]
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let bw = self.bandwidth;
        for i in 0..self.n {
            let row = self.row(i);
            let lo = i.saturating_sub(bw);
            let offset = lo + bw - i;
            let mut acc = row[bw] * x[i];
            for (k, j) in (lo..i).enumerate() {
                let a = row[offset + k];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        dot(x, &y)
    }

    /// `self + c other` on the union band.
    pub fn add_scaled(&self, c: f64, other: &BandMatrix) -> BandMatrix {
        let bw = self.bandwidth.max(other.bandwidth);
        let mut out = BandMatrix::zeros(self.n, bw);
        for i in 0..self.n {
            for j in i.saturating_sub(bw)..=i {
                let v = self.get(i, j) + c * other.get(i, j);
                if v != 0.0 {
                    out.add(i, j, v);
                }
            }
        }
        out
    }

    /// Largest absolute stored entry.
    pub fn max_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Cholesky factor `L` with `A = L L^T`, in the same band layout.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let bw = self.bandwidth;
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // columns shared by rows i and j start at lo (since j <= i)
                let len = j - lo;
                let (ri, rj) = (i * w + (lo + bw - i), j * w + (lo + bw - j));
                let mut s = l[i * w + (j + bw - i)];
                let mut acc = 0.0;
                for k in 0..len {
                    acc += l[ri + k] * l[rj + k];
                }
                s -= acc;
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(KornError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { n: self.n, bandwidth: bw, data: l })
    }

    /// Every stored nonzero of the full symmetric matrix as `(row, col, value)`,
    /// sorted row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let bw = self.bandwidth;
        let mut out = Vec::new();
        for i in 0..self.n {
            let hi = (i + bw).min(self.n - 1);
            for j in i.saturating_sub(bw)..=hi {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Writes [`BandMatrix::triplets`] as `row col value` lines.
    pub fn write_triplets(&self, mut out: impl Write) -> io::Result<()> {
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let bw = self.bandwidth;
        let w = bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let base = i * w + (lo + bw - i);
            let mut s = x[i];
            for (k, j) in (lo..i).enumerate() {
                s -= self.data[base + k] * x[j];
            }
            x[i] = s / self.data[i * w + bw];
        }
        for i in (0..self.n).rev() {
            x[i] /= self.data[i * w + bw];
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            let base = i * w + (lo + bw - i);
            for (k, j) in (lo..i).enumerate() {
                x[j] -= self.data[base + k] * xi;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, bw: usize) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = i.abs_diff(j);
                if d <= bw {
                    a[i * n + j] = if d == 0 { 4.0 + i as f64 * 0.1 } else { 1.0 / (1.0 + d as f64 + (i + j) as f64 * 0.01) };
                }
            }
        }
        a
    }

    #[test]
    fn matvec_and_solve_match_dense() {
        let n = 13;
        let a = spd(n, 3);
        let m = BandMatrix::from_dense(n, &a);
        assert_eq!(m.bandwidth(), 3);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut y = vec![0.0; n];
        m.matvec(&x, &mut y);
        for i in 0..n {
            let dense: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            assert!((y[i] - dense).abs() < 1e-13);
        }
        let chol = m.cholesky().unwrap();
        let mut z = y.clone();
        chol.solve_in_place(&mut z);
        for i in 0..n {
            assert!((z[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = BandMatrix::from_dense(2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(m.cholesky(), Err(KornError::NotPositiveDefinite { row: 1, .. })));
    }

    #[test]
    fn triplets_are_row_major_and_symmetric() {
        let m = BandMatrix::from_dense(3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 2.0]);
        let t = m.triplets();
        assert_eq!(t, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0), (1, 2, 0.5), (2, 1, 0.5), (2, 2, 2.0)]);
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("0 0 2.00000000000000000e0\n"));
    }
}
