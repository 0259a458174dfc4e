//! Symmetric positive definite banded matrices: Cholesky factorization and
//! triangular solves.

use crate::error::{Error, Result};

/// Lower band storage: row i holds entries (i, i−bw..=i) in `data[i*(bw+1)..]`,
/// with the diagonal last.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    /// Adds `v` at (i, j) and its mirror; `i` and `j` may be in either order.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let off = self.bw - (i - lo);
            let mut acc = row[self.bw] * x[i];
            for (k, j) in (lo..i).enumerate() {
                let a = row[off + k];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// In-place Cholesky A = L Lᵀ.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // s = A[i,j] − Σ_{k<j} L[i,k] L[j,k]
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = self.data[i * w + bw - (i - j)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in klo..j {
                    s -= self.data[ri + k] * self.data[rj + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Linalg(format!("matrix not positive definite at row {i} (pivot {s:e})")));
                    }
                    self.data[i * w + bw] = s.sqrt();
                } else {
                    self.data[i * w + bw - (i - j)] = s / self.data[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedMatrix,
}

impl BandedCholesky {
    pub fn len(&self) -> usize {
        self.l.n
    }

    pub fn is_empty(&self) -> bool {
        self.l.n == 0
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.l.n, self.l.bw);
        let w = bw + 1;
        let d = &self.l.data;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            let mut s = x[i];
            for k in lo..i {
                s -= d[ri + k] * x[k];
            }
            x[i] = s / d[i * w + bw];
        }
        for i in (0..n).rev() {
            x[i] /= d[i * w + bw];
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            for k in lo..i {
                x[k] -= d[ri + k] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_2d(m: usize) -> BandedMatrix {
        let n = m * m;
        let mut a = BandedMatrix::zeros(n, m);
        for i in 0..m {
            for j in 0..m {
                let p = i * m + j;
                a.add(p, p, 4.1);
                if j + 1 < m {
                    a.add(p + 1, p, -1.0);
                }
                if i + 1 < m {
                    a.add(p + m, p, -1.0);
                }
            }
        }
        a
    }

    #[test]
    fn solve_recovers_known_vector() {
        let a = laplacian_2d(7);
        let x: Vec<f64> = (0..49).map(|k| (k as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x);
        let ch = a.clone().cholesky().unwrap();
        let y = ch.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn matvec_is_symmetric() {
        let a = laplacian_2d(5);
        assert_eq!(a.get(0, 5), a.get(5, 0));
        assert_eq!(a.get(0, 5), -1.0);
        assert_eq!(a.get(0, 6), 0.0);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = BandedMatrix::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_err());
    }
}
