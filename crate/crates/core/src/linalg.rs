//! Dense and banded linear-algebra helpers on top of `nalgebra`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative nugget added to the diagonal when a first Cholesky attempt fails.
pub const RETRY_NUGGET: f64 = 1e-12;

/// Cholesky factorization with a single nugget retry.
///
/// On failure the diagonal is shifted by `1e-12 * trace(a) / n` and the
/// factorization is attempted once more. Returns `None` if both attempts fail.
pub fn cholesky_with_retry(a: &Matrix) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Some(c);
    }
    let n = a.nrows();
    if n == 0 {
        return None;
    }
    let shift = RETRY_NUGGET * a.trace().abs() / n as f64;
    if !(shift > 0.0) || !shift.is_finite() {
        return None;
    }
    let mut b = a.clone();
    for i in 0..n {
        b[(i, i)] += shift;
    }
    Cholesky::new(b)
}

/// Largest absolute asymmetry `|a_ij - a_ji|`.
pub fn asymmetry(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Solve `a x = b` for symmetric positive definite `a`.
pub fn spd_solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(crate::error::invalid("spd_solve: shape mismatch"));
    }
    if asymmetry(a) > 1e-10 * max_abs(a).max(1.0) {
        return Err(Error::SingularCovariance);
    }
    let chol = cholesky_with_retry(a).ok_or(Error::SingularCovariance)?;
    Ok(chol.solve(b))
}

/// `max |P P^T - I|`.
pub fn orthonormality_defect(p: &Matrix) -> f64 {
    if p.nrows() != p.ncols() {
        return f64::INFINITY;
    }
    let g = p * p.transpose();
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Minimum-norm least-squares solution of `a x = b` via SVD.
pub fn lstsq(a: &Matrix, b: &Vector) -> Result<Vector> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let eps = smax * 1e-13 * (a.nrows().max(a.ncols()) as f64);
    svd.solve(b, eps)
        .map_err(|e| Error::FitFailed(alloc::string::String::from(e)))
}

/// Square banded matrix stored by diagonals, solved by LU without pivoting.
///
/// Intended for diagonally dominant systems such as finite-difference
/// discretizations of elliptic operators.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    // row-major, `lower + upper + 1` entries per row; column j of row i sits at
    // offset `j + lower - i`.
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        BandedMatrix {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.lower < i || j > i + self.upper {
            None
        } else {
            Some(i * self.width() + j + self.lower - i)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` to entry `(i, j)`; panics if the entry is outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.data[k] += v;
    }

    /// In-place LU factorization (Doolittle, no pivoting).
    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        for k in 0..n {
            let pivot = self.get(k, k);
            if !(pivot.abs() > 1e-300) || !pivot.is_finite() {
                return Err(Error::FitFailed("zero pivot in banded LU".into()));
            }
            let imax = (k + self.lower).min(n - 1);
            let jmax = (k + self.upper).min(n - 1);
            for i in (k + 1)..=imax {
                let si = self.slot(i, k).unwrap();
                let l = self.data[si] / pivot;
                self.data[si] = l;
                if l == 0.0 {
                    continue;
                }
                for j in (k + 1)..=jmax {
                    let skj = self.slot(k, j).unwrap();
                    let sij = self.slot(i, j).unwrap();
                    self.data[sij] -= l * self.data[skj];
                }
            }
        }
        Ok(BandedLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
}

impl BandedLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let jmin = i.saturating_sub(m.lower);
            let mut s = x[i];
            for j in jmin..i {
                s -= m.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let jmax = (i + m.upper).min(n - 1);
            let mut s = x[i];
            for j in (i + 1)..=jmax {
                s -= m.get(i, j) * x[j];
            }
            x[i] = s / m.get(i, i);
        }
        x
    }
}

/// Mean of a slice; zero for an empty slice.
pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_lu_matches_dense_solve() {
        let n = 12;
        let mut band = BandedMatrix::zeros(n, 3, 3);
        let mut dense = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 4).min(n) {
                let v = if i == j { 10.0 } else { 1.0 / (1.0 + (i * 7 + j * 3) as f64 % 5.0) };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = band.factor().unwrap().solve(&b);
        let xd = dense.lu().solve(&Vector::from_vec(b)).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn retry_rescues_semidefinite_matrix() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(Cholesky::new(a.clone()).is_none());
        assert!(cholesky_with_retry(&a).is_some());
        let indefinite = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky_with_retry(&indefinite).is_none());
    }

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = (1..6).map(|k| (k as f64).ln()).collect();
        let y: Vec<f64> = x.iter().map(|l| -0.5 * l + 3.0).collect();
        assert!((ols_slope(&x, &y) + 0.5).abs() < 1e-12);
    }
}
