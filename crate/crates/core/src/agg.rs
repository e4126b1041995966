//! Weight formulas and the pointwise aggregation rule.
//!
//! An aggregate of `n` models is `M_A(x) = w(x)^T M(x)`. This module turns
//! error covariances, log-variances or second moments into weight vectors:
//!
//! * [`mva_weights`]: minimum-variance unbiased weights `A^{-1} 1 / (1^T A^{-1} 1)`.
//! * [`softmax_weights`]: the same for a diagonal covariance `Diag(exp(l))`.
//! * [`rotated_weights`]: diagonal covariance in a rotated basis `P^T D P`.
//! * [`mea_weights`]: unconstrained minimal-error weights `C^{-1} gamma`.

use alloc::vec::Vec;

#[allow(unused_imports)] // float math is inherent when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Weights below this value are flushed to zero by [`softmax_weights`].
pub const SOFTMAX_FLUSH: f64 = 1e-300;
/// Smallest admissible `|1^T P^T D P 1|` (with `max D = 1`) in [`rotated_weights`].
pub const ROTATION_DENOMINATOR_MIN: f64 = 1e-14;

/// Aggregation weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Wraps `weights`, checking finiteness and the unit-sum constraint.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyBank);
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("non-finite weight"));
        }
        let s: f64 = weights.iter().sum();
        let scale: f64 = weights.iter().map(|w| w.abs()).sum::<f64>().max(1.0);
        if (s - 1.0).abs() > 1e-12 * scale {
            return Err(invalid("weights do not sum to one"));
        }
        Ok(WeightVector(weights))
    }

    /// `n` equal weights.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyBank);
        }
        Ok(WeightVector(alloc::vec![1.0 / n as f64; n]))
    }

    /// The `k`-th unit vector of length `n`.
    pub fn selector(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(invalid("selector index out of range"));
        }
        let mut w = alloc::vec![0.0; n];
        w[k] = 1.0;
        Ok(WeightVector(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    // Divides by the computed sum so that the constraint holds to rounding.
    fn normalized(mut raw: Vec<f64>) -> Result<Self> {
        let s: f64 = raw.iter().sum();
        if !s.is_finite() || s == 0.0 {
            return Err(Error::SingularCovariance);
        }
        for w in raw.iter_mut() {
            *w /= s;
        }
        if raw.iter().any(|w| !w.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        Ok(WeightVector(raw))
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Error covariance `P^T Diag(exp(log_vars)) P` in an orthonormal basis `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    log_vars: Vec<f64>,
    basis: Matrix,
}

impl CovarianceModel {
    pub fn new(log_vars: Vec<f64>, basis: Matrix) -> Result<Self> {
        let n = log_vars.len();
        if n == 0 {
            return Err(Error::EmptyBank);
        }
        if basis.nrows() != n || basis.ncols() != n {
            return Err(invalid("basis shape does not match log_vars"));
        }
        if log_vars.iter().any(|l| !l.is_finite()) {
            return Err(invalid("non-finite log-variance"));
        }
        if linalg::orthonormality_defect(&basis) > 1e-10 {
            return Err(invalid("basis is not orthonormal"));
        }
        Ok(CovarianceModel { log_vars, basis })
    }

    /// Model with the identity basis (independent errors).
    pub fn diagonal(log_vars: Vec<f64>) -> Result<Self> {
        let n = log_vars.len();
        Self::new(log_vars, Matrix::identity(n, n))
    }

    pub fn log_vars(&self) -> &[f64] {
        &self.log_vars
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// The covariance matrix `P^T Diag(exp(log_vars)) P`.
    pub fn matrix(&self) -> Matrix {
        let n = self.log_vars.len();
        let d = Matrix::from_diagonal(&Vector::from_iterator(
            n,
            self.log_vars.iter().map(|l| l.exp()),
        ));
        self.basis.transpose() * d * &self.basis
    }
}

/// Second moments `C = E[M M^T]`, `gamma = E[Y M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMoments {
    pub c: Matrix,
    pub gamma: Vector,
}

impl SecondMoments {
    pub fn new(c: Matrix, gamma: Vector) -> Result<Self> {
        if c.nrows() != c.ncols() || c.nrows() != gamma.len() {
            return Err(invalid("second-moment shapes disagree"));
        }
        Ok(SecondMoments { c, gamma })
    }
}

/// Best linear unbiased weights for error covariance `a`.
pub fn mva_weights(a: &Matrix) -> Result<WeightVector> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::EmptyBank);
    }
    if a.ncols() != n {
        return Err(invalid("covariance must be square"));
    }
    let x = linalg::spd_solve(a, &Vector::from_element(n, 1.0))?;
    WeightVector::normalized(x.iter().copied().collect())
}

/// `softmax(-log_vars)`: the minimum-variance weights of `Diag(exp(log_vars))`.
pub fn softmax_weights(log_vars: &[f64]) -> Result<WeightVector> {
    if log_vars.is_empty() {
        return Err(Error::EmptyBank);
    }
    if log_vars.iter().any(|l| !l.is_finite()) {
        return Err(invalid("non-finite log-variance"));
    }
    let lmin = log_vars.iter().fold(f64::INFINITY, |m, l| m.min(*l));
    let mut w: Vec<f64> = log_vars
        .iter()
        .map(|l| {
            let e = (lmin - l).exp();
            if e < SOFTMAX_FLUSH {
                0.0
            } else {
                e
            }
        })
        .collect();
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
    Ok(WeightVector(w))
}

/// Weights `1^T P^T D P / (1^T P^T D P 1)` with `D = Diag(exp(-log_vars))`.
pub fn rotated_weights(model: &CovarianceModel) -> Result<WeightVector> {
    let n = model.log_vars.len();
    let lmin = model.log_vars.iter().fold(f64::INFINITY, |m, l| m.min(*l));
    // D scaled so that its largest entry is one; the ratio is unaffected.
    let d: Vec<f64> = model.log_vars.iter().map(|l| (lmin - l).exp()).collect();
    let p = &model.basis;
    let p1: Vec<f64> = (0..n).map(|k| p.row(k).sum()).collect();
    let mut num = alloc::vec![0.0; n];
    for k in 0..n {
        let c = d[k] * p1[k];
        for (j, v) in num.iter_mut().enumerate() {
            *v += c * p[(k, j)];
        }
    }
    let den: f64 = (0..n).map(|k| d[k] * p1[k] * p1[k]).sum();
    if !(den.abs() >= ROTATION_DENOMINATOR_MIN) {
        return Err(Error::DegenerateRotation(den));
    }
    for v in num.iter_mut() {
        *v /= den;
    }
    if num.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateRotation(den));
    }
    Ok(WeightVector(num))
}

/// Minimal-error weights `C^{-1} gamma`. The result is not constrained to
/// sum to one.
pub fn mea_weights(m: &SecondMoments) -> Result<Vec<f64>> {
    if m.c.nrows() == 0 {
        return Err(Error::EmptyBank);
    }
    let x = linalg::spd_solve(&m.c, &m.gamma)?;
    Ok(x.iter().copied().collect())
}

/// `w^T values`.
pub fn aggregate_pointwise(w: &WeightVector, model_values: &[f64]) -> Result<f64> {
    if w.len() != model_values.len() {
        return Err(invalid("weight and model-value lengths differ"));
    }
    Ok(w.0.iter().zip(model_values).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn mva_identity_is_uniform() {
        let w = mva_weights(&Matrix::identity(2, 2)).unwrap();
        assert!(close(w.as_slice(), &[0.5, 0.5], 1e-15));
    }

    #[test]
    fn mva_diagonal_case() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 4.0]));
        let w = mva_weights(&a).unwrap();
        assert!(close(w.as_slice(), &[0.8, 0.2], 1e-15));
    }

    #[test]
    fn mva_correlated_case_matches_grid_search() {
        // Brute force over the constraint line (w, 1 - w), step 1e-4.
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let mut best = (f64::INFINITY, 0.0);
        for i in -20_000..=30_000 {
            let w = i as f64 * 1e-4;
            let q = a[(0, 0)] * w * w + 2.0 * a[(0, 1)] * w * (1.0 - w) + a[(1, 1)] * (1.0 - w) * (1.0 - w);
            if q < best.0 {
                best = (q, w);
            }
        }
        assert!((best.1 - 0.75).abs() < 1e-9);
        let w = mva_weights(&a).unwrap();
        assert!(close(w.as_slice(), &[0.75, 0.25], 1e-14));
    }

    #[test]
    fn mva_errors() {
        assert_eq!(mva_weights(&Matrix::zeros(0, 0)), Err(Error::EmptyBank));
        let indefinite = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(mva_weights(&indefinite), Err(Error::SingularCovariance));
    }

    #[test]
    fn softmax_examples() {
        let w = softmax_weights(&[0.0, 0.0, 0.0]).unwrap();
        assert!(close(w.as_slice(), &[1.0 / 3.0; 3], 1e-15));
        let w = softmax_weights(&[0.0, 4.0f64.ln()]).unwrap();
        assert!(close(w.as_slice(), &[0.8, 0.2], 1e-15));
        let w = softmax_weights(&[0.0, 1000.0]).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.0]);
        assert!(softmax_weights(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn softmax_agrees_with_diagonal_mva() {
        let l = [0.3, -1.2, 2.5, 0.0];
        let a = Matrix::from_diagonal(&Vector::from_iterator(4, l.iter().map(|v| v.exp())));
        let w1 = softmax_weights(&l).unwrap();
        let w2 = mva_weights(&a).unwrap();
        assert!(close(w1.as_slice(), w2.as_slice(), 1e-12));
    }

    #[test]
    fn rotated_identity_and_permutation() {
        let m = CovarianceModel::diagonal(vec![0.0, 4.0f64.ln()]).unwrap();
        assert!(close(rotated_weights(&m).unwrap().as_slice(), &[0.8, 0.2], 1e-15));
        let swap = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let m = CovarianceModel::new(vec![4.0f64.ln(), 0.0], swap).unwrap();
        assert!(close(rotated_weights(&m).unwrap().as_slice(), &[0.8, 0.2], 1e-15));
    }

    #[test]
    fn rotated_45_degrees_matches_dense_oracle() {
        let c = core::f64::consts::FRAC_1_SQRT_2;
        let p = Matrix::from_row_slice(2, 2, &[c, -c, c, c]);
        let lv = vec![0.0, 4.0f64.ln()];
        let m = CovarianceModel::new(lv.clone(), p.clone()).unwrap();
        let w = rotated_weights(&m).unwrap();
        // Explicit 2x2 arithmetic: A = P^T diag(1, 4) P, then BLUE of A.
        let a00 = p[(0, 0)] * p[(0, 0)] * 1.0 + p[(1, 0)] * p[(1, 0)] * 4.0;
        let a01 = p[(0, 0)] * p[(0, 1)] * 1.0 + p[(1, 0)] * p[(1, 1)] * 4.0;
        let a11 = p[(0, 1)] * p[(0, 1)] * 1.0 + p[(1, 1)] * p[(1, 1)] * 4.0;
        let det = a00 * a11 - a01 * a01;
        let (i0, i1) = ((a11 - a01) / det, (a00 - a01) / det);
        let expect = [i0 / (i0 + i1), i1 / (i0 + i1)];
        assert!(close(w.as_slice(), &expect, 1e-13));
        let s: f64 = w.as_slice().iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotated_degenerate_denominator() {
        // P maps 1 onto the second axis only; D weights that axis by e^-60.
        let c = core::f64::consts::FRAC_1_SQRT_2;
        let p = Matrix::from_row_slice(2, 2, &[c, -c, c, c]);
        let m = CovarianceModel::new(vec![0.0, 60.0], p).unwrap();
        assert!(matches!(rotated_weights(&m), Err(Error::DegenerateRotation(_))));
    }

    #[test]
    fn covariance_model_rejects_bad_basis() {
        let p = Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(CovarianceModel::new(vec![0.0, 0.0], p).is_err());
    }

    #[test]
    fn mea_identity_moments() {
        let m = SecondMoments::new(Matrix::identity(2, 2), Vector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(close(&mea_weights(&m).unwrap(), &[1.0, 0.0], 1e-15));
    }

    #[test]
    fn pointwise_rule() {
        let sel = WeightVector::selector(2, 0).unwrap();
        assert_eq!(aggregate_pointwise(&sel, &[3.7, -9.0]).unwrap(), 3.7);
        let uni = WeightVector::uniform(3).unwrap();
        assert!((aggregate_pointwise(&uni, &[1.0, 2.0, 3.0]).unwrap() - 2.0).abs() < 1e-15);
        let w = WeightVector::new(vec![0.75, 0.25]).unwrap();
        assert_eq!(aggregate_pointwise(&w, &[2.0, -2.0]).unwrap(), 1.0);
        assert!(aggregate_pointwise(&w, &[1.0]).is_err());
    }
}
