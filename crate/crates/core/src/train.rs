//! Fitting aggregators from validation errors.
//!
//! All fitters work on [`ErrorSamples`]. The log-variance functions
//! `lambda_k` are kernel expansions over the sample inputs plus one
//! unpenalized constant per model, so that away from the data each
//! `lambda_k` reverts to a data-wide level instead of zero.

use alloc::string::ToString;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::agg::{self, CovarianceModel, WeightVector};
use crate::error::{invalid, Error, Result};
use crate::kernels::{self, KernelSpec, KrrModel, MeeaPredictor};
use crate::linalg::{self, Matrix, Vector};

/// Floor on squared errors before taking logarithms.
pub const ERROR_FLOOR: f64 = 1e-24;
/// Maximum step halvings per iteration before giving up.
pub const MAX_HALVINGS: usize = 30;

/// Validation data: inputs, model predictions, targets and their differences.
#[derive(Debug, Clone)]
pub struct ErrorSamples {
    inputs: Vec<Vec<f64>>,
    errors: Matrix,
    targets: Vec<f64>,
    model_values: Matrix,
}

impl ErrorSamples {
    /// `model_values` has one row per sample and one column per model.
    pub fn new(inputs: Vec<Vec<f64>>, model_values: Matrix, targets: Vec<f64>) -> Result<Self> {
        let n = inputs.len();
        if model_values.nrows() != n || targets.len() != n {
            return Err(invalid("inputs, model values and targets differ in length"));
        }
        if model_values.ncols() == 0 {
            return Err(Error::EmptyBank);
        }
        if let Some(d) = inputs.first().map(|x| x.len()) {
            if inputs.iter().any(|x| x.len() != d) {
                return Err(invalid("inconsistent input dimensions"));
            }
        }
        if model_values.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite model value or target"));
        }
        let errors = Matrix::from_fn(n, model_values.ncols(), |i, k| model_values[(i, k)] - targets[i]);
        Ok(ErrorSamples { inputs, errors, targets, model_values })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn errors(&self) -> &Matrix {
        &self.errors
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn model_values(&self) -> &Matrix {
        &self.model_values
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n_models(&self) -> usize {
        self.model_values.ncols()
    }

    /// Model values of sample `i` as a vector.
    pub fn model_row(&self, i: usize) -> Vec<f64> {
        self.model_values.row(i).iter().copied().collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= self.len()) {
            return Err(invalid("sample index out of range"));
        }
        let inputs = indices.iter().map(|&i| self.inputs[i].clone()).collect();
        let mv = Matrix::from_fn(indices.len(), self.n_models(), |r, k| self.model_values[(indices[r], k)]);
        let targets = indices.iter().map(|&i| self.targets[i]).collect();
        ErrorSamples::new(inputs, mv, targets)
    }
}

/// Which objective produced an aggregator's log-variance functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Least squares between `exp(lambda)` and squared errors.
    Covariance,
    /// Least squares between `lambda` and log squared errors.
    Sharp,
    /// Direct minimization of the empirical aggregate variance.
    Direct,
}

/// Fitted minimal-variance aggregator.
#[derive(Debug, Clone)]
pub struct MevaAggregator {
    log_var_model: KrrModel,
    basis: Matrix,
    identity_basis: bool,
    loss_kind: LossKind,
}

impl MevaAggregator {
    fn new(log_var_model: KrrModel, basis: Option<&Matrix>, loss_kind: LossKind) -> Self {
        let n = log_var_model.n_outputs();
        let (basis, identity_basis) = match basis {
            Some(p) => (p.clone(), *p == Matrix::identity(n, n)),
            None => (Matrix::identity(n, n), true),
        };
        MevaAggregator { log_var_model, basis, identity_basis, loss_kind }
    }

    pub fn log_var_model(&self) -> &KrrModel {
        &self.log_var_model
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    pub fn n_models(&self) -> usize {
        self.log_var_model.n_outputs()
    }

    /// Fitted log-variances `lambda(x)`.
    pub fn log_vars(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.log_var_model.predict(x)
    }

    pub fn weights(&self, x: &[f64]) -> Result<WeightVector> {
        let lv = self.log_vars(x)?;
        if self.identity_basis {
            agg::softmax_weights(&lv)
        } else {
            agg::rotated_weights(&CovarianceModel::new(lv, self.basis.clone())?)
        }
    }

    /// Weights at `x` and the aggregate of `model_values`.
    pub fn predict(&self, x: &[f64], model_values: &[f64]) -> Result<(WeightVector, f64)> {
        let w = self.weights(x)?;
        let v = agg::aggregate_pointwise(&w, model_values)?;
        Ok((w, v))
    }
}

/// Free-function form of [`MevaAggregator::predict`].
pub fn predict(agg: &MevaAggregator, x: &[f64], model_values: &[f64]) -> Result<(WeightVector, f64)> {
    agg.predict(x, model_values)
}

fn check_basis(basis: Option<&Matrix>, n: usize) -> Result<()> {
    if let Some(p) = basis {
        if p.nrows() != n || p.ncols() != n {
            return Err(invalid("basis shape does not match the model bank"));
        }
        if linalg::orthonormality_defect(p) > 1e-10 {
            return Err(invalid("basis is not orthonormal"));
        }
    }
    Ok(())
}

// Squared errors in the chosen basis, `((P e^i)_k)^2`.
fn squared_errors(s: &ErrorSamples, basis: Option<&Matrix>) -> Matrix {
    match basis {
        None => s.errors.map(|e| e * e),
        Some(p) => {
            let rotated = &s.errors * p.transpose();
            rotated.map(|e| e * e)
        }
    }
}

fn check_common(s: &ErrorSamples, reg: f64) -> Result<()> {
    if s.is_empty() {
        return Err(invalid("no samples"));
    }
    if !(reg >= 0.0) || !reg.is_finite() {
        return Err(invalid("reg must be nonnegative"));
    }
    Ok(())
}

/// Fits `lambda_k` by kernel ridge regression on `ln(max((P e)^2, floor))`.
pub fn fit_meva_sharp(s: &ErrorSamples, kernel: &KernelSpec, reg: f64, basis: Option<&Matrix>) -> Result<MevaAggregator> {
    check_common(s, reg)?;
    check_basis(basis, s.n_models())?;
    let targets = squared_errors(s, basis).map(|e2| e2.max(ERROR_FLOOR).ln());
    let model = kernels::krr_fit_centered(&s.inputs, &targets, kernel, reg)?;
    Ok(MevaAggregator::new(model, basis, LossKind::Sharp))
}

/// Value of the covariance objective
/// `sum_i sum_k (exp(lambda_k(x_i)) - (P e^i)_k^2)^2 + reg N sum_k |lambda_k - m_k|_H^2`
/// for an aggregator whose anchors are the inputs of `s`.
pub fn covariance_objective(agg: &MevaAggregator, s: &ErrorSamples) -> Result<f64> {
    let m = agg.log_var_model();
    if m.anchors().len() != s.len() {
        return Err(invalid("aggregator anchors do not match the samples"));
    }
    let basis = if agg.identity_basis { None } else { Some(&agg.basis) };
    let y = squared_errors(s, basis);
    let k = kernels::gram_unchecked(m.kernel(), m.anchors(), m.anchors());
    let a = m.reg_strength() * s.len() as f64;
    let mut total = 0.0;
    for j in 0..agg.n_models() {
        let c = m.coefficients().column(j).into_owned();
        let kc = &k * &c;
        total += column_objective(&kc, m.offsets()[j], &c, &y.column(j).into_owned(), a);
    }
    Ok(total)
}

fn column_objective(kc: &Vector, offset: f64, c: &Vector, y: &Vector, a: f64) -> f64 {
    let mut f = 0.0;
    for i in 0..y.len() {
        let r = (offset + kc[i]).exp() - y[i];
        f += r * r;
    }
    f + a * c.dot(kc)
}

/// Fits the covariance objective by damped Gauss-Newton, starting from the
/// sharp-loss solution. Each model's log-variance is fitted independently.
pub fn fit_meva_gn(
    s: &ErrorSamples,
    kernel: &KernelSpec,
    reg: f64,
    iters: usize,
    basis: Option<&Matrix>,
) -> Result<MevaAggregator> {
    if iters == 0 {
        return Err(invalid("iters must be at least one"));
    }
    let init = fit_meva_sharp(s, kernel, reg, basis)?;
    gauss_newton_from(init, s, iters)
}

/// Gauss-Newton refinement of the covariance objective from `init`, whose
/// anchors must be the inputs of `s`.
pub fn gauss_newton_from(init: MevaAggregator, s: &ErrorSamples, iters: usize) -> Result<MevaAggregator> {
    let m = init.log_var_model();
    if m.anchors().len() != s.len() {
        return Err(invalid("aggregator anchors do not match the samples"));
    }
    let basis = if init.identity_basis { None } else { Some(init.basis.clone()) };
    let y = squared_errors(s, basis.as_ref());
    let n = s.len();
    let k = kernels::gram_unchecked(m.kernel(), m.anchors(), m.anchors());
    let a = m.reg_strength() * n as f64;
    let mut coefs = m.coefficients().clone();
    let mut offsets = m.offsets().to_vec();
    for j in 0..init.n_models() {
        let yj = y.column(j).into_owned();
        let mut c = coefs.column(j).into_owned();
        let (mj, cj) = gn_column(&k, &yj, a, offsets[j], &mut c, iters)?;
        offsets[j] = mj;
        coefs.set_column(j, &cj);
    }
    let model = KrrModel::from_parts(m.anchors().to_vec(), coefs, offsets, *m.kernel(), m.reg_strength())?;
    Ok(MevaAggregator::new(model, basis.as_ref(), LossKind::Covariance))
}

// One model's Gauss-Newton loop over (offset, c).
fn gn_column(k: &Matrix, y: &Vector, a: f64, offset: f64, c: &mut Vector, iters: usize) -> Result<(f64, Vector)> {
    let n = y.len();
    let mut m = offset;
    let mut kc = k * &*c;
    let mut f = column_objective(&kc, m, c, y, a);
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    for _ in 0..iters {
        // Jacobian of the residuals: diag(w) [1 | K].
        let w: Vec<f64> = (0..n).map(|i| (m + kc[i]).exp()).collect();
        let r: Vec<f64> = (0..n).map(|i| w[i] - y[i]).collect();
        let mut jac = Matrix::zeros(n, n + 1);
        for i in 0..n {
            jac[(i, 0)] = w[i];
            for l in 0..n {
                jac[(i, l + 1)] = w[i] * k[(i, l)];
            }
        }
        let mut h = jac.transpose() * &jac;
        let damp = (1e-10 * h.trace() / (n + 1) as f64).max(f64::MIN_POSITIVE);
        let mut g = jac.transpose() * Vector::from_vec(r);
        for p in 0..n {
            for q in 0..n {
                h[(p + 1, q + 1)] += a * k[(p, q)];
            }
            g[p + 1] += a * kc[p];
        }
        for p in 0..=n {
            h[(p, p)] += damp;
        }
        let step = match linalg::cholesky_with_retry(&h) {
            Some(ch) => ch.solve(&(-&g)),
            None => h.clone().lu().solve(&(-&g)).ok_or_else(|| Error::FitFailed("singular Gauss-Newton system".into()))?,
        };
        let predicted = -g.dot(&step);
        if !(predicted.is_finite()) {
            return Err(Error::FitFailed("non-finite Gauss-Newton step".into()));
        }
        if predicted <= 1e-14 * (f + scale) {
            break;
        }
        let dc = step.rows(1, n).into_owned();
        let dkc = k * &dc;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let m_new = m + t * step[0];
            let c_new = &*c + t * &dc;
            let kc_new = &kc + t * &dkc;
            let f_new = column_objective(&kc_new, m_new, &c_new, y, a);
            if f_new <= f {
                m = m_new;
                *c = c_new;
                kc = kc_new;
                f = f_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // A step that cannot reduce the objective at the rounding level is convergence.
            if predicted <= 1e-8 * (f + scale) {
                break;
            }
            return Err(Error::NoDescent { halvings: MAX_HALVINGS });
        }
    }
    Ok((m, c.clone()))
}

/// Minimal empirical error aggregation with the stored model values.
pub fn fit_meea(s: &ErrorSamples, kernel: &KernelSpec, reg: f64) -> Result<MeeaPredictor> {
    check_common(s, reg)?;
    let mv: Vec<Vec<f64>> = (0..s.len()).map(|i| s.model_row(i)).collect();
    kernels::meea_closed_form(&s.inputs, &s.targets, &mv, kernel, reg)
}

// Logits at the samples, `K C` with `C` of shape N x n.
fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut u = logits.clone();
    for mut row in u.row_iter_mut() {
        let mx = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - mx).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    u
}

/// Empirical aggregate variance `sum_i u_i^T Diag(e_i^2) u_i + reg |C|^2`
/// with `u_i = softmax(K C)_i`.
fn direct_objective(k: &Matrix, c: &Matrix, e2: &Matrix, reg: f64) -> (f64, Matrix) {
    let u = softmax_rows(&(k * c));
    let mut f = 0.0;
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            f += u[(i, j)] * u[(i, j)] * e2[(i, j)];
        }
    }
    (f + reg * c.norm_squared(), u)
}

/// Direct variance loss with softmax weights and kernel logits, minimized by
/// gradient descent with backtracking. `lr` is the initial step.
pub fn fit_direct_mva(s: &ErrorSamples, kernel: &KernelSpec, reg: f64, steps: usize, lr: f64) -> Result<MevaAggregator> {
    check_common(s, reg)?;
    if !(lr > 0.0) {
        return Err(invalid("lr must be positive"));
    }
    let n = s.len();
    let nm = s.n_models();
    let k = kernels::gram_unchecked(kernel, &s.inputs, &s.inputs);
    let e2 = s.errors.map(|e| e * e);
    let mut c = Matrix::zeros(n, nm);
    if nm > 1 {
        let (mut f, mut u) = direct_objective(&k, &c, &e2, reg);
        let mut t = lr;
        for _ in 0..steps {
            // d q_i / d l_ik = 2 u_ik (u_ik a_ik - q_i)
            let mut gl = Matrix::zeros(n, nm);
            for i in 0..n {
                let q: f64 = (0..nm).map(|j| u[(i, j)] * u[(i, j)] * e2[(i, j)]).sum();
                for j in 0..nm {
                    gl[(i, j)] = 2.0 * u[(i, j)] * (u[(i, j)] * e2[(i, j)] - q);
                }
            }
            let grad = &k * gl + 2.0 * reg * &c;
            let gn2 = grad.norm_squared();
            if !(gn2 > 1e-28 * (1.0 + f * f)) {
                break;
            }
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                let c_new = &c - t * &grad;
                let (f_new, u_new) = direct_objective(&k, &c_new, &e2, reg);
                if f_new <= f - 1e-4 * t * gn2 {
                    c = c_new;
                    f = f_new;
                    u = u_new;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                if t * gn2 <= 1e-14 * (1.0 + f) {
                    break;
                }
                return Err(Error::NoDescent { halvings: MAX_HALVINGS });
            }
            t *= 2.0;
        }
    }
    // Weights are softmax(l) = softmax(-lambda), so lambda = -l.
    let lam = -c;
    let model = KrrModel::from_parts(s.inputs.clone(), lam, alloc::vec![0.0; nm], *kernel, reg)?;
    Ok(MevaAggregator::new(model, None, LossKind::Direct))
}

/// Objective value of the direct variance loss for a fitted direct aggregator.
pub fn direct_mva_objective(agg: &MevaAggregator, s: &ErrorSamples) -> Result<f64> {
    let m = agg.log_var_model();
    if m.anchors().len() != s.len() {
        return Err(invalid("aggregator anchors do not match the samples"));
    }
    let k = kernels::gram_unchecked(m.kernel(), m.anchors(), m.anchors());
    let c = -m.coefficients().clone();
    Ok(direct_objective(&k, &c, &s.errors.map(|e| e * e), m.reg_strength()).0)
}

/// Convex-combination empirical error aggregate `softmax(nu(x))^T M(x)`.
#[derive(Debug, Clone)]
pub struct SoftmaxMeea {
    logits: KrrModel,
}

impl SoftmaxMeea {
    pub fn weights(&self, x: &[f64]) -> Result<WeightVector> {
        let nu = self.logits.predict(x)?;
        let neg: Vec<f64> = nu.iter().map(|v| -v).collect();
        agg::softmax_weights(&neg)
    }

    pub fn predict(&self, x: &[f64], model_values: &[f64]) -> Result<f64> {
        agg::aggregate_pointwise(&self.weights(x)?, model_values)
    }
}

fn softmax_meea_objective(k: &Matrix, c: &Matrix, s: &ErrorSamples, a: f64) -> (f64, Matrix, Vec<f64>) {
    let u = softmax_rows(&(k * c));
    let mut f = 0.0;
    let mut r = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        let pred: f64 = (0..s.n_models()).map(|j| u[(i, j)] * s.model_values[(i, j)]).sum();
        let ri = s.targets[i] - pred;
        r.push(ri);
        f += ri * ri;
    }
    let mut pen = 0.0;
    for j in 0..c.ncols() {
        let cj = c.column(j);
        pen += cj.dot(&(k * cj));
    }
    (f + a * pen, u, r)
}

/// Fits `sum_i (Y_i - softmax(nu(x_i))^T M(x_i))^2 + reg N sum_k |nu_k|_H^2`
/// over kernel expansions `nu_k` by damped Gauss-Newton.
pub fn fit_meea_softmax(s: &ErrorSamples, kernel: &KernelSpec, reg: f64, iters: usize) -> Result<SoftmaxMeea> {
    check_common(s, reg)?;
    let n = s.len();
    let nm = s.n_models();
    let k = kernels::gram_unchecked(kernel, &s.inputs, &s.inputs);
    let a = reg * n as f64;
    let mut c = Matrix::zeros(n, nm);
    let (mut f, mut u, mut r) = softmax_meea_objective(&k, &c, s, a);
    let p = n * nm;
    for _ in 0..iters {
        // Jacobian of residuals with respect to the coefficients, column block j
        // for model j: -u_ij (M_ij - mbar_i) K_i.
        let mut jac = Matrix::zeros(n, p);
        for i in 0..n {
            let mbar: f64 = (0..nm).map(|j| u[(i, j)] * s.model_values[(i, j)]).sum();
            for j in 0..nm {
                let d = -u[(i, j)] * (s.model_values[(i, j)] - mbar);
                if d == 0.0 {
                    continue;
                }
                for l in 0..n {
                    jac[(i, j * n + l)] = d * k[(i, l)];
                }
            }
        }
        let mut h = jac.transpose() * &jac;
        let mut g = jac.transpose() * Vector::from_vec(r.clone());
        for j in 0..nm {
            let cj = c.column(j).into_owned();
            let kcj = &k * &cj;
            for q in 0..n {
                g[j * n + q] += a * kcj[q];
                for l in 0..n {
                    h[(j * n + q, j * n + l)] += a * k[(q, l)];
                }
            }
        }
        let damp = (1e-8 * h.trace() / p as f64).max(1e-12);
        for q in 0..p {
            h[(q, q)] += damp;
        }
        let step = linalg::cholesky_with_retry(&h)
            .map(|ch| ch.solve(&(-&g)))
            .ok_or_else(|| Error::FitFailed("singular Gauss-Newton system".to_string()))?;
        let predicted = -g.dot(&step);
        if !(predicted > 1e-14 * (1.0 + f)) {
            break;
        }
        let dc = Matrix::from_fn(n, nm, |l, j| step[j * n + l]);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let c_new = &c + t * &dc;
            let (f_new, u_new, r_new) = softmax_meea_objective(&k, &c_new, s, a);
            if f_new <= f {
                c = c_new;
                f = f_new;
                u = u_new;
                r = r_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if predicted <= 1e-8 * (1.0 + f) {
                break;
            }
            return Err(Error::NoDescent { halvings: MAX_HALVINGS });
        }
    }
    let logits = KrrModel::from_parts(s.inputs.clone(), c, alloc::vec![0.0; nm], *kernel, reg)?;
    Ok(SoftmaxMeea { logits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn samples(inputs: Vec<Vec<f64>>, mv: &[&[f64]], y: Vec<f64>) -> ErrorSamples {
        let n = inputs.len();
        let m = Matrix::from_fn(n, mv.len(), |i, k| mv[k][i]);
        ErrorSamples::new(inputs, m, y).unwrap()
    }

    #[test]
    fn errors_are_model_minus_target() {
        let s = samples(vec![vec![0.0], vec![1.0]], &[&[1.0, 2.0], &[0.0, 5.0]], vec![0.5, 1.0]);
        assert_eq!(s.errors()[(0, 0)], 0.5);
        assert_eq!(s.errors()[(1, 1)], 4.0);
        assert!(ErrorSamples::new(vec![vec![0.0]], Matrix::zeros(1, 1), vec![]).is_err());
    }

    #[test]
    fn zero_error_single_model() {
        let xs: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let y = vec![1.0, 2.0, 3.0, 4.0];
        let s = samples(xs.clone(), &[&y], y.clone());
        let agg = fit_meva_sharp(&s, &KernelSpec::rbf(1.0).unwrap(), 1e-3, None).unwrap();
        for x in &xs {
            let lv = agg.log_vars(x).unwrap();
            assert!((lv[0] - ERROR_FLOOR.ln()).abs() < 1e-9);
            let (w, v) = agg.predict(x, &[7.0]).unwrap();
            assert_eq!(w.as_slice(), &[1.0]);
            assert_eq!(v, 7.0);
        }
    }

    #[test]
    fn tenfold_error_gives_hundredfold_precision() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.2]).collect();
        let e: Vec<f64> = xs.iter().map(|x| 0.1 + (3.0 * x[0]).sin().abs()).collect();
        let y = vec![0.0; 6];
        let m2: Vec<f64> = e.iter().map(|v| 10.0 * v).collect();
        let s = samples(xs.clone(), &[&e, &m2], y);
        let agg = fit_meva_sharp(&s, &KernelSpec::matern32(0.5).unwrap(), 1e-9, None).unwrap();
        for x in &xs {
            let lv = agg.log_vars(x).unwrap();
            assert!((lv[1] - lv[0] - 100f64.ln()).abs() < 1e-5);
            let w = agg.weights(x).unwrap();
            assert!((w.as_slice()[0] - 100.0 / 101.0).abs() < 1e-6);
        }
    }

    #[test]
    fn gn_fixed_point_when_errors_are_one() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.25]).collect();
        let ones = vec![1.0; 5];
        let s = samples(xs.clone(), &[&ones], vec![0.0; 5]);
        let k = KernelSpec::rbf(0.3).unwrap();
        let sharp = fit_meva_sharp(&s, &k, 1e-6, None).unwrap();
        let gn = fit_meva_gn(&s, &k, 1e-6, 5, None).unwrap();
        assert_eq!(sharp.log_var_model().offsets(), gn.log_var_model().offsets());
        assert!(covariance_objective(&gn, &s).unwrap() < 1e-24);
    }

    #[test]
    fn gn_constant_hypothesis_finds_mean_square() {
        // A huge penalty leaves only the unpenalized constant free.
        let xs = vec![vec![0.0], vec![1.0], vec![2.0]];
        let s = samples(xs, &[&[1.0, 2.0, 3.0]], vec![0.0; 3]);
        let agg = fit_meva_gn(&s, &KernelSpec::rbf(1.0).unwrap(), 1e12, 100, None).unwrap();
        let lv = agg.log_vars(&[1.0]).unwrap()[0];
        assert!((lv.exp() - 14.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn direct_mva_single_sample() {
        let s = samples(vec![vec![0.0]], &[&[1.0], &[2.0]], vec![0.0]);
        let agg = fit_direct_mva(&s, &KernelSpec::rbf(1.0).unwrap(), 0.0, 2000, 1.0).unwrap();
        let w = agg.weights(&[0.0]).unwrap();
        assert!((w.as_slice()[0] - 0.8).abs() < 1e-4);
        assert!((direct_mva_objective(&agg, &s).unwrap() - 0.8).abs() < 1e-6);
        let one = samples(vec![vec![0.0]], &[&[3.0]], vec![0.0]);
        let agg = fit_direct_mva(&one, &KernelSpec::rbf(1.0).unwrap(), 0.0, 10, 1.0).unwrap();
        assert_eq!(agg.weights(&[0.3]).unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn rotated_basis_sharp_fit_sums_to_one() {
        let c = core::f64::consts::FRAC_1_SQRT_2;
        let p = Matrix::from_row_slice(2, 2, &[c, -c, c, c]);
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let m1: Vec<f64> = xs.iter().map(|x| x[0] + 0.1).collect();
        let m2: Vec<f64> = xs.iter().map(|x| -0.5 * x[0]).collect();
        let s = samples(xs, &[&m1, &m2], vec![0.0; 8]);
        let agg = fit_meva_sharp(&s, &KernelSpec::rbf(0.3).unwrap(), 1e-3, Some(&p)).unwrap();
        let w = agg.weights(&[0.4]).unwrap();
        assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_meea_fits_training_data() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0]).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 * (3.0 * x[0]).sin()).collect();
        let s = samples(xs.clone(), &[&vec![3.0; 10], &vec![-3.0; 10]], y.clone());
        let m = fit_meea_softmax(&s, &KernelSpec::rbf(0.3).unwrap(), 1e-8, 50).unwrap();
        let mse: f64 = xs.iter().zip(&y).map(|(x, t)| (m.predict(x, &[3.0, -3.0]).unwrap() - t).powi(2)).sum::<f64>() / 10.0;
        assert!(mse < 1e-3, "mse {mse}");
    }
}
