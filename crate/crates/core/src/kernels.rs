//! Scalar kernels, Gram matrices, kernel ridge regression and the
//! transformed-kernel closed form for minimal empirical error aggregation.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Kernel values below this are flushed to zero.
pub const KERNEL_FLUSH: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `(1 + sqrt(3) r / rho) exp(-sqrt(3) r / rho)`
    Matern32,
    /// `exp(-r^2 / (2 rho^2))`
    Rbf,
    /// `exp(-2 sin^2(pi |x - y|) / l^2)`, scalar inputs, period one.
    ExpSin2,
}

/// A positive-definite kernel on `R^d`.
pub trait Kernel {
    /// Evaluates the kernel. Callers guarantee equal lengths.
    fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64;

    /// Evaluates the kernel after checking dimensions.
    fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(invalid("kernel arguments differ in dimension"));
        }
        Ok(self.eval_unchecked(u, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    lengthscale: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0) || !lengthscale.is_finite() {
            return Err(invalid("lengthscale must be positive and finite"));
        }
        Ok(KernelSpec { family, lengthscale })
    }

    pub fn matern32(lengthscale: f64) -> Result<Self> {
        Self::new(KernelFamily::Matern32, lengthscale)
    }

    pub fn rbf(lengthscale: f64) -> Result<Self> {
        Self::new(KernelFamily::Rbf, lengthscale)
    }

    pub fn expsin2(lengthscale: f64) -> Result<Self> {
        Self::new(KernelFamily::ExpSin2, lengthscale)
    }

    /// Builds a spec whose lengthscale is the median pairwise distance of `xs`.
    pub fn with_median_lengthscale(family: KernelFamily, xs: &[Vec<f64>]) -> Result<Self> {
        Self::new(family, median_pairwise_distance(xs)?)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }
}

fn flush(v: f64) -> f64 {
    if v < KERNEL_FLUSH {
        0.0
    } else {
        v
    }
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl Kernel for KernelSpec {
    fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        let rho = self.lengthscale;
        match self.family {
            KernelFamily::Matern32 => {
                let z = 3.0f64.sqrt() * sq_dist(u, v).sqrt() / rho;
                flush((1.0 + z) * (-z).exp())
            }
            KernelFamily::Rbf => flush((-sq_dist(u, v) / (2.0 * rho * rho)).exp()),
            KernelFamily::ExpSin2 => {
                let s = (PI * (u[0] - v[0])).sin();
                flush((-2.0 * s * s / (rho * rho)).exp())
            }
        }
    }

    fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(invalid("kernel arguments differ in dimension"));
        }
        if self.family == KernelFamily::ExpSin2 && u.len() != 1 {
            return Err(invalid("expsin2 accepts scalar inputs only"));
        }
        Ok(self.eval_unchecked(u, v))
    }
}

/// `offset + u . v`. Its feature space is the affine functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearKernel {
    pub offset: f64,
}

impl Default for LinearKernel {
    fn default() -> Self {
        LinearKernel { offset: 1.0 }
    }
}

impl Kernel for LinearKernel {
    fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        self.offset + u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Convenience wrapper mirroring the free-function form.
pub fn kernel_eval(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    spec.eval(u, v)
}

fn check_dims(xs: &[Vec<f64>], d: Option<usize>) -> Result<Option<usize>> {
    let mut dim = d;
    for x in xs {
        match dim {
            None => dim = Some(x.len()),
            Some(k) if k != x.len() => return Err(invalid("inconsistent feature dimensions")),
            _ => {}
        }
    }
    Ok(dim)
}

/// Gram matrix with entry `(i, j) = k(xs[i], ys[j])`.
pub fn gram<K: Kernel + ?Sized>(kernel: &K, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Matrix> {
    let d = check_dims(xs, None)?;
    check_dims(ys, d)?;
    if let Some(x) = xs.first() {
        if let Some(y) = ys.first() {
            kernel.eval(x, y)?;
        }
    }
    Ok(gram_unchecked(kernel, xs, ys))
}

pub(crate) fn gram_unchecked<K: Kernel + ?Sized>(kernel: &K, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(xs.len(), ys.len(), |i, j| kernel.eval_unchecked(&xs[i], &ys[j]))
}

fn symmetric_gram<K: Kernel + ?Sized>(kernel: &K, xs: &[Vec<f64>]) -> Matrix {
    let n = xs.len();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval_unchecked(&xs[i], &xs[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

// Pairs are drawn from at most this many points, taken at a fixed stride.
const MEDIAN_POINTS: usize = 1000;

/// Median of the pairwise Euclidean distances between distinct points of `xs`.
///
/// Large inputs are thinned to a deterministic evenly strided subset first.
/// Falls back to 1 when every distance is zero.
pub fn median_pairwise_distance(xs: &[Vec<f64>]) -> Result<f64> {
    check_dims(xs, None)?;
    if xs.len() < 2 {
        return Ok(1.0);
    }
    let stride = xs.len().div_ceil(MEDIAN_POINTS).max(1);
    let pts: Vec<&Vec<f64>> = xs.iter().step_by(stride).collect();
    let mut d = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            d.push(sq_dist(pts[i], pts[j]).sqrt());
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    let m = d.len();
    let med = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    Ok(if med > 0.0 && med.is_finite() { med } else { 1.0 })
}

/// Kernel ridge regressor `x -> k(x, anchors) C + offsets`.
#[derive(Debug, Clone)]
pub struct KrrModel<K = KernelSpec> {
    anchors: Vec<Vec<f64>>,
    coefficients: Matrix,
    offsets: Vec<f64>,
    kernel: K,
    reg_strength: f64,
}

impl<K: Kernel + Clone> KrrModel<K> {
    /// Assembles a model from parts. `coefficients` has one row per anchor.
    pub fn from_parts(
        anchors: Vec<Vec<f64>>,
        coefficients: Matrix,
        offsets: Vec<f64>,
        kernel: K,
        reg_strength: f64,
    ) -> Result<Self> {
        if coefficients.nrows() != anchors.len() {
            return Err(invalid("coefficient rows must match anchor count"));
        }
        if offsets.len() != coefficients.ncols() {
            return Err(invalid("offset count must match output count"));
        }
        if !(reg_strength >= 0.0) {
            return Err(invalid("reg_strength must be nonnegative"));
        }
        check_dims(&anchors, None)?;
        Ok(KrrModel { anchors, coefficients, offsets, kernel, reg_strength })
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn coefficients(&self) -> &Matrix {
        &self.coefficients
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn reg_strength(&self) -> f64 {
        self.reg_strength
    }

    pub fn n_outputs(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.anchors.first().map(|a| a.len())
    }

    /// `k(x, anchors) C + offsets`.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(d) = self.input_dim() {
            if d != x.len() {
                return Err(invalid("input dimension does not match anchors"));
            }
        }
        let mut out = self.offsets.clone();
        for (j, a) in self.anchors.iter().enumerate() {
            let kv = self.kernel.eval_unchecked(x, a);
            if kv == 0.0 {
                continue;
            }
            for (o, c) in out.iter_mut().zip(self.coefficients.row(j).iter()) {
                *o += kv * c;
            }
        }
        Ok(out)
    }
}

/// Solves `(k(X, X) + reg N I) C = Y` for the representer coefficients.
pub fn krr_fit<K: Kernel + Clone>(xs: &[Vec<f64>], ys: &Matrix, kernel: &K, reg: f64) -> Result<KrrModel<K>> {
    fit_inner(xs, ys, kernel, reg, false)
}

/// As [`krr_fit`] after subtracting the per-output mean of `ys`, which is
/// stored as an unpenalized offset. Far from the anchors the prediction
/// reverts to that mean instead of zero.
pub fn krr_fit_centered<K: Kernel + Clone>(xs: &[Vec<f64>], ys: &Matrix, kernel: &K, reg: f64) -> Result<KrrModel<K>> {
    fit_inner(xs, ys, kernel, reg, true)
}

fn fit_inner<K: Kernel + Clone>(xs: &[Vec<f64>], ys: &Matrix, kernel: &K, reg: f64, center: bool) -> Result<KrrModel<K>> {
    let n = xs.len();
    if n == 0 {
        return Err(invalid("krr_fit needs at least one sample"));
    }
    if ys.nrows() != n {
        return Err(invalid("target rows must match sample count"));
    }
    if !(reg >= 0.0) {
        return Err(invalid("reg must be nonnegative"));
    }
    if ys.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite regression target"));
    }
    check_dims(xs, None)?;
    let offsets: Vec<f64> = if center {
        (0..ys.ncols()).map(|k| ys.column(k).mean()).collect()
    } else {
        alloc::vec![0.0; ys.ncols()]
    };
    let mut rhs = ys.clone();
    for (k, o) in offsets.iter().enumerate() {
        for v in rhs.column_mut(k).iter_mut() {
            *v -= o;
        }
    }
    let mut g = symmetric_gram(kernel, xs);
    let shift = reg * n as f64;
    for i in 0..n {
        g[(i, i)] += shift;
    }
    let chol = linalg::cholesky_with_retry(&g)
        .ok_or_else(|| Error::FitFailed("kernel system is not positive definite".into()))?;
    let coefficients = chol.solve(&rhs);
    if coefficients.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite kernel coefficients".into()));
    }
    Ok(KrrModel { anchors: xs.to_vec(), coefficients, offsets, kernel: kernel.clone(), reg_strength: reg })
}

/// Prediction of a fitted model at `x`.
pub fn krr_predict<K: Kernel + Clone>(m: &KrrModel<K>, x: &[f64]) -> Result<Vec<f64>> {
    m.predict(x)
}

/// Minimal empirical error aggregate in closed form.
///
/// With a diagonal matrix-valued kernel `k(x, y) I_n` the weight functions are
/// `alpha(x) = sum_j k(x, x_j) M(x_j) c_j` where `c` solves
/// `(k~(X, X) + reg N I) c = Y` and `k~(x, y) = k(x, y) M(x)^T M(y)`.
#[derive(Debug, Clone)]
pub struct MeeaPredictor<K = KernelSpec> {
    inputs: Vec<Vec<f64>>,
    model_values: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    kernel: K,
}

impl<K: Kernel + Clone> MeeaPredictor<K> {
    /// Weight vector `alpha(x)`; not constrained to sum to one.
    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(first) = self.inputs.first() {
            if first.len() != x.len() {
                return Err(invalid("input dimension does not match training inputs"));
            }
        }
        let n = self.model_values.first().map_or(0, |m| m.len());
        let mut w = alloc::vec![0.0; n];
        for ((xj, mj), cj) in self.inputs.iter().zip(&self.model_values).zip(&self.coefficients) {
            let s = self.kernel.eval_unchecked(x, xj) * cj;
            if s == 0.0 {
                continue;
            }
            for (wk, mk) in w.iter_mut().zip(mj) {
                *wk += s * mk;
            }
        }
        Ok(w)
    }

    /// `alpha(x)^T M(x)`.
    pub fn predict(&self, x: &[f64], model_values: &[f64]) -> Result<f64> {
        let w = self.weights(x)?;
        if w.len() != model_values.len() {
            return Err(invalid("model-value length does not match the bank"));
        }
        Ok(w.iter().zip(model_values).map(|(a, b)| a * b).sum())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

pub fn meea_closed_form<K: Kernel + Clone>(
    xs: &[Vec<f64>],
    ys: &[f64],
    model_values: &[Vec<f64>],
    kernel: &K,
    reg: f64,
) -> Result<MeeaPredictor<K>> {
    let n = xs.len();
    if n == 0 {
        return Err(invalid("meea needs at least one sample"));
    }
    if ys.len() != n || model_values.len() != n {
        return Err(invalid("inputs, targets and model values differ in length"));
    }
    if !(reg >= 0.0) {
        return Err(invalid("reg must be nonnegative"));
    }
    check_dims(xs, None)?;
    check_dims(model_values, None)?;
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mm: f64 = model_values[i].iter().zip(&model_values[j]).map(|(a, b)| a * b).sum();
            let v = kernel.eval_unchecked(&xs[i], &xs[j]) * mm;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g[(i, i)] += reg * n as f64;
    }
    let chol = linalg::cholesky_with_retry(&g)
        .ok_or_else(|| Error::FitFailed("transformed kernel system is singular".into()))?;
    let c = chol.solve(&Vector::from_column_slice(ys));
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite coefficients".into()));
    }
    Ok(MeeaPredictor {
        inputs: xs.to_vec(),
        model_values: model_values.to_vec(),
        coefficients: c.iter().copied().collect(),
        kernel: kernel.clone(),
    })
}
