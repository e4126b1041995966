//! Monte-Carlo laboratory for a single input point: the exact minimal-error
//! and minimal-variance weights of a Gaussian model bank, their empirical
//! estimators and the decay of their excess losses; plus known-correlation
//! aggregation of Gaussian-process PDE solutions.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::agg::{self, SecondMoments};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::pde::{GpCollocation, GridFunction};
use crate::rng;

/// Jointly Gaussian `(Y, M)` with `M = Y 1 + eps Z`, `E[Z Z^T] = A`
/// (`|A|_F = 1`), `E[Y Z] = b` and `E[Y^2] = var_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremCase {
    a: Matrix,
    b: Vector,
    var_y: f64,
    eps: f64,
}

impl TheoremCase {
    pub fn new(a: Matrix, b: Vector, var_y: f64, eps: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::EmptyBank);
        }
        if a.ncols() != n || b.len() != n {
            return Err(invalid("A must be square and match b"));
        }
        if !(var_y > 0.0) || !(eps > 0.0) {
            return Err(invalid("var_y and eps must be positive"));
        }
        if (a.norm() - 1.0).abs() > 1e-10 {
            return Err(invalid("A must have unit Frobenius norm"));
        }
        if linalg::asymmetry(&a) > 1e-12 {
            return Err(invalid("A must be symmetric"));
        }
        let w = &a - &b * b.transpose() / var_y;
        let ev = w.symmetric_eigen().eigenvalues;
        if ev.iter().any(|v| *v < -1e-12) {
            return Err(invalid("joint covariance of (Y, Z) is not positive semidefinite"));
        }
        if a.clone().cholesky().is_none() {
            return Err(Error::SingularCovariance);
        }
        Ok(TheoremCase { a, b, var_y, eps })
    }

    /// Random valid case: `A = G G^T + 0.1 I`, Frobenius-normalized, and
    /// `b = rho sqrt(var_y) A^{1/2} w / |w|` with `w` standard normal, so that
    /// `A - b b^T / var_y` stays positive semidefinite for `rho <= 1`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, var_y: f64, eps: f64, rho: f64) -> Result<Self> {
        let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut a = &g * g.transpose() + Matrix::identity(n, n) * 0.1;
        a = (&a + a.transpose()) * 0.5;
        let a = &a / a.norm();
        let w = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = &w / w.norm();
        let b = sym_sqrt(&a) * w * (rho * var_y.sqrt());
        Self::new(a, b, var_y, eps)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn var_y(&self) -> f64 {
        self.var_y
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// `gamma = E[Y M] = var_y 1 + eps b`.
    pub fn gamma(&self) -> Vector {
        Vector::from_element(self.n(), self.var_y) + &self.b * self.eps
    }

    /// `C = E[M M^T] = eps^2 A + gamma 1^T + eps 1 b^T`.
    pub fn second_moment(&self) -> Matrix {
        let n = self.n();
        let ones = Vector::from_element(n, 1.0);
        &self.a * (self.eps * self.eps) + self.gamma() * ones.transpose() + &ones * self.b.transpose() * self.eps
    }
}

fn sym_sqrt(a: &Matrix) -> Matrix {
    let e = a.clone().symmetric_eigen();
    let d = Matrix::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Exact quantities of a case.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForms {
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub mix_lambda: f64,
    pub alpha_star: Vector,
    pub alpha_v: Vector,
    pub alpha_r: Vector,
    pub loss_star: f64,
    pub loss_v: f64,
}

/// `s = 1^T A^-1 1`, `t = b^T A^-1 1`, `u = b^T A^-1 b`,
/// `v = var_y s + eps t`, the mixing coefficient
/// `lambda = s (var_y - u) / (s (var_y - u) + (eps + t)^2)` and
/// `alpha* = lambda alpha_V + (1 - lambda) alpha_R`.
pub fn closed_forms(case: &TheoremCase) -> Result<ClosedForms> {
    let n = case.n();
    let chol = case.a.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let ones = Vector::from_element(n, 1.0);
    let ai1 = chol.solve(&ones);
    let aib = chol.solve(&case.b);
    let s = ones.dot(&ai1);
    let t = case.b.dot(&ai1);
    let u = case.b.dot(&aib);
    let (ey2, eps) = (case.var_y, case.eps);
    let v = ey2 * s + eps * t;
    let et = eps + t;
    if s == 0.0 || et == 0.0 {
        return Err(Error::DegenerateCase("s or eps + t vanishes".into()));
    }
    let den = s * (ey2 - u) + et * et;
    if !(den.abs() > 0.0) {
        return Err(Error::DegenerateCase("mixing denominator vanishes".into()));
    }
    let mix_lambda = s * (ey2 - u) / den;
    let alpha_v = &ai1 / s;
    let alpha_r = &aib / et;
    let alpha_star = &alpha_v * mix_lambda + &alpha_r * (1.0 - mix_lambda);
    let loss_v = eps * eps / s;
    Ok(ClosedForms { s, t, u, v, mix_lambda, alpha_star, alpha_v, alpha_r, loss_star: mix_lambda * loss_v, loss_v })
}

/// `E[(Y - alpha^T M)^2] = E[Y^2] - 2 alpha^T gamma + alpha^T C alpha`.
pub fn true_loss(alpha: &Vector, case: &TheoremCase) -> f64 {
    let c = case.second_moment();
    case.var_y - 2.0 * alpha.dot(&case.gamma()) + alpha.dot(&(&c * alpha))
}

/// Draws `n_samples` rows `(M_i, Y_i)` using `Z = (b / var_y) Y + W` with
/// `W ~ N(0, A - b b^T / var_y)` independent of `Y`.
pub fn sample_case<R: Rng + ?Sized>(case: &TheoremCase, n_samples: usize, rng: &mut R) -> (Matrix, Vector) {
    let n = case.n();
    let w_cov = &case.a - &case.b * case.b.transpose() / case.var_y;
    let root = sym_sqrt(&w_cov);
    draw(case, &root, n_samples, n, rng)
}

fn draw<R: Rng + ?Sized>(case: &TheoremCase, root: &Matrix, n_samples: usize, n: usize, rng: &mut R) -> (Matrix, Vector) {
    let sd = case.var_y.sqrt();
    let mut m = Matrix::zeros(n_samples, n);
    let mut y = Vector::zeros(n_samples);
    let mut xi = Vector::zeros(n);
    for i in 0..n_samples {
        let yi = sd * rng.sample::<f64, _>(StandardNormal);
        for v in xi.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let w = root * &xi;
        for k in 0..n {
            let z = case.b[k] / case.var_y * yi + w[k];
            m[(i, k)] = yi + case.eps * z;
        }
        y[i] = yi;
    }
    (m, y)
}

/// Empirical estimates from one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub a_hat: Matrix,
    pub b_hat: Vector,
    pub var_y_hat: f64,
    pub alpha_v_hat: Vector,
    pub alpha_e_hat: Vector,
}

/// `A_hat = (M - Y 1^T)^T (M - Y 1^T) / (eps^2 N)`, `b_hat`, `E[Y^2]_hat`,
/// the plug-in minimal-variance weights and the least-squares weights
/// `(M^T M)^-1 M^T Y`.
pub fn empirical_estimators(m: &Matrix, y: &Vector, eps: f64) -> Result<Estimates> {
    let (nsamp, n) = m.shape();
    if y.len() != nsamp {
        return Err(invalid("M and Y differ in sample count"));
    }
    if nsamp <= n {
        return Err(invalid("need more samples than models"));
    }
    let mut e = m.clone();
    for i in 0..nsamp {
        for k in 0..n {
            e[(i, k)] -= y[i];
        }
    }
    let nf = nsamp as f64;
    let a_hat = e.transpose() * &e / (eps * eps * nf);
    let b_hat = e.transpose() * y / (eps * nf);
    let var_y_hat = y.norm_squared() / nf;
    let alpha_v_hat = Vector::from_vec(agg::mva_weights(&a_hat)?.into_inner());
    let mtm = m.transpose() * m;
    let mty = m.transpose() * y;
    let alpha_e_hat = mtm.cholesky().ok_or(Error::SingularCovariance)?.solve(&mty);
    Ok(Estimates { a_hat, b_hat, var_y_hat, alpha_v_hat, alpha_e_hat })
}

// Estimates whose A_hat has a larger condition number are dropped.
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub excess_v_mean: f64,
    pub excess_v_se: f64,
    pub excess_e_mean: f64,
    pub excess_e_se: f64,
    /// Mean of `lambda L(alpha_V_hat)`, which tends to `L(alpha*)`.
    pub scaled_loss_v_mean: f64,
    pub drops: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log excess_v` against `log N`.
    pub slope_v: f64,
    pub slope_e: f64,
    pub forms: ClosedForms,
    /// Set when more than 10% of the trials at some `N` were dropped.
    pub warning: bool,
}

/// Mean excess losses `L(alpha_V_hat) - L(alpha*) / lambda` and
/// `L(alpha_E_hat) - L(alpha*)` over `trials` independent samples per `N`.
/// Trial `j` at the `i`-th sample size uses stream `i * trials + j` of `seed`.
pub fn rate_experiment(case: &TheoremCase, ns: &[usize], trials: usize, seed: u64) -> Result<RateReport> {
    let n = case.n();
    if trials == 0 || ns.is_empty() {
        return Err(invalid("need at least one sample size and one trial"));
    }
    if ns.iter().any(|&k| k <= n) {
        return Err(invalid("every N must exceed the number of models"));
    }
    let forms = closed_forms(case)?;
    let w_cov = &case.a - &case.b * case.b.transpose() / case.var_y;
    let root = sym_sqrt(&w_cov);
    let limit_v = forms.loss_star / forms.mix_lambda;
    let mut rows = Vec::with_capacity(ns.len());
    let mut warning = false;
    for (idx, &nsamp) in ns.iter().enumerate() {
        let mut ev = Vec::with_capacity(trials);
        let mut ee = Vec::with_capacity(trials);
        let mut sv = Vec::with_capacity(trials);
        let mut drops = 0;
        for j in 0..trials {
            let mut r = rng::stream(seed, (idx * trials + j) as u64);
            let (m, y) = draw(case, &root, nsamp, n, &mut r);
            let est = match empirical_estimators(&m, &y, case.eps) {
                Ok(e) => e,
                Err(_) => {
                    drops += 1;
                    continue;
                }
            };
            let sev = est.a_hat.clone().symmetric_eigen().eigenvalues;
            let (lo, hi) = sev.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
            if !(lo > 0.0) || hi / lo > MAX_CONDITION {
                drops += 1;
                continue;
            }
            let lv = true_loss(&est.alpha_v_hat, case);
            ev.push(lv - limit_v);
            sv.push(forms.mix_lambda * lv);
            ee.push(true_loss(&est.alpha_e_hat, case) - forms.loss_star);
        }
        if drops * 10 > trials {
            warning = true;
        }
        let (mv, sev) = mean_se(&ev);
        let (me, see) = mean_se(&ee);
        rows.push(RateRow {
            n: nsamp,
            excess_v_mean: mv,
            excess_v_se: sev,
            excess_e_mean: me,
            excess_e_se: see,
            scaled_loss_v_mean: mean_se(&sv).0,
            drops,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let slope = |f: &dyn Fn(&RateRow) -> f64| {
        let ly: Vec<f64> = rows.iter().map(|r| f(r).max(f64::MIN_POSITIVE).ln()).collect();
        linalg::ols_slope(&lx, &ly)
    };
    let slope_v = slope(&|r| r.excess_v_mean);
    let slope_e = slope(&|r| r.excess_e_mean);
    Ok(RateReport { rows, slope_v, slope_e, forms, warning })
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = linalg::mean(v);
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (m, (var / v.len() as f64).sqrt())
}

/// Output of [`nested_kriging_mea`].
#[derive(Debug, Clone, PartialEq)]
pub struct NestedKriging {
    pub aggregate: GridFunction,
    pub models: Vec<GridFunction>,
    /// Grid points where the correlation matrix was singular and the uniform
    /// average was used instead.
    pub fallbacks: usize,
}

/// Combines collocation solutions of `-Δu = f`, `u = g` on the boundary by the
/// minimal-error weights computed from their exact prior correlations
/// `E[u_k(x) u_l(x)] = w_k(x)^T K(φ_k, φ_l) w_l(x)` with
/// `w_k(x) = K(φ_k, φ_k)^-1 K(φ_k, x)`, on an `nx x ny` grid over `domain`.
pub fn nested_kriging_mea(
    colloc_sets: &[GpCollocation],
    f: impl Fn([f64; 2]) -> f64,
    g: impl Fn([f64; 2]) -> f64,
    nx: usize,
    ny: usize,
    domain: [f64; 4],
) -> Result<NestedKriging> {
    let nm = colloc_sets.len();
    if nm < 2 {
        return Err(invalid("need at least two models"));
    }
    let mut factors = Vec::with_capacity(nm);
    let mut coefs = Vec::with_capacity(nm);
    for c in colloc_sets {
        let ch = c.factor().ok_or(Error::SingularCovariance)?;
        let data = Vector::from_iterator(
            c.n_obs(),
            c.interior.iter().map(|p| f(*p)).chain(c.boundary.iter().map(|p| g(*p))),
        );
        coefs.push(ch.solve(&data));
        factors.push(ch);
    }
    let cross: Vec<Vec<Matrix>> = (0..nm)
        .map(|k| (0..nm).map(|l| colloc_sets[k].cross(&colloc_sets[l])).collect())
        .collect();
    let template = GridFunction::with_domain(nx, ny, alloc::vec![0.0; nx * ny], domain, crate::pde::Layout::Nodal)?;
    let mut models: Vec<GridFunction> = (0..nm).map(|_| template.clone()).collect();
    let mut aggregate = template.clone();
    let mut fallbacks = 0;
    for iy in 0..ny {
        for ix in 0..nx {
            let x = [template.x(ix), template.y(iy)];
            let kx: Vec<Vector> = colloc_sets.iter().map(|c| c.against_point(x)).collect();
            let w: Vec<Vector> = (0..nm).map(|k| factors[k].solve(&kx[k])).collect();
            let vals: Vec<f64> = (0..nm).map(|k| kx[k].dot(&coefs[k])).collect();
            let mut c = Matrix::zeros(nm, nm);
            for k in 0..nm {
                for l in 0..=k {
                    let v = w[k].dot(&(&cross[k][l] * &w[l]));
                    c[(k, l)] = v;
                    c[(l, k)] = v;
                }
            }
            let gamma = Vector::from_iterator(nm, (0..nm).map(|k| c[(k, k)]));
            let weights = SecondMoments::new(c, gamma).and_then(|m| agg::mea_weights(&m));
            let value = match weights {
                Ok(a) if a.iter().all(|v| v.is_finite()) => a.iter().zip(&vals).map(|(p, q)| p * q).sum(),
                _ => {
                    fallbacks += 1;
                    linalg::mean(&vals)
                }
            };
            aggregate.set(ix, iy, value);
            for k in 0..nm {
                models[k].set(ix, iy, vals[k]);
            }
        }
    }
    Ok(NestedKriging { aggregate, models, fallbacks })
}

/// Configuration of the nested-kriging benchmark on `[-1, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedKrigingConfig {
    pub n_models: usize,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub lengthscale: f64,
    pub grid: usize,
    pub seed: u64,
}

impl Default for NestedKrigingConfig {
    fn default() -> Self {
        NestedKrigingConfig { n_models: 10, n_interior: 20, n_boundary: 12, lengthscale: 0.5, grid: 41, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedKrigingReport {
    pub truth: GridFunction,
    pub result: NestedKriging,
    pub uniform: GridFunction,
    pub model_mse: Vec<f64>,
    pub uniform_mse: f64,
    pub aggregate_mse: f64,
}

/// Manufactured solution `cos(pi x / 2) cos(pi y / 2) + 0.3 sin(pi x) sin(pi y)`,
/// which vanishes on the boundary of `[-1, 1]^2`.
pub fn nested_kriging_truth(p: [f64; 2]) -> f64 {
    use core::f64::consts::PI;
    (0.5 * PI * p[0]).cos() * (0.5 * PI * p[1]).cos() + 0.3 * (PI * p[0]).sin() * (PI * p[1]).sin()
}

/// `-Δ` of [`nested_kriging_truth`].
pub fn nested_kriging_source(p: [f64; 2]) -> f64 {
    use core::f64::consts::PI;
    0.5 * PI * PI * (0.5 * PI * p[0]).cos() * (0.5 * PI * p[1]).cos()
        + 0.6 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin()
}

/// Draws `n_models` collocation sets (uniform interior points, uniform points
/// on the perimeter), aggregates their solutions and scores everything
/// against the manufactured solution.
pub fn nested_kriging_experiment(cfg: &NestedKrigingConfig) -> Result<NestedKrigingReport> {
    let domain = [-1.0, 1.0, -1.0, 1.0];
    let mut r = rng::seeded(cfg.seed);
    let sets: Vec<GpCollocation> = (0..cfg.n_models)
        .map(|_| {
            let interior = (0..cfg.n_interior).map(|_| [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
            let boundary = (0..cfg.n_boundary)
                .map(|_| {
                    let t: f64 = r.random_range(0.0..8.0);
                    let side = t.floor() as u32 / 2;
                    let s = t - 2.0 * side as f64 - 1.0;
                    match side {
                        0 => [s, -1.0],
                        1 => [1.0, s],
                        2 => [-s, 1.0],
                        _ => [-1.0, -s],
                    }
                })
                .collect();
            GpCollocation { interior, boundary, lengthscale: cfg.lengthscale }
        })
        .collect();
    let res = nested_kriging_mea(&sets, nested_kriging_source, |_| 0.0, cfg.grid, cfg.grid, domain)?;
    let truth = GridFunction::with_domain(cfg.grid, cfg.grid, alloc::vec![0.0; cfg.grid * cfg.grid], domain, crate::pde::Layout::Nodal)?;
    let mut truth = truth;
    for iy in 0..cfg.grid {
        for ix in 0..cfg.grid {
            let v = nested_kriging_truth([truth.x(ix), truth.y(iy)]);
            truth.set(ix, iy, v);
        }
    }
    let mut uniform = truth.clone();
    for i in 0..uniform.len() {
        let m = res.models.iter().map(|g| g.values()[i]).sum::<f64>() / res.models.len() as f64;
        uniform.values_mut()[i] = m;
    }
    let model_mse = res.models.iter().map(|g| crate::pde::mse(g, &truth)).collect::<Result<Vec<_>>>()?;
    let uniform_mse = crate::pde::mse(&uniform, &truth)?;
    let aggregate_mse = crate::pde::mse(&res.aggregate, &truth)?;
    Ok(NestedKrigingReport { truth, result: res, uniform, model_mse, uniform_mse, aggregate_mse })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_identity() -> TheoremCase {
        let a = Matrix::identity(2, 2) / 2f64.sqrt();
        TheoremCase::new(a, Vector::zeros(2), 1.0, 0.1).unwrap()
    }

    #[test]
    fn b_zero_collapse() {
        let c = half_identity();
        let f = closed_forms(&c).unwrap();
        assert!((f.s - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(f.t, 0.0);
        assert_eq!(f.u, 0.0);
        assert!(f.alpha_r.iter().all(|v| *v == 0.0));
        assert!((f.alpha_v[0] - 0.5).abs() < 1e-15 && (f.alpha_v[1] - 0.5).abs() < 1e-15);
        let lam = 2.0 * 2f64.sqrt() / (2.0 * 2f64.sqrt() + 0.01);
        assert!((f.mix_lambda - lam).abs() < 1e-14);
        assert!((&f.alpha_star - &f.alpha_v * lam).norm() < 1e-15);
    }

    #[test]
    fn losses_at_special_points() {
        let mut r = rng::seeded(8);
        let c = TheoremCase::random(&mut r, 3, 1.3, 0.2, 0.6).unwrap();
        let f = closed_forms(&c).unwrap();
        assert!((true_loss(&f.alpha_star, &c) - f.loss_star).abs() < 1e-12);
        assert!((true_loss(&f.alpha_v, &c) - f.loss_v).abs() < 1e-12);
        assert_eq!(true_loss(&Vector::zeros(3), &c), 1.3);
        let direct = c.second_moment().cholesky().unwrap().solve(&c.gamma());
        assert!((direct - &f.alpha_star).norm() < 1e-8);
    }

    #[test]
    fn invalid_cases_are_rejected() {
        let a = Matrix::identity(2, 2) / 2f64.sqrt();
        // b b^T / var_y exceeds A along b.
        assert!(TheoremCase::new(a.clone(), Vector::from_vec(alloc::vec![2.0, 0.0]), 1.0, 0.1).is_err());
        assert!(TheoremCase::new(Matrix::identity(2, 2), Vector::zeros(2), 1.0, 0.1).is_err());
    }

    #[test]
    fn sampler_moments() {
        let mut r = rng::seeded(21);
        let c = TheoremCase::random(&mut r, 3, 1.0, 0.1, 0.5).unwrap();
        let (m, y) = sample_case(&c, 100_000, &mut r);
        let vy = y.norm_squared() / 1e5;
        // Var of Y^2 is 2 for a unit normal.
        assert!((vy - 1.0).abs() < 5.0 * (2.0f64 / 1e5).sqrt());
        let est = empirical_estimators(&m, &y, c.eps()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((est.a_hat[(i, j)] - c.a()[(i, j)]).abs() < 0.02);
            }
        }
    }

    #[test]
    fn estimator_error_paths() {
        let m = Matrix::from_fn(10, 2, |i, _| i as f64);
        let y = Vector::from_fn(10, |i, _| i as f64);
        assert_eq!(empirical_estimators(&m, &y, 0.1).unwrap_err(), Error::SingularCovariance);
        assert!(empirical_estimators(&Matrix::zeros(2, 2), &Vector::zeros(2), 0.1).is_err());
    }

    #[test]
    fn nested_kriging_duplicates_collapse() {
        let set = GpCollocation {
            interior: alloc::vec![[0.1, 0.2], [-0.4, 0.3], [0.5, -0.5]],
            boundary: crate::pde::perimeter_points(12, [-1.0, 1.0, -1.0, 1.0]),
            lengthscale: 0.6,
        };
        let out = nested_kriging_mea(&[set.clone(), set], nested_kriging_source, |_| 0.0, 7, 7, [-1.0, 1.0, -1.0, 1.0]).unwrap();
        for i in 0..out.aggregate.len() {
            let m = out.models[0].values()[i];
            assert!((out.aggregate.values()[i] - m).abs() < 1e-8 * (1.0 + m.abs()));
        }
    }
}
