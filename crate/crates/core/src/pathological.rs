//! Two small problems on which fitting the aggregate to the data goes wrong.
//!
//! In the first, aggregation coefficients are affine in `x` and fitted by
//! least squares on ten points where the target happens to be a line; in
//! the second, softmax weights are fitted on data with a gap in the middle.
//! Both are compared with MEVA on the same data.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::linalg::{self, Matrix, Vector};
use crate::rng;
use crate::train::{self, ErrorSamples};

fn noise(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("positive std")
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len().max(1) as f64
}

/// Target of the first problem, `2x + cos(3 pi x)`.
pub fn target1(x: f64) -> f64 {
    2.0 * x + (3.0 * PI * x).cos()
}

/// Ten points `0.8 - 2k/3` and `-0.8 + 2k/3`, `k = 0..4`, at which the
/// cosine term of [`target1`] is the same constant, so the targets lie on a
/// line.
pub fn trick_points() -> Vec<f64> {
    let mut x: Vec<f64> = (0..5).rev().map(|k| 0.8 - 2.0 * k as f64 / 3.0).collect();
    x.extend((0..5).map(|k| -0.8 + 2.0 * k as f64 / 3.0));
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pathological1Config {
    pub noise_std: f64,
    /// Dense evaluation grid size on `[-1, 1]`.
    pub grid: usize,
    pub meva_reg: f64,
    pub seed: u64,
}

impl Default for Pathological1Config {
    fn default() -> Self {
        Pathological1Config { noise_std: 0.2, grid: 401, meva_reg: 1e-3, seed: 0 }
    }
}

/// Per-point values on the dense grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub truth: f64,
    pub good: f64,
    pub meea: f64,
    pub meva: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pathological1Report {
    /// `(a_G, b_G, a_B, b_B)` in `alpha(x) = (a_G x + b_G, a_B x + b_B)`.
    pub coefficients: [f64; 4],
    /// Intercept and slope of the least-squares line through the data.
    pub line: [f64; 2],
    /// Largest gap between the MEEA aggregate and that line on the grid.
    pub line_gap: f64,
    pub meea_train_mse: f64,
    pub meea_mse: f64,
    pub meva_mse: f64,
    pub good_mse: f64,
    pub curve: Vec<CurvePoint>,
}

impl Pathological1Report {
    /// Largest coefficient magnitude on the good model.
    pub fn good_weight(&self) -> f64 {
        self.coefficients[0].abs().max(self.coefficients[1].abs())
    }
}

/// Least-squares fit of the affine coefficients (no regularization) with
/// the constant bad model `M_B = 1`, and MEVA with an RBF kernel on `x`.
pub fn pathological1(cfg: &Pathological1Config) -> Result<Pathological1Report> {
    if cfg.grid < 2 {
        return Err(invalid("grid needs at least two points"));
    }
    let mut r = rng::seeded(cfg.seed);
    let eps = noise(cfg.noise_std);
    let xs = trick_points();
    let n = xs.len();
    let y: Vec<f64> = xs.iter().map(|&x| target1(x)).collect();
    let good: Vec<f64> = y.iter().map(|&v| v + eps.sample(&mut r)).collect();

    let a = Matrix::from_fn(n, 4, |i, j| match j {
        0 => xs[i] * good[i],
        1 => good[i],
        2 => xs[i],
        _ => 1.0,
    });
    let c = linalg::lstsq(&a, &Vector::from_vec(y.clone()))?;
    let coefficients = [c[0], c[1], c[2], c[3]];
    let fit = &a * &c;
    let meea_train_mse = mse(fit.as_slice(), &y);

    let design = Matrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
    let l = linalg::lstsq(&design, &Vector::from_vec(y.clone()))?;
    let line = [l[0], l[1]];

    let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| alloc::vec![x]).collect();
    let values = Matrix::from_fn(n, 2, |i, k| if k == 0 { good[i] } else { 1.0 });
    let s = ErrorSamples::new(inputs.clone(), values, y)?;
    let kernel = KernelSpec::with_median_lengthscale(KernelFamily::Rbf, &inputs)?;
    let meva = train::fit_meva_sharp(&s, &kernel, cfg.meva_reg, None)?;

    let mut curve = Vec::with_capacity(cfg.grid);
    let mut line_gap = 0.0f64;
    for i in 0..cfg.grid {
        let x = -1.0 + 2.0 * i as f64 / (cfg.grid - 1) as f64;
        let truth = target1(x);
        let g = truth + eps.sample(&mut r);
        let meea = (c[0] * x + c[1]) * g + c[2] * x + c[3];
        let mv = meva.predict(&[x], &[g, 1.0])?.1;
        line_gap = line_gap.max((meea - (l[0] + l[1] * x)).abs());
        curve.push(CurvePoint { x, truth, good: g, meea, meva: mv });
    }
    let truth: Vec<f64> = curve.iter().map(|p| p.truth).collect();
    let col = |f: fn(&CurvePoint) -> f64| curve.iter().map(f).collect::<Vec<f64>>();
    let meea_mse = mse(&col(|p| p.meea), &truth);
    let meva_mse = mse(&col(|p| p.meva), &truth);
    let good_mse = mse(&col(|p| p.good), &truth);
    Ok(Pathological1Report { coefficients, line, line_gap, meea_train_mse, meea_mse, meva_mse, good_mse, curve })
}

/// Target of the second problem, `3 cos(2 pi x)`.
pub fn target2(x: f64) -> f64 {
    3.0 * (2.0 * PI * x).cos()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pathological2Config {
    pub n: usize,
    pub noise_std: f64,
    pub lengthscale: f64,
    pub meea_reg: f64,
    pub meea_iters: usize,
    pub meva_reg: f64,
    pub grid: usize,
    pub seed: u64,
}

impl Default for Pathological2Config {
    fn default() -> Self {
        Pathological2Config {
            n: 100,
            noise_std: 0.3,
            lengthscale: 0.1,
            meea_reg: 1e-7,
            meea_iters: 60,
            meva_reg: 1e-3,
            grid: 201,
            seed: 0,
        }
    }
}

/// Grid point with the softmax (MEEA) and MEVA weights on `(M_G, M_B, M_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPoint {
    pub x: f64,
    pub truth: f64,
    pub models: [f64; 3],
    pub meea: f64,
    pub meva: f64,
    pub meea_weights: [f64; 3],
    pub meva_weights: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pathological2Report {
    pub train_x: Vec<f64>,
    pub meea_train_mse: f64,
    /// Test errors are over the gap `[-0.5, 0.5]`.
    pub meea_test_mse: f64,
    pub meva_test_mse: f64,
    pub good_test_mse: f64,
    pub meva_mean_good_weight: f64,
    pub meea_mean_good_weight: f64,
    /// Grid over `[-1, 1]`.
    pub curve: Vec<WeightPoint>,
}

/// Softmax MEEA fitted by Gauss-Newton and MEVA, both with an RBF kernel on
/// `x`, trained on `n` points drawn uniformly from `[-1,-0.5] U [0.5,1]`.
pub fn pathological2(cfg: &Pathological2Config) -> Result<Pathological2Report> {
    if cfg.n == 0 || cfg.grid < 2 {
        return Err(invalid("need at least one sample and two grid points"));
    }
    let mut r = rng::seeded(cfg.seed);
    let eps = noise(cfg.noise_std);
    let models = |x: f64, r: &mut rand_chacha::ChaCha8Rng| [target2(x) + eps.sample(r), 3.0, -3.0];
    let train_x: Vec<f64> = (0..cfg.n)
        .map(|_| {
            let u: f64 = r.random_range(0.5..1.0);
            if r.random::<bool>() { u } else { -u }
        })
        .collect();
    let y: Vec<f64> = train_x.iter().map(|&x| target2(x)).collect();
    let mut values = Matrix::zeros(cfg.n, 3);
    for (i, &x) in train_x.iter().enumerate() {
        let m = models(x, &mut r);
        for k in 0..3 {
            values[(i, k)] = m[k];
        }
    }
    let inputs: Vec<Vec<f64>> = train_x.iter().map(|&x| alloc::vec![x]).collect();
    let s = ErrorSamples::new(inputs.clone(), values.clone(), y.clone())?;
    let kernel = KernelSpec::rbf(cfg.lengthscale)?;
    let meea = train::fit_meea_softmax(&s, &kernel, cfg.meea_reg, cfg.meea_iters)?;
    let meva = train::fit_meva_sharp(&s, &kernel, cfg.meva_reg, None)?;

    let mut fit = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        fit.push(meea.predict(&inputs[i], &s.model_row(i))?);
    }
    let meea_train_mse = mse(&fit, &y);

    let mut curve = Vec::with_capacity(cfg.grid);
    for i in 0..cfg.grid {
        let x = -1.0 + 2.0 * i as f64 / (cfg.grid - 1) as f64;
        let m = models(x, &mut r);
        let we = meea.weights(&[x])?;
        let (wv, mv) = meva.predict(&[x], &m)?;
        let dot = |w: &[f64]| w.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>();
        let arr = |w: &[f64]| [w[0], w[1], w[2]];
        curve.push(WeightPoint {
            x,
            truth: target2(x),
            models: m,
            meea: dot(we.as_slice()),
            meva: mv,
            meea_weights: arr(we.as_slice()),
            meva_weights: arr(wv.as_slice()),
        });
    }
    let gap: Vec<&WeightPoint> = curve.iter().filter(|p| p.x.abs() <= 0.5).collect();
    let truth: Vec<f64> = gap.iter().map(|p| p.truth).collect();
    let col = |f: &dyn Fn(&WeightPoint) -> f64| gap.iter().map(|p| f(p)).collect::<Vec<f64>>();
    Ok(Pathological2Report {
        train_x,
        meea_train_mse,
        meea_test_mse: mse(&col(&|p| p.meea), &truth),
        meva_test_mse: mse(&col(&|p| p.meva), &truth),
        good_test_mse: mse(&col(&|p| p.models[0]), &truth),
        meva_mean_good_weight: linalg::mean(&col(&|p| p.meva_weights[0])),
        meea_mean_good_weight: linalg::mean(&col(&|p| p.meea_weights[0])),
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trick_targets_are_collinear() {
        let xs = trick_points();
        assert_eq!(xs.len(), 10);
        let c = (0.4 * PI).cos();
        for &x in &xs {
            assert!((target1(x) - (2.0 * x + c)).abs() < 1e-12);
        }
    }

    #[test]
    fn meea_ignores_the_good_model() {
        let rep = pathological1(&Pathological1Config::default()).unwrap();
        assert!(rep.good_weight() < 1e-6, "{:?}", rep.coefficients);
        assert!(rep.line_gap < 1e-8);
        assert!(rep.meea_train_mse < 1e-20);
        assert!(rep.meva_mse < rep.meea_mse);
    }

    #[test]
    fn softmax_meea_interpolates_but_does_not_generalize() {
        let rep = pathological2(&Pathological2Config::default()).unwrap();
        assert!(rep.meea_train_mse < 0.05, "{}", rep.meea_train_mse);
        assert!(rep.meea_test_mse > rep.good_test_mse);
        assert!(rep.meva_mean_good_weight > 0.5);
        assert!(rep.meva_test_mse < rep.meea_test_mse);
        for p in &rep.curve {
            let s: f64 = p.meva_weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_tiny_grids() {
        let cfg = Pathological1Config { grid: 1, ..Default::default() };
        assert!(pathological1(&cfg).is_err());
    }
}
