//! Aggregation of solution operators: pointwise datasets over (grid point,
//! input function), log-error fitting and evaluation of the aggregate
//! operator on the Laplace and Burgers benchmarks.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::index;
use rand::Rng;

use crate::agg::WeightVector;
use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::linalg::Matrix;
use crate::pde::{
    burgers_reference, burgers_solve, mse, sample_laplace_pair, BurgersSampler, BurgersScheme, GpSolver,
    GridFunction, LaplaceSolver, SolverResult, BURGERS_NU,
};
use crate::rng;
use crate::train::{self, ErrorSamples, MevaAggregator};

/// Default number of dataset rows used as kernel anchors.
pub const ANCHOR_BUDGET: usize = 2000;

/// Floor applied to per-sample errors before taking logarithms.
pub const MSE_FLOOR: f64 = 1e-300;

fn local_mean(g: &GridFunction, ix: usize, iy: usize) -> f64 {
    let (nx, ny) = (g.nx(), g.ny());
    let xs = [ix.saturating_sub(1), ix, (ix + 1).min(nx - 1)];
    if ny == 1 {
        return xs.iter().map(|&x| g.get(x, 0)).sum::<f64>() / 3.0;
    }
    let ys = [iy.saturating_sub(1), iy, (iy + 1).min(ny - 1)];
    let mut acc = 0.0;
    for &y in &ys {
        for &x in &xs {
            acc += g.get(x, y);
        }
    }
    acc / 9.0
}

// Value of the input at an output node; a one-row input is constant along y.
fn input_at(f: &GridFunction, ix: usize, iy: usize) -> f64 {
    if f.ny() == 1 {
        f.get(ix.min(f.nx() - 1), 0)
    } else {
        f.get(ix, iy)
    }
}

/// Feature vector at node `(ix, iy)` of the output grid:
/// `[x, y, f, M_1 .. M_n, mean(f), mean(M_1) .. mean(M_n)]`, where the means
/// run over the 3 x 3 neighbourhood (3 points for a one-row field) with
/// indices clamped at the edges. Its length is `2 + 2 (n + 1)`.
pub fn featurize(ix: usize, iy: usize, f: &GridFunction, outputs: &[GridFunction]) -> Vec<f64> {
    let g = &outputs[0];
    let mut v = Vec::with_capacity(4 + 2 * outputs.len());
    v.push(g.x(ix));
    v.push(g.y(iy));
    v.push(input_at(f, ix, iy));
    v.extend(outputs.iter().map(|m| m.get(ix, iy)));
    v.push(if f.ny() == 1 { local_mean(f, ix.min(f.nx() - 1), 0) } else { local_mean(f, ix, iy) });
    v.extend(outputs.iter().map(|m| local_mean(m, ix, iy)));
    v
}

/// One input/output pair with every solver's answer.
#[derive(Debug, Clone)]
pub struct OperatorSample {
    pub input: GridFunction,
    pub truth: GridFunction,
    pub outputs: Vec<GridFunction>,
}

impl OperatorSample {
    pub fn new(input: GridFunction, truth: GridFunction, outputs: Vec<GridFunction>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::EmptyBank);
        }
        if outputs.iter().any(|o| o.nx() != truth.nx() || o.ny() != truth.ny()) {
            return Err(invalid("solver outputs and truth differ in shape"));
        }
        if input.ny() != 1 && (input.nx() != truth.nx() || input.ny() != truth.ny()) {
            return Err(invalid("input and truth differ in shape"));
        }
        Ok(OperatorSample { input, truth, outputs })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorRow {
    pub sample: usize,
    pub grid_index: usize,
    pub features: Vec<f64>,
    pub errors: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDataset {
    pub rows: Vec<OperatorRow>,
    pub n_models: usize,
}

impl OperatorDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Draws `subsample` distinct grid nodes per sample (all nodes when
/// `subsample` is at least the grid size) and records features, errors
/// against the truth and the target.
pub fn build_dataset<R: Rng + ?Sized>(samples: &[OperatorSample], subsample: usize, rng: &mut R) -> Result<OperatorDataset> {
    let first = samples.first().ok_or_else(|| invalid("no samples"))?;
    let n_models = first.outputs.len();
    let mut rows = Vec::new();
    for (j, s) in samples.iter().enumerate() {
        if s.outputs.len() != n_models {
            return Err(invalid("samples disagree on the number of solvers"));
        }
        let nx = s.truth.nx();
        let size = s.truth.len();
        let mut picks: Vec<usize> =
            if subsample >= size { (0..size).collect() } else { index::sample(rng, size, subsample).into_vec() };
        picks.sort_unstable();
        for i in picks {
            let (ix, iy) = (i % nx, i / nx);
            let features = featurize(ix, iy, &s.input, &s.outputs);
            if features.iter().any(|v| !v.is_finite()) {
                return Err(invalid("non-finite feature"));
            }
            let target = s.truth.values()[i];
            let errors = s.outputs.iter().map(|o| o.values()[i] - target).collect();
            rows.push(OperatorRow { sample: j, grid_index: i, features, errors, target });
        }
    }
    Ok(OperatorDataset { rows, n_models })
}

/// Transformation applied to raw features before the kernel sees them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Per-feature standardization.
    Standard,
    /// `asinh(v / s)` with `s` the median magnitude of the feature, then
    /// standardization. Tames clamped outputs of diverged solvers.
    Squashed,
    /// `Squashed` plus `log10(|M_k - median_l M_l| + tiny)` per model, the
    /// distance of each solver from the consensus.
    Disagreement,
}

/// Fitted feature encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoder {
    encoding: Encoding,
    n_models: usize,
    d_omega: usize,
    scale: Vec<f64>,
    center: Vec<f64>,
    spread: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl FeatureEncoder {
    pub fn fit(rows: &[Vec<f64>], n_models: usize, encoding: Encoding) -> Result<Self> {
        let first = rows.first().ok_or_else(|| invalid("no rows to fit the encoder"))?;
        let d_omega = first
            .len()
            .checked_sub(2 * (n_models + 1))
            .ok_or_else(|| invalid("feature length does not match the bank size"))?;
        let dim = first.len();
        let scale: Vec<f64> = match encoding {
            Encoding::Standard => alloc::vec![1.0; dim],
            _ => (0..dim)
                .map(|c| {
                    let m = median(rows.iter().map(|r| r[c].abs()).collect());
                    if c < d_omega || !(m > 0.0) {
                        1.0
                    } else {
                        m
                    }
                })
                .collect(),
        };
        let mut enc = FeatureEncoder { encoding, n_models, d_omega, scale, center: Vec::new(), spread: Vec::new() };
        let pre: Vec<Vec<f64>> = rows.iter().map(|r| enc.transform(r)).collect();
        let d = pre[0].len();
        let nf = pre.len() as f64;
        enc.center = (0..d).map(|c| pre.iter().map(|r| r[c]).sum::<f64>() / nf).collect();
        enc.spread = (0..d)
            .map(|c| {
                let m = enc.center[c];
                let var = pre.iter().map(|r| (r[c] - m) * (r[c] - m)).sum::<f64>() / nf;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(enc)
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn output_dim(&self) -> usize {
        self.center.len()
    }

    fn transform(&self, raw: &[f64]) -> Vec<f64> {
        let squash = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .zip(&self.scale)
                .enumerate()
                .map(|(c, (x, s))| if c < self.d_omega { *x } else { ((*x) / s).asinh() })
                .collect()
        };
        match self.encoding {
            Encoding::Standard => raw.to_vec(),
            Encoding::Squashed => squash(raw),
            Encoding::Disagreement => {
                let mut out = squash(raw);
                let ms = &raw[self.d_omega + 1..self.d_omega + 1 + self.n_models];
                let med = median(ms.to_vec());
                let tiny = 1e-12 * (1.0 + med.abs());
                out.extend(ms.iter().map(|m| ((m - med).abs() + tiny).log10()));
                out
            }
        }
    }

    pub fn encode(&self, raw: &[f64]) -> Vec<f64> {
        let mut v = self.transform(raw);
        for ((x, c), s) in v.iter_mut().zip(&self.center).zip(&self.spread) {
            *x = (*x - c) / s;
        }
        v
    }
}

/// Settings of [`fit_operator_meva`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFitConfig {
    pub family: KernelFamily,
    /// Kernel lengthscale in encoded units; the median pairwise distance of
    /// the anchors times `lengthscale_factor` when `None`.
    pub lengthscale: Option<f64>,
    pub lengthscale_factor: f64,
    pub reg: f64,
    pub anchor_budget: usize,
    pub encoding: Encoding,
    pub seed: u64,
}

impl Default for OperatorFitConfig {
    fn default() -> Self {
        OperatorFitConfig {
            family: KernelFamily::Matern32,
            lengthscale: None,
            lengthscale_factor: 1.0,
            reg: 1e-4,
            anchor_budget: ANCHOR_BUDGET,
            encoding: Encoding::Disagreement,
            seed: 0,
        }
    }
}

/// Fitted aggregate of a solver bank.
#[derive(Debug, Clone)]
pub struct OperatorAggregate {
    pub meva: MevaAggregator,
    pub encoder: FeatureEncoder,
    pub n_models: usize,
}

impl OperatorAggregate {
    /// Weights at node `(ix, iy)`.
    pub fn weights_at(&self, ix: usize, iy: usize, f: &GridFunction, outputs: &[GridFunction]) -> Result<WeightVector> {
        self.meva.weights(&self.encoder.encode(&featurize(ix, iy, f, outputs)))
    }
}

/// Fits the log-error functions on at most `anchor_budget` rows drawn
/// uniformly from the dataset.
pub fn fit_operator_meva(ds: &OperatorDataset, cfg: &OperatorFitConfig) -> Result<OperatorAggregate> {
    if ds.is_empty() {
        return Err(invalid("empty operator dataset"));
    }
    let mut r = rng::seeded(cfg.seed);
    let mut picks: Vec<usize> = if ds.len() > cfg.anchor_budget {
        index::sample(&mut r, ds.len(), cfg.anchor_budget).into_vec()
    } else {
        (0..ds.len()).collect()
    };
    picks.sort_unstable();
    let raw: Vec<Vec<f64>> = picks.iter().map(|&i| ds.rows[i].features.clone()).collect();
    let encoder = FeatureEncoder::fit(&raw, ds.n_models, cfg.encoding)?;
    let inputs: Vec<Vec<f64>> = raw.iter().map(|x| encoder.encode(x)).collect();
    let n = ds.n_models;
    let values = Matrix::from_fn(picks.len(), n, |a, k| {
        let row = &ds.rows[picks[a]];
        row.target + row.errors[k]
    });
    let targets: Vec<f64> = picks.iter().map(|&i| ds.rows[i].target).collect();
    let samples = ErrorSamples::new(inputs, values, targets)?;
    let kernel = match cfg.lengthscale {
        Some(l) => KernelSpec::new(cfg.family, l)?,
        None => {
            let base = KernelSpec::with_median_lengthscale(cfg.family, samples.inputs())?;
            KernelSpec::new(cfg.family, base.lengthscale() * cfg.lengthscale_factor)?
        }
    };
    let meva = train::fit_meva_sharp(&samples, &kernel, cfg.reg, None)?;
    Ok(OperatorAggregate { meva, encoder, n_models: n })
}

/// Aggregate field and one weight field per solver for input `f` and the
/// solver outputs on it.
pub fn predict_operator(
    agg: &OperatorAggregate,
    f: &GridFunction,
    outputs: &[GridFunction],
) -> Result<(GridFunction, Vec<GridFunction>)> {
    if outputs.len() != agg.n_models {
        return Err(invalid("number of solver outputs does not match the aggregate"));
    }
    let g = &outputs[0];
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = g.clone();
    let mut weights: Vec<GridFunction> = (0..agg.n_models).map(|_| g.clone()).collect();
    for iy in 0..ny {
        for ix in 0..nx {
            let w = agg.weights_at(ix, iy, f, outputs)?;
            let mut v = 0.0;
            for (k, wk) in w.as_slice().iter().enumerate() {
                v += wk * outputs[k].get(ix, iy);
                weights[k].set(ix, iy, *wk);
            }
            out.set(ix, iy, v);
        }
    }
    Ok((out, weights))
}

/// Mean of `log10` of the entries, each floored at [`MSE_FLOOR`].
pub fn geometric_mean_log10_mse(per_sample_mse: &[f64]) -> Result<f64> {
    if per_sample_mse.is_empty() {
        return Err(invalid("no entries"));
    }
    if per_sample_mse.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(invalid("entries must be nonnegative"));
    }
    Ok(per_sample_mse.iter().map(|v| v.max(MSE_FLOOR).log10()).sum::<f64>() / per_sample_mse.len() as f64)
}

/// Pointwise uniform average of the solver outputs.
pub fn mean_baseline(outputs: &[GridFunction]) -> Result<GridFunction> {
    let first = outputs.first().ok_or(Error::EmptyBank)?;
    let mut out = first.clone();
    let n = outputs.len() as f64;
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        *v = outputs.iter().map(|o| o.values()[i]).sum::<f64>() / n;
    }
    Ok(out)
}

/// One line of the per-sample error table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub sample_id: usize,
    pub solver_id: String,
    pub mse: f64,
    pub log10_mse: f64,
}

/// Fields of one test sample, kept for plotting.
#[derive(Debug, Clone)]
pub struct SampleFields {
    pub sample_id: usize,
    pub sample: OperatorSample,
    pub aggregate: GridFunction,
    pub weights: Vec<GridFunction>,
}

#[derive(Debug, Clone)]
pub struct OperatorReport {
    pub solver_ids: Vec<String>,
    pub rows: Vec<MetricRow>,
    /// `(solver_id, geometric-mean log10 MSE)`, solvers first, then
    /// `aggregate` and `mean_baseline`.
    pub summary: Vec<(String, f64)>,
    /// Test samples on which the aggregate's error exceeded the worst solver's.
    pub worse_than_worst: usize,
    pub n_test: usize,
    pub fields: Vec<SampleFields>,
    pub aggregate: OperatorAggregate,
}

impl OperatorReport {
    pub fn score(&self, id: &str) -> Option<f64> {
        self.summary.iter().find(|(s, _)| s == id).map(|(_, v)| *v)
    }

    /// Best geometric-mean score among the individual solvers.
    pub fn best_solver(&self) -> Option<(&str, f64)> {
        self.summary
            .iter()
            .filter(|(s, _)| self.solver_ids.contains(s))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(s, v)| (s.as_str(), *v))
    }
}

/// Fits on `train` and scores every solver, the aggregate and the uniform mean
/// on `test`. Fields of the first `keep_fields` test samples are retained.
pub fn evaluate_operator(
    solver_ids: Vec<String>,
    train: &[OperatorSample],
    test: &[OperatorSample],
    subsample: usize,
    cfg: &OperatorFitConfig,
    keep_fields: usize,
) -> Result<OperatorReport> {
    let mut r = rng::stream(cfg.seed, 1);
    let ds = build_dataset(train, subsample, &mut r)?;
    let aggregate = fit_operator_meva(&ds, cfg)?;
    let n = solver_ids.len();
    let mut per: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(test.len()); n + 2];
    let mut rows = Vec::new();
    let mut fields = Vec::new();
    let mut worse = 0;
    for (j, s) in test.iter().enumerate() {
        let (agg_field, weights) = predict_operator(&aggregate, &s.input, &s.outputs)?;
        let mean = mean_baseline(&s.outputs)?;
        let mut errs: Vec<f64> = s.outputs.iter().map(|o| mse(o, &s.truth)).collect::<Result<_>>()?;
        let worst = errs.iter().fold(0.0f64, |m, v| m.max(*v));
        let ea = mse(&agg_field, &s.truth)?;
        if ea > worst {
            worse += 1;
        }
        errs.push(ea);
        errs.push(mse(&mean, &s.truth)?);
        for (k, e) in errs.iter().enumerate() {
            per[k].push(*e);
            let id = if k < n {
                solver_ids[k].clone()
            } else if k == n {
                "aggregate".to_string()
            } else {
                "mean_baseline".to_string()
            };
            rows.push(MetricRow { sample_id: j, solver_id: id, mse: *e, log10_mse: e.max(MSE_FLOOR).log10() });
        }
        if j < keep_fields {
            fields.push(SampleFields { sample_id: j, sample: s.clone(), aggregate: agg_field, weights });
        }
    }
    let mut summary = Vec::with_capacity(n + 2);
    for (k, v) in per.iter().enumerate() {
        let id = if k < n {
            solver_ids[k].clone()
        } else if k == n {
            "aggregate".to_string()
        } else {
            "mean_baseline".to_string()
        };
        summary.push((id, geometric_mean_log10_mse(v)?));
    }
    Ok(OperatorReport { solver_ids, rows, summary, worse_than_worst: worse, n_test: test.len(), fields, aggregate })
}

/// Settings of the Laplace benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceExperimentConfig {
    pub grid: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub subsample: usize,
    pub n_colloc: usize,
    pub gp_lengthscale: f64,
    pub fit: OperatorFitConfig,
    pub keep_fields: usize,
}

impl Default for LaplaceExperimentConfig {
    fn default() -> Self {
        LaplaceExperimentConfig {
            grid: 64,
            n_train: 60,
            n_test: 20,
            subsample: 200,
            n_colloc: 400,
            gp_lengthscale: 0.2,
            fit: OperatorFitConfig::default(),
            keep_fields: 1,
        }
    }
}

/// Train and test samples of a benchmark with the solver names.
#[derive(Debug, Clone)]
pub struct BenchmarkData {
    pub solver_ids: Vec<String>,
    pub train: Vec<OperatorSample>,
    pub test: Vec<OperatorSample>,
}

/// Samples train and test pairs and runs the five-solver bank on them.
/// Samples are drawn from stream 0 of the seed and the collocation set of the
/// GP solver from stream 2.
pub fn laplace_data(cfg: &LaplaceExperimentConfig) -> Result<BenchmarkData> {
    let seed = cfg.fit.seed;
    let mut gp_rng = rng::stream(seed, 2);
    let gp = GpSolver::new(cfg.grid, cfg.grid, cfg.n_colloc, cfg.gp_lengthscale, &mut gp_rng);
    let bank = LaplaceSolver::bank(gp);
    let solver_ids: Vec<String> = bank.iter().map(|s| s.name().to_string()).collect();
    let mut r = rng::stream(seed, 0);
    let mut draw = |count: usize| -> Result<Vec<OperatorSample>> {
        (0..count)
            .map(|_| {
                let s = sample_laplace_pair(&mut r, cfg.grid, cfg.grid);
                let outs: Vec<GridFunction> = bank.iter().map(|b| b.solve(&s.f).field).collect();
                OperatorSample::new(s.f, s.u, outs)
            })
            .collect()
    };
    let train = draw(cfg.n_train)?;
    let test = draw(cfg.n_test)?;
    Ok(BenchmarkData { solver_ids, train, test })
}

/// [`laplace_data`] followed by [`evaluate_operator`].
pub fn laplace_experiment(cfg: &LaplaceExperimentConfig) -> Result<OperatorReport> {
    let d = laplace_data(cfg)?;
    evaluate_operator(d.solver_ids, &d.train, &d.test, cfg.subsample, &cfg.fit, cfg.keep_fields)
}

/// Settings of the Burgers benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersExperimentConfig {
    pub nx: usize,
    pub nt: usize,
    pub nu: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub subsample: usize,
    pub reference_refine: usize,
    pub fit: OperatorFitConfig,
    pub keep_fields: usize,
}

impl Default for BurgersExperimentConfig {
    fn default() -> Self {
        BurgersExperimentConfig {
            nx: 128,
            nt: 128,
            nu: BURGERS_NU,
            n_train: 60,
            n_test: 20,
            subsample: 200,
            reference_refine: 8,
            fit: OperatorFitConfig::default(),
            keep_fields: 1,
        }
    }
}

/// Runs the seven schemes on initial conditions drawn from stream 0 of the
/// seed; the truth is the refined reference solution.
pub fn burgers_data(cfg: &BurgersExperimentConfig) -> Result<BenchmarkData> {
    let sampler = BurgersSampler::new(cfg.nx);
    let solver_ids: Vec<String> = BurgersScheme::ALL.iter().map(|s| s.name().to_string()).collect();
    let mut r = rng::stream(cfg.fit.seed, 0);
    let mut draw = |count: usize| -> Result<Vec<OperatorSample>> {
        (0..count)
            .map(|_| {
                let u0 = sampler.sample(&mut r);
                let truth = burgers_reference(&u0, cfg.nu, cfg.nt, cfg.reference_refine);
                let outs: Vec<GridFunction> = BurgersScheme::ALL
                    .iter()
                    .map(|s| burgers_solve(&u0, *s, cfg.nu, cfg.nt))
                    .map(|res: SolverResult| res.field)
                    .collect();
                OperatorSample::new(u0, truth, outs)
            })
            .collect()
    };
    let train = draw(cfg.n_train)?;
    let test = draw(cfg.n_test)?;
    Ok(BenchmarkData { solver_ids, train, test })
}

/// [`burgers_data`] followed by [`evaluate_operator`].
pub fn burgers_experiment(cfg: &BurgersExperimentConfig) -> Result<OperatorReport> {
    let d = burgers_data(cfg)?;
    evaluate_operator(d.solver_ids, &d.train, &d.test, cfg.subsample, &cfg.fit, cfg.keep_fields)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_samples(n: usize, seed: u64) -> Vec<OperatorSample> {
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|_| {
                let a: f64 = r.random_range(0.5..1.5);
                let truth = GridFunction::from_fn(9, 7, |x, y| a * (x + 2.0 * y));
                let good = truth.clone();
                let bad = GridFunction::from_fn(9, 7, |x, y| a * (x + 2.0 * y) + 0.3 * (5.0 * x).sin());
                OperatorSample::new(truth.clone(), truth, alloc::vec![bad, good]).unwrap()
            })
            .collect()
    }

    #[test]
    fn feature_layout_and_constants() {
        let f = GridFunction::from_fn(6, 5, |_, _| 2.0);
        let m = alloc::vec![GridFunction::from_fn(6, 5, |_, _| -1.0), GridFunction::from_fn(6, 5, |_, _| 3.0)];
        for (ix, iy) in [(0, 0), (2, 3), (5, 4)] {
            let v = featurize(ix, iy, &f, &m);
            assert_eq!(v.len(), 2 + 3 * 2);
            assert_eq!(&v[2..], &[2.0, -1.0, 3.0, 2.0, -1.0, 3.0]);
        }
    }

    #[test]
    fn clamped_means_match_loop() {
        let f = GridFunction::from_fn(5, 4, |x, y| x * x + 3.0 * y);
        let m = alloc::vec![GridFunction::from_fn(5, 4, |x, y| x - y)];
        for iy in 0..4usize {
            for ix in 0..5usize {
                let mut acc = 0.0;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let x = (ix as i64 + dx).clamp(0, 4) as usize;
                        let y = (iy as i64 + dy).clamp(0, 3) as usize;
                        acc += f.get(x, y);
                    }
                }
                let v = featurize(ix, iy, &f, &m);
                assert!((v[4] - acc / 9.0).abs() < 1e-14);
            }
        }
        // One-row inputs use three points along x.
        let f1 = GridFunction::new(4, 1, alloc::vec![1.0, 2.0, 4.0, 8.0]).unwrap();
        let v = featurize(0, 2, &f1, &m);
        assert!((v[2] - 1.0).abs() < 1e-15);
        assert!((v[4] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dataset_rows_and_error_means() {
        let s = toy_samples(3, 1);
        let mut r = rng::seeded(2);
        let full = build_dataset(&s, 1000, &mut r).unwrap();
        assert_eq!(full.len(), 3 * 63);
        let sub = build_dataset(&s, 10, &mut rng::seeded(4)).unwrap();
        let again = build_dataset(&s, 10, &mut rng::seeded(4)).unwrap();
        assert_eq!(sub, again);
        assert_eq!(sub.len(), 30);
        // Mean squared error of each solver over the picked points.
        for k in 0..2 {
            let a = sub.rows.iter().map(|r| r.errors[k] * r.errors[k]).sum::<f64>() / 30.0;
            let b = sub
                .rows
                .iter()
                .map(|row| {
                    let e = s[row.sample].outputs[k].values()[row.grid_index] - s[row.sample].truth.values()[row.grid_index];
                    e * e
                })
                .sum::<f64>()
                / 30.0;
            assert!((a - b).abs() <= 1e-15 * (1.0 + b));
        }
    }

    #[test]
    fn exact_solver_gets_the_weight() {
        let s = toy_samples(4, 3);
        let ds = build_dataset(&s, 1000, &mut rng::seeded(0)).unwrap();
        let cfg = OperatorFitConfig { encoding: Encoding::Standard, reg: 1e-8, ..Default::default() };
        let agg = fit_operator_meva(&ds, &cfg).unwrap();
        let (field, weights) = predict_operator(&agg, &s[0].input, &s[0].outputs).unwrap();
        let mut min_w = 1.0f64;
        for i in 0..field.len() {
            let ws = weights[0].values()[i] + weights[1].values()[i];
            assert!((ws - 1.0).abs() < 1e-12);
            // Nodes where the bad solver happens to be exact carry no signal.
            if s[0].outputs[0].values()[i] != s[0].truth.values()[i] {
                min_w = min_w.min(weights[1].values()[i]);
            }
        }
        assert!(min_w >= 0.99, "{min_w}");
    }

    #[test]
    fn aggregate_inside_hull() {
        let s = toy_samples(3, 9);
        let ds = build_dataset(&s, 20, &mut rng::seeded(0)).unwrap();
        let agg = fit_operator_meva(&ds, &OperatorFitConfig::default()).unwrap();
        let (field, _) = predict_operator(&agg, &s[1].input, &s[1].outputs).unwrap();
        for i in 0..field.len() {
            let a = s[1].outputs[0].values()[i];
            let b = s[1].outputs[1].values()[i];
            let v = field.values()[i];
            assert!(v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12);
        }
    }

    #[test]
    fn geometric_mean_examples() {
        assert!((geometric_mean_log10_mse(&[1e-2, 1e-4]).unwrap() + 3.0).abs() < 1e-14);
        assert!((geometric_mean_log10_mse(&[10f64.powf(-6.282)]).unwrap() + 6.282).abs() < 1e-12);
        assert_eq!(geometric_mean_log10_mse(&[0.0]).unwrap(), -300.0);
        assert!(geometric_mean_log10_mse(&[]).is_err());
        assert!(geometric_mean_log10_mse(&[-1.0]).is_err());
    }

    #[test]
    fn mean_baseline_is_pointwise_average() {
        let a = GridFunction::from_fn(3, 3, |x, _| x);
        let b = GridFunction::from_fn(3, 3, |_, y| y);
        let m = mean_baseline(&[a.clone(), b.clone()]).unwrap();
        for i in 0..9 {
            assert_eq!(m.values()[i], 0.5 * (a.values()[i] + b.values()[i]));
        }
    }

    #[test]
    fn permuting_solvers_permutes_weights() {
        let s = toy_samples(3, 5);
        let swapped: Vec<OperatorSample> = s
            .iter()
            .map(|x| OperatorSample::new(x.input.clone(), x.truth.clone(), alloc::vec![x.outputs[1].clone(), x.outputs[0].clone()]).unwrap())
            .collect();
        let cfg = OperatorFitConfig::default();
        let a = fit_operator_meva(&build_dataset(&s, 15, &mut rng::seeded(1)).unwrap(), &cfg).unwrap();
        let b = fit_operator_meva(&build_dataset(&swapped, 15, &mut rng::seeded(1)).unwrap(), &cfg).unwrap();
        let wa = a.weights_at(3, 2, &s[0].input, &s[0].outputs).unwrap();
        let wb = b.weights_at(3, 2, &swapped[0].input, &swapped[0].outputs).unwrap();
        assert!((wa.as_slice()[0] - wb.as_slice()[1]).abs() < 1e-9);
    }

    #[test]
    fn metric_is_order_invariant() {
        let v = [1e-3, 2e-5, 7e-9, 0.4];
        let mut w = v;
        w.reverse();
        let (a, b) = (geometric_mean_log10_mse(&v).unwrap(), geometric_mean_log10_mse(&w).unwrap());
        assert!((a - b).abs() < 1e-14);
    }
}
