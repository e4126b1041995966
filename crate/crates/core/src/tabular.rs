//! Tabular regression benchmark: datasets, base learners and the
//! train / validation / test aggregation protocol.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::kernels::{self, KernelFamily, KernelSpec, KrrModel};
use crate::linalg::{self, Matrix, Vector};
use crate::rng;
use crate::train::{self, ErrorSamples};

/// Regression table with named feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    features: Matrix,
    targets: Vec<f64>,
    names: Vec<String>,
    target_name: String,
    dropped_rows: usize,
}

impl TabularDataset {
    pub fn new(features: Matrix, targets: Vec<f64>, names: Vec<String>, target_name: &str) -> Result<Self> {
        if features.nrows() != targets.len() {
            return Err(invalid("feature rows and targets differ in length"));
        }
        if names.len() != features.ncols() {
            return Err(invalid("one name per feature column is required"));
        }
        if features.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite value in dataset"));
        }
        Ok(TabularDataset { features, targets, names, target_name: target_name.to_string(), dropped_rows: 0 })
    }

    /// Builds a dataset from parsed records. Rows with a missing or
    /// non-finite cell are dropped and counted; feature columns that are
    /// constant over the retained rows are removed.
    pub fn from_records(header: &[String], records: &[Vec<Option<f64>>], target: &str) -> Result<Self> {
        let t = header
            .iter()
            .position(|h| h == target)
            .ok_or_else(|| invalid(alloc::format!("missing target column `{target}`")))?;
        let mut dropped = 0;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(records.len());
        for r in records {
            if r.len() != header.len() {
                return Err(invalid("record length does not match the header"));
            }
            match r.iter().map(|c| c.filter(|v| v.is_finite())).collect::<Option<Vec<f64>>>() {
                Some(v) => rows.push(v),
                None => dropped += 1,
            }
        }
        let keep: Vec<usize> = (0..header.len())
            .filter(|&c| c != t)
            .filter(|&c| rows.iter().any(|r| r[c] != rows[0][c]))
            .collect();
        let features = Matrix::from_fn(rows.len(), keep.len(), |i, j| rows[i][keep[j]]);
        let targets = rows.iter().map(|r| r[t]).collect();
        let names = keep.iter().map(|&c| header[c].clone()).collect();
        let mut ds = Self::new(features, targets, names, target)?;
        ds.dropped_rows = dropped;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> TabularDataset {
        let features = Matrix::from_fn(idx.len(), self.dim(), |i, j| self.features[(idx[i], j)]);
        TabularDataset {
            features,
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            names: self.names.clone(),
            target_name: self.target_name.clone(),
            dropped_rows: 0,
        }
    }

    fn concat(&self, other: &TabularDataset) -> TabularDataset {
        let (a, b) = (self.len(), other.len());
        let features =
            Matrix::from_fn(a + b, self.dim(), |i, j| if i < a { self.features[(i, j)] } else { other.features[(i - a, j)] });
        let mut targets = self.targets.clone();
        targets.extend_from_slice(&other.targets);
        TabularDataset { features, targets, names: self.names.clone(), target_name: self.target_name.clone(), dropped_rows: 0 }
    }
}

/// Per-column mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Statistics of the rows of `x`; zero spreads are replaced by one.
    pub fn fit(x: &Matrix) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(invalid("cannot standardize an empty table"));
        }
        let mean: Vec<f64> = (0..x.ncols()).map(|j| x.column(j).sum() / n as f64).collect();
        let std = (0..x.ncols())
            .map(|j| {
                let var = x.column(j).iter().map(|v| (v - mean[j]) * (v - mean[j])).sum::<f64>() / n as f64;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn apply_matrix(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[j]) / self.std[j])
    }
}

/// Random disjoint train / validation / test split. Train and validation
/// sizes are `round(N r)`; the test split takes the rest.
pub fn split<R: Rng + ?Sized>(
    ds: &TabularDataset,
    ratios: [f64; 3],
    rng: &mut R,
) -> Result<(TabularDataset, TabularDataset, TabularDataset)> {
    if ratios.iter().any(|r| !(*r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("split ratios must be nonnegative and sum to one"));
    }
    let n = ds.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let a = ((n as f64 * ratios[0]).round() as usize).min(n);
    let b = ((n as f64 * ratios[1]).round() as usize).min(n - a);
    Ok((ds.subset(&idx[..a]), ds.subset(&idx[a..a + b]), ds.subset(&idx[a + b..])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    Ridge,
    Knn,
    Gbt,
    Krr,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [LearnerKind::Ridge, LearnerKind::Knn, LearnerKind::Gbt, LearnerKind::Krr];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Ridge => "ridge",
            LearnerKind::Knn => "knn",
            LearnerKind::Gbt => "gbt",
            LearnerKind::Krr => "krr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub ridge_reg: f64,
    pub knn_k: usize,
    pub gbt_rounds: usize,
    pub gbt_shrinkage: f64,
    pub gbt_depth: usize,
    pub krr_reg: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { ridge_reg: 1.0, knn_k: 5, gbt_rounds: 200, gbt_shrinkage: 0.05, gbt_depth: 3, krr_reg: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Regression tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Greedy least-squares tree of depth at most `depth`. A node is split
    /// on the best threshold between distinct feature values as long as the
    /// split does not increase the squared error.
    pub fn fit(x: &Matrix, y: &[f64], depth: usize) -> Self {
        let mut t = RegressionTree { nodes: Vec::new() };
        let idx: Vec<usize> = (0..y.len()).collect();
        t.grow(x, y, idx, depth);
        t
    }

    fn grow(&mut self, x: &Matrix, y: &[f64], idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let n = idx.len() as f64;
        let sum: f64 = idx.iter().map(|&i| y[i]).sum();
        let mean = if idx.is_empty() { 0.0 } else { sum / n };
        self.nodes.push(Node::Leaf(mean));
        let sse: f64 = idx.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum();
        if depth == 0 || idx.len() < 2 || sse <= 0.0 {
            return id;
        }
        // (sse, feature, threshold)
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.clone();
        for j in 0..x.ncols() {
            order.sort_by(|&a, &b| x[(a, j)].total_cmp(&x[(b, j)]).then(a.cmp(&b)));
            let (mut ls, mut lq) = (0.0, 0.0);
            let tq: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
            for p in 0..order.len() - 1 {
                let v = y[order[p]];
                ls += v;
                lq += v * v;
                let (a, b) = (x[(order[p], j)], x[(order[p + 1], j)]);
                if a == b {
                    continue;
                }
                let nl = (p + 1) as f64;
                let nr = n - nl;
                let rs = sum - ls;
                let cost = (lq - ls * ls / nl) + ((tq - lq) - rs * rs / nr);
                if best.map_or(true, |(c, _, _)| cost < c) {
                    best = Some((cost, j, 0.5 * (a + b)));
                }
            }
        }
        let Some((cost, feature, threshold)) = best else {
            return id;
        };
        if cost > sse * (1.0 + 1e-12) {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[(i, feature)] <= threshold);
        let left = self.grow(x, y, l, depth - 1);
        let right = self.grow(x, y, r, depth - 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf(v) => return *v,
                Node::Split { feature, threshold, left, right } => {
                    k = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// A fitted base learner.
#[derive(Debug, Clone)]
pub enum BaseLearner {
    /// `y = intercept + beta^T z` on standardized features `z`, with the
    /// intercept left unpenalized.
    Ridge { scaler: Standardizer, beta: Vec<f64>, intercept: f64 },
    Knn { scaler: Standardizer, xs: Vec<Vec<f64>>, ys: Vec<f64>, k: usize },
    Gbt { base: f64, trees: Vec<RegressionTree>, shrinkage: f64 },
    Krr { scaler: Standardizer, model: KrrModel },
}

impl BaseLearner {
    pub fn fit(kind: LearnerKind, cfg: &LearnerConfig, x: &Matrix, y: &[f64]) -> Result<Self> {
        let n = y.len();
        if n == 0 || x.nrows() != n {
            return Err(invalid("cannot fit a learner on an empty split"));
        }
        match kind {
            LearnerKind::Ridge => {
                let scaler = Standardizer::fit(x)?;
                let z = scaler.apply_matrix(x);
                let ybar = y.iter().sum::<f64>() / n as f64;
                let yc = Vector::from_iterator(n, y.iter().map(|v| v - ybar));
                let mut g = z.transpose() * &z;
                for i in 0..g.nrows() {
                    g[(i, i)] += cfg.ridge_reg;
                }
                let beta = linalg::spd_solve(&g, &(z.transpose() * yc))?;
                // Column means of z are zero, so the intercept is the target mean.
                Ok(BaseLearner::Ridge { scaler, beta: beta.iter().copied().collect(), intercept: ybar })
            }
            LearnerKind::Knn => {
                if cfg.knn_k == 0 {
                    return Err(invalid("k must be positive"));
                }
                let scaler = Standardizer::fit(x)?;
                let xs = (0..n).map(|i| scaler.apply(&row_of(x, i))).collect();
                Ok(BaseLearner::Knn { scaler, xs, ys: y.to_vec(), k: cfg.knn_k.min(n) })
            }
            LearnerKind::Gbt => {
                let base = y.iter().sum::<f64>() / n as f64;
                let mut pred = alloc::vec![base; n];
                let mut trees = Vec::with_capacity(cfg.gbt_rounds);
                for _ in 0..cfg.gbt_rounds {
                    let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
                    let t = RegressionTree::fit(x, &resid, cfg.gbt_depth);
                    for (i, p) in pred.iter_mut().enumerate() {
                        *p += cfg.gbt_shrinkage * t.predict(&row_of(x, i));
                    }
                    trees.push(t);
                }
                Ok(BaseLearner::Gbt { base, trees, shrinkage: cfg.gbt_shrinkage })
            }
            LearnerKind::Krr => {
                let scaler = Standardizer::fit(x)?;
                let xs: Vec<Vec<f64>> = (0..n).map(|i| scaler.apply(&row_of(x, i))).collect();
                let kernel = KernelSpec::with_median_lengthscale(KernelFamily::Matern32, &xs)?;
                let ys = Matrix::from_column_slice(n, 1, y);
                let model = kernels::krr_fit_centered(&xs, &ys, &kernel, cfg.krr_reg)?;
                Ok(BaseLearner::Krr { scaler, model })
            }
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            BaseLearner::Ridge { .. } => LearnerKind::Ridge,
            BaseLearner::Knn { .. } => LearnerKind::Knn,
            BaseLearner::Gbt { .. } => LearnerKind::Gbt,
            BaseLearner::Krr { .. } => LearnerKind::Krr,
        }
    }

    /// Ridge coefficients and intercept in the original feature units.
    pub fn linear_coefficients(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            BaseLearner::Ridge { scaler, beta, intercept } => {
                let b: Vec<f64> = beta.iter().zip(&scaler.std).map(|(b, s)| b / s).collect();
                let c = intercept - b.iter().zip(&scaler.mean).map(|(b, m)| b * m).sum::<f64>();
                Some((b, c))
            }
            _ => None,
        }
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        match self {
            BaseLearner::Ridge { scaler, beta, intercept } => {
                let z = scaler.apply(row);
                Ok(intercept + z.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>())
            }
            BaseLearner::Knn { scaler, xs, ys, k } => {
                let z = scaler.apply(row);
                let mut d: Vec<(f64, usize)> = xs
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (x.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                Ok(d[..*k].iter().map(|(_, i)| ys[*i]).sum::<f64>() / *k as f64)
            }
            BaseLearner::Gbt { base, trees, shrinkage } => {
                Ok(base + shrinkage * trees.iter().map(|t| t.predict(row)).sum::<f64>())
            }
            BaseLearner::Krr { scaler, model } => Ok(model.predict(&scaler.apply(row))?[0]),
        }
    }

    pub fn predict_all(&self, x: &Matrix) -> Result<Vec<f64>> {
        (0..x.nrows()).map(|i| self.predict(&row_of(x, i))).collect()
    }
}

fn row_of(x: &Matrix, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

fn mse(p: &[f64], y: &[f64]) -> f64 {
    p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len().max(1) as f64
}

/// Basis in which the error variances are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorBasis {
    Identity,
    /// Eigenvectors of the empirical validation error covariance.
    Principal,
}

/// Settings of the aggregators fitted on the validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorConfig {
    pub basis: ErrorBasis,
    pub meva_reg: f64,
    /// Gauss-Newton iterations on the covariance loss after the sharp-loss
    /// fit; zero keeps the sharp-loss solution.
    pub meva_gn_iters: usize,
    pub meea_reg: f64,
    pub direct_reg: f64,
    pub direct_steps: usize,
    pub direct_lr: f64,
}

impl Default for AggregatorConfig {
    fn default() -> Self {
        AggregatorConfig { basis: ErrorBasis::Identity, meva_reg: 1e-1, meva_gn_iters: 10, meea_reg: 1e-2, direct_reg: 1e-2, direct_steps: 300, direct_lr: 0.05 }
    }
}

/// Test MSE of each aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateScores {
    pub meva: f64,
    pub meea: f64,
    pub direct: f64,
    pub uniform: f64,
}

/// Rows are the eigenvectors of `E^T E / N`, so that `P e` has uncorrelated
/// components on the sample.
pub fn principal_basis(errors: &Matrix) -> Matrix {
    let n = errors.nrows().max(1) as f64;
    let c = errors.transpose() * errors / n;
    c.symmetric_eigen().eigenvectors.transpose()
}

/// Fits the aggregators on validation predictions (one column per learner)
/// with the kernel `Matern(M(x), M(y))` whose lengthscale is the median
/// distance between validation prediction vectors, and scores them on test.
pub fn aggregate_scores(
    val_preds: &Matrix,
    val_y: &[f64],
    test_preds: &Matrix,
    test_y: &[f64],
    cfg: &AggregatorConfig,
) -> Result<AggregateScores> {
    let n = val_preds.ncols();
    if n < 2 {
        return Err(invalid("at least two base learners are required"));
    }
    if test_preds.ncols() != n {
        return Err(invalid("validation and test predictions disagree on the number of learners"));
    }
    let inputs: Vec<Vec<f64>> = (0..val_preds.nrows()).map(|i| row_of(val_preds, i)).collect();
    let s = ErrorSamples::new(inputs.clone(), val_preds.clone(), val_y.to_vec())?;
    let kernel = KernelSpec::with_median_lengthscale(KernelFamily::Matern32, &inputs)?;
    let basis = match cfg.basis {
        ErrorBasis::Identity => None,
        ErrorBasis::Principal => Some(principal_basis(s.errors())),
    };
    let meva = match cfg.meva_gn_iters {
        0 => train::fit_meva_sharp(&s, &kernel, cfg.meva_reg, basis.as_ref())?,
        it => train::fit_meva_gn(&s, &kernel, cfg.meva_reg, it, basis.as_ref())?,
    };
    let meea = train::fit_meea(&s, &kernel, cfg.meea_reg)?;
    let direct = train::fit_direct_mva(&s, &kernel, cfg.direct_reg, cfg.direct_steps, cfg.direct_lr)?;
    let m = test_preds.nrows();
    let (mut pv, mut pe, mut pd, mut pu) = (Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m));
    for i in 0..m {
        let x = row_of(test_preds, i);
        pv.push(meva.predict(&x, &x)?.1);
        pe.push(meea.predict(&x, &x)?);
        pd.push(direct.predict(&x, &x)?.1);
        pu.push(linalg::mean(&x));
    }
    Ok(AggregateScores { meva: mse(&pv, test_y), meea: mse(&pe, test_y), direct: mse(&pd, test_y), uniform: mse(&pu, test_y) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularConfig {
    pub n_splits: usize,
    pub ratios: [f64; 3],
    pub learners: Vec<LearnerKind>,
    pub learner: LearnerConfig,
    pub aggregator: AggregatorConfig,
    pub seed: u64,
}

impl Default for TabularConfig {
    fn default() -> Self {
        TabularConfig {
            n_splits: 20,
            ratios: [0.6, 0.2, 0.2],
            learners: LearnerKind::ALL.to_vec(),
            learner: LearnerConfig::default(),
            aggregator: AggregatorConfig::default(),
            seed: 0,
        }
    }
}

/// One line of the report: `scope` is `train`, `train+val` or `aggregate`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularRow {
    pub split_seed: u64,
    pub method: String,
    pub scope: String,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub scope: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularReport {
    pub rows: Vec<TabularRow>,
    pub summary: Vec<MethodSummary>,
    /// `1 - MSE(meva) / MSE(best learner trained on train)`, on mean MSEs.
    pub r_train: f64,
    /// Same against the best learner of either scope.
    pub r_all: f64,
}

impl TabularReport {
    pub fn mean_mse(&self, method: &str, scope: &str) -> Option<f64> {
        self.summary.iter().find(|m| m.method == method && m.scope == scope).map(|m| m.mean)
    }
}

/// Runs the protocol on `n_splits` random splits; split `i` is drawn from
/// the generator seeded with `seed + i`.
pub fn run_tabular_experiment(ds: &TabularDataset, cfg: &TabularConfig) -> Result<TabularReport> {
    if cfg.learners.len() < 2 {
        return Err(invalid("at least two base learners are required"));
    }
    if cfg.n_splits == 0 {
        return Err(invalid("need at least one split"));
    }
    let mut rows = Vec::new();
    for i in 0..cfg.n_splits {
        let split_seed = cfg.seed.wrapping_add(i as u64);
        let ctx = |e: Error| Error::FitFailed(alloc::format!("split {split_seed}: {e}"));
        let mut r = rng::seeded(split_seed);
        let (tr, va, te) = split(ds, cfg.ratios, &mut r).map_err(ctx)?;
        let trva = tr.concat(&va);
        let nl = cfg.learners.len();
        let mut val_preds = Matrix::zeros(va.len(), nl);
        let mut test_preds = Matrix::zeros(te.len(), nl);
        for (k, kind) in cfg.learners.iter().enumerate() {
            let m = BaseLearner::fit(*kind, &cfg.learner, tr.features(), tr.targets()).map_err(ctx)?;
            let pv = m.predict_all(va.features()).map_err(ctx)?;
            let pt = m.predict_all(te.features()).map_err(ctx)?;
            val_preds.set_column(k, &Vector::from_vec(pv));
            test_preds.set_column(k, &Vector::from_vec(pt.clone()));
            rows.push(TabularRow { split_seed, method: kind.name().into(), scope: "train".into(), test_mse: mse(&pt, te.targets()) });
            let full = BaseLearner::fit(*kind, &cfg.learner, trva.features(), trva.targets()).map_err(ctx)?;
            let pf = full.predict_all(te.features()).map_err(ctx)?;
            rows.push(TabularRow {
                split_seed,
                method: kind.name().into(),
                scope: "train+val".into(),
                test_mse: mse(&pf, te.targets()),
            });
        }
        let a = aggregate_scores(&val_preds, va.targets(), &test_preds, te.targets(), &cfg.aggregator).map_err(ctx)?;
        for (name, v) in [("meva", a.meva), ("meea", a.meea), ("direct_mva", a.direct), ("uniform", a.uniform)] {
            rows.push(TabularRow { split_seed, method: name.into(), scope: "aggregate".into(), test_mse: v });
        }
    }
    let mut summary: Vec<MethodSummary> = Vec::new();
    for row in &rows {
        if summary.iter().any(|m| m.method == row.method && m.scope == row.scope) {
            continue;
        }
        let v: Vec<f64> =
            rows.iter().filter(|r| r.method == row.method && r.scope == row.scope).map(|r| r.test_mse).collect();
        let mean = linalg::mean(&v);
        let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64).sqrt();
        summary.push(MethodSummary { method: row.method.clone(), scope: row.scope.clone(), mean, std });
    }
    let meva = summary.iter().find(|m| m.method == "meva").map(|m| m.mean).unwrap_or(f64::NAN);
    let best_of = |scopes: &[&str]| {
        summary.iter().filter(|m| scopes.contains(&m.scope.as_str())).map(|m| m.mean).fold(f64::INFINITY, f64::min)
    };
    let r_train = 1.0 - meva / best_of(&["train"]);
    let r_all = 1.0 - meva / best_of(&["train", "train+val"]);
    Ok(TabularReport { rows, summary, r_train, r_all })
}

/// Column names of [`synthetic_housing`], target last.
pub const SYNTHETIC_COLUMNS: [&str; 7] = ["x0", "x1", "x2", "x3", "x4", "x5", "target"];

/// Synthetic regression table with six correlated Gaussian features, one of
/// them pure noise. The target mixes a linear trend, a smooth periodic term
/// and a threshold with heteroscedastic noise, so that no base learner in
/// [`LearnerKind::ALL`] dominates the others. Rows are returned with the
/// target in the last column.
pub fn synthetic_housing<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        let mut row: Vec<f64> = (0..6).map(|_| 0.5 * z + 0.85 * rng.sample::<f64, _>(StandardNormal)).collect();
        let noise: f64 = rng.sample(StandardNormal);
        let y = 22.0 + 3.0 * row[0] - 2.0 * row[1]
            + 2.0 * (row[2] + row[3]).sin()
            + if row[4] > 0.0 { 2.0 } else { 0.0 }
            + (1.5 + 0.5 * row[0].abs()) * noise;
        row.push(y);
        out.push(row);
    }
    out
}

/// [`synthetic_housing`] as a dataset.
pub fn synthetic_dataset<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<TabularDataset> {
    let header: Vec<String> = SYNTHETIC_COLUMNS.iter().map(|s| s.to_string()).collect();
    let records: Vec<Vec<Option<f64>>> = synthetic_housing(rng, n).into_iter().map(|r| r.into_iter().map(Some).collect()).collect();
    TabularDataset::from_records(&header, &records, "target")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| alloc::format!("x{i}")).collect()
    }

    #[test]
    fn records_and_missing_rows() {
        let header: Vec<String> = ["a", "b", "y"].iter().map(|s| s.to_string()).collect();
        let recs = alloc::vec![
            alloc::vec![Some(1.0), Some(2.0), Some(3.0)],
            alloc::vec![Some(4.0), None, Some(6.0)],
            alloc::vec![Some(7.0), Some(8.0), Some(9.0)],
            alloc::vec![Some(0.5), Some(1.5), Some(2.5)],
        ];
        let ds = TabularDataset::from_records(&header, &recs, "y").unwrap();
        assert_eq!(ds.dropped_rows(), 1);
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.row(1), alloc::vec![7.0, 8.0]);
        assert_eq!(ds.targets(), &[3.0, 9.0, 2.5]);
        assert!(TabularDataset::from_records(&header, &recs, "zzz").is_err());
    }

    #[test]
    fn split_covers_and_is_seeded() {
        let ds = TabularDataset::new(Matrix::from_fn(37, 2, |i, j| (i * 3 + j) as f64), (0..37).map(|i| i as f64).collect(), names(2), "y")
            .unwrap();
        let (a, b, c) = split(&ds, [0.6, 0.2, 0.2], &mut rng::seeded(4)).unwrap();
        assert!((a.len() as f64 - 37.0 * 0.6).abs() <= 1.0);
        assert!((b.len() as f64 - 37.0 * 0.2).abs() <= 1.0);
        assert!((c.len() as f64 - 37.0 * 0.2).abs() <= 1.0);
        let mut all: Vec<f64> = a.targets().iter().chain(b.targets()).chain(c.targets()).copied().collect();
        all.sort_by(|x, y| x.total_cmp(y));
        assert_eq!(all, (0..37).map(|i| i as f64).collect::<Vec<_>>());
        let (a2, _, _) = split(&ds, [0.6, 0.2, 0.2], &mut rng::seeded(4)).unwrap();
        assert_eq!(a, a2);
        let (full, v, t) = split(&ds, [1.0, 0.0, 0.0], &mut rng::seeded(1)).unwrap();
        assert_eq!((full.len(), v.len(), t.len()), (37, 0, 0));
        assert!(split(&ds, [0.5, 0.2, 0.2], &mut rng::seeded(1)).is_err());
    }

    #[test]
    fn standardizer_on_train() {
        let x = Matrix::from_fn(50, 3, |i, j| ((i * 7 + j * 13) % 11) as f64 * (j + 1) as f64);
        let s = Standardizer::fit(&x).unwrap();
        let z = s.apply_matrix(&x);
        for j in 0..3 {
            let m = z.column(j).mean();
            let sd = (z.column(j).iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 50.0).sqrt();
            assert!(m.abs() <= 1e-10 && (sd - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn ridge_recovers_linear_data() {
        let x = Matrix::from_fn(40, 3, |i, j| ((i * (j + 2)) % 9) as f64 + 0.1 * j as f64 * i as f64);
        let y: Vec<f64> = (0..40).map(|i| 1.5 + 2.0 * x[(i, 0)] - 0.5 * x[(i, 1)] + 3.0 * x[(i, 2)]).collect();
        let cfg = LearnerConfig { ridge_reg: 0.0, ..Default::default() };
        let m = BaseLearner::fit(LearnerKind::Ridge, &cfg, &x, &y).unwrap();
        let (b, c) = m.linear_coefficients().unwrap();
        for (got, want) in b.iter().zip([2.0, -0.5, 3.0]) {
            assert!((got - want).abs() < 1e-8);
        }
        assert!((c - 1.5).abs() < 1e-8);
    }

    #[test]
    fn knn_one_returns_own_target() {
        let x = Matrix::from_fn(20, 2, |i, j| (i as f64).powi(j as i32 + 1));
        let y: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let cfg = LearnerConfig { knn_k: 1, ..Default::default() };
        let m = BaseLearner::fit(LearnerKind::Knn, &cfg, &x, &y).unwrap();
        for i in 0..20 {
            assert_eq!(m.predict(&row_of(&x, i)).unwrap(), y[i]);
        }
    }

    #[test]
    fn gbt_descends_and_solves_xor() {
        let x = Matrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let cfg = LearnerConfig { gbt_rounds: 50, ..Default::default() };
        let m = BaseLearner::fit(LearnerKind::Gbt, &cfg, &x, &y).unwrap();
        assert!(mse(&m.predict_all(&x).unwrap(), &y) < 0.01);

        let mut r = rng::seeded(3);
        let ds = synthetic_dataset(&mut r, 120).unwrap();
        let mut last = f64::INFINITY;
        for rounds in [0, 5, 20, 60] {
            let cfg = LearnerConfig { gbt_rounds: rounds, ..Default::default() };
            let m = BaseLearner::fit(LearnerKind::Gbt, &cfg, ds.features(), ds.targets()).unwrap();
            let e = mse(&m.predict_all(ds.features()).unwrap(), ds.targets());
            assert!(e <= last + 1e-12);
            last = e;
        }
    }

    #[test]
    fn planted_perfect_learner_dominates() {
        let mut r = rng::seeded(11);
        let nv = 80;
        let nt = 60;
        let mk = |n: usize, r: &mut rand_chacha::ChaCha8Rng| {
            let y: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
            let p = Matrix::from_fn(n, 3, |i, k| match k {
                0 => y[i],
                1 => y[i] + 0.5 * (3.0 * y[i]).sin(),
                _ => 0.3 * y[i],
            });
            (p, y)
        };
        let (pv, yv) = mk(nv, &mut r);
        let (pt, yt) = mk(nt, &mut r);
        let s = aggregate_scores(&pv, &yv, &pt, &yt, &AggregatorConfig::default()).unwrap();
        assert!(s.meva <= 1e-6, "{}", s.meva);
    }

    #[test]
    fn fit_on_empty_split_fails() {
        let x = Matrix::zeros(0, 2);
        for k in LearnerKind::ALL {
            assert!(BaseLearner::fit(k, &LearnerConfig::default(), &x, &[]).is_err());
        }
    }
}
