//! Experiment runners. Each one reads its settings from a [`RunConfig`],
//! writes CSV tables (and optionally SVG plots and grid dumps) into the
//! output directory, and finishes with a `manifest` file that can be fed
//! back as a config to repeat the run.

use std::path::{Path, PathBuf};
use std::time::Instant;

use meva_core::operator::{
    burgers_data, evaluate_operator, laplace_data, BurgersExperimentConfig, LaplaceExperimentConfig,
    OperatorFitConfig, OperatorReport,
};
use meva_core::pathological::{pathological1, pathological2, Pathological1Config, Pathological2Config};
use meva_core::rng;
use meva_core::tabular::{run_tabular_experiment, synthetic_housing, TabularConfig, SYNTHETIC_COLUMNS};
use meva_core::theory::{nested_kriging_experiment, rate_experiment, NestedKrigingConfig, TheoremCase};

use crate::config::{Experiment, RunConfig};
use crate::error::{io_err, Result};
use crate::grid::{self, fmt_f64};
use crate::svg::{self, PlotKind};
use crate::table::{load_csv, write_rows, write_table};

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "MEVA_SEED";

/// Files written by a run and one-line headline results.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub headline: Vec<String>,
}

struct Ctx {
    out: PathBuf,
    plots: bool,
    dump: bool,
    seed: u64,
    outcome: RunOutcome,
}

impl Ctx {
    fn file(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.outcome.files.push(p.clone());
        p
    }

    fn plot(&mut self, csv: &Path, kind: PlotKind, name: &str) -> Result<()> {
        if self.plots {
            let p = self.file(name);
            svg::emit(csv, kind, &p)?;
        }
        Ok(())
    }

    fn note(&mut self, line: String) {
        self.outcome.headline.push(line);
    }
}

/// Runs the configured experiment.
pub fn run(cfg: &mut RunConfig) -> Result<RunOutcome> {
    let exp = cfg.experiment()?;
    let env_seed = std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok()).unwrap_or(0);
    let seed = cfg.seed("seed", env_seed);
    let out = cfg.path("out", &format!("results/{}", exp.name()));
    std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    let mut ctx = Ctx { out, plots: cfg.flag("plots"), dump: cfg.flag("dump_fields"), seed, outcome: RunOutcome::default() };
    let start = Instant::now();
    match exp {
        Experiment::Pathological1 => run_pathological1(cfg, &mut ctx)?,
        Experiment::Pathological2 => run_pathological2(cfg, &mut ctx)?,
        Experiment::Tabular => run_tabular(cfg, &mut ctx)?,
        Experiment::Laplace => run_laplace(cfg, &mut ctx)?,
        Experiment::Burgers => run_burgers(cfg, &mut ctx)?,
        Experiment::Theorem => run_theorem(cfg, &mut ctx)?,
        Experiment::NestedKriging => run_nested_kriging(cfg, &mut ctx)?,
    }
    let manifest = format!(
        "# meva {}\n# wall_time_s = {:.3}\n{}",
        env!("CARGO_PKG_VERSION"),
        start.elapsed().as_secs_f64(),
        cfg.resolved()
    );
    let p = ctx.file("manifest");
    std::fs::write(&p, manifest).map_err(io_err(&p))?;
    Ok(ctx.outcome)
}

fn key_values(path: &Path, rows: &[(&str, f64)]) -> Result<()> {
    write_table(path, &["key", "value"], rows.iter().map(|(k, v)| [k.to_string(), fmt_f64(*v)]))
}

fn run_pathological1(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<()> {
    let d = Pathological1Config::default();
    let p = Pathological1Config { grid: cfg.size("grid", d.grid), seed: ctx.seed, ..d };
    let rep = pathological1(&p)?;
    let curve = ctx.file("pathological1.csv");
    let rows: Vec<Vec<f64>> = rep.curve.iter().map(|c| vec![c.x, c.truth, c.good, c.meea, c.meva]).collect();
    write_rows(&curve, &["x", "truth", "good", "meea", "meva"], &rows)?;
    let [a_g, b_g, a_b, b_b] = rep.coefficients;
    let summary = ctx.file("pathological1_summary.csv");
    key_values(
        &summary,
        &[
            ("a_good", a_g),
            ("b_good", b_g),
            ("a_bad", a_b),
            ("b_bad", b_b),
            ("good_weight", rep.good_weight()),
            ("line_intercept", rep.line[0]),
            ("line_slope", rep.line[1]),
            ("line_gap", rep.line_gap),
            ("meea_train_mse", rep.meea_train_mse),
            ("meea_mse", rep.meea_mse),
            ("meva_mse", rep.meva_mse),
            ("good_mse", rep.good_mse),
        ],
    )?;
    ctx.note(format!("MEEA weight on good model {:.3e}; dense MSE meea {:.4} meva {:.4}", rep.good_weight(), rep.meea_mse, rep.meva_mse));
    Ok(())
}

fn run_pathological2(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<()> {
    let d = Pathological2Config::default();
    let p = Pathological2Config {
        n: cfg.size("n", d.n),
        grid: cfg.size("grid", d.grid),
        lengthscale: cfg.float("lengthscale", d.lengthscale),
        seed: ctx.seed,
        ..d
    };
    let rep = pathological2(&p)?;
    let curve = ctx.file("pathological2.csv");
    let rows: Vec<Vec<f64>> = rep
        .curve
        .iter()
        .map(|c| {
            let mut r = vec![c.x, c.truth, c.meea, c.meva];
            r.extend(c.meea_weights);
            r.extend(c.meva_weights);
            r
        })
        .collect();
    let header = ["x", "truth", "meea", "meva", "meea_w_good", "meea_w_bad", "meea_w_neg", "meva_w_good", "meva_w_bad", "meva_w_neg"];
    write_rows(&curve, &header, &rows)?;
    let summary = ctx.file("pathological2_summary.csv");
    key_values(
        &summary,
        &[
            ("meea_train_mse", rep.meea_train_mse),
            ("meea_test_mse", rep.meea_test_mse),
            ("meva_test_mse", rep.meva_test_mse),
            ("good_test_mse", rep.good_test_mse),
            ("meva_mean_good_weight", rep.meva_mean_good_weight),
            ("meea_mean_good_weight", rep.meea_mean_good_weight),
        ],
    )?;
    ctx.note(format!(
        "MEEA train {:.4} test {:.4}; good model test {:.4}; MEVA test {:.4}, mean good weight {:.3}",
        rep.meea_train_mse, rep.meea_test_mse, rep.good_test_mse, rep.meva_test_mse, rep.meva_mean_good_weight
    ));
    Ok(())
}

fn run_tabular(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<()> {
    let (data, target) = match cfg.text("data") {
        Some(p) => (PathBuf::from(p), cfg.text("target").unwrap_or_else(|| "target".into())),
        None => {
            let n = cfg.size("rows", 506);
            let p = ctx.file("synthetic.csv");
            let rows = synthetic_housing(&mut rng::stream(ctx.seed, 99), n);
            write_rows(&p, &SYNTHETIC_COLUMNS, &rows)?;
            (p, "target".to_string())
        }
    };
    let ds = load_csv(&data, &target)?;
    let d = TabularConfig::default();
    let tc = TabularConfig { n_splits: cfg.size("splits", d.n_splits), seed: ctx.seed, ..d };
    let rep = run_tabular_experiment(&ds, &tc)?;
    let main = ctx.file("tabular.csv");
    write_table(
        &main,
        &["split_seed", "method", "scope", "test_mse"],
        rep.rows.iter().map(|r| [r.split_seed.to_string(), r.method.clone(), r.scope.clone(), fmt_f64(r.test_mse)]),
    )?;
    let summary = ctx.file("tabular_summary.csv");
    write_table(
        &summary,
        &["method", "scope", "mean_mse", "std_mse"],
        rep.summary.iter().map(|m| [m.method.clone(), m.scope.clone(), fmt_f64(m.mean), fmt_f64(m.std)]),
    )?;
    let ratios = ctx.file("tabular_ratios.csv");
    key_values(&ratios, &[("r_train", rep.r_train), ("r_all", rep.r_all), ("dropped_rows", ds.dropped_rows() as f64)])?;
    ctx.plot(&summary, PlotKind::Bars, "tabular_bars.svg")?;
    ctx.note(format!("r_train {:.4}, r_all {:.4} over {} splits", rep.r_train, rep.r_all, tc.n_splits));
    Ok(())
}

fn operator_fit(cfg: &mut RunConfig, seed: u64) -> OperatorFitConfig {
    let d = OperatorFitConfig::default();
    OperatorFitConfig {
        reg: cfg.float("reg", d.reg),
        lengthscale_factor: cfg.float("lengthscale_factor", d.lengthscale_factor),
        seed,
        ..d
    }
}

fn write_operator(ctx: &mut Ctx, name: &str, rep: &OperatorReport) -> Result<()> {
    let main = ctx.file(&format!("{name}.csv"));
    write_table(
        &main,
        &["sample_id", "solver_id", "mse", "log10_mse"],
        rep.rows.iter().map(|r| [r.sample_id.to_string(), r.solver_id.clone(), fmt_f64(r.mse), fmt_f64(r.log10_mse)]),
    )?;
    let summary = ctx.file(&format!("{name}_summary.csv"));
    write_table(
        &summary,
        &["solver_id", "geomean_log10_mse"],
        rep.summary.iter().map(|(s, v)| [s.clone(), fmt_f64(*v)]),
    )?;
    let extra = ctx.file(&format!("{name}_counts.csv"));
    key_values(&extra, &[("n_test", rep.n_test as f64), ("worse_than_worst", rep.worse_than_worst as f64)])?;
    if ctx.dump {
        let dir = ctx.out.join("fields");
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for f in &rep.fields {
            let id = f.sample_id;
            let mut put = |tag: &str, g: &meva_core::pde::GridFunction| -> Result<()> {
                let p = dir.join(format!("sample{id}_{tag}.grid"));
                grid::write(&p, g)?;
                ctx.outcome.files.push(p);
                Ok(())
            };
            put("input", &f.sample.input)?;
            put("truth", &f.sample.truth)?;
            put("aggregate", &f.aggregate)?;
            for (s, w) in rep.solver_ids.iter().zip(&f.weights) {
                put(&format!("weight_{s}"), w)?;
            }
        }
    }
    ctx.plot(&main, PlotKind::Sorted, &format!("{name}_sorted.svg"))?;
    let (best, score) = rep.best_solver().unwrap_or(("none", f64::NAN));
    ctx.note(format!(
        "aggregate {:.3} vs best solver {best} {score:.3} (geometric-mean log10 MSE); worse than worst on {}/{}",
        rep.score("aggregate").unwrap_or(f64::NAN),
        rep.worse_than_worst,
        rep.n_test
    ));
    Ok(())
}

fn run_laplace(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<()> {
    let d = LaplaceExperimentConfig::default();
    let lc = LaplaceExperimentConfig {
        grid: cfg.size("grid", d.grid),
        n_train: cfg.size("n_train", d.n_train),
        n_test: cfg.size("n_test", d.n_test),
        subsample: cfg.size("subsample", d.subsample),
        n_colloc: cfg.size("n_colloc", d.n_colloc),
        gp_lengthscale: cfg.float("gp_lengthscale", d.gp_lengthscale),
        fit: operator_fit(cfg, ctx.seed),
        keep_fields: if ctx.dump { cfg.size("n_test", d.n_test) } else { 0 },
    };
    let data = laplace_data(&lc)?;
    let rep = evaluate_operator(data.solver_ids, &data.train, &data.test, lc.subsample, &lc.fit, lc.keep_fields)?;
    write_operator(ctx, "laplace", &rep)
}

fn run_burgers(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<()> {
    let d = BurgersExperimentConfig::default();
    let bc = BurgersExperimentConfig {
        nx: cfg.size("nx", d.nx),
        nt: cfg.size("nt", d.nt),
        n_train: cfg.size("n_train", d.n_train),
        n_test: cfg.size("n_test", d.n_test),
        subsample: cfg.size("subsample", d.subsample),
        reference_refine: cfg.size("refine", d.reference_refine),
        fit: operator_fit(cfg, ctx.seed),
        keep_fields: if ctx.dump { cfg.size("n_test", d.n_test) } else { 0 },
        ..d
    };
    let data = burgers_data(&bc)?;
    let rep = evaluate_operator(data.solver_ids, &data.train, &data.test, bc.subsample, &bc.fit, bc.keep_fields)?;
    write_operator(ctx, "burgers", &rep)
}

fn run_theorem(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<()> {
    let n = cfg.size("models", 3);
    let var_y = cfg.float("var_y", 1.0);
    let eps = cfg.float("eps", 0.1);
    let rho = cfg.float("rho", 0.6);
    let case_seed = cfg.seed("case_seed", 3);
    let trials = cfg.size("trials", 500);
    let default_ns: Vec<usize> = (0..11).map(|k| 50 << k).collect();
    let ns = cfg.sizes("ns", &default_ns);
    let case = TheoremCase::random(&mut rng::seeded(case_seed), n, var_y, eps, rho)?;
    let rep = rate_experiment(&case, &ns, trials, ctx.seed)?;
    let main = ctx.file("theorem.csv");
    write_table(
        &main,
        &["n", "excess_v_mean", "excess_v_se", "excess_e_mean", "excess_e_se", "scaled_loss_v_mean", "loss_star", "drops"],
        rep.rows.iter().map(|r| {
            [
                r.n.to_string(),
                fmt_f64(r.excess_v_mean),
                fmt_f64(r.excess_v_se),
                fmt_f64(r.excess_e_mean),
                fmt_f64(r.excess_e_se),
                fmt_f64(r.scaled_loss_v_mean),
                fmt_f64(rep.forms.loss_star),
                r.drops.to_string(),
            ]
        }),
    )?;
    let f = &rep.forms;
    let summary = ctx.file("theorem_summary.csv");
    key_values(
        &summary,
        &[
            ("slope_v", rep.slope_v),
            ("slope_e", rep.slope_e),
            ("s", f.s),
            ("t", f.t),
            ("u", f.u),
            ("v", f.v),
            ("mix_lambda", f.mix_lambda),
            ("loss_star", f.loss_star),
            ("loss_v", f.loss_v),
            ("warning", if rep.warning { 1.0 } else { 0.0 }),
        ],
    )?;
    ctx.plot(&main, PlotKind::Rate, "theorem_rate.svg")?;
    ctx.note(format!("slope MEVA {:.3}, MEEA {:.3}; t = {:.4}", rep.slope_v, rep.slope_e, f.t));
    Ok(())
}

fn run_nested_kriging(cfg: &mut RunConfig, ctx: &mut Ctx) -> Result<()> {
    let d = NestedKrigingConfig::default();
    let nc = NestedKrigingConfig {
        n_models: cfg.size("models", d.n_models),
        n_interior: cfg.size("n_interior", d.n_interior),
        n_boundary: cfg.size("n_boundary", d.n_boundary),
        lengthscale: cfg.float("lengthscale", d.lengthscale),
        grid: cfg.size("grid", d.grid),
        seed: ctx.seed,
    };
    let rep = nested_kriging_experiment(&nc)?;
    let main = ctx.file("nested_kriging.csv");
    let mut rows: Vec<[String; 2]> =
        rep.model_mse.iter().enumerate().map(|(i, m)| [format!("model{i}"), fmt_f64(*m)]).collect();
    rows.push(["uniform".into(), fmt_f64(rep.uniform_mse)]);
    rows.push(["aggregate".into(), fmt_f64(rep.aggregate_mse)]);
    write_table(&main, &["model", "mse"], rows)?;
    if ctx.dump {
        let dir = ctx.out.join("fields");
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (tag, g) in [("truth", &rep.truth), ("aggregate", &rep.result.aggregate), ("uniform", &rep.uniform)] {
            let p = dir.join(format!("{tag}.grid"));
            grid::write(&p, g)?;
            ctx.outcome.files.push(p);
        }
    }
    let best = rep.model_mse.iter().copied().fold(f64::INFINITY, f64::min);
    ctx.note(format!(
        "aggregate MSE {:.3e}, best model {best:.3e}, uniform {:.3e}, fallbacks {}",
        rep.aggregate_mse, rep.uniform_mse, rep.result.fallbacks
    ));
    Ok(())
}
