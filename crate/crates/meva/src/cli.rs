use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::Result;
use crate::experiments;
use crate::svg::{self, PlotKind};

#[derive(Debug, Parser)]
#[command(name = "meva", version, about = "Pointwise model aggregation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its tables into the output directory.
    Run(RunArgs),
    /// Render a result CSV as SVG.
    Plot {
        csv: PathBuf,
        /// sorted, bars or rate.
        #[arg(long)]
        kind: String,
        /// Defaults to the CSV path with an `.svg` extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// pathological1, pathological2, tabular, laplace, burgers, theorem or nested-kriging.
    pub experiment: String,
    /// `key = value` file applied before the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Defaults to $MEVA_SEED, then 0.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub plots: bool,
    #[arg(long)]
    pub dump_fields: bool,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub n_train: Option<String>,
    #[arg(long)]
    pub n_test: Option<String>,
    #[arg(long)]
    pub subsample: Option<String>,
    #[arg(long)]
    pub n_colloc: Option<String>,
    #[arg(long)]
    pub nx: Option<String>,
    #[arg(long)]
    pub nt: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long = "Ns")]
    pub ns: Option<String>,
    #[arg(long)]
    pub splits: Option<String>,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub models: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub reg: Option<String>,
    /// Any other config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl RunArgs {
    /// File settings first, then flags.
    pub fn to_config(&self) -> Result<RunConfig> {
        let mut c = RunConfig::new();
        if let Some(p) = &self.config {
            c.merge_file(p)?;
        }
        c.set("experiment", &self.experiment)?;
        let pairs = [
            ("seed", &self.seed),
            ("out", &self.out),
            ("grid", &self.grid),
            ("n_train", &self.n_train),
            ("n_test", &self.n_test),
            ("subsample", &self.subsample),
            ("n_colloc", &self.n_colloc),
            ("nx", &self.nx),
            ("nt", &self.nt),
            ("trials", &self.trials),
            ("ns", &self.ns),
            ("splits", &self.splits),
            ("data", &self.data),
            ("target", &self.target),
            ("models", &self.models),
            ("eps", &self.eps),
            ("rho", &self.rho),
            ("reg", &self.reg),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                c.set(k, v)?;
            }
        }
        if self.plots {
            c.set("plots", "true")?;
        }
        if self.dump_fields {
            c.set("dump_fields", "true")?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| crate::error::CliError::InvalidConfig(format!("`--set {kv}`: expected KEY=VALUE")))?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }
}

/// Runs a parsed command line, printing headline results to stdout.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let mut cfg = args.to_config()?;
            let outcome = experiments::run(&mut cfg)?;
            for line in &outcome.headline {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Plot { csv, kind, out } => {
            let kind: PlotKind = kind.parse()?;
            let out = out.unwrap_or_else(|| csv.with_extension("svg"));
            svg::emit(&csv, kind, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
