//! Command-line front end: `gen`, `run`, `report` and `project`.

pub mod config;
pub mod experiment;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{parse_strategies, ExperimentConfig};
pub use experiment::{
    aggregate, load_cohort, run_experiment, run_job, users_from_synth, write_report,
    ExperimentReport, JobFailure, JobOutput, UserData, UserSeeds,
};
pub use report::{render_report, write_markdown};

use crate::checkpoint::Checkpoint;
use crate::clep::{self, ClepModel};
use crate::{data, projection, synth, tsv, Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "clep",
    version,
    about = "Preference-aware contrastive embedding experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed` (or `synth.seed` for `gen`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort.
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Train and evaluate every (user, strategy) job.
    Run {
        #[command(flatten)]
        common: Common,
        /// Cohort directory; a synthetic cohort is generated in memory when omitted.
        #[arg(long)]
        cohort: Option<PathBuf>,
        /// Comma-separated subset of pn,p,n.
        #[arg(long)]
        strategies: Option<String>,
        /// Concurrent jobs.
        #[arg(long)]
        parallel: Option<usize>,
        /// Also write model checkpoints.
        #[arg(long)]
        checkpoints: bool,
    },
    /// Render `report.md` for a finished run directory given by `--out`.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Project songs through a saved encoder onto its top two principal axes.
    Project {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        prefs: PathBuf,
        /// Output TSV file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    match &common.config {
        Some(p) => ExperimentConfig::from_file(p),
        None => Ok(ExperimentConfig::default()),
    }
}

pub fn cmd_gen(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.synth.validate()?;
    let users = synth::generate_cohort(&cfg.synth)?;
    synth::write_cohort(&cfg.synth, &users, out)
}

pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    let users = match &cfg.cohort {
        Some(dir) => load_cohort(dir)?,
        None => users_from_synth(synth::generate_cohort(&cfg.synth)?),
    };
    let report = run_experiment(cfg, &users)?;
    write_report(&report, out)?;
    Ok(report)
}

pub fn cmd_project(checkpoint: &Path, features: &Path, prefs: &Path, out: &Path) -> Result<()> {
    let model = ClepModel::from_checkpoint(&Checkpoint::load(checkpoint)?)?;
    let features = data::load_features(features)?;
    let prefs = data::load_preferences(prefs, "user")?;
    prefs.validate(&features)?;
    let ids: Vec<&str> = prefs.ids().collect();
    let emb = clep::embed_songs(&model, &features, &ids)?;
    let (p, rows) = projection::fit_and_project(&emb, &prefs)?;
    if p.rank_deficient {
        log::warn!("embeddings span fewer than two dimensions");
    }
    if p.not_converged {
        log::warn!("power iteration hit the iteration cap");
    }
    tsv::write(out, &projection::plot_tsv(&rows))
}

/// Executes one parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common } => {
            let mut cfg = load_config(&common)?;
            if let Some(s) = common.seed {
                cfg.synth.seed = s;
            }
            cmd_gen(&cfg, &common.out)
        }
        Command::Run {
            common,
            cohort,
            strategies,
            parallel,
            checkpoints,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if cohort.is_some() {
                cfg.cohort = cohort;
            }
            if let Some(s) = strategies {
                cfg.strategies = parse_strategies(&s)?;
            }
            if let Some(n) = parallel {
                cfg.parallel = n;
            }
            cfg.checkpoints |= checkpoints;
            cmd_run(&cfg, &common.out).map(|_| ())
        }
        Command::Report { out } => {
            let md = write_markdown(&out)?;
            print!("{md}");
            Ok(())
        }
        Command::Project {
            checkpoint,
            features,
            prefs,
            out,
        } => cmd_project(&checkpoint, &features, &prefs, &out),
    }
}

/// One-line diagnostic: `error<TAB>kind<TAB>message`.
pub fn error_line(e: &Error) -> String {
    format!(
        "error\t{}\t{}",
        e.kind(),
        e.to_string().replace(['\t', '\n'], " ")
    )
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error\tusage\t{first}");
            return 2;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            1
        }
    }
}
