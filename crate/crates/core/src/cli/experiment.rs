//! Runs every (user, strategy) job and aggregates the results.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::checkpoint::Checkpoint;
use crate::clep::{self, ClepConfig, EpochLog, GeometryReport};
use crate::data::{self, FeatureTable, PreferenceSet, SplitSpec, Strategy};
use crate::metrics::{Metric, MetricReport};
use crate::numerics::mix_seed;
use crate::predictor::{self, PredictorConfig};
use crate::projection;
use crate::stats::{self, FriedmanResult, PairedSamples, WilcoxonResult};
use crate::synth;
use crate::tsv::{self, fmt_opt, fmt_real};
use crate::{Error, Result};

/// One user's data.
#[derive(Debug, Clone)]
pub struct UserData {
    pub user_id: String,
    pub features: FeatureTable,
    pub prefs: PreferenceSet,
}

fn user_index(name: &str) -> Option<usize> {
    name.strip_prefix("user_")?.parse().ok()
}

/// Reads every `user_<idx>/` directory, ordered by index.
pub fn load_cohort(dir: &Path) -> Result<Vec<UserData>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut users = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(idx) = user_index(&name) {
            if entry.path().is_dir() {
                users.push((idx, name, entry.path()));
            }
        }
    }
    if users.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no user_<idx> directories in {}",
            dir.display()
        )));
    }
    users.sort();
    users
        .into_iter()
        .map(|(_, name, path)| {
            let features = data::load_features(path.join("features.tsv"))?;
            let prefs = data::load_preferences(path.join("prefs.tsv"), name.clone())?;
            Ok(UserData {
                user_id: name,
                features,
                prefs,
            })
        })
        .collect()
}

pub fn users_from_synth(users: Vec<synth::SynthUser>) -> Vec<UserData> {
    users
        .into_iter()
        .map(|u| UserData {
            user_id: u.user_id,
            features: u.features,
            prefs: u.prefs,
        })
        .collect()
}

/// Everything one (user, strategy) job produces.
#[derive(Debug, Clone)]
pub struct JobOutput {
    pub user_id: String,
    pub strategy: Strategy,
    pub metrics: MetricReport,
    pub geometry: GeometryReport,
    pub clep_log: Vec<EpochLog>,
    pub predictor_log: Vec<EpochLog>,
    pub predictions_tsv: String,
    pub projection_tsv: String,
    pub checkpoints: Option<(Checkpoint, Checkpoint)>,
}

#[derive(Debug, Clone)]
pub struct JobFailure {
    pub user_id: String,
    pub strategy: Strategy,
    pub error: String,
}

/// Per-user seeds shared by all strategies so that strategy is the only
/// difference between a user's jobs.
#[derive(Debug, Clone, Copy)]
pub struct UserSeeds {
    pub split: u64,
    pub clep: u64,
    pub predictor: u64,
}

impl UserSeeds {
    pub fn derive(experiment_seed: u64, user_index: usize) -> Self {
        let user = mix_seed(experiment_seed, user_index as u64);
        Self {
            split: mix_seed(user, 0),
            clep: mix_seed(user, 1),
            predictor: mix_seed(user, 2),
        }
    }
}

pub fn run_job(
    user: &UserData,
    split: &SplitSpec,
    strategy: Strategy,
    seeds: UserSeeds,
    cfg: &ExperimentConfig,
) -> Result<JobOutput> {
    let clep_cfg = ClepConfig {
        strategy,
        seed: seeds.clep,
        ..cfg.clep.clone()
    };
    let pred_cfg = PredictorConfig {
        seed: seeds.predictor,
        ..cfg.predictor.clone()
    };
    let model = clep::train_clep(&user.features, &user.prefs, split, &clep_cfg)?;
    let head = predictor::train_predictor(&model, &user.features, &user.prefs, split, &pred_cfg)?;

    let probs = predictor::predict_proba(&head, &model, &user.features, &split.test_ids)?;
    let labels = predictor::classify(&probs, pred_cfg.threshold);
    let truth = user.prefs.subset(&split.test_ids)?;
    let truth_map = truth.iter().map(|(k, v)| (k.to_owned(), v)).collect();
    let metrics = MetricReport::evaluate(&user.user_id, strategy, &probs, &labels, &truth_map)?;

    let all_ids: Vec<&str> = user.prefs.ids().collect();
    let embeddings = clep::embed_songs(&model, &user.features, &all_ids)?;
    let geometry = clep::geometry_report(&embeddings, &user.prefs)?;
    let (_, points) = projection::fit_and_project(&embeddings, &user.prefs)?;

    Ok(JobOutput {
        user_id: user.user_id.clone(),
        strategy,
        metrics,
        geometry,
        clep_log: model.training_log.clone(),
        predictor_log: head.training_log.clone(),
        predictions_tsv: predictor::predictions_tsv(&probs, &labels),
        projection_tsv: projection::plot_tsv(&points),
        checkpoints: cfg
            .checkpoints
            .then(|| (model.to_checkpoint(), head.to_checkpoint())),
    })
}

#[derive(Debug, Clone)]
pub struct MedianRow {
    pub metric: Metric,
    pub strategy: Strategy,
    pub median: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct FriedmanRow {
    pub metric: Metric,
    pub result: FriedmanResult,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct WilcoxonRow {
    pub metric: Metric,
    pub a: Strategy,
    pub b: Strategy,
    pub result: WilcoxonResult,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub splits: Vec<(String, String)>,
    pub jobs: Vec<JobOutput>,
    pub failures: Vec<JobFailure>,
    pub medians: Vec<MedianRow>,
    pub friedman: Vec<FriedmanRow>,
    pub wilcoxon: Vec<WilcoxonRow>,
    /// Deterministic notes: skipped tests, dropped users, pair balance.
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn metric_rows(&self) -> Vec<MetricReport> {
        self.jobs.iter().map(|j| j.metrics.clone()).collect()
    }

    pub fn median(&self, metric: Metric, strategy: Strategy) -> Option<f64> {
        self.medians
            .iter()
            .find(|m| m.metric == metric && m.strategy == strategy)
            .and_then(|m| m.median)
    }

    pub fn friedman_for(&self, metric: Metric) -> Option<&FriedmanResult> {
        self.friedman
            .iter()
            .find(|f| f.metric == metric)
            .map(|f| &f.result)
    }

    pub fn geometry(&self, strategy: Strategy) -> Vec<(&str, &GeometryReport)> {
        self.jobs
            .iter()
            .filter(|j| j.strategy == strategy)
            .map(|j| (j.user_id.as_str(), &j.geometry))
            .collect()
    }
}

/// Medians, Friedman per metric, and Wilcoxon post-hocs for metrics whose
/// Friedman p is below 0.05.
pub fn aggregate(
    reports: &[MetricReport],
    strategies: &[Strategy],
    notes: &mut Vec<String>,
) -> Result<(Vec<MedianRow>, Vec<FriedmanRow>, Vec<WilcoxonRow>)> {
    let mut medians = Vec::new();
    for metric in Metric::ALL {
        for &s in strategies {
            let vals: Vec<f64> = reports
                .iter()
                .filter(|r| r.strategy == s)
                .filter_map(|r| r.get(metric))
                .collect();
            medians.push(MedianRow {
                metric,
                strategy: s,
                median: stats::median(&vals),
                n: vals.len(),
            });
        }
    }

    let mut friedman = Vec::new();
    let mut wilcoxon = Vec::new();
    if strategies.len() < 2 {
        notes.push(format!(
            "friedman skipped: {} strategy given, at least 2 required",
            strategies.len()
        ));
        return Ok((medians, friedman, wilcoxon));
    }
    for metric in Metric::ALL {
        let (samples, dropped) = PairedSamples::from_reports(metric, reports, strategies)?;
        if !dropped.is_empty() {
            notes.push(format!(
                "{}: dropped {} user(s) with absent values: {}",
                metric.name(),
                dropped.len(),
                dropped.join(",")
            ));
        }
        let result = match stats::friedman_test(&samples) {
            Ok(r) => r,
            Err(e) => {
                notes.push(format!("{}: friedman skipped: {e}", metric.name()));
                continue;
            }
        };
        if result.p_value < 0.05 {
            for i in 0..strategies.len() {
                for j in i + 1..strategies.len() {
                    let w = stats::wilcoxon_signed_rank(&samples.column(i), &samples.column(j))?;
                    wilcoxon.push(WilcoxonRow {
                        metric,
                        a: strategies[i],
                        b: strategies[j],
                        result: w,
                    });
                }
            }
        } else {
            notes.push(format!(
                "{}: post-hoc skipped, friedman p = {} >= 0.05",
                metric.name(),
                fmt_real(result.p_value)
            ));
        }
        friedman.push(FriedmanRow {
            metric,
            result,
            dropped,
        });
    }
    Ok((medians, friedman, wilcoxon))
}

pub fn run_experiment(cfg: &ExperimentConfig, users: &[UserData]) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut notes = Vec::new();
    let mut splits = Vec::new();
    let mut jobs = Vec::new();
    let mut setup_failures = Vec::new();
    for (idx, user) in users.iter().enumerate() {
        let seeds = UserSeeds::derive(cfg.seed, idx);
        let prepared = user
            .prefs
            .validate(&user.features)
            .and_then(|_| data::split_train_test(&user.prefs, seeds.split));
        match prepared {
            Ok(split) => {
                splits.push((user.user_id.clone(), split.manifest_tsv(&user.prefs)));
                for &s in &cfg.strategies {
                    jobs.push((idx, split.clone(), s, seeds));
                }
            }
            Err(e) => {
                for &s in &cfg.strategies {
                    setup_failures.push(JobFailure {
                        user_id: user.user_id.clone(),
                        strategy: s,
                        error: e.to_string(),
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", cfg.parallel)))?;
    let results: Vec<(usize, Strategy, Result<JobOutput>)> = pool.install(|| {
        jobs.par_iter()
            .map(|(idx, split, s, seeds)| (*idx, *s, run_job(&users[*idx], split, *s, *seeds, cfg)))
            .collect()
    });

    let mut outputs = Vec::new();
    let mut failures = setup_failures;
    for (idx, strategy, r) in results {
        match r {
            Ok(out) => outputs.push(out),
            Err(e) => {
                log::warn!("{} {strategy} failed: {e}", users[idx].user_id);
                failures.push(JobFailure {
                    user_id: users[idx].user_id.clone(),
                    strategy,
                    error: e.to_string(),
                });
            }
        }
    }
    failures.sort_by(|a, b| (&a.user_id, a.strategy).cmp(&(&b.user_id, b.strategy)));

    for out in &outputs {
        if let Some(last) = out.clep_log.last() {
            notes.push(format!(
                "{} {}: {} of {} training pairs labeled y=1 per epoch",
                out.user_id, out.strategy, last.positives, last.examples
            ));
        }
    }

    let rows: Vec<MetricReport> = outputs.iter().map(|o| o.metrics.clone()).collect();
    let (medians, friedman, wilcoxon) = aggregate(&rows, &cfg.strategies, &mut notes)?;
    Ok(ExperimentReport {
        config: cfg.clone(),
        splits,
        jobs: outputs,
        failures,
        medians,
        friedman,
        wilcoxon,
        notes,
    })
}

fn log_tsv(clep_log: &[EpochLog], pred_log: &[EpochLog]) -> String {
    let mut out =
        String::from("stage\tepoch\ttrain_loss\tvalidation_loss\tlr\tpositives\texamples\n");
    for (stage, log) in [("clep", clep_log), ("predictor", pred_log)] {
        for e in log {
            let _ = writeln!(
                out,
                "{stage}\t{}\t{}\t{}\t{}\t{}\t{}",
                e.epoch,
                fmt_real(e.train_loss),
                fmt_opt(e.validation_loss),
                fmt_real(e.lr),
                e.positives,
                e.examples
            );
        }
    }
    out
}

pub const METRICS_FILE: &str = "metrics.tsv";
pub const MEDIANS_FILE: &str = "medians.tsv";
pub const FRIEDMAN_FILE: &str = "friedman.tsv";
pub const WILCOXON_FILE: &str = "wilcoxon.tsv";
pub const GEOMETRY_FILE: &str = "geometry.tsv";
pub const FAILURES_FILE: &str = "failures.tsv";

pub fn metrics_tsv(rows: &[MetricReport]) -> String {
    let mut out = format!("{}\n", MetricReport::TSV_HEADER);
    for r in rows {
        out.push_str(&r.tsv_row());
        out.push('\n');
    }
    out
}

pub fn medians_tsv(rows: &[MedianRow]) -> String {
    let mut out = String::from("metric\tstrategy\tmedian\tn\n");
    for m in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            m.metric.name(),
            m.strategy,
            fmt_opt(m.median),
            m.n
        );
    }
    out
}

/// Writes the whole report tree under `out`.
pub fn write_report(report: &ExperimentReport, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    tsv::write(
        &out.join("run.meta"),
        &format!(
            "version = {}\n{}",
            env!("CARGO_PKG_VERSION"),
            report.config.to_meta()
        ),
    )?;
    tsv::write(&out.join(METRICS_FILE), &metrics_tsv(&report.metric_rows()))?;
    tsv::write(&out.join(MEDIANS_FILE), &medians_tsv(&report.medians))?;

    let mut fr = String::from("metric\tchi_square\tdf\tp_value\tn_subjects\tdropped\n");
    for f in &report.friedman {
        let _ = writeln!(
            fr,
            "{}\t{}\t{}\t{}\t{}\t{}",
            f.metric.name(),
            fmt_real(f.result.chi_square),
            f.result.df,
            fmt_real(f.result.p_value),
            f.result.n_subjects,
            f.dropped.join(",")
        );
    }
    tsv::write(&out.join(FRIEDMAN_FILE), &fr)?;

    let mut wx =
        String::from("metric\tstrategy_a\tstrategy_b\tw_plus\tn_effective\tp_value\tmethod\n");
    for w in &report.wilcoxon {
        let _ = writeln!(
            wx,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            w.metric.name(),
            w.a,
            w.b,
            fmt_real(w.result.w_plus),
            w.result.n_effective,
            fmt_real(w.result.p_value),
            w.result.method
        );
    }
    tsv::write(&out.join(WILCOXON_FILE), &wx)?;

    let mut geo = String::from(
        "user_id\tstrategy\tmean_intra_like\tmean_intra_dislike\tmean_inter\tlike_pairs\tdislike_pairs\tinter_pairs\n",
    );
    for j in &report.jobs {
        let g = &j.geometry;
        let _ = writeln!(
            geo,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            j.user_id,
            j.strategy,
            fmt_opt(g.mean_intra_like),
            fmt_opt(g.mean_intra_dislike),
            fmt_opt(g.mean_inter),
            g.like_pairs,
            g.dislike_pairs,
            g.inter_pairs
        );
    }
    tsv::write(&out.join(GEOMETRY_FILE), &geo)?;

    let mut fail = String::from("user_id\tstrategy\terror\n");
    for f in &report.failures {
        let _ = writeln!(
            fail,
            "{}\t{}\t{}",
            f.user_id,
            f.strategy,
            f.error.replace(['\t', '\n'], " ")
        );
    }
    tsv::write(&out.join(FAILURES_FILE), &fail)?;

    let mut notes = report.notes.join("\n");
    notes.push('\n');
    tsv::write(&out.join("run.log"), &notes)?;

    for (user, manifest) in &report.splits {
        tsv::write(&out.join("splits").join(format!("{user}.tsv")), manifest)?;
    }
    for j in &report.jobs {
        let stem = format!("{}_{}", j.user_id, j.strategy);
        tsv::write(
            &out.join("logs").join(format!("{stem}.tsv")),
            &log_tsv(&j.clep_log, &j.predictor_log),
        )?;
        tsv::write(
            &out.join("predictions").join(format!("{stem}.tsv")),
            &j.predictions_tsv,
        )?;
        tsv::write(
            &out.join("projections").join(format!("{stem}.tsv")),
            &j.projection_tsv,
        )?;
        if let Some((enc, head)) = &j.checkpoints {
            enc.save(out.join("models").join(format!("{stem}.clep.ckpt")))?;
            head.save(out.join("models").join(format!("{stem}.predictor.ckpt")))?;
        }
    }
    Ok(())
}
