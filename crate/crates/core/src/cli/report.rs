//! Renders a finished run directory as markdown.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;

use super::experiment::{metrics_tsv, FRIEDMAN_FILE, MEDIANS_FILE, METRICS_FILE, WILCOXON_FILE};
use crate::data::Strategy;
use crate::metrics::{Metric, MetricReport};
use crate::stats::{median, significance_stars};
use crate::tsv::{self, fmt_opt, parse_opt, TsvFile};
use crate::{Error, Result};

pub const REPORT_FILE: &str = "report.md";

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_expect(path: &Path, header: &str) -> Result<TsvFile> {
    let t = tsv::read(path)?;
    if t.header.join("\t") != header {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{}`", header.replace('\t', ",")),
        ));
    }
    Ok(t)
}

fn cell<'a>(path: &Path, line: usize, cells: &'a [String], n: usize) -> Result<&'a [String]> {
    if cells.len() != n {
        return Err(parse_err(
            path,
            line,
            format!("expected {n} columns, found {}", cells.len()),
        ));
    }
    Ok(cells)
}

fn num<T: std::str::FromStr>(path: &Path, line: usize, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| parse_err(path, line, format!("`{raw}` is not a number")))
}

fn metric(path: &Path, line: usize, raw: &str) -> Result<Metric> {
    Metric::from_name(raw).ok_or_else(|| parse_err(path, line, format!("unknown metric `{raw}`")))
}

fn strategy(path: &Path, line: usize, raw: &str) -> Result<Strategy> {
    raw.parse()
        .map_err(|e: Error| parse_err(path, line, e.to_string()))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricReport>> {
    let t = read_expect(path, MetricReport::TSV_HEADER)?;
    t.rows
        .iter()
        .map(|(line, cells)| {
            MetricReport::parse_tsv_row(cells).map_err(|m| parse_err(path, *line, m))
        })
        .collect()
}

struct FriedmanLine {
    chi_square: f64,
    df: usize,
    p_value: f64,
    n_subjects: usize,
}

struct WilcoxonLine {
    metric: Metric,
    a: Strategy,
    b: Strategy,
    w_plus: String,
    n_effective: usize,
    p_value: f64,
    method: String,
}

/// Markdown for the run in `dir`. Fails if medians.tsv disagrees with the
/// medians recomputed from metrics.tsv.
pub fn render_report(dir: &Path) -> Result<String> {
    let metrics_path = dir.join(METRICS_FILE);
    let rows = read_metrics(&metrics_path)?;
    if metrics_tsv(&rows)
        != std::fs::read_to_string(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?
    {
        return Err(parse_err(&metrics_path, 1, "file is not in canonical form"));
    }

    let mut strategies: Vec<Strategy> = Vec::new();
    let medians_path = dir.join(MEDIANS_FILE);
    let med = read_expect(&medians_path, "metric\tstrategy\tmedian\tn")?;
    let mut stored: IndexMap<(Metric, Strategy), Option<f64>> = IndexMap::new();
    for (line, cells) in &med.rows {
        let c = cell(&medians_path, *line, cells, 4)?;
        let m = metric(&medians_path, *line, &c[0])?;
        let s = strategy(&medians_path, *line, &c[1])?;
        let v = parse_opt(&c[2]).map_err(|e| parse_err(&medians_path, *line, e))?;
        if !strategies.contains(&s) {
            strategies.push(s);
        }
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.strategy == s)
            .filter_map(|r| r.get(m))
            .collect();
        let recomputed = median(&vals);
        if fmt_opt(recomputed) != fmt_opt(v) {
            return Err(parse_err(
                &medians_path,
                *line,
                format!(
                    "stored median {} for {} {s} differs from recomputed {}",
                    fmt_opt(v),
                    m.name(),
                    fmt_opt(recomputed)
                ),
            ));
        }
        stored.insert((m, s), v);
    }

    let friedman_path = dir.join(FRIEDMAN_FILE);
    let fr = read_expect(
        &friedman_path,
        "metric\tchi_square\tdf\tp_value\tn_subjects\tdropped",
    )?;
    let mut friedman: IndexMap<Metric, FriedmanLine> = IndexMap::new();
    for (line, cells) in &fr.rows {
        let c = cell(&friedman_path, *line, cells, 6)?;
        friedman.insert(
            metric(&friedman_path, *line, &c[0])?,
            FriedmanLine {
                chi_square: num(&friedman_path, *line, &c[1])?,
                df: num(&friedman_path, *line, &c[2])?,
                p_value: num(&friedman_path, *line, &c[3])?,
                n_subjects: num(&friedman_path, *line, &c[4])?,
            },
        );
    }

    let wilcoxon_path = dir.join(WILCOXON_FILE);
    let wx = read_expect(
        &wilcoxon_path,
        "metric\tstrategy_a\tstrategy_b\tw_plus\tn_effective\tp_value\tmethod",
    )?;
    let mut wilcoxon = Vec::new();
    for (line, cells) in &wx.rows {
        let c = cell(&wilcoxon_path, *line, cells, 7)?;
        wilcoxon.push(WilcoxonLine {
            metric: metric(&wilcoxon_path, *line, &c[0])?,
            a: strategy(&wilcoxon_path, *line, &c[1])?,
            b: strategy(&wilcoxon_path, *line, &c[2])?,
            w_plus: c[3].clone(),
            n_effective: num(&wilcoxon_path, *line, &c[4])?,
            p_value: num(&wilcoxon_path, *line, &c[5])?,
            method: c[6].clone(),
        });
    }

    let users = {
        let mut u: Vec<&str> = rows.iter().map(|r| r.user_id.as_str()).collect();
        u.sort();
        u.dedup();
        u.len()
    };
    let mut out = String::from("# Experiment report\n\n");
    let _ = writeln!(out, "{} metric rows from {users} users.\n", rows.len());

    out.push_str("## Summary\n\n| Metric |");
    for s in &strategies {
        let _ = write!(out, " {} |", label(*s));
    }
    out.push_str(" χ²(df) | p |\n|---|");
    for _ in &strategies {
        out.push_str("---|");
    }
    out.push_str("---|---|\n");
    for m in Metric::ALL {
        let _ = write!(out, "| {} |", m.name());
        for &s in &strategies {
            let _ = write!(
                out,
                " {} |",
                fmt_cell(stored.get(&(m, s)).copied().flatten())
            );
        }
        match friedman.get(&m) {
            Some(f) => {
                let _ = writeln!(
                    out,
                    " {:.3}({}) | {}{} |",
                    f.chi_square,
                    f.df,
                    fmt_p(f.p_value),
                    significance_stars(f.p_value)
                );
            }
            None => out.push_str(" n/a | n/a |\n"),
        }
    }
    out.push_str("\nSignificance: *** p < 0.001, ** p < 0.01, * p < 0.05.\n");

    for m in Metric::ALL {
        let _ = writeln!(out, "\n## {}\n", m.name());
        out.push_str("| Strategy | Median |\n|---|---|\n");
        for &s in &strategies {
            let _ = writeln!(
                out,
                "| {} | {} |",
                label(s),
                fmt_cell(stored.get(&(m, s)).copied().flatten())
            );
        }
        match friedman.get(&m) {
            Some(f) => {
                let _ = writeln!(
                    out,
                    "\nFriedman χ²({}) = {:.3}, p = {}{} over {} users.",
                    f.df,
                    f.chi_square,
                    fmt_p(f.p_value),
                    significance_stars(f.p_value),
                    f.n_subjects
                );
            }
            None => out.push_str("\nFriedman test not run.\n"),
        }
    }

    out.push_str("\n## Wilcoxon signed-rank post-hoc\n\n");
    if wilcoxon.is_empty() {
        out.push_str("No metric reached Friedman p < 0.05.\n");
    } else {
        out.push_str("| Metric | Pair | W+ | n | p | Method |\n|---|---|---|---|---|---|\n");
        for w in &wilcoxon {
            let _ = writeln!(
                out,
                "| {} | {} vs {} | {} | {} | {}{} | {} |",
                w.metric.name(),
                label(w.a),
                label(w.b),
                w.w_plus,
                w.n_effective,
                fmt_p(w.p_value),
                significance_stars(w.p_value),
                w.method
            );
        }
    }
    Ok(out)
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

fn fmt_p(p: f64) -> String {
    if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

/// Renders and writes `report.md` into `dir`.
pub fn write_markdown(dir: &Path) -> Result<String> {
    let md = render_report(dir)?;
    tsv::write(&dir.join(REPORT_FILE), &md)?;
    Ok(md)
}

fn label(s: Strategy) -> String {
    format!("CLEP-{}", s.name())
}
