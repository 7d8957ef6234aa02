//! Small tab-separated helpers shared by the file formats.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub(crate) struct TsvFile {
    pub header: Vec<String>,
    /// `(1-based line number, cells)` for every non-empty body line.
    pub rows: Vec<(usize, Vec<String>)>,
}

pub(crate) fn read(path: &Path) -> Result<TsvFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => split(h),
        None => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let rows = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, split(l)))
        .collect();
    Ok(TsvFile { header, rows })
}

fn split(line: &str) -> Vec<String> {
    line.trim_end_matches('\r')
        .split('\t')
        .map(str::to_owned)
        .collect()
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Shortest round-trip formatting; scientific notation outside `[1e-4, 1e6)`.
pub(crate) fn fmt_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

pub(crate) fn parse_opt(cell: &str) -> std::result::Result<Option<f64>, String> {
    if cell.is_empty() {
        Ok(None)
    } else {
        cell.parse::<f64>()
            .map(Some)
            .map_err(|_| format!("`{cell}` is not a number"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_real_round_trips() {
        for x in [
            0.0,
            1.0,
            -2.5,
            1e-7,
            3.25e-300,
            123456789.0,
            0.1 + 0.2,
            -0.0001,
        ] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_real(0.75), "0.75");
        assert_eq!(fmt_real(2.74e-6), "2.74e-6");
    }
}
