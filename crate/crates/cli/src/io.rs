//! File input and output for the CLI.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use leafdeg::fitting::DegreeHistogram;

use crate::error::{CliError, Result};

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Columns of a headered CSV: `(header, rows)`.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(CliError::Input(format!("{}: empty file", path.display())));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok((header, rows))
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, v: &str) -> Result<T> {
    v.parse().map_err(|_| {
        CliError::Input(format!(
            "{}: row {line}: `{v}` is not a number",
            path.display()
        ))
    })
}

/// Histogram CSV with header `degree,count` or `degree,probability`.
/// Degrees absent from the file count as zero.
pub fn read_histogram(path: &Path, c_m: u32) -> Result<DegreeHistogram> {
    let (header, rows) = read_table(path)?;
    let value_col = match header.as_slice() {
        [d, v] if d == "degree" && (v == "count" || v == "probability") => v.clone(),
        _ => {
            return Err(CliError::Input(format!(
                "{}: expected header `degree,count` or `degree,probability`, got `{}`",
                path.display(),
                header.join(",")
            )))
        }
    };
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    let mut values = vec![0.0; c_m as usize + 1];
    let mut seen = vec![false; values.len()];
    for (n, row) in rows.iter().enumerate() {
        let d: usize = parse_num(path, n + 2, &row[0])?;
        let v: f64 = parse_num(path, n + 2, &row[1])?;
        if d > c_m as usize {
            return Err(CliError::Input(format!(
                "{}: degree {d} exceeds c_m={c_m}",
                path.display()
            )));
        }
        if seen[d] {
            return Err(CliError::Input(format!(
                "{}: degree {d} listed twice",
                path.display()
            )));
        }
        seen[d] = true;
        values[d] = v;
    }
    let hist = if value_col == "count" {
        DegreeHistogram::from_counts(values)
    } else {
        DegreeHistogram::from_probabilities(values)
    };
    Ok(hist?)
}

/// Any CSV with a `probability` column, keyed by its first column.
pub fn read_distribution(path: &Path) -> Result<BTreeMap<u64, f64>> {
    let (header, rows) = read_table(path)?;
    let col = header
        .iter()
        .position(|h| h == "probability")
        .filter(|&c| c > 0)
        .ok_or_else(|| CliError::Input(format!("{}: no `probability` column", path.display())))?;
    let mut out = BTreeMap::new();
    for (n, row) in rows.iter().enumerate() {
        let key: u64 = parse_num(path, n + 2, &row[0])?;
        let p: f64 = parse_num(path, n + 2, &row[col])?;
        if out.insert(key, p).is_some() {
            return Err(CliError::Input(format!(
                "{}: index {key} listed twice",
                path.display()
            )));
        }
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}
