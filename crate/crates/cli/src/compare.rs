//! Column-wise comparison of two CSV outputs against absolute tolerances.

use std::path::Path;

use crate::CliError;

struct Csv {
    headers: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn read_csv(path: &Path) -> Result<Csv, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let headers: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != headers.len() {
            return Err(CliError::Config(format!(
                "{} line {}: {} fields, header has {}",
                path.display(),
                lineno + 2,
                fields.len(),
                headers.len()
            )));
        }
        for (col, field) in fields.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                CliError::Config(format!(
                    "{} line {}: {:?} is not numeric",
                    path.display(),
                    lineno + 2,
                    field
                ))
            })?;
            columns[col].push(value);
        }
    }
    Ok(Csv { headers, columns })
}

/// Per-column `COLUMN=TOL` overrides of the default tolerance.
fn parse_col_tols(specs: &[String]) -> Result<Vec<(String, f64)>, CliError> {
    specs
        .iter()
        .map(|spec| match spec.split_once('=') {
            Some((col, tol)) => {
                let tol: f64 = tol.trim().parse().map_err(|_| {
                    CliError::Config(format!("--col-tol {spec:?}: tolerance is not numeric"))
                })?;
                Ok((col.trim().to_string(), tol))
            }
            None => Err(CliError::Config(format!(
                "--col-tol expects COLUMN=TOL, got {spec:?}"
            ))),
        })
        .collect()
}

/// Compares `candidate` against `baseline`. Schema mismatches (headers or
/// row counts) are config errors; tolerance violations are reported per
/// column and fail the comparison.
pub fn compare(
    baseline: &Path,
    candidate: &Path,
    default_tol: f64,
    col_tol_specs: &[String],
) -> Result<(), CliError> {
    let base = read_csv(baseline)?;
    let cand = read_csv(candidate)?;
    let col_tols = parse_col_tols(col_tol_specs)?;
    if base.headers != cand.headers {
        return Err(CliError::Config(format!(
            "header mismatch: baseline has [{}], candidate has [{}]",
            base.headers.join(","),
            cand.headers.join(",")
        )));
    }
    let (rows_base, rows_cand) = (base.columns[0].len(), cand.columns[0].len());
    if rows_base != rows_cand {
        return Err(CliError::Config(format!(
            "row count mismatch: baseline has {rows_base}, candidate has {rows_cand}"
        )));
    }
    for (col, _) in &col_tols {
        if !base.headers.iter().any(|h| h == col) {
            return Err(CliError::Config(format!(
                "--col-tol names unknown column {col:?}"
            )));
        }
    }

    let mut worst_failure: Option<String> = None;
    for (i, header) in base.headers.iter().enumerate() {
        let tol = col_tols
            .iter()
            .rev()
            .find(|(col, _)| col == header)
            .map(|&(_, tol)| tol)
            .unwrap_or(default_tol);
        let deviation = base.columns[i]
            .iter()
            .zip(&cand.columns[i])
            .map(|(a, b)| {
                let d = (a - b).abs();
                if d.is_nan() {
                    f64::INFINITY
                } else {
                    d
                }
            })
            .fold(0.0f64, f64::max);
        let ok = deviation <= tol;
        println!(
            "column {header}: max deviation {deviation:.3e} (tol {tol:.3e}) {}",
            if ok { "OK" } else { "FAIL" }
        );
        if !ok && worst_failure.is_none() {
            worst_failure = Some(header.clone());
        }
    }
    match worst_failure {
        None => Ok(()),
        Some(column) => Err(CliError::CompareFailed { column }),
    }
}
