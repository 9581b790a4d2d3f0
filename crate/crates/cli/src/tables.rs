//! CSV emission and parsing for the pipeline's plain-text artifacts.
//!
//! - Floats are written with the shortest representation that parses back
//!   to the same bits, so identical runs produce byte-identical files.
//! - Wall-clock numbers never enter a CSV; timing lives in JSON sidecars.

use std::path::Path;

use anyhow::{bail, Context};

use lesrom_core::fom::StepRecord;
use lesrom_core::postproc::{CoefficientSeries, ErrorSeries};

/// Shortest round-trip decimal form.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Write one CSV file with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("cannot write `{}`", path.display()))?;
    Ok(())
}

/// Read one CSV file into its header and string cells.
pub fn read_csv(path: &Path) -> anyhow::Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read `{}`", path.display()))?;
    let mut lines = text.lines();
    let header = match lines.next() {
        Some(h) => h.split(',').map(str::to_string).collect(),
        None => bail!("`{}` is empty", path.display()),
    };
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}

fn parse_f64(cell: &str, path: &Path) -> anyhow::Result<f64> {
    cell.parse()
        .with_context(|| format!("bad number `{cell}` in `{}`", path.display()))
}

/// Per-step record of the full-order run:
/// `t, c_d, c_l, c_d_tangent, c_l_normal, max_u, continuity`.
pub fn write_steps_csv(path: &Path, records: &[StepRecord]) -> anyhow::Result<()> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                fmt(r.t),
                fmt(r.coefficients.cd),
                fmt(r.coefficients.cl),
                fmt(r.coefficients.cd_tangent),
                fmt(r.coefficients.cl_normal),
                fmt(r.max_u),
                fmt(r.continuity),
            ]
        })
        .collect();
    write_csv(
        path,
        &["t", "c_d", "c_l", "c_d_tangent", "c_l_normal", "max_u", "continuity"],
        &rows,
    )
}

/// Rebuild the coefficient series recorded by `write_steps_csv`.
pub fn read_steps_series(path: &Path) -> anyhow::Result<CoefficientSeries> {
    let (header, rows) = read_csv(path)?;
    if header.len() < 5 || header[0] != "t" {
        bail!("`{}` is not a step record file", path.display());
    }
    let mut series = CoefficientSeries::default();
    for row in rows {
        series.times.push(parse_f64(&row[0], path)?);
        series.cd.push(parse_f64(&row[1], path)?);
        series.cl.push(parse_f64(&row[2], path)?);
        series.cd_tangent.push(parse_f64(&row[3], path)?);
        series.cl_normal.push(parse_f64(&row[4], path)?);
    }
    Ok(series)
}

/// Coefficient history of a reduced run, same layout as the step record's
/// coefficient columns.
pub fn write_coefficients_csv(path: &Path, series: &CoefficientSeries) -> anyhow::Result<()> {
    let rows: Vec<Vec<String>> = (0..series.len())
        .map(|i| {
            vec![
                fmt(series.times[i]),
                fmt(series.cd[i]),
                fmt(series.cl[i]),
                fmt(series.cd_tangent[i]),
                fmt(series.cl_normal[i]),
            ]
        })
        .collect();
    write_csv(
        path,
        &["t", "c_d", "c_l", "c_d_tangent", "c_l_normal"],
        &rows,
    )
}

/// One POD family's spectrum: `k, eigenvalue, cumulative`.
pub fn write_spectrum_csv(
    path: &Path,
    eigenvalues: &[f64],
    cumulative: &[f64],
) -> anyhow::Result<()> {
    let rows: Vec<Vec<String>> = eigenvalues
        .iter()
        .zip(cumulative)
        .enumerate()
        .map(|(k, (l, c))| vec![(k + 1).to_string(), fmt(*l), fmt(*c)])
        .collect();
    write_csv(path, &["k", "eigenvalue", "cumulative"], &rows)
}

/// The cumulative column of a spectrum file.
pub fn read_spectrum_cumulative(path: &Path) -> anyhow::Result<Vec<f64>> {
    let (header, rows) = read_csv(path)?;
    if header != ["k", "eigenvalue", "cumulative"] {
        bail!("`{}` is not a spectrum file", path.display());
    }
    rows.iter().map(|r| parse_f64(&r[2], path)).collect()
}

/// Cumulative-energy table over the six snapshot families, one row per
/// truncation level 1..=4; levels past a spectrum's end repeat its final
/// fraction.
pub fn write_energy_table(path: &Path, columns: &[(&str, &[f64])]) -> anyhow::Result<()> {
    let mut header = vec!["n_modes"];
    header.extend(columns.iter().map(|(name, _)| *name));
    let rows: Vec<Vec<String>> = (1..=4usize)
        .map(|k| {
            let mut row = vec![k.to_string()];
            for (name, cumulative) in columns {
                if cumulative.is_empty() {
                    bail!("spectrum `{name}` is empty");
                }
                let idx = k.min(cumulative.len());
                row.push(fmt(cumulative[idx - 1]));
            }
            Ok(row)
        })
        .collect::<anyhow::Result<_>>()?;
    write_csv(path, &header, &rows)
}

/// Per-sample relative errors of one reduced run, all four fields:
/// `t, e_v, e_u, e_q, e_q_bar, abs_v, abs_u, abs_q, abs_q_bar`. The `abs_*`
/// flags mark entries reported as absolute errors because the reference
/// norm vanished.
pub fn write_error_series_csv(path: &Path, series: &[&ErrorSeries; 4]) -> anyhow::Result<()> {
    let n = series[0].times.len();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![fmt(series[0].times[i])];
        for s in series {
            row.push(fmt(s.errors[i]));
        }
        for s in series {
            row.push(if s.absolute[i] { "1" } else { "0" }.to_string());
        }
        rows.push(row);
    }
    write_csv(
        path,
        &["t", "e_v", "e_u", "e_q", "e_q_bar", "abs_v", "abs_u", "abs_q", "abs_q_bar"],
        &rows,
    )
}

/// One mode's worth of error-table rows: `mode, field, min, avg, max,
/// samples, diverged_at`.
pub fn error_table_rows(
    mode: &str,
    series: &[&ErrorSeries; 4],
    diverged_at: Option<f64>,
) -> Vec<Vec<String>> {
    let diverged = diverged_at.map(fmt).unwrap_or_default();
    series
        .iter()
        .map(|s| {
            let n = s.errors.len();
            let (min, avg, max) = if n == 0 {
                (String::new(), String::new(), String::new())
            } else {
                (fmt(s.min()), fmt(s.avg()), fmt(s.max()))
            };
            vec![
                mode.to_string(),
                s.field.clone(),
                min,
                avg,
                max,
                n.to_string(),
                diverged.clone(),
            ]
        })
        .collect()
}

pub const ERROR_TABLE_HEADER: [&str; 7] =
    ["mode", "field", "min", "avg", "max", "samples", "diverged_at"];

pub const COEFFICIENT_TABLE_HEADER: [&str; 5] =
    ["mode", "e_cd", "e_cl", "e_cd_tangent", "e_cl_normal"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            vec![fmt(0.1), fmt(-3.25)],
            vec![fmt(f64::from_bits(0x3FB999999999999A)), fmt(2e-17)],
        ];
        write_csv(&path, &["a", "b"], &rows).unwrap();
        let (header, back) = read_csv(&path).unwrap();
        assert_eq!(header, ["a", "b"]);
        assert_eq!(back, rows);
        // Shortest form parses back to identical bits.
        assert_eq!(back[1][0].parse::<f64>().unwrap().to_bits(), 0x3FB999999999999A);
    }

    #[test]
    fn spectrum_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_spectrum_csv(&path, &[4.0, 1.0, 0.25], &[0.76, 0.95, 1.0]).unwrap();
        assert_eq!(read_spectrum_cumulative(&path).unwrap(), vec![0.76, 0.95, 1.0]);
    }

    #[test]
    fn energy_table_clamps_short_spectra() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_energy_table(&path, &[("v", &[0.9, 1.0][..]), ("s", &[1.0][..])]).unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, ["n_modes", "v", "s"]);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3], vec!["4", "1", "1"]);
    }

    #[test]
    fn steps_series_round_trip() {
        use lesrom_core::postproc::AeroCoefficients;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("steps.csv");
        let records = vec![StepRecord {
            t: 0.25,
            coefficients: AeroCoefficients {
                cd: 1.5,
                cl: -0.125,
                cd_tangent: 1.4375,
                cl_normal: -0.0625,
            },
            max_u: 1.75,
            continuity: 1e-9,
        }];
        write_steps_csv(&path, &records).unwrap();
        let series = read_steps_series(&path).unwrap();
        assert_eq!(series.times, vec![0.25]);
        assert_eq!(series.cd, vec![1.5]);
        assert_eq!(series.cl_normal, vec![-0.0625]);
    }
}
