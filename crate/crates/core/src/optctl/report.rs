//! CSV, JSON and Markdown renderings of study, sweep and spectral results.
//!
//! CSV floats carry 17 significant digits so they parse back to the same
//! `f64`. JSON documents carry a `schema` tag naming their layout.

use serde::Serialize;

use super::spectral::SpectralReport;
use super::study::EocTable;
use super::sweep::SweepReport;
use crate::error::{Error, Result};

pub const STUDY_SCHEMA: &str = "ellopt.study.v1";
pub const SWEEP_SCHEMA: &str = "ellopt.sweep.v1";
pub const SPECTRAL_SCHEMA: &str = "ellopt.spectral.v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Md,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "md" => Ok(Self::Md),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Markdown table with every column padded to its widest cell; numeric
/// columns are right-aligned.
fn markdown(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([header[c].len(), 3])
                .max()
                .unwrap_or(3)
        })
        .collect();
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:>w$}")).collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = line(header.iter().map(|s| s.to_string()).collect());
    let rule: Vec<String> = widths.iter().map(|&w| format!("{}:", "-".repeat(w - 1))).collect();
    out.push_str(&format!("| {} |\n", rule.join(" | ")));
    for r in rows {
        out.push_str(&line(r.clone()));
    }
    out
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    schema: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

fn json<T: Serialize>(schema: &str, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Tagged { schema, body })
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn format_table(table: &EocTable, format: Format) -> Result<String> {
    match format {
        Format::Json => json(STUDY_SCHEMA, table),
        Format::Csv => {
            let header = [
                "level",
                "h",
                "rho",
                "n_h",
                "l2_error",
                "eoc",
                "iterations",
                "converged",
                "initial_prec_residual",
                "final_prec_residual",
                "time_s",
            ];
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.level.to_string(),
                        full(r.h),
                        full(r.rho),
                        r.n_h.to_string(),
                        full(r.l2_error),
                        r.eoc.map(full).unwrap_or_default(),
                        r.stats.iterations.to_string(),
                        r.stats.converged.to_string(),
                        full(r.stats.initial_prec_residual),
                        full(r.stats.final_prec_residual),
                        full(r.stats.wall_time),
                    ]
                })
                .collect();
            Ok(csv(&header, &rows))
        }
        Format::Md => {
            let header = ["Level", "N_h", "rho", "error", "eoc", "#Its", "Time [s]"];
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    let its = if r.stats.converged {
                        r.stats.iterations.to_string()
                    } else {
                        format!("{} (not converged)", r.stats.iterations)
                    };
                    vec![
                        format!("L{}", r.level),
                        r.n_h.to_string(),
                        format!("{:.5e}", r.rho),
                        format!("{:.5e}", r.l2_error),
                        r.eoc.map(|e| format!("{e:.2}")).unwrap_or_else(|| "-".into()),
                        its,
                        format!("{:.3}", r.stats.wall_time),
                    ]
                })
                .collect();
            Ok(markdown(&header, &rows))
        }
    }
}

pub fn format_sweep(report: &SweepReport, format: Format) -> Result<String> {
    match format {
        Format::Json => json(SWEEP_SCHEMA, report),
        Format::Csv | Format::Md => {
            let rows: Vec<Vec<String>> = report
                .points
                .iter()
                .map(|p| {
                    let (rho, e) = if format == Format::Csv {
                        (full(p.rho), full(p.l2_error))
                    } else {
                        (format!("{:.5e}", p.rho), format!("{:.5e}", p.l2_error))
                    };
                    vec![rho, e, p.iterations.to_string(), p.converged.to_string()]
                })
                .collect();
            if format == Format::Csv {
                return Ok(csv(&["rho", "l2_error", "iterations", "converged"], &rows));
            }
            let mut out = markdown(&["rho", "error", "#Its", "converged"], &rows);
            match &report.fit {
                Some(fit) => out.push_str(&format!(
                    "\nfitted slope {:.3} over {} points (baseline error {:.5e})\n",
                    fit.slope, fit.points, fit.baseline_error
                )),
                None => out.push_str("\nfitted slope unavailable (fewer than two points above the baseline)\n"),
            }
            Ok(out)
        }
    }
}

pub fn format_spectral(reports: &[SpectralReport], format: Format) -> Result<String> {
    #[derive(Serialize)]
    struct Levels<'a> {
        levels: &'a [SpectralReport],
    }
    if format == Format::Json {
        return json(SPECTRAL_SCHEMA, &Levels { levels: reports });
    }
    let fmt = |x: f64| {
        if format == Format::Csv {
            full(x)
        } else {
            format!("{x:.6e}")
        }
    };
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.level.to_string(),
                r.n_h.to_string(),
                fmt(r.lambda_max_minv_k),
                fmt(r.lambda_max_minv_k_times_h2),
                fmt(r.rayleigh_s_over_m_min),
                fmt(r.rayleigh_s_over_m_max),
                fmt(r.rayleigh_a_over_m_min),
                fmt(r.rayleigh_a_over_m_max),
            ]
        })
        .collect();
    let header = [
        "level",
        "n_h",
        "lambda_max",
        "lambda_max_h2",
        "s_over_m_min",
        "s_over_m_max",
        "a_over_m_min",
        "a_over_m_max",
    ];
    Ok(match format {
        Format::Csv => csv(&header, &rows),
        _ => markdown(&header, &rows),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optctl::study::LevelResult;
    use crate::optctl::Target;
    use crate::solvers::{SolveStats, SolveStatus, SolverKind};

    fn table() -> EocTable {
        let row = |level: usize, e: f64| LevelResult {
            level,
            h: 0.5f64.powi(level as i32 + 1),
            rho: 0.5f64.powi(4 * (level as i32 + 1)),
            n_h: 27,
            l2_error: e,
            eoc: None,
            stats: SolveStats {
                iterations: 19,
                initial_prec_residual: 1.0,
                final_prec_residual: 1e-12,
                converged: true,
                status: SolveStatus::Converged,
                wall_time: 0.25,
                residual_history: vec![],
            },
        };
        EocTable::new(
            3,
            Target::Smooth,
            SolverKind::MgMinres,
            4.0,
            vec![row(2, 0.1 / 3.0), row(1, 0.4 / 3.0)],
        )
    }

    #[test]
    fn csv_round_trips_floats() {
        let t = table();
        let s = format_table(&t, Format::Csv).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 3);
        let cells: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(cells[4].parse::<f64>().unwrap(), 0.1 / 3.0);
        assert_eq!(cells[5].parse::<f64>().unwrap(), t.rows[1].eoc.unwrap());
        assert_eq!(lines[1].split(',').nth(5), Some(""));
    }

    #[test]
    fn markdown_is_aligned() {
        let s = format_table(&table(), Format::Md).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
        assert!(lines[0].contains("#Its") && lines[3].contains("2.00"));
    }

    #[test]
    fn json_carries_schema_and_rows() {
        let s = format_table(&table(), Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], STUDY_SCHEMA);
        assert_eq!(v["solver"], "mg-minres");
        assert_eq!(v["target"], 1);
        assert_eq!(v["rows"][1]["stats"]["iterations"], 19);
        assert!(v["rows"][0]["eoc"].is_null());
    }

    #[test]
    fn format_parsing() {
        assert_eq!("md".parse::<Format>().unwrap(), Format::Md);
        assert!("xml".parse::<Format>().is_err());
    }
}
