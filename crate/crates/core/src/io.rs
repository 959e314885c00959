//! Plain-text correspondence files and the sweep CSV.
//!
//! A correspondence file starts with a line reading `absolute` or `relative`, then one
//! record per line of whitespace-separated numbers. Absolute records hold
//! `point(3) bearing(3) offset(3)`; relative records hold `dir1 moment1 dir2 moment2`.
//! Blank lines and anything after `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::amm::AmmResult;
use crate::bench::{SummaryRow, TrialRecord};
use crate::gec::RayCorrespondence;
use crate::geometry::{ObservedRay, PlueckerLine, Pose, Vec3};
use crate::gpnp::PointRayCorrespondence;
use crate::solver::Correspondences;

/// Largest accepted `|direction · moment|` after normalizing the direction.
pub const PLUECKER_TOL: f64 = 1e-6;

pub const CSV_HEADER: &str = "noise,trial,solver,rot_err,trans_err,time_ns,iters,final_obj,converged";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    ConstraintViolation { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IoError {
    pub fn line(&self) -> Option<usize> {
        match self {
            IoError::Parse { line, .. } | IoError::ConstraintViolation { line, .. } => Some(*line),
            IoError::Io(_) => None,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

pub fn read_correspondence_file(path: impl AsRef<Path>) -> Result<Correspondences, IoError> {
    parse_correspondences(&std::fs::read_to_string(path)?)
}

pub fn parse_correspondences(text: &str) -> Result<Correspondences, IoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let relative = match header {
        "absolute" => false,
        "relative" => true,
        other => return Err(parse_err(header_line, format!("expected 'absolute' or 'relative', found '{other}'"))),
    };
    let expected = if relative { 12 } else { 9 };

    let mut abs = Vec::new();
    let mut rel = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != expected {
            return Err(parse_err(n, format!("expected {expected} fields, found {}", fields.len())));
        }
        let mut vals = [0.0; 12];
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| parse_err(n, format!("field {} is not a number: '{f}'", k + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(n, format!("field {} is not finite", k + 1)));
            }
            vals[k] = v;
        }
        let v3 = |k: usize| Vec3::new(vals[k], vals[k + 1], vals[k + 2]);
        if relative {
            let line_at = |k: usize| {
                PlueckerLine::from_coordinates(&v3(k), &v3(k + 3), PLUECKER_TOL)
                    .map_err(|e| IoError::ConstraintViolation { line: n, message: e.to_string() })
            };
            rel.push(RayCorrespondence::new(line_at(0)?, line_at(6)?));
        } else {
            let ray = ObservedRay::new(v3(3), v3(6))
                .map_err(|e| IoError::ConstraintViolation { line: n, message: e.to_string() })?;
            abs.push(PointRayCorrespondence::new(v3(0), ray));
        }
    }
    Ok(if relative { Correspondences::Relative(rel) } else { Correspondences::Absolute(abs) })
}

pub fn format_correspondences(data: &Correspondences) -> String {
    let mut out = String::from(if data.is_relative() { "relative\n" } else { "absolute\n" });
    let mut row = |vs: &[&Vec3]| {
        let fields: Vec<String> = vs.iter().flat_map(|v| v.iter()).map(|x| fmt_f64(*x)).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    };
    match data {
        Correspondences::Absolute(corrs) => {
            for c in corrs {
                row(&[&c.point, c.ray.bearing(), c.ray.offset()]);
            }
        }
        Correspondences::Relative(corrs) => {
            for c in corrs {
                row(&[c.line1.direction(), c.line1.moment(), c.line2.direction(), c.line2.moment()]);
            }
        }
    }
    out
}

pub fn write_correspondence_file(path: impl AsRef<Path>, data: &Correspondences) -> Result<(), IoError> {
    std::fs::write(path, format_correspondences(data))?;
    Ok(())
}

/// Scientific notation with 17 significant digits, enough to round-trip any f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses `x,y,z`.
pub fn parse_vec3(text: &str) -> Result<Vec3, String> {
    let vals: Result<Vec<f64>, _> = text.split(',').map(|f| f.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == 3 && v.iter().all(|x| x.is_finite()) => Ok(Vec3::new(v[0], v[1], v[2])),
        _ => Err(format!("expected three comma-separated numbers, got '{text}'")),
    }
}

/// Solver output as text: rotation (row-major), translation, objective, iterations.
pub fn format_solution(result: &AmmResult) -> String {
    format!(
        "{}objective {}\niterations {}\nconverged {}\n",
        format_pose(&result.pose),
        fmt_f64(result.final_objective),
        result.outer_iterations,
        result.converged
    )
}

/// `rotation` (row-major) and `translation` lines.
pub fn format_pose(pose: &Pose) -> String {
    let r = pose.rotation.matrix();
    let rot: Vec<String> = (0..3).flat_map(|i| (0..3).map(move |j| fmt_f64(r[(i, j)]))).collect();
    let t: Vec<String> = pose.translation.iter().map(|x| fmt_f64(*x)).collect();
    format!("rotation {}\ntranslation {}\n", rot.join(" "), t.join(" "))
}

/// One CSV data row: a single trial or a per-level mean.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvRow {
    Trial(TrialRecord),
    Summary(SummaryRow),
}

pub fn format_sweep_csv(records: &[TrialRecord], summary: &[SummaryRow]) -> String {
    let mut out = String::with_capacity(128 * (records.len() + summary.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.noise_sigma),
            r.trial_index,
            r.solver_name,
            fmt_f64(r.rot_err_frobenius),
            fmt_f64(r.trans_err_norm),
            r.wall_time_ns,
            r.outer_iterations,
            fmt_f64(r.final_objective),
            r.converged
        );
    }
    for s in summary {
        let _ = writeln!(
            out,
            "{},mean,{},{},{},{},{},{},{}",
            fmt_f64(s.noise_sigma),
            s.solver_name,
            fmt_f64(s.mean_rot_err),
            fmt_f64(s.mean_trans_err),
            fmt_f64(s.mean_time_ns),
            fmt_f64(s.mean_iterations),
            fmt_f64(s.mean_final_objective),
            fmt_f64(s.converged_fraction)
        );
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<CsvRow>, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(parse_err(1, "missing or unexpected CSV header")),
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(parse_err(n, format!("expected 9 columns, found {}", f.len())));
        }
        let real = |k: usize| f[k].parse::<f64>().map_err(|_| parse_err(n, format!("column {} is not a number", k + 1)));
        let count = |k: usize| f[k].parse::<u64>().map_err(|_| parse_err(n, format!("column {} is not a count", k + 1)));
        if f[1] == "mean" {
            rows.push(CsvRow::Summary(SummaryRow {
                noise_sigma: real(0)?,
                solver_name: f[2].to_string(),
                mean_rot_err: real(3)?,
                mean_trans_err: real(4)?,
                mean_time_ns: real(5)?,
                mean_iterations: real(6)?,
                mean_final_objective: real(7)?,
                converged_fraction: real(8)?,
                trials: 0,
            }));
        } else {
            let converged = match f[8] {
                "true" => true,
                "false" => false,
                _ => return Err(parse_err(n, "column 9 must be true or false")),
            };
            rows.push(CsvRow::Trial(TrialRecord {
                noise_sigma: real(0)?,
                trial_index: count(1)? as usize,
                solver_name: f[2].to_string(),
                rot_err_frobenius: real(3)?,
                trans_err_norm: real(4)?,
                wall_time_ns: count(5)?,
                outer_iterations: count(6)? as usize,
                final_objective: real(7)?,
                converged,
            }));
        }
    }
    Ok(rows)
}

/// Splits parsed rows back into trial records and summary rows.
pub fn split_rows(rows: Vec<CsvRow>) -> (Vec<TrialRecord>, Vec<SummaryRow>) {
    let mut trials = Vec::new();
    let mut summary = Vec::new();
    for r in rows {
        match r {
            CsvRow::Trial(t) => trials.push(t),
            CsvRow::Summary(s) => summary.push(s),
        }
    }
    (trials, summary)
}
