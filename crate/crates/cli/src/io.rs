//! CSV persistence for trajectories, control tapes and learning logs.
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! which is enough for every `f64` to read back bit-exactly.

use std::fs::File;
use std::path::Path;

use craftlearn::dynamics::{Trajectory, Vector};
use craftlearn::learner::LearnLog;

use crate::error::{CliError, Result};

pub const TRAJECTORY_HEADER: [&str; 9] = ["t", "x", "y", "theta", "vx", "vy", "omega", "thrust", "torque"];
pub const TAPE_HEADER: [&str; 3] = ["k", "thrust", "torque"];
pub const LOG_HEADER: [&str; 5] = ["iteration", "real_cost", "bias_norm", "chosen_alpha", "trials"];

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().flexible(false).from_writer(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    }
}

/// Writes a header followed by rows of already-formatted fields.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        let row: Vec<String> = row.into_iter().collect();
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads all data rows after checking the header, returning `(line, fields)`.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let found: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(CliError::format(
            path,
            format!("expected header {:?}, found {:?}", header.join(","), found.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn field(path: &Path, line: usize, name: &str, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("{name}: expected a number, found {s:?}"),
    })
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let h = traj.horizon();
    let rows = traj.states().iter().enumerate().map(|(k, x)| {
        let mut row = vec![fmt(k as f64 * traj.dt())];
        row.extend(x.iter().map(|&v| fmt(v)));
        match traj.controls().get(k) {
            Some(u) => row.extend(u.iter().map(|&v| fmt(v))),
            None => {
                debug_assert_eq!(k, h);
                row.extend([String::new(), String::new()]);
            }
        }
        row
    });
    write_rows(path, &TRAJECTORY_HEADER, rows)
}

/// Reads a trajectory; `dt` is taken from the first two time stamps.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let rows = read_rows(path, &TRAJECTORY_HEADER)?;
    if rows.len() < 2 {
        return Err(CliError::format(path, "a trajectory needs at least two state rows"));
    }
    let last = rows.len() - 1;
    let mut times = Vec::with_capacity(rows.len());
    let mut states = Vec::with_capacity(rows.len());
    let mut controls = Vec::with_capacity(last);
    for (i, (line, fields)) in rows.iter().enumerate() {
        let mut values = Vec::with_capacity(9);
        for (name, s) in TRAJECTORY_HEADER.iter().zip(fields).take(7) {
            values.push(field(path, *line, name, s)?);
        }
        times.push(values[0]);
        states.push(Vector::from_column_slice(&values[1..7]));
        let control_fields = &fields[7..];
        if i < last {
            let thrust = field(path, *line, "thrust", &control_fields[0])?;
            let torque = field(path, *line, "torque", &control_fields[1])?;
            controls.push(Vector::from_vec(vec![thrust, torque]));
        } else if control_fields.iter().any(|s| !s.is_empty()) {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: *line,
                message: "the final row must leave thrust and torque empty".into(),
            });
        }
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(CliError::format(path, "time stamps must increase"));
    }
    for (k, t) in times.iter().enumerate() {
        if (t - k as f64 * dt).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(CliError::format(
                path,
                format!("row {k}: time {t} is not on the {dt} grid"),
            ));
        }
    }
    Trajectory::new(dt, states, controls).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn write_tape(path: &Path, tape: &[Vector]) -> Result<()> {
    if tape.is_empty() {
        return Err(CliError::format(path, "refusing to write an empty control tape"));
    }
    let rows = tape
        .iter()
        .enumerate()
        .map(|(k, u)| vec![k.to_string(), fmt(u[0]), fmt(u[1])]);
    write_rows(path, &TAPE_HEADER, rows)
}

pub fn read_tape(path: &Path) -> Result<Vec<Vector>> {
    let rows = read_rows(path, &TAPE_HEADER)?;
    if rows.is_empty() {
        return Err(CliError::format(path, "empty control tape"));
    }
    rows.iter()
        .enumerate()
        .map(|(k, (line, f))| {
            if f[0].trim() != k.to_string() {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line: *line,
                    message: format!("expected step index {k}, found {:?}", f[0]),
                });
            }
            let thrust = field(path, *line, "thrust", &f[1])?;
            let torque = field(path, *line, "torque", &f[2])?;
            Ok(Vector::from_vec(vec![thrust, torque]))
        })
        .collect()
}

/// One row per learner iteration, then a closing row with the final cost
/// and no trials, so the `trials` column sums to the total trial count.
pub fn write_learn_log(path: &Path, log: &LearnLog, final_cost: f64) -> Result<()> {
    let mut rows: Vec<Vec<String>> = log
        .records
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                fmt(r.real_cost),
                fmt(r.bias_norm),
                r.chosen_alpha.map(fmt).unwrap_or_default(),
                r.real_trials_used.to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        log.records.len().to_string(),
        fmt(final_cost),
        String::new(),
        String::new(),
        "0".into(),
    ]);
    write_rows(path, &LOG_HEADER, rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub iteration: usize,
    pub real_cost: f64,
    pub bias_norm: Option<f64>,
    pub chosen_alpha: Option<f64>,
    pub trials: usize,
}

pub fn read_learn_log(path: &Path) -> Result<Vec<LogRow>> {
    let rows = read_rows(path, &LOG_HEADER)?;
    let count = |line: usize, name: &str, s: &str| {
        s.parse::<usize>().map_err(|_| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{name}: expected a count, found {s:?}"),
        })
    };
    let optional = |line: usize, name: &str, s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            field(path, line, name, s).map(Some)
        }
    };
    rows.iter()
        .map(|(line, f)| {
            Ok(LogRow {
                iteration: count(*line, "iteration", &f[0])?,
                real_cost: field(path, *line, "real_cost", &f[1])?,
                bias_norm: optional(*line, "bias_norm", &f[2])?,
                chosen_alpha: optional(*line, "chosen_alpha", &f[3])?,
                trials: count(*line, "trials", &f[4])?,
            })
        })
        .collect()
}
