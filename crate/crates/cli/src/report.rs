//! Text reports and plot-ready CSV exports of trajectory metrics.

use std::fmt::Write as _;
use std::path::Path;

use craftlearn::dynamics::Trajectory;
use craftlearn::metrics::{Comparison, Criterion, MetricsReport, Winner};

use crate::error::Result;
use crate::io::{fmt, write_rows};

pub const SUMMARY_HEADER: [&str; 2] = ["metric", "value"];
pub const SERIES_HEADER: [&str; 11] = [
    "k",
    "t",
    "vx",
    "vy",
    "speed",
    "deviation",
    "jerk",
    "thrust_work",
    "torque_work",
    "theta",
    "omega",
];
pub const COMPARE_HEADER: [&str; 4] = ["criterion", "a", "b", "winner"];

/// Figure files written by [`write_figures`], with their value columns.
pub const FIGURES: [(&str, &[&str]); 6] = [
    ("velocity.csv", &["vx", "vy", "speed"]),
    ("deviation.csv", &["deviation"]),
    ("jerk.csv", &["jerk"]),
    ("work.csv", &["thrust_work", "torque_work"]),
    ("rotation.csv", &["theta", "omega"]),
    ("path.csv", &["x", "y"]),
];

fn flag(hit: bool, index: Option<usize>) -> String {
    match (hit, index) {
        (true, Some(k)) => format!("yes (first at step {k})"),
        _ => "no".into(),
    }
}

pub fn render_report(r: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "stop error          {}", flag(r.stop.stopped, r.stop.first_index));
    let _ = writeln!(
        s,
        "collision error     {}",
        flag(r.collision.collided, r.collision.first_index)
    );
    let _ = writeln!(s, "min deck clearance  {:.6} m", r.collision.min_clearance);
    let _ = writeln!(
        s,
        "deviation           mean {:.6} m, max {:.6} m",
        r.deviation.mean, r.deviation.max
    );
    let _ = writeln!(
        s,
        "jerk                mean {:.6} m/s^3, max {:.6} m/s^3",
        r.jerk.mean, r.jerk.max
    );
    let _ = writeln!(
        s,
        "work                thrust {:.6} J, torque {:.6} J, total {:.6} J",
        r.work.thrust_total,
        r.work.torque_total,
        r.work.total()
    );
    let _ = writeln!(s, "duration            {:.6} s", r.duration);
    let _ = writeln!(s, "path length         {:.6} m", r.path_length);
    let _ = writeln!(
        s,
        "rotation            theta TV {:.6} rad, omega TV {:.6} rad/s",
        r.rotation.theta_total_variation, r.rotation.omega_total_variation
    );
    s
}

pub fn summary_rows(r: &MetricsReport) -> Vec<(&'static str, f64)> {
    vec![
        ("stop_error", f64::from(u8::from(r.stop.stopped))),
        ("collision_error", f64::from(u8::from(r.collision.collided))),
        ("min_clearance", r.collision.min_clearance),
        ("deviation_mean", r.deviation.mean),
        ("deviation_max", r.deviation.max),
        ("jerk_mean", r.jerk.mean),
        ("jerk_max", r.jerk.max),
        ("thrust_work_total", r.work.thrust_total),
        ("torque_work_total", r.work.torque_total),
        ("work_total", r.work.total()),
        ("duration", r.duration),
        ("path_length", r.path_length),
        ("theta_total_variation", r.rotation.theta_total_variation),
        ("omega_total_variation", r.rotation.omega_total_variation),
    ]
}

pub fn write_summary(path: &Path, r: &MetricsReport) -> Result<()> {
    write_rows(
        path,
        &SUMMARY_HEADER,
        summary_rows(r)
            .into_iter()
            .map(|(name, v)| vec![name.to_string(), fmt(v)]),
    )
}

fn opt(v: Option<&f64>) -> String {
    v.map(|&x| fmt(x)).unwrap_or_default()
}

/// Every per-state series side by side. Jerk is empty at the two endpoints
/// and work is empty at the final state.
pub fn write_series(path: &Path, traj: &Trajectory, r: &MetricsReport) -> Result<()> {
    let rows = (0..=traj.horizon()).map(|k| {
        let s = traj.state(k);
        vec![
            k.to_string(),
            fmt(k as f64 * traj.dt()),
            fmt(s.vx),
            fmt(s.vy),
            fmt(s.speed()),
            opt(r.deviation.series.get(k)),
            opt(k.checked_sub(1).and_then(|i| r.jerk.series.get(i))),
            opt(r.work.thrust_series.get(k)),
            opt(r.work.torque_series.get(k)),
            opt(r.rotation.theta_series.get(k)),
            opt(r.rotation.omega_series.get(k)),
        ]
    });
    write_rows(path, &SERIES_HEADER, rows)
}

pub fn winner_name(w: Winner) -> &'static str {
    match w {
        Winner::A => "a",
        Winner::B => "b",
        Winner::Tie => "tie",
    }
}

pub fn render_comparison(c: &Comparison, label_a: &str, label_b: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24}{:>20}{:>20}  winner", "criterion", label_a, label_b);
    for o in &c.outcomes {
        let winner = match o.winner {
            Winner::A => label_a,
            Winner::B => label_b,
            Winner::Tie => "tie",
        };
        let _ = writeln!(s, "{:<24}{:>20.6}{:>20.6}  {winner}", o.criterion.name(), o.a, o.b);
    }
    s
}

pub fn write_comparison(path: &Path, c: &Comparison) -> Result<()> {
    debug_assert_eq!(c.outcomes.len(), Criterion::ALL.len());
    let rows = c.outcomes.iter().map(|o| {
        vec![
            o.criterion.name().to_string(),
            fmt(o.a),
            fmt(o.b),
            winner_name(o.winner).to_string(),
        ]
    });
    write_rows(path, &COMPARE_HEADER, rows)
}

/// Values of one figure for state `k`, or `None` where the series has no entry.
fn figure_values(name: &str, traj: &Trajectory, r: &MetricsReport, k: usize) -> Option<Vec<f64>> {
    let s = traj.state(k);
    match name {
        "velocity.csv" => Some(vec![s.vx, s.vy, s.speed()]),
        "deviation.csv" => r.deviation.series.get(k).map(|&d| vec![d]),
        "jerk.csv" => k.checked_sub(1).and_then(|i| r.jerk.series.get(i)).map(|&j| vec![j]),
        "work.csv" => r
            .work
            .thrust_series
            .get(k)
            .zip(r.work.torque_series.get(k))
            .map(|(&f, &t)| vec![f, t]),
        "rotation.csv" => Some(vec![s.theta, s.omega]),
        "path.csv" => Some(vec![s.x, s.y]),
        other => unreachable!("unknown figure {other}"),
    }
}

/// One long-format CSV per figure, columns `trajectory,k,t,<values>`, rows
/// of `a` first.
pub fn write_figures(dir: &Path, a: (&str, &Trajectory), b: (&str, &Trajectory), c: &Comparison) -> Result<()> {
    for (name, columns) in FIGURES {
        let mut header = vec!["trajectory", "k", "t"];
        header.extend_from_slice(columns);
        let mut rows = Vec::new();
        for (label, traj, report) in [(a.0, a.1, &c.a), (b.0, b.1, &c.b)] {
            for k in 0..=traj.horizon() {
                if let Some(values) = figure_values(name, traj, report, k) {
                    let mut row = vec![label.to_string(), k.to_string(), fmt(k as f64 * traj.dt())];
                    row.extend(values.into_iter().map(fmt));
                    rows.push(row);
                }
            }
        }
        write_rows(&dir.join(name), &header, rows)?;
    }
    Ok(())
}
