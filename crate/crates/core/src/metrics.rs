//! Trajectory quality criteria: stop and collision errors, deviation from
//! the reference path, jerk, actuator work, duration and length, rotational
//! fluctuation, and side-by-side comparison of two trajectories.

use crate::dynamics::{CraftParams, Trajectory};
use crate::error::{Error, Result};
use crate::task::{min_distance_to_deck, point_polyline_distance, DeckGeometry, ReferenceTrajectory};

/// Default speed under which the craft counts as stopped, m/s.
pub const DEFAULT_V_EPS: f64 = 1e-3;

/// Resolution below which two criterion values tie.
pub const TIE_RESOLUTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCheck {
    pub stopped: bool,
    pub first_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionCheck {
    pub collided: bool,
    pub first_index: Option<usize>,
    /// Smallest distance to the deck over the whole trajectory (m).
    pub min_clearance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub series: Vec<f64>,
    pub mean: f64,
    pub max: f64,
}

impl SeriesStats {
    fn from_series(series: Vec<f64>) -> Self {
        let mean = if series.is_empty() {
            0.0
        } else {
            series.iter().sum::<f64>() / series.len() as f64
        };
        let max = series.iter().copied().fold(0.0, f64::max);
        Self { series, mean, max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkStats {
    /// J per step.
    pub thrust_series: Vec<f64>,
    pub thrust_total: f64,
    pub torque_series: Vec<f64>,
    pub torque_total: f64,
}

impl WorkStats {
    pub fn total(&self) -> f64 {
        self.thrust_total + self.torque_total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationStats {
    pub theta_series: Vec<f64>,
    pub omega_series: Vec<f64>,
    pub theta_total_variation: f64,
    pub omega_total_variation: f64,
}

/// Every criterion for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub stop: StopCheck,
    pub collision: CollisionCheck,
    /// Nearest-point distance to the reference path per state (m).
    pub deviation: SeriesStats,
    /// Jerk magnitude per interior step (m/s³); `mean` is the mean amplitude.
    pub jerk: SeriesStats,
    pub work: WorkStats,
    pub duration: f64,
    pub path_length: f64,
    pub rotation: RotationStats,
}

impl MetricsReport {
    pub fn error_count(&self) -> usize {
        usize::from(self.stop.stopped) + usize::from(self.collision.collided)
    }

    pub fn has_errors(&self) -> bool {
        self.error_count() > 0
    }
}

/// Stop error: speed below `v_eps` at any interior state (endpoints exempt).
pub fn stop_error(traj: &Trajectory, v_eps: f64) -> Result<StopCheck> {
    let n = traj.states().len();
    if n < 3 {
        return Err(Error::InvalidInput("stop check needs at least three states".into()));
    }
    let first_index = (1..n - 1).find(|&k| traj.state(k).speed() < v_eps);
    Ok(StopCheck {
        stopped: first_index.is_some(),
        first_index,
    })
}

/// Collision error: deck distance `<= craft_radius` at any state.
pub fn collision_error(traj: &Trajectory, deck: &DeckGeometry) -> CollisionCheck {
    let mut first_index = None;
    let mut min_clearance = f64::INFINITY;
    for (k, p) in traj.positions().into_iter().enumerate() {
        let d = min_distance_to_deck(p, deck);
        if d <= deck.craft_radius() && first_index.is_none() {
            first_index = Some(k);
        }
        min_clearance = min_clearance.min(d);
    }
    CollisionCheck {
        collided: first_index.is_some(),
        first_index,
        min_clearance,
    }
}

/// Geometric distance from each position to the reference polyline.
pub fn deviation(traj: &Trajectory, reference: &ReferenceTrajectory) -> SeriesStats {
    let path = reference.positions();
    SeriesStats::from_series(
        traj.positions()
            .into_iter()
            .map(|p| point_polyline_distance(p, &path))
            .collect(),
    )
}

/// Jerk as the second difference of the velocity states, at interior steps
/// `1..H`.
pub fn jerk_metric(traj: &Trajectory) -> Result<SeriesStats> {
    let h = traj.horizon();
    if h < 3 {
        return Err(Error::InvalidInput("jerk needs a horizon of at least 3".into()));
    }
    let dt2 = traj.dt() * traj.dt();
    let series = (1..h)
        .map(|k| {
            let (a, b, c) = (traj.state(k - 1), traj.state(k), traj.state(k + 1));
            let jx = (c.vx - 2.0 * b.vx + a.vx) / dt2;
            let jy = (c.vy - 2.0 * b.vy + a.vy) / dt2;
            jx.hypot(jy)
        })
        .collect();
    Ok(SeriesStats::from_series(series))
}

/// Per-step actuator work: `|F (v · b̂)| dt` with body axis
/// `b̂ = (−sin θ, cos θ)`, and `|τ ω| dt`.
pub fn mechanical_work(traj: &Trajectory, _params: &CraftParams) -> WorkStats {
    let dt = traj.dt();
    let (thrust_series, torque_series): (Vec<f64>, Vec<f64>) = (0..traj.horizon())
        .map(|k| {
            let s = traj.state(k);
            let u = traj.control(k);
            let (sin, cos) = s.theta.sin_cos();
            let along_axis = -s.vx * sin + s.vy * cos;
            ((u.thrust * along_axis).abs() * dt, (u.torque * s.omega).abs() * dt)
        })
        .unzip();
    WorkStats {
        thrust_total: thrust_series.iter().sum(),
        torque_total: torque_series.iter().sum(),
        thrust_series,
        torque_series,
    }
}

/// `(H·dt, Σ chord lengths)`.
pub fn duration_length(traj: &Trajectory) -> (f64, f64) {
    let length = traj
        .positions()
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum();
    (traj.horizon() as f64 * traj.dt(), length)
}

pub fn rotation_stats(traj: &Trajectory) -> RotationStats {
    let states = traj.craft_states();
    let theta_series: Vec<f64> = states.iter().map(|s| s.theta).collect();
    let omega_series: Vec<f64> = states.iter().map(|s| s.omega).collect();
    let tv = |v: &[f64]| v.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    RotationStats {
        theta_total_variation: tv(&theta_series),
        omega_total_variation: tv(&omega_series),
        theta_series,
        omega_series,
    }
}

/// Full report. Without a deck, collision never fires and clearance is infinite.
pub fn evaluate(
    traj: &Trajectory,
    reference: &ReferenceTrajectory,
    deck: Option<&DeckGeometry>,
    params: &CraftParams,
    v_eps: f64,
) -> Result<MetricsReport> {
    let (duration, path_length) = duration_length(traj);
    Ok(MetricsReport {
        stop: stop_error(traj, v_eps)?,
        collision: deck.map(|d| collision_error(traj, d)).unwrap_or(CollisionCheck {
            collided: false,
            first_index: None,
            min_clearance: f64::INFINITY,
        }),
        deviation: deviation(traj, reference),
        jerk: jerk_metric(traj)?,
        work: mechanical_work(traj, params),
        duration,
        path_length,
        rotation: rotation_stats(traj),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Errors,
    MeanDeviation,
    MeanJerk,
    TotalWork,
    Duration,
    PathLength,
    ThetaVariation,
    OmegaVariation,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = [
        Criterion::Errors,
        Criterion::MeanDeviation,
        Criterion::MeanJerk,
        Criterion::TotalWork,
        Criterion::Duration,
        Criterion::PathLength,
        Criterion::ThetaVariation,
        Criterion::OmegaVariation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Errors => "errors",
            Criterion::MeanDeviation => "mean_deviation",
            Criterion::MeanJerk => "mean_jerk",
            Criterion::TotalWork => "total_work",
            Criterion::Duration => "duration",
            Criterion::PathLength => "path_length",
            Criterion::ThetaVariation => "theta_total_variation",
            Criterion::OmegaVariation => "omega_total_variation",
        }
    }

    /// Lower is better for every criterion.
    pub fn value(&self, r: &MetricsReport) -> f64 {
        match self {
            Criterion::Errors => r.error_count() as f64,
            Criterion::MeanDeviation => r.deviation.mean,
            Criterion::MeanJerk => r.jerk.mean,
            Criterion::TotalWork => r.work.total(),
            Criterion::Duration => r.duration,
            Criterion::PathLength => r.path_length,
            Criterion::ThetaVariation => r.rotation.theta_total_variation,
            Criterion::OmegaVariation => r.rotation.omega_total_variation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionOutcome {
    pub criterion: Criterion,
    pub a: f64,
    pub b: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: MetricsReport,
    pub b: MetricsReport,
    pub outcomes: Vec<CriterionOutcome>,
}

/// Per-criterion winner between two reports, ties at [`TIE_RESOLUTION`].
pub fn rank(a: &MetricsReport, b: &MetricsReport) -> Vec<CriterionOutcome> {
    Criterion::ALL
        .iter()
        .map(|&criterion| {
            let (va, vb) = (criterion.value(a), criterion.value(b));
            let winner = if (va - vb).abs() <= TIE_RESOLUTION {
                Winner::Tie
            } else if va < vb {
                Winner::A
            } else {
                Winner::B
            };
            CriterionOutcome {
                criterion,
                a: va,
                b: vb,
                winner,
            }
        })
        .collect()
}

pub fn compare(
    traj_a: &Trajectory,
    traj_b: &Trajectory,
    reference: &ReferenceTrajectory,
    deck: Option<&DeckGeometry>,
    params: &CraftParams,
    v_eps: f64,
) -> Result<Comparison> {
    let a = evaluate(traj_a, reference, deck, params, v_eps)?;
    let b = evaluate(traj_b, reference, deck, params, v_eps)?;
    let outcomes = rank(&a, &b);
    Ok(Comparison { a, b, outcomes })
}
