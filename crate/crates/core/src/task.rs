//! Reference trajectories, deck geometry and the tracking cost.

use nalgebra::SymmetricEigen;

use crate::dynamics::{CraftParams, Matrix, State, Trajectory, Vector, CONTROL_DIM};
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Time-indexed tracking targets, `H + 1` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub dt: f64,
    pub targets: Vec<State>,
}

impl ReferenceTrajectory {
    pub fn horizon(&self) -> usize {
        self.targets.len() - 1
    }

    pub fn positions(&self) -> Vec<Point> {
        self.targets.iter().map(State::position).collect()
    }

    pub fn target_vectors(&self) -> Vec<Vector> {
        self.targets.iter().map(State::to_vector).collect()
    }
}

/// Resamples a waypoint polyline into `horizon + 1` targets equally spaced
/// in arc length. Path speed defaults to `length / (horizon * dt)`; with an
/// explicit `speed` the targets stop at the final waypoint once it is reached.
pub fn build_reference(
    waypoints: &[Point],
    horizon: usize,
    dt: f64,
    speed: Option<f64>,
) -> Result<ReferenceTrajectory> {
    if waypoints.len() < 2 {
        return Err(Error::InvalidInput("reference needs at least two waypoints".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidInput("reference horizon must be at least 1".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("dt must be positive".into()));
    }
    let mut cumulative = vec![0.0];
    for w in waypoints.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + dist(w[0], w[1]));
    }
    let total = *cumulative.last().unwrap();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidInput("waypoint polyline has zero length".into()));
    }

    let arc_at = |k: usize| -> f64 {
        match speed {
            Some(v) => (v * dt * k as f64).min(total),
            None => k as f64 * total / horizon as f64,
        }
    };
    let point_at = |s: f64| -> Point {
        // first segment whose end reaches s
        let seg = cumulative[1..]
            .iter()
            .position(|&c| c >= s)
            .unwrap_or(waypoints.len() - 2);
        let (a, b) = (waypoints[seg], waypoints[seg + 1]);
        let len = cumulative[seg + 1] - cumulative[seg];
        if len == 0.0 {
            return a;
        }
        let t = ((s - cumulative[seg]) / len).clamp(0.0, 1.0);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    };

    let points: Vec<Point> = (0..=horizon).map(|k| point_at(arc_at(k))).collect();
    let velocity = |k: usize| -> Point {
        let (i, j, span) = if k == 0 {
            (0, 1, dt)
        } else if k == horizon {
            (horizon - 1, horizon, dt)
        } else {
            (k - 1, k + 1, 2.0 * dt)
        };
        [
            (points[j][0] - points[i][0]) / span,
            (points[j][1] - points[i][1]) / span,
        ]
    };
    let targets = (0..=horizon)
        .map(|k| {
            let v = velocity(k);
            State::new(points[k][0], points[k][1], 0.0, v[0], v[1], 0.0)
        })
        .collect();
    Ok(ReferenceTrajectory { dt, targets })
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Closest point on segment `ab` to `p`.
pub fn closest_point_on_segment(p: Point, a: Point, b: Point) -> Point {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return a;
    }
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    [a[0] + t * d[0], a[1] + t * d[1]]
}

/// Endpoints are ordered first, so swapping `a` and `b` gives the identical result.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (a, b) = if (a[0], a[1]) <= (b[0], b[1]) { (a, b) } else { (b, a) };
    dist(p, closest_point_on_segment(p, a, b))
}

/// Distance from `p` to an open polyline. A single-point polyline is a point.
pub fn point_polyline_distance(p: Point, polyline: &[Point]) -> f64 {
    match polyline {
        [] => f64::INFINITY,
        [only] => dist(p, *only),
        _ => polyline
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Obstacle outline as open polylines, plus the craft's collision radius.
#[derive(Debug, Clone, PartialEq)]
pub struct DeckGeometry {
    polylines: Vec<Vec<Point>>,
    craft_radius: f64,
}

impl DeckGeometry {
    pub fn new(polylines: Vec<Vec<Point>>, craft_radius: f64) -> Result<Self> {
        if polylines.is_empty() {
            return Err(Error::InvalidInput("deck needs at least one polyline".into()));
        }
        if polylines.iter().any(|p| p.len() < 2) {
            return Err(Error::InvalidInput(
                "every deck polyline needs at least two points".into(),
            ));
        }
        if !(craft_radius > 0.0) {
            return Err(Error::InvalidInput("craft_radius > 0".into()));
        }
        Ok(Self {
            polylines,
            craft_radius,
        })
    }

    pub fn polylines(&self) -> &[Vec<Point>] {
        &self.polylines
    }

    pub fn craft_radius(&self) -> f64 {
        self.craft_radius
    }
}

pub fn min_distance_to_deck(point: Point, deck: &DeckGeometry) -> f64 {
    deck.polylines
        .iter()
        .map(|p| point_polyline_distance(point, p))
        .fold(f64::INFINITY, f64::min)
}

/// Per-channel actuator bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLimits {
    pub lower: Vector,
    pub upper: Vector,
}

impl ControlLimits {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(upper.iter()).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidInput(
                "control limits need lower < upper per channel".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// Thrust in `[0, thrust_max]`, torque in `[-torque_max, torque_max]`.
    pub fn for_craft(params: &CraftParams) -> Self {
        Self {
            lower: Vector::from_row_slice(&[0.0, -params.torque_max]),
            upper: Vector::from_row_slice(&[params.thrust_max, params.torque_max]),
        }
    }

    pub fn clamp(&self, u: &Vector) -> Vector {
        Vector::from_iterator(
            u.len(),
            u.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(&v, (&lo, &hi))| v.clamp(lo, hi)),
        )
    }
}

/// Tuning of the craft tracking cost. Defaults are the shipped fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub position: f64,
    pub velocity: f64,
    pub theta: f64,
    pub omega: f64,
    pub control: f64,
    /// Terminal weight as a multiple of the running state weight.
    pub terminal_scale: f64,
    pub control_limit_weight: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            position: 1.0,
            velocity: 0.1,
            theta: 1.0,
            omega: 0.1,
            control: 1e-3,
            terminal_scale: 10.0,
            control_limit_weight: 1.0,
        }
    }
}

/// Width of the soft limit penalty's transition, in control units.
pub const LIMIT_SOFTNESS: f64 = 0.25;

fn softplus(z: f64) -> f64 {
    let t = z / LIMIT_SOFTNESS;
    LIMIT_SOFTNESS * (t.max(0.0) + (-t.abs()).exp().ln_1p())
}

fn sigmoid(z: f64) -> f64 {
    let t = z / LIMIT_SOFTNESS;
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `softplus(z)^2` with its first and second derivative in `z`.
fn squared_softplus(z: f64) -> (f64, f64, f64) {
    let sp = softplus(z);
    let s = sigmoid(z);
    (
        sp * sp,
        2.0 * sp * s,
        2.0 * s * s + 2.0 * sp * s * (1.0 - s) / LIMIT_SOFTNESS,
    )
}

/// Which term of the objective to expand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Running(usize),
    Terminal,
}

/// Second-order Taylor model of one cost term.
#[derive(Debug, Clone, PartialEq)]
pub struct CostExpansion {
    pub l: f64,
    pub l_x: Vector,
    pub l_u: Vector,
    pub l_xx: Matrix,
    pub l_xu: Matrix,
    pub l_uu: Matrix,
}

/// Quadratic tracking cost
/// `Σ_k (x−r_k)ᵀQ(x−r_k) + uᵀRu + w·limit_penalty(u)` plus
/// `(x−r_H)ᵀQ_f(x−r_H)` at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    q: Matrix,
    r: Matrix,
    q_f: Matrix,
    reference: Vec<Vector>,
    control_limit_weight: f64,
    limits: Option<ControlLimits>,
}

fn check_psd(m: &Matrix, name: &str, strict: bool) -> Result<()> {
    if !m.is_square() || (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::InvalidInput(format!("{name} must be symmetric")));
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let floor = -1e-12 * (1.0 + m.amax());
    let ok = if strict {
        eig.iter().all(|&e| e > 0.0)
    } else {
        eig.iter().all(|&e| e >= floor)
    };
    if ok {
        Ok(())
    } else if strict {
        Err(Error::InvalidInput(format!("{name} must be positive definite")))
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive semidefinite")))
    }
}

impl CostModel {
    pub fn new(q: Matrix, r: Matrix, q_f: Matrix, reference: Vec<Vector>) -> Result<Self> {
        check_psd(&q, "Q", false)?;
        check_psd(&q_f, "Q_f", false)?;
        check_psd(&r, "R", true)?;
        if q.shape() != q_f.shape() {
            return Err(Error::DimensionMismatch("Q and Q_f differ in shape".into()));
        }
        if reference.len() < 2 {
            return Err(Error::InvalidInput("cost reference needs at least two targets".into()));
        }
        if reference.iter().any(|r| r.len() != q.nrows()) {
            return Err(Error::DimensionMismatch("reference entries must match Q".into()));
        }
        Ok(Self {
            q,
            r,
            q_f,
            reference,
            control_limit_weight: 0.0,
            limits: None,
        })
    }

    /// Adds the soft actuator-limit penalty.
    pub fn with_limits(mut self, limits: ControlLimits, weight: f64) -> Result<Self> {
        if limits.lower.len() != self.r.nrows() {
            return Err(Error::DimensionMismatch("limits must match R".into()));
        }
        if !(weight >= 0.0) {
            return Err(Error::InvalidInput("control_limit_weight >= 0".into()));
        }
        self.limits = Some(limits);
        self.control_limit_weight = weight;
        Ok(self)
    }

    /// Diagonal craft cost from the weight fixture.
    pub fn for_craft(reference: &ReferenceTrajectory, weights: &CostWeights, params: &CraftParams) -> Result<Self> {
        let w = weights;
        let diag = Vector::from_row_slice(&[w.position, w.position, w.theta, w.velocity, w.velocity, w.omega]);
        let q = Matrix::from_diagonal(&diag);
        let q_f = &q * w.terminal_scale;
        let r = Matrix::from_diagonal_element(CONTROL_DIM, CONTROL_DIM, w.control);
        Self::new(q, r, q_f, reference.target_vectors())?
            .with_limits(ControlLimits::for_craft(params), w.control_limit_weight)
    }

    pub fn horizon(&self) -> usize {
        self.reference.len() - 1
    }

    pub fn state_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn reference(&self) -> &[Vector] {
        &self.reference
    }

    pub fn limits(&self) -> Option<&ControlLimits> {
        self.limits.as_ref()
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn q_f(&self) -> &Matrix {
        &self.q_f
    }

    /// Soft penalty on control excess beyond the limits, with gradient and
    /// (diagonal) Hessian.
    fn limit_penalty(&self, u: &Vector) -> (f64, Vector, Vector) {
        let m = u.len();
        let (mut p, mut g, mut h) = (0.0, Vector::zeros(m), Vector::zeros(m));
        let Some(limits) = &self.limits else {
            return (p, g, h);
        };
        if self.control_limit_weight == 0.0 {
            return (p, g, h);
        }
        for i in 0..m {
            let (vu, du, hu) = squared_softplus(u[i] - limits.upper[i]);
            let (vl, dl, hl) = squared_softplus(limits.lower[i] - u[i]);
            p += vu + vl;
            g[i] = du - dl;
            h[i] = hu + hl;
        }
        let w = self.control_limit_weight;
        (w * p, g * w, h * w)
    }

    pub fn running_cost(&self, x: &Vector, u: &Vector, k: usize) -> f64 {
        let e = x - &self.reference[k];
        let tracking = e.dot(&(&self.q * &e));
        let effort = u.dot(&(&self.r * u));
        tracking + effort + self.limit_penalty(u).0
    }

    pub fn terminal_cost(&self, x: &Vector) -> f64 {
        let e = x - &self.reference[self.horizon()];
        e.dot(&(&self.q_f * &e))
    }

    pub fn total_cost(&self, traj: &Trajectory) -> Result<f64> {
        if traj.horizon() != self.horizon() {
            return Err(Error::HorizonMismatch {
                expected: self.horizon(),
                got: traj.horizon(),
            });
        }
        let states = traj.states();
        let running: f64 = traj
            .controls()
            .iter()
            .enumerate()
            .map(|(k, u)| self.running_cost(&states[k], u, k))
            .sum();
        Ok(running + self.terminal_cost(&states[self.horizon()]))
    }

    /// Analytic gradient and Hessian of one cost term. At the terminal stage
    /// the control blocks are zero and `u` is ignored.
    pub fn quadratize(&self, x: &Vector, u: &Vector, stage: Stage) -> CostExpansion {
        let n = self.state_dim();
        let m = self.control_dim();
        match stage {
            Stage::Running(k) => {
                let e = x - &self.reference[k];
                let qe = &self.q * &e;
                let ru = &self.r * u;
                let (pen, pen_g, pen_h) = self.limit_penalty(u);
                CostExpansion {
                    l: e.dot(&qe) + u.dot(&ru) + pen,
                    l_x: qe * 2.0,
                    l_u: ru * 2.0 + pen_g,
                    l_xx: &self.q * 2.0,
                    l_xu: Matrix::zeros(n, m),
                    l_uu: &self.r * 2.0 + Matrix::from_diagonal(&pen_h),
                }
            }
            Stage::Terminal => {
                let e = x - &self.reference[self.horizon()];
                let qe = &self.q_f * &e;
                CostExpansion {
                    l: e.dot(&qe),
                    l_x: qe * 2.0,
                    l_u: Vector::zeros(m),
                    l_xx: &self.q_f * 2.0,
                    l_xu: Matrix::zeros(n, m),
                    l_uu: Matrix::zeros(m, m),
                }
            }
        }
    }
}

/// Target-state helper: hold `s` for `horizon` steps.
pub fn stationary_reference(s: &State, horizon: usize, dt: f64) -> ReferenceTrajectory {
    let hold = State::new(s.x, s.y, 0.0, 0.0, 0.0, 0.0);
    ReferenceTrajectory {
        dt,
        targets: vec![hold; horizon + 1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_cost(q: Matrix, r: Matrix, q_f: Matrix, h: usize) -> CostModel {
        CostModel::new(q, r, q_f, vec![Vector::zeros(6); h + 1]).unwrap()
    }

    #[test]
    fn straight_reference_is_uniform() {
        let r = build_reference(&[[0.0, 0.0], [10.0, 0.0]], 10, 1.0, None).unwrap();
        assert_eq!(r.targets.len(), 11);
        for (k, t) in r.targets.iter().enumerate() {
            assert!((t.x - k as f64).abs() < 1e-12);
            assert!((t.vx - 1.0).abs() < 1e-12);
            assert_eq!(t.y, 0.0);
        }
    }

    #[test]
    fn degenerate_reference_is_rejected() {
        assert!(build_reference(&[[1.0, 1.0], [1.0, 1.0]], 5, 1.0, None).is_err());
        assert!(build_reference(&[[1.0, 1.0]], 5, 1.0, None).is_err());
        assert!(build_reference(&[[0.0, 0.0], [1.0, 0.0]], 0, 1.0, None).is_err());
    }

    #[test]
    fn l_shaped_reference_hits_the_corner() {
        let r = build_reference(&[[0.0, 0.0], [4.0, 0.0], [4.0, 3.0]], 7, 1.0, None).unwrap();
        let p = r.positions();
        assert_eq!(p.len(), 8);
        assert_eq!(p[4], [4.0, 0.0]);
        for w in p.windows(2) {
            // neighbours on either side of the corner share a leg, so chords are 1 m
            assert!((dist(w[0], w[1]) - 1.0).abs() < 1e-12);
        }
        assert!((p[7][1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_speed_stops_at_the_end() {
        let r = build_reference(&[[0.0, 0.0], [2.0, 0.0]], 5, 1.0, Some(1.0)).unwrap();
        let xs: Vec<f64> = r.targets.iter().map(|t| t.x).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn running_cost_at_reference_is_zero() {
        let c = simple_cost(
            Matrix::identity(6, 6),
            Matrix::identity(2, 2),
            Matrix::identity(6, 6),
            3,
        );
        assert_eq!(c.running_cost(&Vector::zeros(6), &Vector::zeros(2), 0), 0.0);
    }

    #[test]
    fn position_offset_cost() {
        let mut q = Matrix::zeros(6, 6);
        q[(0, 0)] = 1.0;
        q[(1, 1)] = 1.0;
        let r = Matrix::identity(2, 2);
        let c = simple_cost(q, r, Matrix::zeros(6, 6), 3);
        let x = Vector::from_row_slice(&[3.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.running_cost(&x, &Vector::zeros(2), 1), 25.0);
    }

    #[test]
    fn penalty_vanishes_deep_inside_limits() {
        let limits = ControlLimits::new(
            Vector::from_row_slice(&[0.0, -5.0]),
            Vector::from_row_slice(&[30.0, 5.0]),
        )
        .unwrap();
        let weight = 3.0;
        let c = simple_cost(Matrix::zeros(6, 6), Matrix::identity(2, 2), Matrix::zeros(6, 6), 2)
            .with_limits(limits, weight)
            .unwrap();
        let u = Vector::from_row_slice(&[15.0, 0.0]);
        let pen = c.running_cost(&Vector::zeros(6), &u, 0) - u.norm_squared();
        assert!(pen >= 0.0 && pen < 1e-9 * weight);
    }

    #[test]
    fn terminal_cost_examples() {
        let c = simple_cost(
            Matrix::zeros(6, 6),
            Matrix::identity(2, 2),
            Matrix::identity(6, 6) * 2.0,
            2,
        );
        let mut x = Vector::zeros(6);
        assert_eq!(c.terminal_cost(&x), 0.0);
        x[3] = 1.0;
        assert_eq!(c.terminal_cost(&x), 2.0);
        let z = simple_cost(Matrix::zeros(6, 6), Matrix::identity(2, 2), Matrix::zeros(6, 6), 2);
        assert_eq!(z.terminal_cost(&Vector::from_element(6, 7.0)), 0.0);
    }

    #[test]
    fn total_cost_checks_horizon() {
        let c = simple_cost(
            Matrix::identity(6, 6),
            Matrix::identity(2, 2),
            Matrix::identity(6, 6),
            3,
        );
        let t = Trajectory::new(0.1, vec![Vector::zeros(6); 3], vec![Vector::zeros(2); 2]).unwrap();
        assert!(matches!(
            c.total_cost(&t),
            Err(Error::HorizonMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn single_step_total_is_running_plus_terminal() {
        let c = simple_cost(
            Matrix::identity(6, 6),
            Matrix::identity(2, 2),
            Matrix::identity(6, 6) * 3.0,
            1,
        );
        let x0 = Vector::from_element(6, 0.5);
        let x1 = Vector::from_element(6, -0.25);
        let u = Vector::from_row_slice(&[1.0, 2.0]);
        let t = Trajectory::new(0.1, vec![x0.clone(), x1.clone()], vec![u.clone()]).unwrap();
        let expected = c.running_cost(&x0, &u, 0) + c.terminal_cost(&x1);
        assert_eq!(c.total_cost(&t).unwrap(), expected);
    }

    #[test]
    fn quadratize_at_reference_is_pure_quadratic() {
        let q = Matrix::from_diagonal(&Vector::from_row_slice(&[1.0, 2.0, 0.0, 0.1, 0.1, 0.3]));
        let r = Matrix::identity(2, 2) * 0.5;
        let c = simple_cost(q.clone(), r.clone(), q.clone(), 4);
        let e = c.quadratize(&Vector::zeros(6), &Vector::zeros(2), Stage::Running(2));
        assert_eq!(e.l, 0.0);
        assert_eq!(e.l_x, Vector::zeros(6));
        assert_eq!(e.l_u, Vector::zeros(2));
        assert_eq!(e.l_xx, q * 2.0);
        assert_eq!(e.l_uu, r * 2.0);
        assert_eq!(e.l_xu, Matrix::zeros(6, 2));
    }

    #[test]
    fn zero_limit_weight_is_exactly_quadratic() {
        let limits = ControlLimits::new(
            Vector::from_row_slice(&[0.0, -1.0]),
            Vector::from_row_slice(&[1.0, 1.0]),
        )
        .unwrap();
        let c = simple_cost(
            Matrix::identity(6, 6),
            Matrix::identity(2, 2),
            Matrix::identity(6, 6),
            2,
        )
        .with_limits(limits, 0.0)
        .unwrap();
        let u = Vector::from_row_slice(&[100.0, -50.0]);
        let e = c.quadratize(&Vector::zeros(6), &u, Stage::Running(0));
        assert_eq!(e.l_uu, Matrix::identity(2, 2) * 2.0);
        assert_eq!(e.l_u, &u * 2.0);
    }

    #[test]
    fn rejects_indefinite_weights() {
        let mut q = Matrix::identity(6, 6);
        q[(0, 0)] = -1.0;
        assert!(CostModel::new(
            q,
            Matrix::identity(2, 2),
            Matrix::identity(6, 6),
            vec![Vector::zeros(6); 2]
        )
        .is_err());
        assert!(CostModel::new(
            Matrix::identity(6, 6),
            Matrix::zeros(2, 2),
            Matrix::identity(6, 6),
            vec![Vector::zeros(6); 2]
        )
        .is_err());
    }

    #[test]
    fn deck_distances() {
        let deck = DeckGeometry::new(vec![vec![[-1.0, 0.0], [1.0, 0.0]]], 1.0).unwrap();
        assert_eq!(min_distance_to_deck([0.5, 0.0], &deck), 0.0);
        assert_eq!(min_distance_to_deck([0.0, 5.0], &deck), 5.0);
        let d2 = DeckGeometry::new(vec![vec![[0.0, 0.0], [1.0, 0.0]]], 1.0).unwrap();
        assert!((min_distance_to_deck([3.0, 4.0], &d2) - 20f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn deck_validation() {
        assert!(DeckGeometry::new(vec![], 1.0).is_err());
        assert!(DeckGeometry::new(vec![vec![[0.0, 0.0]]], 1.0).is_err());
        assert!(DeckGeometry::new(vec![vec![[0.0, 0.0], [1.0, 0.0]]], 0.0).is_err());
    }

    #[test]
    fn clamp_limits() {
        let l = ControlLimits::for_craft(&CraftParams::default());
        let u = l.clamp(&Vector::from_row_slice(&[-3.0, 9.0]));
        assert_eq!(u.as_slice(), &[0.0, 5.0]);
    }
}
