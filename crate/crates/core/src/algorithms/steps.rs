use crate::col::Bifunction;
use crate::error::{ColError, Result};
use crate::geometry::{lerp, BregmanGeometry, DecisionSet, Point};
use crate::oracles::best_response;

/// Learner state between rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmState {
    pub current: Point,
    /// Index of the round about to be played (1-based).
    pub round: usize,
}

impl AlgorithmState {
    pub fn new(set: &DecisionSet, start: Point, tol: f64) -> Result<Self> {
        set.check_member(&start, tol)?;
        Ok(AlgorithmState {
            current: start,
            round: 1,
        })
    }

    pub fn advance(&mut self, next: Point) {
        self.current = next;
        self.round += 1;
    }
}

/// x_{n+1} = argmin l_n.
pub fn greedy_step(state: &AlgorithmState, loss: &dyn Bifunction, tol: f64) -> Result<Point> {
    best_response(loss, &state.current, tol)
}

/// x_{n+1} = eta x_n + (1 - eta) x_n^*. `eta` is the weight kept on the
/// current iterate: eta = 0 is the greedy update and eta = 1 stays put.
pub fn mann_step(
    state: &AlgorithmState,
    loss: &dyn Bifunction,
    eta: f64,
    tol: f64,
) -> Result<Point> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(ColError::InvalidParameter(format!(
            "Mann weight {eta} outside [0, 1]"
        )));
    }
    let br = best_response(loss, &state.current, tol)?;
    mann_combine(&state.current, &br, eta)
}

fn mann_combine(x: &Point, br: &Point, eta: f64) -> Result<Point> {
    if eta == 0.0 {
        return Ok(br.clone());
    }
    if eta == 1.0 {
        return Ok(x.clone());
    }
    Point::new(lerp(br, x, eta))
}

/// One mirror-descent step on the observed gradient.
pub fn mirror_descent_step(
    state: &AlgorithmState,
    set: &DecisionSet,
    geometry: BregmanGeometry,
    gradient: &[f64],
    eta: f64,
) -> Result<Point> {
    geometry.mirror_step(set, &state.current, gradient, eta)
}

/// x_{n+1} = (x_n + x_n^*) / 2.
pub fn midpoint_step(state: &AlgorithmState, loss: &dyn Bifunction, tol: f64) -> Result<Point> {
    let br = best_response(loss, &state.current, tol)?;
    Point::new(lerp(&state.current, &br, 0.5))
}

/// x_{n+1} = (lambda x_n + x_n^*) / (1 + lambda), scalar decisions only.
pub fn lambda_trap_step(
    state: &AlgorithmState,
    loss: &dyn Bifunction,
    lambda: f64,
    tol: f64,
) -> Result<Point> {
    if state.current.dim() != 1 {
        return Err(ColError::DimensionMismatch {
            expected: 1,
            found: state.current.dim(),
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(ColError::InvalidParameter(format!(
            "lambda {lambda} must be >= 0"
        )));
    }
    let br = best_response(loss, &state.current, tol)?;
    if lambda == 0.0 {
        return Ok(br);
    }
    Point::new(vec![(lambda * state.current[0] + br[0]) / (1.0 + lambda)])
}
