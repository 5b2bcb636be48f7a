use nalgebra::{DMatrix, DVector};

use crate::col::{Bifunction, DecisionForm, Regularity};
use crate::error::{ColError, Result};
use crate::geometry::{norm, norm_sq, DecisionSet, Point};

/// Linear part of the tracking target.
#[derive(Clone, Debug, PartialEq)]
pub enum Coupling {
    /// lambda * I
    Scalar(f64),
    Matrix(DMatrix<f64>),
}

impl Coupling {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Coupling::Scalar(l) => x.iter().map(|v| l * v).collect(),
            Coupling::Matrix(k) => (k * DVector::from_column_slice(x)).as_slice().to_vec(),
        }
    }

    pub fn operator_norm(&self) -> f64 {
        match self {
            Coupling::Scalar(l) => l.abs(),
            Coupling::Matrix(k) => k.clone().singular_values().max(),
        }
    }
}

/// f_x(x') = (alpha / 2) ||x' - K x - c||^2, the canonical (alpha, beta)-regular
/// family with beta = alpha ||K|| and best response proj(K x + c).
#[derive(Clone, Debug)]
pub struct QuadraticTracking {
    alpha: f64,
    coupling: Coupling,
    offset: Vec<f64>,
    set: DecisionSet,
    regularity: Regularity,
    label: String,
}

impl QuadraticTracking {
    pub fn new(alpha: f64, lambda: f64, offset: Point, set: DecisionSet) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(ColError::InvalidParameter(format!(
                "lambda {lambda} must be >= 0"
            )));
        }
        let label = format!("quadratic_tracking(alpha={alpha}, lambda={lambda})");
        Self::build(alpha, Coupling::Scalar(lambda), offset, set, label)
    }

    pub fn with_matrix(
        alpha: f64,
        k: DMatrix<f64>,
        offset: Point,
        set: DecisionSet,
    ) -> Result<Self> {
        if k.nrows() != set.dim() || k.ncols() != set.dim() {
            return Err(ColError::DimensionMismatch {
                expected: set.dim(),
                found: k.nrows().max(k.ncols()),
            });
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(ColError::NonFinite);
        }
        let label = format!("quadratic_tracking(alpha={alpha}, matrix)");
        Self::build(alpha, Coupling::Matrix(k), offset, set, label)
    }

    /// Planar rotation target: alpha = beta, the best response is an isometry.
    pub fn rotation(alpha: f64, angle: f64, set: DecisionSet) -> Result<Self> {
        if set.dim() != 2 {
            return Err(ColError::DimensionMismatch {
                expected: 2,
                found: set.dim(),
            });
        }
        let (s, c) = angle.sin_cos();
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let mut p = Self::with_matrix(alpha, q, Point::zeros(2), set)?;
        p.label = format!("rotation(alpha={alpha}, angle={angle})");
        Ok(p)
    }

    fn build(
        alpha: f64,
        coupling: Coupling,
        offset: Point,
        set: DecisionSet,
        label: String,
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ColError::InvalidParameter(format!(
                "alpha {alpha} must be > 0"
            )));
        }
        if offset.dim() != set.dim() {
            return Err(ColError::DimensionMismatch {
                expected: set.dim(),
                found: offset.dim(),
            });
        }
        let k = coupling.operator_norm();
        // sup of ||x|| over the set: the diameter when the set holds the origin
        let reach = if set.contains(&vec![0.0; set.dim()], 0.0) {
            set.diameter()
        } else {
            set.max_norm()
        };
        let g = alpha * (k * reach + norm(&offset) + reach);
        let regularity = Regularity::certified(alpha, alpha * k, alpha, g)?;
        Ok(QuadraticTracking {
            alpha,
            coupling,
            offset: offset.into_vec(),
            set,
            regularity,
            label,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Unprojected target K x + c.
    pub fn target(&self, x: &[f64]) -> Vec<f64> {
        let mut t = self.coupling.apply(x);
        for (ti, ci) in t.iter_mut().zip(&self.offset) {
            *ti += ci;
        }
        t
    }
}

impl Bifunction for QuadraticTracking {
    fn set(&self) -> &DecisionSet {
        &self.set
    }

    fn eval(&self, query: &[f64], decision: &[f64]) -> f64 {
        let t = self.target(query);
        0.5 * self.alpha
            * decision
                .iter()
                .zip(&t)
                .map(|(z, ti)| (z - ti).powi(2))
                .sum::<f64>()
    }

    fn grad(&self, query: &[f64], decision: &[f64]) -> Vec<f64> {
        let t = self.target(query);
        decision
            .iter()
            .zip(&t)
            .map(|(z, ti)| self.alpha * (z - ti))
            .collect()
    }

    fn regularity(&self) -> &Regularity {
        &self.regularity
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn decision_form(&self, query: &[f64]) -> DecisionForm {
        let t = self.target(query);
        DecisionForm::Separable {
            curvature: vec![self.alpha; t.len()],
            linear: t.iter().map(|v| -self.alpha * v).collect(),
            constant: 0.5 * self.alpha * norm_sq(&t),
        }
    }

    fn closed_form_best_response(&self, query: &[f64]) -> Option<Point> {
        Some(Point::from_raw(self.set.project_raw(&self.target(query))))
    }
}
