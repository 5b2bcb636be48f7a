use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::col::{Bifunction, DecisionForm, Regularity};
use crate::error::{ColError, Result};
use crate::geometry::{dot, norm, DecisionSet, Point};

/// Convex objective for the optimization-to-equilibrium reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexFn {
    /// scale * ||x - center||^2
    SquaredDistance { center: Vec<f64>, scale: f64 },
    /// <weights, x>
    Linear { weights: Vec<f64> },
}

impl ConvexFn {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ConvexFn::SquaredDistance { center, scale } => {
                scale
                    * x.iter()
                        .zip(center)
                        .map(|(a, c)| (a - c).powi(2))
                        .sum::<f64>()
            }
            ConvexFn::Linear { weights } => dot(weights, x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexFn::SquaredDistance { center, scale } => x
                .iter()
                .zip(center)
                .map(|(a, c)| 2.0 * scale * (a - c))
                .collect(),
            ConvexFn::Linear { weights } => weights.clone(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            ConvexFn::SquaredDistance { center, .. } => center.len(),
            ConvexFn::Linear { weights } => weights.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EpSource {
    ConvexOpt(ConvexFn),
    /// Zero-sum game min_u max_v u^T A v over a product of simplices.
    MatrixGame(DMatrix<f64>),
    /// F(x) = M x + q with M positive semidefinite.
    LinearVi {
        m: DMatrix<f64>,
        q: Vec<f64>,
    },
}

/// f_x(x') = Phi(x, x') for a monotone equilibrium bifunction Phi.
#[derive(Clone, Debug)]
pub struct EpBifunction {
    source: EpSource,
    set: DecisionSet,
    skew_symmetric: bool,
    dual_lipschitz: f64,
    regularity: Regularity,
}

impl EpBifunction {
    pub fn convex_opt(h: ConvexFn, set: DecisionSet) -> Result<Self> {
        if h.dim() != set.dim() {
            return Err(ColError::DimensionMismatch {
                expected: set.dim(),
                found: h.dim(),
            });
        }
        let (alpha, g) = match &h {
            ConvexFn::SquaredDistance { center, scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(ColError::InvalidParameter(format!(
                        "scale {scale} must be > 0"
                    )));
                }
                (2.0 * scale, 2.0 * scale * (set.max_norm() + norm(center)))
            }
            ConvexFn::Linear { weights } => (0.0, norm(weights)),
        };
        let regularity = Regularity::certified(alpha, 0.0, alpha, g)?;
        Ok(EpBifunction {
            source: EpSource::ConvexOpt(h),
            set,
            skew_symmetric: true,
            dual_lipschitz: g,
            regularity,
        })
    }

    pub fn matrix_game(a: DMatrix<f64>) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(ColError::NonFinite);
        }
        let set = DecisionSet::product(vec![
            DecisionSet::simplex(a.nrows())?,
            DecisionSet::simplex(a.ncols())?,
        ])?;
        let col_max = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        let row_max = a.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        let g = (col_max * col_max + row_max * row_max).sqrt();
        let beta = a.clone().singular_values().max();
        let regularity = Regularity::certified(0.0, beta, 0.0, g)?;
        Ok(EpBifunction {
            source: EpSource::MatrixGame(a),
            set,
            skew_symmetric: true,
            dual_lipschitz: g,
            regularity,
        })
    }

    pub fn linear_vi(m: DMatrix<f64>, q: Vec<f64>, set: DecisionSet) -> Result<Self> {
        let d = set.dim();
        if m.nrows() != d || m.ncols() != d || q.len() != d {
            return Err(ColError::DimensionMismatch {
                expected: d,
                found: m.nrows().max(m.ncols()).max(q.len()),
            });
        }
        if m.iter().chain(&q).any(|v| !v.is_finite()) {
            return Err(ColError::NonFinite);
        }
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone()).eigenvalues;
        let min_eig = eig.min();
        let scale = 1.0 + m.abs().max();
        if min_eig < -1e-12 * scale {
            return Err(ColError::InvalidParameter(format!(
                "linear VI matrix is not positive semidefinite (smallest symmetric eigenvalue {min_eig:e})"
            )));
        }
        let skew = sym.abs().max() <= 1e-15 * scale;
        let m_norm = m.clone().singular_values().max();
        let g = m_norm * set.max_norm() + norm(&q);
        let dual_lipschitz = m_norm * set.diameter() + g;
        let regularity = Regularity::certified(0.0, m_norm, 0.0, g)?;
        Ok(EpBifunction {
            source: EpSource::LinearVi { m, q },
            set,
            skew_symmetric: skew,
            dual_lipschitz,
            regularity,
        })
    }

    pub fn source(&self) -> &EpSource {
        &self.source
    }

    pub fn is_skew_symmetric(&self) -> bool {
        self.skew_symmetric
    }

    /// Lipschitz constant of Phi(., x), uniform in x.
    pub fn dual_lipschitz(&self) -> f64 {
        self.dual_lipschitz
    }

    /// Phi(x, x').
    pub fn phi(&self, x: &[f64], x_prime: &[f64]) -> f64 {
        match &self.source {
            EpSource::ConvexOpt(h) => h.value(x_prime) - h.value(x),
            EpSource::MatrixGame(a) => {
                let (u, v) = x.split_at(a.nrows());
                let (u2, v2) = x_prime.split_at(a.nrows());
                bilinear(a, u2, v) - bilinear(a, u, v2)
            }
            EpSource::LinearVi { .. } => {
                let f = self.operator_at(x);
                f.iter()
                    .zip(x_prime.iter().zip(x))
                    .map(|(fi, (b, a))| fi * (b - a))
                    .sum()
            }
        }
    }

    fn operator_at(&self, x: &[f64]) -> Vec<f64> {
        match &self.source {
            EpSource::LinearVi { m, q } => {
                let mut f = (m * DVector::from_column_slice(x)).as_slice().to_vec();
                for (fi, qi) in f.iter_mut().zip(q) {
                    *fi += qi;
                }
                f
            }
            EpSource::MatrixGame(a) => {
                let (u, v) = x.split_at(a.nrows());
                let av = a * DVector::from_column_slice(v);
                let atu = a.tr_mul(&DVector::from_column_slice(u));
                av.iter().copied().chain(atu.iter().map(|t| -t)).collect()
            }
            EpSource::ConvexOpt(h) => h.gradient(x),
        }
    }
}

fn bilinear(a: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, ui) in u.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            s += ui * a[(i, j)] * vj;
        }
    }
    s
}

impl Bifunction for EpBifunction {
    fn set(&self) -> &DecisionSet {
        &self.set
    }

    fn eval(&self, query: &[f64], decision: &[f64]) -> f64 {
        self.phi(query, decision)
    }

    fn grad(&self, query: &[f64], decision: &[f64]) -> Vec<f64> {
        match &self.source {
            EpSource::ConvexOpt(h) => h.gradient(decision),
            // linear in the decision argument
            EpSource::MatrixGame(_) | EpSource::LinearVi { .. } => self.operator_at(query),
        }
    }

    fn regularity(&self) -> &Regularity {
        &self.regularity
    }

    fn label(&self) -> String {
        match &self.source {
            EpSource::ConvexOpt(_) => "convex_opt".into(),
            EpSource::MatrixGame(a) => format!("matrix_game({}x{})", a.nrows(), a.ncols()),
            EpSource::LinearVi { .. } => "linear_vi".into(),
        }
    }

    fn decision_form(&self, query: &[f64]) -> DecisionForm {
        let d = query.len();
        match &self.source {
            EpSource::ConvexOpt(ConvexFn::SquaredDistance { center, scale }) => {
                DecisionForm::Separable {
                    curvature: vec![2.0 * scale; d],
                    linear: center.iter().map(|c| -2.0 * scale * c).collect(),
                    constant: scale * center.iter().map(|c| c * c).sum::<f64>()
                        - self.source_value(query),
                }
            }
            EpSource::ConvexOpt(ConvexFn::Linear { weights }) => DecisionForm::Separable {
                curvature: vec![0.0; d],
                linear: weights.clone(),
                constant: -dot(weights, query),
            },
            EpSource::MatrixGame(_) => DecisionForm::Separable {
                curvature: vec![0.0; d],
                linear: self.operator_at(query),
                constant: 0.0,
            },
            EpSource::LinearVi { .. } => {
                let f = self.operator_at(query);
                let constant = -dot(&f, query);
                DecisionForm::Separable {
                    curvature: vec![0.0; d],
                    linear: f,
                    constant,
                }
            }
        }
    }

    fn closed_form_best_response(&self, query: &[f64]) -> Option<Point> {
        match self.decision_form(query) {
            DecisionForm::Separable {
                curvature, linear, ..
            } => self.set.minimize_separable_quadratic(&curvature, &linear),
            DecisionForm::General => None,
        }
    }
}

impl EpBifunction {
    fn source_value(&self, x: &[f64]) -> f64 {
        match &self.source {
            EpSource::ConvexOpt(h) => h.value(x),
            _ => 0.0,
        }
    }
}
