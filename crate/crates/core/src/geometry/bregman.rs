use serde::{Deserialize, Serialize};

use super::point::{check_dim, dist_sq, Point};
use super::set::DecisionSet;
use crate::error::{ColError, Result};
use crate::tolerance::ENTROPY_FLOOR;

/// Mirror map used by mirror descent. Both maps are 1-strongly convex in
/// their natural norm (l2 for Euclidean, l1 for entropy on the simplex).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BregmanGeometry {
    #[default]
    Euclidean,
    #[serde(alias = "negative_entropy")]
    Entropy,
}

impl BregmanGeometry {
    pub fn name(self) -> &'static str {
        match self {
            BregmanGeometry::Euclidean => "euclidean",
            BregmanGeometry::Entropy => "entropy",
        }
    }

    /// Smoothness constant L of the mirror map. Entropy is not smooth up to
    /// the simplex boundary, so it has none.
    pub fn smoothness(self) -> Option<f64> {
        match self {
            BregmanGeometry::Euclidean => Some(1.0),
            BregmanGeometry::Entropy => None,
        }
    }

    pub fn check_set(self, set: &DecisionSet) -> Result<()> {
        match self {
            BregmanGeometry::Euclidean => Ok(()),
            BregmanGeometry::Entropy => match set.simplex_blocks() {
                Some(_) => Ok(()),
                None => Err(ColError::GeometryMismatch(
                    "entropy geometry needs a simplex or a product of simplices".into(),
                )),
            },
        }
    }

    /// B_R(x_prime || x).
    pub fn bregman(self, x_prime: &[f64], x: &[f64]) -> Result<f64> {
        check_dim(x.len(), x_prime.len())?;
        match self {
            BregmanGeometry::Euclidean => Ok(0.5 * dist_sq(x_prime, x)),
            BregmanGeometry::Entropy => {
                let mut total = 0.0;
                for (i, (&p, &q)) in x_prime.iter().zip(x).enumerate() {
                    if q <= 0.0 {
                        return Err(ColError::EntropyDomain { index: i, value: q });
                    }
                    if p < 0.0 {
                        return Err(ColError::EntropyDomain { index: i, value: p });
                    }
                    // generalized KL; 0 ln 0 = 0
                    let plogp = if p > 0.0 { p * (p / q).ln() } else { 0.0 };
                    total += plogp - p + q;
                }
                Ok(total.max(0.0))
            }
        }
    }

    /// argmin over the set of <eta g, x'> + B_R(x' || x).
    pub fn mirror_step(self, set: &DecisionSet, x: &[f64], g: &[f64], eta: f64) -> Result<Point> {
        check_dim(set.dim(), x.len())?;
        check_dim(set.dim(), g.len())?;
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(ColError::InvalidParameter(format!(
                "step size {eta} must be finite and >= 0"
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(ColError::NonFinite);
        }
        match self {
            BregmanGeometry::Euclidean => {
                let y: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - eta * gi).collect();
                set.project(&y)
            }
            BregmanGeometry::Entropy => {
                let blocks = set.simplex_blocks().ok_or_else(|| {
                    ColError::GeometryMismatch(
                        "entropy geometry needs a simplex or a product of simplices".into(),
                    )
                })?;
                let mut out = vec![0.0; x.len()];
                for block in blocks {
                    let logits: Vec<f64> = block
                        .clone()
                        .map(|i| x[i].max(ENTROPY_FLOOR).ln() - eta * g[i])
                        .collect();
                    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
                    let z: f64 = w.iter().sum();
                    for (k, i) in block.enumerate() {
                        out[i] = w[k] / z;
                    }
                }
                Point::new(out)
            }
        }
    }
}
