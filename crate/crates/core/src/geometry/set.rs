use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::point::{check_dim, dist, norm, Point};
use crate::error::{ColError, Result};

/// Largest grid an oracle is allowed to enumerate.
const MAX_GRID_POINTS: usize = 50_000_000;

/// Compact convex decision sets with closed-form Euclidean projection.
///
/// `Simplex` carries an optional coordinate floor: the set
/// `{x : sum x = 1, x_i >= floor}`, which is the probability simplex when the
/// floor is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecisionSet {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Point,
        radius: f64,
    },
    Simplex {
        dim: usize,
        #[serde(default)]
        floor: f64,
    },
    Product {
        parts: Vec<DecisionSet>,
    },
}

impl DecisionSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let s = DecisionSet::Box { lower, upper };
        s.validate()?;
        Ok(s)
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        let s = DecisionSet::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        Self::floored_simplex(dim, 0.0)
    }

    pub fn floored_simplex(dim: usize, floor: f64) -> Result<Self> {
        let s = DecisionSet::Simplex { dim, floor };
        s.validate()?;
        Ok(s)
    }

    pub fn product(parts: Vec<DecisionSet>) -> Result<Self> {
        let s = DecisionSet::Product { parts };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DecisionSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(ColError::InvalidSet(format!(
                        "box bounds have lengths {} and {}",
                        lower.len(),
                        upper.len()
                    )));
                }
                if lower.is_empty() {
                    return Err(ColError::InvalidSet("box has dimension 0".into()));
                }
                if lower.iter().chain(upper).any(|v| !v.is_finite()) {
                    return Err(ColError::InvalidSet("box bounds must be finite".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| l > u) {
                    return Err(ColError::InvalidSet("box requires lower <= upper".into()));
                }
                if lower.iter().zip(upper).all(|(l, u)| l == u) {
                    return Err(ColError::InvalidSet("box is a single point".into()));
                }
            }
            DecisionSet::Ball { center, radius } => {
                if center.dim() == 0 {
                    return Err(ColError::InvalidSet("ball has dimension 0".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(ColError::InvalidSet(format!(
                        "ball radius {radius} must be positive"
                    )));
                }
            }
            DecisionSet::Simplex { dim, floor } => {
                if *dim < 2 {
                    return Err(ColError::InvalidSet(
                        "simplex needs at least 2 coordinates".into(),
                    ));
                }
                if !(floor.is_finite() && *floor >= 0.0 && *floor * (*dim as f64) < 1.0) {
                    return Err(ColError::InvalidSet(format!(
                        "simplex floor {floor} must lie in [0, 1/{dim})"
                    )));
                }
            }
            DecisionSet::Product { parts } => {
                if parts.is_empty() {
                    return Err(ColError::InvalidSet("empty product".into()));
                }
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            DecisionSet::Box { lower, .. } => lower.len(),
            DecisionSet::Ball { center, .. } => center.dim(),
            DecisionSet::Simplex { dim, .. } => *dim,
            DecisionSet::Product { parts } => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// Dimension of the affine hull (what a grid has to cover).
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            DecisionSet::Box { lower, upper } => {
                lower.iter().zip(upper).filter(|(l, u)| l < u).count()
            }
            DecisionSet::Ball { center, .. } => center.dim(),
            DecisionSet::Simplex { dim, .. } => dim - 1,
            DecisionSet::Product { parts } => parts.iter().map(|p| p.intrinsic_dim()).sum(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            DecisionSet::Box { lower, upper } => dist(lower, upper),
            DecisionSet::Ball { radius, .. } => 2.0 * radius,
            DecisionSet::Simplex { dim, floor } => {
                std::f64::consts::SQRT_2 * simplex_scale(*dim, *floor)
            }
            DecisionSet::Product { parts } => parts
                .iter()
                .map(|p| p.diameter().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// A canonical interior point: box midpoint, ball center, simplex barycenter.
    pub fn center(&self) -> Point {
        let mut out = Vec::with_capacity(self.dim());
        self.center_into(&mut out);
        Point::from_raw(out)
    }

    fn center_into(&self, out: &mut Vec<f64>) {
        match self {
            DecisionSet::Box { lower, upper } => {
                out.extend(lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)))
            }
            DecisionSet::Ball { center, .. } => out.extend_from_slice(center),
            DecisionSet::Simplex { dim, .. } => {
                out.extend(std::iter::repeat_n(1.0 / *dim as f64, *dim))
            }
            DecisionSet::Product { parts } => parts.iter().for_each(|p| p.center_into(out)),
        }
    }

    /// Largest Euclidean norm attained on the set.
    pub fn max_norm(&self) -> f64 {
        match self {
            DecisionSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            DecisionSet::Ball { center, radius } => norm(center) + radius,
            DecisionSet::Simplex { dim, floor } => {
                let top = floor + simplex_scale(*dim, *floor);
                (top * top + (*dim as f64 - 1.0) * floor * floor).sqrt()
            }
            DecisionSet::Product { parts } => parts
                .iter()
                .map(|p| p.max_norm().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Distance-like measure of how far `p` is from the set (0 inside).
    pub fn violation(&self, p: &[f64]) -> f64 {
        match self {
            DecisionSet::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, u))| (l - x).max(x - u).max(0.0))
                .fold(0.0, f64::max),
            DecisionSet::Ball { center, radius } => (dist(p, center) - radius).max(0.0),
            DecisionSet::Simplex { floor, .. } => {
                let below = p.iter().map(|x| (floor - x).max(0.0)).fold(0.0, f64::max);
                below.max((p.iter().sum::<f64>() - 1.0).abs())
            }
            DecisionSet::Product { parts } => {
                let mut offset = 0;
                let mut worst: f64 = 0.0;
                for part in parts {
                    let d = part.dim();
                    worst = worst.max(part.violation(&p[offset..offset + d]));
                    offset += d;
                }
                worst
            }
        }
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.dim() && self.violation(p) <= tol
    }

    pub fn check_member(&self, p: &[f64], tol: f64) -> Result<()> {
        check_dim(self.dim(), p.len())?;
        let v = self.violation(p);
        if v <= tol {
            Ok(())
        } else {
            Err(ColError::OutsideSet { violation: v })
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, p: &[f64]) -> Result<Point> {
        check_dim(self.dim(), p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(ColError::NonFinite);
        }
        Ok(Point::from_raw(self.project_raw(p)))
    }

    pub(crate) fn project_raw(&self, p: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(p.len());
        self.project_into(p, &mut out);
        out
    }

    fn project_into(&self, p: &[f64], out: &mut Vec<f64>) {
        match self {
            DecisionSet::Box { lower, upper } => out.extend(
                p.iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(x, (l, u))| x.clamp(*l, *u)),
            ),
            DecisionSet::Ball { center, radius } => {
                let r = dist(p, center);
                if r <= *radius {
                    out.extend_from_slice(p);
                } else {
                    let s = radius / r;
                    out.extend(p.iter().zip(center.iter()).map(|(x, c)| c + s * (x - c)));
                }
            }
            DecisionSet::Simplex { dim, floor } => {
                let s = simplex_scale(*dim, *floor);
                if *floor == 0.0 {
                    out.extend(project_unit_simplex(p));
                } else {
                    let shifted: Vec<f64> = p.iter().map(|x| (x - floor) / s).collect();
                    out.extend(
                        project_unit_simplex(&shifted)
                            .into_iter()
                            .map(|w| floor + s * w),
                    );
                }
            }
            DecisionSet::Product { parts } => {
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    part.project_into(&p[offset..offset + d], out);
                    offset += d;
                }
            }
        }
    }

    /// Minimizer of the linear function `<g, x>` over the set.
    pub fn minimize_linear(&self, g: &[f64]) -> Result<Point> {
        check_dim(self.dim(), g.len())?;
        let mut out = Vec::with_capacity(g.len());
        self.lmo_into(g, &mut out);
        Ok(Point::from_raw(out))
    }

    fn lmo_into(&self, g: &[f64], out: &mut Vec<f64>) {
        match self {
            DecisionSet::Box { lower, upper } => {
                out.extend(g.iter().zip(lower.iter().zip(upper)).map(|(gi, (l, u))| {
                    if *gi > 0.0 {
                        *l
                    } else if *gi < 0.0 {
                        *u
                    } else {
                        0.5 * (l + u)
                    }
                }))
            }
            DecisionSet::Ball { center, radius } => {
                let n = norm(g);
                if n == 0.0 {
                    out.extend_from_slice(center);
                } else {
                    out.extend(center.iter().zip(g).map(|(c, gi)| c - radius * gi / n));
                }
            }
            DecisionSet::Simplex { dim, floor } => {
                let s = simplex_scale(*dim, *floor);
                let best = argmin(g);
                out.extend((0..*dim).map(|i| if i == best { floor + s } else { *floor }));
            }
            DecisionSet::Product { parts } => {
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    part.lmo_into(&g[offset..offset + d], out);
                    offset += d;
                }
            }
        }
    }

    /// Exact minimizer of `0.5 * sum c_i x_i^2 + <b, x>` when the set admits
    /// one in closed form (boxes always; balls and simplices when the
    /// curvature is uniform or zero on the part). `None` otherwise.
    pub fn minimize_separable_quadratic(&self, curvature: &[f64], linear: &[f64]) -> Option<Point> {
        if curvature.len() != self.dim() || linear.len() != self.dim() {
            return None;
        }
        let mut out = Vec::with_capacity(self.dim());
        self.sep_quad_into(curvature, linear, &mut out)
            .then(|| Point::from_raw(out))
    }

    fn sep_quad_into(&self, c: &[f64], b: &[f64], out: &mut Vec<f64>) -> bool {
        match self {
            DecisionSet::Box { lower, upper } => {
                for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                    let v = if c[i] > 0.0 {
                        (-b[i] / c[i]).clamp(*l, *u)
                    } else if b[i] > 0.0 {
                        *l
                    } else if b[i] < 0.0 {
                        *u
                    } else {
                        0.5 * (l + u)
                    };
                    out.push(v);
                }
                true
            }
            DecisionSet::Ball { .. } | DecisionSet::Simplex { .. } => {
                let c0 = c[0];
                if c.iter().any(|ci| *ci != c0) {
                    return false;
                }
                if c0 > 0.0 {
                    let target: Vec<f64> = b.iter().map(|bi| -bi / c0).collect();
                    self.project_into(&target, out);
                } else {
                    self.lmo_into(b, out);
                }
                true
            }
            DecisionSet::Product { parts } => {
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    if !part.sep_quad_into(&c[offset..offset + d], &b[offset..offset + d], out) {
                        return false;
                    }
                    offset += d;
                }
                true
            }
        }
    }

    /// Coordinate ranges of simplex blocks, if the set is a simplex or a
    /// product of simplices (the domain of the entropy geometry).
    pub fn simplex_blocks(&self) -> Option<Vec<Range<usize>>> {
        match self {
            DecisionSet::Simplex { dim, floor } if *floor == 0.0 => Some(vec![0..*dim]),
            DecisionSet::Product { parts } => {
                let mut blocks = Vec::new();
                let mut offset = 0;
                for part in parts {
                    for r in part.simplex_blocks()? {
                        blocks.push(r.start + offset..r.end + offset);
                    }
                    offset += part.dim();
                }
                Some(blocks)
            }
            _ => None,
        }
    }

    /// Random point of the set. Uniform for boxes, balls and simplices.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut out = Vec::with_capacity(self.dim());
        self.sample_into(rng, &mut out);
        Point::from_raw(out)
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            DecisionSet::Box { lower, upper } => out.extend(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| l + (u - l) * rng.random::<f64>()),
            ),
            DecisionSet::Ball { center, radius } => {
                let d = center.dim();
                let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let n = norm(&dir).max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                out.extend(center.iter().zip(&dir).map(|(c, v)| c + r * v / n));
            }
            DecisionSet::Simplex { dim, floor } => {
                let s = simplex_scale(*dim, *floor);
                let e: Vec<f64> = (0..*dim).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = e.iter().sum();
                out.extend(e.iter().map(|v| floor + s * v / total));
            }
            DecisionSet::Product { parts } => parts.iter().for_each(|p| p.sample_into(rng, out)),
        }
    }

    /// Grid covering the set with `points_per_dim` points along each
    /// intrinsic direction. Ball grids include the radial projection of
    /// bounding-box points that fall outside, so the boundary is covered.
    pub fn grid(&self, points_per_dim: usize) -> Result<Vec<Point>> {
        let k = self.intrinsic_dim();
        if k > 3 {
            return Err(ColError::GridUnsupported { dim: k });
        }
        if points_per_dim < 2 {
            return Err(ColError::InvalidParameter(
                "grid needs at least 2 points per dimension".into(),
            ));
        }
        let estimate = (points_per_dim as f64).powi(k as i32);
        if estimate > MAX_GRID_POINTS as f64 {
            return Err(ColError::InvalidParameter(format!(
                "grid of {estimate:e} points is too large"
            )));
        }
        Ok(self
            .grid_raw(points_per_dim)
            .into_iter()
            .map(Point::from_raw)
            .collect())
    }

    fn grid_raw(&self, m: usize) -> Vec<Vec<f64>> {
        match self {
            DecisionSet::Box { lower, upper } => {
                let axes: Vec<Vec<f64>> = lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| {
                        if l == u {
                            vec![*l]
                        } else {
                            linspace(*l, *u, m)
                        }
                    })
                    .collect();
                cartesian(&axes)
            }
            DecisionSet::Ball { center, radius } => {
                let axes: Vec<Vec<f64>> = center
                    .iter()
                    .map(|c| linspace(c - radius, c + radius, m))
                    .collect();
                cartesian(&axes)
                    .into_iter()
                    .map(|p| self.project_raw(&p))
                    .collect()
            }
            DecisionSet::Simplex { dim, floor } => {
                let s = simplex_scale(*dim, *floor);
                let total = m - 1;
                compositions(total, *dim)
                    .into_iter()
                    .map(|c| {
                        c.into_iter()
                            .map(|ci| floor + s * ci as f64 / total as f64)
                            .collect()
                    })
                    .collect()
            }
            DecisionSet::Product { parts } => {
                let mut acc: Vec<Vec<f64>> = vec![Vec::new()];
                for part in parts {
                    let g = part.grid_raw(m);
                    acc = acc
                        .iter()
                        .flat_map(|prefix| {
                            g.iter().map(move |q| {
                                let mut v = prefix.clone();
                                v.extend_from_slice(q);
                                v
                            })
                        })
                        .collect();
                }
                acc
            }
        }
    }
}

fn simplex_scale(dim: usize, floor: f64) -> f64 {
    1.0 - dim as f64 * floor
}

fn argmin(g: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in g.iter().enumerate() {
        if *v < g[best] {
            best = i;
        }
    }
    best
}

/// Sort-based exact projection onto the probability simplex.
pub fn project_unit_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| {
            if i + 1 == m {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (m - 1) as f64
            }
        })
        .collect()
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut acc: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        acc = acc
            .iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    acc
}

/// All ways of writing `total` as an ordered sum of `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
