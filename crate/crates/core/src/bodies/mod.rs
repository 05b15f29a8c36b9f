//! Generating sets and p-convex bodies.
//!
//! A generating set `S` is always treated as symmetric: the envelope ball is
//! `conv(S ∪ −S)` and the p-body's unit ball is the absolutely p-convex hull
//! of `S`.

mod gauge;
mod measures;

pub use gauge::{envelope_gauge, p_gauge_upper, GaugeCertificate};
pub(crate) use gauge::binomial;
pub use measures::{
    cube_sandwich, delta_nonconvexity, delta_search, dx_estimate, max_gauge_on_ellipsoid, DeltaEstimate, DxEstimate, SandwichOutcome,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf, random_unit_vector, rank};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratingSet {
    dimension: usize,
    points: Vec<Vec<f64>>,
    label: String,
}

impl GeneratingSet {
    /// Validates finiteness, consistent dimension and full rank.
    pub fn new(points: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        let gs = Self::unchecked_rank(points, label)?;
        let r = rank(&gs.points, gs.dimension);
        if r < gs.dimension {
            return Err(Error::Degenerate(format!(
                "generating set spans a {r}-dimensional subspace of {}-space",
                gs.dimension
            )));
        }
        Ok(gs)
    }

    /// Same checks as [`GeneratingSet::new`] except the rank test.
    pub fn unchecked_rank(points: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::input("generating set is empty"))?;
        let dimension = first.len();
        if dimension == 0 {
            return Err(Error::input("points must have positive dimension"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dimension {
                return Err(Error::input(format!("point {i} has dimension {} (expected {dimension})", p.len())));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::input(format!("point {i} has a non-finite coordinate")));
            }
        }
        Ok(GeneratingSet {
            dimension,
            points,
            label: label.into(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `S ∪ −S`, positives first.
    pub fn symmetric_points(&self) -> Vec<Vec<f64>> {
        let mut out = self.points.clone();
        out.extend(self.points.iter().map(|p| p.iter().map(|x| -x).collect()));
        out
    }

    pub fn max_sup_norm(&self) -> f64 {
        self.points.iter().map(|p| norm_inf(p)).fold(0.0, f64::max)
    }

    pub fn max_norm2(&self) -> f64 {
        self.points.iter().map(|p| norm2(p)).fold(0.0, f64::max)
    }

    /// `±e_1, …, ±e_n`.
    pub fn signed_basis(n: usize) -> Self {
        let mut pts = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            pts.push(e.clone());
            e[i] = -1.0;
            pts.push(e);
        }
        GeneratingSet {
            dimension: n,
            points: pts,
            label: format!("signed-basis-{n}"),
        }
    }

    /// `count` independent uniform points on the unit sphere of `R^dim`.
    pub fn sphere_sample(count: usize, dim: usize, seed: u64) -> Result<Self> {
        if count == 0 || dim == 0 {
            return Err(Error::input("sphere sample needs a positive count and dimension"));
        }
        let mut r = crate::rng::rng(seed);
        let pts = (0..count).map(|_| random_unit_vector(&mut r, dim)).collect();
        Self::new(pts, format!("sphere-{dim}-{count}"))
    }

    /// Every vertex of `[-1,1]^n`, bit `j` of the index set means coordinate `j` is `+1`.
    pub fn cube_vertices(n: usize) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::input(format!("cube dimension {n} outside 1..=20")));
        }
        let pts = (0u32..(1u32 << n))
            .map(|mask| (0..n).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        Ok(GeneratingSet {
            dimension: n,
            points: pts,
            label: format!("cube-vertices-{n}"),
        })
    }

    /// Is every generator `±e_j` and every coordinate covered?
    fn is_signed_basis(&self) -> bool {
        let mut covered = vec![false; self.dimension];
        for p in &self.points {
            let mut nz = p.iter().enumerate().filter(|(_, x)| **x != 0.0);
            match (nz.next(), nz.next()) {
                (Some((j, x)), None) if x.abs() == 1.0 => covered[j] = true,
                _ => return false,
            }
        }
        covered.iter().all(|&c| c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticKind {
    LpBall,
    Generic,
}

/// A generating set with an exponent `p ∈ (0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PBody {
    generators: GeneratingSet,
    p: f64,
    kind: AnalyticKind,
}

impl PBody {
    /// Tags the body as an `ℓ_p` ball when the generators are exactly `±e_j`.
    pub fn new(generators: GeneratingSet, p: f64) -> Result<Self> {
        let kind = if generators.is_signed_basis() {
            AnalyticKind::LpBall
        } else {
            AnalyticKind::Generic
        };
        Self::with_kind(generators, p, kind)
    }

    pub fn with_kind(generators: GeneratingSet, p: f64, kind: AnalyticKind) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::input(format!("exponent p = {p} outside (0,1]")));
        }
        if kind == AnalyticKind::LpBall && !generators.is_signed_basis() {
            return Err(Error::input("lp_ball bodies must be generated by ±e_j"));
        }
        Ok(PBody { generators, p, kind })
    }

    pub fn lp_ball(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("dimension must be positive"));
        }
        let g = GeneratingSet::signed_basis(n).with_label(format!("lp-ball-{n}-p{p}"));
        Self::with_kind(g, p, AnalyticKind::LpBall)
    }

    pub fn generators(&self) -> &GeneratingSet {
        &self.generators
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kind(&self) -> AnalyticKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.generators.dimension()
    }
}
