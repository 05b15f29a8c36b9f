//! Minimum-volume enclosing ellipsoid of a centrally symmetric point set.
//!
//! Each input point stands for the pair `±p`, so the ellipsoid is centred at
//! the origin. Barycentric-coordinate ascent on `log det Σ u_i p_i p_iᵀ`
//! (Khachiyan) with Todd–Yildirim away steps; the inverse moment matrix and
//! the leverage scores are maintained by Sherman–Morrison updates and
//! recomputed from scratch periodically.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-7;
pub const MAX_ITERATIONS: usize = 100_000;
const RECOMPUTE_EVERY: usize = 500;

/// The set `{y : yᵀ M y <= scale}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub shape_matrix: DMatrix<f64>,
    pub scale: f64,
}

impl Ellipsoid {
    pub fn new(shape_matrix: DMatrix<f64>, scale: f64) -> Result<Self> {
        let n = shape_matrix.nrows();
        if shape_matrix.ncols() != n || n == 0 {
            return Err(Error::input("shape matrix must be square and nonempty"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::input(format!("ellipsoid scale must be positive, got {scale}")));
        }
        let asym = (&shape_matrix - shape_matrix.transpose()).abs().max();
        if asym > 1e-9 * shape_matrix.abs().max().max(1.0) {
            return Err(Error::input(format!("shape matrix not symmetric (defect {asym:e})")));
        }
        let sym = (&shape_matrix + shape_matrix.transpose()) * 0.5;
        if sym.clone().cholesky().is_none() {
            return Err(Error::input("shape matrix is not positive definite"));
        }
        Ok(Ellipsoid {
            shape_matrix: sym,
            scale,
        })
    }

    /// Euclidean unit ball in `dim` dimensions.
    pub fn unit_ball(dim: usize) -> Self {
        Ellipsoid {
            shape_matrix: DMatrix::identity(dim, dim),
            scale: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.shape_matrix.nrows()
    }

    /// Gauge of the ellipsoid: `sqrt(yᵀMy / scale)`.
    pub fn norm(&self, y: &[f64]) -> f64 {
        self.inner(y, y).max(0.0).sqrt()
    }

    /// Inner product whose unit ball is this ellipsoid.
    pub fn inner(&self, y: &[f64], z: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.shape_matrix[(i, j)] * z[j];
            }
            s += y[i] * row;
        }
        s / self.scale
    }

    pub fn contains(&self, y: &[f64], tolerance: f64) -> bool {
        self.inner(y, y) <= 1.0 + tolerance
    }

    /// Lower-triangular `L` with `M/scale = L Lᵀ`, so the ellipsoid norm is `‖Lᵀy‖₂`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        let normalized = &self.shape_matrix / self.scale;
        normalized
            .cholesky()
            .map(|c| c.l())
            .expect("shape matrix validated positive definite")
    }

    /// Maps a Euclidean unit vector `u` onto the boundary point `L⁻ᵀu`.
    pub fn boundary_point(&self, u: &[f64]) -> Vec<f64> {
        let l = self.cholesky_factor();
        let lt = l.transpose();
        let v = DVector::from_column_slice(u);
        let y = lt
            .solve_upper_triangular(&v)
            .expect("triangular factor of a positive definite matrix is invertible");
        y.iter().copied().collect()
    }

    /// Point of the ellipsoid maximizing `⟨z, y⟩` (Euclidean pairing).
    pub fn support_point(&self, z: &[f64]) -> Vec<f64> {
        let normalized = &self.shape_matrix / self.scale;
        let zi = DVector::from_column_slice(z);
        let a = normalized
            .cholesky()
            .expect("validated positive definite")
            .solve(&zi);
        let h = zi.dot(&a).max(0.0).sqrt();
        if h == 0.0 {
            return vec![0.0; z.len()];
        }
        a.iter().map(|v| v / h).collect()
    }

    /// Semi-axis lengths, ascending.
    pub fn radii(&self) -> Vec<f64> {
        let normalized = &self.shape_matrix / self.scale;
        let mut r: Vec<f64> = normalized
            .symmetric_eigenvalues()
            .iter()
            .map(|ev| 1.0 / ev.sqrt())
            .collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r
    }
}

#[derive(Debug, Clone)]
pub struct MveeReport {
    pub ellipsoid: Ellipsoid,
    pub weights: Vec<f64>,
    /// `max_i p_iᵀX⁻¹p_i / n - 1` at termination.
    pub gap: f64,
    pub iterations: usize,
}

pub fn mvee(points: &[Vec<f64>], tolerance: f64) -> Result<Ellipsoid> {
    mvee_report(points, tolerance).map(|r| r.ellipsoid)
}

pub fn mvee_report(points: &[Vec<f64>], tolerance: f64) -> Result<MveeReport> {
    if points.is_empty() {
        return Err(Error::Degenerate("no points".into()));
    }
    let n = points[0].len();
    if n == 0 || points.iter().any(|p| p.len() != n) {
        return Err(Error::input("points must share a positive dimension"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::input("tolerance must be positive"));
    }
    let k = points.len();
    let pts: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_column_slice(p)).collect();
    let mut u = vec![1.0 / k as f64; k];

    let moment = |u: &[f64]| -> DMatrix<f64> {
        let mut x = DMatrix::zeros(n, n);
        for (p, &w) in pts.iter().zip(u) {
            if w > 0.0 {
                x.ger(w, p, p, 1.0);
            }
        }
        x
    };
    let invert = |x: DMatrix<f64>| -> Result<DMatrix<f64>> {
        let scale = x.abs().max();
        let ch = x
            .cholesky()
            .ok_or_else(|| Error::Degenerate("point set does not span the ambient space".into()))?;
        let diag_min = ch.l().diagonal().iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));
        if diag_min * diag_min <= 1e-13 * scale {
            return Err(Error::Degenerate("point set does not span the ambient space".into()));
        }
        Ok(ch.inverse())
    };
    let scores = |xinv: &DMatrix<f64>| -> Vec<f64> { pts.iter().map(|p| p.dot(&(xinv * p))).collect() };

    let mut xinv = invert(moment(&u))?;
    let mut g = scores(&xinv);
    let nf = n as f64;
    let mut iterations = 0;
    let mut gap;
    loop {
        let (jp, gp) = g
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        gap = gp / nf - 1.0;
        if gap <= tolerance || iterations >= MAX_ITERATIONS {
            break;
        }
        let (jm, gm) = g
            .iter()
            .enumerate()
            .filter(|(i, _)| u[*i] > 0.0)
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let away_gap = 1.0 - gm / nf;
        let (j, tau) = if away_gap > gap && u[jm] < 1.0 {
            let raw = if gm <= 1.0 + 1e-12 { f64::NEG_INFINITY } else { (gm / nf - 1.0) / (gm - 1.0) };
            let floor = -u[jm] / (1.0 - u[jm]);
            let tau = raw.max(floor);
            let beta = tau / (1.0 - tau);
            if 1.0 + beta * gm > 1e-10 {
                (jm, tau)
            } else {
                (jp, (gp / nf - 1.0) / (gp - 1.0))
            }
        } else {
            (jp, (gp / nf - 1.0) / (gp - 1.0))
        };
        let beta = tau / (1.0 - tau);
        let w = &xinv * &pts[j];
        let gj = g[j];
        let denom = 1.0 + beta * gj;
        let coef = beta / denom;
        xinv.ger(-coef, &w, &w, 1.0);
        xinv /= 1.0 - tau;
        for (i, p) in pts.iter().enumerate() {
            let pw = p.dot(&w);
            g[i] = (g[i] - coef * pw * pw) / (1.0 - tau);
        }
        for (i, ui) in u.iter_mut().enumerate() {
            *ui *= 1.0 - tau;
            if i == j {
                *ui += tau;
            }
            if *ui < 1e-300 {
                *ui = 0.0;
            }
        }
        iterations += 1;
        if iterations % RECOMPUTE_EVERY == 0 {
            xinv = invert(moment(&u))?;
            g = scores(&xinv);
        }
    }
    xinv = invert(moment(&u))?;
    g = scores(&xinv);
    let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    gap = gmax / nf - 1.0;
    if gap > tolerance {
        return Err(Error::numerical(format!(
            "MVEE did not reach tolerance {tolerance:e} in {iterations} iterations (gap {gap:e})"
        )));
    }
    let shape = (&xinv + xinv.transpose()) * 0.5;
    Ok(MveeReport {
        ellipsoid: Ellipsoid {
            shape_matrix: shape,
            scale: nf,
        },
        weights: u,
        gap,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unit_vector;
    use crate::rng::rng;

    #[test]
    fn cross_polytope_gives_unit_ball() {
        let pts = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let e = mvee(&pts, 1e-9).unwrap();
        let r = e.radii();
        assert!((r[0] - 1.0).abs() < 1e-9 && (r[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn square_gives_ball_of_radius_sqrt2() {
        // symmetry: the MVEE of a square is its circumscribed disc
        let pts = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let e = mvee(&pts, 1e-9).unwrap();
        for r in e.radii() {
            assert!((r - 2f64.sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn random_points_inside() {
        let mut g = rng(11);
        let pts: Vec<Vec<f64>> = (0..100).map(|_| random_unit_vector(&mut g, 3)).collect();
        let tol = 1e-7;
        let e = mvee(&pts, tol).unwrap();
        assert!(pts.iter().all(|p| e.contains(p, tol)));
    }

    #[test]
    fn rank_deficient_is_degenerate() {
        let pts = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![-1.0, -2.0]];
        assert!(matches!(mvee(&pts, 1e-7), Err(Error::Degenerate(_))));
    }

    #[test]
    fn stretched_axes() {
        let pts = vec![vec![3.0, 0.0], vec![0.0, 0.5]];
        let e = mvee(&pts, 1e-10).unwrap();
        let r = e.radii();
        assert!((r[0] - 0.5).abs() < 1e-7, "{r:?}");
        assert!((r[1] - 3.0).abs() < 1e-7);
    }

    #[test]
    fn boundary_and_support_points() {
        let e = Ellipsoid::new(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])), 1.0).unwrap();
        let b = e.boundary_point(&[1.0, 0.0]);
        assert!((e.norm(&b) - 1.0).abs() < 1e-12);
        let s = e.support_point(&[1.0, 0.0]);
        assert!((s[0] - 0.5).abs() < 1e-12 && s[1].abs() < 1e-12);
    }
}
