//! Quotients of p-normed bodies: the p-convex version of the cube quotient,
//! the ℓ₁-to-cube sign operator, and the cubic quotient obtained from an
//! ℓ₁-like subspace of the envelope.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::quotient::{cube_quotient_with, represent_cube_point, QuotientOptions, QuotientReport};
use super::vertex::{full_mask, to_signs};
use crate::bodies::{delta_nonconvexity, envelope_gauge, GeneratingSet, PBody};
use crate::calibration::Calibration;
use crate::error::{Error, Result};
use crate::hulls::pconv_contraction_bound;
use crate::linalg::norm_inf;

/// `2k × m` matrix whose columns run through one representative (first
/// coordinate `+1`) of each antipodal pair of `D_{2k}`, cyclically.
pub fn l1_to_cube_operator(m: usize, k: usize) -> Result<Vec<Vec<i8>>> {
    if k == 0 || 2 * k > 20 {
        return Err(Error::input(format!("k = {k} outside 1..=10")));
    }
    let classes = 1usize << (2 * k - 1);
    if classes > m {
        return Err(Error::input(format!("2^(2k−1) = {classes} exceeds m = {m}")));
    }
    let mut rows = vec![vec![0i8; m]; 2 * k];
    for col in 0..m {
        let r = col % classes;
        rows[0][col] = 1;
        for (i, row) in rows.iter_mut().enumerate().skip(1) {
            row[col] = if r >> (i - 1) & 1 == 1 { 1 } else { -1 };
        }
    }
    Ok(rows)
}

fn columns(matrix: &[Vec<i8>]) -> Vec<Vec<f64>> {
    let m = matrix.first().map_or(0, |r| r.len());
    (0..m).map(|j| matrix.iter().map(|row| row[j] as f64).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorImage {
    pub rows: usize,
    pub columns: usize,
    /// Every vertex of the cube is `±` a column (integer comparison).
    pub vertices_covered: bool,
    /// Every column is a cube vertex, so the image lies in `B∞`.
    pub columns_in_cube: bool,
    pub min_vertex_gauge: f64,
    pub max_vertex_gauge: f64,
}

impl OperatorImage {
    pub fn equals_cube(&self, tolerance: f64) -> bool {
        self.vertices_covered
            && self.columns_in_cube
            && (self.min_vertex_gauge - 1.0).abs() <= tolerance
            && (self.max_vertex_gauge - 1.0).abs() <= tolerance
    }
}

/// Compares `conv(±columns)` with `B∞`: exact vertex coverage plus the LP
/// gauge of every cube vertex.
pub fn verify_operator_image(matrix: &[Vec<i8>]) -> Result<OperatorImage> {
    let dim = matrix.len();
    if dim == 0 || dim > 20 {
        return Err(Error::input("operator must have 1..=20 rows"));
    }
    let cols = columns(matrix);
    let columns_in_cube = cols.iter().all(|c| c.iter().all(|&v| v == 1.0 || v == -1.0));
    let full = full_mask(dim);
    let mut seen = vec![false; 1 << dim];
    for c in &cols {
        let mask = c.iter().enumerate().fold(0u32, |m, (j, &v)| if v > 0.0 { m | 1 << j } else { m });
        seen[mask as usize] = true;
        seen[(!mask & full) as usize] = true;
    }
    let s = GeneratingSet::new(cols, "operator-columns")?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in 0..=full {
        let g = envelope_gauge(&s, &to_signs(v, dim))?.value;
        lo = lo.min(g);
        hi = hi.max(g);
    }
    Ok(OperatorImage {
        rows: dim,
        columns: s.len(),
        vertices_covered: seen.iter().all(|&b| b),
        columns_in_cube,
        min_vertex_gauge: lo,
        max_vertex_gauge: hi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSandwich {
    pub samples: usize,
    /// Largest certified `‖x‖_Y` over the samples, from the p-triangle
    /// inequality applied to each Γ certificate.
    pub max_gauge_bound: f64,
    pub bound: f64,
    pub all_within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PNormedReport {
    pub p: f64,
    pub quotient: QuotientReport,
    /// `p^{−1/p}(1−θ)^{1−1/p}` at `θ_final`.
    pub contraction: f64,
    /// `d · C_over_eps · contraction`: `(1/(C·contraction)) B∞_σ ⊂ B_Y ⊂ d B∞_σ`.
    pub distance_estimate: f64,
    /// `C p^{−1/p} ε^{4−5/p} (1−ln ε)^{1/p−1} d^{2/p−1}` with the calibrated `C`.
    pub formula_value: f64,
    pub sampled: SampledSandwich,
}

pub fn pnormed_quotient(body: &PBody, epsilon: f64, calibration: &Calibration, seed: u64, opts: &QuotientOptions) -> Result<PNormedReport> {
    pnormed_from_generators(body.generators(), body.p(), epsilon, calibration, seed, opts, 20)
}

fn pnormed_from_generators(
    s: &GeneratingSet,
    p: f64,
    epsilon: f64,
    calibration: &Calibration,
    seed: u64,
    opts: &QuotientOptions,
    samples: usize,
) -> Result<PNormedReport> {
    let quotient = cube_quotient_with(s, epsilon, calibration, seed, opts)?;
    let phi = quotient.theta_final;
    let contraction = pconv_contraction_bound(p, phi)?;
    let d = quotient.constants_used.d;
    let bound = quotient.scale * contraction;

    let mut max_gauge_bound = 0.0f64;
    let mut used = 0;
    for cert in quotient.certificates.iter().filter(|c| c.verified).take(samples) {
        let rep = represent_cube_point(&quotient, s, &cert.point)?;
        let r = &rep.representation;
        // ‖Σ c_k P_σ s_k‖_Y ≤ (Σ |c_k|^p)^{1/p}
        let sum: f64 = r
            .terms
            .iter()
            .map(|t| ((1.0 - phi) * phi.powf(t.level as f64) * t.lambda.abs()).powf(p))
            .sum();
        max_gauge_bound = max_gauge_bound.max(rep.scale * sum.powf(1.0 / p));
        used += 1;
    }
    let formula_value = calibration.big_c
        * p.powf(-1.0 / p)
        * epsilon.powf(4.0 - 5.0 / p)
        * (1.0 - epsilon.ln()).powf(1.0 / p - 1.0)
        * d.powf(2.0 / p - 1.0);
    Ok(PNormedReport {
        p,
        contraction,
        distance_estimate: d * bound,
        formula_value,
        sampled: SampledSandwich {
            samples: used,
            max_gauge_bound,
            bound,
            all_within: max_gauge_bound <= bound * (1.0 + 1e-9),
        },
        quotient,
    })
}

/// A subspace of the envelope close to ℓ₁^m, supplied by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum L1Subspace {
    /// `span{e_i : i ∈ list}`, mapped coordinatewise (other coordinates to 0).
    Coordinates(Vec<usize>),
    /// Explicit basis `y_1, …, y_m`; the operator is extended by zero on the
    /// orthogonal complement of the span.
    Basis(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicReport {
    pub p: f64,
    pub m: usize,
    pub k: usize,
    pub operator: Vec<Vec<i8>>,
    /// Envelope-to-`ℓ∞` norm of the extended operator: `max_s ‖Ts‖∞`.
    pub operator_norm: f64,
    /// Largest envelope gauge of a cube vertex for `TS`; generators are scaled by it.
    pub rho: f64,
    pub delta: f64,
    pub delta_certified: bool,
    /// `A = (p^{1/p} δ / 4)^{p/(1−p)}`.
    pub a_value: f64,
    /// `c ln A / ln ln A`, when `A > e^e`.
    pub dimension_bound: Option<f64>,
    pub dimension: usize,
    pub quotient: PNormedReport,
}

#[allow(clippy::too_many_arguments)]
pub fn cubic_quotient_from_nonconvexity(
    body: &PBody,
    subspace: &L1Subspace,
    k: Option<usize>,
    calibration: &Calibration,
    seed: u64,
    opts: &QuotientOptions,
) -> Result<CubicReport> {
    let n = body.dimension();
    let p = body.p();
    let gens = body.generators();
    // T as an (2k × n) real matrix
    let (m, t_matrix, operator, k) = {
        let m = match subspace {
            L1Subspace::Coordinates(list) => list.len(),
            L1Subspace::Basis(b) => b.len(),
        };
        if m == 0 {
            return Err(Error::input("empty ℓ₁ subspace"));
        }
        let k = match k {
            Some(k) => k,
            None => (1..=7).rev().find(|&k| 1usize << (2 * k - 1) <= m).ok_or_else(|| Error::input("m < 2"))?,
        };
        let op = l1_to_cube_operator(m, k)?;
        let c = DMatrix::from_fn(2 * k, m, |i, j| op[i][j] as f64);
        let t = match subspace {
            L1Subspace::Coordinates(list) => {
                let mut t = DMatrix::zeros(2 * k, n);
                for (j, &i) in list.iter().enumerate() {
                    if i >= n {
                        return Err(Error::input(format!("coordinate {i} out of range")));
                    }
                    t.set_column(i, &c.column(j));
                }
                t
            }
            L1Subspace::Basis(b) => {
                if b.iter().any(|v| v.len() != n) {
                    return Err(Error::input("basis vector dimension mismatch"));
                }
                let y = DMatrix::from_fn(n, m, |i, j| b[j][i]);
                let pinv = y
                    .clone()
                    .pseudo_inverse(1e-12)
                    .map_err(|e| Error::numerical(format!("pseudo-inverse failed: {e}")))?;
                if (&pinv * &y - DMatrix::identity(m, m)).abs().max() > 1e-8 {
                    return Err(Error::input("basis vectors are linearly dependent"));
                }
                &c * pinv
            }
        };
        (m, t, op, k)
    };
    let pushed: Vec<Vec<f64>> = gens
        .points()
        .iter()
        .map(|s| {
            let v = &t_matrix * nalgebra::DVector::from_column_slice(s);
            v.iter().copied().collect::<Vec<f64>>()
        })
        .filter(|v: &Vec<f64>| norm_inf(v) > 1e-12)
        .collect();
    let operator_norm = pushed.iter().map(|v| norm_inf(v)).fold(0.0, f64::max);
    let pushed_set = GeneratingSet::new(pushed, "pushed-forward")?;
    let dim = 2 * k;
    let mut rho = 0.0f64;
    for v in 0..=full_mask(dim) {
        rho = rho.max(envelope_gauge(&pushed_set, &to_signs(v, dim))?.value);
    }
    // exact unit gauges stay untouched so vertex generators remain exact
    let scaled = if (rho - 1.0).abs() <= 1e-12 {
        pushed_set
    } else {
        GeneratingSet::new(pushed_set.points().iter().map(|s| s.iter().map(|x| x * rho).collect()).collect(), "pushed-forward")?
    };
    let quotient = pnormed_from_generators(&scaled, p, 0.5, calibration, seed, opts, 20)?;
    let delta = delta_nonconvexity(body, 8, seed)?;
    let a_value = if p < 1.0 {
        (p.powf(1.0 / p) * delta.value / 4.0).powf(p / (1.0 - p))
    } else {
        f64::NAN
    };
    let threshold = std::f64::consts::E.powf(std::f64::consts::E);
    let dimension_bound = (a_value > threshold).then(|| calibration.cubic_c * a_value.ln() / a_value.ln().ln());
    Ok(CubicReport {
        p,
        m,
        k,
        operator,
        operator_norm,
        rho,
        delta: delta.value,
        delta_certified: delta.certified,
        a_value,
        dimension_bound,
        dimension: quotient.quotient.sigma.len(),
        quotient,
    })
}
