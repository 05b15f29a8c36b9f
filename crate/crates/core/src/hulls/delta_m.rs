//! `Δ_m S`: averages `(1/m) Σ λ_k x_k` of `m` star-hull elements, decided by
//! LP-bounded branch-and-bound over per-generator multiplicities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::bodies::GeneratingSet;
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm2, sub};
use crate::optim::{solve_lp, LpOutcome, LpProblem};

/// `x = (1/m) Σ α_i s_i` with `|α_i| ≤ multiplicity_i`, `Σ multiplicity_i ≤ m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaMCertificate {
    pub m: u64,
    pub multiplicities: Vec<u64>,
    pub alphas: Vec<f64>,
}

impl DeltaMCertificate {
    /// The single generator `s_j` with multiplicity `m`.
    pub fn generator(m: u64, k: usize, j: usize, sign: f64) -> Self {
        let mut multiplicities = vec![0; k];
        let mut alphas = vec![0.0; k];
        multiplicities[j] = m;
        alphas[j] = sign * m as f64;
        DeltaMCertificate { m, multiplicities, alphas }
    }

    pub fn point(&self, s: &GeneratingSet) -> Vec<f64> {
        let mut out = vec![0.0; s.dimension()];
        for (i, &a) in self.alphas.iter().enumerate() {
            if a != 0.0 {
                axpy(a / self.m as f64, s.point(i), &mut out);
            }
        }
        out
    }

    pub fn check_structure(&self, s: &GeneratingSet) -> Result<()> {
        if self.multiplicities.len() != s.len() || self.alphas.len() != s.len() {
            return Err(Error::numerical("certificate length differs from the generating set"));
        }
        let total: u64 = self.multiplicities.iter().sum();
        if total > self.m {
            return Err(Error::numerical(format!("multiplicities sum to {total} > m = {}", self.m)));
        }
        for (i, (&mu, &a)) in self.multiplicities.iter().zip(&self.alphas).enumerate() {
            if a.abs() > mu as f64 * (1.0 + 1e-12) {
                return Err(Error::numerical(format!("|alpha_{i}| = {} exceeds multiplicity {mu}", a.abs())));
            }
        }
        Ok(())
    }

    /// Structure check plus reconstruction of `x` within `tol`.
    pub fn verify(&self, s: &GeneratingSet, x: &[f64], tol: f64) -> Result<f64> {
        self.check_structure(s)?;
        let err = norm2(&sub(&self.point(s), x));
        if err > tol {
            return Err(Error::numerical(format!("certificate misses the point by {err:e}")));
        }
        Ok(err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DeltaMVerdict {
    Member { certificate: DeltaMCertificate, nodes: u64 },
    NonMember { nodes: u64 },
    /// Node budget exhausted before a decision.
    Undecided { nodes: u64 },
}

pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;
const INTEGRALITY_TOL: f64 = 1e-9;
const PRUNE_TOL: f64 = 1e-9;

struct Node {
    bound: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    alphas: Vec<f64>,
    mus: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // min-heap on the LP bound
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.partial_cmp(&self.bound).unwrap_or(Ordering::Equal)
    }
}

/// Variables per generator `i`: `α⁺_i, α⁻_i, μ_i, t_i` with
/// `α⁺ + α⁻ + t − μ = 0`; objective `Σ μ_i`.
fn relaxation(s: &GeneratingSet, target: &[f64], lower: &[f64], upper: &[f64]) -> Result<Option<(f64, Vec<f64>, Vec<f64>)>> {
    let k = s.len();
    let n = s.dimension();
    let nv = 4 * k;
    let mut objective = vec![0.0; nv];
    let mut bounds = vec![(0.0, f64::INFINITY); nv];
    for i in 0..k {
        objective[4 * i + 2] = 1.0;
        bounds[4 * i + 2] = (lower[i], upper[i]);
    }
    let mut rows = Vec::with_capacity(n + k);
    for j in 0..n {
        let mut r = vec![0.0; nv];
        for i in 0..k {
            r[4 * i] = s.point(i)[j];
            r[4 * i + 1] = -s.point(i)[j];
        }
        rows.push(r);
    }
    for i in 0..k {
        let mut r = vec![0.0; nv];
        r[4 * i] = 1.0;
        r[4 * i + 1] = 1.0;
        r[4 * i + 2] = -1.0;
        r[4 * i + 3] = 1.0;
        rows.push(r);
    }
    let mut rhs = target.to_vec();
    rhs.extend(std::iter::repeat_n(0.0, k));
    let lp = LpProblem::new(objective, rows, rhs, bounds)?;
    match solve_lp(&lp)? {
        LpOutcome::Optimal(sol) => {
            let alphas = (0..k).map(|i| sol.x[4 * i] - sol.x[4 * i + 1]).collect();
            let mus = (0..k).map(|i| sol.x[4 * i + 2]).collect();
            Ok(Some((sol.value, alphas, mus)))
        }
        LpOutcome::Infeasible(_) => Ok(None),
        LpOutcome::Unbounded { .. } => Err(Error::numerical("Δ_m relaxation unbounded")),
    }
}

/// Decides `x ∈ Δ_m S` exactly (up to LP tolerances).
pub fn delta_m_membership(s: &GeneratingSet, m: u64, x: &[f64], node_budget: u64) -> Result<DeltaMVerdict> {
    if m == 0 {
        return Err(Error::input("m must be at least 1"));
    }
    if x.len() != s.dimension() {
        return Err(Error::input("query dimension does not match the generating set"));
    }
    let k = s.len();
    let mf = m as f64;
    let target: Vec<f64> = x.iter().map(|v| v * mf).collect();
    let mut heap = BinaryHeap::new();
    let mut nodes = 0u64;
    let root_upper = vec![mf; k];
    match relaxation(s, &target, &vec![0.0; k], &root_upper)? {
        None => return Ok(DeltaMVerdict::NonMember { nodes: 1 }),
        Some((bound, alphas, mus)) => heap.push(Node {
            bound,
            lower: vec![0.0; k],
            upper: root_upper,
            alphas,
            mus,
        }),
    }
    nodes += 1;
    while let Some(node) = heap.pop() {
        let Node { ref alphas, ref mus, .. } = node;
        if node.bound > mf + PRUNE_TOL {
            // best-first: every remaining node is at least as bad
            return Ok(DeltaMVerdict::NonMember { nodes });
        }
        // rounding |α| up gives a feasible multiplicity vector whenever it fits
        let rounded: Vec<u64> = alphas.iter().map(|a| (a.abs() - INTEGRALITY_TOL).ceil().max(0.0) as u64).collect();
        if rounded.iter().sum::<u64>() <= m {
            let alphas = alphas
                .iter()
                .zip(&rounded)
                .map(|(a, &r)| a.clamp(-(r as f64), r as f64))
                .collect();
            return Ok(DeltaMVerdict::Member {
                certificate: DeltaMCertificate {
                    m,
                    multiplicities: rounded,
                    alphas,
                },
                nodes,
            });
        }
        // branch on the most fractional multiplicity
        let branch = mus
            .iter()
            .enumerate()
            .map(|(i, v)| (i, (v - v.floor()).min(v.ceil() - v)))
            .filter(|(_, f)| *f > INTEGRALITY_TOL)
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(b.0.cmp(&a.0)));
        let Some((i, _)) = branch else {
            // integral μ with Σμ ≤ m + tol but rounding failed: μ binds |α|, so tolerance noise
            continue;
        };
        let v = mus[i];
        for (lo, hi) in [(node.lower[i], v.floor()), (v.ceil(), node.upper[i])] {
            if lo > hi {
                continue;
            }
            if nodes >= node_budget {
                return Ok(DeltaMVerdict::Undecided { nodes });
            }
            nodes += 1;
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            lower[i] = lo;
            upper[i] = hi;
            if let Some((bound, alphas, mus)) = relaxation(s, &target, &lower, &upper)? {
                if bound <= mf + PRUNE_TOL {
                    heap.push(Node {
                        bound,
                        lower,
                        upper,
                        alphas,
                        mus,
                    });
                }
            }
        }
    }
    Ok(DeltaMVerdict::NonMember { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(s: &GeneratingSet, m: u64, x: &[f64]) -> DeltaMVerdict {
        delta_m_membership(s, m, x, DEFAULT_NODE_BUDGET).unwrap()
    }

    #[test]
    fn generators_belong_for_every_m() {
        let s = GeneratingSet::new(vec![vec![1.0, 0.5], vec![-0.3, 1.0]], "g").unwrap();
        for m in 1..5 {
            match verdict(&s, m, &[-0.3, 1.0]) {
                DeltaMVerdict::Member { certificate, .. } => {
                    certificate.verify(&s, &[-0.3, 1.0], 1e-8).unwrap();
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn star_hull_versus_two_term_average() {
        let s = GeneratingSet::signed_basis(2);
        assert!(matches!(verdict(&s, 1, &[0.5, 0.5]), DeltaMVerdict::NonMember { .. }));
        match verdict(&s, 2, &[0.5, 0.5]) {
            DeltaMVerdict::Member { certificate, .. } => {
                certificate.verify(&s, &[0.5, 0.5], 1e-8).unwrap();
                assert_eq!(certificate.multiplicities.iter().sum::<u64>(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn outside_envelope_is_rejected_at_root() {
        let s = GeneratingSet::signed_basis(2);
        assert!(matches!(verdict(&s, 3, &[0.9, 0.9]), DeltaMVerdict::NonMember { nodes: 1 }));
    }
}
