//! Pigeonhole selection of a common agreement set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::vertex::{project, VertexSet};
use crate::bodies::binomial;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingSelection {
    pub tau: Vec<usize>,
    /// Patterns on `τ` (bit `i` is coordinate `tau[i]`).
    pub patterns: VertexSet,
    /// First candidate vertex realizing each pattern, aligned with `patterns`.
    pub representatives: Vec<u32>,
    /// Candidates whose trimmed agreement set is `τ`.
    pub supporters: usize,
    /// `2ⁿ / (2^{n−k} C(n,k))`, guaranteed when the candidates cover `D_n`.
    pub lower_bound: f64,
}

/// Keeps the `k` lowest set bits.
fn trim(mask: u32, k: usize) -> u32 {
    let mut out = 0u32;
    let mut rest = mask;
    for _ in 0..k {
        let low = rest & rest.wrapping_neg();
        out |= low;
        rest &= !low;
    }
    out
}

fn coords(mask: u32) -> Vec<usize> {
    (0..32).filter(|j| mask >> j & 1 == 1).collect()
}

/// `candidates` holds `(vertex, agreement set)` pairs as bitmasks over `[n]`.
pub fn counting_select(n: usize, candidates: &[(u32, u32)], k: usize) -> Result<CountingSelection> {
    if candidates.is_empty() {
        return Err(Error::input("no candidates"));
    }
    if k == 0 || k > n || n > 20 {
        return Err(Error::input(format!("need 1 ≤ k ≤ n ≤ 20 (k = {k}, n = {n})")));
    }
    let mut groups: BTreeMap<u32, BTreeMap<u32, u32>> = BTreeMap::new();
    for &(vertex, agree) in candidates {
        if (agree.count_ones() as usize) < k {
            return Err(Error::input(format!("agreement set of size {} < k = {k}", agree.count_ones())));
        }
        let tau = trim(agree, k);
        groups
            .entry(tau)
            .or_default()
            .entry(project(vertex, &coords(tau)))
            .and_modify(|v| *v = (*v).min(vertex))
            .or_insert(vertex);
    }
    // lexicographic order on sorted coordinate lists
    let (tau, patterns) = groups
        .into_iter()
        .map(|(mask, pats)| (coords(mask), pats))
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| b.0.cmp(&a.0)))
        .expect("non-empty");
    let supporters = candidates
        .iter()
        .filter(|&&(_, agree)| coords(trim(agree, k)) == tau)
        .count();
    let lower_bound = 2f64.powi(k as i32) / binomial(n as u64, k as u64) as f64;
    Ok(CountingSelection {
        patterns: VertexSet::new(k, patterns.keys().copied().collect())?,
        representatives: patterns.values().copied().collect(),
        tau,
        supporters,
        lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trims_to_lowest_coordinates() {
        assert_eq!(trim(0b10110, 2), 0b110);
        assert_eq!(trim(0b1, 1), 0b1);
    }

    #[test]
    fn full_agreement_returns_the_candidates() {
        let cands: Vec<(u32, u32)> = (0..8).map(|v| (v, 0b111)).collect();
        let sel = counting_select(3, &cands, 3).unwrap();
        assert_eq!(sel.tau, vec![0, 1, 2]);
        assert_eq!(sel.patterns.len(), 8);
    }

    #[test]
    fn ties_go_to_the_lexicographically_first_set() {
        let cands = vec![(0b11, 0b10), (0b00, 0b01)];
        let sel = counting_select(2, &cands, 1).unwrap();
        assert_eq!(sel.tau, vec![0]);
        assert!(counting_select(2, &[], 1).is_err());
        assert!(counting_select(2, &cands, 2).is_err());
    }
}
