//! Shattered coordinate sets: `σ` with `P_σ(V) = D_σ`.

use serde::{Deserialize, Serialize};

use super::vertex::{project, VertexSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ShatterOutcome {
    Found { sigma: Vec<usize>, nodes: u64 },
    /// Exhaustive search completed without a shattered set of that size.
    Absent { nodes: u64 },
    BudgetExhausted { nodes: u64 },
}

pub const DEFAULT_SHATTER_BUDGET: u64 = 10_000_000;

/// Does `members` project onto every pattern of `coords`?
pub fn shatters(members: &[u32], coords: &[usize]) -> bool {
    let k = coords.len();
    if k == 0 {
        return !members.is_empty();
    }
    if k > 24 || members.len() < 1usize << k {
        return false;
    }
    let mut seen = vec![false; 1 << k];
    let mut count = 0usize;
    for &m in members {
        let p = project(m, coords) as usize;
        if !seen[p] {
            seen[p] = true;
            count += 1;
            if count == 1 << k {
                return true;
            }
        }
    }
    false
}

struct Search<'a> {
    members: &'a [u32],
    allowed: &'a [usize],
    target: usize,
    budget: u64,
    nodes: u64,
    best: Vec<usize>,
    exhausted: bool,
}

impl Search<'_> {
    /// Depth-first over increasing coordinate lists; shattering is hereditary,
    /// so branches whose prefix fails are pruned.
    fn dfs(&mut self, current: &mut Vec<usize>, start: usize) -> bool {
        if current.len() > self.best.len() {
            self.best = current.clone();
        }
        if current.len() == self.target {
            return true;
        }
        for idx in start..self.allowed.len() {
            if self.allowed.len() - idx < self.target - current.len() {
                break;
            }
            if self.nodes >= self.budget {
                self.exhausted = true;
                return false;
            }
            self.nodes += 1;
            current.push(self.allowed[idx]);
            if shatters(self.members, current) && self.dfs(current, idx + 1) {
                return true;
            }
            current.pop();
            if self.exhausted {
                return false;
            }
        }
        false
    }
}

/// Lexicographically first shattered set of size `target_size` among the
/// `allowed` coordinates.
pub fn find_shattered_among(members: &[u32], allowed: &[usize], target_size: usize, budget: u64) -> ShatterOutcome {
    let mut s = Search {
        members,
        allowed,
        target: target_size,
        budget,
        nodes: 0,
        best: Vec::new(),
        exhausted: false,
    };
    let mut cur = Vec::new();
    if target_size == 0 {
        return if members.is_empty() {
            ShatterOutcome::Absent { nodes: 0 }
        } else {
            ShatterOutcome::Found { sigma: vec![], nodes: 0 }
        };
    }
    if s.dfs(&mut cur, 0) {
        ShatterOutcome::Found {
            sigma: s.best,
            nodes: s.nodes,
        }
    } else if s.exhausted {
        ShatterOutcome::BudgetExhausted { nodes: s.nodes }
    } else {
        ShatterOutcome::Absent { nodes: s.nodes }
    }
}

pub fn find_shattered(v: &VertexSet, target_size: usize) -> ShatterOutcome {
    let all: Vec<usize> = (0..v.n()).collect();
    find_shattered_among(v.members(), &all, target_size, DEFAULT_SHATTER_BUDGET)
}

/// Largest shattered subset of `allowed` (lexicographically first among the
/// largest), searching sizes downward. `None` only when the budget runs out
/// before any size succeeds.
pub fn largest_shattered(members: &[u32], allowed: &[usize], budget: u64) -> Option<Vec<usize>> {
    if members.is_empty() {
        return None;
    }
    // |P_σ V| ≤ |V| caps the size
    let cap = (usize::BITS - members.len().leading_zeros() - 1) as usize;
    for size in (1..=allowed.len().min(cap)).rev() {
        match find_shattered_among(members, allowed, size, budget) {
            ShatterOutcome::Found { sigma, .. } => return Some(sigma),
            ShatterOutcome::Absent { .. } => continue,
            ShatterOutcome::BudgetExhausted { .. } => return None,
        }
    }
    Some(Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_cube_shatters_everything() {
        let v = VertexSet::full(5).unwrap();
        assert_eq!(find_shattered(&v, 5), ShatterOutcome::Found { sigma: vec![0, 1, 2, 3, 4], nodes: 5 });
    }

    #[test]
    fn three_of_four_corners() {
        // (1,1), (1,−1), (−1,1)
        let v = VertexSet::new(2, vec![0b11, 0b01, 0b10]).unwrap();
        match find_shattered(&v, 1) {
            ShatterOutcome::Found { sigma, .. } => assert_eq!(sigma, vec![0]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(find_shattered(&v, 2), ShatterOutcome::Absent { .. }));
        assert_eq!(largest_shattered(v.members(), &[0, 1], 100), Some(vec![0]));
    }

    #[test]
    fn budget_is_reported() {
        let v = VertexSet::new(6, (0..40).collect()).unwrap();
        assert!(matches!(find_shattered_among(v.members(), &[0, 1, 2, 3, 4, 5], 6, 3), ShatterOutcome::BudgetExhausted { .. }));
    }
}
