//! Subsets of the cube vertices `D_n = {−1,1}ⁿ`, stored as bitmasks
//! (bit `j` set means coordinate `j` is `+1`).

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::bodies::GeneratingSet;
use crate::error::{Error, Result};
use crate::rng::rng;

pub const MAX_VERTEX_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSet {
    n: usize,
    /// Sorted, distinct.
    members: Vec<u32>,
}

/// Bits of `mask` at `coords`, packed in order (`coords[i]` goes to bit `i`).
pub fn project(mask: u32, coords: &[usize]) -> u32 {
    coords.iter().enumerate().fold(0u32, |acc, (i, &c)| acc | ((mask >> c) & 1) << i)
}

/// Inverse of [`project`] on the given coordinates (other bits zero).
pub fn embed(pattern: u32, coords: &[usize]) -> u32 {
    coords.iter().enumerate().fold(0u32, |acc, (i, &c)| acc | ((pattern >> i) & 1) << c)
}

pub fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

pub fn to_signs(mask: u32, n: usize) -> Vec<f64> {
    (0..n).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

/// `+`/`−` string, character `j` is coordinate `j`.
pub fn to_string(mask: u32, n: usize) -> String {
    (0..n).map(|j| if mask >> j & 1 == 1 { '+' } else { '-' }).collect()
}

impl VertexSet {
    pub fn new(n: usize, mut members: Vec<u32>) -> Result<Self> {
        if n == 0 || n > MAX_VERTEX_DIM {
            return Err(Error::input(format!("vertex dimension {n} outside 1..={MAX_VERTEX_DIM}")));
        }
        let full = full_mask(n);
        if members.iter().any(|&m| m & !full != 0) {
            return Err(Error::input("vertex mask has bits beyond the dimension"));
        }
        members.sort_unstable();
        members.dedup();
        Ok(VertexSet { n, members })
    }

    pub fn full(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_VERTEX_DIM {
            return Err(Error::input(format!("vertex dimension {n} outside 1..={MAX_VERTEX_DIM}")));
        }
        Ok(VertexSet {
            n,
            members: (0..=full_mask(n)).collect(),
        })
    }

    /// `size` distinct vertices drawn uniformly without replacement.
    pub fn random(n: usize, size: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > MAX_VERTEX_DIM {
            return Err(Error::input(format!("vertex dimension {n} outside 1..={MAX_VERTEX_DIM}")));
        }
        if size > 1usize << n {
            return Err(Error::input(format!("{size} vertices requested but D_{n} has only {}", 1usize << n)));
        }
        let members = sample(&mut rng(seed), 1usize << n, size).into_iter().map(|i| i as u32).collect();
        Self::new(n, members)
    }

    /// `⌈2^{n(1−cε)}⌉`, the density at which a shattered chain is guaranteed.
    pub fn density_size(n: usize, c: f64, epsilon: f64) -> usize {
        2f64.powf(n as f64 * (1.0 - c * epsilon)).ceil() as usize
    }

    /// Points whose coordinates are all exactly `±1`.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.first().map(|p| p.len()).ok_or_else(|| Error::input("no points"))?;
        let mut members = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != n || p.iter().any(|&x| x != 1.0 && x != -1.0) {
                return Err(Error::input(format!("point {i} is not a cube vertex")));
            }
            members.push(p.iter().enumerate().fold(0u32, |m, (j, &x)| if x > 0.0 { m | 1 << j } else { m }));
        }
        Self::new(n, members)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, mask: u32) -> bool {
        self.members.binary_search(&mask).is_ok()
    }

    pub fn to_generating_set(&self, label: &str) -> Result<GeneratingSet> {
        GeneratingSet::new(self.members.iter().map(|&m| to_signs(m, self.n)).collect(), label)
    }

    /// One `+`/`−` line per member.
    pub fn to_lines(&self) -> String {
        let mut out = String::with_capacity(self.members.len() * (self.n + 1));
        for &m in &self.members {
            out.push_str(&to_string(m, self.n));
            out.push('\n');
        }
        out
    }

    pub fn parse_lines(text: &str) -> Result<Self> {
        let mut n = None;
        let mut members = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if *n.get_or_insert(line.chars().count()) != line.chars().count() {
                return Err(Error::input(format!("line {}: inconsistent length", lineno + 1)));
            }
            let mut mask = 0u32;
            for (j, ch) in line.chars().enumerate() {
                match ch {
                    '+' => mask |= 1 << j,
                    '-' | '−' => {}
                    other => return Err(Error::input(format!("line {}: unexpected character {other:?}", lineno + 1))),
                }
            }
            members.push(mask);
        }
        Self::new(n.ok_or_else(|| Error::input("empty vertex file"))?, members)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_size_and_random_subsets() {
        assert_eq!(VertexSet::density_size(10, 0.1, 0.5), 725);
        let v = VertexSet::random(10, 725, 3).unwrap();
        assert_eq!(v.len(), 725);
        assert_eq!(v, VertexSet::random(10, 725, 3).unwrap());
        assert!(VertexSet::random(3, 9, 0).is_err());
    }

    #[test]
    fn projection_round_trip() {
        let coords = [1, 4, 5];
        let m = 0b110010;
        assert_eq!(project(m, &coords), 0b111);
        assert_eq!(embed(0b101, &coords), 0b100010);
    }

    #[test]
    fn lines_round_trip() {
        let v = VertexSet::new(3, vec![0b101, 0b000, 0b101]).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.to_lines(), "---\n+-+\n");
        assert_eq!(VertexSet::parse_lines(&v.to_lines()).unwrap(), v);
        assert!(VertexSet::parse_lines("+-\n+").is_err());
    }
}
