//! The anchored shattering chain `σ₀ ⊂ σ₁ ⊂ … ⊂ σ_s` and its exact
//! representation table `D_{σ_s} ⊂ a_s P_{σ_s} Δ_{b_s} V`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::shatter::{largest_shattered, DEFAULT_SHATTER_BUDGET};
use super::vertex::{embed, full_mask, project, to_string, VertexSet};
use crate::bodies::GeneratingSet;
use crate::error::{Error, Result};
use crate::hulls::DeltaMCertificate;

/// Anchors examined per level, largest fibers first.
const ANCHOR_CANDIDATES: usize = 64;

/// `a_k = 2^{k+1} − 1`.
pub fn chain_scale(k: u32) -> u64 {
    (1u64 << (k + 1)) - 1
}

/// `b_k = 2·4^k − 2^k`.
pub fn chain_slots(k: u32) -> u64 {
    2 * (1u64 << (2 * k)) - (1u64 << k)
}

/// Levels needed for accuracy `ε`: `⌈log₂(1/ε)⌉`, and 0 for `ε ≥ 1`.
pub fn chain_levels(epsilon: f64) -> u32 {
    if epsilon >= 1.0 {
        0
    } else {
        (1.0 / epsilon).log2().ceil() as u32
    }
}

/// Members of the anchored fiber realizing `a` and `−a` on `τ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberPair {
    pub pattern: u32,
    pub plus: u32,
    pub minus: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainTerm {
    pub vertex: u32,
    pub coefficient: i64,
    pub slots: u64,
}

/// `a = 2^{−s} Σ coefficient·vertex` on `σ_s`, using exactly `b_s` slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepEntry {
    /// Global mask, zero off `σ_s`.
    pub pattern: u32,
    pub terms: Vec<ChainTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatterChain {
    pub n: usize,
    pub epsilon: f64,
    pub levels: u32,
    pub sigma: Vec<Vec<usize>>,
    pub tau: Vec<Vec<usize>>,
    /// Only its bits on `σ_{s−1}` matter.
    pub anchor: u32,
    pub fiber_tables: Vec<Vec<FiberPair>>,
    pub rep_table: Vec<RepEntry>,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub size: usize,
    /// `|V| ≥ 2^{n(1−cε)}`, a sufficient condition for the chain to exist.
    pub precondition_c: f64,
    pub precondition_met: bool,
}

impl ShatterChain {
    pub fn final_sigma(&self) -> &[usize] {
        self.sigma.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn scale(&self) -> u64 {
        *self.a.last().unwrap_or(&1)
    }

    pub fn slots(&self) -> u64 {
        *self.b.last().unwrap_or(&1)
    }

    /// Exact check of every table entry: `(a_s/b_s) Σ coefficient·P_σ v = a`
    /// over the rationals, slot totals equal to `b_s`, `|coefficient| ≤ slots`.
    pub fn verify(&self) -> Result<usize> {
        let sigma = self.final_sigma();
        let unit = BigRational::new(BigInt::from(self.scale()), BigInt::from(self.slots()));
        for (k, (&a, &b)) in self.a.iter().zip(&self.b).enumerate() {
            if a != chain_scale(k as u32) || b != chain_slots(k as u32) {
                return Err(Error::phase("alesker", format!("level {k} constants ({a}, {b}) differ from the closed forms")));
            }
        }
        if self.rep_table.len() != 1usize << sigma.len() {
            return Err(Error::phase("alesker", "representation table does not cover D_σ"));
        }
        for entry in &self.rep_table {
            let slots: u64 = entry.terms.iter().map(|t| t.slots).sum();
            if slots != self.slots() || entry.terms.iter().any(|t| t.coefficient.unsigned_abs() > t.slots) {
                return Err(Error::phase("alesker", format!("slot accounting fails at {}", to_string(entry.pattern, self.n))));
            }
            for &j in sigma {
                let mut acc = BigRational::zero();
                for t in &entry.terms {
                    let sign = if t.vertex >> j & 1 == 1 { 1 } else { -1 };
                    acc += &unit * BigRational::from_integer(BigInt::from(t.coefficient * sign));
                }
                let want = if entry.pattern >> j & 1 == 1 { BigRational::one() } else { -BigRational::one() };
                if acc != want {
                    return Err(Error::phase(
                        "alesker",
                        format!("entry {} misses coordinate {j}", to_string(entry.pattern, self.n)),
                    ));
                }
            }
        }
        Ok(self.rep_table.len())
    }
}

type Combination = BTreeMap<u32, (i64, u64)>;

fn add(comb: &mut Combination, vertex: u32, coefficient: i64, slots: u64) {
    let e = comb.entry(vertex).or_insert((0, 0));
    e.0 += coefficient;
    e.1 += slots;
}

/// First member per pattern on `coords`.
fn realizers(members: &[u32], coords: &[usize]) -> Vec<Option<u32>> {
    let mut out = vec![None; 1 << coords.len()];
    for &m in members {
        let p = project(m, coords) as usize;
        if out[p].is_none() {
            out[p] = Some(m);
        }
    }
    out
}

/// Builds the chain with `s = ⌈log₂(1/ε)⌉` levels (fewer when `σ` fills `[n]`
/// or no anchored fiber shatters a new coordinate) and fails if the final
/// `σ` is smaller than `⌈n(1−ε)⌉`.
pub fn alesker_chain(v: &VertexSet, epsilon: f64) -> Result<ShatterChain> {
    alesker_chain_with(v, epsilon, 0.1)
}

pub fn alesker_chain_with(v: &VertexSet, epsilon: f64, c: f64) -> Result<ShatterChain> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::input("epsilon must be positive"));
    }
    let n = v.n();
    if n > 14 {
        return Err(Error::input("alesker_chain supports n ≤ 14"));
    }
    if v.is_empty() {
        return Err(Error::input("empty vertex set"));
    }
    let target = ((n as f64) * (1.0 - epsilon) - 1e-9).ceil().max(0.0) as usize;
    let s_max = chain_levels(epsilon);
    let all: Vec<usize> = (0..n).collect();

    let sigma0 = largest_shattered(v.members(), &all, DEFAULT_SHATTER_BUDGET)
        .ok_or_else(|| Error::Budget("shattered-set search for σ₀".into()))?;
    let mut sigma = vec![sigma0.clone()];
    let mut taus: Vec<Vec<usize>> = Vec::new();
    let mut fiber_tables = Vec::new();
    let mut anchor = 0u32;
    let mut fiber: Vec<u32> = v.members().to_vec();
    // coordinates whose anchor bits have not been fixed yet
    let mut pending: Vec<usize> = sigma0;

    for _level in 1..=s_max {
        let current = sigma.last().unwrap().clone();
        if current.len() == n {
            break;
        }
        let rest: Vec<usize> = all.iter().copied().filter(|j| !current.contains(j)).collect();
        let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &m in &fiber {
            groups.entry(project(m, &pending)).or_default().push(m);
        }
        let mut ranked: Vec<(u32, Vec<u32>)> = groups.into_iter().collect();
        ranked.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
        let mut best: Option<(u32, Vec<usize>, Vec<u32>)> = None;
        for (pattern, members) in ranked.into_iter().take(ANCHOR_CANDIDATES) {
            let tau = largest_shattered(&members, &rest, DEFAULT_SHATTER_BUDGET).unwrap_or_default();
            if best.as_ref().is_none_or(|b| tau.len() > b.1.len()) {
                best = Some((pattern, tau, members));
            }
        }
        let Some((pattern, tau, members)) = best else { break };
        if tau.is_empty() {
            break;
        }
        anchor |= embed(pattern, &pending);
        let real = realizers(&members, &tau);
        let mask = full_mask(tau.len());
        let table: Vec<FiberPair> = (0..=mask)
            .map(|p| FiberPair {
                pattern: p,
                plus: real[p as usize].expect("shattered"),
                minus: real[(!p & mask) as usize].expect("shattered"),
            })
            .collect();
        fiber_tables.push(table);
        let mut next: Vec<usize> = current.iter().chain(&tau).copied().collect();
        next.sort_unstable();
        sigma.push(next);
        pending = tau.clone();
        fiber = members;
        taus.push(tau);
    }

    let levels = taus.len() as u32;
    let final_sigma = sigma.last().unwrap().clone();
    if final_sigma.len() < target {
        return Err(Error::phase(
            "alesker",
            format!(
                "reached level {levels} with |σ| = {} < {target} (σ₀ has size {})",
                final_sigma.len(),
                sigma[0].len()
            ),
        ));
    }

    // level 0: a ↦ any member with that projection
    let real0 = realizers(v.members(), &sigma[0]);
    let mut table: Vec<Combination> = real0
        .iter()
        .map(|r| {
            let mut c = Combination::new();
            add(&mut c, r.expect("σ₀ is shattered"), 1, 1);
            c
        })
        .collect();
    for j in 1..=levels as usize {
        let prev_sigma = &sigma[j - 1];
        let cur_sigma = &sigma[j];
        let tau = &taus[j - 1];
        let pairs = &fiber_tables[j - 1];
        let mask = full_mask(tau.len());
        let half = 1i64 << (j - 1);
        let mut next = Vec::with_capacity(1 << cur_sigma.len());
        for idx in 0..(1u32 << cur_sigma.len()) {
            let g = embed(idx, cur_sigma);
            let x1 = &table[project(g, prev_sigma) as usize];
            let mut comb = Combination::new();
            for (&vertex, &(coef, slots)) in x1 {
                // x₁: each old slot becomes two slots of half the weight
                add(&mut comb, vertex, 2 * coef, 2 * slots);
                // x₂: cancel P_τ of this vertex with (u − v)/2 from the fiber
                let pair = &pairs[(!project(vertex, tau) & mask) as usize];
                add(&mut comb, pair.plus, coef, slots);
                add(&mut comb, pair.minus, -coef, slots);
            }
            // x₃: (u − v)/2 realizing P_τ a
            let pair = &pairs[project(g, tau) as usize];
            add(&mut comb, pair.plus, half, half as u64);
            add(&mut comb, pair.minus, -half, half as u64);
            next.push(comb);
        }
        table = next;
    }
    let rep_table = table
        .into_iter()
        .enumerate()
        .map(|(idx, comb)| RepEntry {
            pattern: embed(idx as u32, &final_sigma),
            terms: comb
                .into_iter()
                .map(|(vertex, (coefficient, slots))| ChainTerm { vertex, coefficient, slots })
                .collect(),
        })
        .collect();

    let required = 2f64.powf(n as f64 * (1.0 - c * epsilon));
    let chain = ShatterChain {
        n,
        epsilon,
        levels,
        sigma,
        tau: taus,
        anchor,
        fiber_tables,
        rep_table,
        a: (0..=levels).map(chain_scale).collect(),
        b: (0..=levels).map(chain_slots).collect(),
        size: v.len(),
        precondition_c: c,
        precondition_met: v.len() as f64 >= required,
    };
    chain.verify()?;
    Ok(chain)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainVertexCertificate {
    pub vertex: String,
    pub certificate: DeltaMCertificate,
}

/// `D_σ ⊂ a_s P_σ(Δ_{b_s} S)`, one certificate per vertex of `D_σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCertificates {
    pub sigma: Vec<usize>,
    pub scale: u64,
    pub m: u64,
    pub certificates: Vec<ChainVertexCertificate>,
    pub verified: usize,
    pub scale_target: f64,
    pub m_target: f64,
    /// `a_s > Cε⁻¹` or `b_s > Cε⁻²`.
    pub calibration_miss: bool,
}

/// Index and sign of each cube vertex occurring as `±s_i` in `S`.
fn vertex_index(s: &GeneratingSet) -> BTreeMap<u32, (usize, i64)> {
    let mut out = BTreeMap::new();
    for (i, p) in s.points().iter().enumerate() {
        if p.len() <= 32 && p.iter().all(|&x| x == 1.0 || x == -1.0) {
            let mask = p.iter().enumerate().fold(0u32, |m, (j, &x)| if x > 0.0 { m | 1 << j } else { m });
            out.entry(mask).or_insert((i, 1));
            out.entry(!mask & full_mask(p.len())).or_insert((i, -1));
        }
    }
    out
}

pub fn chain_cube_certificate(chain: &ShatterChain, s: &GeneratingSet, big_c: f64) -> Result<ChainCertificates> {
    if s.dimension() != chain.n {
        return Err(Error::input("generating set dimension differs from the chain"));
    }
    let index = vertex_index(s);
    let sigma = chain.final_sigma().to_vec();
    let unit = BigRational::new(BigInt::from(chain.scale()), BigInt::from(chain.slots()));
    let mut certificates = Vec::with_capacity(chain.rep_table.len());
    for entry in &chain.rep_table {
        let mut multiplicities = vec![0u64; s.len()];
        let mut alphas = vec![0i64; s.len()];
        for t in &entry.terms {
            let &(i, sign) = index.get(&t.vertex).ok_or_else(|| {
                Error::phase("chain-certificate", format!("vertex {} is not ±s_i", to_string(t.vertex, chain.n)))
            })?;
            multiplicities[i] += t.slots;
            alphas[i] += sign * t.coefficient;
        }
        // exact: (a_s/b_s) Σ α_i P_σ s_i = a
        for &j in &sigma {
            let mut acc = BigRational::zero();
            for (i, &alpha) in alphas.iter().enumerate() {
                if alpha != 0 {
                    let coord = BigRational::from_float(s.point(i)[j])
                        .ok_or_else(|| Error::numerical("non-finite generator coordinate"))?;
                    acc += &unit * BigRational::from_integer(BigInt::from(alpha)) * coord;
                }
            }
            let want = if entry.pattern >> j & 1 == 1 { BigRational::one() } else { -BigRational::one() };
            if acc != want {
                return Err(Error::phase(
                    "chain-certificate",
                    format!("certificate for {} misses coordinate {j}", to_string(entry.pattern, chain.n)),
                ));
            }
        }
        let certificate = DeltaMCertificate {
            m: chain.slots(),
            multiplicities,
            alphas: alphas.iter().map(|&a| a as f64).collect(),
        };
        certificate.check_structure(s)?;
        certificates.push(ChainVertexCertificate {
            vertex: to_string(entry.pattern, chain.n),
            certificate,
        });
    }
    let scale_target = big_c / chain.epsilon;
    let m_target = big_c / (chain.epsilon * chain.epsilon);
    Ok(ChainCertificates {
        sigma,
        scale: chain.scale(),
        m: chain.slots(),
        verified: certificates.len(),
        certificates,
        scale_target,
        m_target,
        calibration_miss: chain.scale() as f64 > scale_target || chain.slots() as f64 > m_target,
    })
}
