//! Sign choices for vector sums and estimates of `b_N` and `T_q`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::{envelope_gauge, GeneratingSet};
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm1, norm2, norm_inf, random_unit_vector};
use crate::rng::{derive_seed, rng};

/// A norm (or gauge) on `ℝⁿ`.
pub trait Norm {
    fn norm(&self, x: &[f64]) -> f64;

    /// Known worst-case bound for the greedy signed sum of `count` vectors of
    /// norm at most `max_norm`; the triangle inequality by default.
    fn greedy_bound(&self, count: usize, max_norm: f64) -> f64 {
        count as f64 * max_norm
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Norm for Euclidean {
    fn norm(&self, x: &[f64]) -> f64 {
        norm2(x)
    }

    /// Greedy never lets `‖partial‖²` grow past `Σ‖x_k‖²`.
    fn greedy_bound(&self, count: usize, max_norm: f64) -> f64 {
        (count as f64).sqrt() * max_norm
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct L1;

impl Norm for L1 {
    fn norm(&self, x: &[f64]) -> f64 {
        norm1(x)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LInf;

impl Norm for LInf {
    fn norm(&self, x: &[f64]) -> f64 {
        norm_inf(x)
    }
}

/// Envelope gauge of a generating set (one LP per evaluation).
#[derive(Debug, Clone, Copy)]
pub struct Envelope<'a>(pub &'a GeneratingSet);

impl Norm for Envelope<'_> {
    fn norm(&self, x: &[f64]) -> f64 {
        envelope_gauge(self.0, x).map(|c| c.value).unwrap_or(f64::INFINITY)
    }
}

impl<F: Fn(&[f64]) -> f64> Norm for F {
    fn norm(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMethod {
    Greedy,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub n: usize,
    pub signs: Vec<i8>,
    pub sum_norm: f64,
    pub bound_used: f64,
    pub method: SignMethod,
}

fn signed_sum(vectors: &[Vec<f64>], signs: &[i8]) -> Vec<f64> {
    let mut s = vec![0.0; vectors[0].len()];
    for (v, &e) in vectors.iter().zip(signs) {
        axpy(e as f64, v, &mut s);
    }
    s
}

fn check_vectors(vectors: &[Vec<f64>]) -> Result<()> {
    let first = vectors.first().ok_or_else(|| Error::input("no vectors to balance"))?;
    if vectors.iter().any(|v| v.len() != first.len()) {
        return Err(Error::input("vectors have different dimensions"));
    }
    Ok(())
}

/// Chooses each sign to minimize the norm of the running sum (ties: `+`).
pub fn greedy_signs<N: Norm + ?Sized>(vectors: &[Vec<f64>], norm: &N) -> Result<BalanceReport> {
    check_vectors(vectors)?;
    let mut partial = vec![0.0; vectors[0].len()];
    let mut signs = Vec::with_capacity(vectors.len());
    let mut plus = partial.clone();
    let mut minus = partial.clone();
    for v in vectors {
        for j in 0..v.len() {
            plus[j] = partial[j] + v[j];
            minus[j] = partial[j] - v[j];
        }
        if norm.norm(&minus) < norm.norm(&plus) {
            signs.push(-1);
            partial.copy_from_slice(&minus);
        } else {
            signs.push(1);
            partial.copy_from_slice(&plus);
        }
    }
    let sum_norm = norm.norm(&signed_sum(vectors, &signs));
    let max_norm = vectors.iter().map(|v| norm.norm(v)).fold(0.0, f64::max);
    let bound_used = norm.greedy_bound(vectors.len(), max_norm);
    if sum_norm > bound_used * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::numerical(format!("greedy sum {sum_norm} exceeds its bound {bound_used}")));
    }
    Ok(BalanceReport {
        n: vectors.len(),
        signs,
        sum_norm,
        bound_used,
        method: SignMethod::Greedy,
    })
}

pub const MAX_EXHAUSTIVE: usize = 24;

/// Minimum signed-sum norm over all sign vectors (first sign fixed to `+`).
pub fn exhaustive_signs<N: Norm + ?Sized>(vectors: &[Vec<f64>], norm: &N) -> Result<BalanceReport> {
    check_vectors(vectors)?;
    let n = vectors.len();
    if n > MAX_EXHAUSTIVE {
        return Err(Error::input(format!("exhaustive signs limited to N <= {MAX_EXHAUSTIVE}")));
    }
    let dim = vectors[0].len();
    let mut best = (f64::INFINITY, 0u32);
    let mut sum = vec![0.0; dim];
    for mask in 0u32..(1u32 << (n - 1)) {
        sum.iter_mut().for_each(|s| *s = 0.0);
        for (k, v) in vectors.iter().enumerate() {
            let e = if k > 0 && mask >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 };
            axpy(e, v, &mut sum);
        }
        let v = norm.norm(&sum);
        if v < best.0 {
            best = (v, mask);
        }
    }
    let signs: Vec<i8> = (0..n).map(|k| if k > 0 && best.1 >> (k - 1) & 1 == 1 { -1 } else { 1 }).collect();
    let max_norm = vectors.iter().map(|v| norm.norm(v)).fold(0.0, f64::max);
    Ok(BalanceReport {
        n,
        sum_norm: norm.norm(&signed_sum(vectors, &signs)),
        signs,
        bound_used: norm.greedy_bound(n, max_norm),
        method: SignMethod::Exhaustive,
    })
}

fn min_sign_norm<N: Norm + ?Sized>(vectors: &[Vec<f64>], norm: &N) -> Result<f64> {
    if vectors.len() <= MAX_EXHAUSTIVE {
        Ok(exhaustive_signs(vectors, norm)?.sum_norm)
    } else {
        Ok(greedy_signs(vectors, norm)?.sum_norm)
    }
}

fn basis_tuple(dim: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k % dim] = 1.0;
            e
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnEstimate {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub method: SignMethod,
    pub trials: usize,
    pub seed: u64,
}

/// Lower estimate of `b_N` from the basis tuple and random unit tuples, each
/// refined by a few accepted coordinate perturbations; upper estimate from
/// the norm's greedy bound (capped at 1).
pub fn bn_estimate<N: Norm + ?Sized>(norm: &N, dim: usize, count: usize, trials: usize, seed: u64) -> Result<BnEstimate> {
    if count == 0 || dim == 0 {
        return Err(Error::input("N and the dimension must be positive"));
    }
    let ratio = |t: &[Vec<f64>]| -> Result<f64> {
        let max = t.iter().map(|v| norm.norm(v)).fold(0.0, f64::max);
        if max == 0.0 {
            return Ok(0.0);
        }
        Ok(min_sign_norm(t, norm)? / (count as f64 * max))
    };
    let mut lower = ratio(&basis_tuple(dim, count))?;
    for t in 0..trials {
        let mut g = rng(derive_seed(seed, t as u64));
        let mut tuple: Vec<Vec<f64>> = (0..count).map(|_| random_unit_vector(&mut g, dim)).collect();
        let mut r = ratio(&tuple)?;
        for _ in 0..8 {
            let k = g.random_range(0..count);
            let old = tuple[k].clone();
            let kick = random_unit_vector(&mut g, dim);
            let mut cand: Vec<f64> = old.iter().zip(&kick).map(|(a, b)| a + 0.3 * b).collect();
            let len = norm2(&cand);
            cand.iter_mut().for_each(|v| *v /= len);
            tuple[k] = cand;
            let r2 = ratio(&tuple)?;
            if r2 > r {
                r = r2;
            } else {
                tuple[k] = old;
            }
        }
        lower = lower.max(r);
    }
    let upper = (norm.greedy_bound(count, 1.0) / count as f64).min(1.0);
    Ok(BnEstimate {
        n: count,
        lower,
        upper,
        method: if count <= MAX_EXHAUSTIVE { SignMethod::Exhaustive } else { SignMethod::Greedy },
        trials,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeConstantReport {
    pub q: f64,
    pub q_prime: f64,
    pub n: usize,
    pub tq_lower: f64,
    /// Sign average of the witnessing tuple, normalized by its max norm.
    pub witness_average: f64,
    pub method: String,
}

pub const MAX_TYPE_N: usize = 20;

/// Exact `Ave_ε ‖Σ ε_k x_k‖` by enumeration.
pub fn sign_average<N: Norm + ?Sized>(vectors: &[Vec<f64>], norm: &N) -> Result<f64> {
    check_vectors(vectors)?;
    let n = vectors.len();
    if n > MAX_TYPE_N {
        return Err(Error::input(format!("sign averages limited to N <= {MAX_TYPE_N}")));
    }
    let dim = vectors[0].len();
    let mut total = 0.0;
    let mut sum = vec![0.0; dim];
    // ε and −ε give the same norm
    let half = 1u32 << (n - 1);
    for mask in 0..half {
        sum.iter_mut().for_each(|s| *s = 0.0);
        for (k, v) in vectors.iter().enumerate() {
            let e = if k > 0 && mask >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 };
            axpy(e, v, &mut sum);
        }
        total += norm.norm(&sum);
    }
    Ok(total / half as f64)
}

/// Lower estimate of the equal-norm type-q constant from the basis tuple and
/// random unit tuples.
pub fn tq_estimate<N: Norm + ?Sized>(norm: &N, dim: usize, q: f64, count: usize, trials: usize, seed: u64) -> Result<TypeConstantReport> {
    if !(q > 1.0 && q <= 2.0) {
        return Err(Error::input(format!("q = {q} outside (1,2]")));
    }
    if count == 0 || count > MAX_TYPE_N {
        return Err(Error::input(format!("N = {count} outside 1..={MAX_TYPE_N}")));
    }
    if dim == 0 {
        return Err(Error::input("dimension must be positive"));
    }
    let scale = (count as f64).powf(1.0 / q);
    let ratio = |t: &[Vec<f64>]| -> Result<f64> {
        let max = t.iter().map(|v| norm.norm(v)).fold(0.0, f64::max);
        Ok(sign_average(t, norm)? / max)
    };
    let mut best = ratio(&basis_tuple(dim, count))?;
    for t in 0..trials {
        let mut g = rng(derive_seed(seed, t as u64));
        let tuple: Vec<Vec<f64>> = (0..count).map(|_| random_unit_vector(&mut g, dim)).collect();
        best = best.max(ratio(&tuple)?);
    }
    Ok(TypeConstantReport {
        q,
        q_prime: q / (q - 1.0),
        n: count,
        tq_lower: best / scale,
        witness_average: best,
        method: "exhaustive-average".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_sum_is_sqrt_n() {
        let v = basis_tuple(5, 5);
        let r = greedy_signs(&v, &Euclidean).unwrap();
        assert!((r.sum_norm - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn repeated_vector_cancels() {
        let v = vec![vec![0.3, -0.4], vec![0.3, -0.4]];
        let r = greedy_signs(&v, &Euclidean).unwrap();
        assert_eq!(r.signs, vec![1, -1]);
        assert_eq!(r.sum_norm, 0.0);
    }

    #[test]
    fn closures_are_norms() {
        let r = greedy_signs(&[vec![1.0], vec![2.0]], &|x: &[f64]| x[0].abs()).unwrap();
        assert_eq!(r.sum_norm, 1.0);
    }

    #[test]
    fn single_vector_bn_is_one() {
        let e = bn_estimate(&Euclidean, 3, 1, 5, 0).unwrap();
        assert!((e.lower - 1.0).abs() < 1e-12);
    }

    #[test]
    fn type_constant_examples() {
        let r = tq_estimate(&Euclidean, 6, 2.0, 6, 10, 0).unwrap();
        assert!((r.tq_lower - 1.0).abs() < 1e-12);
        let l1 = tq_estimate(&L1, 8, 2.0, 8, 0, 0).unwrap();
        assert!((l1.tq_lower - 8f64.sqrt()).abs() < 1e-12);
        assert!(tq_estimate(&Euclidean, 3, 2.0, 21, 0, 0).is_err());
        let one = tq_estimate(&Euclidean, 3, 1.5, 1, 0, 0).unwrap();
        assert!((one.tq_lower - 1.0).abs() < 1e-12);
    }
}
