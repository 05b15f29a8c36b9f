//! Choosing an `m`-term sub-average of an `N`-term decomposition of a cube
//! vertex, and the Monte-Carlo check of its mean-square deviation.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::balance::{certificate_from_terms, StarTerm};
use crate::bodies::GeneratingSet;
use crate::error::{Error, Result};
use crate::hulls::DeltaMCertificate;
use crate::linalg::{axpy, norm_inf, sub};
use crate::rng::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    pub samples: usize,
    /// Mean of `‖avg_ω − a‖²` over uniform `m`-subsets.
    pub mean_square_deviation: f64,
    pub standard_error: f64,
    /// `4nd²/m`, `d` the largest sup norm among the terms.
    pub bound: f64,
    /// Mean of `‖avg_ω − y‖²`, `y` the full average.
    pub mean_square_spread: f64,
    /// Exact expectation of the spread for sampling without replacement.
    pub exact_spread: f64,
    /// `nd²/m`.
    pub spread_bound: f64,
    /// `mean_square_deviation ≤ bound + 3·standard_error`.
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleFit {
    pub subset: Vec<usize>,
    pub x: Vec<f64>,
    pub certificate: DeltaMCertificate,
    /// Coordinates `j` with `|x(j) − a(j)| ≤ δ`.
    pub agreement: u32,
    pub agreement_count: usize,
    pub variance: VarianceCheck,
}

fn square_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn subsample_vertex_fit(
    s: &GeneratingSet,
    terms: &[StarTerm],
    a: &[f64],
    delta: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<SubsampleFit> {
    let big_n = terms.len();
    if m == 0 || m > big_n {
        return Err(Error::input(format!("need 1 ≤ m ≤ N (m = {m}, N = {big_n})")));
    }
    if a.len() != s.dimension() || a.len() > 32 {
        return Err(Error::input("target dimension mismatch"));
    }
    let n = a.len();
    let vectors: Vec<Vec<f64>> = terms
        .iter()
        .map(|t| s.point(t.generator).iter().map(|v| v * t.lambda).collect())
        .collect();
    let d = vectors.iter().map(|v| norm_inf(v)).fold(0.0, f64::max);
    let mut full = vec![0.0; n];
    for v in &vectors {
        axpy(1.0 / big_n as f64, v, &mut full);
    }
    let average = |idx: &[usize]| {
        let mut out = vec![0.0; n];
        for &i in idx {
            axpy(1.0 / m as f64, &vectors[i], &mut out);
        }
        out
    };
    let agreement_of = |x: &[f64]| {
        (0..n)
            .filter(|&j| (x[j] - a[j]).abs() <= delta)
            .fold(0u32, |acc, j| acc | 1 << j)
    };

    let mut r = rng(seed);
    let mut best: Option<(usize, f64, Vec<usize>, Vec<f64>)> = None;
    let mut deviations = Vec::new();
    let mut spreads = Vec::new();
    let candidates: Box<dyn Iterator<Item = Vec<usize>>> = if m == big_n {
        Box::new(std::iter::once((0..big_n).collect()))
    } else {
        Box::new((0..trials.max(1)).map(|_| {
            let mut idx = sample(&mut r, big_n, m).into_vec();
            idx.sort_unstable();
            idx
        }))
    };
    for idx in candidates {
        let x = average(&idx);
        let dev = square_distance(&x, a);
        deviations.push(dev);
        spreads.push(square_distance(&x, &full));
        let count = agreement_of(&x).count_ones() as usize;
        let better = match &best {
            None => true,
            Some((c, e, _, _)) => count > *c || (count == *c && dev < *e),
        };
        if better {
            best = Some((count, dev, idx, x));
        }
    }
    let (agreement_count, _, subset, x) = best.expect("at least one candidate");

    let k = deviations.len() as f64;
    let mean = deviations.iter().sum::<f64>() / k;
    let var = if deviations.len() > 1 {
        deviations.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let standard_error = (var / k).sqrt();
    let bound = 4.0 * n as f64 * d * d / m as f64;
    let population: f64 = vectors.iter().map(|v| square_distance(v, &full)).sum::<f64>() / big_n as f64;
    let exact_spread = if big_n > 1 {
        (big_n - m) as f64 / (m as f64 * (big_n - 1) as f64) * population
    } else {
        0.0
    };
    let chosen: Vec<StarTerm> = subset.iter().map(|&i| terms[i]).collect();
    let certificate = certificate_from_terms(s, &chosen, m as u64);
    debug_assert!(norm_inf(&sub(&certificate.point(s), &x)) < 1e-9);
    Ok(SubsampleFit {
        agreement: agreement_of(&x),
        agreement_count,
        subset,
        x,
        certificate,
        variance: VarianceCheck {
            samples: deviations.len(),
            mean_square_deviation: mean,
            standard_error,
            bound,
            mean_square_spread: spreads.iter().sum::<f64>() / k,
            exact_spread,
            spread_bound: n as f64 * d * d / m as f64,
            within_bound: mean <= bound + 3.0 * standard_error,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_subset_when_m_equals_n() {
        let s = GeneratingSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], "e").unwrap();
        let terms = vec![StarTerm { generator: 0, lambda: 1.0 }, StarTerm { generator: 1, lambda: 1.0 }];
        let fit = subsample_vertex_fit(&s, &terms, &[0.5, 0.5], 0.01, 2, 10, 0).unwrap();
        assert_eq!(fit.subset, vec![0, 1]);
        assert_eq!(fit.agreement_count, 2);
        assert_eq!(fit.variance.exact_spread, 0.0);
    }

    #[test]
    fn singleton_decomposition_agrees_everywhere() {
        let s = GeneratingSet::cube_vertices(3).unwrap();
        let terms = vec![StarTerm { generator: 5, lambda: 1.0 }; 12];
        let a = s.point(5).to_vec();
        let fit = subsample_vertex_fit(&s, &terms, &a, 0.0, 4, 5, 1).unwrap();
        assert_eq!(fit.agreement_count, 3);
        assert_eq!(fit.x, a);
    }
}
