//! Reference estimators to compare the robust reconstruction against: an
//! exhaustive folding-integer search and a naive (non-robust) grouping.

use itertools::Itertools;
use serde::Serialize;

use crate::dynrange::dynamic_range_gcd;
use crate::error::{Error, Result};
use crate::gcrt2::{solve_two_coprime, IntegerPair, ResidueFamily};
use crate::modmath::{common_remainder, crt_single, round_half_up_ratio, Rational};
use crate::robust::ErroneousResidueFamily;

/// Best folding found by [`searching_solution`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldingSolution {
    /// Folding integers per tone, one per modulus.
    pub n_hat: [Vec<i64>; 2],
    /// Remainder chosen for each tone at each modulus.
    pub remainders: [Vec<i64>; 2],
    pub f_hat: (i64, i64),
    /// `sum_l (K * sum_k x^2 - (sum_k x)^2)`, i.e. `K^2` times the summed
    /// per-tone variance of the unfolded candidates.
    pub objective: i128,
}

/// Per-tone candidate: folding vector, unfolded spread and rounded mean.
struct ToneFolding {
    folds: Vec<i64>,
    spread: i128,
    estimate: i64,
}

fn tone_foldings(remainders: &[i64], full: &[i64], limit: i64) -> Vec<ToneFolding> {
    let k = remainders.len() as i128;
    remainders
        .iter()
        .zip(full)
        .map(|(&r, &mk)| (0..).take_while(move |n| n * mk + r < limit))
        .multi_cartesian_product()
        .map(|folds| {
            let xs: Vec<i128> = folds
                .iter()
                .zip(remainders.iter().zip(full))
                .map(|(&n, (&r, &mk))| (n * mk + r) as i128)
                .collect();
            let sum: i128 = xs.iter().sum();
            let sq: i128 = xs.iter().map(|x| x * x).sum();
            let mean = Rational::new(sum as i64, k as i64);
            ToneFolding {
                folds,
                spread: k * sq - sum * sum,
                estimate: round_half_up_ratio(mean),
            }
        })
        .collect()
}

/// Exhaustive search over correspondences and folding integers.
///
/// For every assignment of remainders to the two tones (first modulus
/// fixed) and every pair of folding vectors whose unfolded values stay in
/// `[0, M*d)`, the summed per-tone spread is scored. The lowest score wins;
/// ties go to the smaller sorted estimate pair.
pub fn searching_solution(fam: &ErroneousResidueFamily) -> Result<FoldingSolution> {
    let ms = fam.moduli();
    let limit = dynamic_range_gcd(ms)?;
    let full = ms.full_moduli();
    let pairs = fam.pairs();
    let k = pairs.len();

    let mut best: Option<(i128, IntegerPair, FoldingSolution)> = None;
    for mask in 0u32..(1 << (k - 1)) {
        let (side_a, side_b): (Vec<i64>, Vec<i64>) = pairs
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                if i > 0 && mask & (1 << (i - 1)) != 0 {
                    (y, x)
                } else {
                    (x, y)
                }
            })
            .unzip();
        let tone_a = tone_foldings(&side_a, &full, limit);
        let tone_b = tone_foldings(&side_b, &full, limit);
        for fa in &tone_a {
            for fb in &tone_b {
                let objective = fa.spread + fb.spread;
                let est = IntegerPair::new(fa.estimate, fb.estimate);
                let better = match &best {
                    None => true,
                    Some((obj, pair, _)) => (objective, est) < (*obj, *pair),
                };
                if better {
                    let sol = FoldingSolution {
                        n_hat: [fa.folds.clone(), fb.folds.clone()],
                        remainders: [side_a.clone(), side_b.clone()],
                        f_hat: (fa.estimate, fb.estimate),
                        objective,
                    };
                    best = Some((objective, est, sol));
                }
            }
        }
    }
    best.map(|(_, _, sol)| sol)
        .ok_or_else(|| Error::InvalidArgument("empty search space".into()))
}

pub fn searching_estimate(fam: &ErroneousResidueFamily) -> Result<IntegerPair> {
    let sol = searching_solution(fam)?;
    Ok(IntegerPair::new(sol.f_hat.0, sol.f_hat.1))
}

/// Naive grouping: the first element of every pair is taken as tone one and
/// the second as tone two. Common remainders are averaged per group
/// (no wrap handling), and the error-free two-integer machinery runs on the
/// rounded averages.
pub fn nonrobust_estimate(fam: &ErroneousResidueFamily) -> Result<IntegerPair> {
    let ms = fam.moduli();
    let big_m = ms.big_m();
    let pairs = fam.pairs();
    let k = pairs.len() as i64;

    let sum1: i64 = pairs.iter().map(|&(a, _)| common_remainder(a, big_m)).sum();
    let sum2: i64 = pairs.iter().map(|&(_, b)| common_remainder(b, big_m)).sum();
    let c1 = round_half_up_ratio(Rational::new(sum1, k));
    let c2 = round_half_up_ratio(Rational::new(sum2, k));

    let quotient = |r: i64, c: i64, mk: i64| round_half_up_ratio(Rational::new(r - c, big_m)).rem_euclid(mk);
    let (q1, q2): (Vec<i64>, Vec<i64>) = pairs
        .iter()
        .zip(ms.moduli())
        .map(|(&(a, b), &mk)| (quotient(a, c1, mk), quotient(b, c2, mk)))
        .unzip();

    if c1 != c2 {
        let n1 = big_m * crt_single(&q1, ms)? + c1;
        let n2 = big_m * crt_single(&q2, ms)? + c2;
        return Ok(IntegerPair::new(n1, n2));
    }
    let qfam = ResidueFamily::new(ms.quotient_set(), q1.into_iter().zip(q2).collect())?;
    let q = solve_two_coprime(&qfam)?;
    Ok(IntegerPair::new(big_m * q.n1 + c1, big_m * q.n2 + c1))
}
