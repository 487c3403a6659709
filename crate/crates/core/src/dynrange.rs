//! Largest dynamic ranges for two integers, the tightness counterexample,
//! and an exhaustive collision check.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modmath::ModulusSet;

/// Largest bound accepted by [`verify_dynamic_range`].
pub const VERIFY_BOUND_LIMIT: i64 = 5000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DynamicRangeReport {
    /// `min_I (prod_{i in I} m_i + prod_{i not in I} m_i)`.
    pub d: i64,
    /// Minimizing index set, 1-based.
    pub subset: Vec<usize>,
    pub d1: i64,
    pub d2: i64,
    #[serde(rename = "Md")]
    pub md: i64,
    /// Second-largest coprime modulus is at least 3, so `d` is the coprime range.
    pub coprime_guarantee: bool,
    /// `m_1 >= 3` and `K > 2`, so `M*d` is the range for the full moduli.
    pub gcd_guarantee: bool,
}

/// Exhaustive `2^K` minimisation of `d1 + d2` over index subsets.
/// Ties go to the lexicographically smallest index set.
pub fn dynamic_range_coprime(ms: &ModulusSet) -> Result<DynamicRangeReport> {
    let m = ms.moduli();
    let k = m.len();
    if k == 0 {
        return Err(Error::InvalidArgument("empty modulus set".into()));
    }
    if k > 20 {
        return Err(Error::ResourceLimit(format!("2^{k} subsets")));
    }
    let mut best: Option<(i64, Vec<usize>, i64, i64)> = None;
    for mask in 0u32..(1 << k) {
        let subset: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        let (mut d1, mut d2) = (1i64, 1i64);
        for (i, &mi) in m.iter().enumerate() {
            if mask & (1 << i) != 0 {
                d1 *= mi;
            } else {
                d2 *= mi;
            }
        }
        let sum = d1 + d2;
        let better = match &best {
            None => true,
            Some((bs, bi, _, _)) => sum < *bs || (sum == *bs && subset < *bi),
        };
        if better {
            best = Some((sum, subset, d1, d2));
        }
    }
    let (d, subset, d1, d2) = best.expect("at least one subset");

    let mut sorted = m.to_vec();
    sorted.sort_unstable();
    let coprime_guarantee = k >= 2 && sorted[k - 2] >= 3;
    let md = ms.big_m().checked_mul(d).ok_or(Error::Overflow("M * d"))?;
    Ok(DynamicRangeReport {
        d,
        subset,
        d1,
        d2,
        md,
        coprime_guarantee,
        gcd_guarantee: ms.guarantee(),
    })
}

/// `M * d`.
pub fn dynamic_range_gcd(ms: &ModulusSet) -> Result<i64> {
    Ok(dynamic_range_coprime(ms)?.md)
}

/// The two distinct 2-sets `{0, M*d}` and `{M*d1, M*d2}` that share all
/// residue sets, showing `M*d` cannot be exceeded.
pub fn tightness_counterexample(ms: &ModulusSet) -> Result<([i64; 2], [i64; 2])> {
    let report = dynamic_range_coprime(ms)?;
    let big_m = ms.big_m();
    Ok(([0, report.md], [big_m * report.d1, big_m * report.d2]))
}

fn residue_key(a: i64, b: i64, full: &[i64]) -> Vec<(i64, i64)> {
    full.iter()
        .map(|&mk| {
            let (ra, rb) = (a % mk, b % mk);
            (ra.min(rb), ra.max(rb))
        })
        .collect()
}

/// True iff all 2-sets `{a, b}` with `0 <= a < b < bound` have pairwise
/// distinct residue families over the full moduli, i.e. `bound <= D_2`.
pub fn verify_dynamic_range(ms: &ModulusSet, bound: i64) -> Result<bool> {
    if bound < 1 {
        return Err(Error::InvalidArgument(format!("bound must be positive, got {bound}")));
    }
    if bound > VERIFY_BOUND_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "bound {bound} exceeds the enumeration limit {VERIFY_BOUND_LIMIT}"
        )));
    }
    let full = ms.full_moduli();
    let mut seen = HashSet::with_capacity((bound * (bound - 1) / 2) as usize);
    for b in 1..bound {
        for a in 0..b {
            if !seen.insert(residue_key(a, b, &full)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
