//! Error-free generalized CRT for two integers.

use serde::Serialize;

use crate::dynrange::dynamic_range_coprime;
use crate::error::{Error, Result};
use crate::modmath::{common_remainder, crt_single, crt_single_noncoprime, ModulusSet};

/// One unordered residue pair per modulus; a shared remainder is stored twice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueFamily {
    ms: ModulusSet,
    pairs: Vec<(i64, i64)>,
}

impl ResidueFamily {
    /// Every element must lie in `[0, M_k)` of its modulus.
    pub fn new(ms: ModulusSet, pairs: Vec<(i64, i64)>) -> Result<Self> {
        if pairs.len() != ms.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} residue pairs, got {}",
                ms.len(),
                pairs.len()
            )));
        }
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let full = ms.full_modulus(k);
            for r in [a, b] {
                if !(0..full).contains(&r) {
                    return Err(Error::InvalidArgument(format!(
                        "remainder {r} outside [0, {full}) for modulus index {}",
                        k + 1
                    )));
                }
            }
        }
        Ok(Self { ms, pairs })
    }

    /// Residue sets of `{n1, n2}` modulo every `M_k`.
    pub fn from_values(ms: ModulusSet, n1: i64, n2: i64) -> Self {
        let pairs = (0..ms.len())
            .map(|k| {
                let full = ms.full_modulus(k);
                (n1.rem_euclid(full), n2.rem_euclid(full))
            })
            .collect();
        Self { ms, pairs }
    }

    pub fn moduli(&self) -> &ModulusSet {
        &self.ms
    }

    pub fn pairs(&self) -> &[(i64, i64)] {
        &self.pairs
    }

    /// Each pair as a sorted set, for order-insensitive comparison.
    pub fn canonical(&self) -> Vec<(i64, i64)> {
        self.pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
    }
}

/// An unordered pair of integers, kept with `n1 <= n2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct IntegerPair {
    #[serde(rename = "N1")]
    pub n1: i64,
    #[serde(rename = "N2")]
    pub n2: i64,
}

impl IntegerPair {
    pub fn new(a: i64, b: i64) -> Self {
        Self {
            n1: a.min(b),
            n2: a.max(b),
        }
    }
}

/// Two-integer CRT over pairwise coprime moduli (`M = 1`).
///
/// Every correspondence between remainders and the two integers is tried
/// (the first modulus is fixed by symmetry), each side is CRT-solved, and
/// candidates outside `[0, d)` are dropped. Exactly one unordered pair must
/// survive.
pub fn solve_two_coprime(residues: &ResidueFamily) -> Result<IntegerPair> {
    let ms = residues.moduli();
    if ms.big_m() != 1 {
        return Err(Error::InvalidArgument(format!(
            "coprime solver needs M = 1, got M = {}",
            ms.big_m()
        )));
    }
    let d = dynamic_range_coprime(ms)?.d;
    let survivors = coprime_candidates(residues, d)?;
    match survivors.as_slice() {
        [] => Err(Error::InconsistentResidues(format!(
            "no pair in [0, {d}) reproduces the residue sets"
        ))),
        [only] => Ok(*only),
        many => Err(Error::Ambiguous(many.iter().map(|p| (p.n1, p.n2)).collect())),
    }
}

/// All distinct unordered pairs below `limit` consistent with the residues.
fn coprime_candidates(residues: &ResidueFamily, limit: i64) -> Result<Vec<IntegerPair>> {
    let ms = residues.moduli();
    let pairs = residues.pairs();
    let k = pairs.len();
    let target = residues.canonical();
    let mut found: Vec<IntegerPair> = Vec::new();
    let mut side_a = vec![0i64; k];
    let mut side_b = vec![0i64; k];
    for mask in 0u32..(1 << (k - 1)) {
        for (i, &(x, y)) in pairs.iter().enumerate() {
            let swap = i > 0 && mask & (1 << (i - 1)) != 0;
            (side_a[i], side_b[i]) = if swap { (y, x) } else { (x, y) };
        }
        let qa = crt_single(&side_a, ms)?;
        let qb = crt_single(&side_b, ms)?;
        if qa >= limit || qb >= limit {
            continue;
        }
        if ResidueFamily::from_values(ms.clone(), qa, qb).canonical() != target {
            continue;
        }
        let cand = IntegerPair::new(qa, qb);
        if !found.contains(&cand) {
            found.push(cand);
        }
    }
    found.sort();
    Ok(found)
}

/// Two-integer CRT over moduli `M_k = M*m_k` sharing the factor `M`.
///
/// With distinct common remainders the remainders are split by their value
/// modulo `M` and each group is solved on its own (valid on `[0, M*Gamma)`).
/// With equal common remainders the quotients `(r - r^c)/M` go through
/// [`solve_two_coprime`] and are lifted back (valid on `[0, M*d)`).
pub fn solve_two_gcd(residues: &ResidueFamily) -> Result<IntegerPair> {
    let ms = residues.moduli();
    let big_m = ms.big_m();
    let pairs = residues.pairs();

    let (c0a, c0b) = pairs[0];
    let reference = sorted_pair(common_remainder(c0a, big_m), common_remainder(c0b, big_m));
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let here = sorted_pair(common_remainder(a, big_m), common_remainder(b, big_m));
        if here != reference {
            return Err(Error::InconsistentResidues(format!(
                "common remainders {here:?} at modulus index {} differ from {reference:?}",
                k + 1
            )));
        }
    }
    let (rc1, rc2) = reference;

    // A single integer (every residue set is a singleton).
    if pairs.iter().all(|&(a, b)| a == b) {
        let group: Vec<i64> = pairs.iter().map(|&(a, _)| a).collect();
        let n = crt_single_noncoprime(&group, ms)?;
        return Ok(IntegerPair::new(n, n));
    }

    if rc1 != rc2 {
        let mut g1 = Vec::with_capacity(pairs.len());
        let mut g2 = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if common_remainder(a, big_m) == rc1 {
                g1.push(a);
                g2.push(b);
            } else {
                g1.push(b);
                g2.push(a);
            }
        }
        let n1 = crt_single_noncoprime(&g1, ms)?;
        let n2 = crt_single_noncoprime(&g2, ms)?;
        return Ok(IntegerPair::new(n1, n2));
    }

    let rc = rc1;
    let q = solve_two_coprime(&quotient_family(residues, rc)?)?;
    Ok(IntegerPair::new(big_m * q.n1 + rc, big_m * q.n2 + rc))
}

/// Quotients `(r - rc)/M` over the moduli `m_k`, for a family whose
/// remainders all share the common remainder `rc`.
pub fn quotient_family(residues: &ResidueFamily, rc: i64) -> Result<ResidueFamily> {
    let ms = residues.moduli();
    let big_m = ms.big_m();
    let quotient = |r: i64| {
        if common_remainder(r, big_m) != rc {
            return Err(Error::InconsistentResidues(format!(
                "remainder {r} is not {rc} modulo {big_m}"
            )));
        }
        Ok((r - rc) / big_m)
    };
    let pairs = residues
        .pairs()
        .iter()
        .map(|&(a, b)| Ok((quotient(a)?, quotient(b)?)))
        .collect::<Result<_>>()?;
    ResidueFamily::new(ms.quotient_set(), pairs)
}

fn sorted_pair(a: i64, b: i64) -> (i64, i64) {
    (a.min(b), a.max(b))
}
