//! Robust reconstruction of two integers from unordered, erroneous residue
//! sets over moduli `M_k = M*m_k`.
//!
//! Pipeline:
//! 1. reduce all `2K` remainders modulo `M` and sort them;
//! 2. take the circular gaps `D_k` and pick `k0 = argmax D_k + D_{k+K}`;
//! 3. cut the sorted circle into two clusters of `K` values each;
//! 4. average each cluster (shifting the first by `-M` when it sits on the
//!    far side of the wrap point);
//! 5. subtract the matching cluster mean from every remainder to get
//!    quotient residues;
//! 6. solve the quotient residues with the coprime two-integer CRT;
//! 7. pair quotients with common remainders and assemble the estimates.
//!
//! Means and estimates stay exact rationals until the final rounding.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gcrt2::{solve_two_coprime, IntegerPair, ResidueFamily};
use crate::modmath::{circular_distance_int, common_remainder, round_half_up_ratio, ModulusSet, Rational};

/// Residue pairs that may carry remainder errors; elements lie in `[0, M_k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErroneousResidueFamily {
    ms: ModulusSet,
    pairs: Vec<(i64, i64)>,
}

impl ErroneousResidueFamily {
    pub fn new(ms: ModulusSet, pairs: Vec<(i64, i64)>) -> Result<Self> {
        let checked = ResidueFamily::new(ms, pairs)?;
        Ok(Self {
            ms: checked.moduli().clone(),
            pairs: checked.pairs().to_vec(),
        })
    }

    /// Wraps arbitrary integers into `[0, M_k)`.
    pub fn from_raw(ms: ModulusSet, raw: &[(i64, i64)]) -> Result<Self> {
        if raw.len() != ms.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} residue pairs, got {}",
                ms.len(),
                raw.len()
            )));
        }
        let pairs = raw
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                let full = ms.full_modulus(k);
                (a.rem_euclid(full), b.rem_euclid(full))
            })
            .collect();
        Ok(Self { ms, pairs })
    }

    pub fn moduli(&self) -> &ModulusSet {
        &self.ms
    }

    pub fn pairs(&self) -> &[(i64, i64)] {
        &self.pairs
    }
}

impl From<ResidueFamily> for ErroneousResidueFamily {
    fn from(f: ResidueFamily) -> Self {
        Self {
            ms: f.moduli().clone(),
            pairs: f.pairs().to_vec(),
        }
    }
}

/// Sorted common remainders with the stable permutation that produced them.
///
/// Raw entries are indexed pair by pair: `2k` is the first element of pair
/// `k`, `2k + 1` the second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SortedRemainders {
    pub values: Vec<i64>,
    pub permutation: Vec<usize>,
}

pub fn sort_common_remainders(fam: &ErroneousResidueFamily) -> SortedRemainders {
    let big_m = fam.ms.big_m();
    let raw: Vec<i64> = fam
        .pairs
        .iter()
        .flat_map(|&(a, b)| [common_remainder(a, big_m), common_remainder(b, big_m)])
        .collect();
    let mut permutation: Vec<usize> = (0..raw.len()).collect();
    permutation.sort_by_key(|&i| raw[i]);
    let values = permutation.iter().map(|&i| raw[i]).collect();
    SortedRemainders { values, permutation }
}

/// Circular gaps between neighbours; the last one wraps through `M`.
pub fn gaps(sorted: &[i64], big_m: i64) -> Result<Vec<i64>> {
    if sorted.is_empty() {
        return Err(Error::InvalidArgument("no remainders to compare".into()));
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("remainders are not sorted".into()));
    }
    if sorted.iter().any(|&v| !(0..big_m).contains(&v)) {
        return Err(Error::InvalidArgument(format!("remainders must lie in [0, {big_m})")));
    }
    let n = sorted.len();
    let mut out: Vec<i64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    out.push(sorted[0] - sorted[n - 1] + big_m);
    Ok(out)
}

/// 1-based `k0` maximising `D_k + D_{k+K}`; the first maximum wins.
pub fn split_index(gaps: &[i64]) -> Result<usize> {
    if gaps.is_empty() || !gaps.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "expected an even, nonzero number of gaps, got {}",
            gaps.len()
        )));
    }
    let k = gaps.len() / 2;
    let mut best = 0;
    for i in 1..k {
        if gaps[i] + gaps[i + k] > gaps[best] + gaps[best + k] {
            best = i;
        }
    }
    Ok(best + 1)
}

/// Two clusters of erroneous common remainders and everything needed to
/// audit how they were formed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterDecomposition {
    #[serde(rename = "M")]
    pub big_m: i64,
    pub sorted: Vec<i64>,
    pub permutation: Vec<usize>,
    pub gaps: Vec<i64>,
    /// 1-based split index.
    pub k0: usize,
    pub omega1: Vec<i64>,
    /// May hold values shifted down by `M`.
    pub omega2: Vec<i64>,
    /// `omega1`, shifted down by `M` when `omega1[K-1] - omega2[0] > M/2`.
    pub omega_prime: Vec<i64>,
    pub shifted: bool,
    /// `D_{k0} + D_{k0+K}`.
    pub separation: i64,
    /// Exactly one `k` has `D_k + D_{k+K} > M/2`.
    pub separation_unique: bool,
}

impl ClusterDecomposition {
    pub fn k(&self) -> usize {
        self.omega1.len()
    }

    pub fn omega1_spread(&self) -> i64 {
        self.omega1[self.k() - 1] - self.omega1[0]
    }

    pub fn omega2_spread(&self) -> i64 {
        self.omega2[self.k() - 1] - self.omega2[0]
    }
}

/// Cuts the sorted circle after position `k0` and after `k0 + K`.
pub fn form_clusters(sorted: &SortedRemainders, k0: usize, big_m: i64) -> Result<ClusterDecomposition> {
    let values = &sorted.values;
    let n = values.len();
    let k = n / 2;
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("expected 2K remainders, got {n}")));
    }
    if !(1..=k).contains(&k0) {
        return Err(Error::InvalidArgument(format!("split index {k0} outside 1..={k}")));
    }
    let gaps = gaps(values, big_m)?;

    let omega1: Vec<i64> = values[k0..k0 + k].to_vec();
    let omega2: Vec<i64> = if k0 == k {
        values[..k].to_vec()
    } else {
        values[k0 + k..]
            .iter()
            .map(|v| v - big_m)
            .chain(values[..k0].iter().copied())
            .collect()
    };
    debug_assert!(omega2.windows(2).all(|w| w[0] <= w[1]));

    let shifted = 2 * (omega1[k - 1] - omega2[0]) > big_m;
    let omega_prime = if shifted {
        omega1.iter().map(|w| w - big_m).collect()
    } else {
        omega1.clone()
    };

    let sums: Vec<i64> = (0..k).map(|i| gaps[i] + gaps[i + k]).collect();
    let wide: Vec<usize> = (0..k).filter(|&i| 2 * sums[i] > big_m).collect();
    Ok(ClusterDecomposition {
        big_m,
        sorted: values.clone(),
        permutation: sorted.permutation.clone(),
        separation: sums[k0 - 1],
        separation_unique: wide == [k0 - 1],
        gaps,
        k0,
        omega1,
        omega2,
        omega_prime,
        shifted,
    })
}

/// Sort, split and cluster a family in one call.
pub fn decompose(fam: &ErroneousResidueFamily) -> Result<ClusterDecomposition> {
    let sorted = sort_common_remainders(fam);
    let big_m = fam.ms.big_m();
    let k0 = split_index(&gaps(&sorted.values, big_m)?)?;
    form_clusters(&sorted, k0, big_m)
}

/// Cluster means `(mean(omega_prime), mean(omega2))`.
pub fn cluster_means(dec: &ClusterDecomposition) -> (Rational, Rational) {
    let k = dec.k() as i64;
    let s1: i64 = dec.omega_prime.iter().sum();
    let s2: i64 = dec.omega2.iter().sum();
    (Rational::new(s1, k), Rational::new(s2, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cluster {
    #[serde(rename = "omega1")]
    Omega1,
    #[serde(rename = "omega2")]
    Omega2,
}

/// Which cluster a remainder fell into, and its representative in
/// `omega_prime ∪ omega2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub cluster: Cluster,
    pub common: i64,
}

/// Quotient residues recovered from an erroneous family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientRecovery {
    /// Quotient residues modulo `m_k`, in input pair order.
    pub family: ResidueFamily,
    pub membership: Vec<[Membership; 2]>,
}

fn locate(rc: i64, dec: &ClusterDecomposition) -> Result<Membership> {
    let big_m = dec.big_m;
    for (w, wp) in dec.omega1.iter().zip(&dec.omega_prime) {
        if circular_distance_int(rc, *w, big_m)? == 0 {
            return Ok(Membership {
                cluster: Cluster::Omega1,
                common: *wp,
            });
        }
    }
    for u in &dec.omega2 {
        if circular_distance_int(rc, *u, big_m)? == 0 {
            return Ok(Membership {
                cluster: Cluster::Omega2,
                common: *u,
            });
        }
    }
    Err(Error::ClusterMembership { value: rc })
}

/// `q = [(r - mean_t) / M]` reduced modulo `m_k`, with `t` the cluster the
/// remainder's common remainder belongs to (first cluster checked first).
pub fn recover_quotients(
    fam: &ErroneousResidueFamily,
    means: (Rational, Rational),
    dec: &ClusterDecomposition,
) -> Result<QuotientRecovery> {
    let ms = &fam.ms;
    let big_m = ms.big_m();
    let mut qpairs = Vec::with_capacity(fam.pairs.len());
    let mut membership = Vec::with_capacity(fam.pairs.len());
    for (k, &(a, b)) in fam.pairs.iter().enumerate() {
        let mk = ms.moduli()[k];
        let mut q = [0i64; 2];
        let mut who = [Membership {
            cluster: Cluster::Omega1,
            common: 0,
        }; 2];
        for (slot, r) in [a, b].into_iter().enumerate() {
            let member = locate(common_remainder(r, big_m), dec)?;
            let mean = match member.cluster {
                Cluster::Omega1 => means.0,
                Cluster::Omega2 => means.1,
            };
            let quotient = round_half_up_ratio((Rational::from_integer(r) - mean) / big_m);
            q[slot] = quotient.rem_euclid(mk);
            who[slot] = member;
        }
        qpairs.push((q[0], q[1]));
        membership.push(who);
    }
    Ok(QuotientRecovery {
        family: ResidueFamily::new(ms.quotient_set(), qpairs)?,
        membership,
    })
}

/// Every intermediate of one robust reconstruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Estimate2 {
    pub decomposition: ClusterDecomposition,
    #[serde(serialize_with = "ratio_str")]
    pub omega_bar1: Rational,
    #[serde(serialize_with = "ratio_str")]
    pub omega_bar2: Rational,
    /// Quotient residue pairs, input pair order.
    pub quotient_pairs: Vec<(i64, i64)>,
    pub qhat1: i64,
    pub qhat2: i64,
    /// 1-based indices with distinct quotient residues (only when `qhat1 != qhat2`).
    pub diff_set: Vec<usize>,
    pub p: usize,
    #[serde(serialize_with = "opt_ratio_str")]
    pub rc_hat1: Option<Rational>,
    #[serde(serialize_with = "opt_ratio_str")]
    pub rc_hat2: Option<Rational>,
    #[serde(serialize_with = "ratio_str")]
    pub nhat1: Rational,
    #[serde(serialize_with = "ratio_str")]
    pub nhat2: Rational,
    #[serde(rename = "N1")]
    pub n1: i64,
    #[serde(rename = "N2")]
    pub n2: i64,
    /// Moduli meet the guarantee and the gap split is unambiguous. When
    /// false the estimate is best effort.
    pub guarantee_holds: bool,
}

impl Estimate2 {
    pub fn rounded(&self) -> IntegerPair {
        IntegerPair::new(self.n1, self.n2)
    }

    pub fn pre_rounding(&self) -> (Rational, Rational) {
        (self.nhat1, self.nhat2)
    }
}

fn ratio_str<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn opt_ratio_str<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

/// Full robust reconstruction.
pub fn robust_reconstruct(fam: &ErroneousResidueFamily) -> Result<Estimate2> {
    let ms = &fam.ms;
    let big_m = Rational::from_integer(ms.big_m());
    let dec = decompose(fam)?;
    let means = cluster_means(&dec);
    let recovery = recover_quotients(fam, means, &dec)?;

    let q = solve_two_coprime(&recovery.family).map_err(|e| match e {
        Error::InconsistentResidues(msg) => Error::OutOfRange(msg),
        other => other,
    })?;
    let (qhat1, qhat2) = (q.n1, q.n2);
    let quotient_pairs = recovery.family.pairs().to_vec();

    let mut diff_set = Vec::new();
    let (rc_hat1, rc_hat2, nhat1, nhat2) = if qhat1 == qhat2 {
        let base = big_m * qhat1;
        (None, None, base + means.0, base + means.1)
    } else {
        let (mut sum1, mut sum2) = (0i64, 0i64);
        for (k, (&(qa, qb), who)) in quotient_pairs.iter().zip(&recovery.membership).enumerate() {
            if qa == qb {
                continue;
            }
            let mk = ms.moduli()[k];
            let (t1, t2) = (qhat1.rem_euclid(mk), qhat2.rem_euclid(mk));
            let (first, second) = if (qa, qb) == (t1, t2) {
                (who[0], who[1])
            } else if (qb, qa) == (t1, t2) {
                (who[1], who[0])
            } else {
                return Err(Error::InconsistentResidues(format!(
                    "quotient residues ({qa}, {qb}) at index {} do not match ({t1}, {t2})",
                    k + 1
                )));
            };
            sum1 += first.common;
            sum2 += second.common;
            diff_set.push(k + 1);
        }
        if diff_set.is_empty() {
            return Err(Error::InconsistentResidues(
                "distinct quotients with identical residues".into(),
            ));
        }
        let p = diff_set.len() as i64;
        let r1 = Rational::new(sum1, p);
        let r2 = Rational::new(sum2, p);
        (Some(r1), Some(r2), big_m * qhat1 + r1, big_m * qhat2 + r2)
    };

    let guarantee_holds = ms.guarantee() && dec.separation_unique;
    Ok(Estimate2 {
        omega_bar1: means.0,
        omega_bar2: means.1,
        p: diff_set.len(),
        diff_set,
        quotient_pairs,
        qhat1,
        qhat2,
        rc_hat1,
        rc_hat2,
        n1: round_half_up_ratio(nhat1),
        n2: round_half_up_ratio(nhat2),
        nhat1,
        nhat2,
        guarantee_holds,
        decomposition: dec,
    })
}
