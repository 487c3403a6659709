//! Exact integer and modular arithmetic: the moduli system, rounding,
//! circular distance and single-integer CRT with a common remainder.

use num_integer::Integer;
use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

/// Exact rational used for cluster means and pre-rounding estimates.
pub type Rational = Ratio<i64>;

/// Moduli `M_k = M * m_k` with a shared factor `M` and pairwise coprime `m_k`.
///
/// The CRT constants `Gamma_k = Gamma / m_k` and their inverses modulo `m_k`
/// are precomputed. The order of the `m_k` is preserved as given.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModulusSet {
    #[serde(rename = "M")]
    big_m: i64,
    m: Vec<i64>,
    #[serde(skip)]
    gamma: i64,
    #[serde(skip)]
    gamma_k: Vec<i64>,
    #[serde(skip)]
    gamma_bar_k: Vec<i64>,
    guarantee: bool,
}

impl ModulusSet {
    pub fn new(big_m: i64, m: Vec<i64>) -> Result<Self> {
        if big_m < 1 {
            return Err(Error::InvalidArgument(format!("M must be positive, got {big_m}")));
        }
        if m.is_empty() {
            return Err(Error::InvalidArgument("at least one modulus is required".into()));
        }
        if let Some(bad) = m.iter().find(|&&x| x < 2) {
            return Err(Error::InvalidArgument(format!("moduli must be at least 2, got {bad}")));
        }
        for (i, &a) in m.iter().enumerate() {
            for &b in &m[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(Error::InvalidArgument(format!("moduli {a} and {b} are not coprime")));
                }
            }
        }
        let gamma = m
            .iter()
            .try_fold(1i64, |acc, &x| acc.checked_mul(x))
            .ok_or(Error::Overflow("product of moduli"))?;
        // M * Gamma bounds every value the library handles.
        big_m.checked_mul(gamma).ok_or(Error::Overflow("M * Gamma"))?;

        let gamma_k: Vec<i64> = m.iter().map(|&mk| gamma / mk).collect();
        let gamma_bar_k = gamma_k
            .iter()
            .zip(&m)
            .map(|(&gk, &mk)| mod_inverse(gk, mk))
            .collect::<Result<Vec<_>>>()?;

        let sorted = m.windows(2).all(|w| w[0] < w[1]);
        let guarantee = sorted && m.len() >= 3 && m[0] >= 3;
        Ok(Self {
            big_m,
            m,
            gamma,
            gamma_k,
            gamma_bar_k,
            guarantee,
        })
    }

    /// The shared factor `M`.
    pub fn big_m(&self) -> i64 {
        self.big_m
    }

    /// The coprime factors `m_1..m_K`.
    pub fn moduli(&self) -> &[i64] {
        &self.m
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Full modulus `M_k = M * m_k` (0-based `k`).
    pub fn full_modulus(&self, k: usize) -> i64 {
        self.big_m * self.m[k]
    }

    pub fn full_moduli(&self) -> Vec<i64> {
        (0..self.len()).map(|k| self.full_modulus(k)).collect()
    }

    pub fn gamma(&self) -> i64 {
        self.gamma
    }

    pub fn gamma_k(&self) -> &[i64] {
        &self.gamma_k
    }

    pub fn gamma_bar_k(&self) -> &[i64] {
        &self.gamma_bar_k
    }

    /// True when `K >= 3`, the moduli increase and `m_1 >= 3`, i.e. the
    /// dynamic-range and robustness results apply.
    pub fn guarantee(&self) -> bool {
        self.guarantee
    }

    /// The same coprime factors with `M = 1`; the quotient-level system.
    pub fn quotient_set(&self) -> ModulusSet {
        ModulusSet {
            big_m: 1,
            ..self.clone()
        }
    }
}

/// Inverse of `a` modulo `m`, in `[0, m)`.
pub fn mod_inverse(a: i64, m: i64) -> Result<i64> {
    if m < 1 {
        return Err(Error::InvalidArgument(format!("modulus must be positive, got {m}")));
    }
    let egcd = a.rem_euclid(m).extended_gcd(&m);
    if egcd.gcd != 1 {
        return Err(Error::InvalidArgument(format!("{a} has no inverse modulo {m}")));
    }
    Ok(egcd.x.rem_euclid(m))
}

/// Rounds with ties going up: the unique `n` with `-1/2 <= x - n < 1/2`.
pub fn round_half_up(x: f64) -> Result<i64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("cannot round non-finite value {x}")));
    }
    let floor = x.floor();
    // x - floor(x) is exact in binary floating point.
    let n = if x - floor >= 0.5 { floor + 1.0 } else { floor };
    if n.abs() >= 9.0e18 {
        return Err(Error::Overflow("round_half_up"));
    }
    Ok(n as i64)
}

/// Exact `round_half_up` for rationals: `floor(x + 1/2)`.
pub fn round_half_up_ratio(x: Rational) -> i64 {
    let twice = *x.numer() * 2 + *x.denom();
    Integer::div_floor(&twice, &(*x.denom() * 2))
}

/// A real value paired with its half-up rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundedReal {
    pub value: f64,
    pub rounded: i64,
}

impl RoundedReal {
    pub fn new(value: f64) -> Result<Self> {
        Ok(Self {
            value,
            rounded: round_half_up(value)?,
        })
    }
}

/// Signed representative of `x - y` modulo `c`, in `[-c/2, c/2)`.
pub fn circular_distance(x: f64, y: f64, c: f64) -> Result<f64> {
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "circular modulus must be positive, got {c}"
        )));
    }
    let diff = x - y;
    let wraps = round_half_up(diff / c)?;
    Ok(diff - wraps as f64 * c)
}

/// Integer form of [`circular_distance`]; exact.
pub fn circular_distance_int(x: i64, y: i64, c: i64) -> Result<i64> {
    if c <= 0 {
        return Err(Error::InvalidArgument(format!(
            "circular modulus must be positive, got {c}"
        )));
    }
    let diff = x - y;
    let wraps = round_half_up_ratio(Rational::new(diff, c));
    Ok(diff - wraps * c)
}

/// `<r>_M`, always in `[0, M)` (negative inputs included).
pub fn common_remainder(r: i64, big_m: i64) -> i64 {
    r.rem_euclid(big_m)
}

/// Classic CRT over the coprime factors of `ms`: the unique `Q` in
/// `[0, Gamma)` with `Q = q_k (mod m_k)`, via `sum Gamma_k * GammaBar_k * q_k`.
pub fn crt_single(remainders: &[i64], ms: &ModulusSet) -> Result<i64> {
    if remainders.len() != ms.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} remainders, got {}",
            ms.len(),
            remainders.len()
        )));
    }
    let gamma = ms.gamma as i128;
    let mut acc: i128 = 0;
    for (k, &q) in remainders.iter().enumerate() {
        let mk = ms.m[k];
        if !(0..mk).contains(&q) {
            return Err(Error::InvalidArgument(format!("remainder {q} outside [0, {mk})")));
        }
        let term = ms.gamma_k[k] as i128 * ms.gamma_bar_k[k] as i128 % gamma * q as i128;
        acc = (acc + term) % gamma;
    }
    Ok(acc as i64)
}

/// Single-integer CRT over the full moduli `M_k`, which share the factor `M`.
///
/// All remainders must agree modulo `M` (the common remainder `r^c`); the
/// result is `N = M*Q + r^c`, unique in `[0, M*Gamma)`.
pub fn crt_single_noncoprime(remainders: &[i64], ms: &ModulusSet) -> Result<i64> {
    if remainders.len() != ms.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} remainders, got {}",
            ms.len(),
            remainders.len()
        )));
    }
    for (k, &r) in remainders.iter().enumerate() {
        let full = ms.full_modulus(k);
        if !(0..full).contains(&r) {
            return Err(Error::InvalidArgument(format!("remainder {r} outside [0, {full})")));
        }
    }
    let big_m = ms.big_m;
    let rc = common_remainder(remainders[0], big_m);
    if let Some(&r) = remainders.iter().find(|&&r| common_remainder(r, big_m) != rc) {
        return Err(Error::InconsistentResidues(format!(
            "remainder {r} has common remainder {} but {} was expected",
            common_remainder(r, big_m),
            rc
        )));
    }
    let quotients: Vec<i64> = remainders.iter().map(|&r| (r - rc) / big_m).collect();
    let q = crt_single(&quotients, ms)?;
    Ok(big_m * q + rc)
}
