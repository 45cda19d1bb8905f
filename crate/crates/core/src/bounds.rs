//! Capacity of a template space against near-collisions.
//!
//! With `S = |B(x, epsilon)|` the Hamming ball volume, a uniformly filled
//! database of `k` templates has `C(k, 2) * S / 2^n` near-colliding pairs on
//! average, which reaches one half around `k = 2^(n/2) / sqrt(S)`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Dimension from which a deployment is considered roomy enough.
pub const RECOMMENDED_MIN_DIM: usize = 512;
/// Largest threshold compatible with the recommended dimension.
pub const RECOMMENDED_MAX_EPSILON: usize = 51;

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c *= n - i;
        c /= i + 1;
    }
    c
}

/// `log2` of a big integer, using its top 64 bits. Zero maps to `-inf`.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().unwrap_or(0) as f64).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).log2() + shift as f64
}

fn check(n: usize, epsilon: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if epsilon > n {
        return Err(Error::EpsilonTooLarge { epsilon, dim: n });
    }
    Ok(())
}

/// `S_epsilon(n) = sum_{i <= epsilon} C(n, i)`, exactly.
pub fn ball_volume(n: usize, epsilon: usize) -> Result<BigUint> {
    check(n, epsilon)?;
    let mut term = BigUint::one();
    let mut total = BigUint::one();
    for i in 0..epsilon {
        term *= n - i;
        term /= i + 1;
        total += &term;
    }
    Ok(total)
}

/// `ceil(2^n / S_epsilon(n))`: enrolling this many templates forces two of them
/// into a common ball.
pub fn dirichlet_bound(n: usize, epsilon: usize) -> Result<BigUint> {
    let s = ball_volume(n, epsilon)?;
    let space = BigUint::one() << n;
    Ok((&space + &s - 1u32) / s)
}

/// `log2` of the database size at which a near-collision appears with
/// probability about one half.
pub fn birthday_bound_log2(n: usize, epsilon: usize) -> Result<f64> {
    let s = ball_volume(n, epsilon)?;
    Ok(n as f64 / 2.0 - log2_big(&s) / 2.0)
}

/// `log2` of the expected database size holding a first near-collision,
/// `2^((n+1)/2) / sqrt(S)`. Larger than [`birthday_bound_log2`] by half a bit.
pub fn first_cluster_log2(n: usize, epsilon: usize) -> Result<f64> {
    Ok(birthday_bound_log2(n, epsilon)? + 0.5)
}

/// `C(k, 2) * S_epsilon(n) * 2^-n`, evaluated in log space.
pub fn expected_near_collisions(n: usize, epsilon: usize, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::Invalid(format!("need at least two templates, got {k}")));
    }
    let s = ball_volume(n, epsilon)?;
    let kf = k as f64;
    let log2_pairs = (kf * (kf - 1.0) / 2.0).log2();
    Ok((log2_pairs + log2_big(&s) - n as f64).exp2())
}

/// Epsilon either absolute or as a percentage of the dimension (rounded down).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsilonSpec {
    Absolute(usize),
    Percent(f64),
}

impl EpsilonSpec {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            EpsilonSpec::Absolute(e) => e,
            EpsilonSpec::Percent(p) => (p * n as f64 / 100.0 + 1e-9).floor().max(0.0) as usize,
        }
    }
}

impl FromStr for EpsilonSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("epsilon must be an integer or a percentage, got `{s}`"));
        match s.strip_suffix('%') {
            Some(p) => {
                let v: f64 = p.trim().parse().map_err(|_| bad())?;
                if !(0.0..=100.0).contains(&v) {
                    return Err(bad());
                }
                Ok(EpsilonSpec::Percent(v))
            }
            None => s.trim().parse().map(EpsilonSpec::Absolute).map_err(|_| bad()),
        }
    }
}

impl fmt::Display for EpsilonSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonSpec::Absolute(e) => write!(f, "{e}"),
            EpsilonSpec::Percent(p) => write!(f, "{p}%"),
        }
    }
}

fn as_decimal<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityReport {
    pub n: usize,
    pub epsilon: usize,
    #[serde(serialize_with = "as_decimal")]
    pub ball_volume: BigUint,
    pub ball_volume_log2: f64,
    #[serde(serialize_with = "as_decimal")]
    pub dirichlet_k: BigUint,
    pub birthday_log2_k: f64,
    pub birthday_k: f64,
    pub first_cluster_log2_k: f64,
    /// Present when a database size was supplied.
    pub k: Option<u64>,
    pub expected_collisions: Option<f64>,
    /// `k` stays below the birthday size.
    pub within_capacity: Option<bool>,
    /// `n >= 512` and `epsilon <= 51`.
    pub meets_recommendation: bool,
}

pub fn capacity_report(n: usize, epsilon: usize, k: Option<u64>) -> Result<CapacityReport> {
    let s = ball_volume(n, epsilon)?;
    let birthday = birthday_bound_log2(n, epsilon)?;
    let expected = match k {
        Some(k) if k >= 2 => Some(expected_near_collisions(n, epsilon, k)?),
        _ => None,
    };
    Ok(CapacityReport {
        n,
        epsilon,
        ball_volume_log2: log2_big(&s),
        ball_volume: s,
        dirichlet_k: dirichlet_bound(n, epsilon)?,
        birthday_log2_k: birthday,
        birthday_k: birthday.exp2(),
        first_cluster_log2_k: first_cluster_log2(n, epsilon)?,
        k,
        expected_collisions: expected,
        within_capacity: k.map(|k| (k as f64).log2() < birthday),
        meets_recommendation: n >= RECOMMENDED_MIN_DIM && epsilon <= RECOMMENDED_MAX_EPSILON,
    })
}

/// Grid for the two capacity curve families.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveConfig {
    /// Family (a): `log2 k` against the dimension, one curve per percentage.
    pub dims: Vec<usize>,
    pub percents: Vec<f64>,
    /// Family (b): `log2 k` against the percentage, one curve per dimension.
    pub sweep_dims: Vec<usize>,
    pub sweep_percents: Vec<f64>,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            dims: (4..=10).map(|e| 1usize << e).collect(),
            percents: vec![5.0, 10.0, 20.0, 40.0],
            sweep_dims: vec![128, 256, 512],
            sweep_percents: (0..=50).map(f64::from).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub family: char,
    pub n: usize,
    pub percent: f64,
    pub epsilon: usize,
    pub log2_k: f64,
}

pub fn emit_curves(config: &CurveConfig) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for &p in &config.percents {
        for &n in &config.dims {
            out.push(point('a', n, p)?);
        }
    }
    for &n in &config.sweep_dims {
        for &p in &config.sweep_percents {
            out.push(point('b', n, p)?);
        }
    }
    Ok(out)
}

fn point(family: char, n: usize, percent: f64) -> Result<CurvePoint> {
    let epsilon = EpsilonSpec::Percent(percent).resolve(n);
    Ok(CurvePoint {
        family,
        n,
        percent,
        epsilon,
        log2_k: birthday_bound_log2(n, epsilon)?,
    })
}

/// CSV with header `n,epsilon,log2_k`; each family is introduced by a `#` line.
pub fn curves_csv(config: &CurveConfig, points: &[CurvePoint]) -> String {
    let mut out = format!(
        "# capacity curves: dims={:?} percents={:?} sweep_dims={:?} sweep_percents={}..{}\n",
        config.dims,
        config.percents,
        config.sweep_dims,
        config.sweep_percents.first().copied().unwrap_or(0.0),
        config.sweep_percents.last().copied().unwrap_or(0.0),
    );
    out.push_str("n,epsilon,log2_k\n");
    let mut family = None;
    for p in points {
        if family != Some(p.family) {
            family = Some(p.family);
            let label = if p.family == 'a' {
                "# family a: log2 k vs n at fixed epsilon percent"
            } else {
                "# family b: log2 k vs epsilon percent at fixed n"
            };
            out.push_str(label);
            out.push('\n');
        }
        out.push_str(&format!("{},{},{:.6}\n", p.n, p.epsilon, p.log2_k));
    }
    out
}
