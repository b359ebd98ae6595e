//! Probability values and finite distributions.
//!
//! Exact rationals are the default representation. `f64` is supported as an
//! opt-in mode where equality is checked up to [`FLOAT_TOLERANCE`].

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Result};

/// Exact probability.
pub type Rational = BigRational;

/// Absolute tolerance used when comparing float probabilities.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

/// Numeric type usable as a probability weight.
pub trait Probability:
    Clone + Debug + PartialOrd + Zero + One + Add<Output = Self> + Mul<Output = Self> + Send + Sync + 'static
{
    /// Equality as used for distribution comparison: exact for rationals,
    /// within [`FLOAT_TOLERANCE`] for floats.
    fn same(&self, other: &Self) -> bool;

    fn to_f64(&self) -> f64;

    fn is_negative_prob(&self) -> bool {
        *self < Self::zero()
    }
}

impl Probability for Rational {
    fn same(&self, other: &Self) -> bool {
        self == other
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Probability for f64 {
    fn same(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Builds the rational `num/den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"3/4"`, `"1"` or `"0"` into a rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| invalid(format!("bad fraction '{text}'")))?;
    let den = BigInt::from_str(den).map_err(|_| invalid(format!("bad fraction '{text}'")))?;
    if den.is_zero() {
        return Err(invalid(format!("zero denominator in '{text}'")));
    }
    Ok(Rational::new(num, den))
}

/// Renders a rational as `n/d` (or `n` when integral).
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A finite distribution. Zero-mass entries are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<K: Ord, P = Rational> {
    support: BTreeMap<K, P>,
}

impl<K: Ord + Clone, P: Probability> Distribution<K, P> {
    /// Validated constructor: masses must be nonnegative and sum to one.
    pub fn new(masses: impl IntoIterator<Item = (K, P)>) -> Result<Self> {
        let d = Self::from_masses(masses);
        for p in d.support.values() {
            if p.is_negative_prob() {
                return Err(invalid(format!("negative probability {p:?}")));
            }
        }
        if !d.total().same(&P::one()) {
            return Err(invalid(format!("probabilities sum to {:?}, not 1", d.total())));
        }
        Ok(d)
    }

    /// Degenerate distribution δ(value).
    pub fn point(value: K) -> Self {
        let mut support = BTreeMap::new();
        support.insert(value, P::one());
        Distribution { support }
    }

    /// Accumulates masses without normalization checks. Repeated keys add up.
    pub(crate) fn from_masses(masses: impl IntoIterator<Item = (K, P)>) -> Self {
        let mut support: BTreeMap<K, P> = BTreeMap::new();
        for (k, p) in masses {
            if p.is_zero() {
                continue;
            }
            match support.get_mut(&k) {
                Some(acc) => *acc = acc.clone() + p,
                None => {
                    support.insert(k, p);
                }
            }
        }
        support.retain(|_, p| !p.is_zero());
        Distribution { support }
    }

    pub fn prob(&self, value: &K) -> P {
        self.support.get(value).cloned().unwrap_or_else(P::zero)
    }

    pub fn total(&self) -> P {
        self.support.values().fold(P::zero(), |acc, p| acc + p.clone())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &P)> {
        self.support.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.support.keys()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Returns the single outcome if this is a point mass.
    pub fn as_point(&self) -> Option<&K> {
        if self.support.len() == 1 {
            let (k, p) = self.support.iter().next()?;
            p.same(&P::one()).then_some(k)
        } else {
            None
        }
    }

    /// Pushforward through `f`; total mass is preserved.
    pub fn map<J: Ord + Clone>(&self, mut f: impl FnMut(&K) -> J) -> Distribution<J, P> {
        Distribution::from_masses(self.support.iter().map(|(k, p)| (f(k), p.clone())))
    }

    /// Equality over the union of supports, missing entries counting as zero.
    pub fn same(&self, other: &Self) -> bool {
        let zero = P::zero();
        let lhs = self.support.iter().all(|(k, p)| p.same(other.support.get(k).unwrap_or(&zero)));
        let rhs = other
            .support
            .iter()
            .all(|(k, p)| p.same(self.support.get(k).unwrap_or(&zero)));
        lhs && rhs
    }
}

impl<K: Ord + Clone> Distribution<K, Rational> {
    pub fn to_float(&self) -> Distribution<K, f64> {
        Distribution::from_masses(self.support.iter().map(|(k, p)| (k.clone(), Probability::to_f64(p))))
    }
}
