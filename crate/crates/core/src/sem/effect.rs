use crate::error::{check_budget, invalid, Result};

use super::model::{Intervention, Sem, VarId};

pub const DEFAULT_EFFECT_BUDGET: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EffectVerdict {
    NoEffect,
    /// Two settings of the factors giving different response distributions.
    Effect { x1: Vec<usize>, x2: Vec<usize> },
}

impl EffectVerdict {
    pub fn is_effect(&self) -> bool {
        matches!(self, EffectVerdict::Effect { .. })
    }
}

/// Mixed-radix decoding; the first variable is the most significant digit.
pub(crate) fn valuation(mut index: u128, ranges: &[usize]) -> Vec<usize> {
    let mut out = vec![0; ranges.len()];
    for (slot, &r) in out.iter_mut().zip(ranges).rev() {
        *slot = (index % r as u128) as usize;
        index /= r as u128;
    }
    out
}

impl Sem {
    /// Does `factors` have an effect on `response` in `M[given]`?
    ///
    /// Settings of the factors are visited lexicographically. The witness is
    /// the first setting `x1` paired with the first later setting whose
    /// response distribution in `M[X := x][given]` differs from that of `x1`.
    pub fn has_effect(&self, factors: &[VarId], response: &[VarId], given: &Intervention, budget: u128) -> Result<EffectVerdict> {
        if factors.is_empty() || response.is_empty() {
            return Err(invalid("factors and response must be non-empty"));
        }
        for &v in factors.iter().chain(response) {
            self.check_var(v)?;
            if self.is_exogenous(v) {
                return Err(crate::error::Error::Unsupported(format!(
                    "'{}' is exogenous; effects are defined between endogenous variables",
                    self.variable(v).name
                )));
            }
        }
        if let Some(v) = factors.iter().find(|v| given.assignments.contains_key(v)) {
            return Err(invalid(format!("'{}' is both a factor and conditioned on", self.variable(*v).name)));
        }
        let ranges: Vec<usize> = factors.iter().map(|&v| self.variable(v).range).collect();
        let count = ranges.iter().try_fold(1u128, |acc, &r| acc.checked_mul(r as u128)).unwrap_or(u128::MAX);
        check_budget(count, budget)?;

        let base = self.intervene(given)?;
        let response_under = |x: &[usize]| base.intervene(&Intervention::from_pairs(factors, x))?.distribution(response);
        let x1 = valuation(0, &ranges);
        let reference = response_under(&x1)?;
        for idx in 1..count {
            let x2 = valuation(idx, &ranges);
            if response_under(&x2)? != reference {
                return Ok(EffectVerdict::Effect { x1, x2 });
            }
        }
        Ok(EffectVerdict::NoEffect)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Distribution;
    use crate::sem::model::{uniform, SemBuilder};

    #[test]
    fn copy_has_effect_independent_has_none() {
        let mut b = SemBuilder::new();
        let u = b.exogenous("U", 2, uniform(2));
        let x = b.function("X", 2, vec![u], |pv| Distribution::point(pv[0]));
        let y = b.function("Y", 2, vec![x], |pv| Distribution::point(pv[0]));
        let z = b.function("Z", 2, vec![u], |pv| Distribution::point(pv[0]));
        let sem = b.build().unwrap();
        assert_eq!(
            sem.has_effect(&[x], &[y], &Intervention::new(), 100).unwrap(),
            EffectVerdict::Effect { x1: vec![0], x2: vec![1] }
        );
        assert_eq!(sem.has_effect(&[x], &[z], &Intervention::new(), 100).unwrap(), EffectVerdict::NoEffect);
        assert!(sem.has_effect(&[x], &[y], &Intervention::new(), 1).is_err());
        assert!(sem.has_effect(&[x], &[y], &Intervention::new().set(x, 0), 100).is_err());
    }

    #[test]
    fn valuation_is_mixed_radix() {
        assert_eq!(valuation(5, &[2, 3]), vec![1, 2]);
        assert_eq!(valuation(0, &[4]), vec![0]);
    }
}
