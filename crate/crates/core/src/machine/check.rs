use rayon::prelude::*;

use crate::error::{check_budget, Error, Result};
use crate::prob::Probability;

use super::model::{InputPair, MooreMachine};
use super::trace::low_of;

pub const DEFAULT_BUDGET: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub horizon: usize,
    /// Compare low output distributions (probabilistic noninterference).
    /// When off the machine must be deterministic and single traces are compared.
    pub probabilistic: bool,
    /// Upper bound on the number of input sequences evaluated.
    pub budget: u128,
}

impl CheckOptions {
    pub fn new(horizon: usize) -> Self {
        CheckOptions { horizon, probabilistic: true, budget: DEFAULT_BUDGET }
    }

    pub fn deterministic(mut self) -> Self {
        self.probabilistic = false;
        self
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }
}

/// Two input sequences with equal low projections whose low output
/// distributions differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub first: Vec<InputPair>,
    pub second: Vec<InputPair>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NiVerdict {
    /// No violation among input sequences of length at most the horizon.
    NoninterferingUpTo(usize),
    Interference(Witness),
}

impl NiVerdict {
    pub fn is_interference(&self) -> bool {
        matches!(self, NiVerdict::Interference(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            NiVerdict::Interference(w) => Some(w),
            NiVerdict::NoninterferingUpTo(_) => None,
        }
    }
}

/// Number of input sequences of length `1..=horizon`.
pub fn enumeration_size(input_count: usize, horizon: usize) -> u128 {
    let base = input_count as u128;
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..horizon {
        layer = layer.saturating_mul(base);
        total = total.saturating_add(layer);
    }
    total
}

/// Decodes `index` as a base-`radix` digit string of length `len`, most
/// significant digit first, so increasing indices are lexicographic.
pub(crate) fn digits(mut index: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % radix;
        index /= radix;
    }
    out
}

fn zip_inputs(hi: &[usize], lo: &[usize]) -> Vec<InputPair> {
    hi.iter().zip(lo).map(|(&h, &l)| InputPair { hi: h, lo: l }).collect()
}

impl<P: Probability> MooreMachine<P> {
    /// Brute-force bounded check of noninterference from high inputs to low
    /// outputs.
    ///
    /// Sequences are visited by length, then lexicographically over
    /// `(hi, lo)` pairs. The returned witness is the least violating pair
    /// `(first, second)` with `first < second` in that order, independent of
    /// thread scheduling.
    pub fn check_noninterference(&self, opts: CheckOptions) -> Result<NiVerdict> {
        let ch = self.channels();
        check_budget(enumeration_size(ch.input_count(), opts.horizon), opts.budget)?;
        if !opts.probabilistic && !self.is_deterministic() {
            return Err(Error::NotDeterministic(
                "the possibilistic check needs point-mass transitions".into(),
            ));
        }
        for k in 1..=opts.horizon {
            if let Some(w) = self.violation_at_length(k, opts.probabilistic)? {
                return Ok(NiVerdict::Interference(w));
            }
        }
        Ok(NiVerdict::NoninterferingUpTo(opts.horizon))
    }

    /// Least violating pair among sequences of exactly `k` inputs, if any.
    pub fn violation_at_length(&self, k: usize, probabilistic: bool) -> Result<Option<Witness>> {
        let ch = self.channels();
        let (nh, nl) = (ch.hi_in.len(), ch.lo_in.len());
        let lows = nl.checked_pow(k as u32).ok_or(Error::BudgetExceeded { required: u128::MAX, budget: 0 })?;
        let highs = nh.checked_pow(k as u32).ok_or(Error::BudgetExceeded { required: u128::MAX, budget: 0 })?;

        // Every class member shares the low sequence, so the class minimum has
        // all-zero high inputs and classes order by their low sequence.
        let found: Vec<Option<Witness>> = (0..lows)
            .into_par_iter()
            .map(|li| -> Result<Option<Witness>> {
                let lo = digits(li, nl, k);
                let base = zip_inputs(&vec![0; k], &lo);
                if probabilistic {
                    let reference = self.low_output_dist(&base)?;
                    for hi_idx in 1..highs {
                        let other = zip_inputs(&digits(hi_idx, nh, k), &lo);
                        if !self.low_output_dist(&other)?.same(&reference) {
                            return Ok(Some(Witness { first: base, second: other }));
                        }
                    }
                } else {
                    let reference = low_of(&self.run_deterministic(self.initial(), &base)?.0);
                    for hi_idx in 1..highs {
                        let other = zip_inputs(&digits(hi_idx, nh, k), &lo);
                        if low_of(&self.run_deterministic(self.initial(), &other)?.0) != reference {
                            return Ok(Some(Witness { first: base, second: other }));
                        }
                    }
                }
                Ok(None)
            })
            .collect::<Result<_>>()?;
        Ok(found.into_iter().flatten().next())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::catalog::*;

    #[test]
    fn constant_is_noninterfering() {
        let m = constant_machine();
        for h in 1..=4 {
            assert_eq!(m.check_noninterference(CheckOptions::new(h)).unwrap(), NiVerdict::NoninterferingUpTo(h));
        }
    }

    #[test]
    fn echo_witness_differs_in_first_high_input() {
        let m = echo_machine();
        let v = m.check_noninterference(CheckOptions::new(2)).unwrap();
        let w = v.witness().expect("echo leaks");
        assert_eq!(w.first, vec![InputPair::new(0, 0)]);
        assert_eq!(w.second, vec![InputPair::new(1, 0)]);
        assert_ne!(m.low_output_dist(&w.first).unwrap(), m.low_output_dist(&w.second).unwrap());
    }

    #[test]
    fn low_echo_is_noninterfering() {
        let m = low_echo_machine();
        assert!(!m.check_noninterference(CheckOptions::new(2)).unwrap().is_interference());
        assert!(!m.check_noninterference(CheckOptions::new(2).deterministic()).unwrap().is_interference());
    }

    #[test]
    fn noisy_leak_needs_probabilistic_mode() {
        let m = noisy_leak_machine();
        assert!(m.check_noninterference(CheckOptions::new(1)).unwrap().is_interference());
        assert!(matches!(
            m.check_noninterference(CheckOptions::new(1).deterministic()),
            Err(Error::NotDeterministic(_))
        ));
    }

    #[test]
    fn budget_guard() {
        let m = echo_machine();
        assert_eq!(enumeration_size(4, 3), 4 + 16 + 64);
        let err = m.check_noninterference(CheckOptions::new(3).with_budget(10)).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { required: 84, budget: 10 }));
    }

    #[test]
    fn digits_are_lexicographic() {
        assert_eq!(digits(5, 2, 3), vec![1, 0, 1]);
        assert_eq!(digits(0, 3, 2), vec![0, 0]);
    }
}
