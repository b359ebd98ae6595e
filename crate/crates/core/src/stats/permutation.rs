use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_budget, Error, Result};

use super::response::ResponseVector;
use super::statistic::{StatKernel, TestStatistic};

/// Which comparisons count as "at least as extreme".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    /// `s(y) ≤ s(πy)`: large values are evidence.
    #[default]
    Leq,
    /// `s(y) ≥ s(πy)`: small values are evidence.
    Geq,
    /// `|s(y)| ≤ |s(πy)|`.
    TwoSided,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact when `|y|!` fits the budget, else partition when the statistic
    /// allows it, else Monte-Carlo.
    #[default]
    Auto,
    Exact,
    Partition,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodUsed {
    Exact,
    Partition,
    MonteCarlo,
}

pub const DEFAULT_EXACT_BUDGET: u128 = 10_000_000;
pub const DEFAULT_MC_SAMPLES: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PermutationOptions {
    pub tail: Tail,
    pub method: Method,
    /// Required for Monte-Carlo sampling.
    pub seed: Option<u64>,
    /// Largest number of orderings or partitions enumerated.
    pub budget: u128,
    pub mc_samples: u64,
}

impl Default for PermutationOptions {
    fn default() -> Self {
        PermutationOptions {
            tail: Tail::Leq,
            method: Method::Auto,
            seed: None,
            budget: DEFAULT_EXACT_BUDGET,
            mc_samples: DEFAULT_MC_SAMPLES,
        }
    }
}

impl PermutationOptions {
    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn samples(mut self, n: u64) -> Self {
        self.mc_samples = n;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub p_value: f64,
    pub method: MethodUsed,
    pub observed: f64,
    /// Orderings that were at least as extreme as the observed one.
    pub successes: u128,
    pub comparisons: u128,
    pub mc_stderr: Option<f64>,
}

impl PermutationResult {
    fn new(method: MethodUsed, observed: f64, successes: u128, comparisons: u128) -> Self {
        let p = successes as f64 / comparisons as f64;
        let mc_stderr = (method == MethodUsed::MonteCarlo).then(|| (p * (1.0 - p) / comparisons as f64).sqrt());
        PermutationResult { p_value: p, method, observed, successes, comparisons, mc_stderr }
    }
}

pub fn factorial(n: usize) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

struct Comparator {
    tail: Tail,
    observed: f64,
    tol: f64,
}

impl Comparator {
    fn new(tail: Tail, observed: f64) -> Self {
        Comparator { tail, observed, tol: 1e-12 * observed.abs().max(1.0) }
    }

    fn extreme(&self, value: f64) -> bool {
        match self.tail {
            Tail::Leq => self.observed <= value + self.tol,
            Tail::Geq => self.observed + self.tol >= value,
            Tail::TwoSided => self.observed.abs() <= value.abs() + self.tol,
        }
    }
}

/// Permutation test `pt(s, y) = |{π : s(y) ≤ s(πy)}| / |y|!` (for the
/// default tail), computed exactly, by partitions, or by sampling.
pub fn permutation_test(stat: &dyn TestStatistic, y: &ResponseVector, opts: &PermutationOptions) -> Result<PermutationResult> {
    let len = y.len();
    if len < 2 {
        return Err(Error::Contract("permutation test needs at least two responses".into()));
    }
    let kernel = stat.prepare(y)?;
    let identity: Vec<usize> = (0..len).collect();
    let observed = kernel.eval(&identity);
    let cmp = Comparator::new(opts.tail, observed);
    let symmetric = stat.group_symmetric(y.n(), y.m());
    let perms = factorial(len).unwrap_or(u128::MAX);
    let parts = binomial(len, y.n()).unwrap_or(u128::MAX);

    let method = match opts.method {
        Method::Auto if perms <= opts.budget => MethodUsed::Exact,
        Method::Auto if symmetric && parts <= opts.budget => MethodUsed::Partition,
        Method::Auto => MethodUsed::MonteCarlo,
        Method::Exact => MethodUsed::Exact,
        Method::Partition => MethodUsed::Partition,
        Method::MonteCarlo => MethodUsed::MonteCarlo,
    };
    match method {
        MethodUsed::Exact => {
            check_budget(perms, opts.budget)?;
            let hits = exact_count(kernel.as_ref(), &cmp, len);
            Ok(PermutationResult::new(method, observed, hits, perms))
        }
        MethodUsed::Partition => {
            if !symmetric {
                return Err(Error::Contract(format!(
                    "partition method needs a statistic symmetric within groups; '{}' is not",
                    stat.name()
                )));
            }
            check_budget(parts, opts.budget)?;
            let hits = partition_count(kernel.as_ref(), &cmp, len, y.n());
            Ok(PermutationResult::new(method, observed, hits, parts))
        }
        MethodUsed::MonteCarlo => {
            let seed = opts
                .seed
                .ok_or_else(|| Error::Contract("Monte-Carlo permutation test needs a seed".into()))?;
            if opts.mc_samples == 0 {
                return Err(Error::Contract("Monte-Carlo sample count must be positive".into()));
            }
            let hits = monte_carlo_count(kernel.as_ref(), &cmp, len, opts.mc_samples, seed);
            Ok(PermutationResult::new(method, observed, hits, opts.mc_samples as u128))
        }
    }
}

/// Counts extreme orderings over all `len!` permutations, split by the
/// response placed in the first slot.
fn exact_count(kernel: &dyn StatKernel, cmp: &Comparator, len: usize) -> u128 {
    (0..len)
        .into_par_iter()
        .map(|first| {
            let mut rest: Vec<usize> = (0..len).filter(|&i| i != first).collect();
            let mut order = vec![first; len];
            let mut hits: u128 = 0;
            heap_permutations(&mut rest, |perm| {
                order[1..].copy_from_slice(perm);
                if cmp.extreme(kernel.eval(&order)) {
                    hits += 1;
                }
            });
            hits
        })
        .sum()
}

/// Heap's algorithm, iterative form. Visits every permutation of `items` once.
fn heap_permutations(items: &mut [usize], mut visit: impl FnMut(&[usize])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Counts extreme partitions over all `C(len, n)` choices of the
/// experimental group, each placed in increasing index order.
fn partition_count(kernel: &dyn StatKernel, cmp: &Comparator, len: usize, n: usize) -> u128 {
    let mut chosen: Vec<usize> = (0..n).collect();
    let mut order = vec![0usize; len];
    let mut hits: u128 = 0;
    loop {
        let mut mark = vec![false; len];
        for (slot, &c) in chosen.iter().enumerate() {
            order[slot] = c;
            mark[c] = true;
        }
        let mut slot = n;
        for (i, used) in mark.iter().enumerate() {
            if !used {
                order[slot] = i;
                slot += 1;
            }
        }
        if cmp.extreme(kernel.eval(&order)) {
            hits += 1;
        }
        // next combination in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return hits;
            }
            i -= 1;
            if chosen[i] < len - n + i {
                chosen[i] += 1;
                for j in i + 1..n {
                    chosen[j] = chosen[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Identity plus `samples - 1` uniform random permutations.
fn monte_carlo_count(kernel: &dyn StatKernel, cmp: &Comparator, len: usize, samples: u64, seed: u64) -> u128 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..len).collect();
    let mut hits: u128 = u128::from(cmp.extreme(kernel.eval(&order)));
    for _ in 1..samples {
        order.shuffle(&mut rng);
        if cmp.extreme(kernel.eval(&order)) {
            hits += 1;
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::response::Response;
    use crate::stats::statistic::{stat_mean_diff, ConstantStatistic};

    fn scalars(values: &[f64], n: usize) -> ResponseVector {
        ResponseVector::new(values.iter().map(|&v| Response::Scalar(v)).collect(), n, values.len() - n).unwrap()
    }

    #[test]
    fn counting_helpers() {
        assert_eq!(factorial(10), Some(3_628_800));
        assert_eq!(binomial(10, 5), Some(252));
        assert_eq!(binomial(4, 0), Some(1));
        assert_eq!(factorial(40), None);
    }

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut items = vec![0, 1, 2, 3];
        let mut seen = std::collections::BTreeSet::new();
        heap_permutations(&mut items, |p| {
            seen.insert(p.to_vec());
        });
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn constant_statistic_gives_one() {
        let y = scalars(&[1.0, 2.0, 3.0, 4.0], 2);
        for method in [Method::Exact, Method::Partition] {
            let r = permutation_test(&ConstantStatistic(3.0), &y, &PermutationOptions::default().method(method)).unwrap();
            assert_eq!(r.p_value, 1.0);
        }
    }

    #[test]
    fn exact_and_partition_agree_on_mean_diff() {
        let y = scalars(&[5.0, 4.0, 3.0, 1.0, 2.0, 0.5], 3);
        let e = permutation_test(&stat_mean_diff(), &y, &PermutationOptions::default().method(Method::Exact)).unwrap();
        let p = permutation_test(&stat_mean_diff(), &y, &PermutationOptions::default().method(Method::Partition)).unwrap();
        assert_eq!(e.comparisons, 720);
        assert_eq!(p.comparisons, 20);
        assert_eq!(e.successes * p.comparisons, p.successes * e.comparisons);
        // observed grouping is the unique maximum
        assert_eq!(p.successes, 1);
    }

    #[test]
    fn tails() {
        let y = scalars(&[0.0, 0.0, 5.0, 5.0], 2);
        let opts = PermutationOptions::default().method(Method::Partition);
        let leq = permutation_test(&stat_mean_diff(), &y, &opts).unwrap();
        let geq = permutation_test(&stat_mean_diff(), &y, &opts.tail(Tail::Geq)).unwrap();
        let two = permutation_test(&stat_mean_diff(), &y, &opts.tail(Tail::TwoSided)).unwrap();
        assert_eq!(leq.successes, 6);
        assert_eq!(geq.successes, 1);
        assert_eq!(two.successes, 2);
    }

    #[test]
    fn contracts() {
        let one = scalars(&[1.0], 1);
        assert!(permutation_test(&stat_mean_diff(), &one, &PermutationOptions::default()).is_err());
        let y = scalars(&[1.0, 2.0, 3.0], 1);
        let mc = PermutationOptions::default().method(Method::MonteCarlo);
        assert!(matches!(permutation_test(&stat_mean_diff(), &y, &mc), Err(Error::Contract(_))));
        let tight = PermutationOptions { budget: 5, ..PermutationOptions::default() }.method(Method::Exact);
        assert!(matches!(permutation_test(&stat_mean_diff(), &y, &tight), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let y = scalars(&[3.0, 2.5, 1.0, 0.0, 0.2, 0.1], 2);
        let opts = PermutationOptions::default().method(Method::MonteCarlo).seed(7).samples(2000);
        let a = permutation_test(&stat_mean_diff(), &y, &opts).unwrap();
        let b = permutation_test(&stat_mean_diff(), &y, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.mc_stderr.is_some());
        assert!(a.successes >= 1);
    }
}
