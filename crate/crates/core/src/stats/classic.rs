use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::prob::{Distribution, Rational};

use super::response::ResponseVector;
use super::statistic::{stat_kw, stat_nonce};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson χ² test of independence on `[[a, b], [c, d]]`, one degree of
/// freedom. `yates` subtracts the continuity correction.
pub fn chi2_2x2(table: [[u64; 2]; 2], yates: bool) -> Result<Chi2Result> {
    let [[a, b], [c, d]] = table.map(|r| r.map(|x| x as f64));
    let margins = [a + b, c + d, a + c, b + d];
    if margins.contains(&0.0) {
        return Err(Error::Contract(format!("contingency table {table:?} has a zero marginal")));
    }
    let n = a + b + c + d;
    let mut cross = (a * d - b * c).abs();
    if yates {
        cross = (cross - n / 2.0).max(0.0);
    }
    let statistic = n * cross * cross / margins.iter().product::<f64>();
    let dist = ChiSquared::new(1.0).expect("one degree of freedom");
    Ok(Chi2Result { statistic, p_value: dist.sf(statistic) })
}

/// Rows: experimental and control group. Columns: ads with and without a
/// keyword, pooled over units.
pub fn keyword_table(y: &ResponseVector, keywords: &[String]) -> Result<[[u64; 2]; 2]> {
    let kw = stat_kw(keywords)?;
    let mut table = [[0u64; 2]; 2];
    for (slot, r) in y.responses().iter().enumerate() {
        let row = usize::from(slot >= y.n());
        let total = r.ads().count() as u64;
        let hits = kw.hits(r.ads()) as u64;
        table[row][0] += hits;
        table[row][1] += total - hits;
    }
    Ok(table)
}

/// Benjamini–Hochberg step-up at false discovery rate `q`.
pub fn bh_fdr(p_values: &[f64], q: f64) -> Result<Vec<bool>> {
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(invalid(format!("p-value {p} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]).then(i.cmp(&j)));
    let cutoff = (1..=m).rev().find(|&k| p_values[idx[k - 1]] <= k as f64 * q / m as f64);
    let mut flags = vec![false; m];
    if let Some(k) = cutoff {
        for &i in &idx[..k] {
            flags[i] = true;
        }
    }
    Ok(flags)
}

/// Closed-form p-value of the nonce statistic: the share of responses that
/// contain the nonce. The observed first response must contain it.
pub fn nonce_p_closed(y: &ResponseVector, nonce: &str) -> Result<f64> {
    let flags = stat_nonce(nonce)?.flags(y)?;
    match flags.first() {
        None => Err(Error::Contract("empty response vector".into())),
        Some(false) => Err(Error::Contract("the first response does not contain the nonce".into())),
        Some(true) => Ok(flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64),
    }
}

/// Both sides of the equivalence between "some two conditionals differ" and
/// "some conditional differs from the marginal".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndependenceCheck {
    pub conditionals_differ: bool,
    pub differs_from_marginal: bool,
}

impl IndependenceCheck {
    pub fn holds(&self) -> bool {
        self.conditionals_differ == self.differs_from_marginal
    }
}

/// `conditions` are `(P(C = c), P(Y | C = c))` over mutually exclusive and
/// exhaustive conditions; the weights must sum to one.
pub fn independence_equals_equality<K: Ord + Clone>(
    conditions: &[(Rational, Distribution<K>)],
) -> Result<IndependenceCheck> {
    if conditions.is_empty() {
        return Err(invalid("need at least one condition"));
    }
    let total = conditions.iter().fold(Rational::from_integer(0.into()), |acc, (w, _)| acc + w);
    if total != Rational::from_integer(1.into()) || conditions.iter().any(|(w, _)| *w < Rational::from_integer(0.into())) {
        return Err(invalid("condition weights must be nonnegative and sum to 1"));
    }
    let marginal = Distribution::from_masses(
        conditions.iter().flat_map(|(w, d)| d.iter().map(move |(k, p)| (k.clone(), w * p))),
    );
    let first = &conditions[0].1;
    Ok(IndependenceCheck {
        conditionals_differ: conditions.iter().any(|(_, d)| d != first),
        differs_from_marginal: conditions.iter().any(|(_, d)| *d != marginal),
    })
}
