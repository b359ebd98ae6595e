use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};

use super::response::{AdRecord, ResponseVector};

/// A statistic evaluated on a fixed response vector under a reordering.
/// `order[k]` is the response placed in slot `k`.
pub trait StatKernel: Send + Sync {
    fn eval(&self, order: &[usize]) -> f64;
}

/// Scalar function of a response vector. Larger values should indicate a
/// difference between the experimental and control groups.
pub trait TestStatistic: Send + Sync {
    fn name(&self) -> &str;

    /// Whether the value is unchanged by reordering responses within each of
    /// two groups of sizes `n` and `m`.
    fn group_symmetric(&self, n: usize, m: usize) -> bool;

    /// Precomputes whatever evaluation needs, validating `y`.
    fn prepare(&self, y: &ResponseVector) -> Result<Box<dyn StatKernel>>;

    fn evaluate(&self, y: &ResponseVector) -> Result<f64> {
        let kernel = self.prepare(y)?;
        Ok(kernel.eval(&(0..y.len()).collect::<Vec<_>>()))
    }
}

fn lowered(keywords: &[String]) -> Result<Vec<String>> {
    let k: Vec<String> = keywords.iter().map(|k| k.trim().to_lowercase()).filter(|k| !k.is_empty()).collect();
    if k.is_empty() {
        return Err(Error::Contract("keyword set is empty".into()));
    }
    Ok(k)
}

/// `-cos(ln(1 + avg counts of group 1), ln(1 + avg counts of group 2))` over
/// per-URL reload counts.
#[derive(Clone, Copy, Debug, Default)]
pub struct SimStatistic;

pub fn stat_sim() -> SimStatistic {
    SimStatistic
}

struct SimKernel {
    n: usize,
    m: usize,
    // counts[unit][url] = reloads of the unit that showed the url
    counts: Vec<Vec<u32>>,
}

impl StatKernel for SimKernel {
    fn eval(&self, order: &[usize]) -> f64 {
        let width = self.counts.first().map_or(0, Vec::len);
        let mut a = vec![0u64; width];
        let mut b = vec![0u64; width];
        for (slot, &unit) in order.iter().enumerate() {
            let acc = if slot < self.n { &mut a } else { &mut b };
            for (x, &c) in acc.iter_mut().zip(&self.counts[unit]) {
                *x += c as u64;
            }
        }
        let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.iter().zip(&b) {
            let u = (x as f64 / self.n as f64).ln_1p();
            let v = (y as f64 / self.m as f64).ln_1p();
            dot += u * v;
            na += u * u;
            nb += v * v;
        }
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        -(dot / (na.sqrt() * nb.sqrt()))
    }
}

impl TestStatistic for SimStatistic {
    fn name(&self) -> &str {
        "sim"
    }

    fn group_symmetric(&self, _: usize, _: usize) -> bool {
        true
    }

    fn prepare(&self, y: &ResponseVector) -> Result<Box<dyn StatKernel>> {
        if y.n() == 0 || y.m() == 0 {
            return Err(Error::Contract("s_sim needs two non-empty groups".into()));
        }
        let mut urls = BTreeSet::new();
        let mut per_unit = Vec::with_capacity(y.len());
        for r in y.responses() {
            let mut seen: BTreeMap<&str, u32> = BTreeMap::new();
            for session in r.sessions()? {
                for reload in &session.reloads {
                    let distinct: BTreeSet<&str> = reload.iter().map(|ad| ad.url.as_str()).collect();
                    for url in distinct {
                        *seen.entry(url).or_default() += 1;
                        urls.insert(url);
                    }
                }
            }
            per_unit.push(seen);
        }
        let urls: Vec<&str> = urls.into_iter().collect();
        let counts = per_unit
            .iter()
            .map(|seen| urls.iter().map(|u| seen.get(u).copied().unwrap_or(0)).collect())
            .collect();
        Ok(Box::new(SimKernel { n: y.n(), m: y.m(), counts }))
    }
}

/// Keyword ads in the experimental group minus keyword ads in the control group.
#[derive(Clone, Debug)]
pub struct KwStatistic {
    keywords: Vec<String>,
}

pub fn stat_kw(keywords: &[String]) -> Result<KwStatistic> {
    Ok(KwStatistic { keywords: lowered(keywords)? })
}

impl KwStatistic {
    pub fn hits(&self, ads: impl IntoIterator<Item = impl std::borrow::Borrow<AdRecord>>) -> i64 {
        ads.into_iter().filter(|ad| ad.borrow().mentions_any(&self.keywords)).count() as i64
    }
}

/// `Σ_{slot < n} w[unit] − Σ_{slot ≥ n} w[unit]` for fixed per-unit weights.
struct SplitSumKernel {
    n: usize,
    weights: Vec<i64>,
}

impl StatKernel for SplitSumKernel {
    fn eval(&self, order: &[usize]) -> f64 {
        let mut diff = 0i64;
        for (slot, &unit) in order.iter().enumerate() {
            if slot < self.n {
                diff += self.weights[unit];
            } else {
                diff -= self.weights[unit];
            }
        }
        diff as f64
    }
}

impl TestStatistic for KwStatistic {
    fn name(&self) -> &str {
        "kw"
    }

    fn group_symmetric(&self, _: usize, _: usize) -> bool {
        true
    }

    fn prepare(&self, y: &ResponseVector) -> Result<Box<dyn StatKernel>> {
        let weights = y
            .responses()
            .iter()
            .map(|r| {
                r.sessions()?;
                Ok(self.hits(r.ads()))
            })
            .collect::<Result<_>>()?;
        Ok(Box::new(SplitSumKernel { n: y.n(), weights }))
    }
}

/// Decides whether an ad was served in a context relative to a treatment.
pub type ContextOracle = Arc<dyn Fn(&AdRecord, &str) -> bool + Send + Sync>;

/// The default oracle: the ad's recorded context equals the treatment label.
pub fn context_equals_treatment() -> ContextOracle {
    Arc::new(|ad: &AdRecord, treatment: &str| ad.context.as_deref() == Some(treatment))
}

/// Percentage of experimental-group sessions with a non-contextual keyword ad
/// minus the same percentage for the control group. Keywords are those of
/// the experimental treatment.
#[derive(Clone)]
pub struct PrcStatistic {
    keywords: BTreeMap<String, Vec<String>>,
    oracle: ContextOracle,
}

pub fn stat_prc(keywords_by_treatment: BTreeMap<String, Vec<String>>, oracle: Option<ContextOracle>) -> Result<PrcStatistic> {
    let keywords = keywords_by_treatment
        .into_iter()
        .map(|(t, k)| Ok((t, lowered(&k)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(PrcStatistic { keywords, oracle: oracle.unwrap_or_else(context_equals_treatment) })
}

struct PrcKernel {
    n: usize,
    // per unit: (sessions with a hit, sessions)
    units: Vec<(u64, u64)>,
}

impl StatKernel for PrcKernel {
    fn eval(&self, order: &[usize]) -> f64 {
        let (mut ha, mut na, mut hb, mut nb) = (0u64, 0u64, 0u64, 0u64);
        for (slot, &unit) in order.iter().enumerate() {
            let (h, s) = self.units[unit];
            if slot < self.n {
                ha += h;
                na += s;
            } else {
                hb += h;
                nb += s;
            }
        }
        // a range without sessions contributes 0%; prepare rejects vectors
        // where the observed grouping has one
        let pct = |h: u64, s: u64| if s == 0 { 0.0 } else { 100.0 * h as f64 / s as f64 };
        pct(ha, na) - pct(hb, nb)
    }
}

impl TestStatistic for PrcStatistic {
    fn name(&self) -> &str {
        "prc"
    }

    fn group_symmetric(&self, _: usize, _: usize) -> bool {
        true
    }

    fn prepare(&self, y: &ResponseVector) -> Result<Box<dyn StatKernel>> {
        let treatment = &y.labels.0;
        let kws = self
            .keywords
            .get(treatment)
            .ok_or_else(|| Error::Contract(format!("no keywords for treatment '{treatment}'")))?;
        let mut units = Vec::with_capacity(y.len());
        for r in y.responses() {
            let sessions = r.sessions()?;
            let hits = sessions
                .iter()
                .filter(|s| s.ads().any(|ad| ad.mentions_any(kws) && !(self.oracle)(ad, treatment)))
                .count() as u64;
            units.push((hits, sessions.len() as u64));
        }
        let first: u64 = units[..y.n()].iter().map(|u| u.1).sum();
        let second: u64 = units[y.n()..].iter().map(|u| u.1).sum();
        if first == 0 || second == 0 {
            return Err(Error::Contract("a group has no sessions".into()));
        }
        Ok(Box::new(PrcKernel { n: y.n(), units }))
    }
}

/// 1 when the response in the first slot contains the nonce, else 0.
#[derive(Clone, Debug)]
pub struct NonceStatistic {
    nonce: String,
}

pub fn stat_nonce(nonce: &str) -> Result<NonceStatistic> {
    let nonce = nonce.trim().to_lowercase();
    if nonce.is_empty() {
        return Err(Error::Contract("nonce is empty".into()));
    }
    Ok(NonceStatistic { nonce })
}

impl NonceStatistic {
    /// Per-slot flags: does the response mention the nonce?
    pub fn flags(&self, y: &ResponseVector) -> Result<Vec<bool>> {
        let kw = [self.nonce.clone()];
        y.responses()
            .iter()
            .map(|r| {
                r.sessions()?;
                Ok(r.ads().any(|ad| ad.mentions_any(&kw)))
            })
            .collect()
    }
}

struct FirstSlotKernel {
    flags: Vec<bool>,
}

impl StatKernel for FirstSlotKernel {
    fn eval(&self, order: &[usize]) -> f64 {
        if self.flags[order[0]] {
            1.0
        } else {
            0.0
        }
    }
}

impl TestStatistic for NonceStatistic {
    fn name(&self) -> &str {
        "nonce"
    }

    fn group_symmetric(&self, n: usize, _: usize) -> bool {
        n <= 1
    }

    fn prepare(&self, y: &ResponseVector) -> Result<Box<dyn StatKernel>> {
        if y.is_empty() {
            return Err(Error::Contract("empty response vector".into()));
        }
        Ok(Box::new(FirstSlotKernel { flags: self.flags(y)? }))
    }
}

/// Mean of the experimental group minus mean of the control group, for
/// scalar responses.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanDiffStatistic;

pub fn stat_mean_diff() -> MeanDiffStatistic {
    MeanDiffStatistic
}

struct MeanDiffKernel {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl StatKernel for MeanDiffKernel {
    fn eval(&self, order: &[usize]) -> f64 {
        let (mut a, mut b) = (0.0, 0.0);
        for (slot, &unit) in order.iter().enumerate() {
            if slot < self.n {
                a += self.values[unit];
            } else {
                b += self.values[unit];
            }
        }
        a / self.n as f64 - b / self.m as f64
    }
}

impl TestStatistic for MeanDiffStatistic {
    fn name(&self) -> &str {
        "mean-diff"
    }

    fn group_symmetric(&self, _: usize, _: usize) -> bool {
        true
    }

    fn prepare(&self, y: &ResponseVector) -> Result<Box<dyn StatKernel>> {
        if y.n() == 0 || y.m() == 0 {
            return Err(Error::Contract("mean difference needs two non-empty groups".into()));
        }
        let values = y.responses().iter().map(|r| r.scalar()).collect::<Result<_>>()?;
        Ok(Box::new(MeanDiffKernel { n: y.n(), m: y.m(), values }))
    }
}

/// A statistic that ignores the data.
#[derive(Clone, Copy, Debug)]
pub struct ConstantStatistic(pub f64);

struct ConstantKernel(f64);

impl StatKernel for ConstantKernel {
    fn eval(&self, _: &[usize]) -> f64 {
        self.0
    }
}

impl TestStatistic for ConstantStatistic {
    fn name(&self) -> &str {
        "constant"
    }

    fn group_symmetric(&self, _: usize, _: usize) -> bool {
        true
    }

    fn prepare(&self, _: &ResponseVector) -> Result<Box<dyn StatKernel>> {
        Ok(Box::new(ConstantKernel(self.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::response::{Response, Session};

    fn ad(url: &str) -> AdRecord {
        AdRecord::new(url, "")
    }

    fn unit(reloads: &[&[&str]]) -> Response {
        Response::from_reloads(reloads.iter().map(|r| r.iter().map(|u| ad(u)).collect()).collect())
    }

    #[test]
    fn sim_identical_and_disjoint() {
        let y = ResponseVector::new(vec![unit(&[&["a", "b"]]), unit(&[&["a", "b"]])], 1, 1).unwrap();
        assert!((stat_sim().evaluate(&y).unwrap() + 1.0).abs() < 1e-12);
        let y = ResponseVector::new(vec![unit(&[&["a"]]), unit(&[&["b"]])], 1, 1).unwrap();
        assert_eq!(stat_sim().evaluate(&y).unwrap(), 0.0);
        let y = ResponseVector::new(vec![unit(&[]), unit(&[&["b"]])], 1, 1).unwrap();
        assert_eq!(stat_sim().evaluate(&y).unwrap(), 0.0);
    }

    #[test]
    fn sim_hand_computed() {
        // unit 1 saw a on 3 reloads; unit 2 saw a once and b twice
        let y = ResponseVector::new(
            vec![unit(&[&["a"], &["a"], &["a"]]), unit(&[&["a"], &["b"], &["b"]])],
            1,
            1,
        )
        .unwrap();
        let (u, v) = ([4f64.ln(), 0.0], [2f64.ln(), 3f64.ln()]);
        let cos = (u[0] * v[0] + u[1] * v[1]) / ((u[0] * u[0]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt());
        assert!((stat_sim().evaluate(&y).unwrap() + cos).abs() < 1e-12);
    }

    #[test]
    fn sim_counts_reloads_not_impressions() {
        let y = ResponseVector::new(vec![unit(&[&["a", "a"]]), unit(&[&["a"]])], 1, 1).unwrap();
        assert!((stat_sim().evaluate(&y).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn kw_counts() {
        let s = stat_kw(&["car".into()]).unwrap();
        let many = |k: usize| Response::from_reloads(vec![(0..k).map(|_| AdRecord::new("x", "a car")).collect()]);
        let y = ResponseVector::new(vec![many(7), many(0), many(2), many(0)], 2, 2).unwrap();
        assert_eq!(s.evaluate(&y).unwrap(), 5.0);
        let none = ResponseVector::new(vec![many(0), many(0)], 1, 1).unwrap();
        assert_eq!(s.evaluate(&none).unwrap(), 0.0);
        assert!(stat_kw(&[]).is_err());
        assert!(stat_kw(&[" ".into()]).is_err());
    }

    fn sessions(hits: &[bool]) -> Response {
        Response::Ads(
            hits.iter()
                .map(|&h| Session { reloads: vec![vec![AdRecord::new("x", if h { "bmw" } else { "soap" })]] })
                .collect(),
        )
    }

    fn prc() -> PrcStatistic {
        stat_prc(BTreeMap::from([("cars".to_string(), vec!["bmw".to_string()])]), None).unwrap()
    }

    #[test]
    fn prc_percentages() {
        let y = ResponseVector::new(
            vec![sessions(&[true, true, false]), sessions(&[true, false]), sessions(&[true, false, false, false, false])],
            2,
            1,
        )
        .unwrap()
        .with_labels("cars", "none");
        assert_eq!(prc().evaluate(&y).unwrap(), 60.0 - 20.0);
        let all = ResponseVector::new(vec![sessions(&[true]), sessions(&[true])], 1, 1).unwrap().with_labels("cars", "none");
        assert_eq!(prc().evaluate(&all).unwrap(), 0.0);
    }

    #[test]
    fn prc_excludes_contextual_ads_and_needs_sessions() {
        let contextual = Response::Ads(vec![Session {
            reloads: vec![vec![AdRecord::new("x", "bmw").with_context("cars")]],
        }]);
        let y = ResponseVector::new(vec![contextual, sessions(&[false])], 1, 1).unwrap().with_labels("cars", "none");
        assert_eq!(prc().evaluate(&y).unwrap(), 0.0);
        let empty = ResponseVector::new(vec![Response::Ads(vec![]), sessions(&[true])], 1, 1)
            .unwrap()
            .with_labels("cars", "none");
        assert!(matches!(prc().prepare(&empty), Err(Error::Contract(_))));
        let unlabeled = ResponseVector::new(vec![sessions(&[true]), sessions(&[true])], 1, 1).unwrap();
        assert!(prc().prepare(&unlabeled).is_err());
    }

    #[test]
    fn nonce_first_slot() {
        let s = stat_nonce("zq93x").unwrap();
        let with = Response::from_reloads(vec![vec![AdRecord::new("x", "ZQ93X sale")]]);
        let without = Response::from_reloads(vec![vec![ad("y")]]);
        let y = ResponseVector::new(vec![with.clone(), without.clone()], 1, 1).unwrap();
        assert_eq!(s.evaluate(&y).unwrap(), 1.0);
        let y = ResponseVector::new(vec![without, with], 1, 1).unwrap();
        assert_eq!(s.evaluate(&y).unwrap(), 0.0);
        assert!(s.group_symmetric(1, 5));
        assert!(!s.group_symmetric(2, 5));
    }

    #[test]
    fn mean_diff_needs_scalars() {
        let y = ResponseVector::new(vec![Response::Scalar(3.0), Response::Scalar(1.0)], 1, 1).unwrap();
        assert_eq!(stat_mean_diff().evaluate(&y).unwrap(), 2.0);
        let bad = ResponseVector::new(vec![unit(&[]), unit(&[])], 1, 1).unwrap();
        assert!(stat_mean_diff().evaluate(&bad).is_err());
    }
}
