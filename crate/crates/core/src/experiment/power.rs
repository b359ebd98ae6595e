use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::{
    chi2_2x2, keyword_table, permutation_test, stat_kw, stat_prc, stat_sim, PValueTable, PermutationOptions,
    ResponseVector, TestStatistic,
};

use super::config::{ExperimentConfig, TreatmentSpec};
use super::run::{run_experiment, seeded};
use super::tracker::TrackerSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatChoice {
    Sim,
    Kw,
    Prc,
    Chi2,
}

impl StatChoice {
    pub const ALL: [StatChoice; 4] = [StatChoice::Sim, StatChoice::Kw, StatChoice::Prc, StatChoice::Chi2];

    pub fn name(self) -> &'static str {
        match self {
            StatChoice::Sim => "sim",
            StatChoice::Kw => "kw",
            StatChoice::Prc => "prc",
            StatChoice::Chi2 => "chi2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid(format!("unknown statistic '{s}'")))
    }

    pub fn is_permutation(self) -> bool {
        self != StatChoice::Chi2
    }
}

/// p-value of one statistic on one response vector. Permutation statistics
/// use the configured method; χ² uses the pooled keyword table.
pub fn p_value(choice: StatChoice, config: &ExperimentConfig, y: &ResponseVector, seed: u64) -> Result<f64> {
    let opts = PermutationOptions { method: config.method, mc_samples: config.mc_samples, ..Default::default() }.seed(seed);
    let permuted = |s: &dyn TestStatistic| permutation_test(s, y, &opts).map(|r| r.p_value);
    match choice {
        StatChoice::Sim => permuted(&stat_sim()),
        StatChoice::Kw => permuted(&stat_kw(&config.keywords)?),
        StatChoice::Prc => {
            let keywords = BTreeMap::from([(y.labels.0.clone(), config.keywords.clone())]);
            permuted(&stat_prc(keywords, None)?)
        }
        StatChoice::Chi2 => Ok(chi2_2x2(keyword_table(y, &config.keywords)?, false)?.p_value),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub table: PValueTable,
    /// Per statistic, how many runs gave p < 0.05.
    pub significant: Vec<(String, usize)>,
    /// `(data set, message)` for every run or statistic that produced no p-value.
    pub failures: Vec<(String, String)>,
}

impl PowerReport {
    pub fn significant_for(&self, choice: StatChoice) -> Option<usize> {
        self.significant.iter().find(|(n, _)| n == choice.name()).map(|x| x.1)
    }
}

/// Seed of run `r`, derived from the configuration seed.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    seeded(seed, run as u64 + 1).next_u64()
}

/// Repeats the experiment `runs` times with derived seeds and tests each run
/// with each statistic. Runs execute in parallel; the result does not depend
/// on the thread count.
pub fn power_eval(config: &ExperimentConfig, tracker: &TrackerSpec, stats: &[StatChoice], runs: usize) -> Result<PowerReport> {
    if runs < 2 {
        return Err(invalid("power evaluation needs at least two runs"));
    }
    if stats.is_empty() {
        return Err(invalid("no statistics requested"));
    }
    config.validate()?;
    tracker.validate()?;
    let rows: Vec<(Vec<Option<f64>>, Vec<String>)> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let seed = run_seed(config.seed, r);
            let y = run_experiment(config, tracker, seed).and_then(|run| run.responses());
            match y {
                Err(e) => (vec![None; stats.len()], vec![e.to_string()]),
                Ok(y) => {
                    let mut notes = Vec::new();
                    let values = stats
                        .iter()
                        .map(|&s| match p_value(s, config, &y, seed) {
                            Ok(p) => Some(p),
                            Err(e) => {
                                notes.push(format!("{}: {e}", s.name()));
                                None
                            }
                        })
                        .collect();
                    (values, notes)
                }
            }
        })
        .collect();
    let mut table = PValueTable::new(stats.iter().map(|s| s.name().to_string()).collect());
    let mut failures = Vec::new();
    for (r, (values, notes)) in rows.into_iter().enumerate() {
        let name = (r + 1).to_string();
        failures.extend(notes.into_iter().map(|n| (name.clone(), n)));
        table.push(name, values)?;
    }
    let significant = stats.iter().map(|s| s.name().to_string()).zip(table.count_below(0.05)).collect();
    Ok(PowerReport { table, significant, failures })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: usize,
    pub parallel: bool,
    pub ads: usize,
    pub unique: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub rounds: usize,
    pub ads_isolated: usize,
    pub ads_parallel: usize,
    pub unique_isolated: usize,
    pub unique_parallel: usize,
    pub per_round: Vec<RoundRow>,
}

impl DiversityReport {
    pub fn header() -> &'static str {
        "rounds  unique in isolation  unique in parallel"
    }

    pub fn row(&self) -> String {
        format!("{:>6}  {:>19}  {:>18}", self.rounds, self.unique_isolated, self.unique_parallel)
    }
}

/// Rounds of a fresh primary unit that manifests the experimental interests
/// and then collects ads. Half the rounds, picked at random, add
/// `companions_trained` units doing the same and `companions_idle` idle
/// units, all collecting at the same time.
pub fn cross_unit_probe(
    config: &ExperimentConfig,
    tracker: &TrackerSpec,
    rounds: usize,
    companions_trained: usize,
    companions_idle: usize,
) -> Result<DiversityReport> {
    if rounds < 2 {
        return Err(invalid("the probe needs at least two rounds"));
    }
    let mut rng = seeded(config.seed, 0);
    let parallel: BTreeSet<usize> = sample(&mut rng, rounds, rounds / 2).into_iter().collect();
    let mut per_round = Vec::with_capacity(rounds);
    let mut seen = [BTreeSet::new(), BTreeSet::new()];
    let mut totals = [0usize; 2];
    for round in 0..rounds {
        let is_parallel = parallel.contains(&round);
        let round_config = ExperimentConfig {
            n: 1 + if is_parallel { companions_trained } else { 0 },
            m: if is_parallel { companions_idle } else { 0 },
            sample_size: None,
            control: TreatmentSpec::idle(config.control.label.clone()),
            ..config.clone()
        };
        let run = run_experiment(&round_config, tracker, run_seed(config.seed, round))?;
        if !run.is_completed() {
            return Err(Error::TrackerFault(format!("probe round {round} failed")));
        }
        let primary = &run.logs[run.assignment.units_by_index()[0]];
        let urls: BTreeSet<String> = primary.response().ads().map(|a| a.url.clone()).collect();
        let side = usize::from(is_parallel);
        totals[side] += primary.ad_count();
        per_round.push(RoundRow { round, parallel: is_parallel, ads: primary.ad_count(), unique: urls.len() });
        seen[side].extend(urls);
    }
    Ok(DiversityReport {
        rounds,
        ads_isolated: totals[0],
        ads_parallel: totals[1],
        unique_isolated: seen[0].len(),
        unique_parallel: seen[1].len(),
        per_round,
    })
}
