use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{response_rows, write_rows, AdRecord, Response, ResponseVector};

use super::config::{ExperimentConfig, TreatmentSpec};
use super::tracker::{Tracker, TrackerSpec};

/// `index_of[k]` is the treatment-vector slot of unit `k`; slots `0..n` are
/// experimental.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub n: usize,
    pub index_of: Vec<usize>,
}

impl Assignment {
    pub fn is_experimental(&self, unit: usize) -> bool {
        self.index_of[unit] < self.n
    }

    /// Units in slot order.
    pub fn units_by_index(&self) -> Vec<usize> {
        let mut units = vec![0; self.index_of.len()];
        for (unit, &i) in self.index_of.iter().enumerate() {
            units[i] = unit;
        }
        units
    }
}

/// Uniformly random bijection from units to slots.
pub fn assign_treatments<R: Rng>(config: &ExperimentConfig, rng: &mut R) -> Assignment {
    let mut index_of: Vec<usize> = (0..config.sample_size()).collect();
    index_of.shuffle(rng);
    Assignment { n: config.n, index_of }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Visit(Vec<String>),
    Idle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReloadLog {
    pub tick: u64,
    /// `None` when the page timed out.
    pub ads: Option<Vec<AdRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitLog {
    pub unit: usize,
    pub index: usize,
    pub treatment: String,
    pub actions: Vec<(u64, Action)>,
    pub reloads: Vec<ReloadLog>,
}

impl UnitLog {
    pub fn ticks(&self) -> usize {
        self.actions.len() + self.reloads.len()
    }

    /// One session holding the reloads that loaded.
    pub fn response(&self) -> Response {
        Response::from_reloads(self.reloads.iter().filter_map(|r| r.ads.clone()).collect())
    }

    pub fn ad_count(&self) -> usize {
        self.reloads.iter().filter_map(|r| r.ads.as_ref()).map(Vec::len).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Failed { tick: u64, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub seed: u64,
    pub labels: (String, String),
    pub assignment: Assignment,
    /// Indexed by unit.
    pub logs: Vec<UnitLog>,
    pub status: RunStatus,
}

impl ExperimentRun {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Responses in assignment-index order. A failed run has none.
    pub fn responses(&self) -> Result<ResponseVector> {
        if let RunStatus::Failed { tick, reason } = &self.status {
            return Err(Error::TrackerFault(format!("run failed at tick {tick}: {reason}")));
        }
        let units = self.assignment.units_by_index();
        let responses = units.iter().map(|&u| self.logs[u].response()).collect();
        ResponseVector::new(responses, self.assignment.n, units.len() - self.assignment.n)?
            .with_labels(self.labels.0.clone(), self.labels.1.clone())
            .with_units(units)
    }

    /// Writes the logged responses (partial ones included) as delimited rows.
    pub fn write_csv<W: Write>(&self, writer: W, run: usize) -> Result<()> {
        let mut rows = Vec::new();
        for &u in &self.assignment.units_by_index() {
            let log = &self.logs[u];
            rows.extend(response_rows(run, u, log.index, &log.treatment, &log.response())?);
        }
        write_rows(writer, &rows)
    }
}

pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs one experiment on a fresh tracker. Every unit sees the same ticks:
/// `training_ticks` in which experimental units visit their interests while
/// controls idle, then `reloads_per_unit` collection ticks. Within a tick
/// units act in a seeded random order.
pub fn run_experiment(config: &ExperimentConfig, tracker: &TrackerSpec, seed: u64) -> Result<ExperimentRun> {
    config.validate()?;
    tracker.validate()?;
    let mut rng = seeded(seed, 0);
    let assignment = assign_treatments(config, &mut rng);
    let units = config.sample_size();
    let mut state = Tracker::new(tracker, units, &mut rng)?;
    let treatment = |u: usize| -> &TreatmentSpec {
        if assignment.is_experimental(u) {
            &config.experimental
        } else {
            &config.control
        }
    };
    let mut logs: Vec<UnitLog> = (0..units)
        .map(|u| UnitLog {
            unit: u,
            index: assignment.index_of[u],
            treatment: treatment(u).label.clone(),
            actions: Vec::new(),
            reloads: Vec::new(),
        })
        .collect();
    let mut order: Vec<usize> = (0..units).collect();
    let mut status = RunStatus::Completed;
    let total_ticks = (config.training_ticks + config.reloads_per_unit) as u64;
    'clock: for tick in 0..total_ticks {
        order.shuffle(&mut rng);
        for &u in &order {
            state.tick(u, &mut rng);
            if tick < config.training_ticks as u64 {
                let interests = &treatment(u).interests;
                if interests.is_empty() {
                    logs[u].actions.push((tick, Action::Idle));
                } else {
                    state.visit(u, interests);
                    logs[u].actions.push((tick, Action::Visit(interests.clone())));
                }
            } else {
                match state.serve(u, config.ads_per_reload, &mut rng) {
                    Ok(ads) => logs[u].reloads.push(ReloadLog { tick, ads }),
                    Err(e) => {
                        status = RunStatus::Failed { tick, reason: e.to_string() };
                        break 'clock;
                    }
                }
            }
        }
    }
    Ok(ExperimentRun {
        seed,
        labels: (config.experimental.label.clone(), config.control.label.clone()),
        assignment,
        logs,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::tracker::Targeting;

    #[test]
    fn empty_assignment() {
        let mut c = ExperimentConfig::demo(0);
        c.n = 0;
        c.m = 0;
        let a = assign_treatments(&c, &mut seeded(0, 0));
        assert!(a.index_of.is_empty());
    }

    #[test]
    fn assignment_frequency_is_one_half() {
        // each unit experimental with probability 1/2; 3 sigma over 10^4 draws
        let c = ExperimentConfig::demo(0);
        let mut rng = seeded(99, 0);
        let draws = 10_000;
        let mut hits = vec![0usize; 10];
        for _ in 0..draws {
            let a = assign_treatments(&c, &mut rng);
            for (u, h) in hits.iter_mut().enumerate() {
                *h += usize::from(a.is_experimental(u));
            }
        }
        let sigma = (draws as f64 * 0.25).sqrt();
        for h in hits {
            assert!((h as f64 - draws as f64 / 2.0).abs() <= 3.0 * sigma, "{h}");
        }
    }

    #[test]
    fn lockstep_and_ordering() {
        let c = ExperimentConfig::demo(5);
        let t = TrackerSpec::demo(Targeting::on(4.0));
        let run = run_experiment(&c, &t, 5).unwrap();
        assert!(run.is_completed());
        assert!(run.logs.iter().all(|l| l.ticks() == c.training_ticks + c.reloads_per_unit));
        assert!(run.logs.iter().all(|l| l.reloads.windows(2).all(|w| w[0].tick < w[1].tick)));
        let y = run.responses().unwrap();
        for (slot, &u) in y.units.iter().enumerate() {
            assert_eq!(run.logs[u].index, slot);
        }
        assert_eq!(run, run_experiment(&c, &t, 5).unwrap());
    }

    #[test]
    fn fault_keeps_partial_logs() {
        let c = ExperimentConfig::demo(5);
        let t = TrackerSpec { rate_limit: Some(25), ..TrackerSpec::demo(Targeting::off()) };
        let run = run_experiment(&c, &t, 1).unwrap();
        assert!(matches!(run.status, RunStatus::Failed { .. }));
        assert_eq!(run.logs.iter().map(|l| l.reloads.len()).sum::<usize>(), 25);
        assert!(matches!(run.responses(), Err(Error::TrackerFault(_))));
        let mut buf = Vec::new();
        run.write_csv(&mut buf, 0).unwrap();
        assert!(!buf.is_empty());
    }
}
