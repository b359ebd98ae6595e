//! A simulated ad server.
//!
//! Each unit has a profile: the pool it is currently served from and the
//! interests it has shown. Serving a reload draws `slots` distinct ads:
//!
//! * weights start from the current pool; with probability `churn` a slot is
//!   drawn from the whole inventory instead;
//! * with targeting enabled, ads tagged with an interest the unit has shown
//!   at least `min_visits` times get their weight multiplied by `boost`;
//! * ads tagged with `page_topic` are contextual and record it as context;
//! * `coupling` multiplies each weight by `1 + coupling * c`, where `c` counts
//!   impressions of the ad across all units so far in the run;
//! * a reload times out with probability `timeout_prob`, and a unit fails
//!   outright (no ads at all) with probability `failure_prob`.
//!
//! At every tick each profile switches to a fresh pool with probability
//! `switch_prob`. Pools are drawn by prior; with targeting enabled a pool's
//! prior is multiplied by `1 + pool_affinity * t`, `t` being the number of its
//! ads tagged with the unit's interests. More than `rate_limit` requests in a run fault the tracker.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::AdRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdSpec {
    pub url: String,
    pub text: String,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default)]
    pub tags: Vec<String>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub name: String,
    /// Relative chance of being assigned this pool.
    #[serde(default = "one")]
    pub prior: f64,
    #[serde(rename = "ad")]
    pub ads: Vec<AdSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targeting {
    pub enabled: bool,
    #[serde(default = "default_boost")]
    pub boost: f64,
    #[serde(default = "one_u32")]
    pub min_visits: u32,
    #[serde(default)]
    pub pool_affinity: f64,
}

fn default_boost() -> f64 {
    4.0
}
fn one_u32() -> u32 {
    1
}

impl Targeting {
    pub fn off() -> Self {
        Targeting { enabled: false, boost: default_boost(), min_visits: 1, pool_affinity: 0.0 }
    }

    pub fn on(boost: f64) -> Self {
        Targeting { enabled: true, boost, min_visits: 1, pool_affinity: 0.0 }
    }

    pub fn with_pool_affinity(mut self, affinity: f64) -> Self {
        self.pool_affinity = affinity;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerSpec {
    #[serde(default)]
    pub switch_prob: f64,
    #[serde(default)]
    pub churn: f64,
    #[serde(default)]
    pub coupling: f64,
    #[serde(default)]
    pub timeout_prob: f64,
    #[serde(default)]
    pub failure_prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_limit: Option<u64>,
    /// Topic of the page ads are collected from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_topic: Option<String>,
    pub targeting: Targeting,
    #[serde(rename = "pool")]
    pub pools: Vec<PoolSpec>,
}

impl TrackerSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("switch_prob", self.switch_prob),
            ("churn", self.churn),
            ("timeout_prob", self.timeout_prob),
            ("failure_prob", self.failure_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} = {p} is not a probability")));
            }
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(invalid("coupling must be a nonnegative number"));
        }
        if !(self.targeting.boost >= 0.0 && self.targeting.boost.is_finite()) {
            return Err(invalid("targeting boost must be a nonnegative number"));
        }
        if !(self.targeting.pool_affinity >= 0.0 && self.targeting.pool_affinity.is_finite()) {
            return Err(invalid("pool affinity must be a nonnegative number"));
        }
        if self.pools.is_empty() {
            return Err(invalid("tracker needs at least one pool"));
        }
        for pool in &self.pools {
            if !(pool.prior >= 0.0 && pool.prior.is_finite()) {
                return Err(invalid(format!("pool '{}' has a bad prior", pool.name)));
            }
            if let Some(ad) = pool.ads.iter().find(|a| !(a.weight >= 0.0 && a.weight.is_finite())) {
                return Err(invalid(format!("ad '{}' has a bad weight", ad.url)));
            }
            if !pool.ads.iter().any(|a| a.weight > 0.0) {
                return Err(invalid(format!("pool '{}' has no ad with positive weight", pool.name)));
            }
        }
        if !self.pools.iter().any(|p| p.prior > 0.0) {
            return Err(invalid("some pool needs a positive prior"));
        }
        Ok(())
    }

    pub fn with_targeting(mut self, targeting: Targeting) -> Self {
        self.targeting = targeting;
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let t: TrackerSpec = toml::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Three pools of everyday ads, each with ten common ads, two car ads and
    /// a tail of twenty rarely shown offers, plus a less likely autos pool.
    pub fn demo(targeting: Targeting) -> Self {
        const TAIL: [&str; 10] = ["Garden", "Kitchen", "Laptop", "Sneaker", "Watch", "Phone", "Lamp", "Bike", "Tent", "Guitar"];
        let ad = |url: &str, text: &str, weight: f64, tags: &[&str]| AdSpec {
            url: url.into(),
            text: text.into(),
            weight,
            tags: tags.iter().map(|t| t.to_string()).collect(),
        };
        let pool = |name: &str, items: &[(&str, &str)], cars: &[(&str, &str)]| PoolSpec {
            name: name.into(),
            prior: 1.0,
            ads: items
                .iter()
                .map(|(u, t)| ad(u, t, 1.0, &[]))
                .chain(cars.iter().map(|(u, t)| ad(u, t, 1.0, &["cars"])))
                .chain((0..20).map(|i| {
                    let url = format!("{name}-offer{i}.example");
                    ad(&url, &format!("{} deals, offer {i}", TAIL[i % TAIL.len()]), 0.15, &[])
                }))
                .collect(),
        };
        TrackerSpec {
            switch_prob: 0.15,
            churn: 0.1,
            coupling: 0.5,
            timeout_prob: 0.02,
            failure_prob: 0.0,
            rate_limit: None,
            page_topic: None,
            targeting,
            pools: vec![
                pool(
                    "news",
                    &[
                        ("dailybrief.example", "Morning headlines in your inbox"),
                        ("weatherwise.example", "Ten day forecasts"),
                        ("stockpulse.example", "Track markets in real time"),
                        ("podhub.example", "Podcasts worth your commute"),
                        ("readmore.example", "Unlimited articles for a dollar"),
                        ("civicvoice.example", "Register to vote today"),
                        ("printshop.example", "Business cards from $9"),
                        ("langlearn.example", "Speak Spanish in 3 weeks"),
                        ("cloudbox.example", "Back up your photos"),
                        ("mealkit.example", "Dinner delivered weekly"),
                    ],
                    &[("autonews.example", "New car reviews and prices"), ("bmwdeal.example", "BMW lease offers")],
                ),
                pool(
                    "retail",
                    &[
                        ("shoeshack.example", "Running shoes 40% off"),
                        ("homegoods.example", "Sofas and rugs"),
                        ("gadgetzone.example", "Headphones on sale"),
                        ("bookbarn.example", "Bestsellers under $10"),
                        ("petpal.example", "Premium dog food"),
                        ("gardenpro.example", "Seeds and tools"),
                        ("kidsplay.example", "Toys for every age"),
                        ("fitgear.example", "Yoga mats and weights"),
                        ("skinglow.example", "Natural skincare"),
                        ("coffeeclub.example", "Fresh beans monthly"),
                    ],
                    &[("audicenter.example", "Audi certified pre-owned"), ("tireking.example", "Vehicle tires installed free")],
                ),
                pool(
                    "travel",
                    &[
                        ("cheapflights.example", "Fares from $49"),
                        ("beachstay.example", "Island resorts"),
                        ("railpass.example", "See Europe by train"),
                        ("hostelhop.example", "Beds from $12"),
                        ("cruiseline.example", "Seven night cruises"),
                        ("visahelp.example", "Passport renewals"),
                        ("luggage.example", "Carry-on bags"),
                        ("travelins.example", "Trip insurance"),
                        ("campsite.example", "Book a campsite"),
                        ("tourguide.example", "City walking tours"),
                    ],
                    &[("limoride.example", "Limo service to the airport"), ("rentawheel.example", "Automobile rentals near you")],
                ),
                PoolSpec {
                    prior: 0.1,
                    ..pool(
                        "autos",
                        &[
                            ("insurequote.example", "Compare insurance quotes"),
                            ("fuelsaver.example", "Fuel rewards card"),
                            ("roadtrip.example", "Plan your road trip"),
                            ("parkeasy.example", "Reserve parking downtown"),
                        ],
                        &[
                            ("dealerfind.example", "Local car dealers"),
                            ("cadillacnew.example", "Cadillac prices and incentives"),
                            ("usedcars.example", "Certified used cars"),
                            ("evcharge.example", "Electric vehicle chargers"),
                            ("autoloan.example", "Automobile loans from 3.9%"),
                            ("carwash.example", "Unlimited car wash plans"),
                        ],
                    )
                },
            ],
        }
    }

    fn inventory(&self) -> Vec<&AdSpec> {
        self.pools.iter().flat_map(|p| p.ads.iter()).collect()
    }
}

#[derive(Clone, Debug, Default)]
struct Profile {
    pool: usize,
    interests: BTreeMap<String, u32>,
    failed: bool,
}

/// Mutable tracker state for one run.
pub struct Tracker<'a> {
    spec: &'a TrackerSpec,
    profiles: Vec<Profile>,
    impressions: BTreeMap<String, u64>,
    requests: u64,
    pool_prior: WeightedIndex<f64>,
}

impl<'a> Tracker<'a> {
    /// Creates profiles for `units` units, each on a pool drawn from the priors.
    pub fn new<R: Rng>(spec: &'a TrackerSpec, units: usize, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let pool_prior = WeightedIndex::new(spec.pools.iter().map(|p| p.prior)).map_err(|e| invalid(e.to_string()))?;
        let profiles = (0..units)
            .map(|_| Profile {
                pool: pool_prior.sample(rng),
                interests: BTreeMap::new(),
                failed: rng.random_bool(spec.failure_prob),
            })
            .collect();
        Ok(Tracker { spec, profiles, impressions: BTreeMap::new(), requests: 0, pool_prior })
    }

    pub fn spec(&self) -> &TrackerSpec {
        self.spec
    }

    /// Advances the clock for one unit: possibly switches its pool.
    pub fn tick<R: Rng>(&mut self, unit: usize, rng: &mut R) {
        if !rng.random_bool(self.spec.switch_prob) {
            return;
        }
        let affinity = self.spec.targeting.pool_affinity;
        if !self.spec.targeting.enabled || affinity == 0.0 {
            self.profiles[unit].pool = self.pool_prior.sample(rng);
            return;
        }
        let weights: Vec<f64> = self
            .spec
            .pools
            .iter()
            .map(|p| {
                let tagged = p.ads.iter().filter(|ad| self.targeted_interest(unit, ad).is_some()).count();
                p.prior * (1.0 + affinity * tagged as f64)
            })
            .collect();
        let index = WeightedIndex::new(&weights).expect("some pool has a positive prior");
        self.profiles[unit].pool = index.sample(rng);
    }

    /// Records that `unit` visited sites about `interests`.
    pub fn visit(&mut self, unit: usize, interests: &[String]) {
        for i in interests {
            *self.profiles[unit].interests.entry(i.clone()).or_default() += 1;
        }
    }

    pub fn pool_of(&self, unit: usize) -> &str {
        &self.spec.pools[self.profiles[unit].pool].name
    }

    /// One page load. `None` means the request timed out.
    pub fn serve<R: Rng>(&mut self, unit: usize, slots: usize, rng: &mut R) -> Result<Option<Vec<AdRecord>>> {
        self.requests += 1;
        if let Some(limit) = self.spec.rate_limit {
            if self.requests > limit {
                return Err(Error::TrackerFault(format!("rate limit of {limit} requests exceeded")));
            }
        }
        if self.profiles[unit].failed || rng.random_bool(self.spec.timeout_prob) {
            return Ok(None);
        }
        let pool = &self.spec.pools[self.profiles[unit].pool];
        let own: Vec<&AdSpec> = pool.ads.iter().collect();
        let all = self.spec.inventory();
        let mut served: Vec<AdRecord> = Vec::with_capacity(slots);
        for _ in 0..slots {
            let candidates = if rng.random_bool(self.spec.churn) { &all } else { &own };
            let weights: Vec<f64> = candidates
                .iter()
                .map(|ad| if served.iter().any(|s| s.url == ad.url) { 0.0 } else { self.weight(unit, ad) })
                .collect();
            let Ok(index) = WeightedIndex::new(&weights) else {
                break;
            };
            let ad = candidates[index.sample(rng)];
            let mut record = AdRecord::new(ad.url.clone(), ad.text.clone());
            if let Some(topic) = self.spec.page_topic.as_ref().filter(|t| ad.tags.contains(t)) {
                record = record.with_context(topic.clone());
            }
            served.push(record);
        }
        for ad in &served {
            *self.impressions.entry(ad.url.clone()).or_default() += 1;
        }
        Ok(Some(served))
    }

    fn targeted_interest(&self, unit: usize, ad: &AdSpec) -> Option<String> {
        let t = &self.spec.targeting;
        if !t.enabled {
            return None;
        }
        let interests = &self.profiles[unit].interests;
        ad.tags.iter().find(|tag| interests.get(*tag).is_some_and(|&c| c >= t.min_visits)).cloned()
    }

    fn weight(&self, unit: usize, ad: &AdSpec) -> f64 {
        let mut w = ad.weight;
        if self.targeted_interest(unit, ad).is_some() {
            w *= self.spec.targeting.boost;
        }
        let shown = self.impressions.get(&ad.url).copied().unwrap_or(0) as f64;
        w * (1.0 + self.spec.coupling * shown)
    }
}
