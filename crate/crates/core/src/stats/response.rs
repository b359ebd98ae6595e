use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One ad as seen on a page.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdRecord {
    pub url: String,
    pub text: String,
    /// Context under which the ad was served, if known.
    pub context: Option<String>,
}

impl AdRecord {
    pub fn new(url: impl Into<String>, text: impl Into<String>) -> Self {
        AdRecord { url: url.into(), text: text.into(), context: None }
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = Some(context.into());
        self
    }

    /// Lowercase substring match of any keyword against `text + " " + url`.
    pub fn mentions_any(&self, lowered_keywords: &[String]) -> bool {
        let hay = format!("{} {}", self.text, self.url).to_lowercase();
        lowered_keywords.iter().any(|k| hay.contains(k.as_str()))
    }
}

/// Ads of one page reload.
pub type Reload = Vec<AdRecord>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub reloads: Vec<Reload>,
}

impl Session {
    pub fn ads(&self) -> impl Iterator<Item = &AdRecord> {
        self.reloads.iter().flatten()
    }
}

/// What one unit produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Response {
    Ads(Vec<Session>),
    Scalar(f64),
}

impl Response {
    /// Single-session ad response.
    pub fn from_reloads(reloads: Vec<Reload>) -> Self {
        Response::Ads(vec![Session { reloads }])
    }

    pub fn sessions(&self) -> Result<&[Session]> {
        match self {
            Response::Ads(s) => Ok(s),
            Response::Scalar(_) => Err(crate::error::Error::Contract("statistic needs ad responses".into())),
        }
    }

    pub fn scalar(&self) -> Result<f64> {
        match self {
            Response::Scalar(x) => Ok(*x),
            Response::Ads(_) => Err(crate::error::Error::Contract("statistic needs scalar responses".into())),
        }
    }

    /// All ads over all sessions and reloads. Empty for scalars.
    pub fn ads(&self) -> Box<dyn Iterator<Item = &AdRecord> + '_> {
        match self {
            Response::Ads(s) => Box::new(s.iter().flat_map(Session::ads)),
            Response::Scalar(_) => Box::new(std::iter::empty()),
        }
    }
}

/// Responses in assignment-index order: slots `0..n` are the experimental
/// group, slots `n..n+m` the control group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseVector {
    responses: Vec<Response>,
    n: usize,
    m: usize,
    /// Treatment labels of the experimental and control groups.
    pub labels: (String, String),
    /// Unit identifier per slot.
    pub units: Vec<usize>,
}

impl ResponseVector {
    pub fn new(responses: Vec<Response>, n: usize, m: usize) -> Result<Self> {
        if responses.len() != n + m {
            return Err(invalid(format!("{} responses for groups of {n} and {m}", responses.len())));
        }
        let units = (0..responses.len()).collect();
        Ok(ResponseVector { responses, n, m, labels: ("experimental".into(), "control".into()), units })
    }

    pub fn with_labels(mut self, experimental: impl Into<String>, control: impl Into<String>) -> Self {
        self.labels = (experimental.into(), control.into());
        self
    }

    pub fn with_units(mut self, units: Vec<usize>) -> Result<Self> {
        if units.len() != self.responses.len() {
            return Err(invalid("one unit id per response is required"));
        }
        self.units = units;
        Ok(self)
    }

    pub fn responses(&self) -> &[Response] {
        &self.responses
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}
