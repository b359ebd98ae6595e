//! Machines that reproduce an observed trace while having the opposite
//! noninterference property.
//!
//! Given only the inputs and outputs of one interaction, a black-box analysis
//! cannot distinguish the system it observed from either of these.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::machine::{AlphabetsDoc, Channels, InputPair, MooreMachine, NullTokens, OutputPair, StateId, Witness};
use crate::prob::{Distribution, Rational};

/// Inputs `ī` of length `k` and the `k + 1` outputs observed in response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservedTrace {
    channels: Channels,
    inputs: Vec<InputPair>,
    outputs: Vec<OutputPair>,
}

impl ObservedTrace {
    pub fn new(channels: Channels, inputs: Vec<InputPair>, outputs: Vec<OutputPair>) -> Result<Self> {
        if outputs.len() != inputs.len() + 1 {
            return Err(invalid(format!(
                "{} inputs need {} outputs, got {}",
                inputs.len(),
                inputs.len() + 1,
                outputs.len()
            )));
        }
        inputs.iter().try_for_each(|&i| channels.check_input(i))?;
        outputs.iter().try_for_each(|&o| channels.check_output(o))?;
        Ok(ObservedTrace { channels, inputs, outputs })
    }

    pub fn channels(&self) -> &Channels {
        &self.channels
    }

    pub fn inputs(&self) -> &[InputPair] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[OutputPair] {
        &self.outputs
    }

    /// Number of input steps `k`.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

fn chain_names(k: usize) -> Vec<String> {
    (1..=k + 1).map(|j| format!("c{j}")).collect()
}

/// `q_N`: a chain `c1 → c2 → … → c(k+1)` that ignores its inputs, emits the
/// observed output at each step and stays in `c(k+1)` forever.
pub fn build_mimic_noninterfering(trace: &ObservedTrace) -> MooreMachine<Rational> {
    let k = trace.len();
    let outs = trace.outputs.clone();
    MooreMachine::from_fn(
        chain_names(k),
        StateId(0),
        trace.channels.clone(),
        |s, _| Distribution::point(StateId((s.0 + 1).min(k))),
        |s| outs[s.0],
    )
    .expect("chain is well-formed")
}

/// `q_I`: the chain of [`build_mimic_noninterfering`] behind a new initial
/// state `s00`.
///
/// From `s00` the observed first input continues along the chain. Any other
/// input drops into the absorbing state `s01`, whose low output differs from
/// the second observed output. For an empty trace the chain's absorbing
/// output stands in for the second output and `<0,0>` for the first input.
pub fn build_mimic_interfering(trace: &ObservedTrace) -> Result<MooreMachine<Rational>> {
    let ch = &trace.channels;
    if ch.hi_in.len() < 2 || ch.lo_out.len() < 2 {
        return Err(Error::AlphabetTooSmall(format!(
            "needs |hi_in| >= 2 and |lo_out| >= 2 (H has two inputs and L has two outputs), got {} and {}",
            ch.hi_in.len(),
            ch.lo_out.len()
        )));
    }
    let k = trace.len();
    let o1 = trace.outputs[0];
    let o2 = trace.outputs.get(1).copied().unwrap_or(o1);
    let first = trace.inputs.first().copied().unwrap_or(InputPair { hi: 0, lo: 0 });
    let deviant_lo = (0..ch.lo_out.len()).find(|&l| l != o2.lo).expect("two low outputs");
    let o01 = OutputPair { hi: o2.hi, lo: deviant_lo };

    let mut names = chain_names(k);
    names.push("s00".into());
    names.push("s01".into());
    let s00 = StateId(k + 1);
    let s01 = StateId(k + 2);
    let outs = trace.outputs.clone();
    MooreMachine::from_fn(
        names,
        s00,
        ch.clone(),
        |s, i| {
            if s == s00 {
                if i == first {
                    Distribution::point(StateId(1.min(k)))
                } else {
                    Distribution::point(s01)
                }
            } else if s == s01 {
                Distribution::point(s01)
            } else {
                Distribution::point(StateId((s.0 + 1).min(k)))
            }
        },
        |s| {
            if s == s00 {
                o1
            } else if s == s01 {
                o01
            } else {
                outs[s.0]
            }
        },
    )
}

/// The one-step input pair exposing the flow in [`build_mimic_interfering`]:
/// the observed first input against the same input with the least other
/// high symbol.
pub fn interfering_witness(trace: &ObservedTrace) -> Option<Witness> {
    let first = trace.inputs.first().copied().unwrap_or(InputPair { hi: 0, lo: 0 });
    let other_hi = (0..trace.channels.hi_in.len()).find(|&h| h != first.hi)?;
    let other = InputPair { hi: other_hi, lo: first.lo };
    let (a, b) = if first < other { (first, other) } else { (other, first) };
    Some(Witness { first: vec![a], second: vec![b] })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymbolPair {
    hi: String,
    lo: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceDoc {
    hi_in: Vec<String>,
    lo_in: Vec<String>,
    hi_out: Vec<String>,
    lo_out: Vec<String>,
    #[serde(default, skip_serializing_if = "NullTokens::is_empty")]
    null: NullTokens,
    inputs: Vec<SymbolPair>,
    outputs: Vec<SymbolPair>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessDoc {
    hi_in: Vec<String>,
    lo_in: Vec<String>,
    first: Vec<SymbolPair>,
    second: Vec<SymbolPair>,
}

fn input_names(ch: &Channels, inputs: &[InputPair]) -> Vec<SymbolPair> {
    inputs
        .iter()
        .map(|&i| {
            let (hi, lo) = ch.input_names(i);
            SymbolPair { hi: hi.into(), lo: lo.into() }
        })
        .collect()
}

impl ObservedTrace {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: TraceDoc = toml::from_str(text)?;
        let channels = AlphabetsDoc {
            hi_in: doc.hi_in,
            lo_in: doc.lo_in,
            hi_out: doc.hi_out,
            lo_out: doc.lo_out,
            null: doc.null,
        }
        .to_channels()?;
        let inputs = doc.inputs.iter().map(|p| channels.input(&p.hi, &p.lo)).collect::<Result<Vec<_>>>()?;
        let outputs = doc.outputs.iter().map(|p| channels.output(&p.hi, &p.lo)).collect::<Result<Vec<_>>>()?;
        ObservedTrace::new(channels, inputs, outputs)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let a = AlphabetsDoc::from_channels(&self.channels);
        let outputs = self
            .outputs
            .iter()
            .map(|&o| {
                let (hi, lo) = self.channels.output_names(o);
                SymbolPair { hi: hi.into(), lo: lo.into() }
            })
            .collect();
        let doc = TraceDoc {
            hi_in: a.hi_in,
            lo_in: a.lo_in,
            hi_out: a.hi_out,
            lo_out: a.lo_out,
            null: a.null,
            inputs: input_names(&self.channels, &self.inputs),
            outputs,
        };
        Ok(toml::to_string(&doc)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Renders a witness as TOML: the two input alphabets followed by the
/// `first` and `second` input sequences.
pub fn witness_to_toml(w: &Witness, channels: &Channels) -> Result<String> {
    let doc = WitnessDoc {
        hi_in: channels.hi_in.symbols().to_vec(),
        lo_in: channels.lo_in.symbols().to_vec(),
        first: input_names(channels, &w.first),
        second: input_names(channels, &w.second),
    };
    Ok(toml::to_string(&doc)?)
}

pub fn witness_from_toml(text: &str, channels: &Channels) -> Result<Witness> {
    let doc: WitnessDoc = toml::from_str(text)?;
    let parse = |v: &[SymbolPair]| v.iter().map(|p| channels.input(&p.hi, &p.lo)).collect::<Result<Vec<_>>>();
    Ok(Witness { first: parse(&doc.first)?, second: parse(&doc.second)? })
}
