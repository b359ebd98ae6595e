//! TOML machine files.
//!
//! ```toml
//! states = ["s0", "s1"]
//! initial = "s0"
//! hi_in = ["0", "1"]
//! lo_in = ["0"]
//! hi_out = ["-"]
//! lo_out = ["0", "1"]
//!
//! [[transition]]
//! state = "s0"
//! hi = "0"
//! lo = "0"
//! next = [{ to = "s0", num = 1, den = 2 }, { to = "s1", num = 1, den = 2 }]
//!
//! [[output]]
//! state = "s0"
//! hi = "-"
//! lo = "0"
//! ```
//!
//! Every `(state, hi, lo)` triple needs exactly one `[[transition]]` row and
//! every state exactly one `[[output]]` row.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::prob::{Distribution, Rational};

use super::model::{Alphabet, Channels, InputPair, MooreMachine, OutputPair, StateId};

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct NullTokens {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi_in: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_in: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi_out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_out: Option<String>,
}

impl NullTokens {
    pub(crate) fn is_empty(&self) -> bool {
        self.hi_in.is_none() && self.lo_in.is_none() && self.hi_out.is_none() && self.lo_out.is_none()
    }
}

/// The four alphabet keys shared by machine and trace files.
#[derive(Debug)]
pub(crate) struct AlphabetsDoc {
    pub hi_in: Vec<String>,
    pub lo_in: Vec<String>,
    pub hi_out: Vec<String>,
    pub lo_out: Vec<String>,
    pub null: NullTokens,
}

impl AlphabetsDoc {
    pub(crate) fn to_channels(&self) -> Result<Channels> {
        let make = |syms: &[String], null: &Option<String>| -> Result<Alphabet> {
            let a = Alphabet::new(syms.iter().cloned())?;
            match null {
                Some(n) => a.with_null(n),
                None => Ok(a),
            }
        };
        Ok(Channels::new(
            make(&self.hi_in, &self.null.hi_in)?,
            make(&self.lo_in, &self.null.lo_in)?,
            make(&self.hi_out, &self.null.hi_out)?,
            make(&self.lo_out, &self.null.lo_out)?,
        ))
    }

    pub(crate) fn from_channels(ch: &Channels) -> Self {
        let null = |a: &Alphabet| a.null().map(|i| a.symbol(i).to_string());
        AlphabetsDoc {
            hi_in: ch.hi_in.symbols().to_vec(),
            lo_in: ch.lo_in.symbols().to_vec(),
            hi_out: ch.hi_out.symbols().to_vec(),
            lo_out: ch.lo_out.symbols().to_vec(),
            null: NullTokens {
                hi_in: null(&ch.hi_in),
                lo_in: null(&ch.lo_in),
                hi_out: null(&ch.hi_out),
                lo_out: null(&ch.lo_out),
            },
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineDoc {
    states: Vec<String>,
    initial: String,
    hi_in: Vec<String>,
    lo_in: Vec<String>,
    hi_out: Vec<String>,
    lo_out: Vec<String>,
    #[serde(default, skip_serializing_if = "NullTokens::is_empty")]
    null: NullTokens,
    #[serde(default)]
    transition: Vec<TransitionRow>,
    #[serde(default)]
    output: Vec<OutputRow>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionRow {
    state: String,
    hi: String,
    lo: String,
    next: Vec<Mass>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Mass {
    to: String,
    num: u64,
    den: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputRow {
    state: String,
    hi: String,
    lo: String,
}

impl MooreMachine<Rational> {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut doc: MachineDoc = toml::from_str(text)?;
        let channels = AlphabetsDoc {
            hi_in: std::mem::take(&mut doc.hi_in),
            lo_in: std::mem::take(&mut doc.lo_in),
            hi_out: std::mem::take(&mut doc.hi_out),
            lo_out: std::mem::take(&mut doc.lo_out),
            null: std::mem::take(&mut doc.null),
        }
        .to_channels()?;
        let state_of = |name: &str| -> Result<StateId> {
            doc.states
                .iter()
                .position(|s| s == name)
                .map(StateId)
                .ok_or_else(|| invalid(format!("unknown state '{name}'")))
        };
        let initial = state_of(&doc.initial)?;

        let mut table: BTreeMap<(StateId, InputPair), Distribution<StateId>> = BTreeMap::new();
        for row in &doc.transition {
            let s = state_of(&row.state)?;
            let i = channels.input(&row.hi, &row.lo)?;
            let mut masses = Vec::new();
            for m in &row.next {
                if m.den == 0 {
                    return Err(invalid(format!("zero denominator in transition from '{}'", row.state)));
                }
                masses.push((state_of(&m.to)?, Rational::new(BigInt::from(m.num), BigInt::from(m.den))));
            }
            let dist = Distribution::new(masses).map_err(|e| {
                Error::InvalidModel(format!("transition ({}, {}, {}): {e}", row.state, row.hi, row.lo))
            })?;
            if table.insert((s, i), dist).is_some() {
                return Err(invalid(format!("duplicate transition ({}, {}, {})", row.state, row.hi, row.lo)));
            }
        }
        let mut outputs: BTreeMap<StateId, OutputPair> = BTreeMap::new();
        for row in &doc.output {
            let s = state_of(&row.state)?;
            if outputs.insert(s, channels.output(&row.hi, &row.lo)?).is_some() {
                return Err(invalid(format!("duplicate output for state '{}'", row.state)));
            }
        }
        for s in 0..doc.states.len() {
            let s = StateId(s);
            if !outputs.contains_key(&s) {
                return Err(invalid(format!("no output for state '{}'", doc.states[s.0])));
            }
            for i in channels.inputs() {
                if !table.contains_key(&(s, i)) {
                    let (h, l) = channels.input_names(i);
                    return Err(invalid(format!("no transition for ({}, {h}, {l})", doc.states[s.0])));
                }
            }
        }
        MooreMachine::from_fn(
            doc.states.clone(),
            initial,
            channels,
            |s, i| table[&(s, i)].clone(),
            |s| outputs[&s],
        )
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let ch = self.channels();
        let mut transition = Vec::new();
        for s in self.state_ids() {
            for i in ch.inputs() {
                let (hi, lo) = ch.input_names(i);
                let mut next = Vec::new();
                for (to, p) in self.transition(s, i).iter() {
                    let num = p.numer().to_u64();
                    let den = p.denom().to_u64();
                    let (Some(num), Some(den)) = (num, den) else {
                        return Err(invalid("probability does not fit the file format"));
                    };
                    next.push(Mass { to: self.state_name(*to).to_string(), num, den });
                }
                transition.push(TransitionRow {
                    state: self.state_name(s).to_string(),
                    hi: hi.to_string(),
                    lo: lo.to_string(),
                    next,
                });
            }
        }
        let output = self
            .state_ids()
            .map(|s| {
                let (hi, lo) = ch.output_names(self.output(s));
                OutputRow { state: self.state_name(s).to_string(), hi: hi.to_string(), lo: lo.to_string() }
            })
            .collect();
        let a = AlphabetsDoc::from_channels(ch);
        let doc = MachineDoc {
            states: self.states().to_vec(),
            initial: self.state_name(self.initial()).to_string(),
            hi_in: a.hi_in,
            lo_in: a.lo_in,
            hi_out: a.hi_out,
            lo_out: a.lo_out,
            null: a.null,
            transition,
            output,
        };
        Ok(toml::to_string(&doc)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::catalog::{coin_machine, echo_machine};

    #[test]
    fn round_trip() {
        for m in [echo_machine(), coin_machine()] {
            let text = m.to_toml_string().unwrap();
            assert_eq!(MooreMachine::from_toml_str(&text).unwrap(), m);
        }
    }

    #[test]
    fn rejects_unknown_keys_and_gaps() {
        let text = echo_machine().to_toml_string().unwrap();
        assert!(MooreMachine::from_toml_str(&format!("colour = 1\n{text}")).is_err());

        let minimal = r#"
states = ["a"]
initial = "a"
hi_in = ["0", "1"]
lo_in = ["0"]
hi_out = ["0"]
lo_out = ["0"]

[[transition]]
state = "a"
hi = "0"
lo = "0"
next = [{ to = "a", num = 1, den = 1 }]

[[output]]
state = "a"
hi = "0"
lo = "0"
"#;
        let err = MooreMachine::from_toml_str(minimal).unwrap_err();
        assert!(err.to_string().contains("no transition"), "{err}");
    }

    #[test]
    fn null_tokens_survive() {
        let text = r#"
states = ["a"]
initial = "a"
hi_in = ["-"]
lo_in = ["-"]
hi_out = ["-"]
lo_out = ["-", "x"]

[null]
lo_out = "-"

[[transition]]
state = "a"
hi = "-"
lo = "-"
next = [{ to = "a", num = 1, den = 1 }]

[[output]]
state = "a"
hi = "-"
lo = "x"
"#;
        let m = MooreMachine::from_toml_str(text).unwrap();
        assert_eq!(m.channels().lo_out.null(), Some(0));
        let again = MooreMachine::from_toml_str(&m.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, m);
    }
}
