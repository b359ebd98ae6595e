use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::prob::{Distribution, Probability, Rational};

/// Finite ordered set of channel symbols.
///
/// A null token ("no new message") may be designated; it is an ordinary
/// member of the alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    null: Option<usize>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(invalid("alphabet must be non-empty"));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(invalid(format!("duplicate symbol '{s}'")));
            }
        }
        Ok(Alphabet { symbols, null: None })
    }

    /// Alphabet `{"0", "1", ..., "n-1"}`.
    pub fn numeric(n: usize) -> Self {
        Alphabet::new((0..n).map(|i| i.to_string())).expect("n > 0")
    }

    /// Marks `symbol` as the null token.
    pub fn with_null(mut self, symbol: &str) -> Result<Self> {
        let idx = self
            .index_of(symbol)
            .ok_or_else(|| invalid(format!("null token '{symbol}' not in alphabet")))?;
        self.null = Some(idx);
        Ok(self)
    }

    pub fn null(&self) -> Option<usize> {
        self.null
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, idx: usize) -> &str {
        &self.symbols[idx]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    pub(crate) fn lookup(&self, symbol: &str, what: &str) -> Result<usize> {
        self.index_of(symbol)
            .ok_or_else(|| invalid(format!("unknown {what} symbol '{symbol}'")))
    }
}

/// The four channel alphabets: `I = hi_in × lo_in`, `O = hi_out × lo_out`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channels {
    pub hi_in: Alphabet,
    pub lo_in: Alphabet,
    pub hi_out: Alphabet,
    pub lo_out: Alphabet,
}

impl Channels {
    pub fn new(hi_in: Alphabet, lo_in: Alphabet, hi_out: Alphabet, lo_out: Alphabet) -> Self {
        Channels { hi_in, lo_in, hi_out, lo_out }
    }

    /// All four alphabets `{"0", ..., "k-1"}`.
    pub fn numeric(hi_in: usize, lo_in: usize, hi_out: usize, lo_out: usize) -> Self {
        Channels::new(
            Alphabet::numeric(hi_in),
            Alphabet::numeric(lo_in),
            Alphabet::numeric(hi_out),
            Alphabet::numeric(lo_out),
        )
    }

    pub fn input_count(&self) -> usize {
        self.hi_in.len() * self.lo_in.len()
    }

    /// Every input pair, ordered by `(hi, lo)`.
    pub fn inputs(&self) -> impl Iterator<Item = InputPair> + '_ {
        (0..self.hi_in.len()).flat_map(move |hi| (0..self.lo_in.len()).map(move |lo| InputPair { hi, lo }))
    }

    pub(crate) fn input_index(&self, i: InputPair) -> usize {
        i.hi * self.lo_in.len() + i.lo
    }

    pub fn check_input(&self, i: InputPair) -> Result<()> {
        if i.hi < self.hi_in.len() && i.lo < self.lo_in.len() {
            Ok(())
        } else {
            Err(invalid(format!("input {i} outside the input alphabets")))
        }
    }

    pub fn check_output(&self, o: OutputPair) -> Result<()> {
        if o.hi < self.hi_out.len() && o.lo < self.lo_out.len() {
            Ok(())
        } else {
            Err(invalid(format!("output {o} outside the output alphabets")))
        }
    }

    pub fn input(&self, hi: &str, lo: &str) -> Result<InputPair> {
        Ok(InputPair { hi: self.hi_in.lookup(hi, "high input")?, lo: self.lo_in.lookup(lo, "low input")? })
    }

    pub fn output(&self, hi: &str, lo: &str) -> Result<OutputPair> {
        Ok(OutputPair { hi: self.hi_out.lookup(hi, "high output")?, lo: self.lo_out.lookup(lo, "low output")? })
    }

    pub fn input_names(&self, i: InputPair) -> (&str, &str) {
        (self.hi_in.symbol(i.hi), self.lo_in.symbol(i.lo))
    }

    pub fn output_names(&self, o: OutputPair) -> (&str, &str) {
        (self.hi_out.symbol(o.hi), self.lo_out.symbol(o.lo))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

/// A (high, low) input pair, as indices into the input alphabets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InputPair {
    pub hi: usize,
    pub lo: usize,
}

/// A (high, low) output pair, as indices into the output alphabets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutputPair {
    pub hi: usize,
    pub lo: usize,
}

impl InputPair {
    pub fn new(hi: usize, lo: usize) -> Self {
        InputPair { hi, lo }
    }
}

impl OutputPair {
    pub fn new(hi: usize, lo: usize) -> Self {
        OutputPair { hi, lo }
    }
}

impl fmt::Display for InputPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.hi, self.lo)
    }
}

impl fmt::Display for OutputPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.hi, self.lo)
    }
}

/// Finite probabilistic Moore machine `⟨S, s0, I, O, τ, σ⟩` with the input
/// and output sets split into high and low channels.
#[derive(Clone, Debug, PartialEq)]
pub struct MooreMachine<P = Rational> {
    states: Vec<String>,
    initial: StateId,
    channels: Channels,
    // indexed by state * |I| + input index
    transition: Vec<Distribution<StateId, P>>,
    output: Vec<OutputPair>,
}

impl<P: Probability> MooreMachine<P> {
    /// Builds a machine from closures giving τ and σ. Every transition
    /// distribution is checked to be a probability distribution over `states`.
    pub fn from_fn(
        states: Vec<String>,
        initial: StateId,
        channels: Channels,
        mut transition: impl FnMut(StateId, InputPair) -> Distribution<StateId, P>,
        mut output: impl FnMut(StateId) -> OutputPair,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidModel("machine needs at least one state".into()));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(Error::InvalidModel(format!("duplicate state '{s}'")));
            }
        }
        if initial.0 >= states.len() {
            return Err(Error::InvalidModel("initial state out of range".into()));
        }
        let inputs: Vec<InputPair> = channels.inputs().collect();
        let mut table = Vec::with_capacity(states.len() * inputs.len());
        for s in 0..states.len() {
            for &i in &inputs {
                let dist = transition(StateId(s), i);
                validate_transition(&dist, states.len(), &states[s], i)?;
                table.push(dist);
            }
        }
        let mut outs = Vec::with_capacity(states.len());
        for s in 0..states.len() {
            let o = output(StateId(s));
            channels.check_output(o)?;
            outs.push(o);
        }
        Ok(MooreMachine { states, initial, channels, transition: table, output: outs })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(StateId)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn channels(&self) -> &Channels {
        &self.channels
    }

    /// τ(s, i)
    pub fn transition(&self, s: StateId, i: InputPair) -> &Distribution<StateId, P> {
        &self.transition[s.0 * self.channels.input_count() + self.channels.input_index(i)]
    }

    /// σ(s)
    pub fn output(&self, s: StateId) -> OutputPair {
        self.output[s.0]
    }

    /// True when every transition distribution is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.transition.iter().all(|d| d.as_point().is_some())
    }

    pub fn check_state(&self, s: StateId) -> Result<()> {
        if s.0 < self.states.len() {
            Ok(())
        } else {
            Err(invalid(format!("unknown state id {}", s.0)))
        }
    }

    pub fn check_inputs(&self, inputs: &[InputPair]) -> Result<()> {
        inputs.iter().try_for_each(|&i| self.channels.check_input(i))
    }
}

impl MooreMachine<Rational> {
    /// Float-mode copy of this machine.
    pub fn to_float(&self) -> MooreMachine<f64> {
        MooreMachine {
            states: self.states.clone(),
            initial: self.initial,
            channels: self.channels.clone(),
            transition: self.transition.iter().map(|d| d.to_float()).collect(),
            output: self.output.clone(),
        }
    }
}

fn validate_transition<P: Probability>(
    dist: &Distribution<StateId, P>,
    n_states: usize,
    state: &str,
    input: InputPair,
) -> Result<()> {
    for (s, p) in dist.iter() {
        if s.0 >= n_states {
            return Err(Error::InvalidModel(format!("τ({state}, {input}) targets unknown state {}", s.0)));
        }
        if p.is_negative_prob() {
            return Err(Error::InvalidModel(format!("τ({state}, {input}) has a negative probability")));
        }
    }
    if !dist.total().same(&P::one()) {
        return Err(Error::InvalidModel(format!(
            "τ({state}, {input}) sums to {:?}, not 1",
            dist.total()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ratio;

    #[test]
    fn alphabet_rejects_duplicates_and_empty() {
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        assert!(Alphabet::new(["a", "a"]).is_err());
        let a = Alphabet::new(["-", "x"]).unwrap().with_null("-").unwrap();
        assert_eq!(a.null(), Some(0));
        assert!(Alphabet::new(["x"]).unwrap().with_null("-").is_err());
    }

    #[test]
    fn inputs_are_ordered_hi_then_lo() {
        let c = Channels::numeric(2, 3, 1, 1);
        let v: Vec<_> = c.inputs().collect();
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], InputPair::new(0, 0));
        assert_eq!(v[1], InputPair::new(0, 1));
        assert_eq!(v[3], InputPair::new(1, 0));
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_improper_transition() {
        let res = MooreMachine::from_fn(
            vec!["a".into(), "b".into()],
            StateId(0),
            Channels::numeric(1, 1, 1, 1),
            |_, _| Distribution::from_masses([(StateId(0), ratio(1, 2)), (StateId(1), ratio(1, 3))]),
            |_| OutputPair::new(0, 0),
        );
        assert!(matches!(res, Err(Error::InvalidModel(_))));

        let res = MooreMachine::<Rational>::from_fn(
            vec!["a".into()],
            StateId(0),
            Channels::numeric(1, 1, 1, 1),
            |_, _| Distribution::point(StateId(0)),
            |_| OutputPair::new(0, 3),
        );
        assert!(res.is_err());
    }
}
