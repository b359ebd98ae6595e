use crate::error::{invalid, Result};
use crate::prob::{Distribution, Probability};

use super::model::{InputPair, MooreMachine, OutputPair, StateId};

/// Distribution over `(output sequence, state sequence)` pairs: `Q(s, ī)`.
pub type TraceDistribution<P> = Distribution<(Vec<OutputPair>, Vec<StateId>), P>;

/// Low-channel output symbols, one per step.
pub type LowSeq = Vec<usize>;

/// Input and output sequences of one interaction. A run over `k` inputs
/// produces `k + 1` outputs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IoSequence {
    pub inputs: Vec<InputPair>,
    pub outputs: Vec<OutputPair>,
}

impl IoSequence {
    pub fn low_inputs(&self) -> Vec<usize> {
        self.inputs.iter().map(|i| i.lo).collect()
    }

    pub fn high_inputs(&self) -> Vec<usize> {
        self.inputs.iter().map(|i| i.hi).collect()
    }

    pub fn low_outputs(&self) -> LowSeq {
        low_of(&self.outputs)
    }

    pub fn high_outputs(&self) -> Vec<usize> {
        self.outputs.iter().map(|o| o.hi).collect()
    }
}

pub fn low_of(outputs: &[OutputPair]) -> LowSeq {
    outputs.iter().map(|o| o.lo).collect()
}

impl<P: Probability> MooreMachine<P> {
    /// `Q(start, ī)`, built by unfolding the recursive definition.
    pub fn run(&self, start: StateId, inputs: &[InputPair]) -> Result<TraceDistribution<P>> {
        self.check_state(start)?;
        self.check_inputs(inputs)?;
        Ok(self.unfold(start, inputs))
    }

    fn unfold(&self, s: StateId, inputs: &[InputPair]) -> TraceDistribution<P> {
        let here = self.output(s);
        match inputs.split_first() {
            None => Distribution::point((vec![here], vec![s])),
            Some((&i, rest)) => {
                let mut masses = Vec::new();
                for (next, p) in self.transition(s, i).iter() {
                    for ((outs, states), q) in self.unfold(*next, rest).iter() {
                        let mut o = Vec::with_capacity(outs.len() + 1);
                        o.push(here);
                        o.extend_from_slice(outs);
                        let mut st = Vec::with_capacity(states.len() + 1);
                        st.push(s);
                        st.extend_from_slice(states);
                        masses.push(((o, st), p.clone() * q.clone()));
                    }
                }
                Distribution::from_masses(masses)
            }
        }
    }

    /// Evaluates `Q(start, ī)(ō, s̄)` at one point with the product form.
    pub fn trace_prob_closed(
        &self,
        start: StateId,
        inputs: &[InputPair],
        outputs: &[OutputPair],
        states: &[StateId],
    ) -> Result<P> {
        self.check_state(start)?;
        self.check_inputs(inputs)?;
        let k = inputs.len();
        if outputs.len() != k + 1 || states.len() != k + 1 {
            return Err(invalid(format!(
                "trace of {k} inputs needs {} outputs and states, got {} and {}",
                k + 1,
                outputs.len(),
                states.len()
            )));
        }
        states.iter().try_for_each(|&s| self.check_state(s))?;
        if states[0] != start || self.output(states[0]) != outputs[0] {
            return Ok(P::zero());
        }
        let mut acc = P::one();
        for step in 0..k {
            if self.output(states[step + 1]) != outputs[step + 1] {
                return Ok(P::zero());
            }
            acc = acc * self.transition(states[step], inputs[step]).prob(&states[step + 1]);
        }
        Ok(acc)
    }

    /// `Q(ī)`: output-sequence distribution from the initial state.
    pub fn output_dist(&self, inputs: &[InputPair]) -> Result<Distribution<Vec<OutputPair>, P>> {
        Ok(self.run(self.initial(), inputs)?.map(|(o, _)| o.clone()))
    }

    /// `⌊Q(ī)⌋L`
    pub fn low_output_dist(&self, inputs: &[InputPair]) -> Result<Distribution<LowSeq, P>> {
        Ok(project_low(&self.output_dist(inputs)?))
    }

    /// The unique trace of a machine whose transitions are all point masses.
    pub fn run_deterministic(&self, start: StateId, inputs: &[InputPair]) -> Result<(Vec<OutputPair>, Vec<StateId>)> {
        self.check_state(start)?;
        self.check_inputs(inputs)?;
        let mut s = start;
        let mut outs = vec![self.output(s)];
        let mut states = vec![s];
        for &i in inputs {
            s = *self.transition(s, i).as_point().ok_or_else(|| {
                crate::error::Error::NotDeterministic(format!(
                    "τ({}, {i}) is not a point mass",
                    self.state_name(s)
                ))
            })?;
            outs.push(self.output(s));
            states.push(s);
        }
        Ok((outs, states))
    }
}

/// Pushforward of an output-sequence distribution onto the low channel.
pub fn project_low<P: Probability>(dist: &Distribution<Vec<OutputPair>, P>) -> Distribution<LowSeq, P> {
    dist.map(|o| low_of(o))
}

/// Projection onto low observations. Already-low values project to themselves.
pub trait LowProjection {
    type Low;
    fn project_low(&self) -> Self::Low;
}

impl<P: Probability> LowProjection for Distribution<Vec<OutputPair>, P> {
    type Low = Distribution<LowSeq, P>;
    fn project_low(&self) -> Self::Low {
        project_low(self)
    }
}

impl<P: Probability> LowProjection for Distribution<LowSeq, P> {
    type Low = Distribution<LowSeq, P>;
    fn project_low(&self) -> Self::Low {
        self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::catalog::{coin_machine, constant_machine, echo_machine};
    use crate::prob::{ratio, Rational};
    use num_traits::One;

    #[test]
    fn constant_machine_empty_input() {
        let m = constant_machine();
        let d = m.run(m.initial(), &[]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.prob(&(vec![OutputPair::new(0, 0)], vec![StateId(0)])), Rational::one());
    }

    #[test]
    fn echo_has_single_trace() {
        let m = echo_machine();
        let inputs = [InputPair::new(1, 0), InputPair::new(0, 0), InputPair::new(1, 1)];
        let d = m.run(m.initial(), &inputs).unwrap();
        assert_eq!(d.len(), 1);
        let ((outs, _), p) = d.iter().next().unwrap();
        assert_eq!(*p, Rational::one());
        assert_eq!(low_of(outs), vec![0, 1, 0, 1]);
    }

    #[test]
    fn coin_splits_evenly() {
        let m = coin_machine();
        let d = m.run(m.initial(), &[InputPair::new(0, 0)]).unwrap();
        assert_eq!(d.len(), 2);
        for (_, p) in d.iter() {
            assert_eq!(*p, ratio(1, 2));
        }
        let o = m.output_dist(&[InputPair::new(0, 0)]).unwrap();
        assert_eq!(o.len(), 2);
        assert_eq!(o.total(), Rational::one());
    }

    #[test]
    fn closed_form_edge_cases() {
        let m = coin_machine();
        let s = m.initial();
        let o = m.output(s);
        assert_eq!(m.trace_prob_closed(s, &[], &[o], &[s]).unwrap(), Rational::one());
        let wrong = OutputPair::new(0, 1 - o.lo);
        let i = [InputPair::new(0, 0)];
        assert_eq!(m.trace_prob_closed(s, &i, &[o, wrong], &[s, s]).unwrap(), ratio(0, 1));
        assert!(m.trace_prob_closed(s, &i, &[o], &[s]).is_err());
    }

    #[test]
    fn projection_collapses_high_differences() {
        let d = Distribution::new([
            (vec![OutputPair::new(0, 1)], ratio(1, 3)),
            (vec![OutputPair::new(1, 1)], ratio(2, 3)),
        ])
        .unwrap();
        let low = project_low(&d);
        assert_eq!(low.len(), 1);
        assert_eq!(low.prob(&vec![1]), Rational::one());
        assert_eq!(low.project_low(), low);
    }

    #[test]
    fn unknown_symbols_rejected() {
        let m = echo_machine();
        assert!(m.run(m.initial(), &[InputPair::new(5, 0)]).is_err());
        assert!(m.run(StateId(9), &[]).is_err());
    }
}
