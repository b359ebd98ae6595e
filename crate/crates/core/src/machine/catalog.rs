//! Small reference machines used by tests, examples and documentation.

use crate::prob::{ratio, Distribution, Rational};

use super::model::{Channels, MooreMachine, OutputPair, StateId};

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

/// One state looping on itself and always emitting `<0,0>`. Binary inputs.
pub fn constant_machine() -> MooreMachine<Rational> {
    MooreMachine::from_fn(
        names(1),
        StateId(0),
        Channels::numeric(2, 2, 1, 1),
        |_, _| Distribution::point(StateId(0)),
        |_| OutputPair::new(0, 0),
    )
    .expect("well-formed")
}

/// The low output at step t+1 repeats the high input of step t.
pub fn echo_machine() -> MooreMachine<Rational> {
    MooreMachine::from_fn(
        names(2),
        StateId(0),
        Channels::numeric(2, 2, 1, 2),
        |_, i| Distribution::point(StateId(i.hi)),
        |s| OutputPair::new(0, s.0),
    )
    .expect("well-formed")
}

/// Like [`echo_machine`] but repeating the low input, so H never reaches L.
pub fn low_echo_machine() -> MooreMachine<Rational> {
    MooreMachine::from_fn(
        names(2),
        StateId(0),
        Channels::numeric(2, 2, 1, 2),
        |_, i| Distribution::point(StateId(i.lo)),
        |s| OutputPair::new(0, s.0),
    )
    .expect("well-formed")
}

/// Two states; every step moves to either state with probability 1/2.
pub fn coin_machine() -> MooreMachine<Rational> {
    MooreMachine::from_fn(
        names(2),
        StateId(0),
        Channels::numeric(1, 1, 1, 2),
        |_, _| Distribution::from_masses([(StateId(0), ratio(1, 2)), (StateId(1), ratio(1, 2))]),
        |s| OutputPair::new(0, s.0),
    )
    .expect("well-formed")
}

/// High input 1 flips a fair coin into the low output; high input 0 keeps it at 0.
/// Every low output sequence stays possible either way, so only the
/// probabilistic reading sees the flow.
pub fn noisy_leak_machine() -> MooreMachine<Rational> {
    MooreMachine::from_fn(
        names(2),
        StateId(0),
        Channels::numeric(2, 1, 1, 2),
        |_, i| {
            if i.hi == 1 {
                Distribution::from_masses([(StateId(0), ratio(1, 2)), (StateId(1), ratio(1, 2))])
            } else {
                Distribution::from_masses([(StateId(0), ratio(3, 4)), (StateId(1), ratio(1, 4))])
            }
        },
        |s| OutputPair::new(0, s.0),
    )
    .expect("well-formed")
}
