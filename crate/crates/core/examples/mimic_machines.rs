//! One observed trace, two machines that reproduce it: one noninterfering and
//! one that leaks its high input.
//!
//!     cargo run --example mimic_machines

use flowexp::adversary::{build_mimic_interfering, build_mimic_noninterfering, interfering_witness, ObservedTrace};
use flowexp::machine::{CheckOptions, InputPair, MooreMachine, NiVerdict};
use flowexp::prob::{format_rational, Rational};

fn show<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn report(label: &str, m: &MooreMachine<Rational>, trace: &ObservedTrace) -> flowexp::Result<()> {
    let p = m.output_dist(trace.inputs())?.prob(&trace.outputs().to_vec());
    let verdict = match m.check_noninterference(CheckOptions::new(trace.len().max(1)))? {
        NiVerdict::NoninterferingUpTo(_) => "noninterfering".to_string(),
        NiVerdict::Interference(w) => format!("interference between {} and {}", show(&w.first), show(&w.second)),
    };
    println!("{label}: {} states, reproduces the trace with probability {}, {verdict}", m.state_count(), format_rational(&p));
    Ok(())
}

fn main() -> flowexp::Result<()> {
    let trace = ObservedTrace::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/trace.toml"))?;
    println!("inputs  {}", show(trace.inputs()));
    println!("outputs {}", show(trace.outputs()));

    report("q_N", &build_mimic_noninterfering(&trace), &trace)?;
    let leaky = build_mimic_interfering(&trace)?;
    report("q_I", &leaky, &trace)?;
    if let Some(w) = interfering_witness(&trace) {
        for seq in [&w.first, &w.second] {
            println!("  low outputs after {}: {:?}", show(seq), leaky.low_output_dist(seq)?.support().collect::<Vec<_>>());
        }
    }

    // Without a second high input there is nothing to leak.
    let unary = ObservedTrace::new(
        flowexp::machine::Channels::numeric(1, 2, 1, 2),
        trace.inputs().iter().map(|i| InputPair::new(0, i.lo)).collect(),
        trace.outputs().iter().map(|o| flowexp::machine::OutputPair::new(0, o.lo)).collect(),
    )?;
    if let Err(e) = build_mimic_interfering(&unary) {
        println!("unary high alphabet: {e}");
    }
    Ok(())
}
