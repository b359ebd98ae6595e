//! Bounded noninterference checks on the machines in `examples/data`.
//!
//!     cargo run --example noninterference_check

use flowexp::adversary::witness_to_toml;
use flowexp::machine::{catalog, CheckOptions, InputPair, MooreMachine, NiVerdict};
use flowexp::prob::{format_rational, Rational};

fn main() -> flowexp::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    for name in ["constant", "echo", "noisy_leak"] {
        let m = MooreMachine::<Rational>::load(format!("{data}/{name}.toml"))?;
        match m.check_noninterference(CheckOptions::new(3))? {
            NiVerdict::NoninterferingUpTo(h) => println!("{name}: noninterfering up to {h} inputs"),
            NiVerdict::Interference(w) => {
                println!("{name}: interference, witness");
                print!("{}", witness_to_toml(&w, m.channels())?);
            }
        }
    }

    // The noisy leak only shows up in distributions: both high inputs can
    // produce either low output.
    let m = catalog::noisy_leak_machine();
    for hi in 0..2 {
        let d = m.low_output_dist(&[InputPair::new(hi, 0)])?;
        let shown: Vec<String> = d.iter().map(|(lo, p)| format!("{lo:?}: {}", format_rational(p))).collect();
        println!("hi = {hi}: {}", shown.join(", "));
    }

    // A coin-flipping machine is probabilistic, so the trace-by-trace check refuses it.
    let coin = catalog::coin_machine();
    match coin.check_noninterference(CheckOptions::new(2).deterministic()) {
        Err(e) => println!("coin, deterministic mode: {e}"),
        Ok(v) => println!("coin: {v:?}"),
    }
    Ok(())
}
