//! Interference in a machine coincides with an effect of high inputs on low
//! outputs in the SEM compiled from it. Checked on one machine, then on every
//! deterministic two-state machine over binary alphabets.
//!
//!     cargo run --release --example theorem3_sweep

use std::time::Instant;

use flowexp::machine::catalog;
use flowexp::sem::{check_theorem3, compile_machine, theorem3_sweep, Environment, DEFAULT_EFFECT_BUDGET};

fn main() -> flowexp::Result<()> {
    let m = catalog::echo_machine();
    let (sem, binding) = compile_machine(&m, 2, &Environment::default())?;
    println!("echo machine at horizon 2 compiles to {} variables", sem.len());
    println!("low outputs: {:?}", binding.lo_out.iter().map(|v| &sem.variable(*v).name).collect::<Vec<_>>());
    for row in check_theorem3(&m, 2, DEFAULT_EFFECT_BUDGET)?.rows {
        println!(
            "length {}: interference {}, effect {}",
            row.length,
            row.interference,
            row.has_effect()
        );
    }

    let t = Instant::now();
    let r = theorem3_sweep(2, 2, 2, DEFAULT_EFFECT_BUDGET)?;
    println!(
        "{} machines, {} interfering, {} agree, {} disagree ({:.1?})",
        r.machines,
        r.interfering,
        r.agreements,
        r.disagreements.len(),
        t.elapsed()
    );
    Ok(())
}
