//! Does running alongside other units change what a unit sees? Rounds of one
//! trained unit alone versus with three trained and four idle companions.
//!
//!     cargo run --release --example cross_unit_effects

use flowexp::experiment::{cross_unit_probe, DiversityReport, ExperimentConfig, Targeting, TrackerSpec};

fn main() -> flowexp::Result<()> {
    for coupling in [0.0, 0.5] {
        let tracker = TrackerSpec::demo(Targeting::on(4.0)).with_coupling(coupling);
        println!("coupling {coupling}");
        println!("{}", DiversityReport::header());
        for (seed, rounds) in [(1, 10), (2, 10), (3, 20), (4, 20)] {
            let r = cross_unit_probe(&ExperimentConfig::demo(seed), &tracker, rounds, 3, 4)?;
            println!("{}", r.row());
        }
        println!();
    }
    Ok(())
}
