//! Randomized experiments against the simulated tracker: one run's logs, then
//! twenty runs with targeting on and off tabulated per statistic.
//!
//!     cargo run --release --example ad_experiment

use flowexp::experiment::{power_eval, run_experiment, ExperimentConfig, StatChoice, TrackerSpec};

fn main() -> flowexp::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let config = ExperimentConfig::load(format!("{data}/experiment.toml"))?;
    let tracker = TrackerSpec::load(format!("{data}/tracker.toml"))?;

    let run = run_experiment(&config, &tracker, config.seed)?;
    for u in run.assignment.units_by_index() {
        let log = &run.logs[u];
        println!("slot {} unit {u} {:>4}: {} ads", log.index, log.treatment, log.ad_count());
    }
    let mut rows = Vec::new();
    run.write_csv(&mut rows, 0)?;
    println!("{} response rows written for run 0\n", rows.iter().filter(|&&b| b == b'\n').count() - 1);

    let report = power_eval(&config, &tracker, &StatChoice::ALL, config.runs)?;
    println!("targeting on");
    print!("{}", report.table.render_text(Some(0.05))?);

    let mut off = tracker.clone();
    off.targeting.enabled = false;
    let report = power_eval(&config, &off, &StatChoice::ALL, config.runs)?;
    println!("\ntargeting off");
    print!("{}", report.table.render_text(None)?);
    Ok(())
}
