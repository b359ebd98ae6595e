//! Command-line front end. Exit codes: 0 for success or a negative verdict,
//! 2 for a positive finding, 1 for errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::adversary::{build_mimic_interfering, build_mimic_noninterfering, witness_to_toml, ObservedTrace};
use crate::error::{invalid, Error, Result};
use crate::experiment::{power_eval, run_experiment, ExperimentConfig, StatChoice, Targeting, TrackerSpec, CAR_KEYWORDS};
use crate::machine::{CheckOptions, MooreMachine, NiVerdict, DEFAULT_BUDGET};
use crate::prob::Rational;
use crate::sem::{theorem3_sweep, EffectVerdict, Intervention, Sem, DEFAULT_EFFECT_BUDGET};
use crate::stats::{
    chi2_2x2, keyword_table, permutation_test, read_responses, stat_kw, stat_nonce, stat_prc, stat_sim, Method,
    PValueTable, PermutationOptions, ResponseVector, Tail, TestStatistic, DEFAULT_EXACT_BUDGET, DEFAULT_MC_SAMPLES,
};

#[derive(Debug, Parser)]
#[command(name = "flowexp", version, about = "Information-flow experiments on machines, causal models and ad trackers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MimicKind {
    Ni,
    Int,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PtestStat {
    Sim,
    Kw,
    Prc,
    Nonce,
    Chi2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Auto,
    Exact,
    Partition,
    MonteCarlo,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Exact => Method::Exact,
            MethodArg::Partition => Method::Partition,
            MethodArg::MonteCarlo => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TailArg {
    Leq,
    Geq,
    TwoSided,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Self {
        match t {
            TailArg::Leq => Tail::Leq,
            TailArg::Geq => Tail::Geq,
            TailArg::TwoSided => Tail::TwoSided,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bounded noninterference check of a machine file.
    CheckNi {
        machine: PathBuf,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
        /// Compare low output distributions (the default).
        #[arg(long, conflicts_with = "deterministic")]
        probabilistic: bool,
        /// Compare single traces of a deterministic machine.
        #[arg(long)]
        deterministic: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        /// Also write the witness here.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Build a machine that reproduces an observed trace.
    Mimic {
        trace: PathBuf,
        #[arg(long, value_enum)]
        kind: MimicKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Does a set of variables have an effect on another in a SEM file?
    SemEffect {
        sem: PathBuf,
        /// Comma-separated factor names.
        #[arg(long, value_delimiter = ',', required = true)]
        factors: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        response: Vec<String>,
        /// Interventions held fixed, as NAME=VALUE.
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_EFFECT_BUDGET)]
        budget: u128,
    },
    /// Compare interference and compiled-SEM effects over all small deterministic machines.
    Theorem3Sweep {
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        alphabet: usize,
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        #[arg(long, default_value_t = DEFAULT_EFFECT_BUDGET)]
        budget: u128,
    },
    /// Permutation test (or χ²) on a response data file, one row per run.
    Ptest {
        data: PathBuf,
        #[arg(long, value_enum)]
        stat: PtestStat,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "leq")]
        tail: TailArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
        budget: u128,
        /// One keyword per line; `#` starts a comment.
        #[arg(long)]
        keywords_file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        keywords: Vec<String>,
        #[arg(long)]
        nonce: Option<String>,
        /// Experimental group size, when both groups share a label.
        #[arg(long)]
        n: Option<usize>,
        /// Only this run.
        #[arg(long)]
        run: Option<usize>,
        /// Apply the continuity correction to χ².
        #[arg(long)]
        yates: bool,
    },
    /// Run one experiment and write its response rows.
    Simulate {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the experiment and tabulate p-values per statistic.
    Power {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "sim,kw,prc,chi2")]
        stats: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Render a stored p-value table.
    Report {
        table: PathBuf,
        /// Mark entries significant under Benjamini–Hochberg at this rate.
        #[arg(long)]
        fdr: Option<f64>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, clap::Args)]
pub struct Setup {
    /// Experiment configuration; defaults to the ten-unit car demo.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Tracker specification; defaults to the demo inventory.
    #[arg(long)]
    tracker: Option<PathBuf>,
    /// Disable targeting in the tracker.
    #[arg(long)]
    no_targeting: bool,
}

impl Setup {
    fn paths(&self) -> Vec<&Path> {
        self.config.iter().chain(&self.tracker).map(PathBuf::as_path).collect()
    }

    fn load(&self) -> Result<(ExperimentConfig, TrackerSpec)> {
        let config = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::demo(2014),
        };
        let mut tracker = match &self.tracker {
            Some(p) => TrackerSpec::load(p)?,
            None => TrackerSpec::demo(Targeting::on(4.0)),
        };
        if self.no_targeting {
            tracker.targeting.enabled = false;
        }
        Ok((config, tracker))
    }
}

impl Command {
    fn input_paths(&self) -> Vec<&Path> {
        match self {
            Command::CheckNi { machine, .. } => vec![machine],
            Command::Mimic { trace, .. } => vec![trace],
            Command::SemEffect { sem, .. } => vec![sem],
            Command::Theorem3Sweep { .. } => vec![],
            Command::Ptest { data, keywords_file, .. } => {
                std::iter::once(data.as_path()).chain(keywords_file.as_deref()).collect()
            }
            Command::Simulate { setup, .. } | Command::Power { setup, .. } => setup.paths(),
            Command::Report { table, .. } => vec![table],
        }
    }
}

/// Parses `args` (program name first) and executes the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<i32> {
    if let Some(p) = command.input_paths().into_iter().find(|p| !p.is_file()) {
        return Err(invalid(format!("no such file: {}", p.display())));
    }
    match command {
        Command::CheckNi { machine, horizon, deterministic, budget, witness_out, .. } => {
            let m = MooreMachine::<Rational>::load(machine)?;
            let mut opts = CheckOptions::new(*horizon).with_budget(*budget);
            if *deterministic {
                opts = opts.deterministic();
            }
            match m.check_noninterference(opts)? {
                NiVerdict::NoninterferingUpTo(h) => {
                    writeln!(out, "noninterfering up to horizon {h}")?;
                    Ok(0)
                }
                NiVerdict::Interference(w) => {
                    let text = witness_to_toml(&w, m.channels())?;
                    writeln!(out, "interference")?;
                    write!(out, "{text}")?;
                    if let Some(p) = witness_out {
                        std::fs::write(p, &text)?;
                    }
                    Ok(2)
                }
            }
        }
        Command::Mimic { trace, kind, out: dest } => {
            let t = ObservedTrace::load(trace)?;
            let machine = match kind {
                MimicKind::Ni => build_mimic_noninterfering(&t),
                MimicKind::Int => build_mimic_interfering(&t)?,
            };
            let text = machine.to_toml_string()?;
            match dest {
                Some(p) => std::fs::write(p, text)?,
                None => write!(out, "{text}")?,
            }
            Ok(0)
        }
        Command::SemEffect { sem, factors, response, given, budget } => {
            let sem = Sem::load(sem)?;
            let lookup = |name: &str| sem.var(name).ok_or_else(|| invalid(format!("unknown variable '{name}'")));
            let fs = factors.iter().map(|n| lookup(n)).collect::<Result<Vec<_>>>()?;
            let rs = response.iter().map(|n| lookup(n)).collect::<Result<Vec<_>>>()?;
            let mut iv = Intervention::new();
            for g in given {
                let (name, value) = g.split_once('=').ok_or_else(|| invalid(format!("expected NAME=VALUE, got '{g}'")))?;
                let value = value.trim().parse().map_err(|_| invalid(format!("bad value in '{g}'")))?;
                iv = iv.set(lookup(name.trim())?, value);
            }
            match sem.has_effect(&fs, &rs, &iv, *budget)? {
                EffectVerdict::NoEffect => {
                    writeln!(out, "no effect")?;
                    Ok(0)
                }
                EffectVerdict::Effect { x1, x2 } => {
                    writeln!(out, "effect")?;
                    writeln!(out, "x1 = {x1:?}")?;
                    writeln!(out, "x2 = {x2:?}")?;
                    Ok(2)
                }
            }
        }
        Command::Theorem3Sweep { states, alphabet, horizon, budget } => {
            let r = theorem3_sweep(*states, *alphabet, *horizon, *budget)?;
            writeln!(out, "machines       {}", r.machines)?;
            writeln!(out, "agreements     {}", r.agreements)?;
            writeln!(out, "interfering    {}", r.interfering)?;
            writeln!(out, "disagreements  {}", r.disagreements.len())?;
            Ok(if r.disagreements.is_empty() { 0 } else { 2 })
        }
        Command::Ptest {
            data,
            stat,
            method,
            tail,
            seed,
            samples,
            budget,
            keywords_file,
            keywords,
            nonce,
            n,
            run,
            yates,
        } => {
            let runs = read_responses(std::fs::File::open(data)?, *n)?;
            let mut kws = keywords.clone();
            if let Some(p) = keywords_file {
                kws.extend(read_keywords(p)?);
            }
            let opts = PermutationOptions { tail: (*tail).into(), method: (*method).into(), seed: *seed, budget: *budget, mc_samples: *samples };
            writeln!(out, "run  statistic  p-value  method  comparisons")?;
            for (r, y) in &runs {
                if run.is_some_and(|want| want != *r) {
                    continue;
                }
                let line = ptest_row(*stat, y, &kws, nonce.as_deref(), &opts, *yates)?;
                writeln!(out, "{r}  {line}")?;
            }
            Ok(0)
        }
        Command::Simulate { setup, seed, out: dest } => {
            let (config, tracker) = setup.load()?;
            let run = run_experiment(&config, &tracker, seed.unwrap_or(config.seed))?;
            let mut buf = Vec::new();
            run.write_csv(&mut buf, 0)?;
            match dest {
                Some(p) => std::fs::write(p, &buf)?,
                None => out.write_all(&buf)?,
            }
            match &run.status {
                crate::experiment::RunStatus::Completed => Ok(0),
                crate::experiment::RunStatus::Failed { tick, reason } => {
                    Err(Error::TrackerFault(format!("run failed at tick {tick} ({reason}); partial logs written")))
                }
            }
        }
        Command::Power { setup, runs, stats, csv, json } => {
            let (config, tracker) = setup.load()?;
            let choices = stats.iter().map(|s| StatChoice::parse(s.trim())).collect::<Result<Vec<_>>>()?;
            let report = power_eval(&config, &tracker, &choices, runs.unwrap_or(config.runs))?;
            write!(out, "{}", report.table.render_text(None)?)?;
            for (set, note) in &report.failures {
                writeln!(out, "data set {set}: {note}")?;
            }
            if let Some(p) = csv {
                report.table.write_csv(std::fs::File::create(p)?)?;
            }
            if let Some(p) = json {
                std::fs::write(p, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(0)
        }
        Command::Report { table, fdr, json } => {
            let t = PValueTable::read_csv(std::fs::File::open(table)?)?;
            if *json {
                if t.rows.is_empty() {
                    return Err(invalid("p-value table is empty"));
                }
                writeln!(out, "{}", t.to_json()?)?;
            } else {
                write!(out, "{}", t.render_text(*fdr)?)?;
            }
            Ok(0)
        }
    }
}

fn read_keywords(path: &Path) -> Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

fn need_keywords(kws: &[String]) -> Result<Vec<String>> {
    if kws.is_empty() {
        return Err(invalid(format!("--keywords or --keywords-file is required (for example {})", CAR_KEYWORDS.join(","))));
    }
    Ok(kws.to_vec())
}

fn ptest_row(
    stat: PtestStat,
    y: &ResponseVector,
    kws: &[String],
    nonce: Option<&str>,
    opts: &PermutationOptions,
    yates: bool,
) -> Result<String> {
    let statistic: Box<dyn TestStatistic> = match stat {
        PtestStat::Chi2 => {
            let r = chi2_2x2(keyword_table(y, &need_keywords(kws)?)?, yates)?;
            return Ok(format!("chi2={:.6}  {:e}  asymptotic  -", r.statistic, r.p_value));
        }
        PtestStat::Sim => Box::new(stat_sim()),
        PtestStat::Kw => Box::new(stat_kw(&need_keywords(kws)?)?),
        PtestStat::Prc => {
            let map = std::collections::BTreeMap::from([(y.labels.0.clone(), need_keywords(kws)?)]);
            Box::new(stat_prc(map, None)?)
        }
        PtestStat::Nonce => Box::new(stat_nonce(nonce.ok_or_else(|| invalid("--nonce is required"))?)?),
    };
    let r = permutation_test(statistic.as_ref(), y, opts)?;
    let method = serde_json::to_value(r.method)?.as_str().unwrap_or_default().to_string();
    let mut line = format!("{}={:.6}  {:.6}  {method}  {}", statistic.name(), r.observed, r.p_value, r.comparisons);
    if let Some(se) = r.mc_stderr {
        line.push_str(&format!("  stderr={se:.6}"));
    }
    Ok(line)
}
