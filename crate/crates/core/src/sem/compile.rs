//! Structural equation model of a Moore machine unrolled over a horizon.
//!
//! | variable | parents | equation |
//! |---|---|---|
//! | `HU_j`, `LU_j` (j = 1..t) | none | exogenous user behaviour |
//! | `HI_j`, `LI_j` (j = 1..t) | `HU_j`, `LU_j` respectively | copy of the user variable |
//! | `S_0` | none | `δ(s0)` |
//! | `S_j` (j = 1..t) | `S_{j-1}`, `HI_j`, `LI_j` | `τ(s, ⟨hi, li⟩)` |
//! | `HO_j`, `LO_j` (j = 0..t) | `S_j` | `δ` of the high / low part of `σ(s)` |
//!
//! The input read at step `j` moves the machine from `S_{j-1}` to `S_j`, so
//! `LO_0..k` are the `k + 1` low outputs seen after `k` inputs.

use rayon::prelude::*;

use crate::error::{check_budget, invalid, Error, Result};
use crate::machine::{enumeration_size, InputPair, LowSeq, MooreMachine, OutputPair, StateId, TraceDistribution};
use crate::prob::{Distribution, Rational};

use super::effect::{valuation, EffectVerdict};
use super::model::{uniform, Intervention, Sem, SemBuilder, VarId};

/// Marginals of the exogenous user variables. `None` means uniform.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Environment {
    pub hi_user: Option<Distribution<usize>>,
    pub lo_user: Option<Distribution<usize>>,
}

/// Where each variable family of a compiled machine lives in the SEM.
/// Input and user families are indexed from step 1, so `hi_in[0]` is `HI_1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineSemBinding {
    pub horizon: usize,
    pub state: Vec<VarId>,
    pub hi_in: Vec<VarId>,
    pub lo_in: Vec<VarId>,
    pub hi_out: Vec<VarId>,
    pub lo_out: Vec<VarId>,
    pub hi_user: Vec<VarId>,
    pub lo_user: Vec<VarId>,
}

impl MachineSemBinding {
    /// `do(I^{1:k} := ī)` for `k = |ī| ≤ horizon`.
    pub fn input_intervention(&self, inputs: &[InputPair]) -> Result<Intervention> {
        if inputs.len() > self.horizon {
            return Err(invalid(format!("{} inputs exceed the horizon {}", inputs.len(), self.horizon)));
        }
        let mut iv = Intervention::new();
        for (j, i) in inputs.iter().enumerate() {
            iv = iv.set(self.hi_in[j], i.hi).set(self.lo_in[j], i.lo);
        }
        Ok(iv)
    }
}

pub fn compile_machine(machine: &MooreMachine<Rational>, horizon: usize, env: &Environment) -> Result<(Sem, MachineSemBinding)> {
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let ch = machine.channels();
    let (nh, nl) = (ch.hi_in.len(), ch.lo_in.len());
    let hu_marginal = env.hi_user.clone().unwrap_or_else(|| uniform(nh));
    let lu_marginal = env.lo_user.clone().unwrap_or_else(|| uniform(nl));
    let n_states = machine.state_count();

    let mut b = SemBuilder::new();
    let mut binding = MachineSemBinding {
        horizon,
        state: Vec::new(),
        hi_in: Vec::new(),
        lo_in: Vec::new(),
        hi_out: Vec::new(),
        lo_out: Vec::new(),
        hi_user: Vec::new(),
        lo_user: Vec::new(),
    };
    let outputs = |b: &mut SemBuilder, binding: &mut MachineSemBinding, j: usize, s: VarId| {
        let ho = b.function(format!("HO_{j}"), ch.hi_out.len(), vec![s], |pv| {
            Distribution::point(machine.output(StateId(pv[0])).hi)
        });
        let lo = b.function(format!("LO_{j}"), ch.lo_out.len(), vec![s], |pv| {
            Distribution::point(machine.output(StateId(pv[0])).lo)
        });
        binding.hi_out.push(ho);
        binding.lo_out.push(lo);
    };

    let s0 = b.function("S_0", n_states, vec![], |_| Distribution::point(machine.initial().0));
    binding.state.push(s0);
    outputs(&mut b, &mut binding, 0, s0);
    for j in 1..=horizon {
        let hu = b.exogenous(format!("HU_{j}"), nh, hu_marginal.clone());
        let lu = b.exogenous(format!("LU_{j}"), nl, lu_marginal.clone());
        let hi = b.function(format!("HI_{j}"), nh, vec![hu], |pv| Distribution::point(pv[0]));
        let li = b.function(format!("LI_{j}"), nl, vec![lu], |pv| Distribution::point(pv[0]));
        let prev = binding.state[j - 1];
        let s = b.function(format!("S_{j}"), n_states, vec![prev, hi, li], |pv| {
            machine.transition(StateId(pv[0]), InputPair { hi: pv[1], lo: pv[2] }).map(|s| s.0)
        });
        binding.hi_user.push(hu);
        binding.lo_user.push(lu);
        binding.hi_in.push(hi);
        binding.lo_in.push(li);
        binding.state.push(s);
        outputs(&mut b, &mut binding, j, s);
    }
    Ok((b.build()?, binding))
}

/// `P(S_{0..k}, O_{0..k} | do(S_0 := start), do(I^{1:k} := ī))` as a trace
/// distribution, `k = |ī|`.
pub fn interventional_trace(
    sem: &Sem,
    binding: &MachineSemBinding,
    start: StateId,
    inputs: &[InputPair],
) -> Result<TraceDistribution<Rational>> {
    let k = inputs.len();
    let iv = binding.input_intervention(inputs)?;
    let iv = Intervention { assignments: iv.assignments }.set(binding.state[0], start.0);
    let sub = sem.intervene(&iv)?;
    let mut targets = Vec::with_capacity(3 * (k + 1));
    targets.extend_from_slice(&binding.state[..=k]);
    targets.extend_from_slice(&binding.hi_out[..=k]);
    targets.extend_from_slice(&binding.lo_out[..=k]);
    let joint = sub.distribution(&targets)?;
    Ok(joint.map(|v| {
        let states = v[..=k].iter().map(|&s| StateId(s)).collect::<Vec<_>>();
        let outs = (0..=k).map(|j| OutputPair { hi: v[k + 1 + j], lo: v[2 * (k + 1) + j] }).collect::<Vec<_>>();
        (outs, states)
    }))
}

/// `P(LO_{0..k} | do(I^{1:k} := ī))`, `k = |ī|`.
pub fn interventional_low(sem: &Sem, binding: &MachineSemBinding, inputs: &[InputPair]) -> Result<Distribution<LowSeq>> {
    let k = inputs.len();
    let sub = sem.intervene(&binding.input_intervention(inputs)?)?;
    sub.distribution(&binding.lo_out[..=k])
}

/// Verdicts of both procedures for input sequences of one length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theorem3Row {
    pub length: usize,
    /// Brute-force probabilistic interference among sequences of this length.
    pub interference: bool,
    /// First low input sequence `ℓ` under which `HI_{1..k}` affects `LO_{0..k}`.
    pub effect_given: Option<Vec<usize>>,
    pub effect: Option<EffectVerdict>,
}

impl Theorem3Row {
    pub fn has_effect(&self) -> bool {
        self.effect_given.is_some()
    }

    pub fn agrees(&self) -> bool {
        self.interference == self.has_effect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theorem3Report {
    pub horizon: usize,
    pub rows: Vec<Theorem3Row>,
}

impl Theorem3Report {
    pub fn agrees(&self) -> bool {
        self.rows.iter().all(Theorem3Row::agrees)
    }

    pub fn interference(&self) -> bool {
        self.rows.iter().any(|r| r.interference)
    }

    pub fn effect(&self) -> bool {
        self.rows.iter().any(Theorem3Row::has_effect)
    }
}

/// Compares the white-box interference check with the causal-effect check on
/// the compiled model, length by length up to `horizon`.
pub fn check_theorem3(machine: &MooreMachine<Rational>, horizon: usize, budget: u128) -> Result<Theorem3Report> {
    let ch = machine.channels();
    check_budget(enumeration_size(ch.input_count(), horizon), budget)?;
    let (sem, binding) = compile_machine(machine, horizon, &Environment::default())?;
    let mut rows = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        let interference = machine.violation_at_length(k, true)?.is_some();
        let x = &binding.hi_in[..k];
        let y = &binding.lo_out[..=k];
        let lows = (ch.lo_in.len() as u128).pow(k as u32);
        let mut effect_given = None;
        let mut effect = None;
        for li in 0..lows {
            let ell = valuation(li, &vec![ch.lo_in.len(); k]);
            let given = Intervention::from_pairs(&binding.lo_in[..k], &ell);
            let verdict = sem.has_effect(x, y, &given, budget)?;
            if verdict.is_effect() {
                effect_given = Some(ell);
                effect = Some(verdict);
                break;
            }
        }
        rows.push(Theorem3Row { length: k, interference, effect_given, effect });
    }
    Ok(Theorem3Report { horizon, rows })
}

/// Every deterministic machine over numeric alphabets of the given sizes:
/// all transition tables, output tables and initial states.
pub fn deterministic_machines(
    states: usize,
    hi_in: usize,
    lo_in: usize,
    hi_out: usize,
    lo_out: usize,
) -> Result<impl Iterator<Item = MooreMachine<Rational>>> {
    let channels = crate::machine::Channels::numeric(hi_in, lo_in, hi_out, lo_out);
    let n_inputs = channels.input_count();
    let trans_digits = states * n_inputs;
    let n_out = hi_out * lo_out;
    let trans_count = (states as u128).checked_pow(trans_digits as u32);
    let out_count = (n_out as u128).checked_pow(states as u32);
    let total = match (trans_count, out_count) {
        (Some(a), Some(b)) => a.checked_mul(b).and_then(|x| x.checked_mul(states as u128)),
        _ => None,
    }
    .ok_or(Error::BudgetExceeded { required: u128::MAX, budget: u128::MAX })?;
    let (tc, oc) = (trans_count.unwrap(), out_count.unwrap());
    Ok((0..total).map(move |idx| {
        let initial = (idx % states as u128) as usize;
        let rest = idx / states as u128;
        let outs = valuation(rest % oc, &vec![n_out; states]);
        let trans = valuation(rest / oc % tc, &vec![states; trans_digits]);
        MooreMachine::from_fn(
            (0..states).map(|s| format!("s{s}")).collect(),
            StateId(initial),
            channels.clone(),
            |s, i| Distribution::point(StateId(trans[s.0 * n_inputs + i.hi * lo_in + i.lo])),
            |s| OutputPair { hi: outs[s.0] / lo_out, lo: outs[s.0] % lo_out },
        )
        .expect("enumerated machines are well-formed")
    }))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub machines: usize,
    pub agreements: usize,
    pub interfering: usize,
    /// Indices (in enumeration order) of machines whose verdicts differ.
    pub disagreements: Vec<usize>,
}

/// Runs [`check_theorem3`] on every deterministic machine of the given shape.
pub fn theorem3_sweep(states: usize, alphabet: usize, horizon: usize, budget: u128) -> Result<SweepReport> {
    let machines: Vec<_> = deterministic_machines(states, alphabet, alphabet, alphabet, alphabet)?.collect();
    let results: Vec<(bool, bool)> = machines
        .par_iter()
        .map(|m| check_theorem3(m, horizon, budget).map(|r| (r.agrees(), r.interference())))
        .collect::<Result<_>>()?;
    let mut report = SweepReport { machines: results.len(), ..SweepReport::default() };
    for (idx, (agree, interfering)) in results.into_iter().enumerate() {
        if agree {
            report.agreements += 1;
        } else {
            report.disagreements.push(idx);
        }
        if interfering {
            report.interfering += 1;
        }
    }
    Ok(report)
}
