//! Discrete structural equation models, interventions and the
//! machine-to-model compiler.

mod compile;
mod effect;
mod file;
mod infer;
mod model;

pub use compile::{
    check_theorem3, compile_machine, deterministic_machines, interventional_low, interventional_trace,
    theorem3_sweep, Environment, MachineSemBinding, SweepReport, Theorem3Report, Theorem3Row,
};
pub use effect::{EffectVerdict, DEFAULT_EFFECT_BUDGET};
pub use model::{uniform, Assignment, Equation, Intervention, Sem, SemBuilder, VarId, Variable};
