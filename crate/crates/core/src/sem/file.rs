//! TOML SEM files.
//!
//! ```toml
//! [[variable]]
//! name = "X"
//! range = 2
//! marginal = ["1/2", "1/2"]
//!
//! [[variable]]
//! name = "Y"
//! range = 2
//! parents = ["X"]
//! table = [["1", "0"], ["1/4", "3/4"]]
//! ```
//!
//! A variable with `marginal` is exogenous; one with `table` is endogenous,
//! with one row per parent valuation (first parent most significant).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::prob::{format_rational, parse_rational, Distribution};

use super::model::{Equation, Sem, VarId, Variable};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SemDoc {
    variable: Vec<VariableDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    range: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    marginal: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    parents: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<Vec<String>>>,
}

fn parse_row(row: &[String], range: usize, name: &str) -> Result<Distribution<usize>> {
    if row.len() != range {
        return Err(invalid(format!("'{name}' rows need {range} entries, got {}", row.len())));
    }
    let masses = row.iter().enumerate().map(|(v, p)| Ok((v, parse_rational(p)?))).collect::<Result<Vec<_>>>()?;
    Distribution::new(masses).map_err(|e| invalid(format!("'{name}': {e}")))
}

fn render_row(d: &Distribution<usize>, range: usize) -> Vec<String> {
    (0..range).map(|v| format_rational(&d.prob(&v))).collect()
}

impl Sem {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: SemDoc = toml::from_str(text)?;
        let index = |name: &str| -> Result<VarId> {
            doc.variable
                .iter()
                .position(|v| v.name == name)
                .map(VarId)
                .ok_or_else(|| invalid(format!("unknown parent '{name}'")))
        };
        let mut vars = Vec::new();
        let mut eqs = Vec::new();
        for v in &doc.variable {
            let eq = match (&v.marginal, &v.table) {
                (Some(m), None) => {
                    if !v.parents.is_empty() {
                        return Err(invalid(format!("exogenous '{}' cannot have parents", v.name)));
                    }
                    Equation::Exogenous(parse_row(m, v.range, &v.name)?)
                }
                (None, Some(rows)) => Equation::Endogenous {
                    parents: v.parents.iter().map(|p| index(p)).collect::<Result<_>>()?,
                    table: rows.iter().map(|r| parse_row(r, v.range, &v.name)).collect::<Result<_>>()?,
                },
                _ => return Err(invalid(format!("'{}' needs exactly one of marginal or table", v.name))),
            };
            vars.push(Variable { name: v.name.clone(), range: v.range });
            eqs.push(eq);
        }
        Sem::new(vars, eqs)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let variable = self
            .var_ids()
            .map(|v| {
                let var = self.variable(v);
                match self.equation(v) {
                    Equation::Exogenous(d) => VariableDoc {
                        name: var.name.clone(),
                        range: var.range,
                        marginal: Some(render_row(d, var.range)),
                        parents: vec![],
                        table: None,
                    },
                    Equation::Endogenous { parents, table } => VariableDoc {
                        name: var.name.clone(),
                        range: var.range,
                        marginal: None,
                        parents: parents.iter().map(|p| self.variable(*p).name.clone()).collect(),
                        table: Some(table.iter().map(|d| render_row(d, var.range)).collect()),
                    },
                }
            })
            .collect();
        Ok(toml::to_string(&SemDoc { variable })?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}
