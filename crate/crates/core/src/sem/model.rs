use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Signed};

use crate::error::{invalid, Error, Result};
use crate::prob::{Distribution, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A discrete variable with values `0..range`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub range: usize,
}

/// How a variable gets its value.
#[derive(Clone, Debug, PartialEq)]
pub enum Equation {
    /// Exogenous variable with a fixed marginal.
    Exogenous(Distribution<usize>),
    /// Randomized structural function as a conditional probability table.
    /// Rows are indexed by the parents' values in mixed radix, first parent
    /// most significant.
    Endogenous { parents: Vec<VarId>, table: Vec<Distribution<usize>> },
}

impl Equation {
    pub fn parents(&self) -> &[VarId] {
        match self {
            Equation::Exogenous(_) => &[],
            Equation::Endogenous { parents, .. } => parents,
        }
    }

    pub fn is_exogenous(&self) -> bool {
        matches!(self, Equation::Exogenous(_))
    }
}

/// Variable-to-value map. Values index into the variable's range.
pub type Assignment = BTreeMap<VarId, usize>;

/// Variables replaced by constants, `M[X := x]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Intervention {
    pub assignments: Assignment,
}

impl Intervention {
    pub fn new() -> Self {
        Intervention::default()
    }

    pub fn set(mut self, var: VarId, value: usize) -> Self {
        self.assignments.insert(var, value);
        self
    }

    pub fn from_pairs(vars: &[VarId], values: &[usize]) -> Self {
        Intervention { assignments: vars.iter().copied().zip(values.iter().copied()).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Recursive probabilistic structural equation model with finite ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct Sem {
    vars: Vec<Variable>,
    eqs: Vec<Equation>,
    order: Vec<VarId>,
    by_name: HashMap<String, VarId>,
}

impl Sem {
    /// Validates ranges, tables and acyclicity and fixes a topological order.
    pub fn new(vars: Vec<Variable>, eqs: Vec<Equation>) -> Result<Self> {
        if vars.len() != eqs.len() {
            return Err(invalid("one equation per variable is required"));
        }
        let mut by_name = HashMap::new();
        for (i, v) in vars.iter().enumerate() {
            if v.range == 0 {
                return Err(Error::InvalidModel(format!("variable '{}' has an empty range", v.name)));
            }
            if by_name.insert(v.name.clone(), VarId(i)).is_some() {
                return Err(Error::InvalidModel(format!("duplicate variable '{}'", v.name)));
            }
        }
        for (i, eq) in eqs.iter().enumerate() {
            let v = &vars[i];
            let check_dist = |d: &Distribution<usize>, row: usize| -> Result<()> {
                if d.support().any(|&x| x >= v.range) {
                    return Err(Error::InvalidModel(format!("'{}' row {row} leaves the range", v.name)));
                }
                if d.iter().any(|(_, p)| p.is_negative()) || !d.total().is_one() {
                    return Err(Error::InvalidModel(format!("'{}' row {row} is not a distribution", v.name)));
                }
                Ok(())
            };
            match eq {
                Equation::Exogenous(d) => check_dist(d, 0)?,
                Equation::Endogenous { parents, table } => {
                    let mut rows = 1usize;
                    for (pi, p) in parents.iter().enumerate() {
                        let pv = vars
                            .get(p.0)
                            .ok_or_else(|| Error::InvalidModel(format!("'{}' has an unknown parent", v.name)))?;
                        if parents[..pi].contains(p) {
                            return Err(Error::InvalidModel(format!("'{}' repeats parent '{}'", v.name, pv.name)));
                        }
                        rows = rows
                            .checked_mul(pv.range)
                            .ok_or_else(|| Error::InvalidModel(format!("'{}' table too large", v.name)))?;
                    }
                    if table.len() != rows {
                        return Err(Error::InvalidModel(format!(
                            "'{}' needs {rows} table rows, has {}",
                            v.name,
                            table.len()
                        )));
                    }
                    for (r, d) in table.iter().enumerate() {
                        check_dist(d, r)?;
                    }
                }
            }
        }
        let order = topological_order(&vars, &eqs)?;
        Ok(Sem { vars, eqs, order, by_name })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn equation(&self, v: VarId) -> &Equation {
        &self.eqs[v.0]
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len()).map(VarId)
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        self.eqs[v.0].parents()
    }

    pub fn is_exogenous(&self, v: VarId) -> bool {
        self.eqs[v.0].is_exogenous()
    }

    /// Topological order: every parent precedes its children.
    pub fn order(&self) -> &[VarId] {
        &self.order
    }

    pub(crate) fn check_var(&self, v: VarId) -> Result<()> {
        if v.0 < self.vars.len() {
            Ok(())
        } else {
            Err(invalid(format!("unknown variable {v}")))
        }
    }

    pub(crate) fn check_value(&self, v: VarId, value: usize) -> Result<()> {
        self.check_var(v)?;
        if value < self.vars[v.0].range {
            Ok(())
        } else {
            Err(invalid(format!("value {value} outside the range of '{}'", self.vars[v.0].name)))
        }
    }

    /// `𝒫(V = value | par(V) = values in assignment)`. Parents must be assigned.
    pub(crate) fn factor(&self, v: VarId, value: usize, values: &[Option<usize>]) -> Rational {
        match &self.eqs[v.0] {
            Equation::Exogenous(d) => d.prob(&value),
            Equation::Endogenous { parents, table } => {
                let mut row = 0;
                for p in parents {
                    row = row * self.vars[p.0].range + values[p.0].expect("parents precede children");
                }
                table[row].prob(&value)
            }
        }
    }

    pub(crate) fn replace_equation(&mut self, v: VarId, eq: Equation) {
        self.eqs[v.0] = eq;
    }
}

fn topological_order(vars: &[Variable], eqs: &[Equation]) -> Result<Vec<VarId>> {
    let n = vars.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for (i, eq) in eqs.iter().enumerate() {
        for p in eq.parents() {
            indegree[i] += 1;
            children[p.0].push(i);
        }
    }
    // Kahn's algorithm, always taking the lowest ready index so the order
    // follows declaration order where the graph allows.
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(VarId(i));
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() != n {
        let stuck: Vec<&str> = (0..n).filter(|&i| indegree[i] > 0).map(|i| vars[i].name.as_str()).collect();
        return Err(Error::InvalidModel(format!("cyclic parent graph through {}", stuck.join(", "))));
    }
    Ok(order)
}

/// Incremental construction where parents are always declared first.
#[derive(Debug, Default)]
pub struct SemBuilder {
    vars: Vec<Variable>,
    eqs: Vec<Equation>,
}

impl SemBuilder {
    pub fn new() -> Self {
        SemBuilder::default()
    }

    pub fn exogenous(&mut self, name: impl Into<String>, range: usize, marginal: Distribution<usize>) -> VarId {
        self.push(name.into(), range, Equation::Exogenous(marginal))
    }

    pub fn endogenous(
        &mut self,
        name: impl Into<String>,
        range: usize,
        parents: Vec<VarId>,
        table: Vec<Distribution<usize>>,
    ) -> VarId {
        self.push(name.into(), range, Equation::Endogenous { parents, table })
    }

    /// Endogenous variable whose table row for parent values `pv` is `f(pv)`.
    pub fn function(
        &mut self,
        name: impl Into<String>,
        range: usize,
        parents: Vec<VarId>,
        mut f: impl FnMut(&[usize]) -> Distribution<usize>,
    ) -> VarId {
        let ranges: Vec<usize> = parents.iter().map(|p| self.vars[p.0].range).collect();
        let rows: usize = ranges.iter().product();
        let mut table = Vec::with_capacity(rows);
        let mut pv = vec![0usize; parents.len()];
        for r in 0..rows {
            let mut rem = r;
            for (slot, &k) in pv.iter_mut().zip(&ranges).rev() {
                *slot = rem % k;
                rem /= k;
            }
            table.push(f(&pv));
        }
        self.endogenous(name, range, parents, table)
    }

    fn push(&mut self, name: String, range: usize, eq: Equation) -> VarId {
        self.vars.push(Variable { name, range });
        self.eqs.push(eq);
        VarId(self.vars.len() - 1)
    }

    pub fn build(self) -> Result<Sem> {
        Sem::new(self.vars, self.eqs)
    }
}

/// Uniform distribution over `0..range`.
pub fn uniform(range: usize) -> Distribution<usize> {
    Distribution::from_masses((0..range).map(|v| (v, Rational::new(1.into(), (range as i64).into()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ratio;

    #[test]
    fn detects_cycles() {
        let vars = vec![Variable { name: "A".into(), range: 2 }, Variable { name: "B".into(), range: 2 }];
        let copy = |_: ()| vec![Distribution::point(0), Distribution::point(1)];
        let eqs = vec![
            Equation::Endogenous { parents: vec![VarId(1)], table: copy(()) },
            Equation::Endogenous { parents: vec![VarId(0)], table: copy(()) },
        ];
        let err = Sem::new(vars, eqs).unwrap_err();
        assert!(err.to_string().contains("cyclic"));
    }

    #[test]
    fn order_respects_edges() {
        let vars = vec![
            Variable { name: "Y".into(), range: 2 },
            Variable { name: "X".into(), range: 2 },
        ];
        let eqs = vec![
            Equation::Endogenous { parents: vec![VarId(1)], table: vec![Distribution::point(0), Distribution::point(1)] },
            Equation::Exogenous(uniform(2)),
        ];
        let sem = Sem::new(vars, eqs).unwrap();
        assert_eq!(sem.order(), &[VarId(1), VarId(0)]);
    }

    #[test]
    fn table_shape_is_checked() {
        let mut b = SemBuilder::new();
        let x = b.exogenous("X", 2, uniform(2));
        b.endogenous("Y", 2, vec![x], vec![Distribution::point(0)]);
        assert!(b.build().is_err());

        let mut b = SemBuilder::new();
        b.exogenous("X", 2, Distribution::from_masses([(0, ratio(1, 2))]));
        assert!(b.build().is_err());
    }

    #[test]
    fn function_rows_are_mixed_radix() {
        let mut b = SemBuilder::new();
        let a = b.exogenous("A", 2, uniform(2));
        let c = b.exogenous("C", 3, uniform(3));
        let y = b.function("Y", 6, vec![a, c], |pv| Distribution::point(pv[0] * 3 + pv[1]));
        let sem = b.build().unwrap();
        match sem.equation(y) {
            Equation::Endogenous { table, .. } => {
                for (r, d) in table.iter().enumerate() {
                    assert_eq!(d.as_point(), Some(&r));
                }
            }
            _ => unreachable!(),
        }
    }
}
