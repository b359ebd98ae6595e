use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::prob::{Distribution, Rational};

use super::model::{Assignment, Equation, Intervention, Sem, VarId};

impl Sem {
    /// Probability of a full assignment: the product of each variable's
    /// conditional given its parents.
    pub fn joint_prob(&self, full: &Assignment) -> Result<Rational> {
        let values = self.dense(full)?;
        if let Some(missing) = values.iter().position(Option::is_none) {
            return Err(invalid(format!("assignment misses '{}'", self.variables()[missing].name)));
        }
        let mut acc = Rational::one();
        for &v in self.order() {
            acc *= self.factor(v, values[v.0].unwrap(), &values);
            if acc.is_zero() {
                break;
            }
        }
        Ok(acc)
    }

    /// Probability of a partial assignment, summing out every other variable.
    ///
    /// Only ancestors of the assigned variables are enumerated; the rest sum
    /// to one.
    pub fn marginal_prob(&self, partial: &Assignment) -> Result<Rational> {
        let evidence = self.dense(partial)?;
        let scope = self.ancestral_scope(partial.keys().copied());
        let mut total = Rational::zero();
        self.enumerate(&scope, &evidence, |_, p| total += p);
        Ok(total)
    }

    /// Joint distribution of `targets`, keyed by their values in the given order.
    pub fn distribution(&self, targets: &[VarId]) -> Result<Distribution<Vec<usize>>> {
        targets.iter().try_for_each(|&v| self.check_var(v))?;
        let scope = self.ancestral_scope(targets.iter().copied());
        let evidence = vec![None; self.len()];
        let mut masses = Vec::new();
        self.enumerate(&scope, &evidence, |values, p| {
            masses.push((targets.iter().map(|t| values[t.0].unwrap()).collect::<Vec<_>>(), p.clone()));
        });
        Ok(Distribution::from_masses(masses))
    }

    /// `P(targets | given)`, or `None` when `P(given) = 0` leaves it undefined.
    pub fn conditional(&self, targets: &[VarId], given: &Assignment) -> Result<Option<Distribution<Vec<usize>>>> {
        targets.iter().try_for_each(|&v| self.check_var(v))?;
        let evidence = self.dense(given)?;
        let scope = self.ancestral_scope(targets.iter().chain(given.keys()).copied());
        let mut masses = Vec::new();
        let mut total = Rational::zero();
        self.enumerate(&scope, &evidence, |values, p| {
            total += p;
            masses.push((targets.iter().map(|t| values[t.0].unwrap()).collect::<Vec<_>>(), p.clone()));
        });
        if total.is_zero() {
            return Ok(None);
        }
        Ok(Some(Distribution::from_masses(masses.into_iter().map(|(k, p)| (k, p / &total)))))
    }

    /// Sub-model `M[X := x]`: each intervened equation becomes the constant
    /// `X := x` with no parents.
    pub fn intervene(&self, iv: &Intervention) -> Result<Sem> {
        let mut out = self.clone();
        for (&v, &x) in &iv.assignments {
            self.check_value(v, x)?;
            if self.is_exogenous(v) {
                return Err(Error::Unsupported(format!(
                    "cannot intervene on exogenous variable '{}'",
                    self.variable(v).name
                )));
            }
            out.replace_equation(v, Equation::Endogenous { parents: vec![], table: vec![Distribution::point(x)] });
        }
        Ok(out)
    }

    fn dense(&self, a: &Assignment) -> Result<Vec<Option<usize>>> {
        let mut values = vec![None; self.len()];
        for (&v, &x) in a {
            self.check_value(v, x)?;
            values[v.0] = Some(x);
        }
        Ok(values)
    }

    /// The given variables with all their ancestors, in topological order.
    pub(crate) fn ancestral_scope(&self, seeds: impl IntoIterator<Item = VarId>) -> Vec<VarId> {
        let mut keep = vec![false; self.len()];
        let mut stack: Vec<VarId> = seeds.into_iter().collect();
        while let Some(v) = stack.pop() {
            if !keep[v.0] {
                keep[v.0] = true;
                stack.extend_from_slice(self.parents(v));
            }
        }
        self.order().iter().copied().filter(|v| keep[v.0]).collect()
    }

    /// Depth-first sum over all values of `scope` consistent with
    /// `evidence`, skipping branches of probability zero. `visit` sees each
    /// complete valuation of the scope with its probability.
    fn enumerate(&self, scope: &[VarId], evidence: &[Option<usize>], mut visit: impl FnMut(&[Option<usize>], &Rational)) {
        let mut values = evidence.to_vec();
        self.descend(scope, 0, &Rational::one(), &mut values, evidence, &mut visit);
    }

    fn descend(
        &self,
        scope: &[VarId],
        depth: usize,
        acc: &Rational,
        values: &mut Vec<Option<usize>>,
        evidence: &[Option<usize>],
        visit: &mut impl FnMut(&[Option<usize>], &Rational),
    ) {
        let Some(&v) = scope.get(depth) else {
            visit(values, acc);
            return;
        };
        match evidence[v.0] {
            Some(x) => {
                let f = self.factor(v, x, values);
                if !f.is_zero() {
                    self.descend(scope, depth + 1, &(acc * f), values, evidence, visit);
                }
            }
            None => {
                for x in 0..self.variable(v).range {
                    let f = self.factor(v, x, values);
                    if f.is_zero() {
                        continue;
                    }
                    values[v.0] = Some(x);
                    self.descend(scope, depth + 1, &(acc * f), values, evidence, visit);
                }
                values[v.0] = None;
            }
        }
    }
}
