//! Exact linear feasibility: phase-1 simplex over rationals with Bland's rule.
//!
//! Problems have the form `A v = b` with a per-variable sign flag. Free
//! variables are split as `v = v+ - v-` internally. The solver returns
//! either a witness or a Farkas functional `y` with `yᵀA >= 0` on the
//! nonnegative columns, `yᵀA = 0` on the free ones, and `yᵀb < 0`.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::certificate::FeasibilityCertificate;
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("row {row} has {len} coefficients, expected {expected}")]
    DimensionMismatch { row: usize, len: usize, expected: usize },
    #[error("sign flags cover {len} variables, expected {expected}")]
    SignFlagMismatch { len: usize, expected: usize },
}

/// One equality row, stored sparsely as `(column, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFeasibilityProblem {
    variable_count: usize,
    rows: Vec<Row>,
    nonnegative: Vec<bool>,
}

impl LinearFeasibilityProblem {
    /// Empty problem; all variables are nonnegative by default.
    pub fn new(variable_count: usize) -> Self {
        Self {
            variable_count,
            rows: Vec::new(),
            nonnegative: vec![true; variable_count],
        }
    }

    /// Dense constructor used by tests and small callers.
    pub fn from_dense(
        variable_count: usize,
        equalities: Vec<(Vec<Rational>, Rational)>,
        nonnegative: Option<Vec<bool>>,
    ) -> Result<Self, LpError> {
        let mut p = Self::new(variable_count);
        if let Some(flags) = nonnegative {
            if flags.len() != variable_count {
                return Err(LpError::SignFlagMismatch {
                    len: flags.len(),
                    expected: variable_count,
                });
            }
            p.nonnegative = flags;
        }
        for (i, (coeffs, rhs)) in equalities.into_iter().enumerate() {
            if coeffs.len() != variable_count {
                return Err(LpError::DimensionMismatch {
                    row: i,
                    len: coeffs.len(),
                    expected: variable_count,
                });
            }
            let sparse = coeffs
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .collect();
            p.rows.push(Row { coeffs: sparse, rhs });
        }
        Ok(p)
    }

    /// Appends a sparse row; repeated columns are summed.
    pub fn push_row(&mut self, coeffs: impl IntoIterator<Item = (usize, Rational)>, rhs: Rational) -> Result<usize, LpError> {
        let mut raw: Vec<(usize, Rational)> = coeffs.into_iter().collect();
        if let Some((j, _)) = raw.iter().find(|(j, _)| *j >= self.variable_count) {
            return Err(LpError::DimensionMismatch {
                row: self.rows.len(),
                len: j + 1,
                expected: self.variable_count,
            });
        }
        raw.sort_by_key(|(j, _)| *j);
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(raw.len());
        for (j, c) in raw {
            match merged.last_mut() {
                Some((k, v)) if *k == j => *v += c,
                _ => merged.push((j, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        self.rows.push(Row { coeffs: merged, rhs });
        Ok(self.rows.len() - 1)
    }

    pub fn set_free(&mut self, var: usize) {
        self.nonnegative[var] = false;
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_nonnegative(&self, var: usize) -> bool {
        self.nonnegative[var]
    }

    /// Column `j` of `A` as `(row, coefficient)` pairs.
    pub fn column(&self, j: usize) -> Vec<(usize, Rational)> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.coeffs.iter().find(|(k, _)| *k == j).map(|(_, c)| (i, c.clone())))
            .collect()
    }
}

/// Decides feasibility exactly. Deterministic: Bland's rule fixes every
/// pivot choice.
pub fn lp_feasible(problem: &LinearFeasibilityProblem) -> Result<FeasibilityCertificate, LpError> {
    for (i, r) in problem.rows.iter().enumerate() {
        if let Some((j, _)) = r.coeffs.iter().find(|(j, _)| *j >= problem.variable_count) {
            return Err(LpError::DimensionMismatch {
                row: i,
                len: j + 1,
                expected: problem.variable_count,
            });
        }
    }
    if problem.nonnegative.len() != problem.variable_count {
        return Err(LpError::SignFlagMismatch {
            len: problem.nonnegative.len(),
            expected: problem.variable_count,
        });
    }
    Ok(Tableau::build(problem).solve(problem))
}

/// Internal column layout: original variables (free ones contribute a
/// second, negated column), then one artificial per row.
struct Tableau {
    m: usize,
    /// structural columns after splitting free variables
    n: usize,
    /// `split[j]` = (original variable, sign)
    split: Vec<(usize, bool)>,
    /// rows of length n + m + 1; last entry is the rhs
    t: Vec<Vec<Rational>>,
    /// reduced costs, length n + m, plus objective value at index n + m
    cost: Vec<Rational>,
    basis: Vec<usize>,
    /// sign applied to each original row so that rhs >= 0
    row_sign: Vec<bool>,
}

impl Tableau {
    fn build(p: &LinearFeasibilityProblem) -> Self {
        let m = p.rows.len();
        let mut split = Vec::new();
        let mut col_of = vec![(0usize, None::<usize>); p.variable_count];
        for v in 0..p.variable_count {
            let pos = split.len();
            split.push((v, true));
            let neg = if p.nonnegative[v] {
                None
            } else {
                split.push((v, false));
                Some(pos + 1)
            };
            col_of[v] = (pos, neg);
        }
        let n = split.len();
        let width = n + m + 1;
        let mut t = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        for (i, r) in p.rows.iter().enumerate() {
            let flip = r.rhs.is_negative();
            let s = |c: &Rational| if flip { -c } else { c.clone() };
            let mut row = vec![Rational::zero(); width];
            for (j, c) in &r.coeffs {
                let (pos, neg) = col_of[*j];
                row[pos] = s(c);
                if let Some(k) = neg {
                    row[k] = -s(c);
                }
            }
            row[n + i] = Rational::one();
            row[width - 1] = s(&r.rhs);
            row_sign.push(flip);
            t.push(row);
        }
        // phase-1 reduced costs: c_j - 1ᵀ A_j for structural columns
        let mut cost = vec![Rational::zero(); width];
        for row in &t {
            for j in 0..n {
                if !row[j].is_zero() {
                    cost[j] -= &row[j];
                }
            }
            cost[width - 1] -= &row[width - 1];
        }
        Self {
            m,
            n,
            split,
            t,
            cost,
            basis: (n..n + m).collect(),
            row_sign,
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let width = self.n + self.m + 1;
        let inv = self.t[r][e].recip();
        let nz: Vec<usize> = (0..width).filter(|&j| !self.t[r][j].is_zero()).collect();
        for &j in &nz {
            self.t[r][j] *= &inv;
        }
        let prow: Vec<(usize, Rational)> = nz.iter().map(|&j| (j, self.t[r][j].clone())).collect();
        for i in 0..self.m {
            if i == r || self.t[i][e].is_zero() {
                continue;
            }
            let f = self.t[i][e].clone();
            for (j, v) in &prow {
                self.t[i][*j] -= &f * v;
            }
        }
        if !self.cost[e].is_zero() {
            let f = self.cost[e].clone();
            for (j, v) in &prow {
                self.cost[*j] -= &f * v;
            }
        }
        self.basis[r] = e;
    }

    fn solve(mut self, p: &LinearFeasibilityProblem) -> FeasibilityCertificate {
        let total = self.n + self.m;
        loop {
            // Bland: lowest-index improving column
            let Some(e) = (0..total).find(|&j| self.cost[j].is_negative()) else {
                break;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.m {
                let a = &self.t[i][e];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.t[i][total] / a;
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            // phase-1 objective is bounded below by 0, so a leaving row exists
            let (r, _) = leave.expect("phase-1 objective is bounded");
            self.pivot(r, e);
        }
        // objective value is -cost[total]
        if self.cost[total].is_zero() {
            let mut witness = vec![Rational::zero(); p.variable_count];
            for (i, &b) in self.basis.iter().enumerate() {
                if b < self.n {
                    let (v, pos) = self.split[b];
                    let val = &self.t[i][total];
                    if pos {
                        witness[v] += val;
                    } else {
                        witness[v] -= val;
                    }
                }
            }
            FeasibilityCertificate::Feasible { witness }
        } else {
            // duals pi_i = 1 - reduced cost of artificial i; y = -D pi
            let functional = (0..self.m)
                .map(|i| {
                    let pi = Rational::one() - &self.cost[self.n + i];
                    if self.row_sign[i] {
                        pi
                    } else {
                        -pi
                    }
                })
                .collect();
            FeasibilityCertificate::Infeasible { functional }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::verify_certificate;
    use crate::rational::{int, ratio};

    #[test]
    fn single_variable_feasible() {
        let p = LinearFeasibilityProblem::from_dense(1, vec![(vec![int(1)], int(1))], None).unwrap();
        let c = lp_feasible(&p).unwrap();
        assert_eq!(c, FeasibilityCertificate::Feasible { witness: vec![int(1)] });
        verify_certificate(&p, &c).unwrap();
    }

    #[test]
    fn single_variable_infeasible() {
        let p = LinearFeasibilityProblem::from_dense(1, vec![(vec![int(1)], int(-1))], None).unwrap();
        let c = lp_feasible(&p).unwrap();
        assert!(c.is_infeasible());
        verify_certificate(&p, &c).unwrap();
    }

    #[test]
    fn free_variables_take_negative_values() {
        let p = LinearFeasibilityProblem::from_dense(
            2,
            vec![(vec![int(1), int(1)], int(-3)), (vec![int(1), int(-1)], int(1))],
            Some(vec![false, false]),
        )
        .unwrap();
        let c = lp_feasible(&p).unwrap();
        assert_eq!(c, FeasibilityCertificate::Feasible { witness: vec![int(-1), int(-2)] });
        verify_certificate(&p, &c).unwrap();
    }

    #[test]
    fn inconsistent_equalities() {
        let p = LinearFeasibilityProblem::from_dense(
            2,
            vec![(vec![int(1), int(1)], int(1)), (vec![int(2), int(2)], int(3))],
            Some(vec![false, true]),
        )
        .unwrap();
        let c = lp_feasible(&p).unwrap();
        assert!(c.is_infeasible());
        verify_certificate(&p, &c).unwrap();
    }

    #[test]
    fn redundant_rows_and_degeneracy() {
        let p = LinearFeasibilityProblem::from_dense(
            3,
            vec![
                (vec![int(1), int(1), int(1)], int(1)),
                (vec![int(2), int(2), int(2)], int(2)),
                (vec![int(1), int(0), int(0)], ratio(1, 3)),
                (vec![int(0), int(0), int(0)], int(0)),
            ],
            None,
        )
        .unwrap();
        let c = lp_feasible(&p).unwrap();
        verify_certificate(&p, &c).unwrap();
        assert!(c.is_feasible());
    }

    #[test]
    fn zero_row_with_nonzero_rhs_is_infeasible() {
        let p = LinearFeasibilityProblem::from_dense(1, vec![(vec![int(0)], int(2))], None).unwrap();
        let c = lp_feasible(&p).unwrap();
        assert!(c.is_infeasible());
        verify_certificate(&p, &c).unwrap();
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            LinearFeasibilityProblem::from_dense(2, vec![(vec![int(1)], int(1))], None),
            Err(LpError::DimensionMismatch { row: 0, len: 1, expected: 2 })
        );
        let mut p = LinearFeasibilityProblem::new(1);
        assert!(p.push_row([(3, int(1))], int(0)).is_err());
    }
}
