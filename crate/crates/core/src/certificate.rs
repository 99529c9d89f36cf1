//! Feasibility certificates and their verifier.
//!
//! The verifier re-multiplies the certificate against the problem rows and
//! shares no code with the simplex solver.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LinearFeasibilityProblem;
use crate::rational::{format_rational, parse_rational, Rational, RationalError, RationalizeOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeasibilityCertificate {
    /// A point satisfying every equality and sign constraint.
    Feasible { witness: Vec<Rational> },
    /// Row multipliers `y` with `yᵀA >= 0` on nonnegative columns,
    /// `yᵀA = 0` on free columns and `yᵀb < 0`.
    Infeasible { functional: Vec<Rational> },
}

impl FeasibilityCertificate {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        !self.is_feasible()
    }

    pub fn verdict(&self) -> &'static str {
        if self.is_feasible() {
            "feasible"
        } else {
            "infeasible"
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("witness has {got} entries, problem has {want} variables")]
    WitnessLength { got: usize, want: usize },
    #[error("witness violates sign constraint on variable {0}")]
    Sign(usize),
    #[error("witness violates row {row}: lhs {lhs} != rhs {rhs}")]
    Row { row: usize, lhs: String, rhs: String },
    #[error("functional has {got} entries, problem has {want} rows")]
    FunctionalLength { got: usize, want: usize },
    #[error("combined coefficient on column {col} is {value}, which breaks the cone condition")]
    Cone { col: usize, value: String },
    #[error("functional applied to rhs is {0}, not negative")]
    Rhs(String),
}

/// Checks a certificate against a problem by exact arithmetic.
pub fn verify_certificate(p: &LinearFeasibilityProblem, cert: &FeasibilityCertificate) -> Result<(), VerifyError> {
    match cert {
        FeasibilityCertificate::Feasible { witness } => {
            if witness.len() != p.variable_count() {
                return Err(VerifyError::WitnessLength {
                    got: witness.len(),
                    want: p.variable_count(),
                });
            }
            for (j, v) in witness.iter().enumerate() {
                if p.is_nonnegative(j) && v.is_negative() {
                    return Err(VerifyError::Sign(j));
                }
            }
            for (i, row) in p.rows().iter().enumerate() {
                let lhs: Rational = row.coeffs.iter().map(|(j, c)| c * &witness[*j]).sum();
                if lhs != row.rhs {
                    return Err(VerifyError::Row {
                        row: i,
                        lhs: format_rational(&lhs),
                        rhs: format_rational(&row.rhs),
                    });
                }
            }
            Ok(())
        }
        FeasibilityCertificate::Infeasible { functional } => {
            if functional.len() != p.rows().len() {
                return Err(VerifyError::FunctionalLength {
                    got: functional.len(),
                    want: p.rows().len(),
                });
            }
            let combined = combine_rows(p, functional);
            for (j, v) in combined.iter().enumerate() {
                let ok = if p.is_nonnegative(j) { !v.is_negative() } else { v.is_zero() };
                if !ok {
                    return Err(VerifyError::Cone {
                        col: j,
                        value: format_rational(v),
                    });
                }
            }
            let yb: Rational = p.rows().iter().zip(functional).map(|(r, y)| &r.rhs * y).sum();
            if !yb.is_negative() {
                return Err(VerifyError::Rhs(format_rational(&yb)));
            }
            Ok(())
        }
    }
}

/// `yᵀA`, one entry per variable.
pub fn combine_rows(p: &LinearFeasibilityProblem, y: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); p.variable_count()];
    for (row, yi) in p.rows().iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (j, c) in &row.coeffs {
            out[*j] += c * yi;
        }
    }
    out
}

/// Text form of a certificate: rational strings, same conventions as
/// behavior files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateFile {
    Feasible { witness: Vec<String> },
    Infeasible { functional: Vec<String> },
}

impl From<&FeasibilityCertificate> for CertificateFile {
    fn from(c: &FeasibilityCertificate) -> Self {
        match c {
            FeasibilityCertificate::Feasible { witness } => Self::Feasible {
                witness: witness.iter().map(format_rational).collect(),
            },
            FeasibilityCertificate::Infeasible { functional } => Self::Infeasible {
                functional: functional.iter().map(format_rational).collect(),
            },
        }
    }
}

impl CertificateFile {
    pub fn to_certificate(&self) -> Result<FeasibilityCertificate, RationalError> {
        let opts = RationalizeOptions::default();
        let parse = |v: &[String]| v.iter().map(|s| parse_rational(s, &opts)).collect::<Result<Vec<_>, _>>();
        Ok(match self {
            Self::Feasible { witness } => FeasibilityCertificate::Feasible { witness: parse(witness)? },
            Self::Infeasible { functional } => FeasibilityCertificate::Infeasible {
                functional: parse(functional)?,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn simplex_row() -> LinearFeasibilityProblem {
        LinearFeasibilityProblem::from_dense(2, vec![(vec![int(1), int(1)], int(1))], None).unwrap()
    }

    #[test]
    fn rejects_bad_witnesses() {
        let p = simplex_row();
        let ok = FeasibilityCertificate::Feasible { witness: vec![ratio(1, 2), ratio(1, 2)] };
        verify_certificate(&p, &ok).unwrap();
        let wrong_sum = FeasibilityCertificate::Feasible { witness: vec![ratio(1, 2), ratio(1, 3)] };
        assert!(matches!(verify_certificate(&p, &wrong_sum), Err(VerifyError::Row { .. })));
        let negative = FeasibilityCertificate::Feasible { witness: vec![int(2), int(-1)] };
        assert_eq!(verify_certificate(&p, &negative), Err(VerifyError::Sign(1)));
    }

    #[test]
    fn rejects_bad_functionals() {
        let p = simplex_row();
        // y = -1 gives yᵀA = (-1,-1) < 0
        let cone = FeasibilityCertificate::Infeasible { functional: vec![int(-1)] };
        assert!(matches!(verify_certificate(&p, &cone), Err(VerifyError::Cone { .. })));
        let rhs = FeasibilityCertificate::Infeasible { functional: vec![int(1)] };
        assert!(matches!(verify_certificate(&p, &rhs), Err(VerifyError::Rhs(_))));
    }

    #[test]
    fn text_form_round_trips() {
        let c = FeasibilityCertificate::Infeasible { functional: vec![ratio(-3, 7), int(0)] };
        let file = CertificateFile::from(&c);
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.contains("\"-3/7\""));
        let back: CertificateFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_certificate().unwrap(), c);
    }
}
