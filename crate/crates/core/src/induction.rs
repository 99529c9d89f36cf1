//! Bounded lower bounds on monotone algorithmic probability for one fixed
//! toy machine.
//!
//! Machine `dbl-loop-v1` reads its program two bits at a time from a
//! read-once tape and writes to a write-only output tape. The output so far
//! is also the machine's only register (the body):
//!
//! | bits | instruction | effect                                   |
//! |------|-------------|------------------------------------------|
//! | `00` | EMIT0       | write 0                                  |
//! | `01` | EMIT1       | write 1                                  |
//! | `10` | DOUBLE      | write the body again, so body = body body |
//! | `11` | LOOP        | write the body forever; read no more     |
//!
//! Each completed instruction read costs one step and each written bit
//! costs one step. DOUBLE and LOOP on an empty body write nothing. A
//! program `p` counts for `x` when, within the step budget and without
//! reading past its end, the output begins with `x`, and no proper prefix
//! of `p` already does.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rational::Rational;

pub const MACHINE_ID: &str = "dbl-loop-v1";
pub const MAX_PROGRAM_BITS: u32 = 24;
pub const MAX_STEPS: u64 = 1_000_000;
pub const MAX_TARGET_BITS: usize = 256;
/// Depth down to which the program tree is split across threads.
const PARALLEL_DEPTH: u32 = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InductionError {
    #[error("{what} = {value} exceeds the cap {cap}")]
    CapExceeded { what: &'static str, value: u64, cap: u64 },
    #[error("bit strings may contain only 0 and 1, got {0:?}")]
    BadBits(String),
    #[error("base mass is zero at this scale; raise the program length or step budget")]
    ZeroBase,
    #[error("unknown machine {0:?}")]
    UnknownMachine(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToyMachineConfig {
    pub max_program_bits: u32,
    pub step_budget: u64,
    pub machine: String,
}

impl ToyMachineConfig {
    pub fn new(max_program_bits: u32, step_budget: u64) -> Result<Self, InductionError> {
        let cfg = Self {
            max_program_bits,
            step_budget,
            machine: MACHINE_ID.to_string(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), InductionError> {
        if self.machine != MACHINE_ID {
            return Err(InductionError::UnknownMachine(self.machine.clone()));
        }
        if self.max_program_bits > MAX_PROGRAM_BITS {
            return Err(InductionError::CapExceeded {
                what: "program length",
                value: self.max_program_bits.into(),
                cap: MAX_PROGRAM_BITS.into(),
            });
        }
        if self.step_budget > MAX_STEPS {
            return Err(InductionError::CapExceeded {
                what: "step budget",
                value: self.step_budget,
                cap: MAX_STEPS,
            });
        }
        Ok(())
    }
}

pub fn parse_bits(s: &str) -> Result<Vec<bool>, InductionError> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(InductionError::BadBits(s.to_string())),
        })
        .collect()
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

/// Seeded uniform bits.
pub fn random_bits(len: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_bool(0.5)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlgProbEstimate {
    /// `count / 2^max_program_bits`.
    pub count: u64,
    pub max_program_bits: u32,
    pub programs_counted: u64,
    /// Some consistent program ran out of steps.
    pub truncated: bool,
}

impl AlgProbEstimate {
    pub fn mass(&self) -> Rational {
        Rational::new(BigInt::from(self.count), BigInt::from(1u64) << self.max_program_bits)
    }

    fn merge(self, o: Self) -> Self {
        Self {
            count: self.count + o.count,
            max_program_bits: self.max_program_bits,
            programs_counted: self.programs_counted + o.programs_counted,
            truncated: self.truncated || o.truncated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Qualified,
    Diverged,
    OutOfSteps,
    Open,
}

/// Machine state between instructions.
#[derive(Debug, Clone)]
struct State {
    out: Vec<bool>,
    steps: u64,
}

impl State {
    fn status(&self, x: &[bool]) -> Status {
        let n = self.out.len().min(x.len());
        if self.out[..n] != x[..n] {
            Status::Diverged
        } else if self.out.len() >= x.len() {
            Status::Qualified
        } else {
            Status::Open
        }
    }

    /// Writes one bit, checking the budget first.
    fn write(&mut self, bit: bool, x: &[bool], budget: u64) -> Status {
        if self.steps >= budget {
            return Status::OutOfSteps;
        }
        self.steps += 1;
        self.out.push(bit);
        self.status(x)
    }

    /// Runs one instruction; `Open` means more input is wanted.
    fn exec(&mut self, op: u8, x: &[bool], budget: u64) -> Status {
        if self.steps >= budget {
            return Status::OutOfSteps;
        }
        self.steps += 1;
        match op {
            0 | 1 => self.write(op == 1, x, budget),
            2 => {
                let body = self.out.clone();
                for b in body {
                    let s = self.write(b, x, budget);
                    if s != Status::Open {
                        return s;
                    }
                }
                Status::Open
            }
            _ => {
                if self.out.is_empty() {
                    // writes nothing, ever
                    return Status::Diverged;
                }
                let body = self.out.clone();
                loop {
                    for &b in &body {
                        let s = self.write(b, x, budget);
                        if s != Status::Open {
                            return s;
                        }
                    }
                }
            }
        }
    }
}

struct Search<'a> {
    x: &'a [bool],
    max_bits: u32,
    budget: u64,
}

impl Search<'_> {
    fn leaf(&self, bits: u32) -> AlgProbEstimate {
        AlgProbEstimate {
            count: 1u64 << (self.max_bits - bits),
            max_program_bits: self.max_bits,
            programs_counted: 1,
            truncated: false,
        }
    }

    fn empty(&self, truncated: bool) -> AlgProbEstimate {
        AlgProbEstimate {
            count: 0,
            max_program_bits: self.max_bits,
            programs_counted: 0,
            truncated,
        }
    }

    /// Explores every program extending the instructions already run.
    fn explore(&self, state: &State, bits: u32) -> AlgProbEstimate {
        if bits + 2 > self.max_bits {
            return self.empty(false);
        }
        let child = |op: u8| {
            let mut s = state.clone();
            match s.exec(op, self.x, self.budget) {
                Status::Qualified => self.leaf(bits + 2),
                Status::Diverged => self.empty(false),
                Status::OutOfSteps => self.empty(true),
                Status::Open if op == 3 => unreachable!("loop never asks for input"),
                Status::Open => self.explore(&s, bits + 2),
            }
        };
        if bits < PARALLEL_DEPTH {
            let ((a, b), (c, d)) = rayon::join(|| rayon::join(|| child(0), || child(1)), || rayon::join(|| child(2), || child(3)));
            a.merge(b).merge(c).merge(d)
        } else {
            (0..4).map(child).reduce(AlgProbEstimate::merge).expect("four children")
        }
    }
}

/// Lower bound on M(x): the mass of minimal programs of at most
/// `max_program_bits` bits whose output begins with `x`.
pub fn estimate_m(x: &[bool], cfg: &ToyMachineConfig) -> Result<AlgProbEstimate, InductionError> {
    cfg.check()?;
    if x.len() > MAX_TARGET_BITS {
        return Err(InductionError::CapExceeded {
            what: "target length",
            value: x.len() as u64,
            cap: MAX_TARGET_BITS as u64,
        });
    }
    let search = Search {
        x,
        max_bits: cfg.max_program_bits,
        budget: cfg.step_budget,
    };
    if x.is_empty() {
        return Ok(search.leaf(0));
    }
    Ok(search.explore(
        &State {
            out: Vec::new(),
            steps: 0,
        },
        0,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conditional {
    pub base: AlgProbEstimate,
    pub extended: AlgProbEstimate,
    #[serde(serialize_with = "crate::duplication::ser_rational")]
    pub value: Rational,
}

/// M(xy) / M(x).
pub fn conditional_m(x: &[bool], y: &[bool], cfg: &ToyMachineConfig) -> Result<Conditional, InductionError> {
    let base = estimate_m(x, cfg)?;
    if base.count == 0 {
        return Err(InductionError::ZeroBase);
    }
    let xy: Vec<bool> = x.iter().chain(y).copied().collect();
    let extended = estimate_m(&xy, cfg)?;
    let value = extended.mass() / base.mass();
    Ok(Conditional { base, extended, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BbRule {
    Indifference,
    Induction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BbCredence {
    pub rule: BbRule,
    #[serde(serialize_with = "crate::duplication::ser_rational")]
    pub ordinary: Rational,
    #[serde(serialize_with = "crate::duplication::ser_rational")]
    pub thermal: Rational,
    /// M(y_OO | x) and M(y_BB | x) under the induction rule.
    pub conditionals: Option<(Conditional, Conditional)>,
}

/// Credence that the next observations are ordinary (OO) rather than a
/// thermal fluctuation (BB). Indifference weighs copies only; induction
/// multiplies each copy count by the conditional algorithmic probability
/// of its continuation.
#[allow(clippy::too_many_arguments)]
pub fn bb_credence(
    x: &[bool],
    y_oo: &[bool],
    y_bb: &[bool],
    n_oo: u64,
    n_bb: u64,
    rule: BbRule,
    cfg: &ToyMachineConfig,
) -> Result<BbCredence, InductionError> {
    let (w_oo, w_bb, conditionals) = match rule {
        BbRule::Indifference => (Rational::from_integer(n_oo.into()), Rational::from_integer(n_bb.into()), None),
        BbRule::Induction => {
            let c_oo = conditional_m(x, y_oo, cfg)?;
            let c_bb = conditional_m(x, y_bb, cfg)?;
            (
                &c_oo.value * Rational::from_integer(n_oo.into()),
                &c_bb.value * Rational::from_integer(n_bb.into()),
                Some((c_oo, c_bb)),
            )
        }
    };
    let total = &w_oo + &w_bb;
    if total.is_zero() {
        return Err(InductionError::ZeroBase);
    }
    Ok(BbCredence {
        rule,
        ordinary: w_oo / &total,
        thermal: w_bb / total,
        conditionals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn cfg(l: u32) -> ToyMachineConfig {
        ToyMachineConfig::new(l, 10_000).unwrap()
    }

    #[test]
    fn empty_target_has_full_mass() {
        let e = estimate_m(&[], &cfg(8)).unwrap();
        assert_eq!(e.mass(), int(1));
        assert_eq!(e.programs_counted, 1);
    }

    #[test]
    fn single_bit_targets() {
        // (DOUBLE)^k EMIT0 for k = 0..=3: DOUBLE on an empty body is a no-op
        assert_eq!(estimate_m(&[false], &cfg(8)).unwrap().mass(), ratio(85, 256));
        assert_eq!(estimate_m(&[true], &cfg(8)).unwrap().mass(), ratio(85, 256));
    }

    #[test]
    fn loop_yields_periodic_strings() {
        // 01 00 11 writes (10)^∞ in 6 bits
        let x = parse_bits("101010101010").unwrap();
        let e = estimate_m(&x, &cfg(6)).unwrap();
        assert_eq!(e.mass(), ratio(1, 64));
    }

    #[test]
    fn caps_are_enforced() {
        assert!(matches!(ToyMachineConfig::new(25, 10), Err(InductionError::CapExceeded { .. })));
        assert!(matches!(ToyMachineConfig::new(10, 2_000_000), Err(InductionError::CapExceeded { .. })));
    }

    #[test]
    fn tiny_budget_truncates() {
        let x = parse_bits("1111111111").unwrap();
        let e = estimate_m(&x, &ToyMachineConfig::new(8, 5).unwrap()).unwrap();
        assert!(e.truncated);
        assert_eq!(e.count, 0);
    }

    #[test]
    fn zero_base_is_an_error() {
        let x = random_bits(40, 3);
        assert_eq!(conditional_m(&x, &[true], &cfg(6)), Err(InductionError::ZeroBase));
    }

    #[test]
    fn empty_continuation_is_certain() {
        let x = parse_bits("0110").unwrap();
        assert_eq!(conditional_m(&x, &[], &cfg(10)).unwrap().value, int(1));
    }
}
