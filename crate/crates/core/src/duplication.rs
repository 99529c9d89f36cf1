//! Credences under duplication: exact self-location calculus, a seeded
//! betting simulation, and the cross-agent consistency check.
//!
//! Tickets pay 1 when the holder's lab coin shows Heads.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rational::{format_rational, int, ratio, to_f64, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DupError {
    #[error("no labels to locate among")]
    EmptyCounts,
    #[error("label {0:?} has a zero copy count")]
    ZeroCount(String),
    #[error("custom weights are all zero on the labels in play")]
    ZeroWeights,
    #[error("custom weight for {0:?} is negative")]
    NegativeWeight(String),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Heads,
    Tails,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Self::Heads => "heads",
            Self::Tails => "tails",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CredenceRule {
    /// Weight each outcome by copies times chance.
    ElgaNui,
    /// Weight each outcome by chance alone.
    Reflection,
    /// Weight each outcome (or label) by an explicit factor.
    CustomWeights(BTreeMap<String, Rational>),
}

impl CredenceRule {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ElgaNui => "elga-nui",
            Self::Reflection => "reflection",
            Self::CustomWeights(_) => "custom",
        }
    }

    fn weight(&self, label: &str) -> Result<Rational, DupError> {
        let Self::CustomWeights(w) = self else {
            unreachable!("only custom rules carry weights")
        };
        let v = w.get(label).cloned().unwrap_or_else(Rational::zero);
        if v.is_negative() {
            return Err(DupError::NegativeWeight(label.to_string()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    /// Duplicated again on Heads.
    Freya,
    Wigner,
}

impl AgentRole {
    pub fn duplicated_on_heads(self) -> bool {
        matches!(self, Self::Freya)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Freya => "freya",
            Self::Wigner => "wigner",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicationExperiment {
    pub labs: u64,
    pub factor: u64,
    /// Probability of Heads.
    pub q: Rational,
    pub price: Rational,
    pub epsilon: Rational,
}

impl DuplicationExperiment {
    pub fn new(labs: u64, factor: u64, q: Rational, price: Rational, epsilon: Rational) -> Result<Self, DupError> {
        let bad = |m: &str| Err(DupError::InvalidExperiment(m.to_string()));
        if labs == 0 || factor == 0 {
            return bad("labs and multiplication factor must be positive");
        }
        if q.is_negative() || q > Rational::one() {
            return bad("q must lie in [0, 1]");
        }
        if !price.is_positive() || price >= Rational::one() {
            return bad("price must lie in (0, 1)");
        }
        if !epsilon.is_positive() {
            return bad("epsilon must be positive");
        }
        Ok(Self {
            labs,
            factor,
            q,
            price,
            epsilon,
        })
    }

    /// Price set `epsilon` below the duplicated agent's Heads credence,
    /// i.e. `2/3 - ε` for a fair coin and `M = 2`.
    pub fn with_offer(labs: u64, factor: u64, q: Rational, epsilon: Rational) -> Result<Self, DupError> {
        let m = int(factor as i64);
        let heads = &m * &q / (&m * &q + Rational::one() - &q);
        Self::new(labs, factor, q, heads - &epsilon, epsilon)
    }

    fn copies(&self, role: AgentRole, outcome: Outcome) -> u64 {
        if role.duplicated_on_heads() && outcome == Outcome::Heads {
            self.factor
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Credence {
    #[serde(serialize_with = "ser_rational")]
    pub heads: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub tails: Rational,
}

pub(crate) fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

fn normalize(weights: Vec<Rational>) -> Result<Vec<Rational>, DupError> {
    let total: Rational = weights.iter().sum();
    if total.is_zero() {
        return Err(DupError::ZeroWeights);
    }
    Ok(weights.into_iter().map(|w| w / &total).collect())
}

/// Credence over which of several indistinguishable situations one is in.
pub fn self_locate(
    counts: &BTreeMap<String, u64>,
    rule: &CredenceRule,
) -> Result<BTreeMap<String, Rational>, DupError> {
    if counts.is_empty() {
        return Err(DupError::EmptyCounts);
    }
    if let Some((label, _)) = counts.iter().find(|(_, c)| **c == 0) {
        return Err(DupError::ZeroCount(label.clone()));
    }
    let weights = counts
        .iter()
        .map(|(label, c)| match rule {
            CredenceRule::ElgaNui => Ok(int(*c as i64)),
            CredenceRule::Reflection => Ok(Rational::one()),
            CredenceRule::CustomWeights(_) => rule.weight(label),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(counts.keys().cloned().zip(normalize(weights)?).collect())
}

/// Single-lab credence in the lab's coin outcome.
pub fn credence_outcome(
    rule: &CredenceRule,
    e: &DuplicationExperiment,
    role: AgentRole,
) -> Result<Credence, DupError> {
    let p = [e.q.clone(), Rational::one() - &e.q];
    let outcomes = [Outcome::Heads, Outcome::Tails];
    let weights = outcomes
        .iter()
        .zip(&p)
        .map(|(o, pi)| {
            Ok(match rule {
                CredenceRule::ElgaNui => int(e.copies(role, *o) as i64) * pi,
                CredenceRule::Reflection => pi.clone(),
                CredenceRule::CustomWeights(_) => rule.weight(o.name())? * pi,
            })
        })
        .collect::<Result<Vec<_>, DupError>>()?;
    let mut n = normalize(weights)?.into_iter();
    Ok(Credence {
        heads: n.next().expect("two outcomes"),
        tails: n.next().expect("two outcomes"),
    })
}

fn pow(r: &Rational, k: u64) -> Rational {
    num_traits::pow(r.clone(), k as usize)
}

/// Copy-weighted distribution of the number of Heads labs, k = 0..=N.
pub fn heads_count_distribution(n: u64, m: u64, q: &Rational) -> Vec<Rational> {
    heads_count_weights(n, m, q).1
}

/// (c, P_F(k)) with P_F(k) = c (N + (M-1)k) C(N,k) q^k (1-q)^(N-k).
fn heads_count_weights(n: u64, m: u64, q: &Rational) -> (Rational, Vec<Rational>) {
    let nq = Rational::one() - q;
    let raw: Vec<Rational> = (0..=n)
        .map(|k| {
            let copies = int((n + (m - 1) * k) as i64);
            let c = Rational::from_integer(binomial(BigInt::from(n), BigInt::from(k)));
            copies * c * pow(q, k) * pow(&nq, n - k)
        })
        .collect();
    let total: Rational = raw.iter().sum();
    let c = total.recip();
    let dist = raw.into_iter().map(|w| w * &c).collect();
    (c, dist)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinomialCredence {
    #[serde(serialize_with = "ser_rational")]
    pub heads: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub tails: Rational,
    /// Normalization constant of the copy-weighted distribution.
    #[serde(serialize_with = "ser_rational")]
    pub c: Rational,
}

/// Duplicated agent's credence in its own lab's outcome with N labs: sum over
/// Heads counts k of P_F(k) times the share of copies in Heads (or Tails)
/// labs.
pub fn credence_via_binomial(n: u64, m: u64, q: &Rational) -> Result<BinomialCredence, DupError> {
    if n == 0 || m == 0 {
        return Err(DupError::InvalidExperiment("labs and multiplication factor must be positive".into()));
    }
    let (c, dist) = heads_count_weights(n, m, q);
    let mut heads = Rational::zero();
    let mut tails = Rational::zero();
    for (k, pk) in dist.iter().enumerate() {
        let k = k as u64;
        let copies = int((n + (m - 1) * k) as i64);
        heads += pk * int((m * k) as i64) / &copies;
        tails += pk * int((n - k) as i64) / &copies;
    }
    Ok(BinomialCredence { heads, tails, c })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuyPolicy {
    Always,
    Never,
    /// Buy when the rule's Heads credence exceeds the price.
    IfFavorable(CredenceRule),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub run: u64,
    /// Heads flag per lab.
    pub labs: Vec<bool>,
}

impl RunRecord {
    pub fn heads(&self) -> u64 {
        self.labs.iter().filter(|h| **h).count() as u64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub role: AgentRole,
    pub quantity: &'static str,
    #[serde(serialize_with = "ser_rational")]
    pub exact: Rational,
    pub empirical: f64,
    pub std_error: f64,
}

impl Estimate {
    /// |empirical - exact| in standard errors.
    pub fn z(&self) -> f64 {
        let d = (self.empirical - to_f64(&self.exact)).abs();
        if self.std_error == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.std_error
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub experiment: DuplicationExperiment,
    pub seed: u64,
    pub runs: Vec<RunRecord>,
    pub buys: [bool; 2],
    pub estimates: Vec<Estimate>,
}

fn role_index(role: AgentRole) -> usize {
    match role {
        AgentRole::Freya => 0,
        AgentRole::Wigner => 1,
    }
}

impl SimulationResult {
    pub fn copies(&self, run: &RunRecord, role: AgentRole) -> u64 {
        let k = run.heads();
        let n = run.labs.len() as u64;
        k * self.experiment.copies(role, Outcome::Heads) + (n - k)
    }

    pub fn estimate(&self, role: AgentRole, quantity: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.role == role && e.quantity == quantity)
    }

    fn profit(&self, role: AgentRole, outcome: Outcome) -> Rational {
        if !self.buys[role_index(role)] {
            return Rational::zero();
        }
        match outcome {
            Outcome::Heads => Rational::one() - &self.experiment.price,
            Outcome::Tails => -self.experiment.price.clone(),
        }
    }

    /// One row per (run, role, lab): copies in the lab and their total
    /// profit.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("run,role,lab,outcome,copies,bought,profit\n");
        for run in &self.runs {
            for role in [AgentRole::Freya, AgentRole::Wigner] {
                for (lab, heads) in run.labs.iter().enumerate() {
                    let o = if *heads { Outcome::Heads } else { Outcome::Tails };
                    let copies = self.experiment.copies(role, o);
                    let profit = self.profit(role, o) * int(copies as i64);
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        run.run,
                        role.name(),
                        lab + 1,
                        o.name(),
                        copies,
                        self.buys[role_index(role)],
                        format_rational(&profit)
                    );
                }
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("role,quantity,exact,exact_decimal,empirical,std_error,z\n");
        for e in &self.estimates {
            let _ = writeln!(
                out,
                "{},{},{},{:.12},{:.12},{:.12},{:.6}",
                e.role.name(),
                e.quantity,
                format_rational(&e.exact),
                to_f64(&e.exact),
                e.empirical,
                e.std_error,
                e.z()
            );
        }
        out
    }
}

/// Pooled ratio Σy/Σx with its linearized standard error.
fn ratio_estimate(pairs: &[(f64, f64)]) -> (f64, f64) {
    let n = pairs.len() as f64;
    let sx: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1).sum();
    let r = sy / sx;
    if pairs.len() < 2 {
        return (r, f64::INFINITY);
    }
    let xbar = sx / n;
    let ss: f64 = pairs.iter().map(|(x, y)| (y - r * x).powi(2)).sum();
    (r, (ss / (n - 1.0) / n).sqrt() / xbar)
}

fn heads_threshold(q: &Rational) -> Result<(u64, u64), DupError> {
    match (q.numer().to_u64(), q.denom().to_u64()) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(DupError::InvalidExperiment("q needs numerator and denominator below 2^64".into())),
    }
}

/// Each run tosses N coins from its own stream (master seed, stream = run
/// index); runs are reduced in index order, so output does not depend on
/// thread scheduling.
pub fn simulate_betting(
    e: &DuplicationExperiment,
    runs: u64,
    seed: u64,
    policy: &BuyPolicy,
) -> Result<SimulationResult, DupError> {
    if runs == 0 {
        return Err(DupError::InvalidExperiment("runs must be at least 1".into()));
    }
    let (num, den) = heads_threshold(&e.q)?;
    let records: Vec<RunRecord> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(run);
            let labs = (0..e.labs).map(|_| rng.random_range(0..den) < num).collect();
            RunRecord { run: run + 1, labs }
        })
        .collect();
    let mut buys = [true; 2];
    for role in [AgentRole::Freya, AgentRole::Wigner] {
        buys[role_index(role)] = match policy {
            BuyPolicy::Always => true,
            BuyPolicy::Never => false,
            BuyPolicy::IfFavorable(rule) => credence_outcome(rule, e, role)?.heads > e.price,
        };
    }
    let mut result = SimulationResult {
        experiment: e.clone(),
        seed,
        runs: records,
        buys,
        estimates: Vec::new(),
    };
    let nq = Rational::one() - &e.q;
    for role in [AgentRole::Freya, AgentRole::Wigner] {
        let mh = int(e.copies(role, Outcome::Heads) as i64);
        let exact_tails = &nq / (&mh * &e.q + &nq);
        let win = Rational::one() - &exact_tails;
        let exact_profit = if buys[role_index(role)] {
            win - &e.price
        } else {
            Rational::zero()
        };
        let ph = to_f64(&result.profit(role, Outcome::Heads));
        let pt = to_f64(&result.profit(role, Outcome::Tails));
        let mut tails_pairs = Vec::with_capacity(result.runs.len());
        let mut profit_pairs = Vec::with_capacity(result.runs.len());
        for run in &result.runs {
            let copies = result.copies(run, role) as f64;
            let tails = (run.labs.len() as u64 - run.heads()) as f64;
            let heads_copies = copies - tails;
            tails_pairs.push((copies, tails));
            profit_pairs.push((copies, heads_copies * ph + tails * pt));
        }
        let (t, t_se) = ratio_estimate(&tails_pairs);
        let (p, p_se) = ratio_estimate(&profit_pairs);
        result.estimates.push(Estimate {
            role,
            quantity: "tails_fraction",
            exact: exact_tails,
            empirical: t,
            std_error: t_se,
        });
        result.estimates.push(Estimate {
            role,
            quantity: "mean_profit",
            exact: exact_profit,
            empirical: p,
            std_error: p_se,
        });
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub factor: u64,
    pub rule_f: &'static str,
    pub rule_w: &'static str,
    #[serde(serialize_with = "ser_rational")]
    pub freya_tails: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub wigner_tails: Rational,
    pub consistent: bool,
}

/// With one lab, Freya sees Tails exactly when Wigner does, so agents that
/// share the same information must assign the same credence to it.
pub fn check_cp_consistency(
    rule_f: &CredenceRule,
    rule_w: &CredenceRule,
    factor: u64,
    q: &Rational,
) -> Result<ConsistencyReport, DupError> {
    let e = DuplicationExperiment::new(1, factor, q.clone(), ratio(1, 2), ratio(1, 100))?;
    let f = credence_outcome(rule_f, &e, AgentRole::Freya)?;
    let w = credence_outcome(rule_w, &e, AgentRole::Wigner)?;
    Ok(ConsistencyReport {
        factor,
        rule_f: rule_f.name(),
        rule_w: rule_w.name(),
        consistent: f.tails == w.tails,
        freya_tails: f.tails,
        wigner_tails: w.tails,
    })
}
