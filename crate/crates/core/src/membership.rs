//! Membership tests as exact linear feasibility problems.
//!
//! * `check_joint_fine`: a joint distribution over all settings' outcomes.
//! * `check_ld`: a convex mixture of deterministic strategies.
//! * `check_lf`: Local Friendliness, with the friend's outcome `c` as a
//!   real random variable (`q(abc|xy) = P(ab|cxy) P(c)`).
//! * `check_sw_sequential`: the sequential scenario with `R` reversals.
//!
//! Every encoding labels its rows so that an infeasibility functional can
//! be turned back into an inequality over behavior entries.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{
    assignments, enumerate_deterministic_vertices, pr_box_embedded, Behavior, BehaviorError, DeterministicStrategy,
    Scenario,
};
use crate::certificate::{combine_rows, verify_certificate, FeasibilityCertificate, VerifyError};
use crate::lp::{lp_feasible, LinearFeasibilityProblem, LpError};
use crate::rational::{int, ratio, Rational};

#[derive(Debug, Error)]
pub enum MembershipError {
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("Local Friendliness needs a friend on at least one wing")]
    NoFriend,
    #[error("scenario mismatch: {0}")]
    WrongScenario(String),
    #[error("certificate is feasible; no inequality to extract")]
    NotInfeasible,
    #[error("certificate failed verification: {0}")]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipTest {
    Joint,
    Ld,
    Lf,
    Sw,
}

impl MembershipTest {
    pub fn name(self) -> &'static str {
        match self {
            Self::Joint => "joint",
            Self::Ld => "ld",
            Self::Lf => "lf",
            Self::Sw => "sw",
        }
    }
}

/// What a constraint row stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowLabel {
    /// Row whose right-hand side is the behavior entry p(ab|xy).
    Entry { x: usize, y: usize, a: usize, b: usize },
    /// Row with a constant right-hand side.
    Structural,
}

/// Sequential scenario: Alice may reverse the friend's lab up to `R` times.
/// Setting `x̃ = i <= R` means "ask the friend at round i"; `x̃ = R + 1`
/// means a direct measurement after every round was reversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequentialScenario {
    pub base: Scenario,
    pub reversals: usize,
}

impl SequentialScenario {
    /// `R = settings_a - 1`, the setting count the LD comparison needs.
    pub fn for_base(base: Scenario) -> Self {
        Self {
            base,
            reversals: base.settings_a - 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Encoding {
    pub test: MembershipTest,
    pub behavior: Behavior,
    pub problem: LinearFeasibilityProblem,
    pub labels: Vec<RowLabel>,
}

/// A membership verdict with the problem it was decided on.
#[derive(Debug, Clone)]
pub struct Membership {
    pub encoding: Encoding,
    pub certificate: FeasibilityCertificate,
}

impl Membership {
    pub fn is_member(&self) -> bool {
        self.certificate.is_feasible()
    }

    pub fn verify(&self) -> Result<(), VerifyError> {
        verify_certificate(&self.encoding.problem, &self.certificate)
    }
}

struct Builder {
    problem: LinearFeasibilityProblem,
    labels: Vec<RowLabel>,
}

impl Builder {
    fn new(vars: usize) -> Self {
        Self {
            problem: LinearFeasibilityProblem::new(vars),
            labels: Vec::new(),
        }
    }

    fn unit_row(&mut self, cols: impl IntoIterator<Item = usize>, rhs: Rational, label: RowLabel) {
        self.row(cols.into_iter().map(|j| (j, Rational::one())), rhs, label);
    }

    fn row(&mut self, coeffs: impl IntoIterator<Item = (usize, Rational)>, rhs: Rational, label: RowLabel) {
        self.problem.push_row(coeffs, rhs).expect("encoder emits in-range columns");
        self.labels.push(label);
    }

    /// `Σ lhs - Σ rhs = 0`
    fn difference_row(&mut self, lhs: &[usize], rhs: &[usize]) {
        let coeffs = lhs
            .iter()
            .map(|&j| (j, Rational::one()))
            .chain(rhs.iter().map(|&j| (j, -Rational::one())));
        self.row(coeffs, Rational::zero(), RowLabel::Structural);
    }

    fn finish(self, test: MembershipTest, behavior: &Behavior) -> Encoding {
        Encoding {
            test,
            behavior: behavior.clone(),
            problem: self.problem,
            labels: self.labels,
        }
    }
}

fn check_cap(count: u128, cap: u64) -> Result<(), MembershipError> {
    if count > cap as u128 {
        return Err(BehaviorError::SizeLimit {
            count: count.to_string(),
            cap,
        }
        .into());
    }
    Ok(())
}

/// Rows `Σ_{columns hitting (x,y,a,b)} = p(ab|xy)` for a list of local
/// assignments (one outcome per setting on each side).
fn encode_assignments<'a>(
    beh: &Behavior,
    strategies: impl Iterator<Item = (&'a [usize], &'a [usize])>,
    vars: usize,
) -> Builder {
    let s = *beh.scenario();
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); s.cell_count() * s.cell_len()];
    for (j, (alice, bob)) in strategies.enumerate() {
        for (x, y) in s.cells() {
            cols[s.cell(x, y) * s.cell_len() + s.entry(alice[x - 1], bob[y - 1])].push(j);
        }
    }
    let mut bld = Builder::new(vars);
    for (x, y) in s.cells() {
        for a in 0..s.outcomes_a {
            for b in 0..s.outcomes_b {
                let idx = s.cell(x, y) * s.cell_len() + s.entry(a, b);
                bld.unit_row(
                    std::mem::take(&mut cols[idx]),
                    beh.p(x, y, a, b).clone(),
                    RowLabel::Entry { x, y, a, b },
                );
            }
        }
    }
    bld
}

pub fn encode_joint(beh: &Behavior, cap: u64) -> Result<Encoding, MembershipError> {
    let s = beh.scenario();
    check_cap(s.vertex_count(), cap)?;
    let alice = assignments(s.settings_a, s.outcomes_a);
    let bob = assignments(s.settings_b, s.outcomes_b);
    let tuples: Vec<(&[usize], &[usize])> = alice
        .iter()
        .flat_map(|a| bob.iter().map(move |b| (a.as_slice(), b.as_slice())))
        .collect();
    let n = tuples.len();
    Ok(encode_assignments(beh, tuples.into_iter(), n).finish(MembershipTest::Joint, beh))
}

pub fn encode_ld(beh: &Behavior, cap: u64) -> Result<(Encoding, Vec<DeterministicStrategy>), MembershipError> {
    let vertices = enumerate_deterministic_vertices(beh.scenario(), cap)?;
    let it = vertices.iter().map(|v| (v.alice.as_slice(), v.bob.as_slice()));
    let enc = encode_assignments(beh, it, vertices.len()).finish(MembershipTest::Ld, beh);
    Ok((enc, vertices))
}

/// Variable layout of the LF encoding.
pub struct LfLayout {
    scenario: Scenario,
    hidden: Vec<(Option<usize>, Option<usize>)>,
    q: Vec<Option<usize>>,
    /// column of p_h for each hidden value h
    pub hidden_cols: Vec<usize>,
}

impl LfLayout {
    fn new(s: Scenario) -> Self {
        let cs: Vec<Option<usize>> = if s.friend_on_a {
            (0..s.outcomes_a).map(Some).collect()
        } else {
            vec![None]
        };
        let ds: Vec<Option<usize>> = if s.friend_on_b {
            (0..s.outcomes_b).map(Some).collect()
        } else {
            vec![None]
        };
        let hidden: Vec<_> = cs.iter().flat_map(|&c| ds.iter().map(move |&d| (c, d))).collect();
        let mut q = Vec::with_capacity(s.cell_count() * s.cell_len() * hidden.len());
        let mut next = 0;
        for (x, y) in s.cells() {
            for a in 0..s.outcomes_a {
                for b in 0..s.outcomes_b {
                    for &(c, d) in &hidden {
                        let tied_a = x == 1 && c.is_some_and(|c| c != a);
                        let tied_b = y == 1 && d.is_some_and(|d| d != b);
                        if tied_a || tied_b {
                            q.push(None);
                        } else {
                            q.push(Some(next));
                            next += 1;
                        }
                    }
                }
            }
        }
        let hidden_cols = (next..next + hidden.len()).collect();
        Self {
            scenario: s,
            hidden,
            q,
            hidden_cols,
        }
    }

    pub fn variable_count(&self) -> usize {
        self.q.iter().flatten().count() + self.hidden.len()
    }

    /// Column of q(a b h | x y), if that variable is not forced to zero.
    pub fn q(&self, x: usize, y: usize, a: usize, b: usize, h: usize) -> Option<usize> {
        let s = &self.scenario;
        self.q[(s.cell(x, y) * s.cell_len() + s.entry(a, b)) * self.hidden.len() + h]
    }

    fn collect(&self, x: usize, y: usize, a: Option<usize>, b: Option<usize>, h: usize) -> Vec<usize> {
        let s = &self.scenario;
        let aa: Vec<usize> = a.map_or_else(|| (0..s.outcomes_a).collect(), |a| vec![a]);
        let bb: Vec<usize> = b.map_or_else(|| (0..s.outcomes_b).collect(), |b| vec![b]);
        aa.iter()
            .flat_map(|&a| bb.iter().filter_map(move |&b| self.q(x, y, a, b, h)))
            .collect()
    }
}

pub fn encode_lf(beh: &Behavior) -> Result<(Encoding, LfLayout), MembershipError> {
    let s = *beh.scenario();
    if !s.friend_on_a && !s.friend_on_b {
        return Err(MembershipError::NoFriend);
    }
    let lay = LfLayout::new(s);
    let hn = lay.hidden.len();
    let mut bld = Builder::new(lay.variable_count());
    // P(h) independent of the settings
    for (x, y) in s.cells() {
        for h in 0..hn {
            let mut coeffs: Vec<(usize, Rational)> =
                lay.collect(x, y, None, None, h).into_iter().map(|j| (j, Rational::one())).collect();
            coeffs.push((lay.hidden_cols[h], -Rational::one()));
            bld.row(coeffs, Rational::zero(), RowLabel::Structural);
        }
    }
    // Bob's side (b, h) independent of x
    for y in 1..=s.settings_b {
        for b in 0..s.outcomes_b {
            for h in 0..hn {
                let base = lay.collect(1, y, None, Some(b), h);
                for x in 2..=s.settings_a {
                    bld.difference_row(&lay.collect(x, y, None, Some(b), h), &base);
                }
            }
        }
    }
    // Alice's side (a, h) independent of y
    for x in 1..=s.settings_a {
        for a in 0..s.outcomes_a {
            for h in 0..hn {
                let base = lay.collect(x, 1, Some(a), None, h);
                for y in 2..=s.settings_b {
                    bld.difference_row(&lay.collect(x, y, Some(a), None, h), &base);
                }
            }
        }
    }
    // marginalizing the hidden outcomes reproduces the table
    for (x, y) in s.cells() {
        for a in 0..s.outcomes_a {
            for b in 0..s.outcomes_b {
                let cols = (0..hn).filter_map(|h| lay.q(x, y, a, b, h));
                bld.unit_row(cols, beh.p(x, y, a, b).clone(), RowLabel::Entry { x, y, a, b });
            }
        }
    }
    Ok((bld.finish(MembershipTest::Lf, beh), lay))
}

/// Variable layout of the sequential encoding: p(ã b c⃡ | x̃ y) where c⃡
/// ranges over `outcomes_a^R` in lexicographic order (c_1 slowest).
pub struct SwLayout {
    scenario: Scenario,
    reversals: usize,
    hist: usize,
    vars: Vec<Option<usize>>,
    count: usize,
}

impl SwLayout {
    fn new(s: Scenario, reversals: usize) -> Self {
        let hist = s.outcomes_a.pow(reversals as u32);
        let mut vars = Vec::with_capacity(s.cell_count() * s.cell_len() * hist);
        let mut next = 0;
        for (x, _y) in s.cells() {
            for a in 0..s.outcomes_a {
                for _b in 0..s.outcomes_b {
                    for k in 0..hist {
                        let forced = x <= reversals && Self::digit(s.outcomes_a, reversals, k, x) != a;
                        if forced {
                            vars.push(None);
                        } else {
                            vars.push(Some(next));
                            next += 1;
                        }
                    }
                }
            }
        }
        Self {
            scenario: s,
            reversals,
            hist,
            vars,
            count: next,
        }
    }

    /// c_i (1-indexed) of history index k.
    fn digit(base: usize, reversals: usize, k: usize, i: usize) -> usize {
        (k / base.pow((reversals - i) as u32)) % base
    }

    /// Index of the prefix (c_1..c_j) of history k among `base^j` prefixes.
    fn prefix(&self, k: usize, j: usize) -> usize {
        k / self.scenario.outcomes_a.pow((self.reversals - j) as u32)
    }

    pub fn var(&self, x: usize, y: usize, a: usize, b: usize, k: usize) -> Option<usize> {
        let s = &self.scenario;
        self.vars[(s.cell(x, y) * s.cell_len() + s.entry(a, b)) * self.hist + k]
    }
}

pub fn encode_sw(beh: &Behavior, seq: &SequentialScenario, cap: u64) -> Result<(Encoding, SwLayout), MembershipError> {
    let s = *beh.scenario();
    let r = seq.reversals;
    if r == 0 {
        return Err(MembershipError::WrongScenario("at least one reversal is required".into()));
    }
    if s.settings_a != r + 1 || s.settings_b != seq.base.settings_b || s.outcomes_a != seq.base.outcomes_a
        || s.outcomes_b != seq.base.outcomes_b
    {
        return Err(MembershipError::WrongScenario(format!(
            "behavior has {} Alice settings; {r} reversals need {}",
            s.settings_a,
            r + 1
        )));
    }
    let hist = (s.outcomes_a as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    check_cap(hist.saturating_mul((s.cell_count() * s.cell_len()) as u128), cap)?;
    let lay = SwLayout::new(s, r);
    let mut bld = Builder::new(lay.count);
    let hist = lay.hist;
    for (x, y) in s.cells() {
        for a in 0..s.outcomes_a {
            for b in 0..s.outcomes_b {
                let cols = (0..hist).filter_map(|k| lay.var(x, y, a, b, k));
                bld.unit_row(cols, beh.p(x, y, a, b).clone(), RowLabel::Entry { x, y, a, b });
            }
        }
    }
    // (b, c_1..c_j) does not depend on choices made after c_j exists:
    // equal across every x̃ >= j.
    for j in 1..=r {
        let prefixes = s.outcomes_a.pow(j as u32);
        for y in 1..=s.settings_b {
            for b in 0..s.outcomes_b {
                for pre in 0..prefixes {
                    let gather = |x: usize| -> Vec<usize> {
                        (0..s.outcomes_a)
                            .flat_map(|a| (0..hist).map(move |k| (a, k)))
                            .filter(|&(_, k)| lay.prefix(k, j) == pre)
                            .filter_map(|(a, k)| lay.var(x, y, a, b, k))
                            .collect()
                    };
                    let base = gather(j);
                    for x in j + 1..=r + 1 {
                        bld.difference_row(&gather(x), &base);
                    }
                }
            }
        }
    }
    // (ã, c⃡) does not depend on Bob's setting
    for x in 1..=s.settings_a {
        for a in 0..s.outcomes_a {
            for k in 0..hist {
                let gather = |y: usize| -> Vec<usize> {
                    (0..s.outcomes_b).filter_map(|b| lay.var(x, y, a, b, k)).collect()
                };
                let base = gather(1);
                for y in 2..=s.settings_b {
                    bld.difference_row(&gather(y), &base);
                }
            }
        }
    }
    Ok((bld.finish(MembershipTest::Sw, beh), lay))
}

fn decide(encoding: Encoding) -> Result<Membership, MembershipError> {
    let certificate = lp_feasible(&encoding.problem)?;
    Ok(Membership { encoding, certificate })
}

/// Feasible iff a joint distribution over every setting's outcome
/// reproduces the table as marginals.
pub fn check_joint_fine(beh: &Behavior, cap: u64) -> Result<Membership, MembershipError> {
    decide(encode_joint(beh, cap)?)
}

/// Feasible iff the table is a convex mixture of deterministic strategies;
/// the witness holds the mixture weights in vertex order.
pub fn check_ld(beh: &Behavior, cap: u64) -> Result<Membership, MembershipError> {
    decide(encode_ld(beh, cap)?.0)
}

pub fn check_lf(beh: &Behavior) -> Result<Membership, MembershipError> {
    decide(encode_lf(beh)?.0)
}

pub fn check_sw_sequential(beh: &Behavior, seq: &SequentialScenario, cap: u64) -> Result<Membership, MembershipError> {
    decide(encode_sw(beh, seq, cap)?.0)
}

/// Dispatch by test id.
pub fn check(test: MembershipTest, beh: &Behavior, cap: u64) -> Result<Membership, MembershipError> {
    match test {
        MembershipTest::Joint => check_joint_fine(beh, cap),
        MembershipTest::Ld => check_ld(beh, cap),
        MembershipTest::Lf => check_lf(beh),
        MembershipTest::Sw => {
            let seq = SequentialScenario::for_base(*beh.scenario());
            check_sw_sequential(beh, &seq, cap)
        }
    }
}

/// A linear inequality `Σ coefficients · p <= bound` over behavior entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inequality {
    /// Indexed like behavior cells: `[cell(x,y)][entry(a,b)]`.
    pub coefficients: Vec<Vec<Rational>>,
    pub bound: Rational,
}

impl Inequality {
    pub fn evaluate(&self, beh: &Behavior) -> Rational {
        self.coefficients
            .iter()
            .zip(beh.cells())
            .flat_map(|(cf, cell)| cf.iter().zip(cell))
            .map(|(c, p)| c * p)
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub test: MembershipTest,
    pub scenario: Scenario,
    /// Functional read off the certificate; holds on the whole member set.
    pub raw: Inequality,
    pub raw_value: Rational,
    /// For joint/LD: maximum of the functional over deterministic strategies.
    pub tight_bound: Option<Rational>,
    /// For joint/LD: the same functional shifted so the uniform behavior
    /// scores 0 and scaled so the deterministic maximum is 2.
    pub normalized: Option<Inequality>,
    pub normalized_value: Option<Rational>,
}

/// Reads a separating inequality off an infeasibility certificate.
///
/// With `y` the functional, every member `p` has some `v >= 0` with
/// `A v = b(p)`, so `yᵀb(p) = (yᵀA) v >= 0`. Splitting `b` into behavior
/// entries and constants gives `Σ -y_r p_r <= Σ_const y_r b_r`.
pub fn extract_inequality(m: &Membership, vertex_cap: u64) -> Result<InequalityReport, MembershipError> {
    let FeasibilityCertificate::Infeasible { functional } = &m.certificate else {
        return Err(MembershipError::NotInfeasible);
    };
    m.verify()?;
    let enc = &m.encoding;
    let s = *enc.behavior.scenario();
    let mut coefficients = vec![vec![Rational::zero(); s.cell_len()]; s.cell_count()];
    let mut bound = Rational::zero();
    for ((label, row), y) in enc.labels.iter().zip(enc.problem.rows()).zip(functional) {
        match *label {
            RowLabel::Entry { x, y: yy, a, b } => coefficients[s.cell(x, yy)][s.entry(a, b)] -= y,
            RowLabel::Structural => bound += &row.rhs * y,
        }
    }
    let raw = Inequality { coefficients, bound };
    let raw_value = raw.evaluate(&enc.behavior);
    let (mut tight_bound, mut normalized, mut normalized_value) = (None, None, None);
    if matches!(enc.test, MembershipTest::Joint | MembershipTest::Ld) {
        let vertices = enumerate_deterministic_vertices(&s, vertex_cap)?;
        let max = vertices
            .iter()
            .map(|v| raw.evaluate(&v.to_behavior(&s)))
            .max()
            .expect("at least one vertex");
        let uniform = raw.evaluate(&Behavior::uniform(s));
        if max > uniform {
            // every normalized behavior has entry sum equal to the cell count
            let per_entry_shift = &uniform / int(s.cell_count() as i64);
            let scale = int(2) / (&max - &uniform);
            let coefficients = raw
                .coefficients
                .iter()
                .map(|cell| cell.iter().map(|c| (c - &per_entry_shift) * &scale).collect())
                .collect();
            let norm = Inequality {
                coefficients,
                bound: int(2),
            };
            normalized_value = Some(norm.evaluate(&enc.behavior));
            normalized = Some(norm);
        }
        tight_bound = Some(max);
    }
    Ok(InequalityReport {
        test: enc.test,
        scenario: s,
        raw,
        raw_value,
        tight_bound,
        normalized,
        normalized_value,
    })
}

/// Checks the extracted inequality against every column of the LP: each
/// column is a generator of the member cone, so `yᵀA_j >= 0` must hold.
pub fn inequality_respects_columns(m: &Membership) -> bool {
    match &m.certificate {
        FeasibilityCertificate::Infeasible { functional } => combine_rows(&m.encoding.problem, functional)
            .iter()
            .enumerate()
            .all(|(j, v)| if m.encoding.problem.is_nonnegative(j) { !v.is_negative() } else { v.is_zero() }),
        FeasibilityCertificate::Feasible { .. } => false,
    }
}

/// Weight denominator for sampled mixtures.
pub const SAMPLE_DENOMINATOR: i64 = 64;

/// Random rational behavior: three deterministic vertices, the PR box and
/// the uniform point, with integer weights summing to 64.
pub fn sample_mixture(s: Scenario, vertices: &[DeterministicStrategy], rng: &mut ChaCha8Rng) -> Behavior {
    let mut cuts: Vec<i64> = (0..4).map(|_| rng.random_range(0..=SAMPLE_DENOMINATOR)).collect();
    cuts.sort_unstable();
    let mut weights = Vec::with_capacity(5);
    let mut prev = 0;
    for c in cuts.iter().copied().chain([SAMPLE_DENOMINATOR]) {
        weights.push(ratio(c - prev, SAMPLE_DENOMINATOR));
        prev = c;
    }
    let picked: Vec<Behavior> = (0..3)
        .map(|_| vertices[rng.random_range(0..vertices.len())].to_behavior(&s))
        .collect();
    let pr = pr_box_embedded(s);
    let uniform = Behavior::uniform(s);
    let parts: Vec<(Rational, &Behavior)> = weights
        .into_iter()
        .zip(picked.iter().chain([&pr, &uniform]))
        .collect();
    Behavior::mix(&parts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum CaseId {
    Vertex(usize),
    Sample(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub case: CaseId,
    pub ld_feasible: bool,
    pub sw_feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub settings_a: usize,
    pub settings_b: usize,
    pub reversals: usize,
    pub seed: u64,
    pub vertices_checked: usize,
    pub samples_checked: usize,
    /// cases both tests call infeasible
    pub infeasible_cases: usize,
    pub disagreements: Vec<Disagreement>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Runs `check_ld` and `check_sw_sequential` with `R = settings_a - 1` on
/// every deterministic vertex and on `sample_count` seeded mixtures of the
/// binary scenario, and lists every case where the verdicts differ.
/// Both certificates are verified on every case.
pub fn ld_sw_equivalence_test(
    settings_a: usize,
    settings_b: usize,
    sample_count: usize,
    seed: u64,
    cap: u64,
) -> Result<EquivalenceReport, MembershipError> {
    if !(2..=3).contains(&settings_a) || settings_b < 2 {
        return Err(MembershipError::WrongScenario(
            "equivalence test needs 2 or 3 Alice settings and at least 2 Bob settings".into(),
        ));
    }
    let s = Scenario::binary(settings_a, settings_b);
    let seq = SequentialScenario::for_base(s);
    let vertices = enumerate_deterministic_vertices(&s, cap)?;
    let mut cases: Vec<(CaseId, Behavior)> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (CaseId::Vertex(i), v.to_behavior(&s)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..sample_count {
        cases.push((CaseId::Sample(i), sample_mixture(s, &vertices, &mut rng)));
    }
    let verdicts: Vec<(CaseId, bool, bool)> = cases
        .par_iter()
        .map(|(id, b)| -> Result<_, MembershipError> {
            let ld = check_ld(b, cap)?;
            ld.verify()?;
            let sw = check_sw_sequential(b, &seq, cap)?;
            sw.verify()?;
            Ok((*id, ld.is_member(), sw.is_member()))
        })
        .collect::<Result<_, _>>()?;
    Ok(EquivalenceReport {
        settings_a,
        settings_b,
        reversals: seq.reversals,
        seed,
        vertices_checked: vertices.len(),
        samples_checked: sample_count,
        infeasible_cases: verdicts.iter().filter(|(_, l, w)| !l && !w).count(),
        disagreements: verdicts
            .into_iter()
            .filter(|(_, l, w)| l != w)
            .map(|(case, ld_feasible, sw_feasible)| Disagreement {
                case,
                ld_feasible,
                sw_feasible,
            })
            .collect(),
    })
}
