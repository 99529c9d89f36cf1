//! Scenarios, behavior tables p(ab|xy), and the reference behaviors used
//! throughout the crate.
//!
//! Settings are 1-indexed (`x = 1` is the "ask the friend" setting when a
//! friend sits on Alice's wing); outcomes are 0-indexed. For correlators,
//! outcome 0 counts as +1 and outcome 1 as -1.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{int, ratio, Rational};

/// Default cap on enumerated deterministic strategies / joint outcomes.
pub const DEFAULT_VERTEX_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BehaviorError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("no table entry for setting pair ({x},{y})")]
    MissingCell { x: usize, y: usize },
    #[error("cell ({x},{y}) has shape {rows}x{cols}, expected {want_rows}x{want_cols}")]
    CellShape {
        x: usize,
        y: usize,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("setting pair ({x},{y}) is outside the scenario")]
    UnknownCell { x: usize, y: usize },
    #[error("enumeration needs {count} items, above the cap {cap}")]
    SizeLimit { count: String, cap: u64 },
    #[error("operation requires {0}")]
    WrongScenario(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub settings_a: usize,
    pub settings_b: usize,
    pub outcomes_a: usize,
    pub outcomes_b: usize,
    pub friend_on_a: bool,
    pub friend_on_b: bool,
}

impl Scenario {
    pub fn new(
        settings_a: usize,
        settings_b: usize,
        outcomes_a: usize,
        outcomes_b: usize,
    ) -> Result<Self, BehaviorError> {
        let s = Self {
            settings_a,
            settings_b,
            outcomes_a,
            outcomes_b,
            friend_on_a: false,
            friend_on_b: false,
        };
        s.check()?;
        Ok(s)
    }

    /// Two-outcome scenario with the given setting counts.
    pub fn binary(settings_a: usize, settings_b: usize) -> Self {
        Self::new(settings_a, settings_b, 2, 2).expect("binary scenario with zero settings")
    }

    pub fn with_friend_a(mut self) -> Self {
        self.friend_on_a = true;
        self
    }

    pub fn with_friend_b(mut self) -> Self {
        self.friend_on_b = true;
        self
    }

    pub fn check(&self) -> Result<(), BehaviorError> {
        if self.settings_a == 0 || self.settings_b == 0 {
            return Err(BehaviorError::InvalidScenario(
                "setting counts must be at least 1".into(),
            ));
        }
        if self.outcomes_a < 2 || self.outcomes_b < 2 {
            return Err(BehaviorError::InvalidScenario(
                "outcome counts must be at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn is_binary_2x2(&self) -> bool {
        self.settings_a == 2 && self.settings_b == 2 && self.outcomes_a == 2 && self.outcomes_b == 2
    }

    pub fn cell_count(&self) -> usize {
        self.settings_a * self.settings_b
    }

    pub fn cell_len(&self) -> usize {
        self.outcomes_a * self.outcomes_b
    }

    /// Flat index of the 1-indexed setting pair.
    pub fn cell(&self, x: usize, y: usize) -> usize {
        debug_assert!((1..=self.settings_a).contains(&x) && (1..=self.settings_b).contains(&y));
        (x - 1) * self.settings_b + (y - 1)
    }

    /// All 1-indexed setting pairs in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.settings_a).flat_map(move |x| (1..=self.settings_b).map(move |y| (x, y)))
    }

    pub fn entry(&self, a: usize, b: usize) -> usize {
        a * self.outcomes_b + b
    }

    /// Number of deterministic strategies (and of joint outcome tuples).
    pub fn vertex_count(&self) -> u128 {
        (self.outcomes_a as u128)
            .checked_pow(self.settings_a as u32)
            .and_then(|n| n.checked_mul((self.outcomes_b as u128).checked_pow(self.settings_b as u32)?))
            .unwrap_or(u128::MAX)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{} settings, {}x{} outcomes",
            self.settings_a, self.settings_b, self.outcomes_a, self.outcomes_b
        )?;
        if self.friend_on_a {
            write!(f, ", friend on A")?;
        }
        if self.friend_on_b {
            write!(f, ", friend on B")?;
        }
        Ok(())
    }
}

/// An empirical table p(ab|xy) with exact entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Behavior {
    scenario: Scenario,
    cells: Vec<Vec<Rational>>,
}

impl Behavior {
    /// Builds from flat cells: `cells[scenario.cell(x, y)][scenario.entry(a, b)]`.
    pub fn from_cells(scenario: Scenario, cells: Vec<Vec<Rational>>) -> Result<Self, BehaviorError> {
        scenario.check()?;
        if cells.len() != scenario.cell_count() {
            let idx = cells.len().min(scenario.cell_count().saturating_sub(1));
            return Err(BehaviorError::MissingCell {
                x: idx / scenario.settings_b + 1,
                y: idx % scenario.settings_b + 1,
            });
        }
        for (i, cell) in cells.iter().enumerate() {
            if cell.len() != scenario.cell_len() {
                return Err(BehaviorError::CellShape {
                    x: i / scenario.settings_b + 1,
                    y: i % scenario.settings_b + 1,
                    rows: cell.len() / scenario.outcomes_b.max(1),
                    cols: scenario.outcomes_b,
                    want_rows: scenario.outcomes_a,
                    want_cols: scenario.outcomes_b,
                });
            }
        }
        Ok(Self { scenario, cells })
    }

    /// Builds from a map keyed by 1-indexed `(x, y)` holding row-major
    /// `outcomes_a x outcomes_b` matrices.
    pub fn from_table(
        scenario: Scenario,
        table: &BTreeMap<(usize, usize), Vec<Vec<Rational>>>,
    ) -> Result<Self, BehaviorError> {
        scenario.check()?;
        for &(x, y) in table.keys() {
            if x == 0 || y == 0 || x > scenario.settings_a || y > scenario.settings_b {
                return Err(BehaviorError::UnknownCell { x, y });
            }
        }
        let mut cells = Vec::with_capacity(scenario.cell_count());
        for (x, y) in scenario.cells() {
            let rows = table.get(&(x, y)).ok_or(BehaviorError::MissingCell { x, y })?;
            if rows.len() != scenario.outcomes_a || rows.iter().any(|r| r.len() != scenario.outcomes_b) {
                return Err(BehaviorError::CellShape {
                    x,
                    y,
                    rows: rows.len(),
                    cols: rows.first().map_or(0, Vec::len),
                    want_rows: scenario.outcomes_a,
                    want_cols: scenario.outcomes_b,
                });
            }
            cells.push(rows.iter().flatten().cloned().collect());
        }
        Ok(Self { scenario, cells })
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(usize, usize, usize, usize) -> Rational) -> Self {
        let cells = scenario
            .cells()
            .map(|(x, y)| {
                (0..scenario.outcomes_a)
                    .flat_map(|a| (0..scenario.outcomes_b).map(move |b| (a, b)))
                    .map(|(a, b)| f(x, y, a, b))
                    .collect()
            })
            .collect();
        Self { scenario, cells }
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let v = Rational::new(1.into(), (scenario.cell_len() as i64).into());
        Self::from_fn(scenario, |_, _, _, _| v.clone())
    }

    /// Product behavior p(a|x) p(b|y).
    pub fn product(scenario: Scenario, alice: &[Vec<Rational>], bob: &[Vec<Rational>]) -> Self {
        Self::from_fn(scenario, |x, y, a, b| &alice[x - 1][a] * &bob[y - 1][b])
    }

    /// Convex (or affine) combination of behaviors on the same scenario.
    pub fn mix(parts: &[(Rational, &Behavior)]) -> Self {
        let scenario = parts[0].1.scenario;
        let mut out = Self::from_fn(scenario, |_, _, _, _| Rational::zero());
        for (w, b) in parts {
            assert_eq!(b.scenario.cell_len(), scenario.cell_len());
            for (oc, bc) in out.cells.iter_mut().zip(&b.cells) {
                for (o, v) in oc.iter_mut().zip(bc) {
                    *o += w * v;
                }
            }
        }
        out
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn with_scenario_flags(mut self, friend_on_a: bool, friend_on_b: bool) -> Self {
        self.scenario.friend_on_a = friend_on_a;
        self.scenario.friend_on_b = friend_on_b;
        self
    }

    pub fn p(&self, x: usize, y: usize, a: usize, b: usize) -> &Rational {
        &self.cells[self.scenario.cell(x, y)][self.scenario.entry(a, b)]
    }

    pub fn cell(&self, x: usize, y: usize) -> &[Rational] {
        &self.cells[self.scenario.cell(x, y)]
    }

    pub fn cells(&self) -> &[Vec<Rational>] {
        &self.cells
    }

    /// Row-major `outcomes_a x outcomes_b` matrix for one setting pair.
    pub fn matrix(&self, x: usize, y: usize) -> Vec<Vec<Rational>> {
        self.cell(x, y)
            .chunks(self.scenario.outcomes_b)
            .map(<[Rational]>::to_vec)
            .collect()
    }

    pub fn alice_marginal(&self, x: usize, y: usize) -> Vec<Rational> {
        (0..self.scenario.outcomes_a)
            .map(|a| (0..self.scenario.outcomes_b).map(|b| self.p(x, y, a, b)).sum())
            .collect()
    }

    pub fn bob_marginal(&self, x: usize, y: usize) -> Vec<Rational> {
        (0..self.scenario.outcomes_b)
            .map(|b| (0..self.scenario.outcomes_a).map(|a| self.p(x, y, a, b)).sum())
            .collect()
    }

    /// Relabels outcomes and settings. `perm_x[x-1]` is the new index of
    /// setting `x`; `relabel_a[x-1][a]` the new outcome for `a` at `x`.
    pub fn relabeled(
        &self,
        perm_x: &[usize],
        perm_y: &[usize],
        relabel_a: &[Vec<usize>],
        relabel_b: &[Vec<usize>],
    ) -> Self {
        let s = self.scenario;
        let mut cells = vec![vec![Rational::zero(); s.cell_len()]; s.cell_count()];
        for (x, y) in s.cells() {
            for a in 0..s.outcomes_a {
                for b in 0..s.outcomes_b {
                    let (nx, ny) = (perm_x[x - 1], perm_y[y - 1]);
                    let (na, nb) = (relabel_a[x - 1][a], relabel_b[y - 1][b]);
                    cells[s.cell(nx, ny)][s.entry(na, nb)] = self.p(x, y, a, b).clone();
                }
            }
        }
        Self { scenario: s, cells }
    }
}

/// One failed condition found by [`validate_behavior`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Negative { x: usize, y: usize, a: usize, b: usize, value: String },
    Normalization { x: usize, y: usize, sum: String },
    /// Alice's marginal at `x` differs between `y1` and `y2`.
    SignallingToAlice { x: usize, a: usize, y1: usize, y2: usize },
    /// Bob's marginal at `y` differs between `x1` and `x2`.
    SignallingToBob { y: usize, b: usize, x1: usize, x2: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub normalization_ok: bool,
    pub nonnegativity_ok: bool,
    pub no_signalling_a_ok: bool,
    pub no_signalling_b_ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.normalization_ok && self.nonnegativity_ok && self.no_signalling_ok()
    }

    pub fn no_signalling_ok(&self) -> bool {
        self.no_signalling_a_ok && self.no_signalling_b_ok
    }
}

/// Exact normalization, sign and no-signalling checks.
pub fn validate_behavior(beh: &Behavior) -> ValidationReport {
    let s = beh.scenario;
    let mut violations = Vec::new();
    for (x, y) in s.cells() {
        for a in 0..s.outcomes_a {
            for b in 0..s.outcomes_b {
                let v = beh.p(x, y, a, b);
                if v.is_negative() {
                    violations.push(Violation::Negative {
                        x,
                        y,
                        a,
                        b,
                        value: crate::rational::format_rational(v),
                    });
                }
            }
        }
        let sum: Rational = beh.cell(x, y).iter().sum();
        if !sum.is_one() {
            violations.push(Violation::Normalization {
                x,
                y,
                sum: crate::rational::format_rational(&sum),
            });
        }
    }
    for x in 1..=s.settings_a {
        let base = beh.alice_marginal(x, 1);
        for y in 2..=s.settings_b {
            let m = beh.alice_marginal(x, y);
            for a in 0..s.outcomes_a {
                if m[a] != base[a] {
                    violations.push(Violation::SignallingToAlice { x, a, y1: 1, y2: y });
                }
            }
        }
    }
    for y in 1..=s.settings_b {
        let base = beh.bob_marginal(1, y);
        for x in 2..=s.settings_a {
            let m = beh.bob_marginal(x, y);
            for b in 0..s.outcomes_b {
                if m[b] != base[b] {
                    violations.push(Violation::SignallingToBob { y, b, x1: 1, x2: x });
                }
            }
        }
    }
    let has = |f: fn(&Violation) -> bool| violations.iter().any(f);
    ValidationReport {
        normalization_ok: !has(|v| matches!(v, Violation::Normalization { .. })),
        nonnegativity_ok: !has(|v| matches!(v, Violation::Negative { .. })),
        no_signalling_a_ok: !has(|v| matches!(v, Violation::SignallingToAlice { .. })),
        no_signalling_b_ok: !has(|v| matches!(v, Violation::SignallingToBob { .. })),
        violations,
    }
}

/// A local deterministic strategy: one outcome per setting on each side,
/// plus the friends' outcomes, which are tied to setting 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DeterministicStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
    pub friend_c: Option<usize>,
    pub friend_d: Option<usize>,
}

impl DeterministicStrategy {
    pub fn to_behavior(&self, scenario: &Scenario) -> Behavior {
        Behavior::from_fn(*scenario, |x, y, a, b| {
            if self.alice[x - 1] == a && self.bob[y - 1] == b {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
    }
}

/// Every deterministic strategy of the scenario, in mixed-radix order
/// (Alice's setting 1 varies slowest).
pub fn enumerate_deterministic_vertices(
    scenario: &Scenario,
    cap: u64,
) -> Result<Vec<DeterministicStrategy>, BehaviorError> {
    let count = scenario.vertex_count();
    if count > cap as u128 {
        return Err(BehaviorError::SizeLimit {
            count: count.to_string(),
            cap,
        });
    }
    let alice = assignments(scenario.settings_a, scenario.outcomes_a);
    let bob = assignments(scenario.settings_b, scenario.outcomes_b);
    let mut out = Vec::with_capacity(count as usize);
    for a in &alice {
        for b in &bob {
            out.push(DeterministicStrategy {
                alice: a.clone(),
                bob: b.clone(),
                friend_c: scenario.friend_on_a.then(|| a[0]),
                friend_d: scenario.friend_on_b.then(|| b[0]),
            });
        }
    }
    Ok(out)
}

/// All maps from `settings` inputs to `outcomes` values, lexicographic.
pub(crate) fn assignments(settings: usize, outcomes: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(settings)];
    for _ in 0..settings {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..outcomes).map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o);
                    v
                })
            })
            .collect();
    }
    out
}

/// The PR box on the binary 2x2 scenario: p(ab|xy) = 1/2 iff
/// a xor b = (x-1)(y-1).
pub fn pr_box() -> Behavior {
    pr_box_embedded(Scenario::binary(2, 2))
}

/// PR box on settings {1,2}x{1,2} of a larger binary scenario; every
/// other setting pair is perfectly correlated.
pub fn pr_box_embedded(scenario: Scenario) -> Behavior {
    assert!(scenario.outcomes_a == 2 && scenario.outcomes_b == 2);
    let half = ratio(1, 2);
    Behavior::from_fn(scenario, |x, y, a, b| {
        let target = usize::from(x == 2 && y == 2);
        if a ^ b == target {
            half.clone()
        } else {
            Rational::zero()
        }
    })
}

fn sign(o: usize) -> i64 {
    if o == 0 {
        1
    } else {
        -1
    }
}

/// E(x,y) with outcome 0 as +1 and outcome 1 as -1.
pub fn correlator(beh: &Behavior, x: usize, y: usize) -> Rational {
    let mut e = Rational::zero();
    for a in 0..2 {
        for b in 0..2 {
            e += int(sign(a) * sign(b)) * beh.p(x, y, a, b);
        }
    }
    e
}

/// E(1,1) + E(1,2) + E(2,1) - E(2,2).
pub fn chsh_value(beh: &Behavior) -> Result<Rational, BehaviorError> {
    if !beh.scenario.is_binary_2x2() {
        return Err(BehaviorError::WrongScenario("a binary 2x2 scenario"));
    }
    Ok(correlator(beh, 1, 1) + correlator(beh, 1, 2) + correlator(beh, 2, 1) - correlator(beh, 2, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_passes_validation() {
        let r = validate_behavior(&Behavior::uniform(Scenario::binary(2, 2)));
        assert!(r.is_valid(), "{r:?}");
        assert!(r.violations.is_empty());
    }

    #[test]
    fn pr_box_marginals_and_validity() {
        let pr = pr_box();
        for (x, y) in pr.scenario().cells() {
            assert_eq!(pr.alice_marginal(x, y), vec![ratio(1, 2), ratio(1, 2)]);
            assert_eq!(pr.bob_marginal(x, y), vec![ratio(1, 2), ratio(1, 2)]);
        }
        assert!(validate_behavior(&pr).is_valid());
        assert_eq!(chsh_value(&pr).unwrap(), int(4));
    }

    #[test]
    fn negative_entry_reported() {
        let mut cells = Behavior::uniform(Scenario::binary(2, 2)).cells().to_vec();
        cells[1][0] = ratio(-1, 4);
        cells[1][1] = ratio(3, 4);
        let b = Behavior::from_cells(Scenario::binary(2, 2), cells).unwrap();
        let r = validate_behavior(&b);
        assert!(!r.nonnegativity_ok);
        assert!(r.normalization_ok);
        assert!(r.violations.contains(&Violation::Negative {
            x: 1,
            y: 2,
            a: 0,
            b: 0,
            value: "-1/4".into()
        }));
    }

    #[test]
    fn normalization_and_signalling_failures() {
        let s = Scenario::binary(2, 2);
        // Bob copies Alice's setting: signals to Bob, normalized.
        let b = Behavior::from_fn(s, |x, _, a, b| if a == 0 && b == x - 1 { int(1) } else { int(0) });
        let r = validate_behavior(&b);
        assert!(r.normalization_ok && r.nonnegativity_ok && r.no_signalling_a_ok);
        assert!(!r.no_signalling_b_ok);
        let half = Behavior::from_fn(s, |_, _, _, _| ratio(1, 8));
        assert!(!validate_behavior(&half).normalization_ok);
    }

    #[test]
    fn missing_cell_from_table() {
        let s = Scenario::binary(2, 2);
        let mut t = BTreeMap::new();
        for (x, y) in [(1, 1), (1, 2), (2, 1)] {
            t.insert((x, y), vec![vec![ratio(1, 4); 2]; 2]);
        }
        assert_eq!(Behavior::from_table(s, &t), Err(BehaviorError::MissingCell { x: 2, y: 2 }));
        t.insert((3, 1), vec![vec![ratio(1, 4); 2]; 2]);
        assert!(matches!(Behavior::from_table(s, &t), Err(BehaviorError::UnknownCell { .. })));
    }

    #[test]
    fn vertex_counts() {
        let cap = DEFAULT_VERTEX_CAP;
        assert_eq!(enumerate_deterministic_vertices(&Scenario::binary(2, 2), cap).unwrap().len(), 16);
        let fa = Scenario::binary(2, 2).with_friend_a();
        let v = enumerate_deterministic_vertices(&fa, cap).unwrap();
        assert_eq!(v.len(), 16);
        assert!(v.iter().all(|s| s.friend_c == Some(s.alice[0])));
        assert_eq!(enumerate_deterministic_vertices(&Scenario::binary(3, 3), cap).unwrap().len(), 64);
        let s = Scenario::new(2, 3, 3, 2).unwrap();
        assert_eq!(enumerate_deterministic_vertices(&s, cap).unwrap().len(), 9 * 8);
        assert!(matches!(
            enumerate_deterministic_vertices(&Scenario::binary(3, 3), 63),
            Err(BehaviorError::SizeLimit { .. })
        ));
    }

    #[test]
    fn deterministic_chsh_bound_is_two() {
        let s = Scenario::binary(2, 2);
        let max = enumerate_deterministic_vertices(&s, DEFAULT_VERTEX_CAP)
            .unwrap()
            .iter()
            .map(|v| chsh_value(&v.to_behavior(&s)).unwrap())
            .max()
            .unwrap();
        assert_eq!(max, int(2));
    }

    #[test]
    fn chsh_rejects_other_scenarios() {
        assert!(chsh_value(&Behavior::uniform(Scenario::binary(3, 2))).is_err());
        assert_eq!(chsh_value(&Behavior::uniform(Scenario::binary(2, 2))).unwrap(), int(0));
    }

    #[test]
    fn invalid_scenarios_rejected() {
        assert!(Scenario::new(0, 2, 2, 2).is_err());
        assert!(Scenario::new(2, 2, 1, 2).is_err());
    }
}
