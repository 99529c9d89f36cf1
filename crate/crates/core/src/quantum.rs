//! Born-rule behaviors for the friend-reversal protocol.
//!
//! Three qubits are ordered Bob ⊗ system ⊗ memory (index `4b + 2s + m`).
//! The friend's measurement is a controlled copy of the system's
//! computational basis into the memory qubit, which starts in `|0⟩`.
//! Alice's setting 1 reads the memory; settings `x >= 2` undo the copy with
//! `U†` and measure the system at angle `θ_x`, i.e. the observable
//! `cos θ Z + sin θ X`. Outcome 0 is the +1 eigenvalue.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{validate_behavior, Behavior, Scenario};
use crate::membership::{check_lf, Membership, MembershipError};
use crate::rational::{int, rationalize_f64, Rational};

pub const UNITARY_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-12;

type C = Complex64;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("state norm is {0}, expected 1")]
    Unnormalized(f64),
    #[error("state has dimension {got}, expected {want}")]
    Dimension { got: usize, want: usize },
    #[error("friend unitary deviates from unitarity by {0:e}")]
    NonUnitary(f64),
    #[error("rounded table has a negative entry at (x={x}, y={y}, a={a}, b={b})")]
    NegativeAfterRounding { x: usize, y: usize, a: usize, b: usize },
    #[error("no infeasible candidate among {budget} tried")]
    NotFound { budget: usize, trace: Vec<CandidateRecord> },
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error("search needs at least 2 settings per side and a budget of at least 1")]
    BadSearch,
}

/// Dense complex square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C::one();
        }
        m
    }

    pub fn from_real(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        Self {
            dim,
            data: rows.iter().map(|&v| C::new(v, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.data[i * self.dim + j] = v;
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.data[j * self.dim + i] = self.get(i, j).conj();
            }
        }
        m
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == C::zero() {
                    continue;
                }
                for j in 0..n {
                    m.data[i * n + j] += a * o.get(k, j);
                }
            }
        }
        m
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn kron(&self, o: &Self) -> Self {
        let n = self.dim * o.dim;
        let mut m = Self::zeros(n);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                for k in 0..o.dim {
                    for l in 0..o.dim {
                        m.set(i * o.dim + k, j * o.dim + l, a * o.get(k, l));
                    }
                }
            }
        }
        m
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn max_diff(u: &[C], v: &[C]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C>) -> Result<Self, QuantumError> {
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::Unnormalized(n));
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amplitudes
    }

    /// `cos t |00⟩ + sin t |11⟩` on (Bob, system), then `R_y(φ)` on the
    /// system qubit, so the friend's fixed basis can sit at any angle
    /// relative to the Schmidt basis.
    pub fn two_qubit(schmidt_angle: f64, system_rotation: f64) -> [C; 4] {
        let (c, s) = (schmidt_angle.cos(), schmidt_angle.sin());
        // R_y(φ) = [[cos φ/2, -sin φ/2], [sin φ/2, cos φ/2]]
        let (rc, rs) = ((system_rotation / 2.0).cos(), (system_rotation / 2.0).sin());
        // Bob 0 ⊗ (c |0⟩), Bob 1 ⊗ (s |1⟩)
        [
            C::new(c * rc, 0.0),
            C::new(c * rs, 0.0),
            C::new(-s * rs, 0.0),
            C::new(s * rc, 0.0),
        ]
    }

    /// Embeds a (Bob, system) state with the memory qubit in `|0⟩`.
    pub fn with_ready_memory(bs: &[C; 4]) -> Result<Self, QuantumError> {
        let mut amps = vec![C::zero(); 8];
        for (i, a) in bs.iter().enumerate() {
            amps[2 * i] = *a;
        }
        Self::new(amps)
    }
}

/// Projectors of `cos θ Z + sin θ X`: index 0 for +1, index 1 for -1.
pub fn projectors(angle: f64) -> [CMatrix; 2] {
    let (c, s) = (angle.cos(), angle.sin());
    [
        CMatrix::from_real(2, &[(1.0 + c) / 2.0, s / 2.0, s / 2.0, (1.0 - c) / 2.0]),
        CMatrix::from_real(2, &[(1.0 - c) / 2.0, -s / 2.0, -s / 2.0, (1.0 + c) / 2.0]),
    ]
}

fn z_projectors() -> [CMatrix; 2] {
    projectors(0.0)
}

/// Controlled copy of the system (qubit 1) into the memory (qubit 2).
pub fn controlled_copy() -> CMatrix {
    let mut u = CMatrix::zeros(8);
    for i in 0..8 {
        let sys = (i >> 1) & 1;
        u.set(i ^ sys, i, C::one());
    }
    u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    AliceDirect,
    Bob,
    Charlie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub angle: f64,
    pub party: Party,
}

impl MeasurementSetting {
    pub fn projectors(&self) -> [CMatrix; 2] {
        projectors(self.angle)
    }
}

/// Parameters that generate a protocol; serialized into behavior files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    pub schmidt_angle: String,
    pub system_rotation: String,
    /// angles for Alice's settings 2, 3, ...
    pub alice_angles: Vec<String>,
    pub bob_angles: Vec<String>,
    pub friend_unitary: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EwfsProtocol {
    pub state: PureState,
    pub unitary: CMatrix,
    /// `alice[0]` is setting 1 (read memory); the rest measure the system.
    pub alice: Vec<MeasurementSetting>,
    pub bob: Vec<MeasurementSetting>,
    pub schmidt_angle: f64,
    pub system_rotation: f64,
}

impl EwfsProtocol {
    pub fn new(
        schmidt_angle: f64,
        system_rotation: f64,
        alice_angles: &[f64],
        bob_angles: &[f64],
    ) -> Result<Self, QuantumError> {
        let state = PureState::with_ready_memory(&PureState::two_qubit(schmidt_angle, system_rotation))?;
        let mut alice = vec![MeasurementSetting {
            angle: 0.0,
            party: Party::Charlie,
        }];
        alice.extend(alice_angles.iter().map(|&angle| MeasurementSetting {
            angle,
            party: Party::AliceDirect,
        }));
        Ok(Self {
            state,
            unitary: controlled_copy(),
            alice,
            bob: bob_angles
                .iter()
                .map(|&angle| MeasurementSetting { angle, party: Party::Bob })
                .collect(),
            schmidt_angle,
            system_rotation,
        })
    }

    /// Maximally entangled state with evenly spread angles.
    pub fn default_protocol() -> Self {
        Self::new(FRAC_PI_4, 0.0, &[FRAC_PI_2, PI], &[FRAC_PI_4, 3.0 * FRAC_PI_4, -FRAC_PI_4]).expect("valid")
    }

    /// Replaces the initial state with an arbitrary 8-dimensional one.
    pub fn with_state(mut self, state: PureState) -> Result<Self, QuantumError> {
        if state.amplitudes.len() != 8 {
            return Err(QuantumError::Dimension {
                got: state.amplitudes.len(),
                want: 8,
            });
        }
        self.state = state;
        Ok(self)
    }

    pub fn with_unitary(mut self, u: CMatrix) -> Self {
        self.unitary = u;
        self
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::binary(self.alice.len(), self.bob.len()).with_friend_a()
    }

    pub fn params(&self) -> ProtocolParams {
        let f = |v: f64| format!("{v:?}");
        ProtocolParams {
            schmidt_angle: f(self.schmidt_angle),
            system_rotation: f(self.system_rotation),
            alice_angles: self.alice[1..].iter().map(|m| f(m.angle)).collect(),
            bob_angles: self.bob.iter().map(|m| f(m.angle)).collect(),
            friend_unitary: "controlled-copy".into(),
        }
    }

    pub fn from_params(p: &ProtocolParams) -> Result<Self, String> {
        let g = |s: &str| s.parse::<f64>().map_err(|e| format!("bad angle {s:?}: {e}"));
        let alice: Result<Vec<f64>, _> = p.alice_angles.iter().map(|s| g(s)).collect();
        let bob: Result<Vec<f64>, _> = p.bob_angles.iter().map(|s| g(s)).collect();
        if p.friend_unitary != "controlled-copy" {
            return Err(format!("unknown friend unitary {:?}", p.friend_unitary));
        }
        Self::new(g(&p.schmidt_angle)?, g(&p.system_rotation)?, &alice?, &bob?).map_err(|e| e.to_string())
    }

    fn check(&self) -> Result<(), QuantumError> {
        let n = norm(&self.state.amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::Unnormalized(n));
        }
        let dev = self.unitary.adjoint().mul(&self.unitary).max_abs_diff(&CMatrix::identity(8));
        if dev > UNITARY_TOL {
            return Err(QuantumError::NonUnitary(dev));
        }
        Ok(())
    }
}

/// Probability table with float entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatBehavior {
    pub scenario: Scenario,
    /// `cells[scenario.cell(x,y)][scenario.entry(a,b)]`
    pub cells: Vec<Vec<f64>>,
}

impl FloatBehavior {
    pub fn p(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.cells[self.scenario.cell(x, y)][self.scenario.entry(a, b)]
    }

    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        self.p(x, y, 0, 0) - self.p(x, y, 0, 1) - self.p(x, y, 1, 0) + self.p(x, y, 1, 1)
    }

    /// CHSH on the chosen settings: E11 + E12 + E21 - E22.
    pub fn chsh_on(&self, xs: [usize; 2], ys: [usize; 2]) -> f64 {
        self.correlator(xs[0], ys[0]) + self.correlator(xs[0], ys[1]) + self.correlator(xs[1], ys[0])
            - self.correlator(xs[1], ys[1])
    }

    pub fn max_normalization_error(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| (c.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_signalling(&self) -> f64 {
        let s = self.scenario;
        let mut worst = 0.0f64;
        for x in 1..=s.settings_a {
            for y in 1..=s.settings_b {
                for a in 0..s.outcomes_a {
                    let m = |y| (0..s.outcomes_b).map(|b| self.p(x, y, a, b)).sum::<f64>();
                    worst = worst.max((m(y) - m(1)).abs());
                }
                for b in 0..s.outcomes_b {
                    let m = |x| (0..s.outcomes_a).map(|a| self.p(x, y, a, b)).sum::<f64>();
                    worst = worst.max((m(x) - m(1)).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.cells
            .iter()
            .flatten()
            .zip(o.cells.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Exact table that is normalized and no-signalling by construction:
    /// marginals and correlators are rounded separately (continued
    /// fractions, denominator at most `den_cap`) and recombined as
    /// p(ab|xy) = (1 + ±A_x ± B_y ± E_xy) / 4. Binary outcomes only.
    pub fn rationalize(&self, den_cap: u64) -> Result<Behavior, QuantumError> {
        let s = self.scenario;
        assert!(s.outcomes_a == 2 && s.outcomes_b == 2);
        let round = |v: f64| rationalize_f64(v, den_cap).expect("finite probability");
        let alice: Vec<Rational> = (1..=s.settings_a)
            .map(|x| {
                let m = (1..=s.settings_b)
                    .map(|y| self.p(x, y, 0, 0) + self.p(x, y, 0, 1) - self.p(x, y, 1, 0) - self.p(x, y, 1, 1))
                    .sum::<f64>()
                    / s.settings_b as f64;
                round(m)
            })
            .collect();
        let bob: Vec<Rational> = (1..=s.settings_b)
            .map(|y| {
                let m = (1..=s.settings_a)
                    .map(|x| self.p(x, y, 0, 0) - self.p(x, y, 0, 1) + self.p(x, y, 1, 0) - self.p(x, y, 1, 1))
                    .sum::<f64>()
                    / s.settings_a as f64;
                round(m)
            })
            .collect();
        let sign = |o: usize| if o == 0 { int(1) } else { int(-1) };
        let quarter = Rational::new(1.into(), 4.into());
        let corr: Vec<Rational> = s.cells().map(|(x, y)| round(self.correlator(x, y))).collect();
        let beh = Behavior::from_fn(s, |x, y, a, b| {
            (Rational::one()
                + sign(a) * &alice[x - 1]
                + sign(b) * &bob[y - 1]
                + sign(a) * sign(b) * &corr[s.cell(x, y)])
                * &quarter
        });
        for (x, y) in s.cells() {
            for a in 0..2 {
                for b in 0..2 {
                    if beh.p(x, y, a, b).is_negative() {
                        return Err(QuantumError::NegativeAfterRounding { x, y, a, b });
                    }
                }
            }
        }
        Ok(beh)
    }
}

/// Applies a single-qubit operator to qubit `k` of a 3-qubit vector
/// (0 = Bob, 1 = system, 2 = memory).
fn apply_local(op: &CMatrix, k: usize, v: &[C]) -> Vec<C> {
    let shift = 2 - k;
    let mut out = vec![C::zero(); 8];
    for (i, amp) in v.iter().enumerate() {
        if *amp == C::zero() {
            continue;
        }
        let bit = (i >> shift) & 1;
        for nb in 0..2 {
            let j = (i & !(1 << shift)) | (nb << shift);
            out[j] += op.get(nb, bit) * amp;
        }
    }
    out
}

fn prob(psi: &[C], ops: &[(&CMatrix, usize)]) -> f64 {
    let mut v = psi.to_vec();
    for (op, k) in ops {
        v = apply_local(op, *k, &v);
    }
    // projectors are Hermitian and idempotent: p = ⟨ψ|P|ψ⟩
    psi.iter().zip(&v).map(|(a, b)| (a.conj() * b).re).sum()
}

pub struct BornBehavior {
    pub float: FloatBehavior,
    pub exact: Behavior,
}

/// Float table of the protocol.
pub fn born_float(p: &EwfsProtocol) -> Result<FloatBehavior, QuantumError> {
    p.check()?;
    let s = p.scenario();
    let after_u = p.unitary.apply(&p.state.amplitudes);
    let reversed = p.unitary.adjoint().apply(&after_u);
    let zs = z_projectors();
    let mut cells = Vec::with_capacity(s.cell_count());
    for (x, y) in s.cells() {
        let pb = p.bob[y - 1].projectors();
        let mut cell = vec![0.0; 4];
        for a in 0..2 {
            for b in 0..2 {
                cell[s.entry(a, b)] = if x == 1 {
                    prob(&after_u, &[(&pb[b], 0), (&zs[a], 2)])
                } else {
                    let pa = p.alice[x - 1].projectors();
                    prob(&reversed, &[(&pb[b], 0), (&pa[a], 1)])
                };
            }
        }
        cells.push(cell);
    }
    Ok(FloatBehavior { scenario: s, cells })
}

/// Float table plus its exact no-signalling rationalization.
pub fn born_behavior(p: &EwfsProtocol, den_cap: u64) -> Result<BornBehavior, QuantumError> {
    let float = born_float(p)?;
    let exact = float.rationalize(den_cap)?;
    Ok(BornBehavior { float, exact })
}

/// `U†U = I` entrywise and `U†Uψ = ψ`, both within 1e-12.
pub fn reverse_check(p: &EwfsProtocol) -> bool {
    reversal_deviation(p) <= UNITARY_TOL
}

pub fn reversal_deviation(p: &EwfsProtocol) -> f64 {
    let udu = p.unitary.adjoint().mul(&p.unitary);
    let dev_u = udu.max_abs_diff(&CMatrix::identity(p.unitary.dim()));
    let back = p.unitary.adjoint().apply(&p.unitary.apply(&p.state.amplitudes));
    dev_u.max(max_diff(&back, &p.state.amplitudes))
}

/// ⟨ψ| B(θb) ⊗ A(θa) |ψ⟩ for a (Bob, system) state.
pub fn two_qubit_correlator(psi: &[C; 4], theta_a: f64, theta_b: f64) -> f64 {
    let obs = |t: f64| CMatrix::from_real(2, &[t.cos(), t.sin(), t.sin(), -t.cos()]);
    let op = obs(theta_b).kron(&obs(theta_a));
    let v = op.apply(psi);
    psi.iter().zip(&v).map(|(a, b)| (a.conj() * b).re).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    /// Schmidt angle free in [0, π/2].
    Entangled,
    /// Schmidt angle pinned to 0.
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshOptimum {
    pub schmidt_angle: f64,
    pub alice: [f64; 2],
    pub bob: [f64; 2],
    pub value: f64,
    pub iterations: usize,
}

pub fn chsh_of(params: &[f64; 5]) -> f64 {
    let psi = PureState::two_qubit(params[0], 0.0);
    let e = |a: f64, b: f64| two_qubit_correlator(&psi, a, b);
    e(params[1], params[3]) + e(params[1], params[4]) + e(params[2], params[3]) - e(params[2], params[4])
}

/// Pattern search with step halving and periodic restarts; deterministic
/// for a given seed.
pub fn chsh_optimize(seed: u64, iterations: usize, family: StateFamily) -> ChshOptimum {
    const RESTART_EVERY: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<usize> = match family {
        StateFamily::Entangled => (0..5).collect(),
        StateFamily::Product => (1..5).collect(),
    };
    let draw = |rng: &mut ChaCha8Rng| -> [f64; 5] {
        let mut p = [0.0; 5];
        if family == StateFamily::Entangled {
            p[0] = rng.random_range(0.0..FRAC_PI_2);
        }
        for v in p.iter_mut().skip(1) {
            *v = rng.random_range(-PI..PI);
        }
        p
    };
    let mut best = draw(&mut rng);
    let mut best_val = chsh_of(&best);
    let mut cur = best;
    let mut cur_val = best_val;
    let mut step = 0.5;
    let mut stalled = 0;
    for it in 0..iterations {
        if it > 0 && it % RESTART_EVERY == 0 {
            cur = draw(&mut rng);
            cur_val = chsh_of(&cur);
            step = 0.5;
            stalled = 0;
        }
        let k = free[it % free.len()];
        let mut improved = false;
        for dir in [1.0, -1.0] {
            let mut trial = cur;
            trial[k] += dir * step;
            if k == 0 {
                trial[0] = trial[0].clamp(0.0, FRAC_PI_2);
            }
            let v = chsh_of(&trial);
            if v > cur_val {
                cur = trial;
                cur_val = v;
                improved = true;
                break;
            }
        }
        if improved {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= free.len() {
                step *= 0.5;
                stalled = 0;
                if step < 1e-14 {
                    step = 1e-14;
                }
            }
        }
        if cur_val > best_val {
            best = cur;
            best_val = cur_val;
        }
    }
    ChshOptimum {
        schmidt_angle: best[0],
        alice: [best[1], best[2]],
        bob: [best[3], best[4]],
        value: best_val,
        iterations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub params: ProtocolParams,
    /// "feasible", "infeasible", or why the candidate was skipped
    pub outcome: String,
}

pub struct LfSearchResult {
    pub protocol: EwfsProtocol,
    pub born: BornBehavior,
    pub membership: Membership,
    pub index: usize,
    pub trace: Vec<CandidateRecord>,
}

fn candidate(rng: &mut ChaCha8Rng, settings_a: usize, settings_b: usize) -> EwfsProtocol {
    let t = rng.random_range(0.0..FRAC_PI_2);
    let phi = rng.random_range(-PI..PI);
    let alice: Vec<f64> = (1..settings_a).map(|_| rng.random_range(-PI..PI)).collect();
    let bob: Vec<f64> = (0..settings_b).map(|_| rng.random_range(-PI..PI)).collect();
    EwfsProtocol::new(t, phi, &alice, &bob).expect("normalized by construction")
}

/// Draws protocols from the seed, rationalizes each Born table, and returns
/// the first one whose LF check is infeasible. Candidates are evaluated in
/// parallel batches; the lowest infeasible index wins, so the result does
/// not depend on scheduling.
pub fn lf_violation_search(
    settings_a: usize,
    settings_b: usize,
    seed: u64,
    budget: usize,
    den_cap: u64,
) -> Result<LfSearchResult, QuantumError> {
    if settings_a < 2 || settings_b < 2 || budget == 0 {
        return Err(QuantumError::BadSearch);
    }
    const BATCH: usize = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Vec::new();
    let mut start = 0;
    while start < budget {
        let end = (start + BATCH).min(budget);
        let protocols: Vec<EwfsProtocol> = (start..end).map(|_| candidate(&mut rng, settings_a, settings_b)).collect();
        let results: Vec<(EwfsProtocol, Result<(BornBehavior, Membership), String>)> = protocols
            .into_par_iter()
            .map(|p| {
                let r = born_behavior(&p, den_cap).map_err(|e| e.to_string()).and_then(|born| {
                    if !validate_behavior(&born.exact).is_valid() {
                        return Err("rounded table failed validation".to_string());
                    }
                    let m = check_lf(&born.exact).map_err(|e| e.to_string())?;
                    Ok((born, m))
                });
                (p, r)
            })
            .collect();
        for (offset, (protocol, r)) in results.into_iter().enumerate() {
            let index = start + offset;
            let outcome = match &r {
                Ok((_, m)) => m.certificate.verdict().to_string(),
                Err(e) => format!("skipped: {e}"),
            };
            trace.push(CandidateRecord {
                index,
                params: protocol.params(),
                outcome,
            });
            if let Ok((born, membership)) = r {
                if membership.certificate.is_infeasible() {
                    return Ok(LfSearchResult {
                        protocol,
                        born,
                        membership,
                        index,
                        trace,
                    });
                }
            }
        }
        start = end;
    }
    Err(QuantumError::NotFound { budget, trace })
}
