use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};

use jointprob::behavior::validate_behavior;
use jointprob::membership::{check_ld, check_lf};
use jointprob::quantum::{
    born_behavior, born_float, chsh_of, chsh_optimize, lf_violation_search, two_qubit_correlator, EwfsProtocol,
    PureState, QuantumError, StateFamily,
};
use num_complex::Complex64;

#[test]
fn singlet_reaches_tsirelson() {
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[2] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[4] = Complex64::new(-FRAC_1_SQRT_2, 0.0);
    let p = EwfsProtocol::new(0.0, 0.0, &[0.0, FRAC_PI_2], &[-3.0 * PI / 4.0, 3.0 * PI / 4.0])
        .unwrap()
        .with_state(PureState::new(amps).unwrap())
        .unwrap();
    let f = born_float(&p).unwrap();
    for (x, ta) in [(2, 0.0f64), (3, FRAC_PI_2)] {
        for (y, tb) in [(1, -3.0 * PI / 4.0), (2, 3.0 * PI / 4.0f64)] {
            assert!((f.correlator(x, y) + (ta - tb).cos()).abs() < 1e-12);
        }
    }
    assert!((f.chsh_on([2, 3], [1, 2]) - 2.0 * SQRT_2).abs() < 1e-12);
}

#[test]
fn born_table_matches_two_qubit_correlators() {
    let p = EwfsProtocol::new(0.6, 0.9, &[0.4, -1.1], &[2.0, 0.3, -0.7]).unwrap();
    let f = born_float(&p).unwrap();
    let psi = PureState::two_qubit(0.6, 0.9);
    for x in 1..=3 {
        // setting 1 reads the copied Z value
        let ta = if x == 1 { 0.0 } else { [0.4, -1.1][x - 2] };
        for (y, tb) in [2.0, 0.3, -0.7].into_iter().enumerate() {
            assert!((f.correlator(x, y + 1) - two_qubit_correlator(&psi, ta, tb)).abs() < 1e-12);
        }
    }
}

#[test]
fn optimizer_beats_every_grid_point() {
    let best = chsh_optimize(0, 20_000, StateFamily::Entangled);
    assert!(best.value >= 2.0 * SQRT_2 - 1e-6, "{best:?}");
    let grid: Vec<f64> = (0..20).map(|i| -PI + i as f64 * PI / 10.0).collect();
    let mut grid_max = f64::MIN;
    for t in (0..=8).map(|i| i as f64 * FRAC_PI_2 / 8.0) {
        for &a1 in &grid {
            for &a2 in &grid {
                for &b1 in &grid {
                    for &b2 in &grid {
                        // closed form for cos t|00> + sin t|11>
                        let e = |a: f64, b: f64| a.cos() * b.cos() + (2.0 * t).sin() * a.sin() * b.sin();
                        grid_max = grid_max.max(e(a1, b1) + e(a1, b2) + e(a2, b1) - e(a2, b2));
                    }
                }
            }
        }
    }
    assert!(best.value >= grid_max - 1e-9);
    assert!((chsh_of(&[best.schmidt_angle, best.alice[0], best.alice[1], best.bob[0], best.bob[1]]) - best.value).abs() < 1e-12);
    assert!(best.value <= 2.0 * SQRT_2 + 1e-12);
}

#[test]
fn product_states_stay_local() {
    let best = chsh_optimize(3, 20_000, StateFamily::Product);
    assert_eq!(best.schmidt_angle, 0.0);
    assert!(best.value <= 2.0 + 1e-9, "{best:?}");
}

#[test]
fn optimal_angles_give_a_nonlocal_exact_table() {
    let o = chsh_optimize(0, 20_000, StateFamily::Entangled);
    let p = EwfsProtocol::new(o.schmidt_angle, 0.0, &o.alice, &o.bob).unwrap();
    let b = born_behavior(&p, 1_000_000).unwrap();
    let s = b.exact.scenario();
    // the friend's setting is dropped: x = 2, 3 form a plain 2x2 table
    let plain = jointprob::behavior::Behavior::from_fn(
        jointprob::behavior::Scenario::binary(2, 2),
        |x, y, a, bb| b.exact.p(x + 1, y, a, bb).clone(),
    );
    assert_eq!(s.settings_a, 3);
    assert!(validate_behavior(&plain).is_valid());
    assert!(!check_ld(&plain, 1 << 20).unwrap().is_member());
}

#[test]
fn lf_search_certifies_a_violation() {
    let r = lf_violation_search(3, 3, 2024, 1000, 1_000_000).unwrap();
    assert!(r.membership.certificate.is_infeasible());
    r.membership.verify().unwrap();
    assert_eq!(r.trace.len(), r.index + 1);
    let again = lf_violation_search(3, 3, 2024, 1000, 1_000_000).unwrap();
    assert_eq!(again.index, r.index);
    assert_eq!(again.protocol.params(), r.protocol.params());
    let back = EwfsProtocol::from_params(&r.protocol.params()).unwrap();
    assert_eq!(back, r.protocol);
}

#[test]
fn lf_search_reports_exhaustion() {
    // seed 1 draws a 2x2 candidate inside the local set
    match lf_violation_search(2, 2, 1, 1, 1_000_000) {
        Err(QuantumError::NotFound { budget, trace }) => {
            assert_eq!(budget, 1);
            assert_eq!(trace.len(), 1);
            assert_eq!(trace[0].outcome, "feasible");
        }
        other => panic!("expected exhaustion, got {:?}", other.map(|r| r.index)),
    }
}

#[test]
fn violation_survives_coarser_rounding() {
    let r = lf_violation_search(3, 3, 2024, 1000, 1_000_000).unwrap();
    let coarse = r.born.float.rationalize(10_000).unwrap();
    assert!(validate_behavior(&coarse).is_valid());
    let m = check_lf(&coarse).unwrap();
    m.verify().unwrap();
    assert!(!m.is_member());
}

#[test]
fn friend_read_ignores_alice_angles() {
    let base = born_float(&EwfsProtocol::new(0.5, 0.3, &[0.1, 1.2], &[0.4, -0.8]).unwrap()).unwrap();
    let moved = born_float(&EwfsProtocol::new(0.5, 0.3, &[2.7, -2.2], &[0.4, -0.8]).unwrap()).unwrap();
    for y in 1..=2 {
        for a in 0..2 {
            for b in 0..2 {
                assert!((base.p(1, y, a, b) - moved.p(1, y, a, b)).abs() < 1e-12);
            }
        }
    }
}

// |<v_b(θb) ⊗ v_s(θa)|ψ>|² with ψ indexed 2b+s and real eigenvectors
// (cos θ/2, sin θ/2) for +1, (-sin θ/2, cos θ/2) for -1.
fn two_qubit_p(psi: &[Complex64; 4], ta: f64, tb: f64, a: usize, b: usize) -> f64 {
    let v = |t: f64, o: usize| {
        let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
        if o == 0 { [c, s] } else { [-s, c] }
    };
    let (va, vb) = (v(ta, a), v(tb, b));
    let mut amp = Complex64::new(0.0, 0.0);
    for bb in 0..2 {
        for ss in 0..2 {
            amp += psi[2 * bb + ss] * (vb[bb] * va[ss]);
        }
    }
    amp.norm_sqr()
}

#[test]
fn later_settings_match_the_friendless_experiment() {
    let alice = [0.4, -1.1, 2.5];
    let bob = [2.0, 0.3, -0.7];
    let p = EwfsProtocol::new(0.35, -0.6, &alice, &bob).unwrap();
    let f = born_float(&p).unwrap();
    let psi = PureState::two_qubit(0.35, -0.6);
    for (i, ta) in alice.iter().enumerate() {
        for (j, tb) in bob.iter().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    let want = two_qubit_p(&psi, *ta, *tb, a, b);
                    assert!((f.p(i + 2, j + 1, a, b) - want).abs() < 1e-12, "x={} y={} a={a} b={b}", i + 2, j + 1);
                }
            }
        }
    }
}
