use jointprob::duplication::{
    credence_outcome, credence_via_binomial, heads_count_distribution, simulate_betting, AgentRole, BuyPolicy,
    CredenceRule, DuplicationExperiment,
};
use jointprob::rational::{int, ratio, Rational};
use num_traits::One;
use proptest::prelude::*;

#[test]
fn binomial_credence_is_independent_of_lab_count() {
    for m in 1..=10u64 {
        for n in 1..=8u64 {
            let b = credence_via_binomial(n, m, &ratio(1, 2)).unwrap();
            assert_eq!(b.tails, ratio(1, m as i64 + 1), "N={n} M={m}");
            assert_eq!(&b.heads + &b.tails, Rational::one());
            let e = DuplicationExperiment::with_offer(n, m, ratio(1, 2), ratio(1, 50)).unwrap();
            let single = credence_outcome(&CredenceRule::ElgaNui, &e, AgentRole::Freya).unwrap();
            assert_eq!(single.tails, b.tails);
        }
    }
}

proptest! {
    #[test]
    fn biased_coin_matches_single_lab(n in 1u64..7, m in 1u64..6, qn in 0i64..=8) {
        let q = ratio(qn, 8);
        let d = heads_count_distribution(n, m, &q);
        prop_assert_eq!(d.iter().sum::<Rational>(), Rational::one());
        let b = credence_via_binomial(n, m, &q).unwrap();
        let expected = (int(1) - &q) / (int(m as i64) * &q + int(1) - &q);
        prop_assert_eq!(b.tails, expected);
    }

    #[test]
    fn equal_copies_make_rules_agree(n in 1u64..5, qn in 1i64..8) {
        let e = DuplicationExperiment::new(n, 1, ratio(qn, 8), ratio(1, 2), ratio(1, 10)).unwrap();
        for role in [AgentRole::Freya, AgentRole::Wigner] {
            prop_assert_eq!(
                credence_outcome(&CredenceRule::ElgaNui, &e, role).unwrap(),
                credence_outcome(&CredenceRule::Reflection, &e, role).unwrap()
            );
        }
    }
}

#[test]
fn large_simulation_matches_expectations() {
    let e = DuplicationExperiment::with_offer(200, 2, ratio(1, 2), ratio(1, 20)).unwrap();
    assert_eq!(e.price, ratio(2, 3) - ratio(1, 20));
    let r = simulate_betting(&e, 10_000, 42, &BuyPolicy::Always).unwrap();
    let expect = [
        (AgentRole::Freya, "tails_fraction", ratio(1, 3)),
        (AgentRole::Wigner, "tails_fraction", ratio(1, 2)),
        (AgentRole::Freya, "mean_profit", ratio(1, 20)),
        (AgentRole::Wigner, "mean_profit", ratio(1, 20) - ratio(1, 6)),
    ];
    for (role, q, exact) in expect {
        let est = r.estimate(role, q).unwrap();
        assert_eq!(est.exact, exact);
        assert!(est.z() < 4.0, "{role:?} {q}: {est:?}");
    }
}

#[test]
fn estimates_cover_truth_in_most_repetitions() {
    let e = DuplicationExperiment::with_offer(20, 2, ratio(1, 2), ratio(1, 20)).unwrap();
    let mut worst = usize::MAX;
    for est in 0..4 {
        let covered = (0..100u64)
            .filter(|seed| simulate_betting(&e, 400, *seed, &BuyPolicy::Always).unwrap().estimates[est].z() < 4.0)
            .count();
        worst = worst.min(covered);
    }
    assert!(worst >= 95, "{worst}");
}

#[test]
fn same_seed_same_csv() {
    let e = DuplicationExperiment::with_offer(6, 3, ratio(1, 3), ratio(1, 10)).unwrap();
    let a = simulate_betting(&e, 40, 5, &BuyPolicy::Always).unwrap();
    let b = simulate_betting(&e, 40, 5, &BuyPolicy::Always).unwrap();
    assert_eq!(a.rows_csv(), b.rows_csv());
    assert_eq!(a.summary_csv(), b.summary_csv());
    let c = simulate_betting(&e, 40, 6, &BuyPolicy::Always).unwrap();
    assert_ne!(a.rows_csv(), c.rows_csv());
}
