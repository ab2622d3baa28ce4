use privmax::audit::{
    build_threshold_example, check_approx_dp, check_approx_dp_exact, estimate_distribution,
    exact_distribution, AuditSettings, NeighborPair, Outcome,
};
use privmax::noise::NoiseMode;
use privmax::{GapMechanismConfig, Mechanism, PrivacyBudget, QualityUniverse};

#[test]
fn em_closed_form_success_probability() {
    // e^{n alpha / 2} / (K - 1 + e^{n alpha / 2}), evaluated at 40 digits.
    for (k, want) in [(100u64, 0.5998596018130347), (10_000, 0.014625713645003695)] {
        let u = build_threshold_example(k, &[1; 20]).unwrap();
        let p = exact_distribution(&Mechanism::Exponential { alpha: 0.5 }, &u).unwrap();
        assert!((p.prob(Outcome::Item(1)) - want).abs() < 1e-14);
    }
}

#[test]
fn restricted_em_two_items() {
    // Scores 1 and 0 with n alpha / 2 = 1: e / (1 + e).
    let u = QualityUniverse::dense(2, vec![1.0, 0.0, -5.0]).unwrap();
    let p =
        exact_distribution(&Mechanism::RestrictedExponential { alpha: 1.0, ell: 2 }, &u).unwrap();
    assert!((p.prob(Outcome::Item(1)) - 0.7310585786300049).abs() < 1e-15);
    assert_eq!(p.prob(Outcome::Item(3)), 0.0);
}

#[test]
fn max_of_laplaces_two_items() {
    // P(0.1 + X > Y), X, Y ~ Lap(0.2), by numerical integration at 40 digits.
    let want = 0.6209183376796041;
    let u = QualityUniverse::dense(10, vec![0.1, 0.0]).unwrap();
    let trials = 1_000_000;
    let d = estimate_distribution(
        &Mechanism::MaxOfLaplaces { alpha: 1.0 },
        &u,
        trials,
        17,
        NoiseMode::Sampled,
    )
    .unwrap();
    let sd = (want * (1.0 - want) / trials as f64).sqrt();
    assert!((d.prob(Outcome::Item(1)) - want).abs() < 5.0 * sd);

    // Same instance through the sparse block path.
    let sparse = QualityUniverse::sparse(2, 10, vec![(1, 0.1)], 0.0).unwrap();
    let d = estimate_distribution(
        &Mechanism::MaxOfLaplaces { alpha: 1.0 },
        &sparse,
        trials,
        18,
        NoiseMode::Sampled,
    )
    .unwrap();
    assert!((d.prob(Outcome::Item(1)) - want).abs() < 5.0 * sd);
}

#[test]
fn gap_mechanism_on_tied_top_fails_with_known_probability() {
    let budget = PrivacyBudget::approximate(1.0, 0.05).unwrap();
    let mech = Mechanism::GapMax {
        budget,
        config: GapMechanismConfig::default(),
    };
    let u = QualityUniverse::dense(40, vec![0.5, 0.5, 0.1]).unwrap();
    let exact = exact_distribution(&mech, &u).unwrap();
    // P(Lap(b) <= b ln(1/delta)) = 1 - delta/2.
    assert!((exact.prob(Outcome::Fail) - (1.0 - 0.05 / 2.0)).abs() < 1e-14);
    let sampled = estimate_distribution(&mech, &u, 200_000, 5, NoiseMode::Sampled).unwrap();
    assert!(sampled.total_variation(&exact) < 0.003);
}

#[test]
fn em_audited_below_its_true_budget_is_flagged() {
    // Item 1 drops by 1/n while 19 others rise, so P(1) moves by close to
    // the full e^alpha.
    let mut up = vec![0.1; 20];
    up[0] = 0.0;
    let mut down = vec![0.0; 20];
    down[0] = 0.1;
    let pair = NeighborPair::new(
        QualityUniverse::dense(10, down).unwrap(),
        QualityUniverse::dense(10, up).unwrap(),
        "item 1 against the rest",
    )
    .unwrap();
    let mech = Mechanism::Exponential { alpha: 1.0 };
    let honest = check_approx_dp_exact(&pair, &mech, &PrivacyBudget::pure(1.0).unwrap()).unwrap();
    assert!(honest.passed());
    let understated =
        check_approx_dp_exact(&pair, &mech, &PrivacyBudget::pure(0.5).unwrap()).unwrap();
    assert!(!understated.passed());
    // Monte Carlo reaches the same verdict at this sample size.
    let settings = AuditSettings::new(200_000, 1);
    let sampled =
        check_approx_dp(&pair, &mech, &PrivacyBudget::pure(0.5).unwrap(), &settings).unwrap();
    assert!(!sampled.passed());
}

#[test]
fn audits_are_reproducible() {
    let pair = NeighborPair::new(
        QualityUniverse::dense(10, vec![0.3, 0.2, 0.2]).unwrap(),
        QualityUniverse::dense(10, vec![0.2, 0.3, 0.2]).unwrap(),
        "reorder",
    )
    .unwrap();
    let budget = PrivacyBudget::approximate(1.0, 0.05).unwrap();
    let mech = Mechanism::LargeMargin { budget, cap: None };
    let a = check_approx_dp(&pair, &mech, &budget, &AuditSettings::new(20_000, 3)).unwrap();
    let b = check_approx_dp(&pair, &mech, &budget, &AuditSettings::new(20_000, 3)).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.passed());
}
