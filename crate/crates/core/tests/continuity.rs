//! End-to-end continuity checks over the standard corpus: preservation
//! reports, the implication-chain harness, closure under sum and
//! composition, image compactness through a monotone map, and the
//! finite-scale uniform-limit bound.

use rhostat::corpus::default_corpus;
use rhostat::functions::{
    chain_check, closure_harness, image_compactness_check, test_deviation_preservation,
    test_downward_continuity, test_ward_continuity, uniform_limit_check, UniformFamily,
};
use rhostat::weights::make_weights;
use rhostat::{
    ClassifyConfig, ExtractConfig, Outcome, RealFunction, SequenceSource, WeightSequence,
    WeightSpec,
};

const H: usize = 1024;

/// Weights long enough for the interleaving constructions, which stretch a
/// length-`h` input to `4h` terms.
fn long_weights() -> WeightSequence<f64> {
    make_weights(&WeightSpec::Statistical, 4 * H).unwrap()
}

#[test]
fn a_shift_preserves_every_corpus_verdict() {
    let w = long_weights();
    let corpus = default_corpus(H, &w).unwrap();
    let cfg = ClassifyConfig::default();
    let f = RealFunction::affine(1.0, 5.0);

    // Shifting by a constant leaves every difference untouched, so every
    // in-class input must have an in-class image, for all three
    // preservation flavours. Out-of-class inputs are skipped by design.
    for report in [
        test_downward_continuity(&f, &corpus, &w, &cfg).unwrap(),
        test_ward_continuity(&f, &corpus, &w, &cfg).unwrap(),
        test_deviation_preservation(&f, &corpus, &w, &cfg).unwrap(),
    ] {
        assert_eq!(report.rows.len(), corpus.len());
        let mut accepted = 0;
        for row in &report.rows {
            if row.input == Outcome::Accept {
                accepted += 1;
                assert_eq!(
                    row.image,
                    Some(Outcome::Accept),
                    "{} on {}",
                    report.class,
                    row.sequence
                );
            } else {
                assert_eq!(row.image, None, "{} on {}", report.class, row.sequence);
            }
        }
        assert!(accepted >= 1, "{} has no in-class member", report.class);
        assert!(report.is_preserved(), "{} summary", report.class);
    }
}

#[test]
fn chain_check_is_consistent_for_identity_and_scaled_shift() {
    let w = long_weights();
    let corpus = default_corpus(H, &w).unwrap();
    let cfg = ClassifyConfig::default();

    for f in [
        RealFunction::identity(),
        RealFunction::affine(0.5, 1.0),
    ] {
        let chain = chain_check(&f, &corpus, &w, &cfg).unwrap();
        assert!(chain.downward.is_preserved(), "{} downward", f.label());
        assert!(!chain.ward.is_violated(), "{} ward", f.label());
        assert!(!chain.deviation.is_violated(), "{} deviation", f.label());
        // The flat member is in class for both gates, so the zigzag and the
        // limit interleaving must each fire at least once.
        assert!(chain.interleaves.iter().any(|r| r.construction == "zigzag"));
        assert!(chain.interleaves.iter().any(|r| r.construction == "limit"));
        for row in &chain.interleaves {
            assert_ne!(row.object, Outcome::Reject, "{} object", row.sequence);
            assert_ne!(row.image, Outcome::Reject, "{} image", row.sequence);
        }
        assert!(chain.consistent, "{}", f.label());
    }
}

#[test]
fn closure_survives_a_wide_piecewise_pair() {
    let w = long_weights();
    let corpus = default_corpus(H, &w).unwrap();
    let cfg = ClassifyConfig::default();

    // An increasing contraction whose knots swallow the escaping and
    // plunging members (their values reach roughly +-5e5 at this horizon).
    let f = RealFunction::pwl(
        "half-ramp",
        vec![-2.0e6, 0.0, 2.0e6],
        vec![-1.0e6, 0.0, 1.0e6],
    )
    .unwrap();
    let g = RealFunction::affine(0.25, -3.0);

    let closure = closure_harness(&f, &g, &corpus, &w, &cfg).unwrap();
    assert!(closure.sum.is_preserved());
    assert!(closure.composition.is_preserved());
    assert!(closure.inequality_holds);
    assert!(!closure.inequality_rows.is_empty());
    for row in &closure.inequality_rows {
        assert!(
            row.sum_count <= row.f_count + row.g_count,
            "{} at eps={} n={}",
            row.sequence,
            row.eps,
            row.n
        );
    }
}

#[test]
fn witness_images_stay_in_class_under_a_monotone_map() {
    let w = make_weights(&WeightSpec::Statistical, 2048).unwrap();
    let seqs = vec![
        SequenceSource::uniform_random(0.0, 1.0, 2000, 4242).unwrap(),
        SequenceSource::uniform_random(0.25, 0.75, 2000, 77).unwrap(),
    ];
    // Increasing and 1-Lipschitz on [0, 1], so witness gaps cannot grow.
    let f = RealFunction::pwl("easing", vec![0.0, 0.5, 1.0], vec![0.0, 0.45, 0.9]).unwrap();

    let report = image_compactness_check(&f, &seqs, &w, &ExtractConfig::default()).unwrap();
    assert!(!report.skipped);
    assert_eq!(report.rows.len(), seqs.len());
    for row in &report.rows {
        assert!(row.witness_len >= 10, "{}", row.sequence);
        assert_eq!(row.image, Outcome::Accept, "{}", row.sequence);
    }
}

#[test]
fn uniform_limit_counts_are_dominated_over_the_corpus() {
    let w = make_weights::<f64>(&WeightSpec::Statistical, H).unwrap();
    let corpus = default_corpus(H, &w).unwrap();
    let cfg = ClassifyConfig::default();

    let family = UniformFamily::shifted_identity();
    let report = uniform_limit_check(&family, &corpus, &w, &cfg).unwrap();

    assert!(report.limit_report.is_preserved());
    assert!(report.all_hold);
    for row in &report.rows {
        assert!(row.holds, "{} at eps={}", row.sequence, row.eps);
        if row.eps == 0.01 {
            // Smallest member index with 1/n <= 0.01/3.
            assert_eq!(row.member_index, 300, "{}", row.sequence);
        }
    }
}
