//! End-to-end classification behaviour: the same sequences pushed through
//! different weight families, the implication table over the standard
//! corpus, and serialization of the resulting reports.

use rhostat::classify::{classify, implication_report, ClassifyConfig, SequenceClass};
use rhostat::corpus::default_corpus;
use rhostat::density::Outcome;
use rhostat::sequence::SequenceSource;
use rhostat::weights::{make_weights, WeightSpec};
use rhostat::WeightSequence;
use std::io::Write;

fn weight_families(h: usize) -> Vec<WeightSequence<f64>> {
    let statistical = make_weights(&WeightSpec::Statistical, h).unwrap();

    let spec = WeightSpec::parse("expr:n + 1/n;1=1").unwrap();
    let shifted = make_weights(&spec, h).unwrap();

    let mut file = tempfile::NamedTempFile::new().unwrap();
    for n in 1..=h {
        writeln!(file, "{}", (n as f64 + 1.0) / 2.0).unwrap();
    }
    file.flush().unwrap();
    let table_spec = WeightSpec::parse(&format!("table:{}", file.path().display())).unwrap();
    let table = make_weights(&table_spec, h).unwrap();
    // The file may be dropped once materialized.
    drop(file);

    vec![statistical, shifted, table]
}

#[test]
fn statistical_outcomes_agree_across_weight_families() {
    let h = 2048;
    let cfg = ClassifyConfig::<f64>::default();
    let classes = [
        SequenceClass::RhoStatQuasiCauchy,
        SequenceClass::RhoStatDownwardQuasiCauchy,
    ];
    let expectations = [
        ("-k", [Outcome::Reject, Outcome::Accept]),
        ("k", [Outcome::Reject, Outcome::Reject]),
        ("(-1)^k", [Outcome::Reject, Outcome::Reject]),
    ];
    for w in weight_families(h) {
        for (expr, expected) in &expectations {
            let s = SequenceSource::closed_form(expr, h).unwrap();
            for (class, want) in classes.iter().zip(expected) {
                let got = classify(&s, &w, class, &cfg).unwrap().outcome;
                assert_eq!(
                    got,
                    *want,
                    "sequence {expr}, class {}, weights {}",
                    class.name(),
                    w.label()
                );
            }
        }
        // A flat sequence accepts everywhere regardless of the weights.
        let flat = SequenceSource::constant(3.0, h).unwrap();
        let report = implication_report(&flat, &w, &cfg).unwrap();
        assert!(report.is_consistent());
        for row in &report.rows {
            assert_eq!(row.outcome, Outcome::Accept, "class {}", row.class);
        }
    }
}

#[test]
fn implication_table_stays_consistent_on_the_default_corpus() {
    let h = 1024;
    let w = make_weights::<f64>(&WeightSpec::Statistical, h).unwrap();
    let cfg = ClassifyConfig::<f64>::default();
    for s in default_corpus(h, &w).unwrap() {
        let report = implication_report(&s, &w, &cfg).unwrap();
        assert_eq!(report.rows.len(), 7, "sequence {}", s.label());
        assert!(
            report.is_consistent(),
            "sequence {} produced anomalies: {:?}",
            s.label(),
            report.anomalies
        );
    }
}

#[test]
fn falling_and_rising_ramps_tell_the_two_classes_apart() {
    let h = 4096;
    let w = make_weights::<f64>(&WeightSpec::Statistical, h).unwrap();
    let cfg = ClassifyConfig::<f64>::default();

    let falling = SequenceSource::<f64>::closed_form("-k", h).unwrap();
    let report = implication_report(&falling, &w, &cfg).unwrap();
    assert!(report.is_consistent());
    assert_eq!(
        report.outcome_of("rho-statistically downward quasi-Cauchy"),
        Some(Outcome::Accept)
    );
    assert_eq!(
        report.outcome_of("rho-statistically quasi-Cauchy"),
        Some(Outcome::Reject)
    );
    // Monotone decrease also satisfies the pointwise downward tail class.
    assert_eq!(
        report.outcome_of("downward half Cauchy"),
        Some(Outcome::Accept)
    );

    let rising = SequenceSource::<f64>::closed_form("k", h).unwrap();
    let report = implication_report(&rising, &w, &cfg).unwrap();
    assert!(report.is_consistent());
    for row in &report.rows {
        assert_eq!(row.outcome, Outcome::Reject, "class {}", row.class);
    }
}

#[test]
fn slowly_settling_sequence_accepts_both_difference_classes() {
    let h = 16384;
    let w = make_weights::<f64>(&WeightSpec::Statistical, h).unwrap();
    let cfg = ClassifyConfig::<f64>::default();
    let s = SequenceSource::<f64>::closed_form("3 + 1/k", h).unwrap();
    for class in [
        SequenceClass::RhoStatQuasiCauchy,
        SequenceClass::RhoStatDownwardQuasiCauchy,
        SequenceClass::QuasiCauchy,
        SequenceClass::DownwardQuasiCauchy,
    ] {
        let got = classify(&s, &w, &class, &cfg).unwrap().outcome;
        assert_eq!(got, Outcome::Accept, "class {}", class.name());
    }
}

#[test]
fn implication_report_round_trips_through_json() {
    let h = 1024;
    let w = make_weights::<f64>(&WeightSpec::Statistical, h).unwrap();
    let cfg = ClassifyConfig::<f64>::default();
    let s = SequenceSource::<f64>::closed_form("-k", h).unwrap();
    let report = implication_report(&s, &w, &cfg).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: rhostat::ImplicationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.rows.len(), report.rows.len());
    for (a, b) in report.rows.iter().zip(&back.rows) {
        assert_eq!(a.class, b.class);
        assert_eq!(a.outcome, b.outcome);
    }
    assert_eq!(back.anomalies.len(), report.anomalies.len());
}

#[test]
fn lacunary_windows_match_the_global_count_for_a_single_window() {
    use rhostat::classify::{lacunary_profile, LacunaryWindows};
    use rhostat::density::{density_profile, PredicateTag};

    let h = 257;
    let s = SequenceSource::<f64>::closed_form("(-1)^k", h).unwrap();
    let single = LacunaryWindows::new(vec![0, h - 1]).unwrap();
    let profile = lacunary_profile(&s, &single, 1.0).unwrap();
    assert_eq!(profile.checkpoints.len(), 1);

    let w = make_weights::<f64>(&WeightSpec::Statistical, h).unwrap();
    let global = density_profile(&s, &w, 1.0, PredicateTag::Downward, None, &[h - 1]).unwrap();
    assert_eq!(
        profile.checkpoints[0].count,
        global.checkpoints[0].count,
        "one window spanning everything sees exactly the global hits"
    );
}
