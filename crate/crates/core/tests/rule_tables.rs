//! The shipped rule files evaluated on small fixtures whose flags were
//! enumerated by hand.

use std::path::PathBuf;

use rulevae::rules::{cluster_violation_flags, violation_report, AttributeVector, RuleSet};

fn fixture(name: &str) -> RuleSet {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    RuleSet::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(rows: &[[u8; 10]]) -> Vec<AttributeVector> {
    rows.iter()
        .map(|r| AttributeVector::new(r.iter().map(|&v| v as f64).collect()))
        .collect()
}

fn flags(
    rs: &RuleSet,
    id: &str,
    labels: &[usize],
    k: usize,
    attrs: &[AttributeVector],
) -> Vec<bool> {
    let rule = rs.rules.iter().find(|r| r.id == id).unwrap();
    cluster_violation_flags(rule, labels, k, attrs).unwrap()
}

const F: bool = false;
const T: bool = true;

// columns: stealth uav crew supercruise avionics fighter combat transport jet supersonic
fn aircraft_six() -> Vec<AttributeVector> {
    rows(&[
        [1, 0, 1, 0, 1, 1, 1, 0, 1, 1],
        [1, 0, 1, 0, 0, 1, 1, 0, 1, 0],
        [1, 1, 0, 0, 1, 0, 0, 1, 1, 1],
        [0, 1, 0, 0, 0, 0, 0, 1, 0, 0],
        [0, 0, 1, 0, 0, 0, 1, 0, 0, 0],
        [1, 1, 0, 1, 1, 0, 0, 0, 1, 0],
    ])
}

const SPLIT: [usize; 6] = [0, 0, 0, 1, 1, 1];

#[test]
fn aircraft_rule_file_shape() {
    let rs = fixture("aircraft_rules.json");
    assert_eq!(rs.schema.len(), 10);
    assert_eq!(rs.rule_ids(), ["stealth", "uav", "mission", "physical"]);
}

#[test]
fn stealth_implication_ignores_labels() {
    let rs = fixture("aircraft_rules.json");
    let attrs = aircraft_six();
    // s1 lacks avionics; s2 has neither fighter nor supercruise; s5 supercruises
    let want = [F, T, T, F, F, F];
    assert_eq!(flags(&rs, "stealth", &SPLIT, 2, &attrs), want);
    assert_eq!(flags(&rs, "stealth", &[0; 6], 1, &attrs), want);
}

#[test]
fn uav_homogeneity_flags_minority() {
    let rs = fixture("aircraft_rules.json");
    // cluster 0 uav = [0,0,1], cluster 1 uav = [1,0,1]
    assert_eq!(
        flags(&rs, "uav", &SPLIT, 2, &aircraft_six()),
        [F, F, T, F, T, F]
    );
}

#[test]
fn uav_homogeneity_tie_keeps_level_zero() {
    let rs = fixture("aircraft_rules.json");
    // {s0,s1} and {s2,s3} are uniform; {s4,s5} is a 1:1 split, so level 1 loses
    let labels = [0, 0, 1, 1, 2, 2];
    assert_eq!(
        flags(&rs, "uav", &labels, 3, &aircraft_six()),
        [F, F, F, F, F, T]
    );
}

#[test]
fn mission_exclusion_rarer_side_and_tie() {
    let rs = fixture("aircraft_rules.json");
    // cluster 0: two combat vs one transport; cluster 1: one each
    assert_eq!(
        flags(&rs, "mission", &SPLIT, 2, &aircraft_six()),
        [F, F, T, T, T, F]
    );
}

#[test]
fn physical_homogeneity_checks_both_attributes() {
    let rs = fixture("aircraft_rules.json");
    // cluster 0 jet uniform, supersonic [1,0,1]; cluster 1 jet [0,0,1], supersonic uniform
    assert_eq!(
        flags(&rs, "physical", &SPLIT, 2, &aircraft_six()),
        [F, T, F, F, F, T]
    );
}

#[test]
fn per_level_singletons_clear_cluster_rules() {
    let rs = fixture("aircraft_rules.json");
    let attrs = aircraft_six();
    let labels: Vec<usize> = (0..6).collect();
    let report = violation_report(&rs, &labels, 6, &attrs).unwrap();
    assert_eq!(report.count_for("stealth"), Some(2));
    for id in ["uav", "mission", "physical"] {
        assert_eq!(report.count_for(id), Some(0), "{id}");
    }
}

#[test]
fn vehicle_rule_file_shape() {
    let rs = fixture("vehicle_rules.json");
    assert_eq!(rs.schema.len(), 18);
    assert_eq!(rs.schema.encoded_width(), 6 + 3 + 3 + 3 + 3 + 13);
    assert_eq!(
        rs.rule_ids(),
        ["body_style", "performance", "proportion", "luxury"]
    );
}

#[test]
fn proportion_spread_uses_median_window() {
    let rs = fixture("vehicle_rules.json");
    let h = rs.schema.index_of("height_to_length").unwrap();
    let ratios = [0.30, 0.33, 0.45, 0.32, 0.50, 0.70];
    let attrs: Vec<AttributeVector> = ratios
        .iter()
        .map(|&r| {
            let mut v = vec![0.0; 18];
            v[h] = r;
            AttributeVector::new(v)
        })
        .collect();
    // cluster 0 median 0.325, window [0.285, 0.365]; cluster 1 median 0.6, window [0.56, 0.64]
    let labels = [0, 0, 0, 0, 1, 1];
    assert_eq!(
        flags(&rs, "proportion", &labels, 2, &attrs),
        [F, F, T, F, T, T]
    );
    // a range within the bound flags nothing
    assert_eq!(
        flags(&rs, "proportion", &[0, 0, 1, 0, 2, 3], 4, &attrs),
        [F; 6]
    );
}
