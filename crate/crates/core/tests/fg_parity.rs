//! Parity with the checked-in functional-group fixtures.
//!
//! `fixtures/fg_parity.jsonl` holds one record per curated molecule with
//! the expected group atom-sets, generated by the independent oracle in
//! `tools/fg_oracle.py` and hand-verified. Detection must match exactly.

use funqg_core::fg;
use funqg_core::smiles::parse_smiles;
use serde::Deserialize;

#[derive(Deserialize)]
struct FixtureRecord {
    smiles: String,
    groups: Vec<Vec<usize>>,
}

fn load_fixtures() -> Vec<FixtureRecord> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/fg_parity.jsonl"
    );
    let text = std::fs::read_to_string(path).expect("fixture file missing");
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("bad fixture line"))
        .collect()
}

#[test]
fn fixture_has_25_curated_molecules() {
    assert_eq!(load_fixtures().len(), 25);
}

#[test]
fn detected_groups_match_fixtures_exactly() {
    let fixtures = load_fixtures();
    let mut failures = Vec::new();
    for record in &fixtures {
        let molecule = parse_smiles(&record.smiles).unwrap();
        let detected: Vec<Vec<usize>> = fg::detect(&molecule)
            .into_iter()
            .map(|g| g.atom_indices)
            .collect();
        if detected != record.groups {
            failures.push(format!(
                "{}: expected {:?}, got {:?}",
                record.smiles, record.groups, detected
            ));
        }
    }
    assert!(
        failures.is_empty(),
        "{}/{} fixtures diverged:\n{}",
        failures.len(),
        fixtures.len(),
        failures.join("\n")
    );
}

#[test]
fn marked_atoms_agree_with_group_union() {
    for record in load_fixtures() {
        let molecule = parse_smiles(&record.smiles).unwrap();
        let marked: Vec<usize> = fg::mark_atoms(&molecule).into_iter().collect();
        let mut union: Vec<usize> = record.groups.iter().flatten().copied().collect();
        union.sort_unstable();
        assert_eq!(marked, union, "{}", record.smiles);
    }
}
