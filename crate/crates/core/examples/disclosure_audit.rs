//! Scores the reconstructions of a published aggregate against the source
//! under the shipped policy.

use std::path::Path;

use provkit::engine::{evaluate, ProvenanceLevel};
use provkit::privacy::{analyze_disclosure, compare_levels, render_comparison, zero_variance_groups, PrivacyPolicy};
use provkit::query::{parse, validate};
use provkit::reconstruct::reconstruct;
use provkit::relmodel::{load_catalog, load_database, AttrRef};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/grades");
    let catalog = load_catalog(dir.join("catalog.json"))?;
    let db = load_database(dir.join("db"), &catalog)?;
    let policy = PrivacyPolicy::from_json(&std::fs::read_to_string(dir.join("policy.json"))?)?;
    let query = validate(&parse("agg[Student; avg(Grade)](Grades)")?, &catalog)?;

    print!("{}", render_comparison(&compare_levels(&db, &query, &policy)?));

    let result = evaluate(&db, &query, ProvenanceLevel::Why);
    let rec = reconstruct(&result, &catalog, ProvenanceLevel::Why)?;
    let report = analyze_disclosure(&rec, &db, &result, &policy)?;
    println!("\nwhy level: {}", report.verdict);
    for reason in &report.reasons {
        println!("  {reason}");
    }
    let groups = zero_variance_groups(&db, &result, &AttrRef::new("Grades", "Grade"))?;
    println!("groups whose grades all coincide: {groups:?}");
    Ok(())
}
