//! Suppression and permutation applied to a how-level reconstruction, and
//! permutation of a source column before publication.

use std::path::Path;

use provkit::engine::{evaluate, ProvenanceLevel};
use provkit::mitigate::{permute_column, CellSelector, MitigationPlan};
use provkit::privacy::{analyze_disclosure, PrivacyPolicy};
use provkit::query::{parse, validate};
use provkit::reconstruct::reconstruct;
use provkit::relmodel::{load_catalog, load_database, AttrRef};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/grades");
    let catalog = load_catalog(dir.join("catalog.json"))?;
    let db = load_database(dir.join("db"), &catalog)?;
    let policy = PrivacyPolicy::from_json(&std::fs::read_to_string(dir.join("policy.json"))?)?;
    let query = validate(&parse("agg[Student; avg(Grade)](Grades)")?, &catalog)?;
    let result = evaluate(&db, &query, ProvenanceLevel::How);
    let rec = reconstruct(&result, &catalog, ProvenanceLevel::How)?;
    let grade = AttrRef::new("Grades", "Grade");

    let plans = [
        MitigationPlan::Suppress(CellSelector::attribute(&grade)),
        MitigationPlan::Permute { attribute: grade.clone(), seed: 7 },
    ];
    for plan in &plans {
        let mitigated = plan.apply(&rec)?;
        let report = analyze_disclosure(&mitigated, &db, &result, &policy)?;
        println!("after {}: leakage {}", plan.name(), report.leakage);
        print!("{mitigated}");
    }

    let grades = db.relation("Grades").expect("shipped relation");
    let shuffled = permute_column(grades, "Grade", 7)?;
    println!("source column permuted with seed 7:");
    for (before, after) in grades.tuples().iter().zip(shuffled.tuples()) {
        println!("  {}: {} -> {}", before.id, before.values[2], after.values[2]);
    }
    Ok(())
}
