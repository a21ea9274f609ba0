//! Replaces published grades by grade areas and measures the effect.

use std::path::Path;

use provkit::engine::{evaluate, AnnotatedResult, ProvenanceLevel};
use provkit::mitigate::{generalize_result, GeneralizationHierarchy};
use provkit::privacy::{analyze_disclosure, PrivacyPolicy};
use provkit::query::{parse, validate};
use provkit::reconstruct::reconstruct;
use provkit::relmodel::{load_catalog, load_database};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/grades");
    let catalog = load_catalog(dir.join("catalog.json"))?;
    let db = load_database(dir.join("db"), &catalog)?;
    let policy = PrivacyPolicy::from_json(&std::fs::read_to_string(dir.join("policy.json"))?)?;
    let hierarchy = GeneralizationHierarchy::load(dir.join("grade_hierarchy.json"))?;
    let query = validate(&parse("agg[Student; avg(Grade)](Grades)")?, &catalog)?;
    let result = evaluate(&db, &query, ProvenanceLevel::How);

    let audit = |r: &AnnotatedResult| -> Result<(), Box<dyn std::error::Error>> {
        let rec = reconstruct(r, &catalog, ProvenanceLevel::How)?;
        let report = analyze_disclosure(&rec, &db, r, &policy)?;
        for t in &r.tuples {
            println!("  {}: {}", t.values[0], t.how.as_ref().expect("how level"));
        }
        println!("  leakage {}, verdict {}", report.leakage, report.verdict);
        Ok(())
    };
    for level in 0..hierarchy.levels() {
        println!("hierarchy level {level}:");
        audit(&generalize_result(&result, &hierarchy, level)?)?;
    }
    Ok(())
}
