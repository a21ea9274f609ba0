//! What an observer can rebuild from the published average grade per
//! student, at each provenance level. `*` marks inferred cells, `-` Null.

use std::path::Path;

use provkit::engine::{evaluate, ProvenanceLevel};
use provkit::query::{parse, validate};
use provkit::reconstruct::reconstruct;
use provkit::relmodel::{load_catalog, load_database};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/grades");
    let catalog = load_catalog(dir.join("catalog.json"))?;
    let db = load_database(dir.join("db"), &catalog)?;
    let query = validate(&parse(&std::fs::read_to_string(dir.join("avg_per_student.query"))?)?, &catalog)?;

    for level in ProvenanceLevel::ALL {
        let result = evaluate(&db, &query, level);
        print!("{}", reconstruct(&result, &catalog, level)?);
        println!();
    }
    Ok(())
}
