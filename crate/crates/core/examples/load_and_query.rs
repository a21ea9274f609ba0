//! Loads the grade database from CSV and evaluates a query with
//! how-provenance.
//!
//!     cargo run --example load_and_query -- "pi[Student, Grade](sigma[Module = 'DB'](Grades))"

use std::path::Path;

use provkit::engine::{evaluate, ProvenanceLevel};
use provkit::query::{parse, validate};
use provkit::relmodel::{load_catalog, load_database};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/grades");
    let catalog = load_catalog(dir.join("catalog.json"))?;
    let db = load_database(dir.join("db"), &catalog)?;

    let text = std::env::args().nth(1).unwrap_or_else(|| "agg[Module; count()](Grades)".to_string());
    let query = validate(&parse(&text)?, &catalog)?;
    let result = evaluate(&db, &query, ProvenanceLevel::How);

    println!("{}", query.text());
    let header: Vec<&str> = result.schema.attribute_names().collect();
    println!("  {}  | how", header.join(" | "));
    for t in &result.tuples {
        let values: Vec<String> = t.values.iter().map(ToString::to_string).collect();
        println!("  {}  | {}", values.join(" | "), t.how.as_ref().expect("how level"));
    }
    Ok(())
}
