//! The same aggregate annotated at each provenance level.

use provkit::engine::{evaluate, ProvenanceLevel};
use provkit::query::{parse, validate};
use provkit::relmodel::{Attribute, AttributeType, Database, Relation, Schema, Value};

fn main() {
    let schema = Schema::new(
        "Grades",
        vec![
            Attribute::new("Student", AttributeType::Text),
            Attribute::new("Module", AttributeType::Text),
            Attribute::new("Grade", AttributeType::Number),
        ],
    )
    .unwrap();
    let row = |s: &str, m: &str, g: &str| vec![Value::txt(s), Value::txt(m), Value::num(g)];
    let db = Database::new([Relation::from_rows(
        schema,
        vec![row("Alice", "DB", "1.0"), row("Alice", "Math", "1.3"), row("Bob", "DB", "2.0")],
    )
    .unwrap()]);

    let query = validate(&parse("agg[Student; avg(Grade)](Grades)").unwrap(), &db.catalog()).unwrap();
    for level in ProvenanceLevel::ALL {
        let result = evaluate(&db, &query, level);
        println!("{level}:");
        for (attr, sources) in &result.lineage.attributes {
            let sources: Vec<String> = sources.iter().map(ToString::to_string).collect();
            println!("  {attr} <- {}", sources.join(", "));
        }
        for t in &result.tuples {
            let mut line = format!("  ({}, {})", t.values[0], t.values[1]);
            if let Some(w) = &t.witnesses {
                line += &format!("  witnesses {w}");
            }
            if let Some(h) = &t.how {
                line += &format!("  how {h}");
            }
            println!("{line}");
        }
    }
}
