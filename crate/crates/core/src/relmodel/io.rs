use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Catalog, Database, DecimalError, Relation, SchemaError, Value};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: header {found:?} does not match schema {expected:?}", path.display())]
    HeaderMismatch { path: PathBuf, expected: Vec<String>, found: Vec<String> },
    #[error("{}:{line}: column `{column}`: {source}", path.display())]
    TypeParseError { path: PathBuf, line: u64, column: String, source: DecimalError },
    #[error("{}:{line}: expected {expected} fields, found {found}", path.display())]
    FieldCount { path: PathBuf, line: u64, expected: usize, found: usize },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: invalid catalog: {source}", path.display())]
    CatalogJson { path: PathBuf, source: serde_json::Error },
    #[error("invalid catalog: {0}")]
    Catalog(#[from] SchemaError),
}

impl LoadError {
    /// Whether the failure comes from the file system rather than content.
    pub fn is_io(&self) -> bool {
        matches!(self, LoadError::MissingFile(_) | LoadError::Io { .. })
    }
}

fn io_error(path: &Path, source: io::Error) -> LoadError {
    if source.kind() == io::ErrorKind::NotFound {
        LoadError::MissingFile(path.to_path_buf())
    } else {
        LoadError::Io { path: path.to_path_buf(), source }
    }
}

/// Parses a catalog of the form `{"relations":[{"name":..,"attributes":[..]}]}`.
pub fn parse_catalog(json: &str) -> Result<Catalog, LoadError> {
    let catalog: Catalog = serde_json::from_str(json)
        .map_err(|source| LoadError::CatalogJson { path: PathBuf::from("<catalog>"), source })?;
    catalog.check()?;
    Ok(catalog)
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, LoadError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let catalog: Catalog = serde_json::from_str(&text)
        .map_err(|source| LoadError::CatalogJson { path: path.to_path_buf(), source })?;
    catalog.check()?;
    Ok(catalog)
}

/// Loads `<dir>/<relation>.csv` for every schema in the catalog. Tuple ids
/// follow file row order starting at 0.
pub fn load_database(dir: impl AsRef<Path>, catalog: &Catalog) -> Result<Database, LoadError> {
    let dir = dir.as_ref();
    let mut relations = Vec::with_capacity(catalog.relations.len());
    for schema in &catalog.relations {
        let path = dir.join(format!("{}.csv", schema.name));
        let file = fs::File::open(&path).map_err(|e| io_error(&path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .quoting(false)
            .flexible(true)
            .from_reader(file);
        let csv_err = |source| LoadError::Csv { path: path.clone(), source };

        let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let expected: Vec<String> = schema.attribute_names().map(str::to_string).collect();
        if header != expected {
            return Err(LoadError::HeaderMismatch { path, expected, found: header });
        }

        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != schema.arity() {
                return Err(LoadError::FieldCount { path, line, expected: schema.arity(), found: record.len() });
            }
            let row = record
                .iter()
                .zip(&schema.attributes)
                .map(|(raw, attr)| {
                    Value::parse_as(raw, attr.ty).map_err(|source| LoadError::TypeParseError {
                        path: path.clone(),
                        line,
                        column: attr.name.clone(),
                        source,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        relations.push(Relation::from_rows(schema.clone(), rows).expect("rows were type-checked on parse"));
    }
    Ok(Database::new(relations))
}

/// Writes one CSV per relation in the dialect `load_database` reads.
pub fn write_database(db: &Database, dir: impl AsRef<Path>) -> Result<(), LoadError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    for rel in db.relations() {
        let path = dir.join(format!("{}.csv", rel.name()));
        let mut out = String::new();
        out.push_str(&rel.schema().attribute_names().collect::<Vec<_>>().join(","));
        out.push('\n');
        for t in rel.tuples() {
            out.push_str(&t.values.iter().map(Value::to_field).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        fs::write(&path, out).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}
