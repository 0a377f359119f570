use std::io::{Read, Write};
use std::path::Path;

use super::{validate_schema, ColumnKind, ColumnSchema, Table};
use crate::error::{Error, Result};
use crate::io::write_atomic;

pub fn load_schema(path: &Path) -> Result<Vec<ColumnSchema>> {
    let schema: Vec<ColumnSchema> = crate::io::read_json(path)?;
    validate_schema(&schema)?;
    Ok(schema)
}

pub fn save_schema(path: &Path, schema: &[ColumnSchema]) -> Result<()> {
    crate::io::write_json(path, schema)
}

pub fn load_table(path: &Path, schema: &[ColumnSchema]) -> Result<Table> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(file, schema)
}

/// Parse CSV with a header row matching `schema` names in order. Every cell
/// must be present; categorical cells are labels from the schema.
pub fn read_table<R: Read>(reader: R, schema: &[ColumnSchema]) -> Result<Table> {
    validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let expected: Vec<&str> = schema.iter().map(|c| c.name.as_str()).collect();
    if header != expected {
        return Err(Error::Schema(format!(
            "header {header:?} does not match schema {expected:?}"
        )));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); schema.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != schema.len() {
            return Err(Error::RaggedRow {
                row,
                expected: schema.len(),
                found: record.len(),
            });
        }
        for ((col, cell), out) in schema.iter().zip(record.iter()).zip(columns.iter_mut()) {
            let cell = cell.trim();
            let value = match col.kind {
                ColumnKind::Numeric => cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::NotNumeric {
                        column: col.name.clone(),
                        row,
                        cell: cell.to_string(),
                    })?,
                ColumnKind::Categorical => col.category_index(cell).ok_or_else(|| {
                    Error::UnknownCategory {
                        column: col.name.clone(),
                        label: cell.to_string(),
                    }
                })? as f64,
            };
            out.push(value);
        }
    }
    Table::new(schema.to_vec(), columns)
}

/// Numeric cells use Rust's shortest round-trip float formatting.
pub fn write_table<W: Write>(writer: W, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(table.names())?;
    let mut record = Vec::with_capacity(table.n_cols());
    for r in 0..table.n_rows() {
        record.clear();
        for (c, col) in table.schema().iter().enumerate() {
            let v = table.cell(r, c);
            record.push(match col.kind {
                ColumnKind::Numeric => format!("{v}"),
                ColumnKind::Categorical => col.categories[v as usize].clone(),
            });
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_table(path: &Path, table: &Table) -> Result<()> {
    let mut buf = Vec::new();
    write_table(&mut buf, table)?;
    write_atomic(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Vec<ColumnSchema> {
        vec![
            ColumnSchema::numeric("x"),
            ColumnSchema::categorical("c", ["a", "b"]),
        ]
    }

    #[test]
    fn parses_mixed_csv() {
        let t = read_table("x,c\n1.5,a\n-2,b\n3e2,a\n".as_bytes(), &schema()).unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.column_at(0), [1.5, -2.0, 300.0]);
        assert_eq!(t.column_at(1), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn unknown_category() {
        let err = read_table("x,c\n1,z\n".as_bytes(), &schema()).unwrap_err();
        assert!(err.to_string().contains("unknown category"), "{err}");
    }

    #[test]
    fn non_numeric_and_missing_cells() {
        assert!(matches!(
            read_table("x,c\nfoo,a\n".as_bytes(), &schema()),
            Err(Error::NotNumeric { .. })
        ));
        assert!(matches!(
            read_table("x,c\n,a\n".as_bytes(), &schema()),
            Err(Error::NotNumeric { .. })
        ));
        assert!(matches!(
            read_table("x,c\nNaN,a\n".as_bytes(), &schema()),
            Err(Error::NotNumeric { .. })
        ));
    }

    #[test]
    fn ragged_row() {
        assert!(matches!(
            read_table("x,c\n1,a,3\n".as_bytes(), &schema()),
            Err(Error::RaggedRow { row: 0, .. })
        ));
    }

    #[test]
    fn header_must_match() {
        assert!(matches!(
            read_table("c,x\na,1\n".as_bytes(), &schema()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let t = Table::new(
            schema(),
            vec![vec![0.1 + 0.2, -1e-300, 1.0 / 3.0], vec![1.0, 0.0, 1.0]],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, &t).unwrap();
        let back = read_table(buf.as_slice(), &schema()).unwrap();
        assert_eq!(back, t);
    }
}
