//! CSV form of a table.
//!
//! The header's first field is `id`; every other field is `name:kind` with
//! kind one of `int`, `str`, `bytes` (a bare `name` means `str`). Byte
//! strings are hex. Quoting follows the usual RFC 4180 rules.

use std::io::{Read, Write};

use super::StoreError;
use crate::model::{Column, ModelError, Record, Schema, Table, Value, ValueKind};

fn parse_header(fields: &csv::StringRecord) -> Result<Schema, StoreError> {
    let mut it = fields.iter();
    match it.next() {
        Some(first) if first.trim() == "id" => {}
        _ => return Err(StoreError::CsvFormat("first header field must be `id`".into())),
    }
    let mut columns = Vec::new();
    for f in it {
        let (name, kind) = match f.rsplit_once(':') {
            Some((name, kind)) => (name, kind.trim().parse::<ValueKind>()?),
            None => (f, ValueKind::Str),
        };
        columns.push(Column::new(name.trim(), kind));
    }
    Ok(Schema::new(columns)?)
}

/// Reads a whole table.
pub fn read_table_csv(name: &str, reader: impl Read) -> Result<Table, StoreError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let schema = parse_header(rdr.headers()?)?;
    let mut table = Table::new(name, schema);
    for (n, row) in rdr.records().enumerate() {
        let row = row?;
        let line = n + 2;
        let width = table.schema.len() + 1;
        if row.len() != width {
            return Err(StoreError::CsvRow {
                line,
                source: ModelError::Arity {
                    id: 0,
                    expected: width,
                    got: row.len(),
                },
            });
        }
        let id: u64 = row[0].trim().parse().map_err(|_| StoreError::CsvRow {
            line,
            source: ModelError::Parse {
                kind: ValueKind::Int,
                text: row[0].chars().take(32).collect(),
            },
        })?;
        let values = table
            .schema
            .columns()
            .iter()
            .zip(row.iter().skip(1))
            .map(|(c, text)| Value::parse(c.kind, text))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| StoreError::CsvRow { line, source })?;
        table
            .push(Record::new(id, values))
            .map_err(|source| StoreError::CsvRow { line, source })?;
    }
    Ok(table)
}

pub fn write_table_csv(table: &Table, writer: impl Write) -> Result<(), StoreError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(table.schema.columns().iter().map(|c| format!("{}:{}", c.name, c.kind)));
    w.write_record(&header)?;
    for r in &table.records {
        let mut row = vec![r.id.to_string()];
        row.extend(r.values.iter().map(Value::render));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| StoreError::Io {
        path: "<csv output>".into(),
        source: e,
    })?;
    Ok(())
}
