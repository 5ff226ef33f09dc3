//! Record-store data model: typed values, schemas, records and tables.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::codec::{CodecError, Reader, Writer};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("schema must declare at least one column")]
    EmptySchema,
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("record {id} has {got} values, schema declares {expected}")]
    Arity { id: u64, expected: usize, got: usize },
    #[error("record {id}, column `{column}`: expected {expected} value")]
    Kind {
        id: u64,
        column: String,
        expected: ValueKind,
    },
    #[error("duplicate record id {0}")]
    DuplicateId(u64),
    #[error("no column named `{0}`")]
    UnknownColumn(String),
    #[error("cannot read `{text}` as {kind}")]
    Parse { kind: ValueKind, text: String },
    #[error("unknown value kind `{0}`")]
    UnknownKind(String),
    #[error("malformed record encoding: {0}")]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Int,
    Str,
    Bytes,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Int => "int",
            ValueKind::Str => "str",
            ValueKind::Bytes => "bytes",
        }
    }

    fn tag(self) -> u8 {
        match self {
            ValueKind::Int => 0,
            ValueKind::Str => 1,
            ValueKind::Bytes => 2,
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ValueKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "int" => Ok(ValueKind::Int),
            "str" => Ok(ValueKind::Str),
            "bytes" => Ok(ValueKind::Bytes),
            other => Err(ModelError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Str(String),
    Bytes(Vec<u8>),
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Int(_) => ValueKind::Int,
            Value::Str(_) => ValueKind::Str,
            Value::Bytes(_) => ValueKind::Bytes,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Text form used for hierarchy lookups and CSV export. Byte strings are
    /// rendered as lowercase hex.
    pub fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Str(s) => s.clone(),
            Value::Bytes(b) => hex::encode(b),
        }
    }

    /// Inverse of [`Value::render`] for a declared kind.
    pub fn parse(kind: ValueKind, text: &str) -> Result<Self, ModelError> {
        let bad = || ModelError::Parse {
            kind,
            text: text.chars().take(32).collect(),
        };
        Ok(match kind {
            ValueKind::Int => Value::Int(text.trim().parse().map_err(|_| bad())?),
            ValueKind::Str => Value::Str(text.to_string()),
            ValueKind::Bytes => Value::Bytes(hex::decode(text.trim()).map_err(|_| bad())?),
        })
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub kind: ValueKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ValueKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Ordered column declarations. The record id is not a column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self, ModelError> {
        if columns.is_empty() {
            return Err(ModelError::EmptySchema);
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(ModelError::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, ModelError> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| ModelError::UnknownColumn(name.to_string()))
    }

    pub fn check(&self, record: &Record) -> Result<(), ModelError> {
        if record.values.len() != self.columns.len() {
            return Err(ModelError::Arity {
                id: record.id,
                expected: self.columns.len(),
                got: record.values.len(),
            });
        }
        for (col, value) in self.columns.iter().zip(&record.values) {
            if value.kind() != col.kind {
                return Err(ModelError::Kind {
                    id: record.id,
                    column: col.name.clone(),
                    expected: col.kind,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: u64,
    pub values: Vec<Value>,
}

impl Record {
    pub fn new(id: u64, values: Vec<Value>) -> Self {
        Self { id, values }
    }

    /// Canonical serialization: id, value count, then each value as a kind
    /// tag followed by its big-endian or length-prefixed body.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u64(self.id).u32(self.values.len() as u32);
        for v in &self.values {
            w.u8(v.kind().tag());
            match v {
                Value::Int(i) => {
                    w.i64(*i);
                }
                Value::Str(s) => {
                    w.bytes(s.as_bytes()).expect("column value under 4 GiB");
                }
                Value::Bytes(b) => {
                    w.bytes(b).expect("column value under 4 GiB");
                }
            }
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader::new(data);
        let id = r.u64()?;
        let count = r.u32()? as usize;
        let mut values = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let v = match r.u8()? {
                0 => Value::Int(r.i64()?),
                1 => {
                    let s = std::str::from_utf8(r.bytes()?)
                        .map_err(|_| CodecError::Invalid("string value is not UTF-8"))?;
                    Value::Str(s.to_string())
                }
                2 => Value::Bytes(r.bytes()?.to_vec()),
                _ => return Err(CodecError::Invalid("unknown value tag").into()),
            };
            values.push(v);
        }
        r.finish()?;
        Ok(Self { id, values })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub schema: Schema,
    pub records: Vec<Record>,
}

impl Table {
    pub fn new(name: impl Into<String>, schema: Schema) -> Self {
        Self {
            name: name.into(),
            schema,
            records: Vec::new(),
        }
    }

    /// Builds a table, checking every record against the schema and the ids
    /// for uniqueness.
    pub fn with_records(
        name: impl Into<String>,
        schema: Schema,
        records: Vec<Record>,
    ) -> Result<Self, ModelError> {
        let mut table = Self::new(name, schema);
        for r in records {
            table.push(r)?;
        }
        Ok(table)
    }

    pub fn push(&mut self, record: Record) -> Result<(), ModelError> {
        self.schema.check(&record)?;
        if self.records.iter().any(|r| r.id == record.id) {
            return Err(ModelError::DuplicateId(record.id));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, ModelError> {
        self.schema.index_of(name)
    }
}
