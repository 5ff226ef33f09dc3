//! Value generalization hierarchies and table generalization.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;

use super::AnonError;
use crate::model::{Column, Schema, Table, Value, ValueKind};

/// One quasi-identifier's hierarchy. `maps[h - 1]` sends a level `h - 1`
/// value to its level `h` parent; level 0 holds the ground values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizationHierarchy {
    attribute: String,
    ground: BTreeSet<String>,
    maps: Vec<HashMap<String, String>>,
}

impl GeneralizationHierarchy {
    /// Builds a hierarchy from rows of `ground, level1, ..., top`.
    pub fn from_rows<I, R>(attribute: impl Into<String>, rows: I) -> Result<Self, AnonError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[String]>,
    {
        let attribute = attribute.into();
        let bad = |why: String| AnonError::Hierarchy {
            attribute: attribute.clone(),
            reason: why,
        };
        let mut width = None;
        let mut ground = BTreeSet::new();
        let mut maps: Vec<HashMap<String, String>> = Vec::new();
        for (n, row) in rows.into_iter().enumerate() {
            let row = row.as_ref();
            if row.is_empty() {
                return Err(bad(format!("row {} is empty", n + 1)));
            }
            match width {
                None => {
                    width = Some(row.len());
                    maps = vec![HashMap::new(); row.len() - 1];
                }
                Some(w) if w != row.len() => {
                    return Err(bad(format!("row {} has {} levels, expected {w}", n + 1, row.len())))
                }
                _ => {}
            }
            ground.insert(row[0].clone());
            for (h, pair) in row.windows(2).enumerate() {
                if let Some(prev) = maps[h].insert(pair[0].clone(), pair[1].clone()) {
                    if prev != pair[1] {
                        return Err(bad(format!(
                            "`{}` generalizes to both `{prev}` and `{}` at level {}",
                            pair[0],
                            pair[1],
                            h + 1
                        )));
                    }
                }
            }
        }
        if ground.is_empty() {
            return Err(bad("no rows".into()));
        }
        let tops: BTreeSet<&String> = match maps.last() {
            Some(top) => top.values().collect(),
            None => ground.iter().collect(),
        };
        if tops.len() != 1 {
            return Err(bad(format!("{} distinct top values, expected one", tops.len())));
        }
        Ok(Self {
            attribute,
            ground,
            maps,
        })
    }

    /// Reads the CSV mapping format: one `ground,level1,...,top` row per
    /// ground value, no header.
    pub fn from_csv(attribute: impl Into<String>, reader: impl Read) -> Result<Self, AnonError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(rec.iter().map(|s| s.trim().to_string()).collect::<Vec<_>>());
        }
        Self::from_rows(attribute, rows)
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn height(&self) -> usize {
        self.maps.len()
    }

    /// The level-`level` ancestor of a ground value.
    pub fn ancestor(&self, value: &str, level: usize) -> Result<&str, AnonError> {
        let missing = || AnonError::MissingValue {
            attribute: self.attribute.clone(),
            value: value.to_string(),
        };
        let mut cur = self.ground.get(value).ok_or_else(missing)?.as_str();
        for map in &self.maps[..level.min(self.maps.len())] {
            cur = map.get(cur).ok_or_else(missing)?;
        }
        Ok(cur)
    }
}

/// Per-quasi-identifier generalization levels, in hierarchy order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeneralizationVector(pub Vec<usize>);

impl GeneralizationVector {
    pub fn bottom(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn top(hierarchies: &[GeneralizationHierarchy]) -> Self {
        Self(hierarchies.iter().map(|h| h.height()).collect())
    }

    pub fn total_height(&self) -> usize {
        self.0.iter().sum()
    }

    /// Component-wise `<=`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }
}

/// Every vector of the lattice spanned by `heights`, in lexicographic order.
pub fn lattice(heights: &[usize]) -> Vec<GeneralizationVector> {
    let mut out = vec![Vec::new()];
    for &h in heights {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=h).map(move |l| {
                    let mut v = prefix.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(GeneralizationVector).collect()
}

pub(crate) fn check_vector(
    hierarchies: &[GeneralizationHierarchy],
    vector: &GeneralizationVector,
) -> Result<(), AnonError> {
    if vector.0.len() != hierarchies.len()
        || vector.0.iter().zip(hierarchies).any(|(l, h)| *l > h.height())
    {
        return Err(AnonError::VectorOutOfRange);
    }
    Ok(())
}

/// Replaces each quasi-identifier value by its ancestor at the vector's
/// level. Generalized columns become strings; level-0 columns and non-QI
/// columns are untouched.
pub fn generalize(
    table: &Table,
    hierarchies: &[GeneralizationHierarchy],
    vector: &GeneralizationVector,
) -> Result<Table, AnonError> {
    check_vector(hierarchies, vector)?;
    let cols: Vec<usize> = hierarchies
        .iter()
        .map(|h| table.column_index(h.attribute()))
        .collect::<Result<_, _>>()?;

    let mut columns = table.schema.columns().to_vec();
    for (&c, &level) in cols.iter().zip(&vector.0) {
        if level > 0 {
            columns[c] = Column::new(columns[c].name.clone(), ValueKind::Str);
        }
    }
    let mut out = Table::new(table.name.clone(), Schema::new(columns)?);
    for record in &table.records {
        let mut r = record.clone();
        for ((&c, &level), h) in cols.iter().zip(&vector.0).zip(hierarchies) {
            let anc = h.ancestor(&record.values[c].render(), level)?;
            if level > 0 {
                r.values[c] = Value::Str(anc.to_string());
            }
        }
        out.records.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Record;

    fn birth() -> GeneralizationHierarchy {
        let csv = "1990-07-14,1990-07,1990,*\n1990-07-02,1990-07,1990,*\n1991-01-30,1991-01,1991,*\n";
        GeneralizationHierarchy::from_csv("birth", csv.as_bytes()).unwrap()
    }

    #[test]
    fn day_stripping_first_level() {
        let h = birth();
        assert_eq!(h.height(), 3);
        assert_eq!(h.ancestor("1990-07-14", 1).unwrap(), "1990-07");
        assert_eq!(h.ancestor("1990-07-14", 3).unwrap(), "*");
    }

    #[test]
    fn inconsistent_or_multi_top_rejected() {
        let rows = vec![
            vec!["a".to_string(), "x".into(), "*".into()],
            vec!["a".to_string(), "y".into(), "*".into()],
        ];
        assert!(GeneralizationHierarchy::from_rows("q", rows).is_err());
        let rows = vec![
            vec!["a".to_string(), "x".into()],
            vec!["b".to_string(), "y".into()],
        ];
        assert!(GeneralizationHierarchy::from_rows("q", rows).is_err());
    }

    #[test]
    fn missing_ground_value() {
        let schema = Schema::new(vec![Column::new("birth", ValueKind::Str)]).unwrap();
        let t = Table::with_records("t", schema, vec![Record::new(1, vec!["2000-01-01".into()])]).unwrap();
        let err = generalize(&t, &[birth()], &GeneralizationVector(vec![1])).unwrap_err();
        assert!(matches!(err, AnonError::MissingValue { .. }));
    }

    #[test]
    fn lattice_is_lexicographic_cross_product() {
        let l = lattice(&[1, 2]);
        let got: Vec<Vec<usize>> = l.into_iter().map(|v| v.0).collect();
        assert_eq!(
            got,
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![1, 2]]
        );
    }
}
