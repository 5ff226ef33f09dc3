//! Distinct l-diversity: every quasi-identifier class must hold at least `l`
//! different sensitive values.

use std::collections::BTreeSet;

use super::kanon::{equivalence_classes, EquivalenceClass};
use super::AnonError;
use crate::model::Table;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LDiversity {
    Pass,
    /// Classes with fewer than `l` distinct sensitive values; candidates for
    /// suppression.
    Fail(Vec<EquivalenceClass>),
}

impl LDiversity {
    pub fn passed(&self) -> bool {
        matches!(self, LDiversity::Pass)
    }
}

pub fn l_diversity_check(
    table: &Table,
    qi_columns: &[&str],
    sensitive: &str,
    l: usize,
) -> Result<LDiversity, AnonError> {
    if l == 0 {
        return Err(AnonError::LZero);
    }
    let s = table.column_index(sensitive)?;
    let by_id: std::collections::HashMap<u64, usize> =
        table.records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    let failing: Vec<_> = equivalence_classes(table, qi_columns)?
        .into_iter()
        .filter(|class| {
            let distinct: BTreeSet<_> = class
                .ids
                .iter()
                .map(|id| &table.records[by_id[id]].values[s])
                .collect();
            distinct.len() < l
        })
        .collect();
    Ok(if failing.is_empty() {
        LDiversity::Pass
    } else {
        LDiversity::Fail(failing)
    })
}
