//! k-anonymity checking, minimal generalization search and the
//! discernibility metric.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::hierarchy::{generalize, lattice, GeneralizationHierarchy, GeneralizationVector};
use super::AnonError;
use crate::model::{Table, Value};

/// Records sharing one quasi-identifier tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    pub qi: Vec<Value>,
    pub ids: Vec<u64>,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.ids.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KAnonymity {
    Pass,
    /// Classes smaller than `k`.
    Fail(Vec<EquivalenceClass>),
}

impl KAnonymity {
    pub fn passed(&self) -> bool {
        matches!(self, KAnonymity::Pass)
    }
}

/// Partitions records by their quasi-identifier tuple, in tuple order.
pub fn equivalence_classes(table: &Table, qi_columns: &[&str]) -> Result<Vec<EquivalenceClass>, AnonError> {
    if qi_columns.is_empty() {
        return Err(AnonError::EmptyQi);
    }
    let cols: Vec<usize> = qi_columns
        .iter()
        .map(|c| table.column_index(c))
        .collect::<Result<_, _>>()?;
    let mut groups: BTreeMap<Vec<Value>, Vec<u64>> = BTreeMap::new();
    for r in &table.records {
        let key = cols.iter().map(|&c| r.values[c].clone()).collect();
        groups.entry(key).or_default().push(r.id);
    }
    Ok(groups
        .into_iter()
        .map(|(qi, ids)| EquivalenceClass { qi, ids })
        .collect())
}

pub fn k_anonymity_check(table: &Table, qi_columns: &[&str], k: usize) -> Result<KAnonymity, AnonError> {
    if k < 2 {
        return Err(AnonError::KTooSmall(k));
    }
    let failing: Vec<_> = equivalence_classes(table, qi_columns)?
        .into_iter()
        .filter(|c| c.size() < k)
        .collect();
    Ok(if failing.is_empty() {
        KAnonymity::Pass
    } else {
        KAnonymity::Fail(failing)
    })
}

/// `DM = sum_{|E| >= k} |E|^2 + sum_{|E| < k} |D| * |E|`.
pub fn discernibility_metric(class_sizes: &[usize], k: usize, total: usize) -> u64 {
    class_sizes
        .iter()
        .map(|&e| {
            let e = e as u64;
            if e >= k as u64 {
                e * e
            } else {
                total as u64 * e
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalGeneralization {
    pub vector: GeneralizationVector,
    /// Every record of a class below `k`, and only those.
    pub suppressed_ids: Vec<u64>,
    pub dm_cost: u64,
}

/// Caches the outcome of generalizing at each lattice point.
struct Evaluator<'a> {
    table: &'a Table,
    hierarchies: &'a [GeneralizationHierarchy],
    qi: Vec<&'a str>,
    k: usize,
    max_suppress: usize,
    cache: HashMap<GeneralizationVector, bool>,
}

impl<'a> Evaluator<'a> {
    fn new(table: &'a Table, hierarchies: &'a [GeneralizationHierarchy], k: usize, max_suppress: usize) -> Result<Self, AnonError> {
        if k < 2 {
            return Err(AnonError::KTooSmall(k));
        }
        if hierarchies.is_empty() {
            return Err(AnonError::EmptyQi);
        }
        Ok(Self {
            table,
            hierarchies,
            qi: hierarchies.iter().map(|h| h.attribute()).collect(),
            k,
            max_suppress,
            cache: HashMap::new(),
        })
    }

    fn classes(&self, v: &GeneralizationVector) -> Result<Vec<EquivalenceClass>, AnonError> {
        let g = generalize(self.table, self.hierarchies, v)?;
        equivalence_classes(&g, &self.qi)
    }

    fn satisfies(&mut self, v: &GeneralizationVector) -> Result<bool, AnonError> {
        if let Some(&ok) = self.cache.get(v) {
            return Ok(ok);
        }
        let suppressed: usize = self
            .classes(v)?
            .iter()
            .filter(|c| c.size() < self.k)
            .map(|c| c.size())
            .sum();
        let ok = suppressed <= self.max_suppress;
        self.cache.insert(v.clone(), ok);
        Ok(ok)
    }

    fn heights(&self) -> Vec<usize> {
        self.hierarchies.iter().map(|h| h.height()).collect()
    }

    fn finish(&self, vector: GeneralizationVector) -> Result<MinimalGeneralization, AnonError> {
        let classes = self.classes(&vector)?;
        let mut suppressed_ids: Vec<u64> = classes
            .iter()
            .filter(|c| c.size() < self.k)
            .flat_map(|c| c.ids.iter().copied())
            .collect();
        suppressed_ids.sort_unstable();
        let sizes: Vec<usize> = classes.iter().map(|c| c.size()).collect();
        Ok(MinimalGeneralization {
            dm_cost: discernibility_metric(&sizes, self.k, self.table.len()),
            vector,
            suppressed_ids,
        })
    }
}

/// Lowest total height, then lexicographically smallest.
fn preferred(candidates: impl IntoIterator<Item = GeneralizationVector>) -> Option<GeneralizationVector> {
    candidates
        .into_iter()
        .min_by(|a, b| a.total_height().cmp(&b.total_height()).then_with(|| a.cmp(b)))
}

/// Walks every bottom-up path through the lattice, keeping the first
/// satisfying vector on each path, then picks the preferred one among those
/// local minima.
pub fn naive_search(
    table: &Table,
    hierarchies: &[GeneralizationHierarchy],
    k: usize,
    max_suppress: usize,
) -> Result<MinimalGeneralization, AnonError> {
    let mut ev = Evaluator::new(table, hierarchies, k, max_suppress)?;
    let heights = ev.heights();
    // local minima reachable from a node; paths that share a suffix share work
    let mut memo: HashMap<GeneralizationVector, BTreeSet<GeneralizationVector>> = HashMap::new();

    fn walk(
        v: GeneralizationVector,
        heights: &[usize],
        ev: &mut Evaluator<'_>,
        memo: &mut HashMap<GeneralizationVector, BTreeSet<GeneralizationVector>>,
    ) -> Result<BTreeSet<GeneralizationVector>, AnonError> {
        if let Some(found) = memo.get(&v) {
            return Ok(found.clone());
        }
        let mut found = BTreeSet::new();
        if ev.satisfies(&v)? {
            found.insert(v.clone());
        } else {
            for j in 0..heights.len() {
                if v.0[j] < heights[j] {
                    let mut next = v.clone();
                    next.0[j] += 1;
                    found.extend(walk(next, heights, ev, memo)?);
                }
            }
        }
        memo.insert(v, found.clone());
        Ok(found)
    }

    let minima = walk(GeneralizationVector::bottom(heights.len()), &heights, &mut ev, &mut memo)?;
    let best = preferred(minima).ok_or(AnonError::NoSolution)?;
    ev.finish(best)
}

/// Binary search on total lattice height. Relies on monotonicity: if no
/// vector at height `h` satisfies, none below does either.
pub fn binary_search(
    table: &Table,
    hierarchies: &[GeneralizationHierarchy],
    k: usize,
    max_suppress: usize,
) -> Result<MinimalGeneralization, AnonError> {
    let mut ev = Evaluator::new(table, hierarchies, k, max_suppress)?;
    let all = lattice(&ev.heights());
    let max_height: usize = ev.heights().iter().sum();

    let satisfying_at = |h: usize, ev: &mut Evaluator<'_>| -> Result<Option<GeneralizationVector>, AnonError> {
        for v in all.iter().filter(|v| v.total_height() == h) {
            if ev.satisfies(v)? {
                return Ok(Some(v.clone()));
            }
        }
        Ok(None)
    };

    let (mut lo, mut hi) = (0usize, max_height);
    let mut best = satisfying_at(hi, &mut ev)?.ok_or(AnonError::NoSolution)?;
    while lo < hi {
        let mid = (lo + hi) / 2;
        match satisfying_at(mid, &mut ev)? {
            Some(v) => {
                best = v;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    ev.finish(best)
}

/// Runs both search strategies and requires them to agree on total height.
pub fn minimal_generalization(
    table: &Table,
    hierarchies: &[GeneralizationHierarchy],
    k: usize,
    max_suppress: usize,
) -> Result<MinimalGeneralization, AnonError> {
    let naive = naive_search(table, hierarchies, k, max_suppress)?;
    let binary = binary_search(table, hierarchies, k, max_suppress)?;
    if naive.vector.total_height() != binary.vector.total_height() {
        return Err(AnonError::StrategyMismatch {
            naive: naive.vector.0,
            binary: binary.vector.0,
        });
    }
    Ok(binary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, Record, Schema, ValueKind};

    fn table(rows: &[(&str, &str)]) -> Table {
        let schema = Schema::new(vec![
            Column::new("zip", ValueKind::Str),
            Column::new("age", ValueKind::Str),
        ])
        .unwrap();
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (z, a))| Record::new(i as u64, vec![(*z).into(), (*a).into()]))
            .collect();
        Table::with_records("t", schema, records).unwrap()
    }

    fn hierarchies() -> Vec<GeneralizationHierarchy> {
        let zip = "13053,1305*,*\n13058,1305*,*\n13063,1306*,*\n13067,1306*,*\n";
        let age = "21,2*,*\n24,2*,*\n35,3*,*\n39,3*,*\n";
        vec![
            GeneralizationHierarchy::from_csv("zip", zip.as_bytes()).unwrap(),
            GeneralizationHierarchy::from_csv("age", age.as_bytes()).unwrap(),
        ]
    }

    #[test]
    fn identical_rows_pass() {
        let t = table(&[("13053", "21"); 4]);
        assert!(k_anonymity_check(&t, &["zip", "age"], 2).unwrap().passed());
    }

    #[test]
    fn distinct_rows_fail_as_singletons() {
        let t = table(&[("13053", "21"), ("13058", "24"), ("13063", "35")]);
        match k_anonymity_check(&t, &["zip", "age"], 2).unwrap() {
            KAnonymity::Fail(c) => {
                assert_eq!(c.len(), 3);
                assert!(c.iter().all(|c| c.size() == 1));
            }
            KAnonymity::Pass => panic!("should fail"),
        }
    }

    #[test]
    fn k5_on_5_5_4() {
        let mut rows = vec![("13053", "21"); 5];
        rows.extend([("13058", "24"); 5]);
        rows.extend([("13063", "35"); 4]);
        match k_anonymity_check(&table(&rows), &["zip", "age"], 5).unwrap() {
            KAnonymity::Fail(c) => {
                assert_eq!(c.len(), 1);
                assert_eq!(c[0].size(), 4);
            }
            KAnonymity::Pass => panic!("should fail"),
        }
    }

    #[test]
    fn k_below_two_and_empty_qi_rejected() {
        let t = table(&[("13053", "21")]);
        assert!(matches!(k_anonymity_check(&t, &["zip"], 1), Err(AnonError::KTooSmall(1))));
        assert!(matches!(k_anonymity_check(&t, &[], 2), Err(AnonError::EmptyQi)));
    }

    #[test]
    fn dm_hand_values() {
        assert_eq!(discernibility_metric(&[3, 2], 2, 5), 13);
        assert_eq!(discernibility_metric(&[3, 2, 1], 2, 6), 19);
        assert_eq!(discernibility_metric(&[7], 3, 7), 49);
    }

    #[test]
    fn already_anonymous_needs_nothing() {
        let t = table(&[("13053", "21"), ("13053", "21"), ("13067", "39"), ("13067", "39")]);
        let r = minimal_generalization(&t, &hierarchies(), 2, 0).unwrap();
        assert_eq!(r.vector.0, vec![0, 0]);
        assert!(r.suppressed_ids.is_empty());
        assert_eq!(r.dm_cost, 8);
    }

    #[test]
    fn suppression_removes_exactly_failing_records() {
        let t = table(&[
            ("13053", "21"),
            ("13053", "21"),
            ("13058", "24"),
            ("13058", "24"),
            ("13067", "39"),
        ]);
        let r = minimal_generalization(&t, &hierarchies(), 2, 1).unwrap();
        assert_eq!(r.vector.0, vec![0, 0]);
        assert_eq!(r.suppressed_ids, vec![4]);
        assert_eq!(r.dm_cost, 4 + 4 + 5);
    }

    #[test]
    fn no_solution_when_too_small() {
        let t = table(&[("13053", "21")]);
        assert!(matches!(
            minimal_generalization(&t, &hierarchies(), 2, 0),
            Err(AnonError::NoSolution)
        ));
    }
}
