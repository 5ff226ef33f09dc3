//! Aggregate-annotated Merkle tree for authenticated range SUM, COUNT, AVG,
//! MIN and MAX.
//!
//! Every node carries the sum, count, min and max of the values below it and
//! the smallest and largest key below it. A node's hash is
//! `H(inner || annotations)`, where `inner` commits to the leaf entry or to
//! the two child hashes. Proof nodes carry `inner` and the annotations, and the
//! verifier recomputes the hash itself, so no annotation can be altered
//! without changing the signed root.
//!
//! A range proof is a set of nodes that together cover every leaf exactly
//! once. Each node is either *covered* (all of its keys fall inside the
//! range), *outside* (none do) or a *boundary* leaf sent in full. The verifier
//! rebuilds the root from them, checks the owner's signature, and recomputes
//! the answer from the covered nodes alone.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::{check_sorted, AuthError, SignedRoot};
use crate::codec::{Reader, Writer};
use crate::keys::{KeyKind, KeyMaterial};
use crate::provider::{require_kind, AlgorithmProvider, HashChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Sum,
    Count,
    Avg,
    Min,
    Max,
    Median,
}

impl FromStr for Aggregate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "sum" => Aggregate::Sum,
            "count" => Aggregate::Count,
            "avg" => Aggregate::Avg,
            "min" => Aggregate::Min,
            "max" => Aggregate::Max,
            "median" => Aggregate::Median,
            other => return Err(format!("unknown aggregate `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggAnswer {
    Sum(i128),
    Count(u64),
    /// Exact `(sum, count)`; the caller divides.
    Avg { sum: i128, count: u64 },
    Min(i64),
    Max(i64),
}

impl AggAnswer {
    pub fn to_kv(&self) -> String {
        match self {
            AggAnswer::Sum(s) => format!("aggregate=sum\nvalue={s}\n"),
            AggAnswer::Count(c) => format!("aggregate=count\nvalue={c}\n"),
            AggAnswer::Avg { sum, count } => format!("aggregate=avg\nsum={sum}\ncount={count}\n"),
            AggAnswer::Min(v) => format!("aggregate=min\nvalue={v}\n"),
            AggAnswer::Max(v) => format!("aggregate=max\nvalue={v}\n"),
        }
    }
}

/// A node's hash and annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSummary {
    /// `H(inner || sum || count || min || max || key_lo || key_hi)`.
    pub hash: Vec<u8>,
    /// `H(key || value)` for a leaf, `H(left.hash || right.hash)` above.
    pub inner: Vec<u8>,
    pub sum: i128,
    pub count: u64,
    pub min: i64,
    pub max: i64,
    pub key_lo: u64,
    pub key_hi: u64,
}

impl NodeSummary {
    fn sealed(mut self, provider: &dyn AlgorithmProvider) -> Self {
        self.hash = self.seal(provider);
        self
    }

    fn seal(&self, provider: &dyn AlgorithmProvider) -> Vec<u8> {
        provider.hash_parts(
            HashChoice::A,
            &[
                &self.inner,
                &self.sum.to_be_bytes(),
                &self.count.to_be_bytes(),
                &self.min.to_be_bytes(),
                &self.max.to_be_bytes(),
                &self.key_lo.to_be_bytes(),
                &self.key_hi.to_be_bytes(),
            ],
        )
    }

    fn empty(provider: &dyn AlgorithmProvider) -> Self {
        Self {
            hash: Vec::new(),
            inner: provider.hash(HashChoice::A, &[]),
            sum: 0,
            count: 0,
            min: i64::MAX,
            max: i64::MIN,
            key_lo: u64::MAX,
            key_hi: 0,
        }
        .sealed(provider)
    }

    fn leaf(provider: &dyn AlgorithmProvider, key: u64, value: i64) -> Self {
        Self {
            hash: Vec::new(),
            inner: provider.hash_parts(HashChoice::A, &[&key.to_be_bytes(), &value.to_be_bytes()]),
            sum: value as i128,
            count: 1,
            min: value,
            max: value,
            key_lo: key,
            key_hi: key,
        }
        .sealed(provider)
    }

    fn join(provider: &dyn AlgorithmProvider, l: &Self, r: &Self) -> Self {
        Self {
            hash: Vec::new(),
            inner: provider.hash_parts(HashChoice::A, &[&l.hash, &r.hash]),
            sum: l.sum + r.sum,
            count: l.count + r.count,
            min: l.min.min(r.min),
            max: l.max.max(r.max),
            key_lo: l.key_lo.min(r.key_lo),
            key_hi: l.key_hi.max(r.key_hi),
        }
        .sealed(provider)
    }

    fn fold(&self, acc: &mut Acc) {
        acc.sum += self.sum;
        acc.count += self.count;
        acc.min = acc.min.min(self.min);
        acc.max = acc.max.max(self.max);
    }

    fn write(&self, w: &mut Writer) {
        w.bytes(&self.hash).expect("hash fits a length prefix");
        w.bytes(&self.inner).expect("hash fits a length prefix");
        w.i128(self.sum)
            .u64(self.count)
            .i64(self.min)
            .i64(self.max)
            .u64(self.key_lo)
            .u64(self.key_hi);
    }

    fn read(r: &mut Reader<'_>) -> Result<Self, AuthError> {
        Ok(Self {
            hash: r.bytes()?.to_vec(),
            inner: r.bytes()?.to_vec(),
            sum: r.i128()?,
            count: r.u64()?,
            min: r.i64()?,
            max: r.i64()?,
            key_lo: r.u64()?,
            key_hi: r.u64()?,
        })
    }
}

struct Acc {
    sum: i128,
    count: u64,
    min: i64,
    max: i64,
}

impl Acc {
    fn new() -> Self {
        Self {
            sum: 0,
            count: 0,
            min: i64::MAX,
            max: i64::MIN,
        }
    }

    fn answer(&self, agg: Aggregate) -> Result<AggAnswer, AuthError> {
        Ok(match agg {
            Aggregate::Sum => AggAnswer::Sum(self.sum),
            Aggregate::Count => AggAnswer::Count(self.count),
            Aggregate::Avg => AggAnswer::Avg {
                sum: self.sum,
                count: self.count,
            },
            Aggregate::Min | Aggregate::Max if self.count == 0 => return Err(AuthError::EmptyRange),
            Aggregate::Min => AggAnswer::Min(self.min),
            Aggregate::Max => AggAnswer::Max(self.max),
            Aggregate::Median => return Err(AuthError::UnsupportedAggregate("median")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofNode {
    Covered(NodeSummary),
    Outside(NodeSummary),
    Boundary { key: u64, value: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofItem {
    pub level: u32,
    pub position: u64,
    pub node: ProofNode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateProof {
    pub height: u32,
    pub items: Vec<ProofItem>,
}

#[derive(Debug, Clone)]
pub struct AggregateTree {
    entries: Vec<(u64, i64)>,
    levels: Vec<Vec<NodeSummary>>,
    signature: Vec<u8>,
}

pub fn agg_build(
    provider: &dyn AlgorithmProvider,
    entries: Vec<(u64, i64)>,
    owner: &KeyMaterial,
) -> Result<AggregateTree, AuthError> {
    check_sorted(entries.iter().map(|e| e.0))?;
    require_kind(owner, KeyKind::SignaturePrivate)?;
    let mut leaves: Vec<NodeSummary> = entries
        .iter()
        .map(|&(k, v)| NodeSummary::leaf(provider, k, v))
        .collect();
    leaves.resize(entries.len().next_power_of_two(), NodeSummary::empty(provider));
    let mut levels = vec![leaves];
    while levels[levels.len() - 1].len() > 1 {
        let next = levels[levels.len() - 1]
            .chunks(2)
            .map(|p| NodeSummary::join(provider, &p[0], &p[1]))
            .collect();
        levels.push(next);
    }
    let signature = provider.sign(owner.bytes(), &levels[levels.len() - 1][0].hash)?;
    Ok(AggregateTree {
        entries,
        levels,
        signature,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LeafClass {
    Inside,
    Boundary,
    Outside,
    Padding,
}

impl AggregateTree {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, i64)] {
        &self.entries
    }

    pub fn root(&self) -> &NodeSummary {
        &self.levels[self.levels.len() - 1][0]
    }

    pub fn signed_root(&self) -> SignedRoot {
        SignedRoot {
            root: self.root().hash.clone(),
            signature: self.signature.clone(),
        }
    }

    fn classes(&self, a: u64, b: u64) -> Vec<LeafClass> {
        let lo = self.entries.partition_point(|e| e.0 < a);
        let hi = self.entries.partition_point(|e| e.0 <= b); // one past the last match
        let mut c: Vec<LeafClass> = (0..self.levels[0].len())
            .map(|i| match i {
                i if i >= self.entries.len() => LeafClass::Padding,
                i if i >= lo && i < hi => LeafClass::Inside,
                _ => LeafClass::Outside,
            })
            .collect();
        if lo > 0 {
            c[lo - 1] = LeafClass::Boundary;
        }
        if hi < self.entries.len() {
            c[hi] = LeafClass::Boundary;
        }
        c
    }

    fn cover(&self, classes: &[LeafClass], level: usize, pos: usize, out: &mut Vec<ProofItem>) {
        let span = &classes[pos << level..(pos + 1) << level];
        let has = |c: LeafClass| span.contains(&c);
        let item = |node| ProofItem {
            level: level as u32,
            position: pos as u64,
            node,
        };
        let summary = || self.levels[level][pos].clone();
        if !has(LeafClass::Boundary) && !has(LeafClass::Outside) && has(LeafClass::Inside) {
            out.push(item(ProofNode::Covered(summary())));
        } else if !has(LeafClass::Boundary) && !has(LeafClass::Inside) {
            out.push(item(ProofNode::Outside(summary())));
        } else if level == 0 {
            let (key, value) = self.entries[pos];
            out.push(item(ProofNode::Boundary { key, value }));
        } else {
            self.cover(classes, level - 1, 2 * pos, out);
            self.cover(classes, level - 1, 2 * pos + 1, out);
        }
    }
}

/// Answers `aggregate` over keys in `[a, b]` with a proof.
pub fn agg_query(
    tree: &AggregateTree,
    a: u64,
    b: u64,
    aggregate: Aggregate,
) -> Result<(AggAnswer, AggregateProof), AuthError> {
    if a > b {
        return Err(AuthError::InvertedRange { a, b });
    }
    if aggregate == Aggregate::Median {
        return Err(AuthError::UnsupportedAggregate("median"));
    }
    let height = tree.levels.len() - 1;
    let mut items = Vec::new();
    tree.cover(&tree.classes(a, b), height, 0, &mut items);
    let mut acc = Acc::new();
    for it in &items {
        if let ProofNode::Covered(s) = &it.node {
            s.fold(&mut acc);
        }
    }
    let answer = acc.answer(aggregate)?;
    Ok((
        answer,
        AggregateProof {
            height: height as u32,
            items,
        },
    ))
}

/// Rebuilds the signed root from the proof and recomputes the answer from
/// the covered nodes.
pub fn agg_verify(
    provider: &dyn AlgorithmProvider,
    proof: &AggregateProof,
    a: u64,
    b: u64,
    claimed: &AggAnswer,
    root: &SignedRoot,
    owner_public: &KeyMaterial,
) -> bool {
    if a > b || owner_public.kind() != KeyKind::SignaturePublic || proof.height >= 64 {
        return false;
    }
    let mut acc = Acc::new();
    let mut nodes: BTreeMap<(u32, u64), NodeSummary> = BTreeMap::new();
    for it in &proof.items {
        if it.level > proof.height || it.position >> (proof.height - it.level) != 0 {
            return false;
        }
        if let ProofNode::Covered(s) | ProofNode::Outside(s) = &it.node {
            if s.hash != s.seal(provider) {
                return false;
            }
        }
        let summary = match &it.node {
            ProofNode::Covered(s) => {
                if s.count == 0 || s.key_lo < a || s.key_hi > b {
                    return false;
                }
                s.fold(&mut acc);
                s.clone()
            }
            ProofNode::Outside(s) => {
                if s.count > 0 && !(s.key_hi < a || s.key_lo > b) {
                    return false;
                }
                s.clone()
            }
            ProofNode::Boundary { key, value } => {
                if it.level != 0 || (*key >= a && *key <= b) {
                    return false;
                }
                NodeSummary::leaf(provider, *key, *value)
            }
        };
        if nodes.insert((it.level, it.position), summary).is_some() {
            return false;
        }
    }

    for level in 0..proof.height {
        let here: Vec<u64> = nodes.range((level, 0)..(level + 1, 0)).map(|(k, _)| k.1).collect();
        let mut i = 0;
        while i < here.len() {
            let pos = here[i];
            if pos % 2 == 1 || i + 1 >= here.len() || here[i + 1] != pos + 1 {
                return false;
            }
            let l = nodes.remove(&(level, pos)).expect("listed");
            let r = nodes.remove(&(level, pos + 1)).expect("listed");
            if nodes
                .insert((level + 1, pos / 2), NodeSummary::join(provider, &l, &r))
                .is_some()
            {
                return false;
            }
            i += 2;
        }
    }
    let Some(rebuilt) = nodes.remove(&(proof.height, 0)) else {
        return false;
    };
    if !nodes.is_empty() || rebuilt.hash != root.root {
        return false;
    }
    if !provider.verify_signature(owner_public.bytes(), &root.root, &root.signature) {
        return false;
    }
    let agg = match claimed {
        AggAnswer::Sum(_) => Aggregate::Sum,
        AggAnswer::Count(_) => Aggregate::Count,
        AggAnswer::Avg { .. } => Aggregate::Avg,
        AggAnswer::Min(_) => Aggregate::Min,
        AggAnswer::Max(_) => Aggregate::Max,
    };
    matches!(acc.answer(agg), Ok(ans) if ans == *claimed)
}

impl AggregateProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u32(self.height).u32(self.items.len() as u32);
        for it in &self.items {
            w.u32(it.level).u64(it.position);
            match &it.node {
                ProofNode::Covered(s) => {
                    w.u8(1);
                    s.write(&mut w);
                }
                ProofNode::Outside(s) => {
                    w.u8(2);
                    s.write(&mut w);
                }
                ProofNode::Boundary { key, value } => {
                    w.u8(3).u64(*key).i64(*value);
                }
            }
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, AuthError> {
        let mut r = Reader::new(data);
        let height = r.u32()?;
        let n = r.u32()?;
        let mut items = Vec::new();
        for _ in 0..n {
            let level = r.u32()?;
            let position = r.u64()?;
            let node = match r.u8()? {
                1 => ProofNode::Covered(NodeSummary::read(&mut r)?),
                2 => ProofNode::Outside(NodeSummary::read(&mut r)?),
                3 => ProofNode::Boundary {
                    key: r.u64()?,
                    value: r.i64()?,
                },
                _ => return Err(crate::codec::CodecError::Invalid("unknown proof node").into()),
            };
            items.push(ProofItem { level, position, node });
        }
        r.finish()?;
        Ok(Self { height, items })
    }
}
