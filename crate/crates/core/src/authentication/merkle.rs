//! Signed Merkle hash tree over sorted `(key, value)` entries.
//!
//! Leaves are `hashA(key || value)` with the key as 64-bit big-endian. The
//! leaf level is padded to a power of two by repeating the last leaf, and each
//! internal node hashes the concatenation of its two children. The owner signs
//! the root together with the tree height: leaves and internal nodes share a
//! hash, so without the height a `2h`-byte entry could pose as an internal
//! node under a shortened proof.

use super::{check_sorted, AuthError, SignedRoot};
use crate::codec::{Reader, Writer};
use crate::keys::{KeyKind, KeyMaterial};
use crate::provider::{require_kind, AlgorithmProvider, HashChoice};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleTree {
    entries: Vec<(u64, Vec<u8>)>,
    /// `levels[0]` are the padded leaves, the last level is the root.
    levels: Vec<Vec<Vec<u8>>>,
    signature: Vec<u8>,
}

/// Sibling hashes from the leaf up to just below the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipProof {
    pub index: u64,
    pub siblings: Vec<Vec<u8>>,
}

pub fn leaf_hash(provider: &dyn AlgorithmProvider, key: u64, value: &[u8]) -> Vec<u8> {
    provider.hash_parts(HashChoice::A, &[&key.to_be_bytes(), value])
}

fn parent(provider: &dyn AlgorithmProvider, left: &[u8], right: &[u8]) -> Vec<u8> {
    provider.hash_parts(HashChoice::A, &[left, right])
}

fn signed_message(root: &[u8], height: usize) -> Vec<u8> {
    [root, &(height as u32).to_be_bytes()].concat()
}

fn sign_root(
    provider: &dyn AlgorithmProvider,
    root: &[u8],
    height: usize,
    owner: &KeyMaterial,
) -> Result<Vec<u8>, AuthError> {
    require_kind(owner, KeyKind::SignaturePrivate)?;
    Ok(provider.sign(owner.bytes(), &signed_message(root, height))?)
}

pub fn merkle_build(
    provider: &dyn AlgorithmProvider,
    entries: Vec<(u64, Vec<u8>)>,
    owner: &KeyMaterial,
) -> Result<MerkleTree, AuthError> {
    check_sorted(entries.iter().map(|e| e.0))?;
    let mut leaves: Vec<Vec<u8>> = entries.iter().map(|(k, v)| leaf_hash(provider, *k, v)).collect();
    let last = leaves[leaves.len() - 1].clone();
    leaves.resize(entries.len().next_power_of_two(), last);
    let mut levels = vec![leaves];
    while levels[levels.len() - 1].len() > 1 {
        let next = levels[levels.len() - 1]
            .chunks(2)
            .map(|pair| parent(provider, &pair[0], &pair[1]))
            .collect();
        levels.push(next);
    }
    let signature = sign_root(provider, &levels[levels.len() - 1][0], levels.len() - 1, owner)?;
    Ok(MerkleTree {
        entries,
        levels,
        signature,
    })
}

impl MerkleTree {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `ceil(log2 n)`.
    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn entries(&self) -> &[(u64, Vec<u8>)] {
        &self.entries
    }

    pub fn root(&self) -> &[u8] {
        &self.levels[self.height()][0]
    }

    pub fn signed_root(&self) -> SignedRoot {
        SignedRoot {
            root: self.root().to_vec(),
            signature: self.signature.clone(),
        }
    }

    /// Every node hash, leaf level first.
    pub fn levels(&self) -> &[Vec<Vec<u8>>] {
        &self.levels
    }

    /// Recomputes every node from the entries and compares.
    pub fn audit(&self, provider: &dyn AlgorithmProvider) -> bool {
        for (i, (k, v)) in self.entries.iter().enumerate() {
            if self.levels[0][i] != leaf_hash(provider, *k, v) {
                return false;
            }
        }
        let last = &self.levels[0][self.entries.len() - 1];
        if self.levels[0][self.entries.len()..].iter().any(|l| l != last) {
            return false;
        }
        self.levels.windows(2).all(|w| {
            w[0].chunks(2)
                .zip(&w[1])
                .all(|(pair, up)| parent(provider, &pair[0], &pair[1]) == *up)
        })
    }
}

pub fn merkle_prove(tree: &MerkleTree, index: usize) -> Result<MembershipProof, AuthError> {
    if index >= tree.len() {
        return Err(AuthError::IndexOutOfRange {
            index,
            len: tree.len(),
        });
    }
    let siblings = (0..tree.height())
        .map(|level| tree.levels[level][(index >> level) ^ 1].clone())
        .collect();
    Ok(MembershipProof {
        index: index as u64,
        siblings,
    })
}

/// Folds the entry's leaf hash with the siblings, compares against the root
/// and checks the owner's signature on the root.
pub fn merkle_verify(
    provider: &dyn AlgorithmProvider,
    proof: &MembershipProof,
    entry: (u64, &[u8]),
    root: &SignedRoot,
    owner_public: &KeyMaterial,
) -> bool {
    if owner_public.kind() != KeyKind::SignaturePublic {
        return false;
    }
    if proof.siblings.len() >= 64 || proof.index >> proof.siblings.len() != 0 {
        return false;
    }
    let mut acc = leaf_hash(provider, entry.0, entry.1);
    for (level, sib) in proof.siblings.iter().enumerate() {
        acc = if (proof.index >> level) & 1 == 0 {
            parent(provider, &acc, sib)
        } else {
            parent(provider, sib, &acc)
        };
    }
    acc == root.root
        && provider.verify_signature(
            owner_public.bytes(),
            &signed_message(&root.root, proof.siblings.len()),
            &root.signature,
        )
}

/// Replaces one entry's value and recomputes its leaf-to-root path. When the
/// last entry changes, the padding copies of its leaf change with it.
pub fn merkle_update(
    provider: &dyn AlgorithmProvider,
    tree: &MerkleTree,
    index: usize,
    value: Vec<u8>,
    owner: &KeyMaterial,
) -> Result<MerkleTree, AuthError> {
    if index >= tree.len() {
        return Err(AuthError::IndexOutOfRange {
            index,
            len: tree.len(),
        });
    }
    let mut t = tree.clone();
    let leaf = leaf_hash(provider, t.entries[index].0, &value);
    t.entries[index].1 = value;
    let mut dirty: Vec<usize> = vec![index];
    if index == t.entries.len() - 1 {
        dirty.extend(t.entries.len()..t.levels[0].len());
    }
    for &i in &dirty {
        t.levels[0][i] = leaf.clone();
    }
    for level in 1..t.levels.len() {
        dirty = dirty.iter().map(|i| i / 2).collect();
        dirty.dedup();
        for &i in &dirty {
            let h = parent(provider, &t.levels[level - 1][2 * i], &t.levels[level - 1][2 * i + 1]);
            t.levels[level][i] = h;
        }
    }
    t.signature = sign_root(provider, t.root(), t.height(), owner)?;
    Ok(t)
}

impl MembershipProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u64(self.index).u32(self.siblings.len() as u32);
        for s in &self.siblings {
            w.bytes(s).expect("hash fits a length prefix");
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, AuthError> {
        let mut r = Reader::new(data);
        let index = r.u64()?;
        let n = r.u32()?;
        let siblings = (0..n).map(|_| r.bytes().map(<[u8]>::to_vec)).collect::<Result<_, _>>()?;
        r.finish()?;
        Ok(Self { index, siblings })
    }
}
