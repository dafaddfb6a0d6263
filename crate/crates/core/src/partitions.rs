//! Combinatorics over the partition lattice.
//!
//! Particle labels are small nonnegative integers and an [`IndexSet`] is a
//! bitmask over them, so iteration is always in increasing label order. The
//! enumerators are exhaustive and deterministic: partitions come out in
//! lexicographic order of their restricted growth strings, which puts the
//! one-block partition first and the all-singletons partition last, with
//! blocks inside a partition sorted by their minimum element.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{contract, Error, Result};

/// Default bound on the size of any enumerated ground set (B₈ = 4140).
pub const DEFAULT_PARTITION_CAP: usize = 8;

/// Labels must be below this value.
pub const MAX_LABELS: usize = 32;

/// A nonempty set of particle labels.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(u32);

impl IndexSet {
    /// Builds a set from a strictly increasing list of labels.
    pub fn new(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(contract("index set must be nonempty"));
        }
        let mut mask = 0u32;
        let mut prev: Option<usize> = None;
        for &label in labels {
            if label >= MAX_LABELS {
                return Err(contract(format!("label {label} is not below {MAX_LABELS}")));
            }
            if prev.is_some_and(|p| p >= label) {
                return Err(contract("index set labels must be strictly increasing"));
            }
            prev = Some(label);
            mask |= 1 << label;
        }
        Ok(Self(mask))
    }

    pub fn from_mask(mask: u32) -> Option<Self> {
        (mask != 0).then_some(Self(mask))
    }

    /// The set `{0, 1, …, n-1}`.
    pub fn range(n: usize) -> Result<Self> {
        match n {
            0 => Err(contract("index set must be nonempty")),
            n if n > MAX_LABELS => Err(contract(format!("{n} labels exceed {MAX_LABELS}"))),
            MAX_LABELS => Ok(Self(u32::MAX)),
            n => Ok(Self((1u32 << n) - 1)),
        }
    }

    pub fn singleton(label: usize) -> Result<Self> {
        Self::new(&[label])
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Always false; kept so `len` has its usual companion.
    pub fn is_empty(self) -> bool {
        false
    }

    pub fn min(self) -> usize {
        self.0.trailing_zeros() as usize
    }

    pub fn max(self) -> usize {
        31 - self.0.leading_zeros() as usize
    }

    pub fn contains(self, label: usize) -> bool {
        label < MAX_LABELS && self.0 & (1 << label) != 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Position of `label` inside the set (number of smaller members).
    pub fn rank(self, label: usize) -> Option<usize> {
        self.contains(label)
            .then(|| (self.0 & ((1u32 << label) - 1)).count_ones() as usize)
    }

    pub fn iter(self) -> Labels {
        Labels(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, label) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{label}")?;
        }
        f.write_str("}")
    }
}

impl IntoIterator for IndexSet {
    type Item = usize;
    type IntoIter = Labels;

    fn into_iter(self) -> Labels {
        self.iter()
    }
}

/// Increasing iterator over the labels of an [`IndexSet`].
#[derive(Debug, Clone)]
pub struct Labels(u32);

impl Iterator for Labels {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let label = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(label)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Labels {}

/// A decomposition of a ground set into nonempty disjoint blocks, sorted by
/// minimum element.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<IndexSet>,
}

impl Partition {
    /// Validates disjointness and puts the blocks in canonical order.
    pub fn new(mut blocks: Vec<IndexSet>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(contract("partition must have at least one block"));
        }
        let mut seen = 0u32;
        for block in &blocks {
            if block.mask() & seen != 0 {
                return Err(contract("partition blocks must be pairwise disjoint"));
            }
            seen |= block.mask();
        }
        blocks.sort_by_key(|b| IndexSet::min(*b));
        Ok(Self { blocks })
    }

    /// The partition of `ground` into singletons.
    pub fn singletons(ground: IndexSet) -> Self {
        Self {
            blocks: ground.iter().map(|l| IndexSet(1 << l)).collect(),
        }
    }

    pub fn blocks(&self) -> &[IndexSet] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn ground(&self) -> IndexSet {
        IndexSet(self.blocks.iter().fold(0, |m, b| m | b.mask()))
    }

    /// Index of the block holding `label`.
    pub fn block_of(&self, label: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(label))
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("}")
    }
}

/// A partition of the blocks of some [`Partition`]; each group is an
/// [`IndexSet`] of block indices.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BlockPartition {
    groups: Partition,
}

impl BlockPartition {
    pub fn groups(&self) -> &[IndexSet] {
        self.groups.blocks()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Unions of the particle blocks in each group, in group order.
    pub fn merged(&self, partition: &Partition) -> Vec<IndexSet> {
        self.groups()
            .iter()
            .map(|g| {
                g.iter()
                    .map(|b| partition.blocks()[b])
                    .fold(IndexSet(0), IndexSet::union)
            })
            .collect()
    }
}

/// One nonempty subset chosen inside every block of a partition.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SubsetSelection {
    chosen: Vec<IndexSet>,
}

impl SubsetSelection {
    pub fn chosen(&self) -> &[IndexSet] {
        &self.chosen
    }

    pub fn union(&self) -> IndexSet {
        IndexSet(self.chosen.iter().fold(0, |m, z| m | z.mask()))
    }
}

/// Every partition of `ground`, exactly once, in canonical order.
pub fn enumerate_partitions(ground: IndexSet, cap: usize) -> Result<Vec<Partition>> {
    let labels = ground.to_vec();
    let n = labels.len();
    if n > cap {
        return Err(Error::SizeLimit { requested: n, cap });
    }

    // Restricted growth strings: rgs[0] = 0, rgs[i] <= 1 + max(rgs[..i]).
    let mut rgs = alloc::vec![0usize; n];
    let mut prefix_max = alloc::vec![0usize; n];
    let mut out = Vec::new();
    loop {
        let blocks = prefix_max[n - 1] + 1;
        let mut masks = alloc::vec![0u32; blocks];
        for (label, &b) in labels.iter().zip(&rgs) {
            masks[b] |= 1 << label;
        }
        out.push(Partition {
            blocks: masks.into_iter().map(IndexSet).collect(),
        });

        // Advance the rightmost position that may still grow.
        let Some(i) = (1..n).rev().find(|&i| rgs[i] <= prefix_max[i - 1]) else {
            break;
        };
        rgs[i] += 1;
        prefix_max[i] = prefix_max[i - 1].max(rgs[i]);
        for j in i + 1..n {
            rgs[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
    Ok(out)
}

/// Every partition of the blocks of `partition`.
pub fn enumerate_block_partitions(partition: &Partition, cap: usize) -> Result<Vec<BlockPartition>> {
    let blocks = IndexSet::range(partition.len())?;
    Ok(enumerate_partitions(blocks, cap)?
        .into_iter()
        .map(|groups| BlockPartition { groups })
        .collect())
}

/// The Cartesian product over blocks of their nonempty subsets.
pub fn enumerate_subset_selections(partition: &Partition, cap: usize) -> Result<Vec<SubsetSelection>> {
    let ground = partition.ground().len();
    if ground > cap {
        return Err(Error::SizeLimit { requested: ground, cap });
    }
    let choices: Vec<Vec<IndexSet>> = partition.blocks().iter().map(|b| nonempty_subsets(*b)).collect();

    let mut out = Vec::new();
    let mut cursor = alloc::vec![0usize; choices.len()];
    loop {
        out.push(SubsetSelection {
            chosen: cursor.iter().zip(&choices).map(|(&c, opts)| opts[c]).collect(),
        });
        // Odometer, last block fastest.
        let Some(i) = (0..choices.len()).rev().find(|&i| cursor[i] + 1 < choices[i].len()) else {
            break;
        };
        cursor[i] += 1;
        cursor[i + 1..].iter_mut().for_each(|c| *c = 0);
    }
    Ok(out)
}

/// Nonempty subsets of `set` in increasing mask order.
pub fn nonempty_subsets(set: IndexSet) -> Vec<IndexSet> {
    let full = set.mask();
    let mut subs = Vec::with_capacity((1usize << set.len()) - 1);
    let mut sub = full;
    while sub != 0 {
        subs.push(IndexSet(sub));
        sub = (sub - 1) & full;
    }
    subs.reverse();
    subs
}

/// The lattice weight `(-1)^(k-1) (k-1)!` attached to a partition with `k`
/// blocks.
pub fn mobius_coefficient(num_blocks: usize) -> Result<i64> {
    if num_blocks == 0 {
        return Err(contract("Möbius coefficient needs at least one block"));
    }
    let mut factorial: i64 = 1;
    for m in 2..num_blocks as i64 {
        factorial = factorial
            .checked_mul(m)
            .ok_or_else(|| Error::Overflow(format!("({} - 1)! does not fit in i64", num_blocks)))?;
    }
    Ok(if num_blocks % 2 == 1 { factorial } else { -factorial })
}
