//! Coordinate subsets and block partitions of {1..d}.
//!
//! Coordinate indices are 1-based in every public interface. A `Partition`
//! splits the coordinate set into named, disjoint, covering blocks; block
//! indices (also 1-based) address blocks in the order they were declared.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical nonempty subset of coordinates, stored sorted and deduplicated.
///
/// Used as the lookup key for extremal coefficients and as the argument of
/// every subset-indexed quantity. Indices are 1-based and validated against
/// the ambient dimension at construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SubsetKey(Vec<usize>);

impl SubsetKey {
    /// Builds a key from 1-based coordinate indices, sorting and deduplicating.
    pub fn new<I: IntoIterator<Item = usize>>(indices: I, d: usize) -> Result<Self> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidArgument("subset must be nonempty".into()));
        }
        if let Some(&bad) = set.iter().find(|&&i| i == 0 || i > d) {
            return Err(Error::InvalidArgument(format!(
                "coordinate index {bad} outside 1..={d}"
            )));
        }
        Ok(SubsetKey(set.into_iter().collect()))
    }

    /// Full coordinate set {1..d}.
    pub fn full(d: usize) -> Result<Self> {
        Self::new(1..=d, d)
    }

    /// Sorted 1-based indices.
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }
}

impl fmt::Display for SubsetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.0.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// One named block of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Human-readable block label, unique within the partition.
    pub name: String,
    /// Member coordinates of the block.
    pub members: SubsetKey,
}

/// Ordered list of disjoint, nonempty, named blocks covering {1..d}.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    d: usize,
    blocks: Vec<Block>,
}

impl Partition {
    /// Builds a partition from `(name, members)` pairs over dimension `d`.
    ///
    /// Fails when blocks overlap, leave a coordinate uncovered, carry empty
    /// or duplicate names, or reference indices outside 1..=d.
    pub fn new<S: Into<String>>(d: usize, blocks: Vec<(S, Vec<usize>)>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidArgument(
                "partition must contain at least one block".into(),
            ));
        }
        let mut seen_names = BTreeSet::new();
        let mut covered = vec![false; d + 1];
        let mut out = Vec::with_capacity(blocks.len());
        for (name, members) in blocks {
            let name = name.into();
            if name.is_empty() {
                return Err(Error::InvalidArgument("block name must be nonempty".into()));
            }
            if !seen_names.insert(name.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate block name '{name}'"
                )));
            }
            let key = SubsetKey::new(members, d).map_err(|e| {
                Error::InvalidArgument(format!("block '{name}': {e}"))
            })?;
            for &i in key.indices() {
                if covered[i] {
                    return Err(Error::InvalidArgument(format!(
                        "coordinate {i} assigned to more than one block"
                    )));
                }
                covered[i] = true;
            }
            out.push(Block { name, members: key });
        }
        if let Some(missing) = (1..=d).find(|&i| !covered[i]) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {missing} not assigned to any block"
            )));
        }
        Ok(Partition { d, blocks: out })
    }

    /// Finest partition: every coordinate is its own block, named by index.
    pub fn singleton(d: usize) -> Result<Self> {
        Self::new(d, (1..=d).map(|i| (i.to_string(), vec![i])).collect())
    }

    /// Ambient dimension d.
    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Number of blocks s.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Block by 1-based block index.
    pub fn block(&self, j: usize) -> Result<&Block> {
        self.blocks.get(j.wrapping_sub(1)).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "block index {j} outside 1..={}",
                self.blocks.len()
            ))
        })
    }

    /// Union of the blocks selected by 1-based block indices.
    pub fn blocks_union<I: IntoIterator<Item = usize>>(&self, block_indices: I) -> Result<SubsetKey> {
        let mut members = Vec::new();
        let mut any = false;
        for j in block_indices {
            any = true;
            members.extend_from_slice(self.block(j)?.members.indices());
        }
        if !any {
            return Err(Error::InvalidArgument(
                "block selection must be nonempty".into(),
            ));
        }
        SubsetKey::new(members, self.d)
    }

    /// Union of the blocks selected by a bitmask (bit j-1 selects block j).
    /// Returns `None` for the empty mask.
    pub(crate) fn union_of_mask(&self, mask: u64) -> Option<SubsetKey> {
        if mask == 0 {
            return None;
        }
        let selected = (0..self.blocks.len()).filter(|j| mask >> j & 1 == 1);
        Some(
            self.blocks_union(selected.map(|j| j + 1))
                .expect("mask selects declared blocks"),
        )
    }

    /// Full coordinate set as a key.
    pub fn full_set(&self) -> SubsetKey {
        SubsetKey::full(self.d).expect("d >= 1")
    }
}

/// Serde form of a partition: blocks reference dataset columns by label.
///
/// ```json
/// {"blocks": [{"name": "Europe", "members": ["CAC", "FTSE"]}, ...]}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub blocks: Vec<BlockConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockConfig {
    pub name: String,
    pub members: Vec<String>,
}

impl PartitionConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("partition config: {e}")))
    }

    /// Resolves member labels against dataset column labels and validates the
    /// result as a partition of all columns.
    pub fn resolve(&self, labels: &[String]) -> Result<Partition> {
        let position = |label: &str| -> Result<usize> {
            labels
                .iter()
                .position(|l| l == label)
                .map(|p| p + 1)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "partition member '{label}' does not match any dataset column"
                    ))
                })
        };
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let mut members = Vec::with_capacity(block.members.len());
            for label in &block.members {
                members.push(position(label)?);
            }
            blocks.push((block.name.clone(), members));
        }
        Partition::new(labels.len(), blocks).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blocks() -> Partition {
        Partition::new(3, vec![("a", vec![1, 2]), ("b", vec![3])]).unwrap()
    }

    #[test]
    fn subset_key_sorts_and_dedupes() {
        let key = SubsetKey::new(vec![3, 1, 3, 2], 4).unwrap();
        assert_eq!(key.indices(), &[1, 2, 3]);
        assert_eq!(key.to_string(), "{1,2,3}");
    }

    #[test]
    fn subset_key_rejects_empty_and_out_of_range() {
        assert!(SubsetKey::new(Vec::new(), 3).is_err());
        assert!(SubsetKey::new(vec![0], 3).is_err());
        assert!(SubsetKey::new(vec![4], 3).is_err());
    }

    #[test]
    fn partition_rejects_overlap_gap_and_duplicate_names() {
        assert!(Partition::new(3, vec![("a", vec![1, 2]), ("b", vec![2, 3])]).is_err());
        assert!(Partition::new(3, vec![("a", vec![1]), ("b", vec![3])]).is_err());
        assert!(Partition::new(2, vec![("a", vec![1]), ("a", vec![2])]).is_err());
        assert!(Partition::new(2, vec![("", vec![1, 2])]).is_err());
    }

    #[test]
    fn blocks_union_matches_examples() {
        let p = two_blocks();
        assert_eq!(p.blocks_union([1, 2]).unwrap().indices(), &[1, 2, 3]);
        assert_eq!(p.blocks_union([1]).unwrap().indices(), &[1, 2]);
        assert!(p.blocks_union([]).is_err());
        assert!(p.blocks_union([3]).is_err());
    }

    #[test]
    fn union_of_mask_covers_all_selections() {
        let p = two_blocks();
        assert_eq!(p.union_of_mask(0), None);
        assert_eq!(p.union_of_mask(0b01).unwrap().indices(), &[1, 2]);
        assert_eq!(p.union_of_mask(0b10).unwrap().indices(), &[3]);
        assert_eq!(p.union_of_mask(0b11).unwrap().indices(), &[1, 2, 3]);
    }

    #[test]
    fn singleton_partition_has_one_block_per_coordinate() {
        let p = Partition::singleton(4).unwrap();
        assert_eq!(p.block_count(), 4);
        assert_eq!(p.block(4).unwrap().members.indices(), &[4]);
        assert_eq!(p.block(2).unwrap().name, "2");
    }

    #[test]
    fn config_resolves_labels_to_indices() {
        let labels: Vec<String> = ["CAC", "FTSE", "SMI", "XDAX", "DJ", "NQ", "HSI", "NIK"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let config = PartitionConfig {
            blocks: vec![
                BlockConfig {
                    name: "Europe".into(),
                    members: vec!["CAC".into(), "FTSE".into(), "SMI".into(), "XDAX".into()],
                },
                BlockConfig {
                    name: "USA".into(),
                    members: vec!["DJ".into(), "NQ".into()],
                },
                BlockConfig {
                    name: "FarEast".into(),
                    members: vec!["HSI".into(), "NIK".into()],
                },
            ],
        };
        let p = config.resolve(&labels).unwrap();
        assert_eq!(p.block_count(), 3);
        assert_eq!(p.block(1).unwrap().members.indices(), &[1, 2, 3, 4]);
        assert_eq!(p.block(3).unwrap().members.indices(), &[7, 8]);

        let mut missing = config.clone();
        missing.blocks[1].members[0] = "DOW".into();
        assert!(matches!(missing.resolve(&labels), Err(Error::Config(_))));
    }

    #[test]
    fn config_requires_every_column_assigned() {
        let labels: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let config = PartitionConfig {
            blocks: vec![BlockConfig {
                name: "only".into(),
                members: vec!["a".into()],
            }],
        };
        assert!(matches!(config.resolve(&labels), Err(Error::Config(_))));
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{"blocks":[{"name":"x","members":["c1","c2"]}]}"#;
        let config = PartitionConfig::from_json(text).unwrap();
        assert_eq!(config.blocks.len(), 1);
        assert!(PartitionConfig::from_json("{\"blocks\": 3}").is_err());
    }
}
