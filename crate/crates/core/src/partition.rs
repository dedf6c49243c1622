//! Partitioning hyperedges into groups in which every edge owns an item that
//! no other edge of its group contains.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::model::{item_degree, Hyperedge, ItemSet};

/// Parts in the order they were built; edges inside a part in lexicographic
/// order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgePartition {
    pub parts: Vec<Vec<Hyperedge>>,
}

impl EdgePartition {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

fn cover(edges: &[Hyperedge]) -> ItemSet {
    edges.iter().fold(ItemSet::EMPTY, |acc, e| acc.union(e.items()))
}

/// True if `edges[skip]` is contained in the union of the other edges.
fn covered_by_others(edges: &[Hyperedge], skip: usize) -> bool {
    let others = edges
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .fold(ItemSet::EMPTY, |acc, (_, e)| acc.union(e.items()));
    edges[skip].items().is_subset(others)
}

/// Each round starts from all remaining edges and drops, one at a time in
/// ascending lexicographic order, every edge covered by the rest of the
/// round's current set. The survivors form the next part.
pub fn partition_edges(edges: &[Hyperedge]) -> Result<EdgePartition> {
    let mut remaining: Vec<Hyperedge> = edges.to_vec();
    remaining.sort();
    if let Some(w) = remaining.windows(2).find(|w| w[0] == w[1]) {
        return Err(LabError::Invalid(format!("duplicate hyperedge {}", w[0].items())));
    }
    let mut parts = Vec::new();
    while !remaining.is_empty() {
        let mut part = remaining.clone();
        let mut i = 0;
        for e in &remaining {
            // `part[i]` is always `e`: earlier survivors sit before it.
            debug_assert_eq!(part[i], *e);
            if covered_by_others(&part, i) {
                part.remove(i);
            } else {
                i += 1;
            }
        }
        remaining.retain(|e| !part.contains(e));
        parts.push(part);
    }
    Ok(EdgePartition { parts })
}

/// Why a proposed partition is rejected.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionViolation {
    EmptyPart { part: usize },
    Repeated { edge: Hyperedge },
    Missing { edge: Hyperedge },
    Foreign { edge: Hyperedge },
    /// `edge` in `part` has no item outside the other edges of its part.
    NoPrivateItem { part: usize, edge: Hyperedge },
}

/// Checks that `partition` is a disjoint cover of `edges` with nonempty
/// parts in which every edge has a private item. Returns the first
/// violation found.
pub fn verify_partition(edges: &[Hyperedge], partition: &EdgePartition) -> Option<PartitionViolation> {
    let wanted: BTreeSet<Hyperedge> = edges.iter().copied().collect();
    let mut seen = BTreeSet::new();
    for (p, part) in partition.parts.iter().enumerate() {
        if part.is_empty() {
            return Some(PartitionViolation::EmptyPart { part: p });
        }
        for &e in part {
            if !wanted.contains(&e) {
                return Some(PartitionViolation::Foreign { edge: e });
            }
            if !seen.insert(e) {
                return Some(PartitionViolation::Repeated { edge: e });
            }
        }
    }
    if let Some(&e) = wanted.difference(&seen).next() {
        return Some(PartitionViolation::Missing { edge: e });
    }
    for (p, part) in partition.parts.iter().enumerate() {
        for i in 0..part.len() {
            if covered_by_others(part, i) {
                return Some(PartitionViolation::NoPrivateItem { part: p, edge: part[i] });
            }
        }
    }
    None
}

/// Max over items of the number of edges containing it; 0 for no edges.
pub fn max_degree(edges: &[Hyperedge]) -> usize {
    let m = edges.iter().map(|e| e.items().span()).max().unwrap_or(0);
    item_degree(m, edges)
}

/// For each part `i`, the items covered by part `i` and by parts `i..`
/// together (the edges still unassigned when part `i` was built). The
/// partitioning keeps the two equal.
pub fn round_coverage(partition: &EdgePartition) -> Vec<(ItemSet, ItemSet)> {
    let mut out = Vec::with_capacity(partition.len());
    let mut tail = ItemSet::EMPTY;
    for part in partition.parts.iter().rev() {
        let own = cover(part);
        tail = tail.union(own);
        out.push((own, tail));
    }
    out.reverse();
    out
}
