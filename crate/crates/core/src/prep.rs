//! Dataset preparation: global byte-sequence tagging, call-graph node
//! selection, undirected conversion, and balanced train/test splitting.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cfg::{BasicBlock, CallGraph, ControlFlowGraph};
use crate::math;

/// Graph label values used throughout the dataset files.
pub const LABEL_MALWARE: u32 = 0;
pub const LABEL_BENIGN: u32 = 1;

/// Injective map from basic-block byte sequences to dense positive tags.
///
/// The first inserted sequence gets tag 1, the next tag 2, and so on; tag 0
/// is reserved for byte sequences unknown at inference time. Insertion order
/// is the corpus processing order, so rebuilding over the same corpus in the
/// same order reproduces the dictionary exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagDictionary {
    index: BTreeMap<Vec<u8>, u32>,
    order: Vec<Vec<u8>>,
}

impl TagDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn tag_of(&self, bytes: &[u8]) -> Option<u32> {
        self.index.get(bytes).copied()
    }

    /// Returns the existing tag for `bytes` or assigns the next one.
    pub fn insert(&mut self, bytes: &[u8]) -> u32 {
        if let Some(tag) = self.index.get(bytes) {
            return *tag;
        }
        let tag = self.order.len() as u32 + 1;
        self.index.insert(bytes.to_vec(), tag);
        self.order.push(bytes.to_vec());
        tag
    }

    /// Entries in ascending tag order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u8])> {
        self.order
            .iter()
            .enumerate()
            .map(|(i, bytes)| (i as u32 + 1, bytes.as_slice()))
    }

    /// Rebuilds a dictionary from `(tag, bytes)` pairs, which must be dense
    /// and start at 1.
    pub fn from_entries(entries: Vec<(u32, Vec<u8>)>) -> Result<Self, PrepError> {
        let mut dict = TagDictionary::new();
        for (expected, (tag, bytes)) in entries.into_iter().enumerate() {
            if tag != expected as u32 + 1 {
                return Err(PrepError::SparseTags { tag });
            }
            if dict.index.insert(bytes.clone(), tag).is_some() {
                return Err(PrepError::DuplicateEntry { tag });
            }
            dict.order.push(bytes);
        }
        Ok(dict)
    }
}

/// Extends `dict` with the byte string of every block, in the given order.
/// Existing entries are left untouched.
pub fn extend_tag_dictionary(blocks: &[BasicBlock], dict: &mut TagDictionary) {
    for block in blocks {
        dict.insert(&block.byte_string);
    }
}

/// An undirected tagged graph with a class label, the classifier's input.
///
/// Node indices are 0-based and contiguous; the adjacency set stores each
/// undirected edge once as an ordered `(min, max)` pair, self-loops as
/// `(v, v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    pub node_tags: Vec<u32>,
    pub adjacency: BTreeSet<(u32, u32)>,
    pub label: u32,
}

impl LabeledGraph {
    pub fn node_count(&self) -> usize {
        self.node_tags.len()
    }

    /// Ascending neighbor indices of `v`, self-loop contributing `v` once.
    pub fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for &(a, b) in &self.adjacency {
            if a == v {
                out.push(b);
            } else if b == v {
                out.push(a);
            }
        }
        out.sort_unstable();
        out
    }

    /// Every edge endpoint must be a valid node index.
    pub fn is_consistent(&self) -> bool {
        let n = self.node_tags.len() as u32;
        self.adjacency.iter().all(|&(a, b)| a < n && b < n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrepError {
    /// A call-graph address has no corresponding CFG block.
    MissingBlock { addr: u64 },
    /// A block byte sequence is not in the dictionary.
    UnknownTag { addr: u64 },
    /// One of the two classes has no samples.
    EmptyClass { label: u32 },
    /// A manifest label is neither 0 nor 1.
    InvalidLabel { label: u32 },
    /// Persisted dictionary tags are not dense from 1.
    SparseTags { tag: u32 },
    /// Persisted dictionary repeats a byte sequence.
    DuplicateEntry { tag: u32 },
}

impl fmt::Display for PrepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrepError::MissingBlock { addr } => {
                write!(f, "call-graph node {addr:#x} has no CFG block")
            }
            PrepError::UnknownTag { addr } => {
                write!(f, "block at {addr:#x} is missing from the tag dictionary")
            }
            PrepError::EmptyClass { label } => write!(f, "class {label} has no samples"),
            PrepError::InvalidLabel { label } => write!(f, "label {label} is not 0 or 1"),
            PrepError::SparseTags { tag } => write!(f, "dictionary tags not dense at {tag}"),
            PrepError::DuplicateEntry { tag } => {
                write!(f, "dictionary byte sequence repeated at tag {tag}")
            }
        }
    }
}

impl core::error::Error for PrepError {}

/// Builds the serialized graph from a call graph: one node per function in
/// ascending entry order, tagged with the byte sequence of the CFG block at
/// that entry, edges mapped to node indices. The label is left at 0 for the
/// caller to assign.
pub fn select_call_graph_nodes(
    cfg: &ControlFlowGraph,
    cg: &CallGraph,
    dict: &TagDictionary,
) -> Result<LabeledGraph, PrepError> {
    let mut index_of: BTreeMap<u64, u32> = BTreeMap::new();
    let mut node_tags = Vec::with_capacity(cg.nodes.len());
    for (i, &entry) in cg.nodes.iter().enumerate() {
        let block = cfg
            .block_at(entry)
            .ok_or(PrepError::MissingBlock { addr: entry })?;
        let tag = dict
            .tag_of(&block.byte_string)
            .ok_or(PrepError::UnknownTag { addr: entry })?;
        index_of.insert(entry, i as u32);
        node_tags.push(tag);
    }
    let adjacency = cg
        .edges
        .iter()
        .map(|(src, dst)| (index_of[src], index_of[dst]))
        .collect();
    Ok(LabeledGraph {
        node_tags,
        adjacency,
        label: 0,
    })
}

/// Builds the serialized graph from the full CFG: one node per basic block
/// in ascending start order, edges of every jump kind mapped to indices.
pub fn select_cfg_nodes(
    cfg: &ControlFlowGraph,
    dict: &TagDictionary,
) -> Result<LabeledGraph, PrepError> {
    let mut index_of: BTreeMap<u64, u32> = BTreeMap::new();
    let mut node_tags = Vec::with_capacity(cfg.nodes.len());
    for (i, (&start, block)) in cfg.nodes.iter().enumerate() {
        let tag = dict
            .tag_of(&block.byte_string)
            .ok_or(PrepError::UnknownTag { addr: start })?;
        index_of.insert(start, i as u32);
        node_tags.push(tag);
    }
    let adjacency = cfg
        .edges
        .iter()
        .map(|(src, dst, _)| (index_of[src], index_of[dst]))
        .collect();
    Ok(LabeledGraph {
        node_tags,
        adjacency,
        label: 0,
    })
}

/// Drops call-graph nodes for which `keep` is false, along with every
/// incident edge. Used to exclude library and stub functions from the
/// serialized graph.
pub fn filter_call_graph(cg: &CallGraph, keep: impl Fn(u64) -> bool) -> CallGraph {
    let nodes: BTreeSet<u64> = cg.nodes.iter().copied().filter(|&n| keep(n)).collect();
    let edges = cg
        .edges
        .iter()
        .filter(|(a, b)| nodes.contains(a) && nodes.contains(b))
        .copied()
        .collect();
    CallGraph { nodes, edges }
}

/// Drops CFG blocks for which `keep` is false, along with incident edges.
pub fn filter_cfg(cfg: &ControlFlowGraph, keep: impl Fn(u64) -> bool) -> ControlFlowGraph {
    let nodes: BTreeMap<u64, BasicBlock> = cfg
        .nodes
        .iter()
        .filter(|(&start, _)| keep(start))
        .map(|(&start, block)| (start, block.clone()))
        .collect();
    let edges = cfg
        .edges
        .iter()
        .filter(|(a, b, _)| nodes.contains_key(a) && nodes.contains_key(b))
        .copied()
        .collect();
    ControlFlowGraph { nodes, edges }
}

/// Collapses directed pairs into canonical undirected edges: `{u, v}` is
/// present iff `(u, v)` or `(v, u)` was, duplicates merge, self-loops stay.
/// Idempotent; tags and label are untouched.
pub fn to_undirected(g: &LabeledGraph) -> LabeledGraph {
    let adjacency = g
        .adjacency
        .iter()
        .map(|&(a, b)| if a <= b { (a, b) } else { (b, a) })
        .collect();
    LabeledGraph {
        node_tags: g.node_tags.clone(),
        adjacency,
        label: g.label,
    }
}

/// One corpus sample: identifier, on-disk path, class label, content digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub id: String,
    pub path: String,
    pub label: u32,
    pub sha256: String,
}

/// An ordered list of corpus samples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
}

/// Balances the two classes to the smaller class size and splits into train
/// and test sets.
///
/// Each class list is shuffled with a generator seeded by `seed` and
/// truncated to the minority size; `floor(size * train_fraction)` samples
/// per class go to the training split so both splits stay within one sample
/// of a 1:1 class ratio. Both output sets are re-shuffled with the same
/// generator stream, making the whole operation a pure function of
/// `(manifest order, seed, train_fraction)`.
pub fn balance_and_split(
    manifest: &DatasetManifest,
    seed: u64,
    train_fraction: f64,
) -> Result<(DatasetManifest, DatasetManifest), PrepError> {
    let mut by_class: [Vec<&ManifestRecord>; 2] = [Vec::new(), Vec::new()];
    for record in &manifest.records {
        match record.label {
            LABEL_MALWARE => by_class[0].push(record),
            LABEL_BENIGN => by_class[1].push(record),
            other => return Err(PrepError::InvalidLabel { label: other }),
        }
    }
    for (label, class) in by_class.iter().enumerate() {
        if class.is_empty() {
            return Err(PrepError::EmptyClass {
                label: label as u32,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = by_class[0].len().min(by_class[1].len());
    let take = math::floor(cap as f64 * train_fraction) as usize;

    let mut train: Vec<ManifestRecord> = Vec::with_capacity(2 * take);
    let mut test: Vec<ManifestRecord> = Vec::with_capacity(2 * (cap - take));
    for class in by_class.iter_mut() {
        class.shuffle(&mut rng);
        class.truncate(cap);
        train.extend(class[..take].iter().map(|r| (*r).clone()));
        test.extend(class[take..].iter().map(|r| (*r).clone()));
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);

    Ok((
        DatasetManifest { records: train },
        DatasetManifest { records: test },
    ))
}
