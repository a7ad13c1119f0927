//! Core pipeline for graph-based malware classification of 32-bit ARM ELF
//! binaries: ELF image parsing, static control-flow and call-graph recovery,
//! basic-block tagging, a line-oriented graph dataset format, a mean-field
//! message-passing classifier with analytic gradients, and evaluation
//! metrics.
//!
//! Everything in this crate is pure and deterministic: bytes in, graphs and
//! numbers out. File and process handling live in the companion `graphmal`
//! crate. The crate builds without `std` (alloc required); the `std` feature
//! only enables wall-clock timing in training reports.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod arm;
pub mod cfg;
pub mod elf;
pub mod eval;
pub mod format;
mod math;
pub mod model;
pub mod prep;

pub use arm::{decode_instruction, InstrKind, Instruction};
pub use cfg::{
    compute_stats, coverage_compare, identify_functions, recover_cfg, BasicBlock, CallGraph,
    ControlFlowGraph, FunctionInfo, GraphStats, JumpKind,
};
pub use elf::{parse_executable, resolve_dependencies_with, BinaryImage, Section, Symbol};
pub use eval::{confusion, metrics, Class, ConfusionMatrix, MetricsReport};
pub use format::{read_dataset, write_dataset};
pub use model::{train, Hyperparams, ModelParams, TrainReport};
pub use prep::{
    balance_and_split, extend_tag_dictionary, select_call_graph_nodes, to_undirected,
    DatasetManifest, LabeledGraph, TagDictionary,
};
