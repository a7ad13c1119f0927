//! Static control-flow and call-graph recovery.
//!
//! Recovery is a worklist traversal over every identified function entry:
//! blocks are decoded linearly until a control transfer, split when a later
//! target lands inside them, and connected with typed edges. Indirect jumps
//! and calls are left unresolved, which intentionally fragments the graph
//! the same way a fast static analysis does. The call graph is derived by
//! attributing each call edge to the function that first reached its source
//! block.

use alloc::borrow::Cow;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::arm::{decode_instruction, InstrKind};
use crate::elf::{rebase, BinaryImage, SymbolKind};

/// Classification of a CFG edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum JumpKind {
    Fallthrough,
    Jump,
    CondJump,
    Call,
    /// Continuation edge from a call block to the instruction after the call.
    CallReturn,
}

impl JumpKind {
    pub fn name(&self) -> &'static str {
        match self {
            JumpKind::Fallthrough => "fallthrough",
            JumpKind::Jump => "jump",
            JumpKind::CondJump => "cond_jump",
            JumpKind::Call => "call",
            JumpKind::CallReturn => "call_return",
        }
    }
}

/// A maximal straight-line run of instructions.
///
/// Synthetic stub blocks (call targets outside every decodable range) have
/// zero instructions and an empty byte string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub start: u64,
    pub byte_string: Vec<u8>,
    pub instruction_count: usize,
    /// True when any instruction in the block is a supervisor call.
    pub is_syscall: bool,
    /// Kind of the final instruction; `Fallthrough` when the block ends by
    /// running into another block or the end of its section.
    pub terminator: InstrKind,
}

impl BasicBlock {
    /// One-past-the-end address of the decoded range.
    pub fn end(&self) -> u64 {
        self.start + 4 * self.instruction_count as u64
    }
}

/// Directed graph of basic blocks keyed by start address.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControlFlowGraph {
    pub nodes: BTreeMap<u64, BasicBlock>,
    pub edges: BTreeSet<(u64, u64, JumpKind)>,
}

impl ControlFlowGraph {
    pub fn block_at(&self, addr: u64) -> Option<&BasicBlock> {
        self.nodes.get(&addr)
    }

    /// Line-oriented `src dst kind` dump in deterministic order.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for (src, dst, kind) in &self.edges {
            out.push_str(&format!("{src:#x} {dst:#x} {}\n", kind.name()));
        }
        out
    }

    /// Edge totals broken down by jump kind.
    pub fn edge_counts_by_kind(&self) -> BTreeMap<JumpKind, usize> {
        let mut counts = BTreeMap::new();
        for (_, _, kind) in &self.edges {
            *counts.entry(*kind).or_insert(0) += 1;
        }
        counts
    }
}

/// How a function entry was discovered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FunctionSource {
    Symbol,
    CallTarget,
    PrologueHeuristic,
    EntryPoint,
}

impl FunctionSource {
    /// Deduplication priority: symbol > entry point > call target > prologue.
    fn rank(self) -> u8 {
        match self {
            FunctionSource::Symbol => 3,
            FunctionSource::EntryPoint => 2,
            FunctionSource::CallTarget => 1,
            FunctionSource::PrologueHeuristic => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionInfo {
    pub entry: u64,
    pub name: Option<String>,
    pub source: FunctionSource,
}

/// Directed graph over function entry addresses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    pub nodes: BTreeSet<u64>,
    pub edges: BTreeSet<(u64, u64)>,
}

impl CallGraph {
    /// Line-oriented `src dst call` dump in deterministic order.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for (src, dst) in &self.edges {
            out.push_str(&format!("{src:#x} {dst:#x} call\n"));
        }
        out
    }
}

/// Measurements over a recovered control-flow graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub weak_component_count: usize,
    pub syscall_node_count: usize,
    pub covered_addresses: BTreeSet<u64>,
}

/// Result of [`recover_cfg`].
#[derive(Debug, Clone)]
pub struct Recovery {
    pub cfg: ControlFlowGraph,
    pub call_graph: CallGraph,
    pub functions: Vec<FunctionInfo>,
    /// Dropped targets and other non-fatal findings, in discovery order.
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryError {
    /// The image has no executable section with loaded bytes.
    NoExecutableSection,
}

impl fmt::Display for RecoveryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecoveryError::NoExecutableSection => write!(f, "no executable section"),
        }
    }
}

impl core::error::Error for RecoveryError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageError {
    /// A covered address does not belong to the comparison universe.
    CoverageOutsideUniverse { addr: u64 },
}

impl fmt::Display for CoverageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageError::CoverageOutsideUniverse { addr } => {
                write!(f, "covered address {addr:#x} outside universe")
            }
        }
    }
}

impl core::error::Error for CoverageError {}

/// PUSH {.., lr}: STMDB sp! with the link register in the list.
fn is_prologue_word(word: u32) -> bool {
    word & 0xffff_4000 == 0xe92d_4000
}

/// Identifies function entries in `image`: function symbols, the entry
/// point, supplied call targets, and prologue-pattern matches inside
/// executable sections, deduplicated by address with source priority
/// symbol > entry point > call target > prologue.
pub fn identify_functions(image: &BinaryImage, call_targets: &BTreeSet<u64>) -> Vec<FunctionInfo> {
    let mut found: BTreeMap<u64, FunctionInfo> = BTreeMap::new();
    let mut add = |entry: u64, name: Option<String>, source: FunctionSource| {
        merge_function(&mut found, entry, name, source);
    };

    for sym in &image.symbols {
        if sym.kind == SymbolKind::Function && sym.vaddr != 0 {
            add(sym.vaddr, Some(sym.name.clone()), FunctionSource::Symbol);
        }
    }
    let entry = image.entry_point;
    if entry != 0 && entry.is_multiple_of(4) && image.is_executable_addr(entry) {
        add(entry, None, FunctionSource::EntryPoint);
    }
    for &target in call_targets {
        if target.is_multiple_of(4) && image.is_executable_addr(target) {
            add(target, None, FunctionSource::CallTarget);
        }
    }
    for section in image.executable_sections() {
        for (i, word) in section.bytes.chunks_exact(4).enumerate() {
            let word = u32::from_le_bytes([word[0], word[1], word[2], word[3]]);
            if is_prologue_word(word) {
                add(
                    section.vaddr + 4 * i as u64,
                    None,
                    FunctionSource::PrologueHeuristic,
                );
            }
        }
    }

    found.into_values().collect()
}

fn merge_function(
    found: &mut BTreeMap<u64, FunctionInfo>,
    entry: u64,
    name: Option<String>,
    source: FunctionSource,
) {
    match found.get_mut(&entry) {
        Some(existing) => {
            if source.rank() > existing.source.rank() {
                existing.source = source;
            }
            if existing.name.is_none() {
                existing.name = name;
            }
        }
        None => {
            found.insert(
                entry,
                FunctionInfo {
                    entry,
                    name,
                    source,
                },
            );
        }
    }
}

struct Segment<'a> {
    start: u64,
    end: u64,
    bytes: &'a [u8],
}

struct AddressSpace<'a> {
    segments: Vec<Segment<'a>>,
}

impl<'a> AddressSpace<'a> {
    fn from_images(images: &'a [Cow<'a, BinaryImage>]) -> Self {
        let mut segments: Vec<Segment> = images
            .iter()
            .flat_map(|img| img.executable_sections())
            .filter(|s| !s.bytes.is_empty())
            .map(|s| Segment {
                start: s.vaddr,
                end: s.vaddr + s.bytes.len() as u64,
                bytes: &s.bytes,
            })
            .collect();
        segments.sort_by_key(|s| s.start);
        AddressSpace { segments }
    }

    fn segment_of(&self, addr: u64) -> Option<&Segment<'a>> {
        let idx = self.segments.partition_point(|s| s.start <= addr);
        let seg = self.segments[..idx].last()?;
        (addr < seg.end).then_some(seg)
    }

    /// The word at `addr`, when `addr` is 4-aligned and fully mapped.
    fn fetch_word(&self, addr: u64) -> Option<u32> {
        if !addr.is_multiple_of(4) {
            return None;
        }
        let seg = self.segment_of(addr)?;
        if addr + 4 > seg.end {
            return None;
        }
        let off = (addr - seg.start) as usize;
        let b = &seg.bytes[off..off + 4];
        Some(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn slice(&self, start: u64, end: u64) -> &'a [u8] {
        match self.segment_of(start) {
            Some(seg) if end <= seg.end => {
                &seg.bytes[(start - seg.start) as usize..(end - seg.start) as usize]
            }
            _ => &[],
        }
    }
}

/// Places `libraries` after the main image, shifting any whose preferred
/// ranges collide with already-placed code to the next 64 KiB boundary.
fn place_images<'a>(
    image: &'a BinaryImage,
    libraries: &'a [BinaryImage],
) -> Vec<Cow<'a, BinaryImage>> {
    let mut placed: Vec<Cow<BinaryImage>> = Vec::with_capacity(1 + libraries.len());
    let mut occupied: Vec<(u64, u64)> = Vec::new();
    let mut max_end = 0u64;

    let occupy = |img: &BinaryImage, occupied: &mut Vec<(u64, u64)>, max_end: &mut u64| {
        for s in &img.sections {
            if s.size > 0 {
                occupied.push((s.vaddr, s.vaddr + s.size));
                *max_end = (*max_end).max(s.vaddr + s.size);
            }
        }
    };

    placed.push(Cow::Borrowed(image));
    occupy(image, &mut occupied, &mut max_end);

    for lib in libraries {
        let collides = lib.sections.iter().any(|s| {
            s.size > 0
                && occupied
                    .iter()
                    .any(|&(lo, hi)| s.vaddr < hi && lo < s.vaddr + s.size)
        });
        if collides {
            let lib_min = lib
                .sections
                .iter()
                .filter(|s| s.size > 0)
                .map(|s| s.vaddr)
                .min()
                .unwrap_or(0);
            let base = (max_end + 1).next_multiple_of(0x10000);
            let shifted = rebase(lib, base - lib_min);
            occupy(&shifted, &mut occupied, &mut max_end);
            placed.push(Cow::Owned(shifted));
        } else {
            occupy(lib, &mut occupied, &mut max_end);
            placed.push(Cow::Borrowed(lib));
        }
    }
    placed
}

struct BlockBuild {
    end: u64,
    instruction_count: usize,
    is_syscall: bool,
    terminator: InstrKind,
    owner: u64,
    stub: bool,
}

struct Traversal<'a> {
    space: &'a AddressSpace<'a>,
    blocks: BTreeMap<u64, BlockBuild>,
    edges: BTreeSet<(u64, u64, JumpKind)>,
    call_edges: BTreeSet<(u64, u64)>,
    functions: BTreeMap<u64, FunctionInfo>,
    worklist: BTreeMap<u64, u64>,
    diagnostics: Vec<String>,
    symbol_names: BTreeMap<u64, String>,
}

impl<'a> Traversal<'a> {
    /// Block containing `addr` strictly in its interior.
    fn covering_block(&self, addr: u64) -> Option<u64> {
        let (&start, block) = self.blocks.range(..=addr).next_back()?;
        (start < addr && addr < block.end).then_some(start)
    }

    /// Makes `addr` a block start: splits a covering block, or queues the
    /// address for decoding under `owner` if it is new.
    fn queue_block_start(&mut self, addr: u64, owner: u64) {
        if self.blocks.contains_key(&addr) {
            return;
        }
        if let Some(start) = self.covering_block(addr) {
            self.split_block(start, addr);
            return;
        }
        self.worklist.entry(addr).or_insert(owner);
    }

    /// Splits the block at `start` so that `at` begins a new block. Outgoing
    /// edges move to the tail; the head falls through into it.
    fn split_block(&mut self, start: u64, at: u64) {
        let original = self.blocks.remove(&start).expect("split of missing block");
        let head = self.scan_range(start, at);
        let tail = self.scan_range(at, original.end);
        self.blocks.insert(
            start,
            BlockBuild {
                end: at,
                instruction_count: ((at - start) / 4) as usize,
                is_syscall: head,
                terminator: InstrKind::Fallthrough,
                owner: original.owner,
                stub: false,
            },
        );
        self.blocks.insert(
            at,
            BlockBuild {
                end: original.end,
                instruction_count: ((original.end - at) / 4) as usize,
                is_syscall: tail,
                terminator: original.terminator,
                owner: original.owner,
                stub: false,
            },
        );
        let moved: Vec<_> = self
            .edges
            .iter()
            .filter(|(src, _, _)| *src == start)
            .cloned()
            .collect();
        for edge in moved {
            self.edges.remove(&edge);
            self.edges.insert((at, edge.1, edge.2));
        }
        self.edges.insert((start, at, JumpKind::Fallthrough));
    }

    /// True when the 4-aligned range contains a supervisor call.
    fn scan_range(&self, start: u64, end: u64) -> bool {
        let mut addr = start;
        while addr < end {
            if let Some(word) = self.space.fetch_word(addr) {
                if decode_instruction(word, addr).kind == InstrKind::Syscall {
                    return true;
                }
            }
            addr += 4;
        }
        false
    }

    fn ensure_function(&mut self, entry: u64, source: FunctionSource) {
        let name = self.symbol_names.get(&entry).cloned();
        merge_function(&mut self.functions, entry, name, source);
    }

    /// Start address of the (non-stub) block whose decoded range contains
    /// `addr`. Queuing a target can split the block that emitted it, so edge
    /// sources are resolved from the terminator address after queuing.
    fn owning_block_start(&self, addr: u64) -> u64 {
        let (&start, block) = self
            .blocks
            .range(..=addr)
            .next_back()
            .expect("terminator address outside every block");
        debug_assert!(start <= addr && addr < block.end);
        start
    }

    /// Resolved direct jump or conditional-branch target; `term_addr` is the
    /// address of the transferring instruction.
    fn link_target(&mut self, term_addr: u64, target: u64, kind: JumpKind, owner: u64) {
        if self.space.fetch_word(target).is_none() {
            let src = self.owning_block_start(term_addr);
            self.diagnostics.push(format!(
                "decode range exceeded: {} target {target:#x} from block {src:#x} dropped",
                kind.name()
            ));
            return;
        }
        self.queue_block_start(target, owner);
        let src = self.owning_block_start(term_addr);
        self.edges.insert((src, target, kind));
    }

    /// Direct call: resolved targets become functions; unresolved targets
    /// become named stub nodes so the call graph still records the edge.
    fn link_call(&mut self, term_addr: u64, target: u64, caller: u64) {
        if self.space.fetch_word(target).is_some() {
            self.ensure_function(target, FunctionSource::CallTarget);
            self.queue_block_start(target, target);
        } else {
            let name = self
                .symbol_names
                .get(&target)
                .cloned()
                .unwrap_or_else(|| format!("ext_{target:#x}"));
            merge_function(
                &mut self.functions,
                target,
                Some(name),
                FunctionSource::CallTarget,
            );
            self.blocks.entry(target).or_insert(BlockBuild {
                end: target,
                instruction_count: 0,
                is_syscall: false,
                terminator: InstrKind::Return,
                owner: target,
                stub: true,
            });
            let src = self.owning_block_start(term_addr);
            self.diagnostics.push(format!(
                "decode range exceeded: call target {target:#x} from block {src:#x} stubbed"
            ));
        }
        let src = self.owning_block_start(term_addr);
        self.edges.insert((src, target, JumpKind::Call));
        self.call_edges.insert((caller, target));
    }

    /// Decodes one block starting at `start`, attributed to `owner`.
    fn build_block(&mut self, start: u64, owner: u64) {
        if self.blocks.contains_key(&start) {
            return;
        }
        let mut addr = start;
        let mut count = 0usize;
        let mut syscall = false;
        loop {
            if addr != start
                && (self.blocks.contains_key(&addr) || self.worklist.contains_key(&addr))
            {
                // Ran into code that is (or will become) its own block.
                self.close(start, addr, count, syscall, InstrKind::Fallthrough, owner);
                self.edges.insert((start, addr, JumpKind::Fallthrough));
                return;
            }
            let Some(word) = self.space.fetch_word(addr) else {
                if count == 0 {
                    self.diagnostics
                        .push(format!("block target {start:#x} is not decodable"));
                    return;
                }
                self.close(start, addr, count, syscall, InstrKind::Fallthrough, owner);
                return;
            };
            let kind = decode_instruction(word, addr).kind;
            count += 1;
            syscall |= kind == InstrKind::Syscall;
            if !kind.is_block_terminator() {
                addr += 4;
                continue;
            }
            let end = addr + 4;
            self.close(start, end, count, syscall, kind, owner);
            match kind {
                InstrKind::Branch(t) => self.link_target(addr, t, JumpKind::Jump, owner),
                InstrKind::CondBranch(t) => {
                    self.link_target(addr, t, JumpKind::CondJump, owner);
                    self.link_successor(addr, end, JumpKind::Fallthrough, owner);
                }
                InstrKind::Call(t) => {
                    self.link_call(addr, t, owner);
                    self.link_successor(addr, end, JumpKind::CallReturn, owner);
                }
                InstrKind::IndirectCall => {
                    self.link_successor(addr, end, JumpKind::CallReturn, owner)
                }
                InstrKind::IndirectJump | InstrKind::Return => {}
                InstrKind::Fallthrough | InstrKind::Syscall => unreachable!(),
            }
            return;
        }
    }

    /// Edge to the instruction after the terminator (conditional-branch
    /// fallthrough or the return site of a call).
    fn link_successor(&mut self, term_addr: u64, next: u64, kind: JumpKind, owner: u64) {
        if self.space.fetch_word(next).is_some() {
            self.queue_block_start(next, owner);
            let src = self.owning_block_start(term_addr);
            self.edges.insert((src, next, kind));
        }
    }

    fn close(
        &mut self,
        start: u64,
        end: u64,
        instruction_count: usize,
        is_syscall: bool,
        terminator: InstrKind,
        owner: u64,
    ) {
        self.blocks.insert(
            start,
            BlockBuild {
                end,
                instruction_count,
                is_syscall,
                terminator,
                owner,
                stub: false,
            },
        );
    }
}

/// Recovers the control-flow graph, call graph, and function list of
/// `image`, following calls into `libraries` whenever a target resolves
/// inside one of their executable sections.
pub fn recover_cfg(
    image: &BinaryImage,
    libraries: &[BinaryImage],
) -> Result<Recovery, RecoveryError> {
    if !image.executable_sections().any(|s| !s.bytes.is_empty()) {
        return Err(RecoveryError::NoExecutableSection);
    }

    let placed = place_images(image, libraries);
    let space = AddressSpace::from_images(&placed);

    let mut symbol_names = BTreeMap::new();
    for img in &placed {
        for sym in &img.symbols {
            if sym.vaddr != 0 && !sym.name.is_empty() {
                symbol_names.entry(sym.vaddr).or_insert(sym.name.clone());
            }
        }
    }

    let mut traversal = Traversal {
        space: &space,
        blocks: BTreeMap::new(),
        edges: BTreeSet::new(),
        call_edges: BTreeSet::new(),
        functions: BTreeMap::new(),
        worklist: BTreeMap::new(),
        diagnostics: Vec::new(),
        symbol_names,
    };

    // Seed: the full heuristic set for the main image, symbol-named
    // functions only for libraries (a prologue sweep over every shared
    // object would swamp the graph with library internals).
    for info in identify_functions(image, &BTreeSet::new()) {
        merge_function(&mut traversal.functions, info.entry, info.name, info.source);
    }
    for lib in placed.iter().skip(1) {
        for sym in &lib.symbols {
            if sym.kind == SymbolKind::Function && sym.vaddr != 0 && sym.vaddr.is_multiple_of(4) {
                merge_function(
                    &mut traversal.functions,
                    sym.vaddr,
                    Some(sym.name.clone()),
                    FunctionSource::Symbol,
                );
            }
        }
    }

    let seeds: Vec<u64> = traversal.functions.keys().copied().collect();
    for entry in seeds {
        if space.fetch_word(entry).is_some() {
            traversal.worklist.entry(entry).or_insert(entry);
        } else {
            traversal
                .diagnostics
                .push(format!("function entry {entry:#x} is not decodable"));
        }
    }

    while let Some((addr, owner)) = traversal.worklist.pop_first() {
        traversal.build_block(addr, owner);
    }

    let mut cfg = ControlFlowGraph::default();
    for (start, build) in &traversal.blocks {
        cfg.nodes.insert(
            *start,
            BasicBlock {
                start: *start,
                byte_string: if build.stub {
                    Vec::new()
                } else {
                    space.slice(*start, build.end).to_vec()
                },
                instruction_count: build.instruction_count,
                is_syscall: build.is_syscall,
                terminator: build.terminator,
            },
        );
    }
    cfg.edges = traversal.edges;

    // Functions whose entry never materialized as a block (e.g. a symbol
    // pointing at unreachable padding that another block swallowed) are kept
    // in the list; the call graph keeps every identified entry as a node.
    let call_graph = CallGraph {
        nodes: traversal.functions.keys().copied().collect(),
        edges: traversal.call_edges,
    };

    Ok(Recovery {
        cfg,
        call_graph,
        functions: traversal.functions.into_values().collect(),
        diagnostics: traversal.diagnostics,
    })
}

/// Counts nodes, edges, weakly connected components, syscall blocks, and the
/// exact set of covered instruction addresses.
pub fn compute_stats(cfg: &ControlFlowGraph) -> GraphStats {
    let mut covered = BTreeSet::new();
    let mut syscalls = 0;
    for block in cfg.nodes.values() {
        if block.is_syscall {
            syscalls += 1;
        }
        let mut addr = block.start;
        while addr < block.end() {
            covered.insert(addr);
            addr += 4;
        }
    }

    // Undirected reachability sweep; isolated nodes are their own component.
    let mut neighbors: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for (src, dst, _) in &cfg.edges {
        neighbors.entry(*src).or_default().push(*dst);
        neighbors.entry(*dst).or_default().push(*src);
    }
    let mut visited: BTreeSet<u64> = BTreeSet::new();
    let mut components = 0;
    for &start in cfg.nodes.keys() {
        if !visited.insert(start) {
            continue;
        }
        components += 1;
        let mut stack = alloc::vec![start];
        while let Some(node) = stack.pop() {
            if let Some(next) = neighbors.get(&node) {
                for &n in next {
                    if visited.insert(n) {
                        stack.push(n);
                    }
                }
            }
        }
    }

    GraphStats {
        node_count: cfg.nodes.len(),
        edge_count: cfg.edges.len(),
        weak_component_count: components,
        syscall_node_count: syscalls,
        covered_addresses: covered,
    }
}

/// The four coverage quadrants of two analyses over a shared address
/// universe. The counts always partition the universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageQuadrants {
    pub only_a: usize,
    pub only_b: usize,
    pub both: usize,
    pub neither: usize,
}

pub fn coverage_compare(
    a: &GraphStats,
    b: &GraphStats,
    universe: &BTreeSet<u64>,
) -> Result<CoverageQuadrants, CoverageError> {
    for &addr in a.covered_addresses.union(&b.covered_addresses) {
        if !universe.contains(&addr) {
            return Err(CoverageError::CoverageOutsideUniverse { addr });
        }
    }
    let mut q = CoverageQuadrants {
        only_a: 0,
        only_b: 0,
        both: 0,
        neither: 0,
    };
    for addr in universe {
        match (
            a.covered_addresses.contains(addr),
            b.covered_addresses.contains(addr),
        ) {
            (true, true) => q.both += 1,
            (true, false) => q.only_a += 1,
            (false, true) => q.only_b += 1,
            (false, false) => q.neither += 1,
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn prologue_pattern_requires_lr() {
        assert!(is_prologue_word(0xe92d4800)); // push {fp, lr}
        assert!(is_prologue_word(0xe92d4ff0)); // stmdb sp!, {r4-r11, lr}
        assert!(!is_prologue_word(0xe92d0003)); // push {r0, r1}
        assert!(!is_prologue_word(0xe8bd4010)); // pop {r4, lr}
    }

    #[test]
    fn empty_graph_stats() {
        let stats = compute_stats(&ControlFlowGraph::default());
        assert_eq!(stats.node_count, 0);
        assert_eq!(stats.edge_count, 0);
        assert_eq!(stats.weak_component_count, 0);
        assert_eq!(stats.syscall_node_count, 0);
        assert!(stats.covered_addresses.is_empty());
    }

    #[test]
    fn two_isolated_nodes_are_two_components() {
        let mut cfg = ControlFlowGraph::default();
        for start in [0x1000u64, 0x2000] {
            cfg.nodes.insert(
                start,
                BasicBlock {
                    start,
                    byte_string: vec![0; 4],
                    instruction_count: 1,
                    is_syscall: false,
                    terminator: InstrKind::Return,
                },
            );
        }
        assert_eq!(compute_stats(&cfg).weak_component_count, 2);
    }

    #[test]
    fn coverage_quadrants_partition() {
        let universe: BTreeSet<u64> = [0x1000u64, 0x1004, 0x1008, 0x100c].into();
        let mk = |addrs: &[u64]| GraphStats {
            node_count: 0,
            edge_count: 0,
            weak_component_count: 0,
            syscall_node_count: 0,
            covered_addresses: addrs.iter().copied().collect(),
        };
        let a = mk(&[0x1000, 0x1004]);
        let b = mk(&[0x1004, 0x1008]);
        let q = coverage_compare(&a, &b, &universe).unwrap();
        assert_eq!((q.only_a, q.only_b, q.both, q.neither), (1, 1, 1, 1));

        let full = mk(&[0x1000, 0x1004, 0x1008, 0x100c]);
        let q = coverage_compare(&full, &full, &universe).unwrap();
        assert_eq!((q.only_a, q.only_b, q.both, q.neither), (0, 0, 4, 0));
    }

    #[test]
    fn coverage_outside_universe_is_error() {
        let universe: BTreeSet<u64> = [0x1000u64].into();
        let a = GraphStats {
            node_count: 0,
            edge_count: 0,
            weak_component_count: 0,
            syscall_node_count: 0,
            covered_addresses: [0x2000u64].into(),
        };
        let b = GraphStats {
            node_count: 0,
            edge_count: 0,
            weak_component_count: 0,
            syscall_node_count: 0,
            covered_addresses: BTreeSet::new(),
        };
        assert_eq!(
            coverage_compare(&a, &b, &universe),
            Err(CoverageError::CoverageOutsideUniverse { addr: 0x2000 })
        );
    }
}
