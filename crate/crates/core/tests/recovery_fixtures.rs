//! Recovery fixtures: known call-graph shapes, block splitting, stubs,
//! library calls, and randomized oracles for the graph statistics.

mod common;

use std::collections::BTreeSet;

use common::{three_function_fixture, words, ElfFixture, ET_DYN, STT_FUNC};
use graphmal_core::arm::InstrKind;
use graphmal_core::cfg::{
    compute_stats, coverage_compare, identify_functions, recover_cfg, BasicBlock, CallGraph,
    ControlFlowGraph, FunctionSource, JumpKind, RecoveryError,
};
use graphmal_core::elf::parse_executable;
use graphmal_core::prep::{
    extend_tag_dictionary, select_call_graph_nodes, to_undirected, TagDictionary,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn three_functions_give_figure_shaped_call_graph() {
    let image = parse_executable(&three_function_fixture().build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();

    let expected: BTreeSet<(u64, u64)> =
        [(0x100c, 0x1000), (0x100c, 0x1004), (0x1004, 0x1000)].into();
    assert_eq!(recovery.call_graph.edges, expected);
    assert_eq!(
        recovery.call_graph.nodes,
        [0x1000u64, 0x1004, 0x100c].into()
    );

    // six single-instruction blocks, fully covered
    assert_eq!(recovery.cfg.nodes.len(), 6);
    let stats = compute_stats(&recovery.cfg);
    assert_eq!(stats.covered_addresses.len(), 6);
    assert_eq!(stats.syscall_node_count, 0);

    // call and return-site edges for each bl
    assert!(recovery
        .cfg
        .edges
        .contains(&(0x1004, 0x1000, JumpKind::Call)));
    assert!(recovery
        .cfg
        .edges
        .contains(&(0x1004, 0x1008, JumpKind::CallReturn)));
    assert!(recovery
        .cfg
        .edges
        .contains(&(0x100c, 0x1010, JumpKind::CallReturn)));

    // symbol names survive and the entry point deduplicates into main
    let main = recovery
        .functions
        .iter()
        .find(|f| f.entry == 0x100c)
        .unwrap();
    assert_eq!(main.name.as_deref(), Some("main"));
    assert_eq!(main.source, FunctionSource::Symbol);
    assert_eq!(recovery.functions.len(), 3);

    // every call-graph edge is backed by a call-kind CFG edge out of a block
    // owned by the caller, and nodes never leave the identified function set
    let entries: BTreeSet<u64> = recovery.functions.iter().map(|f| f.entry).collect();
    assert!(recovery.call_graph.nodes.is_subset(&entries));
    for &(_, callee) in &recovery.call_graph.edges {
        assert!(recovery
            .cfg
            .edges
            .iter()
            .any(|&(_, dst, kind)| kind == JumpKind::Call && dst == callee));
    }
}

#[test]
fn identify_functions_sources() {
    let image = parse_executable(&three_function_fixture().build()).unwrap();
    let functions = identify_functions(&image, &BTreeSet::from([0x1008u64]));
    let by_entry: Vec<(u64, FunctionSource)> =
        functions.iter().map(|f| (f.entry, f.source)).collect();
    assert_eq!(
        by_entry,
        vec![
            (0x1000, FunctionSource::Symbol),
            (0x1004, FunctionSource::Symbol),
            (0x1008, FunctionSource::CallTarget),
            (0x100c, FunctionSource::Symbol),
        ]
    );
}

#[test]
fn prologue_heuristic_finds_stripped_function() {
    let fixture = ElfFixture {
        entry: 0x1000,
        text: vec![(
            0x1000,
            words(&[
                0xe12fff1e, // 1000: bx lr
                0xe92d4800, // 1004: push {fp, lr}   <- prologue
                0xe8bd8800, // 1008: pop {fp, pc}
            ]),
        )],
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    let functions = identify_functions(&image, &BTreeSet::new());
    assert!(functions
        .iter()
        .any(|f| f.entry == 0x1004 && f.source == FunctionSource::PrologueHeuristic));
    assert!(functions
        .iter()
        .any(|f| f.entry == 0x1000 && f.source == FunctionSource::EntryPoint));
}

#[test]
fn syscall_block_with_self_loop() {
    let fixture = ElfFixture {
        entry: 0x1000,
        text: vec![(
            0x1000,
            words(&[
                0xef000000, // svc #0
                0xeafffffd, // b 0x1000
            ]),
        )],
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();

    assert_eq!(recovery.cfg.nodes.len(), 1);
    let block = recovery.cfg.block_at(0x1000).unwrap();
    assert_eq!(block.instruction_count, 2);
    assert!(block.is_syscall);
    assert_eq!(
        recovery.cfg.edges,
        BTreeSet::from([(0x1000, 0x1000, JumpKind::Jump)])
    );
    let stats = compute_stats(&recovery.cfg);
    assert_eq!(stats.weak_component_count, 1);
    assert_eq!(stats.syscall_node_count, 1);
}

#[test]
fn unresolved_register_jump_is_single_silent_node() {
    let fixture = ElfFixture {
        entry: 0x1000,
        text: vec![(0x1000, words(&[0xe12fff13]))], // bx r3
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();
    assert_eq!(recovery.cfg.nodes.len(), 1);
    assert!(recovery.cfg.edges.is_empty());
    assert_eq!(compute_stats(&recovery.cfg).weak_component_count, 1);
    // nothing but the entry point was identified
    assert_eq!(recovery.functions.len(), 1);
    assert_eq!(recovery.functions[0].source, FunctionSource::EntryPoint);
}

#[test]
fn late_target_splits_block_and_moves_edges() {
    let fixture = ElfFixture {
        entry: 0x1000,
        text: vec![(
            0x1000,
            words(&[
                0xe3a00000, // 1000 f: mov r0, #0
                0xe3a00000, // 1004    mov r0, #0
                0xe12fff1e, // 1008    bx lr
                0xeafffffc, // 100c g: b 0x1004
            ]),
        )],
        symbols: vec![("f", 0x1000, STT_FUNC), ("g", 0x100c, STT_FUNC)],
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();

    let starts: Vec<u64> = recovery.cfg.nodes.keys().copied().collect();
    assert_eq!(starts, vec![0x1000, 0x1004, 0x100c]);
    assert_eq!(recovery.cfg.block_at(0x1000).unwrap().instruction_count, 1);
    assert_eq!(recovery.cfg.block_at(0x1004).unwrap().instruction_count, 2);
    assert_eq!(
        recovery.cfg.block_at(0x1000).unwrap().terminator,
        InstrKind::Fallthrough
    );
    assert!(recovery
        .cfg
        .edges
        .contains(&(0x1000, 0x1004, JumpKind::Fallthrough)));
    assert!(recovery
        .cfg
        .edges
        .contains(&(0x100c, 0x1004, JumpKind::Jump)));

    // blocks partition the decoded bytes
    let mut seen = BTreeSet::new();
    for block in recovery.cfg.nodes.values() {
        let mut addr = block.start;
        while addr < block.end() {
            assert!(seen.insert(addr), "address {addr:#x} in two blocks");
            addr += 4;
        }
    }
}

#[test]
fn branch_into_own_block_splits_and_keeps_the_edge_on_the_tail() {
    // one straight run whose final branch lands in its own middle: the jump
    // edge must come from the tail block created by the split
    let fixture = ElfFixture {
        entry: 0x1000,
        text: vec![(
            0x1000,
            words(&[
                0xe1a00000, // 1000: mov r0, r0
                0xe1a00000, // 1004: mov r0, r0    <- loop head
                0xeafffffd, // 1008: b 0x1004
            ]),
        )],
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();

    let starts: Vec<u64> = recovery.cfg.nodes.keys().copied().collect();
    assert_eq!(starts, vec![0x1000, 0x1004]);
    assert_eq!(
        recovery.cfg.edges,
        BTreeSet::from([
            (0x1000, 0x1004, JumpKind::Fallthrough),
            (0x1004, 0x1004, JumpKind::Jump),
        ])
    );
    assert_eq!(
        recovery.cfg.block_at(0x1004).unwrap().terminator,
        InstrKind::Branch(0x1004)
    );
}

#[test]
fn conditional_branch_has_both_exits() {
    let fixture = ElfFixture {
        entry: 0x1000,
        text: vec![(
            0x1000,
            words(&[
                0x0a000000, // 1000: beq 0x1008
                0xe12fff1e, // 1004: bx lr
                0xe12fff1e, // 1008: bx lr
            ]),
        )],
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();
    assert!(recovery
        .cfg
        .edges
        .contains(&(0x1000, 0x1008, JumpKind::CondJump)));
    assert!(recovery
        .cfg
        .edges
        .contains(&(0x1000, 0x1004, JumpKind::Fallthrough)));
}

#[test]
fn out_of_range_call_becomes_named_stub() {
    let fixture = ElfFixture {
        entry: 0x1000,
        text: vec![(
            0x1000,
            words(&[
                0xeb000ffe, // 1000: bl 0x5000
                0xe12fff1e, // 1004: bx lr
            ]),
        )],
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();

    let stub = recovery.cfg.block_at(0x5000).expect("stub block");
    assert_eq!(stub.instruction_count, 0);
    assert!(stub.byte_string.is_empty());
    assert!(recovery
        .cfg
        .edges
        .contains(&(0x1000, 0x5000, JumpKind::Call)));
    assert!(recovery.call_graph.edges.contains(&(0x1000, 0x5000)));
    let stub_fn = recovery
        .functions
        .iter()
        .find(|f| f.entry == 0x5000)
        .unwrap();
    assert_eq!(stub_fn.name.as_deref(), Some("ext_0x5000"));
    assert!(!recovery.diagnostics.is_empty());
}

#[test]
fn out_of_range_branch_is_dropped_with_diagnostic() {
    let fixture = ElfFixture {
        entry: 0x1000,
        text: vec![(0x1000, words(&[0xea000ffe]))], // b 0x5000
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();
    assert_eq!(recovery.cfg.nodes.len(), 1);
    assert!(recovery.cfg.edges.is_empty());
    assert!(recovery
        .diagnostics
        .iter()
        .any(|d| d.contains("decode range exceeded")));
}

#[test]
fn call_into_library_is_followed() {
    // main at 0x1000 calls 0x20000 inside the library's text
    let main = ElfFixture {
        entry: 0x1000,
        text: vec![(
            0x1000,
            words(&[
                0xeb007bfe, // 1000: bl 0x20000
                0xe12fff1e, // 1004: bx lr
            ]),
        )],
        needed: vec!["libfoo.so"],
        ..ElfFixture::default()
    };
    let lib = ElfFixture {
        e_type: ET_DYN,
        entry: 0,
        text: vec![(0x20000, words(&[0xe12fff1e]))],
        symbols: vec![("lib_fn", 0x20000, STT_FUNC)],
        ..ElfFixture::default()
    };
    let image = parse_executable(&main.build()).unwrap();
    let library = parse_executable(&lib.build()).unwrap();
    let recovery = recover_cfg(&image, &[library]).unwrap();

    assert!(recovery.call_graph.edges.contains(&(0x1000, 0x20000)));
    let block = recovery.cfg.block_at(0x20000).expect("library block");
    assert_eq!(block.instruction_count, 1);
    let lib_fn = recovery
        .functions
        .iter()
        .find(|f| f.entry == 0x20000)
        .unwrap();
    assert_eq!(lib_fn.name.as_deref(), Some("lib_fn"));
}

#[test]
fn overlapping_library_is_rebased() {
    // both images claim 0x1000; the library must move out of the way
    let main = ElfFixture {
        entry: 0x1000,
        text: vec![(0x1000, words(&[0xe12fff1e]))],
        ..ElfFixture::default()
    };
    let lib = ElfFixture {
        e_type: ET_DYN,
        entry: 0,
        text: vec![(0x1000, words(&[0xe12fff1e]))],
        symbols: vec![("dup", 0x1000, STT_FUNC)],
        ..ElfFixture::default()
    };
    let image = parse_executable(&main.build()).unwrap();
    let library = parse_executable(&lib.build()).unwrap();
    let recovery = recover_cfg(&image, &[library]).unwrap();

    // two return blocks at distinct addresses, one per image
    assert_eq!(recovery.cfg.nodes.len(), 2);
    let starts: Vec<u64> = recovery.cfg.nodes.keys().copied().collect();
    assert_eq!(starts[0], 0x1000);
    assert!(
        starts[1] >= 0x10000,
        "library not rebased: {:#x}",
        starts[1]
    );
}

#[test]
fn no_executable_section_is_error() {
    let fixture = ElfFixture {
        e_type: ET_DYN,
        entry: 0,
        text: vec![],
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    assert_eq!(
        recover_cfg(&image, &[]).unwrap_err(),
        RecoveryError::NoExecutableSection
    );
}

#[test]
fn recovery_is_deterministic() {
    let bytes = three_function_fixture().build();
    let image = parse_executable(&bytes).unwrap();
    let a = recover_cfg(&image, &[]).unwrap();
    let b = recover_cfg(&image, &[]).unwrap();
    assert_eq!(a.cfg, b.cfg);
    assert_eq!(a.call_graph, b.call_graph);
    assert_eq!(a.cfg.edge_list(), b.cfg.edge_list());
}

#[test]
fn edge_kind_breakdown_on_fixture() {
    let image = parse_executable(&three_function_fixture().build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();
    let counts = recovery.cfg.edge_counts_by_kind();
    assert_eq!(counts.get(&JumpKind::Call), Some(&3));
    assert_eq!(counts.get(&JumpKind::CallReturn), Some(&3));
    assert_eq!(counts.get(&JumpKind::Jump), None);
    assert_eq!(counts.values().sum::<usize>(), recovery.cfg.edges.len());
}

#[test]
fn edge_list_dump_matches_golden() {
    let image = parse_executable(&three_function_fixture().build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();
    assert_eq!(
        recovery.cfg.edge_list(),
        "0x1004 0x1000 call\n\
         0x1004 0x1008 call_return\n\
         0x100c 0x1000 call\n\
         0x100c 0x1010 call_return\n\
         0x1010 0x1004 call\n\
         0x1010 0x1014 call_return\n"
    );
    assert_eq!(
        recovery.call_graph.edge_list(),
        "0x1004 0x1000 call\n0x100c 0x1000 call\n0x100c 0x1004 call\n"
    );
}

#[test]
fn call_graph_selection_on_fixture() {
    let image = parse_executable(&three_function_fixture().build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();

    let blocks: Vec<_> = recovery.cfg.nodes.values().cloned().collect();
    let mut dict = TagDictionary::new();
    extend_tag_dictionary(&blocks, &mut dict);
    assert_eq!(dict.len(), 3);

    let graph = select_call_graph_nodes(&recovery.cfg, &recovery.call_graph, &dict).unwrap();
    assert_eq!(graph.node_tags, vec![1, 2, 3]);
    let expected: BTreeSet<(u32, u32)> = [(1, 0), (2, 0), (2, 1)].into();
    assert_eq!(graph.adjacency, expected);

    let undirected = to_undirected(&graph);
    assert_eq!(undirected.adjacency, [(0, 1), (0, 2), (1, 2)].into());
}

#[test]
fn empty_call_graph_selects_empty_graph() {
    let cfg = ControlFlowGraph::default();
    let cg = CallGraph::default();
    let graph = select_call_graph_nodes(&cfg, &cg, &TagDictionary::new()).unwrap();
    assert_eq!(graph.node_count(), 0);
    assert!(graph.adjacency.is_empty());
}

#[test]
fn byte_identical_functions_share_a_tag() {
    // two functions with the same body, one with a different body
    let fixture = ElfFixture {
        entry: 0x1000,
        text: vec![(
            0x1000,
            words(&[
                0xe12fff1e, // a: bx lr
                0xe12fff1e, // b: bx lr
                0xe3a00000, // c: mov r0, #0
                0xe12fff1e, //    bx lr
            ]),
        )],
        symbols: vec![
            ("a", 0x1000, STT_FUNC),
            ("b", 0x1004, STT_FUNC),
            ("c", 0x1008, STT_FUNC),
        ],
        ..ElfFixture::default()
    };
    let image = parse_executable(&fixture.build()).unwrap();
    let recovery = recover_cfg(&image, &[]).unwrap();
    let blocks: Vec<_> = recovery.cfg.nodes.values().cloned().collect();
    let mut dict = TagDictionary::new();
    extend_tag_dictionary(&blocks, &mut dict);
    let graph = select_call_graph_nodes(&recovery.cfg, &recovery.call_graph, &dict).unwrap();
    assert_eq!(graph.node_tags[0], graph.node_tags[1]);
    assert_ne!(graph.node_tags[0], graph.node_tags[2]);
}

/// Independent union-find, kept deliberately different from the BFS sweep
/// inside `compute_stats`.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

fn synthetic_cfg(rng: &mut ChaCha8Rng) -> (ControlFlowGraph, usize) {
    let n = rng.gen_range(1..=50usize);
    let mut cfg = ControlFlowGraph::default();
    for i in 0..n {
        let start = 0x1000 + 4 * i as u64;
        cfg.nodes.insert(
            start,
            BasicBlock {
                start,
                byte_string: vec![0x1e, 0xff, 0x2f, 0xe1],
                instruction_count: 1,
                is_syscall: rng.gen_bool(0.1),
                terminator: InstrKind::Return,
            },
        );
    }
    let edge_count = rng.gen_range(0..=2 * n);
    let kinds = [
        JumpKind::Fallthrough,
        JumpKind::Jump,
        JumpKind::CondJump,
        JumpKind::Call,
        JumpKind::CallReturn,
    ];
    let mut uf = UnionFind::new(n);
    for _ in 0..edge_count {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let kind = kinds[rng.gen_range(0..kinds.len())];
        cfg.edges
            .insert((0x1000 + 4 * a as u64, 0x1000 + 4 * b as u64, kind));
        uf.union(a, b);
    }
    let roots: BTreeSet<usize> = (0..n).map(|i| uf.find(i)).collect();
    (cfg, roots.len())
}

#[test]
fn component_count_matches_union_find_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let (cfg, expected) = synthetic_cfg(&mut rng);
        assert_eq!(compute_stats(&cfg).weak_component_count, expected);
    }
}

#[test]
fn coverage_quadrants_match_set_arithmetic_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let universe: BTreeSet<u64> = (0..rng.gen_range(1..=64u64)).map(|i| 4 * i).collect();
        let pick = |rng: &mut ChaCha8Rng| -> BTreeSet<u64> {
            universe
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(0.5))
                .collect()
        };
        let cover_a = pick(&mut rng);
        let cover_b = pick(&mut rng);
        let stats = |cover: &BTreeSet<u64>| graphmal_core::cfg::GraphStats {
            node_count: 0,
            edge_count: 0,
            weak_component_count: 0,
            syscall_node_count: 0,
            covered_addresses: cover.clone(),
        };
        let q = coverage_compare(&stats(&cover_a), &stats(&cover_b), &universe).unwrap();

        let only_a = cover_a.difference(&cover_b).count();
        let only_b = cover_b.difference(&cover_a).count();
        let both = cover_a.intersection(&cover_b).count();
        assert_eq!(q.only_a, only_a);
        assert_eq!(q.only_b, only_b);
        assert_eq!(q.both, both);
        assert_eq!(q.neither, universe.len() - only_a - only_b - both);
        assert_eq!(
            q.only_a + q.only_b + q.both + q.neither,
            universe.len(),
            "quadrants must partition the universe"
        );
    }
}
