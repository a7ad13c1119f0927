//! Reader and writer for the line-oriented graph dataset text format.
//!
//! ```text
//! N                      number of graphs
//! n label                per graph: node count and class label
//! tag m j1 .. jm         per node: tag, neighbor count, 0-based neighbors
//! ```
//!
//! The writer is bit-exact: single spaces, `\n` line endings, neighbor
//! indices ascending, an undirected edge listed by both endpoints and a
//! self-loop listed once by its own node. The reader is the inverse and
//! checks that declared counts match and that both endpoints agree on every
//! edge; all failures carry a 1-based line number.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::prep::LabeledGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormatError {
    /// Write-side: a graph breaks the format's invariants.
    InvalidGraph { index: usize, reason: String },
    /// A malformed token or count.
    ParseError { line: usize, reason: String },
    /// Counts parse but the graph contradicts itself.
    ConsistencyError { line: usize, reason: String },
    /// A neighbor index is not a valid node index.
    IndexOutOfRange { line: usize, index: u32, nodes: u32 },
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::InvalidGraph { index, reason } => {
                write!(f, "graph {index}: {reason}")
            }
            FormatError::ParseError { line, reason } => write!(f, "line {line}: {reason}"),
            FormatError::ConsistencyError { line, reason } => {
                write!(f, "line {line}: {reason}")
            }
            FormatError::IndexOutOfRange { line, index, nodes } => {
                write!(
                    f,
                    "line {line}: neighbor {index} out of range for {nodes} nodes"
                )
            }
        }
    }
}

impl core::error::Error for FormatError {}

/// Serializes `graphs` to the dataset text format. Output is byte-identical
/// across runs and platforms for identical input.
pub fn write_dataset(graphs: &[LabeledGraph]) -> Result<String, FormatError> {
    let mut out = String::new();
    out.push_str(&format!("{}\n", graphs.len()));
    for (index, graph) in graphs.iter().enumerate() {
        if !graph.is_consistent() {
            return Err(FormatError::InvalidGraph {
                index,
                reason: String::from("edge endpoint out of node range"),
            });
        }
        if graph.label > 1 {
            return Err(FormatError::InvalidGraph {
                index,
                reason: format!("label {} not in {{0, 1}}", graph.label),
            });
        }
        out.push_str(&format!("{} {}\n", graph.node_count(), graph.label));
        for v in 0..graph.node_count() as u32 {
            let neighbors = graph.neighbors(v);
            out.push_str(&format!(
                "{} {}",
                graph.node_tags[v as usize],
                neighbors.len()
            ));
            for j in neighbors {
                out.push_str(&format!(" {j}"));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

struct Lines<'a> {
    iter: core::str::Lines<'a>,
    number: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), FormatError> {
        match self.iter.next() {
            Some(line) => {
                self.number += 1;
                Ok((self.number, line))
            }
            None => Err(FormatError::ParseError {
                line: self.number + 1,
                reason: String::from("unexpected end of input"),
            }),
        }
    }
}

fn parse_u32(token: &str, line: usize) -> Result<u32, FormatError> {
    token.parse().map_err(|_| FormatError::ParseError {
        line,
        reason: format!("expected a non-negative integer, got {token:?}"),
    })
}

/// Parses a dataset text back into graphs; the exact inverse of
/// [`write_dataset`] on its outputs.
pub fn read_dataset(text: &str) -> Result<Vec<LabeledGraph>, FormatError> {
    let mut lines = Lines {
        iter: text.lines(),
        number: 0,
    };

    let (line, head) = lines.next()?;
    let count = parse_single_token(head, line, "graph count")?;

    let mut graphs = Vec::with_capacity(count as usize);
    for _ in 0..count {
        graphs.push(read_graph(&mut lines)?);
    }

    if let Ok((line, rest)) = lines.next() {
        return Err(FormatError::ParseError {
            line,
            reason: format!("trailing content {rest:?} after last graph"),
        });
    }
    Ok(graphs)
}

fn parse_single_token(text: &str, line: usize, what: &str) -> Result<u32, FormatError> {
    let mut tokens = text.split_whitespace();
    let value = match tokens.next() {
        Some(token) => parse_u32(token, line)?,
        None => {
            return Err(FormatError::ParseError {
                line,
                reason: format!("missing {what}"),
            })
        }
    };
    if tokens.next().is_some() {
        return Err(FormatError::ParseError {
            line,
            reason: format!("extra tokens after {what}"),
        });
    }
    Ok(value)
}

fn read_graph(lines: &mut Lines) -> Result<LabeledGraph, FormatError> {
    let (header_line, header) = lines.next()?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 2 {
        return Err(FormatError::ParseError {
            line: header_line,
            reason: format!("expected \"nodes label\", got {header:?}"),
        });
    }
    let node_count = parse_u32(tokens[0], header_line)?;
    let label = parse_u32(tokens[1], header_line)?;

    let mut node_tags = Vec::with_capacity(node_count as usize);
    let mut neighbor_lists: Vec<(usize, Vec<u32>)> = Vec::with_capacity(node_count as usize);
    for v in 0..node_count {
        let (line, text) = lines.next()?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(FormatError::ParseError {
                line,
                reason: format!("expected \"tag m neighbors..\", got {text:?}"),
            });
        }
        let tag = parse_u32(tokens[0], line)?;
        let m = parse_u32(tokens[1], line)? as usize;
        if tokens.len() != 2 + m {
            return Err(FormatError::ParseError {
                line,
                reason: format!("declared {m} neighbors but listed {}", tokens.len() - 2),
            });
        }
        let mut neighbors = Vec::with_capacity(m);
        for token in &tokens[2..] {
            let j = parse_u32(token, line)?;
            if j >= node_count {
                return Err(FormatError::IndexOutOfRange {
                    line,
                    index: j,
                    nodes: node_count,
                });
            }
            if neighbors.contains(&j) {
                return Err(FormatError::ConsistencyError {
                    line,
                    reason: format!("neighbor {j} of node {v} listed twice"),
                });
            }
            neighbors.push(j);
        }
        node_tags.push(tag);
        neighbor_lists.push((line, neighbors));
    }

    // Both endpoints must agree on every undirected edge.
    let mut adjacency: BTreeSet<(u32, u32)> = BTreeSet::new();
    for (v, (line, neighbors)) in neighbor_lists.iter().enumerate() {
        let v = v as u32;
        for &j in neighbors {
            if j != v && !neighbor_lists[j as usize].1.contains(&v) {
                return Err(FormatError::ConsistencyError {
                    line: *line,
                    reason: format!("node {v} lists neighbor {j} but not vice versa"),
                });
            }
            adjacency.insert((v.min(j), v.max(j)));
        }
    }

    Ok(LabeledGraph {
        node_tags,
        adjacency,
        label,
    })
}

/// Distinct labels in first-appearance order; its length is the label
/// universe size used to infer the number of classes.
pub fn label_universe(graphs: &[LabeledGraph]) -> Vec<u32> {
    let mut seen = Vec::new();
    for graph in graphs {
        if !seen.contains(&graph.label) {
            seen.push(graph.label);
        }
    }
    seen
}
