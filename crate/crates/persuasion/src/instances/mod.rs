//! Seeded instance generators for the three experiment families — uniform
//! random MDPs, road-navigation DAGs, and the independent-set gadget — plus
//! instance file I/O.
//!
//! Every generator is a pure function of its spec: the spec carries the
//! 64-bit seed, a single ChaCha8 stream is drawn in a documented, frozen
//! order, and identical specs produce byte-identical serialized instances.
//! ChaCha8 is named deliberately: it is seedable, splittable, and specified
//! independently of this implementation, so a port in another language can
//! reproduce the exact instance stream.

mod gadget;
mod random;
mod roadnav;

pub use gadget::{gen_indset_gadget, indset_strategy, GadgetMap};
pub use random::{gen_random, RandomSpec};
pub use roadnav::{gen_roadnav, gen_roadnav_with_layout, RoadNavLayout, RoadNavSpec};

use crate::model::{ModelError, PersuasionMDP};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Errors from instance generation, graph parsing, and instance I/O.
#[derive(Debug, Error)]
pub enum InstanceError {
    /// A generator spec fails its own validity constraints.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    /// An input file is syntactically malformed.
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    /// A loaded instance violates a model invariant.
    #[error("instance invariant violated: {0}")]
    InvariantViolation(#[from] ModelError),
    /// The vertex set handed to the gadget strategy is not independent.
    #[error("vertices {u} and {v} are adjacent in the gadget's source graph")]
    NotIndependent { u: usize, v: usize },
    /// The agent discount is outside the range the gadget construction
    /// supports.
    #[error("agent discount {0} is outside the supported range (0, 1/2)")]
    DiscountOutOfRange(f64),
    /// Reading or writing a file failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An undirected graph without self-loops or duplicate edges, the input to
/// the independent-set gadget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    /// Number of vertices; vertices are 0-based indices.
    pub n: usize,
    /// Edges as normalized pairs (u, v) with u < v, sorted ascending.
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Build a graph from a vertex count and an edge list, normalizing edge
    /// orientation and rejecting self-loops, duplicates, and out-of-range
    /// endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, InstanceError> {
        let mut normalized: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(InstanceError::InvalidSpec(format!(
                    "self-loop at vertex {u}"
                )));
            }
            if u >= n || v >= n {
                return Err(InstanceError::InvalidSpec(format!(
                    "edge ({u}, {v}) out of range for {n} vertices"
                )));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(InstanceError::InvalidSpec(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self {
            n,
            edges: normalized,
        })
    }

    /// Whether vertices `u` and `v` are adjacent.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).is_ok()
    }

    /// Neighbors of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// Parse a graph from edge-list text: a first line `n m`, then `m` lines
/// `u v` with 0-based vertex indices. Blank lines and `#` comments are
/// ignored.
pub fn parse_graph(text: &str) -> Result<Graph, InstanceError> {
    let parse_err = |line: usize, message: String| InstanceError::ParseError {
        line,
        column: 1,
        message,
    };
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_line, header) = rows
        .next()
        .ok_or_else(|| parse_err(1, "empty graph file".to_string()))?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .ok_or_else(|| parse_err(header_line, "missing vertex count".to_string()))?
        .parse()
        .map_err(|e| parse_err(header_line, format!("bad vertex count: {e}")))?;
    let m: usize = parts
        .next()
        .ok_or_else(|| parse_err(header_line, "missing edge count".to_string()))?
        .parse()
        .map_err(|e| parse_err(header_line, format!("bad edge count: {e}")))?;
    if parts.next().is_some() {
        return Err(parse_err(
            header_line,
            "header must be exactly `n m`".to_string(),
        ));
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, row) = rows
            .next()
            .ok_or_else(|| parse_err(text.lines().count() + 1, "truncated edge list".to_string()))?;
        let mut parts = row.split_whitespace();
        let u: usize = parts
            .next()
            .ok_or_else(|| parse_err(line, "missing edge endpoint".to_string()))?
            .parse()
            .map_err(|e| parse_err(line, format!("bad edge endpoint: {e}")))?;
        let v: usize = parts
            .next()
            .ok_or_else(|| parse_err(line, "missing edge endpoint".to_string()))?
            .parse()
            .map_err(|e| parse_err(line, format!("bad edge endpoint: {e}")))?;
        if parts.next().is_some() {
            return Err(parse_err(line, "edge line must be exactly `u v`".to_string()));
        }
        if u == v {
            return Err(parse_err(line, format!("self-loop at vertex {u}")));
        }
        if u >= n || v >= n {
            return Err(parse_err(
                line,
                format!("edge ({u}, {v}) out of range for {n} vertices"),
            ));
        }
        edges.push((u, v));
    }
    if let Some((line, _)) = rows.next() {
        return Err(parse_err(line, "trailing content after edge list".to_string()));
    }
    match Graph::new(n, edges) {
        Ok(g) => Ok(g),
        Err(InstanceError::InvalidSpec(message)) => Err(parse_err(1, message)),
        Err(e) => Err(e),
    }
}

/// Write an instance to `path` as pretty-printed JSON with a trailing
/// newline.
pub fn save_instance(mdp: &PersuasionMDP, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let mut text = serde_json::to_string_pretty(mdp)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Read an instance from a JSON file, enforcing every model invariant on the
/// loaded data.
pub fn load_instance(path: impl AsRef<Path>) -> Result<PersuasionMDP, InstanceError> {
    let text = std::fs::read_to_string(path)?;
    let mdp: PersuasionMDP =
        serde_json::from_str(&text).map_err(|e| InstanceError::ParseError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    mdp.validate()?;
    Ok(mdp)
}
