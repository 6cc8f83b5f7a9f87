//! Dijkstra shortest-path trees with deterministic predecessors.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::graph::MetricGraph;
use crate::error::{Error, Result};

/// Marker for "no predecessor".
pub const NO_PRED: u32 = u32::MAX;

const MAGIC: &[u8; 4] = b"LQGT";
const VERSION: u32 = 1;

/// Single- or multi-source shortest-path solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicTree {
    pub sources: Vec<u32>,
    pub dist: Vec<f64>,
    pub pred: Vec<u32>,
}

impl GeodesicTree {
    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn pred_of(&self, v: usize) -> Option<usize> {
        match self.pred[v] {
            NO_PRED => None,
            p => Some(p as usize),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(24 + 4 * self.sources.len() + 12 * self.dist.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.dist.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.sources.len() as u64).to_le_bytes());
        for s in &self.sources {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        for d in &self.dist {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for p in &self.pred {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let short = || Error::Format("tree file is truncated".into());
        if bytes.len() < 24 || &bytes[..4] != MAGIC {
            return Err(Error::Format("not a tree file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Format(format!("unsupported tree file version {version}")));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let ns = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
        let need = ns.checked_mul(4).and_then(|a| n.checked_mul(12).and_then(|b| a.checked_add(b))).ok_or_else(short)?;
        if bytes.len() - 24 != need {
            return Err(short());
        }
        let mut pos = 24;
        let mut u32s = |count: usize| {
            let out: Vec<u32> = bytes[pos..pos + 4 * count]
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            pos += 4 * count;
            out
        };
        let sources = u32s(ns);
        let dist_start = 24 + 4 * ns;
        let dist: Vec<f64> = bytes[dist_start..dist_start + 8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let pred: Vec<u32> = bytes[dist_start + 8 * n..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(GeodesicTree { sources, dist, pred })
    }
}

/// Exact Dijkstra from a source set. Among equal-length predecessors the
/// smallest vertex index wins, so trees are reproducible.
pub fn shortest_paths(graph: &MetricGraph, sources: &[usize]) -> Result<GeodesicTree> {
    if sources.is_empty() {
        return Err(Error::param("sources", "source set is empty"));
    }
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut srcs: Vec<u32> = Vec::with_capacity(sources.len());
    for &s in sources {
        if !graph.contains(s) {
            return Err(Error::Domain(format!("source vertex {s} is outside the graph mask")));
        }
        if dist[s] != 0.0 {
            dist[s] = 0.0;
            srcs.push(s as u32);
            heap.push(Reverse((0u64, s as u32)));
        }
    }
    srcs.sort_unstable();
    // Non-negative floats order like their bit patterns.
    while let Some(Reverse((bits, u))) = heap.pop() {
        let u = u as usize;
        if done[u] || f64::from_bits(bits) > dist[u] {
            continue;
        }
        done[u] = true;
        let du = dist[u];
        graph.for_each_neighbor(u, |v, w| {
            let nd = du + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = u as u32;
                heap.push(Reverse((nd.to_bits(), v as u32)));
            } else if nd == dist[v] && (u as u32) < pred[v] && pred[v] != NO_PRED {
                pred[v] = u as u32;
            }
        });
    }
    Ok(GeodesicTree { sources: srcs, dist, pred })
}

/// `dist[target]`; `+∞` when unreachable.
pub fn distance(tree: &GeodesicTree, target: usize) -> f64 {
    tree.dist.get(target).copied().unwrap_or(f64::INFINITY)
}

/// Distance between two vertices inside the graph.
pub fn point_distance(graph: &MetricGraph, u: usize, v: usize) -> Result<f64> {
    Ok(shortest_paths(graph, &[u])?.dist[v])
}
