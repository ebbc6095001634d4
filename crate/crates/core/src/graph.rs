//! Graphs of the target states, colorings, target partitions and the
//! translation of local Pauli operators into syndrome flip masks.
//!
//! Vertices are labelled `1..=n`. Syndrome bit `mu_i` of vertex `i` is stored
//! at bit position `i - 1` of an index, so vertex 1 is the least significant
//! bit. Bit strings are displayed in vertex order `mu_1 mu_2 ... mu_n`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph on vertices `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighborhoods: Vec<Vec<usize>>,
    label: String,
}

impl Graph {
    /// Builds a graph from an edge list. Edges are unordered; duplicates and
    /// self-loops are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::with_label(n, edges, format!("explicit({n})"))
    }

    fn with_label(n: usize, edges: &[(usize, usize)], label: String) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        if n > 63 {
            return Err(Error::InvalidGraph(format!("{n} vertices exceed the 63-bit index")));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            for v in [a, b] {
                if v == 0 || v > n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighborhoods = vec![Vec::new(); n];
        for &(a, b) in &edges {
            neighborhoods[a - 1].push(b);
            neighborhoods[b - 1].push(a);
        }
        for nb in &mut neighborhoods {
            nb.sort_unstable();
        }
        Ok(Self { n, edges, neighborhoods, label })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Short human readable description such as `linear(8)`.
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> {
        1..=self.n
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v == 0 || v > self.n {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Sorted neighborhood `N(v)`. Panics on an invalid vertex.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighborhoods[v - 1]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a >= 1 && a <= self.n && self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Same vertex count and edge set, ignoring the label.
    pub fn same_structure(&self, other: &Graph) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Path graph `1 - 2 - ... - n`.
pub fn linear_cluster(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidGraph("linear cluster needs n >= 1".into()));
    }
    let edges: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
    Graph::with_label(n, &edges, format!("linear({n})"))
}

/// `rows x cols` lattice with row-major labels and nearest-neighbor edges.
pub fn grid_cluster(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidGraph("grid dimensions must be positive".into()));
    }
    let id = |r: usize, c: usize| r * cols + c + 1;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::with_label(rows * cols, &edges, format!("grid({rows}x{cols})"))
}

/// Star-shaped auxiliary graph (locally equivalent to a GHZ state) together
/// with the map back to the physical labels of the main graph.
///
/// Auxiliary vertices `1..` are the physical qubits in ascending order, so
/// the center sits wherever its label falls among the leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhzStar {
    pub graph: Graph,
    pub center: usize,
    pub leaves: Vec<usize>,
    labels: Vec<usize>,
}

impl GhzStar {
    /// Physical label of auxiliary vertex `aux_vertex`.
    pub fn physical(&self, aux_vertex: usize) -> usize {
        self.labels[aux_vertex - 1]
    }

    /// Physical labels in auxiliary order.
    pub fn physical_labels(&self) -> Vec<usize> {
        self.labels.clone()
    }

    /// Zero-based auxiliary bit of physical qubit `v`.
    pub fn bit_of(&self, v: usize) -> Option<usize> {
        self.labels.binary_search(&v).ok()
    }

    /// Zero-based auxiliary bit of the center.
    pub fn center_bit(&self) -> usize {
        self.bit_of(self.center).expect("center is a star vertex")
    }
}

pub fn ghz_star(center: usize, leaves: &[usize]) -> Result<GhzStar> {
    if leaves.is_empty() {
        return Err(Error::InvalidGraph("star needs at least one leaf".into()));
    }
    let mut sorted = leaves.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != leaves.len() {
        return Err(Error::InvalidGraph("duplicate leaf".into()));
    }
    if sorted.contains(&center) {
        return Err(Error::InvalidGraph(format!("center {center} listed as a leaf")));
    }
    let mut labels = sorted.clone();
    let c = labels.partition_point(|&v| v < center);
    labels.insert(c, center);
    let edges: Vec<_> = (0..labels.len()).filter(|&k| k != c).map(|k| (c + 1, k + 1)).collect();
    let graph = Graph::with_label(labels.len(), &edges, format!("star({center};{sorted:?})"))?;
    Ok(GhzStar { graph, center, leaves: sorted, labels })
}

/// Bipartition of the vertices with no edge inside either set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoColoring {
    pub set_a: Vec<usize>,
    pub set_b: Vec<usize>,
}

impl TwoColoring {
    pub fn mask_a(&self) -> u64 {
        vertex_mask(&self.set_a)
    }

    pub fn mask_b(&self) -> u64 {
        vertex_mask(&self.set_b)
    }
}

/// Breadth-first two-coloring. Each component starts from its lowest label,
/// which goes to set A; neighbors are visited lowest label first.
pub fn two_coloring(g: &Graph) -> Result<TwoColoring> {
    let mut color: Vec<Option<bool>> = vec![None; g.n()];
    for start in g.vertices() {
        if color[start - 1].is_some() {
            continue;
        }
        color[start - 1] = Some(false);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let cv = color[v - 1].unwrap();
            for &w in g.neighbors(v) {
                match color[w - 1] {
                    None => {
                        color[w - 1] = Some(!cv);
                        queue.push_back(w);
                    }
                    Some(cw) if cw == cv => return Err(Error::NotTwoColorable(w)),
                    Some(_) => {}
                }
            }
        }
    }
    let (mut set_a, mut set_b) = (Vec::new(), Vec::new());
    for v in g.vertices() {
        if color[v - 1] == Some(false) {
            set_a.push(v);
        } else {
            set_b.push(v);
        }
    }
    Ok(TwoColoring { set_a, set_b })
}

/// `V = {T} ∪ N(T) ∪ rest`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetPartition {
    pub target: usize,
    pub neighbors: Vec<usize>,
    pub rest: Vec<usize>,
}

pub fn partition_for_target(g: &Graph, t: usize) -> Result<TargetPartition> {
    g.check_vertex(t)?;
    let neighbors = g.neighbors(t).to_vec();
    let rest = g.vertices().filter(|&v| v != t && !neighbors.contains(&v)).collect();
    Ok(TargetPartition { target: t, neighbors, rest })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
}

/// Set of syndrome bits flipped by an operator; bit `i - 1` is vertex `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FlipMask {
    pub mask: u64,
    pub n: usize,
}

impl fmt::Display for FlipMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bit_string(self.mask, self.n))
    }
}

/// Z flips bit `qubit`; X acts like `K_qubit` times Z on the neighborhood and
/// therefore flips the neighborhood bits; Y does both. Phases are dropped,
/// which is exact for states diagonal in the graph basis.
pub fn pauli_flip_mask(g: &Graph, qubit: usize, pauli: Pauli) -> Result<FlipMask> {
    g.check_vertex(qubit)?;
    let z = 1u64 << (qubit - 1);
    let x = vertex_mask(g.neighbors(qubit));
    let mask = match pauli {
        Pauli::X => x,
        Pauli::Y => x ^ z,
        Pauli::Z => z,
    };
    Ok(FlipMask { mask, n: g.n() })
}

/// Bit mask with bit `v - 1` set for each listed vertex.
pub fn vertex_mask(vertices: &[usize]) -> u64 {
    vertices.iter().fold(0, |m, &v| m | (1u64 << (v - 1)))
}

/// Renders the low `n` bits of `index` as `mu_1 mu_2 ... mu_n`.
pub fn bit_string(index: u64, n: usize) -> String {
    (0..n).map(|i| if index >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Inverse of [`bit_string`].
pub fn parse_bit_string(s: &str) -> Result<u64> {
    s.chars().enumerate().try_fold(0u64, |acc, (i, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << i),
        _ => Err(Error::InvalidArgument(format!("bad bit string {s:?}"))),
    })
}
