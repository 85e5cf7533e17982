//! Graph construction, validation, the network interchange format, and
//! edge subdivision.
//!
//! All simulation runs against a [`RoadGraph`]: a connected, simple,
//! undirected graph with strictly positive edge lengths (meters). Vertices
//! are either intersections (`Orange`, agents pick a uniform neighbor) or
//! subdivision points (`Yellow`, always degree 2, agents keep direction).
//! A `RoadGraph` is immutable after construction, so it can be shared
//! freely across simulation threads.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

/// Vertex index, 0-based and consecutive.
pub type VertexId = usize;

/// Vertex role. Yellow vertices are subdivision points and must have
/// degree exactly 2; agents pass through them without changing direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VertexKind {
    Orange,
    Yellow,
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexKind::Orange => write!(f, "orange"),
            VertexKind::Yellow => write!(f, "yellow"),
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("yellow vertex {vertex} has degree {degree}, expected exactly 2")]
    YellowDegree { vertex: VertexId, degree: usize },
    #[error("graph is disconnected: vertex {vertex} is unreachable from vertex 0")]
    Disconnected { vertex: VertexId },
    #[error("edge ({u},{v}) has non-positive or non-finite length {length}")]
    BadEdgeLength {
        u: VertexId,
        v: VertexId,
        length: f64,
    },
    #[error("self-loop at vertex {0}; only simple graphs are supported")]
    SelfLoop(VertexId),
    #[error("duplicate edge ({u},{v}); only simple graphs are supported")]
    DuplicateEdge { u: VertexId, v: VertexId },
    #[error("vertex id {id} out of range (expected 0..{n})")]
    VertexOutOfRange { id: usize, n: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Weighted undirected graph with per-vertex kinds and optional planar
/// coordinates. Adjacency is stored in CSR form for cheap neighbor scans
/// in the walk kernels; the canonical edge list (indexed by edge id) is
/// kept alongside for subdivision and serialization.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    kinds: Vec<VertexKind>,
    coords: Option<Vec<(f64, f64)>>,
    offsets: Vec<usize>,
    adj_neighbor: Vec<VertexId>,
    adj_length: Vec<f64>,
    adj_edge: Vec<usize>,
    edges: Vec<(VertexId, VertexId, f64)>,
}

impl RoadGraph {
    fn assemble(
        kinds: Vec<VertexKind>,
        coords: Option<Vec<(f64, f64)>>,
        edges: Vec<(VertexId, VertexId, f64)>,
    ) -> Result<Self, GraphError> {
        let n = kinds.len();
        if n == 0 {
            return Err(GraphError::InvalidArgument("graph has no vertices".into()));
        }

        let mut degree = vec![0usize; n];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(u, v, len) in &edges {
            if u >= n {
                return Err(GraphError::VertexOutOfRange { id: u, n });
            }
            if v >= n {
                return Err(GraphError::VertexOutOfRange { id: v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !len.is_finite() || len <= 0.0 {
                return Err(GraphError::BadEdgeLength { u, v, length: len });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge {
                    u: u.min(v),
                    v: u.max(v),
                });
            }
            degree[u] += 1;
            degree[v] += 1;
        }

        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let slots = offsets[n];
        let mut adj_neighbor = vec![0; slots];
        let mut adj_length = vec![0.0; slots];
        let mut adj_edge = vec![0; slots];
        let mut cursor = offsets.clone();
        for (eid, &(u, v, len)) in edges.iter().enumerate() {
            for (a, b) in [(u, v), (v, u)] {
                let slot = cursor[a];
                adj_neighbor[slot] = b;
                adj_length[slot] = len;
                adj_edge[slot] = eid;
                cursor[a] += 1;
            }
        }

        let g = RoadGraph {
            kinds,
            coords,
            offsets,
            adj_neighbor,
            adj_length,
            adj_edge,
            edges,
        };
        g.validate()?;
        Ok(g)
    }

    /// Checks the structural invariants: yellow vertices have degree 2 and
    /// the graph is connected. Simplicity and length positivity are
    /// enforced at assembly time.
    fn validate(&self) -> Result<(), GraphError> {
        let n = self.vertex_count();
        for v in 0..n {
            if self.kinds[v] == VertexKind::Yellow && self.degree(v) != 2 {
                return Err(GraphError::YellowDegree {
                    vertex: v,
                    degree: self.degree(v),
                });
            }
        }
        // BFS from vertex 0.
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        visited[0] = true;
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbor_slice(u) {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(v) = visited.iter().position(|&ok| !ok) {
            return Err(GraphError::Disconnected { vertex: v });
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn kind(&self, v: VertexId) -> VertexKind {
        self.kinds[v]
    }

    /// Neighbor ids of `v` as a slice into the CSR arrays.
    pub fn neighbor_slice(&self, v: VertexId) -> &[VertexId] {
        &self.adj_neighbor[self.offsets[v]..self.offsets[v + 1]]
    }

    /// The `idx`-th incident `(neighbor, edge id)` of `v`.
    pub fn neighbor_at(&self, v: VertexId, idx: usize) -> (VertexId, usize) {
        let slot = self.offsets[v] + idx;
        (self.adj_neighbor[slot], self.adj_edge[slot])
    }

    /// `(neighbor, edge length, edge id)` triples incident to `v`.
    pub fn incident(&self, v: VertexId) -> impl Iterator<Item = (VertexId, f64, usize)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        range.map(move |slot| {
            (
                self.adj_neighbor[slot],
                self.adj_length[slot],
                self.adj_edge[slot],
            )
        })
    }

    /// Canonical edge list, indexed by edge id.
    pub fn edges(&self) -> &[(VertexId, VertexId, f64)] {
        &self.edges
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|&(_, _, len)| len).sum()
    }

    pub fn yellow_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|&&k| k == VertexKind::Yellow)
            .count()
    }
}

/// Complete graph `K_n`, all orange, unit edge lengths.
pub fn build_complete(n: usize) -> Result<RoadGraph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidArgument(format!(
            "complete graph needs n >= 2 vertices, got {n}"
        )));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v, 1.0));
        }
    }
    RoadGraph::assemble(vec![VertexKind::Orange; n], None, edges)
}

/// Cycle on `n >= 3` vertices, all orange, unit edge lengths. A 2-cycle
/// would be a double edge, which the simple-graph policy rejects.
pub fn build_cycle(n: usize) -> Result<RoadGraph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidArgument(format!(
            "cycle needs n >= 3 vertices (n = {n} would create a multi-edge)"
        )));
    }
    let edges = (0..n).map(|u| (u, (u + 1) % n, 1.0)).collect();
    RoadGraph::assemble(vec![VertexKind::Orange; n], None, edges)
}

/// Wrap-around `w x h` grid, 4-regular, all orange, unit edge lengths.
/// Requires `w, h >= 3`: a side of length 2 collapses the two wrap-around
/// edges of a line into a double edge, which the simple-graph policy
/// rejects, so the smallest accepted torus is 3x3.
pub fn build_torus_grid(w: usize, h: usize) -> Result<RoadGraph, GraphError> {
    if w < 3 || h < 3 {
        return Err(GraphError::InvalidArgument(format!(
            "torus needs w, h >= 3 to stay a simple graph, got {w}x{h}"
        )));
    }
    let id = |r: usize, c: usize| r * w + c;
    let mut edges = Vec::with_capacity(2 * w * h);
    for r in 0..h {
        for c in 0..w {
            edges.push((id(r, c), id(r, (c + 1) % w), 1.0));
            edges.push((id(r, c), id((r + 1) % h, c), 1.0));
        }
    }
    RoadGraph::assemble(vec![VertexKind::Orange; w * h], None, edges)
}

/// Parses the line-oriented interchange format:
///
/// ```text
/// # comment
/// nodes <n>
/// <id> <kind> [<x> <y>]     (n lines, kind in {orange, yellow})
/// edges <m>
/// <u> <v> <length_m>        (m lines)
/// ```
///
/// Ids are 0-based consecutive integers. Coordinates are all-or-nothing
/// across the vertex block. The parsed graph is fully validated.
pub fn parse_network(input: impl std::io::Read) -> Result<RoadGraph, GraphError> {
    let reader = BufReader::new(input);
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((idx + 1, trimmed.to_string()));
    }
    let mut cursor = lines.into_iter();

    let parse_err = |line: usize, message: String| GraphError::Parse { line, message };

    let (line_no, header) = cursor
        .next()
        .ok_or_else(|| parse_err(0, "empty file".into()))?;
    let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["nodes", count] => count
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad node count '{count}'")))?,
        _ => {
            return Err(parse_err(
                line_no,
                format!("expected 'nodes <n>', got '{header}'"),
            ))
        }
    };

    let mut kinds = vec![VertexKind::Orange; n];
    let mut kind_seen = vec![false; n];
    let mut coords: Vec<Option<(f64, f64)>> = vec![None; n];
    for _ in 0..n {
        let (line_no, line) = cursor
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in node block".into()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 4 {
            return Err(parse_err(
                line_no,
                format!("expected 'id kind [x y]', got {} fields", fields.len()),
            ));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad vertex id '{}'", fields[0])))?;
        if id >= n {
            return Err(parse_err(
                line_no,
                format!("vertex id {id} out of range 0..{n}"),
            ));
        }
        if kind_seen[id] {
            return Err(parse_err(line_no, format!("vertex id {id} declared twice")));
        }
        kind_seen[id] = true;
        kinds[id] = match fields[1] {
            "orange" => VertexKind::Orange,
            "yellow" => VertexKind::Yellow,
            other => return Err(parse_err(line_no, format!("unknown kind '{other}'"))),
        };
        if fields.len() == 4 {
            let x: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad x coordinate '{}'", fields[2])))?;
            let y: f64 = fields[3]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad y coordinate '{}'", fields[3])))?;
            coords[id] = Some((x, y));
        }
    }

    let (line_no, header) = cursor
        .next()
        .ok_or_else(|| parse_err(0, "missing 'edges <m>' header".into()))?;
    let m: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["edges", count] => count
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad edge count '{count}'")))?,
        _ => {
            return Err(parse_err(
                line_no,
                format!("expected 'edges <m>', got '{header}'"),
            ))
        }
    };

    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (line_no, line) = cursor
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in edge block".into()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line_no,
                format!("expected 'u v length_m', got {} fields", fields.len()),
            ));
        }
        let u: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad vertex id '{}'", fields[0])))?;
        let v: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad vertex id '{}'", fields[1])))?;
        let len: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad edge length '{}'", fields[2])))?;
        edges.push((u, v, len));
    }
    if let Some((line_no, line)) = cursor.next() {
        return Err(parse_err(line_no, format!("trailing content '{line}'")));
    }

    let have_coords = coords.iter().filter(|c| c.is_some()).count();
    let coords = if have_coords == 0 {
        None
    } else if have_coords == n {
        Some(coords.into_iter().map(|c| c.unwrap()).collect())
    } else {
        return Err(parse_err(
            0,
            format!("coordinates given for {have_coords} of {n} vertices; they are all-or-nothing"),
        ));
    };

    RoadGraph::assemble(kinds, coords, edges)
}

/// Loads and validates a network file in the interchange format.
pub fn load_network(path: impl AsRef<Path>) -> Result<RoadGraph, GraphError> {
    let file = std::fs::File::open(path)?;
    parse_network(file)
}

/// Writes a graph in the interchange format. Lengths and coordinates use
/// shortest round-trip formatting, so save/load is lossless.
pub fn write_network(g: &RoadGraph, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "nodes {}", g.vertex_count())?;
    for v in 0..g.vertex_count() {
        match g.coords() {
            Some(coords) => {
                let (x, y) = coords[v];
                writeln!(out, "{v} {} {x} {y}", g.kind(v))?;
            }
            None => writeln!(out, "{v} {}", g.kind(v))?,
        }
    }
    writeln!(out, "edges {}", g.edge_count())?;
    for &(u, v, len) in g.edges() {
        writeln!(out, "{u} {v} {len}")?;
    }
    Ok(())
}

/// Saves a graph to a file in the interchange format.
pub fn save_network(g: &RoadGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let mut file = std::fs::File::create(path)?;
    write_network(g, &mut file)?;
    Ok(())
}

/// Outcome summary of [`discretize`].
#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationReport {
    pub d: f64,
    pub vertices_before: usize,
    pub vertices_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    /// `(original edge id, parts j)` for every edge that was split (j >= 2).
    pub added_per_edge: Vec<(usize, usize)>,
}

/// Replaces every edge longer than `d` by a path of `j = ceil(L/d)` equal
/// sub-edges of length `L/j` through `j - 1` new yellow vertices. Edges
/// with `L <= d` are untouched; original vertex kinds are preserved and
/// the total network length is unchanged.
pub fn discretize(g: &RoadGraph, d: f64) -> Result<(RoadGraph, DiscretizationReport), GraphError> {
    if !d.is_finite() || d <= 0.0 {
        return Err(GraphError::InvalidArgument(format!(
            "discretization distance must be positive and finite, got {d}"
        )));
    }

    let n = g.vertex_count();
    let mut kinds = g.kinds.clone();
    let mut coords = g.coords.clone();
    let mut edges: Vec<(VertexId, VertexId, f64)> = Vec::with_capacity(g.edge_count());
    let mut added_per_edge = Vec::new();

    for (eid, &(u, v, len)) in g.edges().iter().enumerate() {
        let parts = split_parts(len, d);
        if parts == 1 {
            edges.push((u, v, len));
            continue;
        }
        added_per_edge.push((eid, parts));
        let sub_len = len / parts as f64;
        let mut prev = u;
        for step in 1..parts {
            let mid = kinds.len();
            kinds.push(VertexKind::Yellow);
            if let Some(coords) = coords.as_mut() {
                let (ux, uy) = coords[u];
                let (vx, vy) = coords[v];
                let t = step as f64 / parts as f64;
                coords.push((ux + t * (vx - ux), uy + t * (vy - uy)));
            }
            edges.push((prev, mid, sub_len));
            prev = mid;
        }
        edges.push((prev, v, sub_len));
    }

    let report = DiscretizationReport {
        d,
        vertices_before: n,
        vertices_after: kinds.len(),
        edges_before: g.edge_count(),
        edges_after: edges.len(),
        added_per_edge,
    };
    let out = RoadGraph::assemble(kinds, coords, edges)?;
    Ok((out, report))
}

/// Minimum number of equal parts so that each part is at most `d`.
/// Plain `ceil(len/d)` can land one too high when `len/d` is an integer up
/// to float rounding, so one-part-fewer is accepted within a relative eps.
fn split_parts(len: f64, d: f64) -> usize {
    let mut parts = (len / d).ceil() as usize;
    parts = parts.max(1);
    while parts > 1 && len <= (parts - 1) as f64 * d * (1.0 + 1e-12) {
        parts -= 1;
    }
    parts
}
