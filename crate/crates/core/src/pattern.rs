//! Pattern graphs, their edge-subgraph lattice and copy enumeration in host graphs.
//!
//! A subgraph `H ⊂ G` is always the graph spanned by a nonempty subset of the
//! edges of `G`, with `v_H` the number of vertices incident to those edges.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest edge count for which the subgraph lattice is enumerated.
pub const MAX_PATTERN_EDGES: usize = 24;
/// Largest vertex count for the brute-force automorphism search.
pub const MAX_AUTOMORPHISM_VERTICES: usize = 10;
/// Largest host for copy enumeration.
pub const MAX_HOST_VERTICES: usize = 200;

/// A small fixed graph whose copies are counted and weighed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternGraph {
    num_vertices: usize,
    /// Normalised so that `a < b`, in input order.
    edges: Vec<(usize, usize)>,
}

/// Edge and vertex counts of the subgraphs spanned by edge subsets of a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgraphProfile {
    pub v_h: usize,
    pub e_h: usize,
    pub multiplicity: u64,
}

impl PatternGraph {
    pub fn new(num_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (idx, &(a, b)) in edges.iter().enumerate() {
            let line = idx + 2;
            if a == b {
                return Err(Error::Parse {
                    line,
                    message: format!("self-loop at vertex {a}"),
                });
            }
            if a >= num_vertices || b >= num_vertices {
                return Err(Error::Parse {
                    line,
                    message: format!("vertex index out of range in edge {a} {b} (v_G = {num_vertices})"),
                });
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate edge {a} {b}"),
                });
            }
            normalized.push(e);
        }
        if normalized.is_empty() {
            return domain("pattern must have at least one edge");
        }
        if num_vertices > 64 {
            return Err(Error::Resource(format!("pattern with {num_vertices} vertices")));
        }
        Ok(Self {
            num_vertices,
            edges: normalized,
        })
    }

    /// Builds one of the named patterns: `triangle`, `cycle:r`, `complete:r`,
    /// `path:r` (r vertices) or `star:r` (r leaves).
    pub fn named(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let size = |min: usize| -> Result<usize> {
            let raw = arg.ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("pattern '{name}' needs a size, e.g. '{name}:4'"),
            })?;
            let r: usize = raw.trim().parse().map_err(|_| Error::Parse {
                line: 0,
                message: format!("invalid pattern size '{raw}'"),
            })?;
            if r < min {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("pattern '{name}' needs size >= {min}"),
                });
            }
            Ok(r)
        };
        match name {
            "triangle" if arg.is_none() => Self::cycle(3),
            "cycle" => Self::cycle(size(3)?),
            "complete" => Self::complete(size(2)?),
            "path" => Self::path(size(2)?),
            "star" => Self::star(size(1)?),
            _ => Err(Error::Parse {
                line: 0,
                message: format!("unknown pattern '{spec}'"),
            }),
        }
    }

    pub fn cycle(r: usize) -> Result<Self> {
        let edges: Vec<_> = (0..r).map(|i| (i, (i + 1) % r)).collect();
        Self::new(r, &edges)
    }

    pub fn complete(r: usize) -> Result<Self> {
        let edges: Vec<_> = (0..r).tuple_combinations().collect();
        Self::new(r, &edges)
    }

    pub fn path(r: usize) -> Result<Self> {
        let edges: Vec<_> = (1..r).map(|i| (i - 1, i)).collect();
        Self::new(r, &edges)
    }

    pub fn star(leaves: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::new(leaves + 1, &edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vertices];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn has_isolated_vertices(&self) -> bool {
        self.degrees().contains(&0)
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency_lists();
        let mut seen = vec![false; self.num_vertices];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub(crate) fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    fn require_no_isolated(&self) -> Result<()> {
        if self.has_isolated_vertices() {
            return domain("patterns with isolated vertices have no well-defined copy count");
        }
        Ok(())
    }

    /// One profile per `(v_H, e_H)` class of nonempty edge subsets.
    pub fn edge_subgraph_profiles(&self) -> Result<Vec<SubgraphProfile>> {
        let e = self.num_edges();
        if e > MAX_PATTERN_EDGES {
            return Err(Error::Resource(format!("subgraph lattice of a pattern with {e} edges")));
        }
        let mut classes: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for mask in 1u64..(1u64 << e) {
            let mut verts = 0u64;
            for (i, &(a, b)) in self.edges.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    verts |= (1 << a) | (1 << b);
                }
            }
            let key = (verts.count_ones() as usize, mask.count_ones() as usize);
            *classes.entry(key).or_default() += 1;
        }
        Ok(classes
            .into_iter()
            .map(|((v_h, e_h), multiplicity)| SubgraphProfile { v_h, e_h, multiplicity })
            .collect())
    }

    /// `max e_H / v_H` over subgraphs, as an exact fraction.
    pub fn beta(&self) -> Result<Ratio<i64>> {
        let profiles = self.edge_subgraph_profiles()?;
        Ok(profiles
            .iter()
            .map(|pr| Ratio::new(pr.e_h as i64, pr.v_h as i64))
            .max()
            .expect("at least one edge"))
    }

    /// `ln min_H n^{v_H} p^{e_H}`.
    pub fn log_min_subgraph_term(&self, n: usize, p: f64) -> Result<f64> {
        self.check_np(n, p)?;
        let (ln_n, ln_p) = ((n as f64).ln(), p.ln());
        Ok(self
            .edge_subgraph_profiles()?
            .iter()
            .map(|pr| pr.v_h as f64 * ln_n + pr.e_h as f64 * ln_p)
            .fold(f64::INFINITY, f64::min))
    }

    pub fn min_subgraph_term(&self, n: usize, p: f64) -> Result<f64> {
        Ok(self.log_min_subgraph_term(n, p)?.exp())
    }

    /// `ln max_H n^{2 v_G - v_H} p^{2 e_G - e_H}`.
    pub fn log_max_variance_term(&self, n: usize, p: f64) -> Result<f64> {
        self.check_np(n, p)?;
        let (ln_n, ln_p) = ((n as f64).ln(), p.ln());
        let (v, e) = (self.num_vertices as f64, self.num_edges() as f64);
        Ok(self
            .edge_subgraph_profiles()?
            .iter()
            .map(|pr| (2.0 * v - pr.v_h as f64) * ln_n + (2.0 * e - pr.e_h as f64) * ln_p)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn max_variance_term(&self, n: usize, p: f64) -> Result<f64> {
        Ok(self.log_max_variance_term(n, p)?.exp())
    }

    fn check_np(&self, n: usize, p: f64) -> Result<()> {
        if n < self.num_vertices {
            return domain(format!("n = {n} is smaller than v_G = {}", self.num_vertices));
        }
        if !(p > 0.0 && p <= 1.0) {
            return domain(format!("p = {p} outside (0, 1]"));
        }
        Ok(())
    }

    /// Membership in the balanced class: `(e_H - 1)/(v_H - 2)` is maximised at `H = G`.
    pub fn is_balanced(&self) -> Result<bool> {
        if self.num_vertices < 3 {
            return domain("balance is defined for graphs with at least three vertices");
        }
        let target = Ratio::new(self.num_edges() as i64 - 1, self.num_vertices as i64 - 2);
        let best = self
            .edge_subgraph_profiles()?
            .iter()
            .filter(|pr| pr.v_h >= 3)
            .map(|pr| Ratio::new(pr.e_h as i64 - 1, pr.v_h as i64 - 2))
            .chain(std::iter::once(target))
            .max()
            .expect("nonempty");
        Ok(best == target)
    }

    /// Number of vertex permutations preserving the edge set (brute force).
    pub fn automorphism_count(&self) -> Result<u64> {
        let v = self.num_vertices;
        if v > MAX_AUTOMORPHISM_VERTICES {
            return Err(Error::Resource(format!("automorphism search over {v}! permutations")));
        }
        let mut adj = vec![vec![false; v]; v];
        for &(a, b) in &self.edges {
            adj[a][b] = true;
            adj[b][a] = true;
        }
        let count = (0..v)
            .permutations(v)
            .filter(|perm| self.edges.iter().all(|&(a, b)| adj[perm[a]][perm[b]]))
            .count();
        Ok(count as u64)
    }

    /// Number of copies of the pattern in `K_n`: `n!/(n - v_G)! / |Aut(G)|`.
    pub fn copies_in_complete(&self, n: usize) -> Result<u128> {
        self.require_no_isolated()?;
        let v = self.num_vertices;
        if n < v {
            return Ok(0);
        }
        let falling = (0..v).fold(1u128, |acc, i| acc * (n - i) as u128);
        Ok(falling / self.automorphism_count()? as u128)
    }

    /// Every edge subset of `host` isomorphic to the pattern (not necessarily
    /// induced), each once, as sorted lists of host edges in sorted order.
    pub fn enumerate_copies(&self, host: &HostGraph) -> Result<Vec<Vec<(usize, usize)>>> {
        self.require_no_isolated()?;
        let mut copies = BTreeSet::new();
        let embedder = Embedder::new(self, host, &[]);
        embedder.for_each(|map| {
            let mut edges: Vec<_> = self
                .edges
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (map[a], map[b]);
                    (x.min(y), x.max(y))
                })
                .collect();
            edges.sort_unstable();
            copies.insert(edges);
        });
        Ok(copies.into_iter().collect())
    }

    /// Number of copies in `host` that contain the host edge `(x, y)`, by
    /// counting embeddings rooted at that edge.
    pub fn copies_through_edge(&self, host: &HostGraph, x: usize, y: usize, aut: u64) -> u64 {
        let mut embeddings = 0u64;
        for &(a, b) in &self.edges {
            for (sa, sb) in [(x, y), (y, x)] {
                Embedder::new(self, host, &[(a, sa), (b, sb)]).for_each(|_| embeddings += 1);
            }
        }
        embeddings / aut
    }
}

/// Simple undirected host graph on `n` labelled vertices.
#[derive(Debug, Clone)]
pub struct HostGraph {
    n: usize,
    adj: Vec<Vec<bool>>,
    neighbors: Vec<Vec<usize>>,
}

impl HostGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_HOST_VERTICES {
            return Err(Error::Resource(format!("host with {n} vertices")));
        }
        let mut adj = vec![vec![false; n]; n];
        for &(a, b) in edges {
            if a == b || a >= n || b >= n {
                return domain(format!("invalid host edge {a} {b}"));
            }
            adj[a][b] = true;
            adj[b][a] = true;
        }
        let neighbors = (0..n).map(|i| (0..n).filter(|&j| adj[i][j]).collect()).collect();
        Ok(Self { n, adj, neighbors })
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(n, &complete_edges(n))
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a][b]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        complete_edges(self.n)
            .into_iter()
            .filter(|&(a, b)| self.adj[a][b])
            .collect()
    }
}

/// Edges of `K_n` in their fixed numbering: lexicographic pairs `(i, j)`, `i < j`.
pub fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).tuple_combinations().collect()
}

/// Position of edge `{i, j}` in [`complete_edges`].
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = (i.min(j), i.max(j));
    debug_assert!(a != b && b < n);
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

/// Backtracking search for injective edge-preserving maps pattern -> host.
struct Embedder<'a> {
    pattern: &'a PatternGraph,
    host: &'a HostGraph,
    order: Vec<usize>,
    /// For each position in `order`, the earlier-placed neighbours.
    back: Vec<Vec<usize>>,
    degrees: Vec<usize>,
    fixed: Vec<Option<usize>>,
}

impl<'a> Embedder<'a> {
    fn new(pattern: &'a PatternGraph, host: &'a HostGraph, fixed: &[(usize, usize)]) -> Self {
        let v = pattern.num_vertices;
        let adj = pattern.adjacency_lists();
        let mut fixed_map = vec![None; v];
        for &(pv, hv) in fixed {
            fixed_map[pv] = Some(hv);
        }
        // Fixed vertices first, then greedily the vertex with most placed neighbours.
        let mut order: Vec<usize> = fixed.iter().map(|&(pv, _)| pv).collect();
        let mut placed = vec![false; v];
        for &pv in &order {
            placed[pv] = true;
        }
        while order.len() < v {
            let next = (0..v)
                .filter(|&u| !placed[u])
                .max_by_key(|&u| (adj[u].iter().filter(|&&w| placed[w]).count(), adj[u].len(), v - u))
                .expect("unplaced vertex");
            placed[next] = true;
            order.push(next);
        }
        let position: Vec<usize> = {
            let mut pos = vec![0; v];
            for (i, &u) in order.iter().enumerate() {
                pos[u] = i;
            }
            pos
        };
        let back = order
            .iter()
            .enumerate()
            .map(|(i, &u)| adj[u].iter().copied().filter(|&w| position[w] < i).collect())
            .collect();
        Self {
            pattern,
            host,
            order,
            back,
            degrees: pattern.degrees(),
            fixed: fixed_map,
        }
    }

    fn for_each(&self, mut visit: impl FnMut(&[usize])) {
        let v = self.pattern.num_vertices;
        if v > self.host.n {
            return;
        }
        let mut map = vec![usize::MAX; v];
        let mut used = vec![false; self.host.n];
        self.extend(0, &mut map, &mut used, &mut visit);
    }

    fn extend(&self, depth: usize, map: &mut [usize], used: &mut [bool], visit: &mut impl FnMut(&[usize])) {
        if depth == self.order.len() {
            visit(map);
            return;
        }
        let u = self.order[depth];
        let back = &self.back[depth];
        let mut try_candidate = |h: usize, map: &mut [usize], used: &mut [bool]| {
            if used[h] || self.host.neighbors[h].len() < self.degrees[u] {
                return;
            }
            if !back.iter().all(|&w| self.host.adj[map[w]][h]) {
                return;
            }
            map[u] = h;
            used[h] = true;
            self.extend(depth + 1, map, used, visit);
            used[h] = false;
            map[u] = usize::MAX;
        };
        if let Some(h) = self.fixed[u] {
            try_candidate(h, map, used);
        } else if let Some(&anchor) = back.first() {
            let candidates = self.host.neighbors[map[anchor]].clone();
            for h in candidates {
                try_candidate(h, map, used);
            }
        } else {
            for h in 0..self.host.n {
                try_candidate(h, map, used);
            }
        }
    }
}

/// Parses the edge-list pattern format: the vertex count on the first line,
/// then one `i j` pair (0-based) per line. Blank lines are ignored.
pub fn parse_pattern(text: &str) -> Result<PatternGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (first_line, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty pattern file".into(),
    })?;
    let v: usize = header.parse().map_err(|_| Error::Parse {
        line: first_line,
        message: format!("expected vertex count, found '{header}'"),
    })?;
    let mut edges = Vec::new();
    let mut line_numbers = Vec::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split_whitespace().collect();
        let parsed: Option<Vec<usize>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed.as_deref() {
            Some(&[a, b]) => {
                edges.push((a, b));
                line_numbers.push(line);
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 'i j', found '{l}'"),
                })
            }
        }
    }
    PatternGraph::new(v, &edges).map_err(|err| match err {
        // Remap the edge ordinal to the physical line in the file.
        Error::Parse { line, message } => Error::Parse {
            line: line_numbers.get(line - 2).copied().unwrap_or(line),
            message,
        },
        other => other,
    })
}
