//! Bipartite localization graphs for the pair (P^n, P^{n-1}).
//!
//! A graph has two kinds of vertices. Vertices "over the divisor"
//! (type zero) carry a curve degree in the divisor, legs, positively
//! weighted roots, and negatively weighted roots that are either
//! markings or node slots to be glued. Vertices "at infinity" carry a
//! curve degree in the ambient space, legs, and positively weighted
//! roots (markings or node slots). Edges glue node slots of opposite
//! weight. Marking labels rigidify graphs: automorphisms fix legs and
//! marking-type roots pointwise and may only permute undecorated
//! structure (interchangeable vertices, parallel equal-weight edges).

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// A vertex mapping to the divisor. Node-type roots are stored as a
/// weight list; slot `s` is the edge attachment point `(vertex, s)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TypeZeroVertex {
    pub degree: i64,
    pub legs: Vec<u32>,
    /// (weight > 0, marking label)
    pub roots_zero: Vec<(i64, u32)>,
    /// (weight < 0, marking label)
    pub roots_inf_mark: Vec<(i64, u32)>,
    /// weights < 0, glued by edges
    pub roots_inf_node: Vec<i64>,
}

/// A vertex mapping to the ambient space away from the divisor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct InfVertex {
    pub degree: i64,
    pub legs: Vec<u32>,
    /// (weight > 0, marking label)
    pub roots_mark: Vec<(i64, u32)>,
    /// weights > 0, glued by edges
    pub roots_node: Vec<i64>,
}

/// An edge glues zero-side node slot (zero_vertex, zero_slot) to
/// inf-side node slot (inf_vertex, inf_slot).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub zero_vertex: usize,
    pub zero_slot: usize,
    pub inf_vertex: usize,
    pub inf_slot: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub n_amb: usize,
    pub zero: Vec<TypeZeroVertex>,
    pub inf: Vec<InfVertex>,
    pub edges: Vec<Edge>,
}

/// A vertex of a rubber graph: roots touch the two ends of a chain of
/// projective bundles over the divisor, so both weight lists are
/// positive and their difference equals the vertex degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RubberVertex {
    pub degree: i64,
    pub legs: Vec<u32>,
    pub roots_zero_end: Vec<(i64, u32)>,
    pub roots_inf_end: Vec<(i64, u32)>,
}

/// Variant of [`BipartiteGraph`] whose infinity side is a rubber
/// graph. Only the data model is provided; enumeration and validation
/// are out of scope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalizationGraph {
    pub zero: Vec<TypeZeroVertex>,
    pub rubber: Vec<RubberVertex>,
    pub edges: Vec<Edge>,
}

/// Topological type: genus (always zero here), number of legs, total
/// pushforward degree, and the marking weights in label order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopType {
    pub genus: u32,
    pub n_legs: usize,
    pub degree: i64,
    pub mu: Vec<i64>,
}

impl TopType {
    pub fn new(genus: u32, n_legs: usize, degree: i64, mu: Vec<i64>) -> Result<Self> {
        if genus != 0 {
            return Err(Error::Unsupported("only genus zero is implemented".into()));
        }
        if degree < 0 {
            return Err(Error::InvalidGraph("degree must be nonnegative".into()));
        }
        if mu.iter().any(|&w| w == 0) {
            return Err(Error::InvalidGraph("marking weights must be nonzero".into()));
        }
        let total: i64 = mu.iter().sum();
        if total != degree {
            return Err(Error::InvalidGraph(format!(
                "marking weights sum to {total}, expected the degree {degree}"
            )));
        }
        Ok(TopType { genus, n_legs, degree, mu })
    }

    pub fn rho(&self) -> usize {
        self.mu.len()
    }

    pub fn rho_plus(&self) -> usize {
        self.mu.iter().filter(|&&w| w > 0).count()
    }

    pub fn rho_minus(&self) -> usize {
        self.mu.iter().filter(|&&w| w < 0).count()
    }
}

/// Virtual dimension of the moduli of the given topological type:
/// dim(ambient) - 3 + degree * dim(ambient) + legs + positive markings.
pub fn virtual_dim(top: &TopType, n_amb: usize) -> i64 {
    n_amb as i64 - 3 + top.degree * n_amb as i64 + top.n_legs as i64 + top.rho_plus() as i64
}

impl TypeZeroVertex {
    pub fn half_edges(&self) -> usize {
        self.legs.len() + self.roots_zero.len() + self.roots_inf_mark.len()
            + self.roots_inf_node.len()
    }

    fn root_weight_sum(&self) -> i64 {
        self.roots_zero.iter().map(|(w, _)| w).sum::<i64>()
            + self.roots_inf_mark.iter().map(|(w, _)| w).sum::<i64>()
            + self.roots_inf_node.iter().sum::<i64>()
    }

    /// Count of roots toward infinity, both node and marking type.
    pub fn rho_inf(&self) -> usize {
        self.roots_inf_mark.len() + self.roots_inf_node.len()
    }

    /// Count of marking-type roots toward infinity.
    pub fn rho_minus(&self) -> usize {
        self.roots_inf_mark.len()
    }
}

impl InfVertex {
    pub fn half_edges(&self) -> usize {
        self.legs.len() + self.roots_mark.len() + self.roots_node.len()
    }

    fn root_weight_sum(&self) -> i64 {
        self.roots_mark.iter().map(|(w, _)| w).sum::<i64>()
            + self.roots_node.iter().sum::<i64>()
    }
}

impl BipartiteGraph {
    /// Checks every admissibility rule; the error message names the
    /// first violated one.
    pub fn validate(&self) -> Result<()> {
        if self.n_amb < 1 {
            return Err(Error::InvalidGraph("ambient dimension must be >= 1".into()));
        }
        let v_total = self.zero.len() + self.inf.len();
        if v_total == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }

        // Sign and degree conventions.
        for (vi, v) in self.zero.iter().enumerate() {
            if v.degree < 0 {
                return Err(Error::InvalidGraph(format!("zero vertex {vi}: negative degree")));
            }
            if self.n_amb == 1 && v.degree != 0 {
                return Err(Error::InvalidGraph(format!(
                    "zero vertex {vi}: the divisor of (P^1, point) carries no curves"
                )));
            }
            if v.roots_zero.iter().any(|(w, _)| *w <= 0) {
                return Err(Error::InvalidGraph(format!(
                    "zero vertex {vi}: roots toward zero must have positive weight"
                )));
            }
            if v.roots_inf_mark.iter().any(|(w, _)| *w >= 0)
                || v.roots_inf_node.iter().any(|&w| w >= 0)
            {
                return Err(Error::InvalidGraph(format!(
                    "zero vertex {vi}: roots toward infinity must have negative weight"
                )));
            }
        }
        for (vi, v) in self.inf.iter().enumerate() {
            if v.degree < 0 {
                return Err(Error::InvalidGraph(format!("inf vertex {vi}: negative degree")));
            }
            if v.roots_mark.iter().any(|(w, _)| *w <= 0)
                || v.roots_node.iter().any(|&w| w <= 0)
            {
                return Err(Error::InvalidGraph(format!(
                    "inf vertex {vi}: roots must have positive weight"
                )));
            }
        }

        // Marking labels: all distinct, legs first as 1..=L, then roots.
        let mut legs: Vec<u32> = Vec::new();
        let mut root_labels: Vec<u32> = Vec::new();
        for v in &self.zero {
            legs.extend(&v.legs);
            root_labels.extend(v.roots_zero.iter().map(|(_, l)| *l));
            root_labels.extend(v.roots_inf_mark.iter().map(|(_, l)| *l));
        }
        for v in &self.inf {
            legs.extend(&v.legs);
            root_labels.extend(v.roots_mark.iter().map(|(_, l)| *l));
        }
        let n_legs = legs.len();
        let rho = root_labels.len();
        let mut seen: BTreeSet<u32> = BTreeSet::new();
        for &l in legs.iter().chain(root_labels.iter()) {
            if !seen.insert(l) {
                return Err(Error::InvalidGraph(format!("marking label {l} repeats")));
            }
        }
        if legs.iter().any(|&l| l < 1 || l as usize > n_legs) {
            return Err(Error::InvalidGraph(format!(
                "legs must carry labels 1..={n_legs}"
            )));
        }
        if root_labels
            .iter()
            .any(|&l| (l as usize) <= n_legs || l as usize > n_legs + rho)
        {
            return Err(Error::InvalidGraph(format!(
                "marking roots must carry labels {}..={}",
                n_legs + 1,
                n_legs + rho
            )));
        }

        // Edges: every node slot glued exactly once, weights cancel.
        let mut zero_hit: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut inf_hit: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (ei, e) in self.edges.iter().enumerate() {
            let zw = self
                .zero
                .get(e.zero_vertex)
                .and_then(|v| v.roots_inf_node.get(e.zero_slot))
                .ok_or_else(|| {
                    Error::InvalidGraph(format!("edge {ei}: dangling zero-side slot"))
                })?;
            let iw = self
                .inf
                .get(e.inf_vertex)
                .and_then(|v| v.roots_node.get(e.inf_slot))
                .ok_or_else(|| {
                    Error::InvalidGraph(format!("edge {ei}: dangling inf-side slot"))
                })?;
            if zw + iw != 0 {
                return Err(Error::InvalidGraph(format!(
                    "edge {ei}: weights {zw} and {iw} do not cancel"
                )));
            }
            if zero_hit.insert((e.zero_vertex, e.zero_slot), ei).is_some() {
                return Err(Error::InvalidGraph(format!(
                    "zero slot ({}, {}) glued twice",
                    e.zero_vertex, e.zero_slot
                )));
            }
            if inf_hit.insert((e.inf_vertex, e.inf_slot), ei).is_some() {
                return Err(Error::InvalidGraph(format!(
                    "inf slot ({}, {}) glued twice",
                    e.inf_vertex, e.inf_slot
                )));
            }
        }
        for (vi, v) in self.zero.iter().enumerate() {
            for s in 0..v.roots_inf_node.len() {
                if !zero_hit.contains_key(&(vi, s)) {
                    return Err(Error::InvalidGraph(format!(
                        "zero slot ({vi}, {s}) is not glued"
                    )));
                }
            }
        }
        for (vi, v) in self.inf.iter().enumerate() {
            for s in 0..v.roots_node.len() {
                if !inf_hit.contains_key(&(vi, s)) {
                    return Err(Error::InvalidGraph(format!(
                        "inf slot ({vi}, {s}) is not glued"
                    )));
                }
            }
        }

        // Weight balance against the degree.
        for (vi, v) in self.zero.iter().enumerate() {
            let expected = if self.n_amb >= 2 { v.degree } else { 0 };
            if v.root_weight_sum() != expected {
                return Err(Error::InvalidGraph(format!(
                    "zero vertex {vi}: root weights sum to {}, expected {expected}",
                    v.root_weight_sum()
                )));
            }
        }
        for (vi, v) in self.inf.iter().enumerate() {
            if v.root_weight_sum() != v.degree {
                return Err(Error::InvalidGraph(format!(
                    "inf vertex {vi}: root weights sum to {}, expected {}",
                    v.root_weight_sum(),
                    v.degree
                )));
            }
        }

        // Stability.
        for (vi, v) in self.zero.iter().enumerate() {
            if v.degree == 0 && v.half_edges() < 3 {
                return Err(Error::InvalidGraph(format!(
                    "zero vertex {vi} is unstable: degree 0 with {} half-edges",
                    v.half_edges()
                )));
            }
            // A degree-0 vertex with no roots only carries constant
            // maps to the rubber, which are never rubber-stable.
            if v.degree == 0
                && v.roots_zero.is_empty()
                && v.roots_inf_mark.is_empty()
                && v.roots_inf_node.is_empty()
            {
                return Err(Error::InvalidGraph(format!(
                    "zero vertex {vi} is rubber-trivial: degree 0 with no roots"
                )));
            }
        }
        for (vi, v) in self.inf.iter().enumerate() {
            if v.degree == 0 && v.half_edges() < 3 {
                return Err(Error::InvalidGraph(format!(
                    "inf vertex {vi} is unstable: degree 0 with {} half-edges",
                    v.half_edges()
                )));
            }
        }

        // Connected and acyclic.
        if self.edges.len() + 1 != v_total {
            return Err(Error::InvalidGraph(format!(
                "{} edges on {} vertices is not a tree",
                self.edges.len(),
                v_total
            )));
        }
        let mut uf = UnionFind::new(v_total);
        for e in &self.edges {
            uf.union(e.zero_vertex, self.zero.len() + e.inf_vertex);
        }
        if uf.components() != 1 {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(())
    }

    /// The topological type of a valid graph.
    pub fn topological_type(&self) -> Result<TopType> {
        self.validate()?;
        let mut n_legs = 0;
        let mut marks: Vec<(u32, i64)> = Vec::new();
        let mut degree = 0;
        for v in &self.zero {
            n_legs += v.legs.len();
            degree += v.degree;
            marks.extend(v.roots_zero.iter().map(|(w, l)| (*l, *w)));
            marks.extend(v.roots_inf_mark.iter().map(|(w, l)| (*l, *w)));
        }
        for v in &self.inf {
            n_legs += v.legs.len();
            degree += v.degree;
            marks.extend(v.roots_mark.iter().map(|(w, l)| (*l, *w)));
        }
        marks.sort();
        TopType::new(0, n_legs, degree, marks.into_iter().map(|(_, w)| w).collect())
    }

    /// Order of the automorphism group: label-preserving vertex
    /// permutations times permutations of parallel equal-weight edges.
    /// Assumes a structurally well-formed graph but does not insist on
    /// full validity, so symmetry factors of degenerate configurations
    /// can still be inspected.
    pub fn automorphism_order(&self) -> u64 {
        let enc0 = encode(self, &identity(self.zero.len()), &identity(self.inf.len()));
        let mut vertex_autos = 0u64;
        for p0 in permutations(self.zero.len()) {
            for p1 in permutations(self.inf.len()) {
                if encode(self, &p0, &p1) == enc0 {
                    vertex_autos += 1;
                }
            }
        }
        let mut parallel: BTreeMap<(usize, usize, i64), u64> = BTreeMap::new();
        for e in &self.edges {
            let w = self.inf[e.inf_vertex].roots_node[e.inf_slot];
            *parallel.entry((e.zero_vertex, e.inf_vertex, w)).or_insert(0) += 1;
        }
        let edge_autos: u64 = parallel.values().map(|&m| factorial(m)).product();
        vertex_autos * edge_autos
    }

    /// Canonical encoding; equal iff the graphs are isomorphic.
    pub fn canonical_key(&self) -> CanonicalKey {
        let mut best: Option<CanonicalKey> = None;
        for p0 in permutations(self.zero.len()) {
            for p1 in permutations(self.inf.len()) {
                let enc = encode(self, &p0, &p1);
                if best.as_ref().is_none_or(|b| enc < *b) {
                    best = Some(enc);
                }
            }
        }
        best.expect("graphs have at least one (possibly empty) permutation pair")
    }

    /// Rebuilds the graph in canonical vertex and edge order.
    pub fn canonical_form(&self) -> BipartiteGraph {
        let key = self.canonical_key();
        graph_from_key(self.n_amb, &key)
    }
}

/// Vertex records plus sorted edge triples under a vertex relabeling.
pub type CanonicalKey = (Vec<TypeZeroVertex>, Vec<InfVertex>, Vec<(usize, usize, i64)>);

fn encode(g: &BipartiteGraph, p0: &[usize], p1: &[usize]) -> CanonicalKey {
    // p maps old index -> new index; records listed in new order.
    let mut zero: Vec<TypeZeroVertex> = vec![
        TypeZeroVertex {
            degree: 0,
            legs: vec![],
            roots_zero: vec![],
            roots_inf_mark: vec![],
            roots_inf_node: vec![],
        };
        g.zero.len()
    ];
    for (old, v) in g.zero.iter().enumerate() {
        let mut rec = v.clone();
        rec.legs.sort_unstable();
        rec.roots_zero.sort_unstable();
        rec.roots_inf_mark.sort_unstable();
        rec.roots_inf_node.sort_unstable();
        zero[p0[old]] = rec;
    }
    let mut inf: Vec<InfVertex> = vec![
        InfVertex { degree: 0, legs: vec![], roots_mark: vec![], roots_node: vec![] };
        g.inf.len()
    ];
    for (old, v) in g.inf.iter().enumerate() {
        let mut rec = v.clone();
        rec.legs.sort_unstable();
        rec.roots_mark.sort_unstable();
        rec.roots_node.sort_unstable();
        inf[p1[old]] = rec;
    }
    let mut edges: Vec<(usize, usize, i64)> = g
        .edges
        .iter()
        .map(|e| {
            let w = g.inf[e.inf_vertex].roots_node[e.inf_slot];
            (p0[e.zero_vertex], p1[e.inf_vertex], w)
        })
        .collect();
    edges.sort_unstable();
    (zero, inf, edges)
}

fn graph_from_key(n_amb: usize, key: &CanonicalKey) -> BipartiteGraph {
    let (zero, inf, triples) = key;
    let mut zero = zero.clone();
    let mut inf = inf.clone();
    for v in &mut zero {
        v.roots_inf_node.clear();
    }
    for v in &mut inf {
        v.roots_node.clear();
    }
    let mut edges = Vec::new();
    for &(zv, iv, w) in triples {
        zero[zv].roots_inf_node.push(-w);
        inf[iv].roots_node.push(w);
        edges.push(Edge {
            zero_vertex: zv,
            zero_slot: zero[zv].roots_inf_node.len() - 1,
            inf_vertex: iv,
            inf_slot: inf[iv].roots_node.len() - 1,
        });
    }
    BipartiteGraph { n_amb, zero, inf, edges }
}

/// Enumerates all isomorphism classes of connected admissible
/// bipartite graphs of the given topological type, in canonical order.
pub fn enumerate(top: &TopType, n_amb: usize) -> Result<Vec<BipartiteGraph>> {
    if n_amb < 1 {
        return Err(Error::InvalidGraph("ambient dimension must be >= 1".into()));
    }
    let negs: Vec<(i64, u32)> = top
        .mu
        .iter()
        .enumerate()
        .filter(|(_, &w)| w < 0)
        .map(|(j, &w)| (w, (top.n_legs + 1 + j) as u32))
        .collect();
    let poss: Vec<(i64, u32)> = top
        .mu
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0)
        .map(|(j, &w)| (w, (top.n_legs + 1 + j) as u32))
        .collect();
    let legs: Vec<u32> = (1..=top.n_legs as u32).collect();

    let mut seen: BTreeSet<CanonicalKey> = BTreeSet::new();
    let (max_zero, max_inf) = vertex_bounds(top);
    for k0 in 0..=max_zero {
        for kinf in 0..=max_inf {
            if k0 + kinf == 0 {
                continue;
            }
            if (k0 + kinf > 1 && (k0 > poss.len() || kinf > top.degree as usize))
                || (k0 == 0 && !negs.is_empty())
            {
                continue;
            }
            enumerate_stratum(top, n_amb, k0, kinf, &legs, &negs, &poss, &mut seen);
        }
    }
    Ok(seen.iter().map(|k| graph_from_key(n_amb, k)).collect())
}

/// Safe upper bounds on vertex counts for a tree whose degree-zero
/// vertices need three half-edges each.
fn vertex_bounds(top: &TopType) -> (usize, usize) {
    let d = top.degree.max(0) as usize;
    (top.rho_plus().max(1), d.max(1))
}

#[allow(clippy::too_many_arguments)]
fn enumerate_stratum(
    top: &TopType,
    n_amb: usize,
    k0: usize,
    kinf: usize,
    legs: &[u32],
    negs: &[(i64, u32)],
    poss: &[(i64, u32)],
    seen: &mut BTreeSet<CanonicalKey>,
) {
    let v_total = k0 + kinf;
    // Distribute marks and legs over vertices, then degrees, then wire
    // edges consistent with the weight balance at every vertex.
    for neg_assign in assignments(negs.len(), k0) {
        for pos_assign in assignments(poss.len(), k0 + kinf) {
            for leg_assign in assignments(legs.len(), v_total) {
                for zero_degrees in compositions(top.degree, k0, n_amb >= 2) {
                    let dz: i64 = zero_degrees.iter().sum();
                    for inf_degrees in compositions(top.degree - dz, kinf, true) {
                        if inf_degrees.iter().sum::<i64>() != top.degree - dz {
                            continue;
                        }
                        build_and_insert(
                            n_amb, k0, legs, negs, poss, &neg_assign, &pos_assign,
                            &leg_assign, &zero_degrees, &inf_degrees, seen,
                        );
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_and_insert(
    n_amb: usize,
    k0: usize,
    legs: &[u32],
    negs: &[(i64, u32)],
    poss: &[(i64, u32)],
    neg_assign: &[usize],
    pos_assign: &[usize],
    leg_assign: &[usize],
    zero_degrees: &[i64],
    inf_degrees: &[i64],
    seen: &mut BTreeSet<CanonicalKey>,
) {
    let mut zero: Vec<TypeZeroVertex> = zero_degrees
        .iter()
        .map(|&d| TypeZeroVertex {
            degree: d,
            legs: vec![],
            roots_zero: vec![],
            roots_inf_mark: vec![],
            roots_inf_node: vec![],
        })
        .collect();
    let mut inf: Vec<InfVertex> = inf_degrees
        .iter()
        .map(|&d| InfVertex { degree: d, legs: vec![], roots_mark: vec![], roots_node: vec![] })
        .collect();
    for (j, &v) in neg_assign.iter().enumerate() {
        zero[v].roots_inf_mark.push(negs[j]);
    }
    for (j, &v) in pos_assign.iter().enumerate() {
        if v < k0 {
            zero[v].roots_zero.push(poss[j]);
        } else {
            inf[v - k0].roots_mark.push(poss[j]);
        }
    }
    for (j, &v) in leg_assign.iter().enumerate() {
        if v < k0 {
            zero[v].legs.push(legs[j]);
        } else {
            inf[v - k0].legs.push(legs[j]);
        }
    }
    // Required edge-weight sums per vertex from the balance conditions.
    let need_zero: Vec<i64> = zero
        .iter()
        .map(|v| {
            let target = if n_amb >= 2 { v.degree } else { 0 };
            v.roots_zero.iter().map(|(w, _)| w).sum::<i64>()
                + v.roots_inf_mark.iter().map(|(w, _)| w).sum::<i64>()
                - target
        })
        .collect();
    let need_inf: Vec<i64> = inf
        .iter()
        .map(|v| v.degree - v.roots_mark.iter().map(|(w, _)| w).sum::<i64>())
        .collect();
    if need_zero.iter().any(|&x| x < 0) || need_inf.iter().any(|&x| x < 0) {
        return;
    }
    let m_edges = (zero.len() + inf.len()).saturating_sub(1);
    if need_zero.iter().sum::<i64>() != need_inf.iter().sum::<i64>()
        || need_zero.iter().sum::<i64>() < m_edges as i64
    {
        return;
    }
    for edge_set in edge_multisets(&need_zero, &need_inf, m_edges) {
        let mut g = BipartiteGraph {
            n_amb,
            zero: zero.clone(),
            inf: inf.clone(),
            edges: vec![],
        };
        for &(zv, iv, w) in &edge_set {
            g.zero[zv].roots_inf_node.push(-w);
            g.inf[iv].roots_node.push(w);
            g.edges.push(Edge {
                zero_vertex: zv,
                zero_slot: g.zero[zv].roots_inf_node.len() - 1,
                inf_vertex: iv,
                inf_slot: g.inf[iv].roots_node.len() - 1,
            });
        }
        if g.validate().is_ok() {
            seen.insert(g.canonical_key());
        }
    }
}

/// All ways to assign `n` distinguishable items to `k` bins, as the
/// vector of bin indices. Empty product when n > 0 and k = 0.
fn assignments(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    if k == 0 {
        return vec![];
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        out.push(cur.clone());
        let mut i = 0;
        loop {
            cur[i] += 1;
            if cur[i] < k {
                break;
            }
            cur[i] = 0;
            i += 1;
            if i == n {
                return out;
            }
        }
    }
}

/// Nonnegative integer vectors of length k with sum <= total
/// (forced all-zero when `allow` is false).
fn compositions(total: i64, k: usize, allow: bool) -> Vec<Vec<i64>> {
    if !allow || total < 0 {
        return if total >= 0 || k == 0 { vec![vec![0; k]] } else { vec![] };
    }
    let mut out = Vec::new();
    let mut cur = vec![0i64; k];
    fn rec(cur: &mut Vec<i64>, i: usize, left: i64, out: &mut Vec<Vec<i64>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            rec(cur, i + 1, left - v, out);
        }
    }
    rec(&mut cur, 0, total, &mut out);
    out
}

/// Sorted edge multisets (zero_vertex, inf_vertex, weight >= 1) of the
/// given size whose per-vertex weight sums match `need_zero`/`need_inf`.
fn edge_multisets(need_zero: &[i64], need_inf: &[i64], m: usize) -> Vec<Vec<(usize, usize, i64)>> {
    let mut out = Vec::new();
    let mut cur: Vec<(usize, usize, i64)> = Vec::new();
    let mut rz = need_zero.to_vec();
    let mut ri = need_inf.to_vec();
    fn rec(
        m_left: usize,
        min_edge: (usize, usize, i64),
        rz: &mut Vec<i64>,
        ri: &mut Vec<i64>,
        cur: &mut Vec<(usize, usize, i64)>,
        out: &mut Vec<Vec<(usize, usize, i64)>>,
    ) {
        if m_left == 0 {
            if rz.iter().all(|&x| x == 0) && ri.iter().all(|&x| x == 0) {
                out.push(cur.clone());
            }
            return;
        }
        for zv in 0..rz.len() {
            for iv in 0..ri.len() {
                for w in 1..=rz[zv].min(ri[iv]) {
                    let e = (zv, iv, w);
                    if e < min_edge {
                        continue;
                    }
                    rz[zv] -= w;
                    ri[iv] -= w;
                    cur.push(e);
                    rec(m_left - 1, e, rz, ri, cur, out);
                    cur.pop();
                    rz[zv] += w;
                    ri[iv] += w;
                }
            }
        }
    }
    if m == 0 {
        if rz.iter().all(|&x| x == 0) && ri.iter().all(|&x| x == 0) {
            out.push(vec![]);
        }
        return out;
    }
    rec(m, (0, 0, 0), &mut rz, &mut ri, &mut cur, &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    permute(&mut items, 0, &mut out);
    out
}

fn permute(items: &mut Vec<usize>, at: usize, out: &mut Vec<Vec<usize>>) {
    if at == items.len() {
        out.push(items.clone());
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, out);
        items.swap(at, i);
    }
}

fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    fn components(&mut self) -> usize {
        let n = self.parent.len();
        (0..n).filter(|&x| self.find(x) == x).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn top(n_legs: usize, degree: i64, mu: Vec<i64>) -> TopType {
        TopType::new(0, n_legs, degree, mu).unwrap()
    }

    #[test]
    fn virtual_dim_examples() {
        assert_eq!(virtual_dim(&top(0, 1, vec![1]), 2), 2);
        assert_eq!(virtual_dim(&top(3, 0, vec![]), 1), 1);
        assert_eq!(virtual_dim(&top(1, 2, vec![3, -1]), 3), 8);
    }

    #[test]
    fn top_type_rejects_bad_mu() {
        assert!(TopType::new(0, 0, 1, vec![1, 1]).is_err());
        assert!(TopType::new(0, 0, 1, vec![0, 1]).is_err());
        assert!(TopType::new(1, 0, 0, vec![]).is_err());
    }

    #[test]
    fn enumerate_single_positive_mark() {
        // One weight-1 marking on a degree-1 type: the all-infinity
        // graph and the all-divisor graph, nothing else.
        let graphs = enumerate(&top(0, 1, vec![1]), 2).unwrap();
        assert_eq!(graphs.len(), 2);
        for g in &graphs {
            g.validate().unwrap();
            assert_eq!(g.topological_type().unwrap(), top(0, 1, vec![1]));
        }
        let shapes: Vec<(usize, usize)> =
            graphs.iter().map(|g| (g.zero.len(), g.inf.len())).collect();
        assert!(shapes.contains(&(0, 1)));
        assert!(shapes.contains(&(1, 0)));
    }

    #[test]
    fn enumerate_one_negative_mark() {
        // mu = (2, -1), degree 1: the single-vertex divisor graph and
        // the two-vertex chain.
        let graphs = enumerate(&top(0, 1, vec![2, -1]), 2).unwrap();
        assert_eq!(graphs.len(), 2);
        for g in &graphs {
            assert_eq!(g.zero.len(), 1);
            assert_eq!(g.zero[0].roots_zero, vec![(2, 1)]);
            assert_eq!(g.zero[0].roots_inf_mark, vec![(-1, 2)]);
        }
        let shapes: Vec<(usize, usize)> =
            graphs.iter().map(|g| (g.zero.len(), g.inf.len())).collect();
        assert!(shapes.contains(&(1, 0)));
        assert!(shapes.contains(&(1, 1)));
    }

    #[test]
    fn enumerate_respects_stability() {
        // A degree-0 type with one positive and one negative mark has
        // no stable graphs: the only candidate vertex has 2 half-edges.
        let graphs = enumerate(&top(0, 0, vec![1, -1]), 2).unwrap();
        assert!(graphs.is_empty());
        // Adding a leg stabilizes it.
        let graphs = enumerate(&top(1, 0, vec![1, -1]), 2).unwrap();
        assert_eq!(graphs.len(), 1);
        assert_eq!(graphs[0].zero.len(), 1);
        assert_eq!(graphs[0].inf.len(), 0);
        assert_eq!(graphs[0].zero[0].legs, vec![1]);
    }

    #[test]
    fn enumerate_smallest_pair_keeps_divisor_degreeless() {
        for g in enumerate(&top(0, 1, vec![2, -1]), 1).unwrap() {
            for v in &g.zero {
                assert_eq!(v.degree, 0);
            }
        }
    }

    #[test]
    fn enumerate_degree_zero_with_legs_gives_one_ambient_graph() {
        // No markings, degree 0, three legs: the only admissible graph
        // is a single infinity vertex; the rubber-side candidate is
        // rubber-trivial.
        let graphs = enumerate(&top(3, 0, vec![]), 3).unwrap();
        assert_eq!(graphs.len(), 1);
        assert_eq!(graphs[0].zero.len(), 0);
        assert_eq!(graphs[0].inf.len(), 1);
        assert_eq!(graphs[0].inf[0].legs, vec![1, 2, 3]);
        assert_eq!(graphs[0].inf[0].degree, 0);
    }

    #[test]
    fn automorphism_of_twin_vertices_and_topotype() {
        // One zero vertex of degree 0 with marks (3, -1) and two edges
        // of weight 1 to two identical degree-1 inf vertices: swapping
        // the inf vertices and nothing else gives order 2.
        let graphs = enumerate(&top(0, 2, vec![3, -1]), 2).unwrap();
        let twin = graphs
            .iter()
            .find(|g| g.inf.len() == 2 && g.inf.iter().all(|v| v.degree == 1))
            .expect("twin-vertex graph exists");
        assert_eq!(twin.automorphism_order(), 2);
        assert_eq!(twin.zero[0].roots_inf_node, vec![-1, -1]);
        assert_eq!(twin.topological_type().unwrap(), top(0, 2, vec![3, -1]));
        // A chain zero - inf with a single edge is rigid.
        let rigid = graphs
            .iter()
            .find(|g| g.inf.len() == 1)
            .expect("single-edge graph exists");
        assert_eq!(rigid.automorphism_order(), 1);
    }

    #[test]
    fn automorphism_counts_parallel_equal_weight_edges() {
        // k parallel weight-1 edges between one zero and one inf vertex
        // give k! even though such cycles fail tree validation.
        for k in 2..=3 {
            let g = BipartiteGraph {
                n_amb: 2,
                zero: vec![TypeZeroVertex {
                    degree: 0,
                    legs: vec![],
                    roots_zero: vec![(k as i64, 1)],
                    roots_inf_mark: vec![],
                    roots_inf_node: vec![-1; k],
                }],
                inf: vec![InfVertex {
                    degree: k as i64,
                    legs: vec![],
                    roots_mark: vec![],
                    roots_node: vec![1; k],
                }],
                edges: (0..k)
                    .map(|s| Edge { zero_vertex: 0, zero_slot: s, inf_vertex: 0, inf_slot: s })
                    .collect(),
            };
            assert!(g.validate().is_err());
            assert_eq!(g.automorphism_order(), factorial(k as u64));
        }
    }

    #[test]
    fn canonical_form_is_stable_under_relabeling() {
        let graphs = enumerate(&top(0, 2, vec![3, -1]), 2).unwrap();
        for g in &graphs {
            let mut shuffled = g.clone();
            shuffled.zero.reverse();
            shuffled.inf.reverse();
            let z = shuffled.zero.len();
            let i = shuffled.inf.len();
            for e in &mut shuffled.edges {
                e.zero_vertex = z - 1 - e.zero_vertex;
                e.inf_vertex = i - 1 - e.inf_vertex;
            }
            shuffled.validate().unwrap();
            assert_eq!(shuffled.canonical_key(), g.canonical_key());
        }
    }

    /// Non-increasing positive integer vectors with the given sum and
    /// bounded length.
    fn partitions(total: i64, max_len: usize) -> Vec<Vec<i64>> {
        fn rec(left: i64, max_part: i64, room: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            if room == 0 {
                return;
            }
            for p in (1..=left.min(max_part)).rev() {
                cur.push(p);
                rec(left - p, p, room - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(total, total.max(0), max_len, &mut Vec::new(), &mut out);
        out
    }

    /// Independent generation route: choose node-root weight vectors
    /// blindly per vertex, try every slot matching, keep what
    /// validates. Returns labeled objects and iso classes.
    fn blind_generate(
        top: &TopType,
        n_amb: usize,
    ) -> (BTreeSet<CanonicalKey>, BTreeMap<(usize, usize), BTreeSet<CanonicalKey>>) {
        let negs: Vec<(i64, u32)> = top
            .mu
            .iter()
            .enumerate()
            .filter(|(_, &w)| w < 0)
            .map(|(j, &w)| (w, (top.n_legs + 1 + j) as u32))
            .collect();
        let poss: Vec<(i64, u32)> = top
            .mu
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(j, &w)| (w, (top.n_legs + 1 + j) as u32))
            .collect();
        let leg_labels: Vec<u32> = (1..=top.n_legs as u32).collect();
        let mut labeled: BTreeMap<(usize, usize), BTreeSet<CanonicalKey>> = BTreeMap::new();
        let mut classes: BTreeSet<CanonicalKey> = BTreeSet::new();
        // One vertex beyond the proven bounds, to confirm emptiness there.
        for k0 in 0..=(top.rho_plus() + 1).max(1) {
            for kinf in 0..=(top.degree as usize + 1).max(1) {
                if k0 + kinf == 0 {
                    continue;
                }
                let v_total = k0 + kinf;
                let m = v_total - 1;
                for neg_assign in assignments(negs.len(), k0) {
                    for pos_assign in assignments(poss.len(), v_total) {
                        for leg_assign in assignments(leg_labels.len(), v_total) {
                            for zero_degrees in compositions(top.degree, k0, n_amb >= 2) {
                                let dz: i64 = zero_degrees.iter().sum();
                                for inf_degrees in compositions(top.degree - dz, kinf, true) {
                                    if inf_degrees.iter().sum::<i64>() != top.degree - dz {
                                        continue;
                                    }
                                    blind_wire(
                                        n_amb, k0, &leg_labels, &negs, &poss, &neg_assign,
                                        &pos_assign, &leg_assign, &zero_degrees, &inf_degrees,
                                        m, &mut labeled, &mut classes,
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        (classes, labeled)
    }

    #[allow(clippy::too_many_arguments)]
    fn blind_wire(
        n_amb: usize,
        k0: usize,
        leg_labels: &[u32],
        negs: &[(i64, u32)],
        poss: &[(i64, u32)],
        neg_assign: &[usize],
        pos_assign: &[usize],
        leg_assign: &[usize],
        zero_degrees: &[i64],
        inf_degrees: &[i64],
        m: usize,
        labeled: &mut BTreeMap<(usize, usize), BTreeSet<CanonicalKey>>,
        classes: &mut BTreeSet<CanonicalKey>,
    ) {
        let mut zero: Vec<TypeZeroVertex> = zero_degrees
            .iter()
            .map(|&d| TypeZeroVertex {
                degree: d,
                legs: vec![],
                roots_zero: vec![],
                roots_inf_mark: vec![],
                roots_inf_node: vec![],
            })
            .collect();
        let mut inf: Vec<InfVertex> = inf_degrees
            .iter()
            .map(|&d| InfVertex {
                degree: d,
                legs: vec![],
                roots_mark: vec![],
                roots_node: vec![],
            })
            .collect();
        for (j, &v) in neg_assign.iter().enumerate() {
            zero[v].roots_inf_mark.push(negs[j]);
        }
        for (j, &v) in pos_assign.iter().enumerate() {
            if v < k0 {
                zero[v].roots_zero.push(poss[j]);
            } else {
                inf[v - k0].roots_mark.push(poss[j]);
            }
        }
        for (j, &v) in leg_assign.iter().enumerate() {
            if v < k0 {
                zero[v].legs.push(leg_labels[j]);
            } else {
                inf[v - k0].legs.push(leg_labels[j]);
            }
        }
        // Per-vertex slot weight vectors, chosen as blind partitions.
        let mut zero_needs: Vec<i64> = Vec::new();
        for (i, v) in zero.iter().enumerate() {
            let target = if n_amb >= 2 { zero_degrees[i] } else { 0 };
            let need = v.roots_zero.iter().map(|(w, _)| w).sum::<i64>()
                + v.roots_inf_mark.iter().map(|(w, _)| w).sum::<i64>()
                - target;
            if need < 0 {
                return;
            }
            zero_needs.push(need);
        }
        let mut inf_needs: Vec<i64> = Vec::new();
        for v in inf.iter() {
            let need = v.degree - v.roots_mark.iter().map(|(w, _)| w).sum::<i64>();
            if need < 0 {
                return;
            }
            inf_needs.push(need);
        }
        if zero_needs.iter().sum::<i64>() != inf_needs.iter().sum::<i64>()
            || zero_needs.iter().sum::<i64>() < m as i64
        {
            return;
        }
        let zero_choices: Vec<Vec<Vec<i64>>> =
            zero_needs.iter().map(|&n| partitions(n, m)).collect();
        let inf_choices: Vec<Vec<Vec<i64>>> =
            inf_needs.iter().map(|&n| partitions(n, m)).collect();
        for zsel in cartesian(&zero_choices) {
            if zsel.iter().map(|v| v.len()).sum::<usize>() != m {
                continue;
            }
            for isel in cartesian(&inf_choices) {
                if isel.iter().map(|v| v.len()).sum::<usize>() != m {
                    continue;
                }
                let zslots: Vec<(usize, i64)> = zsel
                    .iter()
                    .enumerate()
                    .flat_map(|(vi, ws)| ws.iter().map(move |&w| (vi, w)))
                    .collect();
                let islots: Vec<(usize, i64)> = isel
                    .iter()
                    .enumerate()
                    .flat_map(|(vi, ws)| ws.iter().map(move |&w| (vi, w)))
                    .collect();
                for perm in permutations(m) {
                    if (0..m).any(|s| zslots[s].1 != islots[perm[s]].1) {
                        continue;
                    }
                    let mut g = BipartiteGraph {
                        n_amb,
                        zero: zero.clone(),
                        inf: inf.clone(),
                        edges: vec![],
                    };
                    let mut islot_index = vec![0usize; isel.len()];
                    let mut base = 0;
                    for (vi, ws) in isel.iter().enumerate() {
                        islot_index[vi] = base;
                        base += ws.len();
                        g.inf[vi].roots_node = ws.clone();
                    }
                    for (vi, ws) in zsel.iter().enumerate() {
                        g.zero[vi].roots_inf_node = ws.iter().map(|&w| -w).collect();
                    }
                    let mut zslot_index = vec![0usize; zsel.len()];
                    let mut base = 0;
                    for (vi, ws) in zsel.iter().enumerate() {
                        zslot_index[vi] = base;
                        base += ws.len();
                    }
                    for s in 0..m {
                        let (zv, _) = zslots[s];
                        let (iv, _) = islots[perm[s]];
                        g.edges.push(Edge {
                            zero_vertex: zv,
                            zero_slot: s - zslot_index[zv],
                            inf_vertex: iv,
                            inf_slot: perm[s] - islot_index[iv],
                        });
                    }
                    if g.validate().is_ok() {
                        let id_key = encode(&g, &identity(g.zero.len()), &identity(g.inf.len()));
                        labeled
                            .entry((g.zero.len(), g.inf.len()))
                            .or_default()
                            .insert(id_key);
                        classes.insert(g.canonical_key());
                    }
                }
            }
        }
    }

    fn cartesian<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
        let mut out = vec![vec![]];
        for c in choices {
            let mut next = Vec::new();
            for prefix in &out {
                for item in c {
                    let mut row = prefix.clone();
                    row.push(item.clone());
                    next.push(row);
                }
            }
            out = next;
        }
        out
    }

    fn sweep_types() -> Vec<TopType> {
        let mut out = Vec::new();
        let mut mus: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..3 {
            let mut next = Vec::new();
            for m in &mus {
                for w in -2..=3i64 {
                    if w != 0 {
                        let mut v = m.clone();
                        v.push(w);
                        next.push(v);
                    }
                }
            }
            mus.extend(next);
        }
        for mu in mus {
            let d: i64 = mu.iter().sum();
            if !(0..=2).contains(&d) || mu.windows(2).any(|w| w[0] < w[1]) {
                continue;
            }
            for n_legs in 0..=2 {
                out.push(TopType::new(0, n_legs, d, mu.clone()).unwrap());
            }
        }
        out
    }

    #[test]
    fn enumeration_matches_blind_generation() {
        for t in sweep_types() {
            let prod = enumerate(&t, 2).unwrap();
            let prod_keys: BTreeSet<CanonicalKey> =
                prod.iter().map(|g| g.canonical_key()).collect();
            let (blind_keys, _) = blind_generate(&t, 2);
            assert_eq!(prod_keys, blind_keys, "topological type {t:?}");
            for g in &prod {
                g.validate().unwrap();
                assert_eq!(g.edges.len() + 1, g.zero.len() + g.inf.len());
                assert_eq!(g.topological_type().unwrap(), t);
            }
        }
    }

    #[test]
    fn orbit_counting_matches_labeled_graphs() {
        for t in sweep_types() {
            let (classes, labeled) = blind_generate(&t, 2);
            let mut predicted: BTreeMap<(usize, usize), u64> = BTreeMap::new();
            for key in &classes {
                let g = graph_from_key(2, key);
                let id_key = encode(&g, &identity(g.zero.len()), &identity(g.inf.len()));
                let mut vertex_autos = 0u64;
                for p0 in permutations(g.zero.len()) {
                    for p1 in permutations(g.inf.len()) {
                        if encode(&g, &p0, &p1) == id_key {
                            vertex_autos += 1;
                        }
                    }
                }
                let orbit =
                    factorial(g.zero.len() as u64) * factorial(g.inf.len() as u64) / vertex_autos;
                *predicted.entry((g.zero.len(), g.inf.len())).or_insert(0) += orbit;
            }
            let counted: BTreeMap<(usize, usize), u64> = labeled
                .iter()
                .filter(|(_, set)| !set.is_empty())
                .map(|(k, set)| (*k, set.len() as u64))
                .collect();
            assert_eq!(predicted, counted, "topological type {t:?}");
        }
    }

    #[test]
    fn validate_rejects_rule_violations() {
        let graphs = enumerate(&top(0, 1, vec![2, -1]), 2).unwrap();
        let mut g = graphs
            .iter()
            .find(|g| g.inf.len() == 1)
            .unwrap()
            .clone();
        // Unbalanced zero vertex.
        g.zero[0].degree = 1;
        assert!(g.validate().is_err());
        let mut g2 = graphs[0].clone();
        g2.zero[0].roots_zero[0].1 = 7;
        assert!(g2.validate().is_err());
    }
}
