//! The trace graph spanned by elements and their links, with the validation
//! queries built on top of it: dangling links, duplicate links, coverage,
//! and refinement-cycle detection.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::model::{
    ElementId, ElementKind, Finding, FindingCode, Model, SourceSpan, TraceLink, TraceLinkType,
};

/// Directed multigraph-turned-simple-graph over element IDs.
///
/// Counting invariant: `model.links.len() == edges.len() + dangling.len() +
/// dropped.len()`.
#[derive(Debug, Clone)]
pub struct TraceGraph {
    /// Every element ID in the model.
    pub nodes: BTreeSet<ElementId>,
    /// Resolvable links, deduplicated by (source, target, type) — the first
    /// occurrence in model order wins — and sorted by (source, type, target).
    pub edges: Vec<TraceLink>,
    /// Links whose target no element defines, sorted by span. Not
    /// deduplicated: every occurrence is kept so each can be reported.
    pub dangling: Vec<TraceLink>,
    /// Resolvable links dropped by deduplication, sorted by span.
    pub dropped: Vec<TraceLink>,
}

/// Builds the trace graph of `model`. Deterministic: equal models produce
/// equal graphs.
pub fn build_graph(model: &Model) -> TraceGraph {
    let nodes: BTreeSet<ElementId> = model.elements.keys().cloned().collect();
    let mut edges: Vec<TraceLink> = Vec::new();
    let mut dangling: Vec<TraceLink> = Vec::new();
    let mut dropped: Vec<TraceLink> = Vec::new();
    let mut seen: HashSet<(ElementId, ElementId, TraceLinkType)> = HashSet::new();

    for link in &model.links {
        if !nodes.contains(&link.target) {
            dangling.push(link.clone());
        } else if seen.insert((
            link.source.clone(),
            link.target.clone(),
            link.link_type.clone(),
        )) {
            edges.push(link.clone());
        } else {
            dropped.push(link.clone());
        }
    }

    edges.sort_by(|a, b| {
        (&a.source, &a.link_type, &a.target).cmp(&(&b.source, &b.link_type, &b.target))
    });
    dangling.sort_by(|a, b| a.span.cmp(&b.span));
    dropped.sort_by(|a, b| a.span.cmp(&b.span));

    TraceGraph {
        nodes,
        edges,
        dangling,
        dropped,
    }
}

/// One `E002-dangling-link` finding per dangling link occurrence, at the
/// link's span.
pub fn dangling_links(graph: &TraceGraph) -> Vec<Finding> {
    graph
        .dangling
        .iter()
        .map(|link| {
            Finding::new(
                FindingCode::DanglingLink,
                format!(
                    "link target `{}` does not exist (from `{}`, type `{}`)",
                    link.target, link.source, link.link_type
                ),
                link.span.clone(),
            )
        })
        .collect()
}

/// One `W005-duplicate-link` finding per link dropped by graph
/// deduplication. (Duplicates *within* one element are already reported at
/// parse time; these are duplicates across element occurrences.)
pub fn duplicate_links(graph: &TraceGraph) -> Vec<Finding> {
    graph
        .dropped
        .iter()
        .map(|link| {
            Finding::new(
                FindingCode::DuplicateLink,
                format!(
                    "duplicate link from `{}` to `{}` (type `{}`) is ignored",
                    link.source, link.target, link.link_type
                ),
                link.span.clone(),
            )
        })
        .collect()
}

/// All edges pointing *at* `target`, sorted by (source, type).
pub fn reverse_links<'g>(graph: &'g TraceGraph, target: &ElementId) -> Vec<&'g TraceLink> {
    // `edges` is sorted by (source, type, target), so the filtered list is
    // already in (source, type) order.
    graph
        .edges
        .iter()
        .filter(|link| &link.target == target)
        .collect()
}

/// Result of a coverage query: which elements of the required kind have an
/// inbound link of the right type from the right kind of element.
#[derive(Debug, Clone)]
pub struct Coverage {
    pub covered: BTreeSet<ElementId>,
    pub uncovered: BTreeSet<ElementId>,
    /// `W002-untested-requirement` findings, produced only when `via` is the
    /// built-in `tests` link type.
    pub findings: Vec<Finding>,
}

/// Partitions the elements of kind `required_kind` into covered and
/// uncovered, where covered means: at least one inbound edge of type `via`
/// from an element of kind `from_kind`.
pub fn coverage(
    graph: &TraceGraph,
    model: &Model,
    required_kind: &ElementKind,
    via: &TraceLinkType,
    from_kind: &ElementKind,
) -> Coverage {
    let universe: BTreeSet<ElementId> = model
        .elements
        .values()
        .filter(|e| &e.kind == required_kind)
        .map(|e| e.id.clone())
        .collect();

    let mut covered: BTreeSet<ElementId> = BTreeSet::new();
    for link in &graph.edges {
        if &link.link_type != via || !universe.contains(&link.target) {
            continue;
        }
        let source_is_right_kind = model
            .elements
            .get(&link.source)
            .is_some_and(|e| &e.kind == from_kind);
        if source_is_right_kind {
            covered.insert(link.target.clone());
        }
    }
    let uncovered: BTreeSet<ElementId> = universe.difference(&covered).cloned().collect();

    let findings = if via.as_str() == "tests" {
        untested_findings(model, &uncovered, via, from_kind)
    } else {
        Vec::new()
    };

    Coverage {
        covered,
        uncovered,
        findings,
    }
}

/// One `W002-untested-requirement` finding per uncovered element, at the
/// element's span, sorted by location. Used by [`coverage`] for `tests`
/// links; `treqs check` calls it directly so a project-configured coverage
/// link type warns the same way.
pub fn untested_findings(
    model: &Model,
    uncovered: &BTreeSet<ElementId>,
    via: &TraceLinkType,
    from_kind: &ElementKind,
) -> Vec<Finding> {
    let mut spans: Vec<(&SourceSpan, &ElementId)> = uncovered
        .iter()
        .map(|id| (&model.elements[id].span, id))
        .collect();
    spans.sort();
    spans
        .into_iter()
        .map(|(span, id)| {
            Finding::new(
                FindingCode::UntestedRequirement,
                format!("`{id}` has no inbound `{via}` link from any `{from_kind}` element"),
                span.clone(),
            )
        })
        .collect()
}

/// Enumerates every minimal (elementary) cycle among edges of type
/// `link_type`, using Johnson's algorithm. Each cycle lists its member IDs in
/// traversal order without repeating the first one, rotated so the
/// lexicographically smallest ID comes first; the list of cycles is sorted.
pub fn refinement_cycles(graph: &TraceGraph, link_type: &TraceLinkType) -> Vec<Vec<ElementId>> {
    // Dense indices in lexicographic ID order, so that "start vertex of each
    // Johnson root" is also the lexicographically smallest ID of its cycles.
    let nodes: Vec<&ElementId> = graph.nodes.iter().collect();
    let index: BTreeMap<&ElementId, usize> =
        nodes.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for link in &graph.edges {
        if &link.link_type == link_type {
            let (s, t) = (index[&link.source], index[&link.target]);
            adj[s].push(t);
        }
    }
    for targets in &mut adj {
        targets.sort_unstable();
        targets.dedup();
    }

    let mut cycles_ix = johnson_cycles(&adj);
    cycles_ix.sort();
    cycles_ix
        .into_iter()
        .map(|cycle| cycle.into_iter().map(|i| nodes[i].clone()).collect())
        .collect()
}

/// Johnson's elementary-circuit algorithm (1975). For each root `s` in
/// ascending order it searches the subgraph induced by vertices `>= s`,
/// restricted to the strongly connected component of `s`, so every cycle is
/// emitted exactly once, starting at its smallest vertex.
fn johnson_cycles(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct Search<'a> {
        adj_scc: &'a [Vec<usize>],
        start: usize,
        blocked: Vec<bool>,
        block_list: Vec<BTreeSet<usize>>,
        stack: Vec<usize>,
        cycles: Vec<Vec<usize>>,
    }

    impl Search<'_> {
        fn circuit(&mut self, v: usize) -> bool {
            let mut found = false;
            self.stack.push(v);
            self.blocked[v] = true;
            for w in self.adj_scc[v].clone() {
                if w == self.start {
                    self.cycles.push(self.stack.clone());
                    found = true;
                } else if !self.blocked[w] && self.circuit(w) {
                    found = true;
                }
            }
            if found {
                self.unblock(v);
            } else {
                for w in self.adj_scc[v].clone() {
                    self.block_list[w].insert(v);
                }
            }
            self.stack.pop();
            found
        }

        fn unblock(&mut self, v: usize) {
            self.blocked[v] = false;
            let dependents = std::mem::take(&mut self.block_list[v]);
            for w in dependents {
                if self.blocked[w] {
                    self.unblock(w);
                }
            }
        }
    }

    let n = adj.len();
    let mut cycles = Vec::new();
    for start in 0..n {
        // Subgraph on vertices >= start, narrowed to the SCC containing
        // start.
        let scc = scc_of(adj, start);
        if scc.len() < 2 {
            continue; // No self-edges exist, so a singleton SCC has no cycle.
        }
        let adj_scc: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                if scc.contains(&v) {
                    adj[v].iter().copied().filter(|w| scc.contains(w)).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        let mut search = Search {
            adj_scc: &adj_scc,
            start,
            blocked: vec![false; n],
            block_list: vec![BTreeSet::new(); n],
            stack: Vec::new(),
            cycles: Vec::new(),
        };
        search.circuit(start);
        cycles.extend(search.cycles);
    }
    cycles
}

/// Strongly connected component containing `start` within the subgraph
/// induced by vertices `>= start` (Kosaraju: forward set ∩ backward set).
fn scc_of(adj: &[Vec<usize>], start: usize) -> BTreeSet<usize> {
    let n = adj.len();
    let reachable = |edges: &dyn Fn(usize) -> Vec<usize>| -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            for w in edges(v) {
                if w >= start && !seen.contains(&w) {
                    stack.push(w);
                }
            }
        }
        seen
    };

    let forward = reachable(&|v| adj[v].clone());
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, targets) in adj.iter().enumerate() {
        if v < start {
            continue;
        }
        for &w in targets {
            if w >= start {
                rev[w].push(v);
            }
        }
    }
    let backward = reachable(&|v| rev[v].clone());
    forward.intersection(&backward).copied().collect()
}
