//! Degree-parity constrained subgraphs ("parity matchings") via vertex
//! gadgets and perfect matching.
//!
//! A vertex `v` with constraint `(base, slack)` must end up with degree in
//! `{base, base + 2, ..., base + 2 * slack}`. Each vertex of degree `t` is
//! replaced by `t` copies (one per incident edge) and `t - base` z-vertices
//! joined completely to the copies, with pairing edges `(z1, z2), ...,
//! (z_{2r-1}, z_{2r})`. An original edge becomes a single edge between the
//! copies it owns at its two endpoints. The gadget graph has a perfect
//! matching iff a feasible edge set exists; the selected edges are the
//! matched copy-to-copy edges.
//!
//! Vertices with constraint exactly one (`base = 1, slack = 0`) are kept as
//! a single vertex adjacent to their partners' copies.
//!
//! When the graph is bipartite with one side all exactly-one, a smaller slot
//! gadget is used instead (see [`build_slot_gadget`]).

use crate::error::{NswError, Result};
use crate::matching::{perfect_matching_seeded, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DegreeConstraint {
    pub base: usize,
    pub slack: usize,
}

impl DegreeConstraint {
    pub fn exactly(d: usize) -> Self {
        DegreeConstraint { base: d, slack: 0 }
    }

    /// Every degree `lo, lo + 2, ..., hi` (same parity).
    pub fn range(lo: usize, hi: usize) -> Self {
        assert!(hi >= lo && (hi - lo) % 2 == 0, "bad parity range {lo}..{hi}");
        DegreeConstraint {
            base: lo,
            slack: (hi - lo) / 2,
        }
    }

    pub fn allows(&self, d: usize) -> bool {
        d >= self.base && (d - self.base) % 2 == 0 && (d - self.base) / 2 <= self.slack
    }
}

/// A simple undirected graph with a parity constraint on every vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityProblem {
    pub edges: Vec<(usize, usize)>,
    pub constraints: Vec<DegreeConstraint>,
}

impl ParityProblem {
    pub fn new(constraints: Vec<DegreeConstraint>, edges: Vec<(usize, usize)>) -> Self {
        ParityProblem { edges, constraints }
    }

    pub fn vertex_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count()];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Degree vector of the edge subset `selected`.
    pub fn selected_degrees(&self, selected: &[bool]) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count()];
        for (&(u, v), _) in self.edges.iter().zip(selected).filter(|(_, &s)| s) {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn is_feasible_selection(&self, selected: &[bool]) -> bool {
        selected.len() == self.edges.len()
            && self
                .selected_degrees(selected)
                .iter()
                .zip(&self.constraints)
                .all(|(&d, c)| c.allows(d))
    }
}

/// Where a gadget vertex came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetVertex {
    /// Copy of `vertex` dedicated to original edge `edge`.
    Copy { vertex: usize, edge: usize },
    /// The `index`-th slack vertex of `vertex`.
    Z { vertex: usize, index: usize },
    /// A degree-exactly-one vertex kept whole.
    Single { vertex: usize },
}

#[derive(Clone, Debug)]
pub struct GadgetGraph {
    pub graph: Graph,
    pub origin: Vec<GadgetVertex>,
    /// Gadget edge index of the cross edge for each original edge.
    pub cross_edge: Vec<usize>,
    /// Per original edge, the two gadget endpoints of its cross edge.
    pub cross_ends: Vec<(usize, usize)>,
    /// Per original vertex, its z-vertices in order.
    pub z_vertices: Vec<Vec<usize>>,
}

impl GadgetGraph {
    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }
}

/// Builds the gadget graph, or `None` when some vertex needs more edges
/// than it has (trivially infeasible).
pub fn build_gadget(prob: &ParityProblem) -> Option<GadgetGraph> {
    let nv = prob.vertex_count();
    let deg = prob.degrees();
    if (0..nv).any(|v| prob.constraints[v].base > deg[v]) {
        return None;
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (e, &(u, v)) in prob.edges.iter().enumerate() {
        assert!(u != v && u < nv && v < nv, "edge {e} = ({u}, {v}) is not simple");
        incident[u].push(e);
        incident[v].push(e);
    }
    let single = |v: usize| prob.constraints[v] == DegreeConstraint::exactly(1);

    let mut origin = Vec::new();
    // end[v][k]: gadget vertex standing for v on its k-th incident edge
    let mut end: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut z_vertices: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for v in 0..nv {
        if single(v) {
            let id = origin.len();
            origin.push(GadgetVertex::Single { vertex: v });
            end[v] = vec![id; incident[v].len()];
            continue;
        }
        for &e in &incident[v] {
            end[v].push(origin.len());
            origin.push(GadgetVertex::Copy { vertex: v, edge: e });
        }
        for index in 0..deg[v] - prob.constraints[v].base {
            z_vertices[v].push(origin.len());
            origin.push(GadgetVertex::Z { vertex: v, index });
        }
    }

    let mut graph = Graph::new(origin.len());
    let mut cross_edge = vec![0; prob.edges.len()];
    let mut cross_ends = vec![(0, 0); prob.edges.len()];
    for (e, &(u, v)) in prob.edges.iter().enumerate() {
        let ku = incident[u].iter().position(|&x| x == e).unwrap();
        let kv = incident[v].iter().position(|&x| x == e).unwrap();
        let (a, b) = (end[u][ku], end[v][kv]);
        cross_edge[e] = graph.add_edge(a, b);
        cross_ends[e] = (a, b);
    }
    for v in 0..nv {
        if single(v) {
            continue;
        }
        let zs = &z_vertices[v];
        for &c in &end[v] {
            for &z in zs {
                graph.add_edge(c, z);
            }
        }
        let pairs = prob.constraints[v].slack.min(zs.len() / 2);
        for k in 0..pairs {
            graph.add_edge(zs[2 * k], zs[2 * k + 1]);
        }
    }
    Some(GadgetGraph {
        graph,
        origin,
        cross_edge,
        cross_ends,
        z_vertices,
    })
}

/// Which reduction to perfect matching to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetKind {
    /// Slots when the problem has unit sides, per-edge copies otherwise.
    Auto,
    PerEdge,
    Slots,
}

/// Finds a feasible edge subset, or `None`.
pub fn solve_parity(prob: &ParityProblem) -> Option<Vec<bool>> {
    solve_parity_with_hint(prob, None)
}

/// As [`solve_parity`], seeding the matcher with the edges selected by
/// `hint` (typically a nearly feasible current solution).
pub fn solve_parity_with_hint(prob: &ParityProblem, hint: Option<&[bool]>) -> Option<Vec<bool>> {
    solve_parity_using(prob, hint, GadgetKind::Auto)
}

/// As [`solve_parity_with_hint`] with an explicit gadget. `Slots` on a
/// problem without unit sides falls back to `PerEdge`.
pub fn solve_parity_using(prob: &ParityProblem, hint: Option<&[bool]>, kind: GadgetKind) -> Option<Vec<bool>> {
    let units = match kind {
        GadgetKind::PerEdge => None,
        GadgetKind::Auto | GadgetKind::Slots => unit_sides(prob),
    };
    let selected = match units {
        Some(units) => solve_with_slots(prob, &units, hint)?,
        None => solve_with_copies(prob, hint)?,
    };
    debug_assert!(prob.is_feasible_selection(&selected));
    Some(selected)
}

fn solve_with_copies(prob: &ParityProblem, hint: Option<&[bool]>) -> Option<Vec<bool>> {
    let gadget = build_gadget(prob)?;
    let seed = hint.map(|h| hint_seed(prob, &gadget, h)).unwrap_or_default();
    let mates = perfect_matching_seeded(&gadget.graph, &seed)?;
    Some(gadget.cross_ends.iter().map(|&(a, b)| mates[a] == Some(b)).collect())
}

/// Marks a side of every component as "units" when the problem is
/// bipartite and one side of each component is constrained to degree
/// exactly one. `None` otherwise.
pub fn unit_sides(prob: &ParityProblem) -> Option<Vec<bool>> {
    let nv = prob.vertex_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(u, v) in &prob.edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let unit = |v: usize| prob.constraints[v] == DegreeConstraint::exactly(1);
    let mut color: Vec<Option<bool>> = vec![None; nv];
    let mut units = vec![false; nv];
    for root in 0..nv {
        if color[root].is_some() {
            continue;
        }
        color[root] = Some(false);
        let mut comp = vec![root];
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            let c = color[v].unwrap();
            for &w in &adj[v] {
                match color[w] {
                    None => {
                        color[w] = Some(!c);
                        comp.push(w);
                    }
                    Some(cw) if cw == c => return None,
                    Some(_) => {}
                }
            }
        }
        let side = if comp.iter().filter(|&&v| color[v] == Some(true)).all(|&v| unit(v)) {
            true
        } else if comp.iter().filter(|&&v| color[v] == Some(false)).all(|&v| unit(v)) {
            false
        } else {
            return None;
        };
        for &v in &comp {
            units[v] = color[v] == Some(side);
        }
    }
    Some(units)
}

/// Perfect-matching gadget for problems with unit sides. A unit vertex stays
/// a single vertex. A hub with allowed degrees `lo, lo + 2, ..., hi` (capped
/// at its degree) becomes `lo` mandatory slots plus `hi - lo` optional slots
/// joined in fixed pairs; every slot is adjacent to every unit neighbour.
/// Unused optional slots must be matched pairwise, so the hub's degree is
/// `lo` plus an even number.
#[derive(Clone, Debug)]
pub struct SlotGadget {
    pub graph: Graph,
    /// Gadget vertex of each unit vertex (`usize::MAX` for hubs).
    pub unit_vertex: Vec<usize>,
    /// Slot vertices of each hub, mandatory first.
    pub slots: Vec<Vec<usize>>,
    /// Number of mandatory slots per hub.
    pub mandatory: Vec<usize>,
    /// Per gadget vertex, the original vertex it stands for.
    pub origin: Vec<usize>,
}

pub fn build_slot_gadget(prob: &ParityProblem, units: &[bool]) -> Option<SlotGadget> {
    let nv = prob.vertex_count();
    let deg = prob.degrees();
    let mut origin = Vec::new();
    let mut unit_vertex = vec![usize::MAX; nv];
    let mut slots = vec![Vec::new(); nv];
    let mut mandatory = vec![0; nv];
    for v in 0..nv {
        if units[v] {
            unit_vertex[v] = origin.len();
            origin.push(v);
            continue;
        }
        let c = prob.constraints[v];
        if c.base > deg[v] {
            return None;
        }
        let top = (c.base + 2 * c.slack).min(deg[v]);
        let hi = top - (top - c.base) % 2;
        mandatory[v] = c.base;
        for _ in 0..hi {
            slots[v].push(origin.len());
            origin.push(v);
        }
    }
    let mut graph = Graph::new(origin.len());
    for &(a, b) in &prob.edges {
        let (u, h) = if units[a] { (a, b) } else { (b, a) };
        for &s in &slots[h] {
            graph.add_edge(unit_vertex[u], s);
        }
    }
    for v in 0..nv {
        let opt = &slots[v][mandatory[v]..];
        for pair in opt.chunks(2) {
            graph.add_edge(pair[0], pair[1]);
        }
    }
    Some(SlotGadget {
        graph,
        unit_vertex,
        slots,
        mandatory,
        origin,
    })
}

fn solve_with_slots(prob: &ParityProblem, units: &[bool], hint: Option<&[bool]>) -> Option<Vec<bool>> {
    let gadget = build_slot_gadget(prob, units)?;
    let nv = prob.vertex_count();
    let mut seed = Vec::new();
    if let Some(hint) = hint {
        let mut used = vec![0usize; nv];
        for (e, &(a, b)) in prob.edges.iter().enumerate() {
            if !hint.get(e).copied().unwrap_or(false) {
                continue;
            }
            let (u, h) = if units[a] { (a, b) } else { (b, a) };
            if let Some(&s) = gadget.slots[h].get(used[h]) {
                seed.push((gadget.unit_vertex[u], s));
                used[h] += 1;
            }
        }
        for v in 0..nv {
            let m = gadget.mandatory[v];
            let slots = &gadget.slots[v];
            let mut k = m + (used[v].saturating_sub(m) + 1) / 2 * 2;
            while k + 1 < slots.len() {
                seed.push((slots[k], slots[k + 1]));
                k += 2;
            }
        }
    }
    let mates = perfect_matching_seeded(&gadget.graph, &seed)?;
    Some(
        prob.edges
            .iter()
            .map(|&(a, b)| {
                let (u, h) = if units[a] { (a, b) } else { (b, a) };
                mates[gadget.unit_vertex[u]].is_some_and(|s| gadget.origin[s] == h)
            })
            .collect(),
    )
}

/// Seed edges reproducing `hint` inside the gadget: hinted cross edges
/// first, then each vertex's unused copies onto its z-vertices, then the
/// z-pairs.
fn hint_seed(prob: &ParityProblem, gadget: &GadgetGraph, hint: &[bool]) -> Vec<(usize, usize)> {
    let mut seed = Vec::new();
    let mut taken = vec![false; gadget.vertex_count()];
    for (e, &(a, b)) in gadget.cross_ends.iter().enumerate() {
        if hint.get(e).copied().unwrap_or(false) && !taken[a] && !taken[b] {
            taken[a] = true;
            taken[b] = true;
            seed.push((a, b));
        }
    }
    let mut copies: Vec<Vec<usize>> = vec![Vec::new(); prob.vertex_count()];
    for (id, o) in gadget.origin.iter().enumerate() {
        if let GadgetVertex::Copy { vertex, .. } = *o {
            copies[vertex].push(id);
        }
    }
    for v in 0..prob.vertex_count() {
        let zs = &gadget.z_vertices[v];
        let free_z: Vec<usize> = zs.iter().copied().filter(|&z| !taken[z]).collect();
        let free_c: Vec<usize> = copies[v].iter().copied().filter(|&c| !taken[c]).collect();
        for (&c, &z) in free_c.iter().zip(&free_z) {
            taken[c] = true;
            taken[z] = true;
            seed.push((c, z));
        }
        let pairs = prob.constraints[v].slack.min(zs.len() / 2);
        for k in 0..pairs {
            let (a, b) = (zs[2 * k], zs[2 * k + 1]);
            if !taken[a] && !taken[b] {
                taken[a] = true;
                taken[b] = true;
                seed.push((a, b));
            }
        }
    }
    seed
}

/// Exhaustive search over edge subsets; a test oracle for small graphs.
pub fn brute_parity(prob: &ParityProblem) -> Result<Option<Vec<bool>>> {
    const MAX_EDGES: usize = 20;
    let e = prob.edges.len();
    if e > MAX_EDGES {
        return Err(NswError::BudgetExceeded {
            required: 1u128 << e,
            budget: 1u128 << MAX_EDGES,
        });
    }
    for mask in 0u32..(1u32 << e) {
        let sel: Vec<bool> = (0..e).map(|k| mask >> k & 1 == 1).collect();
        if prob.is_feasible_selection(&sel) {
            return Ok(Some(sel));
        }
    }
    Ok(None)
}
