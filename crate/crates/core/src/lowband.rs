//! Optimizing the bundles of value `x`, `x + ½` and `x + 1` by pairwise
//! parity-matching improvements.
//!
//! For a pair `i, j` of bundles worth `x` or `x + 1`, the heavy goods are
//! reassigned so that `i` and `j` can end at `x + ½` while every other
//! bundle keeps a heavy count compatible with its value. A third bundle `k`
//! absorbs the value difference when `i` and `j` start on the same side:
//! a facilitator drops to `x` if both were at `x`, a value-`x` bundle rises
//! to `x + 1` if both were at `x + 1`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NswError, Result};
use crate::model::{band_of, AgentId, Allocation, Band, GoodId, Instance, NswKey};
use crate::parity::{solve_parity_with_hint, DegreeConstraint, ParityProblem};

/// Allowed heavy counts `min, min + 2, ..., max` for a bundle value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NSet {
    pub min: usize,
    pub max: usize,
}

impl NSet {
    /// Heavy counts `h` with `v2 - h * p` even and non-negative, or `None`.
    pub fn for_value(v2: u64, p: u64) -> Option<NSet> {
        let min = (v2 % 2) as usize;
        let mut max = (v2 / p) as usize;
        if max % 2 != min {
            max = max.checked_sub(1)?;
        }
        (max >= min).then_some(NSet { min, max })
    }

    pub fn contains(&self, h: usize) -> bool {
        h >= self.min && h <= self.max && (h - self.min) % 2 == 0
    }

    pub fn constraint(&self) -> DegreeConstraint {
        DegreeConstraint::range(self.min, self.max)
    }
}

/// The heavy-count sets of the three band values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NSets {
    pub x2: u64,
    pub zero: Option<NSet>,
    pub half: Option<NSet>,
    pub one: Option<NSet>,
}

impl NSets {
    pub fn new(x2: u64, p: u64) -> Self {
        NSets {
            x2,
            zero: NSet::for_value(x2, p),
            half: NSet::for_value(x2 + 1, p),
            one: NSet::for_value(x2 + 2, p),
        }
    }

    /// Maximum heavy count of a bundle worth `x + ½`.
    pub fn g(&self) -> Option<usize> {
        self.half.map(|s| s.max)
    }

    pub fn for_band(&self, band: Band) -> Option<NSet> {
        match band {
            Band::Zero => self.zero,
            Band::Half => self.half,
            Band::One => self.one,
            Band::Below | Band::Above => None,
        }
    }
}

pub fn n_sets(x2: u64, p: u64) -> NSets {
    NSets::new(x2, p)
}

/// The band as a standalone instance: agents, the goods they own, and the
/// allocation restricted to them.
#[derive(Clone, Debug)]
pub struct BandState {
    pub inst: Instance,
    pub agents: Vec<AgentId>,
    pub goods: Vec<GoodId>,
    pub alloc: Allocation,
}

impl BandState {
    /// Restricts `alloc` to `band_agents` (ascending) and the goods they own.
    pub fn from_allocation(inst: &Instance, alloc: &Allocation, band_agents: &[AgentId]) -> Result<Self> {
        let mut local = vec![usize::MAX; inst.n()];
        for (t, &a) in band_agents.iter().enumerate() {
            local[a] = t;
        }
        let goods: Vec<GoodId> = (0..inst.m()).filter(|&g| local[alloc.owner(g)] != usize::MAX).collect();
        let sub = inst.restrict(band_agents, &goods);
        let owner = goods.iter().map(|&g| local[alloc.owner(g)]).collect();
        let as_heavy = goods.iter().map(|&g| alloc.is_as_heavy(g)).collect();
        let band_alloc = Allocation::new(&sub, owner, as_heavy)?;
        let state = BandState {
            inst: sub,
            agents: band_agents.to_vec(),
            goods,
            alloc: band_alloc,
        };
        state.check()?;
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn x2(&self) -> u64 {
        self.alloc.min_value_x()
    }

    pub fn n_sets(&self) -> NSets {
        NSets::new(self.x2(), self.inst.p())
    }

    pub fn band(&self, i: AgentId) -> Band {
        band_of(self.alloc.values2(), self.x2(), i)
    }

    pub fn is_facilitator(&self, i: AgentId) -> bool {
        self.band(i) == Band::One && self.alloc.light_count(i) > 0
    }

    /// Values in the band, heavy counts in their N-sets, every heavy good
    /// held as heavy.
    pub fn check(&self) -> Result<()> {
        let sets = self.n_sets();
        for i in 0..self.n() {
            let set = sets.for_band(self.band(i)).ok_or_else(|| {
                NswError::invariant(
                    "band-values",
                    format!("agent {} has value {} outside the band of x2 = {}", self.agents[i], self.alloc.value2(i), sets.x2),
                )
            })?;
            if !set.contains(self.alloc.heavy_count(i)) {
                return Err(NswError::invariant(
                    "band-nset",
                    format!("agent {} holds {} heavy goods, allowed {:?}", self.agents[i], self.alloc.heavy_count(i), set),
                ));
            }
        }
        for g in 0..self.inst.m() {
            if self.inst.is_heavy_good(g) && !self.alloc.is_as_heavy(g) {
                return Err(NswError::invariant(
                    "band-phase-one",
                    format!("good {} is liked inside the band but held as light", self.goods[g]),
                ));
            }
        }
        Ok(())
    }

    /// Copies the band allocation back into the full allocation.
    pub fn write_back(&self, inst: &Instance, alloc: &mut Allocation) -> Result<()> {
        for (t, &g) in self.goods.iter().enumerate() {
            let to = self.agents[self.alloc.owner(t)];
            if alloc.owner(g) != to || alloc.is_as_heavy(g) != self.alloc.is_as_heavy(t) {
                alloc.move_good(inst, g, to, self.alloc.is_as_heavy(t))?;
            }
        }
        Ok(())
    }

    /// Connected component label of every agent in the graph of heavy
    /// edges; agents without heavy edges get their own label.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for g in 0..self.inst.m() {
            let adm = self.inst.admirers(g);
            for w in adm.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..n).map(|v| find(&mut parent, v)).collect()
    }
}

/// How the pair's values relate, and the third bundle involved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// Both at `x`; `k` is a facilitator that drops to `x`.
    BothZero { k: AgentId },
    /// Both at `x + 1`; `k` is a value-`x` bundle that rises to `x + 1`.
    BothOne { k: AgentId },
    Mixed,
}

/// A parity problem whose solutions are the heavy reassignments realizing
/// the improvement for the pair `(i, j)`.
///
/// Vertices `0..n` are band agents and `n + t` is the `t`-th entry of
/// `heavy_goods`. Every edge joins an agent to a heavy good it likes.
#[derive(Clone, Debug)]
pub struct PairProblem {
    pub i: AgentId,
    pub j: AgentId,
    pub kind: PairKind,
    pub problem: ParityProblem,
    pub heavy_goods: Vec<GoodId>,
    /// `(agent, good)` per edge, band indices.
    pub edge_ends: Vec<(AgentId, GoodId)>,
    /// Target half-unit value of every band agent.
    pub targets: Vec<u64>,
    /// Current assignment as an edge selection.
    pub current: Vec<bool>,
}

/// Builds the pair problem over the whole band. `None` when the pair is not
/// admissible: not both in `A_0 ∪ A_1`, no suitable `k`, or an empty
/// N-set.
pub fn build_pair_problem(state: &BandState, i: AgentId, j: AgentId) -> Option<PairProblem> {
    build_pair_problem_on(state, i, j, None)
}

/// As [`build_pair_problem`], restricted to the agents with `scope[a]`
/// (and the heavy goods they hold). The pair must be inside the scope.
pub fn build_pair_problem_on(state: &BandState, i: AgentId, j: AgentId, scope: Option<&[bool]>) -> Option<PairProblem> {
    if i == j {
        return None;
    }
    let n = state.n();
    let alloc = &state.alloc;
    let sets = state.n_sets();
    let (bi, bj) = (state.band(i), state.band(j));
    let side = |b: Band| matches!(b, Band::Zero | Band::One);
    if !side(bi) || !side(bj) {
        return None;
    }
    let x2 = sets.x2;
    let kind = match (bi, bj) {
        (Band::Zero, Band::Zero) => PairKind::BothZero {
            k: (0..n).find(|&k| state.is_facilitator(k))?,
        },
        (Band::One, Band::One) => PairKind::BothOne {
            k: (0..n).find(|&k| state.band(k) == Band::Zero)?,
        },
        _ => PairKind::Mixed,
    };
    let mut targets: Vec<u64> = alloc.values2().to_vec();
    targets[i] = x2 + 1;
    targets[j] = x2 + 1;
    match kind {
        PairKind::BothZero { k } => targets[k] = x2,
        PairKind::BothOne { k } => targets[k] = x2 + 2,
        PairKind::Mixed => {}
    }
    let in_scope = |a: AgentId| scope.is_none_or(|s| s[a]);
    let mut constraints = Vec::with_capacity(n);
    for (a, &t) in targets.iter().enumerate() {
        let set = NSet::for_value(t, state.inst.p())?;
        constraints.push(set.constraint());
        debug_assert!(in_scope(a) || set.contains(alloc.heavy_count(a)));
    }
    // agents out of scope become isolated degree-0 vertices with their
    // goods dropped
    for (a, c) in constraints.iter_mut().enumerate() {
        if !in_scope(a) {
            *c = DegreeConstraint::exactly(0);
        }
    }
    let heavy_goods: Vec<GoodId> = (0..state.inst.m())
        .filter(|&g| state.inst.is_heavy_good(g) && in_scope(alloc.owner(g)))
        .collect();
    let mut edges = Vec::new();
    let mut edge_ends = Vec::new();
    let mut current = Vec::new();
    for (t, &g) in heavy_goods.iter().enumerate() {
        constraints.push(DegreeConstraint::exactly(1));
        for &a in state.inst.admirers(g) {
            if !in_scope(a) {
                continue;
            }
            edges.push((a, n + t));
            edge_ends.push((a, g));
            current.push(alloc.owner(g) == a);
        }
    }
    Some(PairProblem {
        i,
        j,
        kind,
        problem: ParityProblem::new(constraints, edges),
        heavy_goods,
        edge_ends,
        targets,
        current,
    })
}

/// Reassigns the heavy goods as `heavy_owner` says (`None` for light goods)
/// and deals the light goods so that agent `ℓ` ends with
/// `(targets[ℓ] - p * h'_ℓ) / 2` of them. Agents keep their own lowest-index
/// light goods where possible; the surplus goes, in good order, to the
/// agents short of lights in agent order.
pub fn redistribute_lights(
    inst: &Instance,
    alloc: &Allocation,
    heavy_owner: &[Option<AgentId>],
    targets: &[u64],
) -> Result<Allocation> {
    let n = alloc.n();
    let p = inst.p();
    let fail = |detail: String| Err(NswError::invariant("light-redistribution", detail));
    if targets.len() != n || heavy_owner.len() != inst.m() {
        return fail("size mismatch".into());
    }
    if targets.iter().sum::<u64>() != alloc.values2().iter().sum::<u64>() {
        return fail(format!("target sum differs from current value sum: {targets:?}"));
    }
    let mut h = vec![0u64; n];
    for (g, o) in heavy_owner.iter().enumerate() {
        if let Some(a) = *o {
            if !inst.likes(a, g) {
                return fail(format!("good {g} assigned as heavy to non-admirer {a}"));
            }
            h[a] += 1;
        }
    }
    let mut need = vec![0usize; n];
    for a in 0..n {
        let heavy_value = h[a] * p;
        if targets[a] < heavy_value || (targets[a] - heavy_value) % 2 == 1 {
            return fail(format!("agent {a}: target {} with {} heavy goods", targets[a], h[a]));
        }
        need[a] = ((targets[a] - heavy_value) / 2) as usize;
    }
    let mut owner = alloc.owners().to_vec();
    let mut as_heavy = vec![false; inst.m()];
    let mut kept = vec![0usize; n];
    let mut pool = Vec::new();
    for g in 0..inst.m() {
        match heavy_owner[g] {
            Some(a) => {
                owner[g] = a;
                as_heavy[g] = true;
            }
            None => {
                let a = alloc.owner(g);
                if !alloc.is_as_heavy(g) && kept[a] < need[a] {
                    kept[a] += 1;
                } else {
                    pool.push(g);
                }
            }
        }
    }
    let mut pool = pool.into_iter();
    for a in 0..n {
        while kept[a] < need[a] {
            match pool.next() {
                Some(g) => {
                    owner[g] = a;
                    kept[a] += 1;
                }
                None => return fail("ran out of light goods".into()),
            }
        }
    }
    if pool.next().is_some() {
        return fail("light goods left over".into());
    }
    Allocation::new(inst, owner, as_heavy)
}

/// One applied band improvement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BandImprovement {
    /// Original agent indices.
    pub i: AgentId,
    pub j: AgentId,
    pub k: Option<AgentId>,
    pub x2: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BandOutcome {
    pub improvements: Vec<BandImprovement>,
    /// Parity problems handed to the matcher.
    pub matching_solves: usize,
    /// Pair scans performed (one per improvement plus the final one).
    pub scans: usize,
}

/// Solves the pair problem restricted to the pair's component and lifts the
/// answer to a full band allocation.
fn try_pair(state: &BandState, comp: &[usize], i: AgentId, j: AgentId) -> Option<(PairProblem, Vec<bool>)> {
    let scope: Vec<bool> = comp.iter().map(|&c| c == comp[i]).collect();
    let pp = build_pair_problem_on(state, i, j, Some(&scope))?;
    let sel = solve_parity_with_hint(&pp.problem, Some(&pp.current))?;
    Some((pp, sel))
}

fn admissible_pairs(state: &BandState, comp: &[usize]) -> Vec<(AgentId, AgentId)> {
    let n = state.n();
    let sides: Vec<AgentId> = (0..n)
        .filter(|&a| matches!(state.band(a), Band::Zero | Band::One))
        .collect();
    let mut pairs = Vec::new();
    for (t, &i) in sides.iter().enumerate() {
        for &j in &sides[t + 1..] {
            if comp[i] == comp[j] {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Applies pair improvements, lowest feasible `(i, j)` first, until no pair
/// improves. With `threads > 1` the pair problems of a scan are solved
/// concurrently; the applied pair is the same as in a sequential scan.
pub fn optimize_band(state: &mut BandState, threads: usize) -> Result<BandOutcome> {
    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| NswError::invariant("thread-pool", e.to_string()))?,
        )
    } else {
        None
    };
    let mut outcome = BandOutcome::default();
    loop {
        outcome.scans += 1;
        if state.n_sets().half.is_none() {
            break;
        }
        let comp = state.components();
        let pairs = admissible_pairs(state, &comp);
        let found = match &pool {
            None => {
                let mut found = None;
                for &(i, j) in &pairs {
                    if let Some(hit) = try_pair(state, &comp, i, j) {
                        outcome.matching_solves += 1;
                        found = Some(hit);
                        break;
                    }
                    outcome.matching_solves += 1;
                }
                found
            }
            Some(pool) => {
                let st: &BandState = state;
                let hit = pool.install(|| {
                    pairs
                        .par_iter()
                        .enumerate()
                        .find_map_first(|(idx, &(i, j))| try_pair(st, &comp, i, j).map(|h| (idx, h)))
                });
                // count as many solves as the sequential scan would
                outcome.matching_solves += hit.as_ref().map_or(pairs.len(), |(idx, _)| idx + 1);
                hit.map(|(_, h)| h)
            }
        };
        let Some((pp, sel)) = found else { break };
        apply_improvement(state, &pp, &sel)?;
        outcome.improvements.push(BandImprovement {
            i: state.agents[pp.i],
            j: state.agents[pp.j],
            k: match pp.kind {
                PairKind::BothZero { k } | PairKind::BothOne { k } => Some(state.agents[k]),
                PairKind::Mixed => None,
            },
            x2: pp.targets[pp.i] - 1,
        });
    }
    Ok(outcome)
}

fn apply_improvement(state: &mut BandState, pp: &PairProblem, sel: &[bool]) -> Result<()> {
    let before = state.alloc.key();
    let x2 = state.x2();
    let mut heavy_owner: Vec<Option<AgentId>> = (0..state.inst.m())
        .map(|g| state.alloc.is_as_heavy(g).then(|| state.alloc.owner(g)))
        .collect();
    for (e, &(a, g)) in pp.edge_ends.iter().enumerate() {
        if sel[e] {
            heavy_owner[g] = Some(a);
        }
    }
    let next = redistribute_lights(&state.inst, &state.alloc, &heavy_owner, &pp.targets)?;
    // the product gains exactly (x2 + 1)^2 / (x2 (x2 + 2))
    let after = next.key();
    let lhs = after.product() * (x2 * (x2 + 2));
    let rhs = before.product() * ((x2 + 1) * (x2 + 1));
    if !before.is_positive() || lhs != rhs || after <= before {
        return Err(NswError::invariant(
            "band-gain",
            format!("pair ({}, {}) changed the product from {} to {}", pp.i, pp.j, before, after),
        ));
    }
    state.alloc = next;
    state.check()
}

/// Product of the band values, for tests and reporting.
pub fn band_key(state: &BandState) -> NswKey {
    state.alloc.key()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{phase_one_brute_force, DEFAULT_BUDGET};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Maximum heavy counts per the three-row table, or `None` when `x + ½`
    /// admits no composition.
    fn table_maxima(x2: u64, p: u64) -> Option<(i64, i64, i64)> {
        let g = NSet::for_value(x2 + 1, p)?.max as i64;
        let v1 = x2 + 2;
        Some(if v1 % p == 0 {
            (g - 1, g, g + 1)
        } else if v1 > (g as u64 + 1) * p {
            (g + 1, g, g + 1)
        } else {
            (g - 1, g, g - 1)
        })
    }

    /// Direct enumeration of `(heavy, light)` compositions.
    fn enum_max(v2: u64, p: u64) -> i64 {
        (0..=v2 / p).filter(|h| (v2 - h * p) % 2 == 0).map(|h| h as i64).max().unwrap_or(-1)
    }

    #[test]
    fn n_sets_examples() {
        let s = n_sets(4, 3);
        assert_eq!(s.g(), Some(1));
        assert_eq!(s.zero, Some(NSet { min: 0, max: 0 }));
        assert_eq!(s.half, Some(NSet { min: 1, max: 1 }));
        assert_eq!(s.one, Some(NSet { min: 0, max: 2 }));
        assert_eq!(table_maxima(6, 3), Some((2, 1, 2)));
        assert_eq!(table_maxima(4, 5), Some((0, 1, 0)));
        assert_eq!(n_sets(0, 3).half, None);
    }

    #[test]
    fn table_matches_enumeration() {
        for p in [3u64, 5, 7, 9, 11] {
            for x2 in 1..200 {
                let Some((m0, mh, m1)) = table_maxima(x2, p) else { continue };
                assert_eq!(m0, enum_max(x2, p), "p={p} x2={x2}");
                assert_eq!(mh, enum_max(x2 + 1, p), "p={p} x2={x2}");
                assert_eq!(m1, enum_max(x2 + 2, p), "p={p} x2={x2}");
            }
        }
    }

    #[test]
    fn nset_membership_is_composition_feasibility() {
        for p in [3u64, 5, 7] {
            for v2 in 0..60 {
                let set = NSet::for_value(v2, p);
                for h in 0..30usize {
                    let direct = v2 >= h as u64 * p && (v2 - h as u64 * p) % 2 == 0;
                    assert_eq!(set.is_some_and(|s| s.contains(h)), direct, "p={p} v2={v2} h={h}");
                }
            }
        }
    }

    /// Two agents liking every heavy good; agent 0 holds `h0` heavies and
    /// `l0` lights, agent 1 the rest.
    fn two_agent_band(p: u64, h0: usize, l0: usize, h1: usize, l1: usize) -> BandState {
        let hs = h0 + h1;
        let m = hs + l0 + l1;
        let rows = vec![(0..m).map(|g| g < hs).collect::<Vec<bool>>(); 2];
        let inst = Instance::new(p, m, rows).unwrap();
        let mut owner = vec![0; h0];
        owner.extend(vec![1; h1]);
        owner.extend(vec![0; l0]);
        owner.extend(vec![1; l1]);
        let alloc = Allocation::from_owners(&inst, owner).unwrap();
        BandState::from_allocation(&inst, &alloc, &[0, 1]).unwrap()
    }

    #[test]
    fn example_values_3_and_4() {
        // two heavies: improves to (7/2, 7/2)
        let mut st = two_agent_band(3, 2, 0, 0, 4);
        assert_eq!(st.alloc.values2(), &[6, 8]);
        let pp = build_pair_problem(&st, 0, 1).unwrap();
        assert_eq!(pp.problem.constraints[0], DegreeConstraint::exactly(1));
        assert_eq!(pp.problem.constraints[1], DegreeConstraint::exactly(1));
        let out = optimize_band(&mut st, 1).unwrap();
        assert_eq!(out.improvements.len(), 1);
        assert_eq!(st.alloc.values2(), &[7, 7]);
        // zero heavies: stays (3, 4)
        let mut st = two_agent_band(3, 0, 3, 0, 4);
        assert_eq!(st.alloc.values2(), &[6, 8]);
        assert!(optimize_band(&mut st, 1).unwrap().improvements.is_empty());
        // four heavies: 1 + 3 has the right parity but 3 exceeds the bound
        let mut st = two_agent_band(3, 2, 0, 2, 1);
        assert_eq!(st.alloc.values2(), &[6, 8]);
        let pp = build_pair_problem(&st, 0, 1).unwrap();
        assert!(solve_parity_with_hint(&pp.problem, None).is_none());
        assert!(optimize_band(&mut st, 1).unwrap().improvements.is_empty());
        assert_eq!(st.alloc.values2(), &[6, 8]);
    }

    #[test]
    fn example_values_2_and_3() {
        let mut st = two_agent_band(3, 0, 2, 2, 0);
        assert_eq!(st.alloc.values2(), &[4, 6]);
        let pp = build_pair_problem(&st, 0, 1).unwrap();
        assert_eq!(pp.kind, PairKind::Mixed);
        optimize_band(&mut st, 1).unwrap();
        assert_eq!(st.alloc.values2(), &[5, 5]);
        for a in 0..2 {
            assert_eq!(st.alloc.heavy_count(a), 1);
            assert_eq!(st.alloc.light_count(a), 1);
        }
    }

    #[test]
    fn both_zero_without_facilitator_is_skipped() {
        // three agents at x = 2 (two lights each): no value-(x+1) bundle at all
        let inst = Instance::all_light(3, 3, 6).unwrap();
        let alloc = Allocation::from_owners(&inst, vec![0, 0, 1, 1, 2, 2]).unwrap();
        let st = BandState::from_allocation(&inst, &alloc, &[0, 1, 2]).unwrap();
        assert!(build_pair_problem(&st, 0, 1).is_none());
    }

    #[test]
    fn redistribute_examples() {
        let inst = Instance::new(3, 4, vec![vec![true, true, false, false]; 2]).unwrap();
        let alloc = Allocation::from_owners(&inst, vec![1, 1, 0, 0]).unwrap();
        assert_eq!(alloc.values2(), &[4, 6]);
        let next = redistribute_lights(&inst, &alloc, &[Some(0), Some(1), None, None], &[5, 5]).unwrap();
        assert_eq!(next.values2(), &[5, 5]);
        assert_eq!(next.light_count(0), 1);
        assert_eq!(next.light_count(1), 1);
        // identity
        let inst1 = Instance::all_light(5, 1, 3).unwrap();
        let a1 = Allocation::from_owners(&inst1, vec![0, 0, 0]).unwrap();
        assert_eq!(redistribute_lights(&inst1, &a1, &[None; 3], &[6]).unwrap(), a1);
        // odd residue
        assert!(redistribute_lights(&inst, &alloc, &[Some(0), None, None, None], &[4, 6]).is_err());
    }

    /// Random band allocations: the band fixpoint matches the oracle, and the
    /// component-restricted problems agree with the whole-band ones.
    #[test]
    fn random_bands_reach_oracle_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        let mut improved = 0;
        while checked < 150 {
            let n = rng.gen_range(2..=4);
            let p = [3u64, 5][rng.gen_range(0..2)];
            let m = rng.gen_range(n..=8);
            let density = [0.3, 0.6][rng.gen_range(0..2)];
            let heavy: Vec<Vec<bool>> = (0..n).map(|_| (0..m).map(|_| rng.gen_bool(density)).collect()).collect();
            let inst = Instance::new(p, m, heavy).unwrap();
            // random phase-one allocation, keep only those already in a band
            let owner: Vec<AgentId> = (0..m)
                .map(|g| {
                    let adm = inst.admirers(g);
                    if adm.is_empty() {
                        rng.gen_range(0..n)
                    } else {
                        adm[rng.gen_range(0..adm.len())]
                    }
                })
                .collect();
            let alloc = Allocation::from_owners(&inst, owner).unwrap();
            let agents: Vec<AgentId> = (0..n).collect();
            let Ok(mut st) = BandState::from_allocation(&inst, &alloc, &agents) else { continue };
            if st.x2() == 0 {
                continue;
            }
            checked += 1;
            let comp = st.components();
            for i in 0..n {
                for j in i + 1..n {
                    let whole = build_pair_problem(&st, i, j).and_then(|pp| solve_parity_with_hint(&pp.problem, None));
                    let part = if comp[i] == comp[j] { try_pair(&st, &comp, i, j) } else { None };
                    assert_eq!(whole.is_some(), part.is_some(), "pair ({i},{j}) on {:?}", alloc);
                }
            }
            let out = optimize_band(&mut st, 1).unwrap();
            if !out.improvements.is_empty() {
                improved += 1;
            }
            let mut full = alloc.clone();
            st.write_back(&inst, &mut full).unwrap();
            full.check_consistency(&inst).unwrap();
            let oracle = phase_one_brute_force(&inst, DEFAULT_BUDGET).unwrap();
            assert_eq!(full.key(), oracle.best_key, "band fixpoint {:?} on {:?}", full.values2(), inst);
        }
        assert!(improved > 0);
    }

    #[test]
    fn parallel_scan_matches_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut compared = 0;
        while compared < 40 {
            let n = rng.gen_range(3..=6);
            let m = rng.gen_range(n..=12);
            let heavy: Vec<Vec<bool>> = (0..n).map(|_| (0..m).map(|_| rng.gen_bool(0.4)).collect()).collect();
            let inst = Instance::new(3, m, heavy).unwrap();
            let owner: Vec<AgentId> = (0..m)
                .map(|g| inst.admirers(g).first().copied().unwrap_or_else(|| rng.gen_range(0..n)))
                .collect();
            let alloc = Allocation::from_owners(&inst, owner).unwrap();
            let agents: Vec<AgentId> = (0..n).collect();
            let Ok(st) = BandState::from_allocation(&inst, &alloc, &agents) else { continue };
            compared += 1;
            let (mut a, mut b) = (st.clone(), st);
            let oa = optimize_band(&mut a, 1).unwrap();
            let ob = optimize_band(&mut b, 3).unwrap();
            assert_eq!(oa, ob);
            assert_eq!(a.alloc, b.alloc);
        }
    }
}
