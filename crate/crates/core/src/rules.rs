//! Basic improvement rules on allocations where heavy goods sit with
//! admirers, driven by alternating paths in the heavy graph.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{NswError, Result};
use crate::model::{AgentId, Allocation, GoodId, Instance, NswKey};

/// Agent/good incidence of the "heavy for" relation.
#[derive(Clone, Debug)]
pub struct HeavyGraph {
    agent_goods: Vec<Vec<GoodId>>,
}

impl HeavyGraph {
    pub fn new(inst: &Instance) -> Self {
        let agent_goods = (0..inst.n())
            .map(|i| (0..inst.m()).filter(|&g| inst.likes(i, g)).collect())
            .collect();
        HeavyGraph { agent_goods }
    }

    pub fn liked_goods(&self, i: AgentId) -> &[GoodId] {
        &self.agent_goods[i]
    }

    /// Goods `i` currently holds as heavy (its assignment edges).
    pub fn assigned<'a>(&'a self, alloc: &'a Allocation, i: AgentId) -> impl Iterator<Item = GoodId> + 'a {
        self.agent_goods[i]
            .iter()
            .copied()
            .filter(move |&g| alloc.owner(g) == i && alloc.is_as_heavy(g))
    }
}

/// An alternating path `agents[0] -g0- agents[1] -g1- ...` where every good
/// `goods[t]` is currently held as heavy by `agents[t]` and liked by
/// `agents[t + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AltPath {
    pub agents: Vec<AgentId>,
    pub goods: Vec<GoodId>,
}

impl AltPath {
    pub fn start(&self) -> AgentId {
        self.agents[0]
    }

    pub fn end(&self) -> AgentId {
        *self.agents.last().unwrap()
    }

    /// Number of goods on the path.
    pub fn len(&self) -> usize {
        self.goods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goods.is_empty()
    }

    /// Shifts every good one step along the path: the start loses one heavy
    /// good, the end gains one, intermediate agents keep their counts.
    pub fn augment(&self, inst: &Instance, alloc: &mut Allocation) -> Result<()> {
        for (t, &g) in self.goods.iter().enumerate() {
            let (from, to) = (self.agents[t], self.agents[t + 1]);
            if alloc.owner(g) != from || !alloc.is_as_heavy(g) {
                return Err(NswError::invariant(
                    "alt-path",
                    format!("good {g} is not held as heavy by agent {from}"),
                ));
            }
            alloc.move_good(inst, g, to, true)?;
        }
        Ok(())
    }
}

/// Breadth-first reachability over alternating paths from one agent.
#[derive(Clone, Debug)]
pub struct Reach {
    root: AgentId,
    parent: Vec<Option<(AgentId, GoodId)>>,
    reached: Vec<bool>,
}

impl Reach {
    pub fn root(&self) -> AgentId {
        self.root
    }

    /// `true` for agents other than the root reachable by a nonempty path.
    pub fn contains(&self, j: AgentId) -> bool {
        j != self.root && self.reached[j]
    }

    /// Reachable agents other than the root, ascending.
    pub fn targets(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.reached.len()).filter(move |&j| self.contains(j))
    }

    pub fn path_to(&self, j: AgentId) -> Option<AltPath> {
        if !self.contains(j) {
            return None;
        }
        let mut agents = vec![j];
        let mut goods = Vec::new();
        let mut cur = j;
        while let Some((prev, g)) = self.parent[cur] {
            agents.push(prev);
            goods.push(g);
            cur = prev;
        }
        agents.reverse();
        goods.reverse();
        Some(AltPath { agents, goods })
    }
}

/// Agents reachable from `i` by a path that starts with one of `i`'s
/// assignment edges. Neighbors are explored in ascending index order; agents
/// outside `active` (when given) are never entered.
pub fn alt_paths_from(
    hg: &HeavyGraph,
    inst: &Instance,
    alloc: &Allocation,
    i: AgentId,
    active: Option<&[bool]>,
) -> Reach {
    let n = inst.n();
    let mut parent = vec![None; n];
    let mut reached = vec![false; n];
    reached[i] = true;
    let mut queue = VecDeque::from([i]);
    while let Some(u) = queue.pop_front() {
        for g in hg.assigned(alloc, u) {
            for &v in inst.admirers(g) {
                if reached[v] || active.is_some_and(|a| !a[v]) {
                    continue;
                }
                reached[v] = true;
                parent[v] = Some((u, g));
                queue.push_back(v);
            }
        }
    }
    Reach {
        root: i,
        parent,
        reached,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    A,
    B,
    C,
    D,
    F,
    G,
}

/// One applied rule, for tracing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleStep {
    pub rule: Rule,
    /// Donor `i`, receiver `j`, and for rules a/d the value-x bundle that got a light.
    pub i: AgentId,
    pub j: Option<AgentId>,
    pub x_bundle: Option<AgentId>,
    pub path_len: usize,
}

/// Which rules may fire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleScope {
    /// Rules a, b, c, d, f, g.
    All,
    /// Rules a to d, only with a donor of value above `x + 1`.
    Reduction,
}

/// Lexicographic potential: NSW first, then the number of bundles of value
/// `x + 1` that contain a light good.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Phi {
    pub key: NswKey,
    pub facilitators: usize,
}

impl Phi {
    pub fn of(alloc: &Allocation) -> Self {
        Phi {
            key: alloc.key(),
            facilitators: facilitator_count(alloc),
        }
    }
}

pub fn facilitator_count(alloc: &Allocation) -> usize {
    let x2 = alloc.min_value_x();
    (0..alloc.n())
        .filter(|&i| alloc.value2(i) == x2 + 2 && alloc.light_count(i) > 0)
        .count()
}

fn lowest_at(alloc: &Allocation, value2: u64, skip: &[AgentId]) -> Option<AgentId> {
    (0..alloc.n()).find(|&h| alloc.value2(h) == value2 && !skip.contains(&h))
}

/// Rule a: a bundle worth more than `x + 1` gives a light good to a
/// bundle of value `x`.
pub fn try_rule_a(inst: &Instance, alloc: &mut Allocation) -> Result<Option<RuleStep>> {
    let x2 = alloc.min_value_x();
    let donor = (0..alloc.n()).find(|&i| alloc.value2(i) > x2 + 2 && alloc.light_count(i) > 0);
    let Some(i) = donor else { return Ok(None) };
    let target = lowest_at(alloc, x2, &[]).expect("minimum is attained");
    alloc.move_lights(inst, i, target, 1)?;
    Ok(Some(RuleStep {
        rule: Rule::A,
        i,
        j: None,
        x_bundle: Some(target),
        path_len: 0,
    }))
}

/// Donor order for the path rules: value descending, then index.
fn donors_by_value(alloc: &Allocation) -> Vec<AgentId> {
    let mut order: Vec<AgentId> = (0..alloc.n()).filter(|&i| alloc.heavy_count(i) > 0).collect();
    order.sort_by(|&a, &b| alloc.value2(b).cmp(&alloc.value2(a)).then(a.cmp(&b)));
    order
}

/// Number of light goods rule c moves from `j` to `i` for a value gap of
/// `gap2` half-units: `max(0, ⌈s − gap + ½⌉)`.
pub fn rule_c_light_moves(p: u64, gap2: u64) -> usize {
    // (p - gap2 + 1) / 2 rounded up, clamped at zero
    let num = p as i64 - gap2 as i64 + 1;
    if num <= 0 {
        0
    } else {
        ((num + 1) / 2) as usize
    }
}

/// Rules b, c and d, tried in that order for each donor/receiver pair.
pub fn try_rule_b_to_d(
    inst: &Instance,
    hg: &HeavyGraph,
    alloc: &mut Allocation,
    scope: RuleScope,
) -> Result<Option<RuleStep>> {
    let p = inst.p();
    let x2 = alloc.min_value_x();
    let ceil_s = inst.ceil_s();
    let floor_s = inst.floor_s();
    for i in donors_by_value(alloc) {
        let wi = alloc.value2(i);
        if scope == RuleScope::Reduction && wi <= x2 + 2 {
            continue;
        }
        let reach = alt_paths_from(hg, inst, alloc, i, None);
        for j in reach.targets() {
            let wj = alloc.value2(j);
            // b: w_i >= w_j + ⌈s⌉
            if wi >= wj + p + 1 {
                let path = reach.path_to(j).unwrap();
                path.augment(inst, alloc)?;
                return Ok(Some(RuleStep {
                    rule: Rule::B,
                    i,
                    j: Some(j),
                    x_bundle: None,
                    path_len: path.len(),
                }));
            }
            // c: w_i >= w_j + 1 and j holds more than s - (w_i - w_j) lights
            if wi >= wj + 2 {
                let gap = wi - wj;
                let lights = alloc.light_count(j) as i64;
                if 2 * lights > p as i64 - gap as i64 {
                    let r = rule_c_light_moves(p, gap);
                    let path = reach.path_to(j).unwrap();
                    path.augment(inst, alloc)?;
                    alloc.move_lights(inst, j, i, r)?;
                    return Ok(Some(RuleStep {
                        rule: Rule::C,
                        i,
                        j: Some(j),
                        x_bundle: None,
                        path_len: path.len(),
                    }));
                }
            }
            // d: w_i in {x+1, x+3/2}, w_j = x+1, j holds ⌈s⌉ lights
            let wi_ok = match scope {
                RuleScope::All => wi == x2 + 2 || wi == x2 + 3,
                RuleScope::Reduction => wi == x2 + 3,
            };
            if wi_ok && wj == x2 + 2 && alloc.light_count(j) >= ceil_s {
                let target = lowest_at(alloc, x2, &[i, j]).ok_or_else(|| {
                    NswError::invariant("rule-d", "no bundle of value x besides i and j")
                })?;
                let path = reach.path_to(j).unwrap();
                path.augment(inst, alloc)?;
                alloc.move_lights(inst, j, i, floor_s)?;
                alloc.move_lights(inst, j, target, 1)?;
                return Ok(Some(RuleStep {
                    rule: Rule::D,
                    i,
                    j: Some(j),
                    x_bundle: Some(target),
                    path_len: path.len(),
                }));
            }
        }
    }
    Ok(None)
}

/// Rule f: a bundle of value `x` takes a heavy good along a path from a
/// facilitator-like bundle of value `x + 1` and receives `⌈s⌉` lights back.
pub fn try_rule_f(inst: &Instance, hg: &HeavyGraph, alloc: &mut Allocation) -> Result<Option<RuleStep>> {
    let x2 = alloc.min_value_x();
    let ceil_s = inst.ceil_s();
    for i in 0..alloc.n() {
        if alloc.value2(i) != x2 || alloc.heavy_count(i) == 0 {
            continue;
        }
        let reach = alt_paths_from(hg, inst, alloc, i, None);
        let j = reach
            .targets()
            .find(|&j| alloc.value2(j) == x2 + 2 && alloc.light_count(j) >= ceil_s);
        if let Some(j) = j {
            let path = reach.path_to(j).unwrap();
            path.augment(inst, alloc)?;
            alloc.move_lights(inst, j, i, ceil_s)?;
            return Ok(Some(RuleStep {
                rule: Rule::F,
                i,
                j: Some(j),
                x_bundle: None,
                path_len: path.len(),
            }));
        }
    }
    Ok(None)
}

/// Rule g: a heavy-only bundle of value `x + 1` swaps value with a bundle of
/// value `x + ½` holding `⌈s⌉` lights; NSW is unchanged and one more
/// facilitator appears.
pub fn try_rule_g(inst: &Instance, hg: &HeavyGraph, alloc: &mut Allocation) -> Result<Option<RuleStep>> {
    let x2 = alloc.min_value_x();
    let ceil_s = inst.ceil_s();
    for i in 0..alloc.n() {
        if alloc.value2(i) != x2 + 2 || !alloc.is_heavy_only(i) || alloc.heavy_count(i) == 0 {
            continue;
        }
        let reach = alt_paths_from(hg, inst, alloc, i, None);
        let j = reach
            .targets()
            .find(|&j| alloc.value2(j) == x2 + 1 && alloc.light_count(j) >= ceil_s);
        if let Some(j) = j {
            let path = reach.path_to(j).unwrap();
            path.augment(inst, alloc)?;
            alloc.move_lights(inst, j, i, inst.floor_s())?;
            return Ok(Some(RuleStep {
                rule: Rule::G,
                i,
                j: Some(j),
                x_bundle: None,
                path_len: path.len(),
            }));
        }
    }
    Ok(None)
}

/// Applies the first applicable rule in the order a, b, c, d, f, g.
pub fn apply_next_rule(
    inst: &Instance,
    hg: &HeavyGraph,
    alloc: &mut Allocation,
    scope: RuleScope,
) -> Result<Option<RuleStep>> {
    // rule a only fires from a donor above x + 1, so it belongs to both scopes
    if let Some(step) = try_rule_a(inst, alloc)? {
        return Ok(Some(step));
    }
    if let Some(step) = try_rule_b_to_d(inst, hg, alloc, scope)? {
        return Ok(Some(step));
    }
    if scope == RuleScope::Reduction {
        return Ok(None);
    }
    if let Some(step) = try_rule_f(inst, hg, alloc)? {
        return Ok(Some(step));
    }
    try_rule_g(inst, hg, alloc)
}

/// Applies rules until none fires, checking that every step strictly raises
/// the potential. Steps are appended to `trace`.
pub fn saturate_basic_rules(
    inst: &Instance,
    hg: &HeavyGraph,
    alloc: &mut Allocation,
    trace: &mut Vec<RuleStep>,
) -> Result<usize> {
    saturate(inst, hg, alloc, RuleScope::All, trace)
}

pub(crate) fn saturate(
    inst: &Instance,
    hg: &HeavyGraph,
    alloc: &mut Allocation,
    scope: RuleScope,
    trace: &mut Vec<RuleStep>,
) -> Result<usize> {
    let mut steps = 0;
    let mut phi = Phi::of(alloc);
    while let Some(step) = apply_next_rule(inst, hg, alloc, scope)? {
        let next = Phi::of(alloc);
        let ok = match step.rule {
            Rule::G => next.key == phi.key && next.facilitators > phi.facilitators,
            _ => next.key > phi.key,
        };
        if !ok {
            return Err(NswError::invariant(
                "phi-monotone",
                format!("{:?} did not raise the potential: {:?} -> {:?}", step, phi, next),
            ));
        }
        log::trace!("rule {:?}", step);
        phi = next;
        trace.push(step);
        steps += 1;
    }
    Ok(steps)
}
