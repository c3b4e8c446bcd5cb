//! Range reduction and peeling of the bundles worth at least `k0 * s`.

use serde::Serialize;

use crate::error::{NswError, Result};
use crate::model::{AgentId, Allocation, Instance};
use crate::rules::{alt_paths_from, saturate, HeavyGraph, RuleScope, RuleStep};

/// Least `k` with `k * s > x + 1`, i.e. `k * p > x2 + 2`.
pub fn k0_of(x2: u64, p: u64) -> u64 {
    (x2 + 2) / p + 1
}

/// Applies rules a to d from donors worth more than `x + 1` until none
/// applies. Returns the number of steps.
pub fn reduce(inst: &Instance, hg: &HeavyGraph, alloc: &mut Allocation, trace: &mut Vec<RuleStep>) -> Result<usize> {
    saturate(inst, hg, alloc, RuleScope::Reduction, trace)
}

/// One peeling level: the closure `T_k` of the bundles worth `k * s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeelLevel {
    pub k: u64,
    pub members: Vec<AgentId>,
    pub frozen: Vec<AgentId>,
    /// Heavy goods held by the members (`n_k`).
    pub heavy_goods: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeelResult {
    pub x2: u64,
    pub k0: u64,
    pub frozen: Vec<AgentId>,
    pub remaining: Vec<AgentId>,
    pub levels: Vec<PeelLevel>,
}

impl PeelResult {
    pub fn is_frozen(&self, i: AgentId) -> bool {
        self.frozen.binary_search(&i).is_ok()
    }
}

/// Peels `T_k` for `k` from the top value down to `k0`, freezing the members
/// that hold `k` heavy goods. `alloc` must be reduced.
pub fn peel(inst: &Instance, hg: &HeavyGraph, alloc: &Allocation) -> Result<PeelResult> {
    let n = alloc.n();
    let p = inst.p();
    let x2 = alloc.min_value_x();
    let k0 = k0_of(x2, p);
    let kmax = alloc.max_value() / p;
    let mut active = vec![true; n];
    let mut levels = Vec::new();
    let mut k = kmax;
    while k >= k0 {
        let seeds: Vec<AgentId> = (0..n).filter(|&i| active[i] && alloc.value2(i) == k * p).collect();
        if !seeds.is_empty() {
            let mut member = vec![false; n];
            for &s in &seeds {
                member[s] = true;
                if alloc.heavy_count(s) as u64 != k {
                    return Err(NswError::invariant(
                        "peel-seed",
                        format!("agent {s} has value {k}s but {} heavy goods", alloc.heavy_count(s)),
                    ));
                }
                let reach = alt_paths_from(hg, inst, alloc, s, Some(&active));
                for j in reach.targets() {
                    member[j] = true;
                }
            }
            let members: Vec<AgentId> = (0..n).filter(|&i| member[i]).collect();
            let mut frozen = Vec::new();
            let mut heavy_goods = 0;
            for &u in &members {
                let h = alloc.heavy_count(u) as u64;
                heavy_goods += h as usize;
                if h == k {
                    frozen.push(u);
                } else if h + 1 != k {
                    return Err(NswError::invariant(
                        "peel-heavy-count",
                        format!("agent {u} in T_{k} holds {h} heavy goods"),
                    ));
                }
            }
            let expected = heavy_goods as i64 - (k as i64 - 1) * members.len() as i64;
            if expected != frozen.len() as i64 {
                return Err(NswError::invariant(
                    "peel-count",
                    format!("T_{k}: n_k - (k-1)|T_k| = {expected}, {} members hold k", frozen.len()),
                ));
            }
            for &f in &frozen {
                active[f] = false;
            }
            levels.push(PeelLevel {
                k,
                members,
                frozen,
                heavy_goods,
            });
        }
        k -= 1;
    }
    let frozen: Vec<AgentId> = (0..n).filter(|&i| !active[i]).collect();
    let remaining: Vec<AgentId> = (0..n).filter(|&i| active[i]).collect();
    for &i in &remaining {
        if alloc.value2(i) > x2 + 2 || alloc.heavy_count(i) as u64 >= k0 {
            return Err(NswError::invariant(
                "peel-band",
                format!(
                    "agent {i} left in the band with value {} and {} heavy goods (x2 = {x2}, k0 = {k0})",
                    alloc.value2(i),
                    alloc.heavy_count(i)
                ),
            ));
        }
    }
    Ok(PeelResult {
        x2,
        k0,
        frozen,
        remaining,
        levels,
    })
}
