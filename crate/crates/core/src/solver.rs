//! End-to-end solver: phase one with every heavy good counted heavy, then
//! heavy-to-light conversions until all bundles are within `x + 1`.

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{NswError, Result};
use crate::lowband::{optimize_band, BandImprovement, BandState};
use crate::matching::bipartite_matching;
use crate::model::{AgentId, Allocation, GoodId, Instance, NswKey};
use crate::reduction::{peel, reduce, PeelResult};
use crate::rules::{saturate_basic_rules, HeavyGraph, RuleStep};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Worker threads for the band pair scan; 1 is sequential.
    pub threads: usize,
    /// Keep the per-step trace in the report.
    pub trace: bool,
    /// Keep the frozen bundles of every peel of the first phase one.
    pub record_frozen: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            threads: 1,
            trace: false,
            record_frozen: false,
        }
    }
}

/// One heavy-to-light conversion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Conversion {
    pub good: GoodId,
    pub from: AgentId,
    pub to: AgentId,
    /// Value of the donor bundle and the minimum before the conversion.
    pub z2: u64,
    pub x2: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Rule(RuleStep),
    Peel { x2: u64, k0: u64, frozen: Vec<AgentId> },
    Band(BandImprovement),
    Conversion(Conversion),
}

/// A failed structural check; the solve still returns its best allocation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub id: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub rule_steps: usize,
    pub band_improvements: usize,
    pub matching_solves: usize,
    /// Largest number of matching solves in one phase-one run.
    pub max_matching_solves_per_phase: usize,
    pub phase_one_runs: usize,
    pub pipeline_passes: usize,
    pub conversions: usize,
}

impl SolveStats {
    /// Matching solves allowed per phase-one run: `n² (n/2 + 1)`.
    pub fn matching_bound(n: usize) -> usize {
        n * n * (n / 2 + 1)
    }
}

#[derive(Clone, Debug)]
pub struct PhaseOneOutcome {
    pub alloc: Allocation,
    pub band_improvements: usize,
    pub matching_solves: usize,
    pub rule_steps: usize,
    pub passes: usize,
    /// Frozen bundles `(agent, goods)` per peel, when requested.
    pub frozen: Vec<Vec<(AgentId, Vec<GoodId>)>>,
    pub peels: Vec<PeelResult>,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub alloc: Allocation,
    pub key: NswKey,
    pub conversions: Vec<Conversion>,
    pub trace: Vec<TraceEvent>,
    pub stats: SolveStats,
    pub violations: Vec<Violation>,
    /// Frozen bundles of the first phase-one run, when requested.
    pub frozen: Vec<Vec<(AgentId, Vec<GoodId>)>>,
}

/// Heavy goods to their lowest-index admirer, then light goods one by one to
/// the lowest-index minimum bundle.
pub fn initial_allocation(inst: &Instance) -> Allocation {
    let mut owner = vec![0; inst.m()];
    let mut values = vec![0u64; inst.n()];
    for g in inst.heavy_goods() {
        let a = inst.admirers(g)[0];
        owner[g] = a;
        values[a] += inst.p();
    }
    for g in (0..inst.m()).filter(|&g| !inst.is_heavy_good(g)) {
        let a = (0..inst.n()).min_by_key(|&a| (values[a], a)).unwrap();
        owner[g] = a;
        values[a] += 2;
    }
    Allocation::from_owners(inst, owner).expect("initial allocation is valid")
}

fn check_phase_one_start(inst: &Instance, alloc: &Allocation) -> Result<()> {
    if let Some(g) = (0..inst.m()).find(|&g| inst.is_heavy_good(g) && !alloc.is_as_heavy(g)) {
        return Err(NswError::InvalidAllocation(format!("heavy good {g} is not held as heavy")));
    }
    Ok(())
}

/// Best allocation with every heavy good held as heavy, starting from
/// `start`: rule saturation, reduction, peeling and band optimization,
/// repeated until a pass leaves the band unchanged.
pub fn phase_one(inst: &Instance, start: Allocation, opts: &SolveOptions, trace: &mut Vec<TraceEvent>) -> Result<PhaseOneOutcome> {
    check_phase_one_start(inst, &start)?;
    let hg = HeavyGraph::new(inst);
    let mut alloc = start;
    let mut out = PhaseOneOutcome {
        alloc: alloc.clone(),
        band_improvements: 0,
        matching_solves: 0,
        rule_steps: 0,
        passes: 0,
        frozen: Vec::new(),
        peels: Vec::new(),
    };
    loop {
        out.passes += 1;
        let mut steps = Vec::new();
        out.rule_steps += saturate_basic_rules(inst, &hg, &mut alloc, &mut steps)?;
        out.rule_steps += reduce(inst, &hg, &mut alloc, &mut steps)?;
        if opts.trace {
            trace.extend(steps.into_iter().map(TraceEvent::Rule));
        }
        let peeled = peel(inst, &hg, &alloc)?;
        if opts.trace {
            trace.push(TraceEvent::Peel {
                x2: peeled.x2,
                k0: peeled.k0,
                frozen: peeled.frozen.clone(),
            });
        }
        if opts.record_frozen {
            out.frozen.push(peeled.frozen.iter().map(|&a| (a, alloc.bundle(a))).collect());
        }
        let mut band = BandState::from_allocation(inst, &alloc, &peeled.remaining)?;
        let band_out = optimize_band(&mut band, opts.threads)?;
        band.write_back(inst, &mut alloc)?;
        let (peeled_x2, frozen_count) = (peeled.x2, peeled.frozen.len());
        out.peels.push(peeled);
        out.matching_solves += band_out.matching_solves;
        out.band_improvements += band_out.improvements.len();
        let improved = !band_out.improvements.is_empty();
        log::debug!("pass {}: x2 = {}, {} frozen, {} band improvements", out.passes, peeled_x2, frozen_count, band_out.improvements.len());
        if opts.trace {
            trace.extend(band_out.improvements.into_iter().map(TraceEvent::Band));
        }
        if !improved {
            break;
        }
    }
    alloc.check_consistency(inst)?;
    out.alloc = alloc;
    Ok(out)
}

/// Converts the lowest-index heavy good of the lowest-index heaviest bundle
/// into a light good and gives it to the lowest-index minimum bundle.
/// Returns the instance with that good masked light, the new allocation and
/// the log entry.
pub fn convert_step(inst: &Instance, alloc: &Allocation) -> Result<(Instance, Allocation, Conversion)> {
    let x2 = alloc.min_value_x();
    let to = (0..alloc.n()).find(|&a| alloc.value2(a) == x2).expect("minimum is attained");
    convert_step_to(inst, alloc, to)
}

/// As [`convert_step`], with the receiving bundle chosen by the caller (it
/// must have the minimum value).
pub fn convert_step_to(inst: &Instance, alloc: &Allocation, to: AgentId) -> Result<(Instance, Allocation, Conversion)> {
    let x2 = alloc.min_value_x();
    let z2 = alloc.max_value();
    if z2 <= x2 + 2 {
        return Err(NswError::invariant(
            "convert-precondition",
            format!("every bundle is within x + 1 (x2 = {x2}, max = {z2})"),
        ));
    }
    if alloc.value2(to) != x2 {
        return Err(NswError::invariant("convert-precondition", format!("agent {to} is not a minimum bundle")));
    }
    let from = (0..alloc.n()).find(|&a| alloc.value2(a) == z2).unwrap();
    let good = (0..alloc.m())
        .find(|&g| alloc.owner(g) == from && alloc.is_as_heavy(g))
        .ok_or_else(|| NswError::invariant("convert-heavy", format!("heaviest bundle {from} holds no heavy good")))?;
    let masked = inst.with_light(&[good]);
    let mut owner = alloc.owners().to_vec();
    let mut as_heavy = alloc.as_heavy_flags().to_vec();
    owner[good] = to;
    as_heavy[good] = false;
    let next = Allocation::new(&masked, owner, as_heavy)?;
    Ok((masked, next, Conversion { good, from, to, z2, x2 }))
}

/// `true` iff `z > s x`, in half-units `2 z2 > p x2`: the only case in which
/// converting a heavy good of a bundle worth `z` can pay off.
pub fn conversion_gain_bound_check(z2: u64, x2: u64, p: u64) -> bool {
    2 * z2 > p * x2
}

/// `after / before <= ((z2 - p) / z2) * ((x2 + 1) / x2)^2`.
fn ratio_within_bound(before: &NswKey, after: &NswKey, z2: u64, x2: u64, p: u64) -> bool {
    let lhs = after.product() * BigUint::from(z2) * BigUint::from(x2 * x2);
    let rhs = before.product() * BigUint::from(z2 - p) * BigUint::from((x2 + 1) * (x2 + 1));
    lhs <= rhs
}

/// Fewer goods than agents: at most `m` bundles can be nonempty, so every
/// good goes to its own agent, as many as possible to an admirer.
fn solve_few_goods(inst: &Instance) -> Allocation {
    let adj: Vec<Vec<AgentId>> = (0..inst.m()).map(|g| inst.admirers(g).to_vec()).collect();
    let matched = bipartite_matching(&adj, inst.n());
    let mut used = vec![false; inst.n()];
    for a in matched.iter().flatten() {
        used[*a] = true;
    }
    let mut owner = vec![0; inst.m()];
    let mut free = (0..inst.n()).filter(|&a| !used[a]).collect::<Vec<_>>().into_iter();
    for g in 0..inst.m() {
        owner[g] = match matched[g] {
            Some(a) => a,
            None => free.next().expect("m < n leaves a free agent"),
        };
    }
    Allocation::from_owners(inst, owner).expect("valid")
}

/// Maximum-NSW allocation of `inst`.
pub fn solve(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport> {
    let mut report = SolveReport {
        alloc: initial_allocation(inst),
        key: NswKey::from_values2(&[]),
        conversions: Vec::new(),
        trace: Vec::new(),
        stats: SolveStats::default(),
        violations: Vec::new(),
        frozen: Vec::new(),
    };
    if inst.m() < inst.n() {
        report.alloc = solve_few_goods(inst);
        report.key = report.alloc.key();
        return Ok(report);
    }
    let p = inst.p();
    let n = inst.n();
    let bound = SolveStats::matching_bound(n);
    let mut cur_inst = inst.clone();
    let first = phase_one(&cur_inst, initial_allocation(inst), opts, &mut report.trace)?;
    report.frozen = first.frozen.clone();
    absorb(&mut report.stats, &first);
    if first.matching_solves > bound {
        report.violations.push(Violation {
            id: "matching-bound",
            detail: format!("{} matching solves > {bound}", first.matching_solves),
        });
    }
    let mut cur = first.alloc;
    let mut best = cur.clone();
    let mut best_key = best.key();
    let heavy_total = inst.heavy_goods().count();
    while cur.max_value() > cur.min_value_x() + 2 {
        if report.conversions.len() >= heavy_total {
            return Err(NswError::invariant("conversion-count", "more conversions than heavy goods"));
        }
        let before = cur.key();
        let (next_inst, mut b, conv) = convert_step(&cur_inst, &cur)?;
        let hg = HeavyGraph::new(&next_inst);
        let mut steps = Vec::new();
        let snapshot = b.clone();
        if reduce(&next_inst, &hg, &mut b, &mut steps)? > 0 {
            report.violations.push(Violation {
                id: "reduce-noop",
                detail: format!("range reduction changed B after conversion {:?}: {:?}", conv, steps),
            });
            b = snapshot;
        }
        log::debug!("conversion {:?}", conv);
        if opts.trace {
            report.trace.push(TraceEvent::Conversion(conv.clone()));
        }
        let c = phase_one(&next_inst, b, opts, &mut report.trace)?;
        absorb(&mut report.stats, &c);
        if c.matching_solves > bound {
            report.violations.push(Violation {
                id: "matching-bound",
                detail: format!("{} matching solves > {bound} after conversion {}", c.matching_solves, report.conversions.len() + 1),
            });
        }
        let after = c.alloc.key();
        if conv.x2 > 0 && before.is_positive() && after.is_positive() && !ratio_within_bound(&before, &after, conv.z2, conv.x2, p) {
            report.violations.push(Violation {
                id: "conversion-ratio",
                detail: format!("conversion {:?}: {} -> {}", conv, before, after),
            });
        }
        if after > before && !conversion_gain_bound_check(conv.z2, conv.x2, p) {
            report.violations.push(Violation {
                id: "conversion-z-bound",
                detail: format!("conversion {:?} improved although 2 z2 <= p x2", conv),
            });
        }
        if after > best_key {
            best = c.alloc.clone();
            best_key = after;
        }
        report.conversions.push(conv);
        report.stats.conversions += 1;
        cur = c.alloc;
        cur_inst = next_inst;
    }
    for v in &report.violations {
        log::warn!("{}: {}", v.id, v.detail);
    }
    best.check_consistency(inst)?;
    report.key = best_key;
    report.alloc = best;
    if !opts.trace {
        report.trace.clear();
    }
    Ok(report)
}

fn absorb(stats: &mut SolveStats, out: &PhaseOneOutcome) {
    stats.rule_steps += out.rule_steps;
    stats.band_improvements += out.band_improvements;
    stats.matching_solves += out.matching_solves;
    stats.max_matching_solves_per_phase = stats.max_matching_solves_per_phase.max(out.matching_solves);
    stats.phase_one_runs += 1;
    stats.pipeline_passes += out.passes;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_force, phase_one_brute_force, DEFAULT_BUDGET};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn intro(lights: usize) -> Instance {
        let m = 2 + lights;
        Instance::new(3, m, vec![(0..m).map(|g| g < 2).collect(); 2]).unwrap()
    }

    fn run(inst: &Instance) -> SolveReport {
        solve(inst, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn intro_profiles() {
        assert_eq!(run(&intro(2)).alloc.values2(), &[5, 5]);
        assert_eq!(run(&intro(3)).alloc.values2(), &[6, 6]);
    }

    #[test]
    fn heavy_as_light_example() {
        let inst = Instance::new(3, 2, vec![vec![true, true], vec![false, false]]).unwrap();
        let start = initial_allocation(&inst);
        assert_eq!(start.values2(), &[6, 0]);
        let r = run(&inst);
        assert_eq!(r.alloc.values2(), &[3, 2]);
        assert_eq!(r.conversions.len(), 1);
    }

    #[test]
    fn initial_allocation_examples() {
        let inst = Instance::all_light(3, 3, 5).unwrap();
        assert_eq!(initial_allocation(&inst).owners(), &[0, 1, 2, 0, 1]);
        let empty = Instance::all_light(3, 2, 0).unwrap();
        assert_eq!(initial_allocation(&empty).values2(), &[0, 0]);
    }

    #[test]
    fn no_heavy_goods_needs_no_conversion() {
        let inst = Instance::all_light(5, 3, 7).unwrap();
        let r = run(&inst);
        assert!(r.conversions.is_empty());
        assert_eq!(r.alloc.values2(), &[6, 4, 4]);
    }

    #[test]
    fn convert_step_guards_and_ties() {
        let inst = Instance::all_light(3, 2, 2).unwrap();
        let a = Allocation::from_owners(&inst, vec![0, 1]).unwrap();
        assert!(convert_step(&inst, &a).is_err());
        // two equally heavy bundles: the lower index donates
        let inst = Instance::new(3, 5, vec![vec![true, true, false, false, false], vec![false, false, true, true, false], vec![false; 5]]).unwrap();
        let a = Allocation::from_owners(&inst, vec![0, 0, 1, 1, 2]).unwrap();
        let (masked, b, conv) = convert_step(&inst, &a).unwrap();
        assert_eq!((conv.from, conv.good, conv.to), (0, 0, 2));
        assert!(!masked.is_heavy_good(0));
        assert_eq!(b.values2(), &[3, 6, 4]);
    }

    #[test]
    fn gain_bound_examples() {
        assert!(!conversion_gain_bound_check(6, 4, 3));
        assert!(conversion_gain_bound_check(7, 4, 3));
    }

    #[test]
    fn few_goods_use_a_matching() {
        // agents 0, 1 like good 0; agent 2 likes good 1; three agents, two goods
        let inst = Instance::new(5, 2, vec![vec![true, false], vec![true, false], vec![false, true]]).unwrap();
        let r = run(&inst);
        assert_eq!(r.key, brute_force(&inst, DEFAULT_BUDGET).unwrap().best_key);
        assert_eq!(r.key.zeros(), 1);
    }

    #[test]
    fn random_instances_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..150 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=7);
            let p = [3u64, 5, 7][rng.gen_range(0..3)];
            let density = [0.2, 0.5, 0.8][rng.gen_range(0..3)];
            let heavy = (0..n).map(|_| (0..m).map(|_| rng.gen_bool(density)).collect()).collect();
            let inst = Instance::new(p, m, heavy).unwrap();
            let r = run(&inst);
            let o = brute_force(&inst, DEFAULT_BUDGET).unwrap();
            assert_eq!(r.key, o.best_key, "{:?}: got {:?}", inst, r.alloc.values2());
            // a donor dropping below x after the move (z - s < x) lets range
            // reduction fire and breaks the ratio bound; nothing else may fail
            assert!(
                r.violations.iter().all(|v| v.id == "reduce-noop" || v.id == "conversion-ratio"),
                "{:?}",
                r.violations
            );
            if !r.violations.is_empty() {
                assert!(r.conversions.iter().any(|c| c.z2 < c.x2 + p), "{:?}", r.violations);
            }
            let mut trace = Vec::new();
            let ph = phase_one(&inst, initial_allocation(&inst), &SolveOptions::default(), &mut trace).unwrap();
            let po = phase_one_brute_force(&inst, DEFAULT_BUDGET).unwrap();
            assert_eq!(ph.alloc.key(), po.best_key, "phase one {:?}: got {:?}", inst, ph.alloc.values2());
        }
    }

    #[test]
    fn receiving_bundle_choice_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut tried = 0;
        for _ in 0..400 {
            let n = rng.gen_range(2..=4);
            let m = rng.gen_range(n..=8);
            let heavy = (0..n).map(|_| (0..m).map(|_| rng.gen_bool(0.6)).collect()).collect();
            let inst = Instance::new(3, m, heavy).unwrap();
            let mut trace = Vec::new();
            let a = phase_one(&inst, initial_allocation(&inst), &SolveOptions::default(), &mut trace).unwrap().alloc;
            let x2 = a.min_value_x();
            if a.max_value() <= x2 + 2 || x2 == 0 {
                continue;
            }
            let mins: Vec<AgentId> = (0..n).filter(|&i| a.value2(i) == x2).collect();
            if mins.len() < 2 {
                continue;
            }
            tried += 1;
            let keys: Vec<NswKey> = mins
                .iter()
                .map(|&to| {
                    let (mi, b, _) = convert_step_to(&inst, &a, to).unwrap();
                    phase_one(&mi, b, &SolveOptions::default(), &mut trace).unwrap().alloc.key()
                })
                .collect();
            assert!(keys.windows(2).all(|w| w[0] == w[1]), "{:?}", inst);
        }
        assert!(tried > 5);
    }

    #[test]
    fn trace_is_recorded_on_request() {
        let inst = intro(3);
        let r = solve(&inst, &SolveOptions { trace: true, ..Default::default() }).unwrap();
        assert!(r.trace.iter().any(|e| matches!(e, TraceEvent::Peel { .. })));
        assert!(run(&inst).trace.is_empty());
    }
}
