//! Exhaustive reference solver for small instances.
//!
//! Enumerates owner vectors only: a good owned by one of its admirers is
//! always counted heavy, which never hurts since `s > 1`.

use num_bigint::BigUint;

use crate::error::{NswError, Result};
use crate::model::{AgentId, Allocation, GoodId, Instance, NswKey};

pub const DEFAULT_BUDGET: u128 = 100_000_000;
pub const OPTIMA_CAP: usize = 1000;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub best_key: NswKey,
    /// Optimal allocations, at most [`OPTIMA_CAP`].
    pub optima: Vec<Allocation>,
    /// More optima existed than were kept.
    pub capped: bool,
    pub enumerated: u128,
}

/// Best allocation over all `n^m` owner vectors.
pub fn brute_force(inst: &Instance, budget: u128) -> Result<OracleResult> {
    let choices: Vec<Vec<AgentId>> = (0..inst.m()).map(|_| (0..inst.n()).collect()).collect();
    enumerate(inst, &choices, budget)
}

/// Best allocation in which every heavy good is held by an admirer.
pub fn phase_one_brute_force(inst: &Instance, budget: u128) -> Result<OracleResult> {
    let choices: Vec<Vec<AgentId>> = (0..inst.m())
        .map(|g| {
            if inst.is_heavy_good(g) {
                inst.admirers(g).to_vec()
            } else {
                (0..inst.n()).collect()
            }
        })
        .collect();
    enumerate(inst, &choices, budget)
}

/// Comparable key; the `u128` form is used when no product can overflow.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum FastKey {
    Small(std::cmp::Reverse<usize>, u128),
    Big(NswKey),
}

fn key_of(values: &[u64], small: bool) -> FastKey {
    if small {
        let mut zeros = 0;
        let mut prod: u128 = 1;
        for &v in values {
            if v == 0 {
                zeros += 1;
            } else {
                prod *= v as u128;
            }
        }
        FastKey::Small(std::cmp::Reverse(zeros), prod)
    } else {
        FastKey::Big(NswKey::from_values2(values))
    }
}

fn enumerate(inst: &Instance, choices: &[Vec<AgentId>], budget: u128) -> Result<OracleResult> {
    let n = inst.n();
    let m = inst.m();
    let mut required: u128 = 1;
    for c in choices {
        required = required.saturating_mul(c.len() as u128);
    }
    if required > budget {
        return Err(NswError::BudgetExceeded { required, budget });
    }
    if choices.iter().any(|c| c.is_empty()) {
        return Err(NswError::InvalidInstance("a good has no admissible owner".into()));
    }
    // every value is at most m * max(p, 2); check that the n-fold product fits
    let vmax = (m as f64) * (inst.p().max(2) as f64);
    let small = (n as f64) * vmax.max(1.0).log2() < 126.0;

    let gain: Vec<Vec<u64>> = (0..m)
        .map(|g| choices[g].iter().map(|&a| inst.value2(a, g)).collect())
        .collect();
    let mut pick = vec![0usize; m];
    let mut values = vec![0u64; n];
    for g in 0..m {
        values[choices[g][0]] += gain[g][0];
    }
    let mut best: Option<FastKey> = None;
    let mut optima: Vec<Vec<usize>> = Vec::new();
    let mut capped = false;
    let mut enumerated: u128 = 0;
    loop {
        enumerated += 1;
        let key = key_of(&values, small);
        match best.as_ref().map(|b| key.cmp(b)) {
            None | Some(std::cmp::Ordering::Greater) => {
                best = Some(key);
                optima.clear();
                optima.push(pick.clone());
                capped = false;
            }
            Some(std::cmp::Ordering::Equal) => {
                if optima.len() < OPTIMA_CAP {
                    optima.push(pick.clone());
                } else {
                    capped = true;
                }
            }
            Some(std::cmp::Ordering::Less) => {}
        }
        // odometer step
        let mut g = 0;
        loop {
            if g == m {
                return finish(inst, choices, optima, capped, enumerated);
            }
            values[choices[g][pick[g]]] -= gain[g][pick[g]];
            pick[g] += 1;
            if pick[g] == choices[g].len() {
                pick[g] = 0;
                values[choices[g][0]] += gain[g][0];
                g += 1;
            } else {
                values[choices[g][pick[g]]] += gain[g][pick[g]];
                break;
            }
        }
    }
}

fn finish(
    inst: &Instance,
    choices: &[Vec<AgentId>],
    optima: Vec<Vec<usize>>,
    capped: bool,
    enumerated: u128,
) -> Result<OracleResult> {
    let optima: Vec<Allocation> = optima
        .into_iter()
        .map(|pick| {
            let owner = pick.iter().enumerate().map(|(g, &t)| choices[g][t]).collect();
            Allocation::from_owners(inst, owner)
        })
        .collect::<Result<_>>()?;
    Ok(OracleResult {
        best_key: optima[0].key(),
        optima,
        capped,
        enumerated,
    })
}

/// Heavy assignment edges `(agent, good)` of an allocation.
fn heavy_edges(alloc: &Allocation) -> Vec<(AgentId, GoodId)> {
    (0..alloc.m())
        .filter(|&g| alloc.is_as_heavy(g))
        .map(|g| (alloc.owner(g), g))
        .collect()
}

/// The optimum among `result.optima` whose heavy assignment differs least
/// from `alloc`'s (size of the symmetric difference). Debug helper; needs
/// an uncapped optima list to be meaningful.
pub fn closest_optimum<'a>(alloc: &Allocation, result: &'a OracleResult) -> Option<(&'a Allocation, usize)> {
    let mine = heavy_edges(alloc);
    result
        .optima
        .iter()
        .map(|o| {
            let theirs = heavy_edges(o);
            let common = mine.iter().filter(|e| theirs.contains(e)).count();
            (o, mine.len() + theirs.len() - 2 * common)
        })
        .min_by_key(|&(_, d)| d)
}

/// `Π values2` of the best allocation, as a decimal-friendly integer.
pub fn best_product(result: &OracleResult) -> BigUint {
    result.best_key.product()
}
