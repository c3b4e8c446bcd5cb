//! Instances, allocations and the exact NSW comparison key.
//!
//! Every bundle value is stored in half-units (twice the real value), so a
//! light good contributes `2` and a good counted at the heavy value `s = p/2`
//! contributes the odd integer `p`. All comparisons are exact.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{NswError, Result};

pub type AgentId = usize;
pub type GoodId = usize;

/// A two-value instance: `v_ig = p/2` when `heavy[i][g]`, otherwise `1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    p: u64,
    m: usize,
    heavy: Vec<Vec<bool>>,
    admirers: Vec<Vec<AgentId>>,
}

impl Instance {
    pub fn new(p: u64, m: usize, heavy: Vec<Vec<bool>>) -> Result<Self> {
        if p < 3 || p % 2 == 0 {
            return Err(NswError::InvalidInstance(format!(
                "p must be odd and at least 3, got {p}"
            )));
        }
        if heavy.is_empty() {
            return Err(NswError::InvalidInstance("need at least one agent".into()));
        }
        for (i, row) in heavy.iter().enumerate() {
            if row.len() != m {
                return Err(NswError::InvalidInstance(format!(
                    "heavy row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
        }
        let mut admirers = vec![Vec::new(); m];
        for (i, row) in heavy.iter().enumerate() {
            for (g, &h) in row.iter().enumerate() {
                if h {
                    admirers[g].push(i);
                }
            }
        }
        Ok(Instance {
            p,
            m,
            heavy,
            admirers,
        })
    }

    /// Instance where every agent regards every good as light.
    pub fn all_light(p: u64, n: usize, m: usize) -> Result<Self> {
        Self::new(p, m, vec![vec![false; m]; n])
    }

    pub fn n(&self) -> usize {
        self.heavy.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// `⌈s⌉` in goods.
    pub fn ceil_s(&self) -> usize {
        ((self.p + 1) / 2) as usize
    }

    /// `⌊s⌋` in goods.
    pub fn floor_s(&self) -> usize {
        ((self.p - 1) / 2) as usize
    }

    pub fn likes(&self, i: AgentId, g: GoodId) -> bool {
        self.heavy[i][g]
    }

    pub fn heavy_row(&self, i: AgentId) -> &[bool] {
        &self.heavy[i]
    }

    pub fn heavy_matrix(&self) -> &[Vec<bool>] {
        &self.heavy
    }

    /// Agents valuing `g` at `s`, ascending.
    pub fn admirers(&self, g: GoodId) -> &[AgentId] {
        &self.admirers[g]
    }

    pub fn is_heavy_good(&self, g: GoodId) -> bool {
        !self.admirers[g].is_empty()
    }

    pub fn heavy_goods(&self) -> impl Iterator<Item = GoodId> + '_ {
        (0..self.m).filter(|&g| self.is_heavy_good(g))
    }

    /// Copy of the instance with the heavy edges of `goods` removed, so that
    /// they become light for everybody.
    pub fn with_light(&self, goods: &[GoodId]) -> Instance {
        let mut heavy = self.heavy.clone();
        for &g in goods {
            for row in heavy.iter_mut() {
                row[g] = false;
            }
        }
        Instance::new(self.p, self.m, heavy).expect("masking keeps the instance valid")
    }

    /// Subinstance on the given agents and goods, re-indexed in the order given.
    pub fn restrict(&self, agents: &[AgentId], goods: &[GoodId]) -> Instance {
        let heavy = agents
            .iter()
            .map(|&i| goods.iter().map(|&g| self.heavy[i][g]).collect())
            .collect();
        Instance::new(self.p, goods.len(), heavy).expect("restriction keeps the instance valid")
    }

    /// Half-unit value of good `g` for agent `i`.
    pub fn value2(&self, i: AgentId, g: GoodId) -> u64 {
        if self.heavy[i][g] {
            self.p
        } else {
            2
        }
    }
}

/// An assignment of every good to one agent, with the per-good typing
/// (counted at `s` or at `1`) and incrementally maintained bundle values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    p: u64,
    owner: Vec<AgentId>,
    as_heavy: Vec<bool>,
    heavies: Vec<usize>,
    lights: Vec<usize>,
    values2: Vec<u64>,
}

impl Allocation {
    /// Builds an allocation and validates the typing against `inst`.
    pub fn new(inst: &Instance, owner: Vec<AgentId>, as_heavy: Vec<bool>) -> Result<Self> {
        if owner.len() != inst.m() || as_heavy.len() != inst.m() {
            return Err(NswError::InvalidAllocation(format!(
                "expected {} goods, got {} owners and {} typings",
                inst.m(),
                owner.len(),
                as_heavy.len()
            )));
        }
        if let Some((g, &i)) = owner.iter().enumerate().find(|(_, &i)| i >= inst.n()) {
            return Err(NswError::InvalidAllocation(format!(
                "good {g} owned by unknown agent {i}"
            )));
        }
        let values2 = compute_values(inst, &owner, &as_heavy)?;
        let mut heavies = vec![0; inst.n()];
        let mut lights = vec![0; inst.n()];
        for (g, &i) in owner.iter().enumerate() {
            if as_heavy[g] {
                heavies[i] += 1;
            } else {
                lights[i] += 1;
            }
        }
        Ok(Allocation {
            p: inst.p(),
            owner,
            as_heavy,
            heavies,
            lights,
            values2,
        })
    }

    /// Every good counted at its best value for its owner.
    pub fn from_owners(inst: &Instance, owner: Vec<AgentId>) -> Result<Self> {
        if let Some(&i) = owner.iter().find(|&&i| i >= inst.n()) {
            return Err(NswError::InvalidAllocation(format!("unknown agent {i}")));
        }
        let as_heavy = owner
            .iter()
            .enumerate()
            .map(|(g, &i)| inst.likes(i, g))
            .collect();
        Self::new(inst, owner, as_heavy)
    }

    pub fn n(&self) -> usize {
        self.values2.len()
    }

    pub fn m(&self) -> usize {
        self.owner.len()
    }

    pub fn owner(&self, g: GoodId) -> AgentId {
        self.owner[g]
    }

    pub fn owners(&self) -> &[AgentId] {
        &self.owner
    }

    pub fn is_as_heavy(&self, g: GoodId) -> bool {
        self.as_heavy[g]
    }

    pub fn as_heavy_flags(&self) -> &[bool] {
        &self.as_heavy
    }

    pub fn values2(&self) -> &[u64] {
        &self.values2
    }

    pub fn value2(&self, i: AgentId) -> u64 {
        self.values2[i]
    }

    /// Number of goods `i` holds at the heavy value.
    pub fn heavy_count(&self, i: AgentId) -> usize {
        self.heavies[i]
    }

    /// Number of goods `i` holds at value 1.
    pub fn light_count(&self, i: AgentId) -> usize {
        self.lights[i]
    }

    pub fn is_heavy_only(&self, i: AgentId) -> bool {
        self.lights[i] == 0
    }

    /// Goods of `i` counted at value 1, ascending.
    pub fn light_goods_of(&self, i: AgentId) -> Vec<GoodId> {
        (0..self.m())
            .filter(|&g| self.owner[g] == i && !self.as_heavy[g])
            .collect()
    }

    pub fn bundle(&self, i: AgentId) -> Vec<GoodId> {
        (0..self.m()).filter(|&g| self.owner[g] == i).collect()
    }

    /// Reassigns `g` to `to`, counted heavy iff `as_heavy`.
    pub fn move_good(&mut self, inst: &Instance, g: GoodId, to: AgentId, as_heavy: bool) -> Result<()> {
        if as_heavy && !inst.likes(to, g) {
            return Err(NswError::InvalidAllocation(format!(
                "agent {to} does not value good {g} as heavy"
            )));
        }
        let from = self.owner[g];
        if self.as_heavy[g] {
            self.heavies[from] -= 1;
            self.values2[from] -= self.p;
        } else {
            self.lights[from] -= 1;
            self.values2[from] -= 2;
        }
        self.owner[g] = to;
        self.as_heavy[g] = as_heavy;
        if as_heavy {
            self.heavies[to] += 1;
            self.values2[to] += self.p;
        } else {
            self.lights[to] += 1;
            self.values2[to] += 2;
        }
        Ok(())
    }

    /// Moves `count` lowest-index light goods of `from` to `to`.
    pub fn move_lights(&mut self, inst: &Instance, from: AgentId, to: AgentId, count: usize) -> Result<()> {
        let goods = self.light_goods_of(from);
        if goods.len() < count {
            return Err(NswError::invariant(
                "light-supply",
                format!("agent {from} holds {} light goods, {count} requested", goods.len()),
            ));
        }
        for &g in &goods[..count] {
            self.move_good(inst, g, to, false)?;
        }
        Ok(())
    }

    /// Recomputes the bundle values from scratch and compares them with the
    /// incrementally maintained ones.
    pub fn check_consistency(&self, inst: &Instance) -> Result<()> {
        let fresh = compute_values(inst, &self.owner, &self.as_heavy)?;
        if fresh != self.values2 {
            return Err(NswError::invariant(
                "values-consistency",
                format!("maintained {:?} != recomputed {:?}", self.values2, fresh),
            ));
        }
        Ok(())
    }

    pub fn key(&self) -> NswKey {
        NswKey::from_values2(&self.values2)
    }

    pub fn min_value_x(&self) -> u64 {
        min_value_x(&self.values2)
    }

    pub fn max_value(&self) -> u64 {
        self.values2.iter().copied().max().unwrap_or(0)
    }
}

/// Recomputes half-unit bundle values.
pub fn compute_values(inst: &Instance, owner: &[AgentId], as_heavy: &[bool]) -> Result<Vec<u64>> {
    let mut values = vec![0u64; inst.n()];
    for (g, (&i, &h)) in owner.iter().zip(as_heavy).enumerate() {
        if h && !inst.likes(i, g) {
            return Err(NswError::InvalidAllocation(format!(
                "good {g} typed heavy but agent {i} values it at 1"
            )));
        }
        values[i] += if h { inst.p() } else { 2 };
    }
    Ok(values)
}

/// Minimum bundle value `x` in half-units.
pub fn min_value_x(values2: &[u64]) -> u64 {
    values2.iter().copied().min().unwrap_or(0)
}

/// Position of a bundle value relative to the minimum `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    Below,
    Zero,
    Half,
    One,
    Above,
}

pub fn band_of(values2: &[u64], x2: u64, i: AgentId) -> Band {
    let v = values2[i];
    if v < x2 {
        return Band::Below;
    }
    match v - x2 {
        0 => Band::Zero,
        1 => Band::Half,
        2 => Band::One,
        _ => Band::Above,
    }
}

/// Exact comparison key for Nash social welfare.
///
/// Ordered by fewer empty bundles first, then by the product of the nonzero
/// half-unit values. With no empty bundles this is the product of all values,
/// which orders allocations of a fixed agent set exactly like NSW.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NswKey {
    zeros: usize,
    nonzero_product: BigUint,
}

impl NswKey {
    pub fn from_values2(values2: &[u64]) -> Self {
        let mut zeros = 0;
        let mut prod = BigUint::one();
        for &v in values2 {
            if v == 0 {
                zeros += 1;
            } else {
                prod *= v;
            }
        }
        NswKey {
            zeros,
            nonzero_product: prod,
        }
    }

    pub fn zeros(&self) -> usize {
        self.zeros
    }

    /// `Π values2`, zero when some bundle is empty.
    pub fn product(&self) -> BigUint {
        if self.zeros > 0 {
            BigUint::zero()
        } else {
            self.nonzero_product.clone()
        }
    }

    pub fn nonzero_product(&self) -> &BigUint {
        &self.nonzero_product
    }

    pub fn is_positive(&self) -> bool {
        self.zeros == 0
    }

    /// `log10` of the geometric mean of the real values; reporting only.
    pub fn nsw_log10(values2: &[u64]) -> Option<f64> {
        if values2.is_empty() || values2.contains(&0) {
            return None;
        }
        let sum: f64 = values2.iter().map(|&v| (v as f64 / 2.0).log10()).sum();
        Some(sum / values2.len() as f64)
    }
}

impl Ord for NswKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .zeros
            .cmp(&self.zeros)
            .then_with(|| self.nonzero_product.cmp(&other.nonzero_product))
    }
}

impl PartialOrd for NswKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NswKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zeros == 0 {
            write!(f, "{}", self.nonzero_product)
        } else {
            write!(f, "0 ({} empty, rest {})", self.zeros, self.nonzero_product)
        }
    }
}

pub fn nsw_compare(a: &NswKey, b: &NswKey) -> Ordering {
    a.cmp(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_agents_identical() -> Instance {
        // goods 0,1 heavy for both agents, goods 2.. light
        Instance::new(3, 4, vec![vec![true, true, false, false]; 2]).unwrap()
    }

    #[test]
    fn rejects_bad_p() {
        assert!(Instance::new(4, 0, vec![vec![]]).is_err());
        assert!(Instance::new(1, 0, vec![vec![]]).is_err());
        assert!(Instance::new(3, 0, vec![]).is_err());
        assert!(Instance::new(3, 2, vec![vec![true]]).is_err());
    }

    #[test]
    fn heavy_light_classification() {
        let inst = Instance::new(3, 3, vec![vec![true, false, false], vec![false, false, true]]).unwrap();
        assert!(inst.is_heavy_good(0));
        assert!(!inst.is_heavy_good(1));
        assert!(inst.is_heavy_good(2));
        assert_eq!(inst.ceil_s(), 2);
        assert_eq!(inst.floor_s(), 1);
    }

    #[test]
    fn compute_values_examples() {
        let inst = two_agents_identical();
        // agent 0: one heavy-as-heavy + one light -> 5/2
        let a = Allocation::new(&inst, vec![0, 1, 0, 1], vec![true, true, false, false]).unwrap();
        assert_eq!(a.values2(), &[5, 5]);
        // agent 0: two heavies -> 3; agent 1: two lights -> 2
        let a = Allocation::new(&inst, vec![0, 0, 1, 1], vec![true, true, false, false]).unwrap();
        assert_eq!(a.values2(), &[6, 4]);
        // empty bundle
        let a = Allocation::new(&inst, vec![0, 0, 0, 0], vec![true, true, false, false]).unwrap();
        assert_eq!(a.value2(1), 0);
    }

    #[test]
    fn compute_values_rejects_bad_typing() {
        let inst = two_agents_identical();
        let err = Allocation::new(&inst, vec![0, 0, 0, 0], vec![true, true, true, false]).unwrap_err();
        assert!(matches!(err, NswError::InvalidAllocation(_)));
    }

    #[test]
    fn nsw_compare_examples() {
        let k = |v: &[u64]| NswKey::from_values2(v);
        assert_eq!(nsw_compare(&k(&[5, 5]), &k(&[4, 6])), Ordering::Greater);
        assert_eq!(nsw_compare(&k(&[6, 6]), &k(&[5, 7])), Ordering::Greater);
        assert_eq!(nsw_compare(&k(&[0, 10]), &k(&[1, 1])), Ordering::Less);
        assert_eq!(nsw_compare(&k(&[0, 0, 9]), &k(&[0, 1, 1])), Ordering::Less);
        assert_eq!(nsw_compare(&k(&[0, 3, 3]), &k(&[0, 2, 4])), Ordering::Greater);
        assert_eq!(k(&[0, 10]).product(), BigUint::zero());
    }

    #[test]
    fn min_and_band() {
        assert_eq!(min_value_x(&[4, 5, 6]), 4);
        assert_eq!(min_value_x(&[0, 3]), 0);
        assert_eq!(min_value_x(&[7]), 7);
        assert_eq!(band_of(&[4, 5], 4, 1), Band::Half);
        assert_eq!(band_of(&[4, 6], 4, 1), Band::One);
        assert_eq!(band_of(&[4, 9], 4, 1), Band::Above);
        assert_eq!(band_of(&[4, 9], 4, 0), Band::Zero);
        assert_eq!(band_of(&[3, 9], 4, 0), Band::Below);
    }

    #[test]
    fn incremental_values_match_recompute_under_random_edits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..5);
            let m = rng.gen_range(0..8);
            let p = [3, 5, 7][rng.gen_range(0..3)];
            let heavy = (0..n).map(|_| (0..m).map(|_| rng.gen_bool(0.5)).collect()).collect();
            let inst = Instance::new(p, m, heavy).unwrap();
            let owners = (0..m).map(|_| rng.gen_range(0..n)).collect();
            let mut a = Allocation::from_owners(&inst, owners).unwrap();
            if m == 0 {
                continue;
            }
            for _ in 0..50 {
                let g = rng.gen_range(0..m);
                let to = rng.gen_range(0..n);
                let h = inst.likes(to, g) && rng.gen_bool(0.7);
                a.move_good(&inst, g, to, h).unwrap();
                a.check_consistency(&inst).unwrap();
            }
        }
    }

    proptest! {
        #[test]
        fn compare_is_a_total_order(
            a in proptest::collection::vec(0u64..12, 3),
            b in proptest::collection::vec(0u64..12, 3),
            c in proptest::collection::vec(0u64..12, 3),
        ) {
            let (ka, kb, kc) = (NswKey::from_values2(&a), NswKey::from_values2(&b), NswKey::from_values2(&c));
            prop_assert_eq!(ka.cmp(&kb), kb.cmp(&ka).reverse());
            if ka <= kb && kb <= kc {
                prop_assert!(ka <= kc);
            }
            // scaling all values by a common factor keeps the order
            let sa: Vec<u64> = a.iter().map(|v| v * 3).collect();
            let sb: Vec<u64> = b.iter().map(|v| v * 3).collect();
            prop_assert_eq!(NswKey::from_values2(&sa).cmp(&NswKey::from_values2(&sb)), ka.cmp(&kb));
        }
    }
}
