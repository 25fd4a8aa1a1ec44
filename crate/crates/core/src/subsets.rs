//! Size-k column subsets: counting, colexicographic ranking and capped
//! uniform sampling.
//!
//! Subsets are ordered colexicographically: a sorted subset `c_0 < ... < c_{k-1}`
//! has rank `sum_i C(c_i, i + 1)`. For `K = 3, k = 2` the order is
//! `{0,1}, {0,2}, {1,2}`.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::rng;

/// A sorted set of `k` column positions out of `K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetModel {
    pub k: usize,
    pub members: Vec<usize>,
}

/// The subsets used for one subset size, either all of them or a uniform
/// sample of `cap` distinct ones, listed in rank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPlan {
    pub total_regressors: usize,
    pub k: usize,
    #[serde(with = "decimal")]
    pub total: BigUint,
    pub selected: Vec<SubsetModel>,
    pub capped: bool,
    pub seed: u64,
}

impl SubsetPlan {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10)
            .ok_or_else(|| D::Error::custom("not a decimal integer"))
    }
}

/// Exact binomial coefficient `C(K, k)`.
pub fn count_combinations(total: usize, k: usize) -> Result<BigUint> {
    if k > total {
        return Err(invalid(format!("cannot choose {k} of {total}")));
    }
    Ok(binom(total, k))
}

fn binom(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // Each partial product is itself a binomial coefficient, so the division is exact.
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Colexicographic rank of a sorted subset.
pub fn rank_combination(total: usize, members: &[usize]) -> Result<BigUint> {
    validate_members(total, members)?;
    Ok(members
        .iter()
        .enumerate()
        .map(|(i, &c)| binom(c, i + 1))
        .sum())
}

/// The subset with colexicographic rank `rank`.
pub fn unrank_combination(total: usize, k: usize, rank: &BigUint) -> Result<SubsetModel> {
    let count = count_combinations(total, k)?;
    if *rank >= count {
        return Err(invalid(format!(
            "rank {rank} out of range for C({total}, {k}) = {count}"
        )));
    }
    let mut r = rank.clone();
    let mut members = vec![0; k];
    let mut upper = total;
    for i in (0..k).rev() {
        // Largest c < upper with C(c, i + 1) <= r.
        let mut c = upper - 1;
        let mut b = binom(c, i + 1);
        while b > r {
            c -= 1;
            b = binom(c, i + 1);
        }
        r -= b;
        members[i] = c;
        upper = c;
    }
    Ok(SubsetModel { k, members })
}

fn validate_members(total: usize, members: &[usize]) -> Result<()> {
    if members.iter().any(|&c| c >= total) {
        return Err(invalid(format!(
            "subset {members:?} has a member outside 0..{total}"
        )));
    }
    if members.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!(
            "subset {members:?} is not strictly increasing"
        )));
    }
    Ok(())
}

/// Uniform integer in `[0, bound)` by rejection on `bits(bound)` random bits.
fn uniform_below(bound: &BigUint, rng: &mut impl RngCore) -> BigUint {
    let bits = bound.bits();
    let nbytes = bits.div_ceil(8) as usize;
    let excess = (nbytes as u64) * 8 - bits;
    let mut buf = vec![0u8; nbytes];
    loop {
        rng.fill_bytes(&mut buf);
        // Little-endian: the last byte holds the most significant bits.
        if let Some(top) = buf.last_mut() {
            *top &= 0xFF >> excess;
        }
        let v = BigUint::from_bytes_le(&buf);
        if v < *bound {
            return v;
        }
    }
}

/// All size-`k` subsets when there are at most `cap` of them, otherwise `cap`
/// distinct subsets drawn uniformly without replacement. Either way the
/// result is sorted by rank and fully determined by `seed`.
pub fn sample_subsets(total: usize, k: usize, cap: usize, seed: u64) -> Result<SubsetPlan> {
    if k == 0 || k > total {
        return Err(invalid(format!("subset size {k} outside 1..={total}")));
    }
    if cap == 0 {
        return Err(invalid("subset cap must be at least 1"));
    }
    let count = binom(total, k);
    let capped = count > BigUint::from(cap);
    let ranks: Vec<BigUint> = if capped {
        let mut rng = rng(seed);
        let mut chosen = BTreeSet::new();
        while chosen.len() < cap {
            chosen.insert(uniform_below(&count, &mut rng));
        }
        chosen.into_iter().collect()
    } else {
        let m = count.to_usize().expect("count bounded by cap");
        (0..m).map(BigUint::from).collect()
    };
    let selected = ranks
        .iter()
        .map(|r| unrank_combination(total, k, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubsetPlan {
        total_regressors: total,
        k,
        total: count,
        selected,
        capped,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(count_combinations(3, 2).unwrap(), BigUint::from(3u32));
        assert_eq!(count_combinations(15, 7).unwrap(), BigUint::from(6435u32));
        assert_eq!(count_combinations(9, 0).unwrap(), BigUint::one());
        assert_eq!(count_combinations(9, 9).unwrap(), BigUint::one());
        assert!(count_combinations(2, 3).is_err());
        assert_eq!(
            count_combinations(200, 100).unwrap().to_str_radix(10),
            "90548514656103281165404177077484163874504589675413336841320"
        );
    }

    #[test]
    fn colex_order_for_three_choose_two() {
        let all: Vec<Vec<usize>> = (0..3u32)
            .map(|r| unrank_combination(3, 2, &BigUint::from(r)).unwrap().members)
            .collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert!(unrank_combination(3, 2, &BigUint::from(3u32)).is_err());
    }

    #[test]
    fn uniform_below_stays_in_range() {
        let mut r = rng(3);
        let bound = BigUint::from(257u32);
        for _ in 0..2000 {
            assert!(uniform_below(&bound, &mut r) < bound);
        }
        assert_eq!(uniform_below(&BigUint::one(), &mut r), BigUint::zero());
    }

    #[test]
    fn plan_serializes_total_as_decimal() {
        let plan = sample_subsets(40, 20, 3, 9).unwrap();
        let json = serde_json::to_string(&plan).unwrap();
        assert!(json.contains("\"137846528820\""));
        let back: SubsetPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, plan);
    }
}
