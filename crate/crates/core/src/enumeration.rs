//! Stateless enumeration of reference assignments.
//!
//! The admissible values of a role are the subsets of the target universe
//! whose size lies in `[lb, ub]`. They are ordered first by size, then
//! lexicographically by the universe order, and addressed by rank through the
//! combinatorial number system, so no enumeration state is kept anywhere.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::Oid;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RankError {
    #[error("rank {rank} is outside the {size} subsets of size {m}")]
    SubsetRankOutOfRange { rank: BigUint, m: usize, size: BigUint },
    #[error("cursor {curr} is outside a domain of {size} assignments")]
    CursorOutOfRange { curr: BigUint, size: BigUint },
    #[error("set element {0} is not in the universe list")]
    NotInUniverse(Oid),
    #[error("the assignment domain is empty")]
    EmptyDomain,
}

/// `C(n, k)` with exact arithmetic.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// The admissible assignments of one role over an ordered universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedDomain {
    pub universe: Vec<Oid>,
    pub lb: usize,
    pub ub: usize,
}

impl RankedDomain {
    /// Builds a domain, clamping `ub` to the universe size.
    pub fn new(universe: Vec<Oid>, lb: usize, ub: usize) -> Self {
        let ub = ub.min(universe.len());
        RankedDomain { universe, lb, ub }
    }

    pub fn size(&self) -> BigUint {
        domain_size(self)
    }
}

/// Number of subsets with size in `[lb, min(ub, |P|)]`.
pub fn domain_size(d: &RankedDomain) -> BigUint {
    let n = d.universe.len();
    let top = d.ub.min(n);
    if d.lb > top {
        return BigUint::zero();
    }
    (d.lb..=top).map(|m| binomial(n, m)).sum()
}

/// The `j`-th `m`-subset of `universe` in lexicographic order.
pub fn unrank(universe: &[Oid], m: usize, j: &BigUint) -> Result<BTreeSet<Oid>, RankError> {
    let n = universe.len();
    let size = binomial(n, m);
    if j >= &size {
        return Err(RankError::SubsetRankOutOfRange {
            rank: j.clone(),
            m,
            size,
        });
    }
    let mut rank = j.clone();
    let mut out = BTreeSet::new();
    let mut next = 0;
    for slot in 0..m {
        let remaining = m - slot - 1;
        loop {
            // Subsets whose next element is universe[next].
            let count = binomial(n - next - 1, remaining);
            if rank < count {
                out.insert(universe[next].clone());
                next += 1;
                break;
            }
            rank -= count;
            next += 1;
        }
    }
    Ok(out)
}

/// Inverse of [`unrank`]: the size and lexicographic rank of `set`.
pub fn rank(universe: &[Oid], set: &BTreeSet<Oid>) -> Result<(usize, BigUint), RankError> {
    let n = universe.len();
    let mut positions = Vec::with_capacity(set.len());
    for o in set {
        let pos = universe
            .iter()
            .position(|u| u == o)
            .ok_or_else(|| RankError::NotInUniverse(o.clone()))?;
        positions.push(pos);
    }
    positions.sort_unstable();
    let m = positions.len();
    let mut acc = BigUint::zero();
    let mut start = 0;
    for (slot, &pos) in positions.iter().enumerate() {
        for skipped in start..pos {
            acc += binomial(n - skipped - 1, m - slot - 1);
        }
        start = pos + 1;
    }
    Ok((m, acc))
}

/// The assignment at cursor `curr`: whole size tiers are skipped before
/// unranking within the tier that contains the cursor.
pub fn ranked_from_to(d: &RankedDomain, curr: &BigUint) -> Result<BTreeSet<Oid>, RankError> {
    let n = d.universe.len();
    let top = d.ub.min(n);
    let mut offset = curr.clone();
    for m in d.lb..=top {
        let tier = binomial(n, m);
        if offset < tier {
            return unrank(&d.universe, m, &offset);
        }
        offset -= tier;
    }
    let size = domain_size(d);
    if size.is_zero() {
        return Err(RankError::EmptyDomain);
    }
    Err(RankError::CursorOutOfRange {
        curr: curr.clone(),
        size,
    })
}

/// Inverse of [`ranked_from_to`].
pub fn cursor_of(d: &RankedDomain, set: &BTreeSet<Oid>) -> Result<BigUint, RankError> {
    let (m, j) = rank(&d.universe, set)?;
    let top = d.ub.min(d.universe.len());
    if m < d.lb || m > top {
        return Err(RankError::CursorOutOfRange {
            curr: j,
            size: domain_size(d),
        });
    }
    let before: BigUint = (d.lb..m).map(|k| binomial(d.universe.len(), k)).sum();
    Ok(before + j)
}
