//! Which characters to put in the hints at all.
//!
//! Encoding a kept set `S` costs, per character and in units of the
//! `2L + E` objective,
//!
//! ```text
//! cost(S) = 2 * (1/8) * sum_{i in S} p(i) * log2(p(S) / p(i)) + 1 - p(S)
//! ```
//!
//! i.e. the expected hint bytes (doubled) plus the chance of an error. The
//! minimizer is always a prefix of the symbols sorted by probability: keep
//! the `k` most likely symbols, for the largest `k` whose `k`-th symbol is
//! at least `alpha` times as likely as the `k - 1` before it combined. The
//! threshold `alpha ~ 0.1854` is the positive root of
//! `(1 + x)^(1 + x) = (16 x)^x`.

use crate::text_model::{Distribution, TieOrder};
use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Largest support [`brute_force_kept`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorParams {
    alpha: f64,
    tolerance: f64,
}

impl SelectorParams {
    pub fn new(tolerance: f64) -> Self {
        Self {
            alpha: solve_alpha(tolerance),
            tolerance,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

impl Default for SelectorParams {
    fn default() -> Self {
        Self::new(DEFAULT_TOLERANCE)
    }
}

/// `4 f(x)`: `(1+x) log2(1+x) - x log2(x) - 4x`.
fn scaled_marginal(x: f64) -> f64 {
    (1.0 + x) * (1.0 + x).log2() - x * x.log2() - 4.0 * x
}

/// Root of `(1+x)^(1+x) = (16x)^x` in `(0, 1)`, by bisection on the log form.
pub fn solve_alpha(tol: f64) -> f64 {
    let (mut lo, mut hi) = (1e-9, 1.0);
    assert!(
        scaled_marginal(lo) > 0.0 && scaled_marginal(hi) < 0.0,
        "alpha bracket lost its sign change"
    );
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return mid;
        }
        if scaled_marginal(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Change in cost per unit of kept mass when a symbol `x` times as likely as
/// the current kept set joins it:
/// `f(x) = ((1+x) log2(1+x) - x log2(x)) / 4 - x`.
pub fn marginal_f(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(x));
    }
    Ok(0.25 * ((1.0 + x) * (1.0 + x).log2() - x * x.log2()) - x)
}

/// Expected `2L + E` contribution of one character when `members` are kept.
pub fn subset_cost(dist: &Distribution, members: &[u32]) -> Result<f64> {
    let mut set = members.to_vec();
    set.sort_unstable();
    set.dedup();
    if let Some(&id) = set.iter().find(|&&id| !(dist.p(id) > 0.0)) {
        return Err(Error::ZeroProbabilityMember(id));
    }
    let mass: f64 = set.iter().map(|&id| dist.p(id)).sum();
    let bits: f64 = set
        .iter()
        .map(|&id| {
            let p = dist.p(id);
            p * (mass / p).log2()
        })
        .sum();
    Ok(2.0 * bits / 8.0 + 1.0 - mass)
}

/// Symbols chosen for the hints, most likely first.
#[derive(Debug, Clone, PartialEq)]
pub struct KeptSet {
    members: Vec<u32>,
    renorm: Distribution,
    mass: f64,
}

impl KeptSet {
    /// `members` must already be in coding order.
    pub fn from_members(dist: &Distribution, members: Vec<u32>) -> Self {
        let mass: f64 = members.iter().map(|&id| dist.p(id)).sum();
        let renorm = if mass > 0.0 {
            members.iter().map(|&id| dist.p(id) / mass).collect()
        } else {
            vec![1.0 / members.len() as f64; members.len()]
        };
        Self {
            members,
            renorm: Distribution::from_vec_unchecked(renorm),
            mass,
        }
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    /// Coding distribution, indexed by position in [`Self::members`].
    pub fn renorm(&self) -> &Distribution {
        &self.renorm
    }

    /// `p(S)`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.members.contains(&id)
    }

    pub fn position(&self, id: u32) -> Option<usize> {
        self.members.iter().position(|&m| m == id)
    }
}

/// Positive-probability symbols by descending probability, ties by `ties`.
pub fn sorted_support(dist: &Distribution, ties: &TieOrder) -> Vec<u32> {
    let mut ids: Vec<u32> = dist.support().collect();
    ids.sort_by(|&a, &b| {
        dist.p(b)
            .total_cmp(&dist.p(a))
            .then(ties.rank(a).cmp(&ties.rank(b)))
    });
    ids
}

/// Kept set for `dist`, breaking probability ties by ascending id.
pub fn select_kept(dist: &Distribution, params: &SelectorParams) -> KeptSet {
    select_kept_with(dist, params, &TieOrder::by_id(dist.len()))
}

/// Kept set for `dist`, breaking probability ties with `ties`.
pub fn select_kept_with(dist: &Distribution, params: &SelectorParams, ties: &TieOrder) -> KeptSet {
    let sorted = sorted_support(dist, ties);
    let mut keep = 0;
    let mut before = 0.0;
    for (i, &id) in sorted.iter().enumerate() {
        let p = dist.p(id);
        if p >= params.alpha * before {
            keep = i + 1;
        }
        before += p;
    }
    let mut members = sorted;
    members.truncate(keep);
    KeptSet::from_members(dist, members)
}

/// Exhaustive minimizer of [`subset_cost`].
///
/// Among subsets whose cost is within `1e-12` of the minimum, prefers the
/// longest probability-sorted prefix.
pub fn brute_force_kept(dist: &Distribution) -> Result<KeptSet> {
    let sorted = sorted_support(dist, &TieOrder::by_id(dist.len()));
    let n = sorted.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SupportTooLarge(n));
    }

    let subset = |mask: u32| -> Vec<u32> {
        (0..n)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| sorted[b])
            .collect()
    };
    let costs: Vec<f64> = (0..1u32 << n)
        .map(|mask| subset_cost(dist, &subset(mask)))
        .collect::<Result<_>>()?;
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let near = |mask: u32| costs[mask as usize] <= best + 1e-12;

    let prefix = (0..=n)
        .rev()
        .map(|len| ((1u64 << len) - 1) as u32)
        .find(|&mask| near(mask));
    let mask = prefix.unwrap_or_else(|| (0..1u32 << n).find(|&m| near(m)).unwrap());
    Ok(KeptSet::from_members(dist, subset(mask)))
}
