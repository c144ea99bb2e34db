//! Weighted counting of solutions to `sum_j d_j a_{t_j} = 0` with digits
//! `d_j` drawn from the coefficient support of a trigonometric polynomial.
//! This is the combinatorial kernel behind every exact moment: the weighted
//! count over a term list `(a_{t_1}..a_{t_r})` equals `E prod_j X_{t_j}`.
//!
//! The production path is meet-in-the-middle over a split of the positions,
//! hashing exact big-integer partial sums, with triangle-inequality pruning.
//! A deliberately naive full enumeration is kept alongside as the oracle.

use num_traits::{One, Signed, Zero};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exact::{Int, Rat};
use crate::trigpoly::TrigPoly;

/// Default enumeration budget (pruned nodes visited).
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000_000;

/// Counts enumeration nodes and fails loudly when the limit is hit.
#[derive(Debug, Clone)]
pub struct EnumBudget {
    visited: u64,
    limit: u64,
}

impl EnumBudget {
    pub fn new(limit: u64) -> Self {
        Self { visited: 0, limit }
    }

    pub fn default_budget() -> Self {
        Self::new(DEFAULT_NODE_BUDGET)
    }

    pub fn visited(&self) -> u64 {
        self.visited
    }

    #[inline]
    fn tick(&mut self) -> Result<()> {
        self.visited += 1;
        if self.visited > self.limit {
            Err(Error::BudgetExceeded {
                visited: self.visited,
                budget: self.limit,
                hint: "raise the budget (LACUNA_BUDGET) or reduce n/m".into(),
            })
        } else {
            Ok(())
        }
    }
}

/// Exact weighted solution count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedCount {
    /// `sum over digit tuples with zero sum of prod_j c_{d_j}`, exact.
    pub value: Rat,
    /// Number of zero-sum digit tuples over the nonzero-coefficient alphabet.
    pub solutions_enumerated: u64,
}

/// `E prod_j X_{t_j}` for the fixed term list, by meet-in-the-middle.
pub fn weighted_zero_sum(terms: &[Int], f: &TrigPoly) -> Result<WeightedCount> {
    weighted_zero_sum_budgeted(terms, f, &mut EnumBudget::default_budget())
}

pub fn weighted_zero_sum_budgeted(
    terms: &[Int],
    f: &TrigPoly,
    budget: &mut EnumBudget,
) -> Result<WeightedCount> {
    if terms.is_empty() {
        return Err(Error::InvalidParameter("need r >= 1 terms".into()));
    }
    if terms.iter().any(|t| !t.is_positive()) {
        return Err(Error::InvalidParameter("terms must be positive".into()));
    }
    let alphabet = f.digit_alphabet();
    let max_digit = Int::from(f.degree());

    // Split point ceil(r/2): the left map has at most |alphabet|^{r/2}
    // entries, which is what makes r ~ 16 feasible at all.
    let r = terms.len();
    let split = r.div_ceil(2);
    let (left, right) = terms.split_at(split);

    let left_reach = reach(left, &max_digit);
    let right_reach = reach(right, &max_digit);

    // Partial sums on each half may still be completed by the other half,
    // so each half prunes against its own remainder plus the full reach of
    // the opposite half.
    let left_map = enumerate_half(left, &alphabet, &max_digit, &right_reach, budget)?;
    let right_map = enumerate_half(right, &alphabet, &max_digit, &left_reach, budget)?;

    let mut value = Rat::zero();
    let mut solutions = 0u64;
    for (sum, (w, count)) in &right_map {
        let target = -sum;
        if let Some((lw, lcount)) = left_map.get(&target) {
            value += lw * w;
            solutions += lcount * count;
        }
    }
    Ok(WeightedCount {
        value,
        solutions_enumerated: solutions,
    })
}

fn reach(terms: &[Int], max_digit: &Int) -> Int {
    let sum: Int = terms.iter().sum();
    sum * max_digit
}

/// DFS over one half; returns partial sum -> (total weight, tuple count).
fn enumerate_half(
    terms: &[Int],
    alphabet: &[(i64, Rat)],
    max_digit: &Int,
    other_reach: &Int,
    budget: &mut EnumBudget,
) -> Result<HashMap<Int, (Rat, u64)>> {
    let mut map: HashMap<Int, (Rat, u64)> = HashMap::new();
    // Suffix reach: the largest |contribution| the not-yet-assigned positions
    // of this half can still add.
    let mut suffix = vec![Int::zero(); terms.len() + 1];
    for i in (0..terms.len()).rev() {
        suffix[i] = &suffix[i + 1] + &terms[i] * max_digit;
    }
    let mut stack_sum = Int::zero();
    let mut weight = Rat::one();
    dfs(
        terms,
        alphabet,
        &suffix,
        other_reach,
        0,
        &mut stack_sum,
        &mut weight,
        &mut map,
        budget,
    )?;
    Ok(map)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    terms: &[Int],
    alphabet: &[(i64, Rat)],
    suffix: &[Int],
    other_reach: &Int,
    depth: usize,
    sum: &mut Int,
    weight: &mut Rat,
    map: &mut HashMap<Int, (Rat, u64)>,
    budget: &mut EnumBudget,
) -> Result<()> {
    budget.tick()?;
    if depth == terms.len() {
        let entry = map
            .entry(sum.clone())
            .or_insert_with(|| (Rat::zero(), 0));
        entry.0 += &*weight;
        entry.1 += 1;
        return Ok(());
    }
    let term = &terms[depth];
    for (digit, coeff) in alphabet {
        let contribution = term * Int::from(*digit);
        *sum += &contribution;
        // Triangle inequality: a partial sum that the remaining positions
        // (this half's suffix plus the whole other half) cannot cancel is dead.
        let bound = &suffix[depth + 1] + other_reach;
        if sum.abs() <= bound {
            let saved = weight.clone();
            *weight *= coeff;
            dfs(terms, alphabet, suffix, other_reach, depth + 1, sum, weight, map, budget)?;
            *weight = saved;
        }
        *sum -= &contribution;
    }
    Ok(())
}

/// Full `(2D+1)^r`-style enumeration: no splitting, no hashing, no pruning.
/// Test oracle only; deliberately a different algorithm from the
/// meet-in-the-middle path.
pub fn weighted_zero_sum_naive(
    terms: &[Int],
    f: &TrigPoly,
    budget: &mut EnumBudget,
) -> Result<WeightedCount> {
    if terms.is_empty() {
        return Err(Error::InvalidParameter("need r >= 1 terms".into()));
    }
    let alphabet = f.digit_alphabet();
    let mut value = Rat::zero();
    let mut solutions = 0u64;
    naive_rec(
        terms,
        &alphabet,
        0,
        &mut Int::zero(),
        &mut Rat::one(),
        &mut value,
        &mut solutions,
        budget,
    )?;
    Ok(WeightedCount {
        value,
        solutions_enumerated: solutions,
    })
}

#[allow(clippy::too_many_arguments)]
fn naive_rec(
    terms: &[Int],
    alphabet: &[(i64, Rat)],
    depth: usize,
    sum: &mut Int,
    weight: &mut Rat,
    value: &mut Rat,
    solutions: &mut u64,
    budget: &mut EnumBudget,
) -> Result<()> {
    budget.tick()?;
    if depth == terms.len() {
        if sum.is_zero() {
            *value += &*weight;
            *solutions += 1;
        }
        return Ok(());
    }
    for (digit, coeff) in alphabet {
        let contribution = &terms[depth] * Int::from(*digit);
        *sum += &contribution;
        let saved = weight.clone();
        *weight *= coeff;
        naive_rec(terms, alphabet, depth + 1, sum, weight, value, solutions, budget)?;
        *weight = saved;
        *sum -= &contribution;
    }
    Ok(())
}

/// Pair-collision count for condition (B): the maximum over
/// `d, d' in {1..D}` of `#{(l, l') : d a_l = d' a_{l'}, l != l'}` on the
/// first `n` terms, with the maximizing `(d, d')`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCollisionReport {
    pub count: u64,
    pub argmax: Option<(u32, u32)>,
}

pub fn pair_collision_count(terms: &[Int], f: &TrigPoly, n: usize) -> Result<PairCollisionReport> {
    if n > terms.len() {
        return Err(Error::InvalidParameter(format!(
            "n = {n} exceeds available prefix {}",
            terms.len()
        )));
    }
    let d_max = f.degree();
    let prefix = &terms[..n];
    let mut best: Option<(u64, (u32, u32))> = None;
    for d in 1..=d_max {
        for dp in 1..=d_max {
            // Values d' a_{l'} are distinct (terms strictly increase), so a
            // hash map keyed by value finds all matches in O(n).
            let mut index_of: HashMap<Int, usize> = HashMap::with_capacity(n);
            for (lp, a) in prefix.iter().enumerate() {
                index_of.insert(a * Int::from(dp), lp);
            }
            let mut count = 0u64;
            for (l, a) in prefix.iter().enumerate() {
                if let Some(&lp) = index_of.get(&(a * Int::from(d))) {
                    if lp != l {
                        count += 1;
                    }
                }
            }
            if best.as_ref().map(|(c, _)| count > *c).unwrap_or(true) {
                best = Some((count, (d, dp)));
            }
        }
    }
    Ok(match best {
        Some((count, argmax)) if count > 0 => PairCollisionReport {
            count,
            argmax: Some(argmax),
        },
        Some((_, _)) | None => PairCollisionReport {
            count: 0,
            argmax: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::sequences::ints;
    use proptest::prelude::*;

    #[test]
    fn cosine_pair_examples() {
        let cos = TrigPoly::cosine();
        let w = weighted_zero_sum(&ints(&[2, 2]), &cos).unwrap();
        assert_eq!(w.value, rat(1, 2));
        assert_eq!(w.solutions_enumerated, 2);

        let w = weighted_zero_sum(&ints(&[2, 4]), &cos).unwrap();
        assert_eq!(w.value, rat(0, 1));

        let w = weighted_zero_sum(&ints(&[2, 2, 4]), &cos).unwrap();
        assert_eq!(w.value, rat(1, 4));
        assert_eq!(w.solutions_enumerated, 2);
    }

    #[test]
    fn rejects_empty_and_nonpositive() {
        let cos = TrigPoly::cosine();
        assert!(weighted_zero_sum(&[], &cos).is_err());
        assert!(weighted_zero_sum(&ints(&[0, 2]), &cos).is_err());
    }

    #[test]
    fn budget_error_is_loud() {
        let cos = TrigPoly::cosine();
        let mut tiny = EnumBudget::new(3);
        let err = weighted_zero_sum_budgeted(&ints(&[2, 4, 8, 16]), &cos, &mut tiny);
        assert!(matches!(err, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn pair_collision_examples() {
        let cos = TrigPoly::cosine();
        // D = 1: equal terms are impossible on a strictly increasing prefix.
        let r = pair_collision_count(&ints(&[2, 4, 8, 16]), &cos, 4).unwrap();
        assert_eq!(r.count, 0);

        let tel = TrigPoly::telescope();
        // D = 2 on geometric(2): 2 a_l = a_{l+1} three times; (1,2) and (2,1)
        // are tied by symmetry.
        let r = pair_collision_count(&ints(&[2, 4, 8, 16]), &tel, 4).unwrap();
        assert_eq!(r.count, 3);
        assert!(r.argmax == Some((2, 1)) || r.argmax == Some((1, 2)));

        let r = pair_collision_count(&ints(&[3, 7, 20]), &tel, 3).unwrap();
        assert_eq!(r.count, 0);
    }

    #[test]
    fn permutation_invariance_spot_check() {
        let tel = TrigPoly::telescope();
        let a = weighted_zero_sum(&ints(&[2, 4, 8, 4]), &tel).unwrap();
        let b = weighted_zero_sum(&ints(&[4, 8, 2, 4]), &tel).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.solutions_enumerated, b.solutions_enumerated);
    }

    #[test]
    fn wide_gaps_and_odd_length_mean_no_solutions() {
        // a_{k+1} > D * r * a_k with all-distinct terms and odd r: nothing
        // can cancel.
        let tel = TrigPoly::telescope(); // D = 2
        let terms = ints(&[1, 11, 121, 1331, 14641]); // ratio 11 > 2*5
        let w = weighted_zero_sum(&terms, &tel).unwrap();
        assert_eq!(w.value, rat(0, 1));
        assert_eq!(w.solutions_enumerated, 0);
    }

    fn arb_poly() -> impl Strategy<Value = TrigPoly> {
        // Degrees up to 3, coefficients in {-2..2}/2, at least one nonzero.
        proptest::collection::vec((-2i64..=2).prop_map(|n| rat(n, 2)), 1..=3).prop_filter_map(
            "nonzero",
            |coeffs| {
                let mut m = std::collections::BTreeMap::new();
                for (i, c) in coeffs.into_iter().enumerate() {
                    m.insert(i as u32 + 1, c);
                }
                TrigPoly::new(m).ok()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mitm_matches_naive(poly in arb_poly(),
                              terms in proptest::collection::vec(1i64..40, 1..=6)) {
            let terms: Vec<Int> = terms.into_iter().map(Int::from).collect();
            let mut b1 = EnumBudget::new(10_000_000);
            let mut b2 = EnumBudget::new(10_000_000);
            let fast = weighted_zero_sum_budgeted(&terms, &poly, &mut b1).unwrap();
            let slow = weighted_zero_sum_naive(&terms, &poly, &mut b2).unwrap();
            prop_assert_eq!(fast.value, slow.value);
            prop_assert_eq!(fast.solutions_enumerated, slow.solutions_enumerated);
        }

        #[test]
        fn permutation_invariance(poly in arb_poly(),
                                  terms in proptest::collection::vec(1i64..60, 2..=6),
                                  seed in 0u64..1000) {
            let mut terms: Vec<Int> = terms.into_iter().map(Int::from).collect();
            let base = weighted_zero_sum(&terms, &poly).unwrap();
            // Cheap deterministic shuffle.
            let len = terms.len();
            for i in 0..len {
                let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 17)) % len;
                terms.swap(i, j);
            }
            let shuffled = weighted_zero_sum(&terms, &poly).unwrap();
            prop_assert_eq!(base.value, shuffled.value);
        }
    }
}
