//! Exact moments of the lacunary sum `S_n^f = sum_{j<=n} f(a_j U)` and of its
//! i.i.d. analogue `T_n^f = sum_{j<=n} f(U_j)`, plus the variance conditions
//! built on them.
//!
//! `E (S_n^f)^m` is a weighted count of Diophantine solutions; the index
//! tuples are grouped by multiset so each distinct term list is enumerated
//! once and weighted by a multinomial coefficient.

use num_traits::{One, Signed, Zero};

use crate::diophantine::{
    pair_collision_count, weighted_zero_sum_budgeted, EnumBudget, PairCollisionReport,
};
use crate::error::{Error, Result};
use crate::exact::{binomial, factorial, rat, rat_to_f64, Int, Rat};
use crate::trigpoly::TrigPoly;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// Moments of `S_n^f` (single uniform, dependent terms).
    Dependent,
    /// Moments of `T_n^f` (independent uniforms).
    Iid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentTable {
    pub n: usize,
    pub kind: MomentKind,
    /// `values[m-1] = E S^m` for `m = 1..=M`, exact.
    pub values: Vec<Rat>,
}

impl MomentTable {
    pub fn moment(&self, m: usize) -> &Rat {
        &self.values[m - 1]
    }
}

/// `E (S_n^f)^m`, exact.
pub fn sum_moment(f: &TrigPoly, terms: &[Int], n: usize, m: usize) -> Result<Rat> {
    sum_moment_budgeted(f, terms, n, m, &mut EnumBudget::default_budget())
}

pub fn sum_moment_budgeted(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
    m: usize,
    budget: &mut EnumBudget,
) -> Result<Rat> {
    if m == 0 {
        return Err(Error::InvalidParameter("need m >= 1".into()));
    }
    if n == 0 || n > terms.len() {
        return Err(Error::InvalidParameter(format!(
            "n must satisfy 1 <= n <= {}, got {n}",
            terms.len()
        )));
    }
    let prefix = &terms[..n];
    let m_fact = factorial(m as u64);
    let mut total = Rat::zero();

    // Iterate index multisets 0 <= i_1 <= ... <= i_m < n.  The number of
    // ordered tuples collapsing to a multiset with multiplicities e_1..e_p is
    // m! / prod e_t!.
    let mut multiset = vec![0usize; m];
    loop {
        let orderings = {
            let mut denom = Int::one();
            let mut run = 1u64;
            for w in multiset.windows(2) {
                if w[0] == w[1] {
                    run += 1;
                } else {
                    denom *= factorial(run);
                    run = 1;
                }
            }
            denom *= factorial(run);
            Rat::new(m_fact.clone(), denom)
        };
        let picked: Vec<Int> = multiset.iter().map(|&i| prefix[i].clone()).collect();
        let w = weighted_zero_sum_budgeted(&picked, f, budget)?;
        if !w.value.is_zero() {
            total += w.value * orderings;
        }

        // Next non-decreasing tuple.
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(total);
            }
            pos -= 1;
            if multiset[pos] + 1 < n {
                let v = multiset[pos] + 1;
                for slot in &mut multiset[pos..] {
                    *slot = v;
                }
                break;
            }
        }
    }
}

/// Moments `E (S_n^f)^m` for all `m <= m_max`.
pub fn sum_moments_upto(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
    m_max: usize,
    budget: &mut EnumBudget,
) -> Result<MomentTable> {
    let mut values = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        values.push(sum_moment_budgeted(f, terms, n, m, budget)?);
    }
    Ok(MomentTable {
        n,
        kind: MomentKind::Dependent,
        values,
    })
}

/// Moments of a single term, `E X_1^j = E f(U)^j` for `j = 1..=m_max`.
/// Realized as weighted zero-sum counts on the all-ones term list.
pub fn single_moments_upto(f: &TrigPoly, m_max: usize) -> Result<Vec<Rat>> {
    let mut budget = EnumBudget::default_budget();
    let mut out = Vec::with_capacity(m_max);
    for j in 1..=m_max {
        let ones = vec![Int::one(); j];
        out.push(weighted_zero_sum_budgeted(&ones, f, &mut budget)?.value);
    }
    Ok(out)
}

/// `E (T_n^f)^m`, exact, via the i.i.d. moment convolution
/// `mu^{A+B}_m = sum_j C(m, j) mu^A_j mu^B_{m-j}` applied by binary
/// exponentiation over `n` independent copies.
pub fn iid_moment(f: &TrigPoly, n: usize, m: usize) -> Result<Rat> {
    Ok(iid_moments_upto(f, n, m)?.values[m - 1].clone())
}

pub fn iid_moments_upto(f: &TrigPoly, n: usize, m_max: usize) -> Result<MomentTable> {
    if m_max == 0 {
        return Err(Error::InvalidParameter("need m >= 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1".into()));
    }
    let singles = single_moments_upto(f, m_max)?;
    // Moment vectors with index 0 = 1.
    let mut base = Vec::with_capacity(m_max + 1);
    base.push(Rat::one());
    base.extend(singles);

    let mut acc = point_mass_moments(m_max);
    let mut b = base;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = convolve_moments(&acc, &b);
        }
        e >>= 1;
        if e > 0 {
            b = convolve_moments(&b, &b);
        }
    }
    Ok(MomentTable {
        n,
        kind: MomentKind::Iid,
        values: acc[1..].to_vec(),
    })
}

fn point_mass_moments(m_max: usize) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); m_max + 1];
    v[0] = Rat::one();
    v
}

/// Moments of an independent sum: binomial convolution.
fn convolve_moments(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let m_max = a.len() - 1;
    let mut out = vec![Rat::zero(); m_max + 1];
    for (m, slot) in out.iter_mut().enumerate() {
        let mut acc = Rat::zero();
        for j in 0..=m {
            let term = &a[j] * &b[m - j];
            if !term.is_zero() {
                acc += term * Rat::new(binomial(m as u64, j as u64), Int::one());
            }
        }
        *slot = acc;
    }
    out
}

/// Convenience wrapper used by the correlation-graph verifier:
/// `E prod_j X_{t_j}` for an explicit index multiset.
pub fn mixed_moment(f: &TrigPoly, picked_terms: &[Int], budget: &mut EnumBudget) -> Result<Rat> {
    Ok(weighted_zero_sum_budgeted(picked_terms, f, budget)?.value)
}

/// Exact variance with the linear upper bound and the empirical `E S_n^2 / n`
/// ratio (the finite-prefix proxy for the non-degeneracy constant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarianceReport {
    pub n: usize,
    pub variance: Rat,
    /// `E S_n^2 / n`, the prefix proxy for `c(f, a)`.
    pub ratio_to_n: Rat,
    /// `4 n sum_{d=-D..D} c_d^2`.
    pub upper_bound: Rat,
    pub within_bound: bool,
}

pub fn variance_report(f: &TrigPoly, terms: &[Int], n: usize) -> Result<VarianceReport> {
    let variance = sum_moment(f, terms, n, 2)?;
    let nn = rat(n as i64, 1);
    let upper_bound = rat(4, 1) * &nn * f.second_moment();
    let within_bound = variance <= upper_bound;
    let ratio_to_n = &variance / &nn;
    Ok(VarianceReport {
        n,
        variance,
        ratio_to_n,
        upper_bound,
        within_bound,
    })
}

/// Which of the three sufficient conditions for variance non-degeneration
/// hold on the prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceConditions {
    /// (A) all coefficients `c_d >= 0` for `d >= 1`.
    pub a_nonnegative_coeffs: bool,
    /// (B) pair-collision count with its ratio to `n` (an `o(n)` proxy).
    pub b_collisions: PairCollisionReport,
    pub b_ratio: f64,
    /// (C) minimal `k_0` with `a_{k+1}/a_k > D` for all `k >= k_0` in the
    /// prefix, when one exists.
    pub c_k0: Option<usize>,
}

pub fn check_variance_conditions(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
) -> Result<VarianceConditions> {
    if n == 0 || n > terms.len() {
        return Err(Error::InvalidParameter(format!(
            "n must satisfy 1 <= n <= {}, got {n}",
            terms.len()
        )));
    }
    let a_nonnegative_coeffs = f.half_coeffs().iter().all(|c| !c.is_negative());
    let b_collisions = pair_collision_count(terms, f, n)?;
    let b_ratio = b_collisions.count as f64 / n as f64;

    let d = Rat::new(Int::from(f.degree()), Int::one());
    let prefix = &terms[..n];
    let gaps = prefix.len().saturating_sub(1);
    let mut last_bad: Option<usize> = None; // 1-based index of the last gap with ratio <= D
    for (k, w) in prefix.windows(2).enumerate() {
        let ratio = Rat::new(w[1].clone(), w[0].clone());
        if ratio <= d {
            last_bad = Some(k + 1);
        }
    }
    let c_k0 = match last_bad {
        None => Some(1),
        Some(k) if k < gaps => Some(k + 1),
        Some(_) => None, // the final gap already violates; nothing certified
    };
    Ok(VarianceConditions {
        a_nonnegative_coeffs,
        b_collisions,
        b_ratio,
        c_k0,
    })
}

/// Largest denominator that any exact moment of order `m` can have:
/// `(common denominator of the c_d)^m`. Exposed for the denominator
/// divisibility invariant.
pub fn moment_denominator_bound(f: &TrigPoly, m: usize) -> Int {
    let mut common = Int::one();
    for c in f.half_coeffs() {
        common = num_integer::lcm(common, c.denom().clone());
    }
    num_traits::pow::pow(common, m)
}

pub fn moment_to_f64(r: &Rat) -> f64 {
    rat_to_f64(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{build_sequence, ints, SequenceSpec};
    use num_integer::Integer;
    use proptest::prelude::*;

    fn geometric2(n: usize) -> Vec<Int> {
        build_sequence(
            &SequenceSpec::Geometric {
                a1: "2".into(),
                q: "2".into(),
                n,
            },
            n,
        )
        .unwrap()
        .terms()
        .to_vec()
    }

    #[test]
    fn cosine_variance_is_n_over_two() {
        let cos = TrigPoly::cosine();
        let terms = geometric2(12);
        for n in 1..=12 {
            assert_eq!(sum_moment(&cos, &terms, n, 2).unwrap(), rat(n as i64, 2));
        }
        // Distinct terms are all that matters for m = 2 with D = 1.
        let odd = ints(&[3, 7, 20, 41]);
        assert_eq!(sum_moment(&cos, &odd, 4, 2).unwrap(), rat(2, 1));
    }

    #[test]
    fn telescope_variance_degenerates_to_one() {
        let tel = TrigPoly::telescope();
        let terms = geometric2(12);
        for n in 2..=12 {
            assert_eq!(sum_moment(&tel, &terms, n, 2).unwrap(), Rat::one());
        }
    }

    #[test]
    fn cosine_third_moment_on_three_terms() {
        // Solutions are the orderings of {2,2,-4} and {4,4,-8} with both
        // sign patterns: 12 ordered tuples of weight 1/8.
        let cos = TrigPoly::cosine();
        let m3 = sum_moment(&cos, &ints(&[2, 4, 8]), 3, 3).unwrap();
        assert_eq!(m3, rat(3, 2));
    }

    #[test]
    fn iid_examples() {
        let cos = TrigPoly::cosine();
        // E X^4 = 3/8; E (T_2)^4 = 2 E X^4 + 6 (E X^2)^2 = 9/4.
        assert_eq!(iid_moment(&cos, 2, 4).unwrap(), rat(9, 4));
        assert_eq!(iid_moment(&cos, 1, 2).unwrap(), rat(1, 2));
        for m in [1usize, 3, 5, 7] {
            assert_eq!(iid_moment(&cos, 5, m).unwrap(), Rat::zero(), "odd m = {m}");
        }
    }

    #[test]
    fn iid_matches_bruteforce_factorization() {
        // Independent oracle for E (T_n)^m: enumerate index tuples and digit
        // tuples, demanding a zero digit sum separately at every index.
        let cos = TrigPoly::cosine();
        let alphabet = cos.digit_alphabet();
        let n = 2;
        let m = 4;
        let mut expected = Rat::zero();
        let mut index_tuple = vec![0usize; m];
        'outer: loop {
            let mut digit_tuple = vec![0usize; m];
            loop {
                let mut per_index = vec![0i64; n];
                let mut weight = Rat::one();
                for j in 0..m {
                    let (d, c) = &alphabet[digit_tuple[j]];
                    per_index[index_tuple[j]] += d;
                    weight *= c;
                }
                if per_index.iter().all(|&s| s == 0) {
                    expected += weight;
                }
                let mut pos = 0;
                loop {
                    if pos == m {
                        break;
                    }
                    digit_tuple[pos] += 1;
                    if digit_tuple[pos] < alphabet.len() {
                        break;
                    }
                    digit_tuple[pos] = 0;
                    pos += 1;
                }
                if pos == m {
                    break;
                }
            }
            let mut pos = 0;
            loop {
                if pos == m {
                    break 'outer;
                }
                index_tuple[pos] += 1;
                if index_tuple[pos] < n {
                    break;
                }
                index_tuple[pos] = 0;
                pos += 1;
            }
        }
        assert_eq!(expected, rat(9, 4));
        assert_eq!(iid_moment(&cos, n, m).unwrap(), expected);
    }

    #[test]
    fn single_term_sum_equals_iid() {
        let tel = TrigPoly::telescope();
        let terms = ints(&[7]);
        for m in 1..=8 {
            let s = sum_moment(&tel, &terms, 1, m).unwrap();
            let t = iid_moment(&tel, 1, m).unwrap();
            assert_eq!(s, t, "m = {m}");
        }
    }

    #[test]
    fn dependent_equals_iid_when_no_nontrivial_solutions() {
        // Ratio-13 gaps exceed D*m for m <= 6, D = 2: the splitting argument
        // makes every solution trivial, so the moments agree exactly.
        let tel = TrigPoly::telescope();
        let terms: Vec<Int> = (0..5).map(|k| Int::from(13i64).pow(k) * 3).collect();
        for m in 1..=6 {
            assert_eq!(
                sum_moment(&tel, &terms, 5, m).unwrap(),
                iid_moment(&tel, 5, m).unwrap(),
                "m = {m}"
            );
        }
        // And on geometric(2) they genuinely differ at m = 3.
        let cos = TrigPoly::cosine();
        let geo = geometric2(5);
        assert_ne!(
            sum_moment(&cos, &geo, 5, 3).unwrap(),
            iid_moment(&cos, 5, 3).unwrap()
        );
    }

    #[test]
    fn variance_report_examples() {
        let cos = TrigPoly::cosine();
        let geo = geometric2(10);
        let r = variance_report(&cos, &geo, 10).unwrap();
        assert_eq!(r.variance, rat(5, 1));
        assert_eq!(r.upper_bound, rat(20, 1));
        assert_eq!(r.ratio_to_n, rat(1, 2));
        assert!(r.within_bound);

        let tel = TrigPoly::telescope();
        let r = variance_report(&tel, &geo, 10).unwrap();
        assert_eq!(r.variance, rat(1, 1));
        assert_eq!(r.ratio_to_n, rat(1, 10));

        let r = variance_report(&cos, &geo, 1).unwrap();
        assert_eq!(r.variance, rat(1, 2));
    }

    #[test]
    fn variance_upper_bound_half_spectrum_form_holds() {
        // The sharper half-spectrum bound 4 n sum_{d=0}^D c_d^2 also holds
        // on everything we test.
        let geo = geometric2(10);
        for f in [TrigPoly::cosine(), TrigPoly::telescope()] {
            let half_sum: Rat = f
                .half_coeffs()
                .iter()
                .map(|c| c * c)
                .fold(Rat::zero(), |a, b| a + b);
            for n in 1..=10 {
                let v = sum_moment(&f, &geo, n, 2).unwrap();
                assert!(v <= rat(4 * n as i64, 1) * &half_sum);
            }
        }
    }

    #[test]
    fn variance_conditions_examples() {
        let cos = TrigPoly::cosine();
        let geo = geometric2(8);
        let c = check_variance_conditions(&cos, &geo, 8).unwrap();
        assert!(c.a_nonnegative_coeffs);

        let tel = TrigPoly::telescope();
        let c = check_variance_conditions(&tel, &geo, 8).unwrap();
        assert!(!c.a_nonnegative_coeffs);
        assert_eq!(c.c_k0, None, "ratios equal D = 2, never exceed it");

        let wide: Vec<Int> = (0..6).map(|k| Int::from(3i64).pow(k)).collect();
        let c = check_variance_conditions(&tel, &wide, 6).unwrap();
        assert_eq!(c.c_k0, Some(1));
    }

    #[test]
    fn moment_denominators_divide_coefficient_power() {
        let tel = TrigPoly::telescope();
        let geo = geometric2(6);
        for m in 1..=5 {
            let v = sum_moment(&tel, &geo, 6, m).unwrap();
            let bound = moment_denominator_bound(&tel, m);
            assert!(bound.is_multiple_of(v.denom()), "m = {m}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn first_moment_always_vanishes(n in 1usize..6) {
            // Centered f: order-1 moment is 0 for both kinds.
            let tel = TrigPoly::telescope();
            let geo = geometric2(n.max(1));
            prop_assert_eq!(sum_moment(&tel, &geo, n, 1).unwrap(), Rat::zero());
            prop_assert_eq!(iid_moment(&tel, n, 1).unwrap(), Rat::zero());
        }

        #[test]
        fn second_moment_nonnegative(n in 1usize..6) {
            let cos = TrigPoly::cosine();
            let geo = geometric2(n.max(1));
            prop_assert!(sum_moment(&cos, &geo, n, 2).unwrap() >= Rat::zero());
        }
    }
}
