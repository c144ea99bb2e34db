//! Moment-to-cumulant conversion and the cumulant bounds used by the
//! moderate-deviation pipeline: the correlation-graph bound
//! `2 (2m)^{m-2} n (deg(G)+1)^{m-1} A^m`, the single-variable bound
//! `(A e)^m m!`, and the Doering-Eichelsbacher-style condition
//! `|gamma_m| <= m^{m-2} (log m)^{gamma m} sigma^m / Delta^{m-2}`.

use num_traits::{One, Zero};

use crate::diophantine::EnumBudget;
use crate::error::{Error, Result};
use crate::exact::{binomial, rat_pow, rat_to_f64, Int, Rat};
use crate::moments::{single_moments_upto, sum_moments_upto};
use crate::trigpoly::TrigPoly;

/// Exact cumulants `gamma_1..gamma_M` of one random variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulantTable {
    /// `values[m-1] = gamma_m`, exact.
    pub values: Vec<Rat>,
    /// `(rho, gamma_rho)`: the smallest order `>= 3` with a nonvanishing
    /// cumulant, when it was searched for (tables for `X_1` only).
    pub rho: Option<(usize, Rat)>,
}

impl CumulantTable {
    pub fn gamma(&self, m: usize) -> &Rat {
        &self.values[m - 1]
    }

    /// `sigma^2 = gamma_2` (requires at least two orders).
    pub fn sigma2(&self) -> Option<&Rat> {
        self.values.get(1)
    }
}

/// Cumulants from raw moments `mu_1..mu_M` via the standard recursion
/// `gamma_m = mu_m - sum_{j=1}^{m-1} C(m-1, j-1) gamma_j mu_{m-j}`.
pub fn cumulants_from_moments(moments: &[Rat]) -> CumulantTable {
    let m_max = moments.len();
    let mut gammas: Vec<Rat> = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let mut g = moments[m - 1].clone();
        for j in 1..m {
            let c = Rat::new(binomial((m - 1) as u64, (j - 1) as u64), Int::one());
            g -= c * &gammas[j - 1] * &moments[m - j - 1];
        }
        gammas.push(g);
    }
    CumulantTable {
        values: gammas,
        rho: None,
    }
}

/// Inverse recursion: moments from cumulants
/// (`mu_m = sum_{j=1}^m C(m-1, j-1) gamma_j mu_{m-j}`, `mu_0 = 1`).
pub fn moments_from_cumulants(cumulants: &[Rat]) -> Vec<Rat> {
    let m_max = cumulants.len();
    let mut mus: Vec<Rat> = vec![Rat::one()]; // mu_0
    for m in 1..=m_max {
        let mut mu = Rat::zero();
        for j in 1..=m {
            let c = Rat::new(binomial((m - 1) as u64, (j - 1) as u64), Int::one());
            mu += c * &cumulants[j - 1] * &mus[m - j];
        }
        mus.push(mu);
    }
    mus.remove(0);
    mus
}

/// Cumulant table of `X_1 = f(U)`.
pub fn cumulant_table_x1(f: &TrigPoly, m_max: usize) -> Result<CumulantTable> {
    let moments = single_moments_upto(f, m_max)?;
    let mut table = cumulants_from_moments(&moments);
    table.rho = table
        .values
        .iter()
        .enumerate()
        .skip(2)
        .find(|(_, g)| !g.is_zero())
        .map(|(i, g)| (i + 1, g.clone()));
    Ok(table)
}

/// Cumulant table of `S_n^f` on the given prefix, exact.
pub fn cumulant_table_sn(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
    m_max: usize,
    budget: &mut EnumBudget,
) -> Result<CumulantTable> {
    let moments = sum_moments_upto(f, terms, n, m_max, budget)?;
    Ok(cumulants_from_moments(&moments.values))
}

/// `(rho, gamma_rho)` for `X_1 = f(U)`: the smallest `m >= 3` with
/// `gamma_m(X_1) != 0`, searched up to `m_max` (default cap 12).
pub fn rho_of(f: &TrigPoly, m_max: usize) -> Result<(usize, Rat)> {
    let table = cumulant_table_x1(f, m_max)?;
    table.rho.ok_or(Error::RhoUndetermined { m_max })
}

pub const DEFAULT_RHO_CAP: usize = 12;

/// Single-variable cumulant bound `(A e)^m m!`.
pub fn single_variable_cumulant_bound(a: f64, m: u32) -> f64 {
    assert!(a > 0.0 && m >= 1, "need A > 0 and m >= 1");
    let mut fact = 1.0f64;
    for i in 2..=m as u64 {
        fact *= i as f64;
    }
    (a * std::f64::consts::E).powi(m as i32) * fact
}

/// Correlation-graph cumulant bound `2 (2m)^{m-2} n (deg+1)^{m-1} A^m`,
/// exact for rational `A`. Requires `m >= 2`.
pub fn graph_cumulant_bound(n: u64, deg: u64, a: &Rat, m: u32) -> Result<Rat> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "graph cumulant bound needs m >= 2, got {m}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1".into()));
    }
    let two_m = Rat::new(Int::from(2 * m as u64), Int::one());
    let deg_plus = Rat::new(Int::from(deg + 1), Int::one());
    Ok(Rat::new(Int::from(2u32), Int::one())
        * rat_pow(&two_m, m - 2)
        * Rat::new(Int::from(n), Int::one())
        * rat_pow(&deg_plus, m - 1)
        * rat_pow(a, m))
}

/// One row of the Doering-Eichelsbacher condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct DeCheckRow {
    pub m: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// Largest `Delta_n` for which this order would still pass
    /// (infinite when `gamma_m = 0`).
    pub max_delta: f64,
}

/// Check `|gamma_m(S_n)| <= m^{m-2} (log m)^{gamma m} sigma_n^m / Delta_n^{m-2}`
/// for each `m` in `3..=M`, reporting the maximal admissible `Delta_n` per order.
pub fn check_de_condition(
    cumulants: &CumulantTable,
    sigma: f64,
    delta: f64,
    gamma: f64,
    m_max: u32,
) -> Result<Vec<DeCheckRow>> {
    if delta <= 0.0 {
        return Err(Error::InvalidParameter("need Delta_n > 0".into()));
    }
    if gamma < 0.0 {
        return Err(Error::InvalidParameter("need gamma >= 0".into()));
    }
    if (m_max as usize) > cumulants.values.len() {
        return Err(Error::InvalidParameter(format!(
            "table holds {} orders, asked for {m_max}",
            cumulants.values.len()
        )));
    }
    let mut rows = Vec::new();
    for m in 3..=m_max {
        let mf = m as f64;
        let lhs = rat_to_f64(cumulants.gamma(m as usize)).abs();
        let envelope = mf.powi(m as i32 - 2) * mf.ln().powf(gamma * mf) * sigma.powi(m as i32);
        let rhs = envelope / delta.powi(m as i32 - 2);
        let max_delta = if lhs == 0.0 {
            f64::INFINITY
        } else {
            (envelope / lhs).powf(1.0 / (mf - 2.0))
        };
        rows.push(DeCheckRow {
            m,
            lhs,
            rhs,
            pass: lhs <= rhs,
            max_delta,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::moments::sum_moment;
    use crate::sequences::{build_sequence, SequenceSpec};
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
    fn cosine_x1_cumulants() {
        let table = cumulant_table_x1(&TrigPoly::cosine(), 6).unwrap();
        assert_eq!(table.gamma(1), &Rat::zero());
        assert_eq!(table.gamma(2), &rat(1, 2));
        assert_eq!(table.gamma(3), &Rat::zero());
        assert_eq!(table.gamma(4), &rat(-3, 8));
        assert_eq!(table.rho, Some((4, rat(-3, 8))));
    }

    #[test]
    fn dirac_at_zero_has_zero_cumulants() {
        let zeros = vec![Rat::zero(); 8];
        let table = cumulants_from_moments(&zeros);
        assert!(table.values.iter().all(|g| g.is_zero()));
    }

    #[test]
    fn third_cumulant_of_centered_sum_is_third_moment() {
        let cos = TrigPoly::cosine();
        let terms = crate::sequences::ints(&[2, 4, 8]);
        let mut budget = EnumBudget::default_budget();
        let table = cumulant_table_sn(&cos, &terms, 3, 3, &mut budget).unwrap();
        assert_eq!(table.gamma(3), &rat(3, 2));
        assert_eq!(table.gamma(3), &sum_moment(&cos, &terms, 3, 3).unwrap());
    }

    #[test]
    fn rho_search_cap_is_reported() {
        // gamma_3 of the cosine vanishes, so a cap of 3 finds nothing.
        let err = rho_of(&TrigPoly::cosine(), 3);
        assert!(matches!(err, Err(Error::RhoUndetermined { m_max: 3 })));
    }

    #[test]
    fn float_cumulants_from_log_mgf_stencils_match_exact() {
        // Central finite differences (step 1e-3) of log E e^{theta S_n},
        // with the MGF evaluated exactly at the stencil nodes through its
        // rational Taylor coefficients and only the final log taken in
        // floats. Agreement within 1e-4 relative for m <= 4.
        let cos = TrigPoly::cosine();
        let terms: Vec<Int> = (1..=4u32).map(|k| Int::from(2i64).pow(k)).collect();
        let n = 4;
        let taylor = crate::mgf::mgf_taylor(&cos, &terms, n, 10).unwrap();
        let h = rat(1, 1000);
        // g(theta) = ln(1 + (P(theta) - 1)) with P - 1 exact, so the float
        // log loses nothing to cancellation.
        let g = |steps: i64| -> f64 {
            let theta = &h * rat(steps, 1);
            let mut p_minus_one = Rat::zero();
            let mut power = Rat::one();
            for t in taylor.iter().skip(1) {
                power *= &theta;
                p_minus_one += t * &power;
            }
            rat_to_f64(&p_minus_one).ln_1p()
        };
        let hf = 1e-3;
        let stencils = [
            (1, (g(1) - g(-1)) / (2.0 * hf)),
            (2, (g(1) - 2.0 * g(0) + g(-1)) / (hf * hf)),
            (3, (g(2) - 2.0 * g(1) + 2.0 * g(-1) - g(-2)) / (2.0 * hf * hf * hf)),
            (4, (g(2) - 4.0 * g(1) + 6.0 * g(0) - 4.0 * g(-1) + g(-2)) / (hf * hf * hf * hf)),
        ];
        let mut budget = EnumBudget::default_budget();
        let exact = cumulant_table_sn(&cos, &terms, n, 4, &mut budget).unwrap();
        for (m, approx) in stencils {
            let truth = rat_to_f64(exact.gamma(m));
            let err = if truth == 0.0 {
                approx.abs()
            } else {
                (approx - truth).abs() / truth.abs()
            };
            assert!(err < 1e-4, "m = {m}: stencil {approx} vs exact {truth} (err {err:.2e})");
        }
    }

    #[test]
    fn rho_of_examples() {
        assert_eq!(rho_of(&TrigPoly::cosine(), 12).unwrap(), (4, rat(-3, 8)));
        // Telescope: gamma_3 = E X^3 = -3/4 (six zero-sum digit triples of
        // weight -1/8), verified against the naive enumeration oracle.
        let tel = TrigPoly::telescope();
        let mut budget = EnumBudget::default_budget();
        let ones = vec![Int::one(); 3];
        let oracle = crate::diophantine::weighted_zero_sum_naive(&ones, &tel, &mut budget).unwrap();
        assert_eq!(oracle.value, rat(-3, 4));
        assert_eq!(rho_of(&tel, 12).unwrap(), (3, rat(-3, 4)));

        // c_{+-1} = c_{+-2} = 1/2: gamma_3 = +3/4 by the same enumeration.
        let mut m = std::collections::BTreeMap::new();
        m.insert(1, rat(1, 2));
        m.insert(2, rat(1, 2));
        let plus = TrigPoly::new(m).unwrap();
        let oracle = crate::diophantine::weighted_zero_sum_naive(
            &vec![Int::one(); 3],
            &plus,
            &mut EnumBudget::default_budget(),
        )
        .unwrap();
        assert_eq!(oracle.value, rat(3, 4));
        assert_eq!(rho_of(&plus, 12).unwrap(), (3, rat(3, 4)));
    }

    #[test]
    fn single_variable_bound_dominates_small_cumulants() {
        // A = 1: e^2 * 2! ~ 14.78 >= |1/2|, e^4 * 4! >= 3/8.
        let b2 = single_variable_cumulant_bound(1.0, 2);
        assert!((b2 - std::f64::consts::E.powi(2) * 2.0).abs() < 1e-9);
        assert!(0.5 <= b2);
        let b4 = single_variable_cumulant_bound(1.0, 4);
        assert!((b4 - std::f64::consts::E.powi(4) * 24.0).abs() < 1e-9);
        assert!(0.375 <= b4);
        let b3 = single_variable_cumulant_bound(2.0, 3);
        assert!((b3 - (2.0 * std::f64::consts::E).powi(3) * 6.0).abs() < 1e-9);
    }

    #[test]
    fn graph_bound_examples() {
        assert_eq!(
            graph_cumulant_bound(3, 4, &Rat::one(), 3).unwrap(),
            rat(900, 1)
        );
        assert_eq!(graph_cumulant_bound(1, 0, &Rat::one(), 2).unwrap(), rat(2, 1));
        assert_eq!(
            graph_cumulant_bound(10, 4, &Rat::one(), 4).unwrap(),
            rat(160_000, 1)
        );
        assert!(graph_cumulant_bound(10, 4, &Rat::one(), 1).is_err());
    }

    #[test]
    fn de_condition_examples() {
        let cos = TrigPoly::cosine();
        let geo = geometric2(8);
        let mut budget = EnumBudget::default_budget();
        let table = cumulant_table_sn(&cos, &geo, 8, 6, &mut budget).unwrap();
        let sigma = rat_to_f64(table.sigma2().unwrap()).sqrt();
        // Delta_n = sigma_n / C with C = 4 passes for m = 3..6 (computed
        // from the exact cumulants below, frozen here).
        let rows = check_de_condition(&table, sigma, sigma / 4.0, 1.0, 6).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");

        // Gaussian cumulants (gamma_m = 0 for m >= 3) pass trivially.
        let gauss = CumulantTable {
            values: vec![Rat::zero(), Rat::one(), Rat::zero(), Rat::zero()],
            rho: None,
        };
        let rows = check_de_condition(&gauss, 1.0, 123.0, 1.0, 4).unwrap();
        assert!(rows.iter().all(|r| r.pass && r.max_delta.is_infinite()));

        // An absurd Delta_n fails at m = 3 when gamma_3 != 0.
        let skewed = CumulantTable {
            values: vec![Rat::zero(), Rat::one(), rat(3, 2)],
            rho: None,
        };
        let rows = check_de_condition(&skewed, 1.0, 1e9, 1.0, 3).unwrap();
        assert!(!rows[0].pass);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn moment_cumulant_involution(nums in proptest::collection::vec(-20i64..20, 1..=7)) {
            let moments: Vec<Rat> = nums.into_iter().map(|n| rat(n, 4)).collect();
            let table = cumulants_from_moments(&moments);
            let back = moments_from_cumulants(&table.values);
            prop_assert_eq!(back, moments);
        }
    }
}
