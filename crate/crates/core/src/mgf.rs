//! Moment generating functions of `S_n^f`, exact and Monte Carlo.
//!
//! The exact path expands each factor `exp(theta f(a_j x))` as a truncated
//! exponential (order `ceil(2eA)` with certified remainder
//! `|e^x - sum_m x^m/m!| <= 2^-A` for `|x| <= A`), multiplies the factors
//! as sparse trigonometric series over exact big-integer frequencies, and
//! reads off `E e^{theta S_n}` as the constant coefficient: integration over
//! `[0,1]` kills every nonzero integer frequency. Frequencies are never
//! folded; a collision between frequency sums is precisely a Diophantine
//! relation, and keeping those collisions exact is the point.
//!
//! A pruning rule drops partial frequencies that the remaining factors can
//! no longer cancel (triangle inequality); pruned mass cannot reach the
//! constant term, so the final value is unaffected.

use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::cumulants::rho_of;
use crate::error::{Error, Result};
use crate::exact::{factorial, rat_to_f64, rat_to_f64_up, Int, Rat};
use crate::sampling::{shard_seed, FracSampler, SHARD_SIZE};
use crate::sequences::{check_growth_condition, GrowthCondition};
use crate::trigpoly::TrigPoly;

/// Truncation order and certified remainder for `e^x`, `|x| <= A`, `A >= 1`:
/// `M = ceil(2 e A)` terms give remainder at most `2^-A`.
pub fn exp_truncation_order(a: f64) -> Result<(u32, f64)> {
    if !(a >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "exp truncation bound needs A >= 1, got {a}"
        )));
    }
    let m = (2.0 * std::f64::consts::E * a).ceil() as u32;
    Ok((m, (-a).exp2()))
}

// ---------------------------------------------------------------------------
// Sparse trigonometric series over exact integer frequencies
// ---------------------------------------------------------------------------

/// Finite map `frequency -> coefficient` representing
/// `sum_nu c_nu e^{2 pi i nu x}` with arbitrary-precision integer `nu`,
/// plus a certified sup-norm bound on whatever was truncated away.
#[derive(Debug, Clone)]
pub struct SparseTrigSeries {
    coeffs: BTreeMap<Int, Complex64>,
    /// Certified sup-norm bound for the represented function. Composed
    /// multiplicatively under products (never recomputed from the result),
    /// which keeps the error composition associative.
    norm_bound: f64,
    error_budget: f64,
}

impl SparseTrigSeries {
    pub fn constant(c: Complex64) -> Self {
        let mut coeffs = BTreeMap::new();
        if c != Complex64::ZERO {
            coeffs.insert(Int::zero(), c);
        }
        Self {
            coeffs,
            norm_bound: c.norm(),
            error_budget: 0.0,
        }
    }

    /// `theta * f` as a series on the base frequencies `d = -D..D`.
    pub fn from_poly(f: &TrigPoly, theta: Complex64) -> Self {
        let mut coeffs = BTreeMap::new();
        for (d, c) in f.digit_alphabet() {
            let v = theta * rat_to_f64(&c);
            coeffs.insert(Int::from(d), v);
        }
        let mut s = Self {
            coeffs,
            norm_bound: 0.0,
            error_budget: 0.0,
        };
        s.norm_bound = s.l1_norm();
        s
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn error_budget(&self) -> f64 {
        self.error_budget
    }

    pub fn coeff(&self, freq: &Int) -> Complex64 {
        self.coeffs.get(freq).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn constant_coeff(&self) -> Complex64 {
        self.coeff(&Int::zero())
    }

    /// `sum |c_nu|`: an upper bound for the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Certified sup-norm bound carried by this series.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Map `nu -> a * nu` (composition with `x -> a x`); preserves norms.
    pub fn scale_frequencies(&self, a: &Int) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(nu, c)| (nu * a, *c))
            .collect();
        Self {
            coeffs,
            norm_bound: self.norm_bound,
            error_budget: self.error_budget,
        }
    }

    /// Worst Hermitian-symmetry defect `max_nu |c_nu - conj(c_-nu)|`;
    /// zero (to rounding) whenever the series represents a real function.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (nu, c) in &self.coeffs {
            let mirrored = self.coeff(&(-nu)).conj();
            worst = worst.max((c - mirrored).norm());
        }
        worst
    }

    /// Product with truncation-error composition
    /// `(B1 + e1)(B2 + e2) - B1 B2` (upper-rounded), where `B` is the l1
    /// bound of each factor.
    pub fn mul(&self, other: &Self) -> Self {
        let mut visited = 0u64;
        self.mul_impl(other, None, &mut visited, u64::MAX)
            .expect("unbounded mul cannot exceed budget")
    }

    /// Product that drops output frequencies with `|nu| > reach` (they can
    /// never return to zero given the remaining factors) and counts work
    /// against a node budget.
    pub fn mul_pruned(
        &self,
        other: &Self,
        reach: &Int,
        visited: &mut u64,
        node_budget: u64,
    ) -> Result<Self> {
        self.mul_impl(other, Some(reach), visited, node_budget)
    }

    fn mul_impl(
        &self,
        other: &Self,
        reach: Option<&Int>,
        visited: &mut u64,
        node_budget: u64,
    ) -> Result<Self> {
        let mut coeffs: BTreeMap<Int, Complex64> = BTreeMap::new();
        for (nu1, c1) in &self.coeffs {
            for (nu2, c2) in &other.coeffs {
                *visited += 1;
                if *visited > node_budget {
                    return Err(Error::BudgetExceeded {
                        visited: *visited,
                        budget: node_budget,
                        hint: "series product too large; use mc_mgf".into(),
                    });
                }
                let nu = nu1 + nu2;
                if let Some(r) = reach {
                    if nu.magnitude() > r.magnitude() {
                        continue;
                    }
                }
                let prod = c1 * c2;
                coeffs
                    .entry(nu)
                    .and_modify(|acc| *acc += prod)
                    .or_insert(prod);
            }
        }
        let b1 = self.norm_bound;
        let b2 = other.norm_bound;
        let error_budget = up(up(b1 + self.error_budget) * up(b2 + other.error_budget) - b1 * b2);
        Ok(Self {
            coeffs,
            norm_bound: up(b1 * b2),
            error_budget,
        })
    }

    /// Horner evaluation of `sum_{m=0}^{order} g^m / m!`.
    fn truncated_exp(g: &Self, order: u32) -> Self {
        let mut acc = Self::constant(Complex64::new(inv_factorial(order), 0.0));
        for m in (0..order).rev() {
            acc = acc.mul(g);
            let c = Complex64::new(inv_factorial(m), 0.0);
            acc.coeffs
                .entry(Int::zero())
                .and_modify(|v| *v += c)
                .or_insert(c);
            acc.norm_bound = up(acc.norm_bound + c.norm());
        }
        acc
    }
}

fn inv_factorial(m: u32) -> f64 {
    let mut v = 1.0f64;
    for i in 2..=m as u64 {
        v /= i as f64;
    }
    v
}

/// Next representable float up; used to keep error bounds upper bounds.
fn up(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::INFINITY;
    }
    let nudged = x.abs().max(f64::MIN_POSITIVE) * (1.0 + 4.0 * f64::EPSILON);
    if x >= 0.0 {
        nudged
    } else {
        x * (1.0 - 4.0 * f64::EPSILON)
    }
}

// ---------------------------------------------------------------------------
// Exact MGF
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct MgfOptions {
    /// Refuse when `|theta| A n` exceeds this (truncation orders blow up).
    pub a_budget: f64,
    /// Node budget for the sparse products.
    pub node_budget: u64,
    /// Floor for the per-factor truncation parameter `A_j`; larger values buy a
    /// tighter certified remainder at the cost of wider factors.
    pub min_truncation_a: f64,
}

impl Default for MgfOptions {
    fn default() -> Self {
        Self {
            a_budget: 200.0,
            node_budget: 10_000_000,
            min_truncation_a: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MgfValue {
    pub value: Complex64,
    /// Certified bound on `|value - E e^{theta S_n}|`.
    pub error_bound: f64,
    pub nodes_visited: u64,
}

/// `E e^{theta S_n}` with a certified error bound.
pub fn exact_mgf(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
    theta: Complex64,
    opts: &MgfOptions,
) -> Result<MgfValue> {
    if n == 0 || n > terms.len() {
        return Err(Error::InvalidParameter(format!(
            "n must satisfy 1 <= n <= {}, got {n}",
            terms.len()
        )));
    }
    if theta == Complex64::ZERO {
        return Ok(MgfValue {
            value: Complex64::ONE,
            error_bound: 0.0,
            nodes_visited: 0,
        });
    }
    let a_f = rat_to_f64_up(&f.sup_bound());
    if theta.norm() * a_f * n as f64 > opts.a_budget {
        return Err(Error::InvalidParameter(format!(
            "|theta| A n = {:.3} exceeds the budget {}; raise a_budget or use mc_mgf",
            theta.norm() * a_f * n as f64,
            opts.a_budget
        )));
    }

    // One factor shape serves all j: P_base = truncated exp(theta f), then
    // frequencies are scaled by a_j per factor.
    let a_trunc = (theta.norm() * a_f).max(1.0).max(opts.min_truncation_a);
    let (order, per_factor_err) = exp_truncation_order(a_trunc)?;
    let g = SparseTrigSeries::from_poly(f, theta);
    let base = SparseTrigSeries::truncated_exp(&g, order);

    // Certified error: prod (B + e) - prod B over the n factors.
    let b = up(base.l1_norm());
    let total_err = up((b + per_factor_err).powi(n as i32) - b.powi(n as i32));

    // Multiply in descending term order; the suffix reach
    // order * D * sum(remaining terms) is what pruning tests against.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| terms[j].cmp(&terms[i]));
    let scale = Int::from(order as u64) * Int::from(f.degree());
    let mut suffix_reach = vec![Int::zero(); n + 1];
    for t in (0..n).rev() {
        suffix_reach[t] = &suffix_reach[t + 1] + &terms[idx[t]] * &scale;
    }

    let mut visited = 0u64;
    let mut acc = SparseTrigSeries::constant(Complex64::ONE);
    for t in 0..n {
        let factor = base.scale_frequencies(&terms[idx[t]]);
        acc = acc.mul_pruned(&factor, &suffix_reach[t + 1], &mut visited, opts.node_budget)?;
    }
    Ok(MgfValue {
        value: acc.constant_coeff(),
        error_bound: total_err,
        nodes_visited: visited,
    })
}

// ---------------------------------------------------------------------------
// Exact theta-graded Taylor coefficients (independent algebraic route)
// ---------------------------------------------------------------------------

/// Exact Taylor coefficients of `theta -> E e^{theta S_n}` at zero:
/// returns `t_0..t_order` with `t_m = E S_n^m / m!`, computed by a
/// theta-graded product of exact rational series. No exponential truncation
/// enters: grades above `order` are simply not tracked.
pub fn mgf_taylor(f: &TrigPoly, terms: &[Int], n: usize, order: usize) -> Result<Vec<Rat>> {
    if n == 0 || n > terms.len() {
        return Err(Error::InvalidParameter(format!(
            "n must satisfy 1 <= n <= {}, got {n}",
            terms.len()
        )));
    }
    // Factor for index j, grade m: (f(a_j x))^m / m! as an exact series.
    // Start from the base-frequency powers of f, shared across j.
    let mut f_pows: Vec<BTreeMap<Int, Rat>> = Vec::with_capacity(order + 1);
    let mut unit = BTreeMap::new();
    unit.insert(Int::zero(), Rat::one());
    f_pows.push(unit);
    let f_base: BTreeMap<Int, Rat> = f
        .digit_alphabet()
        .into_iter()
        .map(|(d, c)| (Int::from(d), c))
        .collect();
    for m in 1..=order {
        let prev = &f_pows[m - 1];
        let mut next: BTreeMap<Int, Rat> = BTreeMap::new();
        for (nu1, c1) in prev {
            for (nu2, c2) in &f_base {
                let nu = nu1 + nu2;
                let prod = c1 * c2;
                next.entry(nu)
                    .and_modify(|acc: &mut Rat| *acc += &prod)
                    .or_insert(prod);
            }
        }
        next.retain(|_, c| !c.is_zero());
        f_pows.push(next);
    }

    let scale = Int::from(order as u64) * Int::from(f.degree());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| terms[j].cmp(&terms[i]));
    let mut suffix_reach = vec![Int::zero(); n + 1];
    for t in (0..n).rev() {
        suffix_reach[t] = &suffix_reach[t + 1] + &terms[idx[t]] * &scale;
    }

    // acc[g]: map frequency -> exact coefficient of theta^g.
    let mut acc: Vec<BTreeMap<Int, Rat>> = vec![BTreeMap::new(); order + 1];
    acc[0].insert(Int::zero(), Rat::one());
    for t in 0..n {
        let a_j = &terms[idx[t]];
        let reach = &suffix_reach[t + 1];
        let mut next: Vec<BTreeMap<Int, Rat>> = vec![BTreeMap::new(); order + 1];
        for (g_acc, layer) in acc.iter().enumerate() {
            if layer.is_empty() {
                continue;
            }
            for (g_fac, f_pow) in f_pows.iter().enumerate().take(order + 1 - g_acc) {
                let inv_fact = Rat::new(Int::one(), factorial(g_fac as u64));
                for (nu1, c1) in layer {
                    for (nu2, c2) in f_pow {
                        let nu = nu1 + nu2 * a_j;
                        if nu.magnitude() > reach.magnitude() {
                            continue;
                        }
                        let prod = c1 * c2 * &inv_fact;
                        next[g_acc + g_fac]
                            .entry(nu)
                            .and_modify(|acc: &mut Rat| *acc += &prod)
                            .or_insert(prod);
                    }
                }
            }
        }
        for layer in &mut next {
            layer.retain(|_, c| !c.is_zero());
        }
        acc = next;
    }
    Ok(acc
        .into_iter()
        .map(|layer| layer.get(&Int::zero()).cloned().unwrap_or_else(Rat::zero))
        .collect())
}

// ---------------------------------------------------------------------------
// Monte Carlo MGF
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct McMgf {
    pub estimate: Complex64,
    pub std_error: f64,
    pub samples: u64,
}

/// Plain Monte Carlo `E e^{theta S_n}` over the single uniform `U`, sharded
/// deterministically by seed; identical `(seed, samples)` give identical
/// results regardless of thread count.
pub fn mc_mgf(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
    theta: Complex64,
    samples: u64,
    seed: u64,
) -> Result<McMgf> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need samples >= 1".into()));
    }
    if n == 0 || n > terms.len() {
        return Err(Error::InvalidParameter(format!(
            "n must satisfy 1 <= n <= {}, got {n}",
            terms.len()
        )));
    }
    let sampler = FracSampler::new(&terms[..n]);
    let shards: u64 = samples.div_ceil(SHARD_SIZE);
    let partials: Vec<(Complex64, f64, f64)> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, shard));
            let mut scratch = sampler.scratch();
            let count = if shard == shards - 1 {
                samples - shard * SHARD_SIZE
            } else {
                SHARD_SIZE
            };
            let mut sum = Complex64::ZERO;
            let mut sq_re = 0.0;
            let mut sq_im = 0.0;
            for _ in 0..count {
                let s = sampler.sample_sum(f, &mut rng, &mut scratch);
                let v = (theta * s).exp();
                sum += v;
                sq_re += v.re * v.re;
                sq_im += v.im * v.im;
            }
            (sum, sq_re, sq_im)
        })
        .collect();
    // Sequential merge in shard order keeps the result bit-stable.
    let mut sum = Complex64::ZERO;
    let mut sq_re = 0.0;
    let mut sq_im = 0.0;
    for (s, re, im) in partials {
        sum += s;
        sq_re += re;
        sq_im += im;
    }
    let mean = sum / samples as f64;
    let var_re = (sq_re / samples as f64 - mean.re * mean.re).max(0.0);
    let var_im = (sq_im / samples as f64 - mean.im * mean.im).max(0.0);
    let std_error = ((var_re + var_im) / samples as f64).sqrt();
    Ok(McMgf {
        estimate: mean,
        std_error,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Gaertner-Ellis scaled log-MGF
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgfMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone)]
pub struct GeReport {
    pub n: usize,
    pub z_n: f64,
    pub theta: f64,
    /// `(1 / (n z_n)) log E e^{theta sqrt(z_n) S_n}`.
    pub value: f64,
    /// `theta^2 E X_1^2 / 2`.
    pub target: f64,
    pub gap: f64,
    pub method: MgfMethod,
}

/// The quantity whose convergence the Gaertner-Ellis argument needs:
/// `(1/(n z_n)) log E e^{theta sqrt(z_n) S_n}` against `theta^2 E X_1^2 / 2`.
#[allow(clippy::too_many_arguments)]
pub fn ge_scaled_log_mgf(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
    z_n: f64,
    theta: f64,
    opts: &MgfOptions,
    mc_samples: u64,
    seed: u64,
) -> Result<GeReport> {
    if !(z_n > 0.0) {
        return Err(Error::InvalidParameter("need z_n > 0".into()));
    }
    let scaled_theta = Complex64::new(theta * z_n.sqrt(), 0.0);
    let (mgf, method) = match exact_mgf(f, terms, n, scaled_theta, opts) {
        Ok(v) => (v.value.re, MgfMethod::Exact),
        Err(Error::BudgetExceeded { .. }) | Err(Error::InvalidParameter(_)) => {
            let mc = mc_mgf(f, terms, n, scaled_theta, mc_samples, seed)?;
            (mc.estimate.re, MgfMethod::MonteCarlo)
        }
        Err(e) => return Err(e),
    };
    if !(mgf > 0.0) {
        return Err(Error::DegenerateEstimate(format!(
            "MGF estimate {mgf} is not positive; cannot take log"
        )));
    }
    let value = mgf.ln() / (n as f64 * z_n);
    let target = theta * theta * rat_to_f64(&f.second_moment()) / 2.0;
    Ok(GeReport {
        n,
        z_n,
        theta,
        value,
        target,
        gap: (value - target).abs(),
        method,
    })
}

// ---------------------------------------------------------------------------
// Mod-Gaussian residual
// ---------------------------------------------------------------------------

/// The limiting function `psi(theta) = exp(theta^rho gamma_rho / rho!)`.
#[derive(Debug, Clone)]
pub struct ModGaussianTarget {
    pub rho: usize,
    pub gamma_rho: Rat,
}

impl ModGaussianTarget {
    pub fn from_poly(f: &TrigPoly, rho_cap: usize) -> Result<Self> {
        let (rho, gamma_rho) = rho_of(f, rho_cap)?;
        Ok(Self { rho, gamma_rho })
    }

    pub fn psi(&self, theta: Complex64) -> Complex64 {
        let coeff = rat_to_f64(&self.gamma_rho)
            / factorial(self.rho as u64).to_f64().unwrap_or(f64::INFINITY);
        (theta.powu(self.rho as u32) * coeff).exp()
    }
}

/// Which variance normalizer multiplies `theta^2/2` in the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `n^{1 - 2/rho} E X_1^2`.
    PerTermVariance,
    /// `sigma_n^2 / n^{2/rho}` with the exact `sigma_n^2 = E S_n^2`.
    ExactVariance,
}

#[derive(Debug, Clone)]
pub struct ModGaussReport {
    pub n: usize,
    pub theta: Complex64,
    /// `exp(-theta^2 v_n / 2) E exp(theta S_n / n^{1/rho})`.
    pub residual: Complex64,
    pub target: Complex64,
    pub distance: f64,
    pub mgf_error_bound: f64,
    /// Present when neither growth condition certified on this prefix.
    pub condition_warning: Option<String>,
}

pub fn mod_gaussian_residual(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
    target: &ModGaussianTarget,
    theta: Complex64,
    normalization: Normalization,
    opts: &MgfOptions,
) -> Result<ModGaussReport> {
    let rho = target.rho;
    let n_f = n as f64;
    let scaled_theta = theta / n_f.powf(1.0 / rho as f64);
    let mgf = exact_mgf(f, terms, n, scaled_theta, opts)?;
    let v_n = match normalization {
        Normalization::PerTermVariance => {
            n_f.powf(1.0 - 2.0 / rho as f64) * rat_to_f64(&f.second_moment())
        }
        Normalization::ExactVariance => {
            let sigma2 = crate::moments::sum_moment(f, terms, n, 2)?;
            rat_to_f64(&sigma2) / n_f.powf(2.0 / rho as f64)
        }
    };
    let residual = (-theta * theta * (v_n / 2.0)).exp() * mgf.value;
    let psi = target.psi(theta);
    let condition_warning = growth_warning(terms, rho as u32);
    Ok(ModGaussReport {
        n,
        theta,
        residual,
        target: psi,
        distance: (residual - psi).norm(),
        mgf_error_bound: mgf.error_bound,
        condition_warning,
    })
}

fn growth_warning(terms: &[Int], rho: u32) -> Option<String> {
    let c1 = check_growth_condition(terms, rho, GrowthCondition::One, None);
    let c2 = check_growth_condition(terms, rho, GrowthCondition::Two, None);
    match (c1, c2) {
        (Ok(r1), _) if r1.holds() => None,
        (_, Ok(r2)) if r2.holds() => None,
        _ => Some(
            "neither growth condition 1 nor 2 certified on this prefix; \
             the mod-Gaussian limit is not guaranteed here"
                .into(),
        ),
    }
}
