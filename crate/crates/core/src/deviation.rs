//! Moderate-deviation machinery: scaling schedules `(z_n, x_n, y_n, b_n)`,
//! seeded Monte Carlo estimates of normalized log-tails against the `t^2/2`
//! rate, the Rudzkis-Saulis-Statulevicius tail envelope, and Gaussian tail
//! brackets.
//!
//! The MDP statements are asymptotic; everything here is trend-and-band
//! based. Estimates carry Wilson intervals, and runs whose expected hit
//! count is too small are refused rather than reported.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{rat_to_f64, Int};
use crate::moments::sum_moment;
use crate::sampling::{sample_iid_sum, shard_seed, FracSampler, SHARD_SIZE};
use crate::trigpoly::TrigPoly;

// ---------------------------------------------------------------------------
// Scaling schedules
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `z_n = n^{-alpha}`.
    Power { alpha: f64 },
    /// `z_n = n^{-alpha} (log n)^{-beta}`.
    LogPower { alpha: f64, beta: f64 },
}

impl ScheduleKind {
    fn z(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            ScheduleKind::Power { alpha } => nf.powf(-alpha),
            ScheduleKind::LogPower { alpha, beta } => nf.powf(-alpha) * nf.ln().powf(-beta),
        }
    }
}

/// One schedule row. `y_n` and `b_n` are exposed as consistent derived
/// quantities: `y_n^2 = x_n * variance` and `b_n^2 = x_n` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleRow {
    pub n: usize,
    pub z_n: f64,
    /// `E (S_n^f)^2` (exact source) or `n E X_1^2` (per-term source).
    pub variance: f64,
    /// Speed `x_n = z_n * variance`.
    pub x_n: f64,
}

impl ScheduleRow {
    pub fn y_n_sq(&self) -> f64 {
        self.x_n * self.variance
    }

    /// Scaling `y_n = sqrt(z_n) * variance`.
    pub fn y_n(&self) -> f64 {
        self.y_n_sq().sqrt()
    }

    pub fn b_n_sq(&self) -> f64 {
        self.x_n
    }

    pub fn b_n(&self) -> f64 {
        self.x_n.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct ScalingSchedule {
    pub kind: ScheduleKind,
    pub rows: Vec<ScheduleRow>,
    /// Trend certificate for `z_n n -> infinity` on the given list.
    pub zn_n_diverges: bool,
    /// Trend certificate for `z_n (log n)^2 -> 0` on the given list.
    pub zn_log2_vanishes: bool,
}

impl ScalingSchedule {
    /// Hypotheses of the integer-ratio MDP: both trends.
    pub fn admissible_integer_ratios(&self) -> bool {
        self.zn_n_diverges && self.zn_log2_vanishes
    }

    /// Hypotheses of the large-gap MDP: only `z_n n -> infinity`.
    pub fn admissible_large_gap(&self) -> bool {
        self.zn_n_diverges
    }
}

/// Build a schedule over `n_list` (sorted, deduplicated, at least two
/// entries) with the variance supplied per `n`.
pub fn make_schedule(
    kind: ScheduleKind,
    n_list: &[usize],
    variance: impl Fn(usize) -> f64,
) -> Result<ScalingSchedule> {
    let mut ns: Vec<usize> = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two distinct n to certify a trend".into(),
        ));
    }
    if matches!(kind, ScheduleKind::LogPower { .. }) && ns[0] < 2 {
        return Err(Error::InvalidParameter("log-power schedules need n >= 2".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let z_n = kind.z(n);
        if !(z_n > 0.0) || !z_n.is_finite() {
            return Err(Error::InvalidParameter(format!("z_{n} = {z_n} is not positive")));
        }
        let v = variance(n);
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("variance at n = {n} must be positive")));
        }
        rows.push(ScheduleRow {
            n,
            z_n,
            variance: v,
            x_n: z_n * v,
        });
    }
    let zn_n: Vec<f64> = rows.iter().map(|r| r.z_n * r.n as f64).collect();
    let zn_log2: Vec<f64> = rows
        .iter()
        .map(|r| r.z_n * (r.n as f64).ln().powi(2))
        .collect();
    Ok(ScalingSchedule {
        kind,
        rows,
        zn_n_diverges: zn_n.windows(2).all(|w| w[1] > w[0]),
        zn_log2_vanishes: zn_log2.windows(2).all(|w| w[1] < w[0]),
    })
}

// ---------------------------------------------------------------------------
// Gaussian tails
// ---------------------------------------------------------------------------

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Two-sided Mills-ratio bracket on `P(G > x)`:
/// `phi(x) x / (x^2 + 1) <= P(G > x) <= phi(x) / x` for `x > 0`, exact `1/2`
/// at zero.
pub fn gaussian_tail(x: f64) -> Result<(f64, f64)> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter("need x >= 0".into()));
    }
    if x == 0.0 {
        return Ok((0.5, 0.5));
    }
    let phi = normal_pdf(x);
    Ok((phi * x / (x * x + 1.0), phi / x))
}

/// Point value of `P(G > x)` via erfc: series for small arguments, Lentz
/// continued fraction beyond.
pub fn standard_normal_tail(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - standard_normal_tail(-x);
    }
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn erfc(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < 2.0 {
        1.0 - erf_series(z)
    } else {
        erfc_continued_fraction(z)
    }
}

fn erf_series(z: f64) -> f64 {
    // erf(z) = (2/sqrt(pi)) sum (-1)^n z^{2n+1} / (n! (2n+1))
    let mut term = z;
    let mut sum = z;
    let z2 = z * z;
    for n in 1..200 {
        term *= -z2 / n as f64;
        let add = term / (2.0 * n as f64 + 1.0);
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

fn erfc_continued_fraction(z: f64) -> f64 {
    // erfc(z) = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    let tiny = 1e-300;
    let mut f = z.max(tiny);
    let mut c = f;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64 / 2.0;
        // b = z for every level of this CF.
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-z * z).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(hits: u64, samples: u64, z: f64) -> (f64, f64) {
    assert!(samples > 0);
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

// ---------------------------------------------------------------------------
// Empirical MDP rate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailKind {
    /// `S_n / y_n` over the single uniform.
    Dependent,
    /// `T_n / y_n` with independent uniforms, same schedule.
    Iid,
}

#[derive(Debug, Clone)]
pub struct MdpEstimate {
    pub n: usize,
    pub t: f64,
    pub x_n: f64,
    pub y_n: f64,
    pub hits: u64,
    pub samples: u64,
    pub p_hat: f64,
    /// `(1/x_n) log p_hat`; `None` when no hits landed (one-sided bound
    /// still available through `lo`/`hi`).
    pub value: Option<f64>,
    /// 95% Wilson band mapped to the normalized log scale.
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
}

impl MdpEstimate {
    pub fn band_midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn band_overlaps(&self, other: &MdpEstimate) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

pub const DEFAULT_MIN_EXPECTED_HITS: f64 = 50.0;

/// Monte Carlo estimate of `(1/x_n) log P(S_n / y_n > t)` against the MDP
/// rate `-t^2 / 2`.
///
/// Feasibility is checked before sampling: the normal-approximation expected
/// hit count `samples * Phi_bar(t sqrt(x_n))` must reach `min_hits`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_mdp_rate(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
    z_n: f64,
    t: f64,
    samples: u64,
    seed: u64,
    kind: TailKind,
    min_hits: f64,
) -> Result<MdpEstimate> {
    if !(t > 0.0) && t != 0.0 {
        return Err(Error::InvalidParameter("need t >= 0".into()));
    }
    if !(z_n > 0.0) {
        return Err(Error::InvalidParameter("need z_n > 0".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("need samples >= 1".into()));
    }
    let variance = rat_to_f64(&sum_moment(f, terms, n, 2)?);
    let x_n = z_n * variance;
    let y_n = (x_n * variance).sqrt();

    // Normal proxy: S_n / y_n > t corresponds to a Gaussian tail at
    // t y_n / sigma_n = t sqrt(x_n).
    let p_proxy = standard_normal_tail(t * x_n.sqrt());
    let expected = samples as f64 * p_proxy;
    if expected < min_hits {
        return Err(Error::Infeasible(format!(
            "expected hit count {expected:.1} below {min_hits} at n = {n}, t = {t}; \
             lower t, raise samples, or shrink n"
        )));
    }

    let threshold = t * y_n;
    let hits = mc_tail_count(f, terms, n, threshold, samples, seed, kind);
    let p_hat = hits as f64 / samples as f64;
    let (p_lo, p_hi) = wilson_interval(hits, samples, 1.96);
    let value = if hits > 0 { Some(p_hat.ln() / x_n) } else { None };
    Ok(MdpEstimate {
        n,
        t,
        x_n,
        y_n,
        hits,
        samples,
        p_hat,
        value,
        lo: if p_lo > 0.0 { p_lo.ln() / x_n } else { f64::NEG_INFINITY },
        hi: if p_hi > 0.0 { p_hi.ln() / x_n } else { f64::NEG_INFINITY },
        target: -t * t / 2.0,
    })
}

/// Seeded, sharded count of `{sum > threshold}`; hit counts merge exactly,
/// so the result is independent of the thread schedule.
pub fn mc_tail_count(
    f: &TrigPoly,
    terms: &[Int],
    n: usize,
    threshold: f64,
    samples: u64,
    seed: u64,
    kind: TailKind,
) -> u64 {
    let sampler = match kind {
        TailKind::Dependent => Some(FracSampler::new(&terms[..n])),
        TailKind::Iid => None,
    };
    let shards: u64 = samples.div_ceil(SHARD_SIZE);
    (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, shard));
            let count = if shard == shards - 1 {
                samples - shard * SHARD_SIZE
            } else {
                SHARD_SIZE
            };
            let mut hits = 0u64;
            match &sampler {
                Some(s) => {
                    let mut scratch = s.scratch();
                    for _ in 0..count {
                        if s.sample_sum(f, &mut rng, &mut scratch) > threshold {
                            hits += 1;
                        }
                    }
                }
                None => {
                    for _ in 0..count {
                        if sample_iid_sum(f, n, &mut rng) > threshold {
                            hits += 1;
                        }
                    }
                }
            }
            hits
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Rudzkis-Saulis-Statulevicius envelope
// ---------------------------------------------------------------------------

/// Parameters of the RSS tail comparison lemma: `Theta > 0`,
/// `1 <= s <= 2 Theta^2`, evaluation point `0 <= x < sqrt(s) / (3 sqrt(e))`,
/// and `x < sqrt(2) Theta / (3 sqrt(e))` for the `L` bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssParams {
    pub theta: f64,
    pub s: f64,
    pub x: f64,
}

impl RssParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(Error::InvalidParameter("need Theta > 0".into()));
        }
        if !(1.0 <= self.s && self.s <= 2.0 * self.theta * self.theta) {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= s <= 2 Theta^2, got s = {}, Theta = {}",
                self.s, self.theta
            )));
        }
        let e_sqrt = std::f64::consts::E.sqrt();
        if !(0.0 <= self.x && self.x < self.s.sqrt() / (3.0 * e_sqrt)) {
            return Err(Error::InvalidParameter(format!(
                "x = {} outside [0, sqrt(s)/(3 sqrt(e))) = [0, {})",
                self.x,
                self.s.sqrt() / (3.0 * e_sqrt)
            )));
        }
        if !(self.x < 2f64.sqrt() * self.theta / (3.0 * e_sqrt)) {
            return Err(Error::InvalidParameter(
                "x outside the domain of the L(x) bound".into(),
            ));
        }
        Ok(())
    }

    /// The lemma's explicit bound on `f(x)`.
    pub fn f_bar(&self) -> f64 {
        let e_sqrt = std::f64::consts::E.sqrt();
        let margin = 1.0 - 3.0 * e_sqrt * self.x / self.s.sqrt();
        (117.0 + 96.0 * self.s * (-0.5 * self.s.powf(0.25) * margin).exp()) / margin
    }

    /// The lemma's bound on `|L(x)|`.
    pub fn l_max(&self) -> f64 {
        5.0 * self.x.powi(3) / (4.0 * self.theta)
    }
}

/// Multiplicative envelope for `P(Z > x) / P(G > x)`:
/// `e^{+-L_max} (1 +- f_bar (x+1)/sqrt(s))`, lower clamped at zero.
pub fn rss_envelope(params: &RssParams) -> Result<(f64, f64)> {
    params.validate()?;
    let spread = params.f_bar() * (params.x + 1.0) / params.s.sqrt();
    let l = params.l_max();
    let lower = ((-l).exp() * (1.0 - spread)).max(0.0);
    let upper = l.exp() * (1.0 + spread);
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{build_sequence, SequenceSpec};

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

    /// Composite Simpson quadrature of the normal density: the independent
    /// tail oracle for this module. 2^14 panels on [x, x+14] leave a
    /// discretization error around (h^4/180) max|phi''''| ~ 1e-13 relative,
    /// far tighter than any tolerance asserted here.
    fn normal_tail_oracle(x: f64) -> f64 {
        let b = x + 14.0; // phi(x+14)/phi(x) < e^{-98}: truncation negligible
        let panels = 1usize << 14;
        let h = (b - x) / panels as f64;
        let mut acc = normal_pdf(x) + normal_pdf(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * normal_pdf(x + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn schedule_admissibility_examples() {
        // (log n)^2 / sqrt(n) peaks near n = 55; certify the trend past it.
        let ns = [100usize, 1_000, 10_000, 100_000];
        let var = |n: usize| n as f64 / 2.0;
        let s = make_schedule(ScheduleKind::Power { alpha: 0.5 }, &ns, var).unwrap();
        assert!(s.zn_n_diverges && s.zn_log2_vanishes);
        assert!(s.admissible_integer_ratios());

        let s = make_schedule(ScheduleKind::LogPower { alpha: 0.0, beta: 2.0 }, &ns, var).unwrap();
        assert!(s.zn_n_diverges);
        assert!(!s.zn_log2_vanishes, "z_n (log n)^2 = 1 identically");
        assert!(!s.admissible_integer_ratios());
        assert!(s.admissible_large_gap());

        let s = make_schedule(ScheduleKind::Power { alpha: 1.0 }, &ns, var).unwrap();
        assert!(!s.zn_n_diverges, "z_n n = 1 is the CLT scaling, not admissible");
    }

    #[test]
    fn schedule_identities_are_structural() {
        let ns = [8usize, 27, 125];
        let s = make_schedule(ScheduleKind::Power { alpha: 0.66 }, &ns, |n| n as f64 / 2.0).unwrap();
        for row in &s.rows {
            assert_eq!(row.y_n_sq(), row.x_n * row.variance);
            assert_eq!(row.b_n_sq(), row.x_n);
            assert_eq!(row.y_n(), row.y_n_sq().sqrt());
        }
    }

    #[test]
    fn gaussian_tail_bracket_examples() {
        assert_eq!(gaussian_tail(0.0).unwrap(), (0.5, 0.5));
        let (lo, hi) = gaussian_tail(2.0).unwrap();
        assert!(lo <= 0.02275 && 0.02275 <= hi);
        assert!(gaussian_tail(-1.0).is_err());
    }

    #[test]
    fn bracket_contains_oracle_everywhere_sampled() {
        for i in 1..=60 {
            let x = i as f64 * 0.15;
            let (lo, hi) = gaussian_tail(x).unwrap();
            let p = normal_tail_oracle(x);
            assert!(lo <= p && p <= hi, "x = {x}: {lo} !<= {p} !<= {hi}");
        }
    }

    #[test]
    fn point_tail_matches_oracle() {
        for x in [0.0, 0.31, 1.0, 1.9, 2.0, 2.7, 4.0, 6.0, 8.0] {
            let p = standard_normal_tail(x);
            let oracle = normal_tail_oracle(x);
            let rel = (p - oracle).abs() / oracle;
            assert!(rel < 1e-9, "x = {x}: {p} vs {oracle} (rel {rel:.2e})");
        }
    }

    #[test]
    fn log_tail_over_half_x_squared_tends_to_one() {
        let ratios: Vec<f64> = [2.0f64, 4.0, 6.0, 8.0]
            .iter()
            .map(|&x| -normal_tail_oracle(x).ln() / (x * x / 2.0))
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] < w[0], "ratio must decrease toward 1: {ratios:?}");
        }
        assert!((ratios[3] - 1.0).abs() < 0.1);
    }

    #[test]
    fn wilson_interval_basics() {
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(hi - lo < 0.2);
        let (lo, hi) = wilson_interval(0, 1000, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
    }

    #[test]
    fn mdp_estimate_at_t_zero_hits_half() {
        // P(S_n / y_n > 0) should sit near 1/2 for the cosine case.
        let cos = TrigPoly::cosine();
        let terms = geometric2(12);
        let est = empirical_mdp_rate(
            &cos,
            &terms,
            12,
            (12f64).powf(-2.0 / 3.0),
            0.0,
            100_000,
            1234,
            TailKind::Dependent,
            DEFAULT_MIN_EXPECTED_HITS,
        )
        .unwrap();
        assert!(est.p_hat > 0.4 && est.p_hat < 0.6, "p_hat = {}", est.p_hat);
        assert_eq!(est.target, 0.0);
    }

    #[test]
    fn mdp_infeasible_runs_are_refused() {
        let cos = TrigPoly::cosine();
        let terms = geometric2(12);
        let err = empirical_mdp_rate(
            &cos,
            &terms,
            12,
            1.0, // x_n = 6: Phi_bar(8 * sqrt(6)) is astronomically small
            8.0,
            10_000,
            1,
            TailKind::Dependent,
            DEFAULT_MIN_EXPECTED_HITS,
        );
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn mdp_sn_and_tn_bands_overlap_at_moderate_scale() {
        // The skewness gap between S_n and T_n enters through He_2(z) =
        // z^2 - 1, so evaluating at z = t sqrt(x_n) = 1 makes the genuine
        // difference sub-noise at this sample count.
        let cos = TrigPoly::cosine();
        let n = 96;
        let terms = geometric2(n);
        let z = (n as f64).powf(-2.0 / 3.0);
        let x_n = z * n as f64 / 2.0;
        let t_eval = 1.0 / x_n.sqrt();
        let s = empirical_mdp_rate(&cos, &terms, n, z, t_eval, 200_000, 7, TailKind::Dependent, 50.0)
            .unwrap();
        let t = empirical_mdp_rate(&cos, &terms, n, z, t_eval, 200_000, 11, TailKind::Iid, 50.0)
            .unwrap();
        assert!(s.band_overlaps(&t), "S: [{}, {}], T: [{}, {}]", s.lo, s.hi, t.lo, t.hi);
    }

    #[test]
    fn zero_hits_reports_one_sided_bound() {
        // Disable the feasibility guard and ask for an absurd level: no
        // hits, no point estimate, but a finite upper bound survives.
        let cos = TrigPoly::cosine();
        let terms = geometric2(8);
        let est = empirical_mdp_rate(
            &cos,
            &terms,
            8,
            0.25,
            40.0,
            10_000,
            3,
            TailKind::Dependent,
            0.0,
        )
        .unwrap();
        assert_eq!(est.hits, 0);
        assert!(est.value.is_none());
        assert_eq!(est.lo, f64::NEG_INFINITY);
        assert!(est.hi.is_finite() && est.hi < 0.0);
    }

    #[test]
    fn tail_counts_are_deterministic() {
        let cos = TrigPoly::cosine();
        let terms = geometric2(8);
        let a = mc_tail_count(&cos, &terms, 8, 1.5, 150_000, 99, TailKind::Dependent);
        let b = mc_tail_count(&cos, &terms, 8, 1.5, 150_000, 99, TailKind::Dependent);
        assert_eq!(a, b);
    }

    #[test]
    fn rss_envelope_contains_one_at_zero() {
        let p = RssParams {
            theta: 100.0,
            s: 2e4,
            x: 0.0,
        };
        let (lo, hi) = rss_envelope(&p).unwrap();
        assert!(lo <= 1.0 && 1.0 <= hi);
        assert!(lo >= 0.0);
    }

    #[test]
    fn rss_envelope_tightens_as_theta_grows() {
        // At Theta = 100 the lower end clamps to zero; the width must shrink
        // as (Theta, s) grow, reaching upper/lower <= 1.2 by Theta = 2000.
        let mut widths = Vec::new();
        for theta in [100.0f64, 500.0, 1000.0, 2000.0] {
            let p = RssParams {
                theta,
                s: 2.0 * theta * theta,
                x: 1.0,
            };
            let (lo, hi) = rss_envelope(&p).unwrap();
            widths.push(hi - lo);
        }
        for w in widths.windows(2) {
            assert!(w[1] < w[0], "widths must shrink: {widths:?}");
        }
        let p = RssParams {
            theta: 2000.0,
            s: 2.0 * 2000.0f64 * 2000.0,
            x: 1.0,
        };
        let (lo, hi) = rss_envelope(&p).unwrap();
        assert!(lo > 0.0 && hi / lo <= 1.2, "ratio {}", hi / lo);
    }

    #[test]
    fn rss_domain_is_enforced() {
        let p = RssParams {
            theta: 10.0,
            s: 150.0,
            x: 5.0, // sqrt(150)/(3 sqrt(e)) ~ 2.47
        };
        assert!(rss_envelope(&p).is_err());
        let p = RssParams {
            theta: 10.0,
            s: 300.0,
            x: 0.5,
        };
        assert!(matches!(rss_envelope(&p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rss_envelope_upper_dominates_lower() {
        for theta in [50.0, 120.0, 700.0] {
            for xi in 0..5 {
                let p = RssParams {
                    theta,
                    s: theta * theta, // within [1, 2 Theta^2]
                    x: xi as f64 * 0.4,
                };
                let (lo, hi) = rss_envelope(&p).unwrap();
                assert!(hi >= lo);
            }
        }
    }
}
