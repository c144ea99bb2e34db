//! Correlation graphs for lacunary families: the window graph `i ~ j iff
//! |i - j| <= k` with `k = ceil(log2(M D))` is a correlation graph of range
//! `M` when all ratios `a_{n+1}/a_n` are integers `>= 2`.  The verifier below
//! checks the defining factorization identity exhaustively, in exact
//! rationals, on a prefix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;

use crate::diophantine::EnumBudget;
use crate::error::{Error, Result};
use crate::exact::{rat_display, Int, Rat};
use crate::moments::mixed_moment;
use crate::sequences::check_integer_ratios;
use crate::trigpoly::TrigPoly;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrelationGraph {
    range: u32,
    window: u32,
}

/// `k = ceil(log(M D) / log 2)`: the smallest `k` with `2^k >= M D`.
pub fn build_graph(range_m: u32, degree_d: u32) -> Result<CorrelationGraph> {
    if range_m < 2 {
        return Err(Error::InvalidParameter(format!(
            "correlation graph range must be >= 2, got {range_m}"
        )));
    }
    if degree_d < 1 {
        return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
    }
    let md = range_m as u64 * degree_d as u64;
    let window = 64 - (md - 1).leading_zeros(); // bits of md-1 = ceil(log2 md)
    Ok(CorrelationGraph {
        range: range_m,
        window,
    })
}

impl CorrelationGraph {
    pub fn range(&self) -> u32 {
        self.range
    }

    /// Window width `k`.
    pub fn window(&self) -> u32 {
        self.window
    }

    /// Vertices are naturals; `i ~ j` iff `i != j` and `|i - j| <= k`.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i != j && i.abs_diff(j) <= self.window as usize
    }

    /// Maximal degree on the infinite path: `2k`.
    pub fn path_degree(&self) -> u64 {
        2 * self.window as u64
    }

    /// Realized degree of vertex `v` on `{1..n}` (1-based).
    pub fn degree_on_prefix(&self, v: usize, n: usize) -> u64 {
        (1..=n).filter(|&u| self.adjacent(u, v)).count() as u64
    }

    /// No edge between the two vertex sets.
    pub fn separated(&self, v1: &[usize], v2: &[usize]) -> bool {
        v1.iter().all(|&i| v2.iter().all(|&j| !self.adjacent(i, j)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
    pub picks1: Vec<usize>,
    pub picks2: Vec<usize>,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UncorrelationOutcome {
    pub pass: bool,
    /// Number of factorization identities checked.
    pub tested: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

/// Guard for the exhaustive split enumeration: `3^n` set pairs.
pub const EXHAUSTIVE_MAX_N: usize = 12;
pub const EXHAUSTIVE_MAX_M: u32 = 6;

/// Exhaustively verify the correlation-graph identity on `{1..n}`: for every
/// pair of disjoint nonempty separated vertex sets and every pair of pick
/// multisets with total size `<= M`,
/// `E prod X_{v_i} prod X_{w_j} = E prod X_{v_i} * E prod X_{w_j}` in exact
/// rationals.
///
/// Refuses sequences without integer ratios: the identity genuinely fails
/// for general lacunary sequences, so running it there would certify nothing.
pub fn verify_uncorrelation(
    f: &TrigPoly,
    terms: &[Int],
    graph: &CorrelationGraph,
    range_m: u32,
    n: usize,
) -> Result<UncorrelationOutcome> {
    check_hypotheses(terms, n)?;
    if n > EXHAUSTIVE_MAX_N || range_m > EXHAUSTIVE_MAX_M {
        return Err(Error::InvalidParameter(format!(
            "exhaustive verification is capped at n <= {EXHAUSTIVE_MAX_N}, M <= {EXHAUSTIVE_MAX_M}; \
             use verify_uncorrelation_sampled beyond that"
        )));
    }
    verify_uncorrelation_unchecked(f, terms, graph, range_m, n)
}

fn check_hypotheses(terms: &[Int], n: usize) -> Result<()> {
    if n < 2 || n > terms.len() {
        return Err(Error::InvalidParameter(format!(
            "n must satisfy 2 <= n <= {}, got {n}",
            terms.len()
        )));
    }
    let integer = check_integer_ratios(&terms[..n])?;
    if !integer.holds() {
        return Err(Error::InvalidParameter(
            "correlation-graph construction requires a_{n+1}/a_n in {2,3,...}; \
             the identity does not hold for general lacunary sequences"
                .into(),
        ));
    }
    Ok(())
}

fn verify_uncorrelation_unchecked(
    f: &TrigPoly,
    terms: &[Int],
    graph: &CorrelationGraph,
    range_m: u32,
    n: usize,
) -> Result<UncorrelationOutcome> {
    let mut cache = MomentCache::new(f, terms);
    let mut tested = 0u64;

    // Ternary masks: digit 0 = neither, 1 = V1, 2 = V2. Unordered pairs are
    // canonicalized by requiring the smallest used vertex to sit in V1.
    let total = 3usize.pow(n as u32);
    for mask in 0..total {
        let mut v1 = Vec::new();
        let mut v2 = Vec::new();
        let mut code = mask;
        for v in 1..=n {
            match code % 3 {
                1 => v1.push(v),
                2 => v2.push(v),
                _ => {}
            }
            code /= 3;
        }
        if v1.is_empty() || v2.is_empty() || v1[0] > v2[0] {
            continue;
        }
        if !graph.separated(&v1, &v2) {
            continue;
        }
        if let Some(cex) = check_pair(&mut cache, graph, range_m, &v1, &v2, &mut tested)? {
            return Ok(UncorrelationOutcome {
                pass: false,
                tested,
                counterexample: Some(cex),
            });
        }
    }
    Ok(UncorrelationOutcome {
        pass: true,
        tested,
        counterexample: None,
    })
}

/// Randomized variant for prefixes beyond the exhaustive cap: checks
/// `samples` random separated set pairs with random pick multisets.
pub fn verify_uncorrelation_sampled(
    f: &TrigPoly,
    terms: &[Int],
    graph: &CorrelationGraph,
    range_m: u32,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<UncorrelationOutcome> {
    check_hypotheses(terms, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache = MomentCache::new(f, terms);
    let mut tested = 0u64;
    let mut drawn = 0u64;
    let mut attempts = 0u64;
    while drawn < samples {
        attempts += 1;
        if attempts > samples.saturating_mul(1000) {
            return Err(Error::Infeasible(
                "could not draw separated vertex sets; window too wide for this n".into(),
            ));
        }
        let mut v1 = Vec::new();
        let mut v2 = Vec::new();
        for v in 1..=n {
            match rng.gen_range(0..3) {
                1 => v1.push(v),
                2 => v2.push(v),
                _ => {}
            }
        }
        if v1.is_empty() || v2.is_empty() || !graph.separated(&v1, &v2) {
            continue;
        }
        drawn += 1;
        let r = rng.gen_range(1..range_m);
        let s = rng.gen_range(1..=(range_m - r));
        let picks1: Vec<usize> = (0..r).map(|_| v1[rng.gen_range(0..v1.len())]).collect();
        let picks2: Vec<usize> = (0..s).map(|_| v2[rng.gen_range(0..v2.len())]).collect();
        if let Some(cex) = check_identity(&mut cache, &v1, &v2, &picks1, &picks2, &mut tested)? {
            return Ok(UncorrelationOutcome {
                pass: false,
                tested,
                counterexample: Some(cex),
            });
        }
    }
    Ok(UncorrelationOutcome {
        pass: true,
        tested,
        counterexample: None,
    })
}

struct MomentCache<'a> {
    f: &'a TrigPoly,
    terms: &'a [Int],
    budget: EnumBudget,
    cache: HashMap<Vec<usize>, Rat>,
}

impl<'a> MomentCache<'a> {
    fn new(f: &'a TrigPoly, terms: &'a [Int]) -> Self {
        Self {
            f,
            terms,
            budget: EnumBudget::default_budget(),
            cache: HashMap::new(),
        }
    }

    /// `E prod_{v in multiset} X_v` for a sorted 1-based index multiset.
    fn moment(&mut self, multiset: &[usize]) -> Result<Rat> {
        if let Some(v) = self.cache.get(multiset) {
            return Ok(v.clone());
        }
        let picked: Vec<Int> = multiset.iter().map(|&v| self.terms[v - 1].clone()).collect();
        let value = mixed_moment(self.f, &picked, &mut self.budget)?;
        self.cache.insert(multiset.to_vec(), value.clone());
        Ok(value)
    }
}

fn check_pair(
    cache: &mut MomentCache,
    _graph: &CorrelationGraph,
    range_m: u32,
    v1: &[usize],
    v2: &[usize],
    tested: &mut u64,
) -> Result<Option<Counterexample>> {
    let m = range_m as usize;
    for r in 1..m {
        for picks1 in multisets(v1, r) {
            for s in 1..=(m - r) {
                for picks2 in multisets(v2, s) {
                    if let Some(cex) = check_identity(cache, v1, v2, &picks1, &picks2, tested)? {
                        return Ok(Some(cex));
                    }
                }
            }
        }
    }
    Ok(None)
}

fn check_identity(
    cache: &mut MomentCache,
    v1: &[usize],
    v2: &[usize],
    picks1: &[usize],
    picks2: &[usize],
    tested: &mut u64,
) -> Result<Option<Counterexample>> {
    let mut p1 = picks1.to_vec();
    let mut p2 = picks2.to_vec();
    p1.sort_unstable();
    p2.sort_unstable();
    let mut combined = [p1.as_slice(), p2.as_slice()].concat();
    combined.sort_unstable();
    let lhs = cache.moment(&combined)?;
    let rhs = cache.moment(&p1)? * cache.moment(&p2)?;
    *tested += 1;
    if lhs != rhs {
        return Ok(Some(Counterexample {
            v1: v1.to_vec(),
            v2: v2.to_vec(),
            picks1: p1,
            picks2: p2,
            lhs: rat_display(&lhs),
            rhs: rat_display(&rhs),
        }));
    }
    Ok(None)
}

/// All multisets (combinations with repetition) of the given size drawn from
/// a sorted vertex slice.
fn multisets(set: &[usize], size: usize) -> Vec<Vec<usize>> {
    fn rec(set: &[usize], size: usize, from: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for (i, &v) in set.iter().enumerate().skip(from) {
            current.push(v);
            rec(set, size, i, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    rec(set, size, 0, &mut Vec::with_capacity(size), &mut out);
    out
}
