//! Monte Carlo sampling of `S_n(u) = sum_j f(a_j u)`.
//!
//! A uniform `u` is drawn as a dyadic rational `k / 2^N` with
//! `N >= bits(a_n) + 53`, so `frac(a_j u) = (a_j k mod 2^N) / 2^N` is
//! computed by exact modular arithmetic: the huge terms of super-exponential
//! schedules lose no precision. The common case fits in a single `u128`
//! wrapping multiply; wider prefixes fall back to limb arithmetic.

use num_traits::ToPrimitive;
use rand::Rng;

use crate::exact::Int;
use crate::trigpoly::TrigPoly;

const FRAC_BITS: u32 = 53;

pub(crate) enum FracSampler {
    /// `bits(a_max) + 53 <= 127`: one wrapping multiply per term.
    Narrow { multipliers: Vec<u128> },
    /// Little-endian `u64` limbs, product truncated mod `2^(64 L)`.
    Wide { multipliers: Vec<Vec<u64>>, limbs: usize },
}

impl FracSampler {
    pub fn new(terms: &[Int]) -> Self {
        let max_bits = terms.iter().map(|t| t.bits()).max().unwrap_or(1);
        if max_bits + FRAC_BITS as u64 <= 127 {
            let multipliers = terms
                .iter()
                .map(|t| t.to_u128().expect("fits by construction"))
                .collect();
            FracSampler::Narrow { multipliers }
        } else {
            let limbs = (max_bits + 64).div_ceil(64) as usize;
            let multipliers = terms
                .iter()
                .map(|t| {
                    let digits = t.to_u64_digits().1;
                    let mut v = vec![0u64; limbs];
                    for (i, d) in digits.into_iter().enumerate().take(limbs) {
                        v[i] = d;
                    }
                    v
                })
                .collect();
            FracSampler::Wide { multipliers, limbs }
        }
    }

    pub fn scratch(&self) -> Scratch {
        match self {
            FracSampler::Narrow { .. } => Scratch {
                k_limbs: Vec::new(),
                prod: Vec::new(),
            },
            FracSampler::Wide { limbs, .. } => Scratch {
                k_limbs: vec![0; *limbs],
                prod: vec![0; *limbs],
            },
        }
    }

    /// Draw one `u` and return `S_n(u)` for the stored terms.
    pub fn sample_sum<R: Rng>(&self, f: &TrigPoly, rng: &mut R, scratch: &mut Scratch) -> f64 {
        match self {
            FracSampler::Narrow { multipliers } => {
                // Low limb first, mirroring the wide path's draw order.
                let lo = rng.gen::<u64>() as u128;
                let hi = rng.gen::<u64>() as u128;
                let k = lo | (hi << 64);
                let mut acc = 0.0;
                for &m in multipliers {
                    let frac = ((m.wrapping_mul(k)) >> (128 - FRAC_BITS)) as u64;
                    acc += f.eval(frac as f64 / (1u64 << FRAC_BITS) as f64);
                }
                acc
            }
            FracSampler::Wide { multipliers, limbs } => {
                for limb in scratch.k_limbs.iter_mut() {
                    *limb = rng.gen();
                }
                let mut acc = 0.0;
                for m in multipliers {
                    mul_mod_limbs(m, &scratch.k_limbs, &mut scratch.prod);
                    let hi = scratch.prod[limbs - 1] as u128;
                    let lo = if *limbs >= 2 { scratch.prod[limbs - 2] as u128 } else { 0 };
                    let top = ((hi << 64) | lo) >> (128 - FRAC_BITS);
                    acc += f.eval(top as f64 / (1u64 << FRAC_BITS) as f64);
                }
                acc
            }
        }
    }
}

pub(crate) struct Scratch {
    k_limbs: Vec<u64>,
    prod: Vec<u64>,
}

/// Schoolbook multiply truncated mod `2^(64 L)`.
fn mul_mod_limbs(a: &[u64], k: &[u64], out: &mut [u64]) {
    out.fill(0);
    let l = a.len();
    for i in 0..l {
        if a[i] == 0 {
            continue;
        }
        let mut carry: u128 = 0;
        for j in 0..(l - i) {
            let idx = i + j;
            let cur = out[idx] as u128 + (a[i] as u128) * (k[j] as u128) + carry;
            out[idx] = cur as u64;
            carry = cur >> 64;
        }
    }
}

/// `T_n(u_1..u_n) = sum f(u_j)` with independent uniforms.
pub(crate) fn sample_iid_sum<R: Rng>(f: &TrigPoly, n: usize, rng: &mut R) -> f64 {
    let mut acc = 0.0;
    for _ in 0..n {
        acc += f.eval(rng.gen::<f64>());
    }
    acc
}

/// Deterministic per-shard seed derivation (splitmix64 step).
pub(crate) fn shard_seed(seed: u64, shard: u64) -> u64 {
    let mut z = seed ^ shard.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const SHARD_SIZE: u64 = 1 << 16;

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Pow;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn narrow_and_wide_paths_agree_on_small_terms() {
        // Same k bits must give the same fractional parts through both paths.
        let terms: Vec<Int> = vec![Int::from(2), Int::from(4), Int::from(1 << 20)];
        let narrow = FracSampler::new(&terms);
        // Force the wide path with the same multipliers.
        let wide = FracSampler::Wide {
            multipliers: terms
                .iter()
                .map(|t| {
                    let mut v = vec![0u64; 2];
                    for (i, d) in t.to_u64_digits().1.into_iter().enumerate() {
                        v[i] = d;
                    }
                    v
                })
                .collect(),
            limbs: 2,
        };
        let f = TrigPoly::cosine();
        let mut rng1 = ChaCha8Rng::seed_from_u64(1);
        let mut rng2 = ChaCha8Rng::seed_from_u64(1);
        let mut s1 = narrow.scratch();
        let mut s2 = wide.scratch();
        for _ in 0..200 {
            let a = narrow.sample_sum(&f, &mut rng1, &mut s1);
            let b = wide.sample_sum(&f, &mut rng2, &mut s2);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn wide_path_handles_huge_terms() {
        let huge = Int::from(2).pow(1296u32);
        let terms = vec![Int::from(2), huge];
        let sampler = FracSampler::new(&terms);
        assert!(matches!(sampler, FracSampler::Wide { .. }));
        let f = TrigPoly::cosine();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut scratch = sampler.scratch();
        for _ in 0..100 {
            let s = sampler.sample_sum(&f, &mut rng, &mut scratch);
            assert!(s.is_finite() && s.abs() <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn sample_mean_of_squares_tracks_variance() {
        // E S_n^2 = n/2 for cosine on distinct powers of two.
        let terms: Vec<Int> = (1..=6u32).map(|k| Int::from(2).pow(k)).collect();
        let sampler = FracSampler::new(&terms);
        let f = TrigPoly::cosine();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut scratch = sampler.scratch();
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let s = sampler.sample_sum(&f, &mut rng, &mut scratch);
            acc += s * s;
        }
        let mean = acc / n as f64;
        assert!((mean - 3.0).abs() < 0.05, "got {mean}");
    }

    #[test]
    fn shard_seeds_differ() {
        let a = shard_seed(42, 0);
        let b = shard_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, shard_seed(42, 0));
    }
}
