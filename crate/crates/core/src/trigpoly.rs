//! Real, even, centered trigonometric polynomials
//! `f(x) = sum_{d=-D..D} c_d e^{2 pi i d x}` with exact rational coefficients.
//!
//! The symmetry `c_d = c_{-d}` and `c_0 = 0` are enforced at construction, so
//! only the half-spectrum `c_1..c_D` is stored. Coefficients stay exact; only
//! pointwise evaluation converts to `f64`.

use num_traits::{Signed, ToPrimitive, Zero};
use serde::Deserialize;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exact::{parse_rat, rat, rat_to_f64_up, Rat};

/// Hard cap on the degree accepted from untrusted spec input.
pub const MAX_DEGREE: u32 = 10_000;

#[derive(Debug, Clone)]
pub struct TrigPoly {
    /// `half[d-1] = c_d` for `d = 1..=D`; `c_0 = 0` and `c_{-d} = c_d` implied.
    half: Vec<Rat>,
    /// `f64` images of `2 c_d`, cached for the sampling hot path.
    eval_coeffs: Vec<f64>,
}

impl PartialEq for TrigPoly {
    fn eq(&self, other: &Self) -> bool {
        self.half == other.half
    }
}

impl Eq for TrigPoly {}

impl TrigPoly {
    /// Build from the half-spectrum map `d -> c_d` (`d >= 1`); zeros may be
    /// omitted or included. Trailing zero coefficients are trimmed so the
    /// stored degree is the largest `d` with `c_d != 0`.
    pub fn new(half_coeffs: BTreeMap<u32, Rat>) -> Result<Self> {
        if let Some((&d, _)) = half_coeffs.iter().next_back() {
            if d > MAX_DEGREE {
                return Err(Error::InvalidPolynomial(format!(
                    "degree {d} exceeds cap {MAX_DEGREE}"
                )));
            }
        }
        if half_coeffs.keys().any(|&d| d == 0) {
            return Err(Error::InvalidPolynomial(
                "c_0 is fixed to 0; do not supply it".into(),
            ));
        }
        let top = half_coeffs
            .iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(&d, _)| d)
            .max();
        let degree = match top {
            Some(d) => d,
            None => {
                return Err(Error::InvalidPolynomial(
                    "all coefficients vanish (sum c_d^2 must be positive)".into(),
                ))
            }
        };
        let mut half = vec![Rat::zero(); degree as usize];
        for (d, c) in half_coeffs {
            if d >= 1 && d <= degree {
                half[(d - 1) as usize] = c;
            }
        }
        let eval_coeffs = half
            .iter()
            .map(|c| 2.0 * c.to_f64().unwrap_or_else(|| crate::exact::rat_to_f64(c)))
            .collect();
        Ok(Self { half, eval_coeffs })
    }

    /// `f(x) = cos(2 pi x)`: the classical case, `c_{+-1} = 1/2`.
    pub fn cosine() -> Self {
        let mut m = BTreeMap::new();
        m.insert(1, rat(1, 2));
        Self::new(m).expect("cosine is valid")
    }

    /// `f(x) = cos(2 pi x) - cos(4 pi x)`: the telescoping example
    /// (`c_{+-1} = 1/2`, `c_{+-2} = -1/2`), degenerate on `a_n = 2^n`.
    pub fn telescope() -> Self {
        let mut m = BTreeMap::new();
        m.insert(1, rat(1, 2));
        m.insert(2, rat(-1, 2));
        Self::new(m).expect("telescope is valid")
    }

    pub fn degree(&self) -> u32 {
        self.half.len() as u32
    }

    /// `c_d` for any integer `d` (symmetric lookup, zero outside the support).
    pub fn coeff(&self, d: i64) -> Rat {
        let a = d.unsigned_abs();
        if a == 0 || a > self.half.len() as u64 {
            Rat::zero()
        } else {
            self.half[(a - 1) as usize].clone()
        }
    }

    /// Half-spectrum `c_1..c_D`.
    pub fn half_coeffs(&self) -> &[Rat] {
        &self.half
    }

    /// Nonzero digits `d` with their coefficients, both signs, `d != 0`.
    /// This is the alphabet of every Diophantine enumeration.
    pub fn digit_alphabet(&self) -> Vec<(i64, Rat)> {
        let mut out = Vec::new();
        for (i, c) in self.half.iter().enumerate() {
            if !c.is_zero() {
                let d = (i + 1) as i64;
                out.push((d, c.clone()));
                out.push((-d, c.clone()));
            }
        }
        out
    }

    /// Pointwise evaluation in the real form `sum_{d>=1} 2 c_d cos(2 pi d x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &c2) in self.eval_coeffs.iter().enumerate() {
            if c2 != 0.0 {
                acc += c2 * (std::f64::consts::TAU * (i + 1) as f64 * x).cos();
            }
        }
        acc
    }

    /// `A = sum_{d=-D..D} |c_d| = 2 sum_{d>=1} |c_d|`, an a.s. bound on `|f|`.
    pub fn sup_bound(&self) -> Rat {
        let mut acc = Rat::zero();
        for c in &self.half {
            acc += c.abs();
        }
        acc * rat(2, 1)
    }

    /// Float upper bound on the Lipschitz constant
    /// `L = 2 pi sum_d |c_d| |d|`, normalized so `x -> f(a x)` is `a L`-Lipschitz.
    pub fn lipschitz_constant(&self) -> f64 {
        let mut acc = Rat::zero();
        for (i, c) in self.half.iter().enumerate() {
            acc += c.abs() * rat(2 * (i as i64 + 1), 1);
        }
        // TAU rounds below 2 pi, so take the next float up after the product.
        let v = std::f64::consts::TAU * rat_to_f64_up(&acc);
        f64::from_bits(v.to_bits() + 2)
    }

    /// `E X_1^2 = sum_{d=-D..D} c_d^2`, exact.
    pub fn second_moment(&self) -> Rat {
        let mut acc = Rat::zero();
        for c in &self.half {
            acc += c * c;
        }
        acc * rat(2, 1)
    }
}

/// JSON surface: `{"coeffs": {"1": "1/2", "2": "-1/2"}}` with implied
/// symmetry and implied zeros.
#[derive(Debug, Deserialize)]
struct PolySpecJson {
    coeffs: BTreeMap<String, String>,
}

/// Parse the JSON polynomial spec.
pub fn poly_from_json(text: &str) -> Result<TrigPoly> {
    let spec: PolySpecJson =
        serde_json::from_str(text).map_err(|e| Error::SpecParse(format!("poly spec: {e}")))?;
    let mut half = BTreeMap::new();
    for (k, v) in spec.coeffs {
        let d: u32 = k
            .trim()
            .parse()
            .map_err(|_| Error::SpecParse(format!("bad frequency key {k:?}")))?;
        if d == 0 {
            return Err(Error::SpecParse("frequency 0 is fixed to c_0 = 0".into()));
        }
        if d > MAX_DEGREE {
            return Err(Error::SpecParse(format!("frequency {d} exceeds cap {MAX_DEGREE}")));
        }
        half.insert(d, parse_rat(&v)?);
    }
    TrigPoly::new(half)
}

/// Parse the CLI shorthand: `cosine`, `telescope`, or `coeffs:1=1/2,2=-1/2`.
pub fn poly_from_shorthand(s: &str) -> Result<TrigPoly> {
    match s.trim() {
        "cosine" => Ok(TrigPoly::cosine()),
        "telescope" => Ok(TrigPoly::telescope()),
        other => {
            if let Some(body) = other.strip_prefix("coeffs:") {
                let mut half = BTreeMap::new();
                for item in body.split(',') {
                    let (d, c) = item.split_once('=').ok_or_else(|| {
                        Error::SpecParse(format!("expected d=coeff, got {item:?}"))
                    })?;
                    let d: u32 = d
                        .trim()
                        .parse()
                        .map_err(|_| Error::SpecParse(format!("bad frequency {d:?}")))?;
                    half.insert(d, parse_rat(c)?);
                }
                TrigPoly::new(half)
            } else {
                Err(Error::SpecParse(format!(
                    "unknown polynomial shorthand {other:?} (try cosine, telescope, coeffs:..)"
                )))
            }
        }
    }
}
