//! Scalar arithmetic shared by every module: the tail parameter α, the
//! exact/float scalar abstraction, factorial-type products and `ln Γ`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational carrying every exact coefficient.
///
/// Always in canonical form: reduced, with a positive denominator.
pub type Exact = BigRational;

/// Arithmetic mode of a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::invalid(format!("unknown mode `{other}`"))),
        }
    }
}

/// A field element usable by the generic series and distribution code.
///
/// Implemented for [`f64`] (float mode) and [`Exact`] (exact mode). The mode
/// is a type parameter, so exact and float values can never be mixed in one
/// computation.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
    + Send
    + Sync
{
    const MODE: Mode;

    fn from_int(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_exact(x: &Exact) -> Self;

    fn as_f64(&self) -> f64;
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_exact(x: &Exact) -> Self {
        exact_to_f64(x)
    }

    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Exact {
    const MODE: Mode = Mode::Exact;

    fn from_int(v: i64) -> Self {
        Exact::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Exact::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_exact(x: &Exact) -> Self {
        x.clone()
    }

    fn as_f64(&self) -> f64 {
        exact_to_f64(self)
    }
}

/// Converts an exact rational to the nearest representable float, staying
/// finite for numerators and denominators far beyond `f64` range.
pub fn exact_to_f64(x: &Exact) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(x) {
        if v.is_finite() && (v != 0.0 || x.is_zero()) {
            return v;
        }
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * ln_abs_exact(x).exp()
}

/// `ln |x|` for a nonzero exact rational, without overflowing intermediates.
pub fn ln_abs_exact(x: &Exact) -> f64 {
    ln_abs_bigint(x.numer()) - ln_abs_bigint(x.denom())
}

fn ln_abs_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a strictly positive exact rational.
pub fn ln_exact(x: &Exact) -> Result<f64> {
    if !x.is_positive() {
        return Err(Error::domain(format!("ln of non-positive value {x}")));
    }
    Ok(ln_abs_exact(x))
}

/// The tail/branching parameter α ∈ (0, 1), held as a reduced fraction p/q
/// together with its float mirror.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlphaParam {
    p: u64,
    q: u64,
}

impl AlphaParam {
    /// Builds α = p/q, reducing the fraction; requires 0 < p/q < 1.
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidAlpha(format!("{p}/{q}: zero denominator")));
        }
        let g = p.gcd(&q);
        let (p, q) = if g == 0 { (p, q) } else { (p / g, q / g) };
        if p == 0 || p >= q {
            return Err(Error::InvalidAlpha(format!(
                "{p}/{q} is outside the open interval (0, 1)"
            )));
        }
        Ok(AlphaParam { p, q })
    }

    pub fn numer(&self) -> u64 {
        self.p
    }

    pub fn denom(&self) -> u64 {
        self.q
    }

    /// α as an exact rational.
    pub fn exact(&self) -> Exact {
        Exact::new(BigInt::from(self.p), BigInt::from(self.q))
    }

    /// Float mirror of α.
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// α in the requested scalar mode.
    pub fn scalar<S: Scalar>(&self) -> S {
        S::from_ratio(self.p as i64, self.q as i64)
    }

    /// θ = (1 − α)/α, the exponent of the increasing-tree generator.
    pub fn theta<S: Scalar>(&self) -> S {
        S::from_ratio((self.q - self.p) as i64, self.p as i64)
    }

    /// 1/α = q/p.
    pub fn inverse<S: Scalar>(&self) -> S {
        S::from_ratio(self.q as i64, self.p as i64)
    }
}

impl fmt::Display for AlphaParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for AlphaParam {
    type Err = Error;

    /// Accepts `p/q` or a terminating decimal such as `0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidAlpha(format!("cannot parse `{s}` as a rational in (0, 1)"));
        if let Some((p, q)) = s.split_once('/') {
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let q: u64 = q.trim().parse().map_err(|_| bad())?;
            return AlphaParam::new(p, q);
        }
        let (int, frac) = s.split_once('.').ok_or_else(bad)?;
        if !(int.is_empty() || int == "0") || frac.is_empty() || frac.len() > 18 {
            return Err(bad());
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let p: u64 = frac.parse().map_err(|_| bad())?;
        AlphaParam::new(p, 10u64.pow(frac.len() as u32))
    }
}

impl Serialize for AlphaParam {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AlphaParam {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Rising factorial `[a]_n = a(a+1)⋯(a+n−1)`, with `[a]_0 = 1`.
pub fn rising_factorial<S: Scalar>(a: &S, n: usize) -> S {
    let mut acc = S::one();
    let mut term = a.clone();
    for _ in 0..n {
        acc *= &term;
        term += &S::one();
    }
    acc
}

/// Falling factorial `(a)_n = a(a−1)⋯(a−n+1)`, with `(a)_0 = 1`.
pub fn falling_factorial<S: Scalar>(a: &S, n: usize) -> S {
    let mut acc = S::one();
    let mut term = a.clone();
    for _ in 0..n {
        acc *= &term;
        term -= &S::one();
    }
    acc
}

/// Generalized rising factorial `[a : step]_n = a(a+step)⋯(a+(n−1)step)`.
pub fn rising_factorial_step<S: Scalar>(a: &S, step: &S, n: usize) -> S {
    let mut acc = S::one();
    let mut term = a.clone();
    for _ in 0..n {
        acc *= &term;
        term += step;
    }
    acc
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn exact_int(v: i64) -> Exact {
    Exact::from_int(v)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of `Γ(x)` for `x > 0`.
///
/// Lanczos approximation (g = 7, nine terms), with the reflection formula
/// below one half.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_positive(x))
}

fn ln_gamma_positive(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π / sin(πx); sin(πx) > 0 on (0, 1/2).
        return (PI / (PI * x).sin()).ln() - ln_gamma_positive(1.0 - x);
    }
    let x = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// `Γ(x)` for `x > 0`, through [`log_gamma`].
pub fn gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(f64::exp)
}
