//! Generalized Stirling numbers `S_{n,k}`, forest counts `C_{n,k}` and
//! Sibuya polynomials, with several independent evaluation routes.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::compositions::Compositions;
use crate::error::{Error, Result};
use crate::numerics::{
    binomial, factorial, falling_factorial, rising_factorial, AlphaParam, Exact,
};
use crate::series::sibuya_pgf_series;

/// Largest `n` accepted by the composition-sum route.
pub const FAA_DI_BRUNO_MAX_N: usize = 25;

/// Parameters of a Stirling triangle.
#[derive(Debug, Clone, PartialEq)]
pub enum StirlingVariant {
    /// `S_{n,k}(−1, −α; 0)`: weights `n − kα`, boundary `S_{n,0} = δ_{n,0}`.
    Sibuya(AlphaParam),
    /// Recurrence `S_{n+1,k} = S_{n,k−1} + (nα₂ − kα₁ + w₂)S_{n,k}` with
    /// `S_{n,0} = [w₂ : α₂]_n`.
    General {
        alpha1: Exact,
        alpha2: Exact,
        w2: Exact,
    },
}

/// Lower-triangular array `S[n][k]`, `0 ≤ k ≤ n ≤ n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct StirlingTable {
    variant: StirlingVariant,
    rows: Vec<Vec<Exact>>,
}

impl StirlingTable {
    pub fn variant(&self) -> &StirlingVariant {
        &self.variant
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn alpha(&self) -> Option<&AlphaParam> {
        match &self.variant {
            StirlingVariant::Sibuya(a) => Some(a),
            StirlingVariant::General { .. } => None,
        }
    }

    /// `S_{n,k}`, or `None` outside `0 ≤ k ≤ n ≤ n_max`.
    pub fn get(&self, n: usize, k: usize) -> Option<&Exact> {
        self.rows.get(n).and_then(|row| row.get(k))
    }

    pub fn row(&self, n: usize) -> Option<&[Exact]> {
        self.rows.get(n).map(Vec::as_slice)
    }

    pub fn rows(&self) -> &[Vec<Exact>] {
        &self.rows
    }

    /// Forest count `C_{n,k} = k! α^k S_{n,k}` (Sibuya variant only).
    pub fn forest_count(&self, n: usize, k: usize) -> Option<Exact> {
        let alpha = self.alpha()?.exact();
        let s = self.get(n, k)?;
        Some(s * Exact::from_integer(factorial(k)) * num_traits::pow(alpha, k))
    }

    /// Row `C_{n,0..=n}` of forest counts (Sibuya variant only).
    pub fn forest_count_row(&self, n: usize) -> Option<Vec<Exact>> {
        (0..=n).map(|k| self.forest_count(n, k)).collect()
    }
}

/// Sibuya triangle from `S_{n+1,k} = S_{n,k−1} + (n − kα)S_{n,k}`.
pub fn build_triangle(alpha: &AlphaParam, n_max: usize) -> StirlingTable {
    let a = alpha.exact();
    let mut rows: Vec<Vec<Exact>> = vec![vec![Exact::one()]];
    for n in 0..n_max {
        let prev = &rows[n];
        let mut next = vec![Exact::zero(); n + 2];
        for (k, slot) in next.iter_mut().enumerate().skip(1) {
            let mut v = prev[k - 1].clone();
            if k <= n {
                let w = Exact::from_integer(BigInt::from(n))
                    - a.clone() * Exact::from_integer(BigInt::from(k));
                v += w * prev[k].clone();
            }
            *slot = v;
        }
        rows.push(next);
    }
    StirlingTable {
        variant: StirlingVariant::Sibuya(alpha.clone()),
        rows,
    }
}

/// General three-parameter triangle.
pub fn build_general_triangle(
    alpha1: &Exact,
    alpha2: &Exact,
    w2: &Exact,
    n_max: usize,
) -> Result<StirlingTable> {
    if alpha1.is_zero() && alpha2.is_zero() && w2.is_zero() {
        return Err(Error::invalid("(α₁, α₂, w₂) = (0, 0, 0) is degenerate"));
    }
    let mut rows: Vec<Vec<Exact>> = vec![vec![Exact::one()]];
    for n in 0..n_max {
        let prev = &rows[n];
        let mut next = vec![Exact::zero(); n + 2];
        let nn = Exact::from_integer(BigInt::from(n));
        for (k, slot) in next.iter_mut().enumerate() {
            let mut v = if k > 0 {
                prev[k - 1].clone()
            } else {
                Exact::zero()
            };
            if k <= n {
                let kk = Exact::from_integer(BigInt::from(k));
                let w = nn.clone() * alpha2.clone() - kk * alpha1.clone() + w2.clone();
                v += w * prev[k].clone();
            }
            *slot = v;
        }
        rows.push(next);
    }
    Ok(StirlingTable {
        variant: StirlingVariant::General {
            alpha1: alpha1.clone(),
            alpha2: alpha2.clone(),
            w2: w2.clone(),
        },
        rows,
    })
}

/// Alternating-sum (Dobiński-type) formula
/// `S_{n,k} = (α^{−k}/k!) Σ_l (−1)^{n+l} C(k,l) (lα)_n`.
pub fn stirling_alt_sum(alpha: &AlphaParam, n: usize, k: usize) -> Result<Exact> {
    if k > n {
        return Err(Error::invalid(format!("need k ≤ n, got n={n}, k={k}")));
    }
    let a = alpha.exact();
    let mut acc = Exact::zero();
    for l in 0..=k {
        let la = a.clone() * Exact::from_integer(BigInt::from(l));
        let term = Exact::from_integer(binomial(k, l)) * falling_factorial(&la, n);
        if (n + l) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    let scale = Exact::from_integer(factorial(k)) * num_traits::pow(a, k);
    Ok(acc / scale)
}

/// Composition-sum formula
/// `S_{n,k} = (n!/k!) Σ_{n₁+⋯+n_k=n} Π_l [1−α]_{n_l−1}/n_l!`.
///
/// Summed over integers: with α = p/q, `q^{m−1}[1−α]_{m−1}` is an integer
/// and `n!/Π n_l!` is a product of binomials along the prefix sums.
pub fn stirling_faa_di_bruno(alpha: &AlphaParam, n: usize, k: usize) -> Result<Exact> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ n, got n={n}, k={k}")));
    }
    if n > FAA_DI_BRUNO_MAX_N {
        return Err(Error::SizeGuard {
            what: "n",
            value: n,
            limit: FAA_DI_BRUNO_MAX_N,
        });
    }
    let (p, q) = (alpha.numer() as i64, alpha.denom() as i64);
    // a[m] = Π_{j=1}^{m−1} (jq − p), the scaled rising factorial [1−α]_{m−1}.
    let mut a_int = vec![BigInt::one(); n + 1];
    for m in 2..=n {
        a_int[m] = &a_int[m - 1] * BigInt::from((m as i64 - 1) * q - p);
    }
    // weight[s][m] = C(s, m) a[m] for prefix sum s.
    let weight: Vec<Vec<BigInt>> = (0..=n)
        .map(|s| (0..=s).map(|m| binomial(s, m) * &a_int[m]).collect())
        .collect();
    let small: Vec<Vec<Option<u128>>> = weight
        .iter()
        .map(|row| row.iter().map(|w| u128::try_from(w).ok()).collect())
        .collect();

    let mut total = BigInt::zero();
    let mut partial: u128 = 0;
    let mut comps = Compositions::new(n, k);
    while let Some(parts) = comps.next_parts() {
        match small_term(parts, &small) {
            Some(t) => match partial.checked_add(t) {
                Some(s) => partial = s,
                None => {
                    total += BigInt::from(partial);
                    partial = t;
                }
            },
            None => total += big_term(parts, &weight),
        }
    }
    total += BigInt::from(partial);

    let denom = factorial(k) * num_traits::pow(BigInt::from(q), n - k);
    Ok(Exact::new(total, denom))
}

fn small_term(parts: &[usize], small: &[Vec<Option<u128>>]) -> Option<u128> {
    let mut s = 0usize;
    let mut acc: u128 = 1;
    for &m in parts {
        s += m;
        acc = acc.checked_mul(small[s][m]?)?;
    }
    Some(acc)
}

fn big_term(parts: &[usize], weight: &[Vec<BigInt>]) -> BigInt {
    let mut s = 0usize;
    let mut acc = BigInt::one();
    for &m in parts {
        s += m;
        acc *= &weight[s][m];
    }
    acc
}

/// Exponential Bell route `S_{n,k} = (n!/k!)[z^n](Φ(z)/α)^k`.
pub fn stirling_bell(alpha: &AlphaParam, n: usize, k: usize) -> Result<Exact> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ n, got n={n}, k={k}")));
    }
    let power = sibuya_pgf_series::<Exact>(alpha, n).pow(k as u32);
    Ok(bell_scale(alpha, n, k, &power.coeffs()[n]))
}

/// Bell-route rows `S_{n,1..=n}` for every `n ≤ n_max`, sharing the powers
/// of `Φ`. Entry `[n][k]` holds `S_{n,k}`; column 0 is zero except at n = 0.
pub fn stirling_bell_table(alpha: &AlphaParam, n_max: usize) -> Vec<Vec<Exact>> {
    let phi = sibuya_pgf_series::<Exact>(alpha, n_max);
    let mut rows: Vec<Vec<Exact>> = (0..=n_max).map(|n| vec![Exact::zero(); n + 1]).collect();
    rows[0][0] = Exact::one();
    let mut power = phi.clone();
    for k in 1..=n_max {
        for (n, row) in rows.iter_mut().enumerate().skip(k) {
            row[k] = bell_scale(alpha, n, k, &power.coeffs()[n]);
        }
        power = power.mul(&phi);
    }
    rows
}

fn bell_scale(alpha: &AlphaParam, n: usize, k: usize, coeff: &Exact) -> Exact {
    let a = alpha.exact();
    coeff * Exact::new(factorial(n), factorial(k)) / num_traits::pow(a, k)
}

/// `s_n(u) = Σ_k C_{n,k} u^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SibuyaPolynomial {
    n: usize,
    coeffs: Vec<Exact>,
}

impl SibuyaPolynomial {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficients of `u^0..=u^n`.
    pub fn coeffs(&self) -> &[Exact] {
        &self.coeffs
    }

    pub fn eval(&self, u: &Exact) -> Exact {
        self.coeffs
            .iter()
            .rev()
            .fold(Exact::zero(), |acc, c| acc * u + c)
    }

    pub fn eval_f64(&self, u: f64) -> f64 {
        use crate::numerics::Scalar;
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * u + c.as_f64())
    }
}

/// Sibuya polynomials `s_0..=s_{n_max}` from
/// `s_{n+1}(u) = (n + αu)s_n(u) + αu(u−1)s_n′(u)`, `s_0 = 1`.
pub fn sibuya_polynomials(alpha: &AlphaParam, n_max: usize) -> Vec<SibuyaPolynomial> {
    let a = alpha.exact();
    let alpha_u = vec![Exact::zero(), a.clone()];
    let alpha_u_u_minus_1 = vec![Exact::zero(), -a.clone(), a];
    let mut out = vec![SibuyaPolynomial {
        n: 0,
        coeffs: vec![Exact::one()],
    }];
    for n in 0..n_max {
        let s = &out[n].coeffs;
        let n_const = vec![Exact::from_integer(BigInt::from(n))];
        let lin = poly_add(&poly_mul(&n_const, s), &poly_mul(&alpha_u, s));
        let diff = poly_mul(&alpha_u_u_minus_1, &poly_derivative(s));
        let mut next = poly_add(&lin, &diff);
        next.resize(n + 2, Exact::zero());
        out.push(SibuyaPolynomial {
            n: n + 1,
            coeffs: next,
        });
    }
    out
}

fn poly_add(a: &[Exact], b: &[Exact]) -> Vec<Exact> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Exact::zero);
            let y = b.get(i).cloned().unwrap_or_else(Exact::zero);
            x + y
        })
        .collect()
}

fn poly_mul(a: &[Exact], b: &[Exact]) -> Vec<Exact> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Exact::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_derivative(a: &[Exact]) -> Vec<Exact> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * Exact::from_integer(BigInt::from(i)))
        .collect()
}

/// Discriminant of the quadratic `s_3(u)/(αu)`.
pub fn s3_discriminant(alpha: &AlphaParam) -> Exact {
    let s3 = sibuya_polynomials(alpha, 3)
        .pop()
        .expect("four polynomials");
    let a = alpha.exact();
    let c = &s3.coeffs[1] / &a;
    let b = &s3.coeffs[2] / &a;
    let lead = &s3.coeffs[3] / &a;
    &b * &b - Exact::from_integer(BigInt::from(4)) * lead * c
}

/// `true` iff `s_3(u)/u` has non-real roots, so that `s_3` is not
/// real-rooted.
pub fn s3_real_zero_check(alpha: &AlphaParam) -> bool {
    s3_discriminant(alpha).is_negative()
}

/// Row sum `Σ_k C_{n,k}`, which should equal `[α]_n`.
pub fn forest_total(alpha: &AlphaParam, n: usize) -> Exact {
    rising_factorial(&alpha.exact(), n)
}
