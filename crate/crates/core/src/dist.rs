//! Exact finite-n laws: Sibuya progeny, the forest-count chain `K_n`,
//! occupancy laws, tilted and two-parameter variants, Mittag-Leffler moments.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::compositions::Compositions;
use crate::error::{Error, Result};
use crate::numerics::{factorial, log_gamma, rising_factorial, AlphaParam, Exact, Mode, Scalar};
use crate::series::{binomial_series, offspring_series, sibuya_pgf_series, TruncatedSeries};
use crate::stirling::{build_triangle, StirlingTable};

/// Float pmfs must sum to one within this tolerance.
pub const FLOAT_NORMALIZATION_TOL: f64 = 1e-12;

/// Support point of a [`Pmf`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Value(u64),
    Parts(Vec<usize>),
    /// Residual mass of every value strictly above `above`.
    Tail {
        above: u64,
    },
}

/// Finite discrete distribution with labeled support.
///
/// Construction checks that masses are nonnegative and sum to one (exactly
/// in exact mode, within [`FLOAT_NORMALIZATION_TOL`] in float mode).
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<S> {
    support: Vec<Label>,
    mass: Vec<S>,
}

impl<S: Scalar> Pmf<S> {
    pub fn new(support: Vec<Label>, mass: Vec<S>) -> Result<Self> {
        if support.len() != mass.len() {
            return Err(Error::invalid(format!(
                "support has {} labels but {} masses",
                support.len(),
                mass.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::invalid("empty support"));
        }
        if let Some(m) = mass.iter().find(|m| **m < S::zero()) {
            return Err(Error::NegativeMass(m.to_string()));
        }
        let total = mass.iter().fold(S::zero(), |acc, m| acc + m.clone());
        let ok = match S::MODE {
            Mode::Exact => total == S::one(),
            Mode::Float => (total.as_f64() - 1.0).abs() <= FLOAT_NORMALIZATION_TOL,
        };
        if !ok {
            return Err(Error::NotNormalized(total.to_string()));
        }
        Ok(Pmf { support, mass })
    }

    /// Normalizes nonnegative weights into a pmf.
    pub fn from_weights(support: Vec<Label>, weights: Vec<S>) -> Result<Self> {
        let total = weights.iter().fold(S::zero(), |acc, m| acc + m.clone());
        if !(total > S::zero()) {
            return Err(Error::NotNormalized(total.to_string()));
        }
        let mass = weights.into_iter().map(|w| w / total.clone()).collect();
        Pmf::new(support, mass)
    }

    pub fn mode(&self) -> Mode {
        S::MODE
    }

    pub fn support(&self) -> &[Label] {
        &self.support
    }

    pub fn masses(&self) -> &[S] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &S)> {
        self.support.iter().zip(&self.mass)
    }

    pub fn mass_of(&self, label: &Label) -> Option<&S> {
        self.support
            .iter()
            .position(|l| l == label)
            .map(|i| &self.mass[i])
    }

    /// Mass at integer value `v` (zero when absent from the support).
    pub fn prob(&self, v: u64) -> S {
        self.mass_of(&Label::Value(v))
            .cloned()
            .unwrap_or_else(S::zero)
    }

    /// Mean over integer labels; fails if the support has a tail or tuple
    /// label.
    pub fn mean(&self) -> Result<S> {
        let mut acc = S::zero();
        for (l, m) in self.iter() {
            match l {
                Label::Value(v) => acc += &(S::from_int(*v as i64) * m.clone()),
                _ => return Err(Error::invalid("mean needs integer labels only")),
            }
        }
        Ok(acc)
    }

    pub fn to_f64(&self) -> Pmf<f64> {
        Pmf {
            support: self.support.clone(),
            mass: self.mass.iter().map(Scalar::as_f64).collect(),
        }
    }
}

fn value_labels(range: std::ops::RangeInclusive<u64>) -> Vec<Label> {
    range.map(Label::Value).collect()
}

fn int<S: Scalar>(v: usize) -> S {
    S::from_int(v as i64)
}

/// `P(N = n) = α[1−α]_{n−1}/n!` for one Sibuya tree.
pub fn progeny_mass<S: Scalar>(alpha: &AlphaParam, n: usize) -> S {
    if n == 0 {
        return S::zero();
    }
    let a = alpha.scalar::<S>();
    let mut m = a.clone();
    for j in 1..n {
        // ratio P(N=j+1)/P(N=j) = (j − α)/(j + 1)
        m = m * (int::<S>(j) - a.clone()) / int::<S>(j + 1);
    }
    m
}

/// `P(N > n) = [1−α]_n/n!`.
pub fn progeny_survival<S: Scalar>(alpha: &AlphaParam, n: usize) -> S {
    let a = alpha.scalar::<S>();
    let mut s = S::one();
    for j in 1..=n {
        s = s * (int::<S>(j) - a.clone()) / int::<S>(j);
    }
    s
}

/// Progeny law on `1..=n_max` plus a [`Label::Tail`] carrying `P(N > n_max)`.
pub fn progeny_pmf<S: Scalar>(alpha: &AlphaParam, n_max: usize) -> Result<Pmf<S>> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let a = alpha.scalar::<S>();
    let mut mass = Vec::with_capacity(n_max + 1);
    let mut m = a.clone();
    for j in 1..=n_max {
        mass.push(m.clone());
        m = m * (int::<S>(j) - a.clone()) / int::<S>(j + 1);
    }
    mass.push(progeny_survival(alpha, n_max));
    let mut support = value_labels(1..=n_max as u64);
    support.push(Label::Tail {
        above: n_max as u64,
    });
    Pmf::new(support, mass)
}

/// One-step transition of the `K_n` chain out of state `k` at size `n`:
/// `(P(k → k+1), P(k → k)) = ((k+1)α/(α+n), (n−kα)/(α+n))`.
pub fn kn_transition<S: Scalar>(alpha: &AlphaParam, n: usize, k: usize) -> (S, S) {
    let a = alpha.scalar::<S>();
    let denom = a.clone() + int::<S>(n);
    let up = int::<S>(k + 1) * a.clone() / denom.clone();
    let stay = (int::<S>(n) - int::<S>(k) * a) / denom;
    (up, stay)
}

/// Law of the number of trees `K_n` in a size-`n` forest, by forward
/// iteration of the triangular recurrence from `K_1 = 1`.
pub fn kn_pmf<S: Scalar>(alpha: &AlphaParam, n: usize) -> Result<Pmf<S>> {
    Pmf::new(value_labels(1..=n as u64), kn_masses(alpha, n)?)
}

fn kn_masses<S: Scalar>(alpha: &AlphaParam, n: usize) -> Result<Vec<S>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    // p[k−1] = P(K_m = k)
    let mut p = vec![S::one()];
    for m in 1..n {
        let mut next = vec![S::zero(); m + 1];
        for (i, pk) in p.iter().enumerate() {
            let (up, stay) = kn_transition::<S>(alpha, m, i + 1);
            next[i + 1] += &(up * pk.clone());
            next[i] += &(stay * pk.clone());
        }
        p = next;
    }
    Ok(p)
}

/// `P(K_n = k) = C_{n,k}/[α]_n` read off a Stirling table.
pub fn kn_pmf_from_counts(table: &StirlingTable, n: usize) -> Result<Pmf<Exact>> {
    let alpha = table
        .alpha()
        .ok_or_else(|| Error::invalid("forest counts need a Sibuya table"))?;
    if n == 0 || n > table.n_max() {
        return Err(Error::invalid(format!(
            "n={n} outside 1..={}",
            table.n_max()
        )));
    }
    let total = rising_factorial(&alpha.exact(), n);
    let mass = (1..=n)
        .map(|k| table.forest_count(n, k).expect("in range") / total.clone())
        .collect();
    Pmf::new(value_labels(1..=n as u64), mass)
}

/// `P(K_n = k)` as the ratio of the labelled-tree count `(k/n)[z^{n−k}]φ^n`
/// to its sum over `k`, `(1/n)[z^{n−1}](1−z)^{−2}φ^n`.
pub fn kn_pmf_lagrange_ratio(alpha: &AlphaParam, n: usize) -> Result<Pmf<Exact>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let phi_n = offspring_series::<Exact>(alpha, n).pow(n as u32);
    let inv_sq = binomial_series(&Exact::from_int(-2), n);
    let denom = phi_n.mul(&inv_sq).coeffs()[n - 1].clone() / Exact::from_int(n as i64);
    let mass = (1..=n)
        .map(|k| {
            phi_n.coeffs()[n - k].clone() * Exact::from_ratio(k as i64, n as i64) / denom.clone()
        })
        .collect();
    Pmf::new(value_labels(1..=n as u64), mass)
}

/// Mean `μ_n` of `K_n` from `(n+α)μ_{n+1} = α(2μ_n + 1) + nμ_n`, `μ_1 = 1`.
pub fn kn_mean<S: Scalar>(alpha: &AlphaParam, n: usize) -> Result<S> {
    Ok(kn_mean_path::<S>(alpha, n)?.pop().expect("n ≥ 1"))
}

/// `μ_1, …, μ_n`.
pub fn kn_mean_path<S: Scalar>(alpha: &AlphaParam, n: usize) -> Result<Vec<S>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let a = alpha.scalar::<S>();
    let two = int::<S>(2);
    let mut out = Vec::with_capacity(n);
    let mut mu = S::one();
    out.push(mu.clone());
    for m in 1..n {
        let nm = int::<S>(m);
        mu = (a.clone() * (two.clone() * mu.clone() + S::one()) + nm.clone() * mu)
            / (nm + a.clone());
        out.push(mu.clone());
    }
    Ok(out)
}

/// Continuous-time approximation `μ_t = 2((t+α)/(1+α))^α − 1`.
pub fn kn_mean_ode(alpha: &AlphaParam, t: f64) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::domain(format!("t must be ≥ 1, got {t}")));
    }
    let a = alpha.value();
    Ok(2.0 * ((t + a) / (1.0 + a)).powf(a) - 1.0)
}

/// Scale factor of the martingale `M_n = c_n (K_n + 1)`, normalized so that
/// `c_1 = 1`: `c_n = [1+α]_{n−1}/[1+2α]_{n−1} ∝ Γ(n+α)/Γ(n+2α)`.
pub fn martingale_scale(alpha: &AlphaParam, n: usize) -> Result<Exact> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let a = alpha.exact();
    let one = Exact::one();
    Ok(rising_factorial(&(one.clone() + a.clone()), n - 1)
        / rising_factorial(&(one + a.clone() + a), n - 1))
}

/// `E[M_{n+1} | K_n = k] − M_n(k)`, exactly.
pub fn martingale_drift(alpha: &AlphaParam, n: usize, k: usize) -> Result<Exact> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ n, got n={n}, k={k}")));
    }
    let now = martingale_scale(alpha, n)?;
    let next = martingale_scale(alpha, n + 1)?;
    let (up, stay) = kn_transition::<Exact>(alpha, n, k);
    let kk = Exact::from_int(k as i64);
    let one = Exact::one();
    let expected =
        next * (up * (kk.clone() + one.clone() + one.clone()) + stay * (kk.clone() + one.clone()));
    Ok(expected - now * (kk + one))
}

/// Tree sizes `n_1, …, n_k` of a forest, in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupancyVector {
    parts: Vec<usize>,
}

impl OccupancyVector {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::invalid(format!(
                "parts must be positive and nonempty: {parts:?}"
            )));
        }
        Ok(OccupancyVector { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    /// All occupancy vectors of `n` atoms in `k` trees, colexicographic.
    pub fn all(n: usize, k: usize) -> impl Iterator<Item = OccupancyVector> {
        Compositions::new(n, k).map(|parts| OccupancyVector { parts })
    }
}

/// Occupancy laws for one α with forest counts cached up to `n_max`.
#[derive(Debug, Clone)]
pub struct OccupancyLaw {
    alpha: AlphaParam,
    table: StirlingTable,
    /// `[1−α]_{m−1}/m!` for `m ≤ n_max`.
    tree_weight: Vec<Exact>,
    pgf: TruncatedSeries<Exact>,
}

impl OccupancyLaw {
    pub fn new(alpha: &AlphaParam, n_max: usize) -> Self {
        let table = build_triangle(alpha, n_max);
        let one_minus = Exact::one() - alpha.exact();
        let tree_weight = (0..=n_max)
            .map(|m| {
                if m == 0 {
                    Exact::zero()
                } else {
                    rising_factorial(&one_minus, m - 1) / Exact::from_integer(factorial(m))
                }
            })
            .collect();
        OccupancyLaw {
            alpha: alpha.clone(),
            table,
            tree_weight,
            pgf: sibuya_pgf_series(alpha, n_max),
        }
    }

    pub fn n_max(&self) -> usize {
        self.table.n_max()
    }

    /// `P(N_{n,k} = parts) = (n!/C_{n,k}) α^k Π [1−α]_{n_l−1}/n_l!`.
    pub fn joint(&self, parts: &OccupancyVector) -> Result<Exact> {
        let n = parts.total();
        let k = parts.k();
        if n > self.n_max() {
            return Err(Error::invalid(format!(
                "n={n} exceeds table size {}",
                self.n_max()
            )));
        }
        let c = self.table.forest_count(n, k).expect("k ≤ n ≤ n_max");
        let mut acc =
            Exact::from_integer(factorial(n)) * num_traits::pow(self.alpha.exact(), k) / c;
        for &m in parts.parts() {
            acc *= &self.tree_weight[m];
        }
        Ok(acc)
    }

    /// Law of the first tree size given `n` atoms in `k` trees,
    /// `[z^{n₁}]Φ · [z^{n−n₁}]Φ^{k−1} / [z^n]Φ^k`, on `1..=n−k+1`.
    pub fn marginal(&self, n: usize, k: usize) -> Result<Pmf<Exact>> {
        if k == 0 || k > n {
            return Err(Error::invalid(format!("need 1 ≤ k ≤ n, got n={n}, k={k}")));
        }
        if n > self.n_max() {
            return Err(Error::invalid(format!(
                "n={n} exceeds table size {}",
                self.n_max()
            )));
        }
        let pgf = self.pgf.truncate(n);
        let rest = pgf.pow(k as u32 - 1);
        let all = rest.mul(&pgf);
        let denom = all.coeffs()[n].clone();
        let top = n - k + 1;
        let mass = (1..=top)
            .map(|n1| pgf.coeffs()[n1].clone() * rest.coeffs()[n - n1].clone() / denom.clone())
            .collect();
        Pmf::new(value_labels(1..=top as u64), mass)
    }

    /// Joint law over every composition of `n` into `k` parts.
    pub fn joint_pmf(&self, n: usize, k: usize) -> Result<Pmf<Exact>> {
        let mut support = Vec::new();
        let mut mass = Vec::new();
        for v in OccupancyVector::all(n, k) {
            mass.push(self.joint(&v)?);
            support.push(Label::Parts(v.parts));
        }
        Pmf::new(support, mass)
    }
}

/// Joint occupancy probability of one composition.
pub fn occupancy_pmf(alpha: &AlphaParam, parts: &OccupancyVector) -> Result<Exact> {
    OccupancyLaw::new(alpha, parts.total()).joint(parts)
}

/// Law of the first tree size in a size-`n` forest with `k` trees.
pub fn marginal_pmf(alpha: &AlphaParam, n: usize, k: usize) -> Result<Pmf<Exact>> {
    OccupancyLaw::new(alpha, n).marginal(n, k)
}

/// Tilted law `P̃(K_n = k) ∝ c₁^{−k} C_{n,k}`, `0 < c₁ ≤ 1`; its pgf is
/// `s_n(z/c₁)/s_n(1/c₁)`.
pub fn tilted_kn_pmf(alpha: &AlphaParam, c1: &Exact, n: usize) -> Result<Pmf<Exact>> {
    if !c1.is_positive() || c1 > &Exact::one() {
        return Err(Error::domain(format!("c1 must lie in (0, 1], got {c1}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let table = build_triangle(alpha, n);
    let inv = c1.recip();
    let weights = (1..=n)
        .map(|k| table.forest_count(n, k).expect("in range") * num_traits::pow(inv.clone(), k))
        .collect();
    Pmf::from_weights(value_labels(1..=n as u64), weights)
}

/// Two-parameter Mittag-Leffler moment
/// `E W^q = Γ(θ)Γ(θ/α + q) / (Γ(θ + qα)Γ(θ/α))`, for `θ > 0` and
/// `q > −θ/α`.
pub fn ml_moment(alpha: &AlphaParam, theta: f64, q: f64) -> Result<f64> {
    let a = alpha.value();
    if !(theta > 0.0) {
        return Err(Error::domain(format!(
            "theta must be positive, got {theta}"
        )));
    }
    if !(q > -theta / a) {
        return Err(Error::domain(format!(
            "moment order {q} must exceed −θ/α = {}",
            -theta / a
        )));
    }
    if q == 0.0 {
        return Ok(1.0);
    }
    let l = log_gamma(theta)? - log_gamma(theta + q * a)? + log_gamma(theta / a + q)?
        - log_gamma(theta / a)?;
    Ok(l.exp())
}

/// One-parameter case `θ = α`: `E W^q = Γ(α)Γ(q+1)/Γ(qα+α)`, `q > −1`.
pub fn ml_moment_one_parameter(alpha: &AlphaParam, q: f64) -> Result<f64> {
    let a = alpha.value();
    if !(q > -1.0) {
        return Err(Error::domain(format!("moment order {q} must exceed −1")));
    }
    if q == 0.0 {
        return Ok(1.0);
    }
    Ok((log_gamma(a)? + log_gamma(q + 1.0)? - log_gamma(q * a + a)?).exp())
}

/// Variance `E W² − (E W)²` of the two-parameter law.
pub fn ml_variance(alpha: &AlphaParam, theta: f64) -> Result<f64> {
    let m1 = ml_moment(alpha, theta, 1.0)?;
    Ok(ml_moment(alpha, theta, 2.0)? - m1 * m1)
}

/// Law of the number of occupied tables `S_n` of a two-parameter Chinese
/// restaurant after `n` customers,
/// `P(S_n = k) = [θ : α]_k / [θ]_n · S_{n,k}`, for `θ > −α`.
///
/// Computed as `[θ+α : α]_{k−1}/[θ+1]_{n−1} · S_{n,k}` so that θ = 0 needs
/// no special case.
pub fn crp_sn_pmf<S: Scalar>(alpha: &AlphaParam, theta: &S, n: usize) -> Result<Pmf<S>> {
    let a = alpha.scalar::<S>();
    if !(theta.clone() + a.clone() > S::zero()) {
        return Err(Error::domain(format!("theta must exceed −α, got {theta}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let table = build_triangle(alpha, n);
    let denom = rising_factorial(&(theta.clone() + S::one()), n - 1);
    let mut num = S::one();
    let mut mass = Vec::with_capacity(n);
    for k in 1..=n {
        mass.push(num.clone() * S::from_exact(table.get(n, k).expect("in range")) / denom.clone());
        num = num * (theta.clone() + int::<S>(k) * a.clone());
    }
    Pmf::new(value_labels(1..=n as u64), mass)
}

/// Renewal count `K^r_n = inf{k : N(1)+⋯+N(k) ≥ n}` for i.i.d. Sibuya
/// `N(i)`, from the first-renewal decomposition
/// `P(K^r_n = k) = δ_{k,1}P(N > n−1) + Σ_{m<n} P(N=m) P(K^r_{n−m} = k−1)`.
pub fn renewal_pmf_recursive(alpha: &AlphaParam, n: usize) -> Result<Pmf<Exact>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let masses: Vec<Exact> = (0..=n).map(|m| progeny_mass(alpha, m)).collect();
    // laws[m][k] = P(K^r_m = k), m = 1..=n
    let mut laws: Vec<Vec<Exact>> = vec![Vec::new()];
    for m in 1..=n {
        let mut row = vec![Exact::zero(); m + 1];
        row[1] = progeny_survival(alpha, m - 1);
        for first in 1..m {
            let sub = &laws[m - first];
            for (k, p) in sub.iter().enumerate().skip(1) {
                row[k + 1] += masses[first].clone() * p;
            }
        }
        laws.push(row);
    }
    let row = laws.pop().expect("n ≥ 1");
    Pmf::new(
        value_labels(1..=n as u64),
        row.into_iter().skip(1).collect(),
    )
}

/// Same law from `P(K^r_n ≤ k) = P(N(k) ≥ n) = 1 − Σ_{j<n} [z^j]Φ^k`.
pub fn renewal_pmf_from_powers(alpha: &AlphaParam, n: usize) -> Result<Pmf<Exact>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let phi = sibuya_pgf_series::<Exact>(alpha, n);
    let mut power = TruncatedSeries::one(n);
    let mut cdf_prev = Exact::zero();
    let mut mass = Vec::with_capacity(n);
    for _k in 1..=n {
        power = power.mul(&phi);
        let below: Exact = power.coeffs()[..n].iter().cloned().sum();
        let cdf = Exact::one() - below;
        mass.push(cdf.clone() - cdf_prev);
        cdf_prev = cdf;
    }
    Pmf::new(value_labels(1..=n as u64), mass)
}

/// `[θ : step]_n` written out, for tests and callers holding exact θ.
pub fn generalized_rising(theta: &Exact, step: &Exact, n: usize) -> Exact {
    crate::numerics::rising_factorial_step(theta, step, n)
}

/// `k! α^k` as an exact integer-times-power, used by several callers.
pub fn labelled_root_factor(alpha: &AlphaParam, k: usize) -> Exact {
    Exact::from_integer(factorial(k)) * num_traits::pow(alpha.exact(), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    fn a(p: u64, qq: u64) -> AlphaParam {
        AlphaParam::new(p, qq).unwrap()
    }

    #[test]
    fn pmf_validation() {
        let s = value_labels(1..=2);
        assert!(Pmf::new(s.clone(), vec![q(1, 2), q(1, 2)]).is_ok());
        assert!(matches!(
            Pmf::new(s.clone(), vec![q(1, 2), q(1, 3)]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            Pmf::new(s.clone(), vec![q(3, 2), q(-1, 2)]),
            Err(Error::NegativeMass(_))
        ));
        assert!(Pmf::new(s.clone(), vec![0.5f64, 0.5 + 1e-13]).is_ok());
        assert!(Pmf::new(s.clone(), vec![0.5f64, 0.5 + 1e-9]).is_err());
        assert!(Pmf::<f64>::new(s, vec![1.0]).is_err());
    }

    #[test]
    fn progeny_examples() {
        let alpha = a(2, 5);
        let al = alpha.exact();
        let pmf = progeny_pmf::<Exact>(&alpha, 40).unwrap();
        assert_eq!(pmf.prob(1), al);
        assert_eq!(
            pmf.prob(2),
            al.clone() * (Exact::one() - al.clone()) / q(2, 1)
        );
        assert_eq!(pmf.support().last(), Some(&Label::Tail { above: 40 }));
        let half = progeny_pmf::<Exact>(&a(1, 2), 5).unwrap();
        assert_eq!(half.prob(2), q(1, 8));
        // Coefficients of 1 − √(1−z): 1/2, 1/8, 1/16, 5/128, 7/256.
        let want = [q(1, 2), q(1, 8), q(1, 16), q(5, 128), q(7, 256)];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(&half.prob(n as u64 + 1), w);
        }
        assert!(progeny_pmf::<Exact>(&alpha, 0).is_err());
        let series = sibuya_pgf_series::<Exact>(&alpha, 40);
        for n in 1..=40 {
            assert_eq!(pmf.prob(n as u64), series.coeffs()[n]);
        }
    }

    #[test]
    fn kn_low_order_values() {
        let alpha = a(3, 7);
        let al = alpha.exact();
        let one = Exact::one();
        let k2 = kn_pmf::<Exact>(&alpha, 2).unwrap();
        assert_eq!(
            k2.prob(1),
            (one.clone() - al.clone()) / (al.clone() + one.clone())
        );
        assert_eq!(
            k2.prob(2),
            q(2, 1) * al.clone() / (al.clone() + one.clone())
        );
        let k3 = kn_pmf::<Exact>(&alpha, 3).unwrap();
        let want = q(6, 1) * al.clone() * (one.clone() - al.clone())
            / ((al.clone() + one.clone()) * (al.clone() + q(2, 1)));
        assert_eq!(k3.prob(2), want);
        let k1 = kn_pmf::<Exact>(&alpha, 1).unwrap();
        assert_eq!(k1.prob(1), one);
        let half = kn_pmf::<Exact>(&a(1, 2), 2).unwrap();
        assert_eq!(half.masses(), &[q(1, 3), q(2, 3)]);
        assert!(kn_pmf::<Exact>(&alpha, 0).is_err());
    }

    #[test]
    fn kn_three_routes() {
        for alpha in [a(1, 5), a(1, 2), a(7, 9)] {
            let table = build_triangle(&alpha, 14);
            for n in 1..=14 {
                let fwd = kn_pmf::<Exact>(&alpha, n).unwrap();
                assert_eq!(fwd, kn_pmf_from_counts(&table, n).unwrap());
                assert_eq!(fwd, kn_pmf_lagrange_ratio(&alpha, n).unwrap());
            }
        }
    }

    #[test]
    fn kn_mean_examples() {
        let alpha = a(2, 9);
        let al = alpha.exact();
        assert_eq!(kn_mean::<Exact>(&alpha, 1).unwrap(), Exact::one());
        let mu2 = (Exact::one() + q(3, 1) * al.clone()) / (Exact::one() + al);
        assert_eq!(kn_mean::<Exact>(&alpha, 2).unwrap(), mu2);
        for n in 1..=30 {
            let pmf = kn_pmf::<Exact>(&a(1, 2), n).unwrap();
            assert_eq!(kn_mean::<Exact>(&a(1, 2), n).unwrap(), pmf.mean().unwrap());
        }
    }

    #[test]
    fn kn_mean_ode_examples() {
        let half = a(1, 2);
        assert!((kn_mean_ode(&half, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let v = kn_mean_ode(&half, 199.5).unwrap();
        assert!((v - (2.0 * (200.0f64 / 1.5).sqrt() - 1.0)).abs() < 1e-12);
        assert!((v - 22.094).abs() < 1e-3);
        let t: f64 = 1e12;
        let slope = kn_mean_ode(&half, t).unwrap().ln() / t.ln();
        assert!((slope - 0.5).abs() < 0.05);
        assert!(kn_mean_ode(&half, 0.5).is_err());
    }

    #[test]
    fn martingale_is_exact() {
        for alpha in [a(1, 3), a(1, 2), a(4, 5)] {
            for n in 1..=30 {
                for k in 1..=n {
                    assert!(martingale_drift(&alpha, n, k).unwrap().is_zero());
                }
            }
        }
        // Scale ratio c_{n+1}/c_n = (n+α)/(n+2α).
        let alpha = a(2, 7);
        let al = alpha.exact();
        let r = martingale_scale(&alpha, 6).unwrap() / martingale_scale(&alpha, 5).unwrap();
        assert_eq!(r, (q(5, 1) + al.clone()) / (q(5, 1) + al.clone() + al));
    }

    #[test]
    fn occupancy_examples() {
        let alpha = a(3, 11);
        let v = OccupancyVector::new(vec![1, 1]).unwrap();
        assert_eq!(occupancy_pmf(&alpha, &v).unwrap(), Exact::one());
        let v = OccupancyVector::new(vec![1, 2]).unwrap();
        assert_eq!(occupancy_pmf(&alpha, &v).unwrap(), q(1, 2));
        let v = OccupancyVector::new(vec![2, 2]).unwrap();
        assert_eq!(occupancy_pmf(&a(1, 2), &v).unwrap(), q(1, 5));
        assert!(OccupancyVector::new(vec![2, 0]).is_err());
        assert!(OccupancyVector::new(vec![]).is_err());
    }

    #[test]
    fn marginal_examples() {
        let m = marginal_pmf(&a(5, 7), 3, 2).unwrap();
        assert_eq!(m.masses(), &[q(1, 2), q(1, 2)]);
        let m = marginal_pmf(&a(1, 2), 4, 2).unwrap();
        assert_eq!(m.masses(), &[q(2, 5), q(1, 5), q(2, 5)]);
        let law = OccupancyLaw::new(&a(2, 3), 12);
        for n in 1..=12 {
            for k in 1..=n {
                let m = law.marginal(n, k).unwrap();
                assert_eq!(m.mean().unwrap(), q(n as i64, k as i64));
            }
        }
    }

    #[test]
    fn joint_sums_and_marginalizes() {
        let alpha = a(1, 4);
        let law = OccupancyLaw::new(&alpha, 9);
        for n in 1..=9 {
            for k in 1..=n {
                let joint = law.joint_pmf(n, k).unwrap();
                let marg = law.marginal(n, k).unwrap();
                for n1 in 1..=n - k + 1 {
                    let s: Exact = joint
                        .iter()
                        .filter(|(l, _)| matches!(l, Label::Parts(p) if p[0] == n1))
                        .map(|(_, m)| m.clone())
                        .sum();
                    assert_eq!(s, marg.prob(n1 as u64));
                }
            }
        }
    }

    #[test]
    fn tilted_examples() {
        let alpha = a(2, 5);
        let al = alpha.exact();
        for n in 1..=8 {
            assert_eq!(
                tilted_kn_pmf(&alpha, &Exact::one(), n).unwrap(),
                kn_pmf::<Exact>(&alpha, n).unwrap()
            );
        }
        let t = tilted_kn_pmf(&alpha, &q(1, 2), 2).unwrap();
        let w1 = q(2, 1) * al.clone() * (Exact::one() - al.clone());
        let w2 = q(8, 1) * al.clone() * al;
        let tot = w1.clone() + w2.clone();
        assert_eq!(t.masses(), &[w1 / tot.clone(), w2 / tot]);
        // Normalizer through the Sibuya polynomial: Σ c₁^{−k}C_{n,k} = s_n(1/c₁).
        let c1 = q(3, 7);
        let polys = crate::stirling::sibuya_polynomials(&alpha, 9);
        let table = build_triangle(&alpha, 9);
        let norm: Exact = (1..=9)
            .map(|k| table.forest_count(9, k).unwrap() * num_traits::pow(c1.recip(), k))
            .sum();
        assert_eq!(norm, polys[9].eval(&c1.recip()));
        // pgf at z: s_n(z/c₁)/s_n(1/c₁).
        let t = tilted_kn_pmf(&alpha, &c1, 9).unwrap();
        let z = q(2, 3);
        let pgf: Exact = t
            .iter()
            .map(|(l, m)| match l {
                Label::Value(v) => m * num_traits::pow(z.clone(), *v as usize),
                _ => unreachable!(),
            })
            .sum();
        assert_eq!(pgf, polys[9].eval(&(z / c1.clone())) / norm);
        assert!(tilted_kn_pmf(&alpha, &q(0, 1), 3).is_err());
        assert!(tilted_kn_pmf(&alpha, &q(3, 2), 3).is_err());
    }

    #[test]
    fn ml_moment_examples() {
        let half = a(1, 2);
        assert!((ml_moment(&half, 0.5, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let pi = std::f64::consts::PI;
        assert!((ml_moment(&half, 0.5, 1.0).unwrap() - pi.sqrt()).abs() < 1e-12);
        assert!((ml_variance(&half, 0.5).unwrap() - (4.0 - pi)).abs() < 1e-12);
        for alpha in [a(1, 5), a(2, 3)] {
            let al = alpha.value();
            for q in [-0.5, 0.3, 1.0, 2.0, 3.5] {
                let two = ml_moment(&alpha, al, q).unwrap();
                let one = ml_moment_one_parameter(&alpha, q).unwrap();
                assert!((two - one).abs() <= 1e-12 * one, "α={alpha} q={q}");
            }
        }
        assert!(ml_moment(&half, 0.5, -1.0).is_err());
        assert!(ml_moment(&half, -0.2, 1.0).is_err());
        assert!(ml_moment_one_parameter(&half, -1.0).is_err());
    }

    #[test]
    fn crp_examples() {
        let alpha = a(1, 2);
        for n in 1..=12 {
            let crp = crp_sn_pmf(&alpha, &alpha.exact(), n).unwrap();
            assert_eq!(crp, kn_pmf::<Exact>(&alpha, n).unwrap());
        }
        let one = crp_sn_pmf(&a(1, 3), &Exact::one(), 1).unwrap();
        assert_eq!(one.masses(), &[Exact::one()]);
        let two = crp_sn_pmf(&alpha, &Exact::one(), 2).unwrap();
        assert_eq!(two.masses(), &[q(1, 4), q(3, 4)]);
        let f = crp_sn_pmf(&alpha, &1.0f64, 2).unwrap();
        assert!((f.prob(2) - 0.75).abs() < 1e-15);
        // θ = 0 and θ ∈ (−α, 0) are proper too.
        assert!(crp_sn_pmf(&alpha, &Exact::zero(), 7).is_ok());
        assert!(crp_sn_pmf(&alpha, &q(-1, 4), 7).is_ok());
        assert!(crp_sn_pmf(&alpha, &q(-1, 2), 7).is_err());
    }

    #[test]
    fn renewal_routes_agree() {
        for alpha in [a(1, 3), a(1, 2), a(5, 6)] {
            for n in 1..=12 {
                assert_eq!(
                    renewal_pmf_recursive(&alpha, n).unwrap(),
                    renewal_pmf_from_powers(&alpha, n).unwrap()
                );
            }
        }
        // The renewal count is not the forest count K_n.
        let alpha = a(1, 2);
        let r = renewal_pmf_recursive(&alpha, 2).unwrap();
        assert_eq!(r.prob(1), q(1, 2));
        assert_ne!(r, kn_pmf::<Exact>(&alpha, 2).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn occupancy_is_exchangeable(p in 1u64..7, extra in 1u64..7, parts in proptest::collection::vec(1usize..4, 1..5), rot in 0usize..5) {
            let alpha = AlphaParam::new(p, p + extra).unwrap();
            let law = OccupancyLaw::new(&alpha, 20);
            let base = law.joint(&OccupancyVector::new(parts.clone()).unwrap()).unwrap();
            let mut rotated = parts.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            rotated.reverse();
            prop_assert_eq!(law.joint(&OccupancyVector::new(rotated).unwrap()).unwrap(), base);
        }

        #[test]
        fn float_kn_tracks_exact(p in 1u64..9, extra in 1u64..9, n in 1usize..40) {
            let alpha = AlphaParam::new(p, p + extra).unwrap();
            let e = kn_pmf::<Exact>(&alpha, n).unwrap();
            let f = kn_pmf::<f64>(&alpha, n).unwrap();
            for (x, y) in e.masses().iter().zip(f.masses()) {
                let x = x.as_f64();
                prop_assert!((x - y).abs() <= 1e-10 * x.max(1e-300) || (x - y).abs() < 1e-300);
            }
        }
    }
}
