//! Truncated formal power series over a [`Scalar`] field, and the generating
//! functions of Sibuya trees and forests built from them.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{AlphaParam, Exact, Scalar};

/// Power series `Σ_{n=0}^{N} a_n z^n` known up to order `N`.
///
/// The scalar type fixes the arithmetic mode; exact and float series cannot
/// be combined.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> TruncatedSeries<S> {
    /// Series with the given coefficients; the order is `coeffs.len() − 1`.
    pub fn new(coeffs: Vec<S>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("a series needs at least one coefficient"));
        }
        Ok(TruncatedSeries { coeffs })
    }

    pub fn zero(order: usize) -> Self {
        TruncatedSeries {
            coeffs: vec![S::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        Self::monomial(S::one(), 0, order)
    }

    /// `c·z^m` truncated at `order`.
    pub fn monomial(c: S, m: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if m <= order {
            s.coeffs[m] = c;
        }
        s
    }

    /// Polynomial given by `coeffs`, zero-padded or truncated to `order`.
    pub fn from_poly(coeffs: &[S], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (dst, c) in s.coeffs.iter_mut().zip(coeffs) {
            *dst = c.clone();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    /// `[z^n]` of the series, or `None` beyond the truncation order.
    pub fn coeff(&self, n: usize) -> Option<&S> {
        self.coeffs.get(n)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut s = Self::zero(order);
        for (dst, c) in s.coeffs.iter_mut().zip(&self.coeffs) {
            *dst = c.clone();
        }
        s
    }

    /// Cauchy product, truncated to the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = Self::zero(order);
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(order + 1 - i) {
                if b.is_zero() {
                    continue;
                }
                out.coeffs[i + j] += &(a.clone() * b.clone());
            }
        }
        out
    }

    /// `a^k` by binary exponentiation.
    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::one(self.order());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Multiplicative inverse; needs a nonzero constant term.
    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = &self.coeffs[0];
        if a0.is_zero() {
            return Err(Error::ZeroConstantTerm);
        }
        let inv0 = S::one() / a0.clone();
        let n = self.order();
        let mut b: Vec<S> = Vec::with_capacity(n + 1);
        b.push(inv0.clone());
        for m in 1..=n {
            let mut acc = S::zero();
            for j in 1..=m {
                let aj = &self.coeffs[j];
                if !aj.is_zero() {
                    acc += &(aj.clone() * b[m - j].clone());
                }
            }
            b.push(-(acc * inv0.clone()));
        }
        Ok(TruncatedSeries { coeffs: b })
    }

    /// `self / other` as `self · other⁻¹`.
    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.reciprocal()?))
    }

    /// `self(inner(z))` by Horner's rule; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeffs[0].is_zero() {
            return Err(Error::invalid(
                "inner series of a composition must vanish at 0",
            ));
        }
        let order = self.order().min(inner.order());
        let inner = inner.truncate(order);
        let mut acc = Self::monomial(self.coeffs[self.order()].clone(), 0, order);
        for a in self.coeffs.iter().rev().skip(1) {
            acc = acc.mul(&inner);
            acc.coeffs[0] += a;
        }
        Ok(acc)
    }

    /// Formal derivative; the order drops by one (stays 0 for constants).
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.clone() * S::from_int(i as i64))
            .collect();
        TruncatedSeries { coeffs }
    }

    /// Antiderivative vanishing at 0; the order grows by one.
    pub fn integral(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(S::zero());
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.clone() / S::from_int(i as i64 + 1));
        }
        TruncatedSeries { coeffs }
    }

    /// Divides by `z^m`; the first `m` coefficients must vanish.
    pub fn shift_down(&self, m: usize) -> Result<Self> {
        if m > self.order() {
            return Err(Error::invalid("shift exceeds series order"));
        }
        if self.coeffs[..m].iter().any(|c| !c.is_zero()) {
            return Err(Error::invalid(
                "series is not divisible by the requested power of z",
            ));
        }
        Ok(TruncatedSeries {
            coeffs: self.coeffs[m..].to_vec(),
        })
    }

    /// Multiplies by `z^m`, keeping the order.
    pub fn shift_up(&self, m: usize) -> Self {
        let mut s = Self::zero(self.order());
        for (i, c) in self.coeffs.iter().enumerate() {
            if i + m <= self.order() {
                s.coeffs[i + m] = c.clone();
            }
        }
        s
    }

    pub fn scale(&self, c: &S) -> Self {
        let coeffs = self.coeffs.iter().map(|a| a.clone() * c.clone()).collect();
        TruncatedSeries { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|i| self.coeffs[i].clone() + other.coeffs[i].clone())
            .collect();
        TruncatedSeries { coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|i| self.coeffs[i].clone() - other.coeffs[i].clone())
            .collect();
        TruncatedSeries { coeffs }
    }

    /// Evaluates the polynomial part at `z`.
    pub fn eval(&self, z: &S) -> S {
        let mut acc = S::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z.clone() + c.clone();
        }
        acc
    }

    pub fn to_f64(&self) -> TruncatedSeries<f64> {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(Scalar::as_f64).collect(),
        }
    }
}

impl<S: Scalar> fmt::Display for TruncatedSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{i}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O(z^{})", self.order() + 1)
    }
}

/// Expansion of `(1−z)^r`: `c_0 = 1`, `c_{n+1} = c_n (n−r)/(n+1)`.
pub fn binomial_series<S: Scalar>(r: &S, order: usize) -> TruncatedSeries<S> {
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut c = S::one();
    for n in 0..=order {
        coeffs.push(c.clone());
        c = c * (S::from_int(n as i64) - r.clone()) / S::from_int(n as i64 + 1);
    }
    TruncatedSeries { coeffs }
}

/// Sibuya pgf `Φ(z) = 1 − (1−z)^α`.
pub fn sibuya_pgf_series<S: Scalar>(alpha: &AlphaParam, order: usize) -> TruncatedSeries<S> {
    let mut s = binomial_series(&alpha.scalar::<S>(), order).scale(&-S::one());
    s.coeffs[0] = S::zero();
    s
}

/// `1 − (1−z)^{1/α}`, the primitive `P` of the increasing-tree generator.
pub fn primitive_series<S: Scalar>(alpha: &AlphaParam, order: usize) -> TruncatedSeries<S> {
    let mut s = binomial_series(&alpha.inverse::<S>(), order).scale(&-S::one());
    s.coeffs[0] = S::zero();
    s
}

/// Offspring pgf `φ(z) = z / (1 − (1−z)^{1/α})`, the branching mechanism
/// whose total progeny is Sibuya-distributed.
pub fn offspring_series<S: Scalar>(alpha: &AlphaParam, order: usize) -> TruncatedSeries<S> {
    let denom = primitive_series::<S>(alpha, order + 1)
        .shift_down(1)
        .expect("primitive series vanishes at 0");
    denom.reciprocal().expect("[z]P = 1/α is nonzero")
}

/// Increasing-tree generator `φ(z) = α(1−z)^{−θ}`, `θ = (1−α)/α`, with
/// coefficients `α[θ]_n/n!`.
pub fn increasing_generator_series<S: Scalar>(
    alpha: &AlphaParam,
    order: usize,
) -> TruncatedSeries<S> {
    let theta = alpha.theta::<S>();
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut c = alpha.scalar::<S>();
    for n in 0..=order {
        coeffs.push(c.clone());
        c = c * (theta.clone() + S::from_int(n as i64)) / S::from_int(n as i64 + 1);
    }
    TruncatedSeries { coeffs }
}

/// `R(z) = z/P(z)` where `P = ∫ 1/φ` is built by integrating the reciprocal
/// of the increasing-tree generator. This route never touches the binomial
/// expansion of `(1−z)^{1/α}`, so it is independent of [`offspring_series`].
pub fn increasing_branching_series<S: Scalar>(
    alpha: &AlphaParam,
    order: usize,
) -> TruncatedSeries<S> {
    let inv = increasing_generator_series::<S>(alpha, order)
        .reciprocal()
        .expect("φ(0) = α is nonzero");
    let p = inv.integral();
    p.shift_down(1)
        .expect("integral vanishes at 0")
        .reciprocal()
        .expect("P'(0) = 1/α is nonzero")
}

/// `(1−z)^{−α} = 1/(1−Φ(z))`, the generating function of all forests.
pub fn forest_count_series<S: Scalar>(alpha: &AlphaParam, order: usize) -> TruncatedSeries<S> {
    let phi = sibuya_pgf_series::<S>(alpha, order);
    TruncatedSeries::one(order)
        .sub(&phi)
        .reciprocal()
        .expect("1 − Φ(0) = 1")
}

/// Powers `Φ^k` and `φ^n` for `1 ≤ k, n ≤ n_max`, built incrementally, so
/// that many Lagrange coefficients can be read off without recomputation.
#[derive(Debug, Clone)]
pub struct LagrangeTable<S> {
    n_max: usize,
    pgf_powers: Vec<TruncatedSeries<S>>,
    offspring_powers: Vec<TruncatedSeries<S>>,
}

/// Which branching series supplies the right-hand side of the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchingRoute {
    /// `φ = z/(1 − (1−z)^{1/α})` directly.
    Offspring,
    /// `R = z/P` with `P` the primitive of the increasing-tree generator.
    Increasing,
}

impl<S: Scalar> LagrangeTable<S> {
    pub fn new(alpha: &AlphaParam, n_max: usize, route: BranchingRoute) -> Self {
        let pgf = sibuya_pgf_series::<S>(alpha, n_max);
        let branching = match route {
            BranchingRoute::Offspring => offspring_series::<S>(alpha, n_max),
            BranchingRoute::Increasing => increasing_branching_series::<S>(alpha, n_max),
        };
        LagrangeTable {
            n_max,
            pgf_powers: successive_powers(&pgf, n_max),
            offspring_powers: successive_powers(&branching, n_max),
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `Φ^k`, for `0 ≤ k ≤ n_max`.
    pub fn pgf_power(&self, k: usize) -> &TruncatedSeries<S> {
        &self.pgf_powers[k]
    }

    /// `φ^n` (or `R^n`), for `0 ≤ n ≤ n_max`.
    pub fn branching_power(&self, n: usize) -> &TruncatedSeries<S> {
        &self.offspring_powers[n]
    }

    /// `[z^n]Φ^k`.
    pub fn forest_coeff(&self, n: usize, k: usize) -> S {
        self.pgf_powers[k].coeffs[n].clone()
    }

    /// `(k/n)[z^{n−k}]φ^n`.
    pub fn lagrange_coeff(&self, n: usize, k: usize) -> S {
        self.offspring_powers[n].coeffs[n - k].clone() * S::from_ratio(k as i64, n as i64)
    }

    /// Both sides of the Lagrange identity for `1 ≤ k ≤ n ≤ n_max`.
    pub fn check(&self, n: usize, k: usize) -> Result<(S, S)> {
        check_nk(n, k, self.n_max)?;
        Ok((self.forest_coeff(n, k), self.lagrange_coeff(n, k)))
    }
}

fn successive_powers<S: Scalar>(
    base: &TruncatedSeries<S>,
    n_max: usize,
) -> Vec<TruncatedSeries<S>> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(TruncatedSeries::one(base.order()));
    for k in 1..=n_max {
        let next = out[k - 1].mul(base);
        out.push(next);
    }
    out
}

fn check_nk(n: usize, k: usize, n_max: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ n, got n={n}, k={k}")));
    }
    if n > n_max {
        return Err(Error::invalid(format!("n={n} exceeds table size {n_max}")));
    }
    Ok(())
}

/// `([z^n]Φ^k, (k/n)[z^{n−k}]φ^n)`, each side computed from its own series.
pub fn lagrange_check_progeny(alpha: &AlphaParam, n: usize, k: usize) -> Result<(Exact, Exact)> {
    check_nk(n, k, n)?;
    let lhs = sibuya_pgf_series::<Exact>(alpha, n).pow(k as u32).coeffs[n].clone();
    let rhs = offspring_series::<Exact>(alpha, n).pow(n as u32).coeffs[n - k].clone()
        * Exact::from_ratio(k as i64, n as i64);
    Ok((lhs, rhs))
}

/// Same identity with `R = z/P` from the increasing-tree construction on the
/// right-hand side; valid for every α ∈ (0,1).
pub fn lagrange_check_increasing(alpha: &AlphaParam, n: usize, k: usize) -> Result<(Exact, Exact)> {
    check_nk(n, k, n)?;
    let lhs = sibuya_pgf_series::<Exact>(alpha, n).pow(k as u32).coeffs[n].clone();
    let rhs = increasing_branching_series::<Exact>(alpha, n)
        .pow(n as u32)
        .coeffs[n - k]
        .clone()
        * Exact::from_ratio(k as i64, n as i64);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{log_gamma, rising_factorial};
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    fn a(p: u64, qq: u64) -> AlphaParam {
        AlphaParam::new(p, qq).unwrap()
    }

    fn exact(c: &[(i64, i64)]) -> TruncatedSeries<Exact> {
        TruncatedSeries::new(c.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    #[test]
    fn binomial_series_examples() {
        assert_eq!(
            binomial_series(&q(1, 1), 2),
            exact(&[(1, 1), (-1, 1), (0, 1)])
        );
        assert_eq!(
            binomial_series(&q(1, 2), 2),
            exact(&[(1, 1), (-1, 2), (-1, 8)])
        );
        assert_eq!(
            binomial_series(&q(2, 1), 3),
            exact(&[(1, 1), (-2, 1), (1, 1), (0, 1)])
        );
    }

    #[test]
    fn product_examples() {
        let p = exact(&[(1, 1), (1, 1), (0, 1)]);
        let m = exact(&[(1, 1), (-1, 1), (0, 1)]);
        assert_eq!(p.mul(&m), exact(&[(1, 1), (0, 1), (-1, 1)]));
        let phi = sibuya_pgf_series::<Exact>(&a(1, 2), 3);
        assert_eq!(phi.mul(&phi).coeff(3).unwrap(), &q(1, 8));
        let inv = m.reciprocal().unwrap();
        assert_eq!(m.mul(&inv), TruncatedSeries::one(2));
    }

    #[test]
    fn pow_examples() {
        let phi = sibuya_pgf_series::<Exact>(&a(1, 2), 6);
        assert_eq!(phi.pow(0), TruncatedSeries::one(6));
        assert_eq!(phi.pow(2).coeff(2).unwrap(), &q(1, 4));
        let alpha = a(3, 7);
        let phi = sibuya_pgf_series::<Exact>(&alpha, 8);
        for k in 1..=8u32 {
            let pk = phi.pow(k);
            assert!(pk.coeffs()[..k as usize].iter().all(Zero::is_zero));
            assert_eq!(
                pk.coeffs()[k as usize],
                num_traits::pow(alpha.exact(), k as usize)
            );
        }
    }

    #[test]
    fn pow_matches_repeated_product() {
        let phi = offspring_series::<Exact>(&a(2, 5), 10);
        let mut acc = TruncatedSeries::one(10);
        for k in 0..12u32 {
            assert_eq!(phi.pow(k), acc);
            acc = acc.mul(&phi);
        }
    }

    #[test]
    fn reciprocal_examples() {
        let ones = exact(&[(1, 1), (-1, 1), (0, 1), (0, 1), (0, 1)])
            .reciprocal()
            .unwrap();
        assert!(ones.coeffs().iter().all(One::is_one));
        let alpha = a(1, 3);
        let f = forest_count_series::<Exact>(&alpha, 12);
        for n in 0..=12 {
            let want = rising_factorial(&alpha.exact(), n)
                / Exact::from_integer(crate::numerics::factorial(n));
            assert_eq!(f.coeffs()[n], want);
        }
        let g = exact(&[(2, 1), (-1, 1), (0, 1), (0, 1), (0, 1), (0, 1)])
            .reciprocal()
            .unwrap();
        for (n, c) in g.coeffs().iter().enumerate() {
            assert_eq!(c, &q(1, 1 << (n + 1)));
        }
        assert_eq!(
            exact(&[(0, 1), (1, 1)]).reciprocal(),
            Err(Error::ZeroConstantTerm)
        );
    }

    #[test]
    fn offspring_examples() {
        let phi = offspring_series::<Exact>(&a(1, 2), 10);
        for (n, c) in phi.coeffs().iter().enumerate() {
            assert_eq!(c, &q(1, 1 << (n + 1)));
        }
        for alpha in [a(1, 5), a(2, 3), a(5, 7)] {
            assert_eq!(
                offspring_series::<Exact>(&alpha, 3).coeffs()[0],
                alpha.exact()
            );
        }
        // φ·(1 − (1−z)^{3/2})/z = 1, solved directly for the first two terms.
        let alpha = a(2, 3);
        let d = primitive_series::<Exact>(&alpha, 3).shift_down(1).unwrap();
        let phi = offspring_series::<Exact>(&alpha, 2);
        let d0 = d.coeffs()[0].clone();
        let want0 = Exact::one() / d0.clone();
        let want1 = -(d.coeffs()[1].clone() * want0.clone()) / d0;
        assert_eq!(phi.coeffs()[0], want0);
        assert_eq!(phi.coeffs()[1], want1);
        assert_eq!(want0, q(2, 3));
    }

    #[test]
    fn increasing_generator_examples() {
        let g = increasing_generator_series::<Exact>(&a(1, 2), 8);
        assert!(g.coeffs().iter().all(|c| c == &q(1, 2)));
        let g = increasing_generator_series::<Exact>(&a(1, 3), 8);
        for (n, c) in g.coeffs().iter().enumerate() {
            assert_eq!(c, &q(n as i64 + 1, 3));
        }
        let g = increasing_generator_series::<Exact>(&a(4, 5), 20);
        assert!(g.coeffs().iter().all(|c| c > &Exact::zero()));
    }

    #[test]
    fn lagrange_examples() {
        let alpha = a(2, 7);
        assert_eq!(
            lagrange_check_progeny(&alpha, 1, 1).unwrap(),
            (alpha.exact(), alpha.exact())
        );
        let (l, r) = lagrange_check_progeny(&a(1, 2), 3, 2).unwrap();
        assert_eq!((l.clone(), r), (q(1, 8), q(1, 8)));
        let al = a(3, 5).exact();
        let want = al.clone() * (Exact::one() - al) / q(2, 1);
        assert_eq!(
            lagrange_check_progeny(&a(3, 5), 2, 1).unwrap(),
            (want.clone(), want)
        );
        assert!(lagrange_check_progeny(&alpha, 2, 3).is_err());
        assert!(lagrange_check_progeny(&alpha, 2, 0).is_err());
    }

    #[test]
    fn lagrange_increasing_examples() {
        let alpha = a(2, 9);
        for n in 1..=6 {
            let (l, r) = lagrange_check_increasing(&alpha, n, n).unwrap();
            let want = num_traits::pow(alpha.exact(), n);
            assert_eq!((l, r), (want.clone(), want));
        }
        let (l, r) = lagrange_check_increasing(&a(1, 3), 3, 1).unwrap();
        let want = q(1, 3) * q(2, 3) * q(5, 3) / q(6, 1);
        assert_eq!((l, r), (want.clone(), want));
    }

    #[test]
    fn increasing_route_reproduces_offspring_series() {
        let alpha = a(2, 5);
        assert_eq!(
            increasing_branching_series::<Exact>(&alpha, 19),
            offspring_series::<Exact>(&alpha, 19)
        );
    }

    #[test]
    fn primitive_inverts_pgf() {
        for alpha in [a(1, 4), a(1, 2), a(5, 6)] {
            let p = primitive_series::<Exact>(&alpha, 15);
            let phi = sibuya_pgf_series::<Exact>(&alpha, 15);
            assert_eq!(
                p.compose(&phi).unwrap(),
                TruncatedSeries::monomial(q(1, 1), 1, 15)
            );
            // Increasing-tree equation Φ' = φ(Φ).
            let g = increasing_generator_series::<Exact>(&alpha, 15);
            let lhs = phi.derivative();
            let rhs = g.compose(&phi).unwrap().truncate(14);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn progeny_equation_holds() {
        // Φ(z) = z·φ(Φ(z)).
        for alpha in [a(1, 2), a(2, 3), a(1, 5)] {
            let phi = sibuya_pgf_series::<Exact>(&alpha, 14);
            let off = offspring_series::<Exact>(&alpha, 14);
            let rhs = off.compose(&phi).unwrap().shift_up(1);
            assert_eq!(phi, rhs);
        }
    }

    #[test]
    fn pgf_coefficients_are_a_subprobability() {
        let alpha = a(3, 8);
        let phi = sibuya_pgf_series::<Exact>(&alpha, 60);
        assert!(phi.coeffs()[1..].iter().all(|c| c > &Exact::zero()));
        let total: Exact = phi.coeffs().iter().cloned().sum();
        assert!(total < Exact::one());
        // The gap is the survival P(N > 60) = [1−α]_60/60!.
        let gap = rising_factorial(&(Exact::one() - alpha.exact()), 60)
            / Exact::from_integer(crate::numerics::factorial(60));
        assert_eq!(Exact::one() - total, gap);
    }

    #[test]
    fn power_law_tail() {
        for alpha in [a(1, 2), a(1, 3), a(3, 4)] {
            let al = alpha.value();
            let phi = sibuya_pgf_series::<f64>(&alpha, 10_000);
            let n = 10_000f64;
            let ratio =
                n.powf(1.0 + al) * log_gamma(1.0 - al).unwrap().exp() * phi.coeffs()[10_000] / al;
            assert!((ratio - 1.0).abs() < 0.02, "α={alpha}: {ratio}");
        }
    }

    #[test]
    fn float_mode_tracks_exact_mode() {
        let alpha = a(4, 9);
        let e = offspring_series::<Exact>(&alpha, 40).pow(7);
        let f = offspring_series::<f64>(&alpha, 40).pow(7);
        for (x, y) in e.coeffs().iter().zip(f.coeffs()) {
            let x = x.as_f64();
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }

    #[test]
    fn calculus_round_trip() {
        let s = exact(&[(1, 1), (2, 3), (-5, 7), (4, 1)]);
        assert_eq!(s.integral().derivative(), s);
        assert_eq!(s.eval(&q(1, 2)), q(1, 1) + q(1, 3) - q(5, 28) + q(1, 2));
        assert!(s.compose(&s).is_err());
        assert_eq!(
            s.shift_up(1).shift_down(1).unwrap().truncate(2),
            s.truncate(2)
        );
    }

    #[test]
    fn lagrange_table_matches_direct_checks() {
        let alpha = a(3, 7);
        let table = LagrangeTable::<Exact>::new(&alpha, 9, BranchingRoute::Offspring);
        for n in 1..=9 {
            for k in 1..=n {
                let (l, r) = table.check(n, k).unwrap();
                assert_eq!(l, r);
                assert_eq!((l, r), lagrange_check_progeny(&alpha, n, k).unwrap());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn lagrange_identity_random_alpha(p in 1u64..9, extra in 1u64..9, n in 1usize..14, kk in 0usize..14) {
            let qq = p + extra;
            let alpha = AlphaParam::new(p, qq).unwrap();
            let k = 1 + kk % n;
            let (l, r) = lagrange_check_increasing(&alpha, n, k).unwrap();
            prop_assert_eq!(l, r);
        }

        #[test]
        fn reciprocal_is_inverse(c0 in 1i64..20, c in proptest::collection::vec(-20i64..20, 0..8)) {
            let mut coeffs = vec![q(c0, 3)];
            coeffs.extend(c.iter().map(|&v| q(v, 5)));
            let s = TruncatedSeries::new(coeffs).unwrap();
            let order = s.order();
            prop_assert_eq!(s.mul(&s.reciprocal().unwrap()), TruncatedSeries::one(order));
        }
    }
}
