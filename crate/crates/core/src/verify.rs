//! One-shot identity suite: every exact identity the crate relies on,
//! recomputed by independent routes at a given α.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dist::{
    crp_sn_pmf, kn_pmf, kn_pmf_from_counts, kn_pmf_lagrange_ratio, martingale_drift, progeny_pmf,
    renewal_pmf_from_powers, renewal_pmf_recursive, OccupancyLaw, OccupancyVector,
};
use crate::error::{Error, Result};
use crate::numerics::{AlphaParam, Exact};
use crate::series::{BranchingRoute, LagrangeTable};
use crate::stirling::{
    build_triangle, forest_total, sibuya_polynomials, stirling_alt_sum, stirling_bell_table,
    stirling_faa_di_bruno, FAA_DI_BRUNO_MAX_N,
};
use crate::thermo::{
    classify_increasing_rescaled, classify_rescaled, rate_function, regular_boundary_c2,
    solve_z_rho, Classification,
};

/// Largest `n_max` accepted by [`verify_identities`].
pub const VERIFY_MAX_N: usize = 40;
/// Occupancy laws enumerate compositions, so they stop here.
const OCCUPANCY_MAX_N: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub alpha: AlphaParam,
    pub n_max: usize,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// `Ok(None)` means the check held; `Ok(Some(msg))` is a counterexample.
type CheckFn<'a> = Box<dyn Fn() -> Result<Option<String>> + 'a>;

fn mismatch(what: &str, n: usize, k: usize) -> Option<String> {
    Some(format!("{what} differs at n={n}, k={k}"))
}

/// Runs the identity suite for `1 ≤ n ≤ n_max`.
pub fn verify_identities(alpha: &AlphaParam, n_max: usize) -> Result<VerifyReport> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    if n_max > VERIFY_MAX_N {
        return Err(Error::SizeGuard {
            what: "n_max",
            value: n_max,
            limit: VERIFY_MAX_N,
        });
    }
    let table = build_triangle(alpha, n_max);
    let occ_max = n_max.min(OCCUPANCY_MAX_N);
    let occupancy = OccupancyLaw::new(alpha, occ_max);

    let checks: Vec<(String, CheckFn)> = vec![
        (
            "stirling: recurrence = alternating sum = exponential Bell".into(),
            Box::new(|| {
                let bell = stirling_bell_table(alpha, n_max);
                for n in 1..=n_max {
                    for k in 1..=n {
                        let rec = table.get(n, k).expect("in range");
                        if &stirling_alt_sum(alpha, n, k)? != rec {
                            return Ok(mismatch("alternating sum", n, k));
                        }
                        if &bell[n][k] != rec {
                            return Ok(mismatch("Bell route", n, k));
                        }
                    }
                }
                Ok(None)
            }),
        ),
        (
            format!(
                "stirling: recurrence = composition sum (n ≤ {})",
                n_max.min(FAA_DI_BRUNO_MAX_N)
            ),
            Box::new(|| {
                for n in 1..=n_max.min(FAA_DI_BRUNO_MAX_N) {
                    for k in 1..=n {
                        if &stirling_faa_di_bruno(alpha, n, k)?
                            != table.get(n, k).expect("in range")
                        {
                            return Ok(mismatch("composition sum", n, k));
                        }
                    }
                }
                Ok(None)
            }),
        ),
        (
            "sibuya polynomials: s_n(1) = [α]_n".into(),
            Box::new(|| {
                for (n, s) in sibuya_polynomials(alpha, n_max).iter().enumerate() {
                    if s.eval(&Exact::one()) != forest_total(alpha, n) {
                        return Ok(Some(format!("s_{n}(1) differs")));
                    }
                }
                Ok(None)
            }),
        ),
        (
            "lagrange: [z^n]Φ^k = (k/n)[z^(n−k)]φ^n".into(),
            Box::new(|| lagrange(alpha, n_max, BranchingRoute::Offspring)),
        ),
        (
            "lagrange: increasing-tree mechanism z/P on the right".into(),
            Box::new(|| lagrange(alpha, n_max, BranchingRoute::Increasing)),
        ),
        (
            "forest counts: chain law = counts/[α]_n = coefficient ratio".into(),
            Box::new(|| {
                for n in 1..=n_max {
                    let chain = kn_pmf::<Exact>(alpha, n)?;
                    if chain != kn_pmf_from_counts(&table, n)? {
                        return Ok(Some(format!("count route differs at n={n}")));
                    }
                    if chain != kn_pmf_lagrange_ratio(alpha, n)? {
                        return Ok(Some(format!("coefficient ratio differs at n={n}")));
                    }
                }
                Ok(None)
            }),
        ),
        (
            "restaurant: table count at θ = α equals the forest-count law".into(),
            Box::new(|| {
                for n in 1..=n_max {
                    if crp_sn_pmf::<Exact>(alpha, &alpha.exact(), n)? != kn_pmf::<Exact>(alpha, n)?
                    {
                        return Ok(Some(format!("differs at n={n}")));
                    }
                }
                Ok(None)
            }),
        ),
        (
            "martingale: zero drift of c_n(K_n + 1)".into(),
            Box::new(|| {
                for n in 1..=n_max {
                    for k in 1..=n {
                        if !martingale_drift(alpha, n, k)?.is_zero() {
                            return Ok(mismatch("drift", n, k));
                        }
                    }
                }
                Ok(None)
            }),
        ),
        (
            format!("occupancy: normalized, exchangeable, marginal mean n/k (n ≤ {occ_max})"),
            Box::new(|| {
                for n in 1..=occ_max {
                    for k in 1..=n {
                        // Construction already certifies normalization.
                        let joint = occupancy.joint_pmf(n, k)?;
                        for v in OccupancyVector::all(n, k) {
                            let mut rev = v.parts().to_vec();
                            rev.reverse();
                            let mut sorted = v.parts().to_vec();
                            sorted.sort_unstable();
                            let p = occupancy.joint(&v)?;
                            if p != occupancy.joint(&OccupancyVector::new(rev)?)?
                                || p != occupancy.joint(&OccupancyVector::new(sorted)?)?
                            {
                                return Ok(mismatch("exchangeability", n, k));
                            }
                        }
                        let marginal = occupancy.marginal(n, k)?;
                        if marginal.mean()? != Exact::new(n.into(), k.into()) {
                            return Ok(mismatch("marginal mean", n, k));
                        }
                        if joint.is_empty() {
                            return Ok(mismatch("empty joint law", n, k));
                        }
                    }
                }
                Ok(None)
            }),
        ),
        (
            "renewal count: first-renewal recursion = power-series cdf".into(),
            Box::new(|| {
                for n in 1..=n_max {
                    if renewal_pmf_recursive(alpha, n)? != renewal_pmf_from_powers(alpha, n)? {
                        return Ok(Some(format!("differs at n={n}")));
                    }
                }
                Ok(None)
            }),
        ),
        (
            "progeny: pmf with tail mass is exactly normalized".into(),
            Box::new(|| {
                progeny_pmf::<Exact>(alpha, n_max)?;
                Ok(None)
            }),
        ),
        (
            "thermo: saddle point residual ≤ 1e-12, φ_ρ′(1) = 1 − 1/ρ, f_ρ(ρ) = 0".into(),
            Box::new(|| {
                for rho in [1.5, 2.0, 3.0, 5.0] {
                    let s = solve_z_rho(alpha, rho)?;
                    if !(s.residual <= 1e-12) {
                        return Ok(Some(format!("residual {} at ρ={rho}", s.residual)));
                    }
                    let slope = s.induced_branching_slope();
                    if (slope - (1.0 - 1.0 / rho)).abs() > 1e-8 {
                        return Ok(Some(format!("slope {slope} at ρ={rho}")));
                    }
                    let f = rate_function(alpha, rho, rho)?;
                    if f.abs() > 1e-10 {
                        return Ok(Some(format!("f_ρ(ρ) = {f} at ρ={rho}")));
                    }
                }
                Ok(None)
            }),
        ),
        (
            "rescaling: boundaries are regular, defective families sit at fixed points".into(),
            Box::new(|| {
                for c1 in [0.1, 0.3, 0.5, 0.7, 0.9] {
                    let boundary = classify_rescaled(alpha, c1, regular_boundary_c2(alpha, c1))?;
                    if (boundary.offspring_at_one - 1.0).abs() > 1e-12 {
                        return Ok(Some(format!(
                            "φ̃(1) = {} at c1={c1}",
                            boundary.offspring_at_one
                        )));
                    }
                    let inner = classify_rescaled(alpha, c1, 0.5 * regular_boundary_c2(alpha, c1))?;
                    if inner.classification != Classification::SupercriticalDefective
                        || inner.fixed_point_residual.is_none_or(|r| r > 1e-12)
                    {
                        return Ok(Some(format!("fixed point fails at c1={c1}: {inner:?}")));
                    }
                    let inc = classify_increasing_rescaled(alpha, c1)?;
                    if (inc.offspring_at_one - 1.0).abs() > 1e-12 {
                        return Ok(Some(format!(
                            "increasing φ̃(1) = {} at c1={c1}",
                            inc.offspring_at_one
                        )));
                    }
                }
                Ok(None)
            }),
        ),
    ];

    let checks = checks
        .into_iter()
        .map(|(name, check)| {
            let (passed, detail) = match check() {
                Ok(None) => (true, "ok".to_string()),
                Ok(Some(msg)) => (false, msg),
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                name,
                passed,
                detail,
            }
        })
        .collect();
    Ok(VerifyReport {
        alpha: alpha.clone(),
        n_max,
        checks,
    })
}

fn lagrange(alpha: &AlphaParam, n_max: usize, route: BranchingRoute) -> Result<Option<String>> {
    let t = LagrangeTable::<Exact>::new(alpha, n_max, route);
    for n in 1..=n_max {
        for k in 1..=n {
            let (lhs, rhs) = t.check(n, k)?;
            if lhs != rhs {
                return Ok(mismatch("coefficient", n, k));
            }
        }
    }
    Ok(None)
}
