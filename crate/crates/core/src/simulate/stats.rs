//! Goodness-of-fit helpers for comparing simulations with exact laws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Bins whose expected count falls below this are pooled with a neighbour.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn p_value(statistic: f64, dof: usize) -> Result<f64> {
    let law = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(law.sf(statistic))
}

/// Groups consecutive bins until each group's `weight` reaches
/// [`MIN_EXPECTED`]; a short final group joins the one before it.
fn pooled_groups(weight: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (i, w) in weight.iter().enumerate() {
        acc += w;
        if acc >= MIN_EXPECTED {
            groups.push(start..i + 1);
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < weight.len() {
        match groups.last_mut() {
            Some(last) => last.end = weight.len(),
            None => groups.push(0..weight.len()),
        }
    }
    groups
}

/// Pearson test of observed counts against cell probabilities (which must
/// cover the whole outcome space, so include a tail cell if needed).
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareReport> {
    if observed.len() != probs.len() {
        return Err(Error::invalid(
            "observed and expected cells differ in number",
        ));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::invalid("no observations"));
    }
    let n = total as f64;
    let expected: Vec<f64> = probs.iter().map(|p| p * n).collect();
    let groups = pooled_groups(&expected);
    if groups.len() < 2 {
        return Err(Error::invalid("fewer than two cells after pooling"));
    }
    let mut statistic = 0.0;
    for g in &groups {
        let o: u64 = observed[g.clone()].iter().sum();
        let e: f64 = expected[g.clone()].iter().sum();
        if e <= 0.0 {
            if o > 0 {
                return Ok(ChiSquareReport {
                    statistic: f64::INFINITY,
                    dof: groups.len() - 1,
                    p_value: 0.0,
                });
            }
            continue;
        }
        statistic += (o as f64 - e).powi(2) / e;
    }
    let dof = groups.len() - 1;
    Ok(ChiSquareReport {
        statistic,
        dof,
        p_value: p_value(statistic, dof)?,
    })
}

/// Chi-square test that two count vectors over the same cells come from one
/// law.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquareReport> {
    if a.len() != b.len() {
        return Err(Error::invalid("samples have different cell counts"));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("empty sample"));
    }
    let pooled: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x + y) as f64).collect();
    // Pool on the smaller expected count of the two samples.
    let scale = na.min(nb) / (na + nb);
    let weight: Vec<f64> = pooled.iter().map(|c| c * scale).collect();
    let groups = pooled_groups(&weight);
    if groups.len() < 2 {
        return Err(Error::invalid("fewer than two cells after pooling"));
    }
    let mut statistic = 0.0;
    for g in &groups {
        let oa: u64 = a[g.clone()].iter().sum();
        let ob: u64 = b[g.clone()].iter().sum();
        let t = (oa + ob) as f64;
        let (ea, eb) = (t * na / (na + nb), t * nb / (na + nb));
        statistic += (oa as f64 - ea).powi(2) / ea + (ob as f64 - eb).powi(2) / eb;
    }
    let dof = groups.len() - 1;
    Ok(ChiSquareReport {
        statistic,
        dof,
        p_value: p_value(statistic, dof)?,
    })
}

/// Standardized deviation of `count` successes in `trials` from rate `p`.
pub fn binomial_z(count: u64, trials: u64, p: f64) -> f64 {
    let n = trials as f64;
    let sd = (n * p * (1.0 - p)).sqrt();
    if sd == 0.0 {
        return if count as f64 == n * p {
            0.0
        } else {
            f64::INFINITY
        };
    }
    (count as f64 - n * p) / sd
}
