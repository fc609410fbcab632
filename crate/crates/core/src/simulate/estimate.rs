//! Parallel Monte Carlo runs and their summaries.
//!
//! Trials are cut into chunks of [`CHUNK`]; chunk `i` draws from
//! `stream.split(i)` and results are gathered in chunk order, so every
//! report is bit-identical whatever the number of worker threads.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{kn_mean, kn_pmf, ml_moment_one_parameter, progeny_mass, progeny_survival};
use crate::error::{Error, Result};
use crate::numerics::AlphaParam;
use crate::simulate::forest::{grow_forest_with, sample_kn, Attachment, TransitionAudit};
use crate::simulate::rng::{RngStream, SimRng};
use crate::simulate::sibuya::{
    sample_sibuya, sample_sibuya_sequential, BgwSampler, Progeny, SibuyaSampler,
};
use crate::simulate::stats::{chi_square_gof, ChiSquareReport};

/// Trials per independent stream.
pub const CHUNK: u64 = 4096;

/// Runs `f` once per chunk with that chunk's generator and length; results
/// come back in chunk order.
pub fn map_chunks<T, F>(stream: &RngStream, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng, u64) -> T + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|i| {
            let len = CHUNK.min(trials - i * CHUNK);
            f(&mut stream.split(i).rng(), len)
        })
        .collect()
}

/// Runs `f` once per trial and returns the results in trial order.
pub fn run_trials<T, F>(stream: &RngStream, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng) -> T + Sync,
{
    map_chunks(stream, trials, |rng, len| {
        (0..len).map(|_| f(rng)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

fn check_trials(trials: u64, min: u64) -> Result<()> {
    if trials < min {
        return Err(Error::invalid(format!(
            "need at least {min} trials, got {trials}"
        )));
    }
    Ok(())
}

/// Sample mean and its standard error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One empirical moment next to its target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub q: u32,
    pub estimate: f64,
    pub std_error: f64,
    /// Mittag-Leffler moment of the limit.
    pub limit: f64,
}

/// Moments of `K_n / n^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub alpha: AlphaParam,
    pub n: usize,
    pub trials: u64,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub limit_mean: f64,
    pub limit_variance: f64,
    /// Exact `E K_n / n^α` at this `n`.
    pub finite_n_mean: f64,
    pub moments: Vec<MomentEstimate>,
}

impl MomentReport {
    /// Relative distance of the empirical mean from the limit mean.
    pub fn relative_error(&self) -> f64 {
        (self.mean / self.limit_mean - 1.0).abs()
    }
}

/// Empirical moments of `K_n/n^α` from the forest-count chain, next to the
/// Mittag-Leffler moments of the limit.
pub fn estimate_kn_limit(
    alpha: &AlphaParam,
    n: usize,
    trials: u64,
    stream: &RngStream,
) -> Result<MomentReport> {
    check_trials(trials, 2)?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let scale = (n as f64).powf(alpha.value());
    let draws = run_trials(stream, trials, |rng| {
        sample_kn(alpha, n, rng).expect("n ≥ 1") as f64 / scale
    });
    let t = trials as f64;
    let (mean, mean_err) = mean_se(&draws);
    let m2 = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / t;
    let m4 = draws.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / t;
    let variance = m2 * t / (t - 1.0);
    let variance_se = ((m4 - m2 * m2) / t).max(0.0).sqrt();
    let mut moments = Vec::new();
    for q in 0..=2u32 {
        let powered: Vec<f64> = draws.iter().map(|x| x.powi(q as i32)).collect();
        let (estimate, std_error) = mean_se(&powered);
        moments.push(MomentEstimate {
            q,
            estimate,
            std_error,
            limit: ml_moment_one_parameter(alpha, q as f64)?,
        });
    }
    let limit_mean = moments[1].limit;
    Ok(MomentReport {
        alpha: alpha.clone(),
        n,
        trials,
        mean,
        mean_se: mean_err,
        variance,
        variance_se,
        limit_mean,
        limit_variance: moments[2].limit - limit_mean * limit_mean,
        finite_n_mean: kn_mean::<f64>(alpha, n)? / scale,
        moments,
    })
}

/// Laplace transform of `k^{−1/α} N(k)` at one `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub lambda: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// `exp(−λ^α)`.
    pub limit: f64,
    /// Exact value at this `k`: `(1 − (1 − e^{−λ k^{−1/α}})^α)^k`.
    pub finite_k: f64,
}

impl LaplaceEstimate {
    pub fn relative_error(&self) -> f64 {
        (self.estimate / self.limit - 1.0).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceReport {
    pub alpha: AlphaParam,
    pub k: usize,
    pub trials: u64,
    pub entries: Vec<LaplaceEstimate>,
}

/// Empirical `E exp(−λ k^{−1/α} N(k))` with `N(k)` a sum of `k` Sibuya
/// draws. The same draws are reused for every `λ`.
pub fn estimate_stable_limit(
    alpha: &AlphaParam,
    k: usize,
    trials: u64,
    lambdas: &[f64],
    stream: &RngStream,
) -> Result<LaplaceReport> {
    check_trials(trials, 2)?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(Error::domain(format!(
            "λ must be a finite nonnegative number, got {l}"
        )));
    }
    let a = alpha.value();
    let scale = (k as f64).powf(-1.0 / a);
    let sampler = SibuyaSampler::new(alpha);
    let sums = run_trials(stream, trials, |rng| {
        (0..k).map(|_| sampler.sample(rng) as f64).sum::<f64>() * scale
    });
    let entries = lambdas
        .iter()
        .map(|&lambda| {
            let values: Vec<f64> = sums.iter().map(|x| (-lambda * x).exp()).collect();
            let (estimate, std_error) = mean_se(&values);
            let tail = (-(-lambda * scale).exp_m1()).powf(a);
            LaplaceEstimate {
                lambda,
                estimate,
                std_error,
                limit: (-lambda.powf(a)).exp(),
                finite_k: (k as f64 * (-tail).ln_1p()).exp(),
            }
        })
        .collect();
    Ok(LaplaceReport {
        alpha: alpha.clone(),
        k,
        trials,
        entries,
    })
}

/// Histogram bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub value: u64,
    pub count: u64,
}

/// Leaf counts of grown increasing forests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSummary {
    pub alpha: AlphaParam,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub stream: u64,
    pub mean: f64,
    pub variance: f64,
    pub histogram: Vec<Bin>,
}

/// Mean, variance and histogram of the number of leaves in forests grown to
/// `n` atoms. Bookkeeping is checked on every draw.
pub fn leaf_statistics(
    alpha: &AlphaParam,
    n: usize,
    trials: u64,
    stream: &RngStream,
) -> Result<LeafSummary> {
    check_trials(trials, 2)?;
    let leaves = run_trials(stream, trials, |rng| {
        let f = grow_forest_with(alpha, n, Attachment::NodeWeighted, rng, None)?;
        f.check()?;
        let roles = f.k() + f.total_internal() + f.total_leaves();
        if roles != n {
            return Err(Error::Domain(format!("roles add to {roles}, not {n}")));
        }
        Ok(f.total_leaves() as u64)
    })
    .into_iter()
    .collect::<Result<Vec<u64>>>()?;
    let xs: Vec<f64> = leaves.iter().map(|&v| v as f64).collect();
    let t = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / t;
    let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0);
    let mut hist = BTreeMap::new();
    for v in leaves {
        *hist.entry(v).or_insert(0u64) += 1;
    }
    Ok(LeafSummary {
        alpha: alpha.clone(),
        n,
        trials,
        seed: stream.seed,
        stream: stream.stream,
        mean,
        variance,
        histogram: hist
            .into_iter()
            .map(|(value, count)| Bin { value, count })
            .collect(),
    })
}

/// Which sampler produces progeny values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgenySampler {
    /// Beta-mixed geometric.
    Mixture,
    /// Tabulated cdf with an exact tail.
    Table,
    /// Bernoulli trials with success probability α/j.
    Sequential,
    /// Galton–Watson tree with offspring pgf φ.
    Bgw,
}

/// Progeny histogram on `1..=bins` plus a tail cell, tested against the
/// exact law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgenyRun {
    pub alpha: AlphaParam,
    pub sampler: ProgenySampler,
    pub trials: u64,
    pub bins: usize,
    /// Counts of the values `1..=bins`, then of everything above.
    pub counts: Vec<u64>,
    /// Exact probabilities of the same cells.
    pub expected: Vec<f64>,
    /// Draws that hit the population cap (counted in the tail cell).
    pub overflow: u64,
    /// Galton–Watson draws the offspring table could not resolve (counted in
    /// the tail cell).
    pub unresolved: u64,
    pub chi_square: ChiSquareReport,
}

impl ProgenyRun {
    pub fn overflow_fraction(&self) -> f64 {
        self.overflow as f64 / self.trials as f64
    }
}

/// Draws `trials` progeny values with `sampler` and compares them with the
/// exact law on `1..=bins`. `cap` bounds the sequential walk and the tree
/// population.
pub fn progeny_run(
    alpha: &AlphaParam,
    sampler: ProgenySampler,
    trials: u64,
    bins: usize,
    cap: u64,
    stream: &RngStream,
) -> Result<ProgenyRun> {
    check_trials(trials, 1)?;
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    if cap < bins as u64 {
        return Err(Error::invalid(format!(
            "cap {cap} is below the histogram range {bins}"
        )));
    }
    let table = SibuyaSampler::new(alpha);
    let bgw = match sampler {
        ProgenySampler::Bgw => Some(BgwSampler::new(alpha, cap)?),
        _ => None,
    };
    let cell = |v: u64| (v.min(bins as u64 + 1) - 1) as usize;
    let tallies = map_chunks(stream, trials, |rng, len| {
        let mut counts = vec![0u64; bins + 1];
        let (mut overflow, mut unresolved) = (0u64, 0u64);
        for _ in 0..len {
            let v = match sampler {
                ProgenySampler::Mixture => Progeny::Size(sample_sibuya(alpha, rng)),
                ProgenySampler::Table => Progeny::Size(table.sample(rng)),
                ProgenySampler::Sequential => sample_sibuya_sequential(alpha, rng, cap)
                    .map_or(Progeny::Overflow, Progeny::Size),
                ProgenySampler::Bgw => bgw.as_ref().expect("built above").sample(rng),
            };
            match v {
                Progeny::Size(v) => counts[cell(v)] += 1,
                Progeny::Overflow => {
                    overflow += 1;
                    counts[bins] += 1;
                }
                Progeny::Unresolved => {
                    unresolved += 1;
                    counts[bins] += 1;
                }
            }
        }
        (counts, overflow, unresolved)
    });
    let mut counts = vec![0u64; bins + 1];
    let (mut overflow, mut unresolved) = (0, 0);
    for (c, o, u) in tallies {
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        overflow += o;
        unresolved += u;
    }
    let mut expected: Vec<f64> = (1..=bins).map(|v| progeny_mass::<f64>(alpha, v)).collect();
    expected.push(progeny_survival::<f64>(alpha, bins));
    let chi_square = chi_square_gof(&counts, &expected)?;
    Ok(ProgenyRun {
        alpha: alpha.clone(),
        sampler,
        trials,
        bins,
        counts,
        expected,
        overflow,
        unresolved,
        chi_square,
    })
}

/// Law of the number of trees, from grown forests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestRun {
    pub alpha: AlphaParam,
    pub n: usize,
    pub trials: u64,
    pub attachment: Attachment,
    /// `counts[k−1]` forests had `k` trees.
    pub counts: Vec<u64>,
    pub expected: Vec<f64>,
    pub chi_square: ChiSquareReport,
    /// Largest standardized deviation of a single cell.
    pub max_abs_z: f64,
    /// Largest deviation of a new-tree frequency from `(k+1)α/(α+n)`.
    pub max_audit_z: f64,
}

/// Grows `trials` forests to `n` atoms and compares the tree count with
/// the exact law of `K_n`, auditing every transition on the way.
pub fn forest_run(
    alpha: &AlphaParam,
    n: usize,
    trials: u64,
    attachment: Attachment,
    stream: &RngStream,
) -> Result<ForestRun> {
    check_trials(trials, 1)?;
    if n < 2 {
        return Err(Error::invalid("n must be at least 2 for a nontrivial law"));
    }
    let parts = map_chunks(stream, trials, |rng, len| {
        let mut counts = vec![0u64; n];
        let mut audit = TransitionAudit::default();
        for _ in 0..len {
            let f = grow_forest_with(alpha, n, attachment, rng, Some(&mut audit)).expect("n ≥ 2");
            counts[f.k() - 1] += 1;
        }
        (counts, audit)
    });
    let mut counts = vec![0u64; n];
    let mut audit = TransitionAudit::default();
    for (c, a) in parts {
        counts.iter_mut().zip(c).for_each(|(x, y)| *x += y);
        audit.merge(&a);
    }
    let expected = kn_pmf::<f64>(alpha, n)?.masses().to_vec();
    let chi_square = chi_square_gof(&counts, &expected)?;
    let z = |c: u64, t: u64, p: f64| crate::simulate::stats::binomial_z(c, t, p).abs();
    let max_abs_z = counts
        .iter()
        .zip(&expected)
        .map(|(c, p)| z(*c, trials, *p))
        .fold(0.0, f64::max);
    let a = alpha.value();
    let max_audit_z = audit
        .counts
        .iter()
        .map(|(&(n, k), &(visits, roots))| z(roots, visits, (k as f64 + 1.0) * a / (a + n as f64)))
        .fold(0.0, f64::max);
    Ok(ForestRun {
        alpha: alpha.clone(),
        n,
        trials,
        attachment,
        counts,
        expected,
        chi_square,
        max_abs_z,
        max_audit_z,
    })
}
