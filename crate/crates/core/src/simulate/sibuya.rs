//! Samplers for the Sibuya law and for Galton–Watson trees whose total
//! progeny is Sibuya.

use std::sync::{Arc, RwLock};

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::AlphaParam;

/// Number of offspring probabilities tabulated up front.
pub const OFFSPRING_TABLE_LEN: usize = 10_000;
/// The offspring table is never extended beyond this many entries.
pub const OFFSPRING_TABLE_MAX: usize = 1 << 16;
/// Default population cap per tree.
pub const DEFAULT_CAP: u64 = 1_000_000;
/// Values below this are drawn from a tabulated cdf by [`SibuyaSampler`].
const SIBUYA_TABLE_LEN: usize = 1024;

fn geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    // Number of trials up to and including the first success.
    let u: f64 = 1.0 - rng.random::<f64>();
    let g = (u.ln() / (-p).ln_1p()).floor();
    if g.is_finite() && g < (u64::MAX - 1) as f64 {
        1 + g as u64
    } else {
        u64::MAX
    }
}

/// One Sibuya draw, `P(N = n) = α[1−α]_{n−1}/n!`.
///
/// Uses the mixture representation: given `W ~ Beta(α, 1−α)`, `N` is
/// geometric on {1, 2, …} with success probability `W`. Values beyond
/// `u64::MAX` saturate.
pub fn sample_sibuya<R: Rng + ?Sized>(alpha: &AlphaParam, rng: &mut R) -> u64 {
    let a = alpha.value();
    let beta = Beta::new(a, 1.0 - a).expect("α ∈ (0, 1)");
    geometric(beta.sample(rng), rng)
}

/// Sibuya draw by sequential Bernoulli trials: trial `j` succeeds with
/// probability `α/j`, and the index of the first success is returned.
///
/// The expected number of trials is infinite, so the walk stops after `cap`
/// trials and returns `None`.
pub fn sample_sibuya_sequential<R: Rng + ?Sized>(
    alpha: &AlphaParam,
    rng: &mut R,
    cap: u64,
) -> Option<u64> {
    let a = alpha.value();
    (1..=cap).find(|&j| rng.random::<f64>() < a / j as f64)
}

/// Faster Sibuya sampler for bulk use: inverse cdf on `1..=1024`, and for
/// the remaining tail `W ~ Beta(α, 1024 + 1 − α)` followed by
/// `N = 1024 + Geometric(W)`, which is the exact conditional law given
/// `N > 1024`.
#[derive(Debug, Clone)]
pub struct SibuyaSampler {
    cdf: Vec<f64>,
    tail: Beta<f64>,
}

impl SibuyaSampler {
    pub fn new(alpha: &AlphaParam) -> Self {
        let a = alpha.value();
        let mut cdf = Vec::with_capacity(SIBUYA_TABLE_LEN);
        let mut p = a;
        let mut acc = 0.0;
        // Track the survival separately so the cdf stays accurate near 1.
        let mut survival = 1.0;
        for n in 1..=SIBUYA_TABLE_LEN {
            acc += p;
            survival *= (n as f64 - a) / n as f64;
            cdf.push(acc.min(1.0 - survival));
            p *= (n as f64 - a) / (n as f64 + 1.0);
        }
        let tail = Beta::new(a, SIBUYA_TABLE_LEN as f64 + 1.0 - a).expect("valid shape");
        SibuyaSampler { cdf, tail }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        if u < *self.cdf.last().expect("nonempty") {
            return self.cdf.partition_point(|&c| c <= u) as u64 + 1;
        }
        let w = self.tail.sample(rng);
        SIBUYA_TABLE_LEN as u64 + geometric(w, rng).min(u64::MAX - SIBUYA_TABLE_LEN as u64)
    }
}

/// Outcome of one Galton–Watson tree simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Progeny {
    Size(u64),
    /// The population exceeded the cap.
    Overflow,
    /// An offspring count fell beyond [`OFFSPRING_TABLE_MAX`] while still
    /// below the remaining budget, so the tree could not be resolved.
    Unresolved,
}

/// Offspring probabilities `[z^n]φ` with `φ(z) = z/(1 − (1−z)^{1/α})`, as
/// an inverse-cdf table grown on demand.
#[derive(Debug)]
struct OffspringTable {
    r: f64,
    /// Coefficients of `(1 − (1−z)^r)/z`.
    denom: Vec<f64>,
    /// Last binomial coefficient `[z^m](1−z)^r` produced, with its index.
    binom_last: (usize, f64),
    cdf: Vec<f64>,
    probs: Vec<f64>,
}

impl OffspringTable {
    fn new(alpha: f64, len: usize) -> Self {
        let r = 1.0 / alpha;
        let mut t = OffspringTable {
            r,
            denom: Vec::new(),
            binom_last: (0, 1.0),
            cdf: Vec::new(),
            probs: Vec::new(),
        };
        t.extend_to(len);
        t
    }

    fn len(&self) -> usize {
        self.probs.len()
    }

    fn extend_to(&mut self, len: usize) {
        while self.denom.len() < len {
            let (m, c) = self.binom_last;
            let next = c * (m as f64 - self.r) / (m as f64 + 1.0);
            self.binom_last = (m + 1, next);
            // [z^j] of (1 − (1−z)^r)/z is −[z^{j+1}](1−z)^r.
            self.denom.push(-next);
        }
        let e0 = self.denom[0];
        for m in self.probs.len()..len {
            let b = if m == 0 {
                1.0 / e0
            } else {
                let s: f64 = (1..=m).map(|j| self.denom[j] * self.probs[m - j]).sum();
                -s / e0
            };
            self.probs.push(b);
            let prev = self.cdf.last().copied().unwrap_or(0.0);
            self.cdf.push(prev + b);
        }
    }

    /// Inverse cdf at `u`, or `None` if the answer is at least `len()`.
    fn lookup(&self, u: f64) -> Option<u64> {
        if u < *self.cdf.last().expect("nonempty") {
            Some(self.cdf.partition_point(|&c| c <= u) as u64)
        } else {
            None
        }
    }
}

/// Galton–Watson sampler with offspring pgf `φ(z) = z/(1 − (1−z)^{1/α})`,
/// a probability law for α ∈ [1/2, 1).
///
/// Clones share the offspring table. Extending the table never changes an
/// inverse-cdf answer that was already resolvable, so results do not depend
/// on which clone triggered an extension.
#[derive(Debug, Clone)]
pub struct BgwSampler {
    table: Arc<RwLock<OffspringTable>>,
    cap: u64,
}

impl BgwSampler {
    pub fn new(alpha: &AlphaParam, cap: u64) -> Result<Self> {
        if alpha.value() < 0.5 {
            return Err(Error::domain(format!(
                "φ is a probability generating function only for α ≥ 1/2, got {alpha}"
            )));
        }
        if cap == 0 {
            return Err(Error::invalid("cap must be positive"));
        }
        let table = OffspringTable::new(alpha.value(), OFFSPRING_TABLE_LEN);
        Ok(BgwSampler {
            table: Arc::new(RwLock::new(table)),
            cap,
        })
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Current number of tabulated offspring probabilities.
    pub fn table_len(&self) -> usize {
        self.table.read().expect("table lock").len()
    }

    /// `[z^n]φ` for `n` below the current table length.
    pub fn offspring_prob(&self, n: usize) -> Option<f64> {
        self.table.read().expect("table lock").probs.get(n).copied()
    }

    /// Offspring count for uniform `u`, or `Err(len)` meaning "at least
    /// `len`" when the table cannot be grown far enough within `budget`.
    fn offspring(&self, u: f64, budget: u64) -> std::result::Result<u64, usize> {
        loop {
            let len = {
                let t = self.table.read().expect("table lock");
                if let Some(x) = t.lookup(u) {
                    return Ok(x);
                }
                t.len()
            };
            if len as u64 > budget || len >= OFFSPRING_TABLE_MAX {
                return Err(len);
            }
            let mut t = self.table.write().expect("table lock");
            if t.len() == len {
                t.extend_to((2 * len).min(OFFSPRING_TABLE_MAX));
            }
        }
    }

    /// Simulates one tree and returns its total progeny.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Progeny {
        let mut total: u64 = 1;
        let mut pending: u64 = 1;
        while pending > 0 {
            pending -= 1;
            let budget = self.cap - total;
            match self.offspring(rng.random(), budget) {
                Ok(x) if x > budget => return Progeny::Overflow,
                Ok(x) => {
                    total += x;
                    pending += x;
                }
                Err(len) if len as u64 > budget => return Progeny::Overflow,
                Err(_) => return Progeny::Unresolved,
            }
        }
        Progeny::Size(total)
    }
}

/// One tree from a freshly built [`BgwSampler`]; prefer reusing a sampler
/// for many draws.
pub fn sample_bgw_progeny<R: Rng + ?Sized>(
    alpha: &AlphaParam,
    rng: &mut R,
    cap: u64,
) -> Result<Progeny> {
    Ok(BgwSampler::new(alpha, cap)?.sample(rng))
}
