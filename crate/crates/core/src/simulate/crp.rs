//! Two-parameter Chinese restaurant process.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::AlphaParam;

/// Seating after `n` customers and the occupied-table count after each
/// arrival.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrpTrajectory {
    /// `occupied[i]` is `S_{i+1}`.
    pub occupied: Vec<usize>,
    /// Table sizes in order of opening.
    pub tables: Vec<usize>,
}

impl CrpTrajectory {
    pub fn n(&self) -> usize {
        self.occupied.len()
    }

    pub fn final_tables(&self) -> usize {
        self.tables.len()
    }
}

/// Seats `n` customers: customer `m+1` opens a new table with probability
/// `(θ + kα)/(θ + m)` and otherwise joins table `l` with probability
/// proportional to `n_l − α`.
pub fn crp_chain<R: Rng + ?Sized>(
    alpha: &AlphaParam,
    theta: f64,
    n: usize,
    rng: &mut R,
) -> Result<CrpTrajectory> {
    let a = alpha.value();
    if !(theta > -a) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must exceed −α, got {theta}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let mut tables = vec![1usize];
    // Table of each seated customer, for size-biased picks.
    let mut seat = vec![0u32];
    let mut occupied = Vec::with_capacity(n);
    occupied.push(1);
    for m in 1..n {
        let k = tables.len() as f64;
        if rng.random::<f64>() * (theta + m as f64) < theta + k * a {
            seat.push(tables.len() as u32);
            tables.push(1);
        } else {
            // Size-biased table, kept with probability (n_l − α)/n_l.
            let l = loop {
                let l = seat[rng.random_range(0..m)] as usize;
                let size = tables[l] as f64;
                if rng.random::<f64>() * size < size - a {
                    break l;
                }
            };
            seat.push(l as u32);
            tables[l] += 1;
        }
        occupied.push(tables.len());
    }
    Ok(CrpTrajectory { occupied, tables })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{crp_sn_pmf, marginal_pmf, Label};
    use crate::simulate::rng::RngStream;
    use crate::simulate::stats::{binomial_z, chi_square_gof};
    use num_traits::ToPrimitive;

    fn a(p: u64, q: u64) -> AlphaParam {
        AlphaParam::new(p, q).unwrap()
    }

    #[test]
    fn one_customer() {
        let t = crp_chain(&a(1, 2), 0.5, 1, &mut RngStream::new(0, 0).rng()).unwrap();
        assert_eq!(t.occupied, vec![1]);
        assert!(crp_chain(&a(1, 2), -0.5, 3, &mut RngStream::new(0, 0).rng()).is_err());
    }

    #[test]
    fn low_order_probabilities() {
        let alpha = a(1, 2);
        let mut rng = RngStream::new(21, 0).rng();
        let runs = 100_000;
        let three = (0..runs)
            .filter(|_| crp_chain(&alpha, 0.5, 3, &mut rng).unwrap().final_tables() == 3)
            .count() as u64;
        assert!(binomial_z(three, runs, 0.4).abs() < 4.0);
        let two = (0..runs)
            .filter(|_| crp_chain(&alpha, 1.0, 2, &mut rng).unwrap().final_tables() == 2)
            .count() as u64;
        assert!(binomial_z(two, runs, 0.75).abs() < 4.0);
    }

    #[test]
    fn table_counts_match_exact_law() {
        let alpha = a(1, 3);
        let mut rng = RngStream::new(22, 0).rng();
        for theta in [-0.2, 0.0, 1.0 / 3.0, 2.5] {
            let law = crp_sn_pmf::<f64>(&alpha, &theta, 7).unwrap();
            let mut counts = vec![0u64; 7];
            for _ in 0..50_000 {
                counts[crp_chain(&alpha, theta, 7, &mut rng)
                    .unwrap()
                    .final_tables()
                    - 1] += 1;
            }
            assert!(
                chi_square_gof(&counts, law.masses()).unwrap().p_value > 1e-3,
                "θ={theta}"
            );
        }
    }

    #[test]
    fn table_sizes_match_occupancy_marginal() {
        let alpha = a(1, 2);
        let exact = marginal_pmf(&alpha, 4, 2).unwrap();
        let probs: Vec<f64> = (1..=3u64)
            .map(|v| exact.mass_of(&Label::Value(v)).unwrap().to_f64().unwrap())
            .collect();
        let mut rng = RngStream::new(23, 0).rng();
        let mut counts = vec![0u64; 3];
        while counts.iter().sum::<u64>() < 20_000 {
            let t = crp_chain(&alpha, 0.5, 4, &mut rng).unwrap();
            if t.final_tables() == 2 {
                counts[t.tables[rng.random_range(0..2)] - 1] += 1;
            }
        }
        assert!(chi_square_gof(&counts, &probs).unwrap().p_value > 1e-3);
    }
}
