//! Shared parameter grids for the benchmarks.

use sibuya_core::AlphaParam;

/// Tail parameters every benchmark is run at.
pub fn alphas() -> Vec<AlphaParam> {
    [(1, 3), (1, 2), (4, 5)]
        .iter()
        .map(|&(p, q)| AlphaParam::new(p, q).expect("inside (0, 1)"))
        .collect()
}

/// Triangle and law sizes for the exact routines.
pub const EXACT_SIZES: [usize; 3] = [10, 20, 40];

/// Forest sizes for the growth benchmarks.
pub const FOREST_SIZES: [usize; 3] = [100, 1_000, 10_000];
