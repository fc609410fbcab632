//! Sequential growth of increasing forests and the forest-count chain.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::AlphaParam;
use crate::simulate::rng::RngStream;

const NO_PARENT: u32 = u32::MAX;

/// How a new atom that does not start a tree picks its parent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attachment {
    /// Node `v` is chosen with weight `α·outdeg(v) + 1 − α`, so tree `l`
    /// receives the atom with probability `(n_l − α)/(n − kα)`.
    #[default]
    NodeWeighted,
    /// Tree `l` receives the atom with probability `n_l/n` (uniform node).
    SizeProportional,
}

/// Increasing forest on atoms `0..n`, labelled in order of arrival.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestState {
    tree: Vec<u32>,
    parent: Vec<u32>,
    outdeg: Vec<u32>,
    /// Atoms that are not roots, in arrival order.
    non_roots: Vec<u32>,
    sizes: Vec<usize>,
    internal: Vec<usize>,
    leaves: Vec<usize>,
}

/// Role counts of one tree. A lone root is neither internal nor a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub roots: usize,
    pub internal: usize,
    pub leaves: usize,
}

impl Default for ForestState {
    fn default() -> Self {
        Self::new()
    }
}

impl ForestState {
    /// One tree made of a single root.
    pub fn new() -> Self {
        ForestState {
            tree: vec![0],
            parent: vec![NO_PARENT],
            outdeg: vec![0],
            non_roots: Vec::new(),
            sizes: vec![1],
            internal: vec![0],
            leaves: vec![0],
        }
    }

    pub fn n(&self) -> usize {
        self.tree.len()
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Tree sizes in order of creation.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Tree containing atom `v`.
    pub fn tree_of(&self, v: usize) -> usize {
        self.tree[v] as usize
    }

    /// Parent of atom `v`, `None` for roots.
    pub fn parent(&self, v: usize) -> Option<usize> {
        (self.parent[v] != NO_PARENT).then_some(self.parent[v] as usize)
    }

    /// Out-degrees of every node, grouped by tree, atoms in arrival order.
    pub fn nodes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (v, &t) in self.tree.iter().enumerate() {
            out[t as usize].push(self.outdeg[v] as usize);
        }
        out
    }

    pub fn roles(&self, tree: usize) -> Roles {
        Roles {
            roots: 1,
            internal: self.internal[tree],
            leaves: self.leaves[tree],
        }
    }

    pub fn total_leaves(&self) -> usize {
        self.leaves.iter().sum()
    }

    pub fn total_internal(&self) -> usize {
        self.internal.iter().sum()
    }

    /// Checks sizes, out-degree sums and role counts against each other.
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if self.sizes.iter().sum::<usize>() != self.n() || self.sizes.contains(&0) {
            return bad(format!(
                "sizes {:?} do not partition {} atoms",
                self.sizes,
                self.n()
            ));
        }
        for (t, degrees) in self.nodes().iter().enumerate() {
            if degrees.iter().sum::<usize>() + 1 != self.sizes[t] {
                return bad(format!("tree {t}: out-degrees do not sum to size − 1"));
            }
            let r = self.roles(t);
            if r.roots + r.internal + r.leaves != self.sizes[t] {
                return bad(format!(
                    "tree {t}: roles {r:?} do not add up to {}",
                    self.sizes[t]
                ));
            }
        }
        Ok(())
    }

    /// Adds atom `n` as the root of a new tree.
    fn add_root(&mut self) {
        self.tree.push(self.sizes.len() as u32);
        self.parent.push(NO_PARENT);
        self.outdeg.push(0);
        self.sizes.push(1);
        self.internal.push(0);
        self.leaves.push(0);
    }

    /// Adds atom `n` as a child of `v`.
    fn attach(&mut self, v: usize) {
        let t = self.tree[v] as usize;
        let id = self.n() as u32;
        if self.parent[v] != NO_PARENT && self.outdeg[v] == 0 {
            self.leaves[t] -= 1;
            self.internal[t] += 1;
        }
        self.outdeg[v] += 1;
        self.tree.push(t as u32);
        self.parent.push(v as u32);
        self.outdeg.push(0);
        self.non_roots.push(id);
        self.sizes[t] += 1;
        self.leaves[t] += 1;
    }

    /// One growth step `n → n+1`; returns whether a new tree was started.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        alpha: f64,
        attachment: Attachment,
        rng: &mut R,
    ) -> bool {
        let n = self.n() as f64;
        let k = self.k() as f64;
        let u: f64 = rng.random::<f64>() * (alpha + n);
        if u < (k + 1.0) * alpha {
            self.add_root();
            return true;
        }
        let v = match attachment {
            Attachment::SizeProportional => rng.random_range(0..self.n()),
            Attachment::NodeWeighted => {
                // Weight α·outdeg(v) is "parent of a uniform non-root";
                // weight 1 − α is "uniform node".
                let edges = self.non_roots.len();
                if rng.random::<f64>() * (n - k * alpha) < alpha * edges as f64 {
                    let child = self.non_roots[rng.random_range(0..edges)];
                    self.parent[child as usize] as usize
                } else {
                    rng.random_range(0..self.n())
                }
            }
        };
        self.attach(v);
        false
    }
}

/// Empirical new-root frequencies per state `(n, k)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionAudit {
    /// `(n, k) → (visits, new roots)`.
    pub counts: BTreeMap<(usize, usize), (u64, u64)>,
}

impl TransitionAudit {
    pub fn record(&mut self, n: usize, k: usize, new_root: bool) {
        let e = self.counts.entry((n, k)).or_default();
        e.0 += 1;
        e.1 += new_root as u64;
    }

    pub fn merge(&mut self, other: &TransitionAudit) {
        for (key, (v, r)) in &other.counts {
            let e = self.counts.entry(*key).or_default();
            e.0 += v;
            e.1 += r;
        }
    }

    pub fn total_steps(&self) -> u64 {
        self.counts.values().map(|c| c.0).sum()
    }
}

fn check_target(n_target: usize) -> Result<()> {
    if n_target == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if n_target > u32::MAX as usize {
        return Err(Error::SizeGuard {
            what: "forest size",
            value: n_target,
            limit: u32::MAX as usize,
        });
    }
    Ok(())
}

/// Grows a forest from one atom to `n_target` atoms.
pub fn grow_forest_with<R: Rng + ?Sized>(
    alpha: &AlphaParam,
    n_target: usize,
    attachment: Attachment,
    rng: &mut R,
    mut audit: Option<&mut TransitionAudit>,
) -> Result<ForestState> {
    check_target(n_target)?;
    let a = alpha.value();
    let mut f = ForestState::new();
    while f.n() < n_target {
        let (n, k) = (f.n(), f.k());
        let new_root = f.step(a, attachment, rng);
        if let Some(audit) = audit.as_deref_mut() {
            audit.record(n, k, new_root);
        }
    }
    Ok(f)
}

/// [`grow_forest_with`] using node-weighted attachment on a fresh stream.
pub fn grow_forest(alpha: &AlphaParam, n_target: usize, stream: &RngStream) -> Result<ForestState> {
    grow_forest_with(
        alpha,
        n_target,
        Attachment::NodeWeighted,
        &mut stream.rng(),
        None,
    )
}

/// Runs only the forest-count chain: from `k` trees on `n` atoms a new tree
/// starts with probability `(k+1)α/(α+n)`. Returns `K_{n_target}`.
pub fn sample_kn<R: Rng + ?Sized>(
    alpha: &AlphaParam,
    n_target: usize,
    rng: &mut R,
) -> Result<usize> {
    if n_target == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let a = alpha.value();
    let mut k = 1usize;
    for n in 1..n_target {
        if rng.random::<f64>() * (a + n as f64) < (k + 1) as f64 * a {
            k += 1;
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{kn_pmf, marginal_pmf, Label};
    use crate::simulate::stats::{binomial_z, chi_square_gof};
    use num_traits::ToPrimitive;

    fn a(p: u64, q: u64) -> AlphaParam {
        AlphaParam::new(p, q).unwrap()
    }

    #[test]
    fn single_atom() {
        let f = grow_forest(&a(1, 2), 1, &RngStream::new(0, 0)).unwrap();
        assert_eq!((f.n(), f.k()), (1, 1));
        assert_eq!(
            f.roles(0),
            Roles {
                roots: 1,
                internal: 0,
                leaves: 0
            }
        );
        assert_eq!(f.total_leaves(), 0);
        assert!(grow_forest(&a(1, 2), 0, &RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn two_atoms_in_one_tree() {
        let mut f = ForestState::new();
        f.attach(0);
        assert_eq!(
            f.roles(0),
            Roles {
                roots: 1,
                internal: 0,
                leaves: 1
            }
        );
        assert_eq!(f.nodes(), vec![vec![1, 0]]);
        f.attach(1);
        assert_eq!(
            f.roles(0),
            Roles {
                roots: 1,
                internal: 1,
                leaves: 1
            }
        );
        f.check().unwrap();
    }

    #[test]
    fn bookkeeping_holds_every_step() {
        for attachment in [Attachment::NodeWeighted, Attachment::SizeProportional] {
            let mut rng = RngStream::new(11, 0).rng();
            let mut f = ForestState::new();
            for _ in 0..300 {
                f.step(0.4, attachment, &mut rng);
                f.check().unwrap();
            }
            assert_eq!(f.n(), 301);
        }
    }

    #[test]
    fn growth_is_deterministic() {
        let s = RngStream::new(42, 3);
        assert_eq!(
            grow_forest(&a(2, 3), 500, &s).unwrap(),
            grow_forest(&a(2, 3), 500, &s).unwrap()
        );
    }

    #[test]
    fn k_matches_exact_law() {
        let alpha = a(1, 2);
        let mut rng = RngStream::new(5, 0).rng();
        let runs = 60_000;
        for n in [2usize, 4, 6] {
            let law = kn_pmf::<f64>(&alpha, n).unwrap();
            let mut counts = vec![0u64; n];
            let mut chain = vec![0u64; n];
            for _ in 0..runs {
                let f =
                    grow_forest_with(&alpha, n, Attachment::NodeWeighted, &mut rng, None).unwrap();
                counts[f.k() - 1] += 1;
                chain[sample_kn(&alpha, n, &mut rng).unwrap() - 1] += 1;
            }
            assert!(
                chi_square_gof(&counts, law.masses()).unwrap().p_value > 1e-3,
                "n={n}"
            );
            assert!(
                chi_square_gof(&chain, law.masses()).unwrap().p_value > 1e-3,
                "n={n}"
            );
        }
    }

    #[test]
    fn tree_sizes_follow_marginal() {
        // n = 4, k = 2 at α = 1/2: a uniformly chosen tree has size law
        // (2/5, 1/5, 2/5). The oldest tree is size-biased instead.
        let alpha = a(1, 2);
        let exact = marginal_pmf(&alpha, 4, 2).unwrap();
        let probs: Vec<f64> = (1..=3u64)
            .map(|v| exact.mass_of(&Label::Value(v)).unwrap().to_f64().unwrap())
            .collect();
        assert_eq!(probs, vec![0.4, 0.2, 0.4]);
        let mut rng = RngStream::new(6, 0).rng();
        let mut counts = [0u64; 3];
        let mut kept = 0;
        while kept < 20_000 {
            let f = grow_forest_with(&alpha, 4, Attachment::NodeWeighted, &mut rng, None).unwrap();
            if f.k() == 2 {
                counts[f.sizes()[rng.random_range(0..2)] - 1] += 1;
                kept += 1;
            }
        }
        for (c, p) in counts.iter().zip(&probs) {
            assert!(binomial_z(*c, kept, *p).abs() < 4.0);
        }
    }

    #[test]
    fn attachment_variants_split_differently() {
        // From sizes (2, 1) at α = 1/2, given no new tree, the lone root gets
        // the atom with probability 1/4 node-weighted and 1/3 size-weighted.
        let alpha = a(1, 2);
        let mut rng = RngStream::new(8, 0).rng();
        for (attachment, p) in [
            (Attachment::NodeWeighted, 0.25),
            (Attachment::SizeProportional, 1.0 / 3.0),
        ] {
            let (mut hits, mut total) = (0u64, 0u64);
            while total < 40_000 {
                let mut f = grow_forest_with(&alpha, 3, attachment, &mut rng, None).unwrap();
                if f.sizes() != [2, 1] || f.step(0.5, attachment, &mut rng) {
                    continue;
                }
                total += 1;
                hits += (f.sizes()[1] == 2) as u64;
            }
            assert!(binomial_z(hits, total, p).abs() < 4.0, "{attachment:?}");
        }
    }

    #[test]
    fn audit_records_transitions() {
        let alpha = a(1, 3);
        let mut audit = TransitionAudit::default();
        let mut rng = RngStream::new(9, 0).rng();
        for _ in 0..20_000 {
            grow_forest_with(
                &alpha,
                5,
                Attachment::NodeWeighted,
                &mut rng,
                Some(&mut audit),
            )
            .unwrap();
        }
        assert_eq!(audit.total_steps(), 80_000);
        for ((n, k), (visits, roots)) in &audit.counts {
            let p = (*k as f64 + 1.0) * alpha.value() / (alpha.value() + *n as f64);
            assert!(binomial_z(*roots, *visits, p).abs() < 4.5, "({n},{k})");
        }
    }
}
