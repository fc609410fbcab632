//! Thermodynamic limit of Sibuya forests (saddle point, limiting law, free
//! energy, rate function) and the rescaled families `Φ̃(z) = c₁^{−1}Φ(c₁c₂z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ln_exact, AlphaParam, Exact};
use crate::ode;
use crate::series::sibuya_pgf_series;

/// Root bracket offset from the endpoints of (0, 1).
const BRACKET_EPS: f64 = 1e-15;
/// Bisection stops once the bracket is this narrow.
const BISECTION_WIDTH: f64 = 1e-10;
const MAX_NEWTON_STEPS: usize = 5;
/// Largest n accepted by [`free_energy_oracle`].
pub const FREE_ENERGY_MAX_N: usize = 200;
/// Tolerance of the increasing-family ODE solve.
pub const ODE_TOL: f64 = 1e-10;

fn check_unit_open(name: &str, z: f64) -> Result<()> {
    if z > 0.0 && z < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1), got {z}")))
    }
}

/// `Φ(z) = 1 − (1−z)^α` for `z ∈ [0, 1]`.
pub fn sibuya_pgf(alpha: &AlphaParam, z: f64) -> f64 {
    -(alpha.value() * (-z).ln_1p()).exp_m1()
}

/// `Φ(1−w) = 1 − w^α`, accurate for small `w`.
fn pgf_complement(alpha: f64, w: f64) -> f64 {
    -(alpha * w.ln()).exp_m1()
}

/// Offspring pgf `φ(y) = y / (1 − (1−y)^{1/α})` for `y ∈ [0, 1]`.
pub fn offspring_pgf(alpha: &AlphaParam, y: f64) -> f64 {
    if y == 0.0 {
        return alpha.value();
    }
    let p = -((-y).ln_1p() / alpha.value()).exp_m1();
    y / p
}

/// `φ′(y)` for `y ∈ (0, 1)`.
pub fn offspring_derivative(alpha: &AlphaParam, y: f64) -> f64 {
    let r = 1.0 / alpha.value();
    let l = (-y).ln_1p();
    let p = -(r * l).exp_m1();
    let dp = r * ((r - 1.0) * l).exp();
    (p - y * dp) / (p * p)
}

/// Mean of the tilted law, `Ψ(z) = zΦ′(z)/Φ(z) = αz(1−z)^{α−1}/(1−(1−z)^α)`.
pub fn psi(alpha: &AlphaParam, z: f64) -> Result<f64> {
    check_unit_open("z", z)?;
    let a = alpha.value();
    let l = (-z).ln_1p();
    Ok(a * z * ((a - 1.0) * l).exp() / -(a * l).exp_m1())
}

/// `Ψ(1−w)`, for `w ∈ (0, 1)`.
pub fn psi_complement(alpha: &AlphaParam, w: f64) -> Result<f64> {
    check_unit_open("w", w)?;
    let a = alpha.value();
    Ok(a * (1.0 - w) * ((a - 1.0) * w.ln()).exp() / pgf_complement(a, w))
}

/// `Ψ′(z) = Ψ(z)(1/z + (1−α)/(1−z) − Ψ(z)/z)`.
pub fn psi_derivative(alpha: &AlphaParam, z: f64) -> Result<f64> {
    let p = psi(alpha, z)?;
    let a = alpha.value();
    Ok(p * ((1.0 - p) / z + (1.0 - a) / (1.0 - z)))
}

/// Saddle point of the thermodynamic limit at mean tree size ρ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoSolution {
    pub alpha: AlphaParam,
    pub rho: f64,
    pub z_rho: f64,
    /// `1 − z_ρ`, kept separately because it can be far below `f64::EPSILON`
    /// relative to `z_ρ`.
    pub w_rho: f64,
    pub phi_at_z_rho: f64,
    /// `ρ log z_ρ − log Φ(z_ρ)`.
    pub free_energy: f64,
    /// `|Ψ(z_ρ) − ρ|`.
    pub residual: f64,
}

#[derive(Clone, Copy)]
enum Var {
    /// Solve in `z`; `Ψ` increasing.
    Z,
    /// Solve in `w = 1 − z`; `Ψ` decreasing in `w`.
    W,
}

/// Solves `Ψ(z_ρ) = ρ` for `ρ > 1`: bisection on a bracket inside (0, 1),
/// then up to five Newton steps.
pub fn solve_z_rho(alpha: &AlphaParam, rho: f64) -> Result<ThermoSolution> {
    if !(rho > 1.0) || !rho.is_finite() {
        return Err(Error::domain(format!(
            "rho must be a finite value > 1, got {rho}"
        )));
    }
    let var = if psi(alpha, 0.5)? >= rho {
        Var::Z
    } else {
        Var::W
    };
    // g(x) = Ψ(point(x)) − ρ, increasing in x on [lo, hi].
    let g = |x: f64| -> f64 {
        match var {
            Var::Z => psi(alpha, x).expect("inside (0, 1)") - rho,
            Var::W => rho - psi_complement(alpha, x).expect("inside (0, 1)"),
        }
    };
    let (mut lo, mut hi) = (BRACKET_EPS, 0.5);
    if g(lo) > 0.0 {
        // ρ is below the resolvable range next to the endpoint.
        hi = lo;
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let mut best = g(x).abs();
    for _ in 0..MAX_NEWTON_STEPS {
        let z = match var {
            Var::Z => x,
            Var::W => 1.0 - x,
        };
        let d = psi_derivative(alpha, z)?;
        let step = g(x) / d;
        let cand = x - step;
        if !(cand > 0.0 && cand < 1.0) {
            break;
        }
        let r = g(cand).abs();
        if r < best {
            best = r;
            x = cand;
        }
        if r == 0.0 || step.abs() <= f64::EPSILON * x {
            break;
        }
    }
    let (z_rho, w_rho) = match var {
        Var::Z => (x, 1.0 - x),
        Var::W => (1.0 - x, x),
    };
    let ln_z = match var {
        Var::Z => x.ln(),
        Var::W => (-x).ln_1p(),
    };
    let phi = match var {
        Var::Z => sibuya_pgf(alpha, x),
        Var::W => pgf_complement(alpha.value(), x),
    };
    Ok(ThermoSolution {
        alpha: alpha.clone(),
        rho,
        z_rho,
        w_rho,
        phi_at_z_rho: phi,
        free_energy: rho * ln_z - phi.ln(),
        residual: best,
    })
}

impl ThermoSolution {
    fn ln_z(&self) -> f64 {
        if self.w_rho < 0.5 {
            (-self.w_rho).ln_1p()
        } else {
            self.z_rho.ln()
        }
    }

    /// Limiting pgf `Φ_ρ(z) = Φ(z z_ρ)/Φ(z_ρ)` for `z ∈ [0, 1]`.
    pub fn phi_rho(&self, z: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::domain(format!("z must lie in [0, 1], got {z}")));
        }
        if z == 1.0 {
            return Ok(1.0);
        }
        Ok(sibuya_pgf(&self.alpha, z * self.z_rho) / self.phi_at_z_rho)
    }

    /// Slope `φ_ρ′(1) = z_ρ φ′(Φ(z_ρ))` of the induced branching mechanism
    /// `φ_ρ(y) = z_ρ φ(Φ(z_ρ) y)/Φ(z_ρ)`.
    pub fn induced_branching_slope(&self) -> f64 {
        self.z_rho * offspring_derivative(&self.alpha, self.phi_at_z_rho)
    }

    /// First coefficients `[z^n]Φ_ρ = z_ρ^n [z^n]Φ / Φ(z_ρ)`, `n = 0..=order`.
    pub fn limiting_law_coefficients(&self, order: usize) -> Vec<f64> {
        let phi = sibuya_pgf_series::<f64>(&self.alpha, order);
        let ln_z = self.ln_z();
        phi.coeffs()
            .iter()
            .enumerate()
            .map(|(n, c)| c * (n as f64 * ln_z).exp() / self.phi_at_z_rho)
            .collect()
    }

    /// Variance `z_ρ Ψ′(z_ρ)` of the limiting law.
    pub fn variance(&self) -> Result<f64> {
        Ok(self.z_rho * psi_derivative(&self.alpha, self.z_rho)?)
    }

    /// Gaussian local-limit term `log(2πkσ²)/(2k)` by which
    /// `−(1/k)log[z^{ρk}]Φ^k` exceeds the free energy at finite k.
    pub fn finite_k_correction(&self, k: usize) -> Result<f64> {
        let k = k as f64;
        Ok((2.0 * std::f64::consts::PI * k * self.variance()?).ln() / (2.0 * k))
    }
}

/// `Φ_ρ(z)` for a fresh solve.
pub fn phi_rho(alpha: &AlphaParam, rho: f64, z: f64) -> Result<f64> {
    solve_z_rho(alpha, rho)?.phi_rho(z)
}

/// `r log Z_r − log Φ(Z_r)` where `Ψ(Z_r) = r`, evaluated at a supplied `r`
/// for a given saddle point.
fn legendre_term(sol: &ThermoSolution, r: f64) -> f64 {
    r * sol.ln_z() - sol.phi_at_z_rho.ln()
}

/// Cramér rate function of the mean tree size under the limiting law,
/// `f_ρ(r) = sup_s {rs − log Φ_ρ(e^s)}`, for `ρ, r > 1`.
///
/// The supremum sits at `e^s = Z_r/z_ρ`, so
/// `f_ρ(r) = [r log Z_r − log Φ(Z_r)] − [r log z_ρ − log Φ(z_ρ)]`.
pub fn rate_function(alpha: &AlphaParam, rho: f64, r: f64) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::domain(format!("r must exceed 1, got {r}")));
    }
    let at_rho = solve_z_rho(alpha, rho)?;
    let at_r = solve_z_rho(alpha, r)?;
    Ok(legendre_term(&at_r, r) - legendre_term(&at_rho, r))
}

/// Finite-size free energy `−(1/k) log [z^n]Φ^k` from exact coefficients,
/// `1 ≤ k ≤ n ≤ 200`.
pub fn free_energy_oracle(alpha: &AlphaParam, n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ n, got n={n}, k={k}")));
    }
    if n > FREE_ENERGY_MAX_N {
        return Err(Error::SizeGuard {
            what: "n",
            value: n,
            limit: FREE_ENERGY_MAX_N,
        });
    }
    let coeff: Exact = sibuya_pgf_series::<Exact>(alpha, n).pow(k as u32).coeffs()[n].clone();
    Ok(-ln_exact(&coeff)? / k as f64)
}

/// Whether a rescaled family is built on simply generated or increasing
/// trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SimplyGenerated,
    Increasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Critical,
    SubcriticalRegular,
    SupercriticalDefective,
}

/// Rescaled Sibuya family `Φ̃(z) = c₁^{−1}Φ(c₁c₂z)` and its branching
/// mechanism `φ̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledFamily {
    pub alpha: AlphaParam,
    pub c1: f64,
    pub c2: f64,
    pub kind: Kind,
    pub classification: Classification,
    /// Smallest fixed point of `φ̃` in (0, 1] for simply generated trees;
    /// `c₁` or 1 for increasing trees.
    pub extinction_prob: f64,
    /// `φ̃(1) = 1`?
    pub offspring_regular: bool,
    pub offspring_at_one: f64,
    pub offspring_slope_at_one: f64,
    /// `Φ̃(1)`.
    pub progeny_at_one: f64,
    /// `|φ̃(ρ_e) − ρ_e|` for supercritical-defective simply generated
    /// families.
    pub fixed_point_residual: Option<f64>,
}

/// Relative tolerance for recognizing the regular boundary `c₂ = c₂*`.
const BOUNDARY_TOL: f64 = 1e-12;

/// `c₂* = c₁^{−1}(1 − (1−c₁)^{1/α})`, where `φ̃(1) = 1`.
pub fn regular_boundary_c2(alpha: &AlphaParam, c1: f64) -> f64 {
    -((-c1).ln_1p() / alpha.value()).exp_m1() / c1
}

/// Rescaled offspring pgf `φ̃(y) = c₂ φ(c₁ y)`.
pub fn rescaled_offspring(alpha: &AlphaParam, c1: f64, c2: f64, y: f64) -> f64 {
    c2 * offspring_pgf(alpha, c1 * y)
}

/// Classifies `Φ̃(z) = c₁^{−1}Φ(c₁c₂z)` over simply generated trees.
pub fn classify_rescaled(alpha: &AlphaParam, c1: f64, c2: f64) -> Result<RescaledFamily> {
    if !(c1 > 0.0 && c1 <= 1.0) {
        return Err(Error::domain(format!("c1 must lie in (0, 1], got {c1}")));
    }
    if !(c2 > 0.0) || !(c1 * c2 <= 1.0) {
        return Err(Error::domain(format!(
            "need c2 > 0 and c1·c2 ≤ 1, got c1={c1}, c2={c2}"
        )));
    }
    let boundary = regular_boundary_c2(alpha, c1);
    if c2 > boundary * (1.0 + BOUNDARY_TOL) {
        return Err(Error::domain(format!(
            "c2={c2} exceeds the regular boundary {boundary}; φ̃(1) > 1 is not a pgf"
        )));
    }
    let a = alpha.value();
    let progeny_at_one = sibuya_pgf(alpha, c1 * c2) / c1;
    let offspring_at_one = rescaled_offspring(alpha, c1, c2, 1.0);
    let slope = if c1 < 1.0 {
        c2 * c1 * offspring_derivative(alpha, c1)
    } else {
        // φ′(1) = 1 for the unscaled critical mechanism.
        c2
    };
    let on_boundary = (c2 - boundary).abs() <= BOUNDARY_TOL * boundary;
    let family = |classification, extinction_prob, residual| RescaledFamily {
        alpha: alpha.clone(),
        c1,
        c2,
        kind: Kind::SimplyGenerated,
        classification,
        extinction_prob,
        offspring_regular: on_boundary,
        offspring_at_one,
        offspring_slope_at_one: slope,
        progeny_at_one,
        fixed_point_residual: residual,
    };
    if on_boundary {
        let class = if c1 == 1.0 {
            Classification::Critical
        } else {
            Classification::SubcriticalRegular
        };
        let mut f = family(class, 1.0, None);
        if c1 < 1.0 {
            f.offspring_slope_at_one = 1.0
                - (c1 / a) * ((1.0 / a - 1.0) * (-c1).ln_1p()).exp()
                    / -((-c1).ln_1p() / a).exp_m1();
        } else {
            f.offspring_slope_at_one = 1.0;
        }
        return Ok(f);
    }
    let rho_e = progeny_at_one;
    let residual = (rescaled_offspring(alpha, c1, c2, rho_e) - rho_e).abs();
    Ok(family(
        Classification::SupercriticalDefective,
        rho_e,
        Some(residual),
    ))
}

/// Increasing-tree rescaling with `c₂ = α^{−1}(1−c₁)^θ`, which makes
/// `φ̃(z) = αc₂(1−c₁z)^{−θ}` a regular pgf; `Φ̃(1)` comes from integrating
/// `Φ̃′ = φ̃(Φ̃)`, `Φ̃(0) = 0` over [0, 1].
pub fn classify_increasing_rescaled(alpha: &AlphaParam, c1: f64) -> Result<RescaledFamily> {
    if !(c1 > 0.0 && c1 < 1.0) {
        return Err(Error::domain(format!("c1 must lie in (0, 1), got {c1}")));
    }
    let a = alpha.value();
    let theta = (1.0 - a) / a;
    let c2 = increasing_boundary_c2(alpha, c1);
    let gen = |y: f64| a * c2 * (-theta * (-c1 * y).ln_1p()).exp();
    let offspring_at_one = gen(1.0);
    let field = |_t: f64, y: f64| -> Result<f64> {
        if !(c1 * y < 1.0) {
            return Err(Error::Integration(format!(
                "Φ̃ reached the singularity 1/c1 = {}",
                1.0 / c1
            )));
        }
        Ok(gen(y))
    };
    let progeny_at_one = ode::integrate(field, 0.0, 0.0, 1.0, ODE_TOL)?;
    let slope = a * c2 * theta * c1 * (-(theta + 1.0) * (-c1).ln_1p()).exp();
    let (classification, extinction_prob) = if progeny_at_one < 1.0 {
        (Classification::SupercriticalDefective, c1)
    } else {
        (Classification::SubcriticalRegular, 1.0)
    };
    Ok(RescaledFamily {
        alpha: alpha.clone(),
        c1,
        c2,
        kind: Kind::Increasing,
        classification,
        extinction_prob,
        offspring_regular: (offspring_at_one - 1.0).abs() <= 1e-12,
        offspring_at_one,
        offspring_slope_at_one: slope,
        progeny_at_one,
        fixed_point_residual: None,
    })
}

/// `c₂ = α^{−1}(1−c₁)^{(1−α)/α}`.
pub fn increasing_boundary_c2(alpha: &AlphaParam, c1: f64) -> f64 {
    let a = alpha.value();
    ((1.0 - a) / a * (-c1).ln_1p()).exp() / a
}

/// The family `Φ̃(z) = 1 − λ(1−z)^α`, `λ ∈ (0, 1)`: regular at 1 but with
/// an atom `1 − λ` at zero, so it cannot be the pgf of a tree size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedTailFamily {
    lambda: f64,
}

impl ShiftedTailFamily {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::domain(format!(
                "lambda must lie in (0, 1), got {lambda}"
            )));
        }
        Ok(ShiftedTailFamily { lambda })
    }

    pub fn eval(&self, alpha: &AlphaParam, z: f64) -> f64 {
        1.0 - self.lambda * (alpha.value() * (-z).ln_1p()).exp()
    }

    pub fn at_zero(&self) -> f64 {
        1.0 - self.lambda
    }

    /// A tree has at least its root, so a progeny pgf vanishes at 0.
    pub fn is_progeny_pgf(&self) -> bool {
        self.at_zero() == 0.0
    }
}
