//! PEPS bond states whose projection under the site map
//! `A = |0⟩⟨0…0| + |1⟩⟨1…1|` reproduces the thermal state.
//!
//! A bond between sites `a < b` carries two virtual qubits: qubit 0 sits at
//! `a` and qubit 1 at `b`. The bond operator is
//! `¼(I + α_a X⊗Z + γ_a Z⊗I)(I + α_b Z⊗X + γ_b I⊗Z)`; each factor belongs to
//! one endpoint and its parameters are solved for that endpoint's degree, so
//! boundary sites of open graphs are handled exactly.
//!
//! With `t = tanh(β/2)` a site of degree `d` needs
//! `α^d = t cos θ Σ_{even j} C(d,j) γ^j` and
//! `Σ_{odd j} C(d,j) γ^j = t sin θ Σ_{even j} C(d,j) γ^j`, which makes the
//! projected site Bloch vector `t (cos θ, 0, sin θ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ModelParams;
use crate::lattice::LatticeGraph;
use crate::linalg::{DenseOperator, Pauli, PSD_TOL};

/// Largest admissible residual in the bond constraints.
pub const CONSTRAINT_TOL: f64 = 1e-10;
/// Overshoot of `√(α² + γ²)` past 1 that is treated as roundoff.
const BOUNDARY_SLACK: f64 = 1e-8;

/// Parameters of one endpoint's factor of a bond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl BondParams {
    /// Zero field: `α = ω`, `γ = 0`.
    pub fn zero_field(omega: f64) -> Self {
        Self {
            alpha: omega,
            gamma: 0.0,
        }
    }

    /// The factor `I + αX⊗Z + γZ⊗I` has eigenvalues `1 ± √(α² + γ²)`.
    pub fn is_physical(&self) -> bool {
        self.alpha.hypot(self.gamma) <= 1.0 + 1e-12
    }
}

/// `tanh(β/2)^{1/d}`, the zero-field bond strength shared equally by `d` bonds.
pub fn omega_for_temperature(beta: f64, d: usize) -> Result<f64> {
    if !(beta >= 0.0) || d == 0 {
        return Err(Error::OutOfRange(format!("beta = {beta}, d = {d}")));
    }
    Ok((0.5 * beta).tanh().powf(1.0 / d as f64))
}

fn op(a: Pauli, b: Pauli) -> DenseOperator {
    DenseOperator::pauli_string(&[a, b])
}

/// `¼(I + α_a X⊗Z + γ_a Z⊗I)(I + α_b Z⊗X + γ_b I⊗Z)`.
pub fn bond_sided(a: BondParams, b: BondParams) -> DenseOperator {
    let id = DenseOperator::identity(2);
    let first = id
        .add(&op(Pauli::X, Pauli::Z).scale(a.alpha))
        .and_then(|m| m.add(&op(Pauli::Z, Pauli::I).scale(a.gamma)))
        .expect("two-qubit operators");
    let second = id
        .add(&op(Pauli::Z, Pauli::X).scale(b.alpha))
        .and_then(|m| m.add(&op(Pauli::I, Pauli::Z).scale(b.gamma)))
        .expect("two-qubit operators");
    first.mul(&second).expect("two-qubit operators").scale(0.25)
}

/// Symmetric bond with both endpoints sharing `p`. Fails if the result is not PSD.
pub fn bond_general(p: BondParams) -> Result<DenseOperator> {
    let rho = bond_sided(p, p);
    if !p.is_physical() || !rho.is_psd(PSD_TOL)? {
        return Err(Error::InvalidBond(format!(
            "alpha = {}, gamma = {} gives a non-PSD bond",
            p.alpha, p.gamma
        )));
    }
    Ok(rho)
}

/// `¼(I + ω X⊗Z)(I + ω Z⊗X)`.
pub fn bond_zero_field(omega: f64) -> Result<DenseOperator> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::OutOfRange(format!("omega = {omega} outside [0, 1]")));
    }
    Ok(bond_sided(BondParams::zero_field(omega), BondParams::zero_field(omega)))
}

/// Angle `φ` with `tan^d(φ + π/4) = tan(θ/2 + π/4)`.
pub fn zero_temperature_phi(theta: f64, d: usize) -> Result<f64> {
    use std::f64::consts::FRAC_PI_4;
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::OutOfRange(format!(
            "theta = {theta} outside [0, pi/2) for the zero-temperature bond"
        )));
    }
    if d == 0 {
        return Err(Error::OutOfRange("degree must be positive".into()));
    }
    let rhs = (0.5 * theta + FRAC_PI_4).tan();
    Ok(rhs.powf(1.0 / d as f64).atan() - FRAC_PI_4)
}

/// Endpoint parameters of the zero-temperature bond: `α = cos 2φ`, `γ = sin 2φ`.
pub fn zero_temperature_params(theta: f64, d: usize) -> Result<BondParams> {
    let phi = zero_temperature_phi(theta, d)?;
    Ok(BondParams {
        alpha: (2.0 * phi).cos(),
        gamma: (2.0 * phi).sin(),
    })
}

/// The pure zero-temperature bond for a lattice of coordination `d`.
pub fn bond_t0(theta: f64, d: usize) -> Result<DenseOperator> {
    let p = zero_temperature_params(theta, d)?;
    Ok(bond_sided(p, p))
}

/// `(Σ_{even j} C(d,j) γ^j, Σ_{odd j} C(d,j) γ^j)`.
pub fn binomial_parts(gamma: f64, d: usize) -> (f64, f64) {
    let plus = (1.0 + gamma).powi(d as i32);
    let minus = (1.0 - gamma).powi(d as i32);
    (0.5 * (plus + minus), 0.5 * (plus - minus))
}

/// Residuals of the two bond constraints at `(α, γ)`.
pub fn constraint_residuals(p: BondParams, params: ModelParams, d: usize) -> (f64, f64) {
    let t = params.tanh_half_beta();
    let (even, odd) = binomial_parts(p.gamma, d);
    (
        p.alpha.powi(d as i32) - t * params.theta.cos() * even,
        odd - t * params.theta.sin() * even,
    )
}

/// Solves the bond constraints for one endpoint of degree `d`.
///
/// `γ` comes from bisection on `odd(γ)/even(γ) = t sin θ`, which is monotone on
/// `[0, 1)` and selects the branch with `γ → 0` as `θ → 0`; `α` is then the
/// positive real `d`-th root of the first constraint.
pub fn solve_bond_params(params: ModelParams, d: usize) -> Result<BondParams> {
    params.validate()?;
    if d == 0 {
        return Err(Error::OutOfRange("degree must be positive".into()));
    }
    if params.theta >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::OutOfRange(
            "theta = pi/2 has no entangled bond family".into(),
        ));
    }
    if params.tanh_half_beta() == 1.0 {
        return zero_temperature_params(params.theta, d);
    }
    let target = params.tanh_half_beta() * params.theta.sin();
    let ratio = |g: f64| {
        let (even, odd) = binomial_parts(g, d);
        odd / even - target
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if ratio(lo) >= 0.0 {
        hi = 0.0;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.max(1e-300) {
                break;
            }
        }
    }
    let gamma = if ratio(lo).abs() < ratio(hi).abs() { lo } else { hi };
    let (even, _) = binomial_parts(gamma, d);
    let rhs = params.tanh_half_beta() * params.theta.cos() * even;
    let alpha = rhs.max(0.0).powf(1.0 / d as f64);
    let mut p = BondParams { alpha, gamma };
    let (r1, r2) = constraint_residuals(p, params, d);
    // Near zero temperature the root sits on α² + γ² = 1 and the ratio is
    // flat there, so bisection can overshoot the boundary by roundoff.
    let norm = alpha.hypot(gamma);
    if norm > 1.0 && norm < 1.0 + BOUNDARY_SLACK {
        p = BondParams { alpha: alpha / norm, gamma: gamma / norm };
    }
    if r1.abs() > CONSTRAINT_TOL || r2.abs() > CONSTRAINT_TOL || !p.is_physical() {
        return Err(Error::NoPhysicalRoot(format!(
            "gamma in [{lo}, {hi}], residuals ({r1:e}, {r2:e}), alpha = {alpha}"
        )));
    }
    Ok(p)
}

/// Per-site endpoint parameters, each solved for that site's own degree.
pub fn site_params(graph: &LatticeGraph, params: ModelParams) -> Result<Vec<BondParams>> {
    (0..graph.n_sites())
        .map(|s| match graph.degree(s) {
            0 => Err(Error::UnsupportedLattice(format!(
                "site {s} has no bonds and cannot be represented"
            ))),
            d => solve_bond_params(params, d),
        })
        .collect()
}

/// Per-site zero-temperature parameters.
pub fn site_params_t0(graph: &LatticeGraph, theta: f64) -> Result<Vec<BondParams>> {
    (0..graph.n_sites())
        .map(|s| zero_temperature_params(theta, graph.degree(s)))
        .collect()
}

/// Thermal bond operators for every bond of `graph`, in bond order.
pub fn thermal_bonds(graph: &LatticeGraph, params: ModelParams) -> Result<Vec<DenseOperator>> {
    let sites = site_params(graph, params)?;
    Ok(graph
        .bonds()
        .iter()
        .map(|&(a, b)| bond_sided(sites[a], sites[b]))
        .collect())
}

/// Applies `A` at every site to `⊗_bonds ρ_bond` and renormalizes.
///
/// Entry `(x, y)` of the projected operator is the product over bonds of the
/// bond entry whose virtual bits copy the endpoint bits of `x` and `y`.
pub fn project_peps_bonds(
    graph: &LatticeGraph,
    bonds: &[DenseOperator],
    cap: usize,
) -> Result<DenseOperator> {
    if bonds.len() != graph.n_bonds() {
        return Err(Error::LengthMismatch {
            expected: graph.n_bonds(),
            got: bonds.len(),
        });
    }
    if bonds.iter().any(|b| b.n_qubits() != 2) {
        return Err(Error::DimensionMismatch("bond operators must be two-qubit".into()));
    }
    let n = graph.n_sites();
    if n > cap {
        return Err(Error::CapExceeded { qubits: n, cap });
    }
    let dim = 1usize << n;
    let mut m = nalgebra::DMatrix::from_element(dim, dim, crate::linalg::C64::new(0.0, 0.0));
    for x in 0..dim {
        for y in 0..dim {
            let mut acc = crate::linalg::C64::new(1.0, 0.0);
            for (&(a, b), rho) in graph.bonds().iter().zip(bonds) {
                let r = ((x >> a) & 1) | (((x >> b) & 1) << 1);
                let c = ((y >> a) & 1) | (((y >> b) & 1) << 1);
                acc *= rho.get(r, c);
                if acc.norm_sqr() == 0.0 {
                    break;
                }
            }
            m[(x, y)] = acc;
        }
    }
    let tr = m.trace();
    if tr.norm() < 1e-300 {
        return Err(Error::InvalidBond("projection has zero norm".into()));
    }
    DenseOperator::from_matrix(m / tr)
}

/// Projects the same bond operator onto every bond.
pub fn project_peps(graph: &LatticeGraph, bond: &DenseOperator, cap: usize) -> Result<DenseOperator> {
    project_peps_bonds(graph, &vec![bond.clone(); graph.n_bonds()], cap)
}
