//! Splitting a bond into an entangled part and a convex mixture of product
//! states: `ρ = p_e |ψ⟩⟨ψ| + (1 − p_e) Σ_k w_k |a_k b_k⟩⟨a_k b_k|`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bond::{bond_sided, solve_bond_params, zero_temperature_params, BondParams};
use crate::error::{Error, Result};
use crate::exact::ModelParams;
use crate::linalg::{DenseOperator, PureState, C64};

/// Slack on eigenvalues when testing positivity and the PPT condition.
pub const SEPARABILITY_TOL: f64 = 1e-12;

/// Eigenvalues of a normalized state below this are treated as exact zeros.
pub const NULL_EIGENVALUE: f64 = 1e-12;

/// Bonds with `1 − p_e` below this are treated as purely entangled; the
/// separable remainder is pure roundoff at that scale.
pub const PURE_FLOOR: f64 = 1e-9;

/// Product terms lighter than this are dropped.
pub const MIN_TERM_WEIGHT: f64 = 1e-14;

const ZERO: C64 = C64::new(0.0, 0.0);

/// A single-qubit state vector `(⟨0|q⟩, ⟨1|q⟩)`.
pub type Qubit = [C64; 2];

/// `(ω² + 2ω − 1)/2`, clamped at zero below `ω = √2 − 1`.
pub fn pe_zero_field(omega: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::OutOfRange(format!("omega = {omega} outside [0, 1]")));
    }
    Ok((0.5 * (omega * omega + 2.0 * omega - 1.0)).max(0.0))
}

fn separability_margin(rho: &DenseOperator, psi: &DenseOperator, p: f64) -> Result<f64> {
    let rest = rho.sub(&psi.scale(p))?;
    Ok(rest
        .min_eigenvalue()?
        .min(rest.partial_transpose(1)?.min_eigenvalue()?))
}

/// Smallest `p ∈ [0, 1]` for which `ρ − p|ψ⟩⟨ψ|` is positive with positive
/// partial transpose, i.e. proportional to a separable two-qubit state.
///
/// The margin `min(λ_min(ρ − pψ), λ_min((ρ − pψ)^{T_B}))` is concave in `p`,
/// so the feasible set is an interval found by a golden-section search for
/// its peak and a bisection for its left edge.
pub fn entangled_fraction(rho: &DenseOperator, psi: &PureState) -> Result<f64> {
    if rho.n_qubits() != 2 || psi.n_qubits() != 2 {
        return Err(Error::DimensionMismatch("bond states are two-qubit".into()));
    }
    let proj = psi.density();
    let f = |p: f64| separability_margin(rho, &proj, p);
    if f(0.0)? >= -SEPARABILITY_TOL {
        return Ok(0.0);
    }
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-13 {
        if fc < fd {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        }
    }
    let (peak, f_peak) = [(a, f(a)?), (b, f(b)?), (c, fc), (d, fd)]
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    if f_peak < -SEPARABILITY_TOL {
        return Err(Error::NotSeparable(-f_peak));
    }
    if f_peak < 0.0 {
        return Ok(peak);
    }
    let (mut lo, mut hi) = (0.0_f64, peak);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// One weighted product state `|a⟩ ⊗ |b⟩`; `a` lives on qubit 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub weight: f64,
    pub a: Qubit,
    pub b: Qubit,
}

impl ProductTerm {
    pub fn state(&self) -> PureState {
        qubit_state(self.a).tensor(&qubit_state(self.b))
    }
}

fn qubit_state(q: Qubit) -> PureState {
    PureState::new(q.to_vec()).expect("nonzero qubit")
}

/// Factors a two-qubit vector as `u ⊗ v` (returned unnormalized pair has
/// `|u| = 1`). Returns the norm of the rank-1 residual alongside.
fn factor_product(z: &[C64; 4]) -> (Qubit, Qubit, f64) {
    // column b holds amplitudes z[a + 2b]
    let col = |b: usize| [z[2 * b], z[2 * b + 1]];
    let norm = |q: &Qubit| (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
    let pick = if norm(&col(0)) >= norm(&col(1)) { 0 } else { 1 };
    let c = col(pick);
    let n = norm(&c);
    let u = [c[0] / n, c[1] / n];
    let v = [
        u[0].conj() * z[0] + u[1].conj() * z[1],
        u[0].conj() * z[2] + u[1].conj() * z[3],
    ];
    let mut resid = 0.0;
    for b in 0..2 {
        for a in 0..2 {
            resid += (z[a + 2 * b] - u[a] * v[b]).norm_sqr();
        }
    }
    (u, v, resid.sqrt())
}

/// `σ_y ⊗ σ_y` in the computational basis.
fn spin_flip() -> DMatrix<C64> {
    let mut s = DMatrix::from_element(4, 4, ZERO);
    for (r, c, v) in [(0, 3, -1.0), (1, 2, 1.0), (2, 1, 1.0), (3, 0, -1.0)] {
        s[(r, c)] = C64::new(v, 0.0);
    }
    s
}

/// Unitary `Q` and `σ ≥ 0` with `T = Q diag(σ) Qᵀ` for complex symmetric `T`.
fn takagi(t: &DMatrix<C64>, zero_tol: f64) -> Result<(DMatrix<C64>, Vec<f64>)> {
    let n = t.nrows();
    let a = t.map(|z| z.re);
    let b = t.map(|z| z.im);
    let mut k = DMatrix::<f64>::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&a);
    k.view_mut((0, n), (n, n)).copy_from(&b);
    k.view_mut((n, 0), (n, n)).copy_from(&b);
    k.view_mut((n, n), (n, n)).copy_from(&(-&a));
    let eig = k.symmetric_eigen();
    let mut positive: Vec<usize> = (0..2 * n)
        .filter(|&i| eig.eigenvalues[i] > zero_tol)
        .collect();
    positive.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut q = DMatrix::from_element(n, n, ZERO);
    let mut sigma = Vec::with_capacity(n);
    for (col, &i) in positive.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        for r in 0..n {
            q[(r, col)] = C64::new(v[r], v[r + n]);
        }
        sigma.push(eig.eigenvalues[i]);
    }
    let missing = n - positive.len();
    if missing > 0 {
        // Null directions of T: eigenvectors of T†T with the smallest eigenvalues.
        let gram = DenseOperator::from_matrix(t.adjoint() * t)?;
        let (_, w) = gram.eigh()?;
        for m in 0..missing {
            let col = positive.len() + m;
            for r in 0..n {
                q[(r, col)] = w[(r, m)].conj();
            }
            sigma.push(0.0);
        }
    }
    Ok((q, sigma))
}

/// Angles `ψ_k` with `Σ s_k e^{iψ_k} = 0`, for `s` sorted descending and
/// `s_0 ≤ s_1 + s_2 + s_3`.
fn closing_angles(s: [f64; 4]) -> [f64; 4] {
    let mut psi = [0.0; 4];
    if s[0] <= 0.0 {
        return psi;
    }
    // half-angle forms stay accurate when the triangle is nearly degenerate
    let l34 = (s[0] - s[1]).max(s[2] - s[3]);
    let d01 = s[0] - s[1];
    psi[1] = if s[1] > 0.0 {
        let c = ((l34 - d01) * (l34 + d01) / (4.0 * s[0] * s[1])).clamp(0.0, 1.0);
        2.0 * c.sqrt().acos()
    } else {
        std::f64::consts::PI
    };
    let v34 = -(C64::new(s[0], 0.0) + C64::from_polar(s[1], psi[1]));
    let dir = v34.arg();
    let half = if s[2] > 0.0 && l34 > 0.0 {
        ((s[3] - s[2] + l34) * (s[3] + s[2] - l34) / (4.0 * s[2] * l34)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    psi[2] = dir + 2.0 * half.sqrt().asin();
    let v4 = v34 - C64::from_polar(s[2], psi[2]);
    psi[3] = if v4.norm() > 0.0 { v4.arg() } else { psi[2] + std::f64::consts::PI };
    psi
}

/// Decomposes a separable two-qubit density operator into at most four
/// weighted product states, using the phase-rotated Hadamard combinations of
/// the Takagi basis of `ρ`.
pub fn product_ensemble(rho: &DenseOperator) -> Result<Vec<ProductTerm>> {
    if rho.n_qubits() != 2 {
        return Err(Error::DimensionMismatch("bond states are two-qubit".into()));
    }
    let tr = rho.trace().re;
    if tr <= 0.0 {
        return Err(Error::OutOfRange("operator has non-positive trace".into()));
    }
    let (vals, vecs) = rho.scale(1.0 / tr).eigh()?;
    if vals[0] < -SEPARABILITY_TOL.sqrt() {
        return Err(Error::OutOfRange(format!("operator has eigenvalue {}", vals[0])));
    }
    let mut v = vecs.clone();
    for (k, &lam) in vals.iter().enumerate() {
        // roundoff eigenvalues would otherwise enter as O(1e-8) amplitudes
        let s = if lam < NULL_EIGENVALUE { 0.0 } else { lam.sqrt() };
        v.column_mut(k).scale_mut(s);
    }
    let flip = spin_flip();
    let t = v.transpose() * &flip * &v;
    let (q, _) = takagi(&t, 1e-13)?;
    let x = &v * q.map(|z| z.conj());

    let c: Vec<C64> = (0..4)
        .map(|i| (x.column(i).transpose() * &flip * x.column(i))[(0, 0)])
        .collect();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| c[j].norm().total_cmp(&c[i].norm()));
    let s = [0, 1, 2, 3].map(|k| c[order[k]].norm());
    if s[0] > s[1] + s[2] + s[3] + SEPARABILITY_TOL.sqrt() {
        return Err(Error::NotSeparable(s[0] - s[1] - s[2] - s[3]));
    }
    let psi = closing_angles(s);
    let mut y = x.clone();
    for (k, &i) in order.iter().enumerate() {
        let theta = 0.5 * (psi[k] - c[i].arg());
        let phase = C64::from_polar(1.0, theta);
        y.column_mut(i).iter_mut().for_each(|z| *z *= phase);
    }

    const HADAMARD: [[f64; 4]; 4] = [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ];
    let mut terms: Vec<ProductTerm> = Vec::new();
    for row in HADAMARD {
        let mut z = [ZERO; 4];
        for (j, &h) in row.iter().enumerate() {
            for (r, zr) in z.iter_mut().enumerate() {
                *zr += y[(r, j)] * (0.5 * h);
            }
        }
        let weight: f64 = z.iter().map(|a| a.norm_sqr()).sum();
        if weight < MIN_TERM_WEIGHT {
            continue;
        }
        let (u, w, resid) = factor_product(&z);
        if resid > 1e-6 * weight.sqrt().max(1e-3) {
            return Err(Error::NotSeparable(resid));
        }
        let wn = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        let b = [w[0] / wn, w[1] / wn];
        merge_term(&mut terms, ProductTerm { weight, a: u, b });
    }
    let total: f64 = terms.iter().map(|t| t.weight).sum();
    for t in &mut terms {
        t.weight /= total;
    }
    Ok(terms)
}

fn inner(p: &Qubit, q: &Qubit) -> C64 {
    p[0].conj() * q[0] + p[1].conj() * q[1]
}

/// Weighted mean of two nearly parallel unit vectors after phase alignment;
/// the operator error of the merge is second order in their separation.
fn mean_qubit(p: &Qubit, wp: f64, q: &Qubit, wq: f64) -> Qubit {
    let ov = inner(q, p);
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { C64::new(1.0, 0.0) };
    let m = [p[0] * wp + q[0] * phase * wq, p[1] * wp + q[1] * phase * wq];
    let n = (m[0].norm_sqr() + m[1].norm_sqr()).sqrt();
    [m[0] / n, m[1] / n]
}

fn merge_term(terms: &mut Vec<ProductTerm>, new: ProductTerm) {
    for t in terms.iter_mut() {
        if inner(&t.a, &new.a).norm() > 1.0 - 1e-12 && inner(&t.b, &new.b).norm() > 1.0 - 1e-12 {
            t.a = mean_qubit(&t.a, t.weight, &new.a, new.weight);
            t.b = mean_qubit(&t.b, t.weight, &new.b, new.weight);
            t.weight += new.weight;
            return;
        }
    }
    terms.push(new);
}

/// `Σ_k w_k |a_k b_k⟩⟨a_k b_k|`.
pub fn mixture_operator(terms: &[ProductTerm]) -> DenseOperator {
    terms.iter().fold(DenseOperator::zeros(2), |acc, t| {
        acc.add(&t.state().density().scale(t.weight)).expect("two-qubit")
    })
}

/// Entangled member `CZ(|a⟩ ⊗ |b⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CzProduct {
    pub a: Qubit,
    pub b: Qubit,
}

impl CzProduct {
    /// Factors `CZ|ψ⟩` as a product, failing if it is entangled.
    pub fn from_state(psi: &PureState) -> Result<Self> {
        if psi.n_qubits() != 2 {
            return Err(Error::DimensionMismatch("bond states are two-qubit".into()));
        }
        let mut z = [ZERO; 4];
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = psi.amplitude(i);
        }
        z[3] = -z[3];
        let (a, b, resid) = factor_product(&z);
        if resid > 1e-9 {
            return Err(Error::NotCzProduct);
        }
        let n = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
        Ok(Self {
            a,
            b: [b[0] / n, b[1] / n],
        })
    }

    pub fn state(&self) -> PureState {
        let v = qubit_state(self.a).tensor(&qubit_state(self.b));
        let mut amps: Vec<C64> = v.amplitudes().iter().copied().collect();
        amps[3] = -amps[3];
        PureState::new(amps).expect("normalized")
    }
}

/// Real qubit with Bloch vector `(α, 0, γ)`, `α² + γ² = 1`.
fn bloch_xz_qubit(p: BondParams) -> Qubit {
    let chi = p.alpha.atan2(p.gamma);
    [
        C64::new((0.5 * chi).cos(), 0.0),
        C64::new((0.5 * chi).sin(), 0.0),
    ]
}

/// Zero-temperature bond between endpoints of degree `d_a` and `d_b`.
pub fn zero_temperature_member(theta: f64, d_a: usize, d_b: usize) -> Result<CzProduct> {
    Ok(CzProduct {
        a: bloch_xz_qubit(zero_temperature_params(theta, d_a)?),
        b: bloch_xz_qubit(zero_temperature_params(theta, d_b)?),
    })
}

/// A bond written as a weighted ensemble of pure members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondEnsemble {
    pub p_e: f64,
    pub entangled: CzProduct,
    pub product_terms: Vec<ProductTerm>,
}

/// One pure member with its overall probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub weight: f64,
    pub a: Qubit,
    pub b: Qubit,
    pub entangled: bool,
}

impl BondEnsemble {
    /// Decomposes `rho` around the entangled member `entangled`.
    pub fn decompose(rho: &DenseOperator, entangled: CzProduct) -> Result<Self> {
        let psi = entangled.state();
        let mut p_e = entangled_fraction(rho, &psi)?;
        let product_terms = if p_e >= 1.0 - PURE_FLOOR {
            p_e = 1.0;
            Vec::new()
        } else {
            product_ensemble(&rho.sub(&psi.density().scale(p_e))?.scale(1.0 / (1.0 - p_e)))?
        };
        Ok(Self {
            p_e,
            entangled,
            product_terms,
        })
    }

    /// Entangled member first (when `p_e > 0`), then product terms.
    pub fn members(&self) -> Vec<Member> {
        let mut out = Vec::with_capacity(self.product_terms.len() + 1);
        if self.p_e > 0.0 {
            out.push(Member {
                weight: self.p_e,
                a: self.entangled.a,
                b: self.entangled.b,
                entangled: true,
            });
        }
        out.extend(self.product_terms.iter().map(|t| Member {
            weight: (1.0 - self.p_e) * t.weight,
            a: t.a,
            b: t.b,
            entangled: false,
        }));
        out
    }

    /// `p_e |ψ⟩⟨ψ| + (1 − p_e) ρ_s`.
    pub fn reconstruct(&self) -> DenseOperator {
        let ent = self.entangled.state().density().scale(self.p_e);
        ent.add(&mixture_operator(&self.product_terms).scale(1.0 - self.p_e))
            .expect("two-qubit")
    }
}

/// Ensemble of the thermal bond between sites of degree `d_a` and `d_b`.
pub fn build_ensemble(params: ModelParams, d_a: usize, d_b: usize) -> Result<BondEnsemble> {
    let rho = bond_sided(solve_bond_params(params, d_a)?, solve_bond_params(params, d_b)?);
    BondEnsemble::decompose(&rho, zero_temperature_member(params.theta, d_a, d_b)?)
}

/// `(|q_0|², |q_1|²)`.
pub fn z_diagonal(q: &Qubit) -> [f64; 2] {
    [q[0].norm_sqr(), q[1].norm_sqr()]
}
