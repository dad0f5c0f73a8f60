//! Exact thermal and ground states of the cluster Hamiltonian with a local Z
//! field, built from the decoupled-spin picture: a global CZ over every bond
//! maps the model onto independent spins. Energies are in units of the gap.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeGraph;
use crate::linalg::{DenseOperator, Pauli, PureState, C64};

pub const DEFAULT_ORACLE_CAP: usize = 12;

/// Inverse temperature (units of 1/Δ, may be infinite) and field angle in `[0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub theta: f64,
}

impl ModelParams {
    pub fn new(beta: f64, theta: f64) -> Result<Self> {
        let p = Self { beta, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn from_kt(kt: f64, theta: f64) -> Result<Self> {
        if !(kt >= 0.0) {
            return Err(Error::OutOfRange(format!("kT = {kt} must be >= 0")));
        }
        Self::new(if kt == 0.0 { f64::INFINITY } else { 1.0 / kt }, theta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::OutOfRange(format!("beta = {} must be >= 0", self.beta)));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-15).contains(&self.theta) {
            return Err(Error::OutOfRange(format!(
                "theta = {} outside [0, pi/2]",
                self.theta
            )));
        }
        Ok(())
    }

    /// `tanh(β/2)`; equals 1 at zero temperature.
    pub fn tanh_half_beta(&self) -> f64 {
        (0.5 * self.beta).tanh()
    }

    pub fn kt(&self) -> f64 {
        1.0 / self.beta
    }
}

/// `½(I + tanh(β/2)(cos θ X + sin θ Z))`, the thermal state of one decoupled spin.
pub fn single_spin_thermal(params: ModelParams) -> DenseOperator {
    let t = params.tanh_half_beta();
    DenseOperator::from_bloch([t * params.theta.cos(), 0.0, t * params.theta.sin()])
}

/// `cos(θ/2)|+⟩ + sin(θ/2)|−⟩`.
pub fn theta_state(theta: f64) -> PureState {
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_real(&[r * (c + s), r * (c - s)]).expect("normalized")
}

/// `(-1)^{Σ_bonds x_a x_b}` for basis index `x`.
fn cz_sign(graph: &LatticeGraph, x: usize) -> f64 {
    let parity = graph
        .bonds()
        .iter()
        .filter(|&&(a, b)| (x >> a) & (x >> b) & 1 == 1)
        .count();
    if parity % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn cz_signs(graph: &LatticeGraph) -> Vec<f64> {
    (0..1usize << graph.n_sites()).map(|x| cz_sign(graph, x)).collect()
}

/// Exact-state oracle for one graph, limited to `cap` qubits.
#[derive(Debug, Clone)]
pub struct ExactReference<'g> {
    graph: &'g LatticeGraph,
    cap: usize,
}

impl<'g> ExactReference<'g> {
    pub fn new(graph: &'g LatticeGraph) -> Self {
        Self {
            graph,
            cap: DEFAULT_ORACLE_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn graph(&self) -> &LatticeGraph {
        self.graph
    }

    fn check_cap(&self) -> Result<usize> {
        let n = self.graph.n_sites();
        if n > self.cap {
            return Err(Error::CapExceeded {
                qubits: n,
                cap: self.cap,
            });
        }
        Ok(n)
    }

    /// Applies `diag(1,1,1,-1)` on every bond.
    pub fn cz_all(&self, state: &PureState) -> Result<PureState> {
        let n = self.check_cap()?;
        if state.n_qubits() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit state on {n}-site graph",
                state.n_qubits()
            )));
        }
        let amps = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(x, &a)| a * cz_sign(self.graph, x))
            .collect();
        PureState::new(amps)
    }

    /// `CZ_L ρ CZ_L†`.
    pub fn cz_conjugate(&self, rho: &DenseOperator) -> Result<DenseOperator> {
        let n = self.check_cap()?;
        if rho.n_qubits() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit operator on {n}-site graph",
                rho.n_qubits()
            )));
        }
        let s = cz_signs(self.graph);
        let m = rho.matrix();
        let out = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * (s[r] * s[c]));
        DenseOperator::from_matrix(out)
    }

    /// `CZ_L |θ⟩^{⊗N}`.
    pub fn ground_state(&self, theta: f64) -> Result<PureState> {
        let n = self.check_cap()?;
        let single = theta_state(theta);
        let product = (0..n).fold(PureState::basis(0, 0), |acc, _| acc.tensor(&single));
        self.cz_all(&product)
    }

    /// `CZ_L (⊗ single-spin thermal) CZ_L†`.
    pub fn thermal_state(&self, params: ModelParams) -> Result<DenseOperator> {
        params.validate()?;
        let n = self.check_cap()?;
        let single = single_spin_thermal(params);
        let product = (0..n).fold(DenseOperator::identity(0), |acc, _| acc.tensor(&single));
        self.cz_conjugate(&product)
    }

    /// `K_i = X_i Π_{j∼i} Z_j`.
    pub fn stabilizer(&self, site: usize) -> Result<DenseOperator> {
        let n = self.check_cap()?;
        let mut paulis = vec![Pauli::I; n];
        paulis[site] = Pauli::X;
        for &j in self.graph.neighbors(site) {
            paulis[j] = Pauli::Z;
        }
        Ok(DenseOperator::pauli_string(&paulis))
    }

    /// `−½ Σ_i (cos θ K_i + sin θ Z_i)`.
    pub fn hamiltonian(&self, theta: f64) -> Result<DenseOperator> {
        let n = self.check_cap()?;
        let mut h = DenseOperator::zeros(n);
        for i in 0..n {
            let k = self.stabilizer(i)?.scale(-0.5 * theta.cos());
            let mut zs = vec![Pauli::I; n];
            zs[i] = Pauli::Z;
            let z = DenseOperator::pauli_string(&zs).scale(-0.5 * theta.sin());
            h = h.add(&k)?.add(&z)?;
        }
        Ok(h)
    }
}

/// `exp(−βH)/Z` by eigendecomposition, shifted by the ground energy for stability.
pub fn gibbs_state(h: &DenseOperator, beta: f64) -> Result<DenseOperator> {
    let (vals, vecs) = h.eigh()?;
    let e0 = vals[0];
    let weights: Vec<f64> = vals.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let dim = h.dim();
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for (k, w) in weights.iter().enumerate() {
        let v = vecs.column(k);
        m += (v * v.adjoint()) * C64::new(w / z, 0.0);
    }
    DenseOperator::from_matrix(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, Boundary, LatticeKind};
    use std::f64::consts::FRAC_PI_2;

    fn chain(n: usize) -> LatticeGraph {
        build_lattice(LatticeKind::Chain, &[n], Boundary::Open).unwrap()
    }

    fn square2() -> LatticeGraph {
        build_lattice(LatticeKind::Square, &[2, 2], Boundary::Open).unwrap()
    }

    #[test]
    fn single_spin_limits() {
        let hot = single_spin_thermal(ModelParams::new(0.0, 0.7).unwrap());
        assert!(hot.max_abs_diff(&DenseOperator::maximally_mixed(1)).unwrap() < 1e-15);
        let cold = single_spin_thermal(ModelParams::new(f64::INFINITY, 0.0).unwrap());
        assert!(cold.max_abs_diff(&PureState::plus().density()).unwrap() < 1e-15);
        let cold = single_spin_thermal(ModelParams::new(f64::INFINITY, FRAC_PI_2).unwrap());
        assert!(cold.max_abs_diff(&PureState::zero().density()).unwrap() < 1e-15);
        let p = ModelParams::new(1.3, 0.4).unwrap();
        let t = p.tanh_half_beta();
        assert!((single_spin_thermal(p).purity() - 0.5 * (1.0 + t * t)).abs() < 1e-14);
    }

    #[test]
    fn theta_state_matches_rotated_thermal_axis() {
        let theta = 0.83;
        let rho = theta_state(theta).density();
        let expected = single_spin_thermal(ModelParams::new(f64::INFINITY, theta).unwrap());
        assert!(rho.max_abs_diff(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn cz_all_examples() {
        let g = chain(2);
        let oracle = ExactReference::new(&g);
        let pp = PureState::plus().tensor(&PureState::plus());
        let c2 = oracle.cz_all(&pp).unwrap();
        assert!((c2.fidelity(&PureState::two_qubit_cluster()) - 1.0).abs() < 1e-15);
        let g = square2();
        let oracle = ExactReference::new(&g);
        let psi = PureState::from_real(&(0..16).map(|k| (k as f64).sin() + 0.3).collect::<Vec<_>>()).unwrap();
        let back = oracle.cz_all(&oracle.cz_all(&psi).unwrap()).unwrap();
        assert!((back.inner(&psi).re - 1.0).abs() < 1e-14);
        for i in 0..4 {
            let mut zs = vec![Pauli::I; 4];
            zs[i] = Pauli::Z;
            let z = DenseOperator::pauli_string(&zs);
            assert!(oracle.cz_conjugate(&z).unwrap().max_abs_diff(&z).unwrap() < 1e-15);
            let k = oracle.stabilizer(i).unwrap();
            let mut xs = vec![Pauli::I; 4];
            xs[i] = Pauli::X;
            let x = DenseOperator::pauli_string(&xs);
            assert!(oracle.cz_conjugate(&k).unwrap().max_abs_diff(&x).unwrap() < 1e-15);
        }
    }

    #[test]
    fn ground_state_examples() {
        let g = chain(2);
        let gs = ExactReference::new(&g).ground_state(0.0).unwrap();
        assert!((gs.fidelity(&PureState::two_qubit_cluster()) - 1.0).abs() < 1e-14);
        let g = square2();
        let gs = ExactReference::new(&g).ground_state(FRAC_PI_2).unwrap();
        assert!((gs.fidelity(&PureState::basis(4, 0)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ground_energy_is_minus_half_n() {
        for g in [chain(3), square2(), build_lattice(LatticeKind::Chain, &[8], Boundary::Open).unwrap()] {
            let oracle = ExactReference::new(&g);
            for theta in [0.0, 0.3, 1.0, FRAC_PI_2] {
                let h = oracle.hamiltonian(theta).unwrap();
                let gs = oracle.ground_state(theta).unwrap();
                let e = h.expectation(&gs.density()).unwrap().re;
                assert!((e + 0.5 * g.n_sites() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let g = chain(2);
        let oracle = ExactReference::new(&g);
        let h = oracle.hamiltonian(0.0).unwrap();
        let xz = DenseOperator::pauli_string(&[Pauli::X, Pauli::Z]);
        let zx = DenseOperator::pauli_string(&[Pauli::Z, Pauli::X]);
        let expected = xz.add(&zx).unwrap().scale(-0.5);
        assert!(h.max_abs_diff(&expected).unwrap() < 1e-15);
        let h = oracle.hamiltonian(FRAC_PI_2).unwrap();
        let z0 = DenseOperator::pauli_string(&[Pauli::Z, Pauli::I]);
        let z1 = DenseOperator::pauli_string(&[Pauli::I, Pauli::Z]);
        assert!(h.max_abs_diff(&z0.add(&z1).unwrap().scale(-0.5)).unwrap() < 1e-15);
        for theta in [0.0, 0.4, 1.2, FRAC_PI_2] {
            let vals = oracle.hamiltonian(theta).unwrap().eigenvalues().unwrap();
            assert!((vals[1] - vals[0] - 1.0).abs() < 1e-12, "gap at theta {theta}");
        }
    }

    #[test]
    fn stabilizers_commute() {
        let g = square2();
        let oracle = ExactReference::new(&g);
        for i in 0..4 {
            for j in 0..4 {
                let (a, b) = (oracle.stabilizer(i).unwrap(), oracle.stabilizer(j).unwrap());
                let comm = a.mul(&b).unwrap().sub(&b.mul(&a).unwrap()).unwrap();
                assert!(comm.max_abs_diff(&DenseOperator::zeros(4)).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn thermal_state_limits() {
        let g = square2();
        let oracle = ExactReference::new(&g);
        let hot = oracle.thermal_state(ModelParams::new(0.0, 0.5).unwrap()).unwrap();
        assert!(hot.max_abs_diff(&DenseOperator::maximally_mixed(4)).unwrap() < 1e-15);
        let cold = oracle.thermal_state(ModelParams::new(f64::INFINITY, 0.5).unwrap()).unwrap();
        let gs = oracle.ground_state(0.5).unwrap().density();
        assert!(DenseOperator::trace_distance(&cold, &gs).unwrap() < 1e-12);
    }

    #[test]
    fn thermal_state_equals_gibbs_exponential() {
        let graphs = [chain(3), square2(), LatticeGraph::star(4).unwrap(), chain(6)];
        for g in &graphs {
            let oracle = ExactReference::new(g);
            for beta in [0.5, 2.0, 10.0] {
                for theta in [0.0, 0.3, 1.0, FRAC_PI_2] {
                    let p = ModelParams::new(beta, theta).unwrap();
                    let gibbs = gibbs_state(&oracle.hamiltonian(theta).unwrap(), beta).unwrap();
                    let d = DenseOperator::trace_distance(&oracle.thermal_state(p).unwrap(), &gibbs).unwrap();
                    assert!(d < 1e-9, "beta {beta} theta {theta}: {d:e}");
                }
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let g = chain(5);
        let oracle = ExactReference::new(&g).with_cap(4);
        assert!(matches!(oracle.ground_state(0.0), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(-1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 2.0).is_err());
        assert_eq!(ModelParams::from_kt(0.0, 0.1).unwrap().beta, f64::INFINITY);
    }
}
