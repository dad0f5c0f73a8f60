//! Dense complex operators and state vectors on a handful of qubits.
//!
//! Qubit ordering is little-endian: qubit `k` is bit `k` of the basis index.
//! [`DenseOperator::tensor`] follows the same rule, so `a.tensor(&b)` places
//! `a` on the low qubits and `b` on the qubits above them. Written in physics
//! notation, `X.tensor(&Z)` is `X ⊗ Z` with `X` on qubit 0.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for PSD checks; eigenvalues in `[-PSD_TOL, 0]` count as zero.
pub const PSD_TOL: f64 = 1e-10;

/// Largest entrywise asymmetry tolerated before an operator is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n_qubits: usize,
    m: DMatrix<C64>,
}

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n_qubits = qubits_for_dim(m.nrows())?;
        Ok(Self { n_qubits, m })
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(dim, &c)
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self {
            n_qubits,
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self {
            n_qubits,
            m: DMatrix::zeros(dim, dim),
        }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        Self::identity(n_qubits).scale(1.0 / (1u64 << n_qubits) as f64)
    }

    pub fn pauli(which: Pauli) -> Self {
        let entries = match which {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        Self {
            n_qubits: 1,
            m: DMatrix::from_row_slice(2, 2, &entries),
        }
    }

    /// Tensor product of Pauli operators, `paulis[k]` acting on qubit `k`.
    pub fn pauli_string(paulis: &[Pauli]) -> Self {
        paulis
            .iter()
            .fold(Self::identity(0), |acc, &p| acc.tensor(&Self::pauli(p)))
    }

    /// `½(I + x X + y Y + z Z)`.
    pub fn from_bloch(r: [f64; 3]) -> Self {
        let [x, y, z] = r;
        let entries = [
            C64::new(0.5 * (1.0 + z), 0.0),
            C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y),
            C64::new(0.5 * (1.0 - z), 0.0),
        ];
        Self {
            n_qubits: 1,
            m: DMatrix::from_row_slice(2, 2, &entries),
        }
    }

    pub fn projector(state: &PureState) -> Self {
        let v = state.amplitudes();
        Self {
            n_qubits: state.n_qubits(),
            m: v * v.adjoint(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            m: self.m.adjoint(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            m: self.m.map(|z| z * s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            m: &self.m + &other.m,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            m: &self.m - &other.m,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            m: &self.m * &other.m,
        })
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit operator on {}-qubit state",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        Ok(PureState {
            n_qubits: self.n_qubits,
            v: &self.m * state.amplitudes(),
        })
    }

    /// `self · rho · self†`.
    pub fn conjugate(&self, rho: &Self) -> Result<Self> {
        self.check_same(rho)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            m: &self.m * &rho.m * self.m.adjoint(),
        })
    }

    /// `tr(self · rho)`.
    pub fn expectation(&self, rho: &Self) -> Result<C64> {
        self.check_same(rho)?;
        Ok((&self.m * &rho.m).trace())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(())
    }

    /// `self ⊗ other`, with `self` on the low qubits.
    pub fn tensor(&self, other: &Self) -> Self {
        let da = self.dim();
        let db = other.dim();
        let mut m = DMatrix::from_element(da * db, da * db, ZERO);
        for rb in 0..db {
            for cb in 0..db {
                let b = other.m[(rb, cb)];
                if b == ZERO {
                    continue;
                }
                for ra in 0..da {
                    for ca in 0..da {
                        m[(ra + rb * da, ca + cb * da)] = self.m[(ra, ca)] * b;
                    }
                }
            }
        }
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            m,
        }
    }

    /// Lifts a single-qubit operator onto qubit `target` of an `n_qubits` register.
    pub fn embed(op: &Self, target: usize, n_qubits: usize) -> Result<Self> {
        if op.n_qubits != 1 || target >= n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "cannot embed {}-qubit operator at qubit {target} of {n_qubits}",
                op.n_qubits
            )));
        }
        let below = Self::identity(target);
        let above = Self::identity(n_qubits - target - 1);
        Ok(below.tensor(op).tensor(&above))
    }

    /// Traces out every qubit not listed in `keep`. Kept qubits are renumbered
    /// in ascending order of their original index.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.iter().any(|&q| q >= self.n_qubits) {
            return Err(Error::DimensionMismatch(format!(
                "keep set {keep:?} out of range for {} qubits",
                self.n_qubits
            )));
        }
        let traced: Vec<usize> = (0..self.n_qubits).filter(|q| !keep.contains(q)).collect();
        let nk = keep.len();
        let mut out = DMatrix::from_element(1 << nk, 1 << nk, ZERO);
        let spread = |small: usize, positions: &[usize]| -> usize {
            positions
                .iter()
                .enumerate()
                .map(|(k, &q)| ((small >> k) & 1) << q)
                .sum()
        };
        for r in 0..(1usize << nk) {
            let rbits = spread(r, &keep);
            for c in 0..(1usize << nk) {
                let cbits = spread(c, &keep);
                let mut acc = ZERO;
                for t in 0..(1usize << traced.len()) {
                    let tbits = spread(t, &traced);
                    acc += self.m[(rbits | tbits, cbits | tbits)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(Self { n_qubits: nk, m: out })
    }

    /// `K ρ K†` for a single-qubit operator `K` (row-major) acting on `qubit`.
    pub fn conjugate_local(&self, qubit: usize, k: [[C64; 2]; 2]) -> Result<Self> {
        if qubit >= self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        let dim = self.dim();
        let bit = 1usize << qubit;
        let mut m = self.m.clone();
        for c in 0..dim {
            for r in (0..dim).filter(|r| r & bit == 0) {
                let (a, b) = (m[(r, c)], m[(r | bit, c)]);
                m[(r, c)] = k[0][0] * a + k[0][1] * b;
                m[(r | bit, c)] = k[1][0] * a + k[1][1] * b;
            }
        }
        for r in 0..dim {
            for c in (0..dim).filter(|c| c & bit == 0) {
                let (a, b) = (m[(r, c)], m[(r, c | bit)]);
                m[(r, c)] = a * k[0][0].conj() + b * k[0][1].conj();
                m[(r, c | bit)] = a * k[1][0].conj() + b * k[1][1].conj();
            }
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            m,
        })
    }

    /// Transposes the listed subsystem (a single qubit index).
    pub fn partial_transpose(&self, qubit: usize) -> Result<Self> {
        if qubit >= self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        let dim = self.dim();
        let bit = 1usize << qubit;
        let mut out = DMatrix::from_element(dim, dim, ZERO);
        for r in 0..dim {
            for c in 0..dim {
                let (rb, cb) = (r & bit, c & bit);
                let r2 = (r & !bit) | cb;
                let c2 = (c & !bit) | rb;
                out[(r2, c2)] = self.m[(r, c)];
            }
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            m: out,
        })
    }

    pub fn max_asymmetry(&self) -> f64 {
        let d = &self.m - self.m.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Returns `(A + A†)/2` after checking `A` is Hermitian within [`HERMITIAN_TOL`].
    pub fn hermitian_part(&self) -> Result<Self> {
        let asym = self.max_asymmetry();
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            m: (&self.m + self.m.adjoint()).map(|z| z * 0.5),
        })
    }

    /// Ascending eigenvalues and matching orthonormal eigenvectors (columns).
    pub fn eigh(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        let h = self.hermitian_part()?;
        let eig = h.m.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let dim = self.dim();
        let mut vecs = DMatrix::from_element(dim, dim, ZERO);
        for (dst, &src) in order.iter().enumerate() {
            vecs.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok((vals, vecs))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let h = self.hermitian_part()?;
        let mut vals: Vec<f64> = h.m.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }

    /// Hermitian, unit trace and PSD within `tol`.
    pub fn is_density_operator(&self, tol: f64) -> bool {
        self.max_asymmetry() <= HERMITIAN_TOL
            && (self.trace() - ONE).norm() <= tol.max(1e-10)
            && self.is_psd(tol).unwrap_or(false)
    }

    /// Trace norm of a Hermitian operator.
    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|x| x.abs()).sum())
    }

    /// `½‖a − b‖₁`.
    pub fn trace_distance(a: &Self, b: &Self) -> Result<f64> {
        Ok(0.5 * a.sub(b)?.trace_norm()?)
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok((&self.m - &other.m)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }
}

/// Normalized state vector on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    v: DVector<C64>,
}

impl PureState {
    /// Normalizes the given amplitudes.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::OutOfRange("zero or non-finite state vector".into()));
        }
        Ok(Self {
            n_qubits,
            v: v / C64::new(norm, 0.0),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut v = DVector::from_element(1 << n_qubits, ZERO);
        v[index] = ONE;
        Self { n_qubits, v }
    }

    pub fn zero() -> Self {
        Self::basis(1, 0)
    }

    pub fn one() -> Self {
        Self::basis(1, 1)
    }

    pub fn plus() -> Self {
        Self::from_real(&[1.0, 1.0]).unwrap()
    }

    pub fn minus() -> Self {
        Self::from_real(&[1.0, -1.0]).unwrap()
    }

    /// `(|0⟩|+⟩ + |1⟩|−⟩)/√2`, qubit 0 in the Z basis and qubit 1 in the X basis.
    pub fn two_qubit_cluster() -> Self {
        Self::zero()
            .tensor(&Self::plus())
            .add_scaled(&Self::one().tensor(&Self::minus()), 1.0)
            .expect("fixed dimensions")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.v
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.v[index]
    }

    /// `self ⊗ other` with `self` on the low qubits.
    pub fn tensor(&self, other: &Self) -> Self {
        let da = self.v.len();
        let db = other.v.len();
        let mut v = DVector::from_element(da * db, ZERO);
        for b in 0..db {
            for a in 0..da {
                v[a + b * da] = self.v[a] * other.v[b];
            }
        }
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            v,
        }
    }

    fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch("state sum".into()));
        }
        let v: Vec<C64> = self
            .v
            .iter()
            .zip(other.v.iter())
            .map(|(a, b)| a + b * s)
            .collect();
        Self::new(v)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.v.dotc(&other.v)
    }

    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn density(&self) -> DenseOperator {
        DenseOperator::projector(self)
    }
}

/// Bloch vector of a single-qubit operator: `(tr ρX, tr ρY, tr ρZ)`.
pub fn bloch_vector(rho: &DenseOperator) -> [f64; 3] {
    let m = rho.matrix();
    [
        2.0 * m[(1, 0)].re,
        2.0 * m[(1, 0)].im,
        (m[(0, 0)] - m[(1, 1)]).re,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> PureState {
        PureState::two_qubit_cluster()
    }

    #[test]
    fn pauli_actions() {
        let x = DenseOperator::pauli(Pauli::X);
        let z = DenseOperator::pauli(Pauli::Z);
        assert!(x.apply(&PureState::zero()).unwrap().fidelity(&PureState::one()) > 1.0 - 1e-15);
        let out = z.apply(&PureState::plus()).unwrap();
        assert!((out.inner(&PureState::minus()) - ONE).norm() < 1e-15);
        // Y = iXZ
        let ixz = x.mul(&z).unwrap().m.map(|e| e * I);
        assert_eq!(DenseOperator::pauli(Pauli::Y).m, ixz);
    }

    #[test]
    fn cluster_pair_amplitudes() {
        let expected = PureState::from_real(&[0.5, 0.5, 0.5, -0.5]).unwrap();
        assert!((c2().fidelity(&expected) - 1.0).abs() < 1e-15);
        let rho = c2().density();
        for keep in [0, 1] {
            let marginal = rho.partial_trace(&[keep]).unwrap();
            let d = DenseOperator::trace_distance(&marginal, &DenseOperator::maximally_mixed(1));
            assert!(d.unwrap() < 1e-15);
        }
    }

    #[test]
    fn cz_on_plus_plus_is_cluster_pair() {
        let cz = DenseOperator::from_real_rows(
            4,
            &[
                1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., -1.,
            ],
        )
        .unwrap();
        let pp = PureState::plus().tensor(&PureState::plus());
        let out = cz.apply(&pp).unwrap();
        assert!((out.inner(&c2()) - ONE).norm() < 1e-15);
    }

    #[test]
    fn partial_transpose_of_cluster_pair() {
        let pt = c2().density().partial_transpose(1).unwrap();
        assert!((pt.min_eigenvalue().unwrap() + 0.5).abs() < 1e-12);
        let pt0 = c2().density().partial_transpose(0).unwrap();
        assert!((pt0.min_eigenvalue().unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_of_product_is_psd() {
        let a = DenseOperator::from_bloch([0.3, -0.4, 0.5]);
        let b = DenseOperator::from_bloch([0.0, 0.9, -0.1]);
        let pt = a.tensor(&b).partial_transpose(1).unwrap();
        assert!(pt.is_psd(PSD_TOL).unwrap());
    }

    #[test]
    fn scalar_utilities() {
        assert!(DenseOperator::maximally_mixed(1).is_psd(1e-10).unwrap());
        let d = DenseOperator::trace_distance(
            &PureState::zero().density(),
            &PureState::one().density(),
        )
        .unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        assert!((DenseOperator::pauli(Pauli::Z).min_eigenvalue().unwrap() + 1.0).abs() < 1e-15);
        let rho = DenseOperator::from_bloch([0.1, 0.2, 0.3]);
        assert!(DenseOperator::trace_distance(&rho, &rho).unwrap().abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let m = DenseOperator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(m.min_eigenvalue(), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn tensor_ordering_is_little_endian() {
        // X on qubit 0 flips bit 0.
        let xz = DenseOperator::pauli_string(&[Pauli::X, Pauli::I]);
        let out = xz.apply(&PureState::basis(2, 0)).unwrap();
        assert!((out.amplitude(1) - ONE).norm() < 1e-15);
        let embedded = DenseOperator::embed(&DenseOperator::pauli(Pauli::X), 1, 3).unwrap();
        let out = embedded.apply(&PureState::basis(3, 0)).unwrap();
        assert!((out.amplitude(2) - ONE).norm() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let a = DenseOperator::identity(1);
        let b = DenseOperator::identity(2);
        assert!(a.add(&b).is_err());
        assert!(b.partial_trace(&[3]).is_err());
        assert!(PureState::new(vec![ONE; 3]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn bloch() -> impl Strategy<Value = [f64; 3]> {
            (0.0..1.0f64, 0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(
                |(r, pol, az)| [r * pol.sin() * az.cos(), r * pol.sin() * az.sin(), r * pol.cos()],
            )
        }

        proptest! {
            #[test]
            fn trace_out_partner(a in bloch(), b in bloch(), c in bloch()) {
                let ra = DenseOperator::from_bloch(a);
                let rb = DenseOperator::from_bloch(b);
                let rc = DenseOperator::from_bloch(c);
                let left = ra.tensor(&rb).tensor(&rc);
                let right = ra.tensor(&rb.tensor(&rc));
                prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-14);
                let kept = left.partial_trace(&[0]).unwrap();
                prop_assert!(kept.max_abs_diff(&ra).unwrap() < 1e-14);
                let kept = left.partial_trace(&[0, 2]).unwrap();
                prop_assert!(kept.max_abs_diff(&ra.tensor(&rc)).unwrap() < 1e-14);
                prop_assert!((left.trace() - ONE).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn local_conjugation_matches_embedding() {
        let rho = DenseOperator::from_bloch([0.3, -0.2, 0.5])
            .tensor(&DenseOperator::from_bloch([0.1, 0.6, -0.4]))
            .tensor(&DenseOperator::maximally_mixed(1));
        let k = [
            [C64::new(0.4, 0.1), C64::new(-0.3, 0.2)],
            [C64::new(0.0, 0.7), C64::new(0.5, -0.1)],
        ];
        let op = DenseOperator::from_rows(2, &[k[0][0], k[0][1], k[1][0], k[1][1]]).unwrap();
        for q in 0..3 {
            let full = DenseOperator::embed(&op, q, 3).unwrap();
            let want = full.mul(&rho).unwrap().mul(&full.adjoint()).unwrap();
            let got = rho.conjugate_local(q, k).unwrap();
            assert!(got.max_abs_diff(&want).unwrap() < 1e-14);
        }
    }
}
