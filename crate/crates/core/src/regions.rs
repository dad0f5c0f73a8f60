//! Phase-diagram quantities: the classical-simulability boundary, the local
//! filtering map, the dephasing argument and the percolated-filtering bound.
//!
//! Temperatures are `kT` in units of the gap.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::build_ensemble;
use crate::error::{Error, Result};
use crate::exact::{ExactReference, ModelParams};
use crate::lattice::{coordination, LatticeGraph, LatticeKind, PercolationMode, ThresholdTable};
use crate::linalg::{DenseOperator, C64};
use crate::sampler::shot_rng;

/// Dephasing threshold of the fault-tolerant scheme the Q region relies on.
pub const DEFAULT_DEPHASING_THRESHOLD: f64 = 0.029;
/// Absolute tolerance of the critical-temperature bisection.
pub const TCRIT_TOL: f64 = 1e-4;
/// Largest `kT` probed when bracketing the simulability boundary.
const TCRIT_KT_MAX: f64 = 1e6;

fn kt_from_tanh(x: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else if x <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (2.0 * x.atanh())
    }
}

/// Critical temperature of the zero-field model from the closed-form bond.
pub fn tcrit_zero_field_with(kind: LatticeKind, p_bond: f64) -> Result<f64> {
    let d = coordination(kind)?;
    let omega = -1.0 + (2.0 + 2.0 * p_bond).sqrt();
    Ok(kt_from_tanh(omega.powi(d as i32)))
}

pub fn tcrit_zero_field(kind: LatticeKind) -> Result<f64> {
    tcrit_zero_field_with(kind, ThresholdTable::default().get(kind, PercolationMode::Bond)?)
}

/// Entangled fraction of a bond between two degree-`d` sites at `(kT, θ)`.
///
/// At `θ = π/2` every temperature gives a product bond.
pub fn pe_at(kt: f64, theta: f64, d: usize) -> Result<f64> {
    if theta >= FRAC_PI_2 {
        return Ok(0.0);
    }
    Ok(build_ensemble(ModelParams::from_kt(kt, theta)?, d, d)?.p_e)
}

/// Temperature at which the bond entangled fraction falls to `p_bond`,
/// by bisection in `kT`.
pub fn tcrit_general_with(theta: f64, kind: LatticeKind, p_bond: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::OutOfRange(format!("theta = {theta} outside [0, pi/2]")));
    }
    if theta >= FRAC_PI_2 {
        return Ok(0.0);
    }
    let d = coordination(kind)?;
    let f = |kt: f64| pe_at(kt, theta, d).map(|p| p - p_bond);
    let (mut lo, mut hi) = (0.0, 1.0);
    let flo = f(lo)?;
    let mut fhi = f(hi)?;
    while fhi >= 0.0 && hi < TCRIT_KT_MAX {
        lo = hi;
        hi *= 2.0;
        fhi = f(hi)?;
    }
    if flo < 0.0 || fhi >= 0.0 {
        return Err(Error::NotBracketed { lo: 0.0, hi, flo, fhi });
    }
    while hi - lo > TCRIT_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn tcrit_general(theta: f64, kind: LatticeKind) -> Result<f64> {
    tcrit_general_with(theta, kind, ThresholdTable::default().get(kind, PercolationMode::Bond)?)
}

/// Single-site statistics of the filtering measurement
/// `M₀ = √(1 − tan²φ)|0⟩⟨0|`, `M₁ = tan φ|0⟩⟨0| + |1⟩⟨1|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub cos2phi: f64,
    pub p1: f64,
    pub p0: f64,
    /// Inverse temperature of the filtered `θ = 0` state; infinite at `T = 0`.
    pub beta_prime: f64,
}

impl FilterOutcome {
    /// `tanh(β′/2)`.
    pub fn tanh_half_beta_prime(&self) -> f64 {
        (0.5 * self.beta_prime).tanh()
    }

    pub fn kt_prime(&self) -> f64 {
        1.0 / self.beta_prime
    }

    /// `√(1 − tan²φ)` and `tan φ`.
    pub fn kraus_weights(&self) -> (f64, f64) {
        let c = self.cos2phi;
        let tan_sq = (1.0 - c) / (1.0 + c);
        ((1.0 - tan_sq).max(0.0).sqrt(), tan_sq.sqrt())
    }
}

pub fn filter_map(params: ModelParams) -> Result<FilterOutcome> {
    params.validate()?;
    let t = params.tanh_half_beta();
    let (s, c) = params.theta.sin_cos();
    let ts = t * s;
    let t_prime = if c == 0.0 { 0.0 } else { t * c / (1.0 - ts * ts).sqrt() };
    let beta_prime = if t_prime >= 1.0 { f64::INFINITY } else { 2.0 * t_prime.atanh() };
    Ok(FilterOutcome {
        cos2phi: ts,
        p1: 1.0 - ts,
        p0: ts,
        beta_prime,
    })
}

/// Dephasing strength `tanh(β/2) sin θ`, and whether it lies outside the
/// channel's meaningful range `[0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingEstimate {
    pub p: f64,
    pub beyond_range: bool,
}

pub fn dephasing_p(params: ModelParams) -> Result<DephasingEstimate> {
    params.validate()?;
    let p = params.tanh_half_beta() * params.theta.sin();
    Ok(DephasingEstimate { p, beyond_range: p >= 0.5 })
}

/// Dephasing probability of an ideal cluster state that reproduces the
/// filtered, flipped and discarded state exactly: each decoupled spin ends at
/// `x = t′(1 − t sin θ)`, so `p = (1 − x)/2`.
pub fn effective_dephasing_p(params: ModelParams) -> Result<f64> {
    let f = filter_map(params)?;
    Ok(0.5 * (1.0 - f.tanh_half_beta_prime() * f.p1))
}

/// `kT` of the `θ = 0` thermal state whose per-qubit dephasing equals `p`.
pub fn tc_dephasing(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::OutOfRange(format!("dephasing p = {p} outside (0, 1/2)")));
    }
    Ok(1.0 / (1.0 / p - 1.0).ln())
}

fn bisect_tanh(mut f: impl FnMut(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Highest `kT` at which the effective dephasing stays below `p_c`, or `None`
/// when even the ground state exceeds it.
pub fn q_boundary(theta: f64, p_c: f64) -> Result<Option<f64>> {
    let target = 1.0 - 2.0 * p_c;
    let (s, c) = theta.sin_cos();
    let x_eff = |t: f64| t * c * ((1.0 - t * s) / (1.0 + t * s)).sqrt();
    if !(x_eff(1.0) > target) {
        return Ok(None);
    }
    Ok(Some(kt_from_tanh(bisect_tanh(x_eff, target))))
}

/// Temperature window `[min, max)` in which filtering leaves a percolating
/// `θ = 0` state colder than the dephasing threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPrimeWindow {
    pub kt_min: f64,
    pub kt_max: f64,
}

pub fn qprime_window(theta: f64, p_c: f64, p_site: f64) -> Result<Option<QPrimeWindow>> {
    let target = 1.0 - 2.0 * p_c;
    let (s, c) = theta.sin_cos();
    if c == 0.0 {
        return Ok(None);
    }
    let t_prime = |t: f64| t * c / (1.0 - t * t * s * s).sqrt();
    let t_low = bisect_tanh(t_prime, target);
    let kt_max = kt_from_tanh(t_low);
    let kt_min = if s > 0.0 && (1.0 - p_site) / s < 1.0 {
        kt_from_tanh((1.0 - p_site) / s)
    } else {
        0.0
    };
    Ok((kt_min < kt_max).then_some(QPrimeWindow { kt_min, kt_max }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    C,
    Q,
    Qprime,
    Undetermined,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::C => "C",
            Region::Q => "Q",
            Region::Qprime => "Qprime",
            Region::Undetermined => "undetermined",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionThresholds {
    pub bond: f64,
    pub site: f64,
    pub dephasing: f64,
}

impl RegionThresholds {
    pub fn for_lattice(kind: LatticeKind, table: &ThresholdTable) -> Result<Self> {
        Ok(Self {
            bond: table.get(kind, PercolationMode::Bond)?,
            site: table.get(kind, PercolationMode::Site)?,
            dephasing: DEFAULT_DEPHASING_THRESHOLD,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEvidence {
    pub p_e: f64,
    pub p_dephasing: DephasingEstimate,
    pub p_dephasing_effective: f64,
    pub kt_prime: f64,
    pub p1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub kt: f64,
    pub theta: f64,
    pub region: Region,
    pub c: bool,
    pub q: bool,
    pub qprime: bool,
    pub evidence: RegionEvidence,
}

/// Evaluates every region condition at `(kT, θ)`; the label takes the first
/// satisfied condition in the order Q, Q′, C.
pub fn classify(kt: f64, theta: f64, kind: LatticeKind, th: &RegionThresholds) -> Result<RegionVerdict> {
    let params = ModelParams::from_kt(kt, theta)?;
    let d = coordination(kind)?;
    let p_e = pe_at(kt, theta, d)?;
    let filt = filter_map(params)?;
    let p_eff = effective_dephasing_p(params)?;
    let c = p_e < th.bond;
    let q = p_eff < th.dephasing;
    let qprime = filt.p1 > th.site && filt.kt_prime() < tc_dephasing(th.dephasing)?;
    let region = if q {
        Region::Q
    } else if qprime {
        Region::Qprime
    } else if c {
        Region::C
    } else {
        Region::Undetermined
    };
    Ok(RegionVerdict {
        kt,
        theta,
        region,
        c,
        q,
        qprime,
        evidence: RegionEvidence {
            p_e,
            p_dephasing: dephasing_p(params)?,
            p_dephasing_effective: p_eff,
            kt_prime: filt.kt_prime(),
            p1: filt.p1,
        },
    })
}

/// `CZ_L (⊗ ½(I + x X)) CZ_L`, the `θ = 0` thermal state with `tanh(β/2) = x`.
pub fn zero_field_state(oracle: &ExactReference, x: f64) -> Result<DenseOperator> {
    let single = DenseOperator::from_bloch([x, 0.0, 0.0]);
    let n = oracle.graph().n_sites();
    let product = (0..n).fold(DenseOperator::identity(0), |acc, _| acc.tensor(&single));
    oracle.cz_conjugate(&product)
}

fn real_diag(a: f64, b: f64) -> [[C64; 2]; 2] {
    [[C64::new(a, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(b, 0.0)]]
}

const PAULI_X: [[C64; 2]; 2] = [
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
];

fn stabilizer_conjugate(graph: &LatticeGraph, rho: &DenseOperator, site: usize) -> Result<DenseOperator> {
    let mut out = rho.conjugate_local(site, PAULI_X)?;
    for &j in graph.neighbors(site) {
        out = out.conjugate_local(j, real_diag(1.0, -1.0))?;
    }
    Ok(out)
}

/// One post-measurement branch of the filter; bit `i` of `mask` is set when
/// site `i` gave outcome `1`.
#[derive(Debug, Clone)]
pub struct FilterBranch {
    pub mask: usize,
    pub probability: f64,
    pub state: DenseOperator,
}

/// Exact filtering of the thermal state on a small graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterRecord {
    pub filter: FilterOutcome,
    /// Probability of outcome `0` at each site.
    pub site_p0: Vec<f64>,
    /// Largest deviation of a branch probability from the independent-site product.
    pub branch_product_error: f64,
    /// Largest trace distance between a branch and the `θ = 0` state at `β′`
    /// on the `1` sites with the `0` sites in `|0⟩`.
    pub branch_state_error: f64,
    /// Smallest expectation, over branches of weight above `1e-12`, of the
    /// induced-subgraph stabilizers on `1` sites and of `Z` on `0` sites.
    pub min_stabilizer: f64,
    /// `tanh(β/2)` of the state after flip-and-Z and discarding the record.
    pub x_effective: f64,
    /// Trace distance of the post-processed state to the `θ = 0` state at `x_effective`.
    pub dephased_vs_effective: f64,
    /// `1 − 2 tanh(β/2) sin θ`, the reference the dephasing-channel reading gives.
    pub x_literal: f64,
    /// Trace distance of the post-processed state to the `θ = 0` state at `x_literal`.
    pub dephased_vs_literal: f64,
}

/// Applies `M₀`/`M₁` at every site of the exact thermal state and returns all
/// `2^N` branches.
pub fn filter_branches(graph: &LatticeGraph, params: ModelParams, cap: usize) -> Result<Vec<FilterBranch>> {
    let oracle = ExactReference::new(graph).with_cap(cap);
    let rho = oracle.thermal_state(params)?;
    let (w0, w1) = filter_map(params)?.kraus_weights();
    let kraus = [real_diag(w0, 0.0), real_diag(w1, 1.0)];
    let mut level = vec![(0usize, rho)];
    for site in 0..graph.n_sites() {
        let mut next = Vec::with_capacity(level.len() * 2);
        for (mask, r) in level {
            for (bit, k) in kraus.iter().enumerate() {
                next.push((mask | (bit << site), r.conjugate_local(site, *k)?));
            }
        }
        level = next;
    }
    Ok(level
        .into_iter()
        .map(|(mask, r)| {
            let probability = r.trace().re;
            let state = if probability > 0.0 { r.scale(1.0 / probability) } else { r };
            FilterBranch { mask, probability, state }
        })
        .collect())
}

/// `tr(P ρ)` for a product `P` of single-qubit operators on distinct qubits.
fn pauli_expectation(rho: &DenseOperator, ops: &[(usize, [[C64; 2]; 2])]) -> Result<f64> {
    let mut m = rho.matrix().clone();
    let dim = rho.dim();
    for &(q, k) in ops {
        let bit = 1usize << q;
        for c in 0..dim {
            for r in (0..dim).filter(|r| r & bit == 0) {
                let (a, b) = (m[(r, c)], m[(r | bit, c)]);
                m[(r, c)] = k[0][0] * a + k[0][1] * b;
                m[(r | bit, c)] = k[1][0] * a + k[1][1] * b;
            }
        }
    }
    Ok(m.trace().re)
}

pub fn apply_filter_oracle(graph: &LatticeGraph, params: ModelParams, cap: usize) -> Result<FilterRecord> {
    let n = graph.n_sites();
    let oracle = ExactReference::new(graph).with_cap(cap);
    let filter = filter_map(params)?;
    let branches = filter_branches(graph, params, cap)?;
    let t_prime = filter.tanh_half_beta_prime();
    let z = real_diag(1.0, -1.0);

    let mut site_p0 = vec![0.0; n];
    let mut branch_product_error: f64 = 0.0;
    let mut branch_state_error: f64 = 0.0;
    let mut min_stabilizer = f64::INFINITY;
    let mut dephased = DenseOperator::zeros(n);
    for br in &branches {
        let ones = |i: usize| br.mask >> i & 1 == 1;
        for (i, p0) in site_p0.iter_mut().enumerate() {
            if !ones(i) {
                *p0 += br.probability;
            }
        }
        let product: f64 = (0..n).map(|i| if ones(i) { filter.p1 } else { filter.p0 }).product();
        branch_product_error = branch_product_error.max((br.probability - product).abs());
        if br.probability <= 1e-12 {
            continue;
        }

        let expected = (0..n).fold(DenseOperator::identity(0), |acc, i| {
            acc.tensor(&if ones(i) {
                DenseOperator::from_bloch([t_prime, 0.0, 0.0])
            } else {
                DenseOperator::from_bloch([0.0, 0.0, 1.0])
            })
        });
        let expected = oracle.cz_conjugate(&expected)?;
        branch_state_error =
            branch_state_error.max(DenseOperator::trace_distance(&br.state, &expected)?);

        for i in 0..n {
            let mut ops = Vec::new();
            if ones(i) {
                ops.push((i, PAULI_X));
                ops.extend(graph.neighbors(i).iter().filter(|&&j| ones(j)).map(|&j| (j, z)));
            } else {
                ops.push((i, z));
            }
            min_stabilizer = min_stabilizer.min(pauli_expectation(&br.state, &ops)?);
        }

        let mut r = br.state.clone();
        for i in (0..n).filter(|&i| !ones(i)) {
            r = r.add(&stabilizer_conjugate(graph, &r, i)?)?.scale(0.5);
        }
        dephased = dephased.add(&r.scale(br.probability))?;
    }

    let x_effective = t_prime * filter.p1;
    let x_literal = 1.0 - 2.0 * filter.p0;
    Ok(FilterRecord {
        filter,
        site_p0,
        branch_product_error,
        branch_state_error,
        min_stabilizer,
        x_effective,
        dephased_vs_effective: DenseOperator::trace_distance(
            &dephased,
            &zero_field_state(&oracle, x_effective)?,
        )?,
        x_literal,
        dephased_vs_literal: DenseOperator::trace_distance(
            &dephased,
            &zero_field_state(&oracle, x_literal)?,
        )?,
    })
}

/// Draws `shots` filter outcomes from the exact branch distribution and
/// returns the per-site frequency of outcome `0`; shot `k` uses stream `k`.
pub fn sample_filter_zero_frequency(branches: &[FilterBranch], n_sites: usize, shots: u64, seed: u64) -> Vec<f64> {
    let mut counts = vec![0u64; n_sites];
    for k in 0..shots {
        let u: f64 = shot_rng(seed, k).gen();
        let mut acc = 0.0;
        let mask = branches
            .iter()
            .find(|b| {
                acc += b.probability;
                u < acc
            })
            .unwrap_or_else(|| branches.last().expect("non-empty"))
            .mask;
        for (i, c) in counts.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *c += 1;
            }
        }
    }
    counts.iter().map(|&c| c as f64 / shots as f64).collect()
}
