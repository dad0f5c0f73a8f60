//! Adaptive single-qubit measurement patterns run on sampled instances,
//! cluster by cluster, and an exact Born-rule oracle.
//!
//! Outcome `0` is the projector `(I + n̂·σ)/2` and outcome `1` is
//! `(I − n̂·σ)/2`, with `n̂ = (sin ϑ cos φ, sin ϑ sin φ, cos ϑ)`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ExactReference, ModelParams};
use crate::lattice::{connected_clusters, LatticeGraph};
use crate::linalg::{DenseOperator, PureState, C64};
use crate::sampler::{realize_selected, sample_configuration, shot_rng, EnsembleModel};

/// One measurement. The azimuthal angle changes sign when the outcomes of
/// the steps listed in `flip_if` have odd parity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub site: usize,
    pub polar: f64,
    pub azimuthal: f64,
    #[serde(default)]
    pub flip_if: Vec<usize>,
}

impl Step {
    pub fn azimuthal_given(&self, outcomes: &[u8]) -> f64 {
        let parity = self.flip_if.iter().fold(0u8, |p, &i| p ^ outcomes[i]);
        if parity == 1 {
            -self.azimuthal
        } else {
            self.azimuthal
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementPattern {
    pub steps: Vec<Step>,
}

impl MeasurementPattern {
    /// Accepts either a bare list of steps or `{"steps": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        if let Ok(steps) = serde_json::from_str::<Vec<Step>>(text) {
            return Ok(Self { steps });
        }
        serde_json::from_str(text).map_err(|e| Error::InvalidPattern(e.to_string()))
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        let mut seen = vec![false; n_sites];
        for (i, s) in self.steps.iter().enumerate() {
            if s.site >= n_sites {
                return Err(Error::InvalidPattern(format!(
                    "step {i} measures site {} of {n_sites}",
                    s.site
                )));
            }
            if std::mem::replace(&mut seen[s.site], true) {
                return Err(Error::InvalidPattern(format!("site {} measured twice", s.site)));
            }
            if let Some(&j) = s.flip_if.iter().find(|&&j| j >= i) {
                return Err(Error::InvalidPattern(format!(
                    "step {i} depends on step {j}, which is not earlier"
                )));
            }
            if !s.polar.is_finite() || !s.azimuthal.is_finite() {
                return Err(Error::InvalidPattern(format!("step {i} has a non-finite angle")));
            }
        }
        Ok(())
    }
}

/// `(|n̂+⟩, |n̂−⟩)` as amplitude pairs.
fn basis_vectors(polar: f64, azimuthal: f64) -> [[C64; 2]; 2] {
    let (c, s) = ((0.5 * polar).cos(), (0.5 * polar).sin());
    let e = C64::from_polar(1.0, azimuthal);
    [
        [C64::new(c, 0.0), e * s],
        [C64::new(s, 0.0), -e * c],
    ]
}

/// `⟨v|_q ψ` as a state on the remaining qubits (unnormalized).
fn contract(state: &PureState, q: usize, v: &[C64; 2]) -> Vec<C64> {
    let n = state.n_qubits();
    let low = (1usize << q) - 1;
    (0..1usize << (n - 1))
        .map(|r| {
            let base = (r & low) | ((r & !low) << 1);
            v[0].conj() * state.amplitude(base) + v[1].conj() * state.amplitude(base | (1 << q))
        })
        .collect()
}

/// Born probabilities of the two outcomes for qubit `q`.
pub fn outcome_probabilities(state: &PureState, q: usize, polar: f64, azimuthal: f64) -> [f64; 2] {
    let b = basis_vectors(polar, azimuthal);
    [0, 1].map(|k| contract(state, q, &b[k]).iter().map(|a| a.norm_sqr()).sum())
}

/// Measures qubit `q`, returning the outcome and the normalized state of the
/// remaining qubits (qubits above `q` shift down by one).
pub fn measure_site(
    state: &PureState,
    q: usize,
    polar: f64,
    azimuthal: f64,
    rng: &mut impl Rng,
) -> Result<(u8, PureState)> {
    if q >= state.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "qubit {q} of a {}-qubit state",
            state.n_qubits()
        )));
    }
    let b = basis_vectors(polar, azimuthal);
    let zero = contract(state, q, &b[0]);
    let p0: f64 = zero.iter().map(|a| a.norm_sqr()).sum();
    let u: f64 = rng.gen();
    let (bit, amps) = if u < p0 { (0, zero) } else { (1, contract(state, q, &b[1])) };
    Ok((bit, PureState::new(amps)?))
}

/// Outcomes and cluster bookkeeping of one shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// One bit per step; empty when the shot failed.
    pub outcomes: Vec<u8>,
    /// Sizes of all clusters of the sampled configuration.
    pub cluster_sizes: Vec<usize>,
    /// Cluster label of each step's site.
    pub step_clusters: Vec<usize>,
    /// `N · 2^{2·max|C_j|}`.
    pub cost: f64,
    /// Size of the measured cluster that exceeded the statevector cap.
    pub failed_cluster: Option<usize>,
}

impl ShotRecord {
    pub fn bitstring(&self) -> String {
        self.outcomes.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
    }
}

fn run_shot(
    model: &EnsembleModel,
    pattern: &MeasurementPattern,
    rng: &mut impl Rng,
    cap: usize,
) -> Result<ShotRecord> {
    let g = model.graph();
    let config = sample_configuration(model, rng)?;
    let part = connected_clusters(g, &config.entangled_mask())?;
    let largest = part.largest();
    let mut record = ShotRecord {
        outcomes: Vec::new(),
        cluster_sizes: part.sizes.clone(),
        step_clusters: pattern.steps.iter().map(|s| part.representative[s.site]).collect(),
        cost: (g.n_sites() as f64) * (2.0 * largest as f64).exp2(),
        failed_cluster: None,
    };
    let mut measured = vec![false; g.n_sites()];
    pattern.steps.iter().for_each(|s| measured[s.site] = true);
    let clusters = match realize_selected(model, &config, cap, |sites| sites.iter().any(|&s| measured[s])) {
        Ok(c) => c,
        Err(Error::CapExceeded { qubits, .. }) => {
            record.failed_cluster = Some(qubits);
            return Ok(record);
        }
        Err(e) => return Err(e),
    };
    let mut label_of = vec![usize::MAX; g.n_sites()];
    for (c, cl) in clusters.iter().enumerate() {
        cl.sites.iter().for_each(|&s| label_of[s] = c);
    }
    let mut live: Vec<(Vec<usize>, PureState)> =
        clusters.into_iter().map(|c| (c.sites, c.state)).collect();
    for step in &pattern.steps {
        let (sites, state) = &mut live[label_of[step.site]];
        let q = sites.iter().position(|&s| s == step.site).expect("site in its cluster");
        let phi = step.azimuthal_given(&record.outcomes);
        let (bit, post) = measure_site(state, q, step.polar, phi, rng)?;
        sites.remove(q);
        *state = post;
        record.outcomes.push(bit);
    }
    Ok(record)
}

/// Runs `shots` independent shots in parallel; shot `k` uses stream `k` of `seed`.
pub fn run_pattern(
    model: &EnsembleModel,
    pattern: &MeasurementPattern,
    shots: u64,
    seed: u64,
    cap: usize,
) -> Result<Vec<ShotRecord>> {
    pattern.validate(model.graph().n_sites())?;
    (0..shots)
        .into_par_iter()
        .map(|k| run_shot(model, pattern, &mut shot_rng(seed, k), cap))
        .collect()
}

/// Outcome histogram of the successful shots, normalized.
pub fn outcome_histogram(records: &[ShotRecord]) -> BTreeMap<String, f64> {
    let ok: Vec<&ShotRecord> = records.iter().filter(|r| r.failed_cluster.is_none()).collect();
    let mut out = BTreeMap::new();
    for r in &ok {
        *out.entry(r.bitstring()).or_insert(0.0) += 1.0;
    }
    out.values_mut().for_each(|v| *v /= ok.len() as f64);
    out
}

/// `P ρ P` for the single-qubit projector `P = |v⟩⟨v|` on qubit `q`.
fn project_qubit(rho: &DenseOperator, q: usize, v: &[C64; 2]) -> Result<DenseOperator> {
    let p = [
        [v[0] * v[0].conj(), v[0] * v[1].conj()],
        [v[1] * v[0].conj(), v[1] * v[1].conj()],
    ];
    rho.conjugate_local(q, p)
}

/// Exact adaptive outcome distribution from the thermal density operator,
/// expanding every branch of the feed-forward.
pub fn born_exact(
    graph: &LatticeGraph,
    params: ModelParams,
    pattern: &MeasurementPattern,
    cap: usize,
) -> Result<BTreeMap<String, f64>> {
    pattern.validate(graph.n_sites())?;
    let rho = ExactReference::new(graph).with_cap(cap).thermal_state(params)?;
    born_from_state(&rho, pattern)
}

/// Exact adaptive outcome distribution for an arbitrary density operator.
pub fn born_from_state(rho: &DenseOperator, pattern: &MeasurementPattern) -> Result<BTreeMap<String, f64>> {
    pattern.validate(rho.n_qubits())?;
    let mut out = BTreeMap::new();
    let mut stack = vec![(rho.clone(), Vec::<u8>::new())];
    while let Some((r, outcomes)) = stack.pop() {
        let i = outcomes.len();
        if i == pattern.steps.len() {
            let p = r.trace().re;
            let key: String = outcomes.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect();
            out.insert(key, p);
            continue;
        }
        let step = &pattern.steps[i];
        let basis = basis_vectors(step.polar, step.azimuthal_given(&outcomes));
        for (bit, v) in basis.iter().enumerate() {
            let branch = project_qubit(&r, step.site, v)?;
            if branch.trace().re <= 1e-300 {
                continue;
            }
            let mut next = outcomes.clone();
            next.push(bit as u8);
            stack.push((branch, next));
        }
    }
    Ok(out)
}

/// `½ Σ |p − q|` over outcome strings.
pub fn outcome_tvd(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
