//! Bond-by-bond posterior sampling of pure PEPS configurations, conditioned
//! on every site projection succeeding, plus enumeration oracles.
//!
//! Each bond member is `|a⟩⊗|b⟩` or `CZ(|a⟩⊗|b⟩)`. The CZ is diagonal, so
//! success probabilities of the site maps depend only on the Z-diagonals
//! `(|q_0|², |q_1|²)` of the slot states: a site succeeds with probability
//! `Π_k q_k(0) + Π_k q_k(1)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{build_ensemble, z_diagonal, BondEnsemble, Qubit};
use crate::error::{Error, Result};
use crate::exact::ModelParams;
use crate::lattice::{connected_clusters, LatticeGraph};
use crate::linalg::{DenseOperator, PureState, C64};

/// Default limit on the number of configurations the oracle enumerates.
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// Default limit on qubits in a realized cluster state.
pub const DEFAULT_STATEVECTOR_CAP: usize = 24;

/// Z-diagonal of a single-qubit slot state.
pub type Diag = [f64; 2];

/// Member table of one bond: weights and slot diagonals for each side.
#[derive(Debug, Clone)]
struct MemberTable {
    weights: Vec<f64>,
    diag_a: Vec<Diag>,
    diag_b: Vec<Diag>,
    prior_a: Diag,
    prior_b: Diag,
}

impl MemberTable {
    fn new(ens: &BondEnsemble) -> Self {
        let mut weights = vec![ens.p_e];
        let mut diag_a = vec![z_diagonal(&ens.entangled.a)];
        let mut diag_b = vec![z_diagonal(&ens.entangled.b)];
        for t in &ens.product_terms {
            weights.push((1.0 - ens.p_e) * t.weight);
            diag_a.push(z_diagonal(&t.a));
            diag_b.push(z_diagonal(&t.b));
        }
        let marginal = |diags: &[Diag]| {
            let mut m = [0.0; 2];
            for (w, d) in weights.iter().zip(diags) {
                m[0] += w * d[0];
                m[1] += w * d[1];
            }
            m
        };
        let prior_a = marginal(&diag_a);
        let prior_b = marginal(&diag_b);
        Self {
            weights,
            diag_a,
            diag_b,
            prior_a,
            prior_b,
        }
    }
}

/// A graph with one bond ensemble per bond.
#[derive(Debug, Clone)]
pub struct EnsembleModel {
    graph: LatticeGraph,
    ensembles: Vec<Arc<BondEnsemble>>,
    tables: Vec<Arc<MemberTable>>,
}

impl EnsembleModel {
    /// Thermal ensembles, one per distinct pair of endpoint degrees.
    pub fn thermal(graph: &LatticeGraph, params: ModelParams) -> Result<Self> {
        let mut cache: BTreeMap<(usize, usize), Arc<BondEnsemble>> = BTreeMap::new();
        let mut ensembles = Vec::with_capacity(graph.n_bonds());
        for &(a, b) in graph.bonds() {
            let key = (graph.degree(a), graph.degree(b));
            let ens = match cache.get(&key) {
                Some(e) => e.clone(),
                None => {
                    let e = Arc::new(build_ensemble(params, key.0, key.1)?);
                    cache.insert(key, e.clone());
                    e
                }
            };
            ensembles.push(ens);
        }
        Ok(Self::from_shared(graph, ensembles))
    }

    /// The same ensemble on every bond.
    pub fn uniform(graph: &LatticeGraph, ensemble: BondEnsemble) -> Self {
        let e = Arc::new(ensemble);
        Self::from_shared(graph, vec![e; graph.n_bonds()])
    }

    /// One ensemble per bond, in bond order.
    pub fn per_bond(graph: &LatticeGraph, ensembles: Vec<BondEnsemble>) -> Result<Self> {
        if ensembles.len() != graph.n_bonds() {
            return Err(Error::LengthMismatch {
                expected: graph.n_bonds(),
                got: ensembles.len(),
            });
        }
        Ok(Self::from_shared(graph, ensembles.into_iter().map(Arc::new).collect()))
    }

    fn from_shared(graph: &LatticeGraph, ensembles: Vec<Arc<BondEnsemble>>) -> Self {
        let mut tables: Vec<Arc<MemberTable>> = Vec::with_capacity(ensembles.len());
        for (k, e) in ensembles.iter().enumerate() {
            let reuse = (0..k).rev().take(8).find(|&j| Arc::ptr_eq(&ensembles[j], e));
            tables.push(match reuse {
                Some(j) => tables[j].clone(),
                None => Arc::new(MemberTable::new(e)),
            });
        }
        Self {
            graph: graph.clone(),
            ensembles,
            tables,
        }
    }

    pub fn graph(&self) -> &LatticeGraph {
        &self.graph
    }

    pub fn ensemble(&self, bond: usize) -> &BondEnsemble {
        &self.ensembles[bond]
    }

    /// Number of members of each bond, including a zero-weight entangled slot.
    pub fn member_counts(&self) -> Vec<usize> {
        self.tables.iter().map(|t| t.weights.len()).collect()
    }

    /// Qubit states `(a, b)` of member `m` of `bond`.
    pub fn member_states(&self, bond: usize, m: usize) -> (Qubit, Qubit) {
        let e = &self.ensembles[bond];
        if m == 0 {
            (e.entangled.a, e.entangled.b)
        } else {
            let t = &e.product_terms[m - 1];
            (t.a, t.b)
        }
    }
}

/// Member index per bond: `0` is the entangled member, `μ ≥ 1` product term `μ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BondConfiguration(pub Vec<usize>);

impl BondConfiguration {
    pub fn entangled_mask(&self) -> Vec<bool> {
        self.0.iter().map(|&m| m == 0).collect()
    }

    pub fn mask_string(&self) -> String {
        self.0.iter().map(|&m| if m == 0 { '1' } else { '0' }).collect()
    }
}

/// State of one virtual slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    Empty,
    Assigned { diag: Diag, entangled: bool },
}

/// Virtual slots of every bond, side `a` then side `b`.
#[derive(Debug, Clone)]
pub struct VirtualRegister {
    slots: Vec<[Slot; 2]>,
}

impl VirtualRegister {
    pub fn empty(n_bonds: usize) -> Self {
        Self {
            slots: vec![[Slot::Empty; 2]; n_bonds],
        }
    }

    pub fn slot(&self, bond: usize, side: usize) -> Slot {
        self.slots[bond][side]
    }

    fn assign(&mut self, bond: usize, a: Diag, b: Diag, entangled: bool) {
        debug_assert!(matches!(self.slots[bond], [Slot::Empty, Slot::Empty]));
        self.slots[bond] = [
            Slot::Assigned { diag: a, entangled },
            Slot::Assigned { diag: b, entangled },
        ];
    }

    pub fn is_full(&self) -> bool {
        self.slots
            .iter()
            .all(|s| s.iter().all(|x| matches!(x, Slot::Assigned { .. })))
    }
}

/// `Π_k d_k(0) + Π_k d_k(1)`: success probability of `A` on slots with the
/// given Z-diagonals.
pub fn site_success_prob(slots: &[Diag]) -> f64 {
    let (mut p0, mut p1) = (1.0, 1.0);
    for d in slots {
        p0 *= d[0];
        p1 *= d[1];
    }
    p0 + p1
}

/// `tr[A ρ A†]` for a density operator on the `d` slots of one site.
pub fn site_success_prob_operator(rho: &DenseOperator) -> f64 {
    let all = rho.dim() - 1;
    (rho.get(0, 0) + rho.get(all, all)).re
}

/// Per-site products `(Π d(0), Π d(1))` over the slots of `site` other than
/// `skip`, using the bond marginal for empty slots.
fn context(model: &EnsembleModel, reg: &VirtualRegister, site: usize, skip: usize) -> Diag {
    let (mut p0, mut p1) = (1.0, 1.0);
    for &k in model.graph.incident_bonds(site) {
        if k == skip {
            continue;
        }
        let side = if model.graph.bonds()[k].0 == site { 0 } else { 1 };
        let d = match reg.slots[k][side] {
            Slot::Assigned { diag, .. } => diag,
            Slot::Empty => {
                let t = &model.tables[k];
                if side == 0 {
                    t.prior_a
                } else {
                    t.prior_b
                }
            }
        };
        p0 *= d[0];
        p1 *= d[1];
    }
    [p0, p1]
}

fn likelihood(ctx: Diag, d: Diag) -> f64 {
    ctx[0] * d[0] + ctx[1] * d[1]
}

/// Posterior member probabilities of `bond` given the register.
pub fn posterior_bond_dist(model: &EnsembleModel, reg: &VirtualRegister, bond: usize) -> Result<Vec<f64>> {
    let (a, b) = model.graph.bonds()[bond];
    let ctx_a = context(model, reg, a, bond);
    let ctx_b = context(model, reg, b, bond);
    let t = &model.tables[bond];
    let mut post: Vec<f64> = (0..t.weights.len())
        .map(|m| t.weights[m] * likelihood(ctx_a, t.diag_a[m]) * likelihood(ctx_b, t.diag_b[m]))
        .collect();
    let z: f64 = post.iter().sum();
    if !(z > 0.0) {
        return Err(Error::ZeroNormalizer(format!("bond {bond}")));
    }
    debug_assert!(
        {
            let factorized = likelihood(ctx_a, t.prior_a) * likelihood(ctx_b, t.prior_b);
            (z - factorized).abs() <= 1e-9 * factorized.max(1e-300)
        },
        "bond {bond}: Z-diagonal of the bond is not a product"
    );
    post.iter_mut().for_each(|p| *p /= z);
    Ok(post)
}

fn draw(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Per-shot generator: the master seed picks the key, the shot index the stream.
pub fn shot_rng(master_seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(shot);
    rng
}

/// Samples one configuration visiting bonds in `order`.
pub fn sample_configuration_in_order(
    model: &EnsembleModel,
    order: &[usize],
    rng: &mut impl Rng,
) -> Result<BondConfiguration> {
    let n = model.graph.n_bonds();
    let mut reg = VirtualRegister::empty(n);
    let mut choice = vec![usize::MAX; n];
    for &k in order {
        let post = posterior_bond_dist(model, &reg, k)?;
        let m = draw(rng, &post);
        let t = &model.tables[k];
        reg.assign(k, t.diag_a[m], t.diag_b[m], m == 0);
        choice[k] = m;
    }
    if choice.contains(&usize::MAX) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: order.len(),
        });
    }
    Ok(BondConfiguration(choice))
}

/// Samples one configuration in lexicographic bond order.
pub fn sample_configuration(model: &EnsembleModel, rng: &mut impl Rng) -> Result<BondConfiguration> {
    sample_configuration_in_order(model, &model.graph.lexicographic_bond_order(), rng)
}

fn enumerate(
    model: &EnsembleModel,
    mut visit: impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    let live: Vec<Vec<usize>> = model
        .tables
        .iter()
        .map(|t| (0..t.weights.len()).filter(|&m| t.weights[m] > 0.0).collect())
        .collect();
    let total: f64 = live.iter().map(|l| l.len() as f64).product();
    if total > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(total));
    }
    let n = live.len();
    let mut idx = vec![0usize; n];
    let mut config: Vec<usize> = live.iter().map(|l| l[0]).collect();
    loop {
        visit(&config)?;
        let mut k = 0;
        loop {
            if k == n {
                return Ok(());
            }
            idx[k] += 1;
            if idx[k] < live[k].len() {
                config[k] = live[k][idx[k]];
                break;
            }
            idx[k] = 0;
            config[k] = live[k][0];
            k += 1;
        }
    }
}

/// Exact posterior over all configurations. Each likelihood is the squared
/// norm of `⊗_sites A` applied to the full virtual product state, evaluated
/// through the physical amplitudes `Π_bonds ⟨x_a x_b|member⟩`.
pub fn exact_configuration_dist(
    model: &EnsembleModel,
    cap: usize,
) -> Result<BTreeMap<BondConfiguration, f64>> {
    let g = &model.graph;
    let n = g.n_sites();
    if n > cap {
        return Err(Error::CapExceeded { qubits: n, cap });
    }
    let mut out = BTreeMap::new();
    let mut total = 0.0;
    enumerate(model, |config| {
        let mut prior = 1.0;
        let mut amps: Vec<[C64; 4]> = Vec::with_capacity(config.len());
        for (k, &m) in config.iter().enumerate() {
            prior *= model.tables[k].weights[m];
            let (a, b) = model.member_states(k, m);
            let mut t = [a[0] * b[0], a[1] * b[0], a[0] * b[1], a[1] * b[1]];
            if m == 0 {
                t[3] = -t[3];
            }
            amps.push(t);
        }
        let mut norm = 0.0;
        for x in 0..1usize << n {
            let mut amp = C64::new(1.0, 0.0);
            for (&(a, b), t) in g.bonds().iter().zip(&amps) {
                amp *= t[((x >> a) & 1) | (((x >> b) & 1) << 1)];
            }
            norm += amp.norm_sqr();
        }
        let p = prior * norm;
        total += p;
        out.insert(BondConfiguration(config.to_vec()), p);
        Ok(())
    })?;
    if !(total > 0.0) {
        return Err(Error::ZeroNormalizer("no configuration survives projection".into()));
    }
    out.values_mut().for_each(|p| *p /= total);
    Ok(out)
}

/// Exact output distribution of the sequential sampler in `order`, obtained
/// by multiplying posteriors along every path.
pub fn sequential_configuration_dist(
    model: &EnsembleModel,
    order: &[usize],
) -> Result<BTreeMap<BondConfiguration, f64>> {
    let mut out = BTreeMap::new();
    enumerate(model, |config| {
        let mut reg = VirtualRegister::empty(config.len());
        let mut p = 1.0;
        for &k in order {
            let post = posterior_bond_dist(model, &reg, k)?;
            let m = config[k];
            p *= post[m];
            if p == 0.0 {
                break;
            }
            let t = &model.tables[k];
            reg.assign(k, t.diag_a[m], t.diag_b[m], m == 0);
        }
        out.insert(BondConfiguration(config.to_vec()), p);
        Ok(())
    })?;
    Ok(out)
}

/// A connected cluster and its normalized pure state; local qubit `i` is
/// `sites[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub sites: Vec<usize>,
    pub state: PureState,
}

/// Applies every site map to the chosen members and splits the result into
/// per-cluster pure states over the entangled-bond mask.
pub fn realize_state(
    model: &EnsembleModel,
    config: &BondConfiguration,
    cap: usize,
) -> Result<Vec<ClusterState>> {
    realize_selected(model, config, cap, |_| true)
}

/// Like [`realize_state`] but only builds clusters whose site list satisfies
/// `want`; the cap applies to those clusters alone.
pub fn realize_selected(
    model: &EnsembleModel,
    config: &BondConfiguration,
    cap: usize,
    want: impl Fn(&[usize]) -> bool,
) -> Result<Vec<ClusterState>> {
    let g = &model.graph;
    if config.0.len() != g.n_bonds() {
        return Err(Error::LengthMismatch {
            expected: g.n_bonds(),
            got: config.0.len(),
        });
    }
    let mask = config.entangled_mask();
    let partition = connected_clusters(g, &mask)?;
    let members: Vec<Vec<usize>> = partition
        .members()
        .into_iter()
        .filter(|sites| want(sites))
        .collect();
    if let Some(big) = members.iter().map(Vec::len).filter(|&n| n > cap).max() {
        return Err(Error::CapExceeded { qubits: big, cap });
    }
    let mut site_vec = vec![[C64::new(1.0, 0.0); 2]; g.n_sites()];
    for (k, (&(a, b), &m)) in g.bonds().iter().zip(&config.0).enumerate() {
        let (qa, qb) = model.member_states(k, m);
        for x in 0..2 {
            site_vec[a][x] *= qa[x];
            site_vec[b][x] *= qb[x];
        }
    }
    cluster_states(g, members, &mask, &site_vec)
}

fn cluster_states(
    g: &LatticeGraph,
    members: Vec<Vec<usize>>,
    entangled: &[bool],
    site_vec: &[[C64; 2]],
) -> Result<Vec<ClusterState>> {
    const NONE: usize = usize::MAX;
    let mut label = vec![NONE; g.n_sites()];
    let mut local = vec![0usize; g.n_sites()];
    for (c, sites) in members.iter().enumerate() {
        for (i, &s) in sites.iter().enumerate() {
            label[s] = c;
            local[s] = i;
        }
    }
    let mut inner_bonds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); members.len()];
    for (&(a, b), &on) in g.bonds().iter().zip(entangled) {
        if on && label[a] != NONE {
            inner_bonds[label[a]].push((local[a], local[b]));
        }
    }
    members
        .into_iter()
        .zip(inner_bonds)
        .map(|(sites, bonds)| {
            let dim = 1usize << sites.len();
            let amps: Vec<C64> = (0..dim)
                .map(|x| {
                    let mut amp = C64::new(1.0, 0.0);
                    for (i, &s) in sites.iter().enumerate() {
                        amp *= site_vec[s][(x >> i) & 1];
                    }
                    let parity = bonds.iter().filter(|&&(i, j)| (x >> i) & (x >> j) & 1 == 1).count();
                    if parity % 2 == 1 {
                        -amp
                    } else {
                        amp
                    }
                })
                .collect();
            Ok(ClusterState {
                sites,
                state: PureState::new(amps)?,
            })
        })
        .collect()
}

/// `⊗_clusters |ψ_c⟩` as an `n`-qubit state in global site order.
pub fn assemble_state(clusters: &[ClusterState], n: usize) -> Result<PureState> {
    let amps: Vec<C64> = (0..1usize << n)
        .map(|x| {
            clusters.iter().fold(C64::new(1.0, 0.0), |acc, c| {
                let idx = c
                    .sites
                    .iter()
                    .enumerate()
                    .fold(0usize, |i, (q, &s)| i | (((x >> s) & 1) << q));
                acc * c.state.amplitude(idx)
            })
        })
        .collect();
    PureState::new(amps)
}

/// `Σ_config p(config) |ψ_config⟩⟨ψ_config|` over an explicit distribution.
pub fn mixture_from_dist(
    model: &EnsembleModel,
    dist: &BTreeMap<BondConfiguration, f64>,
    cap: usize,
) -> Result<DenseOperator> {
    let n = model.graph.n_sites();
    let mut rho = DenseOperator::zeros(n);
    for (config, &p) in dist {
        if p == 0.0 {
            continue;
        }
        let state = assemble_state(&realize_state(model, config, cap)?, n)?;
        rho = rho.add(&state.density().scale(p))?;
    }
    Ok(rho)
}

/// `½ Σ |p − q|` over the union of supports.
pub fn total_variation(
    p: &BTreeMap<BondConfiguration, f64>,
    q: &BTreeMap<BondConfiguration, f64>,
) -> f64 {
    let mut tv = 0.0;
    for (k, &a) in p {
        tv += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &b) in q {
        if !p.contains_key(k) {
            tv += b.abs();
        }
    }
    0.5 * tv
}

/// Empirical configuration frequencies from `shots` seeded shots in `order`.
pub fn empirical_dist(
    model: &EnsembleModel,
    order: &[usize],
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<BondConfiguration, f64>> {
    use rayon::prelude::*;
    let counts = (0..shots)
        .into_par_iter()
        .map(|k| {
            let mut rng = shot_rng(seed, k);
            sample_configuration_in_order(model, order, &mut rng)
        })
        .try_fold(BTreeMap::new, |mut acc: BTreeMap<BondConfiguration, u64>, c| {
            *acc.entry(c?).or_insert(0) += 1;
            Ok::<_, Error>(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })?;
    Ok(counts
        .into_iter()
        .map(|(k, v)| (k, v as f64 / shots as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bond::{bond_sided, solve_bond_params};
    use crate::decomposition::{CzProduct, ProductTerm};
    use crate::exact::{ExactReference, DEFAULT_ORACLE_CAP};
    use crate::lattice::{build_lattice, Boundary, LatticeKind};

    fn chain(n: usize) -> LatticeGraph {
        build_lattice(LatticeKind::Chain, &[n], Boundary::Open).unwrap()
    }

    fn square22() -> LatticeGraph {
        build_lattice(LatticeKind::Square, &[2, 2], Boundary::Open).unwrap()
    }

    fn random_diag(rng: &mut impl Rng) -> Diag {
        let p: f64 = rng.gen();
        [p, 1.0 - p]
    }

    fn diag_op(d: Diag) -> DenseOperator {
        DenseOperator::from_real_rows(2, &[d[0], 0.0, 0.0, d[1]]).unwrap()
    }

    #[test]
    fn success_probability_examples() {
        assert_eq!(site_success_prob(&[[1.0, 0.0]; 3]), 1.0);
        assert_eq!(site_success_prob(&[[1.0, 0.0], [0.0, 1.0]]), 0.0);
        assert_eq!(site_success_prob(&[[0.5, 0.5]; 2]), 0.5);
        assert_eq!(site_success_prob_operator(&DenseOperator::maximally_mixed(2)), 0.5);
    }

    #[test]
    fn joint_success_factorizes_with_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let params = ModelParams::new(rng.gen_range(0.1..5.0), rng.gen_range(0.0..1.5)).unwrap();
            let (di, dj) = (rng.gen_range(1..5usize), rng.gen_range(1..5usize));
            let bond = bond_sided(solve_bond_params(params, di).unwrap(), solve_bond_params(params, dj).unwrap());
            let rho0_i = bond.partial_trace(&[0]).unwrap();
            let rho0_j = bond.partial_trace(&[1]).unwrap();
            let ctx_i: Vec<Diag> = (1..di).map(|_| random_diag(&mut rng)).collect();
            let ctx_j: Vec<Diag> = (1..dj).map(|_| random_diag(&mut rng)).collect();
            // qubits: context of i, bond (i side, j side), context of j
            let mut full = DenseOperator::identity(0);
            for d in &ctx_i {
                full = full.tensor(&diag_op(*d));
            }
            full = full.tensor(&bond);
            for d in &ctx_j {
                full = full.tensor(&diag_op(*d));
            }
            let ones_i = (1usize << di) - 1;
            let mut joint = 0.0;
            for xi in 0..2 {
                for xj in 0..2 {
                    let idx = if xi == 1 { ones_i } else { 0 } | if xj == 1 { ((1usize << dj) - 1) << di } else { 0 };
                    joint += full.get(idx, idx).re;
                }
            }
            let diag0 = |r: &DenseOperator| [r.get(0, 0).re, r.get(1, 1).re];
            let mut si = ctx_i.clone();
            si.push(diag0(&rho0_i));
            let mut sj = ctx_j.clone();
            sj.push(diag0(&rho0_j));
            let product = site_success_prob(&si) * site_success_prob(&sj);
            assert!((joint - product).abs() < 1e-12, "{joint} vs {product}");
        }
    }

    #[test]
    fn three_site_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let params = ModelParams::new(rng.gen_range(0.1..5.0), rng.gen_range(0.0..1.5)).unwrap();
            let p = |d| solve_bond_params(params, d).unwrap();
            // i - j - k with j of degree 2 and outer contexts of one slot each
            let b1 = bond_sided(p(2), p(2));
            let b2 = bond_sided(p(2), p(2));
            let (ci, ck) = (random_diag(&mut rng), random_diag(&mut rng));
            let full = diag_op(ci).tensor(&b1).tensor(&b2).tensor(&diag_op(ck));
            let mut joint = 0.0;
            for x in 0..8usize {
                let (xi, xj, xk) = (x & 1, (x >> 1) & 1, (x >> 2) & 1);
                let idx = (xi * 0b11) | (xj * 0b1100) | (xk * 0b110000);
                joint += full.get(idx, idx).re;
            }
            let m = |r: &DenseOperator, q| {
                let t = r.partial_trace(&[q]).unwrap();
                [t.get(0, 0).re, t.get(1, 1).re]
            };
            let product = site_success_prob(&[ci, m(&b1, 0)])
                * site_success_prob(&[m(&b1, 1), m(&b2, 0)])
                * site_success_prob(&[m(&b2, 1), ck]);
            assert!((joint - product).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_examples() {
        let g = chain(2);
        let pure = BondEnsemble {
            p_e: 1.0,
            entangled: CzProduct::from_state(&PureState::two_qubit_cluster()).unwrap(),
            product_terms: vec![],
        };
        let model = EnsembleModel::uniform(&g, pure);
        let post = posterior_bond_dist(&model, &VirtualRegister::empty(1), 0).unwrap();
        assert_eq!(post, vec![1.0]);

        let model = EnsembleModel::thermal(&g, ModelParams::new(1.0, 0.0).unwrap()).unwrap();
        let post = posterior_bond_dist(&model, &VirtualRegister::empty(1), 0).unwrap();
        let exact = exact_configuration_dist(&model, 12).unwrap();
        for (c, p) in &exact {
            assert!((post[c.0[0]] - p).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_product_terms_split_evenly() {
        let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let one = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let ens = BondEnsemble {
            p_e: 0.0,
            entangled: CzProduct { a: zero, b: zero },
            product_terms: vec![
                ProductTerm { weight: 0.5, a: zero, b: zero },
                ProductTerm { weight: 0.5, a: one, b: one },
            ],
        };
        let dist = exact_configuration_dist(&EnsembleModel::uniform(&chain(2), ens), 12).unwrap();
        let probs: Vec<f64> = dist.values().copied().collect();
        assert_eq!(probs.len(), 2);
        assert!(probs.iter().all(|p| (p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn sequential_sampler_is_exact() {
        let graphs = [chain(3), chain(4), square22(), LatticeGraph::star(3).unwrap()];
        for g in &graphs {
            for theta in [0.0, 0.3, 1.1] {
                let model = EnsembleModel::thermal(g, ModelParams::new(1.0, theta).unwrap()).unwrap();
                let joint = exact_configuration_dist(&model, 12).unwrap();
                let sum: f64 = joint.values().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                let lex = g.lexicographic_bond_order();
                let mut rev = lex.clone();
                rev.reverse();
                for order in [lex, rev] {
                    let seq = sequential_configuration_dist(&model, &order).unwrap();
                    for (c, p) in &joint {
                        assert!((seq[c] - p).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn configuration_mixture_is_the_thermal_state() {
        let graphs = [chain(3), chain(4), square22()];
        for g in &graphs {
            for (beta, theta) in [(1.0, 0.0), (1.0, 0.3), (2.5, 0.9)] {
                let params = ModelParams::new(beta, theta).unwrap();
                let model = EnsembleModel::thermal(g, params).unwrap();
                let dist = exact_configuration_dist(&model, 12).unwrap();
                let rho = mixture_from_dist(&model, &dist, 12).unwrap();
                let exact = ExactReference::new(g).thermal_state(params).unwrap();
                let d = DenseOperator::trace_distance(&rho, &exact).unwrap();
                assert!(d < 1e-9, "beta {beta} theta {theta}: {d:e}");
            }
        }
    }

    #[test]
    fn realize_examples() {
        let g = square22();
        let model = EnsembleModel::thermal(&g, ModelParams::new(1.0, 0.0).unwrap()).unwrap();
        let all = BondConfiguration(vec![0; g.n_bonds()]);
        let clusters = realize_state(&model, &all, 24).unwrap();
        assert_eq!(clusters.len(), 1);
        let cluster = ExactReference::new(&g).ground_state(0.0).unwrap();
        assert!(clusters[0].state.fidelity(&cluster) > 1.0 - 1e-12);
        let none = BondConfiguration(vec![1; g.n_bonds()]);
        assert_eq!(realize_state(&model, &none, 24).unwrap().len(), 4);
        assert!(matches!(realize_state(&model, &all, 3), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn extreme_ensembles() {
        let g = chain(4);
        let cold = EnsembleModel::thermal(&g, ModelParams::new(f64::INFINITY, 0.4).unwrap()).unwrap();
        let hot = EnsembleModel::thermal(&g, ModelParams::new(0.0, 0.4).unwrap()).unwrap();
        let mut rng = shot_rng(5, 0);
        for _ in 0..50 {
            assert!(sample_configuration(&cold, &mut rng).unwrap().0.iter().all(|&m| m == 0));
            assert!(sample_configuration(&hot, &mut rng).unwrap().0.iter().all(|&m| m != 0));
        }
    }

    #[test]
    fn entangled_posterior_is_p_e_at_zero_field() {
        let g = build_lattice(LatticeKind::Square, &[4, 4], Boundary::Periodic).unwrap();
        let model = EnsembleModel::thermal(&g, ModelParams::new(2.0, 0.0).unwrap()).unwrap();
        let p_e = model.ensemble(0).p_e;
        let mut rng = shot_rng(9, 0);
        let mut reg = VirtualRegister::empty(g.n_bonds());
        for k in g.lexicographic_bond_order() {
            let post = posterior_bond_dist(&model, &reg, k).unwrap();
            assert!((post[0] - p_e).abs() < 1e-12);
            let m = draw(&mut rng, &post);
            let t = &model.tables[k];
            reg.assign(k, t.diag_a[m], t.diag_b[m], m == 0);
        }
        assert!(reg.is_full());
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let g = square22();
        let model = EnsembleModel::thermal(&g, ModelParams::new(1.0, 0.3).unwrap()).unwrap();
        let order = g.lexicographic_bond_order();
        let a = empirical_dist(&model, &order, 2000, 42).unwrap();
        let b = empirical_dist(&model, &order, 2000, 42).unwrap();
        assert_eq!(a, b);
        let c = empirical_dist(&model, &order, 2000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unconditioned_sampling_disagrees_with_the_oracle() {
        let g = chain(3);
        let model = EnsembleModel::thermal(&g, ModelParams::new(1.0, 0.3).unwrap()).unwrap();
        let exact = exact_configuration_dist(&model, DEFAULT_ORACLE_CAP).unwrap();
        let mut naive = BTreeMap::new();
        enumerate(&model, |c| {
            let p: f64 = c.iter().enumerate().map(|(k, &m)| model.tables[k].weights[m]).product();
            naive.insert(BondConfiguration(c.to_vec()), p);
            Ok(())
        })
        .unwrap();
        assert!(total_variation(&exact, &naive) > 0.05);
    }

    #[test]
    fn empirical_frequencies_match_enumeration() {
        let g = chain(3);
        let model = EnsembleModel::thermal(&g, ModelParams::new(1.0, 0.0).unwrap()).unwrap();
        let exact = exact_configuration_dist(&model, 12).unwrap();
        let emp = empirical_dist(&model, &g.lexicographic_bond_order(), 200_000, 1).unwrap();
        let tv = total_variation(&exact, &emp);
        assert!(tv < 0.02, "TVD {tv}");
    }
}
