//! Cluster statistics of sampled configurations and the simulability verdict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bond::bond_zero_field;
use crate::decomposition::{pe_zero_field, BondEnsemble, CzProduct};
use crate::error::{Error, Result};
use crate::lattice::{connected_clusters, threshold, LatticeGraph, LatticeKind, PercolationMode};
use crate::linalg::PureState;
use crate::sampler::{sample_configuration, shot_rng, BondConfiguration, EnsembleModel};

/// `p_e < p_c^bond` for the lattice; the threshold itself is not simulable.
pub fn is_simulable(p_e: f64, kind: LatticeKind) -> Result<bool> {
    Ok(is_simulable_with(p_e, threshold(kind, PercolationMode::Bond)?))
}

pub fn is_simulable_with(p_e: f64, p_c: f64) -> bool {
    p_e < p_c
}

/// Zero-field bond strength giving entangled fraction `p_e`, inverting
/// `p_e = (ω² + 2ω − 1)/2`.
pub fn omega_for_pe(p_e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(Error::OutOfRange(format!("p_e = {p_e} outside [0, 1]")));
    }
    Ok(-1.0 + (2.0 + 2.0 * p_e).sqrt())
}

/// Zero-field ensemble with entangled fraction `p_e` on every bond. At zero
/// field every posterior equals the prior, so entangled bonds are i.i.d.
pub fn zero_field_model(graph: &LatticeGraph, p_e: f64) -> Result<EnsembleModel> {
    let omega = omega_for_pe(p_e)?;
    let rho = bond_zero_field(omega)?;
    let mut ens = BondEnsemble::decompose(&rho, CzProduct::from_state(&PureState::two_qubit_cluster())?)?;
    debug_assert!((ens.p_e - pe_zero_field(omega)?).abs() < 1e-9 || p_e == 0.0);
    if p_e == 0.0 {
        ens.p_e = 0.0;
    }
    Ok(EnsembleModel::uniform(graph, ens))
}

/// Cluster summary of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotSummary {
    pub largest: usize,
    pub n_clusters: usize,
    /// `Σ_c |c|² / N`: size of the cluster holding a uniformly random site.
    pub chi: f64,
    /// `log₂(N · 2^{2·largest})`.
    pub log2_cost_bound: f64,
}

impl ShotSummary {
    pub fn from_config(graph: &LatticeGraph, config: &BondConfiguration) -> Result<Self> {
        let part = connected_clusters(graph, &config.entangled_mask())?;
        let n = graph.n_sites() as f64;
        let chi = part.sizes.iter().map(|&s| (s * s) as f64).sum::<f64>() / n;
        let largest = part.largest();
        Ok(Self {
            largest,
            n_clusters: part.n_clusters(),
            chi,
            log2_cost_bound: n.log2() + 2.0 * largest as f64,
        })
    }

    /// `N · 2^{2·largest}`, infinite once it leaves `f64` range.
    pub fn cost_bound(&self) -> f64 {
        self.log2_cost_bound.exp2()
    }
}

/// Mergeable per-run statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub n_sites: usize,
    pub shots: u64,
    pub sum_chi: f64,
    pub sum_chi_sq: f64,
    /// Largest cluster of every shot, in shot order.
    pub largest_cluster: Vec<usize>,
}

impl ClusterStats {
    pub fn empty(n_sites: usize) -> Self {
        Self {
            n_sites,
            shots: 0,
            sum_chi: 0.0,
            sum_chi_sq: 0.0,
            largest_cluster: Vec::new(),
        }
    }

    pub fn push(&mut self, s: &ShotSummary) {
        self.shots += 1;
        self.sum_chi += s.chi;
        self.sum_chi_sq += s.chi * s.chi;
        self.largest_cluster.push(s.largest);
    }

    /// Appends `other`, whose shots follow those of `self`.
    pub fn merge(mut self, other: Self) -> Result<Self> {
        if self.n_sites != other.n_sites {
            return Err(Error::LengthMismatch {
                expected: self.n_sites,
                got: other.n_sites,
            });
        }
        self.shots += other.shots;
        self.sum_chi += other.sum_chi;
        self.sum_chi_sq += other.sum_chi_sq;
        self.largest_cluster.extend(other.largest_cluster);
        Ok(self)
    }

    /// χ averaged over shots.
    pub fn mean_cluster_size(&self) -> f64 {
        self.sum_chi / self.shots as f64
    }

    pub fn mean_cluster_size_stderr(&self) -> f64 {
        let n = self.shots as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        let mean = self.sum_chi / n;
        let var = ((self.sum_chi_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    pub fn mean_largest(&self) -> f64 {
        self.largest_cluster.iter().sum::<usize>() as f64 / self.shots as f64
    }

    pub fn mean_largest_stderr(&self) -> f64 {
        let n = self.shots as f64;
        let mean = self.mean_largest();
        let var = self
            .largest_cluster
            .iter()
            .map(|&x| (x as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    }

    pub fn max_largest(&self) -> usize {
        self.largest_cluster.iter().copied().max().unwrap_or(0)
    }
}

/// Per-shot summaries in shot order; shot `k` uses stream `k` of `seed`.
pub fn shot_summaries(model: &EnsembleModel, shots: u64, seed: u64) -> Result<Vec<ShotSummary>> {
    (0..shots)
        .into_par_iter()
        .map(|k| {
            let mut rng = shot_rng(seed, k);
            let config = sample_configuration(model, &mut rng)?;
            ShotSummary::from_config(model.graph(), &config)
        })
        .collect()
}

pub fn gather_stats(model: &EnsembleModel, shots: u64, seed: u64) -> Result<ClusterStats> {
    if shots == 0 {
        return Err(Error::OutOfRange("shots must be at least 1".into()));
    }
    let mut stats = ClusterStats::empty(model.graph().n_sites());
    for s in shot_summaries(model, shots, seed)? {
        stats.push(&s);
    }
    Ok(stats)
}

/// Ordinary least squares `y ≈ slope·x + intercept`; returns the residual
/// sum of squares too.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ssr = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    (slope, intercept, ssr)
}

/// Fit of mean largest cluster against `log₂N` and against `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogScalingReport {
    pub n_sites: Vec<usize>,
    pub mean_largest: Vec<f64>,
    pub mean_largest_stderr: Vec<f64>,
    pub max_log2_cost_bound: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub residuals_log: Vec<f64>,
    pub ssr_log: f64,
    pub ssr_linear: f64,
    pub log_preferred: bool,
}

/// Runs the zero-field ensemble with entangled fraction `p_e` on each graph
/// and compares the two scaling models.
pub fn log_scaling_check(
    graphs: &[LatticeGraph],
    p_e: f64,
    shots: u64,
    seed: u64,
) -> Result<LogScalingReport> {
    if graphs.len() < 3 {
        return Err(Error::OutOfRange(format!(
            "need at least 3 lattice sizes, got {}",
            graphs.len()
        )));
    }
    for g in graphs {
        if let Ok(pc) = threshold(g.kind(), PercolationMode::Bond) {
            if !is_simulable_with(p_e, pc) {
                return Err(Error::OutOfRange(format!(
                    "p_e = {p_e} is not below the {} threshold {pc}",
                    g.kind()
                )));
            }
        }
    }
    let mut report = LogScalingReport {
        n_sites: Vec::new(),
        mean_largest: Vec::new(),
        mean_largest_stderr: Vec::new(),
        max_log2_cost_bound: Vec::new(),
        slope: 0.0,
        intercept: 0.0,
        residuals_log: Vec::new(),
        ssr_log: 0.0,
        ssr_linear: 0.0,
        log_preferred: false,
    };
    for g in graphs {
        let model = zero_field_model(g, p_e)?;
        let stats = gather_stats(&model, shots, seed)?;
        let n = g.n_sites();
        report.n_sites.push(n);
        report.mean_largest.push(stats.mean_largest());
        report.mean_largest_stderr.push(stats.mean_largest_stderr());
        report
            .max_log2_cost_bound
            .push((n as f64).log2() + 2.0 * stats.max_largest() as f64);
    }
    let logs: Vec<f64> = report.n_sites.iter().map(|&n| (n as f64).log2()).collect();
    let lins: Vec<f64> = report.n_sites.iter().map(|&n| n as f64).collect();
    let (slope, intercept, ssr_log) = linear_fit(&logs, &report.mean_largest);
    let (_, _, ssr_linear) = linear_fit(&lins, &report.mean_largest);
    report.residuals_log = logs
        .iter()
        .zip(&report.mean_largest)
        .map(|(x, y)| y - slope * x - intercept)
        .collect();
    report.slope = slope;
    report.intercept = intercept;
    report.ssr_log = ssr_log;
    report.ssr_linear = ssr_linear;
    report.log_preferred = ssr_log < ssr_linear;
    Ok(report)
}
