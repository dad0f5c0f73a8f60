use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use thermocluster::decomposition::{build_ensemble, Qubit};
use thermocluster::exact::{ModelParams, DEFAULT_ORACLE_CAP};
use thermocluster::lattice::{
    build_lattice, coordination, Boundary, LatticeGraph, LatticeKind, LatticeSpec, PercolationMode, ThresholdTable,
};
use thermocluster::measurement::{born_exact, outcome_histogram, outcome_tvd, run_pattern, MeasurementPattern};
use thermocluster::percolation::{gather_stats, is_simulable_with, shot_summaries, zero_field_model};
use thermocluster::regions::{
    classify, q_boundary, qprime_window, tcrit_general_with, tcrit_zero_field_with, RegionThresholds,
};
use thermocluster::sampler::{sample_configuration, shot_rng, EnsembleModel, DEFAULT_STATEVECTOR_CAP};
use thermocluster::Error;

use crate::cli::Common;
use crate::output::{Cell, Report};

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit code 2.
    Usage(String),
    /// The run itself failed or a check did not hold; exit code 1.
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnsupportedLattice(_)
            | Error::UnknownLattice(_)
            | Error::MissingThreshold { .. }
            | Error::NoCoordination
            | Error::OutOfRange(_)
            | Error::InvalidPattern(_)
            | Error::Parse(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn parse_dims(s: &str) -> CliResult<Vec<usize>> {
    s.split(['x', 'X', ','])
        .map(|p| p.trim().parse::<usize>().map_err(|e| CliError::Usage(format!("--dims `{s}`: {e}"))))
        .collect()
}

/// What `--lattice` named: a family (graph built from `--dims`) or a concrete graph.
pub enum LatticeArg {
    Kind(LatticeKind),
    Graph(LatticeGraph),
}

impl Common {
    pub fn lattice_arg(&self) -> CliResult<LatticeArg> {
        let Some(raw) = self.lattice.as_deref() else {
            return usage("--lattice is required");
        };
        let text = raw.trim();
        if text.starts_with('{') {
            return Ok(LatticeArg::Graph(parse_spec(text, "--lattice")?));
        }
        if Path::new(text).is_file() {
            let body = std::fs::read_to_string(text).map_err(|e| CliError::Usage(format!("{text}: {e}")))?;
            return if body.trim_start().starts_with('{') {
                Ok(LatticeArg::Graph(parse_spec(&body, text)?))
            } else {
                Ok(LatticeArg::Graph(LatticeGraph::parse_edge_list(&body)?))
            };
        }
        Ok(LatticeArg::Kind(text.parse()?))
    }

    pub fn kind(&self) -> CliResult<LatticeKind> {
        match self.lattice_arg()? {
            LatticeArg::Kind(k) => Ok(k),
            LatticeArg::Graph(g) => Ok(g.kind()),
        }
    }

    pub fn graph(&self) -> CliResult<LatticeGraph> {
        match self.lattice_arg()? {
            LatticeArg::Graph(g) => Ok(g),
            LatticeArg::Kind(kind) => {
                let Some(dims) = self.dims.as_deref() else {
                    return usage(format!("--dims is required for `{kind}`"));
                };
                let boundary = match self.boundary.as_deref() {
                    Some(b) => b.parse()?,
                    None => Boundary::default(),
                };
                Ok(build_lattice(kind, &parse_dims(dims)?, boundary)?)
            }
        }
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        let theta = self.theta.unwrap_or(0.0);
        let p = match (self.beta, self.kt) {
            (Some(b), None) => ModelParams::new(b, theta)?,
            (None, Some(kt)) => ModelParams::from_kt(kt, theta)?,
            (None, None) => return usage("one of --beta or --kt is required"),
            (Some(_), Some(_)) => return usage("--beta and --kt are mutually exclusive"),
        };
        Ok(p)
    }

    pub fn shots(&self, default: u64) -> CliResult<u64> {
        match self.shots.unwrap_or(default) {
            0 => usage("--shots must be at least 1"),
            n => Ok(n),
        }
    }

    pub fn thresholds(&self) -> CliResult<ThresholdTable> {
        let mut table = ThresholdTable::default();
        if self.pc_bond.is_some() || self.pc_site.is_some() {
            let kind = self.kind()?;
            if let Some(p) = self.pc_bond {
                table.set(kind, PercolationMode::Bond, p)?;
            }
            if let Some(p) = self.pc_site {
                table.set(kind, PercolationMode::Site, p)?;
            }
        }
        Ok(table)
    }

    pub fn region_thresholds(&self, kind: LatticeKind) -> CliResult<RegionThresholds> {
        let mut th = RegionThresholds::for_lattice(kind, &self.thresholds()?)?;
        if let Some(p) = self.pc {
            if !(p > 0.0 && p < 0.5) {
                return usage(format!("--pc {p} outside (0, 1/2)"));
            }
            th.dephasing = p;
        }
        Ok(th)
    }

    fn oracle_cap(&self) -> CliResult<usize> {
        cap(self.cap_oracle, DEFAULT_ORACLE_CAP, "--cap-oracle")
    }

    fn statevector_cap(&self) -> CliResult<usize> {
        cap(self.cap_statevector, DEFAULT_STATEVECTOR_CAP, "--cap-statevector")
    }

    /// Temperature in display units.
    fn show_kt(&self, kt: f64) -> Cell {
        Cell::F(kt * self.delta)
    }
}

fn cap(value: Option<usize>, default: usize, flag: &str) -> CliResult<usize> {
    match value.unwrap_or(default) {
        c if c < 2 => usage(format!("{flag} must be at least 2")),
        c => Ok(c),
    }
}

fn parse_spec(text: &str, origin: &str) -> CliResult<LatticeGraph> {
    let spec: LatticeSpec =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("{origin}: malformed JSON: {e}")))?;
    Ok(spec.build()?)
}

pub fn critical_temp(c: &Common) -> CliResult<Report> {
    let kind = c.kind()?;
    let p_bond = c.thresholds()?.get(kind, PercolationMode::Bond)?;
    let theta = c.theta.unwrap_or(0.0);
    let kt = if theta == 0.0 {
        tcrit_zero_field_with(kind, p_bond)?
    } else {
        tcrit_general_with(theta, kind, p_bond)?
    };
    let mut r = Report::new("critical-temp", &["lattice", "theta", "p_bond", "kt_crit"]);
    r.meta("delta", c.delta);
    r.row(vec![kind.name().into(), theta.into(), p_bond.into(), c.show_kt(kt)]);
    Ok(r)
}

pub fn phase_diagram(c: &Common, theta_steps: usize, grid: bool, kt_max: f64, kt_steps: usize) -> CliResult<Report> {
    let kind = if c.lattice.is_some() { c.kind()? } else { LatticeKind::Cubic };
    let th = c.region_thresholds(kind)?;
    if theta_steps == 0 || (grid && kt_steps == 0) {
        return usage("grid step counts must be positive");
    }
    if !(kt_max > 0.0) {
        return usage("--kt-max must be positive");
    }
    let thetas: Vec<f64> = (0..=theta_steps).map(|i| FRAC_PI_2 * i as f64 / theta_steps as f64).collect();
    if grid {
        let points: Vec<(f64, f64)> = (1..=kt_steps)
            .flat_map(|i| {
                let kt = kt_max * i as f64 / kt_steps as f64;
                thetas.iter().map(move |&t| (kt, t))
            })
            .collect();
        let verdicts: Vec<_> = points
            .par_iter()
            .map(|&(kt, theta)| classify(kt, theta, kind, &th))
            .collect::<Result<_, _>>()?;
        let mut r = Report::new(
            "phase-diagram",
            &[
                "kt", "theta", "region", "c", "q", "qprime", "p_e", "p_dephasing", "p_dephasing_beyond_range",
                "p_dephasing_effective", "kt_prime", "p1",
            ],
        );
        meta_thresholds(&mut r, kind, &th, c.delta);
        for v in verdicts {
            let e = v.evidence;
            r.row(vec![
                c.show_kt(v.kt),
                v.theta.into(),
                v.region.label().into(),
                v.c.into(),
                v.q.into(),
                v.qprime.into(),
                e.p_e.into(),
                e.p_dephasing.p.into(),
                e.p_dephasing.beyond_range.into(),
                e.p_dephasing_effective.into(),
                c.show_kt(e.kt_prime),
                e.p1.into(),
            ]);
        }
        return Ok(r);
    }
    let rows: Vec<_> = thetas
        .par_iter()
        .map(|&theta| -> CliResult<Vec<Cell>> {
            let tc = tcrit_general_with(theta, kind, th.bond)?;
            let q = q_boundary(theta, th.dephasing)?;
            let w = qprime_window(theta, th.dephasing, th.site)?;
            Ok(vec![
                theta.into(),
                c.show_kt(tc),
                q.map(|kt| kt * c.delta).into(),
                w.map(|w| w.kt_min * c.delta).into(),
                w.map(|w| w.kt_max * c.delta).into(),
            ])
        })
        .collect::<CliResult<_>>()?;
    let mut r = Report::new("phase-diagram", &["theta", "kt_crit_c", "kt_q", "kt_qprime_min", "kt_qprime_max"]);
    meta_thresholds(&mut r, kind, &th, c.delta);
    rows.into_iter().for_each(|row| r.row(row));
    Ok(r)
}

fn meta_thresholds(r: &mut Report, kind: LatticeKind, th: &RegionThresholds, delta: f64) {
    r.meta("lattice", kind.name());
    r.meta("p_bond", th.bond);
    r.meta("p_site", th.site);
    r.meta("p_dephasing_threshold", th.dephasing);
    r.meta("delta", delta);
}

pub fn sample(c: &Common) -> CliResult<Report> {
    let g = c.graph()?;
    let params = c.params()?;
    let shots = c.shots(1000)?;
    let model = EnsembleModel::thermal(&g, params)?;
    let rows: Vec<_> = (0..shots)
        .into_par_iter()
        .map(|k| -> CliResult<Vec<Cell>> {
            let config = sample_configuration(&model, &mut shot_rng(c.seed, k))?;
            let s = thermocluster::percolation::ShotSummary::from_config(&g, &config)?;
            let members: Vec<String> = config.0.iter().map(|m| m.to_string()).collect();
            Ok(vec![
                k.into(),
                config.mask_string().into(),
                members.join(";").into(),
                s.n_clusters.into(),
                s.largest.into(),
                s.log2_cost_bound.into(),
            ])
        })
        .collect::<CliResult<_>>()?;
    let mut r = Report::new(
        "sample",
        &["shot", "entangled_mask", "members", "n_clusters", "largest", "log2_cost_bound"],
    );
    meta_run(&mut r, &g, params, c.seed);
    rows.into_iter().for_each(|row| r.row(row));
    Ok(r)
}

fn meta_run(r: &mut Report, g: &LatticeGraph, params: ModelParams, seed: u64) {
    r.meta("lattice", g.kind().name());
    r.meta("n_sites", g.n_sites());
    r.meta("n_bonds", g.n_bonds());
    r.meta("beta", params.beta);
    r.meta("theta", params.theta);
    r.meta("seed", seed);
}

pub fn percolation(c: &Common, pe: Option<f64>) -> CliResult<Report> {
    let g = c.graph()?;
    let shots = c.shots(1000)?;
    let (model, p_e) = match pe {
        Some(p) => (zero_field_model(&g, p)?, p),
        None => {
            let model = EnsembleModel::thermal(&g, c.params()?)?;
            let p = (0..g.n_bonds()).map(|k| model.ensemble(k).p_e).fold(0.0, f64::max);
            (model, p)
        }
    };
    let stats = gather_stats(&model, shots, c.seed)?;
    let summaries = shot_summaries(&model, shots, c.seed)?;
    let max_cost = summaries.iter().map(|s| s.log2_cost_bound).fold(f64::NEG_INFINITY, f64::max);
    let p_bond: Option<f64> = c.thresholds()?.get(g.kind(), PercolationMode::Bond).ok();
    let mut r = Report::new(
        "percolation",
        &[
            "n_sites", "shots", "p_e", "p_bond", "simulable", "mean_cluster_size", "mean_cluster_size_stderr",
            "mean_largest", "mean_largest_stderr", "max_largest", "max_log2_cost_bound",
        ],
    );
    r.meta("lattice", g.kind().name());
    r.meta("seed", c.seed);
    r.row(vec![
        g.n_sites().into(),
        shots.into(),
        p_e.into(),
        p_bond.into(),
        p_bond.map(|pc| is_simulable_with(p_e, pc)).into(),
        stats.mean_cluster_size().into(),
        stats.mean_cluster_size_stderr().into(),
        stats.mean_largest().into(),
        stats.mean_largest_stderr().into(),
        stats.max_largest().into(),
        max_cost.into(),
    ]);
    Ok(r)
}

pub fn simulate(c: &Common, exact: bool) -> CliResult<Report> {
    let g = c.graph()?;
    let params = c.params()?;
    let shots = c.shots(10_000)?;
    let Some(path) = c.pattern.as_ref() else {
        return usage("--pattern is required");
    };
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let pattern = MeasurementPattern::from_json(&text)?;
    let model = EnsembleModel::thermal(&g, params)?;
    let records = run_pattern(&model, &pattern, shots, c.seed, c.statevector_cap()?)?;
    let failed = records.iter().filter(|r| r.failed_cluster.is_some()).count();
    let hist = outcome_histogram(&records);
    let born = if exact { Some(born_exact(&g, params, &pattern, c.oracle_cap()?)?) } else { None };

    let mut r = Report::new("simulate", &["outcome", "frequency", "exact_probability"]);
    meta_run(&mut r, &g, params, c.seed);
    r.meta("shots", shots);
    r.meta("failed_shots", failed);
    let mut keys: Vec<&String> = hist.keys().collect();
    if let Some(b) = &born {
        keys.extend(b.keys());
        r.meta("tvd", outcome_tvd(&hist, b));
    }
    keys.sort();
    keys.dedup();
    for k in keys {
        r.row(vec![
            k.as_str().into(),
            hist.get(k).copied().unwrap_or(0.0).into(),
            born.as_ref().map(|b| b.get(k).copied().unwrap_or(0.0)).into(),
        ]);
    }
    Ok(r)
}

fn bloch(q: &Qubit) -> [f64; 3] {
    let cross = q[0].conj() * q[1];
    [2.0 * cross.re, 2.0 * cross.im, q[0].norm_sqr() - q[1].norm_sqr()]
}

pub fn decompose_bond(c: &Common, degree: Option<usize>, degree_b: Option<usize>) -> CliResult<Report> {
    let params = c.params()?;
    let d_a = match degree {
        Some(d) => d,
        None if c.lattice.is_some() => coordination(c.kind()?)?,
        None => return usage("--degree or --lattice is required"),
    };
    let d_b = degree_b.unwrap_or(d_a);
    if params.theta >= FRAC_PI_2 {
        return usage("theta = pi/2 has no entangled bond family");
    }
    let ens = build_ensemble(params, d_a, d_b)?;
    let mut r = Report::new(
        "decompose-bond",
        &["member", "weight", "entangled", "a_x", "a_y", "a_z", "b_x", "b_y", "b_z"],
    );
    r.meta("beta", params.beta);
    r.meta("theta", params.theta);
    r.meta("degree_a", d_a);
    r.meta("degree_b", d_b);
    r.meta("p_e", ens.p_e);
    for (i, m) in ens.members().iter().enumerate() {
        let (a, b) = (bloch(&m.a), bloch(&m.b));
        r.row(vec![
            i.into(),
            m.weight.into(),
            m.entangled.into(),
            a[0].into(),
            a[1].into(),
            a[2].into(),
            b[0].into(),
            b[1].into(),
            b[2].into(),
        ]);
    }
    Ok(r)
}
