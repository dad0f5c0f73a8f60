//! Exact-oracle checks on small graphs, one row per invariant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermocluster::bond::{bond_sided, bond_zero_field, project_peps_bonds, solve_bond_params, thermal_bonds};
use thermocluster::decomposition::{entangled_fraction, pe_zero_field, zero_temperature_member};
use thermocluster::exact::{ExactReference, ModelParams};
use thermocluster::lattice::{build_lattice, Boundary, LatticeGraph, LatticeKind};
use thermocluster::linalg::DenseOperator;
use thermocluster::regions::{apply_filter_oracle, tcrit_general, tcrit_zero_field};
use thermocluster::sampler::{
    exact_configuration_dist, mixture_from_dist, sequential_configuration_dist, site_success_prob, total_variation,
    EnsembleModel,
};
use thermocluster::Result;

use crate::commands::CliResult;
use crate::output::Report;

struct Check {
    name: &'static str,
    tolerance: f64,
    run: fn(&[(String, LatticeGraph)]) -> Result<f64>,
}

fn graphs(max_sites: usize) -> Result<Vec<(String, LatticeGraph)>> {
    let open = |kind, dims: &[usize]| build_lattice(kind, dims, Boundary::Open);
    let all = vec![
        ("chain-2".to_string(), open(LatticeKind::Chain, &[2])?),
        ("chain-3".to_string(), open(LatticeKind::Chain, &[3])?),
        ("chain-4".to_string(), open(LatticeKind::Chain, &[4])?),
        ("square-2x2".to_string(), open(LatticeKind::Square, &[2, 2])?),
        ("star-4".to_string(), LatticeGraph::star(4)?),
        ("chain-5-periodic".to_string(), build_lattice(LatticeKind::Chain, &[5], Boundary::Periodic)?),
        ("square-2x3".to_string(), open(LatticeKind::Square, &[2, 3])?),
    ];
    Ok(all.into_iter().filter(|(_, g)| g.n_sites() <= max_sites).collect())
}

const GRID: [(f64, f64); 6] = [(0.5, 0.0), (2.0, 0.3), (10.0, 1.0), (0.5, 1.0), (2.0, 0.0), (10.0, 0.3)];

fn peps_reconstruction(gs: &[(String, LatticeGraph)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (_, g) in gs {
        let oracle = ExactReference::new(g);
        for (beta, theta) in GRID {
            let p = ModelParams::new(beta, theta)?;
            let peps = project_peps_bonds(g, &thermal_bonds(g, p)?, 12)?;
            worst = worst.max(DenseOperator::trace_distance(&peps, &oracle.thermal_state(p)?)?);
        }
    }
    Ok(worst)
}

fn configuration_mixture(gs: &[(String, LatticeGraph)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (_, g) in gs {
        for theta in [0.0, 0.3] {
            let p = ModelParams::new(1.0, theta)?;
            let model = EnsembleModel::thermal(g, p)?;
            let mix = mixture_from_dist(&model, &exact_configuration_dist(&model, 12)?, 12)?;
            worst = worst.max(DenseOperator::trace_distance(&mix, &ExactReference::new(g).thermal_state(p)?)?);
        }
    }
    Ok(worst)
}

fn sequential_sampler(gs: &[(String, LatticeGraph)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (_, g) in gs {
        let model = EnsembleModel::thermal(g, ModelParams::new(1.5, 0.4)?)?;
        let exact = exact_configuration_dist(&model, 12)?;
        let mut order = g.lexicographic_bond_order();
        order.reverse();
        worst = worst.max(total_variation(&exact, &sequential_configuration_dist(&model, &order)?));
    }
    Ok(worst)
}

fn factorization(_: &[(String, LatticeGraph)]) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let diag = |d: [f64; 2]| DenseOperator::from_real_rows(2, &[d[0], 0.0, 0.0, d[1]]);
    let marginal = |b: &DenseOperator, q| -> Result<[f64; 2]> {
        let t = b.partial_trace(&[q])?;
        Ok([t.get(0, 0).re, t.get(1, 1).re])
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = ModelParams::new(rng.gen_range(0.1..8.0), rng.gen_range(0.0..1.5))?;
        let bond = bond_sided(solve_bond_params(p, 2)?, solve_bond_params(p, 2)?);
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        let (ci, cj) = ([u, 1.0 - u], [v, 1.0 - v]);
        let full = diag(ci)?.tensor(&bond).tensor(&diag(cj)?);
        let joint: f64 = [0usize, 0b0011, 0b1100, 0b1111].iter().map(|&x| full.get(x, x).re).sum();
        let product = site_success_prob(&[ci, marginal(&bond, 0)?]) * site_success_prob(&[marginal(&bond, 1)?, cj]);
        worst = worst.max((joint - product).abs());
    }
    Ok(worst)
}

fn filtering(gs: &[(String, LatticeGraph)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (_, g) in gs.iter().filter(|(_, g)| g.n_sites() <= 6) {
        for (beta, theta) in [(f64::INFINITY, 0.4), (2.0, 0.3), (0.7, 1.2)] {
            let r = apply_filter_oracle(g, ModelParams::new(beta, theta)?, 12)?;
            worst = worst.max(r.branch_state_error).max(r.dephased_vs_effective);
            if beta.is_infinite() {
                worst = worst.max((r.min_stabilizer - 1.0).abs());
            }
        }
    }
    Ok(worst)
}

fn closed_form(_: &[(String, LatticeGraph)]) -> Result<f64> {
    let member = zero_temperature_member(0.0, 2, 2)?.state();
    let mut worst: f64 = 0.0;
    for omega in [0.3, 0.45, 0.6, 0.75, 0.9, 1.0] {
        let numeric = entangled_fraction(&bond_zero_field(omega)?, &member)?;
        worst = worst.max((numeric - pe_zero_field(omega)?).abs());
    }
    Ok(worst)
}

fn boundary_consistency(_: &[(String, LatticeGraph)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for kind in [LatticeKind::Honeycomb, LatticeKind::Square, LatticeKind::Triangular, LatticeKind::Cubic] {
        let a = tcrit_zero_field(kind)?;
        worst = worst.max((tcrit_general(0.0, kind)? - a).abs() / a);
    }
    Ok(worst)
}

const CHECKS: [Check; 7] = [
    Check { name: "peps_reconstruction", tolerance: 1e-9, run: peps_reconstruction },
    Check { name: "configuration_mixture", tolerance: 1e-9, run: configuration_mixture },
    Check { name: "sequential_sampler", tolerance: 1e-12, run: sequential_sampler },
    Check { name: "success_factorization", tolerance: 1e-12, run: factorization },
    Check { name: "filtering_effective_temperature", tolerance: 1e-9, run: filtering },
    Check { name: "zero_field_closed_form", tolerance: 1e-6, run: closed_form },
    Check { name: "boundary_consistency", tolerance: 1e-3, run: boundary_consistency },
];

/// Returns the report and whether every check held.
pub fn verify(max_sites: usize) -> CliResult<(Report, bool)> {
    let gs = graphs(max_sites)?;
    let mut r = Report::new("verify", &["check", "status", "max_error", "tolerance"]);
    r.meta("max_sites", max_sites);
    r.meta("graphs", gs.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(";"));
    let mut all = true;
    for c in &CHECKS {
        let (status, err) = match (c.run)(&gs) {
            Ok(e) if e < c.tolerance => ("PASS", e),
            Ok(e) => ("FAIL", e),
            Err(_) => ("ERROR", f64::NAN),
        };
        all &= status == "PASS";
        r.row(vec![c.name.into(), status.into(), err.into(), c.tolerance.into()]);
    }
    Ok((r, all))
}
