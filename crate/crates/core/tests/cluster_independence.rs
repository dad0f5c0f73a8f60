use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use thermocluster::exact::ModelParams;
use thermocluster::lattice::{build_lattice, Boundary, LatticeKind};
use thermocluster::measurement::measure_site;
use thermocluster::sampler::{
    assemble_state, realize_state, ClusterState, sample_configuration, shot_rng, BondConfiguration, EnsembleModel,
};

fn model() -> EnsembleModel {
    let g = build_lattice(LatticeKind::Square, &[2, 3], Boundary::Open).unwrap();
    EnsembleModel::thermal(&g, ModelParams::new(1.2, 0.4).unwrap()).unwrap()
}

/// First sampled configuration with at least two clusters of two or more sites.
fn split_configuration(model: &EnsembleModel) -> BondConfiguration {
    (0..)
        .map(|k| sample_configuration(model, &mut shot_rng(31, k)).unwrap())
        .find(|c| {
            let clusters = realize_state(model, c, 12).unwrap();
            clusters.iter().filter(|c| c.sites.len() >= 2).count() >= 2
        })
        .unwrap()
}

#[test]
fn assembled_state_is_a_product_over_clusters() {
    let model = model();
    let n = model.graph().n_sites();
    for k in 0..50 {
        let config = sample_configuration(&model, &mut shot_rng(3, k)).unwrap();
        let clusters = realize_state(&model, &config, 12).unwrap();
        let rho = assemble_state(&clusters, n).unwrap().density();
        for (i, a) in clusters.iter().enumerate() {
            for b in &clusters[i + 1..] {
                let mut both: Vec<usize> = a.sites.iter().chain(&b.sites).copied().collect();
                both.sort_unstable();
                let joint = rho.partial_trace(&both).unwrap();
                let ra = rho.partial_trace(&a.sites).unwrap();
                let rb = rho.partial_trace(&b.sites).unwrap();
                // Reindex both clusters onto the ascending order the trace keeps.
                let product = assemble_state(
                    &[a, b]
                        .iter()
                        .map(|c| ClusterState {
                            sites: c.sites.iter().map(|s| both.iter().position(|x| x == s).unwrap()).collect(),
                            state: c.state.clone(),
                        })
                        .collect::<Vec<_>>(),
                    both.len(),
                )
                .unwrap()
                .density();
                assert!(joint.max_abs_diff(&product).unwrap() < 1e-12);
                assert!((ra.purity() - 1.0).abs() < 1e-12 && (rb.purity() - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn outcomes_in_different_clusters_are_uncorrelated() {
    let model = model();
    let config = split_configuration(&model);
    let clusters = realize_state(&model, &config, 12).unwrap();
    let big: Vec<_> = clusters.iter().filter(|c| c.sites.len() >= 2).take(2).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let shots = 40_000;
    let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
    for _ in 0..shots {
        let (x, _) = measure_site(&big[0].state, 0, 0.7, 0.3, &mut rng).unwrap();
        let (y, _) = measure_site(&big[1].state, 0, 1.9, -0.4, &mut rng).unwrap();
        let (x, y) = (x as f64, y as f64);
        sx += x;
        sy += y;
        sxy += x * y;
    }
    let n = shots as f64;
    let (mx, my) = (sx / n, sy / n);
    let cov = sxy / n - mx * my;
    let se = (mx * (1.0 - mx) * my * (1.0 - my) / n).sqrt();
    assert!(cov.abs() < 3.0 * se, "covariance {cov} vs standard error {se}");
}
