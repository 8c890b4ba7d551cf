use pawl_core::binning::{BinPartition, BinningConfig, ReactionCoordinate};
use pawl_core::diagnostics::{
    adaptive_simpson, energy_range, mean_state, mode_occupancy, reweight, reweight_fraction,
    theta_error, WeightedSample,
};
use pawl_core::engine::{WangLandau, WangLandauConfig};
use pawl_core::log_sum_exp;
use pawl_core::proposals::{FlipProposal, ScaledRandomWalk};
use pawl_core::schedule::Schedule;
use pawl_core::targets::{
    enumerate_log_densities, enumerate_psi, GPriorTarget, GaussianMixture1d, Grid, Target,
};

fn batch_means_se(values: &[f64], batches: usize) -> f64 {
    let size = values.len() / batches;
    let means: Vec<f64> = values
        .chunks(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

fn frozen_config(n_chains: usize, iterations: usize) -> WangLandauConfig {
    WangLandauConfig {
        n_chains,
        iterations,
        thin: 1,
        gamma: Schedule::Constant(0.0),
        binning: BinningConfig {
            adaptive: false,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn uniform_bias_gives_equal_weights() {
    let target = GaussianMixture1d::bimodal();
    let rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), frozen_config(2, 50))
        .with_partition(BinPartition::from_boundaries(vec![0.0], -10.0).unwrap())
        .with_reaction_coordinate(ReactionCoordinate::Projection(0))
        .run(1)
        .unwrap();
    let w = reweight(&rec, 0).unwrap();
    assert_eq!(w.len(), 100);
    assert!(w.weights.iter().all(|v| (v - 0.01).abs() < 1e-12));
}

#[test]
fn bin_weights_follow_theta() {
    let target = GaussianMixture1d::bimodal();
    let log_theta = vec![0.8f64.ln(), 0.2f64.ln()];
    let mut rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), frozen_config(1, 4))
        .with_partition(BinPartition::from_boundaries(vec![0.0], -10.0).unwrap())
        .with_reaction_coordinate(ReactionCoordinate::Projection(0))
        .with_initial_bias(log_theta)
        .run(2)
        .unwrap();
    rec.samples.truncate(2);
    rec.samples[0].xi = -1.0;
    rec.samples[1].xi = 1.0;
    let w = reweight(&rec, 0).unwrap();
    assert!((w.weights[0] - 0.8).abs() < 1e-12);
    assert!((w.weights[1] - 0.2).abs() < 1e-12);
    assert!(reweight(&rec, 2).is_err());
}

#[test]
fn initial_bias_length_is_checked() {
    let target = GaussianMixture1d::bimodal();
    let res = WangLandau::new(&target, ScaledRandomWalk::new(1.0), frozen_config(1, 4))
        .with_partition(BinPartition::from_boundaries(vec![0.0], -10.0).unwrap())
        .with_initial_bias(vec![0.0; 3])
        .run(2);
    assert!(res.is_err());
}

#[test]
fn reweighted_mean_matches_quadrature() {
    let target = GaussianMixture1d::bimodal();
    // unit-width panels so the adaptive rule cannot miss a mode
    let integrate = |g: &dyn Fn(f64) -> f64, a: i32, b: i32| -> f64 {
        (a..b)
            .map(|k| adaptive_simpson(&g, k as f64, k as f64 + 1.0, 1e-13))
            .sum()
    };
    let f = |x: f64| target.density(x);
    let psi0 = integrate(&f, -30, 0);
    let psi1 = integrate(&f, 0, 30);
    assert!((psi0 + psi1 - 1.0).abs() < 1e-9);
    let true_mean = integrate(&|x| x * f(x), -30, 30);
    assert!((true_mean - 0.8).abs() < 1e-9);
    let rec = WangLandau::new(
        &target,
        ScaledRandomWalk::new(2.0),
        frozen_config(10, 20_000),
    )
    .with_partition(BinPartition::from_boundaries(vec![0.0], -30.0).unwrap())
    .with_reaction_coordinate(ReactionCoordinate::Projection(0))
    .with_initial_bias(vec![psi0.ln(), psi1.ln()])
    .run(3)
    .unwrap();
    let sample = reweight_fraction(&rec, 0.1).unwrap();
    let est = sample.expectation(|x| x[0]);
    // SE from batch means of the weighted contributions n * w_i * x_i
    let n = sample.len() as f64;
    let terms: Vec<f64> = sample
        .states
        .iter()
        .zip(&sample.weights)
        .map(|(x, w)| n * w * x[0])
        .collect();
    let se = batch_means_se(&terms, 25);
    assert!(
        (est - true_mean).abs() < 3.0 * se,
        "{est} vs {true_mean}, se {se}"
    );
}

#[test]
fn gprior_inclusion_probabilities_with_exact_bias() {
    let target = GPriorTarget::bundled();
    let partition = BinPartition::equal_width(377.0, 450.0, 20).unwrap();
    let psi = enumerate_psi(&target, &partition);
    let log_psi: Vec<f64> = psi.iter().map(|v| v.ln()).collect();

    let lp = enumerate_log_densities(&target);
    let z = log_sum_exp(&lp);
    let p = target.n_predictors();
    let exact: Vec<f64> = (0..p)
        .map(|j| {
            lp.iter()
                .enumerate()
                .filter(|(bits, _)| bits >> j & 1 == 1)
                .map(|(_, l)| (l - z).exp())
                .sum()
        })
        .collect();

    let rec = WangLandau::new(&target, FlipProposal::default(), frozen_config(10, 20_000))
        .with_partition(partition.with_discrete_snapping(true))
        .with_initial_bias(log_psi)
        .run(4)
        .unwrap();
    let sample = reweight_fraction(&rec, 0.1).unwrap();
    let n = sample.len() as f64;
    for (j, truth) in exact.iter().enumerate() {
        let est = sample.expectation(|x: &Vec<bool>| x[j] as u8 as f64);
        let terms: Vec<f64> = sample
            .states
            .iter()
            .zip(&sample.weights)
            .map(|(x, w)| n * w * x[j] as u8 as f64)
            .collect();
        let se = batch_means_se(&terms, 25).max(1e-12);
        assert!(
            (est - truth).abs() < 3.0 * se,
            "predictor {j}: {est} vs {truth}, se {se}"
        );
    }
}

#[test]
fn state_bits_match_enumeration_order() {
    let target = GPriorTarget::bundled();
    let bits = 0b101_0000_0000_0110u32;
    let state: Vec<bool> = (0..15).map(|j| bits >> j & 1 == 1).collect();
    assert_eq!(target.log_density(&state), target.log_density_bits(bits));
}

#[test]
fn mean_state_of_two_grids() {
    let a = Grid::from_cells(1, 2, vec![true, false]);
    let b = Grid::from_cells(1, 2, vec![true, true]);
    let sample = WeightedSample {
        states: vec![a, b],
        weights: vec![0.25, 0.75],
        run_id: "t".into(),
    };
    assert_eq!(mean_state(&sample), vec![1.0, 0.75]);
}

#[test]
fn occupancy_assigns_nearest_mode() {
    let centers = vec![vec![0.0, 0.0], vec![4.0, 0.0]];
    let sample = WeightedSample::uniform(
        vec![
            vec![0.5, 0.0],
            vec![3.0, 0.0],
            vec![1.9, 0.0],
            vec![20.0, 0.0],
        ],
        "t",
    );
    let occ = mode_occupancy(&sample, &centers, 1.5);
    assert_eq!(occ, vec![0.25, 0.25, 0.5]);
}

#[test]
fn energy_range_covers_samples() {
    let target = GaussianMixture1d::bimodal();
    let rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), frozen_config(3, 200))
        .with_partition(BinPartition::from_boundaries(vec![2.0], 0.0).unwrap())
        .run(5)
        .unwrap();
    let (lo, hi) = energy_range(&rec).unwrap();
    assert!(lo <= hi);
    for s in &rec.samples {
        assert!(s.xi >= lo && s.xi <= hi);
    }
}

#[test]
fn theta_error_examples() {
    let psi = [0.5f64.ln(), 0.25f64.ln(), 0.25f64.ln()];
    let doubled = [psi[0] + 2f64.ln(), psi[1], psi[2]];
    // normalised (2/3, 1/6, 1/6) against (1/2, 1/4, 1/4)
    let expected = (1.5f64).ln();
    assert!((theta_error(&doubled, &psi).unwrap() - expected).abs() < 1e-12);
    let shifted: Vec<f64> = doubled.iter().map(|v| v - 7.0).collect();
    assert!((theta_error(&shifted, &psi).unwrap() - expected).abs() < 1e-12);
}
