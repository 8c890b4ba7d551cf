use approx::assert_abs_diff_eq;
use pawl_core::binning::{BinPartition, BinningConfig, RangePolicy, ReactionCoordinate};
use pawl_core::engine::{
    biased_log_density, initial_ensemble, BiasState, WangLandau, WangLandauConfig,
};
use pawl_core::log_sum_exp;
use pawl_core::proposals::{Proposal, Proposed, ScaledRandomWalk, UniformJump};
use pawl_core::rng::chain_rng;
use pawl_core::schedule::Schedule;
use pawl_core::targets::{FiniteTarget, StateView, Target, TrimodalTarget};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn fixed_config(n_chains: usize, iterations: usize) -> WangLandauConfig {
    WangLandauConfig {
        n_chains,
        iterations,
        adapt_proposal: false,
        prelim_iterations: 0,
        thin: 0,
        binning: BinningConfig {
            adaptive: false,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn locate_examples() {
    let p = BinPartition::from_boundaries(vec![1.0, 2.0], 0.0).unwrap();
    // 0-based indices of the 1-based bins 2, 3, 3
    assert_eq!(p.locate(1.5), 1);
    assert_eq!(p.locate(2.0), 2);
    assert_eq!(p.locate(1e6), 2);
}

#[test]
fn biased_density_examples() {
    let p = BinPartition::from_boundaries(vec![0.5], 0.0).unwrap();
    let flat = [0.5f64.ln(), 0.5f64.ln()];
    assert_eq!(
        biased_log_density(0.2, 0.0, &flat, &p),
        biased_log_density(0.7, 0.0, &flat, &p)
    );
    let skew = [0.9f64.ln(), 0.1f64.ln()];
    let diff = biased_log_density(0.2, -3.0, &skew, &p) - biased_log_density(0.7, -3.0, &skew, &p);
    assert_abs_diff_eq!(diff, -2.1972, epsilon = 1e-4);
    let doubled = [0.9f64.ln() + 2f64.ln(), 0.1f64.ln()];
    let drop =
        biased_log_density(0.2, -3.0, &skew, &p) - biased_log_density(0.2, -3.0, &doubled, &p);
    assert_abs_diff_eq!(drop, 2f64.ln(), epsilon = 1e-15);
}

#[test]
fn proportion_examples() {
    let mut b = BiasState::uniform(4, 0.5, Schedule::inverse());
    b.update_proportions(&[0, 0, 0, 1]);
    assert_eq!(b.nu(), vec![0.75, 0.25, 0.0, 0.0]);

    let mut b = BiasState::uniform(3, 0.5, Schedule::inverse());
    for bin in 0..3 {
        b.update_proportions(&[bin]);
    }
    for v in b.nu() {
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
    }

    b.register_flat_histogram();
    b.update_proportions(&[0, 0]);
    assert_eq!(b.nu(), vec![1.0, 0.0, 0.0]);
}

fn with_nu(nu: &[f64], c: f64, scale: u64) -> BiasState {
    let d = nu.len();
    let mut b = BiasState::uniform(d, c, Schedule::inverse());
    let bins: Vec<usize> = nu
        .iter()
        .enumerate()
        .flat_map(|(i, v)| std::iter::repeat_n(i, (v * scale as f64).round() as usize))
        .collect();
    b.update_proportions(&bins);
    b
}

#[test]
fn flat_histogram_examples() {
    assert!(with_nu(&[0.25; 4], 0.5, 100).flat_histogram_check());
    assert!(!with_nu(&[0.40, 0.20, 0.20, 0.20], 0.5, 100).flat_histogram_check());
    let mut nu = vec![0.05; 20];
    nu[0] = 0.054;
    nu[1] = 0.046;
    let b = with_nu(&nu, 0.1, 1000);
    assert_abs_diff_eq!(b.max_deviation(), 0.004, epsilon = 1e-12);
    assert!(b.flat_histogram_check());
}

#[test]
fn update_bias_examples() {
    let mut b = BiasState::from_theta(&[0.5, 0.5], &[0.5, 0.5], 0.5, Schedule::Constant(0.5));
    let props = b.clone().update_proportions(&[0, 0, 0, 1]);
    b.update_bias(&props);
    // increments +0.125 / -0.125, then normalisation
    let expected = 0.125f64.exp() / (0.125f64.exp() + (-0.125f64).exp());
    assert_abs_diff_eq!(b.theta()[0], expected, epsilon = 1e-15);
    assert_abs_diff_eq!(b.theta()[0], 0.5622, epsilon = 1e-4);
    assert_abs_diff_eq!(b.theta()[1], 0.4378, epsilon = 1e-4);

    let mut b = BiasState::from_theta(&[0.3, 0.7], &[0.25, 0.75], 0.5, Schedule::Constant(1.0));
    let before = b.theta();
    b.update_bias(&[0.25, 0.75]);
    for (x, y) in b.theta().iter().zip(&before) {
        assert_abs_diff_eq!(x, y, epsilon = 1e-15);
    }

    let mut b = BiasState::from_theta(&[0.3, 0.7], &[0.5, 0.5], 0.5, Schedule::Constant(0.0));
    b.update_bias(&[1.0, 0.0]);
    assert_abs_diff_eq!(b.theta()[0], 0.3, epsilon = 1e-15);
}

#[test]
fn bias_push_is_strict() {
    let mut b = BiasState::uniform(3, 0.5, Schedule::Constant(0.1));
    let props = b.update_proportions(&[1, 1]);
    b.update_bias(&props);
    let lt = b.log_theta();
    assert!(lt[1] > lt[0] && lt[1] > lt[2]);
}

#[test]
fn zero_iterations_keep_uniform_theta() {
    let target = TrimodalTarget::default();
    let cfg = WangLandauConfig {
        n_chains: 3,
        iterations: 0,
        prelim_iterations: 50,
        binning: BinningConfig {
            n_bins: 4,
            ..Default::default()
        },
        ..Default::default()
    };
    let rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), cfg)
        .run(1)
        .unwrap();
    assert_eq!(rec.theta_trace.len(), 1);
    assert!(rec.samples.is_empty());
    let d = rec.final_partition.n_bins();
    for v in &rec.theta_trace[0].values {
        assert_abs_diff_eq!(*v, 1.0 / d as f64, epsilon = 1e-15);
    }
}

#[test]
fn single_bin_never_moves_theta() {
    let target = TrimodalTarget::default();
    let rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), fixed_config(2, 500))
        .with_partition(BinPartition::single(0.0))
        .run(4)
        .unwrap();
    assert!(rec.theta_trace.iter().all(|r| r.values == vec![1.0]));
}

#[test]
fn trimodal_reference_setting_reaches_flat_histogram() {
    let target = TrimodalTarget::default();
    let cfg = WangLandauConfig {
        n_chains: 2,
        iterations: 2500,
        flat_tolerance: 0.5,
        binning: BinningConfig {
            n_bins: 3,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut fired = 0;
    for seed in 0..5 {
        let rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), cfg.clone())
            .run(seed)
            .unwrap();
        fired += !rec.fh_times().is_empty() as usize;
        let times = rec.fh_times();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(rec
            .theta_trace
            .windows(2)
            .all(|w| w[0].iteration < w[1].iteration));
    }
    assert!(fired >= 4, "flat histogram fired in {fired}/5 runs");
}

#[test]
fn theta_stays_normalised_and_fh_postcondition_holds() {
    let target = TrimodalTarget::default();
    let cfg = WangLandauConfig {
        n_chains: 4,
        iterations: 3000,
        binning: BinningConfig {
            n_bins: 5,
            ..Default::default()
        },
        ..Default::default()
    };
    let rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), cfg)
        .run(11)
        .unwrap();
    for row in &rec.theta_trace {
        assert!((row.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    for e in &rec.fh_events {
        assert!(e.max_deviation < e.threshold);
    }
    // nu sums to one whenever any visit was counted
    for row in &rec.nu_trace {
        let s: f64 = row.values.iter().sum();
        assert!((s - 1.0).abs() < 1e-12 || s == 0.0);
    }
}

#[test]
fn nonfinite_initial_state_is_reported() {
    let target = FiniteTarget::new(&[0.5, 0.0, 0.5]);
    let err = initial_ensemble(
        &target,
        &ReactionCoordinate::NegLogDensity,
        2,
        Some(vec![0, 1]),
        1,
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("chain 1"), "{msg}");
}

/// A proposal that returns the current state.
struct Stay;
impl Proposal<Vec<f64>> for Stay {
    fn propose<R: Rng + ?Sized>(&self, current: &Vec<f64>, _rng: &mut R) -> Proposed<Vec<f64>> {
        Proposed::symmetric(current.clone())
    }
}

#[test]
fn identical_proposal_always_accepted() {
    let target = TrimodalTarget::default();
    let rec = WangLandau::new(&target, Stay, fixed_config(3, 200))
        .with_partition(BinPartition::from_boundaries(vec![3.0, 5.0], 0.0).unwrap())
        .run(2)
        .unwrap();
    assert!(rec.acceptance_trace.iter().all(|a| a.acceptance == 1.0));
}

// Independent single-chain implementation of the basic algorithm on the
// trimodal target, sharing only the random stream layout.
fn reference_trimodal_density(x: f64, y: f64) -> f64 {
    let comps = [((8.0, 8.0), 0.9), ((6.0, 6.0), -0.9), ((0.0, 0.0), 0.0)];
    let mut total = 0.0;
    for ((mx, my), r) in comps {
        let (dx, dy): (f64, f64) = (x - mx, y - my);
        let det: f64 = 1.0 - r * r;
        let q = (dx * dx - 2.0 * r * dx * dy + dy * dy) / det;
        total += (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt()) / 3.0;
    }
    total.ln()
}

#[test]
fn single_chain_matches_scalar_reference() {
    let seed = 99;
    let sigma = 1.5;
    let edges = [1.0, 2.5, 4.0, 6.0];
    let c = 0.5;
    let target = TrimodalTarget::default();
    let cfg = WangLandauConfig {
        flat_tolerance: c,
        ..fixed_config(1, 1000)
    };
    let rec = WangLandau::new(&target, ScaledRandomWalk::new(sigma), cfg)
        .with_partition(BinPartition::from_boundaries(edges.to_vec(), 0.0).unwrap())
        .with_initial_states(vec![vec![0.0, 0.0]])
        .run(seed)
        .unwrap();

    let d = edges.len() + 1;
    let bin_of = |e: f64| edges.iter().filter(|b| **b <= e).count();
    let mut rng = chain_rng(seed, 0);
    let (mut x, mut y) = (0.0, 0.0);
    let mut lp = reference_trimodal_density(x, y);
    let mut log_theta = vec![-(d as f64).ln(); d];
    let mut counts = vec![0u64; d];
    let mut k = 0u64;
    let mut fh = Vec::new();
    for t in 1..=1000u64 {
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        let (px, py) = (x + sigma * zx, y + sigma * zy);
        let plp = reference_trimodal_density(px, py);
        let u: f64 = rng.random();
        let ratio = (plp - log_theta[bin_of(-plp)]) - (lp - log_theta[bin_of(-lp)]);
        if u.ln() < ratio {
            (x, y, lp) = (px, py, plp);
        }
        let bin = bin_of(-lp);
        counts[bin] += 1;
        let total: u64 = counts.iter().sum();
        let dev = counts
            .iter()
            .map(|&n| (n as f64 / total as f64 - 1.0 / d as f64).abs())
            .fold(0.0, f64::max);
        if dev < c / d as f64 {
            k += 1;
            counts.iter_mut().for_each(|n| *n = 0);
            fh.push(t);
        }
        let gamma = if k == 0 { 1.0 } else { 1.0 / k as f64 };
        for (i, lt) in log_theta.iter_mut().enumerate() {
            let occ = if i == bin { 1.0 } else { 0.0 };
            *lt += gamma * (occ - 1.0 / d as f64);
        }
        let z = log_sum_exp(&log_theta);
        log_theta.iter_mut().for_each(|v| *v -= z);

        let row = &rec.theta_trace[t as usize];
        for (a, b) in row.values.iter().zip(&log_theta) {
            assert!(
                (a.ln() - b).abs() < 1e-9,
                "iteration {t}: {a} vs {}",
                b.exp()
            );
        }
    }
    assert_eq!(rec.fh_times(), fh);
    let last = &rec.final_states[0];
    assert!((last[0] - x).abs() < 1e-12 && (last[1] - y).abs() < 1e-12);
}

#[test]
fn normalisation_does_not_change_decisions() {
    let target = TrimodalTarget::default();
    let xi = ReactionCoordinate::NegLogDensity;
    let partition = BinPartition::from_boundaries(vec![2.5, 3.5, 5.0], 0.0).unwrap();
    let log_theta = vec![0.1f64.ln(), 0.2f64.ln(), 0.3f64.ln(), 0.4f64.ln()];
    let shifted: Vec<f64> = log_theta.iter().map(|v| v + 7.25).collect();
    let proposal = ScaledRandomWalk::new(2.0);
    let mut a = initial_ensemble(&target, &xi, 8, None, 5).unwrap();
    a.relocate(&partition);
    let mut b = a.clone();
    for _ in 0..200 {
        let ra = a.mh_sweep(&target, &proposal, &xi, &log_theta, &partition);
        let rb = b.mh_sweep(&target, &proposal, &xi, &shifted, &partition);
        assert_eq!(ra, rb);
        for (ca, cb) in a.chains.iter().zip(&b.chains) {
            assert_eq!(ca.state, cb.state);
        }
    }
}

#[test]
fn engine_with_zero_step_size_samples_the_target() {
    let weights = [0.1, 0.2, 0.3, 0.25, 0.15];
    let target = FiniteTarget::new(&weights);
    let partition = BinPartition::from_boundaries(vec![1.5], 0.0).unwrap();
    let mut cfg = fixed_config(1, 1_000_000);
    cfg.gamma = Schedule::Constant(0.0);
    let mut visits = [0u64; 5];
    WangLandau::new(&target, UniformJump { size: 5 }, cfg)
        .with_partition(partition)
        .run_with_observer(17, |_, ens| visits[ens.chains[0].state] += 1)
        .unwrap();
    // uniform theta kept fixed by a zero step size: the chain targets pi
    let tv: f64 = visits
        .iter()
        .zip(&weights)
        .map(|(v, p)| (*v as f64 / 1e6 - p).abs())
        .sum::<f64>()
        * 0.5;
    assert!(tv < 0.01, "total variation {tv}");
}

#[test]
fn detailed_balance_on_five_states() {
    let weights = [0.1, 0.2, 0.3, 0.25, 0.15];
    let target = FiniteTarget::new(&weights);
    let partition = BinPartition::from_boundaries(vec![1.5], 0.0).unwrap();
    let log_theta = [0.7f64.ln(), 0.3f64.ln()];
    let xi = ReactionCoordinate::NegLogDensity;
    let mut ens = initial_ensemble(&target, &xi, 1, None, 23).unwrap();
    ens.relocate(&partition);
    let q = UniformJump { size: 5 };
    let mut visits = [0u64; 5];
    let steps = 1_000_000;
    for _ in 0..steps {
        ens.mh_sweep(&target, &q, &xi, &log_theta, &partition);
        visits[ens.chains[0].state] += 1;
    }
    let biased: Vec<f64> = weights
        .iter()
        .map(|w| w / log_theta[partition.locate(-f64::ln(*w))].exp())
        .collect();
    let z: f64 = biased.iter().sum();
    let tv: f64 = visits
        .iter()
        .zip(&biased)
        .map(|(v, p)| (*v as f64 / steps as f64 - p / z).abs())
        .sum::<f64>()
        * 0.5;
    assert!(tv < 0.01, "total variation {tv}");
}

#[test]
fn comm_period_delays_bias_updates() {
    let target = TrimodalTarget::default();
    let mut cfg = fixed_config(4, 40);
    cfg.comm_period = 10;
    let rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), cfg)
        .with_partition(BinPartition::from_boundaries(vec![2.5, 4.0], 0.0).unwrap())
        .run(3)
        .unwrap();
    for row in &rec.theta_trace[1..] {
        let prev = &rec.theta_trace[row.iteration as usize - 1].values;
        if row.iteration % 10 != 0 {
            assert_eq!(&row.values, prev);
        }
    }
}

#[test]
fn projection_coordinate_uses_state_component() {
    let x = vec![3.0, -1.0];
    let xi: ReactionCoordinate<Vec<f64>> = ReactionCoordinate::Projection(1);
    assert_eq!(xi.evaluate(&x, -100.0), -1.0);
    assert_eq!(x.coordinate(1), Some(-1.0));
    let target = TrimodalTarget::default();
    let cfg = WangLandauConfig {
        n_chains: 2,
        iterations: 300,
        prelim_iterations: 100,
        binning: BinningConfig {
            n_bins: 4,
            range: RangePolicy::MinMax,
            ..Default::default()
        },
        ..Default::default()
    };
    let rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), cfg)
        .with_reaction_coordinate(ReactionCoordinate::Projection(0))
        .run(8)
        .unwrap();
    for s in &rec.samples {
        assert_eq!(s.xi, s.state[0]);
    }
    let _ = target.log_density(&x);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bias_updates_keep_theta_normalised(
        d in 1usize..12,
        steps in proptest::collection::vec((0usize..12, 0.0f64..2.0), 1..40),
    ) {
        let mut b = BiasState::uniform(d, 0.5, Schedule::inverse());
        for (bin, gamma_scale) in steps {
            let props = b.update_proportions(&[bin % d]);
            let scaled: Vec<f64> = props.iter().map(|p| p * gamma_scale).collect();
            b.update_bias_accumulated(&scaled, 1);
            prop_assert!((b.theta().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let phi_sum: f64 = b.phi().iter().sum();
            prop_assert!((phi_sum - 1.0).abs() < 1e-12);
            if b.flat_histogram_check() {
                let k = b.stage();
                b.register_flat_histogram();
                prop_assert_eq!(b.stage(), k + 1);
            }
        }
    }
}
