use pawl_core::binning::{
    init_partition, quantile, BinPartition, BinningConfig, BoundaryKind, RangePolicy,
};
use pawl_core::engine::{BiasState, WangLandau, WangLandauConfig};
use pawl_core::proposals::ScaledRandomWalk;
use pawl_core::rng::shared_rng;
use pawl_core::schedule::Schedule;
use pawl_core::targets::{enumerate_log_densities, GPriorTarget, TrimodalTarget};
use proptest::prelude::*;
use rand::Rng;

fn sort_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() - 1) as f64;
    let i = pos as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() {
        v[i] * (1.0 - frac) + v[i + 1] * frac
    } else {
        v[i]
    }
}

#[test]
fn quantile_range_on_uniform_sample() {
    let mut rng = shared_rng(1);
    let samples: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>()).collect();
    let (p, warn) = init_partition(&samples, 20, RangePolicy::default()).unwrap();
    assert!(warn.is_none());
    let q10 = sort_quantile(&samples, 0.1);
    let q90 = sort_quantile(&samples, 0.9);
    let width = 2.0 * (q90 - q10) / 20.0;
    let b = p.inner_boundaries();
    assert!((b[0] - (q10 + width)).abs() < 1e-12);
    assert!((width - 0.08).abs() < 2e-3);
    assert!((q10 - 0.1).abs() < 5e-3);
    assert!((b[18] + width - 1.7).abs() < 1e-2);
    assert_eq!(
        p.e_min(),
        samples.iter().copied().fold(f64::INFINITY, f64::min)
    );
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(quantile(&sorted, 0.1), q10);
}

#[test]
fn manual_gprior_range() {
    let (p, _) = init_partition(
        &[390.0, 400.0],
        20,
        RangePolicy::Manual {
            lo: 377.0,
            hi: 450.0,
        },
    )
    .unwrap();
    assert_eq!(p.n_bins(), 20);
    let (lo, hi) = p.bounds(0);
    assert!((hi - lo - 3.65).abs() < 1e-9);
}

#[test]
fn trimodal_run_splits_then_freezes() {
    let target = TrimodalTarget::default();
    let cfg = WangLandauConfig {
        n_chains: 2,
        iterations: 5000,
        binning: BinningConfig {
            n_bins: 3,
            ..Default::default()
        },
        ..Default::default()
    };
    let rec = WangLandau::new(&target, ScaledRandomWalk::new(1.0), cfg)
        .run(3)
        .unwrap();
    let freeze = rec
        .boundary_events
        .iter()
        .find(|e| e.kind == BoundaryKind::Freeze)
        .map(|e| e.iteration);
    if let Some(t) = freeze {
        assert!(rec
            .boundary_events
            .iter()
            .all(|e| e.kind != BoundaryKind::Split || e.iteration < t));
    }
    // dimension of theta only grows
    assert!(rec
        .theta_trace
        .windows(2)
        .all(|w| w[0].values.len() <= w[1].values.len()));
    // every sampled value lands in a valid bin of the final partition
    for s in &rec.samples {
        assert!(rec.final_partition.locate(s.xi) < rec.final_partition.n_bins());
    }
}

#[test]
fn discrete_splits_keep_models_in_both_children() {
    let target = GPriorTarget::bundled();
    let energies: Vec<f64> = enumerate_log_densities(&target)
        .iter()
        .map(|v| -v)
        .collect();
    let models_in = |lo: f64, hi: f64| {
        let mut v: Vec<f64> = energies
            .iter()
            .copied()
            .filter(|e| *e >= lo && *e < hi)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let mut part = BinPartition::equal_width(377.0, 450.0, 20)
        .unwrap()
        .with_discrete_snapping(true);
    let mut bias = BiasState::uniform(20, 0.5, Schedule::inverse());
    let mut splits = 0;
    // split every finite bin three times over, feeding each bin the energies
    // of the models it contains
    for _ in 0..3 {
        let mut bin = part.n_bins() - 1;
        while bin > 0 {
            bin -= 1;
            let (lo, hi) = part.bounds(bin);
            let inside = models_in(lo, hi);
            for e in &inside {
                part.observe(*e);
            }
            match part.split_bin(&mut bias, bin) {
                Ok(at) => {
                    splits += 1;
                    assert!(inside.len() >= 2);
                    assert!(
                        !models_in(lo, at).is_empty(),
                        "empty left child of [{lo}, {hi})"
                    );
                    assert!(
                        !models_in(at, hi).is_empty(),
                        "empty right child of [{lo}, {hi})"
                    );
                }
                Err(_) => assert!(inside.len() <= 1),
            }
        }
    }
    assert!(splits > 20);
    assert_eq!(bias.n_bins(), part.n_bins());
}

#[test]
fn single_valued_bins_never_split() {
    let mut part = BinPartition::equal_width(0.0, 10.0, 2)
        .unwrap()
        .with_discrete_snapping(true);
    let mut bias = BiasState::uniform(2, 0.5, Schedule::inverse());
    for _ in 0..500 {
        part.observe(4.5);
    }
    let cfg = BinningConfig::default();
    assert!(part
        .maintenance_tick(&mut bias, 100, &cfg, false)
        .is_empty());
    assert_eq!(part.n_bins(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn splits_conserve_mass_and_refine(
        d in 2usize..10,
        raw in proptest::collection::vec(0.01f64..1.0, 10),
        picks in proptest::collection::vec(0usize..64, 0..12),
    ) {
        let theta = &raw[..d];
        let phi = vec![1.0 / d as f64; d];
        let mut bias = BiasState::from_theta(theta, &phi, 0.5, Schedule::inverse());
        let mut part = BinPartition::equal_width(0.0, d as f64, d).unwrap();
        for pick in picks {
            let before: Vec<f64> = part.inner_boundaries().to_vec();
            let bin = pick % part.n_bins();
            let res = part.split_bin(&mut bias, bin);
            if bin + 1 == before.len() + 1 {
                prop_assert!(res.is_err());
            }
            prop_assert_eq!(bias.n_bins(), part.n_bins());
            prop_assert!((bias.theta().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((bias.phi().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let after = part.inner_boundaries();
            prop_assert!(before.iter().all(|b| after.contains(b)));
            prop_assert!(after.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn every_value_has_a_bin(
        inner in proptest::collection::btree_set(-1000i32..1000, 0..15),
        xs in proptest::collection::vec(-1e6f64..1e6, 1..50),
    ) {
        let inner: Vec<f64> = inner.into_iter().map(f64::from).collect();
        let e_min = inner.first().copied().unwrap_or(0.0) - 1.0;
        let mut part = BinPartition::from_boundaries(inner.clone(), e_min).unwrap();
        for x in xs {
            part.extend_range(x);
            let b = part.locate(x);
            prop_assert!(b < part.n_bins());
            let (lo, hi) = part.bounds(b);
            prop_assert!(x >= lo && x < hi);
        }
        prop_assert!(part.e_min() <= inner.first().copied().unwrap_or(f64::INFINITY));
    }
}
