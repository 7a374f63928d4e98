mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netfuse::fused::{bic_score, fit_all, fit_map_dyad, kkt_residual, BregmanConfig};
use netfuse::model::{category_probs, dyad_loglik, Coef, DyadCategory, DyadPaths, DyadSeries, InitMode, ThetaTriple};
use netfuse::network::NetworkSeries;
use netfuse::select::{bic_select_lambda, changepoint_series, cv_select_lambda, roc_auc, LambdaGrid};
use netfuse::sim::{simulate, simulate_break, simulate_de_walk, SimSpec};
use netfuse::{Error, Workers};

use common::*;

fn mean_links(series: &NetworkSeries) -> f64 {
    series.total_links() as f64 / series.len() as f64
}

#[test]
fn simulation_one_density_band() {
    for seed in 0..5 {
        let sim = simulate_de_walk(&SimSpec::sim1(seed), &Workers::single()).unwrap();
        let m = mean_links(&sim.series);
        assert!((2400.0..=2950.0).contains(&m), "seed {seed}: {m}");
    }
}

#[test]
fn simulation_two_density_band() {
    for seed in 0..5 {
        let sim = simulate_break(&SimSpec::sim2(seed), &Workers::single()).unwrap();
        let m = mean_links(&sim.series);
        assert!((600.0..=1000.0).contains(&m), "seed {seed}: {m}");
    }
}

#[test]
fn zero_shift_break_is_a_plain_walk() {
    let count = |spec: SimSpec| simulate(&spec, &Workers::single()).unwrap().series.links_at(8) as f64;
    let base = SimSpec { n: 6, len: 8, lambda_true: 2.0, ..SimSpec::sim1(0) };
    let walk: Vec<f64> = (0..3000).map(|s| count(SimSpec { seed: s, ..base.clone() })).collect();
    let broken: Vec<f64> = (0..3000)
        .map(|s| {
            count(SimSpec { seed: 100_000 + s, break_time: Some(4), theta_shift: Some(ThetaTriple::ZERO), ..base.clone() })
        })
        .collect();
    assert!(ks_two_sample(&walk, &broken) > 0.01);
}

#[test]
fn generated_categories_follow_the_masses() {
    let theta0 = ThetaTriple::new(0.3, -0.5, 1.0);
    let spec = SimSpec { n: 32, len: 202, lambda_true: 1e12, theta0, ..SimSpec::sim1(9) };
    let series = simulate(&spec, &Workers::single()).unwrap().series;
    let mut counts = [0usize; 4];
    for d in series.dyads() {
        for c in d.categories {
            counts[c.index()] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    assert!(total >= 100_000);
    let p = category_probs(theta0).unwrap().to_array();
    for k in 0..4 {
        let freq = counts[k] as f64 / total as f64;
        let se = (p[k] * (1.0 - p[k]) / total as f64).sqrt();
        assert!((freq - p[k]).abs() <= 4.0 * se, "category {k}: {freq} vs {}", p[k]);
    }
}

#[test]
fn chance_level_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.3)).collect();
    let auc = roc_auc(&scores, &labels).unwrap().auc;
    assert!((auc - 0.5).abs() <= 0.02, "{auc}");
}

fn random_series(n: usize, len: usize, density: f64, seed: u64) -> NetworkSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = NetworkSeries::empty(n, len);
    for t in 1..=len {
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(density) {
                    s.set_link(t, i, j, true).unwrap();
                }
            }
        }
    }
    s
}

#[test]
fn one_point_grid_is_returned_as_is() {
    let s = random_series(4, 8, 0.4, 1);
    let grid = LambdaGrid::new(vec![3.7]).unwrap();
    let w = Workers::single();
    let cv = cv_select_lambda(&s, &grid, 3, &BregmanConfig::default(), InitMode::TimeAverage, &w).unwrap();
    assert_eq!(cv.lambda_star, 3.7);
    let bic = bic_select_lambda(&s, &grid, &BregmanConfig::default(), InitMode::TimeAverage, &w).unwrap();
    assert_eq!(bic.lambda_star, 3.7);
}

#[test]
fn selection_is_deterministic_and_skips_degenerate_folds() {
    let mut s = random_series(5, 10, 0.35, 2);
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                s.set_link(9, i, j, false).unwrap();
            }
        }
    }
    let grid: LambdaGrid = "0.5:4:4".parse().unwrap();
    let w = Workers::single();
    let run = || cv_select_lambda(&s, &grid, 4, &BregmanConfig::default(), InitMode::TimeAverage, &w).unwrap();
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.skipped, vec![9]);
    assert_eq!(a.folds, vec![7, 8, 10]);
    assert!(a.table.iter().all(|r| r.fold_auc.len() == 3));

    let empty = NetworkSeries::empty(3, 6);
    let err = cv_select_lambda(&empty, &grid, 2, &BregmanConfig::default(), InitMode::TimeAverage, &w);
    assert!(matches!(err, Err(Error::UndefinedAuc(_))));
}

fn three_identical_dyads(cats: &[DyadCategory]) -> NetworkSeries {
    let mut s = NetworkSeries::empty(3, cats.len());
    for (t, c) in cats.iter().enumerate() {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            s.set_link(t + 1, i, j, c.y_ij()).unwrap();
            s.set_link(t + 1, j, i, c.y_ji()).unwrap();
        }
    }
    s
}

#[test]
fn bic_examples() {
    let cats = [DyadCategory::C10, DyadCategory::C00, DyadCategory::C11, DyadCategory::C11, DyadCategory::C01];
    let len = cats.len() as f64;
    let s = three_identical_dyads(&cats);
    let obs = DyadSeries::new(0, 1, cats.to_vec()).unwrap();
    let theta0 = ThetaTriple::new(0.1, -0.2, 0.3);

    let flat = fit_map_dyad(&obs, theta0, &BregmanConfig::with_lambda(1e6)).unwrap();
    let single = 2.0 * dyad_loglik(&flat.paths, &obs).unwrap() - 3.0 * (len - 1.0).ln();
    let mut pair = NetworkSeries::empty(2, cats.len());
    for (t, c) in cats.iter().enumerate() {
        pair.set_link(t + 1, 0, 1, c.y_ij()).unwrap();
        pair.set_link(t + 1, 1, 0, c.y_ji()).unwrap();
    }
    let one = bic_score(std::slice::from_ref(&flat), &pair).unwrap();
    assert!((one - single).abs() <= 1e-12);

    let fit = fit_map_dyad(&obs, theta0, &BregmanConfig::with_lambda(0.4)).unwrap();
    let one = bic_score(std::slice::from_ref(&fit), &pair).unwrap();
    let three = bic_score(&[fit.clone(), fit.clone(), fit.clone()], &s).unwrap();
    assert!((three - 3.0 * one).abs() <= 1e-9 * one.abs());
    assert!(bic_score(&[fit], &s).is_err());
}

#[test]
fn bic_prefers_heavy_penalties_on_flat_data() {
    let spec = SimSpec { n: 8, len: 30, lambda_true: 1e12, theta0: ThetaTriple::new(-0.4, 0.2, 0.9), ..SimSpec::sim1(3) };
    let s = simulate(&spec, &Workers::single()).unwrap().series;
    let theta0 = netfuse::model::empirical_init(&s, InitMode::TimeAverage);
    let score = |lambda: f64| {
        let fits = fit_all(&s, theta0, &BregmanConfig::with_lambda(lambda), &Workers::single()).unwrap();
        bic_score(&fits, &s).unwrap()
    };
    assert!(score(15.0) > score(0.3));
}

#[test]
fn single_jump_changepoint_fraction() {
    let n = 5;
    let pairs = n * (n - 1) / 2;
    let mut paths = vec![DyadPaths::constant(ThetaTriple::new(0.2, 0.1, -0.3), 7); pairs];
    for t in 4..=7 {
        paths[3].path_mut(Coef::Mutual).free_mut()[t - 1] = 1.0;
    }
    let series = changepoint_series(&paths).unwrap();
    assert_eq!(series.len(), 6);
    for (k, &v) in series.iter().enumerate() {
        let t = k + 2;
        assert_eq!(v, if t == 4 { 2.0 / (n * (n - 1)) as f64 } else { 0.0 }, "t={t}");
    }
}

#[test]
fn kkt_certifies_the_oracle_optimum_and_detects_perturbations() {
    let obs = DyadSeries::new(0, 1, vec![DyadCategory::C11, DyadCategory::C00, DyadCategory::C10]).unwrap();
    let theta0 = ThetaTriple::new(0.2, -0.1, 0.0);
    let lambda = 0.6;
    let opt = convex_oracle(&obs, theta0, lambda, 1_000_000);
    let base = kkt_residual(&opt, &obs, lambda);
    assert!(base <= 1e-3, "{base}");
    for c in Coef::ALL {
        for t in 0..3 {
            let mut p = opt.clone();
            p.path_mut(c).free_mut()[t] += 0.1;
            assert!(kkt_residual(&p, &obs, lambda) > base, "{c:?} t={}", t + 1);
        }
    }
}
