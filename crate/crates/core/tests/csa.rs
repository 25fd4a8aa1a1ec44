use csaqr::csa::{
    csa_predict, cv_value, fit_csa, fit_csa_for_k, make_folds, select_k, CsaConfig, CvMode,
};
use csaqr::qr::{fit_qr, mean_check_loss, predict_row, SolverOptions};
use csaqr::subsets::sample_subsets;
use csaqr::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn toy(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut r = vec![1.0];
            r.extend((1..p).map(|_| rng.sample::<f64, _>(StandardNormal)));
            r
        })
        .collect();
    let y = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, v)| v / (j + 1) as f64)
                .sum::<f64>()
                + rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    Dataset::from_rows_unnamed(y, rows, Some(0)).unwrap()
}

fn loo_cfg() -> CsaConfig {
    CsaConfig {
        mode: Some(CvMode::Loo),
        cap: 1000,
        seed: 5,
        ..CsaConfig::default()
    }
}

/// Every (i, m) pair refit from scratch on the sample without row i.
fn naive_loo(data: &Dataset, tau: f64, k: usize) -> f64 {
    let plan = sample_subsets(data.p(), k, 1000, 0).unwrap();
    let n = data.n();
    let mut total = 0.0;
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let train = data.select_rows(&keep);
        let mut s = 0.0;
        for sub in &plan.selected {
            let fit = fit_qr(&train, &sub.members, tau, &SolverOptions::default()).unwrap();
            s += predict_row(&fit, data.row(i)).unwrap();
        }
        let pred = s / plan.len() as f64;
        let u = data.y()[i] - pred;
        total += u * (tau - if u <= 0.0 { 1.0 } else { 0.0 });
    }
    total / n as f64
}

#[test]
fn loo_matches_naive_double_loop() {
    let d = toy(12, 4, 1);
    for tau in [0.3, 0.5] {
        for k in 1..=4 {
            let fast = cv_value(&d, tau, k, &loo_cfg()).unwrap();
            let slow = naive_loo(&d, tau, k);
            assert!((fast - slow).abs() < 1e-8, "k={k}: {fast} vs {slow}");
        }
    }
}

#[test]
fn bfold_with_n_folds_equals_loo() {
    let d = toy(20, 5, 2);
    let bf = CsaConfig {
        mode: Some(CvMode::BFold(20)),
        ..loo_cfg()
    };
    for k in 1..=5 {
        assert_eq!(
            cv_value(&d, 0.4, k, &loo_cfg()).unwrap(),
            cv_value(&d, 0.4, k, &bf).unwrap()
        );
    }
}

#[test]
fn bfold_matches_independent_fold_refits() {
    let d = toy(30, 4, 3);
    let cfg = CsaConfig {
        mode: Some(CvMode::BFold(5)),
        ..loo_cfg()
    };
    let folds = make_folds(30, CvMode::BFold(5), cfg.seed).unwrap();
    let plan = sample_subsets(4, 2, 1000, 0).unwrap();
    let mut preds = vec![0.0; 30];
    for fold in &folds {
        let keep: Vec<usize> = (0..30).filter(|i| !fold.contains(i)).collect();
        let train = d.select_rows(&keep);
        for sub in &plan.selected {
            let f = fit_qr(&train, &sub.members, 0.5, &SolverOptions::default()).unwrap();
            for &i in fold {
                preds[i] += predict_row(&f, d.row(i)).unwrap() / plan.len() as f64;
            }
        }
    }
    let oracle: f64 = (0..30)
        .map(|i| 0.5 * (d.y()[i] - preds[i]).abs())
        .sum::<f64>()
        / 30.0;
    assert!((cv_value(&d, 0.5, 2, &cfg).unwrap() - oracle).abs() < 1e-10);
}

#[test]
fn full_size_reduces_to_plain_regression() {
    let d = toy(25, 4, 4);
    let f = fit_csa_for_k(&d, 0.6, 4, &loo_cfg()).unwrap();
    assert_eq!(f.fits.len(), 1);
    let q = fit_qr(&d, &[0, 1, 2, 3], 0.6, &SolverOptions::default()).unwrap();
    for i in 0..d.n() {
        let a = csa_predict(&f, d.row(i)).unwrap();
        let b = predict_row(&q, d.row(i)).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn three_choose_two_gives_three_fits_and_their_mean() {
    let d = toy(15, 3, 5);
    let f = fit_csa_for_k(&d, 0.5, 2, &loo_cfg()).unwrap();
    assert_eq!(f.fits.len(), 3);
    let row = [1.0, 0.4, -2.0];
    let mean = f
        .fits
        .iter()
        .map(|q| predict_row(q, &row).unwrap())
        .sum::<f64>()
        / 3.0;
    assert!((csa_predict(&f, &row).unwrap() - mean).abs() < 1e-14);
    assert!(csa_predict(&f, &row[..2]).is_err());
}

#[test]
fn column_permutation_leaves_full_enumeration_unchanged() {
    let d = toy(18, 4, 6);
    let perm = [2usize, 0, 3, 1];
    let rows: Vec<Vec<f64>> = (0..d.n())
        .map(|i| perm.iter().map(|&c| d.row(i)[c]).collect())
        .collect();
    let pd = Dataset::from_rows_unnamed(d.y().to_vec(), rows, Some(1)).unwrap();
    for k in 1..=4 {
        let a = fit_csa_for_k(&d, 0.5, k, &loo_cfg()).unwrap();
        let b = fit_csa_for_k(&pd, 0.5, k, &loo_cfg()).unwrap();
        for i in 0..d.n() {
            let pa = csa_predict(&a, d.row(i)).unwrap();
            let pb = csa_predict(&b, pd.row(i)).unwrap();
            assert!((pa - pb).abs() < 1e-9);
        }
    }
}

#[test]
fn curve_brute_force_and_tie_rule() {
    let d = toy(16, 4, 7);
    let curve = select_k(&d, 0.5, &loo_cfg()).unwrap();
    assert_eq!(curve.values.len(), 4);
    for (k, v) in curve.values.iter().enumerate() {
        assert!((v - naive_loo(&d, 0.5, k + 1)).abs() < 1e-8);
    }
    let min = curve.values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(
        curve.k_hat,
        curve.values.iter().position(|&v| v == min).unwrap() + 1
    );
}

#[test]
fn forced_intercept_shifts_with_outcome() {
    let d = toy(20, 5, 8);
    let cfg = CsaConfig {
        force_intercept: true,
        ..loo_cfg()
    };
    let a = fit_csa(&d, 0.3, &cfg).unwrap();
    assert_eq!(a.curve.values.len(), 4);
    assert!(a.final_fit.fits.iter().all(|f| f.cols[0] == 0));
    let shifted = d
        .with_outcome(d.y().iter().map(|v| v + 3.5).collect())
        .unwrap();
    let b = fit_csa(&shifted, 0.3, &cfg).unwrap();
    assert_eq!(a.k_hat(), b.k_hat());
    for i in 0..d.n() {
        assert!((a.predict(d.row(i)).unwrap() + 3.5 - b.predict(d.row(i)).unwrap()).abs() < 1e-9);
    }
    let no_intercept =
        Dataset::from_rows_unnamed(vec![1.0, 2.0], vec![vec![1.0, 2.0], vec![3.0, 4.0]], None)
            .unwrap();
    assert!(fit_csa(&no_intercept, 0.5, &cfg).is_err());
}

#[test]
fn final_plan_matches_cv_plan_and_is_thread_independent() {
    let d = toy(40, 12, 9);
    let cfg = CsaConfig {
        cap: 20,
        seed: 99,
        ..CsaConfig::default()
    };
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| fit_csa(&d, 0.5, &cfg)).unwrap();
    let b = four.install(|| fit_csa(&d, 0.5, &cfg)).unwrap();
    assert_eq!(a, b);
    let direct = fit_csa_for_k(&d, 0.5, a.k_hat(), &cfg).unwrap();
    assert_eq!(direct.plan, a.final_fit.plan);
    assert_eq!(direct.fits, a.final_fit.fits);
    let fpe = mean_check_loss(&d, &[0], &[0.0], 0.5);
    assert!(fpe.is_finite());
}

#[test]
fn single_size_config_and_small_samples() {
    let d = toy(10, 3, 10);
    let cfg = CsaConfig {
        k_max: Some(1),
        ..loo_cfg()
    };
    let p = fit_csa(&d, 0.5, &cfg).unwrap();
    assert_eq!(p.k_hat(), 1);
    assert_eq!(p.final_fit.fits.len(), 3);
    let tiny = toy(4, 3, 11);
    assert!(cv_value(&tiny, 0.5, 3, &loo_cfg()).is_err());
    assert!(cv_value(&tiny, 0.5, 2, &loo_cfg()).is_ok());
}
