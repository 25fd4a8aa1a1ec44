use csaqr::predictor::{CsaSettings, FittedPredictor};
use csaqr::simulate::{
    fpe_of, gen_equicorrelated_normal, gen_replication, run_study, signal_variance,
    solve_theta_for_r2, summarize, Signal, SimDesign,
};
use csaqr::{Dataset, MethodSpec, SolverOptions};

fn corr(x: &[f64], p: usize, a: usize, b: usize) -> f64 {
    let n = x.len() / p;
    let col = |j: usize| (0..n).map(move |i| x[i * p + j]);
    let ma = col(a).sum::<f64>() / n as f64;
    let mb = col(b).sum::<f64>() / n as f64;
    let cov: f64 = col(a).zip(col(b)).map(|(u, v)| (u - ma) * (v - mb)).sum();
    let va: f64 = col(a).map(|u| (u - ma).powi(2)).sum();
    let vb: f64 = col(b).map(|v| (v - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn equicorrelated_sample_moments() {
    let n = 20_000;
    let x = gen_equicorrelated_normal(n, 4, 0.9, 1).unwrap();
    // SE of a sample correlation near r is about (1 - r^2) / sqrt(n).
    let se = (1.0 - 0.81) / (n as f64).sqrt();
    for (a, b) in [(0, 1), (1, 3), (2, 3)] {
        assert!((corr(&x, 4, a, b) - 0.9).abs() < 3.0 * se);
    }
    let z = gen_equicorrelated_normal(n, 3, 0.0, 2).unwrap();
    assert!(corr(&z, 3, 0, 2).abs() < 3.0 / (n as f64).sqrt());
    assert_eq!(x, gen_equicorrelated_normal(n, 4, 0.9, 1).unwrap());
    assert!(gen_equicorrelated_normal(5, 2, 1.0, 1).is_err());
}

#[test]
fn closed_form_signal_variance_matches_monte_carlo() {
    let betas: Vec<f64> = (2..=1000).map(|j| 1.0 / j as f64).collect();
    let exact0: f64 = betas.iter().map(|b| b * b).sum();
    assert!((signal_variance(&betas, 0.0) - exact0).abs() < 1e-15);
    for rho in [0.0, 0.9] {
        let draws = 20_000;
        let x = gen_equicorrelated_normal(draws, betas.len(), rho, 9).unwrap();
        let s: Vec<f64> = (0..draws)
            .map(|i| {
                betas
                    .iter()
                    .enumerate()
                    .map(|(j, b)| b * x[i * betas.len() + j])
                    .sum()
            })
            .collect();
        let m = s.iter().sum::<f64>() / draws as f64;
        let var = s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let v = signal_variance(&betas, rho);
        let se = v * (2.0 / draws as f64).sqrt();
        assert!((var - v).abs() < 3.0 * se, "rho {rho}: {var} vs {v}");
    }
}

#[test]
fn realized_r2_and_error_variance() {
    let design = SimDesign {
        n: 100_000,
        ..SimDesign::correct(Signal::Decreasing, 50, 5, 1)
    };
    let (train, _) = gen_replication(&design, 4).unwrap();
    let betas = design.coefficients();
    let theta = solve_theta_for_r2(design.r2, design.rho_x, &betas[1..]).unwrap();
    let signal: Vec<f64> = (0..train.n())
        .map(|i| {
            theta
                * train
                    .row(i)
                    .iter()
                    .zip(&betas)
                    .map(|(x, b)| x * b)
                    .sum::<f64>()
        })
        .collect();
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let r2 = var(&signal) / var(train.y());
    assert!((r2 - 0.5).abs() < 0.01, "{r2}");
    let noise_var = var(train.y()) - theta * theta * signal_variance(&betas[1..], design.rho_x);
    assert!((noise_var - 1.0).abs() < 0.03, "{noise_var}");
}

#[test]
fn misspecified_error_variance() {
    let design = SimDesign {
        n: 20_000,
        ..SimDesign::misspecified(50, 0.5, 0.5, 0.9, 1)
    };
    let (train, _) = gen_replication(&design, 5).unwrap();
    let betas = design.coefficients();
    let theta = solve_theta_for_r2(0.5, 0.9, &betas[1..]).unwrap();
    let v = train
        .y()
        .iter()
        .map(|y| y - theta)
        .map(|e| e * e)
        .sum::<f64>()
        / train.n() as f64;
    // Var(y) = theta^2 V + 1 = 2 when R^2 = 0.5.
    assert!((v - 2.0).abs() < 0.1, "{v}");
}

#[test]
fn fpe_arithmetic() {
    let d = Dataset::from_rows_unnamed(vec![1.0; 4], vec![vec![1.0]; 4], Some(0)).unwrap();
    let zero = FittedPredictor::Unconditional { value: 0.0 };
    assert_eq!(fpe_of(&zero, &d, 0.5).unwrap(), 0.5);
    let perfect = FittedPredictor::Unconditional { value: 1.0 };
    assert_eq!(fpe_of(&perfect, &d, 0.3).unwrap(), 0.0);
    let y = [0.5, -1.0, 2.0, 0.0, 3.5];
    let t = Dataset::from_rows_unnamed(y.to_vec(), vec![vec![1.0]; 5], Some(0)).unwrap();
    let c = FittedPredictor::Unconditional { value: 0.7 };
    let hand = y
        .iter()
        .map(|v| {
            let u = v - 0.7;
            if u > 0.0 {
                0.2 * u
            } else {
                -0.8 * u
            }
        })
        .sum::<f64>()
        / 5.0;
    assert!((fpe_of(&c, &t, 0.2).unwrap() - hand).abs() < 1e-15);
}

fn small_design(reps: usize) -> SimDesign {
    SimDesign {
        n: 30,
        k_obs: Some(5),
        n_test: 50,
        ..SimDesign::misspecified(30, 0.8, 0.5, 0.5, reps)
    }
}

fn csa() -> MethodSpec {
    MethodSpec::Csa(CsaSettings {
        cap: 10,
        ..CsaSettings::default()
    })
}

#[test]
fn single_method_always_wins() {
    let res = run_study(
        &small_design(4),
        &[MethodSpec::Unconditional],
        1,
        1,
        &SolverOptions::default(),
    )
    .unwrap();
    assert_eq!(res.stats[0].winning_ratio, Some(1.0));
    assert_eq!(res.stats[0].loss_to_csa, None);
}

#[test]
fn clones_never_win_and_never_lose() {
    let res = run_study(
        &small_design(4),
        &[csa(), csa()],
        2,
        1,
        &SolverOptions::default(),
    )
    .unwrap();
    assert_eq!(res.methods, vec!["CSA", "CSA#2"]);
    assert_eq!(res.stats[0].winning_ratio, Some(0.0));
    assert_eq!(res.stats[1].winning_ratio, Some(0.0));
    assert_eq!(res.stats[1].loss_to_csa, Some(0.0));
    assert_eq!(res.stats[0].loss_to_csa, None);
}

#[test]
fn study_is_thread_count_independent_and_sensible() {
    let methods = [csa(), MethodSpec::Jma, MethodSpec::Unconditional];
    let opts = SolverOptions::default();
    let a = run_study(&small_design(6), &methods, 3, 1, &opts).unwrap();
    let b = run_study(&small_design(6), &methods, 3, 3, &opts).unwrap();
    assert_eq!(a, b);
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    a.write_long_csv(&mut ca).unwrap();
    b.write_long_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    let total: f64 = a.stats.iter().map(|s| s.winning_ratio.unwrap()).sum();
    assert!(total <= 1.0 + 1e-12);
    assert!(a.fpe.iter().flatten().all(|v| v.unwrap() >= 0.0));
    let uq = a.stats_for("UQ").unwrap().avg_fpe.unwrap();
    let c = a.stats_for("CSA").unwrap().avg_fpe.unwrap();
    assert!(uq > c);
    assert!(a.stats_for("CSA").unwrap().mean_k_hat.is_some());
}

#[test]
fn failures_are_dropped_pairwise() {
    let labels = vec!["CSA".to_string(), "JMA".to_string()];
    let fpe = vec![
        vec![Some(1.0), Some(2.0)],
        vec![Some(3.0), None],
        vec![Some(2.0), Some(1.0)],
        vec![None, Some(5.0)],
    ];
    let ks = vec![vec![None, None]; 4];
    let s = summarize(&labels, &fpe, &ks, Some(0));
    assert_eq!(s[0].n_ok, 3);
    assert_eq!(s[0].avg_fpe, Some(2.0));
    assert_eq!(s[1].avg_fpe, Some(8.0 / 3.0));
    assert_eq!(s[0].winning_ratio, Some(0.5));
    assert_eq!(s[1].loss_to_csa, Some(0.5));
}

#[test]
fn invalid_designs_are_rejected() {
    let mut d = small_design(1);
    d.rho_x = 1.0;
    assert!(run_study(&d, &[csa()], 0, 1, &SolverOptions::default()).is_err());
    let mut c = SimDesign::correct(Signal::Sparse, 30, 5, 1);
    c.signal = None;
    assert!(c.validate().is_err());
}
