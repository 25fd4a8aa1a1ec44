use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, CsaError, Result};
use crate::seed::{derive_seed, rng, streams};

/// Latent regressor count of the misspecified family.
pub const LATENT_COLUMNS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `y = theta * sum_{j<=1000} x_j / j + e`, only the first `K` columns observed.
    Misspecified,
    /// `y = theta * sum_{j<=K} beta_j x_j + e`, all `K` columns observed.
    Correct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    /// `beta_j = 1 / j`.
    Decreasing,
    /// `beta_j = 1`.
    Constant,
    /// `beta_1 = beta_2 = 1`, zero otherwise.
    Sparse,
}

/// One Monte Carlo design. Column 1 is the constant; the remaining columns
/// are equicorrelated standard normals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDesign {
    pub family: Family,
    /// Required for the correct-specification family only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<Signal>,
    pub n: usize,
    /// Observed column count; defaults to `floor(4 ln n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_obs: Option<usize>,
    pub r2: f64,
    pub tau: f64,
    pub rho_x: f64,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    pub reps: usize,
}

fn default_n_test() -> usize {
    100
}

/// `floor(4 ln n)`: 15 for n = 50 and 20 for n = 150.
pub fn default_k_obs(n: usize) -> usize {
    (4.0 * (n as f64).ln()).floor() as usize
}

impl SimDesign {
    pub fn misspecified(n: usize, r2: f64, tau: f64, rho_x: f64, reps: usize) -> Self {
        Self {
            family: Family::Misspecified,
            signal: None,
            n,
            k_obs: None,
            r2,
            tau,
            rho_x,
            n_test: 100,
            reps,
        }
    }

    pub fn correct(signal: Signal, n: usize, k: usize, reps: usize) -> Self {
        Self {
            family: Family::Correct,
            signal: Some(signal),
            n,
            k_obs: Some(k),
            r2: 0.5,
            tau: 0.5,
            rho_x: 0.9,
            n_test: 100,
            reps,
        }
    }

    pub fn observed(&self) -> usize {
        self.k_obs.unwrap_or_else(|| default_k_obs(self.n))
    }

    pub fn latent(&self) -> usize {
        match self.family {
            Family::Misspecified => LATENT_COLUMNS,
            Family::Correct => self.observed(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::qr::check_tau(self.tau)?;
        if !(0.0..1.0).contains(&self.r2) {
            return Err(invalid(format!("r2 {} outside [0, 1)", self.r2)));
        }
        if !(0.0..1.0).contains(&self.rho_x) {
            return Err(invalid(format!("rho_x {} outside [0, 1)", self.rho_x)));
        }
        if self.n_test == 0 || self.reps == 0 {
            return Err(invalid("n_test and reps must be at least 1"));
        }
        let k = self.observed();
        if k == 0 || k > self.latent() {
            return Err(invalid(format!(
                "observed column count {k} outside 1..={}",
                self.latent()
            )));
        }
        if self.n < 2 {
            return Err(invalid("n must be at least 2"));
        }
        match (self.family, self.signal) {
            (Family::Correct, None) => Err(invalid("correct-specification designs need a signal")),
            (Family::Misspecified, Some(_)) => Err(invalid(
                "signal only applies to correct-specification designs",
            )),
            _ => Ok(()),
        }
    }

    /// `beta_1..beta_L` for all latent columns, constant first.
    pub fn coefficients(&self) -> Vec<f64> {
        let l = self.latent();
        match (self.family, self.signal) {
            (Family::Correct, Some(Signal::Constant)) => vec![1.0; l],
            (Family::Correct, Some(Signal::Sparse)) => {
                (1..=l).map(|j| if j <= 2 { 1.0 } else { 0.0 }).collect()
            }
            _ => (1..=l).map(|j| 1.0 / j as f64).collect(),
        }
    }
}

/// Row-major `n x p` standard normals with common pairwise correlation `rho`,
/// via `x_j = sqrt(rho) z + sqrt(1 - rho) e_j`.
pub fn gen_equicorrelated_normal(n: usize, p: usize, rho: f64, seed: u64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("rho {rho} outside [0, 1)")));
    }
    let mut g = rng(seed);
    Ok(equicorrelated(&mut g, n, p, rho))
}

fn equicorrelated(g: &mut impl Rng, n: usize, p: usize, rho: f64) -> Vec<f64> {
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut out = Vec::with_capacity(n * p);
    for _ in 0..n {
        let z: f64 = g.sample(StandardNormal);
        for _ in 0..p {
            let e: f64 = g.sample(StandardNormal);
            out.push(a * z + b * e);
        }
    }
    out
}

/// Variance of `sum_j beta_j x_j` over equicorrelated unit-variance columns.
pub fn signal_variance(betas: &[f64], rho: f64) -> f64 {
    let s: f64 = betas.iter().sum();
    let s2: f64 = betas.iter().map(|b| b * b).sum();
    (1.0 - rho) * s2 + rho * s * s
}

/// Scale `theta` giving population R^2 = `r2` when the error variance is one.
/// `stochastic_betas` excludes the constant column.
pub fn solve_theta_for_r2(r2: f64, rho: f64, stochastic_betas: &[f64]) -> Result<f64> {
    if !(0.0..1.0).contains(&r2) {
        return Err(invalid(format!("r2 {r2} outside [0, 1)")));
    }
    if r2 == 0.0 {
        return Ok(0.0);
    }
    let v = signal_variance(stochastic_betas, rho);
    if !(v > 0.0) {
        return Err(CsaError::ImpossibleDesign(
            "signal has zero variance but r2 > 0".into(),
        ));
    }
    Ok((r2 / (1.0 - r2) / v).sqrt())
}

/// Training and test samples of one replication. Both expose the first
/// `k_obs` columns, the constant being column 0.
pub fn gen_replication(design: &SimDesign, rep_seed: u64) -> Result<(Dataset, Dataset)> {
    design.validate()?;
    let betas = design.coefficients();
    let theta = solve_theta_for_r2(design.r2, design.rho_x, &betas[1..])?;
    let mut g = rng(derive_seed(rep_seed, streams::DATA));
    let train = draw(design, &betas, theta, design.n, &mut g)?;
    let test = draw(design, &betas, theta, design.n_test, &mut g)?;
    Ok((train, test))
}

fn draw(
    design: &SimDesign,
    betas: &[f64],
    theta: f64,
    n: usize,
    g: &mut impl Rng,
) -> Result<Dataset> {
    let l = betas.len();
    let k = design.observed();
    let latent = equicorrelated(g, n, l - 1, design.rho_x);
    let mut x = Vec::with_capacity(n * k);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let row = &latent[i * (l - 1)..(i + 1) * (l - 1)];
        let signal = betas[0] + betas[1..].iter().zip(row).map(|(b, v)| b * v).sum::<f64>();
        let e: f64 = g.sample(StandardNormal);
        y.push(theta * signal + e);
        x.push(1.0);
        x.extend_from_slice(&row[..k - 1]);
    }
    let names = (1..=k).map(|j| format!("x{j}")).collect();
    Dataset::from_row_major(y, x, names, Some(0))
}
