//! Primal-dual interior point method for check-loss regression.
//!
//! Solves
//!
//! ```text
//! min  tau * 1'u + (1 - tau) * 1'v + 1/2 * sum_j h_j theta_j^2
//! s.t. X theta + u - v = y,   u, v >= 0
//! ```
//!
//! with Mehrotra predictor-corrector steps. The dual multiplier `a` of the
//! equality lives in `(tau - 1, tau)`, so the dual slacks are `tau - a` and
//! `1 - tau + a`. Each Newton step reduces to one `p x p` system
//! `(H + X' W^-1 X) d_theta = rhs`, which is the Frisch-Newton structure.
//! With `h = 0` this is plain quantile regression.

use super::SolverOptions;

pub(crate) struct IpmOutput {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const STEP_DAMP: f64 = 0.999_95;

pub(crate) fn solve(
    x: &[f64],
    y_raw: &[f64],
    n: usize,
    p: usize,
    tau: f64,
    hess: Option<&[f64]>,
    opts: &SolverOptions,
) -> IpmOutput {
    // Work on y scaled to unit mean magnitude; theta scales with it.
    let mut scale = y_raw.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
    if !(scale > 0.0 && scale.is_finite()) {
        scale = 1.0;
    }
    let y: Vec<f64> = y_raw.iter().map(|v| v / scale).collect();
    let h: Vec<f64> = match hess {
        Some(h) => h.iter().map(|v| v * scale).collect(),
        None => vec![0.0; p],
    };
    let quadratic = h.iter().any(|&v| v != 0.0);

    let y_inf = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let x_scale = (0..p)
        .map(|j| (0..n).map(|i| x[i * p + j].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);

    let mut theta = vec![0.0; p];
    let mut u: Vec<f64> = y.iter().map(|&r| r.max(0.0) + 1.0).collect();
    let mut v: Vec<f64> = y.iter().map(|&r| (-r).max(0.0) + 1.0).collect();
    let mut a = vec![tau - 0.5; n];

    let mut su = vec![0.0; n];
    let mut sv = vec![0.0; n];
    let mut rp = vec![0.0; n];
    let mut rd = vec![0.0; p];
    let mut winv = vec![0.0; n];
    let mut normal = vec![0.0; p * p];
    let mut chol = vec![0.0; p * p];
    let mut dth = vec![0.0; p];
    let mut da = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        for i in 0..n {
            su[i] = tau - a[i];
            sv[i] = 1.0 - tau + a[i];
        }
        // Residuals.
        for i in 0..n {
            let row = &x[i * p..(i + 1) * p];
            let fit: f64 = row.iter().zip(&theta).map(|(r, t)| r * t).sum();
            rp[i] = y[i] - fit - u[i] + v[i];
        }
        for j in 0..p {
            rd[j] = -h[j] * theta[j];
        }
        for i in 0..n {
            let row = &x[i * p..(i + 1) * p];
            for j in 0..p {
                rd[j] += row[j] * a[i];
            }
        }
        let gap: f64 = (0..n).map(|i| u[i] * su[i] + v[i] * sv[i]).sum();
        let pobj: f64 = (0..n).map(|i| tau * u[i] + (1.0 - tau) * v[i]).sum::<f64>()
            + 0.5 * (0..p).map(|j| h[j] * theta[j] * theta[j]).sum::<f64>();
        let rp_inf = rp.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let rd_inf = rd.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if gap <= opts.tol * (1.0 + pobj.abs())
            && rp_inf <= opts.tol * (1.0 + y_inf)
            && rd_inf <= opts.tol * (1.0 + x_scale)
        {
            converged = true;
            break;
        }
        iterations += 1;

        for i in 0..n {
            winv[i] = 1.0 / (u[i] / su[i] + v[i] / sv[i]);
        }
        // Normal matrix H + X' W^-1 X (lower triangle).
        normal.iter_mut().for_each(|e| *e = 0.0);
        for i in 0..n {
            let row = &x[i * p..(i + 1) * p];
            let w = winv[i];
            for r in 0..p {
                let xr = row[r] * w;
                let base = r * p;
                for c in 0..=r {
                    normal[base + c] += xr * row[c];
                }
            }
        }
        let mut max_diag = 0.0_f64;
        for j in 0..p {
            normal[j * p + j] += h[j];
            max_diag = max_diag.max(normal[j * p + j]);
        }
        let mut ridge = opts.ridge_eps * (1.0 + max_diag);
        loop {
            chol.copy_from_slice(&normal);
            for j in 0..p {
                chol[j * p + j] += ridge;
            }
            if cholesky_in_place(&mut chol, p) {
                break;
            }
            ridge = if ridge > 0.0 {
                ridge * 100.0
            } else {
                1e-12 * (1.0 + max_diag)
            };
            if !ridge.is_finite() || ridge > 1e6 * (1.0 + max_diag) {
                return finish(theta, scale, iterations, false);
            }
        }

        // Predictor (affine) direction: complementarity targets are zero.
        newton_direction(
            x, n, p, &chol, &rp, &rd, &winv, &u, &v, &su, &sv, None, &mut dth, &mut da, &mut du,
            &mut dv, &mut tmp,
        );
        let (ap, ad) = step_lengths(&u, &v, &su, &sv, &du, &dv, &da, 1.0);
        let (ap, ad) = if quadratic {
            (ap.min(ad), ap.min(ad))
        } else {
            (ap, ad)
        };
        let mu = gap / (2 * n) as f64;
        let mu_aff: f64 = (0..n)
            .map(|i| {
                (u[i] + ap * du[i]) * (su[i] - ad * da[i])
                    + (v[i] + ap * dv[i]) * (sv[i] + ad * da[i])
            })
            .sum::<f64>()
            / (2 * n) as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector targets: sigma*mu minus the second-order term of the affine step.
        let cu: Vec<f64> = (0..n).map(|i| sigma * mu + du[i] * da[i]).collect();
        let cv: Vec<f64> = (0..n).map(|i| sigma * mu - dv[i] * da[i]).collect();
        newton_direction(
            x,
            n,
            p,
            &chol,
            &rp,
            &rd,
            &winv,
            &u,
            &v,
            &su,
            &sv,
            Some((&cu, &cv)),
            &mut dth,
            &mut da,
            &mut du,
            &mut dv,
            &mut tmp,
        );
        let (ap, ad) = step_lengths(&u, &v, &su, &sv, &du, &dv, &da, STEP_DAMP);
        let (ap, ad) = if quadratic {
            (ap.min(ad), ap.min(ad))
        } else {
            (ap, ad)
        };
        for j in 0..p {
            theta[j] += ap * dth[j];
        }
        for i in 0..n {
            u[i] += ap * du[i];
            v[i] += ap * dv[i];
            a[i] += ad * da[i];
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return finish(vec![0.0; p], scale, iterations, false);
        }
    }
    finish(theta, scale, iterations, converged)
}

fn finish(mut theta: Vec<f64>, scale: f64, iterations: usize, converged: bool) -> IpmOutput {
    for t in &mut theta {
        *t *= scale;
    }
    IpmOutput {
        theta,
        iterations,
        converged,
    }
}

#[allow(clippy::too_many_arguments)]
fn newton_direction(
    x: &[f64],
    n: usize,
    p: usize,
    chol: &[f64],
    rp: &[f64],
    rd: &[f64],
    winv: &[f64],
    u: &[f64],
    v: &[f64],
    su: &[f64],
    sv: &[f64],
    targets: Option<(&[f64], &[f64])>,
    dth: &mut [f64],
    da: &mut [f64],
    du: &mut [f64],
    dv: &mut [f64],
    tmp: &mut [f64],
) {
    // q = cu/su - u - cv/sv + v ; tmp = W^-1 (rp - q)
    for i in 0..n {
        let (cu, cv) = targets.map_or((0.0, 0.0), |(cu, cv)| (cu[i], cv[i]));
        let q = cu / su[i] - u[i] - cv / sv[i] + v[i];
        tmp[i] = winv[i] * (rp[i] - q);
    }
    dth.copy_from_slice(rd);
    for i in 0..n {
        let row = &x[i * p..(i + 1) * p];
        for j in 0..p {
            dth[j] += row[j] * tmp[i];
        }
    }
    cholesky_solve(chol, p, dth);
    for i in 0..n {
        let row = &x[i * p..(i + 1) * p];
        let xd: f64 = row.iter().zip(dth.iter()).map(|(r, d)| r * d).sum();
        da[i] = tmp[i] - winv[i] * xd;
        let (cu, cv) = targets.map_or((0.0, 0.0), |(cu, cv)| (cu[i], cv[i]));
        du[i] = (cu - u[i] * su[i] + u[i] * da[i]) / su[i];
        dv[i] = (cv - v[i] * sv[i] - v[i] * da[i]) / sv[i];
    }
}

#[allow(clippy::too_many_arguments)]
fn step_lengths(
    u: &[f64],
    v: &[f64],
    su: &[f64],
    sv: &[f64],
    du: &[f64],
    dv: &[f64],
    da: &[f64],
    damp: f64,
) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for i in 0..u.len() {
        if du[i] < 0.0 {
            ap = ap.min(-u[i] / du[i]);
        }
        if dv[i] < 0.0 {
            ap = ap.min(-v[i] / dv[i]);
        }
        // su moves by -da, sv by +da.
        if da[i] > 0.0 {
            ad = ad.min(su[i] / da[i]);
        }
        if da[i] < 0.0 {
            ad = ad.min(-sv[i] / da[i]);
        }
    }
    ((damp * ap).min(1.0), (damp * ad).min(1.0))
}

/// Lower Cholesky factor in place (row-major, lower triangle used).
fn cholesky_in_place(a: &mut [f64], p: usize) -> bool {
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= l[k * p + i] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
}
