//! Basic-solution (simplex) descent for check-loss regression.
//!
//! A vertex is a set of `p` observations interpolated exactly
//! (`theta = X_h^-1 y_h`). From a vertex we move along the edge that frees one
//! basic observation, stepping across as many residual sign changes as keep
//! the directional derivative negative, then swap the freed observation for
//! the one where the slope turns non-negative. Every remaining observation
//! carries a sign so that zero residuals have a definite dual value; optimality
//! is certified when every edge has a non-negative directional derivative.
//!
//! The same machinery restarts from a previous optimum after observations are
//! dropped, which is what makes jackknife refits cheap.

use super::Problem;

const OPT_TOL: f64 = 1e-10;
const REFACTOR_EVERY: usize = 32;

#[derive(Debug, Clone)]
pub(crate) struct Vertex {
    /// Row index of the observation interpolated by basis position `j`.
    pub basis: Vec<usize>,
    /// `X_h^-1`, row-major `p x p`; column `j` is the edge direction for position `j`.
    dinv: Vec<f64>,
    pub theta: Vec<f64>,
    resid: Vec<f64>,
    /// `+1`/`-1` for non-basic rows, `0` for basic or inactive rows.
    sign: Vec<i8>,
    active: Vec<bool>,
    updates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VertexFailure {
    Singular,
    Unbounded,
    PivotLimit,
    CannotRepair,
}

impl Vertex {
    pub fn new(prob: &Problem, basis: Vec<usize>) -> Result<Self, VertexFailure> {
        let p = prob.p;
        let mut v = Vertex {
            basis,
            dinv: vec![0.0; p * p],
            theta: vec![0.0; p],
            resid: vec![0.0; prob.n],
            sign: vec![1; prob.n],
            active: vec![true; prob.n],
            updates: 0,
        };
        v.refactor(prob)?;
        v.refresh(prob);
        Ok(v)
    }

    pub fn deactivate(&mut self, rows: &[usize]) {
        for &r in rows {
            self.active[r] = false;
            self.sign[r] = 0;
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    fn refactor(&mut self, prob: &Problem) -> Result<(), VertexFailure> {
        let p = prob.p;
        let mut m = vec![0.0; p * p];
        for (j, &r) in self.basis.iter().enumerate() {
            m[j * p..(j + 1) * p].copy_from_slice(prob.row(r));
        }
        self.dinv = invert(&m, p).ok_or(VertexFailure::Singular)?;
        self.updates = 0;
        Ok(())
    }

    fn refresh(&mut self, prob: &Problem) {
        let p = prob.p;
        for l in 0..p {
            let mut t = 0.0;
            for j in 0..p {
                t += self.dinv[l * p + j] * prob.y[self.basis[j]];
            }
            self.theta[l] = t;
        }
        let ztol = prob.zero_tol() * 1e-4;
        for i in 0..prob.n {
            if !self.active[i] {
                continue;
            }
            let r = prob.y[i] - dot(prob.row(i), &self.theta);
            self.resid[i] = r;
            if r > ztol {
                self.sign[i] = 1;
            } else if r < -ztol {
                self.sign[i] = -1;
            } else if self.sign[i] == 0 {
                self.sign[i] = 1;
            }
        }
        for &b in &self.basis {
            self.resid[b] = 0.0;
            self.sign[b] = 0;
        }
    }

    fn column(&self, j: usize, p: usize) -> Vec<f64> {
        (0..p).map(|l| self.dinv[l * p + j]).collect()
    }

    /// Replaces basis row at position `j` by `enter`.
    fn pivot(&mut self, prob: &Problem, j: usize, enter: usize) -> Result<(), VertexFailure> {
        let p = prob.p;
        let xe = prob.row(enter);
        let mut vrow = vec![0.0; p];
        for (m, vm) in vrow.iter_mut().enumerate() {
            let mut s = 0.0;
            for l in 0..p {
                s += xe[l] * self.dinv[l * p + m];
            }
            *vm = s;
        }
        let piv = vrow[j];
        if piv.abs() < 1e-300 {
            return Err(VertexFailure::Singular);
        }
        vrow[j] -= 1.0;
        let dj = self.column(j, p);
        for l in 0..p {
            let f = dj[l] / piv;
            for m in 0..p {
                self.dinv[l * p + m] -= f * vrow[m];
            }
        }
        self.basis[j] = enter;
        self.sign[enter] = 0;
        self.updates += 1;
        if self.updates >= REFACTOR_EVERY {
            self.refactor(prob)?;
        }
        Ok(())
    }

    /// Swaps out basic rows that were deactivated, each time moving along the
    /// freed edge to the best point of the remaining objective.
    pub fn repair(&mut self, prob: &Problem) -> Result<(), VertexFailure> {
        let p = prob.p;
        for j in 0..p {
            if self.active[self.basis[j]] {
                continue;
            }
            let d = self.column(j, p);
            // theta(t) = theta - t d  =>  r_i(t) = r_i + t w_i
            let mut bps: Vec<(f64, usize, f64)> = Vec::new();
            let mut wmax = 0.0_f64;
            let mut ws = Vec::new();
            for i in 0..prob.n {
                if self.active[i] && self.sign[i] != 0 {
                    let w = dot(prob.row(i), &d);
                    wmax = wmax.max(w.abs());
                    ws.push((i, w));
                }
            }
            let wtol = 1e-11 * wmax;
            let mut slope = 0.0;
            for (i, w) in ws {
                if w.abs() <= wtol {
                    continue;
                }
                slope += if w > 0.0 {
                    (prob.tau - 1.0) * w
                } else {
                    prob.tau * w
                };
                bps.push((-self.resid[i] / w, i, w.abs()));
            }
            if bps.is_empty() {
                return Err(VertexFailure::CannotRepair);
            }
            bps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut enter = None;
            for &(_, i, aw) in &bps {
                slope += aw;
                if slope >= 0.0 {
                    enter = Some(i);
                    break;
                }
            }
            let enter = enter.unwrap_or(bps.last().unwrap().1);
            self.pivot(prob, j, enter)?;
            self.refresh(prob);
        }
        Ok(())
    }

    /// Runs descent pivots until optimal. Returns the pivot count.
    pub fn optimize(&mut self, prob: &Problem, max_pivots: usize) -> Result<usize, VertexFailure> {
        let p = prob.p;
        let tau = prob.tau;
        let mut pivots = 0;
        let mut bland = false;
        let mut g = vec![0.0; p];
        let mut ws: Vec<(usize, f64)> = Vec::with_capacity(prob.n);
        let mut bps: Vec<(f64, usize, f64)> = Vec::with_capacity(prob.n);
        loop {
            g.iter_mut().for_each(|e| *e = 0.0);
            for i in 0..prob.n {
                if !self.active[i] || self.sign[i] == 0 {
                    continue;
                }
                let psi = if self.sign[i] > 0 { tau } else { tau - 1.0 };
                for (gl, xl) in g.iter_mut().zip(prob.row(i)) {
                    *gl += psi * xl;
                }
            }
            // Reduced costs of freeing basic position j upward (+) or downward (-).
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..p {
                let mut z = 0.0;
                for l in 0..p {
                    z += self.dinv[l * p + j] * g[l];
                }
                for (sigma, c) in [(1.0, z + tau), (-1.0, 1.0 - tau - z)] {
                    if c >= -OPT_TOL {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bj, _, bc)) => {
                            if bland {
                                self.basis[j] < self.basis[bj]
                            } else {
                                c < bc
                            }
                        }
                    };
                    if better {
                        best = Some((j, sigma, c));
                    }
                }
            }
            let Some((j, sigma, c)) = best else {
                return Ok(pivots);
            };
            if pivots >= max_pivots {
                return Err(VertexFailure::PivotLimit);
            }

            let d = self.column(j, p);
            ws.clear();
            let mut wmax = 0.0_f64;
            for i in 0..prob.n {
                if self.active[i] && self.sign[i] != 0 {
                    let w = sigma * dot(prob.row(i), &d);
                    wmax = wmax.max(w.abs());
                    ws.push((i, w));
                }
            }
            let wtol = 1e-11 * wmax;
            bps.clear();
            for &(i, w) in &ws {
                let crosses = (self.sign[i] > 0 && w < -wtol) || (self.sign[i] < 0 && w > wtol);
                if crosses {
                    bps.push(((-self.resid[i] / w).max(0.0), i, w.abs()));
                }
            }
            bps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut slope = c;
            let mut chosen = None;
            for &(t, i, aw) in &bps {
                slope += aw;
                if slope >= 0.0 {
                    chosen = Some((t, i));
                    break;
                }
            }
            let Some((step, enter)) = chosen else {
                return Err(VertexFailure::Unbounded);
            };
            let leaving = self.basis[j];
            self.sign[leaving] = if sigma > 0.0 { 1 } else { -1 };
            self.pivot(prob, j, enter)?;
            self.refresh(prob);
            pivots += 1;
            if step <= 0.0 {
                bland = true;
            }
        }
    }

    #[cfg(test)]
    pub fn residuals(&self) -> &[f64] {
        &self.resid
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gauss-Jordan inverse with partial pivoting; `None` when numerically singular.
pub(crate) fn invert(m: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; p * p];
    for i in 0..p {
        inv[i * p + i] = 1.0;
    }
    let scale = a.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..p {
        let (piv_row, piv_val) = (col..p)
            .map(|r| (r, a[r * p + col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if piv_val <= 1e-13 * scale {
            return None;
        }
        if piv_row != col {
            for k in 0..p {
                a.swap(col * p + k, piv_row * p + k);
                inv.swap(col * p + k, piv_row * p + k);
            }
        }
        let d = a[col * p + col];
        for k in 0..p {
            a[col * p + k] /= d;
            inv[col * p + k] /= d;
        }
        for r in 0..p {
            if r == col {
                continue;
            }
            let f = a[r * p + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..p {
                a[r * p + k] -= f * a[col * p + k];
                inv[r * p + k] -= f * inv[col * p + k];
            }
        }
    }
    Some(inv)
}
