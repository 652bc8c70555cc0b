use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::assemble::AssembledForms;
use super::band::{dot, BandCholesky, BandMatrix};
use crate::error::{invalid, Result};

/// Output of [`min_rayleigh`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RayleighSolution {
    /// Smallest generalized Rayleigh quotient `x^T S x / x^T G x`.
    pub lambda: f64,
    pub eigvec: Vec<f64>,
    /// `|S x - lambda G x| / |G x|`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Krylov space size before a restart.
const MAX_BASIS: usize = 120;
/// Ritz vectors kept across a restart.
const KEEP: usize = 30;
/// Ritz values are checked every this many steps.
const CHECK_EVERY: usize = 10;

struct Operator<'a> {
    forms: &'a AssembledForms,
    /// `S`, shifted in free mode.
    s: BandMatrix,
    chol: BandCholesky,
    /// `S^{-1} c` for each constraint and the inverse of `C^T S^{-1} C`.
    y: Vec<Vec<f64>>,
    cy_inv: DMatrix<f64>,
    n: usize,
}

impl<'a> Operator<'a> {
    fn new(forms: &'a AssembledForms) -> Result<Self> {
        let n = forms.dimension();
        let s = match &forms.deflation {
            // the strain form vanishes on rigid motions; a tiny shift keeps the
            // factorization definite and is removed by the constraints
            Some(_) => {
                let shift = 1e-13 * forms.s.max_entry().max(forms.g.max_entry());
                let mut s = forms.s.add_scaled(shift / forms.g.max_entry().max(1e-300), &forms.g);
                if let Some(m) = &forms.mass {
                    s = s.add_scaled(shift / m.max_entry().max(1e-300), m);
                }
                s
            }
            None => forms.s.clone(),
        };
        let chol = s.cholesky()?;
        let y: Vec<Vec<f64>> = forms
            .constraints
            .iter()
            .map(|c| {
                let mut v = c.clone();
                chol.solve_in_place(&mut v);
                v
            })
            .collect();
        let k = y.len();
        let cy = DMatrix::from_fn(k, k, |i, j| dot(&forms.constraints[i], &y[j]));
        let cy_inv = if k == 0 {
            cy
        } else {
            cy.try_inverse().ok_or_else(|| invalid("constraints", "constraint vectors are linearly dependent"))?
        };
        Ok(Operator { forms, s, chol, y, cy_inv, n })
    }

    /// Removes the constrained directions, `S`-orthogonally.
    fn project(&self, x: &mut [f64]) {
        if self.y.is_empty() {
            return;
        }
        let k = self.y.len();
        let r = DVector::from_fn(k, |i, _| dot(&self.forms.constraints[i], x));
        let a = &self.cy_inv * r;
        for (j, yj) in self.y.iter().enumerate() {
            for (xi, v) in x.iter_mut().zip(yj) {
                *xi -= a[j] * v;
            }
        }
    }

    fn s_apply(&self, x: &[f64], y: &mut [f64]) {
        self.s.matvec(x, y);
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Smallest generalized Rayleigh quotient of the pair `(S, G)`.
///
/// Runs thick-restart Lanczos on `S^{-1} G` in the `S` inner product with
/// full reorthogonalization; the largest eigenvalue `mu` of that operator is
/// `1 / lambda_min`. On restart the leading Ritz vectors are kept. The start
/// vector is drawn from a seeded generator, so the output is deterministic
/// for fixed inputs. When `max_iter` expansion steps pass without reaching
/// `tol`, the best Ritz pair is returned with `converged = false`.
pub fn min_rayleigh(forms: &AssembledForms, tol: f64, max_iter: usize, seed: u64) -> Result<RayleighSolution> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    if forms.deflation.is_none() {
        forms.g.cholesky()?;
    }
    let op = Operator::new(forms)?;
    let n = op.n;
    let full = n.saturating_sub(op.y.len()).max(1);
    let max_basis = MAX_BASIS.min(full);
    let keep = KEEP.min(max_basis.saturating_sub(1)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut sq: Vec<Vec<f64>> = Vec::new();
    let mut gq: Vec<Vec<f64>> = Vec::new();
    // h[i][j] = q_i^T G q_j for j <= i
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut source: Option<usize> = None;

    loop {
        let mut w = match source {
            Some(i) => {
                let mut w = gq[i].clone();
                op.chol.solve_in_place(&mut w);
                w
            }
            None => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        op.project(&mut w);
        let before = {
            let mut sw = vec![0.0; n];
            op.s_apply(&w, &mut sw);
            dot(&w, &sw).max(0.0).sqrt()
        };
        for _ in 0..2 {
            for i in 0..q.len() {
                let c = dot(&sq[i], &w);
                axpy(-c, &q[i], &mut w);
            }
        }
        let mut sw = vec![0.0; n];
        op.s_apply(&w, &mut sw);
        let b = dot(&w, &sw).max(0.0).sqrt();
        if !(b > 1e-10 * before) || !b.is_finite() {
            // invariant subspace: continue from a fresh random direction
            if q.len() >= full {
                break;
            }
            source = None;
            if before == 0.0 && q.is_empty() {
                return Err(invalid("start", "start vector vanishes after projection"));
            }
            continue;
        }
        w.iter_mut().for_each(|x| *x /= b);
        sw.iter_mut().for_each(|x| *x /= b);
        let mut gw = vec![0.0; n];
        forms.apply_g(&w, &mut gw);
        h.push(q.iter().map(|qi| dot(qi, &gw)).chain(std::iter::once(dot(&w, &gw))).collect());
        q.push(w);
        sq.push(sw);
        gq.push(gw);
        source = Some(q.len() - 1);
        iterations += 1;

        let m = q.len();
        let exhausted = iterations >= max_iter.max(1);
        if !m.is_multiple_of(CHECK_EVERY) && m < max_basis && !exhausted && m < full {
            continue;
        }
        let hm = DMatrix::from_fn(m, m, |r, c| if c <= r { h[r][c] } else { h[c][r] });
        let eig = SymmetricEigen::new(hm);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let combine = |vs: &[Vec<f64>], col: usize| {
            let mut x = vec![0.0; n];
            for (i, v) in vs.iter().enumerate() {
                axpy(eig.eigenvectors[(i, col)], v, &mut x);
            }
            x
        };
        let top = order[0];
        let x = combine(&q, top);
        let residual = pair_residual(forms, &x, 1.0 / eig.eigenvalues[top]);
        if residual <= tol || m >= full {
            return Ok(solution(forms, x, residual, iterations, residual <= tol || m >= full));
        }
        if best.as_ref().is_none_or(|b| residual < b.1) {
            best = Some((x, residual));
        }
        if exhausted {
            break;
        }
        if m >= max_basis {
            let kept: Vec<usize> = order[..keep].to_vec();
            let nq: Vec<Vec<f64>> = kept.iter().map(|&c| combine(&q, c)).collect();
            let nsq: Vec<Vec<f64>> = kept.iter().map(|&c| combine(&sq, c)).collect();
            let ngq: Vec<Vec<f64>> = kept.iter().map(|&c| combine(&gq, c)).collect();
            h = (0..keep)
                .map(|i| {
                    let mut row = vec![0.0; i + 1];
                    row[i] = eig.eigenvalues[kept[i]];
                    row
                })
                .collect();
            q = nq;
            sq = nsq;
            gq = ngq;
            source = Some(0);
        }
    }
    let (x, residual) = match best {
        Some(b) => b,
        None => {
            let x = q.last().cloned().ok_or_else(|| invalid("start", "no Krylov vectors"))?;
            let lambda = forms.s_quadratic(&x) / forms.g_quadratic(&x);
            let r = pair_residual(forms, &x, lambda);
            (x, r)
        }
    };
    Ok(solution(forms, x, residual, iterations, false))
}

fn pair_residual(forms: &AssembledForms, x: &[f64], lambda: f64) -> f64 {
    let n = x.len();
    let (mut sx, mut gx) = (vec![0.0; n], vec![0.0; n]);
    forms.s.matvec(x, &mut sx);
    forms.apply_g(x, &mut gx);
    let gn = norm(&gx);
    axpy(-lambda, &gx, &mut sx);
    norm(&sx) / gn
}

fn solution(forms: &AssembledForms, mut x: Vec<f64>, residual: f64, iterations: usize, converged: bool) -> RayleighSolution {
    let g = forms.g_quadratic(&x);
    let scale = 1.0 / g.sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    // fix the sign so the largest entry is positive
    let imax = x.iter().enumerate().fold(0, |m, (i, v)| if v.abs() > x[m].abs() { i } else { m });
    if x[imax] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let lambda = forms.s_quadratic(&x) / forms.g_quadratic(&x);
    RayleighSolution { lambda, eigvec: x, residual, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_forms_give_one() {
        let a = BandMatrix::from_dense(3, &[2.0, 0.5, 0.0, 0.5, 3.0, 0.2, 0.0, 0.2, 1.0]);
        let forms = AssembledForms::from_matrices(a.clone(), a).unwrap();
        let sol = min_rayleigh(&forms, 1e-10, 100, 1).unwrap();
        assert!((sol.lambda - 1.0).abs() < 1e-12 && sol.converged);
    }

    #[test]
    fn diagonal_pair() {
        let s = BandMatrix::from_dense(2, &[2.0, 0.0, 0.0, 3.0]);
        let g = BandMatrix::from_dense(2, &[1.0, 0.0, 0.0, 1.0]);
        let sol = min_rayleigh(&AssembledForms::from_matrices(s, g).unwrap(), 1e-10, 100, 7).unwrap();
        assert!((sol.lambda - 2.0).abs() < 1e-12);
        assert!(sol.eigvec[1].abs() < 1e-8);
    }

    #[test]
    fn larger_pair_matches_dense_solver() {
        let n = 60;
        let mut s = vec![0.0; n * n];
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            s[i * n + i] = 2.0 + (i as f64 * 0.3).sin();
            g[i * n + i] = 1.0 + 0.01 * i as f64;
            if i + 1 < n {
                s[i * n + i + 1] = -0.4;
                s[(i + 1) * n + i] = -0.4;
                g[i * n + i + 1] = 0.1;
                g[(i + 1) * n + i] = 0.1;
            }
        }
        let forms = AssembledForms::from_matrices(BandMatrix::from_dense(n, &s), BandMatrix::from_dense(n, &g)).unwrap();
        let sol = min_rayleigh(&forms, 1e-10, 500, 3).unwrap();
        // dense reference via Cholesky of G
        let gm = DMatrix::from_row_slice(n, n, &g);
        let sm = DMatrix::from_row_slice(n, n, &s);
        let l = gm.cholesky().unwrap().l();
        let li = l.clone().try_inverse().unwrap();
        let c = &li * sm * li.transpose();
        let min = SymmetricEigen::new(c).eigenvalues.min();
        assert!((sol.lambda - min).abs() < 1e-10 * min, "{} vs {min}", sol.lambda);
        let again = min_rayleigh(&forms, 1e-10, 500, 3).unwrap();
        assert_eq!(sol.lambda, again.lambda);
    }
}
