use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Settings for the restarted Lanczos solver.
#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Residual tolerance relative to the operator norm bound.
    pub tol: f64,
    /// Krylov dimension per restart cycle; 0 picks one from the number of
    /// wanted states.
    pub krylov_dim: usize,
    pub max_cycles: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            krylov_dim: 0,
            max_cycles: 200,
            seed: 0x5eed,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Two passes of classical Gram-Schmidt against every vector in `bases`.
fn orthogonalize(v: &mut [f64], bases: &[&[Vec<f64>]]) {
    for _ in 0..2 {
        for basis in bases {
            for q in basis.iter() {
                let c = dot(q, v);
                axpy(-c, q, v);
            }
        }
    }
}

/// Lowest `want` eigenpairs of a real symmetric operator, ascending, plus
/// any further eigenvalues within `cluster_tol` of the last one.
///
/// Thick-restart Lanczos with full reorthogonalization: the basis grows by
/// Krylov steps up to the restart dimension, the bottom run of converged
/// Ritz pairs is locked and deflated, and the lowest unconverged Ritz
/// vectors are kept together with the current Krylov direction. `project`
/// keeps every vector inside an invariant subspace of dimension `dim`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lowest_pairs<F, P>(
    apply: F,
    len: usize,
    dim: usize,
    norm_bound: f64,
    want: usize,
    cluster_tol: f64,
    project: P,
    opts: &LanczosOptions,
) -> Result<Vec<(f64, Vec<f64>)>>
where
    F: Fn(&[f64], &mut [f64]),
    P: Fn(&mut [f64]),
{
    let want = want.min(dim);
    let tol = opts.tol * norm_bound.max(f64::MIN_POSITIVE);
    let kdim = if opts.krylov_dim > 0 {
        opts.krylov_dim
    } else {
        (3 * want).max(2 * want + 40)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut locked_values: Vec<f64> = Vec::new();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut hq: Vec<Vec<f64>> = Vec::new();
    let mut next: Option<Vec<f64>> = None;
    let mut last_residuals = Vec::new();

    let random_vector = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..len).map(|_| rng.random::<f64>() - 0.5).collect()
    };

    for _cycle in 0..opts.max_cycles {
        let free = dim - locked.len();
        if free == 0 {
            break;
        }
        let target = kdim.min(free);
        // grow the basis
        while q.len() < target {
            let mut v = next.take().unwrap_or_else(|| random_vector(&mut rng));
            project(&mut v);
            orthogonalize(&mut v, &[&locked, &q]);
            let mut s = norm(&v);
            if s <= 1e-10 {
                // invariant subspace reached; continue from a fresh direction
                v = random_vector(&mut rng);
                project(&mut v);
                orthogonalize(&mut v, &[&locked, &q]);
                s = norm(&v);
                if s <= 1e-10 {
                    break;
                }
            }
            v.iter_mut().for_each(|x| *x /= s);
            let mut w = vec![0.0; len];
            apply(&v, &mut w);
            project(&mut w);
            next = Some(w.clone());
            q.push(v);
            hq.push(w);
        }

        // the residuals of all Ritz vectors lie along this direction, so it
        // must be clean against the whole basis before anything is discarded
        if let Some(w) = next.as_mut() {
            orthogonalize(w, &[&locked, &q]);
        }

        let m = q.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let x = 0.5 * (dot(&q[i], &hq[j]) + dot(&q[j], &hq[i]));
                t[(i, j)] = x;
                t[(j, i)] = x;
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let combine = |basis: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut x = vec![0.0; len];
            for (j, b) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(j, col)], b, &mut x);
            }
            x
        };

        let edge_before = if locked.len() >= want {
            let mut sorted = locked_values.clone();
            sorted.sort_by(f64::total_cmp);
            Some(sorted[want - 1])
        } else {
            None
        };
        let keep = (m / 2).max(want.saturating_sub(locked.len())).min(m.saturating_sub(1));
        let mut lowest_new = f64::INFINITY;
        let mut kept: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let mut first_unconverged: Option<f64> = None;
        let mut restart_from: Option<Vec<f64>> = None;
        last_residuals.clear();
        for &i in order.iter() {
            let theta = eig.eigenvalues[i];
            let x = combine(&q, i);
            let hx = combine(&hq, i);
            let mut r = hx.clone();
            axpy(-theta, &x, &mut r);
            // residual of the deflated operator; the parts along locked
            // vectors are settled by the final Rayleigh-Ritz step
            orthogonalize(&mut r, &[&locked]);
            let res = norm(&r);
            if kept.is_empty() && res <= tol {
                locked.push(x);
                locked_values.push(theta);
                lowest_new = lowest_new.min(theta);
                continue;
            }
            if first_unconverged.is_none() {
                first_unconverged = Some(theta - res);
                restart_from = Some(r.clone());
            }
            if last_residuals.len() < want {
                last_residuals.push(res);
            }
            kept.push((x, hx));
            if kept.len() >= keep {
                break;
            }
        }

        if let Some(edge) = edge_before {
            // a cycle on the deflated operator that turns up nothing at or
            // below the edge means the wanted set and its boundary cluster
            // are complete; an eigenvalue lies within the residual of the
            // lowest remaining Ritz value
            let lower = first_unconverged.unwrap_or(f64::INFINITY);
            if lowest_new > edge + cluster_tol && lower > edge + cluster_tol {
                return Ok(finish(&apply, &project, locked));
            }
        }
        if locked.len() == dim {
            return Ok(finish(&apply, &project, locked));
        }

        // rounding lets the Krylov relation drift, and the residual of the
        // lowest open pair can then sit almost entirely off the last
        // direction; continuing from it keeps that pair converging
        if let Some(r) = restart_from {
            next = Some(r);
        }
        q.clear();
        hq.clear();
        for (x, hx) in kept {
            q.push(x);
            hq.push(hx);
        }
        // kept Ritz vectors are orthonormal; clean them against new locks
        for i in 0..q.len() {
            let (done, rest) = q.split_at_mut(i);
            let v = &mut rest[0];
            orthogonalize(v, &[&locked, done]);
            let s = norm(v);
            v.iter_mut().for_each(|x| *x /= s);
        }
        for i in 0..q.len() {
            apply_into(&apply, &project, &q[i], &mut hq[i]);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_cycles,
        residuals: last_residuals,
    })
}

fn apply_into<F, P>(apply: &F, project: &P, x: &[f64], out: &mut [f64])
where
    F: Fn(&[f64], &mut [f64]),
    P: Fn(&mut [f64]),
{
    apply(x, out);
    project(out);
}

/// Rayleigh-Ritz over the span of the locked vectors, ascending.
fn finish<F, P>(apply: &F, project: &P, vectors: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)>
where
    F: Fn(&[f64], &mut [f64]),
    P: Fn(&mut [f64]),
{
    let k = vectors.len();
    let len = vectors.first().map_or(0, Vec::len);
    let images: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mut w = vec![0.0; len];
            apply_into(apply, project, v, &mut w);
            w
        })
        .collect();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let x = 0.5 * (dot(&vectors[i], &images[j]) + dot(&vectors[j], &images[i]));
            t[(i, j)] = x;
            t[(j, i)] = x;
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..k)
        .map(|col| {
            let mut x = vec![0.0; len];
            for (j, v) in vectors.iter().enumerate() {
                axpy(eig.eigenvectors[(j, col)], v, &mut x);
            }
            let s = norm(&x);
            x.iter_mut().for_each(|y| *y /= s);
            (eig.eigenvalues[col], x)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}
