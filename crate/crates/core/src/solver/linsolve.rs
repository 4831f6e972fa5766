//! Matrix-free symmetric linear solvers.
//!
//! The semi-implicit diffusion step and the harmonic extensions are symmetric
//! positive definite and use conjugate gradients; the Newton linearization
//! `-Δ + D²W/ε²` can be indefinite at non-minimizing critical points and uses
//! MINRES. Reductions are chunked and summed sequentially so results do not
//! depend on the thread count.

use rayon::prelude::*;

use crate::error::SolveError;
use crate::scalar::Scalar;

pub trait LinearOp<S>: Sync {
    fn len(&self) -> usize;
    fn apply(&self, x: &[S], y: &mut [S]);
}

#[derive(Clone, Copy, Debug)]
pub struct LinInfo<S> {
    pub iterations: usize,
    pub rel_residual: S,
}

const CHUNK: usize = 8192;

pub fn par_dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let partials: Vec<S> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(&x, &y)| x * y).sum())
        .collect();
    partials.into_iter().sum()
}

pub fn par_norm<S: Scalar>(a: &[S]) -> S {
    par_dot(a, a).sqrt()
}

fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    y.par_iter_mut()
        .zip(x.par_iter())
        .for_each(|(yi, &xi)| *yi += alpha * xi);
}

/// Conjugate gradients for SPD systems; `x` holds the initial guess and the
/// solution. Converges on `‖r‖ ≤ tol_rel · ‖b‖`.
pub fn cg<S: Scalar>(
    op: &impl LinearOp<S>,
    b: &[S],
    x: &mut [S],
    tol_rel: S,
    max_iters: usize,
) -> Result<LinInfo<S>, SolveError> {
    let n = op.len();
    let bnorm = par_norm(b);
    if bnorm == S::zero() {
        x.iter_mut().for_each(|v| *v = S::zero());
        return Ok(LinInfo {
            iterations: 0,
            rel_residual: S::zero(),
        });
    }
    let mut r = vec![S::zero(); n];
    op.apply(x, &mut r);
    r.par_iter_mut()
        .zip(b.par_iter())
        .for_each(|(ri, &bi)| *ri = bi - *ri);
    let mut p = r.clone();
    let mut ap = vec![S::zero(); n];
    let mut rho = par_dot(&r, &r);
    let target = tol_rel * bnorm;
    let mut k = 0;
    while rho.sqrt() > target && k < max_iters {
        op.apply(&p, &mut ap);
        let denom = par_dot(&p, &ap);
        if denom <= S::zero() {
            return Err(SolveError::LinearStagnation((rho.sqrt() / bnorm).to_f64(), k));
        }
        let alpha = rho / denom;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rho_new = par_dot(&r, &r);
        let beta = rho_new / rho;
        p.par_iter_mut()
            .zip(r.par_iter())
            .for_each(|(pi, &ri)| *pi = ri + beta * *pi);
        rho = rho_new;
        k += 1;
    }
    let rel = rho.sqrt() / bnorm;
    if rel > tol_rel {
        return Err(SolveError::LinearStagnation(rel.to_f64(), k));
    }
    Ok(LinInfo {
        iterations: k,
        rel_residual: rel,
    })
}

/// MINRES for symmetric (possibly indefinite) systems; `x` holds the initial
/// guess and the solution. Returns the achieved relative residual, which may
/// exceed `tol_rel` at `max_iters` — callers decide how much inexactness to
/// tolerate.
pub fn minres<S: Scalar>(
    op: &impl LinearOp<S>,
    b: &[S],
    x: &mut [S],
    tol_rel: S,
    max_iters: usize,
) -> LinInfo<S> {
    let n = op.len();
    let mut v = vec![S::zero(); n];
    op.apply(x, &mut v);
    v.par_iter_mut()
        .zip(b.par_iter())
        .for_each(|(vi, &bi)| *vi = bi - *vi);
    let bnorm = par_norm(b).max(S::epsilon());
    let beta1 = par_norm(&v);
    if beta1 == S::zero() {
        return LinInfo {
            iterations: 0,
            rel_residual: S::zero(),
        };
    }
    let inv = S::one() / beta1;
    v.par_iter_mut().for_each(|vi| *vi *= inv);
    // Off-diagonal of the Lanczos tridiagonal entering each rotation; the
    // convention β₁ = 0 (v₀ = 0) makes the first rotation pure.
    let mut beta = S::zero();

    let mut v_prev = vec![S::zero(); n];
    let mut w = vec![S::zero(); n];
    let mut w_prev = vec![S::zero(); n];
    let mut av = vec![S::zero(); n];

    let mut eta = beta1;
    let (mut c, mut c_old) = (S::one(), S::one());
    let (mut s, mut s_old) = (S::zero(), S::zero());
    let mut norm_r = beta1;

    for k in 1..=max_iters {
        op.apply(&v, &mut av);
        let alpha = par_dot(&v, &av);
        // Lanczos: av <- A v - alpha v - beta v_prev
        av.par_iter_mut()
            .zip(v.par_iter().zip(v_prev.par_iter()))
            .for_each(|(a, (&vi, &vp))| *a = *a - alpha * vi - beta * vp);
        let beta_new = par_norm(&av);

        // Givens rotations updating the tridiagonal QR.
        let delta = c * alpha - c_old * s * beta;
        let gamma = (delta * delta + beta_new * beta_new).sqrt().max(S::epsilon());
        let eps_k = s_old * beta;
        let rho2 = s * alpha + c_old * c * beta;
        let c_new = delta / gamma;
        let s_new = beta_new / gamma;

        // w_new = (v - rho2 w - eps_k w_prev) / gamma, then x += c_new·eta·w_new.
        let coeff = c_new * eta;
        for i in 0..n {
            let w_new = (v[i] - rho2 * w[i] - eps_k * w_prev[i]) / gamma;
            x[i] += coeff * w_new;
            w_prev[i] = w[i];
            w[i] = w_new;
        }

        norm_r = norm_r * s_new.abs();
        eta = -s_new * eta;

        if beta_new > S::zero() {
            let inv = S::one() / beta_new;
            std::mem::swap(&mut v_prev, &mut v);
            v.par_iter_mut()
                .zip(av.par_iter())
                .for_each(|(vi, &a)| *vi = a * inv);
        }
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
        beta = beta_new;

        if norm_r <= tol_rel * bnorm || beta_new == S::zero() {
            return LinInfo {
                iterations: k,
                rel_residual: norm_r / bnorm,
            };
        }
    }
    LinInfo {
        iterations: max_iters,
        rel_residual: norm_r / bnorm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense {
        n: usize,
        a: Vec<f64>, // row-major symmetric
    }

    impl LinearOp<f64> for Dense {
        fn len(&self) -> usize {
            self.n
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.n {
                y[i] = (0..self.n).map(|j| self.a[i * self.n + j] * x[j]).sum();
            }
        }
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_symmetric(n: usize, seed: u64, shift: f64) -> Dense {
        let mut s = seed;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = 2.0 * lcg(&mut s) - 1.0;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
            a[i * n + i] += shift;
        }
        Dense { n, a }
    }

    fn residual(op: &Dense, b: &[f64], x: &[f64]) -> f64 {
        let mut ax = vec![0.0; op.n];
        op.apply(x, &mut ax);
        ax.iter()
            .zip(b)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn cg_solves_spd() {
        let n = 40;
        let op = random_symmetric(n, 7, n as f64); // diagonally dominant => SPD
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut x = vec![0.0; n];
        let info = cg(&op, &b, &mut x, 1e-12, 500).unwrap();
        assert!(info.rel_residual <= 1e-12);
        assert!(residual(&op, &b, &x) < 1e-10);
    }

    #[test]
    fn minres_solves_indefinite() {
        let n = 40;
        // Symmetric with both signs in the spectrum.
        let mut op = random_symmetric(n, 99, 0.0);
        for i in 0..n {
            op.a[i * n + i] += if i % 2 == 0 { 4.0 } else { -4.0 };
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let mut x = vec![0.0; n];
        let info = minres(&op, &b, &mut x, 1e-11, 2000);
        assert!(info.rel_residual <= 1e-10, "rel = {}", info.rel_residual);
        assert!(residual(&op, &b, &x) < 1e-8, "res = {}", residual(&op, &b, &x));
    }

    #[test]
    fn cg_rejects_indefinite() {
        let n = 30;
        let mut op = random_symmetric(n, 5, 0.0);
        for i in 0..n {
            op.a[i * n + i] += if i % 2 == 0 { 3.0 } else { -3.0 };
        }
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        assert!(cg(&op, &b, &mut x, 1e-12, 500).is_err());
    }
}
