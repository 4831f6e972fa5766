//! Newton refinement of near-critical states. The linearized operator
//! `-Δ + D²W(u)/ε²` is applied matrix-free with a frozen Hessian field and
//! solved by MINRES (it is indefinite at non-minimizing critical points).
//! Far from a critical point the guard hands over to the gradient flow,
//! which would otherwise destroy unstable solutions if applied blindly.

use rayon::prelude::*;

use crate::error::SolveError;
use crate::field::FieldR2;
use crate::potential::PotentialW;
use crate::scalar::Scalar;
use crate::vec2::{Sym2, Vec2};

use super::energy::{energy_split, InteriorStencil};
use super::flow::gradient_flow;
use super::linsolve::{minres, LinearOp};
use super::{SolveConfig, SolveResult};

struct Linearized<'a, S> {
    stencil: &'a InteriorStencil<S>,
    hess: &'a [Sym2<S>],
    inv_h2: S,
    inv_eps2: S,
}

impl<'a, S: Scalar> LinearOp<S> for Linearized<'a, S> {
    fn len(&self) -> usize {
        2 * self.stencil.len()
    }
    fn apply(&self, x: &[S], y: &mut [S]) {
        let n = self.stencil.len();
        let (x1, x2) = x.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        y1.par_iter_mut()
            .zip(y2.par_iter_mut())
            .enumerate()
            .for_each(|(k, (out1, out2))| {
                let codes = self.stencil.nbr[k];
                let mut nb1 = S::zero();
                let mut nb2 = S::zero();
                for code in codes {
                    if code != u32::MAX {
                        nb1 += x1[code as usize];
                        nb2 += x2[code as usize];
                    }
                }
                let lap1 = (S::lit(4.0) * x1[k] - nb1) * self.inv_h2;
                let lap2 = (S::lit(4.0) * x2[k] - nb2) * self.inv_h2;
                let hv = self.hess[k].apply(Vec2::new(x1[k], x2[k]));
                let scale = self.stencil.weight[k] * self.inv_eps2;
                *out1 = lap1 + hv.x * scale;
                *out2 = lap2 + hv.y * scale;
            });
    }
}

pub fn newton_refine<S: Scalar>(
    u0: FieldR2<S>,
    w: &PotentialW<S>,
    cfg: &SolveConfig<S>,
) -> Result<SolveResult<S>, SolveError> {
    let stencil = InteriorStencil::new(&u0);
    let n_int = stencil.len();
    let h2 = stencil.grid.h() * stencil.grid.h();
    let eps2 = cfg.eps * cfg.eps;

    let mut u = u0;
    let mut x = vec![S::zero(); 2 * n_int];
    {
        let (x1, x2) = x.split_at_mut(n_int);
        stencil.gather(&u.u1, x1);
        stencil.gather(&u.u2, x2);
    }

    let residual = |x: &[S], r: &mut [S]| {
        let (x1, x2) = x.split_at(n_int);
        let (r1, r2) = r.split_at_mut(n_int);
        r1.par_iter_mut()
            .zip(r2.par_iter_mut())
            .enumerate()
            .for_each(|(k, (o1, o2))| {
                let codes = stencil.nbr[k];
                let mut nb1 = stencil.bsum1[k];
                let mut nb2 = stencil.bsum2[k];
                for code in codes {
                    if code != u32::MAX {
                        nb1 += x1[code as usize];
                        nb2 += x2[code as usize];
                    }
                }
                let gw = w.grad(Vec2::new(x1[k], x2[k]));
                let scale = stencil.weight[k] / eps2;
                *o1 = (S::lit(4.0) * x1[k] - nb1) / h2 + gw.x * scale;
                *o2 = (S::lit(4.0) * x2[k] - nb2) / h2 + gw.y * scale;
            });
    };
    let norm_l2 = |r: &[S]| -> S {
        (r.iter().map(|&v| v * v).sum::<S>() * h2).sqrt()
    };

    let mut r = vec![S::zero(); 2 * n_int];
    residual(&x, &mut r);
    let mut rnorm = norm_l2(&r);

    // Outside the plausible Newton basin: relax instead.
    if rnorm > cfg.newton_switch {
        let mut result = gradient_flow(u, w, cfg)?;
        result.fallback = true;
        return Ok(result);
    }

    let mut residuals = vec![rnorm];
    let mut energies = Vec::new();
    {
        let (d, p) = energy_split(&u, w, cfg.eps);
        energies.push(d + p);
    }

    let mut hess = vec![
        Sym2 {
            xx: S::zero(),
            xy: S::zero(),
            yy: S::zero()
        };
        n_int
    ];
    let mut delta = vec![S::zero(); 2 * n_int];
    let mut trial = vec![S::zero(); 2 * n_int];
    let mut r_try = vec![S::zero(); 2 * n_int];
    let mut converged = rnorm <= cfg.tol;
    let mut steps = 0usize;

    while !converged && steps < 40 {
        {
            let (x1, x2) = x.split_at(n_int);
            hess.par_iter_mut().enumerate().for_each(|(k, hk)| {
                *hk = w.hessian(Vec2::new(x1[k], x2[k]));
            });
        }
        let op = Linearized {
            stencil: &stencil,
            hess: &hess,
            inv_h2: S::one() / h2,
            inv_eps2: S::one() / eps2,
        };
        let neg_r: Vec<S> = r.iter().map(|&v| -v).collect();
        delta.iter_mut().for_each(|v| *v = S::zero());
        let info = minres(&op, &neg_r, &mut delta, cfg.lin_tol, 4000);
        if info.rel_residual > S::half() {
            return Err(SolveError::LinearStagnation(
                info.rel_residual.to_f64(),
                info.iterations,
            ));
        }

        // Backtracking on the residual norm.
        let mut alpha = S::one();
        let mut accepted = false;
        let mut best = rnorm;
        for _ in 0..12 {
            trial
                .par_iter_mut()
                .enumerate()
                .for_each(|(k, v)| *v = x[k] + alpha * delta[k]);
            residual(&trial, &mut r_try);
            let rn = norm_l2(&r_try);
            best = best.min(rn);
            if rn.is_finite() && rn < rnorm * (S::one() - S::lit(1e-4) * alpha) {
                x.copy_from_slice(&trial);
                r.copy_from_slice(&r_try);
                rnorm = rn;
                accepted = true;
                break;
            }
            alpha = alpha * S::half();
        }
        if !accepted {
            return Err(SolveError::NewtonStalled(rnorm.to_f64(), best.to_f64()));
        }
        steps += 1;
        residuals.push(rnorm);
        {
            let (x1, x2) = x.split_at(n_int);
            stencil.scatter(x1, &mut u.u1);
            stencil.scatter(x2, &mut u.u2);
        }
        let (d, p) = energy_split(&u, w, cfg.eps);
        energies.push(d + p);
        converged = rnorm <= cfg.tol;
    }

    Ok(SolveResult {
        field: u,
        residual_history: residuals,
        energy_history: energies,
        iterations: steps,
        converged,
        fallback: false,
    })
}
