//! The quadratic differential `ω = |u_x|² - |u_y|² - 2i u_x·u_y` and the
//! identity `∂ω/∂z̄ = ∂_z(2W(u)/ε²)` satisfied by Euler–Lagrange solutions.

use crate::field::FieldR2;
use crate::potential::PotentialW;
use crate::scalar::Scalar;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct HopfReport<S> {
    /// Real and imaginary parts of ω on the lattice (NaN where undefined).
    pub omega_re: Vec<S>,
    pub omega_im: Vec<S>,
    /// Interior max norm of `∂_z̄ ω - ∂_z (2W/ε²)`.
    pub residual_max: S,
    /// Number of interior nodes entering the max norm.
    pub residual_nodes: usize,
}

pub fn hopf_differential<S: Scalar>(
    u: &FieldR2<S>,
    w: &PotentialW<S>,
    eps: S,
) -> HopfReport<S> {
    let g = u.grid().clone();
    let n = g.n();
    let h = g.h();
    let two_h = S::two() * h;
    let eps2 = eps * eps;

    // Node has all 4 neighbors computational: first differences exist.
    let ring1 = |idx: usize| -> bool {
        let (i, j) = g.coords(idx);
        i >= 1
            && j >= 1
            && i + 1 < n
            && j + 1 < n
            && g.is_computational(idx)
            && g.is_computational(idx + 1)
            && g.is_computational(idx - 1)
            && g.is_computational(idx + n)
            && g.is_computational(idx - n)
    };

    let mut omega_re = vec![S::nan(); n * n];
    let mut omega_im = vec![S::nan(); n * n];
    let mut pw = vec![S::nan(); n * n];
    for j in 0..n {
        for i in 0..n {
            let idx = g.idx(i, j);
            if g.is_computational(idx) {
                pw[idx] = S::two() * w.value(u.get(idx)) / eps2;
            }
            if !ring1(idx) {
                continue;
            }
            let ux = (u.get(idx + 1) - u.get(idx - 1)) / two_h;
            let uy = (u.get(idx + n) - u.get(idx - n)) / two_h;
            omega_re[idx] = ux.norm_sq() - uy.norm_sq();
            omega_im[idx] = -S::two() * ux.dot(uy);
        }
    }

    // ∂_z̄ ω = ½(∂x + i ∂y) ω ;  ∂_z P = ½(∂x - i ∂y) P.
    let mut residual_max = S::zero();
    let mut count = 0usize;
    for j in 2..n - 2 {
        for i in 2..n - 2 {
            let idx = g.idx(i, j);
            let needed = [idx, idx + 1, idx - 1, idx + n, idx - n];
            if needed.iter().any(|&k| omega_re[k].is_nan() || pw[k].is_nan()) {
                continue;
            }
            let dwx_re = (omega_re[idx + 1] - omega_re[idx - 1]) / two_h;
            let dwx_im = (omega_im[idx + 1] - omega_im[idx - 1]) / two_h;
            let dwy_re = (omega_re[idx + n] - omega_re[idx - n]) / two_h;
            let dwy_im = (omega_im[idx + n] - omega_im[idx - n]) / two_h;
            // ∂_z̄ ω
            let lhs_re = S::half() * (dwx_re - dwy_im);
            let lhs_im = S::half() * (dwx_im + dwy_re);
            // ∂_z P (P real)
            let dpx = (pw[idx + 1] - pw[idx - 1]) / two_h;
            let dpy = (pw[idx + n] - pw[idx - n]) / two_h;
            let rhs_re = S::half() * dpx;
            let rhs_im = -S::half() * dpy;
            let res = ((lhs_re - rhs_re) * (lhs_re - rhs_re)
                + (lhs_im - rhs_im) * (lhs_im - rhs_im))
                .sqrt();
            residual_max = residual_max.max(res);
            count += 1;
        }
    }

    HopfReport {
        omega_re,
        omega_im,
        residual_max,
        residual_nodes: count,
    }
}
