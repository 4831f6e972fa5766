//! Discrete energy and its exact finite-dimensional gradient.
//!
//! The Dirichlet term sums squared differences over lattice links between
//! computational nodes; the potential term uses midpoint quadrature with
//! fractional cell areas on cut cells. `discrete_gradient` is the literal
//! gradient of that discrete functional with respect to interior nodal
//! values, divided by h² so it reads as the pointwise Euler–Lagrange
//! residual `-Δu + w ∇W(u)/ε²`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{Grid2D, NodeClass};
use crate::field::FieldR2;
use crate::potential::PotentialW;
use crate::scalar::Scalar;
use crate::vec2::Vec2;

/// Energy split of one state, plus the boundary-normal-derivative integral.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergyBreakdown<S> {
    /// `½ ∫ |∇u|²`
    pub dirichlet: S,
    /// `∫ W(u)/ε²`
    pub potential: S,
    /// `∫_∂Ω |∂u/∂n|²`
    pub boundary_normal: S,
}

impl<S: Scalar> EnergyBreakdown<S> {
    pub fn total(&self) -> S {
        self.dirichlet + self.potential
    }
}

/// Hot-path energy value: Dirichlet and potential terms only.
pub fn energy_split<S: Scalar>(u: &FieldR2<S>, w: &PotentialW<S>, eps: S) -> (S, S) {
    let g = u.grid().clone();
    let n = g.n();
    let h = g.h();
    let eps2 = eps * eps;
    let rows: Vec<(S, S)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut dir = S::zero();
            let mut pot = S::zero();
            for i in 0..n {
                let idx = g.idx(i, j);
                if !g.is_computational(idx) {
                    continue;
                }
                let here = u.get(idx);
                // Rightward and upward links, counted once.
                if i + 1 < n && g.is_computational(idx + 1) {
                    dir = dir + (u.get(idx + 1) - here).norm_sq();
                }
                if j + 1 < n && g.is_computational(idx + n) {
                    dir = dir + (u.get(idx + n) - here).norm_sq();
                }
                pot = pot + g.cell_weight(idx) * w.value(here);
            }
            (dir, pot)
        })
        .collect();
    let (dir, pot) = rows
        .into_iter()
        .fold((S::zero(), S::zero()), |(a, b), (c, d)| (a + c, b + d));
    (dir * S::half(), pot * h * h / eps2)
}

/// `∫_∂Ω |∂u/∂n|²` by one-sided normal differences of the sampled field.
pub fn boundary_normal_integral<S: Scalar>(u: &FieldR2<S>) -> S {
    let g = u.grid();
    let domain = g.domain();
    let h = g.h();
    let m = 4 * g.n();
    let delta = S::lit(1.5) * h;
    let mut acc = S::zero();
    for k in 0..m {
        let th = S::tau() * S::from_index(k) / S::from_index(m);
        let xb = domain.boundary_point(th);
        let nrm = domain.outward_normal(th);
        let inner = xb - nrm * delta;
        let du = (u.sample(xb) - u.sample(inner)) / delta;
        acc = acc + du.norm_sq() * domain.boundary_speed(th);
    }
    acc * S::tau() / S::from_index(m)
}

/// Full energy breakdown of a state.
pub fn discrete_energy<S: Scalar>(
    u: &FieldR2<S>,
    w: &PotentialW<S>,
    eps: S,
) -> EnergyBreakdown<S> {
    let (dirichlet, potential) = energy_split(u, w, eps);
    EnergyBreakdown {
        dirichlet,
        potential,
        boundary_normal: boundary_normal_integral(u),
    }
}

/// Pointwise Euler–Lagrange residual `-Δu + w_i ∇W(u)/ε²` on interior nodes
/// (zero elsewhere). `h²`-scaling turns it into the exact energy gradient.
pub fn discrete_gradient<S: Scalar>(
    u: &FieldR2<S>,
    w: &PotentialW<S>,
    eps: S,
) -> FieldR2<S> {
    let g = u.grid().clone();
    let n = g.n();
    let h2 = g.h() * g.h();
    let eps2 = eps * eps;
    let mut out = FieldR2::zeros(g.clone());
    let u1 = &u.u1;
    let u2 = &u.u2;
    let (o1, o2) = (&mut out.u1, &mut out.u2);
    o1.par_chunks_mut(n)
        .zip(o2.par_chunks_mut(n))
        .enumerate()
        .for_each(|(j, (row1, row2))| {
            for i in 0..n {
                let idx = j * n + i;
                if g.class(idx) != NodeClass::Interior {
                    continue;
                }
                let here = Vec2::new(u1[idx], u2[idx]);
                let lap = Vec2::new(
                    u1[idx + 1] + u1[idx - 1] + u1[idx + n] + u1[idx - n] - S::lit(4.0) * u1[idx],
                    u2[idx + 1] + u2[idx - 1] + u2[idx + n] + u2[idx - n] - S::lit(4.0) * u2[idx],
                ) / h2;
                let gw = w.grad(here) * (g.cell_weight(idx) / eps2);
                row1[i] = -lap.x + gw.x;
                row2[i] = -lap.y + gw.y;
            }
        });
    out
}

/// L² norm of the Euler–Lagrange residual over interior nodes.
pub fn residual_norm<S: Scalar>(r: &FieldR2<S>) -> S {
    let g = r.grid();
    let h2 = g.h() * g.h();
    let mut acc = S::zero();
    for &idx in g.interior_nodes() {
        acc = acc + r.get(idx as usize).norm_sq();
    }
    (acc * h2).sqrt()
}

/// Precomputed interior stencil shared by the implicit steps and Newton.
pub struct InteriorStencil<S> {
    pub grid: Arc<Grid2D<S>>,
    /// Compact interior id of each 4-neighbor (u32::MAX when the neighbor is
    /// boundary-adjacent and therefore a fixed value).
    pub nbr: Vec<[u32; 4]>,
    /// Sum of fixed neighbor values per interior node, per component.
    pub bsum1: Vec<S>,
    pub bsum2: Vec<S>,
    /// Potential quadrature weight per interior node.
    pub weight: Vec<S>,
}

impl<S: Scalar> InteriorStencil<S> {
    pub fn new(u: &FieldR2<S>) -> Self {
        let grid = u.grid().clone();
        let n = grid.n();
        let interior = grid.interior_nodes();
        let mut nbr = Vec::with_capacity(interior.len());
        let mut bsum1 = vec![S::zero(); interior.len()];
        let mut bsum2 = vec![S::zero(); interior.len()];
        let mut weight = Vec::with_capacity(interior.len());
        for (k, &idx) in interior.iter().enumerate() {
            let idx = idx as usize;
            let offsets = [idx + 1, idx - 1, idx + n, idx - n];
            let mut codes = [u32::MAX; 4];
            for (slot, &nb) in offsets.iter().enumerate() {
                match grid.interior_id(nb) {
                    Some(id) => codes[slot] = id as u32,
                    None => {
                        bsum1[k] += u.u1[nb];
                        bsum2[k] += u.u2[nb];
                    }
                }
            }
            nbr.push(codes);
            weight.push(grid.cell_weight(idx));
        }
        Self {
            grid,
            nbr,
            bsum1,
            bsum2,
            weight,
        }
    }

    pub fn len(&self) -> usize {
        self.nbr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nbr.is_empty()
    }

    /// Gathers interior values of a lattice plane into a compact vector.
    pub fn gather(&self, plane: &[S], out: &mut [S]) {
        for (k, &idx) in self.grid.interior_nodes().iter().enumerate() {
            out[k] = plane[idx as usize];
        }
    }

    pub fn scatter(&self, compact: &[S], plane: &mut [S]) {
        for (k, &idx) in self.grid.interior_nodes().iter().enumerate() {
            plane[idx as usize] = compact[k];
        }
    }

    /// `y = (id_coeff · x) + lap_coeff · (4x - Σ x_nb)` over interior ids,
    /// treating fixed neighbors as zero (their effect belongs to the RHS).
    pub fn apply_helmholtz(&self, id_coeff: S, lap_coeff: S, x: &[S], y: &mut [S]) {
        y.par_iter_mut().enumerate().for_each(|(k, yk)| {
            let codes = self.nbr[k];
            let mut nb_sum = S::zero();
            for code in codes {
                if code != u32::MAX {
                    nb_sum += x[code as usize];
                }
            }
            *yk = id_coeff * x[k] + lap_coeff * (S::lit(4.0) * x[k] - nb_sum);
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_curve, CurveSpec};
    use crate::domain::{BoundaryDatum, DomainSpec, Grid2D, StarDomain};
    use std::f64::consts::PI;

    fn disc_grid(n: usize) -> Arc<Grid2D<f64>> {
        let d = Arc::new(StarDomain::build(&DomainSpec::Disc { r: 1.0 }).unwrap());
        Arc::new(Grid2D::rasterize(d, n).unwrap())
    }

    #[test]
    fn constant_curve_value_has_zero_energy_and_gradient() {
        let grid = disc_grid(64);
        let curve = Arc::new(build_curve(&CurveSpec::Circle).unwrap());
        let w = PotentialW::gl();
        let datum = BoundaryDatum::new(curve.clone(), 0, |_| 0.7).unwrap();
        let gamma = curve.tau(0.7);
        let mut u = FieldR2::bind(grid.clone(), &datum);
        for j in 0..64 {
            for i in 0..64 {
                let idx = grid.idx(i, j);
                if grid.is_computational(idx) {
                    u.set(idx, gamma);
                }
            }
        }
        let (dir, pot) = energy_split(&u, &w, 0.2);
        assert!(dir.abs() < 1e-24);
        assert!(pot.abs() < 1e-20);
        let r = discrete_gradient(&u, &w, 0.2);
        assert!(residual_norm(&r) < 1e-10);
    }

    #[test]
    fn identity_field_dirichlet_tends_to_area() {
        // u = (x, y): |∇u|² = 2, so ½∫ = |Ω| = π on the unit disc.
        let mut errs = Vec::new();
        for n in [96usize, 192] {
            let grid = disc_grid(n);
            let mut u = FieldR2::zeros(grid.clone());
            for j in 0..n {
                for i in 0..n {
                    let idx = grid.idx(i, j);
                    let p = grid.point(i, j);
                    u.set(idx, p);
                }
            }
            let w = PotentialW::gl();
            let (dir, _) = energy_split(&u, &w, 1.0);
            errs.push((dir - PI).abs());
        }
        assert!(errs[0] < 0.06, "err = {}", errs[0]);
        assert!(errs[1] < errs[0], "no refinement improvement: {errs:?}");
    }

    #[test]
    fn smooth_field_energy_matches_dense_quadrature() {
        let f = |p: Vec2<f64>| -> Vec2<f64> {
            Vec2::new((1.3 * p.x).sin() * (0.7 * p.y).cos(), 0.4 * p.x * p.y + 0.2)
        };
        let w = PotentialW::gl();
        let eps = 0.5;
        // Dense midpoint oracle at 2048² over the bounding box.
        let domain = StarDomain::build(&DomainSpec::Disc { r: 1.0 }).unwrap();
        let m = 2048usize;
        let hq = 2.0 / m as f64;
        let mut oracle = 0.0;
        for j in 0..m {
            for i in 0..m {
                let p = Vec2::new(-1.0 + (i as f64 + 0.5) * hq, -1.0 + (j as f64 + 0.5) * hq);
                if !domain.contains(p) {
                    continue;
                }
                let d = 1e-5;
                let ux = (f(p + Vec2::new(d, 0.0)) - f(p - Vec2::new(d, 0.0))) / (2.0 * d);
                let uy = (f(p + Vec2::new(0.0, d)) - f(p - Vec2::new(0.0, d))) / (2.0 * d);
                oracle += (0.5 * (ux.norm_sq() + uy.norm_sq())
                    + w.value(f(p)) / (eps * eps))
                    * hq
                    * hq;
            }
        }
        let mut errs = Vec::new();
        for n in [96usize, 192, 384] {
            let grid = disc_grid(n);
            let mut u = FieldR2::zeros(grid.clone());
            for j in 0..n {
                for i in 0..n {
                    let idx = grid.idx(i, j);
                    u.set(idx, f(grid.point(i, j)));
                }
            }
            let (dir, pot) = energy_split(&u, &w, eps);
            errs.push((dir + pot - oracle).abs());
        }
        // Refinement must contract: bulk quadrature is second order, the
        // boundary cut layer first order.
        assert!(errs[1] < errs[0] / 1.5, "errors {errs:?}");
        assert!(errs[2] < errs[1] / 1.5, "errors {errs:?}");
        assert!(errs[2] < 5e-3 * oracle.abs(), "errors {errs:?}");
    }

    #[test]
    fn gradient_is_exact_gradient_of_energy() {
        let n = 64;
        let grid = disc_grid(n);
        let curve = Arc::new(build_curve(&CurveSpec::Circle).unwrap());
        let w = PotentialW::gl();
        let datum = BoundaryDatum::new(curve, 1, |_| 0.0).unwrap();
        let eps = 0.3;
        let mut seed = 99u64;
        let mut rand = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for trial in 0..10 {
            let mut u = FieldR2::bind(grid.clone(), &datum);
            let mut v = FieldR2::zeros(grid.clone());
            for &idx in grid.interior_nodes() {
                u.set(idx as usize, Vec2::new(rand(), rand()));
                v.set(idx as usize, Vec2::new(rand(), rand()));
            }
            let grad = discrete_gradient(&u, &w, eps);
            let mut pairing = 0.0;
            for &idx in grid.interior_nodes() {
                pairing += grad.get(idx as usize).dot(v.get(idx as usize));
            }
            pairing *= grid.h() * grid.h();

            let delta = 1e-6;
            let eval = |sign: f64| {
                let mut up = u.clone();
                for &idx in grid.interior_nodes() {
                    let idx = idx as usize;
                    up.set(idx, u.get(idx) + v.get(idx) * (sign * delta));
                }
                let (d, p) = energy_split(&up, &w, eps);
                d + p
            };
            let fd = (eval(1.0) - eval(-1.0)) / (2.0 * delta);
            let rel = (fd - pairing).abs() / pairing.abs().max(1e-12);
            assert!(rel < 1e-6, "trial {trial}: fd {fd} vs pairing {pairing} (rel {rel})");
        }
    }
}
