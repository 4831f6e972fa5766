//! The canonical curve-valued harmonic map associated with a vortex
//! configuration and boundary lift: `u* = τ(e^{i(η + Σ D_j θ_j)})` with `η`
//! the five-point harmonic extension of `φ0 - Σ D_j θ_j` on the boundary.
//! This is the limit profile of critical points away from the vortices.

use std::sync::Arc;

use crate::curve::PlanarCurve;
use crate::domain::{BoundaryDatum, Grid2D};
use crate::error::SolveError;
use crate::field::FieldR2;
use crate::scalar::Scalar;
use crate::solver::{harmonic_extension, vortex_angle_sum};
use crate::vec2::Vec2;

/// Evaluator form of the canonical map: exact vortex angles plus a
/// lattice-interpolated harmonic correction, with an analytic chain-rule
/// gradient. Useful as a fine-grid reference.
pub struct CanonicalMap<S> {
    grid: Arc<Grid2D<S>>,
    curve: Arc<PlanarCurve<S>>,
    vortices: Vec<(Vec2<S>, i32)>,
    eta: Vec<S>,
}

pub fn canonical_map<S: Scalar>(
    grid: Arc<Grid2D<S>>,
    curve: Arc<PlanarCurve<S>>,
    datum: &BoundaryDatum<S>,
    vortices: &[(Vec2<S>, i32)],
    lin_tol: S,
) -> Result<FieldR2<S>, SolveError> {
    let map = canonical_map_eval(grid.clone(), curve, datum, vortices, lin_tol)?;
    let mut u = FieldR2::bind(grid.clone(), datum);
    let n = grid.n();
    for j in 0..n {
        for i in 0..n {
            let idx = grid.idx(i, j);
            if grid.interior_id(idx).is_some() {
                let phase = map.eta[idx] + vortex_angle_sum(&map.vortices, grid.point(i, j));
                u.set(idx, map.curve.tau(phase.wrap_tau()));
            }
        }
    }
    Ok(u)
}

pub fn canonical_map_eval<S: Scalar>(
    grid: Arc<Grid2D<S>>,
    curve: Arc<PlanarCurve<S>>,
    datum: &BoundaryDatum<S>,
    vortices: &[(Vec2<S>, i32)],
    lin_tol: S,
) -> Result<CanonicalMap<S>, SolveError> {
    let total: i32 = vortices.iter().map(|&(_, d)| d).sum();
    if total != datum.degree() {
        return Err(SolveError::InitDegreeMismatch {
            got: total,
            want: datum.degree(),
        });
    }
    let vortices = vortices.to_vec();
    let bc = crate::solver::phase_correction_boundary(&grid, datum, &vortices);
    let eta = harmonic_extension(&grid, &bc, lin_tol)?;
    Ok(CanonicalMap {
        grid,
        curve,
        vortices,
        eta,
    })
}

impl<S: Scalar> CanonicalMap<S> {
    pub fn vortices(&self) -> &[(Vec2<S>, i32)] {
        &self.vortices
    }

    fn eta_bilinear(&self, p: Vec2<S>) -> S {
        let g = &self.grid;
        let n = g.n();
        let origin = g.point(0, 0);
        let fx = ((p.x - origin.x) / g.h()).to_f64().floor();
        let fy = ((p.y - origin.y) / g.h()).to_f64().floor();
        let i = (fx.max(0.0) as usize).min(n - 2);
        let j = (fy.max(0.0) as usize).min(n - 2);
        let base = g.point(i, j);
        let ax = ((p.x - base.x) / g.h()).max(S::zero()).min(S::one());
        let ay = ((p.y - base.y) / g.h()).max(S::zero()).min(S::one());
        let mut acc = S::zero();
        let mut wsum = S::zero();
        for (ci, cj, wgt) in [
            (i, j, (S::one() - ax) * (S::one() - ay)),
            (i + 1, j, ax * (S::one() - ay)),
            (i, j + 1, (S::one() - ax) * ay),
            (i + 1, j + 1, ax * ay),
        ] {
            let idx = g.idx(ci, cj);
            if g.is_computational(idx) {
                acc = acc + self.eta[idx] * wgt;
                wsum = wsum + wgt;
            }
        }
        if wsum > S::zero() {
            acc / wsum
        } else {
            S::zero()
        }
    }

    /// Gradient of η from lattice centered differences, sampled bilinearly.
    fn eta_grad(&self, p: Vec2<S>) -> Vec2<S> {
        let g = &self.grid;
        let n = g.n();
        let (i0, j0) = g.nearest_node(p);
        let i0 = i0.clamp(2, n - 3);
        let j0 = j0.clamp(2, n - 3);
        let idx = g.idx(i0, j0);
        let ok = |k: usize| g.is_computational(k);
        if ok(idx + 1) && ok(idx - 1) && ok(idx + n) && ok(idx - n) {
            let two_h = S::two() * g.h();
            Vec2::new(
                (self.eta[idx + 1] - self.eta[idx - 1]) / two_h,
                (self.eta[idx + n] - self.eta[idx - n]) / two_h,
            )
        } else {
            Vec2::zero()
        }
    }

    pub fn phase_at(&self, p: Vec2<S>) -> S {
        self.eta_bilinear(p) + vortex_angle_sum(&self.vortices, p)
    }

    pub fn value_at(&self, p: Vec2<S>) -> Vec2<S> {
        self.curve.tau(self.phase_at(p).wrap_tau())
    }

    /// Spatial gradient `(∂_x u*, ∂_y u*) = τ'(φ) ⊗ ∇φ` by the chain rule.
    pub fn grad_at(&self, p: Vec2<S>) -> (Vec2<S>, Vec2<S>) {
        let phase = self.phase_at(p);
        let tangent = self.curve.tangent(phase.wrap_tau());
        let mut grad_phase = self.eta_grad(p);
        for &(a, d) in &self.vortices {
            let r = p - a;
            let r2 = r.norm_sq().max(S::lit(1e-30));
            grad_phase += r.perp() * (S::from_f64(d as f64).unwrap() / r2);
        }
        (tangent * grad_phase.x, tangent * grad_phase.y)
    }
}

/// Sup-norm distances between a solved state and a canonical reference over
/// interior nodes at least `margin` from the boundary and outside the listed
/// holes. Returns (value error, gradient error, L² value error).
pub fn compare_to_canonical<S: Scalar>(
    u: &FieldR2<S>,
    reference: &CanonicalMap<S>,
    margin: S,
    holes: &[(Vec2<S>, S)],
) -> Result<(S, S, S), crate::error::AnalysisError> {
    let g = u.grid();
    let n = g.n();
    let h = g.h();
    let domain = g.domain().clone();
    let mut sup_val = S::zero();
    let mut sup_grad = S::zero();
    let mut l2 = S::zero();
    let mut counted = 0usize;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let idx = g.idx(i, j);
            if !g.is_computational(idx) {
                continue;
            }
            let p = g.point(i, j);
            if p.norm() > domain.rho(p.angle()) - margin {
                continue;
            }
            if holes.iter().any(|&(c, r)| (p - c).norm() < r) {
                continue;
            }
            let diff = u.get(idx) - reference.value_at(p);
            sup_val = sup_val.max(diff.norm());
            l2 = l2 + diff.norm_sq() * h * h;
            counted += 1;
            let neighbors_ok = g.is_computational(idx + 1)
                && g.is_computational(idx - 1)
                && g.is_computational(idx + n)
                && g.is_computational(idx - n);
            if neighbors_ok {
                let two_h = S::two() * h;
                let dx = (u.get(idx + 1) - u.get(idx - 1)) / two_h;
                let dy = (u.get(idx + n) - u.get(idx - n)) / two_h;
                let (rx, ry) = reference.grad_at(p);
                let gd = ((dx - rx).norm_sq() + (dy - ry).norm_sq()).sqrt();
                sup_grad = sup_grad.max(gd);
            }
        }
    }
    if counted == 0 {
        return Err(crate::error::AnalysisError::EmptyComparison(format!(
            "margin {margin} leaves no interior nodes"
        )));
    }
    Ok((sup_val, sup_grad, l2.sqrt()))
}
