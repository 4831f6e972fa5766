//! Quadrature diagnostics: the star-domain integral identity, vortex masses,
//! tube-energy and distance-gradient integrals, and Lp gradient norms.

use crate::curve::PlanarCurve;
use crate::domain::BoundaryDatum;
use crate::error::AnalysisError;
use crate::field::FieldR2;
use crate::potential::PotentialW;
use crate::scalar::Scalar;
use crate::vec2::Vec2;
use serde::Serialize;

use super::vortex::{VortexCluster, VortexSet};

/// Per-state diagnostic integrals.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergyBreakdown<S> {
    /// `½ ∫ |∇u|²`
    pub dirichlet: S,
    /// `∫ W(u)/ε²`
    pub potential: S,
    /// `∫_∂Ω |∂u/∂n|²`
    pub boundary_normal: S,
    /// `∫_{Ω_ε} [|∇t|² + t²/ε²]` outside the bad discs
    pub t_energy: S,
    /// `∫_Ω |∇ dist(u, Γ)|²`
    pub dist_grad: S,
}

/// Both sides of the `x·∇u` multiplier identity on a star-shaped domain.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PohozaevReport<S> {
    /// `∫ W(u)/ε²`
    pub potential_term: S,
    /// `∫_∂Ω |∂u/∂n|²`
    pub boundary_term: S,
    /// Mismatch of the assembled identity; O(h) boundary quadrature.
    pub identity_residual: S,
}

#[derive(Clone, Debug, Serialize)]
pub struct MassReport<S> {
    /// `∫_{B_r(a_j)} W(u)/ε²` per cluster.
    pub masses: Vec<S>,
    /// `∫_{Ω \ ∪ B_r} W(u)/ε²`.
    pub remainder: S,
    pub radius: S,
}

/// Midpoint quadrature of a nodewise integrand over computational nodes.
pub fn integrate_nodes<S: Scalar>(u: &FieldR2<S>, mut f: impl FnMut(usize) -> S) -> S {
    let g = u.grid();
    let h2 = g.h() * g.h();
    let n = g.n();
    let mut acc = S::zero();
    for j in 0..n {
        for i in 0..n {
            let idx = g.idx(i, j);
            if g.is_computational(idx) {
                acc = acc + g.cell_weight(idx) * f(idx);
            }
        }
    }
    acc * h2
}

/// Normal derivative of the field on the boundary by a one-sided 3-point
/// stencil anchored at the exact Dirichlet value.
fn boundary_normal_derivative<S: Scalar>(
    u: &FieldR2<S>,
    datum: &BoundaryDatum<S>,
    theta: S,
) -> Vec2<S> {
    let g = u.grid();
    let domain = g.domain();
    let delta = S::two() * g.h();
    let xb = domain.boundary_point(theta);
    let nrm = domain.outward_normal(theta);
    let g0 = datum.g(theta);
    let u1 = u.sample(xb - nrm * delta);
    let u2 = u.sample(xb - nrm * (S::two() * delta));
    (g0 * S::lit(3.0) - u1 * S::lit(4.0) + u2) / (S::two() * delta)
}

/// Evaluates both sides of the multiplier identity with `V = (x₁, x₂)`:
/// `2∫W/ε² + ½∫(x·n)|∂u/∂n|² = ∫ [½(x·n)|g_σ|² - (x·σ̂)(∂u/∂n · g_σ)]`.
pub fn pohozaev<S: Scalar>(
    u: &FieldR2<S>,
    w: &PotentialW<S>,
    eps: S,
    datum: &BoundaryDatum<S>,
) -> PohozaevReport<S> {
    let g = u.grid();
    let domain = g.domain();
    let eps2 = eps * eps;
    let potential_term = integrate_nodes(u, |idx| w.value(u.get(idx))) / eps2;

    let m = 4 * g.n();
    let dtheta = S::tau() / S::from_index(m);
    let mut lhs_boundary = S::zero();
    let mut rhs = S::zero();
    let mut boundary_term = S::zero();
    for k in 0..m {
        let th = S::tau() * S::from_index(k) / S::from_index(m);
        let x = domain.boundary_point(th);
        let nrm = domain.outward_normal(th);
        let tang = domain.boundary_tangent(th);
        let speed = domain.boundary_speed(th);
        let xn = x.dot(nrm);
        let xs = x.dot(tang);
        let dun = boundary_normal_derivative(u, datum, th);
        let gs = datum.g_deriv(th) / speed;
        lhs_boundary = lhs_boundary + S::half() * xn * dun.norm_sq() * speed;
        boundary_term = boundary_term + dun.norm_sq() * speed;
        rhs = rhs + (S::half() * xn * gs.norm_sq() - xs * dun.dot(gs)) * speed;
    }
    lhs_boundary = lhs_boundary * dtheta;
    boundary_term = boundary_term * dtheta;
    rhs = rhs * dtheta;

    PohozaevReport {
        potential_term,
        boundary_term,
        identity_residual: (S::two() * potential_term + lhs_boundary - rhs).abs(),
    }
}

/// Vortex masses `∫_{B_r(a_j)} W/ε²` and the off-disc remainder.
pub fn hopf_masses<S: Scalar>(
    u: &FieldR2<S>,
    w: &PotentialW<S>,
    eps: S,
    clusters: &[VortexCluster<S>],
    radius: S,
) -> Result<MassReport<S>, AnalysisError> {
    for a in 0..clusters.len() {
        for b in (a + 1)..clusters.len() {
            let dist = (clusters[a].center - clusters[b].center).norm();
            if dist <= S::two() * radius {
                return Err(AnalysisError::OverlappingMassDiscs {
                    r: radius.to_f64(),
                    dist: dist.to_f64(),
                });
            }
        }
    }
    let g = u.grid();
    let eps2 = eps * eps;
    let n = g.n();
    let h2 = g.h() * g.h();
    let mut masses = vec![S::zero(); clusters.len()];
    let mut remainder = S::zero();
    for j in 0..n {
        for i in 0..n {
            let idx = g.idx(i, j);
            if !g.is_computational(idx) {
                continue;
            }
            let p = g.point(i, j);
            let contrib = g.cell_weight(idx) * w.value(u.get(idx)) * h2 / eps2;
            match clusters
                .iter()
                .position(|c| (p - c.center).norm() < radius)
            {
                Some(k) => masses[k] += contrib,
                None => remainder += contrib,
            }
        }
    }
    Ok(MassReport {
        masses,
        remainder,
        radius,
    })
}

/// `(∫_{Ω_ε} [|∇t|² + t²/ε²], ∫_Ω |∇ dist(u,Γ)|²)`.
///
/// The signed tube coordinate exists only outside the bad discs; the
/// unsigned distance is global. Gradients use centered differences where
/// both neighbors carry values and one-sided differences otherwise.
pub fn t_energy_and_dist_grad<S: Scalar>(
    u: &FieldR2<S>,
    curve: &PlanarCurve<S>,
    eps: S,
    vortices: &VortexSet<S>,
) -> (S, S) {
    let g = u.grid().clone();
    let n = g.n();
    let h = g.h();
    let eps2 = eps * eps;

    let mut t_plane = vec![S::nan(); n * n];
    let mut d_plane = vec![S::nan(); n * n];
    for j in 0..n {
        for i in 0..n {
            let idx = g.idx(i, j);
            if !g.is_computational(idx) {
                continue;
            }
            let v = u.get(idx);
            d_plane[idx] = curve.distance(v);
            if !vortices.in_any_disc(g.point(i, j)) {
                if let Ok(tc) = curve.project(v) {
                    t_plane[idx] = tc.t;
                }
            }
        }
    }

    let deriv = |plane: &[S], idx: usize, stride: usize| -> Option<S> {
        let fwd = plane.get(idx + stride).copied().unwrap_or(S::nan());
        let bwd = if idx >= stride {
            plane[idx - stride]
        } else {
            S::nan()
        };
        let here = plane[idx];
        if !fwd.is_nan() && !bwd.is_nan() {
            Some((fwd - bwd) / (S::two() * h))
        } else if !fwd.is_nan() {
            Some((fwd - here) / h)
        } else if !bwd.is_nan() {
            Some((here - bwd) / h)
        } else {
            None
        }
    };

    let h2 = h * h;
    let mut t_energy = S::zero();
    let mut dist_grad = S::zero();
    for j in 0..n {
        for i in 0..n {
            let idx = g.idx(i, j);
            if !g.is_computational(idx) {
                continue;
            }
            if !t_plane[idx].is_nan() {
                let gx = deriv(&t_plane, idx, 1).unwrap_or(S::zero());
                let gy = deriv(&t_plane, idx, n).unwrap_or(S::zero());
                let t = t_plane[idx];
                t_energy =
                    t_energy + g.cell_weight(idx) * (gx * gx + gy * gy + t * t / eps2) * h2;
            }
            if !d_plane[idx].is_nan() {
                let gx = deriv(&d_plane, idx, 1).unwrap_or(S::zero());
                let gy = deriv(&d_plane, idx, n).unwrap_or(S::zero());
                dist_grad = dist_grad + g.cell_weight(idx) * (gx * gx + gy * gy) * h2;
            }
        }
    }
    (t_energy, dist_grad)
}

/// `∫_Ω |∇u|^p` for each requested p (interior centered differences).
pub fn lp_gradient_norms<S: Scalar>(u: &FieldR2<S>, ps: &[S]) -> Vec<S> {
    let g = u.grid();
    let n = g.n();
    let h = g.h();
    let h2 = h * h;
    let mut acc = vec![S::zero(); ps.len()];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let idx = g.idx(i, j);
            if !g.is_computational(idx)
                || !g.is_computational(idx + 1)
                || !g.is_computational(idx - 1)
                || !g.is_computational(idx + n)
                || !g.is_computational(idx - n)
            {
                continue;
            }
            let dx = (u.get(idx + 1) - u.get(idx - 1)) / (S::two() * h);
            let dy = (u.get(idx + n) - u.get(idx - n)) / (S::two() * h);
            let norm = (dx.norm_sq() + dy.norm_sq()).sqrt();
            for (slot, &p) in acc.iter_mut().zip(ps) {
                *slot += norm.powf(p) * g.cell_weight(idx) * h2;
            }
        }
    }
    acc
}

/// `∫_{Ω \ ∪ B_r(a_j)} |∇u|²`: the Dirichlet energy away from the clusters.
pub fn masked_h1<S: Scalar>(u: &FieldR2<S>, holes: &[(Vec2<S>, S)]) -> S {
    let g = u.grid();
    let n = g.n();
    let h = g.h();
    let h2 = h * h;
    let mut acc = S::zero();
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let idx = g.idx(i, j);
            if !g.is_computational(idx)
                || !g.is_computational(idx + 1)
                || !g.is_computational(idx - 1)
                || !g.is_computational(idx + n)
                || !g.is_computational(idx - n)
            {
                continue;
            }
            let p = g.point(i, j);
            if holes.iter().any(|&(c, r)| (p - c).norm() < r) {
                continue;
            }
            let dx = (u.get(idx + 1) - u.get(idx - 1)) / (S::two() * h);
            let dy = (u.get(idx + n) - u.get(idx - n)) / (S::two() * h);
            acc = acc + (dx.norm_sq() + dy.norm_sq()) * g.cell_weight(idx) * h2;
        }
    }
    acc
}

/// Assembles the full diagnostic breakdown of a converged state.
pub fn full_energy_breakdown<S: Scalar>(
    u: &FieldR2<S>,
    w: &PotentialW<S>,
    eps: S,
    vortices: &VortexSet<S>,
) -> EnergyBreakdown<S> {
    let base = crate::solver::discrete_energy(u, w, eps);
    let (t_energy, dist_grad) = t_energy_and_dist_grad(u, w.curve(), eps, vortices);
    EnergyBreakdown {
        dirichlet: base.dirichlet,
        potential: base.potential,
        boundary_normal: base.boundary_normal,
        t_energy,
        dist_grad,
    }
}
