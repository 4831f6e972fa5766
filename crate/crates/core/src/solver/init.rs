//! Initial fields: canonical vortex ansatz, radial-profile lift, and seeded
//! interior perturbations. Also hosts the grid harmonic extension shared
//! with the canonical-map construction.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{BoundaryDatum, Grid2D};
use crate::error::SolveError;
use crate::field::FieldR2;
use crate::potential::PotentialW;
use crate::scalar::Scalar;
use crate::vec2::Vec2;

use super::energy::InteriorStencil;
use super::linsolve::{cg, LinearOp};
use super::radial::{solve_radial, DEFAULT_RADIAL_MESH};
use super::InitStrategy;

struct Poisson<'a, S> {
    stencil: &'a InteriorStencil<S>,
    inv_h2: S,
}

impl<'a, S: Scalar> LinearOp<S> for Poisson<'a, S> {
    fn len(&self) -> usize {
        self.stencil.len()
    }
    fn apply(&self, x: &[S], y: &mut [S]) {
        self.stencil.apply_helmholtz(S::zero(), self.inv_h2, x, y);
    }
}

/// Five-point harmonic extension of boundary values prescribed on the cut
/// nodes (one value per cut node, in `grid.cut_nodes()` order); returns the
/// full lattice plane.
pub fn harmonic_extension<S: Scalar>(
    grid: &Arc<Grid2D<S>>,
    bc: &[S],
    lin_tol: S,
) -> Result<Vec<S>, SolveError> {
    assert_eq!(bc.len(), grid.cut_nodes().len());
    let n2 = grid.n() * grid.n();
    let mut carrier = FieldR2::zeros(grid.clone());
    for (cn, &v) in grid.cut_nodes().iter().zip(bc) {
        carrier.u1[cn.idx as usize] = v;
    }
    let stencil = InteriorStencil::new(&carrier);
    let h2 = grid.h() * grid.h();
    let op = Poisson {
        stencil: &stencil,
        inv_h2: S::one() / h2,
    };
    let rhs: Vec<S> = stencil.bsum1.iter().map(|&b| b / h2).collect();
    let mut x = vec![S::zero(); stencil.len()];
    cg(&op, &rhs, &mut x, lin_tol, 20_000)?;
    let mut plane = vec![S::zero(); n2];
    for cn in grid.cut_nodes() {
        plane[cn.idx as usize] = carrier.u1[cn.idx as usize];
    }
    stencil.scatter(&x, &mut plane);
    Ok(plane)
}

/// Sum of vortex angles `Σ d_j · angle(z - a_j)`.
pub fn vortex_angle_sum<S: Scalar>(vortices: &[(Vec2<S>, i32)], z: Vec2<S>) -> S {
    let mut acc = S::zero();
    for &(a, d) in vortices {
        acc = acc + S::from_f64(d as f64).unwrap() * (z - a).angle();
    }
    acc
}

/// Boundary values of the harmonic phase correction: the lift `φ0` minus the
/// vortex angle sum, unwrapped continuously along the ordered cut nodes.
///
/// Both the boundary lift and the vortex angles carry branch jumps at
/// convention-dependent places; when the vortex degrees sum to the boundary
/// degree their difference is single-valued, and unwrapping the pointwise
/// values recovers it without spurious 2π steps.
pub fn phase_correction_boundary<S: Scalar>(
    grid: &Grid2D<S>,
    datum: &BoundaryDatum<S>,
    vortices: &[(Vec2<S>, i32)],
) -> Vec<S> {
    let cuts = grid.cut_nodes();
    let mut out = Vec::with_capacity(cuts.len());
    let mut prev_raw: Option<S> = None;
    let mut acc = S::zero();
    for cn in cuts {
        let raw = datum.phi0(cn.theta) - vortex_angle_sum(vortices, cn.anchor);
        acc = match prev_raw {
            None => raw,
            Some(p) => acc + (raw - p).wrap_pi(),
        };
        prev_raw = Some(raw);
        out.push(acc);
    }
    out
}

/// Builds the initial field for a solve.
pub fn init_field<S: Scalar>(
    strategy: &InitStrategy<S>,
    grid: Arc<Grid2D<S>>,
    w: &PotentialW<S>,
    datum: &BoundaryDatum<S>,
    eps: S,
    lin_tol: S,
) -> Result<FieldR2<S>, SolveError> {
    match strategy {
        InitStrategy::Canonical { vortices } => {
            canonical_ansatz(vortices, grid, w, datum, eps, lin_tol)
        }
        InitStrategy::Radial { degree } => {
            let circleish = w
                .curve()
                .samples()
                .iter()
                .all(|s| (s.point.norm() - S::one()).abs() < S::lit(1e-6));
            if !circleish {
                return Err(SolveError::RadialInitUnsupported);
            }
            let profile = solve_radial::<S>(*degree, eps, DEFAULT_RADIAL_MESH)?;
            Ok(profile.lift(grid, datum))
        }
        InitStrategy::Perturbed { seed, amplitude } => {
            let vortices = default_vortices(grid.as_ref(), datum.degree());
            let mut u = canonical_ansatz(&vortices, grid.clone(), w, datum, eps, lin_tol)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for &idx in grid.interior_nodes() {
                let noise = Vec2::new(
                    S::lit(rng.gen_range(-1.0..1.0)),
                    S::lit(rng.gen_range(-1.0..1.0)),
                );
                let idx = idx as usize;
                u.set(idx, u.get(idx) + noise * *amplitude);
            }
            Ok(u)
        }
    }
}

/// Default vortex placement for a prescribed boundary degree.
pub fn default_vortices<S: Scalar>(grid: &Grid2D<S>, degree: i32) -> Vec<(Vec2<S>, i32)> {
    if degree == 0 {
        return Vec::new();
    }
    let count = degree.unsigned_abs() as usize;
    let sign = degree.signum();
    if count == 1 {
        return vec![(Vec2::zero(), sign)];
    }
    let radius = S::lit(0.25) * grid.domain().min_radius();
    (0..count)
        .map(|k| {
            let th = S::tau() * S::from_index(k) / S::from_index(count);
            (Vec2::from_angle(th) * radius, sign)
        })
        .collect()
}

fn canonical_ansatz<S: Scalar>(
    vortices: &[(Vec2<S>, i32)],
    grid: Arc<Grid2D<S>>,
    w: &PotentialW<S>,
    datum: &BoundaryDatum<S>,
    eps: S,
    lin_tol: S,
) -> Result<FieldR2<S>, SolveError> {
    let total: i32 = vortices.iter().map(|&(_, d)| d).sum();
    if total != datum.degree() {
        return Err(SolveError::InitDegreeMismatch {
            got: total,
            want: datum.degree(),
        });
    }
    // Harmonic correction matching the boundary lift minus the vortex angles.
    let bc = phase_correction_boundary(&grid, datum, vortices);
    let eta = harmonic_extension(&grid, &bc, lin_tol)?;
    let curve = w.curve().clone();
    let center = curve.centroid();
    let mut u = FieldR2::bind(grid.clone(), datum);
    let n = grid.n();
    for j in 0..n {
        for i in 0..n {
            let idx = grid.idx(i, j);
            if grid.interior_id(idx).is_none() {
                continue;
            }
            let z = grid.point(i, j);
            let phase = vortex_angle_sum(vortices, z) + eta[idx];
            let mut val = curve.tau(phase.wrap_tau());
            // Taper the profile into the curve's interior near each vortex
            // core so the flow does not have to dig through the full barrier.
            if !vortices.is_empty() {
                let rmin = vortices
                    .iter()
                    .map(|&(a, _)| (z - a).norm())
                    .fold(S::infinity(), |x, y| x.min(y));
                let taper = (rmin / (S::lit(3.0) * eps)).min(S::one());
                val = center + (val - center) * taper;
            }
            u.set(idx, val);
        }
    }
    Ok(u)
}
