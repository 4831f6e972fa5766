//! Star-shaped computational domains, their Cartesian rasterization, and
//! curve-valued Dirichlet data of prescribed degree.
//!
//! Domains are radial graphs `ρ(θ)` about the origin (the star center); the
//! strict star-shapedness margin `min x·n > 0` is verified by boundary
//! sampling at build time. Grids are uniform n×n lattices over the square
//! bounding box with first-order cut-cell boundary values: inside nodes with
//! an outside neighbor are pinned to the boundary datum at the nearest
//! grid-line crossing.

use std::sync::Arc;

use crate::curve::PlanarCurve;
use crate::error::DomainError;
use crate::scalar::Scalar;
use crate::spline::PeriodicSpline;
use crate::vec2::Vec2;

const BOUNDARY_KNOTS: usize = 2048;

/// Fraction of the maximum radius below which the sampled star margin
/// `min x·n` is treated as a violation (re-entrant boundary).
const STAR_MARGIN_FRACTION: f64 = 0.05;

#[derive(Clone, Debug)]
pub enum DomainSpec<S> {
    Disc { r: S },
    /// Radial graph `ρ(θ)` about the origin.
    Radial { rho: Vec<S> },
}

impl<S: Scalar> DomainSpec<S> {
    pub fn radial_fn(rho: impl Fn(S) -> S) -> Self {
        DomainSpec::Radial {
            rho: (0..BOUNDARY_KNOTS)
                .map(|i| rho(S::tau() * S::from_index(i) / S::from_index(BOUNDARY_KNOTS)))
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StarDomain<S> {
    rho: PeriodicSpline<S>,
    /// Sampled strict star-shapedness constant `min x·n`.
    star_margin: S,
    max_rho: S,
    min_rho: S,
}

pub fn build_domain<S: Scalar>(spec: &DomainSpec<S>) -> Result<StarDomain<S>, DomainError> {
    StarDomain::build(spec)
}

impl<S: Scalar> StarDomain<S> {
    pub fn build(spec: &DomainSpec<S>) -> Result<Self, DomainError> {
        let values: Vec<S> = match spec {
            DomainSpec::Disc { r } => vec![*r; BOUNDARY_KNOTS],
            DomainSpec::Radial { rho } => rho.clone(),
        };
        let rho = PeriodicSpline::new(S::tau(), values);
        let min_rho = rho.min_value();
        if min_rho <= S::zero() {
            return Err(DomainError::NonPositiveRadius(min_rho.to_f64()));
        }
        let mut max_rho = S::zero();
        let mut star_margin = S::infinity();
        let n = 4096;
        for i in 0..n {
            let th = S::tau() * S::from_index(i) / S::from_index(n);
            let r = rho.eval(th);
            let dr = rho.deriv(th);
            max_rho = max_rho.max(r);
            // x·n = ρ² / |x'(θ)| for a radial graph.
            star_margin = star_margin.min(r * r / (r * r + dr * dr).sqrt());
        }
        let required = S::lit(STAR_MARGIN_FRACTION) * max_rho;
        if star_margin < required {
            return Err(DomainError::NotStarShaped {
                min: star_margin.to_f64(),
                required: required.to_f64(),
            });
        }
        Ok(Self {
            rho,
            star_margin,
            max_rho,
            min_rho,
        })
    }

    /// Sampled strict star-shapedness constant `min_∂Ω x·n`.
    pub fn star_margin(&self) -> S {
        self.star_margin
    }

    pub fn max_radius(&self) -> S {
        self.max_rho
    }

    pub fn min_radius(&self) -> S {
        self.min_rho
    }

    pub fn rho(&self, theta: S) -> S {
        self.rho.eval(theta)
    }

    pub fn contains(&self, p: Vec2<S>) -> bool {
        let r = p.norm();
        if r == S::zero() {
            return true;
        }
        r < self.rho.eval(p.angle())
    }

    pub fn boundary_point(&self, theta: S) -> Vec2<S> {
        Vec2::from_angle(theta) * self.rho.eval(theta)
    }

    /// Unit tangent of the boundary in the direction of increasing θ.
    pub fn boundary_tangent(&self, theta: S) -> Vec2<S> {
        let e = Vec2::from_angle(theta);
        (e * self.rho.deriv(theta) + e.perp() * self.rho.eval(theta)).normalized()
    }

    pub fn outward_normal(&self, theta: S) -> Vec2<S> {
        -self.boundary_tangent(theta).perp()
    }

    /// `|dx/dθ|`, the speed of the boundary parametrization.
    pub fn boundary_speed(&self, theta: S) -> S {
        let r = self.rho.eval(theta);
        let dr = self.rho.deriv(theta);
        (r * r + dr * dr).sqrt()
    }

    pub fn x_dot_n(&self, theta: S) -> S {
        self.boundary_point(theta).dot(self.outward_normal(theta))
    }

    /// Area by the radial quadrature `½ ∫ ρ² dθ`.
    pub fn area(&self) -> S {
        let n = 8192;
        let mut acc = S::zero();
        for i in 0..n {
            let th = S::tau() * S::from_index(i) / S::from_index(n);
            let r = self.rho.eval(th);
            acc = acc + r * r;
        }
        acc * S::half() * S::tau() / S::from_index(n)
    }

    /// Distance from a point to the boundary along the inward radial ray is
    /// not the true distance; this is the sampled true distance, used only
    /// for diagnostics and masks.
    pub fn boundary_distance(&self, p: Vec2<S>) -> S {
        let n = 1024;
        let mut best = S::infinity();
        for i in 0..n {
            let th = S::tau() * S::from_index(i) / S::from_index(n);
            best = best.min((self.boundary_point(th) - p).norm());
        }
        best
    }
}

/// Dirichlet datum `g(θ) = τ(e^{i φ0(θ)})` with `φ0(θ) = d θ + η0(θ)`.
#[derive(Clone, Debug)]
pub struct BoundaryDatum<S> {
    curve: Arc<PlanarCurve<S>>,
    degree: i32,
    eta0: PeriodicSpline<S>,
}

pub fn make_boundary_datum<S: Scalar>(
    curve: Arc<PlanarCurve<S>>,
    degree: i32,
    eta0: impl Fn(S) -> S,
) -> Result<BoundaryDatum<S>, DomainError> {
    BoundaryDatum::new(curve, degree, eta0)
}

impl<S: Scalar> BoundaryDatum<S> {
    pub fn new(
        curve: Arc<PlanarCurve<S>>,
        degree: i32,
        eta0: impl Fn(S) -> S,
    ) -> Result<Self, DomainError> {
        let values: Vec<S> = (0..BOUNDARY_KNOTS)
            .map(|i| eta0(S::tau() * S::from_index(i) / S::from_index(BOUNDARY_KNOTS)))
            .collect();
        let datum = Self {
            curve,
            degree,
            eta0: PeriodicSpline::new(S::tau(), values),
        };
        // The lifting increment over one boundary loop is 2π d by
        // construction; verify the sampled winding anyway.
        let built = ((datum.phi0(S::tau()) - datum.phi0(S::zero())) / S::tau())
            .round()
            .to_f64() as i32;
        if built != degree {
            return Err(DomainError::DegreeMismatch {
                expected: degree,
                built,
            });
        }
        Ok(datum)
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn curve(&self) -> &Arc<PlanarCurve<S>> {
        &self.curve
    }

    /// Lifted phase; continuous in θ (not wrapped), increment 2π·degree.
    pub fn phi0(&self, theta: S) -> S {
        S::from_f64(self.degree as f64).unwrap() * theta + self.eta0.eval(theta)
    }

    pub fn dphi0(&self, theta: S) -> S {
        S::from_f64(self.degree as f64).unwrap() + self.eta0.deriv(theta)
    }

    /// The Γ-valued datum itself.
    pub fn g(&self, theta: S) -> Vec2<S> {
        self.curve.tau(self.phi0(theta))
    }

    /// `dg/dθ`.
    pub fn g_deriv(&self, theta: S) -> Vec2<S> {
        self.curve.tangent(self.phi0(theta)) * self.dphi0(theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    Exterior,
    /// Inside with an exterior 4-neighbor; carries interpolated Dirichlet data.
    BoundaryAdjacent,
    /// Inside with all 4 neighbors inside; a solver unknown.
    Interior,
}

#[derive(Clone, Debug)]
pub struct Grid2D<S> {
    domain: Arc<StarDomain<S>>,
    n: usize,
    h: S,
    x0: S,
    y0: S,
    class: Vec<NodeClass>,
    /// Flat indices of interior nodes.
    interior: Vec<u32>,
    /// Compact id of each interior node (sentinel u32::MAX elsewhere).
    interior_id: Vec<u32>,
    /// Boundary-adjacent nodes with their boundary anchor (θ, point).
    cut_nodes: Vec<CutNode<S>>,
    /// Fractional cell areas for the potential quadrature (0 for exterior).
    cell_weight: Vec<S>,
}

#[derive(Clone, Copy, Debug)]
pub struct CutNode<S> {
    pub idx: u32,
    pub theta: S,
    pub anchor: Vec2<S>,
}

pub fn rasterize<S: Scalar>(domain: Arc<StarDomain<S>>, n: usize) -> Result<Grid2D<S>, DomainError> {
    Grid2D::rasterize(domain, n)
}

impl<S: Scalar> Grid2D<S> {
    pub fn rasterize(domain: Arc<StarDomain<S>>, n: usize) -> Result<Self, DomainError> {
        if n < 64 {
            return Err(DomainError::GridTooSmall(n));
        }
        // Square bounding box centered on the star center.
        let mut half = S::zero();
        for i in 0..4096 {
            let th = S::tau() * S::from_index(i) / S::lit(4096.0);
            let p = domain.boundary_point(th);
            half = half.max(p.x.abs()).max(p.y.abs());
        }
        let h = S::two() * half / S::from_index(n - 1);
        let x0 = -half;
        let y0 = -half;

        let at = |i: usize, j: usize| Vec2::new(x0 + S::from_index(i) * h, y0 + S::from_index(j) * h);
        let mut inside = vec![false; n * n];
        for j in 0..n {
            for i in 0..n {
                inside[j * n + i] = domain.contains(at(i, j));
            }
        }

        let mut class = vec![NodeClass::Exterior; n * n];
        let mut interior = Vec::new();
        let mut cut_nodes = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let idx = j * n + i;
                if !inside[idx] {
                    continue;
                }
                let on_edge = i == 0 || j == 0 || i == n - 1 || j == n - 1;
                let mut has_outside = on_edge;
                let mut best_anchor: Option<(S, Vec2<S>)> = None;
                let p = at(i, j);
                let neighbors: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
                for (di, dj) in neighbors {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    let out = ni < 0
                        || nj < 0
                        || ni >= n as i64
                        || nj >= n as i64
                        || !inside[(nj as usize) * n + ni as usize];
                    if out {
                        has_outside = true;
                        let dir = Vec2::new(
                            S::from_f64(di as f64).unwrap(),
                            S::from_f64(dj as f64).unwrap(),
                        );
                        let crossing = bisect_crossing(&domain, p, dir * h);
                        let d = (crossing - p).norm();
                        if best_anchor.map_or(true, |(bd, _)| d < bd) {
                            best_anchor = Some((d, crossing));
                        }
                    }
                }
                if has_outside {
                    class[idx] = NodeClass::BoundaryAdjacent;
                    let anchor = best_anchor.map(|(_, p)| p).unwrap_or(p);
                    cut_nodes.push(CutNode {
                        idx: idx as u32,
                        theta: anchor.angle().wrap_tau(),
                        anchor,
                    });
                } else {
                    class[idx] = NodeClass::Interior;
                    interior.push(idx as u32);
                }
            }
        }

        let mut interior_id = vec![u32::MAX; n * n];
        for (k, &idx) in interior.iter().enumerate() {
            interior_id[idx as usize] = k as u32;
        }

        // Fractional cell areas by 4×4 subsampling, for computational nodes.
        let mut cell_weight = vec![S::zero(); n * n];
        for j in 0..n {
            for i in 0..n {
                let idx = j * n + i;
                if class[idx] == NodeClass::Exterior {
                    continue;
                }
                let p = at(i, j);
                let mut count = 0usize;
                for a in 0..4 {
                    for b in 0..4 {
                        let q = p + Vec2::new(
                            (S::from_index(a) + S::half()) / S::lit(4.0) * h - h * S::half(),
                            (S::from_index(b) + S::half()) / S::lit(4.0) * h - h * S::half(),
                        );
                        if domain.contains(q) {
                            count += 1;
                        }
                    }
                }
                cell_weight[idx] = S::from_index(count) / S::lit(16.0);
            }
        }

        cut_nodes.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());

        Ok(Self {
            domain,
            n,
            h,
            x0,
            y0,
            class,
            interior,
            interior_id,
            cut_nodes,
            cell_weight,
        })
    }

    pub fn domain(&self) -> &Arc<StarDomain<S>> {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> S {
        self.h
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Vec2<S> {
        Vec2::new(
            self.x0 + S::from_index(i) * self.h,
            self.y0 + S::from_index(j) * self.h,
        )
    }

    #[inline]
    pub fn class(&self, idx: usize) -> NodeClass {
        self.class[idx]
    }

    #[inline]
    pub fn is_computational(&self, idx: usize) -> bool {
        self.class[idx] != NodeClass::Exterior
    }

    pub fn interior_nodes(&self) -> &[u32] {
        &self.interior
    }

    #[inline]
    pub fn interior_id(&self, idx: usize) -> Option<usize> {
        let id = self.interior_id[idx];
        (id != u32::MAX).then_some(id as usize)
    }

    /// Boundary-adjacent nodes ordered by boundary angle.
    pub fn cut_nodes(&self) -> &[CutNode<S>] {
        &self.cut_nodes
    }

    pub fn cell_weight(&self, idx: usize) -> S {
        self.cell_weight[idx]
    }

    /// Nearest node to a point (clamped to the lattice).
    pub fn nearest_node(&self, p: Vec2<S>) -> (usize, usize) {
        let clamp = |v: S| -> usize {
            let i = ((v) / self.h).round().to_f64();
            if i < 0.0 {
                0
            } else if i as usize >= self.n {
                self.n - 1
            } else {
                i as usize
            }
        };
        (clamp(p.x - self.x0), clamp(p.y - self.y0))
    }
}

/// First boundary crossing along a grid segment, by bisection on the
/// inside/outside indicator.
fn bisect_crossing<S: Scalar>(domain: &StarDomain<S>, from: Vec2<S>, step: Vec2<S>) -> Vec2<S> {
    let mut lo = S::zero();
    let mut hi = S::one();
    // `from` is inside; `from + step` may be outside the lattice but lies
    // outside the domain by construction of the caller.
    for _ in 0..48 {
        let mid = (lo + hi) * S::half();
        if domain.contains(from + step * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    from + step * ((lo + hi) * S::half())
}
