//! Numerical laboratory for critical points of the energy
//! `E_eps(u) = ∫ [ (1/2)|∇u|² + W(u)/eps² ]` over a planar domain, where the
//! potential `W` vanishes on an arbitrary smooth simple closed curve.
//!
//! The crate is organized around the objects of that problem:
//!
//! * [`curve`] — the vacuum curve `Γ`, arc-length parametrized, with tube
//!   coordinates (nearest-point projection, signed distance, curvature).
//! * [`potential`] — potentials vanishing exactly on `Γ`, their tube
//!   factorization `W = α(s,t) t²`, and the derived constants table.
//! * [`domain`] — star-shaped computational domains, Cartesian grid
//!   rasterization, and `Γ`-valued boundary data of prescribed degree.
//! * [`field`] — two-component lattice fields with bound Dirichlet data.
//! * [`solver`] — discrete energy/gradient, semi-implicit gradient flow,
//!   Newton refinement, and the radial profile branch.
//! * [`analysis`] — vortex detection, winding numbers, phase extraction,
//!   maximum-principle and Pohozaev checks, Hopf differential machinery,
//!   and the canonical limit map.
//!
//! All numerics are generic over the scalar type through [`Scalar`];
//! concrete `f64` aliases are exported at the crate root.

pub mod analysis;
pub mod curve;
pub mod domain;
pub mod error;
pub mod expr;
pub mod field;
pub mod potential;
pub mod scalar;
pub mod solver;
pub mod spline;
pub mod vec2;

pub use error::{AnalysisError, CurveError, DomainError, PotentialError, SolveError};
pub use scalar::Scalar;
pub use vec2::Vec2;

/// Default scalar type for the command-line laboratory.
pub type Real = f64;

pub type Point = Vec2<Real>;
pub type PlanarCurve = curve::PlanarCurve<Real>;
pub type TubeCoords = curve::TubeCoords<Real>;
pub type PotentialW = potential::PotentialW<Real>;
pub type ConstantsTable = potential::ConstantsTable<Real>;
pub type StarDomain = domain::StarDomain<Real>;
pub type BoundaryDatum = domain::BoundaryDatum<Real>;
pub type Grid2D = domain::Grid2D<Real>;
pub type FieldR2 = field::FieldR2<Real>;
pub type SolveConfig = solver::SolveConfig<Real>;
pub type SolveResult = solver::SolveResult<Real>;
pub type VortexSet = analysis::VortexSet<Real>;
pub type PhaseDecomposition = analysis::PhaseDecomposition<Real>;
pub type EnergyBreakdown = analysis::EnergyBreakdown<Real>;
