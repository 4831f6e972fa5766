//! Error types for the individual subsystems.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("curve has a self-intersection between samples {0} and {1}")]
    SelfIntersection(usize, usize),
    #[error("curve is not closed (gap {gap:.3e} vs perimeter {perimeter:.3e})")]
    OpenCurve { gap: f64, perimeter: f64 },
    #[error("need at least 16 samples, got {0}")]
    TooFewSamples(usize),
    #[error("point {0:?} lies outside the tube of radius {1:.3e}")]
    OutsideTube((f64, f64), f64),
    #[error("nearest-point projection did not converge at {0:?}")]
    ProjectionFailed((f64, f64)),
    #[error("degenerate curve: {0}")]
    Degenerate(String),
}

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("modulation profile must be strictly positive (min sampled value {0:.3e})")]
    NonPositiveProfile(f64),
    #[error("far-field blend produced a negative value {value:.3e} at distance {dist:.3e}")]
    NegativeBlend { value: f64, dist: f64 },
    #[error("|t| = {0:.3e} is outside the factorization range delta0 = {1:.3e}")]
    OutsideDelta0(f64, f64),
    #[error("cannot achieve c1 > 0: potential degenerate along the curve")]
    DegenerateConstants,
}

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("strict star-shapedness violated: min x·n = {min:.3e} (required ≥ {required:.3e})")]
    NotStarShaped { min: f64, required: f64 },
    #[error("boundary radius must be positive (min sampled rho = {0:.3e})")]
    NonPositiveRadius(f64),
    #[error("grid too small: n = {0}, need n ≥ 64")]
    GridTooSmall(usize),
    #[error("boundary datum degrees do not match: expected {expected}, built {built}")]
    DegreeMismatch { expected: i32, built: i32 },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("gradient flow diverged at step {step}: energy {energy:.6e} (previous {previous:.6e})")]
    Diverged { step: usize, energy: f64, previous: f64 },
    #[error("field value is not finite at step {0}")]
    NotFinite(usize),
    #[error("linear solve stagnated: relative residual {0:.3e} after {1} iterations")]
    LinearStagnation(f64, usize),
    #[error("Newton iteration failed to reduce the residual ({0:.3e} -> {1:.3e})")]
    NewtonStalled(f64, f64),
    #[error("radial profile Newton failed at eps = {0:.3e}")]
    RadialNewton(f64),
    #[error("initialization degrees sum to {got}, boundary degree is {want}")]
    InitDegreeMismatch { got: i32, want: i32 },
    #[error("radial branch requires |d| >= 1, got {0}")]
    RadialDegreeZero(i32),
    #[error("radial initialization requires the unit-circle vacuum curve")]
    RadialInitUnsupported,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("winding loop touches the far-from-curve set at node ({0}, {1})")]
    LoopFarFromCurve(usize, usize),
    #[error("winding sum {0:.4} is not close to an integer multiple of 2π")]
    NonIntegerWinding(f64),
    #[error("bad disc around ({x:.4}, {y:.4}) with radius {r:.4} intersects the domain boundary")]
    DiscTouchesBoundary { x: f64, y: f64, r: f64 },
    #[error("bad-disc construction did not stabilize after {0} radius inflations")]
    DiscInflationFailed(usize),
    #[error("phase unwrapping found a residue of {residue} at plaquette ({ix}, {iy}) away from the recorded vortices")]
    UnwrapResidue { ix: usize, iy: usize, residue: i64 },
    #[error("region is not vortex-free: dist(u, curve) = {0:.3e} exceeds delta1 = {1:.3e}")]
    RegionNotVortexFree(f64, f64),
    #[error("mass discs of radius {r:.3} overlap: clusters at distance {dist:.3}")]
    OverlappingMassDiscs { r: f64, dist: f64 },
    #[error("need at least 3 sweep points for a scaling fit, got {0}")]
    TooFewSweepPoints(usize),
    #[error("no interior reference values available: {0}")]
    EmptyComparison(String),
}
