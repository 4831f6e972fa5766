//! Potentials vanishing exactly on the curve `Γ`.
//!
//! Two shipped families: the classical quartic `W(u) = (1 - |u|²)²/4` (whose
//! zero set is the unit circle), and tube-constructed potentials
//! `W(z) = q(s) t²` inside the tube of a general curve, blended C² to a
//! coercive far field. Both expose the tube factorization `W = α(s,t) t²`,
//! the Euler–Lagrange coefficients `(a, b, c)`, and the derived constants
//! table used by the phase maximum principle.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::PlanarCurve;
use crate::error::PotentialError;
use crate::scalar::Scalar;
use crate::spline::PeriodicSpline;
use crate::vec2::{Sym2, Vec2};

/// Knots used when sampling modulation profiles onto splines.
const PROFILE_KNOTS: usize = 2048;

#[derive(Clone, Debug)]
enum Kind<S> {
    /// `(1 - |u|²)² / 4`; Γ is the unit circle.
    GinzburgLandau,
    /// `q(s) t²` in the tube, blended to `q_min (t0² + ramp(|z|))` outside.
    CurveTube {
        q: PeriodicSpline<S>,
        q_min: S,
        /// Blend band `[t0, t1]` in |t|; the factorization is exactly
        /// `q(s) t²` for |t| ≤ t0.
        t0: S,
        t1: S,
    },
    /// Scalar multiple of another potential (violation testing).
    Scaled { inner: Box<Kind<S>>, factor: S },
    /// Smooth compact well added to another potential (violation testing).
    Welled {
        inner: Box<Kind<S>>,
        center: Vec2<S>,
        depth: S,
        radius: S,
    },
}

#[derive(Clone, Debug)]
pub struct PotentialW<S> {
    kind: Kind<S>,
    curve: Arc<PlanarCurve<S>>,
    /// Factorization window: `coefficients` is defined for |t| < delta0.
    delta0: S,
    /// Coercivity radius `2 max{|z| : z ∈ Γ}`.
    r0: S,
}

#[derive(Clone, Copy, Debug)]
pub struct Coefficients<S> {
    /// `(1 - t κ)²`, the metric factor of the phase gradient.
    pub a: S,
    /// `-a_s / 2`.
    pub b: S,
    /// `-a_t / 2`.
    pub c: S,
    pub alpha: S,
    pub alpha_s: S,
    pub alpha_t: S,
}

/// The standard quartic potential on the unit circle.
pub fn make_gl_potential<S: Scalar>() -> PotentialW<S> {
    PotentialW::gl()
}

/// Tube potential `q(s) t²` for an arbitrary curve and positive profile.
pub fn make_curve_potential<S: Scalar>(
    curve: Arc<PlanarCurve<S>>,
    q: impl Fn(S) -> S,
) -> Result<PotentialW<S>, PotentialError> {
    PotentialW::curve_tube(curve, q)
}

impl<S: Scalar> PotentialW<S> {
    pub fn gl() -> Self {
        let curve = Arc::new(
            PlanarCurve::build(&crate::curve::CurveSpec::Circle, crate::curve::DEFAULT_SAMPLES)
                .expect("unit circle always builds"),
        );
        let delta0 = curve.tube_radius() * S::lit(0.999);
        Self {
            kind: Kind::GinzburgLandau,
            r0: S::two() * curve.max_radius(),
            curve,
            delta0,
        }
    }

    pub fn curve_tube(
        curve: Arc<PlanarCurve<S>>,
        q: impl Fn(S) -> S,
    ) -> Result<Self, PotentialError> {
        let values: Vec<S> = (0..PROFILE_KNOTS)
            .map(|i| q(S::tau() * S::from_index(i) / S::from_index(PROFILE_KNOTS)))
            .collect();
        let spline = PeriodicSpline::new(S::tau(), values);
        let q_min = spline.min_value();
        if q_min <= S::zero() {
            return Err(PotentialError::NonPositiveProfile(q_min.to_f64()));
        }
        let tube = curve.tube_radius();
        let t0 = S::lit(0.6) * tube;
        let t1 = S::lit(0.9) * tube;
        let pot = Self {
            kind: Kind::CurveTube {
                q: spline,
                q_min,
                t0,
                t1,
            },
            r0: S::two() * curve.max_radius(),
            delta0: t0 * S::lit(0.999),
            curve,
        };
        // The construction is nonnegative by design; verify on a coarse net.
        for i in 0..64 {
            for j in 0..64 {
                let z = Vec2::new(
                    (S::from_index(i) / S::lit(63.0) - S::half()) * S::lit(2.5) * pot.r0,
                    (S::from_index(j) / S::lit(63.0) - S::half()) * S::lit(2.5) * pot.r0,
                );
                let w = pot.value(z);
                if w < -S::epsilon() {
                    return Err(PotentialError::NegativeBlend {
                        value: w.to_f64(),
                        dist: pot.curve.distance(z).to_f64(),
                    });
                }
            }
        }
        Ok(pot)
    }

    /// Rescales the potential; negative factors break nonnegativity (used to
    /// exercise validation failures).
    pub fn scaled(mut self, factor: S) -> Self {
        self.kind = Kind::Scaled {
            inner: Box::new(self.kind),
            factor,
        };
        self
    }

    /// Adds a smooth compactly supported well; with `depth = W(center)` this
    /// injects a spurious zero off the curve.
    pub fn with_well(mut self, center: Vec2<S>, depth: S, radius: S) -> Self {
        self.kind = Kind::Welled {
            inner: Box::new(self.kind),
            center,
            depth,
            radius,
        };
        self
    }

    pub fn curve(&self) -> &Arc<PlanarCurve<S>> {
        &self.curve
    }

    pub fn delta0(&self) -> S {
        self.delta0
    }

    pub fn r0(&self) -> S {
        self.r0
    }

    pub fn q_min(&self) -> S {
        match &self.kind {
            Kind::CurveTube { q_min, .. } => *q_min,
            _ => S::one(),
        }
    }

    pub fn is_gl(&self) -> bool {
        matches!(self.kind, Kind::GinzburgLandau)
    }

    pub fn value(&self, z: Vec2<S>) -> S {
        Self::kind_value(&self.kind, &self.curve, self.r0, z, None).0
    }

    /// Value with a warm-start tube parameter for the solver hot path.
    pub fn value_hinted(&self, z: Vec2<S>, hint: Option<S>) -> (S, Option<S>) {
        Self::kind_value(&self.kind, &self.curve, self.r0, z, hint)
    }

    fn kind_value(
        kind: &Kind<S>,
        curve: &PlanarCurve<S>,
        r0: S,
        z: Vec2<S>,
        hint: Option<S>,
    ) -> (S, Option<S>) {
        match kind {
            Kind::GinzburgLandau => {
                let d = S::one() - z.norm_sq();
                (d * d / S::lit(4.0), None)
            }
            Kind::CurveTube { q, q_min, t0, t1 } => {
                let proj = match hint {
                    Some(h) => curve.project_hinted(z, h),
                    None => curve.project(z),
                };
                let far = *q_min * (*t0 * *t0 + far_ramp(z.norm(), r0));
                match proj {
                    Ok(tc) => {
                        let chi = blend(tc.t * tc.t, *t0, *t1);
                        let w_in = q.eval(tc.s) * tc.t * tc.t;
                        (chi * w_in + (S::one() - chi) * far, Some(tc.s))
                    }
                    Err(_) => (far, None),
                }
            }
            Kind::Scaled { inner, factor } => {
                let (w, h) = Self::kind_value(inner, curve, r0, z, hint);
                (*factor * w, h)
            }
            Kind::Welled {
                inner,
                center,
                depth,
                radius,
            } => {
                let (w, h) = Self::kind_value(inner, curve, r0, z, hint);
                (
                    w - *depth * bump((z - *center).norm_sq() / (*radius * *radius)),
                    h,
                )
            }
        }
    }

    pub fn grad(&self, z: Vec2<S>) -> Vec2<S> {
        self.grad_hinted(z, None).0
    }

    pub fn grad_hinted(&self, z: Vec2<S>, hint: Option<S>) -> (Vec2<S>, Option<S>) {
        Self::kind_grad(&self.kind, &self.curve, self.r0, z, hint)
    }

    fn kind_grad(
        kind: &Kind<S>,
        curve: &PlanarCurve<S>,
        r0: S,
        z: Vec2<S>,
        hint: Option<S>,
    ) -> (Vec2<S>, Option<S>) {
        match kind {
            Kind::GinzburgLandau => {
                let d = S::one() - z.norm_sq();
                (z * (-d), None)
            }
            Kind::CurveTube { q, q_min, t0, t1 } => {
                let proj = match hint {
                    Some(h) => curve.project_hinted(z, h),
                    None => curve.project(z),
                };
                match proj {
                    Ok(tc) => {
                        let t = tc.t;
                        let s = tc.s;
                        let qs = q.eval(s);
                        let dq = q.deriv(s);
                        let kappa = curve.curvature(s);
                        let tangent = curve.tangent(s);
                        let grad_t = tangent.perp();
                        let grad_s = tangent / (S::one() - t * kappa);
                        let far = *q_min * (*t0 * *t0 + far_ramp(z.norm(), r0));
                        let dfar = {
                            let r = z.norm();
                            let g = far_ramp_deriv(r, r0);
                            if g == S::zero() || r == S::zero() {
                                Vec2::zero()
                            } else {
                                z * (*q_min * g / r)
                            }
                        };
                        let chi = blend(t * t, *t0, *t1);
                        let dchi = blend_deriv(t * t, *t0, *t1);
                        let w_in = qs * t * t;
                        // d/dz [χ(t²)] = χ'(t²) · 2t ∇t
                        let g = grad_t * (dchi * S::two() * t * (w_in - far))
                            + (grad_s * (dq * t * t) + grad_t * (S::two() * qs * t)) * chi
                            + dfar * (S::one() - chi);
                        (g, Some(s))
                    }
                    Err(_) => {
                        let r = z.norm();
                        let g = far_ramp_deriv(r, r0);
                        let grad = if g == S::zero() || r == S::zero() {
                            Vec2::zero()
                        } else {
                            z * (*q_min * g / r)
                        };
                        (grad, None)
                    }
                }
            }
            Kind::Scaled { inner, factor } => {
                let (g, h) = Self::kind_grad(inner, curve, r0, z, hint);
                (g * *factor, h)
            }
            Kind::Welled {
                inner,
                center,
                depth,
                radius,
            } => {
                let (g, h) = Self::kind_grad(inner, curve, r0, z, hint);
                let rr = *radius * *radius;
                let d = (z - *center).norm_sq() / rr;
                let db = bump_deriv(d);
                (g - (z - *center) * (S::two() / rr * *depth * db), h)
            }
        }
    }

    /// Hessian of `W`; analytic for the quartic, centered differences of the
    /// exact gradient otherwise.
    pub fn hessian(&self, z: Vec2<S>) -> Sym2<S> {
        match &self.kind {
            Kind::GinzburgLandau => {
                let d = S::one() - z.norm_sq();
                Sym2 {
                    xx: -d + S::two() * z.x * z.x,
                    xy: S::two() * z.x * z.y,
                    yy: -d + S::two() * z.y * z.y,
                }
            }
            _ => {
                let h = S::fd_step() * (S::one() + z.norm());
                let gxp = self.grad(z + Vec2::new(h, S::zero()));
                let gxm = self.grad(z - Vec2::new(h, S::zero()));
                let gyp = self.grad(z + Vec2::new(S::zero(), h));
                let gym = self.grad(z - Vec2::new(S::zero(), h));
                let two_h = S::two() * h;
                Sym2 {
                    xx: (gxp.x - gxm.x) / two_h,
                    xy: ((gxp.y - gxm.y) / two_h + (gyp.x - gym.x) / two_h) * S::half(),
                    yy: (gyp.y - gym.y) / two_h,
                }
            }
        }
    }

    /// Tube factorization `α(s, t) = W(τ(s) + t n(s)) / t²`, with the `t → 0`
    /// limit filled in analytically.
    pub fn alpha(&self, s: S, t: S) -> S {
        match &self.kind {
            Kind::GinzburgLandau => {
                // |τ + t n| = 1 - t, so W = t²(2 - t)²/4.
                let d = S::two() - t;
                d * d / S::lit(4.0)
            }
            Kind::CurveTube { q, q_min, t0, t1 } => {
                if t.abs() <= *t0 {
                    return q.eval(s);
                }
                let z = self.curve.tube_point(crate::curve::TubeCoords { s, t });
                let chi = blend(t * t, *t0, *t1);
                let far = *q_min * (*t0 * *t0 + far_ramp(z.norm(), self.r0));
                chi * q.eval(s) + (S::one() - chi) * far / (t * t)
            }
            _ => {
                let t_eff = if t.abs() < S::lit(1e-6) {
                    if t < S::zero() {
                        -S::lit(1e-6)
                    } else {
                        S::lit(1e-6)
                    }
                } else {
                    t
                };
                let z = self
                    .curve
                    .tube_point(crate::curve::TubeCoords { s, t: t_eff });
                self.value(z) / (t_eff * t_eff)
            }
        }
    }

    /// Euler–Lagrange coefficients at tube coordinates `(s, t)`:
    /// `a = (1 - tκ)²`, `b = -a_s/2`, `c = -a_t/2`, and the `α` derivatives by
    /// centered differences of the analytic evaluators.
    pub fn coefficients(&self, s: S, t: S) -> Result<Coefficients<S>, PotentialError> {
        if t.abs() >= self.delta0 {
            return Err(PotentialError::OutsideDelta0(
                t.abs().to_f64(),
                self.delta0.to_f64(),
            ));
        }
        let a_of = |s: S, t: S| {
            let f = S::one() - t * self.curve.curvature(s);
            f * f
        };
        let h = S::fd_step();
        let a = a_of(s, t);
        let b = -(a_of(s + h, t) - a_of(s - h, t)) / (S::lit(4.0) * h);
        let c = -(a_of(s, t + h) - a_of(s, t - h)) / (S::lit(4.0) * h);
        let alpha = self.alpha(s, t);
        let alpha_s = (self.alpha(s + h, t) - self.alpha(s - h, t)) / (S::two() * h);
        let alpha_t = (self.alpha(s, t + h) - self.alpha(s, t - h)) / (S::two() * h);
        Ok(Coefficients {
            a,
            b,
            c,
            alpha,
            alpha_s,
            alpha_t,
        })
    }

    /// Sampled near-tight constants for the phase maximum principle.
    pub fn compute_constants(&self) -> Result<ConstantsTable<S>, PotentialError> {
        let ns = 256;
        let nt = 161;
        let mut delta0 = self.delta0 * S::lit(0.999);
        let tube = self.curve.tube_radius();

        // Shrink delta0 until the zeroth-order ellipticity constant c1 is
        // comfortably positive.
        let mut rows = None;
        for _ in 0..40 {
            let mut c1 = S::infinity();
            let mut inf_two_alpha = S::infinity();
            let mut table = Vec::with_capacity(ns * nt);
            for i in 0..ns {
                let s = S::tau() * S::from_index(i) / S::from_index(ns);
                for j in 0..nt {
                    let t =
                        delta0 * (S::two() * S::from_index(j) / S::from_index(nt - 1) - S::one());
                    let co = self.coefficients(s, t)?;
                    c1 = c1.min(S::two() * co.alpha - (co.alpha_t * t).abs());
                    inf_two_alpha = inf_two_alpha.min(S::two() * co.alpha);
                    table.push((s, t, co));
                }
            }
            if c1 > S::zero() && c1 >= S::lit(0.1) * inf_two_alpha {
                rows = Some((table, c1));
                break;
            }
            delta0 = delta0 * S::half();
            if delta0 < tube * S::lit(1e-6) {
                return Err(PotentialError::DegenerateConstants);
            }
        }
        let (table, c1) = rows.ok_or(PotentialError::DegenerateConstants)?;

        let mut c0 = S::zero();
        let mut c2 = S::zero();
        let mut c3 = S::zero();
        let mut c4 = S::zero();
        let mut c5 = S::zero();
        for &(_s, t, co) in &table {
            if t.abs() > delta0 * S::lit(1e-6) {
                c0 = c0.max((S::one() - co.a).abs() / t.abs());
                c3 = c3.max((co.b / co.a).abs() / t.abs());
            }
            c2 = c2.max(co.c.abs());
            // a_t = -2c
            c4 = c4.max((co.c / co.a).abs());
            c5 = c5.max((co.alpha_s / co.a).abs());
        }

        // Phase-comparison weight: c5/c1 with 10% headroom, floored for
        // symmetric potentials where c5 vanishes.
        let m = (S::lit(1.1) * c5 / c1).max(S::lit(0.01));

        // Largest dyadic fraction of delta0 making the smallness condition
        // 2 c4 δ1 + m (m c2 + c3) δ1³ < 1 strict.
        let mut delta1 = delta0 * S::half();
        let cond = |d: S| S::two() * c4 * d + m * (m * c2 + c3) * d * d * d;
        let mut found = false;
        for _ in 0..60 {
            if cond(delta1) < S::one() {
                found = true;
                break;
            }
            delta1 = delta1 * S::half();
        }
        if !found {
            return Err(PotentialError::DegenerateConstants);
        }

        // Exponent making the gradient quadratic form negative semidefinite:
        // discriminant/4 = c4² + m(mc2+c3)|t| - k m (1 - 2c4|t| - m(mc2+c3)|t|³).
        let mut k = S::zero();
        for j in 0..=64 {
            let t = delta1 * S::from_index(j) / S::lit(64.0);
            let denom = m * (S::one() - S::two() * c4 * t - m * (m * c2 + c3) * t * t * t);
            let num = c4 * c4 + m * (m * c2 + c3) * t;
            k = k.max(num / denom);
        }
        k = k * S::lit(1.01);

        let dieudonne_m = self.sample_dieudonne();

        Ok(ConstantsTable {
            c0,
            c1,
            c2,
            c3,
            c4,
            c5,
            delta0,
            delta1,
            m,
            k,
            dieudonne_m,
        })
    }

    fn sample_dieudonne(&self) -> S {
        // max |∇W|²/W over the coercivity ball, away from the zero set.
        let mut m = S::zero();
        let n = 141;
        for i in 0..n {
            for j in 0..n {
                let z = Vec2::new(
                    (S::two() * S::from_index(i) / S::from_index(n - 1) - S::one()) * self.r0,
                    (S::two() * S::from_index(j) / S::from_index(n - 1) - S::one()) * self.r0,
                );
                if z.norm() > self.r0 {
                    continue;
                }
                let w = self.value(z);
                if w > S::lit(1e-10) {
                    m = m.max(self.grad(z).norm_sq() / w);
                }
            }
        }
        m
    }

    /// Samples the structural assumptions and reports margins.
    pub fn validate_assumptions(&self, cfg: &ValidationConfig) -> ValidationReport {
        let mut issues: Vec<String> = Vec::new();
        let curve = &*self.curve;
        let tube = curve.tube_radius();

        // Zero exactly on the curve samples.
        let mut max_on_curve = S::zero();
        for sm in curve.samples() {
            max_on_curve = max_on_curve.max(self.value(sm.point).abs());
        }
        if max_on_curve > S::lit(1e-12) {
            issues.push(format!(
                "potential does not vanish on the curve (max {:.3e})",
                max_on_curve.to_f64()
            ));
        }

        // Nonnegativity and absence of zeros off the curve, on a lattice
        // over the coercivity ball plus random samples.
        let mut min_w = S::infinity();
        let mut min_off = S::infinity();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        {
            let mut probe = |z: Vec2<S>| {
                let w = self.value(z);
                min_w = min_w.min(w);
                if curve.distance(z) >= S::lit(0.25) * tube {
                    min_off = min_off.min(w);
                }
            };
            let n = cfg.lattice_n;
            for i in 0..n {
                for j in 0..n {
                    let z = Vec2::new(
                        (S::two() * S::from_index(i) / S::from_index(n - 1) - S::one()) * self.r0,
                        (S::two() * S::from_index(j) / S::from_index(n - 1) - S::one()) * self.r0,
                    );
                    probe(z);
                }
            }
            for _ in 0..cfg.random_n {
                let z = Vec2::new(
                    S::lit(rng.gen_range(-1.0..1.0)) * self.r0,
                    S::lit(rng.gen_range(-1.0..1.0)) * self.r0,
                );
                probe(z);
            }
        }
        if min_w < -S::lit(1e-12) {
            issues.push(format!("negative value {:.3e} sampled", min_w.to_f64()));
        }
        if min_off <= S::lit(1e-12) {
            issues.push(format!(
                "zero off the curve: min W = {:.3e} at dist ≥ {:.3e}",
                min_off.to_f64(),
                (S::lit(0.25) * tube).to_f64()
            ));
        }

        // Non-degeneracy on the half tube: W ≥ μ dist².
        let delta_nd = S::half() * tube;
        let mut mu = S::infinity();
        for i in 0..128 {
            let s = S::tau() * S::from_index(i) / S::lit(128.0);
            for j in 1..=16 {
                let t = delta_nd * S::from_index(j) / S::lit(16.0);
                for &sgn in &[S::one(), -S::one()] {
                    let z = curve.tube_point(crate::curve::TubeCoords { s, t: t * sgn });
                    mu = mu.min(self.value(z) / (t * t));
                }
            }
        }
        if mu <= S::zero() {
            issues.push(format!(
                "degenerate: μ = {:.3e} on the half tube",
                mu.to_f64()
            ));
        }

        // Radial coercivity on R0 ≤ |z| ≤ 2 R0.
        let mut coercivity_min = S::infinity();
        for i in 0..=32 {
            let r = self.r0 * (S::one() + S::from_index(i) / S::lit(32.0));
            for j in 0..128 {
                let th = S::tau() * S::from_index(j) / S::lit(128.0);
                let z = Vec2::from_angle(th) * r;
                coercivity_min = coercivity_min.min(self.grad(z).dot(z.normalized()));
            }
        }
        if coercivity_min < -S::lit(1e-10) {
            issues.push(format!(
                "radial coercivity fails beyond R0: min ∂W/∂r = {:.3e}",
                coercivity_min.to_f64()
            ));
        }

        // Gradient bound |∇W|² ≤ M W on the coercivity ball.
        let dieudonne_m = self.sample_dieudonne();

        // Gradient consistency against centered differences. The step
        // balances truncation against cancellation (the blend junctions have
        // third derivatives of order 10³), and the denominator floors at a
        // meaningful gradient scale so junction points with |∇W| ≈ 0 do not
        // turn roundoff into spurious relative error.
        let mut max_rel_grad = S::zero();
        for _ in 0..cfg.random_n {
            let z = Vec2::new(
                S::lit(rng.gen_range(-1.0..1.0)) * self.r0,
                S::lit(rng.gen_range(-1.0..1.0)) * self.r0,
            );
            let g = self.grad(z);
            let h = S::lit(6e-7) * (S::one() + z.norm());
            let fd = Vec2::new(
                (self.value(z + Vec2::new(h, S::zero()))
                    - self.value(z - Vec2::new(h, S::zero())))
                    / (S::two() * h),
                (self.value(z + Vec2::new(S::zero(), h))
                    - self.value(z - Vec2::new(S::zero(), h)))
                    / (S::two() * h),
            );
            let scale = g.norm().max(S::lit(1e-3));
            max_rel_grad = max_rel_grad.max((fd - g).norm() / scale);
        }
        if max_rel_grad > S::lit(1e-6) {
            issues.push(format!(
                "gradient inconsistent with finite differences (rel {:.3e})",
                max_rel_grad.to_f64()
            ));
        }

        ValidationReport {
            pass: issues.is_empty(),
            mu: mu.to_f64(),
            delta: delta_nd.to_f64(),
            r0: self.r0.to_f64(),
            coercivity_min: coercivity_min.to_f64(),
            dieudonne_m: dieudonne_m.to_f64(),
            min_off_curve: min_off.to_f64(),
            max_on_curve: max_on_curve.to_f64(),
            grad_fd_rel: max_rel_grad.to_f64(),
            issues,
        }
    }
}

/// Positive constants `(c0..c5)` bounding the Euler–Lagrange coefficients on
/// `|t| ≤ delta0`, with the derived maximum-principle data `(m, delta1, k)`
/// and the gradient-bound constant `M`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConstantsTable<S> {
    pub c0: S,
    pub c1: S,
    pub c2: S,
    pub c3: S,
    pub c4: S,
    pub c5: S,
    pub delta0: S,
    pub delta1: S,
    pub m: S,
    pub k: S,
    pub dieudonne_m: S,
}

impl<S: Scalar> ConstantsTable<S> {
    /// Literal arithmetic of the smallness condition at `(m, delta1)`.
    pub fn smallness_lhs(&self) -> S {
        S::two() * self.c4 * self.delta1
            + self.m * (self.m * self.c2 + self.c3) * self.delta1 * self.delta1 * self.delta1
    }

    /// Discriminant/4 of the gradient quadratic form at `|t|`, at the stored
    /// exponent `k`; nonpositive for |t| ≤ delta1.
    pub fn discriminant_quarter(&self, t_abs: S) -> S {
        let mm = self.m * (self.m * self.c2 + self.c3);
        self.c4 * self.c4 + mm * t_abs
            - self.k
                * self.m
                * (S::one() - S::two() * self.c4 * t_abs - mm * t_abs * t_abs * t_abs)
    }
}

#[derive(Clone, Debug)]
pub struct ValidationConfig {
    pub lattice_n: usize,
    pub random_n: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            lattice_n: 101,
            random_n: 1000,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub mu: f64,
    pub delta: f64,
    pub r0: f64,
    pub coercivity_min: f64,
    pub dieudonne_m: f64,
    pub min_off_curve: f64,
    pub max_on_curve: f64,
    pub grad_fd_rel: f64,
    pub issues: Vec<String>,
}

/// C² cutoff: 1 for ξ ≤ t0², 0 for ξ ≥ t1² (quintic smoothstep between).
fn blend<S: Scalar>(xi: S, t0: S, t1: S) -> S {
    let lo = t0 * t0;
    let hi = t1 * t1;
    if xi <= lo {
        S::one()
    } else if xi >= hi {
        S::zero()
    } else {
        let z = (xi - lo) / (hi - lo);
        let s = z * z * z * (S::lit(10.0) - S::lit(15.0) * z + S::lit(6.0) * z * z);
        S::one() - s
    }
}

fn blend_deriv<S: Scalar>(xi: S, t0: S, t1: S) -> S {
    let lo = t0 * t0;
    let hi = t1 * t1;
    if xi <= lo || xi >= hi {
        S::zero()
    } else {
        let z = (xi - lo) / (hi - lo);
        let ds = S::lit(30.0) * z * z * (S::one() - z) * (S::one() - z);
        -ds / (hi - lo)
    }
}

/// Cubic radial ramp `(r - r0)₊³`, C² at the junction.
fn far_ramp<S: Scalar>(r: S, r0: S) -> S {
    let d = r - r0;
    if d > S::zero() {
        d * d * d
    } else {
        S::zero()
    }
}

fn far_ramp_deriv<S: Scalar>(r: S, r0: S) -> S {
    let d = r - r0;
    if d > S::zero() {
        S::lit(3.0) * d * d
    } else {
        S::zero()
    }
}

/// Smooth bump of the squared radius: exp(1 - 1/(1 - d)) on d < 1, else 0.
fn bump<S: Scalar>(d: S) -> S {
    if d < S::one() {
        (S::one() - S::one() / (S::one() - d)).exp()
    } else {
        S::zero()
    }
}

fn bump_deriv<S: Scalar>(d: S) -> S {
    if d < S::one() {
        let om = S::one() - d;
        -(S::one() - S::one() / om).exp() / (om * om)
    } else {
        S::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_curve, CurveSpec};
    use std::f64::consts::TAU;

    fn gl() -> PotentialW<f64> {
        PotentialW::gl()
    }

    fn circle_q1() -> PotentialW<f64> {
        let curve = Arc::new(build_curve(&CurveSpec::Circle).unwrap());
        PotentialW::curve_tube(curve, |_| 1.0).unwrap()
    }

    fn ellipse_qsin() -> PotentialW<f64> {
        let curve = Arc::new(build_curve(&CurveSpec::Ellipse { a: 2.0, b: 1.0 }).unwrap());
        PotentialW::curve_tube(curve, |s: f64| 1.0 + 0.5 * s.sin()).unwrap()
    }

    #[test]
    fn gl_point_values() {
        let w = gl();
        assert!((w.value(Vec2::new(0.0, 0.0)) - 0.25).abs() < 1e-15);
        assert!(w.value(Vec2::new(1.0, 0.0)).abs() < 1e-15);
        assert!(w.grad(Vec2::new(1.0, 0.0)).norm() < 1e-15);
        for k in 0..8 {
            let s = TAU * k as f64 / 8.0;
            assert!((w.alpha(s, 0.0) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn circle_tube_reproduces_squared_distance() {
        let w = circle_q1();
        assert!((w.value(Vec2::new(1.5, 0.0)) - 0.25).abs() < 1e-10);
        for k in 0..16 {
            let s = TAU * k as f64 / 16.0;
            for t in [-0.5, -0.2, 0.1, 0.4] {
                let z = Vec2::from_angle(s) * (1.0 - t);
                let d = 1.0 - z.norm();
                assert!(
                    (w.value(z) - d * d).abs() < 1e-9,
                    "W = {} vs {}",
                    w.value(z),
                    d * d
                );
            }
        }
    }

    #[test]
    fn ellipse_potential_vanishes_on_curve_and_is_asymmetric() {
        let w = ellipse_qsin();
        for sm in w.curve().samples().iter().step_by(32) {
            assert!(w.value(sm.point).abs() < 1e-12);
        }
        let t = 0.4 * w.curve().tube_radius();
        let za = w.curve().tube_point(crate::curve::TubeCoords { s: 0.5, t });
        let zb = w.curve().tube_point(crate::curve::TubeCoords { s: 4.0, t });
        let ra = w.value(za) / (t * t);
        let rb = w.value(zb) / (t * t);
        assert!((ra - rb).abs() > 0.1, "expected asymmetry: {ra} vs {rb}");
    }

    #[test]
    fn factorization_is_exact_in_the_tube() {
        for w in [gl(), circle_q1(), ellipse_qsin()] {
            let d0 = w.delta0();
            for i in 0..24 {
                let s = TAU * i as f64 / 24.0;
                for j in 1..=8 {
                    let t = d0 * (j as f64 / 8.0 - 0.45) * 0.99;
                    if t.abs() < 1e-4 {
                        continue;
                    }
                    let z = w.curve().tube_point(crate::curve::TubeCoords { s, t });
                    let lhs = w.value(z);
                    let rhs = w.alpha(s, t) * t * t;
                    assert!(
                        (lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()),
                        "s={s} t={t}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn validation_passes_for_shipped_potentials() {
        let cfg = ValidationConfig::default();
        let rep = gl().validate_assumptions(&cfg);
        assert!(rep.pass, "issues: {:?}", rep.issues);
        assert!(rep.mu > 0.5, "mu = {}", rep.mu); // α(2 - t)²/4 at t = 0.45
        for w in [circle_q1(), ellipse_qsin()] {
            let rep = w.validate_assumptions(&cfg);
            assert!(rep.pass, "issues: {:?}", rep.issues);
            // Tube potentials are exactly q(s) t² on the half tube.
            assert!(
                rep.mu >= 0.9 * w.q_min().to_f64() * 0.999,
                "mu = {}",
                rep.mu
            );
            assert!(rep.dieudonne_m.is_finite() && rep.dieudonne_m > 0.0);
        }
        // Quartic gradient-bound constant: |∇W|²/W = 4|u|² ≤ 4 R0² on the ball.
        let rep = gl().validate_assumptions(&cfg);
        assert!(rep.dieudonne_m <= 4.0 * 2.0f64.powi(2) + 1e-6);
    }

    #[test]
    fn validation_fails_for_constructed_violations() {
        let cfg = ValidationConfig::default();
        let flipped = gl().scaled(-1.0);
        let rep = flipped.validate_assumptions(&cfg);
        assert!(!rep.pass);
        assert!(rep.issues.iter().any(|m| m.contains("negative")));

        let center = Vec2::new(0.0, 0.0); // the quartic is 1/4 at the origin
        let spoiled = gl().with_well(center, 0.25, 0.35);
        let rep = spoiled.validate_assumptions(&cfg);
        assert!(!rep.pass, "well should break the zero-set assumption");
    }

    #[test]
    fn circle_coefficients() {
        let w = gl();
        let co = w.coefficients(0.3, 0.1).unwrap();
        assert!((co.a - 0.81).abs() < 1e-9);
        assert!((co.c - 0.9).abs() < 1e-7);
        assert!(co.b.abs() < 1e-7, "b = {}", co.b);
        assert!(w.coefficients(0.0, w.delta0() * 1.01).is_err());
    }

    #[test]
    fn ellipse_coefficient_matches_curvature_formula() {
        let w = ellipse_qsin();
        for (s, t) in [(0.3, 0.05), (2.1, -0.08), (5.0, 0.1)] {
            let co = w.coefficients(s, t).unwrap();
            let kappa = w.curve().curvature(s);
            let a_ref = (1.0 - t * kappa) * (1.0 - t * kappa);
            assert!((co.a - a_ref).abs() < 1e-10);
        }
    }

    #[test]
    fn gl_constants_symmetric_degeneracies() {
        let table = gl().compute_constants().unwrap();
        // Rotationally symmetric: no s-derivatives survive.
        assert!(table.c3 < 1e-6, "c3 = {}", table.c3);
        assert!(table.c5 < 1e-6, "c5 = {}", table.c5);
        assert!((table.m - 0.01).abs() < 1e-12, "m floored, got {}", table.m);
        // c = (1 - t) on the circle, so sup |c| = 1 + delta0.
        assert!(
            (table.c2 - (1.0 + table.delta0)).abs() < 1e-6,
            "c2 = {} vs {}",
            table.c2,
            1.0 + table.delta0
        );
        assert!(table.smallness_lhs() < 1.0);
        for j in 0..=32 {
            let t = table.delta1 * j as f64 / 32.0;
            assert!(table.discriminant_quarter(t) <= 0.0, "t = {t}");
        }
    }

    #[test]
    fn ellipse_constants_see_asymmetry() {
        let table = ellipse_qsin().compute_constants().unwrap();
        assert!(table.c5 > 0.1, "c5 = {}", table.c5);
        assert!(table.c1 > 0.0);
        assert!(table.m >= table.c5 / table.c1);
        assert!(table.smallness_lhs() < 1.0);
        assert!(table.delta1 <= table.delta0);
        for j in 0..=32 {
            let t = table.delta1 * j as f64 / 32.0;
            assert!(table.discriminant_quarter(t) <= 0.0, "t = {t}");
        }
    }
}
