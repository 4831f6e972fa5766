//! The vacuum curve `Γ`: a smooth simple closed planar curve, stored as a
//! uniformly arc-length-resampled table with cubic interpolation, rescaled so
//! its total length is exactly 2π.
//!
//! Supplies the tube-coordinate geometry used everywhere else: unit tangent,
//! inward normal, signed curvature, nearest-point projection, signed distance
//! (positive inside), and the tube radius on which the projection is
//! single-valued.

use std::rc::Rc;

use crate::error::CurveError;
use crate::expr::Expr;
use crate::scalar::Scalar;
use crate::spline::PeriodicSpline;
use crate::vec2::Vec2;

/// Number of arc-length samples for analytic curve specs.
pub const DEFAULT_SAMPLES: usize = 2048;

/// Dense parameter grid used for arc-length integration at build time.
const DENSE_PANELS: usize = 1 << 17;

/// Shape of the curve before arc-length normalization.
#[derive(Clone, Debug)]
pub enum CurveSpec<S> {
    /// Unit circle.
    Circle,
    /// Axis-aligned ellipse `(a cos t, b sin t)`.
    Ellipse { a: S, b: S },
    /// Radial graph `r(θ) = 1 + Σ_k (cos_k cos kθ + sin_k sin kθ)`.
    FourierCircle { cos: Vec<S>, sin: Vec<S> },
    /// Closed point list, connected in order (last joins back to first).
    Points(Vec<Vec2<S>>),
}

impl<S: Scalar> CurveSpec<S> {
    /// Radial Fourier perturbation from an expression in `theta`.
    pub fn radial_expr(expr: &Expr, harmonics: usize) -> Self {
        // Project the expression onto a trigonometric polynomial so the
        // analytic derivative path applies.
        let m = 4 * harmonics.max(8);
        let mut cos = vec![S::zero(); harmonics];
        let mut sin = vec![S::zero(); harmonics];
        for k in 1..=harmonics {
            let mut ck = 0.0;
            let mut sk = 0.0;
            for j in 0..m {
                let th = std::f64::consts::TAU * j as f64 / m as f64;
                let v = expr.eval(th) - 1.0;
                ck += v * (k as f64 * th).cos();
                sk += v * (k as f64 * th).sin();
            }
            cos[k - 1] = S::lit(2.0 * ck / m as f64);
            sin[k - 1] = S::lit(2.0 * sk / m as f64);
        }
        CurveSpec::FourierCircle { cos, sin }
    }
}

/// One row of the arc-length table.
#[derive(Clone, Copy, Debug)]
pub struct CurveSample<S> {
    pub point: Vec2<S>,
    pub tangent: Vec2<S>,
    /// Inward unit normal (left of the travel direction; the curve is CCW).
    pub normal: Vec2<S>,
    pub curvature: S,
}

/// Tube coordinates of a point near `Γ`: arc-length parameter of the nearest
/// point and signed distance, positive on the inside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeCoords<S> {
    pub s: S,
    pub t: S,
}

#[derive(Clone, Debug)]
struct BucketIndex<S> {
    x0: S,
    y0: S,
    cell: S,
    nx: usize,
    ny: usize,
    /// Nearest sample index to each cell center.
    hint: Vec<u32>,
}

impl<S: Scalar> BucketIndex<S> {
    fn build(points: &[Vec2<S>], pad: S) -> Self {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        lo.x = lo.x - pad;
        lo.y = lo.y - pad;
        hi.x = hi.x + pad;
        hi.y = hi.y + pad;
        let span = (hi.x - lo.x).max(hi.y - lo.y);
        let cell = (pad * S::half()).max(span / S::lit(192.0));
        let nx = ((hi.x - lo.x) / cell).to_f64().ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).to_f64().ceil() as usize + 1;
        let mut hint = vec![0u32; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let c = Vec2::new(
                    lo.x + (S::from_index(ix) + S::half()) * cell,
                    lo.y + (S::from_index(iy) + S::half()) * cell,
                );
                let mut best = 0usize;
                let mut best_d = S::infinity();
                for (k, p) in points.iter().enumerate() {
                    let d = (*p - c).norm_sq();
                    if d < best_d {
                        best_d = d;
                        best = k;
                    }
                }
                hint[iy * nx + ix] = best as u32;
            }
        }
        Self {
            x0: lo.x,
            y0: lo.y,
            cell,
            nx,
            ny,
            hint,
        }
    }

    fn seed(&self, z: Vec2<S>) -> usize {
        let clampi = |v: S, n: usize| -> usize {
            let i = (v / self.cell).floor().to_f64();
            if i < 0.0 {
                0
            } else if i as usize >= n {
                n - 1
            } else {
                i as usize
            }
        };
        let ix = clampi(z.x - self.x0, self.nx);
        let iy = clampi(z.y - self.y0, self.ny);
        self.hint[iy * self.nx + ix] as usize
    }
}

#[derive(Clone, Debug)]
pub struct PlanarCurve<S> {
    samples: Vec<CurveSample<S>>,
    sx: PeriodicSpline<S>,
    sy: PeriodicSpline<S>,
    skappa: PeriodicSpline<S>,
    /// Arc-length spacing of the table, `2π / n`.
    ds: S,
    /// Multiplier taking user-space coordinates to normalized coordinates.
    scale_factor: S,
    tube_radius: S,
    max_curvature: S,
    centroid: Vec2<S>,
    max_radius: S,
    bucket: BucketIndex<S>,
}

struct RawCurve<S> {
    pos: Box<dyn Fn(S) -> Vec2<S>>,
    vel: Box<dyn Fn(S) -> Vec2<S>>,
    acc: Box<dyn Fn(S) -> Vec2<S>>,
}

/// Builds a curve from its spec with the default table resolution.
pub fn build_curve<S: Scalar>(spec: &CurveSpec<S>) -> Result<PlanarCurve<S>, CurveError> {
    PlanarCurve::build(spec, DEFAULT_SAMPLES)
}

impl<S: Scalar> PlanarCurve<S> {
    pub fn build(spec: &CurveSpec<S>, n_samples: usize) -> Result<Self, CurveError> {
        if n_samples < 16 {
            return Err(CurveError::TooFewSamples(n_samples));
        }
        let raw = Self::raw_curve(spec)?;
        let (mut samples, length) = Self::resample(&raw, n_samples);

        // Normalize: |Γ| = 2π, rescaling about the origin. Curvature scales
        // inversely with length.
        let scale = S::tau() / length;
        for s in &mut samples {
            s.point = s.point * scale;
            s.curvature = s.curvature / scale;
        }

        Self::check_simple(&samples)?;

        let n = samples.len();
        let ds = S::tau() / S::from_index(n);
        let sx = PeriodicSpline::new(S::tau(), samples.iter().map(|s| s.point.x).collect());
        let sy = PeriodicSpline::new(S::tau(), samples.iter().map(|s| s.point.y).collect());
        let skappa = PeriodicSpline::new(S::tau(), samples.iter().map(|s| s.curvature).collect());

        // Unit-speed check on the interpolant.
        let tol = S::lit(1e-8).max(S::epsilon() * S::lit(1e4));
        for i in 0..n {
            let s = S::from_index(i) * ds;
            let speed = Vec2::new(sx.deriv(s), sy.deriv(s)).norm();
            if (speed - S::one()).abs() > tol {
                return Err(CurveError::Degenerate(format!(
                    "resampling is not unit-speed at s = {:.4}: |dτ/ds| = {}",
                    s.to_f64(),
                    speed
                )));
            }
        }

        let max_curvature = samples
            .iter()
            .map(|s| s.curvature.abs())
            .fold(S::zero(), |a, b| a.max(b));
        let centroid = samples
            .iter()
            .fold(Vec2::zero(), |acc, s| acc + s.point)
            / S::from_index(n);
        let max_radius = samples
            .iter()
            .map(|s| s.point.norm())
            .fold(S::zero(), |a, b| a.max(b));

        let mut tube_radius = Self::tube_radius_estimate(&samples, max_curvature, ds);
        let mut curve = Self {
            samples,
            sx,
            sy,
            skappa,
            ds,
            scale_factor: scale,
            tube_radius,
            max_curvature,
            centroid,
            max_radius,
            bucket: BucketIndex::build(&[Vec2::zero()], S::one()), // replaced below
        };
        // Spot-check single-valued projection; shrink the tube if violated.
        for _ in 0..4 {
            curve.tube_radius = tube_radius;
            curve.bucket = BucketIndex::build(
                &curve.samples.iter().map(|s| s.point).collect::<Vec<_>>(),
                tube_radius + curve.ds,
            );
            if curve.projection_spot_check() {
                return Ok(curve);
            }
            tube_radius = tube_radius * S::half();
        }
        Err(CurveError::Degenerate(
            "projection is not single-valued on any candidate tube".into(),
        ))
    }

    fn raw_curve(spec: &CurveSpec<S>) -> Result<RawCurve<S>, CurveError> {
        match spec {
            CurveSpec::Circle => Ok(RawCurve {
                pos: Box::new(|t: S| Vec2::from_angle(t)),
                vel: Box::new(|t: S| Vec2::new(-t.sin(), t.cos())),
                acc: Box::new(|t: S| -Vec2::from_angle(t)),
            }),
            CurveSpec::Ellipse { a, b } => {
                let (a, b) = (*a, *b);
                if a <= S::zero() || b <= S::zero() {
                    return Err(CurveError::Degenerate("ellipse axes must be positive".into()));
                }
                Ok(RawCurve {
                    pos: Box::new(move |t: S| Vec2::new(a * t.cos(), b * t.sin())),
                    vel: Box::new(move |t: S| Vec2::new(-a * t.sin(), b * t.cos())),
                    acc: Box::new(move |t: S| Vec2::new(-a * t.cos(), -b * t.sin())),
                })
            }
            CurveSpec::FourierCircle { cos, sin } => {
                let cos = Rc::new(cos.clone());
                let sin = Rc::new(sin.clone());
                let radial = {
                    let cos = cos.clone();
                    let sin = sin.clone();
                    move |t: S| -> (S, S, S) {
                        let mut r = S::one();
                        let mut dr = S::zero();
                        let mut d2r = S::zero();
                        for k in 0..cos.len().max(sin.len()) {
                            let kk = S::from_index(k + 1);
                            let (ck, sk) = (
                                cos.get(k).copied().unwrap_or_else(S::zero),
                                sin.get(k).copied().unwrap_or_else(S::zero),
                            );
                            let (c, s) = ((kk * t).cos(), (kk * t).sin());
                            r = r + ck * c + sk * s;
                            dr = dr + kk * (sk * c - ck * s);
                            d2r = d2r - kk * kk * (ck * c + sk * s);
                        }
                        (r, dr, d2r)
                    }
                };
                let min_r = (0..512)
                    .map(|j| radial(S::lit(std::f64::consts::TAU * j as f64 / 512.0)).0)
                    .fold(S::infinity(), |a, b| a.min(b));
                if min_r <= S::zero() {
                    return Err(CurveError::Degenerate(
                        "fourier radius is not strictly positive".into(),
                    ));
                }
                let r0 = radial.clone();
                let r1 = radial.clone();
                let r2 = radial;
                Ok(RawCurve {
                    pos: Box::new(move |t: S| Vec2::from_angle(t) * r0(t).0),
                    vel: Box::new(move |t: S| {
                        let (r, dr, _) = r1(t);
                        let e = Vec2::from_angle(t);
                        e * dr + e.perp() * r
                    }),
                    acc: Box::new(move |t: S| {
                        let (r, dr, d2r) = r2(t);
                        let e = Vec2::from_angle(t);
                        e * (d2r - r) + e.perp() * (S::two() * dr)
                    }),
                })
            }
            CurveSpec::Points(pts) => {
                let mut pts = pts.clone();
                if pts.len() >= 2 && (pts[0] - pts[pts.len() - 1]).norm() < S::lit(1e-12) {
                    pts.pop();
                }
                if pts.len() < 16 {
                    return Err(CurveError::TooFewSamples(pts.len()));
                }
                let m = pts.len();
                let mut perim = S::zero();
                for i in 0..m {
                    perim = perim + (pts[(i + 1) % m] - pts[i]).norm();
                }
                let closing = (pts[0] - pts[m - 1]).norm();
                if closing > S::lit(0.3) * perim {
                    return Err(CurveError::OpenCurve {
                        gap: closing.to_f64(),
                        perimeter: perim.to_f64(),
                    });
                }
                // Enforce CCW orientation.
                let mut area2 = S::zero();
                for i in 0..m {
                    area2 = area2 + pts[i].cross(pts[(i + 1) % m]);
                }
                if area2 < S::zero() {
                    pts.reverse();
                }
                // Chord-length periodic spline through the points, rescaled to
                // parameter period 2π.
                let mut cum = vec![S::zero(); m + 1];
                for i in 0..m {
                    cum[i + 1] = cum[i] + (pts[(i + 1) % m] - pts[i]).norm();
                }
                let total = cum[m];
                if total <= S::zero() {
                    return Err(CurveError::Degenerate("zero-length point list".into()));
                }
                // Uniform-knot spline in an auxiliary parameter; chord-length
                // spacing differences are smoothed by the dense resampling.
                let gx = Rc::new(PeriodicSpline::new(
                    S::tau(),
                    resample_by_chord(&pts, &cum, m, true),
                ));
                let gy = Rc::new(PeriodicSpline::new(
                    S::tau(),
                    resample_by_chord(&pts, &cum, m, false),
                ));
                let (px, py) = (gx.clone(), gy.clone());
                let (vx, vy) = (gx.clone(), gy.clone());
                Ok(RawCurve {
                    pos: Box::new(move |t: S| Vec2::new(px.eval(t), py.eval(t))),
                    vel: Box::new(move |t: S| Vec2::new(vx.deriv(t), vy.deriv(t))),
                    acc: Box::new(move |t: S| Vec2::new(gx.deriv2(t), gy.deriv2(t))),
                })
            }
        }
    }

    /// Uniform arc-length resampling; returns the table (in user scale) and
    /// the total length.
    fn resample(raw: &RawCurve<S>, n: usize) -> (Vec<CurveSample<S>>, S) {
        let nd = DENSE_PANELS;
        let dt = S::tau() / S::from_index(nd);
        let speed = |t: S| (raw.vel)(t).norm();
        // Cumulative arc length by per-panel Simpson, with compensated
        // summation so the total does not drift over 10⁵ panels.
        let mut cum = vec![S::zero(); nd + 1];
        let mut acc = S::zero();
        let mut comp = S::zero();
        for i in 0..nd {
            let t0 = S::from_index(i) * dt;
            let tm = t0 + dt * S::half();
            let t1 = t0 + dt;
            let panel = (speed(t0) + S::lit(4.0) * speed(tm) + speed(t1)) * dt / S::lit(6.0);
            let y = panel - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            cum[i + 1] = acc;
        }
        let total = cum[nd];
        let mut out = Vec::with_capacity(n);
        let mut k = 0usize;
        for i in 0..n {
            let target = total * S::from_index(i) / S::from_index(n);
            while k + 1 < nd && cum[k + 1] < target {
                k += 1;
            }
            let seg = cum[k + 1] - cum[k];
            let frac = if seg > S::zero() {
                (target - cum[k]) / seg
            } else {
                S::zero()
            };
            let mut t = (S::from_index(k) + frac) * dt;
            // Newton polish on Λ(t) = target with local Simpson increments.
            for _ in 0..3 {
                let t_base = S::from_index(k) * dt;
                let lam = cum[k] + simpson(&speed, t_base, t, 4);
                let sp = speed(t);
                if sp > S::zero() {
                    t = t - (lam - target) / sp;
                }
            }
            let point = (raw.pos)(t);
            let vel = (raw.vel)(t);
            let acc = (raw.acc)(t);
            let vn = vel.norm();
            let tangent = vel / vn;
            let curvature = vel.cross(acc) / (vn * vn * vn);
            out.push(CurveSample {
                point,
                tangent,
                normal: tangent.perp(),
                curvature,
            });
        }
        (out, total)
    }

    /// O(n²) chord intersection scan (skipping adjacent chords).
    fn check_simple(samples: &[CurveSample<S>]) -> Result<(), CurveError> {
        let n = samples.len();
        for i in 0..n {
            let a0 = samples[i].point;
            let a1 = samples[(i + 1) % n].point;
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let b0 = samples[j].point;
                let b1 = samples[(j + 1) % n].point;
                if segments_cross(a0, a1, b0, b1) {
                    return Err(CurveError::SelfIntersection(i, j));
                }
            }
        }
        Ok(())
    }

    /// `min(0.9 / max|κ|, half the minimal distance between non-adjacent arcs)`.
    fn tube_radius_estimate(samples: &[CurveSample<S>], max_kappa: S, ds: S) -> S {
        let n = samples.len();
        let r_curv = S::lit(0.9) / max_kappa.max(S::lit(1e-12));
        // Points belong to distinct branches when the chord is much shorter
        // than the arc between them; the semicircle ratio 2/π separates the
        // regimes.
        let ratio = S::lit(2.0) / S::PI();
        let mut min_branch = S::infinity();
        for i in 0..n {
            for j in (i + 1)..n {
                let arc_steps = (j - i).min(n - (j - i));
                let arc = S::from_index(arc_steps) * ds;
                let chord = (samples[i].point - samples[j].point).norm();
                if chord <= ratio * arc {
                    min_branch = min_branch.min(chord);
                }
            }
        }
        r_curv.min(min_branch * S::half())
    }

    fn projection_spot_check(&self) -> bool {
        let n = self.samples.len();
        let step = (n / 64).max(1);
        let t_probe = self.tube_radius * S::lit(0.95);
        for i in (0..n).step_by(step) {
            let s = S::from_index(i) * self.ds;
            for &sign in &[S::one(), -S::one()] {
                let z = self.samples[i].point + self.samples[i].normal * (t_probe * sign);
                match self.project(z) {
                    Ok(tc) => {
                        let ds_err = (tc.s - s).wrap_pi().abs();
                        let dt_err = (tc.t - t_probe * sign).abs();
                        // Allow the arc drift induced by curvature over |t|.
                        let ds_tol = self.ds + t_probe * self.max_curvature * self.ds * S::lit(4.0)
                            + S::lit(1e-6);
                        if ds_err > ds_tol || dt_err > S::lit(1e-6) {
                            return false;
                        }
                    }
                    Err(_) => return false,
                }
            }
        }
        true
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[CurveSample<S>] {
        &self.samples
    }

    /// Always 2π after normalization.
    pub fn total_length(&self) -> S {
        S::tau()
    }

    /// Multiplier from user-space input coordinates to normalized ones.
    pub fn scale_factor(&self) -> S {
        self.scale_factor
    }

    pub fn tube_radius(&self) -> S {
        self.tube_radius
    }

    pub fn max_curvature(&self) -> S {
        self.max_curvature
    }

    pub fn centroid(&self) -> Vec2<S> {
        self.centroid
    }

    /// `max { |z| : z ∈ Γ }` in normalized coordinates.
    pub fn max_radius(&self) -> S {
        self.max_radius
    }

    /// Arc-length parametrization (wrapped mod 2π).
    pub fn tau(&self, s: S) -> Vec2<S> {
        Vec2::new(self.sx.eval(s), self.sy.eval(s))
    }

    /// Unit tangent `dτ/ds`.
    pub fn tangent(&self, s: S) -> Vec2<S> {
        Vec2::new(self.sx.deriv(s), self.sy.deriv(s)).normalized()
    }

    /// Inward unit normal, perpendicular to the tangent.
    pub fn inward_normal(&self, s: S) -> Vec2<S> {
        self.tangent(s).perp()
    }

    pub fn curvature(&self, s: S) -> S {
        self.skappa.eval(s)
    }

    pub fn curvature_deriv(&self, s: S) -> S {
        self.skappa.deriv(s)
    }

    /// Point of the tube: `τ(s) + t n(s)`.
    pub fn tube_point(&self, tc: TubeCoords<S>) -> Vec2<S> {
        self.tau(tc.s) + self.inward_normal(tc.s) * tc.t
    }

    fn newton_project(&self, z: Vec2<S>, mut s: S) -> Option<S> {
        // Critical point of s ↦ |z - τ(s)|²: F(s) = (z - τ(s))·τ'(s) = 0.
        let tol = S::epsilon() * S::lit(64.0) * (S::one() + z.norm());
        for _ in 0..16 {
            let p = Vec2::new(self.sx.eval(s), self.sy.eval(s));
            let d1 = Vec2::new(self.sx.deriv(s), self.sy.deriv(s));
            let d2 = Vec2::new(self.sx.deriv2(s), self.sy.deriv2(s));
            let r = z - p;
            let f = r.dot(d1);
            let fp = -d1.norm_sq() + r.dot(d2);
            if fp >= S::zero() {
                return None; // approaching a distance maximum
            }
            let step = f / fp;
            s = (s - step).wrap_tau();
            if step.abs() <= tol {
                let r = z - Vec2::new(self.sx.eval(s), self.sy.eval(s));
                if r.dot(Vec2::new(self.sx.deriv(s), self.sy.deriv(s))).abs()
                    <= S::lit(1e-10) * (S::one() + r.norm())
                {
                    return Some(s);
                }
            }
        }
        None
    }

    fn golden_project(&self, z: Vec2<S>, lo: S, hi: S) -> S {
        let phi = S::lit(0.618_033_988_749_894_8);
        let mut a = lo;
        let mut b = hi;
        let dist2 = |s: S| (z - self.tau(s)).norm_sq();
        let mut c = b - (b - a) * phi;
        let mut d = a + (b - a) * phi;
        let mut fc = dist2(c);
        let mut fd = dist2(d);
        for _ in 0..90 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - (b - a) * phi;
                fc = dist2(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + (b - a) * phi;
                fd = dist2(d);
            }
            if (b - a).abs() < S::epsilon() * S::lit(16.0) {
                break;
            }
        }
        ((a + b) * S::half()).wrap_tau()
    }

    fn nearest_sample(&self, z: Vec2<S>) -> usize {
        let n = self.samples.len();
        let seed = self.bucket.seed(z);
        let mut window = 16usize.min(n / 2);
        loop {
            let mut best = seed;
            let mut best_d = (z - self.samples[seed].point).norm_sq();
            for off in 1..=window {
                for idx in [(seed + off) % n, (seed + n - off % n) % n] {
                    let d = (z - self.samples[idx].point).norm_sq();
                    if d < best_d {
                        best_d = d;
                        best = idx;
                    }
                }
            }
            let hit_edge = {
                let diff = (best + n - seed) % n;
                diff.min(n - diff) + 2 >= window
            };
            if !hit_edge || window >= n / 2 {
                return best;
            }
            window = (window * 4).min(n / 2);
        }
    }

    /// Nearest-point projection into tube coordinates.
    ///
    /// Fails with `OutsideTube` when `dist(z, Γ) ≥ tube_radius()`. Equidistant
    /// queries (a measure-zero set) resolve to the branch the local search
    /// finds first.
    pub fn project(&self, z: Vec2<S>) -> Result<TubeCoords<S>, CurveError> {
        let i0 = self.nearest_sample(z);
        let d0 = (z - self.samples[i0].point).norm();
        if d0 > self.tube_radius + S::two() * self.ds {
            return Err(CurveError::OutsideTube(
                (z.x.to_f64(), z.y.to_f64()),
                self.tube_radius.to_f64(),
            ));
        }
        let s0 = S::from_index(i0) * self.ds;
        let s = self
            .newton_project(z, s0)
            .unwrap_or_else(|| self.golden_project(z, s0 - self.ds * S::two(), s0 + self.ds * S::two()));
        self.finish_projection(z, s)
    }

    /// Projection seeded by a previous parameter value; falls back to the
    /// full search if the seed is stale. This is the solver hot path.
    pub fn project_hinted(&self, z: Vec2<S>, hint: S) -> Result<TubeCoords<S>, CurveError> {
        if let Some(s) = self.newton_project(z, hint) {
            if (z - self.tau(s)).norm() < self.tube_radius {
                return self.finish_projection(z, s);
            }
        }
        self.project(z)
    }

    fn finish_projection(&self, z: Vec2<S>, s: S) -> Result<TubeCoords<S>, CurveError> {
        let p = self.tau(s);
        let nvec = self.inward_normal(s);
        let t = (z - p).dot(nvec);
        if t.abs() >= self.tube_radius {
            return Err(CurveError::OutsideTube(
                (z.x.to_f64(), z.y.to_f64()),
                self.tube_radius.to_f64(),
            ));
        }
        // Reconstruction residual is the tangential component left by Newton.
        let recon = p + nvec * t;
        if (recon - z).norm() > S::lit(1e-8) * (S::one() + z.norm()) {
            return Err(CurveError::ProjectionFailed((z.x.to_f64(), z.y.to_f64())));
        }
        Ok(TubeCoords { s, t })
    }

    /// Unsigned distance to `Γ`, valid anywhere in the plane.
    pub fn distance(&self, z: Vec2<S>) -> S {
        let i0 = self.nearest_sample(z);
        let s0 = S::from_index(i0) * self.ds;
        if let Some(s) = self.newton_project(z, s0) {
            return (z - self.tau(s)).norm();
        }
        let s = self.golden_project(z, s0 - self.ds * S::two(), s0 + self.ds * S::two());
        (z - self.tau(s)).norm()
    }

    /// Signed distance, positive inside `Γ` (the tube-coordinate `t` when in
    /// the tube; sign from the nearest normal otherwise).
    pub fn signed_distance(&self, z: Vec2<S>) -> S {
        let i0 = self.nearest_sample(z);
        let s0 = S::from_index(i0) * self.ds;
        let s = self
            .newton_project(z, s0)
            .unwrap_or_else(|| self.golden_project(z, s0 - self.ds * S::two(), s0 + self.ds * S::two()));
        (z - self.tau(s)).dot(self.inward_normal(s))
    }
}

fn resample_by_chord<S: Scalar>(pts: &[Vec2<S>], cum: &[S], m: usize, x: bool) -> Vec<S> {
    // Resamples the polygon at uniform chord-length fractions so the spline
    // knots are uniform in its 2π parameter.
    let total = cum[m];
    let n = (4 * m).max(64);
    let mut out = Vec::with_capacity(n);
    let mut k = 0usize;
    for i in 0..n {
        let target = total * S::from_index(i) / S::from_index(n);
        while k + 1 <= m && cum[k + 1] < target {
            k += 1;
        }
        let seg = cum[k + 1] - cum[k];
        let frac = if seg > S::zero() { (target - cum[k]) / seg } else { S::zero() };
        let p = pts[k % m] + (pts[(k + 1) % m] - pts[k % m]) * frac;
        out.push(if x { p.x } else { p.y });
    }
    out
}

fn simpson<S: Scalar>(f: &impl Fn(S) -> S, a: S, b: S, panels: usize) -> S {
    let h = (b - a) / S::from_index(panels);
    let mut acc = S::zero();
    for i in 0..panels {
        let x0 = a + S::from_index(i) * h;
        let xm = x0 + h * S::half();
        let x1 = x0 + h;
        acc = acc + (f(x0) + S::lit(4.0) * f(xm) + f(x1)) * h / S::lit(6.0);
    }
    acc
}

fn segments_cross<S: Scalar>(a0: Vec2<S>, a1: Vec2<S>, b0: Vec2<S>, b1: Vec2<S>) -> bool {
    let d1 = (b1 - b0).cross(a0 - b0);
    let d2 = (b1 - b0).cross(a1 - b0);
    let d3 = (a1 - a0).cross(b0 - a0);
    let d4 = (a1 - a0).cross(b1 - a0);
    ((d1 > S::zero() && d2 < S::zero()) || (d1 < S::zero() && d2 > S::zero()))
        && ((d3 > S::zero() && d4 < S::zero()) || (d3 < S::zero() && d4 > S::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn circle() -> PlanarCurve<f64> {
        build_curve(&CurveSpec::Circle).unwrap()
    }

    fn ellipse21() -> PlanarCurve<f64> {
        build_curve(&CurveSpec::Ellipse { a: 2.0, b: 1.0 }).unwrap()
    }

    /// Independent adaptive-quadrature perimeter of the (2,1) ellipse.
    fn ellipse_perimeter_oracle(a: f64, b: f64) -> f64 {
        let speed = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        let simpson = |n: usize| -> f64 {
            let h = TAU / n as f64;
            (0..n)
                .map(|i| {
                    let x0 = i as f64 * h;
                    (speed(x0) + 4.0 * speed(x0 + 0.5 * h) + speed(x0 + h)) * h / 6.0
                })
                .sum()
        };
        let mut n = 64;
        let mut prev = simpson(n);
        loop {
            n *= 2;
            let cur = simpson(n);
            if (cur - prev).abs() < 1e-13 || n > 1 << 20 {
                return cur;
            }
            prev = cur;
        }
    }

    #[test]
    fn circle_geometry() {
        let c = circle();
        assert!((c.scale_factor() - 1.0).abs() < 1e-12);
        let p = c.tau(0.0);
        assert!((p - Vec2::new(1.0, 0.0)).norm() < 1e-9);
        let q = c.tau(FRAC_PI_2);
        assert!((q - Vec2::new(0.0, 1.0)).norm() < 1e-9);
        assert!((c.curvature(1.234) - 1.0).abs() < 1e-9);
        assert!((c.inward_normal(0.0) - Vec2::new(-1.0, 0.0)).norm() < 1e-9);
        assert!((c.tube_radius() - 0.9).abs() < 1e-6);
    }

    #[test]
    fn circle_projection_signed_distance() {
        let c = circle();
        let tc = c.project(Vec2::new(1.5, 0.0)).unwrap();
        assert!(tc.s.wrap_pi().abs() < 1e-8);
        assert!((tc.t + 0.5).abs() < 1e-9, "t = {}", tc.t);
        let tc = c.project(Vec2::new(0.5, 0.0)).unwrap();
        assert!((tc.t - 0.5).abs() < 1e-9);
        assert!(c.project(Vec2::new(3.0, 0.0)).is_err());
    }

    #[test]
    fn ellipse_rescaled_to_2pi_with_true_perimeter() {
        let e = ellipse21();
        let l_oracle = ellipse_perimeter_oracle(2.0, 1.0);
        assert!(
            (e.scale_factor() - TAU / l_oracle).abs() < 1e-9,
            "scale {} vs {}",
            e.scale_factor(),
            TAU / l_oracle
        );
        // Curvature at the image of (2, 0): analytic a/b² divided by the scale.
        let tc = e.project(Vec2::new(2.0, 0.0) * e.scale_factor()).unwrap();
        let k_expected = (2.0 / 1.0) * (l_oracle / TAU);
        assert!(
            (e.curvature(tc.s) - k_expected).abs() < 1e-6 * k_expected,
            "κ = {} vs {}",
            e.curvature(tc.s),
            k_expected
        );
    }

    #[test]
    fn ellipse_arclength_inversion_matches_dense_oracle() {
        // Brute-force arc-length table of the normalized ellipse at 10⁶ steps.
        let e = ellipse21();
        let scale = e.scale_factor();
        let n = 1_000_000usize;
        let speed = |t: f64| {
            scale * (4.0 * t.sin().powi(2) + t.cos().powi(2)).sqrt()
        };
        let target = 0.7;
        let h = TAU / n as f64;
        let mut acc = 0.0;
        let mut t_at = 0.0;
        for i in 0..n {
            let t0 = i as f64 * h;
            let step = (speed(t0) + 4.0 * speed(t0 + 0.5 * h) + speed(t0 + h)) * h / 6.0;
            if acc + step >= target {
                t_at = t0 + h * (target - acc) / step;
                break;
            }
            acc += step;
        }
        let oracle = Vec2::new(2.0 * t_at.cos(), t_at.sin()) * scale;
        let hit = e.tau(0.7);
        assert!((hit - oracle).norm() < 1e-6, "gap {}", (hit - oracle).norm());
    }

    #[test]
    fn ellipse_curvature_ordering() {
        let e = ellipse21();
        let flat = e.project(Vec2::new(0.0, 1.0) * e.scale_factor()).unwrap();
        let sharp = e.project(Vec2::new(2.0, 0.0) * e.scale_factor()).unwrap();
        assert!(e.curvature(flat.s) < 1.0);
        assert!(e.curvature(sharp.s) > 1.0);
    }

    #[test]
    fn fourier_curvature_matches_finite_differences() {
        let c = build_curve(&CurveSpec::FourierCircle {
            cos: vec![0.0, 0.12],
            sin: vec![0.08],
        })
        .unwrap();
        // 5-point stencils of τ(s) as an independent curvature oracle.
        let h = 1e-3;
        for k in 0..10 {
            let s = 0.37 + 0.6 * k as f64;
            let p = |d: f64| c.tau(s + d);
            let d1 = (p(-2.0 * h) - p(2.0 * h) + (p(h) - p(-h)) * 8.0) / (12.0 * h);
            let d2 = (-(p(2.0 * h) + p(-2.0 * h)) + (p(h) + p(-h)) * 16.0 - p(0.0) * 30.0)
                / (12.0 * h * h);
            let kappa_fd = d1.cross(d2) / d1.norm().powi(3);
            assert!(
                (kappa_fd - c.curvature(s)).abs() < 5e-5,
                "s={s}: {kappa_fd} vs {}",
                c.curvature(s)
            );
        }
    }

    #[test]
    fn wiggly_fourier_tube_is_positive() {
        let c = build_curve(&CurveSpec::FourierCircle {
            cos: vec![0.05, 0.06, 0.04, 0.05, 0.02],
            sin: vec![0.03, 0.02, 0.05, 0.01, 0.04],
        })
        .unwrap();
        assert!(c.tube_radius() > 0.0);
    }

    #[test]
    fn figure_eight_rejected() {
        let n = 64;
        let pts: Vec<Vec2<f64>> = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                Vec2::new(t.sin(), t.sin() * t.cos())
            })
            .collect();
        match PlanarCurve::build(&CurveSpec::Points(pts), 256) {
            Err(CurveError::SelfIntersection(_, _)) => {}
            other => panic!("expected self-intersection, got {other:?}"),
        }
    }

    #[test]
    fn open_arc_rejected() {
        let pts: Vec<Vec2<f64>> = (0..32)
            .map(|i| {
                let t = PI * i as f64 / 31.0; // half circle only
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        match PlanarCurve::build(&CurveSpec::Points(pts), 256) {
            Err(CurveError::OpenCurve { .. }) => {}
            other => panic!("expected open-curve error, got {other:?}"),
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(matches!(
            PlanarCurve::<f64>::build(&CurveSpec::Circle, 8),
            Err(CurveError::TooFewSamples(8))
        ));
    }

    #[test]
    fn projection_scan_oracle_on_ellipse() {
        let e = ellipse21();
        let mut rng = 12345u64;
        let mut rand = move || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let s = TAU * rand();
            let t = (2.0 * rand() - 1.0) * 0.8 * e.tube_radius();
            let z = e.tube_point(TubeCoords { s, t });
            let tc = e.project(z).unwrap();
            // Dense scan: no parameter may be closer than the projection.
            let d_proj = (z - e.tau(tc.s)).norm();
            let mut d_best = f64::INFINITY;
            for k in 0..100_000 {
                let sk = TAU * k as f64 / 100_000.0;
                d_best = d_best.min((z - e.tau(sk)).norm());
            }
            assert!(d_proj <= d_best + 1e-9, "proj {d_proj} vs scan {d_best}");
            let recon = e.tube_point(tc);
            assert!((recon - z).norm() < 1e-8);
        }
    }

    #[test]
    fn gauss_bonnet_total_curvature() {
        for curve in [
            circle(),
            ellipse21(),
            build_curve(&CurveSpec::FourierCircle {
                cos: vec![0.1, 0.05],
                sin: vec![0.0, 0.07],
            })
            .unwrap(),
        ] {
            let n = curve.n_samples();
            let ds = TAU / n as f64;
            let total: f64 = (0..n).map(|i| curve.samples()[i].curvature * ds).sum();
            assert!((total - TAU).abs() < 1e-6, "∫κ ds = {total}");
        }
    }
}
