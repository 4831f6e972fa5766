//! Equivariant radial profiles on the unit disc with the quartic potential:
//! `f'' + f'/r - d² f/r² = f(f² - 1)/ε²`, `f(0) = 0`, `f(1) = 1`, solved by
//! second-order collocation with damped Newton and continuation in ε. Gives
//! grid access to the non-minimizing branch for |d| ≥ 2.

use std::sync::Arc;

use crate::domain::{BoundaryDatum, Grid2D};
use crate::error::SolveError;
use crate::field::FieldR2;
use crate::scalar::Scalar;
use crate::vec2::Vec2;

pub const DEFAULT_RADIAL_MESH: usize = 4096;

#[derive(Clone, Debug)]
pub struct RadialProfile<S> {
    /// Uniform radii 0..=1.
    pub r: Vec<S>,
    pub f: Vec<S>,
    pub degree: i32,
    pub eps: S,
}

pub fn solve_radial<S: Scalar>(
    degree: i32,
    eps: S,
    mesh_n: usize,
) -> Result<RadialProfile<S>, SolveError> {
    if degree == 0 {
        return Err(SolveError::RadialDegreeZero(degree));
    }
    let d2 = S::from_f64((degree as f64) * (degree as f64)).unwrap();
    let m = mesh_n.max(256);
    let dr = S::one() / S::from_index(m);
    let r: Vec<S> = (0..=m).map(|i| S::from_index(i) * dr).collect();

    // Continuation from a fat-core profile down to the target ε.
    let mut f: Vec<S> = r.clone(); // f = r satisfies both boundary conditions
    let mut eps_k = eps.max(S::lit(0.35));
    loop {
        newton_1d(&r, &mut f, d2, eps_k, dr)?;
        if eps_k <= eps {
            break;
        }
        eps_k = (eps_k * S::lit(0.6)).max(eps);
    }

    // The profile of the equivariant branch is strictly increasing.
    for i in 0..m {
        if f[i + 1] < f[i] - S::lit(1e-10) {
            return Err(SolveError::RadialNewton(eps.to_f64()));
        }
    }
    if f.iter().any(|v| v.abs() > S::one() + S::lit(1e-9)) {
        return Err(SolveError::RadialNewton(eps.to_f64()));
    }

    Ok(RadialProfile {
        r,
        f,
        degree,
        eps,
    })
}

fn newton_1d<S: Scalar>(
    r: &[S],
    f: &mut Vec<S>,
    d2: S,
    eps: S,
    dr: S,
) -> Result<(), SolveError> {
    let m = r.len() - 1;
    let eps2 = eps * eps;
    let dr2 = dr * dr;
    let res = |f: &[S], out: &mut Vec<S>| {
        out.clear();
        for i in 1..m {
            let lap = (f[i + 1] - S::two() * f[i] + f[i - 1]) / dr2
                + (f[i + 1] - f[i - 1]) / (S::two() * dr * r[i]);
            out.push(lap - d2 * f[i] / (r[i] * r[i]) - f[i] * (f[i] * f[i] - S::one()) / eps2);
        }
    };
    let mut g = Vec::with_capacity(m - 1);
    let mut g_try = Vec::with_capacity(m - 1);
    res(f, &mut g);
    let norm_inf = |v: &[S]| v.iter().fold(S::zero(), |a, &b| a.max(b.abs()));
    // Second differences of an O(1) profile carry an ε_mach/dr² rounding
    // floor; the tolerance must sit above it.
    let floor = S::epsilon() * S::lit(64.0) / dr2;
    let tol = (S::lit(1e-10) * (S::one() + S::one() / eps2)).max(floor);

    for _ in 0..80 {
        let gn = norm_inf(&g);
        if gn <= tol {
            return Ok(());
        }
        // Tridiagonal Jacobian, Thomas solve for the Newton step.
        let mut sub = vec![S::zero(); m - 1];
        let mut diag = vec![S::zero(); m - 1];
        let mut sup = vec![S::zero(); m - 1];
        for i in 1..m {
            let k = i - 1;
            sub[k] = S::one() / dr2 - S::one() / (S::two() * dr * r[i]);
            sup[k] = S::one() / dr2 + S::one() / (S::two() * dr * r[i]);
            diag[k] = -S::two() / dr2
                - d2 / (r[i] * r[i])
                - (S::lit(3.0) * f[i] * f[i] - S::one()) / eps2;
        }
        let mut rhs: Vec<S> = g.iter().map(|&v| -v).collect();
        thomas(&sub, &mut diag, &sup, &mut rhs);

        let mut alpha = S::one();
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = f.clone();
            for i in 1..m {
                trial[i] = f[i] + alpha * rhs[i - 1];
            }
            res(&trial, &mut g_try);
            let gt = norm_inf(&g_try);
            if gt.is_finite() && gt < gn * (S::one() - S::lit(1e-4) * alpha) {
                *f = trial;
                std::mem::swap(&mut g, &mut g_try);
                accepted = true;
                break;
            }
            alpha = alpha * S::half();
        }
        if !accepted {
            return Err(SolveError::RadialNewton(eps.to_f64()));
        }
    }
    if norm_inf(&g) <= tol * S::lit(100.0) {
        Ok(())
    } else {
        Err(SolveError::RadialNewton(eps.to_f64()))
    }
}

fn thomas<S: Scalar>(sub: &[S], diag: &mut [S], sup: &[S], rhs: &mut [S]) {
    let n = rhs.len();
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] = diag[i] - w * sup[i - 1];
        rhs[i] = rhs[i] - w * rhs[i - 1];
    }
    rhs[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
}

impl<S: Scalar> RadialProfile<S> {
    /// Cubic interpolation of the profile at radius `x` (clamped to [0, 1]).
    pub fn eval(&self, x: S) -> S {
        let m = self.r.len() - 1;
        let dr = S::one() / S::from_index(m);
        let x = x.max(S::zero()).min(S::one());
        let fi = (x / dr).floor().to_f64() as usize;
        let i = fi.min(m - 1);
        let t = (x - S::from_index(i) * dr) / dr;
        // Catmull-Rom with clamped end tangents.
        let fm = if i > 0 { self.f[i - 1] } else { S::two() * self.f[0] - self.f[1] };
        let f0 = self.f[i];
        let f1 = self.f[i + 1];
        let fp = if i + 2 <= m {
            self.f[i + 2]
        } else {
            S::two() * self.f[m] - self.f[m - 1]
        };
        let t2 = t * t;
        let t3 = t2 * t;
        S::half()
            * ((S::two() * f0)
                + (-fm + f1) * t
                + (S::two() * fm - S::lit(5.0) * f0 + S::lit(4.0) * f1 - fp) * t2
                + (-fm + S::lit(3.0) * f0 - S::lit(3.0) * f1 + fp) * t3)
    }

    /// Lifts the profile to the grid as `f(r) (cos dθ, sin dθ)`, keeping the
    /// bound boundary values of the datum.
    pub fn lift(&self, grid: Arc<Grid2D<S>>, datum: &BoundaryDatum<S>) -> FieldR2<S> {
        let mut u = FieldR2::bind(grid.clone(), datum);
        let d = S::from_f64(self.degree as f64).unwrap();
        let n = grid.n();
        for j in 0..n {
            for i in 0..n {
                let idx = grid.idx(i, j);
                if grid.interior_id(idx).is_none() {
                    continue;
                }
                let p = grid.point(i, j);
                let theta = p.angle();
                let fr = self.eval(p.norm());
                u.set(idx, Vec2::from_angle(d * theta) * fr);
            }
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Shooting oracle: RK4 on the first-order system from an `A r^d` core,
    /// bisecting the core amplitude to hit f(1) = 1.
    fn shoot(d: i32, eps: f64) -> impl Fn(f64) -> f64 {
        let dd = d as f64;
        let rhs = |r: f64, f: f64, fp: f64| -> (f64, f64) {
            (
                fp,
                -fp / r + dd * dd * f / (r * r) + f * (f * f - 1.0) / (eps * eps),
            )
        };
        let integrate = |a: f64| -> Vec<(f64, f64)> {
            let r0: f64 = 1e-4;
            let mut f = a * r0.powi(d);
            let mut fp = dd * a * r0.powi(d - 1);
            let h = 2e-5;
            let mut out = Vec::with_capacity(50_001);
            let mut r = r0;
            out.push((r, f));
            while r < 1.0 - 0.5 * h {
                let (k1f, k1p) = rhs(r, f, fp);
                let (k2f, k2p) = rhs(r + 0.5 * h, f + 0.5 * h * k1f, fp + 0.5 * h * k1p);
                let (k3f, k3p) = rhs(r + 0.5 * h, f + 0.5 * h * k2f, fp + 0.5 * h * k2p);
                let (k4f, k4p) = rhs(r + h, f + h * k3f, fp + h * k3p);
                f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
                fp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
                r += h;
                out.push((r, f));
                if !f.is_finite() || f.abs() > 10.0 {
                    break;
                }
            }
            out
        };
        let end = |a: f64| -> f64 {
            let tr = integrate(a);
            tr.last().map(|&(r, f)| if r > 0.999 { f } else { f64::INFINITY }).unwrap()
        };
        let mut lo = 0.0;
        let mut hi = 8.0 / eps.powi(d as i32).max(1e-6).min(1e6);
        while end(hi) < 1.0 {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if end(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        let table = integrate(a);
        move |r: f64| -> f64 {
            let i = table.partition_point(|&(rr, _)| rr < r).min(table.len() - 1);
            if i == 0 {
                return table[0].1;
            }
            let (r0, f0) = table[i - 1];
            let (r1, f1) = table[i];
            f0 + (f1 - f0) * (r - r0) / (r1 - r0)
        }
    }

    #[test]
    fn d1_profile_matches_shooting_oracle() {
        let p = solve_radial::<f64>(1, 0.1, DEFAULT_RADIAL_MESH).unwrap();
        assert_eq!(p.f[0], 0.0);
        assert!((p.f[p.f.len() - 1] - 1.0).abs() < 1e-14);
        let oracle = shoot(1, 0.1);
        for &r in &[0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.95] {
            let gap = (p.eval(r) - oracle(r)).abs();
            assert!(gap < 5e-5, "r = {r}: {} vs {} (gap {gap})", p.eval(r), oracle(r));
        }
    }

    #[test]
    fn d2_profile_monotone_bounded() {
        let p = solve_radial::<f64>(2, 0.15, DEFAULT_RADIAL_MESH).unwrap();
        for w in p.f.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
        assert!(p.f.iter().all(|&v| (-1e-12..=1.0 + 1e-9).contains(&v)));
        // Degree-2 core is flatter: f ~ r² near 0.
        assert!(p.eval(0.02) < 0.1 * p.eval(0.2));
    }

    #[test]
    fn large_eps_profile_bounded_by_one() {
        let p = solve_radial::<f64>(1, 2.0, 1024).unwrap();
        assert!(p.f.iter().all(|&v| v <= 1.0 + 1e-12));
    }

    #[test]
    fn degree_zero_rejected() {
        assert!(matches!(
            solve_radial::<f64>(0, 0.1, 256),
            Err(SolveError::RadialDegreeZero(0))
        ));
    }
}
