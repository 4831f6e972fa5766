//! Periodic cubic splines on uniform knots.
//!
//! Used for the arc-length curve table, modulation profiles `q(s)`, radial
//! boundary graphs `rho(θ)`, and boundary offsets `η0(σ)`. The spline is the
//! C² natural periodic interpolant; its derivatives are the derivatives of
//! the interpolant itself, so value/gradient consistency checks hold to
//! roundoff.

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct PeriodicSpline<S> {
    period: S,
    h: S,
    values: Vec<S>,
    /// Second derivatives ("moments") at the knots.
    moments: Vec<S>,
}

impl<S: Scalar> PeriodicSpline<S> {
    /// Interpolates `values[i]` at `x_i = i * period / values.len()`.
    pub fn new(period: S, values: Vec<S>) -> Self {
        let n = values.len();
        assert!(n >= 3, "periodic spline needs at least 3 knots");
        let h = period / S::from_index(n);
        let mut rhs: Vec<S> = (0..n)
            .map(|i| {
                let ym = values[(i + n - 1) % n];
                let y0 = values[i];
                let yp = values[(i + 1) % n];
                S::lit(6.0) * (ym - S::two() * y0 + yp) / (h * h)
            })
            .collect();
        cyclic_thomas(S::one(), S::lit(4.0), S::one(), &mut rhs);
        Self {
            period,
            h,
            values,
            moments: rhs,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn period(&self) -> S {
        self.period
    }

    pub fn knot_values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    fn locate(&self, x: S) -> (usize, usize, S) {
        let mut xw = x % self.period;
        if xw < S::zero() {
            xw += self.period;
        }
        let n = self.values.len();
        let mut i = (xw / self.h).floor().to_f64() as usize;
        if i >= n {
            i = n - 1;
        }
        let local = xw - S::from_index(i) * self.h;
        (i, (i + 1) % n, local)
    }

    pub fn eval(&self, x: S) -> S {
        let (i, j, u) = self.locate(x);
        let h = self.h;
        let a = h - u;
        let six = S::lit(6.0);
        self.moments[i] * a * a * a / (six * h)
            + self.moments[j] * u * u * u / (six * h)
            + (self.values[i] - self.moments[i] * h * h / six) * a / h
            + (self.values[j] - self.moments[j] * h * h / six) * u / h
    }

    pub fn deriv(&self, x: S) -> S {
        let (i, j, u) = self.locate(x);
        let h = self.h;
        let a = h - u;
        -self.moments[i] * a * a / (S::two() * h)
            + self.moments[j] * u * u / (S::two() * h)
            + (self.values[j] - self.values[i]) / h
            - (self.moments[j] - self.moments[i]) * h / S::lit(6.0)
    }

    pub fn deriv2(&self, x: S) -> S {
        let (i, j, u) = self.locate(x);
        let a = self.h - u;
        (self.moments[i] * a + self.moments[j] * u) / self.h
    }

    pub fn min_value(&self) -> S {
        // Dense scan between knots; extrema of a cubic can undershoot knots.
        let n = self.values.len();
        let mut lo = self.values[0];
        for i in 0..n {
            for k in 0..4 {
                let x = (S::from_index(i) + S::lit(k as f64 / 4.0)) * self.h;
                lo = lo.min(self.eval(x));
            }
        }
        lo
    }
}

/// Solves the cyclic tridiagonal system with constant bands `(sub, diag, sup)`
/// in place, using the Sherman-Morrison correction over a Thomas sweep.
fn cyclic_thomas<S: Scalar>(sub: S, diag: S, sup: S, rhs: &mut [S]) {
    let n = rhs.len();
    assert!(n >= 3);
    let gamma = -diag;
    // Modified diagonal: b0 -= gamma, b_{n-1} -= sub*sup/gamma.
    let mut b = vec![diag; n];
    b[0] = diag - gamma;
    b[n - 1] = diag - sub * sup / gamma;

    let solve = |b: &[S], d: &[S]| -> Vec<S> {
        let mut cp = vec![S::zero(); n];
        let mut dp = vec![S::zero(); n];
        cp[0] = sup / b[0];
        dp[0] = d[0] / b[0];
        for i in 1..n {
            let m = b[i] - sub * cp[i - 1];
            cp[i] = sup / m;
            dp[i] = (d[i] - sub * dp[i - 1]) / m;
        }
        let mut x = vec![S::zero(); n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    };

    let x = solve(&b, rhs);
    let mut u = vec![S::zero(); n];
    u[0] = gamma;
    u[n - 1] = sup;
    let z = solve(&b, &u);
    // v = (1, 0, ..., 0, sub/gamma)
    let fact = (x[0] + sub * x[n - 1] / gamma) / (S::one() + z[0] + sub * z[n - 1] / gamma);
    for i in 0..n {
        rhs[i] = x[i] - fact * z[i];
    }
}
