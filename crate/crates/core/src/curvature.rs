//! Scalar ingredients of the radial Minkowski-curvature problem: the slope map
//! `phi` and its inverse, the domain geometry and the nonlinearity `f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `f64` strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// `phi(s) = s / sqrt(1 - s^2)`, the momentum associated with slope `s`.
///
/// Evaluated as `s / sqrt((1 - s)(1 + s))` so that slopes close to the
/// barrier keep their relative accuracy.
pub fn phi(s: f64) -> Result<f64> {
    if !(s.abs() < 1.0) {
        return Err(Error::SlopeOutOfDomain(s));
    }
    Ok(s / ((1.0 - s) * (1.0 + s)).sqrt())
}

/// `phi^{-1}(t) = t / sqrt(1 + t^2)`.
///
/// The magnitude of the result is clamped to the largest double below one:
/// for `|t|` beyond roughly `1e8` the exact value rounds to one, which would
/// break the strict bound `|phi^{-1}(t)| < 1`.
pub fn phi_inv(t: f64) -> f64 {
    let s = if t.abs() <= 1.0 {
        t / (1.0 + t * t).sqrt()
    } else {
        let w = t.recip();
        t.signum() / (1.0 + w * w).sqrt()
    };
    s.clamp(-BELOW_ONE, BELOW_ONE)
}

/// Ball `B(R2)` when `R1 = 0`, annulus `A(R1, R2)` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    dim: u32,
    r1: f64,
    r2: f64,
}

impl Geometry {
    pub fn new(dim: u32, r1: f64, r2: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGeometry("dimension N must be at least 1".into()));
        }
        if !(r1.is_finite() && r2.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "radii must be finite (R1 = {r1}, R2 = {r2})"
            )));
        }
        if r1 < 0.0 {
            return Err(Error::InvalidGeometry(format!("R1 = {r1} is negative")));
        }
        if !(r2 > r1) {
            return Err(Error::InvalidGeometry(format!(
                "need R1 < R2, got R1 = {r1}, R2 = {r2}"
            )));
        }
        Ok(Self { dim, r1, r2 })
    }

    pub fn ball(dim: u32, radius: f64) -> Result<Self> {
        Self::new(dim, 0.0, radius)
    }

    pub fn annulus(dim: u32, r1: f64, r2: f64) -> Result<Self> {
        if !(r1 > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "an annulus needs R1 > 0, got {r1}"
            )));
        }
        Self::new(dim, r1, r2)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn is_ball(&self) -> bool {
        self.r1 == 0.0
    }

    /// `R2 - R1`.
    pub fn width(&self) -> f64 {
        self.r2 - self.r1
    }

    /// Radial weight `r^{N-1}`.
    #[inline]
    pub fn weight(&self, r: f64) -> f64 {
        match self.dim {
            1 => 1.0,
            2 => r,
            3 => r * r,
            n => r.powi(n as i32 - 1),
        }
    }
}

/// A nonlinearity `f` on `[0, inf)` with a positive zero `s0` separating a
/// negative from a positive region.
pub trait Nonlinearity: Send + Sync {
    fn f(&self, s: f64) -> f64;

    fn f_prime(&self, s: f64) -> f64;

    /// The positive equilibrium `s0`.
    fn s0(&self) -> f64;

    /// `f` extended by zero to negative arguments.
    #[inline]
    fn f_hat(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.f(s)
        } else {
            0.0
        }
    }
}

impl<T: Nonlinearity + ?Sized> Nonlinearity for &T {
    fn f(&self, s: f64) -> f64 {
        (**self).f(s)
    }
    fn f_prime(&self, s: f64) -> f64 {
        (**self).f_prime(s)
    }
    fn s0(&self) -> f64 {
        (**self).s0()
    }
}

impl<T: Nonlinearity + ?Sized> Nonlinearity for Box<T> {
    fn f(&self, s: f64) -> f64 {
        (**self).f(s)
    }
    fn f_prime(&self, s: f64) -> f64 {
        (**self).f_prime(s)
    }
    fn s0(&self) -> f64 {
        (**self).s0()
    }
}

pub fn f_hat<N: Nonlinearity + ?Sized>(nl: &N, s: f64) -> f64 {
    nl.f_hat(s)
}

pub fn f_prime_at_s0<N: Nonlinearity + ?Sized>(nl: &N) -> f64 {
    nl.f_prime(nl.s0())
}

/// The difference of powers `f(s) = s^{q-1} - s^{r-1}` with `2 <= r < q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerNonlinearity {
    q: f64,
    r: f64,
}

impl PowerNonlinearity {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if !(q.is_finite() && r.is_finite()) {
            return Err(Error::InvalidNonlinearity(format!(
                "exponents must be finite (q = {q}, r = {r})"
            )));
        }
        if r < 2.0 {
            return Err(Error::InvalidNonlinearity(format!("need r >= 2, got r = {r}")));
        }
        if !(q > r) {
            return Err(Error::InvalidNonlinearity(format!(
                "need q > r, got q = {q}, r = {r}"
            )));
        }
        Ok(Self { q, r })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `F(s) = s^q/q - s^r/r`, the primitive of `f_hat` vanishing at zero
    /// (and identically zero for `s < 0`).
    pub fn primitive(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            s.powf(self.q) / self.q - s.powf(self.r) / self.r
        }
    }
}

impl Nonlinearity for PowerNonlinearity {
    #[inline]
    fn f(&self, s: f64) -> f64 {
        s.powf(self.q - 1.0) - s.powf(self.r - 1.0)
    }

    fn f_prime(&self, s: f64) -> f64 {
        (self.q - 1.0) * s.powf(self.q - 2.0) - (self.r - 1.0) * s.powf(self.r - 2.0)
    }

    fn s0(&self) -> f64 {
        1.0
    }
}

/// A nonlinearity given by an arbitrary closure; the derivative is taken by
/// fourth-order central differences with step `1e-6 * max(1, |s|)`.
#[derive(Clone)]
pub struct CallbackNonlinearity<F> {
    f: F,
    s0: f64,
}

impl<F> CallbackNonlinearity<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    pub fn new(f: F, s0: f64) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvalidNonlinearity(format!(
                "equilibrium s0 must be positive, got {s0}"
            )));
        }
        Ok(Self { f, s0 })
    }
}

impl<F> std::fmt::Debug for CallbackNonlinearity<F> {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("CallbackNonlinearity")
            .field("s0", &self.s0)
            .finish_non_exhaustive()
    }
}

impl<F> Nonlinearity for CallbackNonlinearity<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn f(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    fn f_prime(&self, s: f64) -> f64 {
        let f = &self.f;
        let step = 1e-6 * s.abs().max(1.0);
        // exact representable step
        let h = (s + step) - s;
        if s - 2.0 * h >= 0.0 {
            (f(s - 2.0 * h) - 8.0 * f(s - h) + 8.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h)
        } else {
            // f lives on [0, inf): one-sided second order near zero
            (-3.0 * f(s) + 4.0 * f(s + h) - f(s + 2.0 * h)) / (2.0 * h)
        }
    }

    fn s0(&self) -> f64 {
        self.s0
    }
}

/// Samples the sign structure required of `f`: `f(0) = f(s0) = 0`, `f < 0` on
/// `(0, s0)` and `f > 0` on `(s0, s0 + R2 - R1 + 1)`.
///
/// This is a finite check on `samples` interior points of each interval.
pub fn check_sign_conditions<N: Nonlinearity + ?Sized>(
    nl: &N,
    geom: &Geometry,
    samples: usize,
) -> Result<()> {
    let s0 = nl.s0();
    let zero_tol = 64.0 * f64::EPSILON;
    for (label, at) in [("0", 0.0), ("s0", s0)] {
        let value = nl.f(at);
        if !(value.abs() <= zero_tol * (1.0 + at)) {
            return Err(Error::InvalidNonlinearity(format!(
                "f({label}) = {value} should vanish"
            )));
        }
    }
    let samples = samples.max(1);
    let upper = s0 + geom.width() + 1.0;
    for i in 1..=samples {
        let t = i as f64 / (samples + 1) as f64;
        let below = t * s0;
        let above = s0 + t * (upper - s0);
        let fb = nl.f(below);
        if !(fb < 0.0) {
            return Err(Error::InvalidNonlinearity(format!(
                "f({below}) = {fb} should be negative on (0, s0)"
            )));
        }
        let fa = nl.f(above);
        if !(fa > 0.0) {
            return Err(Error::InvalidNonlinearity(format!(
                "f({above}) = {fa} should be positive beyond s0"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phi_examples() {
        assert_eq!(phi(0.0).unwrap(), 0.0);
        assert!((phi(0.6).unwrap() - 0.75).abs() < 1e-15);
        assert!((phi(-0.6).unwrap() + 0.75).abs() < 1e-15);
        assert!(matches!(phi(1.0), Err(Error::SlopeOutOfDomain(_))));
        assert!(matches!(phi(-1.5), Err(Error::SlopeOutOfDomain(_))));
        assert!(phi(f64::NAN).is_err());
    }

    #[test]
    fn phi_inv_examples() {
        assert_eq!(phi_inv(0.0), 0.0);
        assert!((phi_inv(0.75) - 0.6).abs() < 1e-15);
        // exact value is 1 - 5e-25; the closest double below one is returned
        let s = phi_inv(1e12);
        assert!(s > 1.0 - 1e-12 && s < 1.0);
        assert!(phi_inv(-1e300) > -1.0);
        assert!(phi_inv(f64::MAX) < 1.0);
    }

    #[test]
    fn phi_near_barrier_keeps_precision() {
        let s = 1.0 - 1e-10;
        let expected = s / (2e-10_f64 - 1e-20).sqrt();
        assert!(((phi(s).unwrap() - expected) / expected).abs() < 1e-6);
    }

    #[test]
    fn f_hat_examples() {
        let p15 = PowerNonlinearity::new(15.0, 3.0).unwrap();
        assert_eq!(f_hat(&p15, -2.0), 0.0);
        assert_eq!(f_hat(&p15, 1.0), 0.0);
        let p4 = PowerNonlinearity::new(4.0, 3.0).unwrap();
        assert_eq!(f_hat(&p4, 2.0), 4.0);
    }

    #[test]
    fn prototype_derivative_at_equilibrium() {
        let p = PowerNonlinearity::new(15.0, 3.0).unwrap();
        assert_eq!(f_prime_at_s0(&p), 12.0);
        let p = PowerNonlinearity::new(3.0, 2.0).unwrap();
        assert_eq!(f_prime_at_s0(&p), 1.0);
    }

    #[test]
    fn callback_derivative_matches_exact() {
        let nl = CallbackNonlinearity::new(|s: f64| (PI * (s - 1.0)).sin(), 1.0).unwrap();
        assert!((f_prime_at_s0(&nl) - PI).abs() < 1e-12);
        // near zero the one-sided formula kicks in
        let cubic = CallbackNonlinearity::new(|s: f64| s * s * s - s, 1.0).unwrap();
        assert!((cubic.f_prime(0.0) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn prototype_validation() {
        assert!(PowerNonlinearity::new(3.0, 3.0).is_err());
        assert!(PowerNonlinearity::new(5.0, 1.5).is_err());
        assert!(PowerNonlinearity::new(f64::INFINITY, 3.0).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(Geometry::new(0, 0.0, 1.0).is_err());
        assert!(Geometry::new(2, 1.0, 1.0).is_err());
        assert!(Geometry::new(2, -0.5, 1.0).is_err());
        assert!(Geometry::annulus(2, 0.0, 1.0).is_err());
        let ball = Geometry::ball(3, 2.0).unwrap();
        assert!(ball.is_ball());
        let annulus = Geometry::annulus(2, 1.0, 2.0).unwrap();
        assert!(!annulus.is_ball());
        assert_eq!(annulus.width(), 1.0);
        assert_eq!(ball.weight(3.0), 9.0);
    }

    #[test]
    fn sign_conditions() {
        let geom = Geometry::ball(1, 1.0).unwrap();
        let p = PowerNonlinearity::new(15.0, 3.0).unwrap();
        check_sign_conditions(&p, &geom, 200).unwrap();
        let wrong = CallbackNonlinearity::new(|s: f64| s - 1.0, 1.0).unwrap();
        assert!(check_sign_conditions(&wrong, &geom, 10).is_err());
        let flipped = CallbackNonlinearity::new(|s: f64| s * (1.0 - s), 1.0).unwrap();
        assert!(check_sign_conditions(&flipped, &geom, 10).is_err());
    }

    #[test]
    fn prototype_primitive() {
        let p = PowerNonlinearity::new(4.0, 3.0).unwrap();
        assert_eq!(p.primitive(2.0), 16.0 / 4.0 - 8.0 / 3.0);
        assert_eq!(p.primitive(-1.0), 0.0);
    }
}
