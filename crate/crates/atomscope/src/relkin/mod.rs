//! Relativistic kinetic symbol, Daubechies functions, K₂ and the related
//! pointwise inequalities.

mod forms;

pub use forms::{
    check_herbst_constant, check_kato, FormCheck, GaussianProfile, RadialProfile, SampledProfile,
    ShiftedBump, KATO_CONSTANT,
};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::Real;

fn c<S: Real>(x: f64) -> S {
    S::from_f64(x).expect("constant representable in scalar type")
}

/// Relativistic kinetic symbol `T(p) = sqrt(p^2 + alpha^-2) - alpha^-1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticSymbol<S> {
    alpha: S,
}

impl<S: Real> KineticSymbol<S> {
    pub fn new(alpha: S) -> Result<Self> {
        if !(alpha > S::zero()) || !alpha.is_finite() {
            return Err(Error::param("alpha must be positive and finite"));
        }
        Ok(KineticSymbol { alpha })
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    /// `E(p) = sqrt(p^2 + alpha^-2)`.
    pub fn energy(&self, p: S) -> S {
        let m = self.alpha.recip();
        p.hypot(m)
    }

    /// `T(p)` in the cancellation-free form `p^2 / (E(p) + alpha^-1)`.
    pub fn t(&self, p: S) -> S {
        let m = self.alpha.recip();
        p * p / (p.hypot(m) + m)
    }

    /// `alpha^-1 T(p)`, the kinetic energy in the units of the atomic Hamiltonian.
    pub fn scaled(&self, p: S) -> S {
        self.t(p) / self.alpha
    }
}

/// `T(p) = sqrt(p^2 + alpha^-2) - alpha^-1` for `p >= 0`.
pub fn kinetic_symbol<S: Real>(p: S, alpha: S) -> Result<S> {
    if !(p >= S::zero()) {
        return Err(Error::param("momentum must be nonnegative"));
    }
    Ok(KineticSymbol::new(alpha)?.t(p))
}

/// `g(t) - (8/3) t^3`, accurate for every `t >= 0`.
///
/// Below `t = 1/2` the binomial series
/// `8 sum_k C(1/2, k) t^(2k+3) / (2k+3)` is summed; above it the closed form
/// has no harmful cancellation.
pub fn daubechies_excess<S: Real>(t: S) -> S {
    if t < c(0.5) {
        let t2 = t * t;
        let mut binom: S = c(0.5);
        let mut power = t2 * t2 * t;
        let mut sum = S::zero();
        for k in 1..200 {
            let term = binom * power / c((2 * k + 3) as f64);
            sum = sum + term;
            if term.abs() <= S::epsilon() * sum.abs() {
                break;
            }
            binom = binom * (c::<S>(0.5) - c(k as f64)) / c((k + 1) as f64);
            power = power * t2;
        }
        sum * c(8.0)
    } else {
        let s = (S::one() + t * t).sqrt();
        t * s * (S::one() + c::<S>(2.0) * t * t) - t.asinh() - c::<S>(8.0 / 3.0) * t * t * t
    }
}

/// Daubechies' function `g(t) = t sqrt(1+t^2) (1+2t^2) - ln(t + sqrt(1+t^2))`.
pub fn daubechies_g<S: Real>(t: S) -> Result<S> {
    if !(t >= S::zero()) {
        return Err(Error::param("daubechies_g requires t >= 0"));
    }
    Ok(daubechies_excess(t) + c::<S>(8.0 / 3.0) * t * t * t)
}

/// Lower and upper bounds `(3/5) t^4 min{2t/5, 1}` and `2 t^4 min{2t/5, 1}` on `g(t) - (8/3) t^3`.
pub fn excess_bounds<S: Real>(t: S) -> (S, S) {
    let m = (c::<S>(0.4) * t).min(S::one());
    let t4 = t * t * t * t;
    (c::<S>(0.6) * t4 * m, c::<S>(2.0) * t4 * m)
}

/// The Daubechies energy density `G_alpha` for `q` spin states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DaubechiesFunctional<S> {
    pub q: u32,
    pub alpha: S,
    /// `C = 0.163 q`.
    pub c: S,
}

impl<S: Real> DaubechiesFunctional<S> {
    pub fn new(q: u32, alpha: S) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("q must be at least 1"));
        }
        if !(alpha > S::zero()) {
            return Err(Error::param("alpha must be positive"));
        }
        Ok(DaubechiesFunctional {
            q,
            alpha,
            c: c::<S>(0.163) * c(q as f64),
        })
    }

    /// `G_alpha(rho) = (3/8) alpha^-4 C (g(t) - (8/3) t^3)` with `t = alpha (rho/C)^(1/3)`.
    pub fn eval(&self, rho: S) -> Result<S> {
        if !(rho >= S::zero()) {
            return Err(Error::param("density must be nonnegative"));
        }
        let t = self.alpha * (rho / self.c).cbrt();
        let a2 = self.alpha * self.alpha;
        Ok(c::<S>(0.375) * self.c * daubechies_excess(t) / (a2 * a2))
    }

    /// `min{alpha C^(-2/3) rho^(5/3) / 5, C^(-1/3) rho^(4/3) / 2}`.
    pub fn envelope(&self, rho: S) -> S {
        let r13 = rho.cbrt();
        let c13 = self.c.cbrt();
        let a = self.alpha * rho * r13 * r13 / (c13 * c13) / c(5.0);
        let b = rho * r13 / c13 / c(2.0);
        a.min(b)
    }

    /// Returns `(lower, G_alpha(rho), upper)` of the two-sided sandwich.
    pub fn sandwich(&self, rho: S) -> Result<(S, S, S)> {
        let g = self.eval(rho)?;
        let m = self.envelope(rho);
        Ok((c::<S>(0.45) * m, g, c::<S>(1.5) * m))
    }
}

/// `G_alpha(rho)` for `q` spin states.
pub fn daubechies_g_alpha<S: Real>(rho: S, alpha: S, q: u32) -> Result<S> {
    DaubechiesFunctional::new(q, alpha)?.eval(rho)
}

/// `F(s) = int_0^s (t^2 + 2t/alpha)^(3/2) dt`.
///
/// Integrated in `t = u^2`, where the integrand `2u^4 (u^2 + 2/alpha)^(3/2)`
/// is smooth.
pub fn lt_f<S: Real>(s: S, alpha: S) -> Result<S> {
    if !(s >= S::zero()) || !(alpha > S::zero()) {
        return Err(Error::param("lt_f requires s >= 0 and alpha > 0"));
    }
    if s == S::zero() {
        return Ok(S::zero());
    }
    let k = c::<S>(2.0) / alpha;
    let two: S = c(2.0);
    let r = Quadrature::default().integrate(
        |u: S| {
            let u2 = u * u;
            two * u2 * u2 * (u2 + k) * (u2 + k).sqrt()
        },
        S::zero(),
        s.sqrt(),
    )?;
    Ok(r.value)
}

/// `(8/5) alpha^(-3/2) s^(5/2) + s^4 / (2 sqrt 2)`.
pub fn lt_f_bound<S: Real>(s: S, alpha: S) -> S {
    let a32 = alpha * alpha.sqrt();
    c::<S>(1.6) * s * s * s.sqrt() / a32 + s * s * s * s / c(8.0f64.sqrt())
}

/// Modified Bessel function `K_2(t) = t int_0^inf exp(-t sqrt(s^2+1)) s^2 ds`.
///
/// Evaluated as `t e^-t int_0^U exp(-t (cosh u - 1)) sinh^2 u cosh u du`
/// after `s = sinh u`; the cut `U` leaves a tail below `e^-60` relative.
pub fn bessel_k2<S: Real>(t: S) -> Result<S> {
    if !(t > S::zero()) || !t.is_finite() {
        return Err(Error::param("bessel_k2 requires a positive finite argument"));
    }
    let cut = (S::one() + c::<S>(60.0) / t).acosh();
    let r = Quadrature::default().integrate(
        |u: S| {
            let sh = u.sinh();
            let ch = u.cosh();
            (-(t * (ch - S::one()))).exp() * sh * sh * ch
        },
        S::zero(),
        cut,
    )?;
    Ok(t * (-t).exp() * r.value)
}

/// `int_0^inf t^2 K_2(t) dt` by nested quadrature; exactly `3 pi / 2`.
pub fn bessel_k2_second_moment() -> Result<f64> {
    let quad = Quadrature::<f64>::with_tolerance(1e-11, 1e-300);
    let mut failure = None;
    let mut f = |t: f64| match bessel_k2(t) {
        Ok(k) => t * t * k,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let head = quad.integrate(&mut f, 0.0, 1.0)?.value;
    let tail = quad.integrate_to_infinity(&mut f, 1.0)?.value;
    match failure {
        Some(e) => Err(e),
        None => Ok(head + tail),
    }
}

/// `16 t^-2 e^(-t/2)`.
pub fn bessel_k2_bound<S: Real>(t: S) -> S {
    c::<S>(16.0) * (-(t * c(0.5))).exp() / (t * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinetic_examples() {
        assert_eq!(kinetic_symbol(0.0, 1.0).unwrap(), 0.0);
        let v = kinetic_symbol(3.0, 1.0).unwrap();
        assert!((v - (10f64.sqrt() - 1.0)).abs() < 1e-15);
        let k = KineticSymbol::new(1e-4f64).unwrap();
        assert!((k.scaled(1.0) - 0.5).abs() < 1e-6);
        assert!(kinetic_symbol(1.0, 0.0).is_err());
        assert!(kinetic_symbol(1.0, -1.0).is_err());
    }

    #[test]
    fn g_examples() {
        assert_eq!(daubechies_g(0.0).unwrap(), 0.0);
        let g1 = daubechies_g(1.0).unwrap();
        assert!((g1 - (3.0 * 2f64.sqrt() - (1.0 + 2f64.sqrt()).ln())).abs() < 1e-14);
        let ex = g1 - 8.0 / 3.0;
        assert!(ex >= 0.24 && ex <= 0.8);
        assert!(daubechies_g(-1.0).is_err());
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let t = 0.5f64;
        let s = t * (1.0 + t * t).sqrt() * (1.0 + 2.0 * t * t) - t.asinh() - 8.0 / 3.0 * t.powi(3);
        let below = daubechies_excess(0.5 - 1e-15);
        assert!((below - s).abs() < 1e-13 * s);
    }

    #[test]
    fn g_alpha_nonrelativistic_limit() {
        let d = DaubechiesFunctional::new(2, 1e-6f64).unwrap();
        let v = d.eval(1.0).unwrap() / 1e-6;
        let expect = 0.3 * d.c.powf(-2.0 / 3.0);
        assert!(((v - expect) / expect).abs() < 1e-4);
    }

    #[test]
    fn k2_value_at_one() {
        let k = bessel_k2(1.0f64).unwrap();
        assert!((k - 1.624_838_898_635_177_5).abs() < 1e-9);
    }
}
