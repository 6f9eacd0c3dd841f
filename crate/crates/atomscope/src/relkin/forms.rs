//! Quadratic forms of radial trial functions: Kato's inequality and the
//! Gaussian-cutoff variant used for the Daubechies-Lieb-Yau bound.
//!
//! A radial function `f(|x|)` is handled through its reduced form
//! `u(r) = sqrt(4 pi) r f(r)` and the sine transform
//! `u~(p) = sqrt(2/pi) int_0^inf u(r) sin(pr) dr`, so that
//! `int |f|^2/|x| = int u^2/r dr` and `int |p| |f^(p)|^2 dp = int p u~^2 dp`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::relkin::KineticSymbol;

/// Kato's constant in `int |f|^2/|x| <= K int |p| |f^|^2`.
pub const KATO_CONSTANT: f64 = PI / 2.0;

/// Result of comparing the two sides of a form inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// A spherically symmetric trial function in reduced form.
pub trait RadialProfile {
    /// `u(r) = sqrt(4 pi) r f(r)`.
    fn reduced(&self, r: f64) -> f64;

    /// `u~(p)`, the sine transform of `u`.
    fn reduced_momentum(&self, p: f64) -> Result<f64>;

    /// `int_0^inf w(r) u(r)^2 dr`.
    fn position_form(&self, w: &dyn Fn(f64) -> f64) -> Result<f64>;

    /// `int_0^inf s(p) u~(p)^2 dp`.
    fn momentum_form(&self, s: &dyn Fn(f64) -> f64) -> Result<f64>;

    /// `int |f|^2 dx`.
    fn norm_squared(&self) -> Result<f64> {
        self.position_form(&|_| 1.0)
    }

    /// Width `s` when the profile is the normalized Gaussian of [`GaussianProfile`].
    fn gaussian_width(&self) -> Option<f64> {
        None
    }
}

fn require_normalizable(f: &dyn RadialProfile) -> Result<()> {
    let n = f.norm_squared()?;
    if !n.is_finite() || n <= 0.0 {
        return Err(Error::param(format!("profile is not normalizable (norm^2 = {n})")));
    }
    Ok(())
}

/// Kato's inequality `int |f|^2/|x| <= (pi/2) int |p| |f^|^2`.
pub fn check_kato(f: &dyn RadialProfile) -> Result<FormCheck> {
    require_normalizable(f)?;
    let lhs = f.position_form(&|r| 1.0 / r)?;
    let rhs = KATO_CONSTANT * f.momentum_form(&|p| p)?;
    Ok(FormCheck {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

/// `int e^(-mu x^2) |f|^2/|x| <= (pi/2) (sqrt2 - 1)^-1 (f, T(p) f)` with `mu = 1/(pi alpha^2)`.
pub fn check_herbst_constant(f: &dyn RadialProfile, alpha: f64) -> Result<FormCheck> {
    let symbol = KineticSymbol::new(alpha)?;
    require_normalizable(f)?;
    let mu = 1.0 / (PI * alpha * alpha);
    let lhs = f.position_form(&|r| (-mu * r * r).exp() / r)?;
    let rhs = PI / 2.0 / (SQRT_2 - 1.0) * f.momentum_form(&|p| symbol.t(p))?;
    Ok(FormCheck {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

fn inner_quadrature() -> Quadrature<f64> {
    Quadrature::with_tolerance(1e-11, 1e-16)
}

/// Normalized Gaussian `f(x) = (pi s^2)^(-3/4) exp(-|x|^2 / (2 s^2))`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianProfile {
    pub width: f64,
}

impl GaussianProfile {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::param("gaussian width must be positive"));
        }
        Ok(GaussianProfile { width })
    }

    /// Closed-form `u~(p)`; the trait method computes it by quadrature.
    pub fn reduced_momentum_exact(&self, p: f64) -> f64 {
        let s = self.width;
        (4.0 * PI).sqrt() * p * (s * s / PI).powf(0.75) * (-p * p * s * s / 2.0).exp()
    }

    fn r_extent(&self) -> f64 {
        13.0 * self.width
    }
}

impl RadialProfile for GaussianProfile {
    fn reduced(&self, r: f64) -> f64 {
        let s = self.width;
        (4.0 * PI).sqrt() * r * (PI * s * s).powf(-0.75) * (-r * r / (2.0 * s * s)).exp()
    }

    fn gaussian_width(&self) -> Option<f64> {
        Some(self.width)
    }

    fn reduced_momentum(&self, p: f64) -> Result<f64> {
        let v = inner_quadrature().integrate(|r| self.reduced(r) * (p * r).sin(), 0.0, self.r_extent())?;
        Ok((2.0 / PI).sqrt() * v.value)
    }

    fn position_form(&self, w: &dyn Fn(f64) -> f64) -> Result<f64> {
        let q = Quadrature::with_tolerance(1e-12, 1e-300);
        Ok(q.integrate(|r| w(r) * self.reduced(r).powi(2), 0.0, self.r_extent())?.value)
    }

    fn momentum_form(&self, s: &dyn Fn(f64) -> f64) -> Result<f64> {
        let q = Quadrature::with_tolerance(1e-11, 1e-300);
        let pmax = 13.0 / self.width;
        let mut err = None;
        let v = q.integrate(
            |p| match self.reduced_momentum(p) {
                Ok(u) => s(p) * u * u,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            pmax,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(v.value),
        }
    }
}

/// Smooth compactly supported bump `u(r) = A exp(-1/(1 - ((r-c)/w)^2))` on `(c-w, c+w)`.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedBump {
    pub center: f64,
    pub half_width: f64,
    amplitude: f64,
}

impl ShiftedBump {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !(center > half_width) {
            return Err(Error::param("bump needs center > half_width > 0"));
        }
        let mut b = ShiftedBump {
            center,
            half_width,
            amplitude: 1.0,
        };
        let n = b.norm_squared()?;
        b.amplitude = 1.0 / n.sqrt();
        Ok(b)
    }
}

impl RadialProfile for ShiftedBump {
    fn reduced(&self, r: f64) -> f64 {
        let x = (r - self.center) / self.half_width;
        if x.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / (1.0 - x * x)).exp()
        }
    }

    /// Trapezoid rule: the bump and all its derivatives vanish at the support
    /// ends, so the rule converges faster than any power of the node count.
    fn reduced_momentum(&self, p: f64) -> Result<f64> {
        const NODES: usize = 4096;
        let a = self.center - self.half_width;
        let h = 2.0 * self.half_width / NODES as f64;
        let v: f64 = (1..NODES)
            .map(|k| {
                let r = a + h * k as f64;
                self.reduced(r) * (p * r).sin()
            })
            .sum();
        Ok((2.0 / PI).sqrt() * v * h)
    }

    fn position_form(&self, w: &dyn Fn(f64) -> f64) -> Result<f64> {
        let (a, b) = (self.center - self.half_width, self.center + self.half_width);
        let q = Quadrature::with_tolerance(1e-12, 1e-300);
        Ok(q.integrate(|r| w(r) * self.reduced(r).powi(2), a, b)?.value)
    }

    /// Truncated at `p = 200 / w`; the integrand is nonnegative for the
    /// symbols used here, so the result is a lower bound.
    fn momentum_form(&self, s: &dyn Fn(f64) -> f64) -> Result<f64> {
        let q = Quadrature::with_tolerance(1e-9, 1e-14);
        let pmax = 200.0 / self.half_width;
        let mut err = None;
        let v = q.integrate(
            |p| match self.reduced_momentum(p) {
                Ok(u) => s(p) * u * u,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            pmax,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(v.value),
        }
    }
}

/// Piecewise-linear reduced function through `(0, 0)`, the samples, and a
/// final zero one spacing beyond the last sample.
#[derive(Clone, Debug)]
pub struct SampledProfile {
    r: Vec<f64>,
    u: Vec<f64>,
}

impl SampledProfile {
    pub fn new(r: &[f64], u: &[f64]) -> Result<Self> {
        if r.len() != u.len() || r.len() < 2 {
            return Err(Error::param("sampled profile needs matching r and u of length >= 2"));
        }
        if r[0] <= 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("sample radii must be positive and increasing"));
        }
        let n = r.len();
        let mut rr = Vec::with_capacity(n + 2);
        let mut uu = Vec::with_capacity(n + 2);
        rr.push(0.0);
        uu.push(0.0);
        rr.extend_from_slice(r);
        uu.extend_from_slice(u);
        rr.push(2.0 * r[n - 1] - r[n - 2]);
        uu.push(0.0);
        Ok(SampledProfile { r: rr, u: uu })
    }

    fn min_spacing(&self) -> f64 {
        self.r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

impl RadialProfile for SampledProfile {
    fn reduced(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r <= 0.0 || r >= self.r[n - 1] {
            return 0.0;
        }
        let i = self.r.partition_point(|&x| x <= r) - 1;
        let t = (r - self.r[i]) / (self.r[i + 1] - self.r[i]);
        self.u[i] * (1.0 - t) + self.u[i + 1] * t
    }

    /// Exact transform of the piecewise-linear function. The boundary terms
    /// telescope to zero because `u` vanishes at both ends, leaving
    /// `sqrt(2/pi) p^-2 sum_k slope_k (sin p r_(k+1) - sin p r_k)`.
    fn reduced_momentum(&self, p: f64) -> Result<f64> {
        if p == 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for k in 0..self.r.len() - 1 {
            let (a, b) = (self.r[k], self.r[k + 1]);
            let slope = (self.u[k + 1] - self.u[k]) / (b - a);
            acc += slope * 2.0 * (0.5 * p * (a + b)).cos() * (0.5 * p * (b - a)).sin();
        }
        Ok((2.0 / PI).sqrt() * acc / (p * p))
    }

    fn position_form(&self, w: &dyn Fn(f64) -> f64) -> Result<f64> {
        // Gauss-Legendre 5 points per segment, exact for polynomial weights up to degree 7
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let mut acc = 0.0;
        for k in 0..self.r.len() - 1 {
            let (a, b) = (self.r[k], self.r[k + 1]);
            let (ua, ub) = (self.u[k], self.u[k + 1]);
            let h = 0.5 * (b - a);
            let m = 0.5 * (a + b);
            for j in 0..5 {
                let r = m + h * X[j];
                let t = (r - a) / (b - a);
                let u = ua * (1.0 - t) + ub * t;
                acc += W[j] * h * w(r) * u * u;
            }
        }
        Ok(acc)
    }

    /// Integrated up to `p = pi / min spacing`; beyond that the transform only
    /// carries interpolation artefacts. Nonnegative symbols give a lower bound.
    fn momentum_form(&self, s: &dyn Fn(f64) -> f64) -> Result<f64> {
        let pmax = PI / self.min_spacing();
        let q = Quadrature {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_subdivisions: 20_000,
        };
        let v = q.integrate(
            |p| {
                let u = self.reduced_momentum(p).unwrap_or(0.0);
                s(p) * u * u
            },
            0.0,
            pmax,
        )?;
        Ok(v.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_transform_matches_closed_form() {
        let g = GaussianProfile::new(1.3).unwrap();
        for &p in &[0.1, 0.7, 2.0, 5.0] {
            let a = g.reduced_momentum(p).unwrap();
            let b = g.reduced_momentum_exact(p);
            assert!((a - b).abs() < 1e-11, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn sampled_transform_of_fine_gaussian() {
        let g = GaussianProfile::new(1.0).unwrap();
        let r: Vec<f64> = (1..=2000).map(|i| i as f64 * 0.005).collect();
        let u: Vec<f64> = r.iter().map(|&x| g.reduced(x)).collect();
        let s = SampledProfile::new(&r, &u).unwrap();
        for &p in &[0.3, 1.0, 3.0] {
            let a = s.reduced_momentum(p).unwrap();
            let b = g.reduced_momentum_exact(p);
            assert!((a - b).abs() < 1e-5, "p={p}: {a} vs {b}");
        }
        assert!((s.norm_squared().unwrap() - 1.0).abs() < 1e-5);
    }

}
