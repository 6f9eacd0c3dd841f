//! Sommerfeld-type envelopes of the TF mean-field potential.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::profile::zeta;
use crate::error::{Error, Result};

/// Constants of the two-sided Sommerfeld bound for given `q`, `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SommerfeldEnvelope {
    pub q: u32,
    pub z: f64,
    /// `(-7 + sqrt 73)/2`.
    pub zeta: f64,
    /// `2 beta0 = pi^(2/3) 3^(-5/3) 2^(-1/3) q^(-2/3)`.
    pub beta0: f64,
    /// `a = beta0^zeta (9 pi / (q beta0^(3/2)) - 1)`.
    pub a: f64,
}

impl SommerfeldEnvelope {
    pub fn new(q: u32, z: f64) -> Result<Self> {
        if q == 0 || !(z > 0.0) {
            return Err(Error::param("Sommerfeld envelope needs q >= 1 and Z > 0"));
        }
        let qf = q as f64;
        let beta0 = 0.5 * PI.powf(2.0 / 3.0) * 3f64.powf(-5.0 / 3.0) * 2f64.powf(-1.0 / 3.0) * qf.powf(-2.0 / 3.0);
        let zeta = zeta();
        let a = beta0.powf(zeta) * (9.0 * PI / (qf * beta0.powf(1.5)) - 1.0);
        Ok(SommerfeldEnvelope { q, z, zeta, beta0, a })
    }

    /// `3^4 pi^2 / (2 q^2)`, the coefficient of the universal `|x|^-4` tail.
    pub fn tail_coefficient(&self) -> f64 {
        81.0 * PI * PI / (2.0 * (self.q * self.q) as f64)
    }

    /// Branch point `beta0 Z^(-1/3)` of the lower envelope.
    pub fn branch_radius(&self) -> f64 {
        self.beta0 * self.z.powf(-1.0 / 3.0)
    }

    pub fn lower(&self, x: f64) -> f64 {
        if x <= self.branch_radius() {
            self.z / x - self.z.powf(4.0 / 3.0) / (2.0 * self.beta0)
        } else {
            let s = 1.0 + self.a * self.z.powf(-self.zeta / 3.0) * x.powf(-self.zeta);
            self.tail_coefficient() / (s * s * x.powi(4))
        }
    }

    pub fn upper(&self, x: f64) -> f64 {
        (self.tail_coefficient() / x.powi(4)).min(self.z / x)
    }
}

/// `(lower, upper)` envelopes at radius `x > 0`.
pub fn sommerfeld_bounds(x: f64, env: &SommerfeldEnvelope) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(Error::param("Sommerfeld bounds need x > 0"));
    }
    Ok((env.lower(x), env.upper(x)))
}

/// Pointwise bounds `rho <= 3^5 pi / (2 q^2) |y|^-6`, `phi <= 3^4 pi^2 / (2 q^2) |y|^-4`.
pub fn est0ext_bounds(x: f64, q: u32) -> (f64, f64) {
    let q2 = (q * q) as f64;
    (243.0 * PI / (2.0 * q2) / x.powi(6), 81.0 * PI * PI / (2.0 * q2) / x.powi(4))
}
