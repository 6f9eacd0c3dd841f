//! Dormand-Prince 5(4) with step-size control and continuous (dense) output.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Tolerances and limits of an integration.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 200_000,
            initial_step: 1e-3,
        }
    }
}

/// One accepted step with its interpolation coefficients.
#[derive(Clone, Debug)]
struct Step<const N: usize> {
    x0: f64,
    h: f64,
    rc: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    fn eval(&self, x: f64) -> [f64; N] {
        let th = (x - self.x0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let rc = &self.rc;
            out[i] = rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
        }
        out
    }
}

/// Why an integration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    /// The end of the requested interval was reached.
    End,
    /// The stop predicate fired inside the last step.
    Event,
}

/// Continuous solution over the integrated interval.
#[derive(Clone, Debug)]
pub struct DenseSolution<const N: usize> {
    steps: Vec<Step<N>>,
    x_start: f64,
    x_end: f64,
    y_end: [f64; N],
    pub stop: Stop,
}

impl<const N: usize> DenseSolution<N> {
    pub fn x_start(&self) -> f64 {
        self.x_start
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    pub fn y_end(&self) -> [f64; N] {
        self.y_end
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    /// Interpolated state; `x` is clamped to the integrated interval.
    pub fn eval(&self, x: f64) -> [f64; N] {
        let forward = self.x_end >= self.x_start;
        let (lo, hi) = if forward { (self.x_start, self.x_end) } else { (self.x_end, self.x_start) };
        let x = x.clamp(lo, hi);
        let idx = if forward {
            self.steps.partition_point(|s| s.x0 + s.h < x)
        } else {
            self.steps.partition_point(|s| s.x0 + s.h > x)
        };
        let idx = idx.min(self.steps.len() - 1);
        self.steps[idx].eval(x)
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(&[f64; N], f64)]) -> [f64; N] {
    let mut out = *y;
    for (k, a) in terms {
        for i in 0..N {
            out[i] += h * a * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
///
/// `stop(x, y)` is checked after each accepted step; when it returns true the
/// crossing is located on the dense output by bisection (assuming the
/// predicate is monotone inside the step) and the solution ends there.
pub fn integrate<const N: usize, F, S>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    opts: &OdeOptions,
    mut stop: S,
) -> Result<DenseSolution<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]) -> bool,
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    let mut h = opts.initial_step.min(span).max(1e-300) * dir;
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut steps = Vec::new();
    let mut last_err = 1e-4f64;
    for _ in 0..opts.max_steps {
        if (x1 - x) * dir <= 0.0 {
            break;
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let k2 = f(x + C[1] * h, &axpy(&y, h, &[(&k1, A2[0])]));
        let k3 = f(x + C[2] * h, &axpy(&y, h, &[(&k1, A3[0]), (&k2, A3[1])]));
        let k4 = f(x + C[3] * h, &axpy(&y, h, &[(&k1, A4[0]), (&k2, A4[1]), (&k3, A4[2])]));
        let k5 = f(
            x + C[4] * h,
            &axpy(&y, h, &[(&k1, A5[0]), (&k2, A5[1]), (&k3, A5[2]), (&k4, A5[3])]),
        );
        let k6 = f(
            x + h,
            &axpy(&y, h, &[(&k1, A6[0]), (&k2, A6[1]), (&k3, A6[2]), (&k4, A6[3]), (&k5, A6[4])]),
        );
        let y_new = axpy(&y, h, &[(&k1, B[0]), (&k3, B[2]), (&k4, B[3]), (&k5, B[4]), (&k6, B[5])]);
        let k7 = f(x + h, &y_new);
        let mut err = 0.0f64;
        for i in 0..N {
            let e = h * (E[0] * k1[i] + E[2] * k3[i] + E[3] * k4[i] + E[4] * k5[i] + E[5] * k6[i] + E[6] * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            if h.abs() < 1e-14 * x.abs().max(1.0) {
                return Err(Error::solver(format!("ODE state became non-finite near x = {x}")));
            }
            continue;
        }
        if err <= 1.0 {
            let mut rc = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                rc[0][i] = y[i];
                rc[1][i] = dy;
                rc[2][i] = bspl;
                rc[3][i] = dy - h * k7[i] - bspl;
                rc[4][i] = h
                    * (D[0] * k1[i] + D[2] * k3[i] + D[3] * k4[i] + D[4] * k5[i] + D[5] * k6[i] + D[6] * k7[i]);
            }
            let step = Step { x0: x, h, rc };
            let x_new = x + h;
            if stop(x_new, &y_new) {
                // locate the event inside this step
                let (mut a, mut b) = (0.0, 1.0);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    let ym = step.eval(x + m * h);
                    if stop(x + m * h, &ym) {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                let xe = x + b * h;
                let ye = step.eval(xe);
                steps.push(step);
                return Ok(DenseSolution {
                    steps,
                    x_start: x0,
                    x_end: xe,
                    y_end: ye,
                    stop: Stop::Event,
                });
            }
            steps.push(step);
            x = x_new;
            y = y_new;
            k1 = k7;
            // PI controller
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 5.0);
            last_err = err.max(1e-4);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h.abs() < 1e-14 * x.abs().max(1.0) {
            return Err(Error::solver(format!("ODE step size underflow at x = {x}")));
        }
    }
    if (x1 - x) * dir > 0.0 {
        return Err(Error::solver(format!(
            "ODE step cap {} reached at x = {x} before {x1}",
            opts.max_steps
        )));
    }
    Ok(DenseSolution {
        steps,
        x_start: x0,
        x_end: x,
        y_end: y,
        stop: Stop::End,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_dense_output() {
        let sol = integrate(|_x, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &OdeOptions::default(), |_, _| false)
            .unwrap();
        assert_eq!(sol.stop, Stop::End);
        for &x in &[0.3, 2.7, 5.0, 9.99] {
            let y = sol.eval(x);
            assert!((y[0] - f64::sin(x)).abs() < 1e-9, "x={x}");
        }
        assert!((sol.y_end()[0] - 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn backward_and_event() {
        let sol = integrate(|_x, y: &[f64; 1]| [-y[0]], 0.0, [1.0], -3.0, &OdeOptions::default(), |_, y| y[0] > 10.0)
            .unwrap();
        assert_eq!(sol.stop, Stop::Event);
        assert!((sol.x_end() + 10f64.ln()).abs() < 1e-9);
        assert!((sol.eval(-1.0)[0] - 1f64.exp()).abs() < 1e-10);
    }
}
