//! Radial grids, spherically averaged functions, Newton-theorem electrostatics,
//! the Coulomb inner product and screened potentials.
//!
//! Every integrand handled here vanishes at the origin (`4 pi r^2 rho`,
//! `u^2`, `Q^2/r^2`, ...), so the grid carries an implicit node `r_0 = 0`
//! with value zero. Integrals use, on each interval, the cubic through the
//! four nearest nodes; the rule is exact for cubics vanishing at the origin on
//! any node distribution.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

/// Node distribution of a [`RadialGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridScheme {
    /// `r_i = i r_max / n`.
    Uniform,
    /// Geometric progression from `first_fraction * r_max` to `r_max`.
    LogUniform { first_fraction: f64 },
    /// `r = scale (e^x - 1)` with `x` uniform; uniform near the nucleus, geometric far out.
    Exponential { scale: f64 },
}

impl GridScheme {
    pub const DEFAULT_LOG_FIRST: f64 = 1e-6;

    pub fn log() -> Self {
        GridScheme::LogUniform {
            first_fraction: Self::DEFAULT_LOG_FIRST,
        }
    }

    /// True when consecutive nodes are equally spaced in a variable `x` with
    /// `r(0) = 0`, which the finite-difference kinetic operator requires.
    pub fn has_origin_map(&self) -> bool {
        !matches!(self, GridScheme::LogUniform { .. })
    }
}

impl fmt::Display for GridScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridScheme::Uniform => write!(f, "uniform"),
            GridScheme::LogUniform { .. } => write!(f, "log"),
            GridScheme::Exponential { .. } => write!(f, "exp"),
        }
    }
}

impl FromStr for GridScheme {
    type Err = Error;

    /// Accepts `uniform`, `log`, `exp` and `exp:<scale>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" => Ok(GridScheme::Uniform),
            "log" | "log-uniform" => Ok(GridScheme::log()),
            "exp" => Ok(GridScheme::Exponential { scale: 0.0 }),
            _ => {
                if let Some(v) = s.strip_prefix("exp:") {
                    let scale: f64 = v
                        .parse()
                        .map_err(|_| Error::param(format!("bad exp scale '{v}'")))?;
                    Ok(GridScheme::Exponential { scale })
                } else {
                    Err(Error::param(format!("unknown grid scheme '{s}'")))
                }
            }
        }
    }
}

/// One interval's share of the cubic rule: four node indices into the
/// extended node list (index 0 is the origin) and their weights.
#[derive(Clone, Copy, Debug)]
struct Segment {
    nodes: [usize; 4],
    weights: [f64; 4],
}

/// Strictly increasing positive radii with quadrature weights for `int f dr`.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    scheme: GridScheme,
    r: Vec<f64>,
    w: Vec<f64>,
    segments: Vec<Segment>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.r == other.r
    }
}

/// Builds a grid; see [`RadialGrid::new`].
pub fn make_grid(r_max: f64, n: usize, scheme: GridScheme) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(r_max, n, scheme).map(Arc::new)
}

fn lagrange_segment_weights(x: [f64; 4], a: f64, b: f64) -> [f64; 4] {
    // three-point Gauss-Legendre integrates the cubic basis exactly
    const G: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const GW: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let mut out = [0.0; 4];
    for (g, gw) in G.iter().zip(GW) {
        let t = m + h * g;
        for j in 0..4 {
            let mut l = 1.0;
            for k in 0..4 {
                if k != j {
                    l *= (t - x[k]) / (x[j] - x[k]);
                }
            }
            out[j] += gw * h * l;
        }
    }
    out
}

impl RadialGrid {
    /// `n >= 16` points ending at `r_max`.
    pub fn new(r_max: f64, n: usize, scheme: GridScheme) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::param("r_max must be positive and finite"));
        }
        if n < 16 {
            return Err(Error::param(format!("grid needs at least 16 points, got {n}")));
        }
        let r: Vec<f64> = match scheme {
            GridScheme::Uniform => (1..=n).map(|i| r_max * i as f64 / n as f64).collect(),
            GridScheme::LogUniform { first_fraction } => {
                if !(first_fraction > 0.0 && first_fraction < 1.0) {
                    return Err(Error::param("log grid first fraction must lie in (0, 1)"));
                }
                let r0 = r_max * first_fraction;
                let ratio = (r_max / r0).ln() / (n - 1) as f64;
                (0..n).map(|i| r0 * (ratio * i as f64).exp()).collect()
            }
            GridScheme::Exponential { scale } => {
                if !(scale > 0.0) || !scale.is_finite() {
                    return Err(Error::param("exponential grid scale must be positive"));
                }
                let xmax = (r_max / scale).ln_1p();
                (1..=n).map(|i| scale * (xmax * i as f64 / n as f64).exp_m1()).collect()
            }
        };
        let mut r = r;
        r[n - 1] = r_max;
        if r.windows(2).any(|w| w[1] <= w[0]) || r[0] <= 0.0 {
            return Err(Error::param("grid parameters give non-increasing radii"));
        }
        Self::from_radii(scheme, r)
    }

    fn from_radii(scheme: GridScheme, r: Vec<f64>) -> Result<Self> {
        let n = r.len();
        let ext = |i: usize| if i == 0 { 0.0 } else { r[i - 1] };
        let mut segments = Vec::with_capacity(n);
        let mut w = vec![0.0; n];
        // on geometric grids the first node sits far from the origin relative
        // to the local spacing; the origin then only enters through a linear
        // piece on [0, r_1] to avoid extrapolating a cubic
        let coarse_origin = r[0] > 2.0 * (r[1] - r[0]);
        let first = usize::from(coarse_origin);
        for k in 0..n {
            if k == 0 && coarse_origin {
                let weights = [0.0, 0.5 * r[0], 0.0, 0.0];
                w[0] += weights[1];
                segments.push(Segment {
                    nodes: [0, 1, 2, 3],
                    weights,
                });
                continue;
            }
            let start = if k + 2 > n { n - 3 } else { k.saturating_sub(1).max(first) };
            let nodes = [start, start + 1, start + 2, start + 3];
            let x = [ext(nodes[0]), ext(nodes[1]), ext(nodes[2]), ext(nodes[3])];
            let weights = lagrange_segment_weights(x, ext(k), ext(k + 1));
            for j in 0..4 {
                if nodes[j] > 0 {
                    w[nodes[j] - 1] += weights[j];
                }
            }
            segments.push(Segment { nodes, weights });
        }
        if w.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::param("grid too irregular: nonpositive quadrature weight"));
        }
        Ok(RadialGrid {
            scheme,
            r,
            w,
            segments,
        })
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Weights for `int_0^r_max f(r) dr`.
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// `int_0^r_max f dr` for samples `f(r_i)`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        f.iter().zip(&self.w).map(|(a, b)| a * b).sum()
    }

    /// `int_0^r_max f(r) 4 pi r^2 dr`.
    pub fn integrate_volume(&self, f: &[f64]) -> f64 {
        4.0 * PI * f.iter().zip(&self.w).zip(&self.r).map(|((a, b), r)| a * b * r * r).sum::<f64>()
    }

    /// `C_i = int_0^r_i f dr` at every node.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.len());
        let val = |i: usize| if i == 0 { 0.0 } else { f[i - 1] };
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for s in &self.segments {
            acc += (0..4).map(|j| s.weights[j] * val(s.nodes[j])).sum::<f64>();
            out.push(acc);
        }
        out
    }

    /// `int_r_i^r_max f dr` at every node.
    pub fn tail(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.len());
        let val = |i: usize| if i == 0 { 0.0 } else { f[i - 1] };
        let n = self.len();
        let mut out = vec![0.0; n];
        let mut acc = 0.0;
        for k in (1..n).rev() {
            let s = &self.segments[k];
            acc += (0..4).map(|j| s.weights[j] * val(s.nodes[j])).sum::<f64>();
            out[k - 1] = acc;
        }
        out
    }

    /// Index `i` with `r_(i-1) <= x < r_i` in the extended list (origin = 0),
    /// clamped to the last interval.
    fn interval(&self, x: f64) -> usize {
        let k = self.r.partition_point(|&v| v <= x);
        k.min(self.len() - 1)
    }

    /// Cubic Hermite interpolation of a cumulative integral `c` whose
    /// integrand `f` is known at the nodes (and vanishes at the origin).
    pub fn interpolate_cumulative(&self, c: &[f64], f: &[f64], x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.r_max() {
            return *c.last().unwrap();
        }
        let k = self.interval(x);
        let (x0, c0, f0) = if k == 0 { (0.0, 0.0, 0.0) } else { (self.r[k - 1], c[k - 1], f[k - 1]) };
        let (x1, c1, f1) = (self.r[k], c[k], f[k]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        h00 * c0 + h10 * h * f0 + h01 * c1 + h11 * h * f1
    }

    /// Local cubic Lagrange interpolation of nodal values (zero at the origin
    /// is not assumed; the first interval extrapolates from nodes 1..4).
    pub fn interpolate(&self, f: &[f64], x: f64) -> f64 {
        let n = self.len();
        let k = self.interval(x).max(1);
        let start = (k.saturating_sub(2)).min(n - 4);
        let xs = &self.r[start..start + 4];
        let ys = &f[start..start + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let mut l = 1.0;
            for m in 0..4 {
                if m != j {
                    l *= (x - xs[m]) / (xs[j] - xs[m]);
                }
            }
            acc += l * ys[j];
        }
        acc
    }
}

/// What a [`RadialFunction`] represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    /// Number density `rho(r)`, nonnegative unless built as signed.
    Density,
    /// Potential `V(r)`.
    Potential,
    /// Reduced orbital `u(r) = r R(r)`, normalized in `int u^2 dr`.
    ReducedOrbital,
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionKind::Density => write!(f, "density"),
            FunctionKind::Potential => write!(f, "potential"),
            FunctionKind::ReducedOrbital => write!(f, "reduced-orbital"),
        }
    }
}

/// Samples of a radial function on a shared grid.
#[derive(Clone, Debug)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    kind: FunctionKind,
}

impl RadialFunction {
    /// Checked constructor: densities must be nonnegative, reduced orbitals
    /// normalized to `1e-10`.
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, kind: FunctionKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("radial function has non-finite samples"));
        }
        match kind {
            FunctionKind::Density if values.iter().any(|&v| v < 0.0) => {
                return Err(Error::param("density samples must be nonnegative; use signed_density"));
            }
            FunctionKind::ReducedOrbital => {
                let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
                let norm = grid.integrate(&sq);
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::param(format!("reduced orbital norm {norm} differs from 1")));
                }
            }
            _ => {}
        }
        Ok(RadialFunction { grid, values, kind })
    }

    /// A density of either sign (differences of densities, test charges).
    pub fn signed_density(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("length differs from grid".into()));
        }
        Ok(RadialFunction {
            grid,
            values,
            kind: FunctionKind::Density,
        })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, kind: FunctionKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.r().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, kind)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    fn require(&self, kind: FunctionKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Kind {
                expected: kind.to_string(),
                found: self.kind.to_string(),
            });
        }
        Ok(())
    }

    fn same_grid(&self, other: &RadialFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("functions live on different grids".into()))
        }
    }

    /// `4 pi r^2 rho(r)`, the radial charge density.
    fn shell_charge(&self) -> Vec<f64> {
        self.grid
            .r()
            .iter()
            .zip(&self.values)
            .map(|(r, v)| 4.0 * PI * r * r * v)
            .collect()
    }

    /// `Q(r_i) = int_(|y|<r_i) rho`.
    pub fn cumulative_charge(&self) -> Result<Vec<f64>> {
        self.require(FunctionKind::Density)?;
        Ok(self.grid.cumulative(&self.shell_charge()))
    }

    /// `int rho` over the box.
    pub fn total_charge(&self) -> Result<f64> {
        self.require(FunctionKind::Density)?;
        Ok(self.grid.integrate(&self.shell_charge()))
    }

    /// `Q(x)` between nodes by cubic Hermite interpolation.
    pub fn charge_within(&self, x: f64) -> Result<f64> {
        let c = self.cumulative_charge()?;
        Ok(self.grid.interpolate_cumulative(&c, &self.shell_charge(), x))
    }

    /// Writes `r,value` with 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_named(path, "value")
    }

    /// As [`RadialFunction::write_csv`] with a custom name for the value column.
    pub fn write_csv_named(&self, path: &Path, column: &str) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut s = format!("r,{column}\n");
        for (r, v) in self.grid.r().iter().zip(&self.values) {
            s.push_str(&format!("{:.16e},{:.16e}\n", r, v));
        }
        f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads a file written by [`RadialFunction::write_csv`] onto `grid`.
    pub fn read_csv(path: &Path, grid: Arc<RadialGrid>, kind: FunctionKind) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let r: f64 = rec[0].parse().map_err(|_| Error::Serialization("bad r".into()))?;
            let v: f64 = rec[1].parse().map_err(|_| Error::Serialization("bad value".into()))?;
            if i >= grid.len() || r != grid.r()[i] {
                return Err(Error::GridMismatch(format!("row {i} does not match the grid")));
            }
            values.push(v);
        }
        if kind == FunctionKind::Density {
            Self::signed_density(grid, values)
        } else {
            Self::new(grid, values, kind)
        }
    }
}

/// Evaluator of `(rho * |x|^-1)(x)` at arbitrary radii.
#[derive(Clone, Debug)]
pub struct NewtonPotential {
    grid: Arc<RadialGrid>,
    shell: Vec<f64>,
    moment: Vec<f64>,
    moment_cum: Vec<f64>,
    moment_total: f64,
    q: Vec<f64>,
    p: Vec<f64>,
}

impl NewtonPotential {
    pub fn new(rho: &RadialFunction) -> Result<Self> {
        rho.require(FunctionKind::Density)?;
        let grid = rho.grid.clone();
        let shell = rho.shell_charge();
        let moment: Vec<f64> = shell.iter().zip(grid.r()).map(|(s, r)| s / r).collect();
        let q = grid.cumulative(&shell);
        let p = grid.tail(&moment);
        let moment_cum = grid.cumulative(&moment);
        let moment_total = *moment_cum.last().unwrap();
        Ok(NewtonPotential {
            grid,
            shell,
            moment,
            moment_cum,
            moment_total,
            q,
            p,
        })
    }

    /// Charge inside radius `x`.
    pub fn q(&self, x: f64) -> f64 {
        self.grid.interpolate_cumulative(&self.q, &self.shell, x)
    }

    /// `int_(x < |y| < r_max) rho(y)/|y| dy`.
    pub fn p(&self, x: f64) -> f64 {
        self.moment_total - self.grid.interpolate_cumulative(&self.moment_cum, &self.moment, x)
    }

    /// `Q(x)/x + P(x)`; zero charge gives zero, `x <= 0` is a singularity.
    pub fn at(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Singularity(format!("newton potential at r = {x}")));
        }
        Ok(self.q(x) / x + self.p(x))
    }

    /// Values at the grid nodes.
    pub fn nodal(&self) -> Vec<f64> {
        self.grid
            .r()
            .iter()
            .zip(self.q.iter().zip(&self.p))
            .map(|(r, (q, p))| q / r + p)
            .collect()
    }

    pub fn charge_nodes(&self) -> &[f64] {
        &self.q
    }

    pub fn tail_nodes(&self) -> &[f64] {
        &self.p
    }
}

/// `rho * |x|^-1` on the grid nodes.
pub fn newton_potential(rho: &RadialFunction) -> Result<RadialFunction> {
    let np = NewtonPotential::new(rho)?;
    Ok(RadialFunction {
        grid: rho.grid.clone(),
        values: np.nodal(),
        kind: FunctionKind::Potential,
    })
}

/// `D(f, g) = (1/2) int int f(x) g(y) / |x - y|`.
///
/// Evaluated in field-energy form
/// `(1/2) [int_0^R Q_f Q_g / r^2 dr + Q_f(R) Q_g(R) / R]`, which equals
/// `(1/2) int f (g * |x|^-1)` for functions supported in the box and is
/// symmetric and positive semidefinite at the discrete level.
pub fn coulomb_inner(f: &RadialFunction, g: &RadialFunction) -> Result<f64> {
    f.require(FunctionKind::Density)?;
    g.require(FunctionKind::Density)?;
    f.same_grid(g)?;
    let grid = &f.grid;
    let qf = grid.cumulative(&f.shell_charge());
    let qg = grid.cumulative(&g.shell_charge());
    let integrand: Vec<f64> = qf
        .iter()
        .zip(&qg)
        .zip(grid.r())
        .map(|((a, b), r)| a * b / (r * r))
        .collect();
    let n = grid.len();
    Ok(0.5 * (grid.integrate(&integrand) + qf[n - 1] * qg[n - 1] / grid.r_max()))
}

/// `||f||_C = D(f, f)^(1/2)`.
pub fn coulomb_norm(f: &RadialFunction) -> Result<f64> {
    Ok(coulomb_inner(f, f)?.max(0.0).sqrt())
}

/// `Phi_R(x) = Z/x - int_(|y|<R) rho(y)/|x-y| dy`.
pub fn screened_potential(rho: &RadialFunction, z: f64, r_screen: f64, x: f64) -> Result<f64> {
    ScreenedPotential::new(rho, z)?.at(r_screen, x)
}

/// Reusable evaluator of `Phi_R(x)` and `phi(x)` for one density.
#[derive(Clone, Debug)]
pub struct ScreenedPotential {
    z: f64,
    newton: NewtonPotential,
}

impl ScreenedPotential {
    pub fn new(rho: &RadialFunction, z: f64) -> Result<Self> {
        Ok(ScreenedPotential {
            z,
            newton: NewtonPotential::new(rho)?,
        })
    }

    /// `Phi_R(x)`: Newton's theorem applied to `rho chi_(|y|<R)`.
    pub fn at(&self, r_screen: f64, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Singularity(format!("screened potential at x = {x}")));
        }
        if !(r_screen >= 0.0) {
            return Err(Error::param("screening radius must be nonnegative"));
        }
        let inner = self.newton.q(x.min(r_screen)) / x;
        let shell = if x < r_screen {
            self.newton.p(x) - self.newton.p(r_screen)
        } else {
            0.0
        };
        Ok(self.z / x - inner - shell)
    }

    /// `phi(x) = Z/x - (rho * |x|^-1)(x)`.
    pub fn mean_field(&self, x: f64) -> Result<f64> {
        Ok(self.z / x - self.newton.at(x)?)
    }

    pub fn newton(&self) -> &NewtonPotential {
        &self.newton
    }
}

/// `phi(x) = Z/x - (rho * |x|^-1)(x)`.
pub fn mean_field(rho: &RadialFunction, z: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Singularity(format!("mean field at x = {x}")));
    }
    ScreenedPotential::new(rho, z)?.mean_field(x)
}

/// Both inequalities of the Coulomb-norm splitting estimate at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounormRow {
    pub x: f64,
    pub s: f64,
    pub k: f64,
    pub coulomb_norm: f64,
    /// `(f * |x|^-1)(x)`.
    pub lhs_split: f64,
    /// `int_(|x-y|<s) [f]_+ (1/|x-y| - 1/s) + sqrt2 s^(-1/2) ||f||_C`.
    pub rhs_split: f64,
    pub pass_split: bool,
    /// `int_(|y|<|x|) f(y)/|x-y| dy`.
    pub lhs_annulus: f64,
    /// `int_A [f]_+/|x-y| + 2^(3/2) k^-1 |x|^(-1/2) ||f||_C`.
    pub rhs_annulus: f64,
    pub pass_annulus: bool,
}

/// Evaluates both parts of the Coulomb-norm splitting estimate for a signed
/// radial density `f` at radius `x`.
pub fn counorm_split_check(f: &RadialFunction, x: f64, s: f64, k: f64) -> Result<CounormRow> {
    if !(s > 0.0) || !(k > 0.0 && k < 0.5) || !(x > 0.0) {
        return Err(Error::param("counorm check needs x > 0, s > 0 and 0 < k < 1/2"));
    }
    f.require(FunctionKind::Density)?;
    let grid = f.grid.clone();
    let norm = coulomb_norm(f)?;
    let newton = NewtonPotential::new(f)?;
    let lhs_split = newton.at(x)?;

    let plus: Vec<f64> = f.values.iter().map(|v| v.max(0.0)).collect();
    let plus_fn = RadialFunction::signed_density(grid.clone(), plus.clone())?;
    // shell of radius t around a point at distance x: the kernel averages to
    // (2 pi t / x) [G(min(x+t, s)) - G(|x-t|)]_+ with G(d) = d - d^2/(2s)
    let gfun = |d: f64| d - d * d / (2.0 * s);
    let kernel = |t: f64| {
        let lo = (x - t).abs();
        if lo >= s {
            return 0.0;
        }
        let hi = (x + t).min(s);
        2.0 * PI * t / x * (gfun(hi) - gfun(lo)).max(0.0)
    };
    let r_lo = (x - s).max(0.0);
    let r_hi = (x + s).min(grid.r_max());
    let near = if r_hi > r_lo {
        let mut pts = vec![r_lo];
        if s < x && (s > r_lo && s < r_hi) {
            pts.push(s);
        }
        if x > r_lo && x < r_hi {
            pts.push(x);
        }
        if s - x > r_lo && s - x < r_hi {
            pts.push(s - x);
        }
        pts.push(r_hi);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = Quadrature::with_tolerance(1e-9, 1e-14);
        let mut acc = 0.0;
        for w in pts.windows(2) {
            if w[1] > w[0] {
                acc += q
                    .integrate(|t| kernel(t) * grid.interpolate(&plus, t).max(0.0), w[0], w[1])?
                    .value;
            }
        }
        acc
    } else {
        0.0
    };
    let rhs_split = near + std::f64::consts::SQRT_2 / s.sqrt() * norm;

    let lhs_annulus = newton.q(x) / x;
    let plus_newton = NewtonPotential::new(&plus_fn)?;
    let annulus = (plus_newton.q(x) - plus_newton.q((1.0 - 2.0 * k) * x)) / x;
    let rhs_annulus = annulus + 2f64.powf(1.5) / k / x.sqrt() * norm;
    Ok(CounormRow {
        x,
        s,
        k,
        coulomb_norm: norm,
        lhs_split,
        rhs_split,
        pass_split: lhs_split <= rhs_split,
        lhs_annulus,
        rhs_annulus,
        pass_annulus: lhs_annulus <= rhs_annulus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_example() {
        let g = make_grid(10.0, 100, GridScheme::Uniform).unwrap();
        for (i, r) in g.r().iter().enumerate() {
            assert!((r - 0.1 * (i + 1) as f64).abs() < 1e-12);
        }
        assert!(make_grid(10.0, 15, GridScheme::Uniform).is_err());
    }

    #[test]
    fn volume_is_exact_on_all_schemes() {
        for scheme in [
            GridScheme::Uniform,
            GridScheme::log(),
            GridScheme::Exponential { scale: 0.05 },
        ] {
            let g = make_grid(10.0, 100, scheme).unwrap();
            let ones = vec![1.0; g.len()];
            let v = g.integrate_volume(&ones);
            let exact = 4.0 / 3.0 * PI * 1000.0;
            assert!(((v - exact) / exact).abs() < 1e-12, "{scheme}: {v}");
            assert!(g.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn cumulative_matches_total() {
        let g = make_grid(5.0, 64, GridScheme::log()).unwrap();
        let f: Vec<f64> = g.r().iter().map(|r| r * r * (-r).exp()).collect();
        let c = g.cumulative(&f);
        let t = g.tail(&f);
        let total = g.integrate(&f);
        assert!((c.last().unwrap() - total).abs() < 1e-13);
        for i in 0..g.len() {
            assert!((c[i] + t[i] - total).abs() < 1e-12);
        }
    }
}
