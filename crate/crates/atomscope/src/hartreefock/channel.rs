//! Per-`l` realization of the kinetic operator on a radial grid.
//!
//! Orbitals are stored as reduced functions `u(r_i)`. Internally every dense
//! operator acts on `v_i = sqrt(w_i) u_i`, where `w_i` are the grid's
//! quadrature weights, so that the grid inner product becomes the Euclidean
//! one and every operator is a plain symmetric matrix. The second derivative
//! is the three-point difference on the (possibly nonuniform) node set with a
//! ghost node at the origin and a Dirichlet node one spacing beyond `r_max`:
//! `(L u)_i = (u_i - u_{i+1})/h_+ + (u_i - u_{i-1})/h_-`. In `v` this reads
//! `W^-1/2 L W^-1/2`, which is symmetric on any grid.

use std::sync::Arc;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::RadialGrid;

/// Relativistic `alpha^-1 (sqrt(p^2 + alpha^-2) - alpha^-1)` or `p^2 / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KineticMode {
    #[default]
    Relativistic,
    Nonrelativistic,
}

impl std::fmt::Display for KineticMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KineticMode::Relativistic => "relativistic",
            KineticMode::Nonrelativistic => "nonrelativistic",
        })
    }
}

/// Dense kinetic matrix of one angular-momentum channel.
#[derive(Clone, Debug)]
pub struct ChannelOperator {
    pub l: u32,
    pub alpha: f64,
    pub mode: KineticMode,
    grid: Arc<RadialGrid>,
    sqrt_w: Vec<f64>,
    /// Kinetic matrix in the `v` representation.
    matrix: Mat<f64>,
    /// Spectrum and eigenvectors of the discrete `-d^2/dr^2 + l(l+1)/r^2`.
    laplacian_values: Vec<f64>,
    laplacian_vectors: Mat<f64>,
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub(crate) fn eigh(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|err| Error::Eigen(format!("{err:?}")))?;
    let s = e.S().column_vector();
    let values: Vec<f64> = (0..m.nrows()).map(|i| s[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    Ok((values, e.U().to_owned()))
}

/// `alpha^-1 (sqrt(lambda + alpha^-2) - alpha^-1)` without cancellation.
fn relativistic_symbol(lambda: f64, alpha: f64) -> f64 {
    lambda / ((alpha * alpha * lambda + 1.0).sqrt() + 1.0)
}

pub fn build_channel_kinetic(grid: Arc<RadialGrid>, l: u32, alpha: f64, mode: KineticMode) -> Result<ChannelOperator> {
    if mode == KineticMode::Relativistic && !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param(format!("relativistic kinetic energy needs alpha > 0, got {alpha}")));
    }
    if !grid.scheme().has_origin_map() {
        return Err(Error::param(format!(
            "the channel operator needs a grid mapped from the origin, got {}",
            grid.scheme()
        )));
    }
    if l > 12 {
        return Err(Error::param(format!("angular momentum {l} is out of range")));
    }
    let r = grid.r();
    let n = r.len();
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    if grid.weights().iter().any(|&w| !(w > 0.0)) {
        return Err(Error::param("grid weights must be positive for the channel operator"));
    }
    let node = |i: isize| -> f64 {
        if i < 0 {
            0.0
        } else if (i as usize) < n {
            r[i as usize]
        } else {
            2.0 * r[n - 1] - r[n - 2]
        }
    };
    let ll = (l * (l + 1)) as f64;
    let mut a = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let hp = node(i as isize + 1) - node(i as isize);
        let hm = node(i as isize) - node(i as isize - 1);
        a[(i, i)] = (1.0 / hp + 1.0 / hm) / (sqrt_w[i] * sqrt_w[i]) + ll / (r[i] * r[i]);
        if i + 1 < n {
            let off = -1.0 / hp / (sqrt_w[i] * sqrt_w[i + 1]);
            a[(i, i + 1)] = off;
            a[(i + 1, i)] = off;
        }
    }
    let (values, vectors) = eigh(&a)?;
    let symbol: Vec<f64> = values
        .iter()
        .map(|&lam| match mode {
            KineticMode::Relativistic => relativistic_symbol(lam, alpha),
            KineticMode::Nonrelativistic => 0.5 * lam,
        })
        .collect();
    let scaled = Mat::<f64>::from_fn(n, n, |i, j| vectors[(i, j)] * symbol[j]);
    let mut matrix = &scaled * vectors.transpose();
    // exact symmetry, so that later eigensolves see a symmetric input
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = m;
            matrix[(j, i)] = m;
        }
    }
    Ok(ChannelOperator {
        l,
        alpha,
        mode,
        grid,
        sqrt_w,
        matrix,
        laplacian_values: values,
        laplacian_vectors: vectors,
    })
}

impl ChannelOperator {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Kinetic matrix acting on `v = sqrt(w) u`.
    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn laplacian_eigenvalues(&self) -> &[f64] {
        &self.laplacian_values
    }

    pub fn laplacian_eigenvectors(&self) -> &Mat<f64> {
        &self.laplacian_vectors
    }

    pub(crate) fn to_v(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.sqrt_w).map(|(a, s)| a * s).collect()
    }

    pub(crate) fn to_u(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.sqrt_w).map(|(a, s)| a / s).collect()
    }

    /// `T u` sampled at the nodes.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let v = self.to_v(u);
        let tv = mat_vec(&self.matrix, &v);
        self.to_u(&tv)
    }

    /// `<u, T u>` in the grid inner product.
    pub fn expectation(&self, u: &[f64]) -> f64 {
        let v = self.to_v(u);
        quadratic(&self.matrix, &v)
    }

    /// Largest absolute asymmetry `|T_ij - T_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }
}

pub(crate) fn mat_vec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    let mut out = vec![0.0; n];
    for j in 0..m.ncols() {
        let c = m.col(j);
        let vj = v[j];
        if vj == 0.0 {
            continue;
        }
        for (o, x) in out.iter_mut().zip(c.iter()) {
            *o += x * vj;
        }
    }
    out
}

pub(crate) fn quadratic(m: &Mat<f64>, v: &[f64]) -> f64 {
    mat_vec(m, v).iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Flips `v` so that its first non-negligible component is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Lowest `count` eigenpairs `(eps, u)` of `T + V` with a local potential
/// `V(r_i)`; each `u` is grid-normalized with a positive first component.
pub fn lowest_eigenpairs(op: &ChannelOperator, potential: &[f64], count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = op.matrix.nrows();
    if count == 0 || count > n {
        return Err(Error::param(format!("eigenpair count {count} outside 1..={n}")));
    }
    if potential.len() != n {
        return Err(Error::GridMismatch(format!("potential has {} samples, grid {n}", potential.len())));
    }
    let mut h = op.matrix.clone();
    for (i, v) in potential.iter().enumerate() {
        h[(i, i)] += v;
    }
    let (values, vectors) = eigh(&h)?;
    Ok((0..count)
        .map(|k| {
            let mut v: Vec<f64> = vectors.col(k).iter().copied().collect();
            fix_sign(&mut v);
            (values[k], op.to_u(&v))
        })
        .collect())
}

/// Lowest eigenvalue of `alpha^-1 T - (kappa/alpha)/r` for each `kappa`.
pub fn criticality_scan(grid: Arc<RadialGrid>, alpha: f64, kappas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let op = build_channel_kinetic(grid.clone(), 0, alpha, KineticMode::Relativistic)?;
    kappas
        .iter()
        .map(|&k| {
            let v: Vec<f64> = grid.r().iter().map(|r| -k / alpha / r).collect();
            Ok((k, lowest_eigenpairs(&op, &v, 1)?[0].0))
        })
        .collect()
}
