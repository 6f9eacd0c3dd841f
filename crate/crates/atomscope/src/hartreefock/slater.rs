//! Slater radial potentials, angular coefficients and the direct and
//! exchange operators of the configuration-averaged functional.
//!
//! All two-electron quantities share one discrete kernel,
//! `V^k(a, b)(r_i) = sum_j w_j a_j b_j r_<^k / r_>^(k+1)` (with `1/r_i` on the
//! diagonal), so that the operators below are exact derivatives of the
//! discrete energy.

use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{FunctionKind, RadialFunction, RadialGrid};

/// One occupied `(n, l)` shell.
#[derive(Clone, Debug)]
pub struct Shell {
    pub n: u32,
    pub l: u32,
    /// Electrons in the shell, `0 < occ <= q (2l + 1)`.
    pub occ: f64,
    pub eps: f64,
    pub u: RadialFunction,
}

/// Serializable part of a shell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSummary {
    pub n: u32,
    pub l: u32,
    pub occ: f64,
    pub eps: f64,
}

impl Shell {
    pub fn capacity(&self, q: u32) -> f64 {
        capacity(self.l, q)
    }

    pub fn is_closed(&self, q: u32) -> bool {
        self.occ >= self.capacity(q) - 1e-12
    }

    pub fn summary(&self) -> ShellSummary {
        ShellSummary {
            n: self.n,
            l: self.l,
            occ: self.occ,
            eps: self.eps,
        }
    }

    /// Spectroscopic label such as `2p`.
    pub fn label(&self) -> String {
        format!("{}{}", self.n, l_letter(self.l))
    }
}

pub fn l_letter(l: u32) -> char {
    "spdfghiklmnoq".chars().nth(l as usize).unwrap_or('x')
}

pub fn capacity(l: u32, q: u32) -> f64 {
    (q * (2 * l + 1)) as f64
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `(l1 k l2; 0 0 0)^2`; zero unless the triangle and parity rules hold.
pub fn angular_coefficient(l1: u32, k: u32, l2: u32) -> f64 {
    let j = l1 + k + l2;
    if j % 2 == 1 || k > l1 + l2 || k < l1.abs_diff(l2) {
        return 0.0;
    }
    let g = j / 2;
    let ratio = factorial(j - 2 * l1) * factorial(j - 2 * k) * factorial(j - 2 * l2) / factorial(j + 1);
    let m = factorial(g) / (factorial(g - l1) * factorial(g - k) * factorial(g - l2));
    ratio * m * m
}

/// `(k, A_k)` for every multipole coupling `l1` and `l2`.
pub(crate) fn couplings(l1: u32, l2: u32) -> Vec<(u32, f64)> {
    (l1.abs_diff(l2)..=l1 + l2)
        .step_by(2)
        .map(|k| (k, angular_coefficient(l1, k, l2)))
        .filter(|(_, a)| *a > 0.0)
        .collect()
}

/// `(2l + 1)/(g - 1)`, the same-shell exchange weight; zero for `g = 1`.
pub(crate) fn same_shell_weight(l: u32, q: u32) -> f64 {
    let g = capacity(l, q);
    if g > 1.0 {
        (2 * l + 1) as f64 / (g - 1.0)
    } else {
        0.0
    }
}

/// `V^k` for the pair density `g_j = w_j a_j b_j` in `O(n)`.
pub(crate) fn slater_from_pair(g: &[f64], r: &[f64], k: u32) -> Vec<f64> {
    let n = r.len();
    let ki = k as i32;
    let mut inner = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += g[i] * r[i].powi(ki);
        inner[i] = acc;
    }
    let mut out = vec![0.0; n];
    let mut outer = 0.0;
    for i in (0..n).rev() {
        out[i] = inner[i] / r[i].powi(ki + 1) + outer * r[i].powi(ki);
        outer += g[i] / r[i].powi(ki + 1);
    }
    out
}

/// `V^k(a, b)(r_i) = sum_j w_j a_j b_j r_<^k / r_>^(k+1)`.
pub fn slater_potential(grid: &RadialGrid, a: &[f64], b: &[f64], k: u32) -> Vec<f64> {
    let g: Vec<f64> = grid.weights().iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).collect();
    slater_from_pair(&g, grid.r(), k)
}

/// Kernel matrices `r_<^k / r_>^(k+1)`, built on first use.
#[derive(Debug)]
pub(crate) struct KernelCache {
    r: Vec<f64>,
    mats: Vec<Option<Mat<f64>>>,
}

impl KernelCache {
    pub(crate) fn new(r: &[f64]) -> Self {
        KernelCache {
            r: r.to_vec(),
            mats: Vec::new(),
        }
    }

    pub(crate) fn get(&mut self, k: u32) -> &Mat<f64> {
        let k = k as usize;
        if self.mats.len() <= k {
            self.mats.resize_with(k + 1, || None);
        }
        if self.mats[k].is_none() {
            let r = &self.r;
            let n = r.len();
            self.mats[k] = Some(Mat::from_fn(n, n, |i, j| {
                let (lo, hi) = if r[i] <= r[j] { (r[i], r[j]) } else { (r[j], r[i]) };
                (lo / hi).powi(k as i32) / hi
            }));
        }
        self.mats[k].as_ref().unwrap()
    }
}

fn check_shells(shells: &[Shell]) -> Result<Arc<RadialGrid>> {
    let first = shells.first().ok_or_else(|| Error::param("at least one shell is required"))?;
    let grid = first.u.grid().clone();
    for s in shells {
        if s.u.grid() != &grid {
            return Err(Error::GridMismatch("shells live on different grids".into()));
        }
        if s.u.kind() != FunctionKind::ReducedOrbital {
            return Err(Error::Kind {
                expected: FunctionKind::ReducedOrbital.to_string(),
                found: s.u.kind().to_string(),
            });
        }
    }
    Ok(grid)
}

/// Spherically averaged Hartree potential `sum_i f_i V^0(u_i, u_i)`.
pub fn direct_potential(shells: &[Shell]) -> Result<RadialFunction> {
    let grid = check_shells(shells)?;
    let mut v = vec![0.0; grid.len()];
    for s in shells {
        let y = slater_potential(&grid, s.u.values(), s.u.values(), 0);
        v.iter_mut().zip(&y).for_each(|(a, b)| *a += s.occ * b);
    }
    RadialFunction::new(grid, v, FunctionKind::Potential)
}

/// Exchange operator of shell `target` applied to `f`:
/// `V^0_tt f + (f_t - 1) c_t sum_{k>0} A_k V^k_tt f + sum_{s != t} (f_s/q) sum_k A_k V^k(u_s, f) u_s`.
///
/// The own-shell part is the local potential obtained by differentiating the
/// averaged energy; for a single electron it equals the direct term exactly.
/// The result is returned as samples of a generic function (kind `Potential`).
pub fn exchange_apply(shells: &[Shell], q: u32, target: usize, f: &[f64]) -> Result<RadialFunction> {
    let grid = check_shells(shells)?;
    let t = shells
        .get(target)
        .ok_or_else(|| Error::param(format!("no shell with index {target}")))?;
    if f.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} samples on a {}-point grid", f.len(), grid.len())));
    }
    let ut = t.u.values();
    let mut local = slater_potential(&grid, ut, ut, 0);
    let c = (t.occ - 1.0) * same_shell_weight(t.l, q);
    for (k, a) in couplings(t.l, t.l) {
        if k > 0 && c != 0.0 {
            let y = slater_potential(&grid, ut, ut, k);
            local.iter_mut().zip(&y).for_each(|(x, v)| *x += c * a * v);
        }
    }
    let mut out: Vec<f64> = local.iter().zip(f).map(|(v, x)| v * x).collect();
    for (i, s) in shells.iter().enumerate() {
        if i == target {
            continue;
        }
        let us = s.u.values();
        for (k, a) in couplings(s.l, t.l) {
            let y = slater_potential(&grid, us, f, k);
            let coef = s.occ / q as f64 * a;
            out.iter_mut().zip(y.iter().zip(us)).for_each(|(o, (v, u))| *o += coef * v * u);
        }
    }
    RadialFunction::new(grid, out, FunctionKind::Potential)
}
