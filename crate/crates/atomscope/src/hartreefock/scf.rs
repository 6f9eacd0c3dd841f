//! Self-consistent field iteration for the configuration-averaged functional.
//!
//! The iterate is the list of occupied orbitals (in the `v = sqrt(w) u`
//! representation). Each step rebuilds the Hartree potential and the
//! exchange operators from it, re-solves the channels and refills by aufbau.
//! Closed shells of one `l` share the channel Fock operator and come out of a
//! single eigensolve; an open shell gets its own operator (own-shell terms as
//! local potentials) and is solved in the complement of the lower shells of
//! its channel. The orbitals are then mixed: plain damping first, Anderson
//! acceleration afterwards.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::channel::{build_channel_kinetic, eigh, fix_sign, mat_vec, quadratic, ChannelOperator, KineticMode};
use super::slater::{capacity, couplings, l_letter, same_shell_weight, slater_from_pair, KernelCache, Shell, ShellSummary};
use crate::error::{Error, Result};
use crate::radial::{make_grid, screened_potential, FunctionKind, GridScheme, RadialFunction, RadialGrid};
use crate::thomasfermi::solve_tf_atom;

/// Iteration and discretization controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HfConfig {
    pub mode: KineticMode,
    pub r_max: f64,
    pub grid_n: usize,
    /// `None` selects an exponential grid with scale `grid_scale / Z`.
    pub scheme: Option<GridScheme>,
    pub grid_scale: f64,
    /// Mixing factor of the first `damped_iterations` steps.
    pub damping: f64,
    pub damped_iterations: usize,
    /// Step length of the Anderson phase.
    pub anderson_beta: f64,
    pub history: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// The last electron counts as unbound when its `eps >= -bind_tol`.
    pub bind_tol: f64,
    /// Aufbau is no longer revised after this many iterations.
    pub freeze_after: usize,
    /// Repeat the solve at `2 r_max` and record the binding decision there.
    pub validate_binding: bool,
}

impl Default for HfConfig {
    fn default() -> Self {
        HfConfig {
            mode: KineticMode::Relativistic,
            r_max: 40.0,
            grid_n: 300,
            scheme: None,
            grid_scale: 0.25,
            damping: 0.3,
            damped_iterations: 10,
            anderson_beta: 0.5,
            history: 6,
            max_iter: 200,
            tol: 1e-8,
            bind_tol: 1e-6,
            freeze_after: 40,
            validate_binding: false,
        }
    }
}

impl HfConfig {
    pub fn scheme_for(&self, z: f64) -> GridScheme {
        self.scheme.unwrap_or(GridScheme::Exponential {
            scale: self.grid_scale / z.max(1.0),
        })
    }

    pub fn grid_for(&self, z: f64) -> Result<Arc<RadialGrid>> {
        make_grid(self.r_max, self.grid_n, self.scheme_for(z))
    }

    /// Same node density on a box twice as large.
    fn doubled(&self, z: f64) -> HfConfig {
        let scheme = self.scheme_for(z);
        let n = match scheme {
            GridScheme::Exponential { scale } => {
                let ratio = (2.0 * self.r_max / scale).ln_1p() / (self.r_max / scale).ln_1p();
                (self.grid_n as f64 * ratio).ceil() as usize
            }
            GridScheme::LogUniform { .. } => self.grid_n + self.grid_n / 10,
            GridScheme::Uniform => 2 * self.grid_n,
        };
        HfConfig {
            r_max: 2.0 * self.r_max,
            grid_n: n,
            scheme: Some(scheme),
            validate_binding: false,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyComponents {
    pub kinetic: f64,
    /// `Z int rho / |x|`, entering the total with a minus sign.
    pub nuclear: f64,
    pub direct: f64,
    pub exchange: f64,
    pub total: f64,
}

/// Converged (or capped) SCF state.
#[derive(Clone, Debug)]
pub struct HFSolution {
    pub z: f64,
    pub n: f64,
    pub q: u32,
    pub alpha: f64,
    pub mode: KineticMode,
    pub grid: Arc<RadialGrid>,
    pub shells: Vec<Shell>,
    pub rho: RadialFunction,
    pub energy: EnergyComponents,
    pub iterations: usize,
    pub converged: bool,
    /// `max_t ||P_t (F_t - eps_t) u_t|| / max(1, |eps_t|)`.
    pub el_residual: f64,
    /// Largest deviation of the same-`l` overlap matrix from the identity.
    pub orthonormality: f64,
    /// Energy of the last filled shell.
    pub homo_eps: f64,
    /// Converged with `homo_eps < -bind_tol`; an unconverged run never
    /// certifies binding.
    pub bound: bool,
    /// The same decision on the doubled box, when requested.
    pub bound_doubled: Option<bool>,
    pub runtime_s: f64,
    /// Mixing adjustments and aufbau events.
    pub diagnostics: Vec<String>,
}

/// JSON part of the HF export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HfSummary {
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub q: u32,
    pub alpha: f64,
    pub converged: bool,
    pub iterations: usize,
    pub energy: EnergyComponents,
    pub shells: Vec<ShellSummary>,
}

impl HFSolution {
    pub fn summary(&self) -> HfSummary {
        HfSummary {
            z: self.z,
            n: self.n,
            q: self.q,
            alpha: self.alpha,
            converged: self.converged,
            iterations: self.iterations,
            energy: self.energy,
            shells: self.shells.iter().map(Shell::summary).collect(),
        }
    }

    /// `<stem>.json`, `<stem>_rho.csv` and `<stem>_<label>.csv` per shell.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&self.summary())?;
        std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
        self.rho.write_csv_named(&dir.join(format!("{stem}_rho.csv")), "rho")?;
        for s in &self.shells {
            s.u.write_csv_named(&dir.join(format!("{stem}_{}.csv", s.label())), "u")?;
        }
        Ok(())
    }

    /// Electrons outside radius `x`.
    pub fn charge_outside(&self, x: f64) -> Result<f64> {
        Ok(self.n - self.rho.charge_within(x)?)
    }
}

/// `Phi_R^HF(x)` built from the HF density.
pub fn hf_screened_potential(sol: &HFSolution, r_screen: f64, x: f64) -> Result<f64> {
    screened_potential(&sol.rho, sol.z, r_screen, x)
}

/// Radius outside which `nu` electrons of the HF density reside.
pub fn hf_radius(sol: &HFSolution, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < sol.n) {
        return Err(Error::param(format!("nu = {nu} outside (0, {})", sol.n)));
    }
    let mut lo = sol.grid.r()[0] * 1e-6;
    let mut hi = sol.grid.r_max();
    if sol.charge_outside(hi)? > nu {
        return Err(Error::param(format!("more than nu = {nu} electrons lie outside r_max")));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if sol.charge_outside(m)? > nu {
            lo = m;
        } else {
            hi = m;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug)]
struct Orbital {
    n: u32,
    l: u32,
    occ: f64,
    v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
struct Level {
    n: u32,
    l: u32,
    eps: f64,
}

struct Context {
    z: f64,
    q: u32,
    r: Vec<f64>,
    kinetic: Vec<ChannelOperator>,
    kernels: KernelCache,
}

impl Context {
    fn nuclear(&self) -> Vec<f64> {
        self.r.iter().map(|r| -self.z / r).collect()
    }

    fn hartree(&self, orbs: &[Orbital]) -> Vec<f64> {
        let mut vh = vec![0.0; self.r.len()];
        for o in orbs {
            let g: Vec<f64> = o.v.iter().map(|x| x * x).collect();
            let y = slater_from_pair(&g, &self.r, 0);
            vh.iter_mut().zip(&y).for_each(|(a, b)| *a += o.occ * b);
        }
        vh
    }

    /// `sum_{s != skip} (f_s/q) sum_k A_k (v_s v_s^T) o kernel_k` for channel `l`.
    fn exchange_matrix(&mut self, orbs: &[Orbital], l: u32, skip: Option<usize>) -> Mat<f64> {
        let n = self.r.len();
        let mut m = Mat::<f64>::zeros(n, n);
        for (i, s) in orbs.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            for (k, a) in couplings(s.l, l) {
                let c = s.occ / self.q as f64 * a;
                let kern = self.kernels.get(k);
                for j in 0..n {
                    let cj = c * s.v[j];
                    let col = kern.col(j);
                    for (ii, kv) in col.iter().enumerate() {
                        m[(ii, j)] += cj * s.v[ii] * kv;
                    }
                }
            }
        }
        m
    }

    /// Own-shell terms of shell `t` as a local potential.
    fn self_local(&self, t: &Orbital) -> Vec<f64> {
        let g: Vec<f64> = t.v.iter().map(|x| x * x).collect();
        let mut out = slater_from_pair(&g, &self.r, 0);
        let c = (t.occ - 1.0) * same_shell_weight(t.l, self.q);
        if c != 0.0 {
            for (k, a) in couplings(t.l, t.l) {
                if k > 0 {
                    let y = slater_from_pair(&g, &self.r, k);
                    out.iter_mut().zip(&y).for_each(|(o, v)| *o += c * a * v);
                }
            }
        }
        out
    }

    /// Fock matrix shared by the closed shells (and virtual levels) of `l`.
    fn channel_hamiltonian(&mut self, l: u32, vloc: &[f64], orbs: &[Orbital]) -> Mat<f64> {
        let k = self.exchange_matrix(orbs, l, None);
        let mut h = self.kinetic[l as usize].matrix() - &k;
        for (i, v) in vloc.iter().enumerate() {
            h[(i, i)] += v;
        }
        h
    }

    /// `T - Z/r + s (V_H - K_l)`: the levels used for aufbau.
    fn aufbau_hamiltonian(&mut self, l: u32, s: f64, vh: &[f64], orbs: &[Orbital]) -> Mat<f64> {
        let k = self.exchange_matrix(orbs, l, None);
        let mut h = self.kinetic[l as usize].matrix() - &(&k * faer::Scale(s));
        for (i, (v, r)) in vh.iter().zip(&self.r).enumerate() {
            h[(i, i)] += s * v - self.z / r;
        }
        h
    }

    /// Fock matrix of shell `t` with its own terms local.
    fn shell_hamiltonian(&mut self, t: usize, vloc: &[f64], orbs: &[Orbital]) -> Mat<f64> {
        let l = orbs[t].l;
        let k = self.exchange_matrix(orbs, l, Some(t));
        let own = self.self_local(&orbs[t]);
        let mut h = self.kinetic[l as usize].matrix() - &k;
        for i in 0..vloc.len() {
            h[(i, i)] += vloc[i] - own[i];
        }
        h
    }

    fn energy(&self, orbs: &[Orbital]) -> EnergyComponents {
        let q = self.q as f64;
        let mut kinetic = 0.0;
        let mut nuclear = 0.0;
        for o in orbs {
            kinetic += o.occ * quadratic(self.kinetic[o.l as usize].matrix(), &o.v);
            nuclear += o.occ * self.z * o.v.iter().zip(&self.r).map(|(v, r)| v * v / r).sum::<f64>();
        }
        let vh = self.hartree(orbs);
        let rho: Vec<f64> = (0..self.r.len()).map(|i| orbs.iter().map(|o| o.occ * o.v[i] * o.v[i]).sum()).collect();
        let direct = 0.5 * rho.iter().zip(&vh).map(|(a, b)| a * b).sum::<f64>();
        let mut exchange = 0.0;
        for (i, t) in orbs.iter().enumerate() {
            let gt: Vec<f64> = t.v.iter().map(|x| x * x).collect();
            let f0 = dot(&gt, &slater_from_pair(&gt, &self.r, 0));
            exchange += 0.5 * t.occ * f0;
            let c = same_shell_weight(t.l, self.q);
            if c != 0.0 {
                for (k, a) in couplings(t.l, t.l) {
                    if k > 0 {
                        let fk = dot(&gt, &slater_from_pair(&gt, &self.r, k));
                        exchange += 0.5 * t.occ * (t.occ - 1.0) * c * a * fk;
                    }
                }
            }
            for s in &orbs[..i] {
                let g: Vec<f64> = s.v.iter().zip(&t.v).map(|(a, b)| a * b).collect();
                for (k, a) in couplings(s.l, t.l) {
                    exchange += s.occ * t.occ / q * a * dot(&g, &slater_from_pair(&g, &self.r, k));
                }
            }
        }
        EnergyComponents {
            kinetic,
            nuclear,
            direct,
            exchange,
            total: kinetic - nuclear + direct - exchange,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest eigenpair of `P H P` on the complement of the columns `lower`.
fn projected_lowest(h: &Mat<f64>, lower: &[&Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let n = h.nrows();
    let mut m = h.clone();
    if !lower.is_empty() {
        let hq: Vec<Vec<f64>> = lower.iter().map(|v| mat_vec(h, v)).collect();
        let shift = (0..n).fold(0.0f64, |a, i| a.max(h[(i, i)].abs())) + 1.0;
        for (a, va) in lower.iter().enumerate() {
            for (b, vb) in lower.iter().enumerate() {
                let qhq = dot(va, &hq[b]) + if a == b { shift } else { 0.0 };
                for j in 0..n {
                    for i in 0..n {
                        m[(i, j)] += va[i] * qhq * vb[j];
                    }
                }
            }
            for j in 0..n {
                for i in 0..n {
                    m[(i, j)] -= va[i] * hq[a][j] + hq[a][i] * va[j];
                }
            }
        }
    }
    let (values, vectors) = eigh(&m)?;
    let mut v: Vec<f64> = vectors.col(0).iter().copied().collect();
    fix_sign(&mut v);
    Ok((values[0], v))
}

/// Fills `n` electrons into `levels` sorted by `(eps, l, n)`; levels tied
/// with the partially filled one share the remainder by capacity.
fn aufbau(levels: &[Level], n_el: f64, q: u32) -> Result<Vec<(u32, u32, f64)>> {
    let mut sorted = levels.to_vec();
    sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps).then(a.l.cmp(&b.l)).then(a.n.cmp(&b.n)));
    let mut config = Vec::new();
    let mut left = n_el;
    let mut i = 0;
    while left > 1e-12 {
        let lv = sorted
            .get(i)
            .ok_or_else(|| Error::solver(format!("not enough channel levels for {n_el} electrons")))?;
        let cap = capacity(lv.l, q);
        if left >= cap - 1e-12 {
            config.push((lv.n, lv.l, cap));
            left -= cap;
            i += 1;
            continue;
        }
        let tol = 1e-9 * lv.eps.abs().max(1.0);
        let group: Vec<&Level> = sorted[i..].iter().take_while(|o| (o.eps - lv.eps).abs() <= tol).collect();
        let total: f64 = group.iter().map(|o| capacity(o.l, q)).sum();
        for o in group {
            config.push((o.n, o.l, left * capacity(o.l, q) / total));
        }
        left = 0.0;
    }
    config.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(config)
}

fn same_config(a: &[(u32, u32, f64)], b: &[(u32, u32, f64)]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0 && x.1 == y.1 && (x.2 - y.2).abs() < 1e-12)
}

/// Highest `l` reached when `n` electrons fill hydrogenic levels in the
/// usual `n + l` order.
fn highest_l(n_el: f64, q: u32) -> u32 {
    let mut pairs: Vec<(u32, u32)> = (1..=8).flat_map(|n| (0..n.min(4)).map(move |l| (n, l))).collect();
    pairs.sort_by_key(|&(n, l)| (n + l, n));
    let mut left = n_el;
    let mut lmax = 0;
    for (_, l) in pairs {
        if left <= 1e-12 {
            break;
        }
        lmax = lmax.max(l);
        left -= capacity(l, q);
    }
    lmax
}

/// Gram-Schmidt within each channel, in order of `n`.
fn orthonormalize(orbs: &mut [Orbital]) {
    for i in 0..orbs.len() {
        for j in 0..i {
            if orbs[j].l == orbs[i].l {
                let p = dot(&orbs[i].v, &orbs[j].v);
                let vj = orbs[j].v.clone();
                orbs[i].v.iter_mut().zip(&vj).for_each(|(a, b)| *a -= p * b);
            }
        }
        let norm = dot(&orbs[i].v, &orbs[i].v).sqrt();
        orbs[i].v.iter_mut().for_each(|a| *a /= norm);
    }
}

/// Anderson acceleration on the flattened orbital vector.
struct Anderson {
    depth: usize,
    xs: VecDeque<Vec<f64>>,
    rs: VecDeque<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Anderson {
            depth,
            xs: VecDeque::new(),
            rs: VecDeque::new(),
        }
    }

    fn clear(&mut self) {
        self.xs.clear();
        self.rs.clear();
    }

    fn step(&mut self, x: &[f64], r: &[f64], beta: f64) -> Vec<f64> {
        self.xs.push_back(x.to_vec());
        self.rs.push_back(r.to_vec());
        while self.xs.len() > self.depth + 1 {
            self.xs.pop_front();
            self.rs.pop_front();
        }
        let m = self.xs.len() - 1;
        let mut out: Vec<f64> = x.iter().zip(r).map(|(a, b)| a + beta * b).collect();
        if m == 0 {
            return out;
        }
        let dx: Vec<Vec<f64>> = (0..m).map(|j| sub(&self.xs[j + 1], &self.xs[j])).collect();
        let dr: Vec<Vec<f64>> = (0..m).map(|j| sub(&self.rs[j + 1], &self.rs[j])).collect();
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                a[i][j] = dot(&dr[i], &dr[j]);
            }
            b[i] = dot(&dr[i], r);
        }
        let trace: f64 = (0..m).map(|i| a[i][i]).sum();
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 1e-12 * trace.max(1e-300);
        }
        let Some(gamma) = solve_small(a, b) else {
            self.clear();
            return out;
        };
        for j in 0..m {
            for (o, (x, r)) in out.iter_mut().zip(dx[j].iter().zip(&dr[j])) {
                *o -= gamma[j] * (x + beta * r);
            }
        }
        out
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Gaussian elimination with partial pivoting for a tiny dense system.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if !(a[p][c].abs() > 0.0) {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for i in c + 1..m {
            let f = a[i][c] / a[c][c];
            for j in c..m {
                a[i][j] -= f * a[c][j];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn flatten(orbs: &[Orbital]) -> Vec<f64> {
    orbs.iter().flat_map(|o| o.v.iter().copied()).collect()
}

fn unflatten(orbs: &mut [Orbital], x: &[f64]) {
    let n = orbs[0].v.len();
    for (i, o) in orbs.iter_mut().enumerate() {
        o.v.copy_from_slice(&x[i * n..(i + 1) * n]);
    }
}

/// Iterations without halving the density change before a frozen run gives up.
const STAGNATION_WINDOW: usize = 40;
/// Aufbau is skipped once the configuration survived this many checks.
const STABLE_AFTER: usize = 5;

/// Solves the HF equations for nuclear charge `z`, `n` electrons and `q`
/// spin states on the grid described by `config`.
pub fn scf_solve(z: f64, n: f64, alpha: f64, q: u32, config: &HfConfig) -> Result<HFSolution> {
    let grid = config.grid_for(z)?;
    let mut sol = scf_solve_on_grid(z, n, alpha, q, config, grid)?;
    if config.validate_binding {
        let big = scf_solve_on_grid(z, n, alpha, q, &config.doubled(z), config.doubled(z).grid_for(z)?)?;
        sol.bound_doubled = Some(big.bound);
        sol.diagnostics.push(format!(
            "doubled box r_max = {}: homo eps {:.3e} vs {:.3e}",
            big.grid.r_max(),
            big.homo_eps,
            sol.homo_eps
        ));
    }
    Ok(sol)
}

/// As [`scf_solve`] on an explicit grid.
pub fn scf_solve_on_grid(
    z: f64,
    n_el: f64,
    alpha: f64,
    q: u32,
    config: &HfConfig,
    grid: Arc<RadialGrid>,
) -> Result<HFSolution> {
    let start = Instant::now();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::param(format!("nuclear charge must be positive, got {z}")));
    }
    if !(n_el >= 1.0 && n_el.is_finite()) || q == 0 {
        return Err(Error::param(format!("need N >= 1 and q >= 1, got N = {n_el}, q = {q}")));
    }
    if config.mode == KineticMode::Relativistic && !(z * alpha < 2.0 / PI) {
        return Err(Error::param(format!(
            "kappa = Z alpha = {} must stay below 2/pi",
            z * alpha
        )));
    }
    let lmax = (highest_l(n_el, q) + 1).min(3);
    let kinetic = (0..=lmax)
        .map(|l| build_channel_kinetic(grid.clone(), l, alpha, config.mode))
        .collect::<Result<Vec<_>>>()?;
    let mut ctx = Context {
        z,
        q,
        r: grid.r().to_vec(),
        kinetic,
        kernels: KernelCache::new(grid.r()),
    };
    let npts = grid.len();
    let mut diagnostics = Vec::new();

    // start from the TF mean field, or bare Coulomb if TF has no solution here
    let v0 = match solve_tf_atom(z, n_el.min(z), q, grid.clone()) {
        Ok(tf) => tf.phi.values().iter().map(|p| -p).collect(),
        Err(e) => {
            diagnostics.push(format!("TF start unavailable ({e}); using -Z/r"));
            ctx.nuclear()
        }
    };
    let per_l = |l: u32| ((n_el / capacity(l, q)).ceil() as usize + 2).min(npts);
    let mut levels = Vec::new();
    let mut vectors: Vec<Mat<f64>> = Vec::new();
    for l in 0..=lmax {
        let mut h = ctx.kinetic[l as usize].matrix().clone();
        for (i, v) in v0.iter().enumerate() {
            h[(i, i)] += v;
        }
        let (vals, vecs) = eigh(&h)?;
        for (k, &e) in vals.iter().take(per_l(l)).enumerate() {
            levels.push(Level {
                n: l + 1 + k as u32,
                l,
                eps: e,
            });
        }
        vectors.push(vecs);
    }
    let mut occupation = aufbau(&levels, n_el, q)?;
    let orbitals_from = |occ: &[(u32, u32, f64)], vectors: &[Mat<f64>]| -> Vec<Orbital> {
        occ.iter()
            .map(|&(n, l, f)| {
                let mut v: Vec<f64> = vectors[l as usize].col((n - l - 1) as usize).iter().copied().collect();
                fix_sign(&mut v);
                Orbital { n, l, occ: f, v }
            })
            .collect()
    };
    let mut orbs = orbitals_from(&occupation, &vectors);

    let mut anderson = Anderson::new(config.history);
    let mut beta = config.anderson_beta;
    let mut damping = config.damping;
    let mut last_energy = f64::INFINITY;
    let mut last_eps: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut out_eps = Vec::new();
    let mut best_drho = f64::INFINITY;
    let mut best_iter = 0;
    let mut stable = 0;
    let mut last_drho = 0.0;
    let mut changed_at = 0;
    let mut force_check = false;
    let mut rechecks = 0;

    for iter in 1..=config.max_iter {
        iterations = iter;
        let energy = ctx.energy(&orbs).total;
        // E moves quadratically in the residual near a fixed point, so rises
        // below the squared density change are not a mixing failure
        let slack = 1e-10 * energy.abs() + last_drho * last_drho;
        let since_change = iter - changed_at;
        if since_change > config.damped_iterations + 1 && energy > last_energy + slack {
            if beta > 0.05 {
                beta *= 0.5;
                damping *= 0.5;
                diagnostics.push(format!(
                    "iteration {iter}: energy rose by {:.3e}; mixing halved to {beta}",
                    energy - last_energy
                ));
            }
            anderson.clear();
        }
        last_energy = energy;

        let vh = ctx.hartree(&orbs);
        let vloc: Vec<f64> = ctx.nuclear().iter().zip(&vh).map(|(a, b)| a + b).collect();
        let aufbau_live = iter <= config.freeze_after && (stable < STABLE_AFTER || force_check);
        force_check = false;
        if aufbau_live {
            // one operator for occupied and empty levels alike, in the field
            // of N - 1 electrons
            let scale = (n_el - 1.0) / n_el;
            let mut levels = Vec::new();
            let mut vecs = Vec::new();
            for l in 0..=lmax {
                let h = ctx.aufbau_hamiltonian(l, scale, &vh, &orbs);
                let (vals, v) = eigh(&h)?;
                for (k, &e) in vals.iter().take(per_l(l)).enumerate() {
                    levels.push(Level {
                        n: l + 1 + k as u32,
                        l,
                        eps: e,
                    });
                }
                vecs.push(v);
            }
            let next = aufbau(&levels, n_el, q)?;
            if !same_config(&next, &occupation) {
                if iter > config.damped_iterations {
                    diagnostics.push(format!("iteration {iter}: aufbau changed the configuration"));
                }
                occupation = next;
                orbs = orbitals_from(&occupation, &vecs);
                anderson.clear();
                last_eps.clear();
                last_energy = f64::INFINITY;
                stable = 0;
                changed_at = iter;
                best_drho = f64::INFINITY;
                best_iter = iter;
                continue;
            }
            stable += 1;
        }

        // closed shells of a channel share one eigensolve
        let mut channel: Vec<Option<(Vec<f64>, Mat<f64>)>> = vec![None; (lmax + 1) as usize];
        for l in 0..=lmax {
            if orbs.iter().any(|o| o.l == l && o.occ >= capacity(l, q) - 1e-12) {
                let h = ctx.channel_hamiltonian(l, &vloc, &orbs);
                channel[l as usize] = Some(eigh(&h)?);
            }
        }

        // new orbitals
        let mut out: Vec<Orbital> = Vec::with_capacity(orbs.len());
        out_eps.clear();
        for (t, o) in orbs.iter().enumerate() {
            let (eps, mut v) = if o.occ >= capacity(o.l, q) - 1e-12 {
                let (vals, vecs) = channel[o.l as usize].as_ref().unwrap();
                let k = (o.n - o.l - 1) as usize;
                (vals[k], vecs.col(k).iter().copied().collect::<Vec<f64>>())
            } else {
                let h = ctx.shell_hamiltonian(t, &vloc, &orbs);
                let lower: Vec<&Vec<f64>> = out.iter().filter(|p| p.l == o.l && p.n < o.n).map(|p| &p.v).collect();
                projected_lowest(&h, &lower)?
            };
            fix_sign(&mut v);
            out_eps.push(eps);
            out.push(Orbital { v, ..o.clone() });
        }

        // convergence measures
        let mut drho = 0.0;
        for i in 0..npts {
            let d: f64 = orbs.iter().zip(&out).map(|(a, b)| a.occ * (b.v[i] * b.v[i] - a.v[i] * a.v[i])).sum();
            drho += d.abs();
        }
        last_drho = drho;
        let deps = if last_eps.len() == out_eps.len() {
            out_eps
                .iter()
                .zip(&last_eps)
                .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        last_eps = out_eps.clone();
        if deps < config.tol && drho < config.tol * n_el {
            if aufbau_live || iter >= config.freeze_after || rechecks >= 2 {
                orbs = out;
                converged = true;
                break;
            }
            // confirm the configuration once more before accepting
            rechecks += 1;
            force_check = true;
        }
        if drho < 0.5 * best_drho {
            best_drho = drho;
            best_iter = iter;
        } else if iter > config.freeze_after && iter > best_iter + STAGNATION_WINDOW {
            diagnostics.push(format!(
                "iteration {iter}: no progress since iteration {best_iter} (density change {drho:.3e}); stopped"
            ));
            break;
        }

        // mixing
        let x = flatten(&orbs);
        let r = sub(&flatten(&out), &x);
        let next = if since_change <= config.damped_iterations {
            x.iter().zip(&r).map(|(a, b)| a + damping * b).collect()
        } else {
            anderson.step(&x, &r, beta)
        };
        unflatten(&mut orbs, &next);
        orthonormalize(&mut orbs);
    }
    if !converged && iterations == config.max_iter {
        diagnostics.push(format!("iteration cap {} reached", config.max_iter));
    }
    finish(ctx, grid, orbs, n_el, alpha, config, iterations, converged, diagnostics, start)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mut ctx: Context,
    grid: Arc<RadialGrid>,
    orbs: Vec<Orbital>,
    n_el: f64,
    alpha: f64,
    config: &HfConfig,
    iterations: usize,
    converged: bool,
    diagnostics: Vec<String>,
    start: Instant,
) -> Result<HFSolution> {
    let q = ctx.q;
    let vh = ctx.hartree(&orbs);
    let vloc: Vec<f64> = ctx.nuclear().iter().zip(&vh).map(|(a, b)| a + b).collect();
    let mut el_residual = 0.0f64;
    let mut orthonormality = 0.0f64;
    let mut shells = Vec::with_capacity(orbs.len());
    for (t, o) in orbs.iter().enumerate() {
        let h = ctx.shell_hamiltonian(t, &vloc, &orbs);
        let hv = mat_vec(&h, &o.v);
        let eps = dot(&hv, &o.v);
        let mut res: Vec<f64> = hv.iter().zip(&o.v).map(|(a, b)| a - eps * b).collect();
        for p in orbs.iter().filter(|p| p.l == o.l) {
            let ov = dot(&p.v, &o.v);
            let target = if p.n == o.n { 1.0 } else { 0.0 };
            orthonormality = orthonormality.max((ov - target).abs());
            if p.n != o.n {
                let c = dot(&p.v, &res);
                res.iter_mut().zip(&p.v).for_each(|(a, b)| *a -= c * b);
            }
        }
        el_residual = el_residual.max(dot(&res, &res).sqrt() / eps.abs().max(1.0));
        let u = ctx.kinetic[o.l as usize].to_u(&o.v);
        shells.push(Shell {
            n: o.n,
            l: o.l,
            occ: o.occ,
            eps,
            u: RadialFunction::new(grid.clone(), u, FunctionKind::ReducedOrbital)?,
        });
    }
    let energy = ctx.energy(&orbs);
    let rho: Vec<f64> = grid
        .r()
        .iter()
        .enumerate()
        .map(|(i, r)| shells.iter().map(|s| s.occ * s.u.values()[i].powi(2)).sum::<f64>() / (4.0 * PI * r * r))
        .collect();
    let homo_eps = shells.iter().map(|s| s.eps).fold(f64::NEG_INFINITY, f64::max);
    Ok(HFSolution {
        z: ctx.z,
        n: n_el,
        q,
        alpha,
        mode: config.mode,
        rho: RadialFunction::new(grid.clone(), rho, FunctionKind::Density)?,
        grid,
        shells,
        energy,
        iterations,
        converged,
        el_residual,
        orthonormality,
        homo_eps,
        bound: converged && homo_eps < -config.bind_tol,
        bound_doubled: None,
        runtime_s: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}

/// Human-readable configuration such as `1s2 2s2 2p1.5`.
pub fn configuration_label(sol: &HFSolution) -> String {
    sol.shells
        .iter()
        .map(|s| format!("{}{}{}", s.n, l_letter(s.l), s.occ))
        .collect::<Vec<_>>()
        .join(" ")
}
