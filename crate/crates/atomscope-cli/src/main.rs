//! `atomscope`: Thomas-Fermi, Hartree-Fock and outside-TF solves, theorem-level
//! scans and property suites, with CSV/JSON reports.
//!
//! Values given on the command line are overridden by the keys of the
//! `--config` file. The exit status is 0 iff every asserted report row passes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use atomscope::expcli::{emit_report, run_experiment, run_property_checks, ExperimentConfig, ExperimentKind, PassFlag, ReportRow, ScanReport};
use atomscope::hartreefock::scf_solve;
use atomscope::radial::{make_grid, FunctionKind, GridScheme, RadialFunction, ScreenedPotential};
use atomscope::thomasfermi::{otf_sandwich_fit, solve_otf, solve_tf_atom};
use atomscope::Result;

#[derive(Parser)]
#[command(name = "atomscope", version, about = "Relativistic Thomas-Fermi and Hartree-Fock atoms")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Thomas-Fermi atoms.
    Tf(Common),
    /// Hartree-Fock atoms.
    Hf(Common),
    /// Outside Thomas-Fermi problem with the HF screened potential beyond `r_cut`.
    Otf(Common),
    /// A theorem-level scan: ionization, radius, potential, ionization-energy, energy-gap.
    Scan {
        experiment: Option<ExperimentKind>,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized and closed-form property suites.
    Check(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Nuclear charges (comma separated).
    #[arg(long = "Z", value_delimiter = ',')]
    z: Option<Vec<f64>>,
    /// Electron numbers (comma separated); default N = Z.
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<f64>>,
    /// Spin states per orbital.
    #[arg(long)]
    q: Option<u32>,
    /// Coupling Z alpha, below 2/pi.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    #[arg(long = "rmax")]
    r_max: Option<f64>,
    /// exp, exp:<scale>, uniform or log.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or both (comma separated).
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML key-value file; its keys override the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn table(&self) -> toml::Table {
        let mut t = toml::Table::new();
        let floats = |v: &[f64]| toml::Value::Array(v.iter().map(|&x| toml::Value::Float(x)).collect());
        if let Some(z) = &self.z {
            t.insert("z".into(), floats(z));
        }
        if let Some(n) = &self.n {
            t.insert("n".into(), floats(n));
            t.insert("n_policy".into(), "explicit".into());
        }
        if let Some(q) = self.q {
            t.insert("q".into(), toml::Value::Integer(q.into()));
        }
        if let Some(k) = self.kappa {
            t.insert("kappa".into(), toml::Value::Float(k));
        }
        if let Some(n) = self.grid_n {
            t.insert("grid_n".into(), toml::Value::Integer(n as i64));
        }
        if let Some(r) = self.r_max {
            t.insert("r_max".into(), toml::Value::Float(r));
        }
        if let Some(s) = &self.scheme {
            t.insert("scheme".into(), s.clone().into());
        }
        if let Some(o) = &self.out {
            t.insert("out".into(), o.display().to_string().into());
        }
        if let Some(f) = &self.format {
            t.insert("format".into(), toml::Value::Array(f.iter().map(|s| s.clone().into()).collect()));
        }
        if let Some(s) = self.seed {
            t.insert("seed".into(), toml::Value::Integer(s as i64));
        }
        t
    }

    fn config(&self, experiment: Option<ExperimentKind>) -> Result<ExperimentConfig> {
        let mut flags = self.table();
        if let Some(e) = experiment {
            flags.insert("experiment".into(), e.to_string().into());
        }
        ExperimentConfig::merged_with_file(flags, self.config.as_deref())
    }
}

/// `(Z, N)` pairs: every `N` of the list for every `Z`, else neutral atoms.
fn atoms(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &z in &cfg.z {
        if cfg.n.is_empty() {
            out.push((z, z));
        } else {
            out.extend(cfg.n.iter().map(|&n| (z, n)));
        }
    }
    out
}

fn stem(kind: &str, z: f64, n: f64) -> String {
    format!("{kind}_Z{z}_N{n}")
}

fn run_tf(cfg: &ExperimentConfig) -> Result<ScanReport> {
    let mut report = ScanReport::new(cfg);
    for (z, n) in atoms(cfg) {
        // TF density varies on the scale Z^(-1/3), finer than the HF default near the nucleus
        let scheme = cfg
            .grid_scheme()?
            .unwrap_or(GridScheme::Exponential { scale: 0.02 / z.cbrt() });
        let t = std::time::Instant::now();
        let tf = solve_tf_atom(z, n, cfg.q, make_grid(cfg.r_max, cfg.grid_n, scheme)?)?;
        tf.export(&cfg.out, &stem("tf", z, n))?;
        let rt = if cfg.timings { t.elapsed().as_secs_f64() } else { 0.0 };
        report
            .rows
            .push(ReportRow::report_only(z, n, 0.0, "tf_energy", tf.energy).with_runtime(rt));
        report.rows.push(ReportRow::report_only(z, n, 0.0, "tf_mu", tf.mu));
        report.rows.push(ReportRow::asserted(z, n, 0.0, "tf_residual", tf.residual, 1e-6));
    }
    Ok(report)
}

fn run_hf(cfg: &ExperimentConfig) -> Result<ScanReport> {
    let mut report = ScanReport::new(cfg);
    let hf = cfg.hf_config();
    for (z, n) in atoms(cfg) {
        let alpha = cfg.alpha(z);
        let sol = scf_solve(z, n, alpha, cfg.q, &hf)?;
        sol.export(&cfg.out, &stem("hf", z, n))?;
        let rt = if cfg.timings { sol.runtime_s } else { 0.0 };
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        report
            .rows
            .push(ReportRow::report_only(z, n, alpha, "hf_energy", sol.energy.total).with_runtime(rt));
        report.rows.push(ReportRow::report_only(z, n, alpha, "homo_eps", sol.homo_eps));
        report.rows.push(ReportRow::report_only(z, n, alpha, "bound", flag(sol.bound)));
        report
            .rows
            .push(ReportRow::asserted(z, n, alpha, "unconverged", 1.0 - flag(sol.converged), 0.0));
        report.rows.push(ReportRow::asserted(z, n, alpha, "el_residual", sol.el_residual, 1e-6));
        report
            .rows
            .push(ReportRow::asserted(z, n, alpha, "orthonormality", sol.orthonormality, 1e-8));
    }
    Ok(report)
}

fn run_otf(cfg: &ExperimentConfig) -> Result<ScanReport> {
    let mut report = ScanReport::new(cfg);
    let hf = cfg.hf_config();
    let r = cfg.r_cut;
    for (z, n) in atoms(cfg) {
        let alpha = cfg.alpha(z);
        let sol = scf_solve(z, n, alpha, cfg.q, &hf)?;
        let sp = ScreenedPotential::new(&sol.rho, z)?;
        let z_eff = z - sol.rho.charge_within(r)?;
        let v = RadialFunction::from_fn(sol.grid.clone(), FunctionKind::Potential, |s| {
            if s >= r {
                z_eff / s
            } else {
                sp.at(r, s).unwrap_or(f64::NAN)
            }
        })?;
        let t = std::time::Instant::now();
        let otf = solve_otf(&v, r, sol.charge_outside(r)?, cfg.q)?;
        otf.export(&cfg.out, &stem("otf", z, n))?;
        let rt = if cfg.timings { t.elapsed().as_secs_f64() } else { 0.0 };
        let fit = otf_sandwich_fit(&otf);
        report.rows.push(ReportRow::report_only(z, n, alpha, "otf_mu", otf.mu).with_runtime(rt));
        report.rows.push(ReportRow::report_only(z, n, alpha, "sandwich_a", fit.a));
        report.rows.push(ReportRow::report_only(z, n, alpha, "sandwich_A", fit.big_a));
        report.rows.push(ReportRow::asserted(z, n, alpha, "otf_residual", otf.residual, 1e-6));
    }
    Ok(report)
}

fn finish(report: &ScanReport, cfg: &ExperimentConfig) -> Result<i32> {
    let mut report = report.clone();
    if !cfg.timings {
        report.strip_timings();
    }
    for path in emit_report(&report, &cfg.format, &cfg.out)? {
        println!("wrote {}", path.display());
    }
    for note in &report.metadata.notes {
        println!("note: {note}");
    }
    for (k, v) in &report.metadata.fitted {
        println!("fitted {k} = {v}");
    }
    let asserted = report.asserted_rows().count();
    let failed: Vec<&ReportRow> = report.asserted_rows().filter(|r| r.pass == PassFlag::Fail).collect();
    for r in &failed {
        println!(
            "FAIL {} (Z = {}, N = {}): value {} > bound {}",
            r.observable,
            r.z,
            r.n,
            r.value,
            r.bound.unwrap_or(f64::NAN)
        );
    }
    println!("{asserted} asserted rows, {} failed", failed.len());
    Ok(report.exit_code())
}

fn run(cli: Cli) -> Result<i32> {
    let (cfg, report) = match cli.verb {
        Verb::Tf(c) => {
            let cfg = c.config(None)?;
            let r = run_tf(&cfg)?;
            (cfg, r)
        }
        Verb::Hf(c) => {
            let cfg = c.config(None)?;
            let r = run_hf(&cfg)?;
            (cfg, r)
        }
        Verb::Otf(c) => {
            let cfg = c.config(None)?;
            let r = run_otf(&cfg)?;
            (cfg, r)
        }
        Verb::Scan { experiment, common } => {
            let cfg = common.config(experiment)?;
            let r = run_experiment(&cfg)?;
            (cfg, r)
        }
        Verb::Check(c) => {
            let cfg = c.config(Some(ExperimentKind::Properties))?;
            let r = run_property_checks(&cfg)?;
            (cfg, r)
        }
    };
    finish(&report, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
