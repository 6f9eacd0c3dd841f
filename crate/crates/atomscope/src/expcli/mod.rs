//! Experiment orchestration behind the command-line tool: configuration,
//! scans over atoms, property suites and report files.

mod checks;
mod config;
mod report;
mod scans;

pub use checks::{
    criticality_nonmonotone_steps, k2_bound_violations, lt_f_violations, natale_violations, run_property_checks,
    sandwich_violations,
};
pub use config::{ExperimentConfig, ExperimentKind, NPolicy};
pub use report::{emit_report, write_report_csv, PassFlag, ReportMetadata, ReportRow, ScanReport, SeriesPoint, CSV_HEADER};
pub use scans::{
    eps_lattice, fit_common_envelope, fit_envelope, parallel_map, potential_differences, run_energy_gap,
    run_experiment, run_ionization_energy, run_ionization_scan, run_potential_comparison, run_radius_scan,
    thread_limit, EnvelopeFit, FAR_RADIUS,
};
