//! Radial restricted Hartree-Fock with the pseudo-relativistic kinetic energy.
//!
//! Each shell `(n, l)` carries a fractional occupation and one reduced
//! orbital; the energy is the average over all determinants of the
//! configuration, which keeps the problem radial.

mod channel;
mod scf;
mod slater;

pub use channel::{build_channel_kinetic, criticality_scan, lowest_eigenpairs, ChannelOperator, KineticMode};
pub use scf::{
    configuration_label, hf_radius, hf_screened_potential, scf_solve, scf_solve_on_grid, EnergyComponents, HFSolution,
    HfConfig, HfSummary,
};
pub use slater::{
    angular_coefficient, capacity, direct_potential, exchange_apply, l_letter, slater_potential, Shell, ShellSummary,
};
