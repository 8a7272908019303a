//! Bohr-Sommerfeld selection of Planck constants from hbar-dependent
//! symplectic areas, and the monodromy-ratio screen for integrability.

mod monodromy;
mod profile;
mod selector;

pub use monodromy::{
    monodromy_ratio_report, monodromy_ratio_report_with, rational_witness, IntegrabilityReport, RatioOptions,
    RatioStats, ScanGrid, SignRecord, Verdict, ASSUMPTIONS,
};
pub use profile::{fibonacci_lambda, AreaComponent, AreaProfile, DerivativeMode, LaurentTerm, BUILTIN_PROFILES, GOLDEN};
pub use selector::{
    bohr_sommerfeld_set, bohr_sommerfeld_set_with, matrix_sizes, PlanckEntry, PlanckSet, ScanOptions, INTEGER_TOL,
};
