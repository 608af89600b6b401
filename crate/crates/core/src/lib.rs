//! Numerical toolkit for one-sided neighborhood measures of thin subsets of
//! the circle, the piecewise-linear majorants they induce, the root sequences
//! of `omega(t) = (1+t)^n`, and lower bounds for singular inner functions.
//!
//! Everything works in angle coordinates: a set lives on the real line, its
//! `t`-fattening is measured with one-dimensional Lebesgue measure, and the
//! unit circle only enters when a singular measure is turned into an inner
//! function. All routines are deterministic; nothing reads clocks or RNGs.

#![forbid(unsafe_code)]

pub mod esterle_seq;
pub mod inner_lab;
pub mod interval;
pub mod majorant;
pub mod removability;
pub mod thin_sets;

pub use esterle_seq::{
    solve_tn, solve_tn_fn, u_sequence, EsterleError, EsterleSequence, DEFAULT_REL_TOL,
};
pub use inner_lab::{
    delta_batch, delta_n, delta_n_atomic_ray, snorm_lower_bound, unitary_sanity, verify_theorem,
    witness_points, write_verify_csv, DeltaGrid, DeltaReport, DeltaSolver, InnerError, InnerEval,
    MeasureDescriptor, SingularMeasure, SnormBound, UnitarySanity, VerifyReport, VerifyRow,
    WitnessEntry,
};
pub use interval::Iv;
pub use majorant::{
    write_rho_curve_csv, Enclosure, Knot, LiminfRow, MajorantError, MajorantOmega, OmegaDump,
    RhoCurve, RuleParams,
};
pub use removability::{
    cauchy_reconstruct, criterion_integral, default_eta_schedule, removability_test, Contour,
    CriterionOutcome, CriterionRow, FnDescriptor, GrowthCheck, ProbeRow, QuadParams, RemovError,
    RemovabilityParams, RemovabilityReport, TestFn, Verdict,
};
pub use thin_sets::{write_measure_curve_csv, ThinSet, ThinSetError};
