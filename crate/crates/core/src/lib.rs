//! Consistent-histories engine for finite-dimensional quantum systems.
//!
//! The crate is organized bottom-up:
//!
//! * [`numerics`]: dense complex matrices and tolerances
//! * [`projectors`]: projectors, kets, projective decompositions of the
//!   identity (PDIs), and frameworks
//! * [`histories`]: time grids, unitary schedules, history families,
//!   chain operators, and the decoherence functional
//! * [`causes`]: event probabilities, conditionals, and cause
//!   classification inside a single consistent family
//! * [`scenarios`]: prebuilt gedanken experiments (beamsplitter,
//!   Mach-Zehnder, spin-half, EPRB pairs, classical signal relay)
//!
//! Everything is exact-arithmetic-friendly: matrices are built
//! analytically (no eigendecompositions) and validated against explicit
//! algebraic invariants at construction time.

pub mod causes;
pub mod histories;
pub mod numerics;
pub mod projectors;
pub mod scenarios;

pub use causes::{
    classify_cause, compare_intervention, conditional_probability, event_probability,
    find_causes, find_common_causes, CausalVerdict, CauseError, Classification,
    CommonCauseResult, Event, InterventionComparison, DEFAULT_THRESHOLD,
};
pub use histories::{
    born_probability, chain_operator, chain_vector, check_consistency,
    decoherence_functional, history_space_projector, ConsistencyReport, History,
    HistoryError, HistoryFamily, TimeGrid, UnitarySchedule, MAX_HISTORIES,
};
pub use numerics::{ComplexMatrix, ComplexScalar, NumericsError, Tolerance};
pub use projectors::{
    commutes, conjunction, incompatible, is_projector, projector_from_ket, validate_pdi,
    Framework, Ket, Pdi, Projector, ProjectorError, MAX_FRAMEWORK_MEMBERS,
};
pub use scenarios::{
    build_beamsplitter, build_charlie_model, build_eprb, build_mach_zehnder, build_spin_half,
    rotation_unitary, spin_down, spin_up, BeamsplitterParams, BobIntervention,
    MachZehnderParams, MzIntermediate, PointerModel, ScenarioError, SpinDirection,
    SpinIntermediate,
};
