//! History families, chain operators, and the decoherence functional.
//!
//! A *history family* fixes an initial state, a grid of times t0..tn,
//! unitary steps between consecutive times, and one PDI per time after
//! t0. A *history* picks one PDI member at each time. The chain operator
//! of a history is the alternating product of projectors and steps; the
//! decoherence functional D(Y, Y') collects inner products of chain
//! vectors, and the family is *consistent* when D is diagonal within
//! tolerance. Only then do the diagonal entries serve as probabilities.

use crate::numerics::{ComplexMatrix, ComplexScalar, NumericsError, Tolerance};
use crate::projectors::{Ket, Pdi, ProjectorError};
use thiserror::Error;

/// Upper bound on the number of histories a family may enumerate.
pub const MAX_HISTORIES: usize = 4096;

/// Errors raised while building or analyzing history families.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    /// Time labels must be distinct.
    #[error("duplicate time label {label:?}")]
    DuplicateTimeLabel { label: String },
    /// A grid needs an initial time plus at least one later time.
    #[error("time grid has {count} labels, need at least 2")]
    TooFewTimes { count: usize },
    /// A schedule step failed the unitarity check.
    #[error("schedule step {index} is not unitary within tolerance")]
    StepNotUnitary { index: usize },
    /// Schedule steps must share one dimension.
    #[error("schedule step {index} is {got}-dimensional, expected {expected}")]
    StepDimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    /// Grid, schedule, and PDI counts must line up.
    #[error("family has {times} time labels, {steps} steps, and {pdis} PDIs; need steps = pdis = times - 1")]
    MisalignedFamily {
        times: usize,
        steps: usize,
        pdis: usize,
    },
    /// A PDI acts on the wrong dimension for the family.
    #[error("PDI at time slot {slot} is {got}-dimensional, expected {expected}")]
    PdiDimensionMismatch {
        slot: usize,
        got: usize,
        expected: usize,
    },
    /// The initial ket has the wrong dimension or norm.
    #[error("initial state has norm {norm}, expected 1 within tolerance")]
    InitialNotNormalized { norm: f64 },
    /// The initial ket dimension must match the schedule.
    #[error("initial state is {got}-dimensional, expected {expected}")]
    InitialDimensionMismatch { got: usize, expected: usize },
    /// A history's choice vector does not match the family shape.
    #[error("history selects member {choice} at time slot {slot}, but that PDI has {members} members")]
    BadChoice {
        slot: usize,
        choice: usize,
        members: usize,
    },
    /// A history has the wrong number of choices.
    #[error("history has {got} choices, family has {expected} time slots")]
    WrongChoiceCount { got: usize, expected: usize },
    /// Combinatorial guard on history enumeration.
    #[error("family enumerates {count} histories, exceeding the {max} limit")]
    TooManyHistories { count: usize, max: usize },
    /// Probabilities were requested for an inconsistent family.
    #[error("family is inconsistent: max off-diagonal |D| = {max_offdiag:.3e} exceeds tolerance")]
    InconsistentFamily { max_offdiag: f64 },
    /// Underlying projector validation failed.
    #[error(transparent)]
    Projector(#[from] ProjectorError),
    /// Underlying matrix arithmetic failed.
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Ordered, distinct time labels t0..tn.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    labels: Vec<String>,
}

impl TimeGrid {
    /// Builds a grid from ordered labels; needs at least two, all distinct.
    pub fn new(labels: Vec<String>) -> Result<Self, HistoryError> {
        if labels.len() < 2 {
            return Err(HistoryError::TooFewTimes {
                count: labels.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(HistoryError::DuplicateTimeLabel { label: l.clone() });
            }
        }
        Ok(TimeGrid { labels })
    }

    /// Convenience constructor from string slices.
    pub fn from_labels(labels: &[&str]) -> Result<Self, HistoryError> {
        TimeGrid::new(labels.iter().map(|s| s.to_string()).collect())
    }

    /// All labels, starting at t0.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Label of the time with the given index (0 = initial time).
    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    /// Index of a label, if present.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Number of steps (one less than the number of labels).
    pub fn steps(&self) -> usize {
        self.labels.len() - 1
    }
}

/// The unitaries carrying the state between consecutive grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitarySchedule {
    steps: Vec<ComplexMatrix>,
}

impl UnitarySchedule {
    /// Validates that every step is unitary and dimensions agree.
    pub fn new(steps: Vec<ComplexMatrix>, tol: Tolerance) -> Result<Self, HistoryError> {
        if steps.is_empty() {
            return Err(HistoryError::MisalignedFamily {
                times: 1,
                steps: 0,
                pdis: 0,
            });
        }
        let dim = steps[0].rows();
        for (index, u) in steps.iter().enumerate() {
            if u.rows() != dim || u.cols() != dim {
                return Err(HistoryError::StepDimensionMismatch {
                    index,
                    got: u.rows().max(u.cols()),
                    expected: dim,
                });
            }
            if !u.is_unitary(tol) {
                return Err(HistoryError::StepNotUnitary { index });
            }
        }
        Ok(UnitarySchedule { steps })
    }

    /// The step carrying t(k) to t(k+1), indexed from 0.
    pub fn step(&self, index: usize) -> &ComplexMatrix {
        &self.steps[index]
    }

    /// All steps in order.
    pub fn steps(&self) -> &[ComplexMatrix] {
        &self.steps
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// True when the schedule has no steps (never holds once validated).
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.steps[0].rows()
    }
}

/// One history: a choice of PDI member index at each time after t0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct History {
    choices: Vec<usize>,
}

impl History {
    /// Wraps a choice vector; validated against a family at use sites.
    pub fn new(choices: Vec<usize>) -> Self {
        History { choices }
    }

    /// Member index chosen at time slot `slot` (slot 0 = time t1).
    pub fn choice(&self, slot: usize) -> usize {
        self.choices[slot]
    }

    /// All choices in order.
    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    /// Number of choices.
    pub fn len(&self) -> usize {
        self.choices.len()
    }

    /// True when the history has no choices.
    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}

/// An initial state, a time grid, a unitary schedule, and one PDI per
/// time after t0: the complete sample-space data for quantum histories.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFamily {
    initial: Ket,
    grid: TimeGrid,
    schedule: UnitarySchedule,
    pdis: Vec<Pdi>,
}

impl HistoryFamily {
    /// Validates alignment of all parts and wraps them.
    ///
    /// `pdis[k]` is the decomposition sampled at time t(k+1), right after
    /// `schedule.step(k)` has acted.
    pub fn new(
        initial: Ket,
        grid: TimeGrid,
        schedule: UnitarySchedule,
        pdis: Vec<Pdi>,
        tol: Tolerance,
    ) -> Result<Self, HistoryError> {
        let n = grid.steps();
        if schedule.len() != n || pdis.len() != n {
            return Err(HistoryError::MisalignedFamily {
                times: grid.labels().len(),
                steps: schedule.len(),
                pdis: pdis.len(),
            });
        }
        let dim = schedule.dim();
        if initial.dim() != dim {
            return Err(HistoryError::InitialDimensionMismatch {
                got: initial.dim(),
                expected: dim,
            });
        }
        let norm = initial.norm();
        if (norm - 1.0).abs() > tol.eps() {
            return Err(HistoryError::InitialNotNormalized { norm });
        }
        for (slot, pdi) in pdis.iter().enumerate() {
            if pdi.dim() != dim {
                return Err(HistoryError::PdiDimensionMismatch {
                    slot,
                    got: pdi.dim(),
                    expected: dim,
                });
            }
        }
        let mut count: usize = 1;
        for pdi in &pdis {
            count = count.saturating_mul(pdi.len());
            if count > MAX_HISTORIES {
                return Err(HistoryError::TooManyHistories {
                    count,
                    max: MAX_HISTORIES,
                });
            }
        }
        Ok(HistoryFamily {
            initial,
            grid,
            schedule,
            pdis,
        })
    }

    /// The initial state at t0.
    pub fn initial(&self) -> &Ket {
        &self.initial
    }

    /// The time grid.
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// The unitary schedule.
    pub fn schedule(&self) -> &UnitarySchedule {
        &self.schedule
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.schedule.dim()
    }

    /// Number of time slots after t0.
    pub fn slots(&self) -> usize {
        self.pdis.len()
    }

    /// PDI sampled at time index `time_index` (1-based: t1 is index 1).
    pub fn pdi_at(&self, time_index: usize) -> &Pdi {
        &self.pdis[time_index - 1]
    }

    /// All PDIs in slot order (slot k holds the PDI for time t(k+1)).
    pub fn pdis(&self) -> &[Pdi] {
        &self.pdis
    }

    /// Total number of histories in the family.
    pub fn history_count(&self) -> usize {
        self.pdis.iter().map(Pdi::len).product()
    }

    /// Enumerates all histories in lexicographic order: the choice at the
    /// earliest time varies slowest.
    pub fn enumerate_histories(&self) -> Vec<History> {
        let total = self.history_count();
        let mut out = Vec::with_capacity(total);
        let sizes: Vec<usize> = self.pdis.iter().map(Pdi::len).collect();
        let mut current = vec![0usize; sizes.len()];
        for _ in 0..total {
            out.push(History::new(current.clone()));
            for slot in (0..sizes.len()).rev() {
                current[slot] += 1;
                if current[slot] < sizes[slot] {
                    break;
                }
                current[slot] = 0;
            }
        }
        out
    }

    /// Checks a history's shape against the family.
    pub fn validate_history(&self, y: &History) -> Result<(), HistoryError> {
        if y.len() != self.slots() {
            return Err(HistoryError::WrongChoiceCount {
                got: y.len(),
                expected: self.slots(),
            });
        }
        for (slot, &choice) in y.choices().iter().enumerate() {
            let members = self.pdis[slot].len();
            if choice >= members {
                return Err(HistoryError::BadChoice {
                    slot,
                    choice,
                    members,
                });
            }
        }
        Ok(())
    }

    /// Human-readable labels of a history's chosen members, in time order.
    pub fn history_labels(&self, y: &History) -> Result<Vec<String>, HistoryError> {
        self.validate_history(y)?;
        Ok(y.choices()
            .iter()
            .enumerate()
            .map(|(slot, &c)| self.pdis[slot].label(c).to_string())
            .collect())
    }
}

/// Chain operator of a history: the alternating product
/// `P(n) U(n) ... P(1) U(1)` applied left of the initial state.
pub fn chain_operator(fam: &HistoryFamily, y: &History) -> Result<ComplexMatrix, HistoryError> {
    fam.validate_history(y)?;
    let mut acc = ComplexMatrix::identity(fam.dim());
    for slot in 0..fam.slots() {
        acc = fam.schedule.step(slot).mat_mul(&acc)?;
        acc = fam.pdis[slot].member(y.choice(slot)).matrix().mat_mul(&acc)?;
    }
    Ok(acc)
}

/// Chain vector: the chain operator applied to the initial state,
/// computed by propagating the ket (cheaper than forming the operator).
pub fn chain_vector(fam: &HistoryFamily, y: &History) -> Result<ComplexMatrix, HistoryError> {
    fam.validate_history(y)?;
    let mut v = fam.initial.amplitudes().clone();
    for slot in 0..fam.slots() {
        v = fam.schedule.step(slot).mat_mul(&v)?;
        v = fam.pdis[slot].member(y.choice(slot)).matrix().mat_mul(&v)?;
    }
    Ok(v)
}

/// Decoherence functional entry D(Y, Y') = <C(Y') psi0 | C(Y) psi0>.
pub fn decoherence_functional(
    fam: &HistoryFamily,
    y: &History,
    y_prime: &History,
) -> Result<ComplexScalar, HistoryError> {
    let vy = chain_vector(fam, y)?;
    let vyp = chain_vector(fam, y_prime)?;
    Ok(vyp.inner(&vy)?)
}

/// Full consistency analysis of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    histories: Vec<History>,
    dfunc: ComplexMatrix,
    consistent: bool,
    max_offdiag: f64,
    probabilities: Option<Vec<f64>>,
}

impl ConsistencyReport {
    /// Histories in the enumeration order used for `dfunc` rows/columns.
    pub fn histories(&self) -> &[History] {
        &self.histories
    }

    /// The decoherence functional as a matrix over enumerated histories.
    pub fn dfunc(&self) -> &ComplexMatrix {
        &self.dfunc
    }

    /// True when every off-diagonal entry is within tolerance of zero.
    pub fn consistent(&self) -> bool {
        self.consistent
    }

    /// Largest off-diagonal modulus (0 for single-history families).
    pub fn max_offdiag(&self) -> f64 {
        self.max_offdiag
    }

    /// Born probabilities by enumeration index; present only when the
    /// family is consistent.
    pub fn probabilities(&self) -> Option<&[f64]> {
        self.probabilities.as_deref()
    }

    /// The diagonal of D, which sums to 1 whether or not the family is
    /// consistent.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.histories.len())
            .map(|i| self.dfunc.get(i, i).re)
            .collect()
    }

    /// Probability of one history, if the family is consistent.
    pub fn probability_of(&self, y: &History) -> Option<f64> {
        let idx = self.histories.iter().position(|h| h == y)?;
        self.probabilities.as_ref().map(|p| p[idx])
    }
}

/// Builds the decoherence functional over all histories and classifies
/// the family as consistent or not.
pub fn check_consistency(
    fam: &HistoryFamily,
    tol: Tolerance,
) -> Result<ConsistencyReport, HistoryError> {
    let histories = fam.enumerate_histories();
    let count = histories.len();
    let vectors: Vec<ComplexMatrix> = histories
        .iter()
        .map(|y| chain_vector(fam, y))
        .collect::<Result<_, _>>()?;
    let mut dfunc = ComplexMatrix::zeros(count, count);
    let mut max_offdiag = 0.0f64;
    for row in 0..count {
        for col in 0..=row {
            // D(Y, Y') = <C(Y') psi0 | C(Y) psi0>; row indexes Y.
            let entry = vectors[col].inner(&vectors[row])?;
            dfunc.set(row, col, entry);
            if row != col {
                dfunc.set(col, row, entry.conj());
                max_offdiag = max_offdiag.max(entry.norm());
            }
        }
    }
    let consistent = max_offdiag <= tol.eps();
    let probabilities = if consistent {
        Some((0..count).map(|i| dfunc.get(i, i).re).collect())
    } else {
        None
    };
    Ok(ConsistencyReport {
        histories,
        dfunc,
        consistent,
        max_offdiag,
        probabilities,
    })
}

/// Extended Born probability of one history inside a consistent family.
///
/// Fails with [`HistoryError::InconsistentFamily`] when the family does
/// not pass the consistency check, since the diagonal of D only carries
/// probability meaning in that case.
pub fn born_probability(
    fam: &HistoryFamily,
    y: &History,
    tol: Tolerance,
) -> Result<f64, HistoryError> {
    fam.validate_history(y)?;
    let report = check_consistency(fam, tol)?;
    if !report.consistent() {
        return Err(HistoryError::InconsistentFamily {
            max_offdiag: report.max_offdiag(),
        });
    }
    Ok(report
        .probability_of(y)
        .expect("validated history is enumerated"))
}

/// Tensor-product view of a history: the projector
/// `P1 (x) P2 (x) ... (x) Pn` on the n-fold history space.
///
/// This is a derived view for cross-checking the formalism at small
/// sizes, not the computational path: distinct histories of one family
/// map to mutually orthogonal projectors that sum to the identity.
pub fn history_space_projector(
    fam: &HistoryFamily,
    y: &History,
) -> Result<ComplexMatrix, HistoryError> {
    fam.validate_history(y)?;
    let mut acc = fam.pdis[0].member(y.choice(0)).matrix().clone();
    for slot in 1..fam.slots() {
        acc = acc.kron(fam.pdis[slot].member(y.choice(slot)).matrix());
    }
    Ok(acc)
}
