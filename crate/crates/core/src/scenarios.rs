//! Prebuilt history families for canonical gedanken experiments.
//!
//! Every scenario lives on a small fixed-dimension label space. Photon
//! paths are basis states; transport, beamsplitters, phase plates, and
//! blockers are unitaries that permute or superpose those labels, with
//! blockers rerouting into orthogonal absorbed-states rather than
//! deleting amplitude. Detectors and spin meters follow one pointer
//! model: a unitary copies the measured basis index into a pointer
//! register prepared in a ready state, so "the detector fired" is an
//! ordinary projector at the final time.
//!
//! Interventions (blockers, mirrors, spin flips, signal tampering) are
//! always a *second* explicitly built family, never a mutation of the
//! base family, so base and intervened runs can be compared side by side.

use crate::histories::{HistoryFamily, HistoryError, TimeGrid, UnitarySchedule};
use crate::numerics::{ComplexMatrix, ComplexScalar, NumericsError, Tolerance};
use crate::projectors::{Ket, Pdi, Projector, ProjectorError};
use num_complex::Complex64;
use thiserror::Error;

/// Errors raised while assembling scenario families.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    /// Scenario parameters fail their defining constraint.
    #[error("invalid scenario parameters: {0}")]
    InvalidParams(String),
    /// Underlying matrix arithmetic failed.
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    /// Underlying projector validation failed.
    #[error(transparent)]
    Projector(#[from] ProjectorError),
    /// Underlying family validation failed.
    #[error(transparent)]
    History(#[from] HistoryError),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A spatial direction in polar coordinates: `theta` from the +z axis,
/// `phi` from the +x axis in the x-y plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinDirection {
    theta: f64,
    phi: f64,
}

impl SpinDirection {
    /// Builds a direction, rejecting non-finite angles.
    pub fn new(theta: f64, phi: f64) -> Result<Self, ScenarioError> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(ScenarioError::InvalidParams(format!(
                "spin direction angles must be finite, got theta={theta}, phi={phi}"
            )));
        }
        Ok(SpinDirection { theta, phi })
    }

    /// The +x axis.
    pub fn x() -> Self {
        SpinDirection {
            theta: std::f64::consts::FRAC_PI_2,
            phi: 0.0,
        }
    }

    /// The +y axis.
    pub fn y() -> Self {
        SpinDirection {
            theta: std::f64::consts::FRAC_PI_2,
            phi: std::f64::consts::FRAC_PI_2,
        }
    }

    /// The +z axis.
    pub fn z() -> Self {
        SpinDirection {
            theta: 0.0,
            phi: 0.0,
        }
    }

    /// Polar angle from +z.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Azimuthal angle from +x.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Cartesian unit vector.
    pub fn unit_vector(&self) -> [f64; 3] {
        [
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        ]
    }

    /// Angle between two directions, in [0, pi].
    pub fn angle_between(&self, other: &SpinDirection) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        dot.clamp(-1.0, 1.0).acos()
    }

    /// Short display name: x, y, z for the canonical axes, angles otherwise.
    pub fn name(&self) -> String {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        let half_pi = std::f64::consts::FRAC_PI_2;
        if close(self.theta, 0.0) {
            "z".to_string()
        } else if close(self.theta, half_pi) && close(self.phi, 0.0) {
            "x".to_string()
        } else if close(self.theta, half_pi) && close(self.phi, half_pi) {
            "y".to_string()
        } else {
            format!("({:.4},{:.4})", self.theta, self.phi)
        }
    }
}

/// Spin-1/2 rotation by `angle` about `axis`:
/// `cos(angle/2) I - i sin(angle/2) (n . sigma)`.
pub fn rotation_unitary(axis: &SpinDirection, angle: f64) -> Result<ComplexMatrix, ScenarioError> {
    if !angle.is_finite() {
        return Err(ScenarioError::InvalidParams(format!(
            "rotation angle must be finite, got {angle}"
        )));
    }
    let [nx, ny, nz] = axis.unit_vector();
    let co = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    Ok(ComplexMatrix::from_rows(&[
        vec![c(co, -s * nz), c(-s * ny, -s * nx)],
        vec![c(s * ny, -s * nx), c(co, s * nz)],
    ])?)
}

/// Spin-up ket along a direction: `(cos(theta/2), e^{i phi} sin(theta/2))`.
pub fn spin_up(axis: &SpinDirection) -> Ket {
    let half = axis.theta / 2.0;
    Ket::from_amplitudes(vec![
        c(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), axis.phi),
    ])
    .expect("two finite amplitudes")
}

/// Spin-down ket along a direction, orthogonal to [`spin_up`].
pub fn spin_down(axis: &SpinDirection) -> Ket {
    let half = axis.theta / 2.0;
    Ket::from_amplitudes(vec![
        c(-half.sin(), 0.0),
        Complex64::from_polar(half.cos(), axis.phi),
    ])
    .expect("two finite amplitudes")
}

/// Measurement pointer: a register of dimension `outcomes + 1` whose
/// index 0 is the ready state and whose index j+1 records outcome j.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointerModel {
    outcomes: usize,
}

impl PointerModel {
    /// A pointer with the given number of outcomes (at least one).
    pub fn new(outcomes: usize) -> Result<Self, ScenarioError> {
        if outcomes == 0 {
            return Err(ScenarioError::InvalidParams(
                "pointer needs at least one outcome".to_string(),
            ));
        }
        Ok(PointerModel { outcomes })
    }

    /// Number of recordable outcomes.
    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// Pointer register dimension (outcomes + ready).
    pub fn dim(&self) -> usize {
        self.outcomes + 1
    }

    /// Index of the ready state.
    pub fn ready_index(&self) -> usize {
        0
    }

    /// Pointer index recording outcome `j`.
    pub fn outcome_index(&self, j: usize) -> usize {
        j + 1
    }

    /// The ready ket of the pointer register.
    pub fn ready_ket(&self) -> Ket {
        Ket::basis(self.dim(), 0).expect("ready index in range")
    }

    /// Projector onto the pointer state recording outcome `j`.
    pub fn outcome_projector(&self, j: usize) -> Result<Projector, ScenarioError> {
        if j >= self.outcomes {
            return Err(ScenarioError::InvalidParams(format!(
                "pointer has {} outcomes, no outcome {j}",
                self.outcomes
            )));
        }
        Ok(Projector::basis_subset(self.dim(), &[self.outcome_index(j)])?)
    }

    /// Projector onto the untouched ready state.
    pub fn ready_projector(&self) -> Projector {
        Projector::basis_subset(self.dim(), &[0]).expect("index 0 in range")
    }

    /// Copy unitary on system (x) pointer for a system whose measured
    /// basis has exactly `outcomes` states: `|j, m> -> |j, m + j + 1>`
    /// with pointer arithmetic mod `outcomes + 1`. Starting from ready,
    /// basis state j drives the pointer to record j.
    pub fn copy_unitary(&self) -> ComplexMatrix {
        let k = self.outcomes;
        let pdim = self.dim();
        permutation_by_map(k * pdim, |idx| {
            let j = idx / pdim;
            let m = idx % pdim;
            j * pdim + (m + j + 1) % pdim
        })
        .expect("controlled shift is a bijection")
    }
}

/// Permutation matrix sending basis column `j` to basis column `map(j)`.
fn permutation_by_map(
    dim: usize,
    map: impl Fn(usize) -> usize,
) -> Result<ComplexMatrix, NumericsError> {
    let mut m = ComplexMatrix::zeros(dim, dim);
    let mut seen = vec![false; dim];
    for j in 0..dim {
        let i = map(j);
        if i >= dim || seen[i] {
            return Err(NumericsError::OutOfBounds {
                row: i,
                col: j,
                rows: dim,
                cols: dim,
            });
        }
        seen[i] = true;
        m.set(i, j, c(1.0, 0.0));
    }
    Ok(m)
}

/// Unitary mapping the measured axis onto the computational basis:
/// `|up(axis)> -> |0>`, `|down(axis)> -> |1>`.
fn measure_axis_rotation(axis: &SpinDirection) -> ComplexMatrix {
    let up = spin_up(axis);
    let down = spin_down(axis);
    let bra_up = up.amplitudes().adjoint();
    let bra_down = down.amplitudes().adjoint();
    ComplexMatrix::from_rows(&[
        vec![bra_up.get(0, 0), bra_up.get(0, 1)],
        vec![bra_down.get(0, 0), bra_down.get(0, 1)],
    ])
    .expect("two rows of two entries")
}

// ---------------------------------------------------------------------
// Beamsplitter (one splitter, two detectors, optional blocker or mirror)
// ---------------------------------------------------------------------

/// Basis labels of the beamsplitter space (dimension 6).
pub mod beamsplitter_basis {
    /// Source channel before the splitter.
    pub const SOURCE: usize = 0;
    /// Transmitted path.
    pub const PATH_A: usize = 1;
    /// Reflected path.
    pub const PATH_B: usize = 2;
    /// Detector on path a.
    pub const DET_A: usize = 3;
    /// Detector on path b.
    pub const DET_B: usize = 4;
    /// Extra channel: absorber or relocated detector on path a.
    pub const EXTRA: usize = 5;
    /// Space dimension.
    pub const DIM: usize = 6;
}

/// Splitter amplitudes: source goes to `alpha |a> + beta |b>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamsplitterParams {
    /// Amplitude on path a.
    pub alpha: ComplexScalar,
    /// Amplitude on path b.
    pub beta: ComplexScalar,
}

impl BeamsplitterParams {
    fn validate(&self, tol: Tolerance) -> Result<(), ScenarioError> {
        let total = self.alpha.norm_sqr() + self.beta.norm_sqr();
        if !total.is_finite() || (total - 1.0).abs() > tol.eps() {
            return Err(ScenarioError::InvalidParams(format!(
                "splitter amplitudes must satisfy |alpha|^2 + |beta|^2 = 1, got {total}"
            )));
        }
        Ok(())
    }
}

/// Three-time beamsplitter family.
///
/// t0: photon in the source channel. Step 1: splitter sends it to
/// `alpha |a> + beta |b>`. t1 PDI: which-path question {a, b, elsewhere}.
/// Step 2: transport into detector states; with `block_a` the a path is
/// rerouted into an absorber, with `mirror_to_dstar` into a relocated
/// detector (same rerouting, different reading). t2 PDI: {Da, Db,
/// absorbed-or-D*a, none}, member order as listed.
pub fn build_beamsplitter(
    params: &BeamsplitterParams,
    block_a: bool,
    mirror_to_dstar: bool,
    tol: Tolerance,
) -> Result<HistoryFamily, ScenarioError> {
    use beamsplitter_basis::*;
    params.validate(tol)?;
    if block_a && mirror_to_dstar {
        return Err(ScenarioError::InvalidParams(
            "block_a and mirror_to_dstar are mutually exclusive".to_string(),
        ));
    }
    let mut split = ComplexMatrix::identity(DIM);
    // Column SOURCE: the splitter output.
    split.set(SOURCE, SOURCE, c(0.0, 0.0));
    split.set(PATH_A, SOURCE, params.alpha);
    split.set(PATH_B, SOURCE, params.beta);
    // Column PATH_A: an orthogonal companion output, unused by the
    // initial state but needed for unitarity.
    split.set(PATH_A, PATH_A, params.beta.conj());
    split.set(PATH_B, PATH_A, -params.alpha.conj());
    // Column PATH_B: returns to the source channel.
    split.set(PATH_B, PATH_B, c(0.0, 0.0));
    split.set(SOURCE, PATH_B, c(1.0, 0.0));

    let transport = if block_a || mirror_to_dstar {
        permutation_by_map(DIM, |j| match j {
            PATH_A => EXTRA,
            EXTRA => PATH_A,
            PATH_B => DET_B,
            DET_B => PATH_B,
            other => other,
        })?
    } else {
        permutation_by_map(DIM, |j| match j {
            PATH_A => DET_A,
            DET_A => PATH_A,
            PATH_B => DET_B,
            DET_B => PATH_B,
            other => other,
        })?
    };

    let path_pdi = Pdi::new(
        vec![
            Projector::basis_subset(DIM, &[PATH_A])?,
            Projector::basis_subset(DIM, &[PATH_B])?,
            Projector::basis_subset(DIM, &[SOURCE, DET_A, DET_B, EXTRA])?,
        ],
        vec![
            "path=a".to_string(),
            "path=b".to_string(),
            "elsewhere".to_string(),
        ],
        tol,
    )?;
    let extra_label = if mirror_to_dstar { "D*a" } else { "absorbed" };
    let detector_pdi = Pdi::new(
        vec![
            Projector::basis_subset(DIM, &[DET_A])?,
            Projector::basis_subset(DIM, &[DET_B])?,
            Projector::basis_subset(DIM, &[EXTRA])?,
            Projector::basis_subset(DIM, &[SOURCE, PATH_A, PATH_B])?,
        ],
        vec![
            "Da".to_string(),
            "Db".to_string(),
            extra_label.to_string(),
            "none".to_string(),
        ],
        tol,
    )?;

    Ok(HistoryFamily::new(
        Ket::basis(DIM, SOURCE)?,
        TimeGrid::from_labels(&["t0", "t1", "t2"])?,
        UnitarySchedule::new(vec![split, transport], tol)?,
        vec![path_pdi, detector_pdi],
        tol,
    )?)
}

// ---------------------------------------------------------------------
// Mach-Zehnder interferometer
// ---------------------------------------------------------------------

/// Basis labels of the Mach-Zehnder space (dimension 9).
pub mod mach_zehnder_basis {
    /// Source channel.
    pub const SOURCE: usize = 0;
    /// Upper arm.
    pub const PATH_A: usize = 1;
    /// Lower arm.
    pub const PATH_B: usize = 2;
    /// Output channel c.
    pub const OUT_C: usize = 3;
    /// Output channel d.
    pub const OUT_D: usize = 4;
    /// Detector on output c.
    pub const DET_C: usize = 5;
    /// Detector on output d.
    pub const DET_D: usize = 6;
    /// Absorber for a blocked upper arm.
    pub const ABSORB_A: usize = 7;
    /// Absorber for a blocked lower arm.
    pub const ABSORB_B: usize = 8;
    /// Space dimension.
    pub const DIM: usize = 9;
}

/// Interferometer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachZehnderParams {
    /// Phase plate on arm a.
    pub phi_a: f64,
    /// Phase plate on arm b.
    pub phi_b: f64,
    /// Whether the recombining splitter is installed.
    pub bs2_present: bool,
    /// Blocker in arm a.
    pub block_a: bool,
    /// Blocker in arm b.
    pub block_b: bool,
}

impl Default for MachZehnderParams {
    fn default() -> Self {
        MachZehnderParams {
            phi_a: 0.0,
            phi_b: 0.0,
            bs2_present: true,
            block_a: false,
            block_b: false,
        }
    }
}

/// Choice of question asked inside the interferometer at t1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MzIntermediate {
    /// Which arm: {a, b, elsewhere}.
    WhichPath,
    /// Coherent combinations: {(a+b)/sqrt2, (a-b)/sqrt2, elsewhere}.
    Superposition,
    /// No question: {I}.
    Trivial,
}

/// Three-time Mach-Zehnder family.
///
/// Step 1 is the symmetric input splitter `|s> -> (|a> + |b>)/sqrt2`.
/// The t1 PDI asks the chosen intermediate question. Step 2 applies the
/// arm phases, any blockers (rerouting into absorber states), the output
/// splitter when present (`|a> -> (|c>+|d>)/sqrt2`, `|b> -> (|c>-|d>)/
/// sqrt2`) or a plain crossing (`a -> c`, `b -> d`) when absent, then
/// transport onto the detectors. The t2 PDI is {Dc, Dd, absorbed, none},
/// member order as listed.
pub fn build_mach_zehnder(
    params: &MachZehnderParams,
    intermediate: MzIntermediate,
    tol: Tolerance,
) -> Result<HistoryFamily, ScenarioError> {
    use mach_zehnder_basis::*;
    if !params.phi_a.is_finite() || !params.phi_b.is_finite() {
        return Err(ScenarioError::InvalidParams(format!(
            "arm phases must be finite, got phi_a={}, phi_b={}",
            params.phi_a, params.phi_b
        )));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;

    let mut bs1 = ComplexMatrix::identity(DIM);
    bs1.set(SOURCE, SOURCE, c(0.0, 0.0));
    bs1.set(PATH_A, SOURCE, c(r, 0.0));
    bs1.set(PATH_B, SOURCE, c(r, 0.0));
    bs1.set(PATH_A, PATH_A, c(r, 0.0));
    bs1.set(PATH_B, PATH_A, c(-r, 0.0));
    bs1.set(PATH_B, PATH_B, c(0.0, 0.0));
    bs1.set(SOURCE, PATH_B, c(1.0, 0.0));

    let mut phases = ComplexMatrix::identity(DIM);
    phases.set(PATH_A, PATH_A, Complex64::from_polar(1.0, params.phi_a));
    phases.set(PATH_B, PATH_B, Complex64::from_polar(1.0, params.phi_b));

    let blockers = permutation_by_map(DIM, |j| match j {
        PATH_A if params.block_a => ABSORB_A,
        ABSORB_A if params.block_a => PATH_A,
        PATH_B if params.block_b => ABSORB_B,
        ABSORB_B if params.block_b => PATH_B,
        other => other,
    })?;

    let recombine = if params.bs2_present {
        let mut bs2 = ComplexMatrix::identity(DIM);
        bs2.set(PATH_A, PATH_A, c(0.0, 0.0));
        bs2.set(OUT_C, PATH_A, c(r, 0.0));
        bs2.set(OUT_D, PATH_A, c(r, 0.0));
        bs2.set(PATH_B, PATH_B, c(0.0, 0.0));
        bs2.set(OUT_C, PATH_B, c(r, 0.0));
        bs2.set(OUT_D, PATH_B, c(-r, 0.0));
        bs2.set(OUT_C, OUT_C, c(0.0, 0.0));
        bs2.set(PATH_A, OUT_C, c(r, 0.0));
        bs2.set(PATH_B, OUT_C, c(r, 0.0));
        bs2.set(OUT_D, OUT_D, c(0.0, 0.0));
        bs2.set(PATH_A, OUT_D, c(r, 0.0));
        bs2.set(PATH_B, OUT_D, c(-r, 0.0));
        bs2
    } else {
        permutation_by_map(DIM, |j| match j {
            PATH_A => OUT_C,
            OUT_C => PATH_A,
            PATH_B => OUT_D,
            OUT_D => PATH_B,
            other => other,
        })?
    };

    let to_detectors = permutation_by_map(DIM, |j| match j {
        OUT_C => DET_C,
        DET_C => OUT_C,
        OUT_D => DET_D,
        DET_D => OUT_D,
        other => other,
    })?;

    let step2 = to_detectors
        .mat_mul(&recombine)?
        .mat_mul(&blockers)?
        .mat_mul(&phases)?;

    let outside_arms = Projector::basis_subset(
        DIM,
        &[SOURCE, OUT_C, OUT_D, DET_C, DET_D, ABSORB_A, ABSORB_B],
    )?;
    let intermediate_pdi = match intermediate {
        MzIntermediate::WhichPath => Pdi::new(
            vec![
                Projector::basis_subset(DIM, &[PATH_A])?,
                Projector::basis_subset(DIM, &[PATH_B])?,
                outside_arms,
            ],
            vec![
                "path=a".to_string(),
                "path=b".to_string(),
                "elsewhere".to_string(),
            ],
            tol,
        )?,
        MzIntermediate::Superposition => {
            let mut sym = vec![c(0.0, 0.0); DIM];
            sym[PATH_A] = c(r, 0.0);
            sym[PATH_B] = c(r, 0.0);
            let mut antisym = vec![c(0.0, 0.0); DIM];
            antisym[PATH_A] = c(r, 0.0);
            antisym[PATH_B] = c(-r, 0.0);
            Pdi::new(
                vec![
                    Ket::from_amplitudes(sym)?.projector(tol)?,
                    Ket::from_amplitudes(antisym)?.projector(tol)?,
                    outside_arms,
                ],
                vec![
                    "path=sym".to_string(),
                    "path=antisym".to_string(),
                    "elsewhere".to_string(),
                ],
                tol,
            )?
        }
        MzIntermediate::Trivial => Pdi::trivial(DIM),
    };

    let detector_pdi = Pdi::new(
        vec![
            Projector::basis_subset(DIM, &[DET_C])?,
            Projector::basis_subset(DIM, &[DET_D])?,
            Projector::basis_subset(DIM, &[ABSORB_A, ABSORB_B])?,
            Projector::basis_subset(DIM, &[SOURCE, PATH_A, PATH_B, OUT_C, OUT_D])?,
        ],
        vec![
            "Dc".to_string(),
            "Dd".to_string(),
            "absorbed".to_string(),
            "none".to_string(),
        ],
        tol,
    )?;

    Ok(HistoryFamily::new(
        Ket::basis(DIM, SOURCE)?,
        TimeGrid::from_labels(&["t0", "t1", "t2"])?,
        UnitarySchedule::new(vec![bs1, step2], tol)?,
        vec![intermediate_pdi, detector_pdi],
        tol,
    )?)
}

// ---------------------------------------------------------------------
// Spin-half prepare-and-measure
// ---------------------------------------------------------------------

/// Choice of question asked between preparation and measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinIntermediate {
    /// Spin component along the preparation axis.
    AlongPrep,
    /// Spin component along the measurement axis.
    AlongMeasure,
    /// No question: {I}.
    Trivial,
}

/// Member order of spin-half pointer PDIs: ready, then +, then -.
pub mod spin_pointer {
    /// Pointer still in its ready state.
    pub const READY: usize = 0;
    /// Pointer recorded spin-up.
    pub const PLUS: usize = 1;
    /// Pointer recorded spin-down.
    pub const MINUS: usize = 2;
}

/// Three-time spin-half family on spin (x) pointer (dimension 6).
///
/// t0: spin-up along `prep`, pointer ready. Step 1: free transport
/// (identity). t1 PDI: the chosen intermediate question, tensored with
/// the pointer identity. Step 2: the measurement, which rotates the
/// `measure` axis onto the computational basis and copies the result
/// into the pointer. t2 PDI: pointer framework {ready, +, -} (member
/// order as in [`spin_pointer`]).
pub fn build_spin_half(
    prep: &SpinDirection,
    measure: &SpinDirection,
    intermediate: SpinIntermediate,
    tol: Tolerance,
) -> Result<HistoryFamily, ScenarioError> {
    let pointer = PointerModel::new(2)?;
    let dim = 2 * pointer.dim();
    let initial = spin_up(prep).kron(&pointer.ready_ket());
    let rotate = measure_axis_rotation(measure).kron(&ComplexMatrix::identity(pointer.dim()));
    let measurement = pointer.copy_unitary().mat_mul(&rotate)?;

    let spin_question = |axis: &SpinDirection| -> Result<Pdi, ScenarioError> {
        let name = axis.name();
        let id_ptr = Projector::identity(pointer.dim());
        Ok(Pdi::new(
            vec![
                spin_up(axis).projector(tol)?.kron(&id_ptr),
                spin_down(axis).projector(tol)?.kron(&id_ptr),
            ],
            vec![format!("S{name}=+1/2"), format!("S{name}=-1/2")],
            tol,
        )?)
    };
    let intermediate_pdi = match intermediate {
        SpinIntermediate::AlongPrep => spin_question(prep)?,
        SpinIntermediate::AlongMeasure => spin_question(measure)?,
        SpinIntermediate::Trivial => Pdi::trivial(dim),
    };

    let id_spin = Projector::identity(2);
    let pointer_pdi = Pdi::new(
        vec![
            id_spin.kron(&pointer.ready_projector()),
            id_spin.kron(&pointer.outcome_projector(0)?),
            id_spin.kron(&pointer.outcome_projector(1)?),
        ],
        vec![
            "pointer=ready".to_string(),
            "pointer=+".to_string(),
            "pointer=-".to_string(),
        ],
        tol,
    )?;

    Ok(HistoryFamily::new(
        initial,
        TimeGrid::from_labels(&["t0", "t1", "t2"])?,
        UnitarySchedule::new(vec![ComplexMatrix::identity(dim), measurement], tol)?,
        vec![intermediate_pdi, pointer_pdi],
        tol,
    )?)
}

// ---------------------------------------------------------------------
// EPRB pair
// ---------------------------------------------------------------------

/// A spin rotation applied to one particle between creation and
/// measurement, used to build intervened EPRB variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BobIntervention {
    /// Rotation axis.
    pub axis: SpinDirection,
    /// Rotation angle.
    pub angle: f64,
}

/// Three-time singlet-pair family on spin_a (x) spin_b (x) ptr_a (x)
/// ptr_b (dimension 36).
///
/// t0: the singlet `(|z+ z-> - |z- z+>)/sqrt2` with both pointers ready.
/// Step 1: identity, or the intervention rotation on particle b. t1 PDI:
/// the four joint spin components along the two measurement axes,
/// member index `2 i + j` for (a outcome i, b outcome j), 0 = up. Step
/// 2: both measurements (axis rotations plus pointer copies). t2 PDI:
/// the nine joint pointer readings, member index `3 pa + pb` with
/// pointer value order ready, +, -.
pub fn build_eprb(
    alice_axis: &SpinDirection,
    bob_axis: &SpinDirection,
    intervention: Option<&BobIntervention>,
    tol: Tolerance,
) -> Result<HistoryFamily, ScenarioError> {
    let pointer = PointerModel::new(2)?;
    let pdim = pointer.dim();
    let dim = 4 * pdim * pdim;

    let r = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = Ket::from_amplitudes(vec![c(0.0, 0.0), c(r, 0.0), c(-r, 0.0), c(0.0, 0.0)])?;
    let both_ready = pointer.ready_ket().kron(&pointer.ready_ket());
    let initial = singlet.kron(&both_ready);

    let step1 = match intervention {
        None => ComplexMatrix::identity(dim),
        Some(iv) => {
            let rot = rotation_unitary(&iv.axis, iv.angle)?;
            ComplexMatrix::identity(2)
                .kron(&rot)
                .kron(&ComplexMatrix::identity(pdim * pdim))
        }
    };

    let rotations = measure_axis_rotation(alice_axis)
        .kron(&measure_axis_rotation(bob_axis))
        .kron(&ComplexMatrix::identity(pdim * pdim));
    let copy = permutation_by_map(dim, |idx| {
        let pb = idx % pdim;
        let pa = (idx / pdim) % pdim;
        let sb = (idx / (pdim * pdim)) % 2;
        let sa = idx / (pdim * pdim * 2);
        let pa2 = (pa + sa + 1) % pdim;
        let pb2 = (pb + sb + 1) % pdim;
        ((sa * 2 + sb) * pdim + pa2) * pdim + pb2
    })?;
    let step2 = copy.mat_mul(&rotations)?;

    let id_ptrs = Projector::identity(pdim * pdim);
    let a_name = alice_axis.name();
    let b_name = bob_axis.name();
    let sign = |i: usize| if i == 0 { "+1/2" } else { "-1/2" };
    let mut spin_members = Vec::new();
    let mut spin_labels = Vec::new();
    for i in 0..2 {
        let pa = if i == 0 {
            spin_up(alice_axis).projector(tol)?
        } else {
            spin_down(alice_axis).projector(tol)?
        };
        for j in 0..2 {
            let pb = if j == 0 {
                spin_up(bob_axis).projector(tol)?
            } else {
                spin_down(bob_axis).projector(tol)?
            };
            spin_members.push(pa.kron(&pb).kron(&id_ptrs));
            spin_labels.push(format!(
                "Sa({a_name})={} & Sb({b_name})={}",
                sign(i),
                sign(j)
            ));
        }
    }
    let spin_pdi = Pdi::new(spin_members, spin_labels, tol)?;

    let id_spins = Projector::identity(4);
    let value_name = |p: usize| match p {
        0 => "ready",
        1 => "+",
        _ => "-",
    };
    let mut ptr_members = Vec::new();
    let mut ptr_labels = Vec::new();
    for pa in 0..pdim {
        let proj_a = if pa == 0 {
            pointer.ready_projector()
        } else {
            pointer.outcome_projector(pa - 1)?
        };
        for pb in 0..pdim {
            let proj_b = if pb == 0 {
                pointer.ready_projector()
            } else {
                pointer.outcome_projector(pb - 1)?
            };
            ptr_members.push(id_spins.kron(&proj_a).kron(&proj_b));
            ptr_labels.push(format!("ptrA={} & ptrB={}", value_name(pa), value_name(pb)));
        }
    }
    let pointer_pdi = Pdi::new(ptr_members, ptr_labels, tol)?;

    Ok(HistoryFamily::new(
        initial,
        TimeGrid::from_labels(&["t0", "t1", "t2"])?,
        UnitarySchedule::new(vec![step1, step2], tol)?,
        vec![spin_pdi, pointer_pdi],
        tol,
    )?)
}

/// Index of the t2 member "ptrA=va & ptrB=vb" with 0 = ready, 1 = +, 2 = -.
pub fn eprb_pointer_member(va: usize, vb: usize) -> usize {
    3 * va + vb
}

// ---------------------------------------------------------------------
// Classical signal relay (one sender, two receivers)
// ---------------------------------------------------------------------

/// Four-time classical relay family on sender (x) record_a (x) record_b
/// (dimension 8), fully diagonal after the preparation step.
///
/// A sender bit is prepared uniform at random and broadcast to two
/// receivers who record it at different times (receiver Alice is closer,
/// so her record exists first). With `flip_bob`, the copy heading to Bob
/// is inverted in transit after Alice's record exists; the family shape
/// is unchanged, only the final step differs. t1 PDI: sender bit. t2
/// PDI: Alice's record. t3 PDI: Bob's record. Member order: value 0,
/// then value 1.
pub fn build_charlie_model(flip_bob: bool, tol: Tolerance) -> Result<HistoryFamily, ScenarioError> {
    let dim = 8;
    let idx = |s: usize, a: usize, b: usize| s * 4 + a * 2 + b;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = ComplexMatrix::from_rows(&[
        vec![c(r, 0.0), c(r, 0.0)],
        vec![c(r, 0.0), c(-r, 0.0)],
    ])?;
    let prepare = hadamard.kron(&ComplexMatrix::identity(4));
    let copy_to_a = permutation_by_map(dim, |j| {
        let (s, a, b) = (j / 4, (j / 2) % 2, j % 2);
        idx(s, a ^ s, b)
    })?;
    let copy_to_b = permutation_by_map(dim, |j| {
        let (s, a, b) = (j / 4, (j / 2) % 2, j % 2);
        let received = if flip_bob { s ^ 1 } else { s };
        idx(s, a, b ^ received)
    })?;

    let bit_pdi = |ones: Vec<usize>, zeros: Vec<usize>, name: &str| -> Result<Pdi, ScenarioError> {
        Ok(Pdi::new(
            vec![
                Projector::basis_subset(dim, &zeros)?,
                Projector::basis_subset(dim, &ones)?,
            ],
            vec![format!("{name}=0"), format!("{name}=1")],
            tol,
        )?)
    };
    let all = 0..dim;
    let sender_ones: Vec<usize> = all.clone().filter(|j| j / 4 == 1).collect();
    let sender_zeros: Vec<usize> = all.clone().filter(|j| j / 4 == 0).collect();
    let alice_ones: Vec<usize> = all.clone().filter(|j| (j / 2) % 2 == 1).collect();
    let alice_zeros: Vec<usize> = all.clone().filter(|j| (j / 2) % 2 == 0).collect();
    let bob_ones: Vec<usize> = all.clone().filter(|j| j % 2 == 1).collect();
    let bob_zeros: Vec<usize> = all.filter(|j| j % 2 == 0).collect();

    Ok(HistoryFamily::new(
        Ket::basis(dim, 0)?,
        TimeGrid::from_labels(&["t0", "t1", "t2", "t3"])?,
        UnitarySchedule::new(vec![prepare, copy_to_a, copy_to_b], tol)?,
        vec![
            bit_pdi(sender_ones, sender_zeros, "Charlie")?,
            bit_pdi(alice_ones, alice_zeros, "Alice")?,
            bit_pdi(bob_ones, bob_zeros, "Bob")?,
        ],
        tol,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causes::{
        classify_cause, compare_intervention, find_causes, find_common_causes, Classification,
        Event, DEFAULT_THRESHOLD,
    };
    use crate::histories::check_consistency;
    use crate::projectors::{conjunction, projector_from_ket};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    /// Closed-form output amplitudes of the tuned interferometer: with
    /// arm phases (pa, pb) the c and d amplitudes are (e^{i pa} + e^{i
    /// pb})/2 and (e^{i pa} - e^{i pb})/2. Independent of the engine's
    /// label-space construction.
    fn mz_output_probs(phi_a: f64, phi_b: f64) -> (f64, f64) {
        let ea = Complex64::from_polar(1.0, phi_a);
        let eb = Complex64::from_polar(1.0, phi_b);
        let amp_c = (ea + eb) / 2.0;
        let amp_d = (ea - eb) / 2.0;
        (amp_c.norm_sqr(), amp_d.norm_sqr())
    }

    /// Closed-form singlet joint distribution: the amplitude for (a
    /// outcome i, b outcome j) is `(<va_i|z+><vb_j|z-> -
    /// <va_i|z-><vb_j|z+>)/sqrt2`, pure scalar arithmetic.
    fn singlet_joint_prob(
        alice: &SpinDirection,
        bob: &SpinDirection,
        i: usize,
        j: usize,
    ) -> f64 {
        let pick = |axis: &SpinDirection, out: usize| {
            let k = if out == 0 { spin_up(axis) } else { spin_down(axis) };
            (
                k.amplitudes().get(0, 0).conj(),
                k.amplitudes().get(1, 0).conj(),
            )
        };
        let (a_up, a_dn) = pick(alice, i);
        let (b_up, b_dn) = pick(bob, j);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let amp = (a_up * b_dn - a_dn * b_up) * c(r, 0.0);
        amp.norm_sqr()
    }

    #[test]
    fn rotation_about_y_by_half_pi_sends_zplus_to_xplus() {
        let u = rotation_unitary(&SpinDirection::y(), std::f64::consts::FRAC_PI_2).unwrap();
        assert!(u.is_unitary(tol()));
        let zp = Ket::basis(2, 0).unwrap();
        let moved = u.mat_mul(zp.amplitudes()).unwrap();
        let xp = spin_up(&SpinDirection::x());
        assert!(moved.approx_eq(xp.amplitudes(), tol()).unwrap());
    }

    #[test]
    fn spin_kets_are_orthonormal_eigenpairs() {
        let axis = SpinDirection::new(1.1, 2.3).unwrap();
        let up = spin_up(&axis);
        let down = spin_down(&axis);
        assert!((up.norm() - 1.0).abs() < 1e-12);
        assert!((down.norm() - 1.0).abs() < 1e-12);
        assert!(up.amplitudes().inner(down.amplitudes()).unwrap().norm() < 1e-12);
        // A full turn about the axis returns both (up to global sign).
        let u = rotation_unitary(&axis, 2.0 * std::f64::consts::PI).unwrap();
        let turned = u.mat_mul(up.amplitudes()).unwrap();
        assert!(turned.approx_eq(&up.amplitudes().scale(c(-1.0, 0.0)), tol()).unwrap());
    }

    #[test]
    fn beamsplitter_statistics_follow_the_amplitudes() {
        let params = BeamsplitterParams {
            alpha: c(0.6, 0.0),
            beta: c(0.0, 0.8),
        };
        let fam = build_beamsplitter(&params, false, false, tol()).unwrap();
        let report = check_consistency(&fam, tol()).unwrap();
        assert!(report.consistent());
        let da = Event::from_member(&fam, 2, 0).unwrap();
        let db = Event::from_member(&fam, 2, 1).unwrap();
        let p_da = crate::causes::event_probability(&fam, &da, tol()).unwrap();
        let p_db = crate::causes::event_probability(&fam, &db, tol()).unwrap();
        assert!((p_da - 0.36).abs() < 1e-12);
        assert!((p_db - 0.64).abs() < 1e-12);
    }

    #[test]
    fn blocked_and_mirrored_beamsplitters_reroute_path_a() {
        let params = BeamsplitterParams {
            alpha: c(0.6, 0.0),
            beta: c(0.0, 0.8),
        };
        let blocked = build_beamsplitter(&params, true, false, tol()).unwrap();
        let p_da =
            crate::causes::event_probability(&blocked, &Event::from_member(&blocked, 2, 0).unwrap(), tol())
                .unwrap();
        let p_db =
            crate::causes::event_probability(&blocked, &Event::from_member(&blocked, 2, 1).unwrap(), tol())
                .unwrap();
        let p_abs =
            crate::causes::event_probability(&blocked, &Event::from_member(&blocked, 2, 2).unwrap(), tol())
                .unwrap();
        assert!(p_da.abs() < 1e-12);
        assert!((p_db - 0.64).abs() < 1e-12);
        assert!((p_abs - 0.36).abs() < 1e-12);
        assert_eq!(blocked.pdi_at(2).label(2), "absorbed");

        let mirrored = build_beamsplitter(&params, false, true, tol()).unwrap();
        assert_eq!(mirrored.pdi_at(2).label(2), "D*a");
        let p_dstar =
            crate::causes::event_probability(&mirrored, &Event::from_member(&mirrored, 2, 2).unwrap(), tol())
                .unwrap();
        assert!((p_dstar - 0.36).abs() < 1e-12);

        assert!(build_beamsplitter(&params, true, true, tol()).is_err());
    }

    #[test]
    fn beamsplitter_rejects_unnormalized_amplitudes() {
        let params = BeamsplitterParams {
            alpha: c(1.0, 0.0),
            beta: c(1.0, 0.0),
        };
        assert!(matches!(
            build_beamsplitter(&params, false, false, tol()).unwrap_err(),
            ScenarioError::InvalidParams(_)
        ));
    }

    #[test]
    fn tuned_interferometer_sends_everything_to_dc() {
        let fam =
            build_mach_zehnder(&MachZehnderParams::default(), MzIntermediate::Trivial, tol())
                .unwrap();
        let report = check_consistency(&fam, tol()).unwrap();
        assert!(report.consistent());
        let dc = Event::from_member(&fam, 2, 0).unwrap();
        let p = crate::causes::event_probability(&fam, &dc, tol()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fringe_probabilities_match_the_closed_form() {
        for k in 0..8 {
            let delta = k as f64 * std::f64::consts::PI / 4.0;
            let params = MachZehnderParams {
                phi_a: delta,
                phi_b: 0.0,
                ..MachZehnderParams::default()
            };
            let fam = build_mach_zehnder(&params, MzIntermediate::Trivial, tol()).unwrap();
            let (pc, pd) = mz_output_probs(delta, 0.0);
            let p_dc = crate::causes::event_probability(
                &fam,
                &Event::from_member(&fam, 2, 0).unwrap(),
                tol(),
            )
            .unwrap();
            let p_dd = crate::causes::event_probability(
                &fam,
                &Event::from_member(&fam, 2, 1).unwrap(),
                tol(),
            )
            .unwrap();
            assert!((p_dc - pc).abs() < 1e-12, "delta={delta}");
            assert!((p_dd - pd).abs() < 1e-12, "delta={delta}");
            // And the closed form itself is the half-angle law.
            assert!((pd - (delta / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn which_path_with_recombiner_is_inconsistent() {
        let fam = build_mach_zehnder(
            &MachZehnderParams::default(),
            MzIntermediate::WhichPath,
            tol(),
        )
        .unwrap();
        let report = check_consistency(&fam, tol()).unwrap();
        assert!(!report.consistent());
        assert!((report.max_offdiag() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn which_path_without_recombiner_tracks_the_photon() {
        let params = MachZehnderParams {
            bs2_present: false,
            ..MachZehnderParams::default()
        };
        let fam = build_mach_zehnder(&params, MzIntermediate::WhichPath, tol()).unwrap();
        let report = check_consistency(&fam, tol()).unwrap();
        assert!(report.consistent());
        // Only (a, Dc) and (b, Dd) carry weight, 1/2 each.
        let p_a_dc = report
            .probability_of(&crate::histories::History::new(vec![0, 0]))
            .unwrap();
        let p_b_dd = report
            .probability_of(&crate::histories::History::new(vec![1, 1]))
            .unwrap();
        assert!((p_a_dc - 0.5).abs() < 1e-12);
        assert!((p_b_dd - 0.5).abs() < 1e-12);
        // Path a is the unique minimal cause of the Dc click.
        let dc = Event::from_member(&fam, 2, 0).unwrap();
        let causes = find_causes(&fam, &dc, DEFAULT_THRESHOLD, tol()).unwrap();
        assert_eq!(causes.len(), 1);
        assert_eq!(causes[0].f().label(), "path=a");
    }

    #[test]
    fn blocking_one_arm_splits_output_between_detectors_and_absorber() {
        let params = MachZehnderParams {
            block_a: true,
            ..MachZehnderParams::default()
        };
        let fam = build_mach_zehnder(&params, MzIntermediate::Trivial, tol()).unwrap();
        let p = |member| {
            crate::causes::event_probability(
                &fam,
                &Event::from_member(&fam, 2, member).unwrap(),
                tol(),
            )
            .unwrap()
        };
        assert!((p(0) - 0.25).abs() < 1e-12);
        assert!((p(1) - 0.25).abs() < 1e-12);
        assert!((p(2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn blocking_both_arms_absorbs_everything() {
        let params = MachZehnderParams {
            block_a: true,
            block_b: true,
            ..MachZehnderParams::default()
        };
        let fam = build_mach_zehnder(&params, MzIntermediate::Trivial, tol()).unwrap();
        let p_abs = crate::causes::event_probability(
            &fam,
            &Event::from_member(&fam, 2, 2).unwrap(),
            tol(),
        )
        .unwrap();
        assert!((p_abs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spin_half_measured_along_z_after_x_preparation() {
        let fam = build_spin_half(
            &SpinDirection::x(),
            &SpinDirection::z(),
            SpinIntermediate::AlongMeasure,
            tol(),
        )
        .unwrap();
        let report = check_consistency(&fam, tol()).unwrap();
        assert!(report.consistent());
        let probs = report.probabilities().unwrap();
        // Histories enumerate as (spin choice) x (pointer choice); the
        // surviving pairs are (Sz=+, pointer=+) and (Sz=-, pointer=-).
        let hs = fam.enumerate_histories();
        for (y, p) in hs.iter().zip(probs) {
            let expected = match (y.choice(0), y.choice(1)) {
                (0, spin_pointer::PLUS) | (1, spin_pointer::MINUS) => 0.5,
                _ => 0.0,
            };
            assert!((p - expected).abs() < 1e-12, "history {:?}", y.choices());
        }
        // The spin value is a strict cause of its pointer record.
        let sz_plus = Event::from_member(&fam, 1, 0).unwrap();
        let ptr_plus = Event::from_member(&fam, 2, spin_pointer::PLUS).unwrap();
        let v = classify_cause(&fam, &sz_plus, &ptr_plus, DEFAULT_THRESHOLD, tol()).unwrap();
        assert_eq!(v.classification(), Classification::Cause);
        assert!((v.p_g_given_f().unwrap() - 1.0).abs() < 1e-12);
        assert!((v.p_f_given_g().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prep_axis_framework_leaves_pointer_outcomes_uncertain() {
        let fam = build_spin_half(
            &SpinDirection::x(),
            &SpinDirection::z(),
            SpinIntermediate::AlongPrep,
            tol(),
        )
        .unwrap();
        let report = check_consistency(&fam, tol()).unwrap();
        assert!(report.consistent());
        let sx_plus = Event::from_member(&fam, 1, 0).unwrap();
        let p = crate::causes::event_probability(&fam, &sx_plus, tol()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let ptr_plus = Event::from_member(&fam, 2, spin_pointer::PLUS).unwrap();
        let v = classify_cause(&fam, &sx_plus, &ptr_plus, DEFAULT_THRESHOLD, tol()).unwrap();
        assert_eq!(v.classification(), Classification::Unsupported);
        assert!((v.p_g_given_f().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mixing_the_two_spin_frameworks_is_meaningless() {
        let xp = projector_from_ket(&spin_up(&SpinDirection::x()), tol()).unwrap();
        let zp = projector_from_ket(&spin_up(&SpinDirection::z()), tol()).unwrap();
        let err = conjunction(&xp, &zp, tol()).unwrap_err();
        assert!(matches!(
            err,
            crate::projectors::ProjectorError::MeaninglessConjunction { .. }
        ));
    }

    #[test]
    fn calibration_same_axis_preparation_is_recorded_with_certainty() {
        let axis = SpinDirection::new(0.9, -1.7).unwrap();
        let fam = build_spin_half(&axis, &axis, SpinIntermediate::AlongMeasure, tol()).unwrap();
        let ptr_plus = Event::from_member(&fam, 2, spin_pointer::PLUS).unwrap();
        let p = crate::causes::event_probability(&fam, &ptr_plus, tol()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eprb_joint_distribution_matches_the_singlet_closed_form() {
        let alice = SpinDirection::new(0.7, 1.9).unwrap();
        let bob = SpinDirection::new(2.1, -0.4).unwrap();
        let fam = build_eprb(&alice, &bob, None, tol()).unwrap();
        let report = check_consistency(&fam, tol()).unwrap();
        assert!(report.consistent());
        for i in 0..2 {
            for j in 0..2 {
                let member = eprb_pointer_member(i + 1, j + 1);
                let e = Event::from_member(&fam, 2, member).unwrap();
                let p = crate::causes::event_probability(&fam, &e, tol()).unwrap();
                let expected = singlet_joint_prob(&alice, &bob, i, j);
                assert!(
                    (p - expected).abs() < 1e-12,
                    "outcome ({i},{j}): engine {p}, closed form {expected}"
                );
            }
        }
    }

    #[test]
    fn eprb_same_axis_outcomes_anticorrelate_with_a_joint_spin_cause() {
        let z = SpinDirection::z();
        let fam = build_eprb(&z, &z, None, tol()).unwrap();
        let a_plus_b_minus = Event::from_member(&fam, 2, eprb_pointer_member(1, 2)).unwrap();
        let p = crate::causes::event_probability(&fam, &a_plus_b_minus, tol()).unwrap();
        assert!((p - 0.5).abs() < 1e-12);

        // Alice's + record and Bob's - record share one minimal common
        // cause: the joint spin value right after the pair was created.
        let alice_plus = Event::new(
            2,
            Projector::unchecked_sum(&[
                fam.pdi_at(2).member(eprb_pointer_member(1, 0)),
                fam.pdi_at(2).member(eprb_pointer_member(1, 1)),
                fam.pdi_at(2).member(eprb_pointer_member(1, 2)),
            ]),
            "ptrA=+",
        );
        let bob_minus = Event::new(
            2,
            Projector::unchecked_sum(&[
                fam.pdi_at(2).member(eprb_pointer_member(0, 2)),
                fam.pdi_at(2).member(eprb_pointer_member(1, 2)),
                fam.pdi_at(2).member(eprb_pointer_member(2, 2)),
            ]),
            "ptrB=-",
        );
        let result =
            find_common_causes(&fam, &alice_plus, &bob_minus, DEFAULT_THRESHOLD, tol()).unwrap();
        assert_eq!(result.candidates().len(), 1);
        let cause = result.candidates()[0].event();
        assert_eq!(cause.time_index(), 1);
        assert!(cause
            .projector()
            .matrix()
            .approx_eq(fam.pdi_at(1).member(1).matrix(), tol())
            .unwrap());
    }

    #[test]
    fn eprb_flip_intervention_breaks_the_anticorrelation() {
        let z = SpinDirection::z();
        let base = build_eprb(&z, &z, None, tol()).unwrap();
        let flipped = build_eprb(
            &z,
            &z,
            Some(&BobIntervention {
                axis: SpinDirection::x(),
                angle: std::f64::consts::PI,
            }),
            tol(),
        )
        .unwrap();
        let alice_plus = Event::new(
            2,
            Projector::unchecked_sum(&[
                base.pdi_at(2).member(eprb_pointer_member(1, 0)),
                base.pdi_at(2).member(eprb_pointer_member(1, 1)),
                base.pdi_at(2).member(eprb_pointer_member(1, 2)),
            ]),
            "ptrA=+",
        );
        let bob_minus = Event::new(
            2,
            Projector::unchecked_sum(&[
                base.pdi_at(2).member(eprb_pointer_member(0, 2)),
                base.pdi_at(2).member(eprb_pointer_member(1, 2)),
                base.pdi_at(2).member(eprb_pointer_member(2, 2)),
            ]),
            "ptrB=-",
        );
        let cmp =
            compare_intervention(&base, &flipped, &alice_plus, &bob_minus, tol()).unwrap();
        assert!((cmp.base_conditional() - 1.0).abs() < 1e-12);
        assert!(cmp.intervened_conditional().abs() < 1e-12);
        assert!(cmp.changed());
    }

    #[test]
    fn relay_records_agree_and_trace_back_to_the_sender() {
        let fam = build_charlie_model(false, tol()).unwrap();
        let report = check_consistency(&fam, tol()).unwrap();
        assert!(report.consistent());
        let alice_1 = Event::from_member(&fam, 2, 1).unwrap();
        let bob_1 = Event::from_member(&fam, 3, 1).unwrap();
        // The two records satisfy the cause test in time order even
        // though neither influences the other.
        let v = classify_cause(&fam, &alice_1, &bob_1, DEFAULT_THRESHOLD, tol()).unwrap();
        assert_eq!(v.classification(), Classification::Cause);
        // The search one time earlier exposes the sender bit.
        let result =
            find_common_causes(&fam, &alice_1, &bob_1, DEFAULT_THRESHOLD, tol()).unwrap();
        assert_eq!(result.candidates().len(), 1);
        assert_eq!(result.candidates()[0].event().label(), "Charlie=1");
    }

    #[test]
    fn tampering_with_bobs_copy_flips_his_record() {
        let base = build_charlie_model(false, tol()).unwrap();
        let tampered = build_charlie_model(true, tol()).unwrap();
        let alice_1 = Event::from_member(&base, 2, 1).unwrap();
        let bob_1 = Event::from_member(&base, 3, 1).unwrap();
        let cmp = compare_intervention(&base, &tampered, &alice_1, &bob_1, tol()).unwrap();
        assert!((cmp.base_conditional() - 1.0).abs() < 1e-12);
        assert!(cmp.intervened_conditional().abs() < 1e-12);
        assert!(cmp.changed());
    }
}
