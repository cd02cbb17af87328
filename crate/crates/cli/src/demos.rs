//! Built-in experiments wired up as work items.
//!
//! Each demo builds a prepared family, picks the events worth asking
//! about, and hands everything to the report runner. Scalar-valued
//! flags accept the same expression syntax as scenario files (`0.8i`,
//! `1/sqrt2`, `pi/4`); axis flags accept `x`, `y`, `z`, or `theta,phi`.

use crate::report::{CmdError, WorkItem};
use chq_core::scenarios::spin_pointer;
use chq_core::{
    build_beamsplitter, build_charlie_model, build_eprb, build_mach_zehnder, build_spin_half,
    BeamsplitterParams, BobIntervention, ComplexScalar, Event, HistoryFamily, MachZehnderParams,
    MzIntermediate, Pdi, Projector, SpinDirection, SpinIntermediate, Tolerance,
};

/// Evaluates a scalar flag value.
pub fn parse_scalar_flag(flag: &str, value: &str) -> Result<ComplexScalar, CmdError> {
    chq_dsl::parse_scalar(value)
        .map_err(|e| CmdError::Usage(format!("--{flag} {value:?}: {}", e.message)))
}

fn parse_real_flag(flag: &str, value: &str) -> Result<f64, CmdError> {
    let z = parse_scalar_flag(flag, value)?;
    if z.im != 0.0 {
        return Err(CmdError::Usage(format!("--{flag} {value:?}: must be real")));
    }
    Ok(z.re)
}

/// Evaluates an axis flag: `x`, `y`, `z`, or `theta,phi`.
pub fn parse_axis_flag(flag: &str, value: &str) -> Result<SpinDirection, CmdError> {
    let named = match value {
        "x" => Some(SpinDirection::x()),
        "y" => Some(SpinDirection::y()),
        "z" => Some(SpinDirection::z()),
        _ => None,
    };
    if let Some(axis) = named {
        return Ok(axis);
    }
    let Some((theta, phi)) = value.split_once(',') else {
        return Err(CmdError::Usage(format!(
            "--{flag} {value:?}: expected x, y, z, or theta,phi"
        )));
    };
    let theta = parse_real_flag(flag, theta.trim())?;
    let phi = parse_real_flag(flag, phi.trim())?;
    SpinDirection::new(theta, phi).map_err(|e| CmdError::Usage(format!("--{flag}: {e}")))
}

fn event(fam: &HistoryFamily, time_index: usize, member: usize) -> Result<Event, CmdError> {
    Event::from_member(fam, time_index, member).map_err(|e| CmdError::Query(e.to_string()))
}

/// Sums a subset of PDI members into one coarser event.
fn member_union(
    pdi: &Pdi,
    members: &[usize],
    time_index: usize,
    label: &str,
    tol: Tolerance,
) -> Result<Event, CmdError> {
    let mut acc = pdi.member(members[0]).matrix().clone();
    for &m in &members[1..] {
        acc = acc
            .add(pdi.member(m).matrix())
            .map_err(|e| CmdError::Query(e.to_string()))?;
    }
    let projector = Projector::new(acc, tol).map_err(|e| CmdError::Query(e.to_string()))?;
    Ok(Event::new(time_index, projector, label))
}

pub fn beamsplitter(
    alpha: &str,
    beta: &str,
    block_a: bool,
    mirror: bool,
    tol: Tolerance,
) -> Result<WorkItem, CmdError> {
    let params = BeamsplitterParams {
        alpha: parse_scalar_flag("alpha", alpha)?,
        beta: parse_scalar_flag("beta", beta)?,
    };
    let family = build_beamsplitter(&params, block_a, mirror, tol)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    // Where does the a-path end up? Detector Da normally, the extra
    // channel when arm a is blocked or redirected.
    let g_member = if block_a || mirror { 2 } else { 0 };
    let f = event(&family, 1, 0)?;
    let g = event(&family, 2, g_member)?;
    Ok(WorkItem {
        source: "demo:beamsplitter".to_string(),
        family,
        verdict_pairs: vec![(f, g)],
        common_pairs: Vec::new(),
        comparisons: Vec::new(),
        strict: true,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn mach_zehnder(
    bs2: bool,
    phi_a: &str,
    phi_b: &str,
    block_a: bool,
    block_b: bool,
    intermediate: MzIntermediate,
    tol: Tolerance,
) -> Result<WorkItem, CmdError> {
    let params = MachZehnderParams {
        phi_a: parse_real_flag("phi-a", phi_a)?,
        phi_b: parse_real_flag("phi-b", phi_b)?,
        bs2_present: bs2,
        block_a,
        block_b,
    };
    let family = build_mach_zehnder(&params, intermediate, tol)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    Ok(WorkItem {
        source: "demo:mach-zehnder".to_string(),
        family,
        verdict_pairs: Vec::new(),
        common_pairs: Vec::new(),
        comparisons: Vec::new(),
        strict: true,
    })
}

pub fn spin_half(
    prep: &str,
    measure: &str,
    intermediate: SpinIntermediate,
    tol: Tolerance,
) -> Result<WorkItem, CmdError> {
    let prep = parse_axis_flag("prep", prep)?;
    let measure = parse_axis_flag("measure", measure)?;
    let family = build_spin_half(&prep, &measure, intermediate, tol)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let verdict_pairs = if intermediate == SpinIntermediate::Trivial {
        Vec::new()
    } else {
        let f = event(&family, 1, 0)?;
        let g = event(&family, 2, spin_pointer::PLUS)?;
        vec![(f, g)]
    };
    Ok(WorkItem {
        source: "demo:spin-half".to_string(),
        family,
        verdict_pairs,
        common_pairs: Vec::new(),
        comparisons: Vec::new(),
        strict: true,
    })
}

pub fn eprb(
    alice: &str,
    bob: &str,
    intervene_axis: Option<&str>,
    intervene_angle: Option<&str>,
    tol: Tolerance,
) -> Result<WorkItem, CmdError> {
    let alice = parse_axis_flag("alice", alice)?;
    let bob = parse_axis_flag("bob", bob)?;
    let family =
        build_eprb(&alice, &bob, None, tol).map_err(|e| CmdError::Usage(e.to_string()))?;

    // Coarse single-pointer events at the final time: member index is
    // 3 * ptr_a + ptr_b with value order ready, +, -.
    let pointer_pdi = family.pdi_at(2).clone();
    let ptr_a_plus = member_union(&pointer_pdi, &[3, 4, 5], 2, "ptrA=+", tol)?;
    let ptr_b_minus = member_union(&pointer_pdi, &[2, 5, 8], 2, "ptrB=-", tol)?;
    let joint_f = event(&family, 1, 1)?;
    let joint_g = event(&family, 2, 5)?;

    let comparisons = match (intervene_axis, intervene_angle) {
        (None, None) => Vec::new(),
        (Some(axis), Some(angle)) => {
            let intervention = BobIntervention {
                axis: parse_axis_flag("intervene-axis", axis)?,
                angle: parse_real_flag("intervene-angle", angle)?,
            };
            let intervened = build_eprb(&alice, &bob, Some(&intervention), tol)
                .map_err(|e| CmdError::Usage(e.to_string()))?;
            vec![(intervened, ptr_a_plus.clone(), ptr_b_minus.clone())]
        }
        _ => {
            return Err(CmdError::Usage(
                "--intervene-axis and --intervene-angle go together".to_string(),
            ))
        }
    };

    Ok(WorkItem {
        source: "demo:eprb".to_string(),
        family,
        verdict_pairs: vec![(joint_f, joint_g)],
        common_pairs: vec![(ptr_a_plus, ptr_b_minus)],
        comparisons,
        strict: true,
    })
}

pub fn charlie(flip_bob: bool, tol: Tolerance) -> Result<WorkItem, CmdError> {
    let family = build_charlie_model(false, tol).map_err(|e| CmdError::Usage(e.to_string()))?;
    let alice_one = event(&family, 2, 1)?;
    let bob_one = event(&family, 3, 1)?;
    let comparisons = if flip_bob {
        let flipped =
            build_charlie_model(true, tol).map_err(|e| CmdError::Usage(e.to_string()))?;
        vec![(flipped, alice_one.clone(), bob_one.clone())]
    } else {
        Vec::new()
    };
    Ok(WorkItem {
        source: "demo:charlie".to_string(),
        family,
        verdict_pairs: vec![(alice_one.clone(), bob_one.clone())],
        common_pairs: vec![(alice_one, bob_one)],
        comparisons,
        strict: true,
    })
}
