//! Causal analysis inside a single consistent history family.
//!
//! An *event* is a framework projector attached to one family time. F is
//! classified a cause of G when both conditionals Pr(G|F) and Pr(F|G)
//! reach a threshold (default within 1e-6 of certainty) and F is strictly
//! earlier. Queries never mix frameworks: an event whose projector fails
//! to commute with the family's decomposition at its time is rejected as
//! a meaningless conjunction, and one that commutes but is no subset-sum
//! is rejected as outside the framework.
//!
//! Correlation alone cannot distinguish a genuine cause from a shared
//! ancestor, so [`find_common_causes`] searches earlier times for one,
//! and [`compare_intervention`] contrasts a family against an explicitly
//! built intervened variant instead of mutating anything in place.

use crate::histories::{check_consistency, ConsistencyReport, HistoryFamily, HistoryError};
use crate::numerics::{NumericsError, Tolerance};
use crate::projectors::{
    commutator_norm, Framework, Pdi, Projector, ProjectorError, MAX_FRAMEWORK_MEMBERS,
};
use thiserror::Error;

/// Default certainty threshold for the cause criterion.
pub const DEFAULT_THRESHOLD: f64 = 1.0 - 1e-6;

/// Errors raised by causal queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CauseError {
    /// The event's time index does not exist in the family.
    #[error("event {label:?} uses time index {time_index}, family has slots 1..={slots}")]
    BadTimeIndex {
        label: String,
        time_index: usize,
        slots: usize,
    },
    /// The event's projector does not commute with the family's PDI at
    /// its time, so conjoining it with the family's questions is
    /// meaningless.
    #[error(transparent)]
    MeaninglessConjunction(ProjectorError),
    /// The event commutes with the PDI but is not in its event algebra.
    #[error("event {label:?} is not in the framework at time index {time_index}")]
    NotInFramework { label: String, time_index: usize },
    /// Conditioning on an event of probability zero (within eps).
    #[error("conditional on {label:?} is undefined: Pr = {probability:.3e} is within eps of zero")]
    UndefinedConditional { label: String, probability: f64 },
    /// The family failed its consistency check.
    #[error(transparent)]
    Inconsistent(HistoryError),
    /// Base and intervened families disagree where they must agree.
    #[error("families differ in {what}, cannot compare interventions")]
    FamilyShapeMismatch { what: String },
    /// Underlying projector algebra failed.
    #[error(transparent)]
    Projector(#[from] ProjectorError),
    /// Underlying history machinery failed.
    #[error(transparent)]
    History(#[from] HistoryError),
    /// Underlying matrix arithmetic failed.
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A framework event pinned to one family time.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    time_index: usize,
    projector: Projector,
    label: String,
}

impl Event {
    /// Builds an event; `time_index` is 1-based (t1 is index 1).
    pub fn new(time_index: usize, projector: Projector, label: impl Into<String>) -> Self {
        Event {
            time_index,
            projector,
            label: label.into(),
        }
    }

    /// Convenience constructor naming a PDI member of a family.
    pub fn from_member(
        fam: &HistoryFamily,
        time_index: usize,
        member: usize,
    ) -> Result<Self, CauseError> {
        if time_index == 0 || time_index > fam.slots() {
            return Err(CauseError::BadTimeIndex {
                label: format!("member {member}"),
                time_index,
                slots: fam.slots(),
            });
        }
        let pdi = fam.pdi_at(time_index);
        Ok(Event {
            time_index,
            projector: pdi.member(member).clone(),
            label: pdi.label(member).to_string(),
        })
    }

    /// 1-based time index.
    pub fn time_index(&self) -> usize {
        self.time_index
    }

    /// The event projector.
    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    /// Human-readable label.
    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Outcome of the two-conditional cause test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Both conditionals reach the threshold and F is strictly earlier.
    Cause,
    /// Both conditionals reach the threshold but F is not strictly earlier.
    ReverseOrder,
    /// At least one conditional falls short of the threshold.
    Unsupported,
    /// One of the events has probability within eps of zero, so a
    /// conditional needed by the test does not exist.
    UndefinedConditional,
}

impl Classification {
    /// Stable lowercase name, used by report serialization.
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Cause => "cause",
            Classification::ReverseOrder => "reverse_order",
            Classification::Unsupported => "unsupported",
            Classification::UndefinedConditional => "undefined_conditional",
        }
    }
}

/// Both conditional probabilities and the resulting classification for an
/// ordered pair of events (F, G).
#[derive(Debug, Clone, PartialEq)]
pub struct CausalVerdict {
    f: Event,
    g: Event,
    p_g_given_f: Option<f64>,
    p_f_given_g: Option<f64>,
    classification: Classification,
}

impl CausalVerdict {
    /// The candidate cause.
    pub fn f(&self) -> &Event {
        &self.f
    }

    /// The candidate effect.
    pub fn g(&self) -> &Event {
        &self.g
    }

    /// Pr(G|F), absent when Pr(F) is within eps of zero.
    pub fn p_g_given_f(&self) -> Option<f64> {
        self.p_g_given_f
    }

    /// Pr(F|G), absent when Pr(G) is within eps of zero.
    pub fn p_f_given_g(&self) -> Option<f64> {
        self.p_f_given_g
    }

    /// The classification of F relative to G.
    pub fn classification(&self) -> Classification {
        self.classification
    }
}

/// Result of a common-cause search for a pair of events.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonCauseResult {
    candidates: Vec<CommonCauseCandidate>,
}

/// One common-cause candidate with its verdicts toward both events.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonCauseCandidate {
    event: Event,
    to_f: CausalVerdict,
    to_g: CausalVerdict,
}

impl CommonCauseResult {
    /// All surviving candidates, earliest first, minimal events only.
    pub fn candidates(&self) -> &[CommonCauseCandidate] {
        &self.candidates
    }
}

impl CommonCauseCandidate {
    /// The shared earlier event.
    pub fn event(&self) -> &Event {
        &self.event
    }

    /// Verdict of the candidate toward F.
    pub fn to_f(&self) -> &CausalVerdict {
        &self.to_f
    }

    /// Verdict of the candidate toward G.
    pub fn to_g(&self) -> &CausalVerdict {
        &self.to_g
    }
}

/// Same conditional computed in a base family and an intervened variant.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionComparison {
    base_conditional: f64,
    intervened_conditional: f64,
    changed: bool,
}

impl InterventionComparison {
    /// Pr(G|F) in the base family.
    pub fn base_conditional(&self) -> f64 {
        self.base_conditional
    }

    /// Pr(G|F) in the intervened family.
    pub fn intervened_conditional(&self) -> f64 {
        self.intervened_conditional
    }

    /// True when the two conditionals differ by more than eps.
    pub fn changed(&self) -> bool {
        self.changed
    }
}

/// An event checked against a family: which PDI members it covers.
struct ResolvedEvent {
    time_index: usize,
    member_mask: Vec<bool>,
}

/// Validates an event against the family and resolves it to the set of
/// PDI members lying within it.
fn resolve_event(
    fam: &HistoryFamily,
    e: &Event,
    tol: Tolerance,
) -> Result<ResolvedEvent, CauseError> {
    if e.time_index == 0 || e.time_index > fam.slots() {
        return Err(CauseError::BadTimeIndex {
            label: e.label.clone(),
            time_index: e.time_index,
            slots: fam.slots(),
        });
    }
    let pdi = fam.pdi_at(e.time_index);
    for (idx, member) in pdi.members().iter().enumerate() {
        let norm = commutator_norm(e.projector(), member)?;
        if norm > tol.eps() {
            return Err(CauseError::MeaninglessConjunction(
                ProjectorError::MeaninglessConjunction {
                    lhs: e.label.clone(),
                    rhs: format!("{:?} (family PDI member {idx})", pdi.label(idx)),
                    max_commutator: norm,
                },
            ));
        }
    }
    // Since the event commutes with every member, membership in the
    // algebra reduces to: the members lying within the event must sum to
    // exactly the event.
    let mut member_mask = vec![false; pdi.len()];
    let mut covered: Vec<&Projector> = Vec::new();
    for (idx, member) in pdi.members().iter().enumerate() {
        if member.is_within(e.projector(), tol)? {
            member_mask[idx] = true;
            covered.push(member);
        }
    }
    let matches = if covered.is_empty() {
        e.projector().is_zero(tol)
    } else {
        Projector::unchecked_sum(&covered)
            .matrix()
            .approx_eq(e.projector().matrix(), tol)?
    };
    if !matches {
        return Err(CauseError::NotInFramework {
            label: e.label.clone(),
            time_index: e.time_index,
        });
    }
    Ok(ResolvedEvent {
        time_index: e.time_index,
        member_mask,
    })
}

/// Requires a consistent family, returning its report.
fn consistent_report(
    fam: &HistoryFamily,
    tol: Tolerance,
) -> Result<ConsistencyReport, CauseError> {
    let report = check_consistency(fam, tol)?;
    if !report.consistent() {
        return Err(CauseError::Inconsistent(HistoryError::InconsistentFamily {
            max_offdiag: report.max_offdiag(),
        }));
    }
    Ok(report)
}

/// Marginal probability of an event: the summed Born weight of histories
/// whose chosen member at the event's time lies within the event.
fn marginal(report: &ConsistencyReport, resolved: &ResolvedEvent) -> f64 {
    let probs = report
        .probabilities()
        .expect("caller checked consistency");
    report
        .histories()
        .iter()
        .zip(probs)
        .filter(|(y, _)| resolved.member_mask[y.choice(resolved.time_index - 1)])
        .map(|(_, p)| p)
        .sum()
}

/// Joint probability of two events (which may share a time).
fn joint(report: &ConsistencyReport, a: &ResolvedEvent, b: &ResolvedEvent) -> f64 {
    let probs = report
        .probabilities()
        .expect("caller checked consistency");
    report
        .histories()
        .iter()
        .zip(probs)
        .filter(|(y, _)| {
            a.member_mask[y.choice(a.time_index - 1)] && b.member_mask[y.choice(b.time_index - 1)]
        })
        .map(|(_, p)| p)
        .sum()
}

/// Probability of a single event in a consistent family.
pub fn event_probability(
    fam: &HistoryFamily,
    e: &Event,
    tol: Tolerance,
) -> Result<f64, CauseError> {
    let resolved = resolve_event(fam, e, tol)?;
    let report = consistent_report(fam, tol)?;
    Ok(marginal(&report, &resolved))
}

/// Conditional probability Pr(G|F) in a consistent family.
///
/// Fails with [`CauseError::UndefinedConditional`] when Pr(F) is within
/// eps of zero.
pub fn conditional_probability(
    fam: &HistoryFamily,
    g: &Event,
    f: &Event,
    tol: Tolerance,
) -> Result<f64, CauseError> {
    let rg = resolve_event(fam, g, tol)?;
    let rf = resolve_event(fam, f, tol)?;
    let report = consistent_report(fam, tol)?;
    let p_f = marginal(&report, &rf);
    if p_f <= tol.eps() {
        return Err(CauseError::UndefinedConditional {
            label: f.label().to_string(),
            probability: p_f,
        });
    }
    Ok(joint(&report, &rg, &rf) / p_f)
}

/// Shared implementation for classify and search entry points: assumes
/// events already resolved against a consistent report.
fn classify_resolved(
    report: &ConsistencyReport,
    f: &Event,
    rf: &ResolvedEvent,
    g: &Event,
    rg: &ResolvedEvent,
    threshold: f64,
    tol: Tolerance,
) -> CausalVerdict {
    let p_f = marginal(report, rf);
    let p_g = marginal(report, rg);
    let p_fg = joint(report, rf, rg);
    let p_g_given_f = (p_f > tol.eps()).then(|| p_fg / p_f);
    let p_f_given_g = (p_g > tol.eps()).then(|| p_fg / p_g);
    let classification = match (p_g_given_f, p_f_given_g) {
        (Some(gf), Some(fg)) => {
            if gf >= threshold && fg >= threshold {
                if f.time_index() < g.time_index() {
                    Classification::Cause
                } else {
                    Classification::ReverseOrder
                }
            } else {
                Classification::Unsupported
            }
        }
        _ => Classification::UndefinedConditional,
    };
    CausalVerdict {
        f: f.clone(),
        g: g.clone(),
        p_g_given_f,
        p_f_given_g,
        classification,
    }
}

/// Applies the two-conditional cause test to an ordered pair of events.
///
/// Swapping F and G yields the same probability pair (mirrored); only the
/// time-order gate distinguishes [`Classification::Cause`] from
/// [`Classification::ReverseOrder`]. A zero-probability event on either
/// side yields [`Classification::UndefinedConditional`] rather than an
/// error, so searches can skip empty candidates gracefully.
pub fn classify_cause(
    fam: &HistoryFamily,
    f: &Event,
    g: &Event,
    threshold: f64,
    tol: Tolerance,
) -> Result<CausalVerdict, CauseError> {
    let rf = resolve_event(fam, f, tol)?;
    let rg = resolve_event(fam, g, tol)?;
    let report = consistent_report(fam, tol)?;
    Ok(classify_resolved(&report, f, &rf, g, &rg, threshold, tol))
}

/// All candidate events at one time slot: nonempty subsets of PDI
/// members whose sum is not the identity, as (mask, event, resolved).
fn candidate_events(
    fam: &HistoryFamily,
    time_index: usize,
    tol: Tolerance,
) -> Result<Vec<(u32, Event, ResolvedEvent)>, CauseError> {
    let pdi: &Pdi = fam.pdi_at(time_index);
    let k = pdi.len();
    if k > MAX_FRAMEWORK_MEMBERS {
        return Err(CauseError::Projector(ProjectorError::TooManyMembers {
            count: k,
            max: MAX_FRAMEWORK_MEMBERS,
        }));
    }
    let identity = Projector::identity(pdi.dim());
    let mut out = Vec::new();
    for mask in 1u32..(1 << k) {
        let chosen: Vec<&Projector> = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| pdi.member(i))
            .collect();
        let projector = Projector::unchecked_sum(&chosen);
        // The sure event is excluded as a candidate cause: it holds in
        // every history and explains nothing.
        if projector.matrix().approx_eq(identity.matrix(), tol)? {
            continue;
        }
        let label = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| pdi.label(i))
            .collect::<Vec<_>>()
            .join("+");
        let member_mask = (0..k).map(|i| mask & (1 << i) != 0).collect();
        out.push((
            mask,
            Event::new(time_index, projector, label),
            ResolvedEvent {
                time_index,
                member_mask,
            },
        ));
    }
    Ok(out)
}

/// Drops any verdict whose event strictly contains another surviving
/// event at the same time, leaving only minimal causes.
fn keep_minimal(entries: &mut Vec<(usize, u32, CausalVerdict)>) {
    let masks: Vec<(usize, u32)> = entries.iter().map(|(t, m, _)| (*t, *m)).collect();
    entries.retain(|(t, m, _)| {
        !masks
            .iter()
            .any(|(ot, om)| ot == t && om != m && om & m == *om)
    });
}

/// Searches every earlier time's event algebra for causes of `g`,
/// returning minimal events only (no reported cause strictly contains
/// another at the same time).
pub fn find_causes(
    fam: &HistoryFamily,
    g: &Event,
    threshold: f64,
    tol: Tolerance,
) -> Result<Vec<CausalVerdict>, CauseError> {
    let rg = resolve_event(fam, g, tol)?;
    let report = consistent_report(fam, tol)?;
    let mut found: Vec<(usize, u32, CausalVerdict)> = Vec::new();
    for t in 1..g.time_index() {
        for (mask, event, resolved) in candidate_events(fam, t, tol)? {
            let verdict = classify_resolved(&report, &event, &resolved, g, &rg, threshold, tol);
            if verdict.classification() == Classification::Cause {
                found.push((t, mask, verdict));
            }
        }
    }
    keep_minimal(&mut found);
    Ok(found.into_iter().map(|(_, _, v)| v).collect())
}

/// Searches times strictly before both events for minimal common causes:
/// events classified as a cause of F and of G separately.
pub fn find_common_causes(
    fam: &HistoryFamily,
    f: &Event,
    g: &Event,
    threshold: f64,
    tol: Tolerance,
) -> Result<CommonCauseResult, CauseError> {
    let rf = resolve_event(fam, f, tol)?;
    let rg = resolve_event(fam, g, tol)?;
    let report = consistent_report(fam, tol)?;
    let horizon = f.time_index().min(g.time_index());
    let mut found: Vec<(usize, u32, (CausalVerdict, CausalVerdict))> = Vec::new();
    for t in 1..horizon {
        for (mask, event, resolved) in candidate_events(fam, t, tol)? {
            let to_f = classify_resolved(&report, &event, &resolved, f, &rf, threshold, tol);
            if to_f.classification() != Classification::Cause {
                continue;
            }
            let to_g = classify_resolved(&report, &event, &resolved, g, &rg, threshold, tol);
            if to_g.classification() != Classification::Cause {
                continue;
            }
            found.push((t, mask, (to_f, to_g)));
        }
    }
    // Reuse the minimality rule by projecting onto either verdict.
    let mut tagged: Vec<(usize, u32, CausalVerdict)> = found
        .iter()
        .map(|(t, m, (vf, _))| (*t, *m, vf.clone()))
        .collect();
    keep_minimal(&mut tagged);
    let surviving: Vec<(usize, u32)> = tagged.iter().map(|(t, m, _)| (*t, *m)).collect();
    let candidates = found
        .into_iter()
        .filter(|(t, m, _)| surviving.contains(&(*t, *m)))
        .map(|(_, _, (to_f, to_g))| CommonCauseCandidate {
            event: to_f.f().clone(),
            to_f,
            to_g,
        })
        .collect();
    Ok(CommonCauseResult { candidates })
}

/// Computes Pr(G|F) in a base family and in an explicitly built
/// intervened variant, and reports whether the intervention moved it.
///
/// Both families must share time labels and host both events in equal
/// frameworks at the event times; the intervened family is a separate
/// value, never a mutation of the base.
pub fn compare_intervention(
    base: &HistoryFamily,
    intervened: &HistoryFamily,
    f: &Event,
    g: &Event,
    tol: Tolerance,
) -> Result<InterventionComparison, CauseError> {
    if base.grid() != intervened.grid() {
        return Err(CauseError::FamilyShapeMismatch {
            what: "time grids".to_string(),
        });
    }
    for e in [f, g] {
        if e.time_index() == 0 || e.time_index() > base.slots() {
            return Err(CauseError::BadTimeIndex {
                label: e.label().to_string(),
                time_index: e.time_index(),
                slots: base.slots(),
            });
        }
        let fw_base = Framework::from_pdi(base.pdi_at(e.time_index()).clone());
        let fw_int = Framework::from_pdi(intervened.pdi_at(e.time_index()).clone());
        if !fw_base.equivalent(&fw_int, tol)? {
            return Err(CauseError::FamilyShapeMismatch {
                what: format!(
                    "frameworks at time {:?}",
                    base.grid().label(e.time_index())
                ),
            });
        }
    }
    let base_conditional = conditional_probability(base, g, f, tol)?;
    let intervened_conditional = conditional_probability(intervened, g, f, tol)?;
    let changed = (base_conditional - intervened_conditional).abs() > tol.eps();
    Ok(InterventionComparison {
        base_conditional,
        intervened_conditional,
        changed,
    })
}
