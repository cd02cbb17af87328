//! Scenario-file commands: load a `.chq` document and turn the queries
//! it carries into a work item.

use crate::report::{CmdError, WorkItem};
use chq_core::{Event, HistoryFamily, Tolerance};
use chq_dsl::{parse_scenario_with, EventRef, Query, ScenarioDoc};
use std::fs;
use std::path::Path;

fn load(path: &Path, tol: Tolerance) -> Result<ScenarioDoc, CmdError> {
    let src = fs::read_to_string(path)
        .map_err(|e| CmdError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario_with(&src, tol).map_err(CmdError::Parse)
}

fn family_of(doc: &ScenarioDoc, path: &Path) -> Result<HistoryFamily, CmdError> {
    doc.family().cloned().ok_or_else(|| {
        CmdError::NoFamily(format!("{}: scenario declares no family", path.display()))
    })
}

fn resolve(doc: &ScenarioDoc, r: &EventRef) -> Result<Event, CmdError> {
    doc.resolve_event(r).ok_or_else(|| {
        CmdError::Query(format!(
            "event ({}, {}.{}) does not resolve",
            r.time, r.pdi, r.member
        ))
    })
}

fn item(source: String, family: HistoryFamily, strict: bool) -> WorkItem {
    WorkItem {
        source,
        family,
        verdict_pairs: Vec::new(),
        common_pairs: Vec::new(),
        comparisons: Vec::new(),
        strict,
    }
}

/// `check`: parse and report; an inconsistent family is a finding, not a
/// failure.
pub fn check(path: &Path, tol: Tolerance) -> Result<WorkItem, CmdError> {
    let doc = load(path, tol)?;
    let family = family_of(&doc, path)?;
    Ok(item(path.display().to_string(), family, false))
}

/// `probs`: the probability table; fails on an inconsistent family.
pub fn probs(path: &Path, tol: Tolerance) -> Result<WorkItem, CmdError> {
    let doc = load(path, tol)?;
    let family = family_of(&doc, path)?;
    Ok(item(path.display().to_string(), family, true))
}

/// `causes`: run the file's cause and common-cause queries.
pub fn causes(path: &Path, tol: Tolerance) -> Result<WorkItem, CmdError> {
    let doc = load(path, tol)?;
    let family = family_of(&doc, path)?;
    let mut work = item(path.display().to_string(), family, true);
    for query in doc.queries() {
        match query {
            Query::Cause { f, g } => {
                work.verdict_pairs.push((resolve(&doc, f)?, resolve(&doc, g)?));
            }
            Query::CommonCause { f, g } => {
                work.common_pairs.push((resolve(&doc, f)?, resolve(&doc, g)?));
            }
            _ => {}
        }
    }
    Ok(work)
}

/// `compare`: run the file's compare queries against its intervened
/// family.
pub fn compare(path: &Path, tol: Tolerance) -> Result<WorkItem, CmdError> {
    let doc = load(path, tol)?;
    let family = family_of(&doc, path)?;
    let intervened = doc.intervened().cloned().ok_or_else(|| {
        CmdError::NoIntervened(format!(
            "{}: scenario declares no intervened family",
            path.display()
        ))
    })?;
    let mut work = item(path.display().to_string(), family, true);
    for query in doc.queries() {
        if let Query::Compare { f, g } = query {
            work.comparisons
                .push((intervened.clone(), resolve(&doc, f)?, resolve(&doc, g)?));
        }
    }
    Ok(work)
}
