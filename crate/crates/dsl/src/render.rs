//! Canonical scenario rendering.
//!
//! Emits a document in a fixed statement order with every matrix spelled
//! out as a literal, so rendering is a pure function of the resolved
//! document: two documents that compare equal render byte-identically,
//! and rendering then reparsing reproduces the document. Numbers are
//! printed with enough digits to round-trip `f64` exactly.

use crate::parse::{EventRef, Query, ScenarioDoc};
use chq_core::{ComplexMatrix, ComplexScalar};
use std::fmt::Write as _;

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_scalar(z: ComplexScalar) -> String {
    if z.im == 0.0 {
        fmt_f64(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", fmt_f64(z.re), fmt_f64(-z.im))
    } else {
        format!("{}+{}i", fmt_f64(z.re), fmt_f64(z.im))
    }
}

fn fmt_column(m: &ComplexMatrix) -> String {
    let entries: Vec<String> = (0..m.rows()).map(|r| fmt_scalar(m.get(r, 0))).collect();
    format!("[{}]", entries.join(", "))
}

fn fmt_matrix(m: &ComplexMatrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|r| {
            let entries: Vec<String> = (0..m.cols()).map(|c| fmt_scalar(m.get(r, c))).collect();
            format!("[{}]", entries.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn fmt_event(r: &EventRef) -> String {
    format!("({}, {}.{})", r.time, r.pdi, r.member)
}

/// Renders a document to its canonical source form.
pub fn render_scenario(doc: &ScenarioDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "space {}", doc.dim());
    for (name, ket) in doc.kets() {
        let _ = writeln!(out, "ket {name} = {}", fmt_column(ket.amplitudes()));
    }
    for (name, matrix) in doc.unitaries() {
        let _ = writeln!(out, "unitary {name} = {}", fmt_matrix(matrix));
    }
    for (name, pdi) in doc.pdis() {
        let members: Vec<String> = pdi
            .labels()
            .iter()
            .enumerate()
            .map(|(i, label)| format!("{label}: {}", fmt_matrix(pdi.member(i).matrix())))
            .collect();
        let _ = writeln!(out, "pdi {name} = {{ {} }}", members.join(", "));
    }
    if !doc.times().is_empty() {
        let _ = writeln!(out, "times {}", doc.times().join(" "));
    }
    if let Some(def) = doc.family_def() {
        let _ = writeln!(
            out,
            "family init={} steps=[{}] pdis=[{}]",
            def.init,
            def.steps.join(", "),
            def.pdis.join(", ")
        );
    }
    if let Some(def) = doc.intervened_def() {
        let _ = writeln!(
            out,
            "intervened steps=[{}] pdis=[{}]",
            def.steps.join(", "),
            def.pdis.join(", ")
        );
    }
    for query in doc.queries() {
        match query {
            Query::Consistency => {
                let _ = writeln!(out, "query consistency");
            }
            Query::Probs => {
                let _ = writeln!(out, "query probs");
            }
            Query::Cause { f, g } => {
                let _ = writeln!(out, "query cause F={} G={}", fmt_event(f), fmt_event(g));
            }
            Query::CommonCause { f, g } => {
                let _ = writeln!(
                    out,
                    "query common_cause F={} G={}",
                    fmt_event(f),
                    fmt_event(g)
                );
            }
            Query::Compare { f, g } => {
                let _ = writeln!(out, "query compare F={} G={}", fmt_event(f), fmt_event(g));
            }
        }
    }
    out
}
