//! Report assembly and output.
//!
//! Every command produces one [`Report`]: a deterministic summary of the
//! family it ran (consistency, probabilities when they exist, and the
//! outcomes of any cause, common-cause, or intervention queries). The
//! JSON form is stable field-for-field so downstream tooling can pin
//! `report_version`; the human form prints the same facts as text.

use chq_core::causes::CauseError;
use chq_core::{
    check_consistency, classify_cause, compare_intervention, find_common_causes, Event,
    HistoryError, HistoryFamily, Tolerance,
};
use serde::Serialize;

/// A failure that ends the run before a report can be finished.
#[derive(Debug)]
pub enum CmdError {
    /// Bad flag values: exit 3.
    Usage(String),
    /// Scenario file failed to parse or validate: exit 2.
    Parse(chq_dsl::ParseError),
    /// Scenario file could not be read: exit 2.
    Io(String),
    /// Scenario declares no family to run: exit 2.
    NoFamily(String),
    /// Scenario declares no intervened family to compare: exit 2.
    NoIntervened(String),
    /// A query could not be evaluated against the family: exit 2.
    Query(String),
    /// A family the query needs has no probabilities: exit 1.
    Inconsistent(f64),
}

impl CmdError {
    /// Prints the machine-greppable reason line and returns the exit code.
    pub fn emit(&self) -> u8 {
        match self {
            CmdError::Usage(msg) => {
                eprintln!("usage-error {msg}");
                3
            }
            CmdError::Parse(e) => {
                eprintln!("parse-error {}:{}: {}", e.line, e.column, e.message);
                2
            }
            CmdError::Io(msg) => {
                eprintln!("io-error {msg}");
                2
            }
            CmdError::NoFamily(msg) => {
                eprintln!("no-family {msg}");
                2
            }
            CmdError::NoIntervened(msg) => {
                eprintln!("no-intervened {msg}");
                2
            }
            CmdError::Query(msg) => {
                eprintln!("query-error {msg}");
                2
            }
            CmdError::Inconsistent(max_offdiag) => {
                eprintln!("inconsistent-family max_offdiag={max_offdiag:e}");
                1
            }
        }
    }
}

fn cause_error(e: CauseError) -> CmdError {
    match e {
        CauseError::Inconsistent(HistoryError::InconsistentFamily { max_offdiag }) => {
            CmdError::Inconsistent(max_offdiag)
        }
        other => CmdError::Query(other.to_string()),
    }
}

/// Everything a command wants evaluated against one family.
pub struct WorkItem {
    /// Where the family came from, echoed into the report.
    pub source: String,
    /// The family to check and query.
    pub family: HistoryFamily,
    /// (F, G) pairs to classify.
    pub verdict_pairs: Vec<(Event, Event)>,
    /// (F, G) pairs to search for common causes.
    pub common_pairs: Vec<(Event, Event)>,
    /// (intervened family, F, G) triples to compare conditionals across.
    pub comparisons: Vec<(HistoryFamily, Event, Event)>,
    /// When true, an inconsistent family fails the run with exit 1.
    pub strict: bool,
}

#[derive(Serialize)]
pub struct Consistency {
    pub consistent: bool,
    pub max_offdiag: f64,
    pub history_count: usize,
}

#[derive(Serialize)]
pub struct ProbabilityEntry {
    /// One PDI member label per time slot.
    pub history: Vec<String>,
    pub probability: f64,
}

#[derive(Serialize)]
pub struct VerdictEntry {
    pub f: String,
    pub f_time: String,
    pub g: String,
    pub g_time: String,
    pub p_g_given_f: Option<f64>,
    pub p_f_given_g: Option<f64>,
    pub classification: String,
}

#[derive(Serialize)]
pub struct CandidateEntry {
    pub event: String,
    pub time: String,
}

#[derive(Serialize)]
pub struct CommonCauseEntry {
    pub f: String,
    pub g: String,
    pub candidates: Vec<CandidateEntry>,
}

#[derive(Serialize)]
pub struct ComparisonEntry {
    pub f: String,
    pub g: String,
    pub base_conditional: f64,
    pub intervened_conditional: f64,
    pub changed: bool,
}

/// The stable output record of one run.
#[derive(Serialize)]
pub struct Report {
    pub report_version: u32,
    pub source: String,
    pub eps: f64,
    pub threshold: f64,
    pub seed: Option<u64>,
    pub time_labels: Vec<String>,
    pub consistency: Consistency,
    pub probabilities: Option<Vec<ProbabilityEntry>>,
    pub verdicts: Vec<VerdictEntry>,
    pub common_causes: Vec<CommonCauseEntry>,
    pub comparisons: Vec<ComparisonEntry>,
}

/// Runs a work item. Returns the report plus, when the item is strict
/// and the family is inconsistent, the offending max offdiagonal.
pub fn run_item(
    item: &WorkItem,
    tol: Tolerance,
    threshold: f64,
    seed: Option<u64>,
) -> Result<(Report, Option<f64>), CmdError> {
    let fam = &item.family;
    let consistency = check_consistency(fam, tol).map_err(|e| CmdError::Query(e.to_string()))?;
    let consistent = consistency.consistent();
    let grid = fam.grid();

    let probabilities = consistency.probabilities().map(|probs| {
        fam.enumerate_histories()
            .iter()
            .zip(probs)
            .map(|(h, &p)| ProbabilityEntry {
                history: fam.history_labels(h).expect("enumerated history"),
                probability: p,
            })
            .collect()
    });

    let mut verdicts = Vec::new();
    let mut common_causes = Vec::new();
    let mut comparisons = Vec::new();
    if consistent {
        for (f, g) in &item.verdict_pairs {
            let v = classify_cause(fam, f, g, threshold, tol).map_err(cause_error)?;
            verdicts.push(VerdictEntry {
                f: f.label().to_string(),
                f_time: grid.label(f.time_index()).to_string(),
                g: g.label().to_string(),
                g_time: grid.label(g.time_index()).to_string(),
                p_g_given_f: v.p_g_given_f(),
                p_f_given_g: v.p_f_given_g(),
                classification: v.classification().name().to_string(),
            });
        }
        for (f, g) in &item.common_pairs {
            let result = find_common_causes(fam, f, g, threshold, tol).map_err(cause_error)?;
            common_causes.push(CommonCauseEntry {
                f: f.label().to_string(),
                g: g.label().to_string(),
                candidates: result
                    .candidates()
                    .iter()
                    .map(|c| CandidateEntry {
                        event: c.event().label().to_string(),
                        time: grid.label(c.event().time_index()).to_string(),
                    })
                    .collect(),
            });
        }
        for (intervened, f, g) in &item.comparisons {
            let cmp = compare_intervention(fam, intervened, f, g, tol).map_err(cause_error)?;
            comparisons.push(ComparisonEntry {
                f: f.label().to_string(),
                g: g.label().to_string(),
                base_conditional: cmp.base_conditional(),
                intervened_conditional: cmp.intervened_conditional(),
                changed: cmp.changed(),
            });
        }
    }

    let failure = if item.strict && !consistent {
        Some(consistency.max_offdiag())
    } else {
        None
    };
    let report = Report {
        report_version: 1,
        source: item.source.clone(),
        eps: tol.eps(),
        threshold,
        seed,
        time_labels: grid.labels().to_vec(),
        consistency: Consistency {
            consistent,
            max_offdiag: consistency.max_offdiag(),
            history_count: consistency.histories().len(),
        },
        probabilities,
        verdicts,
        common_causes,
        comparisons,
    };
    Ok((report, failure))
}

fn render_human(report: &Report) -> String {
    use std::fmt::Write as _;

    let mut out = String::new();
    let _ = writeln!(out, "source: {}", report.source);
    let _ = writeln!(out, "times: {}", report.time_labels.join(" "));
    let _ = writeln!(
        out,
        "consistent: {} (max offdiag {:e}, {} histories)",
        if report.consistency.consistent { "yes" } else { "no" },
        report.consistency.max_offdiag,
        report.consistency.history_count
    );
    if let Some(probs) = &report.probabilities {
        let _ = writeln!(out, "probabilities:");
        for entry in probs {
            let _ = writeln!(
                out,
                "  {:.9}  {}",
                entry.probability,
                entry.history.join(", ")
            );
        }
    }
    for v in &report.verdicts {
        let fmt = |p: Option<f64>| match p {
            Some(p) => format!("{p:.9}"),
            None => "undefined".to_string(),
        };
        let _ = writeln!(
            out,
            "cause {} @ {} -> {} @ {}: {} (Pr(G|F)={}, Pr(F|G)={})",
            v.f,
            v.f_time,
            v.g,
            v.g_time,
            v.classification,
            fmt(v.p_g_given_f),
            fmt(v.p_f_given_g)
        );
    }
    for c in &report.common_causes {
        let rendered: Vec<String> = c
            .candidates
            .iter()
            .map(|cand| format!("{} @ {}", cand.event, cand.time))
            .collect();
        let _ = writeln!(
            out,
            "common causes of {} and {}: {}",
            c.f,
            c.g,
            if rendered.is_empty() {
                "none".to_string()
            } else {
                rendered.join("; ")
            }
        );
    }
    for c in &report.comparisons {
        let _ = writeln!(
            out,
            "compare Pr({} | {}): base {:.9}, intervened {:.9}, {}",
            c.g,
            c.f,
            c.base_conditional,
            c.intervened_conditional,
            if c.changed { "changed" } else { "unchanged" }
        );
    }
    out
}

/// Prints the report: pretty JSON on stdout with `--json`, text otherwise.
/// Write failures (e.g. a closed pipe) are ignored rather than escalated.
/// Writes the report to stdout. Under `--json` the document goes to
/// stdout and the human rendering to stderr, so scripts and onlookers
/// both get their view. Closed pipes are ignored.
pub fn print_report(report: &Report, json: bool) {
    use std::io::Write as _;

    let text = if json {
        let _ = std::io::stderr().write_all(render_human(report).as_bytes());
        let mut s = serde_json::to_string_pretty(report).expect("report serializes");
        s.push('\n');
        s
    } else {
        render_human(report)
    };
    let _ = std::io::stdout().write_all(text.as_bytes());
}
