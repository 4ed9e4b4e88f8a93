//! Machine-readable run reports. The schema is stable: identical inputs
//! produce byte-identical reports except for the `timing` section,
//! which callers may strip when comparing.

use serde::Serialize;

use crate::abstraction::KElement;
use crate::cegar::{CegarRun, CheckReport, OrderOutcome, Verdict};
use crate::model::{Sdpn, StepRules, Trace};

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub mode: String,
    pub model: String,
    pub init: String,
    pub target: String,
    pub run: RunConfig,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abstraction: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckSection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub timing: Timing,
}

/// Full configuration of the run, for reproducibility.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub node_cap: usize,
    pub table_cap: usize,
}

#[derive(Debug, Serialize)]
pub struct CheckSection {
    pub order: usize,
    pub abstraction: String,
    pub proven: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub least_internal_count: Option<usize>,
    pub paths_abstraction: Vec<String>,
    pub tau_meet: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<String>,
    pub stats: StatsSection,
}

#[derive(Debug, Serialize)]
pub struct StatsSection {
    pub demanded_variables: usize,
    pub evaluations: usize,
    pub shuffle_memo: usize,
}

#[derive(Debug, Serialize)]
pub struct TraceReport {
    pub start: String,
    pub length: usize,
    pub steps: Vec<TraceStepReport>,
}

#[derive(Debug, Serialize)]
pub struct TraceStepReport {
    pub action: String,
    pub rules: Vec<String>,
    pub config: String,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: u128,
}

pub fn words(m: &Sdpn, k: &KElement) -> Vec<String> {
    k.iter()
        .map(|w| {
            if w.is_empty() {
                "eps".to_string()
            } else {
                w.0.iter()
                    .map(|a| m.display_action(*a))
                    .collect::<Vec<_>>()
                    .join(".")
            }
        })
        .collect()
}

pub fn trace_report(m: &Sdpn, t: &Trace) -> TraceReport {
    let steps = t
        .steps
        .iter()
        .map(|s| {
            let rules = match s.rules {
                StepRules::One { rule, .. } => vec![m.rules[rule.0 as usize].name.clone()],
                StepRules::Sync {
                    left_rule,
                    right_rule,
                    ..
                } => vec![
                    m.rules[left_rule.0 as usize].name.clone(),
                    m.rules[right_rule.0 as usize].name.clone(),
                ],
            };
            TraceStepReport {
                action: m.display_action(s.observable),
                rules,
                config: m.display_config(&s.resulting),
            }
        })
        .collect();
    TraceReport {
        start: m.display_config(&t.start),
        length: t.len(),
        steps,
    }
}

fn check_section(m: &Sdpn, c: &CheckReport, validation: Option<String>) -> CheckSection {
    CheckSection {
        order: c.order,
        abstraction: c.kind.to_string(),
        proven: matches!(c.outcome, OrderOutcome::Proven),
        least_internal_count: match c.outcome {
            OrderOutcome::Proven => None,
            OrderOutcome::AbstractCex(j) => Some(j),
        },
        paths_abstraction: words(m, &c.paths_abstraction),
        tau_meet: words(m, &c.tau_meet),
        validation,
        stats: StatsSection {
            demanded_variables: c.solve.demanded,
            evaluations: c.solve.evaluations,
            shuffle_memo: c.solve.shuffle_memo,
        },
    }
}

pub fn cegar_report(
    m: &Sdpn,
    run: &CegarRun,
    model_path: &str,
    init: &str,
    target: &str,
    cfg: RunConfig,
) -> Report {
    let (outcome, order, abstraction, trace) = match &run.verdict {
        Verdict::Unreachable { order, kind } => (
            "unreachable".to_string(),
            Some(*order),
            Some(kind.to_string()),
            None,
        ),
        Verdict::Reachable { trace } => (
            "reachable".to_string(),
            None,
            None,
            Some(trace_report(m, trace)),
        ),
        Verdict::Unknown { max_order } => ("unknown".to_string(), Some(*max_order), None, None),
    };
    let mut checks = Vec::new();
    let mut warnings = run.errors.clone();
    for round in &run.rounds {
        let validation = round.validated_j.map(|_| {
            if round.validation_spurious {
                "spurious".to_string()
            } else {
                "real".to_string()
            }
        });
        checks.push(check_section(m, &round.prefix, validation.clone()));
        checks.push(check_section(m, &round.suffix, validation));
        if let Some(w) = &round.warning {
            warnings.push(w.clone());
        }
    }
    Report {
        tool: "sdpn",
        mode: "cegar".to_string(),
        model: model_path.to_string(),
        init: init.to_string(),
        target: target.to_string(),
        run: cfg,
        outcome,
        order,
        abstraction,
        trace,
        checks,
        warnings,
        timing: Timing {
            elapsed_ms: run.elapsed_ms,
        },
    }
}

pub fn order_report(
    m: &Sdpn,
    sections: &[CheckReport],
    model_path: &str,
    init: &str,
    target: &str,
    cfg: RunConfig,
    elapsed_ms: u128,
) -> Report {
    let any_proven = sections
        .iter()
        .any(|c| matches!(c.outcome, OrderOutcome::Proven));
    let first_proven = sections
        .iter()
        .find(|c| matches!(c.outcome, OrderOutcome::Proven));
    Report {
        tool: "sdpn",
        mode: "order".to_string(),
        model: model_path.to_string(),
        init: init.to_string(),
        target: target.to_string(),
        run: cfg,
        outcome: if any_proven {
            "unreachable".to_string()
        } else {
            "unknown".to_string()
        },
        order: first_proven.map(|c| c.order),
        abstraction: first_proven.map(|c| c.kind.to_string()),
        trace: None,
        checks: sections
            .iter()
            .map(|c| check_section(m, c, None))
            .collect(),
        warnings: Vec::new(),
        timing: Timing { elapsed_ms },
    }
}
