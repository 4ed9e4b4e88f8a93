//! The refinement loop: per-order abstract checks with the prefix and
//! suffix domains, counterexample validation by bounded concrete
//! search, and order refinement until a verdict or exhaustion.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::abstraction::{tau_star, AbsKind, KDomain, KElement};
use crate::automata::{accepts, from_pattern, intersect, KAutomaton, MAutomaton};
use crate::ingest::{enumerate_pattern, ConfigPattern, EnumBounds};
use crate::labelling::{evaluate, generate_constraints, Constraint, LabelError, Solver};
use crate::model::{bounded_search_strict, normalize, Sdpn, SearchError, Trace};
use crate::presat::{saturate_with_stats, SaturateError, SaturationStats};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Saturate(#[from] SaturateError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// Resource limits for one analysis run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Caps {
    /// Nodes explored by a bounded concrete search.
    pub node_cap: usize,
    /// Demanded label-table entries.
    pub table_cap: usize,
    /// Threads contributed by each `ANY*` during pattern instantiation.
    pub enum_any_threads: usize,
    /// Stack depth bound during pattern instantiation.
    pub enum_stack: usize,
    /// Configurations instantiated from the initial pattern.
    pub enum_count: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            node_cap: 2_000_000,
            table_cap: crate::labelling::DEFAULT_TABLE_CAP,
            enum_any_threads: 1,
            enum_stack: 2,
            enum_count: 256,
        }
    }
}

/// Shared pipeline state for one (model, init, target) triple: the
/// normalized model, the saturated target automaton, its constraint
/// system and the labelled product with the initial-set automaton.
/// Everything here is independent of the abstraction domain.
pub struct Prepared {
    pub model: Sdpn,
    pub target_automaton: MAutomaton,
    pub saturated: MAutomaton,
    pub constraints: Vec<Constraint>,
    pub product: KAutomaton,
    pub init_pattern: ConfigPattern,
    pub target_pattern: ConfigPattern,
    pub saturation: SaturationStats,
    pub caps: Caps,
}

impl Prepared {
    pub fn build(
        m: &Sdpn,
        init: &ConfigPattern,
        target: &ConfigPattern,
        caps: Caps,
    ) -> Result<Prepared, AnalysisError> {
        let model = if m.is_normal() { m.clone() } else { normalize(m) };
        let target_automaton = from_pattern(target, &model);
        let (saturated, saturation) = saturate_with_stats(&model, &target_automaton)?;
        let constraints = generate_constraints(&model, &saturated)?;
        let init_automaton = from_pattern(init, &model);
        let product = intersect(
            &KAutomaton::self_labelled(saturated.clone()),
            &init_automaton,
        );
        Ok(Prepared {
            model,
            target_automaton,
            saturated,
            constraints,
            product,
            init_pattern: init.clone(),
            target_pattern: target.clone(),
            saturation,
            caps,
        })
    }

    /// Abstract path language between the two sets in the given domain.
    pub fn paths_abstraction(&self, dom: KDomain) -> Result<(KElement, SolveSummary), AnalysisError> {
        let mut solver = Solver::new(dom, self.constraints.clone()).with_table_cap(self.caps.table_cap);
        let value = evaluate(&self.product, &mut solver)?;
        let summary = SolveSummary {
            demanded: solver.stats.demanded,
            evaluations: solver.stats.evaluations,
            shuffle_memo: solver.stats.shuffle_memo,
        };
        Ok((value, summary))
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveSummary {
    pub demanded: usize,
    pub evaluations: usize,
    pub shuffle_memo: usize,
}

/// Outcome of one abstract check at a fixed domain.
#[derive(Debug, Clone)]
pub enum OrderOutcome {
    Proven,
    /// The least count of internal letters surviving the meet.
    AbstractCex(usize),
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub kind: AbsKind,
    pub order: usize,
    pub paths_abstraction: KElement,
    pub tau_meet: KElement,
    pub outcome: OrderOutcome,
    pub solve: SolveSummary,
}

/// Runs the abstract pipeline at one domain and intersects the path
/// abstraction with the abstraction of the internal-only language.
pub fn check_order(
    m: &Sdpn,
    init: &ConfigPattern,
    target: &ConfigPattern,
    dom: KDomain,
) -> Result<CheckReport, AnalysisError> {
    let prepared = Prepared::build(m, init, target, Caps::default())?;
    check_order_prepared(&prepared, dom)
}

pub fn check_order_prepared(p: &Prepared, dom: KDomain) -> Result<CheckReport, AnalysisError> {
    let (paths, solve) = p.paths_abstraction(dom)?;
    let meet = paths.meet(&tau_star(&dom));
    let outcome = if meet.is_zero() {
        OrderOutcome::Proven
    } else {
        let j = meet.iter().map(|w| w.len()).min().unwrap();
        OrderOutcome::AbstractCex(j)
    };
    Ok(CheckReport {
        kind: dom.kind,
        order: dom.order,
        paths_abstraction: paths,
        tau_meet: meet,
        outcome,
        solve,
    })
}

#[derive(Debug, Clone)]
pub enum Validation {
    Real(Trace),
    Spurious {
        /// Set when the search gave up on resources rather than
        /// exhausting the depth; refinement continues soundly either
        /// way, but the report carries the warning.
        warning: Option<String>,
    },
}

/// Bounded concrete validation: searches the strict semantics from the
/// instantiated initial set for a configuration in the target language,
/// up to `budget` steps.
pub fn validate(
    p: &Prepared,
    j: usize,
    budget: usize,
) -> Result<Validation, AnalysisError> {
    debug_assert!(j <= budget.max(j));
    let bounds = EnumBounds {
        any_threads: p.caps.enum_any_threads,
        stack: p.caps.enum_stack,
        count: p.caps.enum_count,
    };
    let init = enumerate_pattern(&p.init_pattern, &p.model, bounds);
    let target = &p.target_automaton;
    let found = bounded_search_strict(
        &p.model,
        &init,
        &|c| accepts(target, c),
        budget,
        p.caps.node_cap,
    );
    match found {
        Ok((Some(trace), _)) => Ok(Validation::Real(trace)),
        Ok((None, _)) => Ok(Validation::Spurious { warning: None }),
        Err(SearchError::NodeCapExceeded { cap, explored }) => Ok(Validation::Spurious {
            warning: Some(format!(
                "validation search hit the node cap ({} explored, cap {})",
                explored, cap
            )),
        }),
    }
}

/// Final verdict of the refinement loop.
#[derive(Debug, Clone)]
pub enum Verdict {
    Unreachable { order: usize, kind: AbsKind },
    Reachable { trace: Trace },
    Unknown { max_order: usize },
}

#[derive(Debug, Clone)]
pub struct OrderRound {
    pub order: usize,
    pub prefix: CheckReport,
    pub suffix: CheckReport,
    pub validated_j: Option<usize>,
    pub validation_spurious: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CegarRun {
    pub verdict: Verdict,
    pub rounds: Vec<OrderRound>,
    pub elapsed_ms: u128,
    /// Resource failures that degraded the verdict to unknown.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct CegarOptions {
    pub max_order: usize,
    /// Overrides the per-order validation budget (default: the order).
    pub budget: Option<usize>,
    pub caps: Caps,
}

impl Default for CegarOptions {
    fn default() -> Self {
        CegarOptions {
            max_order: 3,
            budget: None,
            caps: Caps::default(),
        }
    }
}

/// Iterative refinement: at each order both abstraction kinds are
/// checked; a proof ends the loop (the prefix kind is reported on
/// ties), otherwise the smaller abstract counterexample is validated
/// concretely. A real witness ends the loop; a spurious one raises the
/// order. Resource failures degrade to an unknown verdict rather than
/// an error.
pub fn run_cegar(
    m: &Sdpn,
    init: &ConfigPattern,
    target: &ConfigPattern,
    opts: CegarOptions,
) -> Result<CegarRun, AnalysisError> {
    let start = Instant::now();
    let prepared = Prepared::build(m, init, target, opts.caps)?;
    let mut rounds = Vec::new();
    let mut errors = Vec::new();
    for order in 1..=opts.max_order {
        let pre = match check_order_prepared(&prepared, KDomain::new(AbsKind::Prefix, order)) {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("prefix order {}: {}", order, e));
                break;
            }
        };
        let suf = match check_order_prepared(&prepared, KDomain::new(AbsKind::Suffix, order)) {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("suffix order {}: {}", order, e));
                break;
            }
        };
        let (pj, sj) = (
            match pre.outcome {
                OrderOutcome::Proven => None,
                OrderOutcome::AbstractCex(j) => Some(j),
            },
            match suf.outcome {
                OrderOutcome::Proven => None,
                OrderOutcome::AbstractCex(j) => Some(j),
            },
        );
        if pj.is_none() || sj.is_none() {
            let kind = if pj.is_none() {
                AbsKind::Prefix
            } else {
                AbsKind::Suffix
            };
            rounds.push(OrderRound {
                order,
                prefix: pre,
                suffix: suf,
                validated_j: None,
                validation_spurious: false,
                warning: None,
            });
            return Ok(CegarRun {
                verdict: Verdict::Unreachable { order, kind },
                rounds,
                elapsed_ms: start.elapsed().as_millis(),
                errors,
            });
        }
        // Validate the smaller abstract counterexample; the exhaustive
        // search subsumes the other one at the same budget.
        let j = pj.unwrap().min(sj.unwrap());
        let budget = opts.budget.unwrap_or(order).max(j);
        match validate(&prepared, j, budget)? {
            Validation::Real(trace) => {
                debug_assert!(trace.replays_under_strict(&prepared.model));
                rounds.push(OrderRound {
                    order,
                    prefix: pre,
                    suffix: suf,
                    validated_j: Some(j),
                    validation_spurious: false,
                    warning: None,
                });
                return Ok(CegarRun {
                    verdict: Verdict::Reachable { trace },
                    rounds,
                    elapsed_ms: start.elapsed().as_millis(),
                    errors,
                });
            }
            Validation::Spurious { warning } => {
                rounds.push(OrderRound {
                    order,
                    prefix: pre,
                    suffix: suf,
                    validated_j: Some(j),
                    validation_spurious: true,
                    warning,
                });
            }
        }
    }
    Ok(CegarRun {
        verdict: Verdict::Unknown {
            max_order: opts.max_order,
        },
        rounds,
        elapsed_ms: start.elapsed().as_millis(),
        errors,
    })
}
