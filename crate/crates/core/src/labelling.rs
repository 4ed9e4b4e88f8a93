//! Label constraints over the saturated automaton and their
//! demand-driven least-fixpoint solution.
//!
//! Every stack transition of the saturated automaton carries a label
//! function from abstract elements to abstract elements. The functions
//! are never materialized as tables over the whole domain: all
//! constraint bodies build join-preserving functions, so a label is
//! represented extensionally by its values at the single words that were
//! actually demanded, and a value at a set argument is the join of the
//! values at its words.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::abstraction::{canonical, KDomain, KElement, KWord, Shuffler};
use crate::automata::{AState, GEdgeId, KAutomaton, MAutomaton};
use crate::model::{Action, Rhs, Sdpn};

/// A label variable: the value of a transition's label function at one
/// argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVar {
    pub transition: GEdgeId,
    pub argument: KElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YKind {
    Y1,
    Y2,
    Y3,
    Y4,
    Y5,
}

/// One inequality contributing to a transition's label. Bodies are
/// evaluated at an argument word; sub-labels are demanded as needed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    /// The identity function.
    Id,
    /// Prepend the action to the argument itself.
    PrependArg { act: Action },
    /// Prepend the action to another label's value at the argument.
    Prepend { act: Action, inner: GEdgeId },
    /// Prepend the action to the composition `outer(inner(arg))`.
    Compose {
        act: Action,
        outer: GEdgeId,
        inner: GEdgeId,
    },
    /// Prepend the action to the shuffle of a closed segment's constant
    /// (its label at the unit) with another label's value.
    SpawnShuffle {
        act: Action,
        constant_side: GEdgeId,
        arg_side: GEdgeId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub kind: YKind,
    pub target: GEdgeId,
    pub body: Body,
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("saturated automaton lacks an entry state for a rule's control state")]
    MissingEntry,
    #[error("saturated automaton lacks a transition required by a rule (saturation mismatch)")]
    SaturationMismatch,
    #[error("model must be normalized")]
    NotNormalized,
    #[error("demand cap exceeded: {entries} table entries (cap {cap})")]
    DemandCap { entries: usize, cap: usize },
}

/// Emits the constraint system for a saturated automaton: identity on
/// the pre-saturation transitions, one inequality per rule, control
/// state and witnessing path otherwise.
pub fn generate_constraints(m: &Sdpn, apre: &MAutomaton) -> Result<Vec<Constraint>, LabelError> {
    let mut out = Vec::new();
    for i in 0..apre.original_g_count {
        out.push(Constraint {
            kind: YKind::Y1,
            target: GEdgeId(i as u32),
            body: Body::Id,
        });
    }
    let controls: Vec<AState> = apre.control_states().collect();
    let entry = |s: AState, p| apre.entry(s, p).ok_or(LabelError::MissingEntry);
    let target_edge = |from, sym, to| {
        apre.g_edge_id(from, sym, to)
            .ok_or(LabelError::SaturationMismatch)
    };
    for rule in &m.rules {
        let act = rule.action;
        match &rule.rhs {
            Rhs::Simple { state, word } => match word.as_slice() {
                [] => {
                    for &s in &controls {
                        let sp = entry(s, rule.state)?;
                        let spp = entry(s, *state)?;
                        out.push(Constraint {
                            kind: YKind::Y3,
                            target: target_edge(sp, rule.symbol, spp)?,
                            body: Body::PrependArg { act },
                        });
                    }
                }
                [sym] => {
                    for &s in &controls {
                        let sp = entry(s, rule.state)?;
                        let spp = entry(s, *state)?;
                        for id in apre.g_out(spp) {
                            let e = apre.g_edge(*id);
                            if e.sym != *sym {
                                continue;
                            }
                            out.push(Constraint {
                                kind: YKind::Y2,
                                target: target_edge(sp, rule.symbol, e.to)?,
                                body: Body::Prepend { act, inner: *id },
                            });
                        }
                    }
                }
                [first, second] => {
                    for &s in &controls {
                        let sp = entry(s, rule.state)?;
                        let spp = entry(s, *state)?;
                        for id1 in apre.g_out(spp) {
                            let e1 = apre.g_edge(*id1);
                            if e1.sym != *first {
                                continue;
                            }
                            for id2 in apre.g_out(e1.to) {
                                let e2 = apre.g_edge(*id2);
                                if e2.sym != *second {
                                    continue;
                                }
                                out.push(Constraint {
                                    kind: YKind::Y4,
                                    target: target_edge(sp, rule.symbol, e2.to)?,
                                    body: Body::Compose {
                                        act,
                                        outer: *id1,
                                        inner: *id2,
                                    },
                                });
                            }
                        }
                    }
                }
                _ => return Err(LabelError::NotNormalized),
            },
            Rhs::Spawn {
                spawned_state,
                spawned_word,
                state,
                word,
            } => {
                let (&[s_sym], &[c_sym]) = (spawned_word.as_slice(), word.as_slice()) else {
                    return Err(LabelError::NotNormalized);
                };
                for &s in &controls {
                    let sp = entry(s, rule.state)?;
                    let sps = entry(s, *spawned_state)?;
                    for id1 in apre.g_out(sps) {
                        let e1 = apre.g_edge(*id1);
                        if e1.sym != s_sym {
                            continue;
                        }
                        // One summand per boundary edge out of the
                        // spawned segment's end state.
                        for sc in apre.e_out(e1.to) {
                            let spc = entry(*sc, *state)?;
                            for id2 in apre.g_out(spc) {
                                let e2 = apre.g_edge(*id2);
                                if e2.sym != c_sym {
                                    continue;
                                }
                                out.push(Constraint {
                                    kind: YKind::Y5,
                                    target: target_edge(sp, rule.symbol, e2.to)?,
                                    body: Body::SpawnShuffle {
                                        act,
                                        constant_side: *id1,
                                        arg_side: *id2,
                                    },
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub demanded: usize,
    pub evaluations: usize,
    pub shuffle_memo: usize,
}

/// Least solution of the constraint system, restricted to the
/// transitively demanded variables. Values only ever grow, so the table
/// at quiescence is the least pre-fixpoint at every demanded entry
/// regardless of evaluation order.
pub struct Solver {
    dom: KDomain,
    by_target: HashMap<GEdgeId, Vec<usize>>,
    constraints: Vec<Constraint>,
    shuffler: Shuffler,
    table: HashMap<(GEdgeId, KWord), KElement>,
    /// Entries whose growth must re-trigger a dependent evaluation.
    deps: HashMap<(GEdgeId, KWord), BTreeSet<(GEdgeId, KWord)>>,
    dirty: VecDeque<(GEdgeId, KWord)>,
    queued: BTreeSet<(GEdgeId, KWord)>,
    table_cap: usize,
    /// Bumped on every table growth; lets callers detect quiescence.
    version: u64,
    pub trace_log: Option<Vec<String>>,
    pub stats: SolveStats,
}

pub const DEFAULT_TABLE_CAP: usize = 4_000_000;

impl Solver {
    pub fn new(dom: KDomain, constraints: Vec<Constraint>) -> Self {
        let mut by_target: HashMap<GEdgeId, Vec<usize>> = HashMap::new();
        for (i, c) in constraints.iter().enumerate() {
            by_target.entry(c.target).or_default().push(i);
        }
        Solver {
            dom,
            by_target,
            constraints,
            shuffler: Shuffler::new(dom),
            table: HashMap::new(),
            deps: HashMap::new(),
            dirty: VecDeque::new(),
            queued: BTreeSet::new(),
            table_cap: DEFAULT_TABLE_CAP,
            version: 0,
            trace_log: None,
            stats: SolveStats::default(),
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn with_table_cap(mut self, cap: usize) -> Self {
        self.table_cap = cap;
        self
    }

    pub fn with_trace_log(mut self) -> Self {
        self.trace_log = Some(Vec::new());
        self
    }

    pub fn domain(&self) -> KDomain {
        self.dom
    }

    /// Current value of a label at a single-word argument.
    pub fn value_word(&self, t: GEdgeId, w: &KWord) -> KElement {
        self.table.get(&(t, w.clone())).cloned().unwrap_or_default()
    }

    /// Current value at a set argument: the join over its words.
    pub fn value(&self, t: GEdgeId, k: &KElement) -> KElement {
        let mut out = KElement::zero();
        for w in k.iter() {
            out.join_in_place(&self.value_word(t, w));
        }
        out
    }

    pub fn demanded_len(&self) -> usize {
        self.table.len()
    }

    /// Registers interest in a variable and schedules its evaluation.
    pub fn demand(&mut self, t: GEdgeId, w: &KWord) -> Result<(), LabelError> {
        let key = (t, w.clone());
        if self.table.contains_key(&key) {
            return Ok(());
        }
        if self.table.len() >= self.table_cap {
            return Err(LabelError::DemandCap {
                entries: self.table.len(),
                cap: self.table_cap,
            });
        }
        self.table.insert(key.clone(), KElement::zero());
        self.stats.demanded += 1;
        self.enqueue(key);
        Ok(())
    }

    fn enqueue(&mut self, key: (GEdgeId, KWord)) {
        if self.queued.insert(key.clone()) {
            self.dirty.push_back(key);
        }
    }

    fn record_dep(&mut self, on: (GEdgeId, KWord), waker: (GEdgeId, KWord)) {
        self.deps.entry(on).or_default().insert(waker);
    }

    /// Drains the worklist; on return the table satisfies every
    /// constraint at every demanded argument.
    pub fn run(&mut self) -> Result<(), LabelError> {
        self.run_scheduled(&mut |_| 0)
    }

    /// Worklist draining with a pluggable position chooser; the solved
    /// table is the least fixpoint whatever the order, which tests
    /// exercise with randomized choosers.
    pub fn run_scheduled(&mut self, pick: &mut dyn FnMut(usize) -> usize) -> Result<(), LabelError> {
        while !self.dirty.is_empty() {
            let at = pick(self.dirty.len()) % self.dirty.len();
            let key = self.dirty.remove(at).unwrap();
            self.queued.remove(&key);
            self.stats.evaluations += 1;
            let value = self.evaluate_target(key.0, &key.1)?;
            let entry = self.table.get_mut(&key).expect("demanded before queued");
            let old = if self.trace_log.is_some() || log::log_enabled!(log::Level::Trace) {
                Some(entry.clone())
            } else {
                None
            };
            if entry.join_in_place(&value) {
                self.version += 1;
                if let Some(old) = old {
                    let line = format!(
                        "label t{} at {}: {} -> {}",
                        key.0 .0,
                        word_dbg(&key.1),
                        elem_dbg(&old),
                        elem_dbg(&self.table[&key]),
                    );
                    log::trace!(target: "sdpn_core::labelling", "{}", line);
                    if let Some(log) = &mut self.trace_log {
                        log.push(line);
                    }
                }
                if let Some(wakers) = self.deps.get(&key) {
                    for w in wakers.clone() {
                        self.enqueue(w);
                    }
                }
            }
        }
        self.stats.shuffle_memo = self.shuffler.memo_len();
        Ok(())
    }

    /// Joins all constraint bodies targeting `t` at argument `w`,
    /// demanding whatever sub-values the bodies need.
    fn evaluate_target(&mut self, t: GEdgeId, w: &KWord) -> Result<KElement, LabelError> {
        let indices = self.by_target.get(&t).cloned().unwrap_or_default();
        let mut out = KElement::zero();
        let me = (t, w.clone());
        for i in indices {
            let body = self.constraints[i].body.clone();
            let v = match body {
                Body::Id => KElement::singleton(w.clone()),
                Body::PrependArg { act } => {
                    let mut word = vec![act];
                    word.extend_from_slice(&w.0);
                    KElement::singleton(canonical(&self.dom, &word))
                }
                Body::Prepend { act, inner } => {
                    self.record_dep((inner, w.clone()), me.clone());
                    self.demand(inner, w)?;
                    match self.table.get(&(inner, w.clone())) {
                        Some(v) => prepend_elem(&self.dom, act, v),
                        None => KElement::zero(),
                    }
                }
                Body::Compose { act, outer, inner } => {
                    self.record_dep((inner, w.clone()), me.clone());
                    self.demand(inner, w)?;
                    let mid = self.value_word(inner, w);
                    let mut joined = KElement::zero();
                    for u in mid.iter() {
                        self.record_dep((outer, u.clone()), me.clone());
                        self.demand(outer, u)?;
                        joined.join_in_place(&self.value_word(outer, u));
                    }
                    prepend_elem(&self.dom, act, &joined)
                }
                Body::SpawnShuffle {
                    act,
                    constant_side,
                    arg_side,
                } => {
                    let unit = KWord::empty();
                    self.record_dep((constant_side, unit.clone()), me.clone());
                    self.demand(constant_side, &unit)?;
                    self.record_dep((arg_side, w.clone()), me.clone());
                    self.demand(arg_side, w)?;
                    let table = &self.table;
                    let shuffler = &mut self.shuffler;
                    let left = table.get(&(constant_side, unit));
                    let right = table.get(&(arg_side, w.clone()));
                    let mixed = match (left, right) {
                        (Some(l), Some(r)) => shuffler.shuffle(l, r),
                        _ => KElement::zero(),
                    };
                    prepend_elem(&self.dom, act, &mixed)
                }
            };
            out.join_in_place(&v);
        }
        Ok(out)
    }

    pub fn shuffler(&mut self) -> &mut Shuffler {
        &mut self.shuffler
    }

    /// Asserts that every constraint holds at every demanded argument
    /// of its target; the solved table must be a pre-fixpoint.
    pub fn check_prefixpoint(&mut self) -> Result<bool, LabelError> {
        let keys: Vec<(GEdgeId, KWord)> = self.table.keys().cloned().collect();
        for (t, w) in keys {
            let v = self.evaluate_target(t, &w)?;
            self.run()?;
            if !v.le(&self.table[&(t, w.clone())]) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Compact name-free rendering for trace logging.
fn word_dbg(w: &KWord) -> String {
    if w.is_empty() {
        return "eps".to_string();
    }
    w.0.iter()
        .map(|a| match a {
            Action::Tau => "t".to_string(),
            Action::Sig { sig, pol } => format!("s{}{}", sig.0, pol),
        })
        .collect::<Vec<_>>()
        .join(".")
}

fn elem_dbg(e: &KElement) -> String {
    format!(
        "{{{}}}",
        e.iter().map(word_dbg).collect::<Vec<_>>().join(", ")
    )
}

fn prepend_elem(dom: &KDomain, act: Action, v: &KElement) -> KElement {
    let mut out = KElement::zero();
    for w in v.iter() {
        let mut word = Vec::with_capacity(w.len() + 1);
        word.push(act);
        word.extend_from_slice(&w.0);
        out.join_in_place(&KElement::singleton(canonical(dom, &word)));
    }
    out
}

/// The solved table restricted to the demanded variables.
pub struct Solution {
    pub dom: KDomain,
    table: HashMap<(GEdgeId, KWord), KElement>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn value(&self, t: GEdgeId, k: &KElement) -> KElement {
        let mut out = KElement::zero();
        for w in k.iter() {
            if let Some(v) = self.table.get(&(t, w.clone())) {
                out.join_in_place(v);
            }
        }
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(GEdgeId, KWord), &KElement)> {
        self.table.iter()
    }
}

/// Solves the system for the given demands and returns the table.
pub fn solve(
    constraints: Vec<Constraint>,
    dom: KDomain,
    demands: &[LabelVar],
) -> Result<Solution, LabelError> {
    let mut solver = Solver::new(dom, constraints);
    for d in demands {
        for w in d.argument.iter() {
            solver.demand(d.transition, w)?;
        }
    }
    solver.run()?;
    Ok(Solution {
        dom,
        table: solver.table,
        stats: solver.stats,
    })
}

/// Joint evaluation of a labelled automaton against a solver.
///
/// Segment values: for a segment state `u` and a boundary target `s`,
/// the value is the join over stack paths from `u` to a boundary edge
/// into `s` of the composed labels applied innermost-first to the unit.
/// Thread combination: walking control states from the initial one,
/// each thread contributes its segment constant through the
/// synchronizing shuffle. The result joins over final states. Demands
/// raised here are resolved co-recursively with the solver until the
/// joint fixpoint stabilizes.
pub fn evaluate(a: &KAutomaton, solver: &mut Solver) -> Result<KElement, LabelError> {
    let boundary_targets: Vec<AState> = a.auto.control_states().collect();

    // seg[(u, s)]: value of segments from u to a boundary into s. The
    // worklist carries words not yet pushed backward.
    let mut seg: HashMap<(AState, AState), KElement> = HashMap::new();
    let mut pending: HashMap<(AState, AState), Vec<KWord>> = HashMap::new();
    let mut worklist: VecDeque<(AState, AState)> = VecDeque::new();
    for &(from, to) in a.auto.e_edges() {
        let entry = seg.entry((from, to)).or_default();
        if entry.join_in_place(&KElement::one()) {
            pending.entry((from, to)).or_default().push(KWord::empty());
            worklist.push_back((from, to));
        }
    }

    loop {
        // Delta propagation at the current label table.
        while let Some(key) = worklist.pop_front() {
            let (v, s) = key;
            let delta = pending.remove(&key).unwrap_or_default();
            if delta.is_empty() {
                continue;
            }
            for eid in a.auto.g_in(v) {
                let e = a.auto.g_edge(*eid);
                let label = a.label(*eid);
                let mut val = KElement::zero();
                for w in &delta {
                    solver.demand(label, w)?;
                    if let Some(x) = solver.table.get(&(label, w.clone())) {
                        val.join_in_place(x);
                    }
                }
                if val.is_zero() {
                    continue;
                }
                let entry = seg.entry((e.from, s)).or_default();
                let mut grown = Vec::new();
                for w in val.iter() {
                    if !entry.contains(w) {
                        grown.push(w.clone());
                    }
                }
                if !grown.is_empty() {
                    for w in &grown {
                        entry.0.insert(w.clone());
                    }
                    pending.entry((e.from, s)).or_default().extend(grown);
                    worklist.push_back((e.from, s));
                }
            }
        }
        // Solve the raised demands; if any label value grew, earlier
        // propagations may have been computed against stale values, so
        // push every known segment word through again.
        let before = solver.version();
        solver.run()?;
        if solver.version() == before {
            break;
        }
        for (key, elem) in &seg {
            pending.insert(*key, elem.iter().cloned().collect());
            worklist.push_back(*key);
        }
    }

    // Forward combination across boundaries, again by word deltas; the
    // working sets live as interned ids.
    let seg_ids: HashMap<(AState, AState), Vec<u32>> = seg
        .iter()
        .map(|(k, v)| (*k, solver.shuffler.intern_element(v)))
        .collect();
    let mut reach: HashMap<AState, BTreeSet<u32>> = HashMap::new();
    let mut pend: HashMap<AState, Vec<u32>> = HashMap::new();
    let mut wl: VecDeque<AState> = VecDeque::new();
    let unit = solver.shuffler.intern_word(&KWord::empty());
    reach.entry(a.auto.initial).or_default().insert(unit);
    pend.entry(a.auto.initial).or_default().push(unit);
    wl.push_back(a.auto.initial);
    while let Some(s) = wl.pop_front() {
        let delta = pend.remove(&s).unwrap_or_default();
        if delta.is_empty() {
            continue;
        }
        for &(from, _, sp) in a.auto.p_edges() {
            if from != s {
                continue;
            }
            for &t in &boundary_targets {
                let Some(segment) = seg_ids.get(&(sp, t)) else {
                    continue;
                };
                let mut combined = BTreeSet::new();
                solver.shuffler.shuffle_ids_into(&delta, segment, &mut combined);
                let entry = reach.entry(t).or_default();
                let mut grown = Vec::new();
                for id in combined {
                    if entry.insert(id) {
                        grown.push(id);
                    }
                }
                if !grown.is_empty() {
                    pend.entry(t).or_default().extend(grown);
                    wl.push_back(t);
                }
            }
        }
    }
    solver.stats.shuffle_memo = solver.shuffler.memo_len();
    let mut ids: BTreeSet<u32> = BTreeSet::new();
    for f in &a.auto.finals {
        if let Some(v) = reach.get(f) {
            ids.extend(v.iter().copied());
        }
    }
    Ok(solver.shuffler.element_of_ids(ids.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::AbsKind;
    use crate::model::SigId;

    fn dom() -> KDomain {
        KDomain::new(AbsKind::Prefix, 4)
    }

    fn act(i: u32) -> Action {
        Action::send(SigId(i))
    }

    fn kw(letters: &[Action]) -> KWord {
        KWord(letters.to_vec())
    }

    #[test]
    fn identity_only_system_returns_argument() {
        let constraints = vec![Constraint {
            kind: YKind::Y1,
            target: GEdgeId(0),
            body: Body::Id,
        }];
        let sol = solve(
            constraints,
            dom(),
            &[LabelVar {
                transition: GEdgeId(0),
                argument: KElement::one(),
            }],
        )
        .unwrap();
        assert_eq!(sol.value(GEdgeId(0), &KElement::one()), KElement::one());
    }

    #[test]
    fn single_pop_constraint_prepends_action() {
        let constraints = vec![Constraint {
            kind: YKind::Y3,
            target: GEdgeId(0),
            body: Body::PrependArg { act: act(0) },
        }];
        let sol = solve(
            constraints,
            dom(),
            &[LabelVar {
                transition: GEdgeId(0),
                argument: KElement::one(),
            }],
        )
        .unwrap();
        assert_eq!(
            sol.value(GEdgeId(0), &KElement::one()),
            KElement::singleton(kw(&[act(0)]))
        );
    }

    #[test]
    fn spawn_shuffle_matches_hand_expansion() {
        // Labels: t0 prepends a, t1 prepends b, t2 is the spawn target
        // with constant side t0 and argument side t1.
        let a = act(0);
        let b = act(1);
        let d = act(3);
        let constraints = vec![
            Constraint {
                kind: YKind::Y3,
                target: GEdgeId(0),
                body: Body::PrependArg { act: a },
            },
            Constraint {
                kind: YKind::Y3,
                target: GEdgeId(1),
                body: Body::PrependArg { act: b },
            },
            Constraint {
                kind: YKind::Y5,
                target: GEdgeId(2),
                body: Body::SpawnShuffle {
                    act: d,
                    constant_side: GEdgeId(0),
                    arg_side: GEdgeId(1),
                },
            },
        ];
        let c = act(2);
        let sol = solve(
            constraints,
            dom(),
            &[
                LabelVar {
                    transition: GEdgeId(2),
                    argument: KElement::one(),
                },
                LabelVar {
                    transition: GEdgeId(2),
                    argument: KElement::singleton(kw(&[c])),
                },
            ],
        )
        .unwrap();
        // At the unit: d . ({a} shuffle {b}) = {dab, dba}.
        assert_eq!(
            sol.value(GEdgeId(2), &KElement::one()),
            KElement(
                [kw(&[d, a, b]), kw(&[d, b, a])]
                    .into_iter()
                    .collect()
            )
        );
        // At {c}: d . ({a} shuffle {bc}) = {dabc, dbac, dbca}.
        assert_eq!(
            sol.value(GEdgeId(2), &KElement::singleton(kw(&[c]))),
            KElement(
                [
                    kw(&[d, a, b, c]),
                    kw(&[d, b, a, c]),
                    kw(&[d, b, c, a])
                ]
                .into_iter()
                .collect()
            )
        );
    }

    #[test]
    fn chained_prepends_compose() {
        // t1 = a . t0, t0 = Id: value at {c} is {ac}.
        let constraints = vec![
            Constraint {
                kind: YKind::Y1,
                target: GEdgeId(0),
                body: Body::Id,
            },
            Constraint {
                kind: YKind::Y2,
                target: GEdgeId(1),
                body: Body::Prepend {
                    act: act(0),
                    inner: GEdgeId(0),
                },
            },
        ];
        let arg = KElement::singleton(kw(&[act(2)]));
        let sol = solve(
            constraints,
            dom(),
            &[LabelVar {
                transition: GEdgeId(1),
                argument: arg.clone(),
            }],
        )
        .unwrap();
        assert_eq!(
            sol.value(GEdgeId(1), &arg),
            KElement::singleton(kw(&[act(0), act(2)]))
        );
    }

    #[test]
    fn demand_cap_is_reported() {
        let constraints = vec![Constraint {
            kind: YKind::Y1,
            target: GEdgeId(0),
            body: Body::Id,
        }];
        let mut solver = Solver::new(dom(), constraints).with_table_cap(1);
        solver.demand(GEdgeId(0), &KWord::empty()).unwrap();
        let err = solver.demand(GEdgeId(0), &kw(&[act(0)])).unwrap_err();
        assert!(matches!(err, LabelError::DemandCap { .. }));
    }
}

#[cfg(test)]
mod generation_tests {
    use super::*;
    use crate::automata::{from_pattern, intersect, KAutomaton};
    use crate::ingest::{parse_config_pattern, parse_sdpn};
    use crate::presat::saturate;

    #[test]
    fn empty_rule_set_yields_identity_constraints_only() {
        let m = parse_sdpn("states: p\nstack: g h\nrules:\n").unwrap();
        let a = from_pattern(&parse_config_pattern("p g h", &m).unwrap(), &m);
        let sat = saturate(&m, &a).unwrap();
        let cs = generate_constraints(&m, &sat).unwrap();
        assert_eq!(cs.len(), a.original_g_count);
        assert!(cs.iter().all(|c| matches!(c.kind, YKind::Y1)));
    }

    #[test]
    fn pop_rule_emits_one_constraint_per_control_state() {
        let m = parse_sdpn("channels: a\nstates: p pp\nstack: g\nrules:\n  p g -a!-> pp\n")
            .unwrap();
        let a = from_pattern(&parse_config_pattern("ANY* pp ANY*", &m).unwrap(), &m);
        let sat = saturate(&m, &a).unwrap();
        let cs = generate_constraints(&m, &sat).unwrap();
        let controls = sat.control_states().count();
        let pops = cs
            .iter()
            .filter(|c| matches!(c.kind, YKind::Y3))
            .count();
        assert_eq!(pops, controls);
    }

    #[test]
    fn evaluation_of_unreachable_final_is_zero() {
        let m = parse_sdpn("states: p q\nstack: g\nrules:\n").unwrap();
        let target = from_pattern(&parse_config_pattern("p g", &m).unwrap(), &m);
        let sat = saturate(&m, &target).unwrap();
        let cs = generate_constraints(&m, &sat).unwrap();
        // Initial set disjoint from the target language.
        let init = from_pattern(&parse_config_pattern("q g", &m).unwrap(), &m);
        let product = intersect(&KAutomaton::self_labelled(sat), &init);
        let mut solver = Solver::new(KDomain::new(crate::abstraction::AbsKind::Prefix, 2), cs);
        let value = evaluate(&product, &mut solver).unwrap();
        assert!(value.is_zero());
    }

    #[test]
    fn evaluation_over_original_transitions_is_the_unit() {
        let m = parse_sdpn("states: p q\nstack: g\nrules:\n").unwrap();
        let pat = parse_config_pattern("p g q", &m).unwrap();
        let target = from_pattern(&pat, &m);
        let sat = saturate(&m, &target).unwrap();
        let cs = generate_constraints(&m, &sat).unwrap();
        let product = intersect(&KAutomaton::self_labelled(sat), &from_pattern(&pat, &m));
        let mut solver = Solver::new(KDomain::new(crate::abstraction::AbsKind::Prefix, 2), cs);
        let value = evaluate(&product, &mut solver).unwrap();
        assert_eq!(value, KElement::one());
    }
}
