//! Configuration automata: finite automata over control-state and
//! stack-symbol letters with a two-sorted state space. Control-sort
//! states read a state symbol to enter a dedicated segment-sort state;
//! segment-sort states read the thread's stack word and hand control
//! back over a boundary transition. A labelled variant attaches a label
//! variable to every stack transition.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::ingest::{ConfigPattern, PatternItem, StackAtom};
use crate::model::{Configuration, Sdpn, StackId, StateId};

/// Automaton state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AState(pub u32);

/// Index of a stack-symbol transition; stable across saturation, used
/// as the label-variable identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GEdgeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSort {
    Control,
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GEdge {
    pub from: AState,
    pub sym: StackId,
    pub to: AState,
}

#[derive(Debug, Clone)]
pub struct MAutomaton {
    sorts: Vec<StateSort>,
    pub initial: AState,
    pub finals: BTreeSet<AState>,
    p_edges: Vec<(AState, StateId, AState)>,
    g_edges: Vec<GEdge>,
    e_edges: Vec<(AState, AState)>,
    /// The first this many stack transitions predate saturation.
    pub original_g_count: usize,

    // Derived indexes, maintained on mutation.
    p_out: HashMap<(AState, StateId), AState>,
    owner_of_entry: HashMap<AState, (AState, StateId)>,
    g_out: HashMap<AState, Vec<GEdgeId>>,
    g_in: HashMap<AState, Vec<GEdgeId>>,
    g_set: HashSet<(AState, StackId, AState)>,
    e_out: HashMap<AState, Vec<AState>>,
    e_in: HashMap<AState, Vec<AState>>,
}

/// First structural clause violated by an automaton, with witnesses.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("state {0:?} has two entry states for the same state symbol")]
    DuplicateEntry(AState),
    #[error("entry state {0:?} is shared or has extra predecessors")]
    SharedEntry(AState),
    #[error("stack transition leaves control-sort state {0:?}")]
    StackFromControl(AState),
    #[error("state-symbol transition leaves segment-sort state {0:?}")]
    StateFromSegment(AState),
    #[error("state-symbol transition enters control-sort state {0:?}")]
    StateIntoControl(AState),
    #[error("stack transition enters control-sort state {0:?}")]
    StackIntoControl(AState),
    #[error("boundary transition from {0:?} to {1:?} is not segment-to-control")]
    BadBoundary(AState, AState),
    #[error("initial state {0:?} is not control-sort")]
    InitialNotControl(AState),
    #[error("final state {0:?} is not control-sort")]
    FinalNotControl(AState),
}

impl MAutomaton {
    pub fn new() -> Self {
        let mut a = MAutomaton {
            sorts: Vec::new(),
            initial: AState(0),
            finals: BTreeSet::new(),
            p_edges: Vec::new(),
            g_edges: Vec::new(),
            e_edges: Vec::new(),
            original_g_count: 0,
            p_out: HashMap::new(),
            owner_of_entry: HashMap::new(),
            g_out: HashMap::new(),
            g_in: HashMap::new(),
            g_set: HashSet::new(),
            e_out: HashMap::new(),
            e_in: HashMap::new(),
        };
        a.initial = a.add_state(StateSort::Control);
        a
    }

    pub fn add_state(&mut self, sort: StateSort) -> AState {
        self.sorts.push(sort);
        AState(self.sorts.len() as u32 - 1)
    }

    pub fn sort(&self, s: AState) -> StateSort {
        self.sorts[s.0 as usize]
    }

    pub fn n_states(&self) -> usize {
        self.sorts.len()
    }

    pub fn control_states(&self) -> impl Iterator<Item = AState> + '_ {
        (0..self.sorts.len())
            .map(|i| AState(i as u32))
            .filter(|s| self.sort(*s) == StateSort::Control)
    }

    pub fn add_p_edge(&mut self, from: AState, p: StateId, to: AState) {
        self.p_edges.push((from, p, to));
        self.p_out.insert((from, p), to);
        self.owner_of_entry.insert(to, (from, p));
    }

    pub fn add_e_edge(&mut self, from: AState, to: AState) {
        if self.e_out.get(&from).is_some_and(|v| v.contains(&to)) {
            return;
        }
        self.e_edges.push((from, to));
        self.e_out.entry(from).or_default().push(to);
        self.e_in.entry(to).or_default().push(from);
    }

    /// Adds a stack transition unless present; returns its id when new.
    pub fn add_g_edge(&mut self, from: AState, sym: StackId, to: AState) -> Option<GEdgeId> {
        if !self.g_set.insert((from, sym, to)) {
            return None;
        }
        let id = GEdgeId(self.g_edges.len() as u32);
        self.g_edges.push(GEdge { from, sym, to });
        self.g_out.entry(from).or_default().push(id);
        self.g_in.entry(to).or_default().push(id);
        Some(id)
    }

    pub fn g_edge(&self, id: GEdgeId) -> GEdge {
        self.g_edges[id.0 as usize]
    }

    pub fn g_edges(&self) -> &[GEdge] {
        &self.g_edges
    }

    pub fn g_edge_id(&self, from: AState, sym: StackId, to: AState) -> Option<GEdgeId> {
        if !self.g_set.contains(&(from, sym, to)) {
            return None;
        }
        self.g_out
            .get(&from)?
            .iter()
            .copied()
            .find(|id| {
                let e = self.g_edge(*id);
                e.sym == sym && e.to == to
            })
    }

    pub fn g_out(&self, from: AState) -> &[GEdgeId] {
        self.g_out.get(&from).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn g_in(&self, to: AState) -> &[GEdgeId] {
        self.g_in.get(&to).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn e_out(&self, from: AState) -> &[AState] {
        self.e_out.get(&from).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn e_in(&self, to: AState) -> &[AState] {
        self.e_in.get(&to).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn e_edges(&self) -> &[(AState, AState)] {
        &self.e_edges
    }

    pub fn p_edges(&self) -> &[(AState, StateId, AState)] {
        &self.p_edges
    }

    /// The dedicated entry state for reading `p` from control state `s`.
    pub fn entry(&self, s: AState, p: StateId) -> Option<AState> {
        self.p_out.get(&(s, p)).copied()
    }

    /// The (control state, state symbol) pair owning an entry state.
    pub fn entry_owner(&self, sp: AState) -> Option<(AState, StateId)> {
        self.owner_of_entry.get(&sp).copied()
    }

    /// Ensures every control state has an entry state for every state
    /// symbol of the model, so saturation never lacks a target.
    pub fn complete_entries(&mut self, m: &Sdpn) {
        for s in self.control_states().collect::<Vec<_>>() {
            for p in 0..m.n_states() {
                let p = StateId(p as u32);
                if self.entry(s, p).is_none() {
                    let sp = self.add_state(StateSort::Segment);
                    self.add_p_edge(s, p, sp);
                }
            }
        }
    }
}

impl Default for MAutomaton {
    fn default() -> Self {
        Self::new()
    }
}

/// Checks every structural clause of the two-sorted shape and reports
/// the first violation. Saturation adds stack transitions into entry
/// states, so the sole-predecessor clause is asserted only for the
/// transitions predating saturation; on an unsaturated automaton this
/// is the full definition.
pub fn validate(a: &MAutomaton) -> Result<(), Violation> {
    if a.sort(a.initial) != StateSort::Control {
        return Err(Violation::InitialNotControl(a.initial));
    }
    for f in &a.finals {
        if a.sort(*f) != StateSort::Control {
            return Err(Violation::FinalNotControl(*f));
        }
    }
    let mut seen_pairs: HashSet<(AState, StateId)> = HashSet::new();
    let mut entry_pred: HashMap<AState, AState> = HashMap::new();
    for &(from, p, to) in &a.p_edges {
        if a.sort(from) != StateSort::Control {
            return Err(Violation::StateFromSegment(from));
        }
        if a.sort(to) != StateSort::Segment {
            return Err(Violation::StateIntoControl(to));
        }
        if !seen_pairs.insert((from, p)) {
            return Err(Violation::DuplicateEntry(from));
        }
        if let Some(prev) = entry_pred.insert(to, from) {
            if prev != from {
                return Err(Violation::SharedEntry(to));
            }
            // Two state symbols entering the same dedicated state.
            return Err(Violation::SharedEntry(to));
        }
    }
    for (i, e) in a.g_edges.iter().enumerate() {
        if a.sort(e.from) != StateSort::Segment {
            return Err(Violation::StackFromControl(e.from));
        }
        if a.sort(e.to) != StateSort::Segment {
            return Err(Violation::StackIntoControl(e.to));
        }
        // Entry states may only be entered by their owner.
        if i < a.original_g_count && entry_pred.contains_key(&e.to) {
            return Err(Violation::SharedEntry(e.to));
        }
    }
    for &(from, to) in &a.e_edges {
        if a.sort(from) != StateSort::Segment || a.sort(to) != StateSort::Control {
            return Err(Violation::BadBoundary(from, to));
        }
        if entry_pred.contains_key(&to) {
            return Err(Violation::SharedEntry(to));
        }
    }
    Ok(())
}

/// Membership test following the segmented structure: read the thread's
/// state symbol, then its stack word, then cross a boundary.
pub fn accepts(a: &MAutomaton, c: &Configuration) -> bool {
    let mut current: BTreeSet<AState> = BTreeSet::new();
    current.insert(a.initial);
    for t in &c.threads {
        let mut frontier: BTreeSet<AState> = BTreeSet::new();
        for s in &current {
            if let Some(sp) = a.entry(*s, t.state) {
                frontier.insert(sp);
            }
        }
        for sym in &t.stack {
            let mut next = BTreeSet::new();
            for s in &frontier {
                for id in a.g_out(*s) {
                    let e = a.g_edge(*id);
                    if e.sym == *sym {
                        next.insert(e.to);
                    }
                }
            }
            frontier = next;
            if frontier.is_empty() {
                return false;
            }
        }
        current = frontier
            .iter()
            .flat_map(|s| a.e_out(*s).iter().copied())
            .collect();
        if current.is_empty() {
            return false;
        }
    }
    current.iter().any(|s| a.finals.contains(s))
}

/// Compiles a pattern into an automaton over the model's symbols. The
/// result is validated by construction: entry states are created one
/// per (control state, state symbol) pair, and every control state is
/// completed with entry states for all state symbols.
pub fn from_pattern(p: &ConfigPattern, m: &Sdpn) -> MAutomaton {
    let mut a = MAutomaton::new();
    let mut boundary = a.initial;
    for item in &p.items {
        match item {
            PatternItem::AnyThreads => {
                // Loop on the boundary: any state symbol, any stack.
                let sink = a.add_state(StateSort::Segment);
                for st in 0..m.n_states() {
                    let p = StateId(st as u32);
                    let sp = match a.entry(boundary, p) {
                        Some(sp) => sp,
                        None => {
                            let sp = a.add_state(StateSort::Segment);
                            a.add_p_edge(boundary, p, sp);
                            sp
                        }
                    };
                    a.add_e_edge(sp, boundary);
                    for sym in 0..m.n_stack_symbols() {
                        a.add_g_edge(sp, StackId(sym as u32), sink);
                    }
                }
                for sym in 0..m.n_stack_symbols() {
                    a.add_g_edge(sink, StackId(sym as u32), sink);
                }
                a.add_e_edge(sink, boundary);
            }
            PatternItem::Thread { states, stack } => {
                let mut frontier: Vec<AState> = Vec::new();
                for p in states {
                    let sp = match a.entry(boundary, *p) {
                        Some(sp) => sp,
                        None => {
                            let sp = a.add_state(StateSort::Segment);
                            a.add_p_edge(boundary, *p, sp);
                            sp
                        }
                    };
                    frontier.push(sp);
                }
                for atom in stack {
                    frontier = compile_atom(&mut a, m, atom, frontier);
                }
                let next_boundary = a.add_state(StateSort::Control);
                for s in frontier {
                    a.add_e_edge(s, next_boundary);
                }
                boundary = next_boundary;
            }
        }
    }
    a.finals.insert(boundary);
    a.complete_entries(m);
    a.original_g_count = a.g_edges.len();
    debug_assert_eq!(validate(&a), Ok(()));
    a
}

fn compile_atom(
    a: &mut MAutomaton,
    m: &Sdpn,
    atom: &StackAtom,
    frontier: Vec<AState>,
) -> Vec<AState> {
    let all_syms = || (0..m.n_stack_symbols()).map(|i| StackId(i as u32));
    match atom {
        StackAtom::Lit(sym) => {
            let t = a.add_state(StateSort::Segment);
            for s in &frontier {
                a.add_g_edge(*s, *sym, t);
            }
            vec![t]
        }
        StackAtom::Any => {
            let t = a.add_state(StateSort::Segment);
            for s in &frontier {
                for sym in all_syms() {
                    a.add_g_edge(*s, sym, t);
                }
            }
            vec![t]
        }
        StackAtom::Plus(sym) => {
            let t = a.add_state(StateSort::Segment);
            for s in &frontier {
                a.add_g_edge(*s, *sym, t);
            }
            a.add_g_edge(t, *sym, t);
            vec![t]
        }
        StackAtom::Star(sym) => {
            let t = a.add_state(StateSort::Segment);
            for s in &frontier {
                a.add_g_edge(*s, *sym, t);
            }
            a.add_g_edge(t, *sym, t);
            let mut out = frontier;
            out.push(t);
            out
        }
        StackAtom::AnyStar => {
            let t = a.add_state(StateSort::Segment);
            for s in &frontier {
                for sym in all_syms() {
                    a.add_g_edge(*s, sym, t);
                }
            }
            for sym in all_syms() {
                a.add_g_edge(t, sym, t);
            }
            let mut out = frontier;
            out.push(t);
            out
        }
    }
}

/// An automaton whose stack transitions carry label variables. The
/// saturated predecessor automaton labels each transition with itself;
/// products inherit the label of their left component.
#[derive(Debug, Clone)]
pub struct KAutomaton {
    pub auto: MAutomaton,
    /// Label variable per stack transition, indexed by edge id.
    pub labels: Vec<GEdgeId>,
}

impl KAutomaton {
    /// Views a saturated automaton as labelled by its own transitions.
    pub fn self_labelled(a: MAutomaton) -> Self {
        let labels = (0..a.g_edges.len() as u32).map(GEdgeId).collect();
        KAutomaton { auto: a, labels }
    }

    pub fn label(&self, e: GEdgeId) -> GEdgeId {
        self.labels[e.0 as usize]
    }
}

/// Product automaton: runs both automata in lockstep over shared
/// letters; boundary transitions pair only with boundary transitions.
/// Stack transitions keep the label variable of the left component, so
/// the unlabelled projection accepts the intersection of the languages.
pub fn intersect(left: &KAutomaton, right: &MAutomaton) -> KAutomaton {
    let la = &left.auto;
    let mut out = MAutomaton::new();
    let mut labels: Vec<GEdgeId> = Vec::new();
    let mut map: HashMap<(AState, AState), AState> = HashMap::new();
    map.insert((la.initial, right.initial), out.initial);
    let mut queue = VecDeque::new();
    queue.push_back((la.initial, right.initial));

    while let Some((u, v)) = queue.pop_front() {
        let cur = map[&(u, v)];
        if la.finals.contains(&u) && right.finals.contains(&v) {
            out.finals.insert(cur);
        }
        match (la.sort(u), right.sort(v)) {
            (StateSort::Control, StateSort::Control) => {
                for &(from, p, to) in la.p_edges() {
                    if from != u {
                        continue;
                    }
                    let Some(to2) = right.entry(v, p) else {
                        continue;
                    };
                    let nxt = *map.entry((to, to2)).or_insert_with(|| {
                        queue.push_back((to, to2));
                        out.add_state(StateSort::Segment)
                    });
                    if out.entry(cur, p).is_none() {
                        out.add_p_edge(cur, p, nxt);
                    }
                }
            }
            (StateSort::Segment, StateSort::Segment) => {
                for id in la.g_out(u) {
                    let e = la.g_edge(*id);
                    for rid in right.g_out(v) {
                        let re = right.g_edge(*rid);
                        if re.sym != e.sym {
                            continue;
                        }
                        let nxt = *map.entry((e.to, re.to)).or_insert_with(|| {
                            queue.push_back((e.to, re.to));
                            out.add_state(StateSort::Segment)
                        });
                        if let Some(new_id) = out.add_g_edge(cur, e.sym, nxt) {
                            debug_assert_eq!(new_id.0 as usize, labels.len());
                            labels.push(left.label(*id));
                        }
                    }
                }
                for t in la.e_out(u) {
                    for t2 in right.e_out(v) {
                        let nxt = *map.entry((*t, *t2)).or_insert_with(|| {
                            queue.push_back((*t, *t2));
                            out.add_state(StateSort::Control)
                        });
                        out.add_e_edge(cur, nxt);
                    }
                }
            }
            _ => unreachable!("product states mix sorts"),
        }
    }
    out.original_g_count = out.g_edges.len();
    KAutomaton { auto: out, labels }
}

/// Stable text dump, one transition per line; used by golden tests and
/// the automaton emission flag.
pub fn dump(a: &MAutomaton, m: &Sdpn) -> String {
    let name = |s: AState| -> String {
        match a.sort(s) {
            StateSort::Control => format!("c{}", s.0),
            StateSort::Segment => format!("s{}", s.0),
        }
    };
    let mut out = String::new();
    writeln!(out, "initial: {}", name(a.initial)).unwrap();
    let finals: Vec<String> = a.finals.iter().map(|f| name(*f)).collect();
    writeln!(out, "finals: {}", finals.join(" ")).unwrap();
    let mut lines = Vec::new();
    for &(from, p, to) in a.p_edges() {
        lines.push(format!(
            "state {} {} {}",
            name(from),
            m.state_names[p.0 as usize],
            name(to)
        ));
    }
    for (i, e) in a.g_edges().iter().enumerate() {
        let tag = if i < a.original_g_count { "" } else { " +" };
        lines.push(format!(
            "stack {} {} {}{}",
            name(e.from),
            m.stack_names[e.sym.0 as usize],
            name(e.to),
            tag
        ));
    }
    for &(from, to) in a.e_edges() {
        lines.push(format!("bound {} {}", name(from), name(to)));
    }
    lines.sort();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}
