//! Core SDPN model: actions with co-action pairing, transition rules,
//! configurations, the strict and relaxed step relations, rule
//! normalization, and a bounded breadth-first search over the strict
//! semantics.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

/// Index of a control state in [`Sdpn::state_names`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

/// Index of a stack symbol in [`Sdpn::stack_names`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StackId(pub u32);

/// Index of a synchronization signal in [`Sdpn::sig_names`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SigId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Send,
    Receive,
}

/// A rule label: the internal action, or a polarized synchronization
/// signal. A send pairs with the receive of the same signal and vice
/// versa; the internal action has no partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Tau,
    Sig { sig: SigId, pol: Polarity },
}

impl Action {
    pub fn send(sig: SigId) -> Self {
        Action::Sig {
            sig,
            pol: Polarity::Send,
        }
    }

    pub fn receive(sig: SigId) -> Self {
        Action::Sig {
            sig,
            pol: Polarity::Receive,
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("the internal action has no co-action")]
    CoActionOfTau,
}

/// The unique co-action of a signal: same signal, flipped polarity.
/// Applying it twice is the identity.
pub fn co_action(a: Action) -> Result<Action, ModelError> {
    match a {
        Action::Tau => Err(ModelError::CoActionOfTau),
        Action::Sig { sig, pol } => Ok(Action::Sig {
            sig,
            pol: match pol {
                Polarity::Send => Polarity::Receive,
                Polarity::Receive => Polarity::Send,
            },
        }),
    }
}

/// Right-hand side of a rule. For a spawn, the spawned process is
/// inserted immediately to the left of the continuing process, so the
/// two sides are stored explicitly rather than positionally.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Rhs {
    Simple {
        state: StateId,
        word: Vec<StackId>,
    },
    Spawn {
        spawned_state: StateId,
        spawned_word: Vec<StackId>,
        state: StateId,
        word: Vec<StackId>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub state: StateId,
    pub symbol: StackId,
    pub action: Action,
    pub rhs: Rhs,
    pub name: String,
    /// True for bookkeeping rules introduced by [`normalize`]; they are
    /// skipped when collecting observable action words in test oracles.
    pub aux: bool,
}

impl Rule {
    /// A rule is normal when its right-hand side has one of the shapes
    /// the saturation and labelling constraints enumerate: a simple word
    /// of length at most two, or a spawn of two single-symbol words.
    pub fn is_normal(&self) -> bool {
        match &self.rhs {
            Rhs::Simple { word, .. } => word.len() <= 2,
            Rhs::Spawn {
                spawned_word, word, ..
            } => spawned_word.len() == 1 && word.len() == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(pub u32);

/// A synchronized dynamic pushdown network over interned state, stack
/// and signal names.
#[derive(Debug, Clone, Default)]
pub struct Sdpn {
    pub state_names: Vec<String>,
    pub stack_names: Vec<String>,
    pub sig_names: Vec<String>,
    pub rules: Vec<Rule>,
}

impl Sdpn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self, name: &str) -> StateId {
        if let Some(i) = self.state_names.iter().position(|n| n == name) {
            return StateId(i as u32);
        }
        self.state_names.push(name.to_string());
        StateId(self.state_names.len() as u32 - 1)
    }

    pub fn add_stack_symbol(&mut self, name: &str) -> StackId {
        if let Some(i) = self.stack_names.iter().position(|n| n == name) {
            return StackId(i as u32);
        }
        self.stack_names.push(name.to_string());
        StackId(self.stack_names.len() as u32 - 1)
    }

    pub fn add_signal(&mut self, name: &str) -> SigId {
        if let Some(i) = self.sig_names.iter().position(|n| n == name) {
            return SigId(i as u32);
        }
        self.sig_names.push(name.to_string());
        SigId(self.sig_names.len() as u32 - 1)
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.state_names
            .iter()
            .position(|n| n == name)
            .map(|i| StateId(i as u32))
    }

    pub fn stack_symbol(&self, name: &str) -> Option<StackId> {
        self.stack_names
            .iter()
            .position(|n| n == name)
            .map(|i| StackId(i as u32))
    }

    pub fn signal(&self, name: &str) -> Option<SigId> {
        self.sig_names
            .iter()
            .position(|n| n == name)
            .map(|i| SigId(i as u32))
    }

    pub fn rule_by_name(&self, name: &str) -> Option<RuleId> {
        self.rules
            .iter()
            .position(|r| r.name == name)
            .map(|i| RuleId(i as u32))
    }

    pub fn push_rule(&mut self, rule: Rule) -> RuleId {
        self.rules.push(rule);
        RuleId(self.rules.len() as u32 - 1)
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_stack_symbols(&self) -> usize {
        self.stack_names.len()
    }

    /// All actions that can label a rule of this network: the internal
    /// action plus both polarities of every declared signal.
    pub fn alphabet(&self) -> Vec<Action> {
        let mut out = vec![Action::Tau];
        for i in 0..self.sig_names.len() {
            out.push(Action::send(SigId(i as u32)));
            out.push(Action::receive(SigId(i as u32)));
        }
        out
    }

    pub fn display_action(&self, a: Action) -> String {
        match a {
            Action::Tau => "tau".to_string(),
            Action::Sig { sig, pol } => {
                let mark = match pol {
                    Polarity::Send => '!',
                    Polarity::Receive => '?',
                };
                format!("{}{}", self.sig_names[sig.0 as usize], mark)
            }
        }
    }

    pub fn display_config(&self, c: &Configuration) -> String {
        if c.threads.is_empty() {
            return "EPS".to_string();
        }
        c.threads
            .iter()
            .map(|t| {
                let mut s = self.state_names[t.state.0 as usize].clone();
                for sym in &t.stack {
                    s.push(' ');
                    s.push_str(&self.stack_names[sym.0 as usize]);
                }
                s
            })
            .collect::<Vec<_>>()
            .join(" . ")
    }

    pub fn is_normal(&self) -> bool {
        self.rules.iter().all(|r| r.is_normal())
    }
}

/// One pushdown process: a control state and a stack, top first. A
/// process whose stack has emptied stays in the configuration as a bare
/// state and can never fire a rule again.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Thread {
    pub state: StateId,
    pub stack: Vec<StackId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub threads: Vec<Thread>,
}

impl Configuration {
    pub fn new(threads: Vec<Thread>) -> Self {
        Configuration { threads }
    }

    pub fn empty() -> Self {
        Configuration {
            threads: Vec::new(),
        }
    }
}

/// Rule instances fired in one strict or relaxed step. A synchronized
/// step names both halves; the resulting observable action is internal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepRules {
    One {
        rule: RuleId,
        thread: usize,
    },
    Sync {
        left_rule: RuleId,
        left_thread: usize,
        right_rule: RuleId,
        right_thread: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub observable: Action,
    pub rules: StepRules,
    pub resulting: Configuration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub start: Configuration,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn end(&self) -> &Configuration {
        self.steps.last().map(|s| &s.resulting).unwrap_or(&self.start)
    }

    /// Checks the trace step by step against the strict semantics.
    pub fn replays_under_strict(&self, m: &Sdpn) -> bool {
        let mut cur = self.start.clone();
        for step in &self.steps {
            if !step.observable.is_tau() {
                return false;
            }
            let found = successors_strict(m, &cur)
                .into_iter()
                .any(|(rules, next)| rules == step.rules && next == step.resulting);
            if !found {
                return false;
            }
            cur = step.resulting.clone();
        }
        true
    }
}

fn rule_applies(rule: &Rule, thread: &Thread) -> bool {
    thread.state == rule.state && thread.stack.first() == Some(&rule.symbol)
}

/// Replacement threads produced by firing `rule` on `thread`. The
/// spawned process, if any, comes first so it lands left of the
/// continuing one.
fn fire(rule: &Rule, thread: &Thread) -> Vec<Thread> {
    let rest = &thread.stack[1..];
    match &rule.rhs {
        Rhs::Simple { state, word } => {
            let mut stack = word.clone();
            stack.extend_from_slice(rest);
            vec![Thread {
                state: *state,
                stack,
            }]
        }
        Rhs::Spawn {
            spawned_state,
            spawned_word,
            state,
            word,
        } => {
            let mut stack = word.clone();
            stack.extend_from_slice(rest);
            vec![
                Thread {
                    state: *spawned_state,
                    stack: spawned_word.clone(),
                },
                Thread {
                    state: *state,
                    stack,
                },
            ]
        }
    }
}

fn splice_one(c: &Configuration, at: usize, replacement: Vec<Thread>) -> Configuration {
    let mut threads = Vec::with_capacity(c.threads.len() + 1);
    for (i, t) in c.threads.iter().enumerate() {
        if i == at {
            threads.extend(replacement.iter().cloned());
        } else {
            threads.push(t.clone());
        }
    }
    Configuration { threads }
}

fn splice_two(
    c: &Configuration,
    at_a: usize,
    rep_a: Vec<Thread>,
    at_b: usize,
    rep_b: Vec<Thread>,
) -> Configuration {
    let mut threads = Vec::with_capacity(c.threads.len() + 2);
    for (i, t) in c.threads.iter().enumerate() {
        if i == at_a {
            threads.extend(rep_a.iter().cloned());
        } else if i == at_b {
            threads.extend(rep_b.iter().cloned());
        } else {
            threads.push(t.clone());
        }
    }
    Configuration { threads }
}

fn applicable(m: &Sdpn, c: &Configuration) -> Vec<(usize, RuleId)> {
    let mut out = Vec::new();
    for (i, t) in c.threads.iter().enumerate() {
        for (ri, rule) in m.rules.iter().enumerate() {
            if rule_applies(rule, t) {
                out.push((i, RuleId(ri as u32)));
            }
        }
    }
    out
}

/// All immediate successors under the relaxed semantics, with the rule
/// instances that produced them. Unsynchronized steps expose the rule's
/// own action; synchronized pairs are internal. Two distinct threads are
/// required for a synchronization: a process cannot pair with itself.
pub fn successors_relaxed(m: &Sdpn, c: &Configuration) -> Vec<(Action, StepRules, Configuration)> {
    let apps = applicable(m, c);
    let mut out = Vec::new();
    for &(i, rid) in &apps {
        let rule = &m.rules[rid.0 as usize];
        let next = splice_one(c, i, fire(rule, &c.threads[i]));
        out.push((rule.action, StepRules::One { rule: rid, thread: i }, next));
    }
    for &(i, ra) in &apps {
        let rule_a = &m.rules[ra.0 as usize];
        let Ok(partner) = co_action(rule_a.action) else {
            continue;
        };
        for &(j, rb) in &apps {
            if j <= i {
                continue;
            }
            let rule_b = &m.rules[rb.0 as usize];
            if rule_b.action != partner {
                continue;
            }
            let next = splice_two(
                c,
                i,
                fire(rule_a, &c.threads[i]),
                j,
                fire(rule_b, &c.threads[j]),
            );
            out.push((
                Action::Tau,
                StepRules::Sync {
                    left_rule: ra,
                    left_thread: i,
                    right_rule: rb,
                    right_thread: j,
                },
                next,
            ));
        }
    }
    out
}

/// Successor set of the relaxed step relation.
pub fn step_relaxed(m: &Sdpn, c: &Configuration) -> BTreeSet<(Action, Configuration)> {
    successors_relaxed(m, c)
        .into_iter()
        .map(|(a, _, next)| (a, next))
        .collect()
}

/// Successors under the strict semantics: internal steps plus
/// synchronized pairs. This is exactly the internally-labelled subset of
/// the relaxed relation.
pub fn successors_strict(m: &Sdpn, c: &Configuration) -> Vec<(StepRules, Configuration)> {
    successors_relaxed(m, c)
        .into_iter()
        .filter(|(a, _, _)| a.is_tau())
        .map(|(_, rules, next)| (rules, next))
        .collect()
}

pub fn step_strict(m: &Sdpn, c: &Configuration) -> BTreeSet<Configuration> {
    successors_strict(m, c).into_iter().map(|(_, n)| n).collect()
}

/// Successors under the plain DPN semantics: every rule fires alone,
/// signals included, and no pairing happens.
pub fn successors_dpn(m: &Sdpn, c: &Configuration) -> Vec<Configuration> {
    let apps = applicable(m, c);
    apps.into_iter()
        .map(|(i, rid)| splice_one(c, i, fire(&m.rules[rid.0 as usize], &c.threads[i])))
        .collect()
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("node cap of {cap} exceeded after exploring {explored} configurations")]
    NodeCapExceeded { cap: usize, explored: usize },
}

#[derive(Debug, Clone, Default)]
pub struct SearchStats {
    pub explored: usize,
    pub frontier_peak: usize,
}

/// Exhaustive breadth-first search over the strict semantics, up to
/// `depth` steps, from any of the given configurations to one satisfying
/// `is_target`. Returns the shortest witness; among equally short ones
/// the result is deterministic because successors are expanded in rule
/// order. A `node_cap` overrun is reported separately from absence.
pub fn bounded_search_strict(
    m: &Sdpn,
    init: &[Configuration],
    is_target: &dyn Fn(&Configuration) -> bool,
    depth: usize,
    node_cap: usize,
) -> Result<(Option<Trace>, SearchStats), SearchError> {
    let mut stats = SearchStats::default();
    // Parent pointers reconstruct the trace: config -> (parent, rules).
    let mut parent: HashMap<Configuration, Option<(Configuration, StepRules)>> = HashMap::new();
    let mut queue: VecDeque<(Configuration, usize)> = VecDeque::new();

    for c in init {
        if parent.contains_key(c) {
            continue;
        }
        parent.insert(c.clone(), None);
        queue.push_back((c.clone(), 0));
    }

    while let Some((cur, d)) = queue.pop_front() {
        stats.explored += 1;
        if stats.explored > node_cap {
            return Err(SearchError::NodeCapExceeded {
                cap: node_cap,
                explored: stats.explored,
            });
        }
        if is_target(&cur) {
            let mut steps = Vec::new();
            let mut walk = cur.clone();
            while let Some(Some((prev, rules))) = parent.get(&walk).cloned() {
                steps.push(TraceStep {
                    observable: Action::Tau,
                    rules,
                    resulting: walk.clone(),
                });
                walk = prev;
            }
            steps.reverse();
            return Ok((Some(Trace { start: walk, steps }), stats));
        }
        if d == depth {
            continue;
        }
        for (rules, next) in successors_strict(m, &cur) {
            if parent.contains_key(&next) {
                continue;
            }
            parent.insert(next.clone(), Some((cur.clone(), rules)));
            queue.push_back((next, d + 1));
        }
        stats.frontier_peak = stats.frontier_peak.max(queue.len());
    }
    Ok((None, stats))
}

/// Rewrites every rule into normal shape. Long simple words are split
/// with fresh stack symbols that unfold lazily under an auxiliary
/// internal rule; spawn words are forced to length one the same way.
/// The auxiliary rules are marked so oracles can treat them as
/// bookkeeping.
pub fn normalize(m: &Sdpn) -> Sdpn {
    let mut out = m.clone();
    let rules = std::mem::take(&mut out.rules);
    let mut fresh = 0usize;
    for rule in rules {
        normalize_rule(&mut out, rule, &mut fresh);
    }
    out
}

fn fresh_symbol(m: &mut Sdpn, base: &str, fresh: &mut usize) -> StackId {
    loop {
        let name = format!("~{}.{}", base, *fresh);
        *fresh += 1;
        if m.stack_symbol(&name).is_none() {
            return m.add_stack_symbol(&name);
        }
    }
}

fn normalize_rule(m: &mut Sdpn, rule: Rule, fresh: &mut usize) {
    if rule.is_normal() {
        m.push_rule(rule);
        return;
    }
    match rule.rhs.clone() {
        Rhs::Simple { state, word } => {
            // word.len() >= 3: peel off the first symbol, park the rest
            // under a fresh symbol that any state may unfold.
            let park = fresh_symbol(m, &rule.name, fresh);
            let head = word[0];
            let tail = word[1..].to_vec();
            m.push_rule(Rule {
                rhs: Rhs::Simple {
                    state,
                    word: vec![head, park],
                },
                ..rule.clone()
            });
            // The fresh symbol can surface under any control state.
            for s in 0..m.state_names.len() {
                let unfold = Rule {
                    state: StateId(s as u32),
                    symbol: park,
                    action: Action::Tau,
                    rhs: Rhs::Simple {
                        state: StateId(s as u32),
                        word: tail.clone(),
                    },
                    name: format!("{}~unfold.{}", rule.name, s),
                    aux: true,
                };
                normalize_rule(m, unfold, fresh);
            }
        }
        Rhs::Spawn {
            spawned_state,
            spawned_word,
            state,
            word,
        } => {
            let (spawned_word, mut extra) = park_word(
                m,
                &rule.name,
                spawned_state,
                spawned_word,
                fresh,
            );
            let (word, extra2) = park_word(m, &rule.name, state, word, fresh);
            extra.extend(extra2);
            m.push_rule(Rule {
                rhs: Rhs::Spawn {
                    spawned_state,
                    spawned_word,
                    state,
                    word,
                },
                ..rule
            });
            for e in extra {
                normalize_rule(m, e, fresh);
            }
        }
    }
}

/// Forces a spawn-side word to length one. A fresh top symbol unfolds to
/// the real word in a single internal step; it is on top right after the
/// spawn, so the unfold rule only needs the known state.
fn park_word(
    m: &mut Sdpn,
    base: &str,
    state: StateId,
    word: Vec<StackId>,
    fresh: &mut usize,
) -> (Vec<StackId>, Vec<Rule>) {
    if word.len() == 1 {
        return (word, Vec::new());
    }
    let park = fresh_symbol(m, base, fresh);
    let unfold = Rule {
        state,
        symbol: park,
        action: Action::Tau,
        rhs: Rhs::Simple { state, word },
        name: format!("{}~park", base),
        aux: true,
    };
    (vec![park], vec![unfold])
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Send => write!(f, "!"),
            Polarity::Receive => write!(f, "?"),
        }
    }
}
