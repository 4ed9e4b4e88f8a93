//! Brute-force oracles and random-model generation for tests. Nothing
//! here shares machinery with the analysis path it checks: reachability
//! is plain enumeration, the shuffle oracle works on raw words, and the
//! reference solver iterates the whole constraint system globally.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::Rng;

use crate::abstraction::{alpha, canonical, KDomain, KElement, KWord};
use crate::automata::GEdgeId;
use crate::labelling::{Body, Constraint};
use crate::model::{
    co_action, successors_relaxed, Action, Configuration, Rhs, Rule, Sdpn, SigId, StackId,
    StateId, Thread,
};

/// All relaxed executions from `start` up to `depth` steps, as pairs of
/// observable word and end configuration. Steps fired by bookkeeping
/// rules contribute no letter.
pub fn enumerate_relaxed_words(
    m: &Sdpn,
    start: &Configuration,
    depth: usize,
) -> Vec<(Vec<Action>, Configuration)> {
    let mut out = Vec::new();
    let mut frontier = vec![(Vec::new(), start.clone())];
    out.push((Vec::new(), start.clone()));
    for _ in 0..depth {
        let mut next = Vec::new();
        for (word, c) in &frontier {
            for (act, rules, succ) in successors_relaxed(m, c) {
                let mut w = word.clone();
                let aux = match rules {
                    crate::model::StepRules::One { rule, .. } => m.rules[rule.0 as usize].aux,
                    crate::model::StepRules::Sync { .. } => false,
                };
                if !aux {
                    w.push(act);
                }
                out.push((w.clone(), succ.clone()));
                next.push((w, succ));
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    out
}

/// Observable words of relaxed executions from `start` of length up to
/// `depth`, bookkeeping steps skipped.
pub fn relaxed_words_into(
    m: &Sdpn,
    start: &Configuration,
    depth: usize,
    target: &dyn Fn(&Configuration) -> bool,
) -> BTreeSet<Vec<Action>> {
    enumerate_relaxed_words(m, start, depth)
        .into_iter()
        .filter(|(_, c)| target(c))
        .map(|(w, _)| w)
        .collect()
}

/// Observable words of length up to `max_word` over relaxed executions
/// from `start`, collected breadth-first with deduplication on
/// (configuration, word) pairs. Bookkeeping rules contribute no letter
/// but still count against `max_steps`.
pub fn observable_words_bfs(
    m: &Sdpn,
    start: &Configuration,
    max_word: usize,
    max_steps: usize,
) -> BTreeSet<Vec<Action>> {
    let mut seen: HashSet<(Configuration, Vec<Action>)> = HashSet::new();
    let mut queue: VecDeque<(Configuration, Vec<Action>, usize)> = VecDeque::new();
    let mut out = BTreeSet::new();
    seen.insert((start.clone(), Vec::new()));
    queue.push_back((start.clone(), Vec::new(), 0));
    while let Some((c, word, steps)) = queue.pop_front() {
        out.insert(word.clone());
        if steps == max_steps {
            continue;
        }
        for (act, rules, succ) in successors_relaxed(m, &c) {
            let aux = match rules {
                crate::model::StepRules::One { rule, .. } => m.rules[rule.0 as usize].aux,
                crate::model::StepRules::Sync { .. } => false,
            };
            let mut w = word.clone();
            if !aux {
                if w.len() == max_word {
                    continue;
                }
                w.push(act);
            }
            if seen.insert((succ.clone(), w.clone())) {
                queue.push_back((succ, w, steps + 1));
            }
        }
    }
    out
}

/// All immediate predecessors of a configuration under the relaxed
/// semantics: inverse rule applications, singly and in synchronized
/// pairs on two distinct threads. Used to enumerate candidates that a
/// forward search then confirms.
pub fn predecessors_relaxed(m: &Sdpn, c: &Configuration) -> Vec<Configuration> {
    // Per-thread inverse applications: (position, rule, replacement).
    let mut singles: Vec<(usize, usize, Thread)> = Vec::new();
    for (i, t) in c.threads.iter().enumerate() {
        for (ri, rule) in m.rules.iter().enumerate() {
            if let Rhs::Simple { state, word } = &rule.rhs {
                if t.state == *state && t.stack.starts_with(word) {
                    let mut stack = vec![rule.symbol];
                    stack.extend_from_slice(&t.stack[word.len()..]);
                    singles.push((
                        i,
                        ri,
                        Thread {
                            state: rule.state,
                            stack,
                        },
                    ));
                }
            }
        }
    }
    // Spawn inverses touch an adjacent thread pair.
    let mut spawns: Vec<(usize, usize, Thread)> = Vec::new();
    for i in 0..c.threads.len().saturating_sub(1) {
        for (ri, rule) in m.rules.iter().enumerate() {
            if let Rhs::Spawn {
                spawned_state,
                spawned_word,
                state,
                word,
            } = &rule.rhs
            {
                let (a, b) = (&c.threads[i], &c.threads[i + 1]);
                if a.state == *spawned_state
                    && a.stack == *spawned_word
                    && b.state == *state
                    && b.stack.starts_with(word)
                {
                    let mut stack = vec![rule.symbol];
                    stack.extend_from_slice(&b.stack[word.len()..]);
                    spawns.push((
                        i,
                        ri,
                        Thread {
                            state: rule.state,
                            stack,
                        },
                    ));
                }
            }
        }
    }
    let mut out = Vec::new();
    let apply_single = |i: usize, rep: &Thread| -> Configuration {
        let mut threads = c.threads.clone();
        threads[i] = rep.clone();
        Configuration::new(threads)
    };
    let apply_spawn = |i: usize, rep: &Thread| -> Configuration {
        let mut threads = c.threads.clone();
        threads.remove(i);
        threads[i] = rep.clone();
        Configuration::new(threads)
    };
    for (i, _, rep) in &singles {
        out.push(apply_single(*i, rep));
    }
    for (i, _, rep) in &spawns {
        out.push(apply_spawn(*i, rep));
    }
    // Synchronized inverses: two inverse applications whose rule
    // actions are co-actions, at distinct positions.
    let co_pair = |ra: usize, rb: usize| -> bool {
        co_action(m.rules[ra].action).ok() == Some(m.rules[rb].action)
    };
    for (i, ra, rep_a) in &singles {
        for (j, rb, rep_b) in &singles {
            if i < j && co_pair(*ra, *rb) {
                let mut threads = c.threads.clone();
                threads[*i] = rep_a.clone();
                threads[*j] = rep_b.clone();
                out.push(Configuration::new(threads));
            }
        }
        for (j, rb, rep_b) in &spawns {
            // The spawn inverse merges positions j and j+1.
            if *i != *j && *i != *j + 1 && co_pair(*ra, *rb) {
                let mut threads = c.threads.clone();
                threads[*i] = rep_a.clone();
                threads.remove(*j);
                threads[*j] = rep_b.clone();
                out.push(Configuration::new(threads));
            }
        }
    }
    for (i, ra, rep_a) in &spawns {
        for (j, rb, rep_b) in &spawns {
            if i + 1 < *j && co_pair(*ra, *rb) {
                let mut threads = c.threads.clone();
                threads.remove(*j);
                threads[*j] = rep_b.clone();
                threads.remove(*i);
                threads[*i] = rep_a.clone();
                out.push(Configuration::new(threads));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Breadth-first reachability distance under the relaxed semantics,
/// cut off at `depth`.
pub fn min_relaxed_distance(
    m: &Sdpn,
    start: &Configuration,
    depth: usize,
    target: &dyn Fn(&Configuration) -> bool,
) -> Option<usize> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back((start.clone(), 0usize));
    while let Some((c, d)) = queue.pop_front() {
        if target(&c) {
            return Some(d);
        }
        if d == depth {
            continue;
        }
        for (_, _, succ) in successors_relaxed(m, &c) {
            if seen.insert(succ.clone()) {
                queue.push_back((succ, d + 1));
            }
        }
    }
    None
}

/// Concrete synchronizing shuffle on raw words: every interleaving,
/// with an internal letter wherever a head pair synchronizes. Dynamic
/// programming over suffix index pairs keeps it usable up to moderate
/// lengths.
pub fn concrete_shuffle(u: &[Action], v: &[Action]) -> BTreeSet<Vec<Action>> {
    fn go(
        u: &[Action],
        v: &[Action],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), BTreeSet<Vec<Action>>>,
    ) -> BTreeSet<Vec<Action>> {
        if let Some(hit) = memo.get(&(i, j)) {
            return hit.clone();
        }
        let mut out = BTreeSet::new();
        if i == u.len() {
            out.insert(v[j..].to_vec());
        } else if j == v.len() {
            out.insert(u[i..].to_vec());
        } else {
            for w in go(u, v, i + 1, j, memo) {
                let mut x = vec![u[i]];
                x.extend(w);
                out.insert(x);
            }
            for w in go(u, v, i, j + 1, memo) {
                let mut x = vec![v[j]];
                x.extend(w);
                out.insert(x);
            }
            if co_action(u[i]).ok() == Some(v[j]) {
                for w in go(u, v, i + 1, j + 1, memo) {
                    let mut x = vec![Action::Tau];
                    x.extend(w);
                    out.insert(x);
                }
            }
        }
        memo.insert((i, j), out.clone());
        out
    }
    go(u, v, 0, 0, &mut HashMap::new())
}

/// Abstraction of the concrete shuffle of two raw words.
pub fn abstract_of_concrete_shuffle(dom: &KDomain, u: &[Action], v: &[Action]) -> KElement {
    let words: Vec<Vec<Action>> = concrete_shuffle(u, v).into_iter().collect();
    alpha(dom, &words)
}

/// Reference solver: Kleene iteration of the whole constraint system
/// over every (transition, word) pair of the bounded domain. Only
/// feasible for tiny alphabets and orders.
pub fn global_solve(
    constraints: &[Constraint],
    dom: &KDomain,
    alphabet: &[Action],
) -> HashMap<(GEdgeId, KWord), KElement> {
    let mut words: Vec<KWord> = vec![KWord::empty()];
    let mut layer: Vec<KWord> = vec![KWord::empty()];
    for _ in 0..dom.order {
        let mut next = Vec::new();
        for w in &layer {
            for a in alphabet {
                let mut v = w.0.clone();
                v.push(*a);
                next.push(KWord(v));
            }
        }
        words.extend(next.iter().cloned());
        layer = next;
    }
    let transitions: BTreeSet<GEdgeId> = constraints.iter().map(|c| c.target).collect();
    let mut table: HashMap<(GEdgeId, KWord), KElement> = HashMap::new();
    for t in &transitions {
        for w in &words {
            table.insert((*t, w.clone()), KElement::zero());
        }
    }
    let mut shuffler = crate::abstraction::Shuffler::new(*dom);
    let value = |table: &HashMap<(GEdgeId, KWord), KElement>, t: GEdgeId, k: &KElement| {
        let mut out = KElement::zero();
        for w in k.iter() {
            if let Some(v) = table.get(&(t, w.clone())) {
                out.join_in_place(v);
            }
        }
        out
    };
    loop {
        let mut changed = false;
        let mut next = table.clone();
        for c in constraints {
            for w in &words {
                let v = match &c.body {
                    Body::Id => KElement::singleton(w.clone()),
                    Body::PrependArg { act } => {
                        let mut x = vec![*act];
                        x.extend_from_slice(&w.0);
                        KElement::singleton(canonical(dom, &x))
                    }
                    Body::Prepend { act, inner } => {
                        let inner_v = table[&(*inner, w.clone())].clone();
                        prepend_all(dom, *act, &inner_v)
                    }
                    Body::Compose { act, outer, inner } => {
                        let mid = table[&(*inner, w.clone())].clone();
                        let joined = value(&table, *outer, &mid);
                        prepend_all(dom, *act, &joined)
                    }
                    Body::SpawnShuffle {
                        act,
                        constant_side,
                        arg_side,
                    } => {
                        let left = table[&(*constant_side, KWord::empty())].clone();
                        let right = table[&(*arg_side, w.clone())].clone();
                        prepend_all(dom, *act, &shuffler.shuffle(&left, &right))
                    }
                };
                let entry = next.get_mut(&(c.target, w.clone())).unwrap();
                if entry.join_in_place(&v) {
                    changed = true;
                }
            }
        }
        table = next;
        if !changed {
            return table;
        }
    }
}

fn prepend_all(dom: &KDomain, act: Action, v: &KElement) -> KElement {
    let mut out = KElement::zero();
    for w in v.iter() {
        let mut x = vec![act];
        x.extend_from_slice(&w.0);
        out.join_in_place(&KElement::singleton(canonical(dom, &x)));
    }
    out
}

/// Shape constraints for the random model generator.
#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_states: usize,
    pub max_stack_symbols: usize,
    pub max_channels: usize,
    pub max_rules: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_states: 2,
            max_stack_symbols: 3,
            max_channels: 2,
            max_rules: 6,
        }
    }
}

/// A random small network in normal shape.
pub fn random_sdpn<R: Rng>(rng: &mut R, cfg: GenConfig) -> Sdpn {
    let mut m = Sdpn::new();
    let n_states = rng.gen_range(1..=cfg.max_states);
    let n_syms = rng.gen_range(1..=cfg.max_stack_symbols);
    let n_chans = rng.gen_range(0..=cfg.max_channels);
    for i in 0..n_states {
        m.add_state(&format!("p{}", i));
    }
    for i in 0..n_syms {
        m.add_stack_symbol(&format!("g{}", i));
    }
    for i in 0..n_chans {
        m.add_signal(&format!("c{}", i));
    }
    let n_rules = rng.gen_range(1..=cfg.max_rules);
    for i in 0..n_rules {
        let state = StateId(rng.gen_range(0..n_states) as u32);
        let symbol = StackId(rng.gen_range(0..n_syms) as u32);
        let action = match rng.gen_range(0..3) {
            0 => Action::Tau,
            _ if n_chans == 0 => Action::Tau,
            1 => Action::send(SigId(rng.gen_range(0..n_chans) as u32)),
            _ => Action::receive(SigId(rng.gen_range(0..n_chans) as u32)),
        };
        let rand_word = |rng: &mut R, len: usize| -> Vec<StackId> {
            (0..len)
                .map(|_| StackId(rng.gen_range(0..n_syms) as u32))
                .collect()
        };
        let rhs = if rng.gen_bool(0.2) {
            Rhs::Spawn {
                spawned_state: StateId(rng.gen_range(0..n_states) as u32),
                spawned_word: rand_word(rng, 1),
                state: StateId(rng.gen_range(0..n_states) as u32),
                word: rand_word(rng, 1),
            }
        } else {
            let len = rng.gen_range(0..=2);
            Rhs::Simple {
                state: StateId(rng.gen_range(0..n_states) as u32),
                word: rand_word(rng, len),
            }
        };
        m.push_rule(Rule {
            state,
            symbol,
            action,
            rhs,
            name: format!("r{}", i),
            aux: false,
        });
    }
    m
}

/// A random configuration over a model's symbols.
pub fn random_config<R: Rng>(
    rng: &mut R,
    m: &Sdpn,
    max_threads: usize,
    max_stack: usize,
) -> Configuration {
    let n = rng.gen_range(1..=max_threads);
    let threads = (0..n)
        .map(|_| Thread {
            state: StateId(rng.gen_range(0..m.n_states()) as u32),
            stack: (0..rng.gen_range(0..=max_stack))
                .map(|_| StackId(rng.gen_range(0..m.n_stack_symbols()) as u32))
                .collect(),
        })
        .collect();
    Configuration::new(threads)
}

/// Every configuration with at most `max_threads` threads whose stacks
/// have at most `max_stack` symbols, the empty configuration included.
pub fn config_box(m: &Sdpn, max_threads: usize, max_stack: usize) -> Vec<Configuration> {
    let mut stacks: Vec<Vec<StackId>> = vec![Vec::new()];
    let mut layer: Vec<Vec<StackId>> = vec![Vec::new()];
    for _ in 0..max_stack {
        let mut next = Vec::new();
        for w in &layer {
            for s in 0..m.n_stack_symbols() {
                let mut w2 = w.clone();
                w2.push(StackId(s as u32));
                next.push(w2);
            }
        }
        stacks.extend(next.iter().cloned());
        layer = next;
    }
    let mut threads = Vec::new();
    for st in 0..m.n_states() {
        for w in &stacks {
            threads.push(Thread {
                state: StateId(st as u32),
                stack: w.clone(),
            });
        }
    }
    let mut out = vec![Configuration::empty()];
    let mut tlayer: Vec<Vec<Thread>> = vec![Vec::new()];
    for _ in 0..max_threads {
        let mut next = Vec::new();
        for c in &tlayer {
            for t in &threads {
                let mut c2 = c.clone();
                c2.push(t.clone());
                next.push(c2);
            }
        }
        out.extend(next.iter().cloned().map(Configuration::new));
        tlayer = next;
    }
    out
}

/// A pattern text denoting exactly the given configuration.
pub fn exact_pattern_text(m: &Sdpn, c: &Configuration) -> String {
    if c.threads.is_empty() {
        return "EPS".to_string();
    }
    let mut parts = Vec::new();
    for t in &c.threads {
        parts.push(m.state_names[t.state.0 as usize].clone());
        for s in &t.stack {
            parts.push(m.stack_names[s.0 as usize].clone());
        }
    }
    parts.join(" ")
}

/// Random words over a model's alphabet, for algebra law tests.
pub fn random_word<R: Rng>(rng: &mut R, alphabet: &[Action], max_len: usize) -> Vec<Action> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
        .collect()
}

pub fn random_element<R: Rng>(
    rng: &mut R,
    dom: &KDomain,
    alphabet: &[Action],
    max_words: usize,
) -> KElement {
    let n = rng.gen_range(0..=max_words);
    let mut out = KElement::zero();
    for _ in 0..n {
        let w = random_word(rng, alphabet, dom.order);
        out.join_in_place(&KElement::singleton(canonical(dom, &w)));
    }
    out
}
